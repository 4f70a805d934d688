"""Command-line front end.

Exit codes: 0 success, 2 input or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import persist
from .cooccurrence import CooccurrenceMatrix, estimate_corpus
from .experiments import (ABLATION_COLUMNS, ManifestError, ablation_row, build_corpus,
                          build_likelihoods, load_manifest, run)
from .heatmap import export_heatmap
from .inhibition import InhibitionMatrix, weights_from_cooccurrence
from .ingest import DEFAULT_FRAME_RATE, TabParseError, TabValidationError
from .metrics import evaluate_corpus
from .model import NumericalError, load_checkpoint, predict
from .synth import SynthParams, generate_corpus, load_corpus, save_corpus

logger = logging.getLogger("tabinhibit")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

INPUT_ERRORS = (FileNotFoundError, NotADirectoryError, IsADirectoryError, ManifestError,
                TabParseError, TabValidationError, persist.FormatError, ValueError, KeyError)


class InputError(Exception):
    pass


def _existing(path, kind="path"):
    p = Path(path)
    if not p.exists():
        raise InputError(f"{kind} not found: {p}")
    return p


def cmd_synth(args):
    params = SynthParams(seed=args.seed, num_tracks=args.num_tracks,
                         frames_per_track=args.frames_per_track, pitch_noise=args.noise,
                         unison_confusability=args.unison,
                         frame_rate=args.frame_rate or DEFAULT_FRAME_RATE)
    corpus = generate_corpus(params)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} tracks to {args.out}")


def cmd_estimate(args):
    corpus_dir = _existing(args.corpus, "corpus")
    corpus = load_corpus(corpus_dir)
    matrix = estimate_corpus(corpus.tablatures, include_silence=not args.exclude_silence)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    block = corpus.fretboard.block_size
    matrix.save(out / "cooccurrence.txt")
    matrix.save(out / "cooccurrence.bin")
    export_heatmap(matrix.values, out / "cooccurrence.ppm", block_size=block)
    for b in args.boost:
        w = weights_from_cooccurrence(matrix, b)
        w.save(out / f"weights_b{b}.txt")
        w.save(out / f"weights_b{b}.bin")
        # rendered as likelihood (1 - w), bright where pairs co-occur
        export_heatmap(1.0 - w.weights, out / f"weights_b{b}.ppm", block_size=block)
    print(f"estimated {matrix.dim}x{matrix.dim} likelihoods from {matrix.track_count} tracks into {out}")


def _apply_overrides(manifest, args):
    if args.seed is not None:
        manifest.seed = args.seed
    if args.lam is not None:
        manifest.lam = args.lam
        manifest.__post_init__()
    if args.boost:
        manifest.boost = args.boost[0]
    return manifest


def cmd_train(args):
    manifest = _apply_overrides(load_manifest(_existing(args.manifest, "manifest")), args)
    out = args.out or manifest.out
    if out is None:
        raise InputError("no output directory: pass --out or set 'out' in the manifest")
    outcome = run(manifest, out_dir=out)
    Path(out, "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")
    m = outcome.report.mean()
    print(f"{manifest.experiment_id}: best iteration {outcome.iteration}, "
          f"test f_tab {m.f_tab:.4f}, E_dp {m.e_dp:.2f}, L_inh+ {m.l_inh_plus:.4f}")


def cmd_evaluate(args):
    params, config, _, _ = load_checkpoint(_existing(args.checkpoint, "checkpoint"))
    corpus = load_corpus(_existing(args.corpus, "corpus"))
    w_std = InhibitionMatrix.load(_existing(args.weights_std, "weights"))
    w_boost = InhibitionMatrix.load(_existing(args.weights_boost, "weights"))
    fb = corpus.fretboard
    if fb != config.fretboard:
        raise InputError("checkpoint fretboard does not match the corpus fretboard")
    for w in (w_std, w_boost):
        if w.dim != fb.num_combos:
            raise InputError(f"weight matrix has dim {w.dim}, corpus needs {fb.num_combos}")
    truths = corpus.targets()
    if args.truth_as_prediction:
        preds = truths
    else:
        preds = []
        for x in corpus.features:
            if x is None:
                raise InputError("corpus lacks feature sidecar files")
            if x.shape[0] != config.input_dim:
                raise InputError(f"features have {x.shape[0]} rows, checkpoint expects {config.input_dim}")
            preds.append(predict(params, x, config))
    report = evaluate_corpus(preds, truths, fb, w_std, w_boost,
                             track_ids=[t.track_id for t in corpus.tracks])
    report.save(args.out)
    m = report.mean()
    print(f"evaluated {len(report.rows)} tracks: f_tab {m.f_tab:.4f}, TDR {m.tdr:.4f}, "
          f"E_dp {m.e_dp:.2f}, E_fa {m.e_fa:.2f}")


def _manifest_paths(path):
    p = _existing(path, "manifest directory")
    paths = sorted(p.glob("*.json")) if p.is_dir() else [p]
    if len(paths) < 2:
        raise InputError(f"ablation needs at least two manifests, found {len(paths)} in {p}")
    return paths


def cmd_ablation(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, failures = [], 0
    cache = {}
    for path in _manifest_paths(args.manifest):
        try:
            manifest = _apply_overrides(load_manifest(path), args)
            key = (json.dumps(manifest.corpus, sort_keys=True), manifest.seed,
                   json.dumps(manifest.likelihoods, sort_keys=True))
            if key not in cache:
                cache[key] = (build_corpus(manifest), build_likelihoods(manifest))
            corpus, likelihoods = cache[key]
            outcome = run(manifest, corpus=corpus, likelihoods=likelihoods,
                          out_dir=out / manifest.experiment_id)
            rows.append(ablation_row(outcome))
        except (NumericalError, *INPUT_ERRORS) as exc:
            failures += 1
            logger.error("%s: %s", path.name, exc)
            rows.append([path.stem] + [""] * (len(ABLATION_COLUMNS) - 2) + [f"failed: {exc}"])
    with open(out / "ablation.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ABLATION_COLUMNS)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    print(f"ablation: {len(rows) - failures} of {len(rows)} variants succeeded; table at {out / 'ablation.csv'}")
    if failures:
        raise InputError(f"{failures} variant(s) failed")


def cmd_export_heatmap(args):
    path = _existing(args.matrix, "matrix")
    header, arrays = persist.load(path)
    values = arrays["values"]
    if header.get("kind") == "inhibition" and not args.raw:
        values = 1.0 - values
    block = None
    if header.get("config"):
        block = header["config"]["num_frets"] + 2
    export_heatmap(values, args.out, block_size=block, scale=args.scale)
    print(f"wrote {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tabinhibit",
                                     description="Pairwise string/fret likelihoods and inhibition training.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-tracks", type=int, default=60)
    p.add_argument("--frames-per-track", type=int, default=200)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--unison", type=float, default=0.5)
    p.add_argument("--frame-rate", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("estimate", help="estimate co-occurrence likelihoods and inhibition weights")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--boost", type=int, action="append", default=None)
    p.add_argument("--exclude-silence", action="store_true")
    p.set_defaults(func=cmd_estimate)

    for name, func, helptext in (("train", cmd_train, "train one manifest variant"),
                                 ("ablation", cmd_ablation, "train and evaluate a directory of manifests")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--manifest", required=True)
        p.add_argument("--out", default=None, required=(name == "ablation"))
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--boost", type=int, action="append", default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--weights-std", required=True)
    p.add_argument("--weights-boost", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truth-as-prediction", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-heatmap", help="render a persisted matrix as a PPM image")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--raw", action="store_true", help="plot weights as stored instead of 1 - w")
    p.set_defaults(func=cmd_export_heatmap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "boost", "unset") is None and args.command == "estimate":
        args.boost = [1, 128]
    try:
        args.func(args)
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, *INPUT_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
