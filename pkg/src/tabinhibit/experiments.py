"""Declarative run manifests and the ablation driver.

A manifest is a JSON document, for example::

    {
      "experiment_id": "corpus-b128",
      "head": "logistic",
      "lambda": 1.0,
      "weights": {"source": "corpus", "boost": 128},
      "seed": 0,
      "corpus": {"synth": {"num_tracks": 60, "unison_confusability": 0.5}},
      "likelihoods": {"synth": {"num_tracks": 200, "pitch_noise": 0.0}},
      "schedule": {"iterations": 2000}
    }

``corpus`` and ``likelihoods`` take either ``{"path": ...}`` (a corpus
directory, or for likelihoods also a persisted co-occurrence matrix) or
``{"synth": {...}}`` with synthetic generator parameters. Synthetic seeds
default to the manifest seed (corpus) and seed + 1000 (likelihoods).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cooccurrence import CooccurrenceMatrix, estimate_corpus
from .fretboard import FretboardConfig
from .inhibition import BOOSTED, InhibitionMatrix, string_constraint_weights, weights_from_cooccurrence
from .metrics import EvalReport, evaluate_corpus
from .model import HEADS, LOGISTIC, ModelConfig, ModelConfigError, Schedule, predict, save_checkpoint, train
from .synth import SynthCorpus, SynthParams, generate_corpus, load_corpus, split_indices

logger = logging.getLogger(__name__)

WEIGHT_SOURCES = ("none", "string-constraints", "corpus")
LIKELIHOOD_SEED_OFFSET = 1000


class ManifestError(ValueError):
    pass


@dataclass
class RunManifest:
    experiment_id: str
    head: str = LOGISTIC
    lam: float = 0.0
    weight_source: str = "none"
    boost: int = 1
    seed: int = 0
    hidden_dim: int = 128
    schedule: Schedule = field(default_factory=Schedule)
    corpus: dict = field(default_factory=lambda: {"synth": {}})
    likelihoods: dict = field(default_factory=lambda: {"synth": {"num_tracks": 200, "pitch_noise": 0.0}})
    split: tuple = (4 / 6, 1 / 6, 1 / 6)
    fretboard: FretboardConfig = field(default_factory=FretboardConfig)
    out: str | None = None

    def __post_init__(self):
        if self.head not in HEADS:
            raise ManifestError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.weight_source not in WEIGHT_SOURCES:
            raise ManifestError(f"weights.source must be one of {WEIGHT_SOURCES}, got {self.weight_source!r}")
        if self.lam < 0:
            raise ManifestError("lambda must be nonnegative")
        if self.head != LOGISTIC and self.weight_source != "none":
            raise ManifestError("an inhibition weight source requires the logistic head")
        if self.lam > 0 and self.weight_source == "none":
            raise ManifestError("lambda > 0 requires a weight source")
        if self.boost < 1:
            raise ManifestError("boost must be a positive integer")
        for key, spec in (("corpus", self.corpus), ("likelihoods", self.likelihoods)):
            if not isinstance(spec, dict) or len(spec) != 1 or not ({"path", "synth"} & spec.keys()):
                raise ManifestError(f"{key} must be {{'path': ...}} or {{'synth': {{...}}}}")

    def to_dict(self) -> dict:
        return {"experiment_id": self.experiment_id, "head": self.head, "lambda": self.lam,
                "weights": {"source": self.weight_source, "boost": self.boost},
                "seed": self.seed, "hidden_dim": self.hidden_dim,
                "schedule": self.schedule.to_dict(), "corpus": self.corpus,
                "likelihoods": self.likelihoods, "split": list(self.split),
                "fretboard": self.fretboard.to_dict(), "out": self.out}

    @classmethod
    def from_dict(cls, d: dict) -> RunManifest:
        known = {"experiment_id", "head", "lambda", "weights", "seed", "hidden_dim", "schedule",
                 "corpus", "likelihoods", "split", "fretboard", "out"}
        unknown = set(d) - known
        if unknown:
            raise ManifestError(f"unknown manifest fields: {sorted(unknown)}")
        if "experiment_id" not in d:
            raise ManifestError("manifest needs an experiment_id")
        weights = d.get("weights", {}) or {}
        try:
            schedule = Schedule(**d.get("schedule", {}))
            return cls(experiment_id=str(d["experiment_id"]),
                       head=d.get("head", LOGISTIC),
                       lam=float(d.get("lambda", 0.0)),
                       weight_source=weights.get("source", "none"),
                       boost=int(weights.get("boost", 1)),
                       seed=int(d.get("seed", 0)),
                       hidden_dim=int(d.get("hidden_dim", 128)),
                       schedule=schedule,
                       corpus=d.get("corpus", {"synth": {}}),
                       likelihoods=d.get("likelihoods", {"synth": {"num_tracks": 200, "pitch_noise": 0.0}}),
                       split=tuple(d.get("split", (4 / 6, 1 / 6, 1 / 6))),
                       fretboard=FretboardConfig.from_dict(d.get("fretboard", {})),
                       out=d.get("out"))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ManifestError):
                raise
            raise ManifestError(str(exc)) from None


def load_manifest(path) -> RunManifest:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    return RunManifest.from_dict(data)


def _synth_params(spec: dict, seed: int, fretboard: FretboardConfig) -> SynthParams:
    spec = dict(spec)
    spec.setdefault("seed", seed)
    spec.setdefault("fretboard", fretboard.to_dict())
    return SynthParams.from_dict(spec)


def build_corpus(manifest: RunManifest) -> SynthCorpus:
    if "path" in manifest.corpus:
        corpus = load_corpus(manifest.corpus["path"])
        if any(x is None for x in corpus.features):
            raise ManifestError(f"corpus {manifest.corpus['path']} lacks feature sidecar files")
        return corpus
    return generate_corpus(_synth_params(manifest.corpus["synth"], manifest.seed, manifest.fretboard))


def build_likelihoods(manifest: RunManifest) -> CooccurrenceMatrix:
    spec = manifest.likelihoods
    if "path" in spec:
        path = Path(spec["path"])
        if path.is_dir():
            return estimate_corpus(load_corpus(path).tablatures)
        return CooccurrenceMatrix.load(path)
    params = _synth_params(spec["synth"], manifest.seed + LIKELIHOOD_SEED_OFFSET, manifest.fretboard)
    return estimate_corpus(generate_corpus(params).tablatures)


def training_weights(manifest: RunManifest, likelihoods: CooccurrenceMatrix) -> InhibitionMatrix | None:
    if manifest.weight_source == "string-constraints":
        return string_constraint_weights(manifest.fretboard)
    if manifest.weight_source == "corpus":
        return weights_from_cooccurrence(likelihoods, manifest.boost)
    return None


@dataclass
class RunOutcome:
    manifest: RunManifest
    config: ModelConfig
    params: dict
    iteration: int
    history: list
    report: EvalReport


def run(manifest: RunManifest, corpus: SynthCorpus | None = None,
        likelihoods: CooccurrenceMatrix | None = None, out_dir=None) -> RunOutcome:
    """Train one variant, pick the best validation checkpoint, evaluate on the test split."""
    corpus = corpus if corpus is not None else build_corpus(manifest)
    likelihoods = likelihoods if likelihoods is not None else build_likelihoods(manifest)
    fb = corpus.fretboard
    if fb != manifest.fretboard:
        raise ManifestError("corpus fretboard does not match the manifest fretboard")
    if likelihoods.dim != fb.num_combos:
        raise ManifestError(f"likelihood matrix has dim {likelihoods.dim}, fretboard needs {fb.num_combos}")

    train_idx, val_idx, test_idx = split_indices(len(corpus), manifest.split, manifest.seed)
    try:
        config = ModelConfig(input_dim=corpus.features[0].shape[0], hidden_dim=manifest.hidden_dim,
                             head=manifest.head, lam=manifest.lam,
                             inhibition=training_weights(manifest, likelihoods),
                             seed=manifest.seed, fretboard=fb)
    except ModelConfigError as exc:
        raise ManifestError(str(exc)) from None
    result = train(corpus.dataset(train_idx), corpus.dataset(val_idx), config, manifest.schedule)

    test = corpus.dataset(test_idx)
    preds = [predict(result.params, x, config) for x, _ in test]
    report = evaluate_corpus(preds, [t for _, t in test], fb,
                             weights_from_cooccurrence(likelihoods, 1),
                             weights_from_cooccurrence(likelihoods, BOOSTED),
                             track_ids=[corpus.tracks[k].track_id for k in test_idx])
    outcome = RunOutcome(manifest, config, result.params, result.iteration, result.history, report)
    if out_dir is not None:
        write_outputs(outcome, out_dir)
    return outcome


def write_outputs(outcome: RunOutcome, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out_dir / "checkpoint.ckpt", outcome.params, outcome.config,
                    iteration=outcome.iteration,
                    metrics={"val_f_tab": next(h["val_f_tab"] for h in outcome.history
                                               if h["iteration"] == outcome.iteration)})
    (out_dir / "history.json").write_text(
        json.dumps({"experiment_id": outcome.manifest.experiment_id,
                    "best_iteration": outcome.iteration,
                    "history": outcome.history}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    outcome.report.save(out_dir / "report.csv")


ABLATION_COLUMNS = ["experiment_id", "head", "weights", "boost", "lambda", "best_iteration",
                    "p_tab", "r_tab", "f_tab", "p_pitch", "r_pitch", "f_pitch", "TDR",
                    "L_inh", "L_inh_plus", "E_dp", "E_fa", "status"]


def ablation_row(outcome: RunOutcome) -> list:
    m = outcome.report.mean()
    man = outcome.manifest
    return [man.experiment_id, man.head, man.weight_source, man.boost, man.lam, outcome.iteration,
            m.p_tab, m.r_tab, m.f_tab, m.p_pitch, m.r_pitch, m.f_pitch, m.tdr,
            m.l_inh, m.l_inh_plus, m.e_dp, m.e_fa, "ok"]


def default_ablation(seed: int = 0, schedule: Schedule | None = None, corpus_spec=None) -> list[RunManifest]:
    """Synthetic analogue of the output-layer / inhibition ablation grid."""
    schedule = schedule or Schedule()
    corpus_spec = corpus_spec or {"synth": {"num_tracks": 60, "unison_confusability": 0.5}}
    grid = [
        ("softmax", "softmax", "none", 1, 0.0),
        ("logistic-lambda0", LOGISTIC, "none", 1, 0.0),
        ("string-constraints", LOGISTIC, "string-constraints", 1, 1.0),
        ("corpus-b1", LOGISTIC, "corpus", 1, 1.0),
        ("corpus-b128", LOGISTIC, "corpus", BOOSTED, 1.0),
        ("corpus-b128-lambda10", LOGISTIC, "corpus", BOOSTED, 10.0),
    ]
    return [RunManifest(experiment_id=name, head=head, weight_source=src, boost=b, lam=lam,
                        seed=seed, schedule=schedule, corpus=corpus_spec)
            for name, head, src, b, lam in grid]


def mean_over(outcomes, column) -> float:
    return float(np.mean([getattr(o.report.mean(), column) for o in outcomes]))
