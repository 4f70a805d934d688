"""Seeded synthetic tablature corpora with string-agnostic pitch features.

Each track is a random walk over chord fingerings, each held for a random
number of frames, with occasional rests. When a chord is voiced, one of its
notes may be moved to an unused neighbouring string at the same pitch
(probability ``unison_confusability``). Both voicings give identical
feature distributions, so string choice for that note cannot be read from
the features alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fretboard import SILENCE, FretboardConfig
from .ingest import (DEFAULT_FRAME_RATE, FrameTablature, NoteEvent, SymbolicTrack, load_track,
                     rasterize, save_track, targets_of)
from .persist import FormatError

FEATURE_MAGIC = b"TABFEAT1\n"

# Low E to high e, None for a muted string
DEFAULT_SHAPES = {
    "C": (None, 3, 2, 0, 1, 0),
    "A": (None, 0, 2, 2, 2, 0),
    "G": (3, 2, 0, 0, 0, 3),
    "E": (0, 2, 2, 1, 0, 0),
    "D": (None, None, 0, 2, 3, 2),
    "Am": (None, 0, 2, 2, 1, 0),
    "Em": (0, 2, 2, 0, 0, 0),
    "Dm": (None, None, 0, 2, 3, 1),
    "E7": (0, 2, 0, 1, 0, 0),
    "A7": (None, 0, 2, 0, 2, 0),
    "D7": (None, None, 0, 2, 1, 2),
    "G7": (3, 2, 0, 0, 0, 1),
    "C7": (None, 3, 2, 3, 1, 0),
    "B7": (None, 2, 1, 2, 0, 2),
    "Fmaj7": (None, None, 3, 2, 1, 0),
    "Cadd9": (None, 3, 2, 0, 3, 0),
    "F": (1, 3, 3, 2, 1, 1),
    "Bm": (None, 2, 4, 4, 3, 2),
    "F#m": (2, 4, 4, 2, 2, 2),
    "Bb": (None, 1, 3, 3, 3, 1),
    "Cm": (None, 3, 5, 5, 4, 3),
    "Gm": (3, 5, 5, 3, 3, 3),
    "B": (None, 2, 4, 4, 4, 2),
    "C#m": (None, 4, 6, 6, 5, 4),
}


def default_vocabulary() -> list[tuple[tuple[int, int], ...]]:
    """Fingering templates as tuples of 1-based (string, fret) pairs."""
    return [tuple((s + 1, f) for s, f in enumerate(shape) if f is not None)
            for shape in DEFAULT_SHAPES.values()]


@dataclass
class SynthParams:
    seed: int = 0
    num_tracks: int = 60
    frames_per_track: int = 200
    chord_vocabulary: list = field(default_factory=default_vocabulary)
    pitch_noise: float = 0.1
    unison_confusability: float = 0.5
    min_hold: int = 8
    max_hold: int = 40
    rest_probability: float = 0.1
    frame_rate: float = DEFAULT_FRAME_RATE
    fretboard: FretboardConfig = field(default_factory=FretboardConfig)

    def validate(self):
        if not self.chord_vocabulary:
            raise ValueError("chord vocabulary is empty")
        fb = self.fretboard
        for k, shape in enumerate(self.chord_vocabulary):
            strings = [s for s, _ in shape]
            if len(set(strings)) != len(strings):
                raise ValueError(f"template {k} uses a string more than once")
            for s, f in shape:
                if not 1 <= s <= fb.num_strings or not 0 <= f <= fb.num_frets:
                    raise ValueError(f"template {k} has out-of-range position ({s}, {f})")
        if max(len(shape) for shape in self.chord_vocabulary) < 2:
            raise ValueError("vocabulary must contain a template spanning two strings")
        if self.num_tracks < 1 or self.frames_per_track < 1:
            raise ValueError("num_tracks and frames_per_track must be positive")
        if not 0.0 <= self.unison_confusability <= 1.0:
            raise ValueError("unison_confusability must lie in [0, 1]")
        if self.pitch_noise < 0:
            raise ValueError("pitch_noise must be nonnegative")
        if not 1 <= self.min_hold <= self.max_hold:
            raise ValueError("need 1 <= min_hold <= max_hold")

    def to_dict(self):
        return {"seed": self.seed, "num_tracks": self.num_tracks,
                "frames_per_track": self.frames_per_track,
                "chord_vocabulary": [[list(p) for p in shape] for shape in self.chord_vocabulary],
                "pitch_noise": self.pitch_noise,
                "unison_confusability": self.unison_confusability,
                "min_hold": self.min_hold, "max_hold": self.max_hold,
                "rest_probability": self.rest_probability, "frame_rate": self.frame_rate,
                "fretboard": self.fretboard.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> SynthParams:
        d = dict(d)
        if "chord_vocabulary" in d:
            d["chord_vocabulary"] = [tuple(tuple(p) for p in shape) for shape in d["chord_vocabulary"]]
        if "fretboard" in d:
            d["fretboard"] = FretboardConfig.from_dict(d["fretboard"])
        return cls(**d)


def unison_alternatives(shape, fretboard: FretboardConfig):
    """Voicings of ``shape`` with one note moved to a free neighbouring string, same pitch."""
    used = {s for s, _ in shape}
    out = []
    for k, (s, f) in enumerate(shape):
        for s2 in (s - 1, s + 1):
            if s2 < 1 or s2 > fretboard.num_strings or s2 in used:
                continue
            f2 = fretboard.tuning[s - 1] + f - fretboard.tuning[s2 - 1]
            if 0 <= f2 <= fretboard.num_frets:
                alt = list(shape)
                alt[k] = (s2, f2)
                out.append(tuple(sorted(alt)))
    return out


@dataclass
class SynthCorpus:
    tracks: list[SymbolicTrack]
    tablatures: list[FrameTablature]
    features: list[np.ndarray]
    frame_rate: float = DEFAULT_FRAME_RATE

    def __len__(self):
        return len(self.tracks)

    @property
    def fretboard(self) -> FretboardConfig:
        return self.tracks[0].config

    def targets(self) -> list[np.ndarray]:
        return [targets_of(tab) for tab in self.tablatures]

    def dataset(self, indices=None):
        """``(features, targets)`` pairs, optionally restricted to ``indices``."""
        idx = range(len(self)) if indices is None else indices
        return [(self.features[k], targets_of(self.tablatures[k])) for k in idx]

    def subset(self, indices) -> SynthCorpus:
        return SynthCorpus([self.tracks[k] for k in indices], [self.tablatures[k] for k in indices],
                           [self.features[k] for k in indices], self.frame_rate)


def pitch_salience(tab: FrameTablature) -> np.ndarray:
    """Noise-free (P, N) map with 1 wherever some string sounds the pitch."""
    fb = tab.config
    m = np.zeros((fb.num_pitches, tab.num_frames))
    for s in range(fb.num_strings):
        frets = tab.frets[s]
        on = frets != SILENCE
        m[fb.tuning[s] + frets[on] - fb.min_pitch, np.flatnonzero(on)] = 1.0
    return m


def _generate_track(k, params, rng):
    fb = params.fretboard
    vocab = params.chord_vocabulary
    alternatives = [unison_alternatives(shape, fb) for shape in vocab]
    fr = params.frame_rate
    events = []
    start = 0
    while start < params.frames_per_track:
        hold = int(rng.integers(params.min_hold, params.max_hold + 1))
        stop = min(start + hold, params.frames_per_track)
        if rng.random() >= params.rest_probability:
            c = int(rng.integers(len(vocab)))
            shape = vocab[c]
            if alternatives[c] and rng.random() < params.unison_confusability:
                shape = alternatives[c][int(rng.integers(len(alternatives[c])))]
            for s, f in shape:
                events.append(NoteEvent(string=s, fret=f, onset_sec=start / fr, offset_sec=stop / fr))
        start = stop
    track = SymbolicTrack(track_id=f"synth-{params.seed}-{k:04d}", events=events,
                          duration_sec=params.frames_per_track / fr, config=fb)
    track.validate()
    return track


def generate_corpus(params: SynthParams | None = None) -> SynthCorpus:
    """Deterministic corpus; track ``k`` draws from its own sub-seed."""
    params = params or SynthParams()
    params.validate()
    root = np.random.SeedSequence(params.seed)
    tracks, tabs, feats = [], [], []
    for k, child in enumerate(root.spawn(params.num_tracks)):
        rng = np.random.default_rng(child)
        track = _generate_track(k, params, rng)
        tab = rasterize(track, params.frame_rate)
        x = pitch_salience(tab)
        if params.pitch_noise > 0:
            x = x + rng.normal(0.0, params.pitch_noise, size=x.shape)
        tracks.append(track)
        tabs.append(tab)
        feats.append(x)
    return SynthCorpus(tracks, tabs, feats, params.frame_rate)


def split_indices(n_items: int, ratios=(4 / 6, 1 / 6, 1 / 6), seed: int = 0):
    """Shuffle ``range(n_items)`` and cut it into train/validation/test index lists."""
    ratios = np.asarray(ratios, dtype=np.float64)
    if len(ratios) != 3 or np.any(ratios <= 0) or not np.isclose(ratios.sum(), 1.0):
        raise ValueError(f"ratios must be three positive numbers summing to 1, got {ratios.tolist()}")
    order = np.random.default_rng(seed).permutation(n_items)
    cuts = np.rint(np.cumsum(ratios)[:2] * n_items).astype(int)
    parts = [sorted(int(i) for i in p) for p in np.split(order, cuts)]
    if any(len(p) == 0 for p in parts):
        raise ValueError(f"split of {n_items} items with ratios {ratios.tolist()} leaves a split empty")
    return tuple(parts)


def split_corpus(corpus, ratios=(4 / 6, 1 / 6, 1 / 6), seed: int = 0):
    """Disjoint train/validation/test partition of a corpus (or any sequence)."""
    parts = split_indices(len(corpus), ratios, seed)
    if isinstance(corpus, SynthCorpus):
        return tuple(corpus.subset(p) for p in parts)
    return tuple([corpus[k] for k in p] for p in parts)


# ---------------------------------------------------------------------------
# Persistence: <dir>/corpus.json, <dir>/<track_id>.jsonl, <dir>/<track_id>.feat


def encode_features(x: np.ndarray, track_id: str) -> bytes:
    header = json.dumps({"P": int(x.shape[0]), "N": int(x.shape[1]), "track_id": track_id},
                        sort_keys=True).encode("utf-8")
    return FEATURE_MAGIC + header + b"\n" + np.ascontiguousarray(x, dtype="<f8").tobytes()


def decode_features(blob: bytes) -> tuple[str, np.ndarray]:
    if not blob.startswith(FEATURE_MAGIC):
        raise FormatError("not a feature sidecar file")
    head, _, body = blob[len(FEATURE_MAGIC):].partition(b"\n")
    meta = json.loads(head.decode("utf-8"))
    p, n = meta["P"], meta["N"]
    if len(body) != p * n * 8:
        raise FormatError(f"feature body has {len(body)} bytes, expected {p * n * 8}")
    x = np.frombuffer(body, dtype="<f8").reshape(p, n).astype(np.float64)
    return meta["track_id"], x


def save_corpus(corpus: SynthCorpus, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = {"frame_rate": corpus.frame_rate,
             "fretboard": corpus.fretboard.to_dict(),
             "tracks": [t.track_id for t in corpus.tracks]}
    for track, x in zip(corpus.tracks, corpus.features):
        save_track(track, directory / f"{track.track_id}.jsonl")
        (directory / f"{track.track_id}.feat").write_bytes(encode_features(x, track.track_id))
    (directory / "corpus.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")


def load_corpus(directory) -> SynthCorpus:
    directory = Path(directory)
    index_path = directory / "corpus.json"
    if not index_path.is_file():
        raise FileNotFoundError(f"no corpus index at {index_path}")
    index = json.loads(index_path.read_text(encoding="utf-8"))
    fr = float(index["frame_rate"])
    tracks, tabs, feats = [], [], []
    for tid in index["tracks"]:
        track = load_track(directory / f"{tid}.jsonl")
        tracks.append(track)
        tabs.append(rasterize(track, fr))
        feat_path = directory / f"{tid}.feat"
        if feat_path.exists():
            fid, x = decode_features(feat_path.read_bytes())
            if fid != tid:
                raise FormatError(f"{feat_path}: track id {fid!r} does not match {tid!r}")
            if x.shape[1] != tabs[-1].num_frames:
                raise FormatError(f"{feat_path}: {x.shape[1]} frames, tablature has {tabs[-1].num_frames}")
            feats.append(x)
        else:
            feats.append(None)
    return SynthCorpus(tracks, tabs, feats, fr)
