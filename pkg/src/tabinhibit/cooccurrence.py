"""Pairwise co-occurrence likelihood (averaged intersection over union).

For every track, each pair of combinations that both occur somewhere in the
track contributes ``inter / union`` of their frame-level activity. The corpus
value for a pair is the mean of these contributions over the tracks where
both combinations occur; pairs that never qualify are 0.

Accumulation is order-insensitive: per-pair contributions are kept and
summed in sorted order at the end, so merging partial accumulators or
shuffling the corpus yields bitwise identical matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import persist
from .fretboard import FretboardConfig
from .ingest import FrameTablature, targets_of


@dataclass
class TrackPairStats:
    """Frame counts for every pair of combinations occurring in one track.

    Only the ``k`` combinations with at least one active frame are kept;
    ``inter`` is their k x k logical-AND count matrix. Unions follow from
    ``occ[i] + occ[j] - inter[i, j]``.
    """

    dim: int
    combos: np.ndarray
    inter_counts: np.ndarray
    num_frames: int

    @property
    def occurrences(self) -> np.ndarray:
        return np.diag(self.inter_counts).copy()

    @property
    def union_counts(self) -> np.ndarray:
        occ = self.occurrences
        return occ[:, None] + occ[None, :] - self.inter_counts

    def _pos(self, c):
        k = np.searchsorted(self.combos, c)
        if k < len(self.combos) and self.combos[k] == c:
            return k
        return None

    def inter(self, i: int, j: int) -> int:
        a, b = self._pos(i), self._pos(j)
        if a is None or b is None:
            return 0
        return int(self.inter_counts[a, b])

    def union(self, i: int, j: int) -> int:
        a, b = self._pos(i), self._pos(j)
        occ = self.occurrences
        oi = 0 if a is None else int(occ[a])
        oj = 0 if b is None else int(occ[b])
        return oi + oj - self.inter(i, j)


def track_pair_stats(targets: np.ndarray) -> TrackPairStats:
    """Intersection/union frame counts of a binary (C, N) target tensor."""
    t = np.asarray(targets)
    if t.ndim != 2:
        raise ValueError(f"targets must be (C, N), got shape {t.shape}")
    active = t.astype(bool)
    combos = np.flatnonzero(active.any(axis=1))
    sub = active[combos].astype(np.int64)
    return TrackPairStats(dim=t.shape[0], combos=combos,
                          inter_counts=sub @ sub.T, num_frames=t.shape[1])


@dataclass
class CooccurrenceMatrix:
    values: np.ndarray
    valid_track_counts: np.ndarray
    track_count: int = 0
    config: FretboardConfig | None = None

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def header(self) -> dict:
        return {"kind": "cooccurrence",
                "dim": self.dim,
                "config": None if self.config is None else self.config.to_dict(),
                "config_hash": None if self.config is None else self.config.config_hash(),
                "track_count": int(self.track_count)}

    def save(self, path, binary: bool | None = None):
        persist.save(path, self.header(),
                     {"values": self.values, "counts": self.valid_track_counts}, binary=binary)

    @classmethod
    def load(cls, path) -> CooccurrenceMatrix:
        header, arrays = persist.load(path)
        if header.get("kind") != "cooccurrence":
            raise persist.FormatError(f"{path}: not a co-occurrence matrix document")
        values = arrays["values"]
        if values.shape != (header["dim"], header["dim"]):
            raise persist.FormatError(f"{path}: values shape {values.shape} != dim {header['dim']}")
        cfg = header.get("config")
        return cls(values=values, valid_track_counts=arrays["counts"],
                   track_count=header["track_count"],
                   config=None if cfg is None else FretboardConfig.from_dict(cfg))


@dataclass
class CooccurrenceAccumulator:
    """Commutative reduction of per-track pair statistics.

    ``add`` and ``merge`` may be applied in any order; ``result`` sorts the
    collected contributions before summing.
    """

    dim: int
    include_silence: bool = True
    config: FretboardConfig | None = None
    _pairs: list = field(default_factory=list, repr=False)
    _ious: list = field(default_factory=list, repr=False)
    track_count: int = 0

    def add(self, stats: TrackPairStats):
        if stats.dim != self.dim:
            raise ValueError(f"track dimension {stats.dim} != accumulator dimension {self.dim}")
        combos = stats.combos
        inter = stats.inter_counts
        if not self.include_silence and self.config is not None:
            keep = self.config.combo_frets[combos] >= 0
            combos, inter = combos[keep], inter[np.ix_(keep, keep)]
        occ = np.diag(inter)
        union = occ[:, None] + occ[None, :] - inter
        # every kept combo occurs, so union >= 1 for all kept pairs
        self._pairs.append((combos[:, None] * self.dim + combos[None, :]).ravel())
        self._ious.append((inter / union).ravel())
        self.track_count += 1

    def merge(self, other: CooccurrenceAccumulator) -> CooccurrenceAccumulator:
        if other.dim != self.dim or other.include_silence != self.include_silence:
            raise ValueError("cannot merge accumulators with different layouts")
        self._pairs.extend(other._pairs)
        self._ious.extend(other._ious)
        self.track_count += other.track_count
        return self

    def result(self) -> CooccurrenceMatrix:
        total = np.zeros(self.dim * self.dim)
        counts = np.zeros(self.dim * self.dim, dtype=np.int64)
        if self._pairs:
            pairs = np.concatenate(self._pairs)
            ious = np.concatenate(self._ious)
            order = np.lexsort((ious, pairs))
            pairs, ious = pairs[order], ious[order]
            starts = np.flatnonzero(np.r_[True, pairs[1:] != pairs[:-1]])
            keys = pairs[starts]
            total[keys] = np.add.reduceat(ious, starts)
            counts[keys] = np.diff(np.r_[starts, len(pairs)])
        values = np.zeros_like(total)
        np.divide(total, counts, out=values, where=counts > 0)
        return CooccurrenceMatrix(values=values.reshape(self.dim, self.dim),
                                  valid_track_counts=counts.reshape(self.dim, self.dim),
                                  track_count=self.track_count, config=self.config)


def accumulate(corpus: Iterable[TrackPairStats], dim: int | None = None,
               include_silence: bool = True,
               config: FretboardConfig | None = None) -> CooccurrenceMatrix:
    acc = None
    for stats in corpus:
        if acc is None:
            acc = CooccurrenceAccumulator(dim if dim is not None else stats.dim,
                                          include_silence=include_silence, config=config)
        acc.add(stats)
    if acc is None:
        if dim is None:
            raise ValueError("cannot accumulate an empty corpus without a dimension")
        acc = CooccurrenceAccumulator(dim, include_silence=include_silence, config=config)
    return acc.result()


def estimate_corpus(tracks: Iterable[FrameTablature],
                    include_silence: bool = True) -> CooccurrenceMatrix:
    """Averaged-IoU matrix over a corpus of frame tablature."""
    tracks = list(tracks)
    if not tracks:
        raise ValueError("empty corpus")
    config = tracks[0].config
    for tab in tracks[1:]:
        if tab.config != config:
            raise ValueError("corpus mixes fretboard configurations")
    return accumulate((track_pair_stats(targets_of(tab)) for tab in tracks),
                      dim=config.num_combos, include_silence=include_silence, config=config)
