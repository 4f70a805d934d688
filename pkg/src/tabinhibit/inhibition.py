"""Inhibition weights and the pairwise inhibition energy.

The energy of an activation sheet ``z`` (C x N) under weights ``W`` is::

    L = 1/(2N) * sum_n z[:, n]^T W z[:, n]

which counts both orderings of every pair and halves the total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import persist
from .cooccurrence import CooccurrenceMatrix
from .fretboard import FretboardConfig

BOOSTED = 2 ** 7
MAX_BOOST = 2 ** 20

CORPUS = "corpus-derived"
STRING_CONSTRAINTS = "string-constraints"


@dataclass
class InhibitionMatrix:
    weights: np.ndarray
    boost: int = 1
    source: str = CORPUS
    config: FretboardConfig | None = None

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def header(self) -> dict:
        return {"kind": "inhibition",
                "dim": self.dim,
                "boost": int(self.boost),
                "source": self.source,
                "config": None if self.config is None else self.config.to_dict(),
                "config_hash": None if self.config is None else self.config.config_hash()}

    def save(self, path, binary: bool | None = None):
        persist.save(path, self.header(), {"values": self.weights}, binary=binary)

    @classmethod
    def load(cls, path) -> InhibitionMatrix:
        header, arrays = persist.load(path)
        if header.get("kind") != "inhibition":
            raise persist.FormatError(f"{path}: not an inhibition matrix document")
        cfg = header.get("config")
        return cls(weights=arrays["values"], boost=header["boost"], source=header["source"],
                   config=None if cfg is None else FretboardConfig.from_dict(cfg))


def weights_from_cooccurrence(m: CooccurrenceMatrix, b: int = 1) -> InhibitionMatrix:
    """Complement of the likelihood raised to the boost, ``(1 - IoU) ** b``."""
    if isinstance(b, bool) or int(b) != b or b < 1:
        raise ValueError(f"boost must be a positive integer, got {b!r}")
    if b > MAX_BOOST:
        raise ValueError(f"boost {b} exceeds supported maximum {MAX_BOOST}")
    b = int(b)
    iou = np.clip(np.asarray(m.values, dtype=np.float64), 0.0, 1.0)
    # exp(b * log(1 - iou)) keeps (1 - eps)^b accurate for tiny eps
    with np.errstate(divide="ignore"):
        weights = np.exp(b * np.log1p(-iou))
    return InhibitionMatrix(weights=weights, boost=b, source=CORPUS, config=m.config)


def string_constraint_weights(config: FretboardConfig) -> InhibitionMatrix:
    """Weight 1 for distinct combinations sharing a string, 0 elsewhere."""
    strings = config.combo_strings
    same = strings[:, None] == strings[None, :]
    weights = (same & ~np.eye(config.num_combos, dtype=bool)).astype(np.float64)
    return InhibitionMatrix(weights=weights, boost=1, source=STRING_CONSTRAINTS, config=config)


def _weights_of(w) -> np.ndarray:
    return w.weights if isinstance(w, InhibitionMatrix) else np.asarray(w, dtype=np.float64)


def _check(sheet, weights):
    sheet = np.asarray(sheet, dtype=np.float64)
    if sheet.ndim != 2:
        raise ValueError(f"sheet must be (C, N), got shape {sheet.shape}")
    if weights.shape != (sheet.shape[0], sheet.shape[0]):
        raise ValueError(f"sheet has {sheet.shape[0]} combinations but weights are {weights.shape}")
    return sheet


def inhibition_energy(sheet: np.ndarray, w) -> float:
    weights = _weights_of(w)
    z = _check(sheet, weights)
    n = z.shape[1]
    if n == 0:
        return 0.0
    return float(np.sum(z * (weights @ z)) / (2 * n))


def inhibition_gradient(sheet: np.ndarray, w) -> np.ndarray:
    """Derivative of the energy with respect to every activation."""
    weights = _weights_of(w)
    z = _check(sheet, weights)
    n = z.shape[1]
    if n == 0:
        return np.zeros_like(z)
    sym = 0.5 * (weights + weights.T)
    return sym @ z / n
