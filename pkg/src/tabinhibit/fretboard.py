"""Instrument geometry and the flattened string/fret combination index space.

Strings are 1-based and ordered low to high. Each string owns a contiguous
block of ``num_frets + 2`` combination indices, silence (fret class -1)
first, then the open string (0), then frets 1..F.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

STANDARD_TUNING = (40, 45, 50, 55, 59, 64)
DEFAULT_NUM_FRETS = 19
SILENCE = -1


class FretboardError(ValueError):
    """Raised for out-of-range strings, frets or combination indices."""


@dataclass(frozen=True)
class FretboardConfig:
    num_strings: int = 6
    num_frets: int = DEFAULT_NUM_FRETS
    tuning: tuple[int, ...] = field(default=STANDARD_TUNING)

    def __post_init__(self):
        object.__setattr__(self, "tuning", tuple(int(p) for p in self.tuning))
        if self.num_strings < 1:
            raise FretboardError(f"num_strings must be >= 1, got {self.num_strings}")
        if self.num_frets < 1:
            raise FretboardError(f"num_frets must be >= 1, got {self.num_frets}")
        if len(self.tuning) != self.num_strings:
            raise FretboardError(
                f"tuning has {len(self.tuning)} pitches for {self.num_strings} strings")
        if any(p <= 0 for p in self.tuning):
            raise FretboardError(f"tuning pitches must be positive: {self.tuning}")

    @property
    def block_size(self) -> int:
        """Number of fret classes per string (silence, open, 1..F)."""
        return self.num_frets + 2

    @property
    def num_combos(self) -> int:
        return self.num_strings * self.block_size

    @property
    def min_pitch(self) -> int:
        return min(self.tuning)

    @property
    def max_pitch(self) -> int:
        return max(self.tuning) + self.num_frets

    @property
    def num_pitches(self) -> int:
        return self.max_pitch - self.min_pitch + 1

    def _check_string(self, string):
        if not 1 <= string <= self.num_strings:
            raise FretboardError(f"string {string} outside [1, {self.num_strings}]")

    def _check_fret(self, fret_class):
        if not SILENCE <= fret_class <= self.num_frets:
            raise FretboardError(f"fret class {fret_class} outside [-1, {self.num_frets}]")

    def combo_of(self, string: int, fret_class: int) -> int:
        self._check_string(string)
        self._check_fret(fret_class)
        return (string - 1) * self.block_size + (fret_class + 1)

    def split_combo(self, combo: int) -> tuple[int, int]:
        if not 0 <= combo < self.num_combos:
            raise FretboardError(f"combo {combo} outside [0, {self.num_combos})")
        block, offset = divmod(int(combo), self.block_size)
        return block + 1, offset - 1

    def pitch_of(self, string: int, fret_class: int) -> int | None:
        self._check_string(string)
        self._check_fret(fret_class)
        if fret_class == SILENCE:
            return None
        return self.tuning[string - 1] + fret_class

    def silence_combo(self, string: int) -> int:
        return self.combo_of(string, SILENCE)

    @cached_property
    def combo_strings(self) -> np.ndarray:
        """1-based string of every combination index."""
        return np.repeat(np.arange(1, self.num_strings + 1), self.block_size)

    @cached_property
    def combo_frets(self) -> np.ndarray:
        """Fret class of every combination index."""
        return np.tile(np.arange(SILENCE, self.num_frets + 1), self.num_strings)

    @cached_property
    def combo_pitch_index(self) -> np.ndarray:
        """Row of each combination in the pitch space, -1 for silence classes."""
        open_pitches = np.asarray(self.tuning)[self.combo_strings - 1]
        index = open_pitches + self.combo_frets - self.min_pitch
        return np.where(self.combo_frets == SILENCE, -1, index)

    def to_dict(self) -> dict:
        return {"num_strings": self.num_strings,
                "num_frets": self.num_frets,
                "tuning": list(self.tuning)}

    @classmethod
    def from_dict(cls, data: dict) -> FretboardConfig:
        return cls(num_strings=int(data.get("num_strings", len(data.get("tuning", STANDARD_TUNING)))),
                   num_frets=int(data.get("num_frets", DEFAULT_NUM_FRETS)),
                   tuning=tuple(data.get("tuning", STANDARD_TUNING)))

    def config_hash(self) -> str:
        """Short stable digest identifying this geometry in persisted files."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]
