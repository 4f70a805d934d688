"""Tablature interchange format, rasterization and one-hot targets.

A track document is UTF-8 JSON Lines. The first line is the header::

    {"track_id": "t0", "duration_sec": 2.0, "tuning": [40, 45, 50, 55, 59, 64], "num_frets": 19}

and every following non-blank line is one note::

    {"string": 3, "fret": 2, "onset_sec": 0.0, "offset_sec": 1.0}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fretboard import SILENCE, FretboardConfig

# Average GuitarSet track: 1312.7 frames over 30.5 seconds
DEFAULT_FRAME_RATE = 1312.7 / 30.5

HEADER_FIELDS = ("track_id", "duration_sec", "tuning", "num_frets")
NOTE_FIELDS = ("string", "fret", "onset_sec", "offset_sec")


class TabParseError(ValueError):
    """Malformed interchange document."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class TabValidationError(ValueError):
    """Well-formed document whose contents violate the fretboard or timing rules."""


@dataclass(frozen=True)
class NoteEvent:
    string: int
    fret: int
    onset_sec: float
    offset_sec: float


@dataclass
class SymbolicTrack:
    track_id: str
    events: list[NoteEvent]
    duration_sec: float
    config: FretboardConfig = field(default_factory=FretboardConfig)

    def validate(self):
        cfg = self.config
        for k, ev in enumerate(self.events):
            if not 1 <= ev.string <= cfg.num_strings:
                raise TabValidationError(
                    f"event {k}: string {ev.string} outside [1, {cfg.num_strings}]")
            if not 0 <= ev.fret <= cfg.num_frets:
                raise TabValidationError(
                    f"event {k}: fret {ev.fret} outside [0, {cfg.num_frets}]")
            if ev.onset_sec < 0:
                raise TabValidationError(f"event {k}: negative onset {ev.onset_sec}")
            if not ev.offset_sec > ev.onset_sec:
                raise TabValidationError(
                    f"event {k}: offset {ev.offset_sec} <= onset {ev.onset_sec}")
            if ev.offset_sec > self.duration_sec:
                raise TabValidationError(
                    f"event {k}: offset {ev.offset_sec} exceeds duration {self.duration_sec}")

        # A string sounds one fret at a time
        by_string = {}
        for k, ev in enumerate(self.events):
            by_string.setdefault(ev.string, []).append((ev.onset_sec, ev.offset_sec, k))
        for string, spans in by_string.items():
            spans.sort()
            for (on_a, off_a, a), (on_b, off_b, b) in zip(spans, spans[1:]):
                if on_b < off_a:
                    raise TabValidationError(
                        f"events {a} and {b} overlap on string {string} "
                        f"([{on_a}, {off_a}) and [{on_b}, {off_b}))")


@dataclass
class FrameTablature:
    """Per-string fret class sequences, shape (num_strings, N)."""

    frets: np.ndarray
    config: FretboardConfig = field(default_factory=FretboardConfig)

    def __post_init__(self):
        self.frets = np.asarray(self.frets, dtype=np.int64)
        if self.frets.ndim != 2 or self.frets.shape[0] != self.config.num_strings:
            raise ValueError(f"expected ({self.config.num_strings}, N) frets, "
                             f"got {self.frets.shape}")
        if self.frets.size and (self.frets.min() < SILENCE
                                or self.frets.max() > self.config.num_frets):
            raise ValueError("fret classes outside [-1, F]")

    @property
    def num_frames(self) -> int:
        return self.frets.shape[1]

    def __eq__(self, other):
        return (isinstance(other, FrameTablature) and self.config == other.config
                and np.array_equal(self.frets, other.frets))


def _require(obj, name, line, kind):
    if name not in obj:
        raise TabParseError("missing required field", line=line, field=name)
    value = obj[name]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TabParseError(f"expected integer, got {value!r}", line=line, field=name)
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TabParseError(f"expected number, got {value!r}", line=line, field=name)
        value = float(value)
        if not math.isfinite(value):
            raise TabParseError(f"non-finite value {value!r}", line=line, field=name)
    elif kind is str:
        if not isinstance(value, str):
            raise TabParseError(f"expected string, got {value!r}", line=line, field=name)
    elif kind is list:
        if not isinstance(value, list):
            raise TabParseError(f"expected list, got {value!r}", line=line, field=name)
    return value


def _load_line(text, line):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TabParseError(f"invalid JSON ({exc.msg} at column {exc.colno})", line=line) from None
    if not isinstance(obj, dict):
        raise TabParseError("expected a JSON object", line=line)
    return obj


def parse_track(document: str) -> SymbolicTrack:
    """Parse one interchange document and validate it against its declared fretboard."""
    lines = [(k + 1, ln) for k, ln in enumerate(document.splitlines()) if ln.strip()]
    if not lines:
        raise TabParseError("empty document")

    lineno, text = lines[0]
    header = _load_line(text, lineno)
    track_id = _require(header, "track_id", lineno, str)
    duration = _require(header, "duration_sec", lineno, float)
    tuning = _require(header, "tuning", lineno, list)
    if not tuning or not all(isinstance(p, int) and not isinstance(p, bool) for p in tuning):
        raise TabParseError("expected a nonempty list of integer pitches", line=lineno, field="tuning")
    num_frets = _require(header, "num_frets", lineno, int)
    if duration < 0:
        raise TabValidationError(f"negative duration {duration}")
    try:
        config = FretboardConfig(num_strings=len(tuning), num_frets=num_frets, tuning=tuple(tuning))
    except ValueError as exc:
        raise TabValidationError(str(exc)) from None

    events = []
    for lineno, text in lines[1:]:
        rec = _load_line(text, lineno)
        events.append(NoteEvent(string=_require(rec, "string", lineno, int),
                                fret=_require(rec, "fret", lineno, int),
                                onset_sec=_require(rec, "onset_sec", lineno, float),
                                offset_sec=_require(rec, "offset_sec", lineno, float)))

    track = SymbolicTrack(track_id=track_id, events=events, duration_sec=duration, config=config)
    track.validate()
    return track


def serialize_track(track: SymbolicTrack) -> str:
    header = {"track_id": track.track_id,
              "duration_sec": float(track.duration_sec),
              "tuning": list(track.config.tuning),
              "num_frets": track.config.num_frets}
    out = [json.dumps(header)]
    for ev in track.events:
        out.append(json.dumps({"string": ev.string, "fret": ev.fret,
                               "onset_sec": float(ev.onset_sec),
                               "offset_sec": float(ev.offset_sec)}))
    return "\n".join(out) + "\n"


def load_track(path) -> SymbolicTrack:
    return parse_track(Path(path).read_text(encoding="utf-8"))


def save_track(track: SymbolicTrack, path):
    Path(path).write_text(serialize_track(track), encoding="utf-8")


def num_frames_for(duration_sec: float, frame_rate: float) -> int:
    # Round away float fuzz like 8.000000000000002 before taking the ceiling
    return int(math.ceil(round(duration_sec * frame_rate, 9)))


def rasterize(track: SymbolicTrack, frame_rate: float = DEFAULT_FRAME_RATE) -> FrameTablature:
    """Sample each string at every frame start; silence where no note is active."""
    if not frame_rate > 0:
        raise ValueError(f"frame_rate must be positive, got {frame_rate}")
    cfg = track.config
    n_frames = num_frames_for(track.duration_sec, frame_rate)
    frets = np.full((cfg.num_strings, n_frames), SILENCE, dtype=np.int64)
    times = np.arange(n_frames) / frame_rate
    for ev in track.events:
        active = (times >= ev.onset_sec) & (times < ev.offset_sec)
        frets[ev.string - 1, active] = ev.fret
    return FrameTablature(frets, cfg)


def targets_of(frames: FrameTablature) -> np.ndarray:
    """Binary (C, N) one-hot tensor: one active class per string block per frame."""
    cfg = frames.config
    n = frames.num_frames
    t = np.zeros((cfg.num_combos, n), dtype=np.uint8)
    offsets = (np.arange(cfg.num_strings) * cfg.block_size)[:, None]
    rows = offsets + frames.frets + 1
    t[rows, np.broadcast_to(np.arange(n), rows.shape)] = 1
    return t


def frames_of(targets: np.ndarray, config: FretboardConfig) -> FrameTablature:
    """Inverse of :func:`targets_of` for one-hot-per-string tensors."""
    blocks = np.asarray(targets).reshape(config.num_strings, config.block_size, -1)
    return FrameTablature(blocks.argmax(axis=1) - 1, config)
