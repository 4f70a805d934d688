"""Pairwise string/fret co-occurrence likelihoods and inhibition losses for tablature transcription."""

from .cooccurrence import CooccurrenceMatrix, estimate_corpus, track_pair_stats
from .fretboard import FretboardConfig
from .inhibition import (InhibitionMatrix, inhibition_energy, inhibition_gradient,
                         string_constraint_weights, weights_from_cooccurrence)
from .ingest import FrameTablature, NoteEvent, SymbolicTrack, parse_track, rasterize, targets_of

__version__ = "0.1.0"

__all__ = [
    "CooccurrenceMatrix", "FrameTablature", "FretboardConfig", "InhibitionMatrix", "NoteEvent",
    "SymbolicTrack", "estimate_corpus", "inhibition_energy", "inhibition_gradient", "parse_track",
    "rasterize", "string_constraint_weights", "targets_of", "track_pair_stats",
    "weights_from_cooccurrence",
]
