import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_iou_matrix, one_hot, random_frets
from tabinhibit.cooccurrence import (CooccurrenceAccumulator, accumulate, estimate_corpus,
                                     track_pair_stats)
from tabinhibit.fretboard import FretboardConfig
from tabinhibit.ingest import FrameTablature, targets_of


def test_pair_stats_hand_count():
    t = np.array([[1, 1, 0], [0, 1, 1]])
    stats = track_pair_stats(t)
    assert (stats.inter(0, 1), stats.union(0, 1)) == (1, 3)


def test_pair_stats_identical_columns():
    t = np.array([[1, 0, 1, 1], [1, 0, 1, 1]])
    stats = track_pair_stats(t)
    assert stats.inter(0, 1) == stats.union(0, 1) == 3
    assert stats.inter(0, 0) == stats.union(0, 0) == 3


def test_pair_stats_disjoint():
    t = np.array([[1, 1, 0, 0], [0, 0, 0, 1]])
    stats = track_pair_stats(t)
    assert stats.inter(0, 1) == 0 and stats.union(0, 1) == 3


def test_pair_stats_only_keeps_occurring_combos():
    t = np.array([[1, 0], [0, 0], [1, 1]])
    stats = track_pair_stats(t)
    assert stats.combos.tolist() == [0, 2]
    assert stats.union(1, 1) == 0


def test_never_together_gives_zero_with_one_valid_track():
    m = accumulate([track_pair_stats(np.array([[1, 0], [0, 1]]))])
    assert m.values[0, 1] == 0.0
    assert m.valid_track_counts[0, 1] == 1


def test_average_of_two_tracks():
    full = track_pair_stats(np.array([[1, 1], [1, 1]]))  # IoU 1
    half = track_pair_stats(np.array([[1, 1], [0, 1]]))  # IoU 1/2
    m = accumulate([full, half])
    assert m.values[0, 1] == 0.75
    assert m.valid_track_counts[0, 1] == 2


def test_track_missing_one_combo_does_not_count():
    both = track_pair_stats(np.array([[1, 1], [0, 1]]))
    only_first = track_pair_stats(np.array([[1, 1], [0, 0]]))
    m = accumulate([both, only_first])
    assert m.valid_track_counts[0, 1] == 1
    assert m.values[0, 1] == 0.5
    assert m.valid_track_counts[0, 0] == 2


def test_dimension_mismatch():
    acc = CooccurrenceAccumulator(3)
    with pytest.raises(ValueError):
        acc.add(track_pair_stats(np.ones((2, 2))))


def test_empty_corpus():
    with pytest.raises(ValueError):
        estimate_corpus([])


def test_mixed_fretboards_rejected():
    a = FrameTablature(np.full((6, 2), -1), FretboardConfig())
    b = FrameTablature(np.full((6, 2), -1), FretboardConfig(num_frets=12))
    with pytest.raises(ValueError):
        estimate_corpus([a, b])


def test_silence_only_track(default_fb):
    m = estimate_corpus([FrameTablature(np.full((6, 5), -1), default_fb)])
    silence = [default_fb.silence_combo(s) for s in range(1, 7)]
    expected = np.zeros((126, 126))
    expected[np.ix_(silence, silence)] = 1.0
    assert np.array_equal(m.values, expected)


def test_silence_can_be_excluded(default_fb):
    frets = np.full((6, 4), -1)
    frets[0] = [0, 0, 3, 3]
    m = estimate_corpus([FrameTablature(frets, default_fb)], include_silence=False)
    silence = [default_fb.silence_combo(s) for s in range(1, 7)]
    assert not m.values[silence].any() and not m.values[:, silence].any()
    assert m.values[1, 1] == 1.0


def check_invariants(m, fb):
    v = m.values
    assert np.array_equal(v, v.T)
    assert v.min() >= 0.0 and v.max() <= 1.0
    occurring = np.diag(m.valid_track_counts) > 0
    assert (np.diag(v)[occurring] == 1.0).all()
    same_string = fb.combo_strings[:, None] == fb.combo_strings[None, :]
    off_diag = ~np.eye(fb.num_combos, dtype=bool)
    assert (v[same_string & off_diag] == 0).all()
    assert (v[m.valid_track_counts == 0] == 0).all()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_matches_brute_force_and_invariants(seed):
    fb = FretboardConfig(num_strings=2, num_frets=3, tuning=(40, 45))
    rng = np.random.default_rng(seed)
    frets = [random_frets(rng, 2, 3, int(rng.integers(1, 21))) for _ in range(int(rng.integers(1, 6)))]
    m = estimate_corpus([FrameTablature(f, fb) for f in frets])
    expected, valid = brute_iou_matrix([one_hot(f.tolist(), 3) for f in frets], fb.num_combos)
    assert np.abs(m.values - np.array(expected, dtype=float)).max() <= 1e-12
    assert m.valid_track_counts.tolist() == valid
    check_invariants(m, fb)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_order_and_merge_insensitive(seed):
    fb = FretboardConfig(num_strings=3, num_frets=4, tuning=(40, 45, 50))
    rng = np.random.default_rng(seed)
    tabs = [FrameTablature(random_frets(rng, 3, 4, int(rng.integers(1, 30))), fb) for _ in range(7)]
    base = estimate_corpus(tabs)
    shuffled = estimate_corpus([tabs[k] for k in rng.permutation(len(tabs))])
    assert np.array_equal(base.values, shuffled.values)

    left = CooccurrenceAccumulator(fb.num_combos)
    right = CooccurrenceAccumulator(fb.num_combos)
    for k, tab in enumerate(tabs):
        (left if k % 2 else right).add(track_pair_stats(targets_of(tab)))
    merged = right.merge(left).result()
    assert np.array_equal(merged.values, base.values)
    assert np.array_equal(merged.valid_track_counts, base.valid_track_counts)
    assert merged.track_count == len(tabs)


def test_synthetic_corpus_invariants():
    from tabinhibit.synth import generate_corpus

    corpus = generate_corpus()
    m = estimate_corpus(corpus.tablatures)
    check_invariants(m, corpus.fretboard)
    assert m.track_count == 60
