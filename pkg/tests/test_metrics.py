import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_duplicate_pitch, brute_false_alarms
from tabinhibit.fretboard import FretboardConfig
from tabinhibit.inhibition import inhibition_energy, string_constraint_weights
from tabinhibit.ingest import FrameTablature, targets_of
from tabinhibit.metrics import (EvalReport, EvalRow, duplicate_pitch_errors, evaluate_track,
                                false_alarm_errors, multipitch_prf, pitch_tp, tablature_prf,
                                tablature_tp, tdr)

FB = FretboardConfig()


def tab(*columns):
    """Build a (C, N) tensor from per-frame dicts {string: fret}."""
    frets = np.full((6, len(columns)), -1)
    for n, col in enumerate(columns):
        for s, f in col.items():
            frets[s - 1, n] = f
    return targets_of(FrameTablature(frets, FB))


def test_perfect_match():
    t = tab({1: 3, 2: 2})
    assert tablature_prf(t, t, FB) == (1.0, 1.0, 1.0)


def test_all_silence_prediction():
    assert tablature_prf(tab({}), tab({1: 3}), FB) == (0.0, 0.0, 0.0)


def test_empty_pred_and_truth():
    assert tablature_prf(tab({}), tab({}), FB) == (1.0, 1.0, 1.0)
    assert multipitch_prf(tab({}), tab({}), FB) == (1.0, 1.0, 1.0)
    assert tdr(tab({}), tab({}), FB) == 1.0


def test_one_extra_note():
    p, r, f = tablature_prf(tab({1: 3, 2: 0}), tab({1: 3}), FB)
    assert (p, r) == (0.5, 1.0)
    assert f == pytest.approx(2 / 3, rel=1e-15)


def test_right_pitch_wrong_string():
    # string 1 fret 5 and string 2 open are both pitch 45
    pred, truth = tab({1: 5}), tab({2: 0})
    assert multipitch_prf(pred, truth, FB) == (1.0, 1.0, 1.0)
    assert tablature_prf(pred, truth, FB) == (0.0, 0.0, 0.0)
    assert tdr(pred, truth, FB) == 0.0


def test_duplicate_pitch_is_presence_based_for_multipitch():
    pred, truth = tab({1: 5, 2: 0}), tab({1: 5})
    assert multipitch_prf(pred, truth, FB)[0] == 1.0
    assert duplicate_pitch_errors(pred, truth, FB) == 1
    assert false_alarm_errors(pred, truth, FB) == 1


def test_tdr_half():
    pred, truth = tab({1: 5, 3: 2}), tab({2: 0, 3: 2})
    assert tdr(pred, truth, FB) == 0.5


def test_tdr_all_correct():
    t = tab({1: 5, 3: 2})
    assert tdr(t, t, FB) == 1.0


def test_genuine_unison_in_truth():
    t = tab({1: 5, 2: 0})
    assert duplicate_pitch_errors(t, t, FB) == 0
    assert tdr(t, t, FB) == 1.0


def test_silence_predictions_are_not_false_alarms():
    assert false_alarm_errors(tab({}), tab({1: 3}), FB) == 0
    assert false_alarm_errors(tab({1: 4}), tab({1: 3}), FB) == 1


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        tablature_prf(tab({}), tab({}, {}), FB)
    with pytest.raises(ValueError):
        duplicate_pitch_errors(tab({}), tab({}, {}), FB)


def test_evaluate_track_perfect_and_silence():
    w = string_constraint_weights(FB)
    truth = tab({1: 3, 2: 2}, {4: 0})
    row = evaluate_track(truth, truth, FB, w, w)
    assert (row.f_tab, row.e_dp, row.e_fa) == (1.0, 0.0, 0.0)

    # all-silent prediction: six silence classes active per frame
    silent = tab({}, {})
    w_std = np.zeros((126, 126))
    silence = [FB.silence_combo(s) for s in range(1, 7)]
    w_std[np.ix_(silence, silence)] = 0.5
    np.fill_diagonal(w_std, 0.0)
    row = evaluate_track(silent, truth, FB, w_std, w)
    # 30 ordered silence pairs per frame, weight 0.5, halved: 7.5
    assert row.l_inh == 7.5
    assert row.l_inh_plus == 0.0


def test_report_mean_is_unweighted_over_tracks():
    rows = [EvalRow("a", *[1.0] * 11), EvalRow("b", *[0.0] * 11)]
    assert EvalReport(rows).mean().f_tab == 0.5


def test_report_csv_round_trip():
    rows = [EvalRow("a", *np.linspace(0, 1, 11)), EvalRow("b", *np.linspace(1, 2, 11) / 3)]
    text = EvalReport(rows).to_csv()
    assert text.splitlines()[0] == "track_id,p_tab,r_tab,f_tab,p_pitch,r_pitch,f_pitch,TDR,L_inh,L_inh_plus,E_dp,E_fa"
    assert text.splitlines()[-1].startswith("mean,")
    again = EvalReport.from_csv(text)
    assert again.rows == rows and again.to_csv() == text


def random_prediction(rng, n):
    z = rng.random((126, n))
    # bias toward unison-heavy predictions so duplicates actually occur
    z[FB.combo_frets == -1] *= 0.6
    from tabinhibit.model import infer

    return infer(z, FB)


def random_truth(rng, n):
    return targets_of(FrameTablature(np.where(rng.random((6, n)) < 0.4, -1,
                                              rng.integers(0, 8, size=(6, n))), FB))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_error_counts_match_loops(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    pred, truth = random_prediction(rng, n), random_truth(rng, n)
    e_dp = duplicate_pitch_errors(pred, truth, FB)
    e_fa = false_alarm_errors(pred, truth, FB)
    assert e_dp == brute_duplicate_pitch(pred, truth, FB.tuning, FB.num_frets)
    assert e_fa == brute_false_alarms(pred, truth, FB.tuning, FB.num_frets)
    assert e_dp <= e_fa


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_rate_invariants(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 10))
    pred, truth = random_prediction(rng, n), random_truth(rng, n)
    assert tablature_tp(pred, truth, FB) <= pitch_tp(pred, truth, FB)
    assert 0.0 <= tdr(pred, truth, FB) <= 1.0
    row = evaluate_track(pred, truth, FB, np.zeros((126, 126)), np.zeros((126, 126)))
    for p, r, f in ((row.p_tab, row.r_tab, row.f_tab), (row.p_pitch, row.r_pitch, row.f_pitch)):
        assert 0 <= p <= 1 and 0 <= r <= 1
        assert f == (2 * p * r / (p + r) if p + r else 0.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_moving_a_note_to_its_true_string_never_lowers_tdr(seed):
    rng = np.random.default_rng(seed)
    truth_frets = np.full((6, 1), -1)
    pred_frets = np.full((6, 1), -1)
    # a truth note on string s with a unison elsewhere that the prediction used instead
    s = int(rng.integers(2, 7))
    offset = 4 if s == 5 else 5
    f_true = int(rng.integers(0, 10))
    truth_frets[s - 1, 0] = f_true
    pred_frets[s - 2, 0] = f_true + offset
    for k in range(6):
        if k not in (s - 1, s - 2) and rng.random() < 0.5:
            truth_frets[k, 0] = rng.integers(0, 8)
            pred_frets[k, 0] = truth_frets[k, 0] if rng.random() < 0.6 else rng.integers(0, 8)
    truth = targets_of(FrameTablature(truth_frets, FB))
    before = targets_of(FrameTablature(pred_frets, FB))
    moved = pred_frets.copy()
    moved[s - 2, 0] = -1
    moved[s - 1, 0] = f_true
    after = targets_of(FrameTablature(moved, FB))
    assert tdr(after, truth, FB) >= tdr(before, truth, FB)


def test_argmax_prediction_has_zero_string_constraint_energy():
    rng = np.random.default_rng(0)
    pred = random_prediction(rng, 20)
    assert inhibition_energy(pred.astype(float), string_constraint_weights(FB)) == 0.0
