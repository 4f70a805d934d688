"""Frame-level tablature evaluation, averaged per track."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .fretboard import FretboardConfig
from .inhibition import inhibition_energy


@dataclass
class EvalRow:
    track_id: str
    p_tab: float
    r_tab: float
    f_tab: float
    p_pitch: float
    r_pitch: float
    f_pitch: float
    tdr: float
    l_inh: float
    l_inh_plus: float
    e_dp: float
    e_fa: float


METRIC_COLUMNS = [f.name for f in fields(EvalRow)][1:]
TABLE_HEADER = ["track_id", "p_tab", "r_tab", "f_tab", "p_pitch", "r_pitch", "f_pitch",
                "TDR", "L_inh", "L_inh_plus", "E_dp", "E_fa"]


def _check(pred, truth):
    pred = np.asarray(pred).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if pred.shape != truth.shape:
        raise ValueError(f"prediction shape {pred.shape} != ground truth shape {truth.shape}")
    return pred, truth


def _prf(tp, n_pred, n_true):
    """Precision/recall/f with empty sets scoring 1 only when both sides are empty."""
    both_empty = n_pred == 0 and n_true == 0
    p = tp / n_pred if n_pred else (1.0 if both_empty else 0.0)
    r = tp / n_true if n_true else (1.0 if both_empty else 0.0)
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return float(p), float(r), float(f)


def _sounding(x, config):
    return x[config.combo_frets >= 0]


def pitch_counts(tensor: np.ndarray, config: FretboardConfig) -> np.ndarray:
    """(P, N) number of strings sounding each pitch in each frame."""
    x = np.asarray(tensor).astype(np.int64)
    keep = config.combo_frets >= 0
    m = np.zeros((config.num_pitches, x.shape[1]), dtype=np.int64)
    np.add.at(m, config.combo_pitch_index[keep], x[keep])
    return m


def tablature_prf(pred, truth, config: FretboardConfig):
    pred, truth = _check(pred, truth)
    ps, ts = _sounding(pred, config), _sounding(truth, config)
    return _prf(int(np.sum(ps & ts)), int(ps.sum()), int(ts.sum()))


def multipitch_prf(pred, truth, config: FretboardConfig):
    pred, truth = _check(pred, truth)
    my = pitch_counts(pred, config) > 0
    mt = pitch_counts(truth, config) > 0
    return _prf(int(np.sum(my & mt)), int(my.sum()), int(mt.sum()))


def tablature_tp(pred, truth, config: FretboardConfig) -> int:
    pred, truth = _check(pred, truth)
    return int(np.sum(_sounding(pred, config) & _sounding(truth, config)))


def pitch_tp(pred, truth, config: FretboardConfig) -> int:
    """Pitch matches counted with multiplicity, ``sum(min(m_pred, m_true))``."""
    pred, truth = _check(pred, truth)
    return int(np.minimum(pitch_counts(pred, config), pitch_counts(truth, config)).sum())


def tdr(pred, truth, config: FretboardConfig) -> float:
    """Share of correctly detected pitches that also sit on the correct string."""
    denom = pitch_tp(pred, truth, config)
    if denom == 0:
        return 1.0
    return tablature_tp(pred, truth, config) / denom


def duplicate_pitch_errors(pred, truth, config: FretboardConfig) -> int:
    pred, truth = _check(pred, truth)
    excess = pitch_counts(pred, config) - pitch_counts(truth, config)
    return int(np.maximum(excess, 0).sum())


def false_alarm_errors(pred, truth, config: FretboardConfig) -> int:
    pred, truth = _check(pred, truth)
    return int(np.sum(_sounding(pred, config) & ~_sounding(truth, config)))


def evaluate_track(pred, truth, config: FretboardConfig, w_std, w_boost,
                   track_id: str = "") -> EvalRow:
    pred, truth = _check(pred, truth)
    p_tab, r_tab, f_tab = tablature_prf(pred, truth, config)
    p_pitch, r_pitch, f_pitch = multipitch_prf(pred, truth, config)
    sheet = pred.astype(np.float64)
    return EvalRow(track_id=track_id,
                   p_tab=p_tab, r_tab=r_tab, f_tab=f_tab,
                   p_pitch=p_pitch, r_pitch=r_pitch, f_pitch=f_pitch,
                   tdr=float(tdr(pred, truth, config)),
                   l_inh=inhibition_energy(sheet, w_std),
                   l_inh_plus=inhibition_energy(sheet, w_boost),
                   e_dp=float(duplicate_pitch_errors(pred, truth, config)),
                   e_fa=float(false_alarm_errors(pred, truth, config)))


@dataclass
class EvalReport:
    rows: list[EvalRow]

    def mean(self) -> EvalRow:
        """Unweighted mean over tracks."""
        if not self.rows:
            raise ValueError("empty report")
        vals = {c: float(np.mean([getattr(r, c) for r in self.rows])) for c in METRIC_COLUMNS}
        return EvalRow(track_id="mean", **vals)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TABLE_HEADER)
        for row in self.rows + [self.mean()]:
            d = asdict(row)
            writer.writerow([d["track_id"]] + [repr(float(d[c])) for c in METRIC_COLUMNS])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> EvalReport:
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header != TABLE_HEADER:
            raise ValueError(f"unexpected report columns {header}")
        rows = [EvalRow(rec[0], *map(float, rec[1:])) for rec in reader if rec]
        # the trailing mean row is derived, not stored
        if rows and rows[-1].track_id == "mean":
            rows = rows[:-1]
        return cls(rows)

    def save(self, path):
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> EvalReport:
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def evaluate_corpus(preds, truths, config: FretboardConfig, w_std, w_boost,
                    track_ids=None) -> EvalReport:
    track_ids = track_ids or [str(k) for k in range(len(preds))]
    return EvalReport([evaluate_track(p, t, config, w_std, w_boost, track_id=tid)
                       for p, t, tid in zip(preds, truths, track_ids)])
