"""Output-layer formulations, their losses and a small trainable trunk.

Two heads share the same trunk (affine -> rectifier -> affine to C logits):

* ``softmax``: one softmax per string block, trained with summed
  categorical cross entropy.
* ``logistic``: an independent sigmoid per combination, trained with binary
  cross entropy plus ``lam`` times the inhibition energy of the activations.

Both heads are decoded with a per-string argmax.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import persist
from .fretboard import FretboardConfig
from .inhibition import InhibitionMatrix, inhibition_energy, inhibition_gradient

logger = logging.getLogger(__name__)

SOFTMAX = "softmax"
LOGISTIC = "logistic"
HEADS = (SOFTMAX, LOGISTIC)

EPS = 1e-12
PARAM_NAMES = ("W1", "b1", "W2", "b2")
CHECKPOINT_MAGIC = b"TABCKPT1"
CHECKPOINT_VERSION = 1


class ModelConfigError(ValueError):
    pass


class NumericalError(FloatingPointError):
    """Non-finite value produced inside the network."""


@dataclass
class ModelConfig:
    input_dim: int
    hidden_dim: int = 128
    head: str = LOGISTIC
    lam: float = 0.0
    inhibition: InhibitionMatrix | None = None
    seed: int = 0
    fretboard: FretboardConfig = field(default_factory=FretboardConfig)

    def __post_init__(self):
        if self.head not in HEADS:
            raise ModelConfigError(f"unknown head {self.head!r}, expected one of {HEADS}")
        if self.input_dim < 1 or self.hidden_dim < 1:
            raise ModelConfigError("input_dim and hidden_dim must be positive")
        if self.lam < 0:
            raise ModelConfigError(f"lambda must be nonnegative, got {self.lam}")
        if self.head == SOFTMAX and self.inhibition is not None:
            raise ModelConfigError("the per-string softmax head cannot take an inhibition objective")
        if self.head == SOFTMAX and self.lam != 0:
            raise ModelConfigError("lambda must be 0 for the per-string softmax head")
        if self.lam > 0 and self.inhibition is None:
            raise ModelConfigError("lambda > 0 requires an inhibition matrix")
        if self.inhibition is not None and self.inhibition.dim != self.num_outputs:
            raise ModelConfigError(
                f"inhibition matrix is {self.inhibition.dim}-dimensional, head has {self.num_outputs} outputs")

    @property
    def num_outputs(self) -> int:
        return self.fretboard.num_combos

    def to_dict(self) -> dict:
        inh = self.inhibition
        return {"input_dim": self.input_dim, "hidden_dim": self.hidden_dim, "head": self.head,
                "lam": float(self.lam), "seed": self.seed,
                "fretboard": self.fretboard.to_dict(),
                "inhibition": None if inh is None else {"boost": inh.boost, "source": inh.source}}


def init_params(config: ModelConfig, rng: np.random.Generator | None = None) -> dict:
    """Uniform init in [-r, r], r = sqrt(6 / (fan_in + fan_out)), zero biases."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    d, h, c = config.input_dim, config.hidden_dim, config.num_outputs

    def uniform(fan_out, fan_in):
        r = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-r, r, size=(fan_out, fan_in))

    return {"W1": uniform(h, d), "b1": np.zeros(h), "W2": uniform(c, h), "b2": np.zeros(c)}


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def block_softmax(logits: np.ndarray, fretboard: FretboardConfig) -> np.ndarray:
    n = logits.shape[1]
    blocks = logits.reshape(fretboard.num_strings, fretboard.block_size, n)
    e = np.exp(blocks - blocks.max(axis=1, keepdims=True))
    return (e / e.sum(axis=1, keepdims=True)).reshape(logits.shape)


def _require_finite(x, where):
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite values in {where}")


def _trunk(params, features):
    # non-finite results are reported by the callers, layer by layer
    with np.errstate(invalid="ignore", over="ignore"):
        pre = params["W1"] @ features + params["b1"][:, None]
        hidden = np.maximum(pre, 0.0)
        logits = params["W2"] @ hidden + params["b2"][:, None]
    return pre, hidden, logits


def forward(params: dict, features: np.ndarray, config: ModelConfig):
    """Return ``(logits, activations)`` for a (input_dim, N) feature sheet."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != config.input_dim:
        raise ValueError(f"features must be ({config.input_dim}, N), got {features.shape}")
    if not np.all(np.isfinite(features)):
        raise ValueError("features contain non-finite values")
    _, _, logits = _trunk(params, features)
    _require_finite(logits, "output projection")
    if config.head == SOFTMAX:
        return logits, block_softmax(logits, config.fretboard)
    return logits, sigmoid(logits)


def loss_cce(activations, targets, fretboard: FretboardConfig) -> float:
    z = np.asarray(activations, dtype=np.float64)
    t = np.asarray(targets).astype(bool)
    n = z.shape[1]
    if n == 0:
        return 0.0
    # exactly one target per string block per frame
    return float(-np.sum(np.log(np.clip(z[t], EPS, 1.0))) / n)


def loss_bce(activations, targets) -> float:
    z = np.clip(np.asarray(activations, dtype=np.float64), EPS, 1.0 - EPS)
    t = np.asarray(targets, dtype=np.float64)
    n = z.shape[1]
    if n == 0:
        return 0.0
    return float(-np.sum(t * np.log(z) + (1.0 - t) * np.log(1.0 - z)) / n)


def loss_total(activations, targets, w, lam: float) -> float:
    total = loss_bce(activations, targets)
    if lam:
        total += lam * inhibition_energy(activations, w)
    return total


def objective(activations, targets, config: ModelConfig) -> float:
    """Configured training loss for an activation sheet."""
    if config.head == SOFTMAX:
        return loss_cce(activations, targets, config.fretboard)
    if config.lam:
        return loss_total(activations, targets, config.inhibition, config.lam)
    return loss_bce(activations, targets)


def _logit_grad(logits, activations, targets, config):
    z = activations
    t = np.asarray(targets, dtype=np.float64)
    n = z.shape[1]
    if config.head == SOFTMAX:
        fb = config.fretboard
        grad = (z - t).reshape(fb.num_strings, fb.block_size, n)
        # clamped targets contribute no gradient
        target_z = (z * t).reshape(fb.num_strings, fb.block_size, n).sum(axis=1)
        grad = grad * (target_z >= EPS)[:, None, :]
        return grad.reshape(z.shape) / n
    live = (z > EPS) & (z < 1.0 - EPS)
    grad = np.where(live, z - t, 0.0) / n
    if config.lam:
        grad = grad + config.lam * inhibition_gradient(z, config.inhibition) * z * (1.0 - z)
    return grad


def backward(params: dict, features: np.ndarray, targets: np.ndarray, config: ModelConfig):
    """Configured loss and its gradient with respect to every parameter."""
    features = np.asarray(features, dtype=np.float64)
    pre, hidden, logits = _trunk(params, features)
    _require_finite(pre, "hidden layer")
    _require_finite(logits, "output projection")
    if config.head == SOFTMAX:
        z = block_softmax(logits, config.fretboard)
    else:
        z = sigmoid(logits)
    loss = objective(z, targets, config)
    _require_finite(loss, "loss")

    d_logits = _logit_grad(logits, z, targets, config)
    d_hidden = params["W2"].T @ d_logits
    d_pre = d_hidden * (pre > 0)
    grads = {"W2": d_logits @ hidden.T,
             "b2": d_logits.sum(axis=1),
             "W1": d_pre @ features.T,
             "b1": d_pre.sum(axis=1)}
    for name, g in grads.items():
        _require_finite(g, f"gradient of {name}")
    return loss, grads


def infer(activations: np.ndarray, fretboard: FretboardConfig) -> np.ndarray:
    """Binary prediction with the single highest class per string block.

    ``argmax`` returns the first maximum, so ties resolve to the lowest fret
    class (silence first).
    """
    z = np.asarray(activations)
    n = z.shape[1]
    blocks = z.reshape(fretboard.num_strings, fretboard.block_size, n)
    best = blocks.argmax(axis=1)
    pred = np.zeros_like(blocks, dtype=np.uint8)
    np.put_along_axis(pred, best[:, None, :], 1, axis=1)
    return pred.reshape(z.shape)


def predict(params, features, config: ModelConfig) -> np.ndarray:
    _, z = forward(params, features, config)
    return infer(z, config.fretboard)


# ---------------------------------------------------------------------------
# Training


@dataclass
class Schedule:
    batch_size: int = 8
    seq_len: int = 32
    iterations: int = 2000
    eval_every: int = 100
    step_size: float = 0.05
    clip_norm: float | None = 5.0

    def to_dict(self):
        return {"batch_size": self.batch_size, "seq_len": self.seq_len,
                "iterations": self.iterations, "eval_every": self.eval_every,
                "step_size": self.step_size, "clip_norm": self.clip_norm}


@dataclass
class TrainResult:
    params: dict
    iteration: int
    val_f_tab: float
    history: list[dict]


def _mean_f_tab(params, dataset, config):
    from .metrics import tablature_prf

    scores = [tablature_prf(predict(params, x, config), t, config.fretboard)[2] for x, t in dataset]
    return float(np.mean(scores))


def _sample_batch(dataset, schedule, rng):
    xs, ts = [], []
    for k in rng.integers(len(dataset), size=schedule.batch_size):
        x, t = dataset[k]
        n = x.shape[1]
        if n > schedule.seq_len:
            start = int(rng.integers(n - schedule.seq_len + 1))
            x, t = x[:, start:start + schedule.seq_len], t[:, start:start + schedule.seq_len]
        xs.append(x)
        ts.append(t)
    return np.concatenate(xs, axis=1), np.concatenate(ts, axis=1)


def train(train_set, val_set, config: ModelConfig, schedule: Schedule | None = None,
          params: dict | None = None) -> TrainResult:
    """Minibatch gradient descent; keeps the checkpoint with the best validation f-measure.

    ``train_set`` and ``val_set`` are sequences of ``(features, targets)`` pairs.
    """
    schedule = schedule or Schedule()
    if not train_set or not val_set:
        raise ValueError("training and validation splits must be nonempty")
    rng = np.random.default_rng(config.seed)
    params = copy.deepcopy(params) if params is not None else init_params(config, rng)

    best = None
    history = []
    running = []
    for it in range(1, schedule.iterations + 1):
        x, t = _sample_batch(train_set, schedule, rng)
        loss, grads = backward(params, x, t, config)
        running.append(loss)
        scale = schedule.step_size
        if schedule.clip_norm is not None:
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if norm > schedule.clip_norm:
                scale *= schedule.clip_norm / norm
        for name in PARAM_NAMES:
            params[name] -= scale * grads[name]

        if it % schedule.eval_every == 0 or it == schedule.iterations:
            f_val = _mean_f_tab(params, val_set, config)
            entry = {"iteration": it, "train_loss": float(np.mean(running)), "val_f_tab": f_val}
            history.append(entry)
            running = []
            logger.debug("iter %d loss %.4f val f_tab %.4f", it, entry["train_loss"], f_val)
            if best is None or f_val > best.val_f_tab:
                best = TrainResult(copy.deepcopy(params), it, f_val, history)
    best.history = history
    return best


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(path, params: dict, config: ModelConfig, iteration: int = 0,
                    metrics: dict | None = None):
    header = {"version": CHECKPOINT_VERSION, "config": config.to_dict(),
              "iteration": int(iteration), "metrics": metrics or {}}
    arrays = {name: params[name] for name in PARAM_NAMES}
    if config.inhibition is not None:
        arrays["inhibition"] = config.inhibition.weights
    Path(path).write_bytes(persist.dumps_binary(header, arrays, magic=CHECKPOINT_MAGIC))


def load_checkpoint(path):
    """Return ``(params, config, iteration, metrics)``."""
    header, arrays = persist.loads_binary(Path(path).read_bytes(), magic=CHECKPOINT_MAGIC)
    if header.get("version") != CHECKPOINT_VERSION:
        raise persist.FormatError(f"unsupported checkpoint version {header.get('version')}")
    cfg = header["config"]
    fretboard = FretboardConfig.from_dict(cfg["fretboard"])
    inhibition = None
    if cfg["inhibition"] is not None:
        inhibition = InhibitionMatrix(weights=arrays["inhibition"], boost=cfg["inhibition"]["boost"],
                                      source=cfg["inhibition"]["source"], config=fretboard)
    config = ModelConfig(input_dim=cfg["input_dim"], hidden_dim=cfg["hidden_dim"], head=cfg["head"],
                         lam=cfg["lam"], inhibition=inhibition, seed=cfg["seed"], fretboard=fretboard)
    params = {name: arrays[name] for name in PARAM_NAMES}
    return params, config, header["iteration"], header["metrics"]
