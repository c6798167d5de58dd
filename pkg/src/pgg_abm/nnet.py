"""One-hidden-layer rectifier regressor trained by mini-batch SGD.

Training halts at the first epoch whose held-out R^2 reaches
``accuracy_threshold``. A deliberately sub-perfect threshold leaves each
agent with its own, slightly wrong, picture of its utility landscape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
STOP_THRESHOLD = "threshold_reached"
STOP_MAX_EPOCHS = "max_epochs"
STOP_LR_FLOOR = "lr_floor"

# R^2 convention for zero-variance targets
ZERO_VARIANCE_MSE = 1e-8


class TrainingConfigError(ValueError):
    pass


class TrainingError(RuntimeError):
    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int = 2
    hidden_units: int = 100
    learning_rate_init: float = 0.01
    lr_decay_factor: float = 0.2
    patience_epochs: int = 10
    max_epochs: int = 500
    batch_size: int = 32
    validation_fraction: float = 0.2
    accuracy_threshold: float = 0.99
    rng_seed: int = 0
    momentum: float = 0.9
    lr_floor: float = 1e-6
    # minimum validation-score gain that counts as an improvement
    tol: float = 0.0

    def __post_init__(self):
        if self.input_dim < 1:
            raise TrainingConfigError("input_dim must be >= 1")
        if self.hidden_units < 1:
            raise TrainingConfigError("hidden_units must be >= 1")
        if not self.learning_rate_init > 0:
            raise TrainingConfigError("learning_rate_init must be positive")
        if not 0.0 < self.lr_decay_factor < 1.0:
            raise TrainingConfigError("lr_decay_factor must lie in (0, 1)")
        if self.patience_epochs < 1 or self.max_epochs < 1 or self.batch_size < 1:
            raise TrainingConfigError("patience_epochs, max_epochs and batch_size must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise TrainingConfigError("validation_fraction must lie in (0, 1)")
        # thresholds above 1 are accepted so that exhaustion can be forced
        if not self.accuracy_threshold > 0.0:
            raise TrainingConfigError("accuracy_threshold must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise TrainingConfigError("momentum must lie in [0, 1)")


@dataclass
class Network:
    weights_hidden: np.ndarray
    bias_hidden: np.ndarray
    weights_out: np.ndarray
    bias_out: float
    activation: str = "relu"

    @property
    def input_dim(self) -> int:
        return self.weights_hidden.shape[0]

    @property
    def hidden_units(self) -> int:
        return self.weights_hidden.shape[1]

    @classmethod
    def zeros(cls, input_dim: int, hidden_units: int) -> "Network":
        return cls(np.zeros((input_dim, hidden_units)), np.zeros(hidden_units), np.zeros(hidden_units), 0.0)

    @classmethod
    def initialize(cls, cfg: NetworkConfig, rng: np.random.Generator | None = None) -> "Network":
        """Glorot-uniform weights and biases."""
        if rng is None:
            rng = np.random.default_rng(cfg.rng_seed)
        d, h = cfg.input_dim, cfg.hidden_units
        b1 = math.sqrt(6.0 / (d + h))
        b2 = math.sqrt(6.0 / (h + 1))
        return cls(
            rng.uniform(-b1, b1, (d, h)),
            rng.uniform(-b1, b1, h),
            rng.uniform(-b2, b2, h),
            float(rng.uniform(-b2, b2)),
        )

    def copy(self) -> "Network":
        return replace(
            self,
            weights_hidden=self.weights_hidden.copy(),
            bias_hidden=self.bias_hidden.copy(),
            weights_out=self.weights_out.copy(),
        )

    def parameters(self) -> list:
        return [self.weights_hidden, self.bias_hidden, self.weights_out, np.array([self.bias_out])]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.input_dim:
            raise ValueError(f"expected inputs of width {self.input_dim}, got {X.shape[1]}")
        hidden = np.maximum(0.0, X @ self.weights_hidden + self.bias_hidden)
        return hidden @ self.weights_out + self.bias_out


@dataclass
class TrainReport:
    epochs_run: int
    final_validation_score: float
    stopped_by: str
    validation_scores: list = field(default_factory=list)
    learning_rates: list = field(default_factory=list)


def forward(net: Network, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != net.input_dim:
        raise ValueError(f"expected an input vector of length {net.input_dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite entries")
    return float(net.predict(x[None, :])[0])


def gradient(net: Network, x, target: float) -> Network:
    """Gradient of ``(forward(net, x) - target)**2`` w.r.t. every parameter.

    Returned as a :class:`Network` whose fields hold the partial derivatives.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != net.input_dim:
        raise ValueError(f"expected an input vector of length {net.input_dim}, got shape {x.shape}")
    if not (np.all(np.isfinite(x)) and math.isfinite(target)):
        raise ValueError("sample contains non-finite entries")
    pre = x @ net.weights_hidden + net.bias_hidden
    hidden = np.maximum(0.0, pre)
    err = 2.0 * (hidden @ net.weights_out + net.bias_out - target)
    d_pre = err * net.weights_out * (pre > 0)
    return Network(np.outer(x, d_pre), d_pre, err * hidden, float(err))


def r2_score(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res / y_true.size < ZERO_VARIANCE_MSE else 0.0
    return 1.0 - ss_res / ss_tot


def train(net: Network, samples, cfg: NetworkConfig) -> TrainReport:
    """Fit ``net`` in place to ``samples``, a sequence of (input, target) pairs
    or an ``(X, y)`` tuple of arrays."""
    X, y = _as_arrays(samples, net.input_dim)
    if len(y) < 10:
        raise TrainingConfigError(f"need at least 10 samples, got {len(y)}")
    n_val = int(len(y) * cfg.validation_fraction)
    if n_val < 1 or n_val >= len(y):
        raise TrainingConfigError(
            f"validation_fraction {cfg.validation_fraction} leaves an empty split for {len(y)} samples"
        )
    rng = np.random.default_rng(cfg.rng_seed)
    perm = rng.permutation(len(y))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    X_val, y_val = X[val_idx], y[val_idx]
    X_tr, y_tr = X[train_idx], y[train_idx]
    n_tr = len(y_tr)
    # progress is validation MSE over target variance (R^2 - 1 for non-constant
    # targets), which keeps improving on constant targets where R^2 is flat
    val_var = float(y_val.var()) or 1.0

    W1, b1, w2 = net.weights_hidden, net.bias_hidden, net.weights_out
    b2 = net.bias_out
    vel = [np.zeros_like(W1), np.zeros_like(b1), np.zeros_like(w2), 0.0]
    mom = cfg.momentum

    lr = cfg.learning_rate_init
    best = -math.inf
    stall = 0
    scores, rates = [], []
    stopped_by = STOP_MAX_EPOCHS
    score = -math.inf
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        rates.append(lr)
        order = rng.permutation(n_tr)
        sq_err = 0.0
        # overflow is reported below as divergence, not as a numpy warning
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n_tr, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                xb, yb = X_tr[idx], y_tr[idx]
                pre = xb @ W1 + b1
                hidden = np.maximum(0.0, pre)
                resid = hidden @ w2 + b2 - yb
                sq_err += float(resid @ resid)
                d_out = (2.0 / len(idx)) * resid
                g_w2 = hidden.T @ d_out
                g_b2 = float(d_out.sum())
                d_pre = np.outer(d_out, w2)
                d_pre *= pre > 0
                g_W1 = xb.T @ d_pre
                g_b1 = d_pre.sum(axis=0)
                if mom:
                    vel[0] = mom * vel[0] - lr * g_W1
                    vel[1] = mom * vel[1] - lr * g_b1
                    vel[2] = mom * vel[2] - lr * g_w2
                    vel[3] = mom * vel[3] - lr * g_b2
                    W1 += vel[0]
                    b1 += vel[1]
                    w2 += vel[2]
                    b2 += vel[3]
                else:
                    W1 -= lr * g_W1
                    b1 -= lr * g_b1
                    w2 -= lr * g_w2
                    b2 -= lr * g_b2
        net.bias_out = float(b2)
        if not math.isfinite(sq_err) or not net.is_finite():
            raise TrainingError(f"training diverged (non-finite loss) in epoch {epoch}", epoch)
        with np.errstate(over="ignore", invalid="ignore"):
            pred = net.predict(X_val)
            val_mse = float(np.mean((pred - y_val) ** 2))
        if not math.isfinite(val_mse):
            raise TrainingError(f"training diverged (non-finite validation loss) in epoch {epoch}", epoch)
        score = r2_score(y_val, pred)
        scores.append(score)
        if score >= cfg.accuracy_threshold:
            stopped_by = STOP_THRESHOLD
            break
        progress = -val_mse / val_var
        if progress > best + cfg.tol:
            best = progress
            stall = 0
        else:
            stall += 1
            if stall >= cfg.patience_epochs:
                stall = 0
                lr *= cfg.lr_decay_factor
                if lr < cfg.lr_floor:
                    stopped_by = STOP_LR_FLOOR
                    break
    return TrainReport(epoch, score, stopped_by, scores, rates)


def _as_arrays(samples, input_dim: int):
    if isinstance(samples, tuple) and len(samples) == 2 and isinstance(samples[0], np.ndarray):
        X, y = samples
    else:
        samples = list(samples)
        X = np.array([np.asarray(s[0], dtype=float) for s in samples])
        y = np.array([float(s[1]) for s in samples])
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[1] != input_dim:
        raise ValueError(f"expected inputs of width {input_dim}, got {X.shape[1]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("samples contain non-finite values")
    return X, y


def save_network(net: Network, path) -> None:
    """Write parameters as text: a header with dimensions, then row-major values."""
    d, h = net.input_dim, net.hidden_units
    flat = np.concatenate([net.weights_hidden.ravel(), net.bias_hidden, net.weights_out, [net.bias_out]])
    lines = [f"pgg_abm-mlp v{FORMAT_VERSION} input_dim={d} hidden_units={h} activation={net.activation}"]
    lines += [repr(float(v)) for v in flat]
    Path(path).write_text("\n".join(lines) + "\n")


def load_network(path) -> Network:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split()
    if header[0] != "pgg_abm-mlp" or header[1] != f"v{FORMAT_VERSION}":
        raise ValueError(f"unrecognised network file header: {lines[0]!r}")
    fields = dict(item.split("=", 1) for item in header[2:])
    d, h = int(fields["input_dim"]), int(fields["hidden_units"])
    flat = np.array([float(v) for v in lines[1:]])
    if flat.size != d * h + 2 * h + 1:
        raise ValueError(f"expected {d * h + 2 * h + 1} parameters, found {flat.size}")
    W1 = flat[: d * h].reshape(d, h)
    b1 = flat[d * h: d * h + h]
    w2 = flat[d * h + h: d * h + 2 * h]
    return Network(W1.copy(), b1.copy(), w2.copy(), float(flat[-1]), fields.get("activation", "relu"))
