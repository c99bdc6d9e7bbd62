"""Two-layer regression head: affine -> ReLU -> affine -> scalar score.

Gradients of the mean-squared-error objective are analytic; a central
finite-difference check is provided for verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from talkqa.errors import TrainingError


@dataclass
class RegressorParams:
    w1: np.ndarray  # (hidden, dim)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float
    activation: str = "relu"

    def __post_init__(self):
        hidden, dim = self.w1.shape
        if self.b1.shape != (hidden,) or self.w2.shape != (hidden,):
            raise TrainingError(
                f"inconsistent shapes: w1 {self.w1.shape}, b1 {self.b1.shape}, w2 {self.w2.shape}"
            )
        if self.activation != "relu":
            raise TrainingError(f"unsupported activation {self.activation!r}")

    @property
    def dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    def copy(self) -> "RegressorParams":
        return RegressorParams(
            w1=self.w1.copy(), b1=self.b1.copy(), w2=self.w2.copy(), b2=float(self.b2)
        )


def init_params(dim: int, hidden: int = 128, rng: np.random.Generator | None = None) -> RegressorParams:
    """Uniform initialization in +-sqrt(6 / (fan_in + fan_out)); zero biases."""
    if dim < 1:
        raise TrainingError(f"input dimension must be >= 1, got {dim}")
    rng = rng if rng is not None else np.random.default_rng(0)
    lim1 = np.sqrt(6.0 / (dim + hidden))
    lim2 = np.sqrt(6.0 / (hidden + 1))
    return RegressorParams(
        w1=rng.uniform(-lim1, lim1, size=(hidden, dim)),
        b1=np.zeros(hidden),
        w2=rng.uniform(-lim2, lim2, size=hidden),
        b2=0.0,
    )


def forward(params: RegressorParams, x) -> np.ndarray:
    """Predicted score(s); accepts a single vector or an (n, dim) batch."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != params.dim:
        raise TrainingError(f"input dim {x.shape[1]} != model dim {params.dim}")
    hidden = np.maximum(x @ params.w1.T + params.b1, 0.0)
    out = hidden @ params.w2 + params.b2
    return out[0] if single else out


def mse_loss_and_grads(params: RegressorParams, x, y) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared error over the batch and its analytic parameter gradients."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise TrainingError(f"batch shapes mismatch: x {x.shape}, y {y.shape}")
    n = x.shape[0]
    pre = x @ params.w1.T + params.b1
    hidden = np.maximum(pre, 0.0)
    pred = hidden @ params.w2 + params.b2
    err = pred - y
    loss = float(err @ err) / n

    d_pred = 2.0 * err / n
    d_w2 = hidden.T @ d_pred
    d_b2 = float(d_pred.sum())
    d_hidden = np.outer(d_pred, params.w2)
    d_pre = d_hidden * (pre > 0.0)
    d_w1 = d_pre.T @ x
    d_b1 = d_pre.sum(axis=0)
    return loss, {"w1": d_w1, "b1": d_b1, "w2": d_w2, "b2": d_b2}


def _flatten(params: RegressorParams) -> np.ndarray:
    return np.concatenate([params.w1.ravel(), params.b1, params.w2, [params.b2]])


def _unflatten(flat: np.ndarray, like: RegressorParams) -> RegressorParams:
    h, d = like.w1.shape
    i = 0
    w1 = flat[i : i + h * d].reshape(h, d)
    i += h * d
    b1 = flat[i : i + h]
    i += h
    w2 = flat[i : i + h]
    i += h
    return RegressorParams(w1=w1.copy(), b1=b1.copy(), w2=w2.copy(), b2=float(flat[i]))


def gradient_check(
    params: RegressorParams, x, y, step: float = 1e-5
) -> float:
    """Max relative error between analytic and central-finite-difference gradients."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _, grads = mse_loss_and_grads(params, x, y)
    analytic = np.concatenate(
        [grads["w1"].ravel(), grads["b1"], grads["w2"], [grads["b2"]]]
    )
    flat = _flatten(params)
    numeric = np.empty_like(flat)
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + step
        loss_plus, _ = mse_loss_and_grads(_unflatten(bumped, params), x, y)
        bumped[i] = flat[i] - step
        loss_minus, _ = mse_loss_and_grads(_unflatten(bumped, params), x, y)
        numeric[i] = (loss_plus - loss_minus) / (2.0 * step)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))
