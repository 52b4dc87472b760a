"""Minimal neural kernel: dense nets, Adam, and three loss heads.

Everything is float64 numpy with full-batch training steps, which makes
training bit-deterministic given (seed, data order, epochs).  Heads:

* ``linear``   - regression outputs, squared-error loss.
* ``gaussian`` - mean and diagonal covariance of a Gaussian; the covariance
  passes through elu(z)+1+1e-6 so it stays strictly positive.  Trained with
  the Gaussian negative log likelihood.
* ``logistic`` - a single probability, trained with binary cross entropy
  (computed from logits for stability).

No external ML framework is used anywhere.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from skillplan.util import rng_from

VAR_FLOOR = 1e-6
LOSSES = ("mse", "gaussian_nll", "bce")
HEADS = ("linear", "gaussian", "logistic")
LOG_2PI = float(np.log(2.0 * np.pi))


class TrainingDiverged(RuntimeError):
    """Training hit a non-finite loss; carries (epoch, lr) diagnostics."""

    def __init__(self, epoch: int, lr: float, loss: float):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch} (lr={lr})")
        self.epoch = epoch
        self.lr = lr


@dataclass
class NormStats:
    """Per-dimension shift and scale; degenerate dimensions get scale 1."""

    shift: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, data: np.ndarray) -> "NormStats":
        data = np.asarray(data, dtype=np.float64)
        shift = data.mean(axis=0)
        scale = data.std(axis=0)
        scale = np.where(scale < 1e-12, 1.0, scale)
        return cls(shift, scale)

    @classmethod
    def identity(cls, dim: int) -> "NormStats":
        return cls(np.zeros(dim), np.ones(dim))

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.shift) / self.scale

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) * self.scale + self.shift

    def to_bytes(self) -> bytes:
        dim = len(self.shift)
        return struct.pack("<I", dim) + self.shift.astype("<f8").tobytes() + self.scale.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes, offset: int = 0) -> tuple["NormStats", int]:
        (dim,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        shift = np.frombuffer(blob, "<f8", dim, offset).copy()
        offset += dim * 8
        scale = np.frombuffer(blob, "<f8", dim, offset).copy()
        offset += dim * 8
        return cls(shift, scale), offset


def _elu_plus_one(z: np.ndarray) -> np.ndarray:
    out = np.where(z > 0, z + 1.0, np.exp(np.minimum(z, 0.0)))
    return out + VAR_FLOOR


def _elu_plus_one_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Branch on sign so neither exponential can overflow.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Mlp:
    """A fully-connected net with rectifier hidden layers and a typed head.

    ``sizes`` are (input, hidden..., raw_output).  For the gaussian head the
    raw output width is twice the target dimension (mean and raw variance).
    """

    def __init__(self, sizes: tuple[int, ...], head: str = "linear"):
        if head not in HEADS:
            raise ValueError(f"unknown head {head!r}")
        if head == "logistic" and sizes[-1] != 1:
            raise ValueError("logistic head needs a single raw output")
        if head == "gaussian" and sizes[-1] % 2 != 0:
            raise ValueError("gaussian head needs an even raw output width")
        self.sizes = tuple(int(s) for s in sizes)
        self.head = head
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes, self.sizes[1:]):
            self.weights.append(np.zeros((fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    # -- parameters ---------------------------------------------------------

    def init_params(self, seed: int) -> None:
        rng = rng_from("mlp-init", seed, self.sizes, self.head)
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes, self.sizes[1:])):
            last = i == len(self.sizes) - 2
            # Zero-width inputs occur for unconditioned generators (skills
            # with an empty scope); only the bias path carries signal then.
            std = np.sqrt((1.0 if last else 2.0) / max(fan_in, 1))
            self.weights[i] = rng.normal(0.0, std, size=(fan_in, fan_out))
            self.biases[i] = np.zeros(fan_out)

    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def set_params(self, params: list[np.ndarray]) -> None:
        n = len(self.weights)
        self.weights = [np.array(p, dtype=np.float64) for p in params[:n]]
        self.biases = [np.array(p, dtype=np.float64) for p in params[n:]]

    # -- forward ------------------------------------------------------------

    def _forward(self, X: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        X = np.asarray(X, dtype=np.float64)
        hs = [X]
        zs = []
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = hs[-1] @ W + b
            zs.append(z)
            if i < len(self.weights) - 1:
                hs.append(np.maximum(z, 0.0))
            else:
                hs.append(z)
        return zs, hs

    def raw_output(self, X: np.ndarray) -> np.ndarray:
        return self._forward(np.atleast_2d(X))[0][-1]

    def forward_1d(self, x: np.ndarray) -> np.ndarray:
        """Raw output for a single input row (planner hot path)."""
        h = x
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W
            h += b
            if i < last:
                np.maximum(h, 0.0, out=h)
        return h

    def fold_normalization(self, in_stats, out_stats=None) -> "Mlp":
        """Compose input (and linear-output) normalization into the weights.

        (x - shift)/scale @ W0 + b0 == x @ (W0/scale) + (b0 - (shift/scale)@W0),
        and for a linear head, denormalize(z) == z*scale_out + shift_out folds
        into the last layer the same way.  Exact in exact arithmetic; used
        only for inference-time copies, never for what gets serialized.
        """
        net = self.copy()
        if in_stats is not None:
            net.weights[0] = self.weights[0] / in_stats.scale[:, None]
            net.biases[0] = self.biases[0] - in_stats.shift @ net.weights[0]
        if out_stats is not None:
            if self.head != "linear":
                raise ValueError("output folding needs a linear head")
            net.weights[-1] = net.weights[-1] * out_stats.scale[None, :]
            net.biases[-1] = net.biases[-1] * out_stats.scale + out_stats.shift
        return net

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Head-transformed output: values, (mean, var) stacked, or p."""
        z = self.raw_output(X)
        if self.head == "linear":
            return z
        if self.head == "gaussian":
            d = self.sizes[-1] // 2
            return np.concatenate([z[:, :d], _elu_plus_one(z[:, d:])], axis=1)
        return _sigmoid(z)

    def gaussian_params(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.head != "gaussian":
            raise ValueError("not a gaussian-head network")
        out = self.predict(np.atleast_2d(x))[0]
        d = self.sizes[-1] // 2
        return out[:d], out[d:]

    # -- loss and gradients ---------------------------------------------------

    def loss_and_grads(
        self, X: np.ndarray, Y: np.ndarray, loss: str
    ) -> tuple[float, list[np.ndarray]]:
        if loss not in LOSSES:
            raise ValueError(f"unknown loss {loss!r}")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.asarray(Y, dtype=np.float64)
        if loss == "bce":
            Y = Y.reshape(-1, 1)
        else:
            Y = np.atleast_2d(Y)
        n = X.shape[0]
        zs, hs = self._forward(X)
        z_out = zs[-1]

        if loss == "mse":
            diff = z_out - Y
            value = float(np.mean(diff**2))
            delta = 2.0 * diff / diff.size
        elif loss == "gaussian_nll":
            d = self.sizes[-1] // 2
            mu, zv = z_out[:, :d], z_out[:, d:]
            var = _elu_plus_one(zv)
            resid = Y - mu
            value = float(
                np.mean(0.5 * np.sum(LOG_2PI + np.log(var) + resid**2 / var, axis=1))
            )
            dmu = -resid / var / n
            dvar = 0.5 * (1.0 / var - resid**2 / var**2) / n
            dzv = dvar * _elu_plus_one_grad(zv)
            delta = np.concatenate([dmu, dzv], axis=1)
        else:  # bce from logits
            z = z_out
            value = float(
                np.mean(np.maximum(z, 0.0) - z * Y + np.log1p(np.exp(-np.abs(z))))
            )
            delta = (_sigmoid(z) - Y) / n

        grads_W: list[np.ndarray] = [np.empty(0)] * len(self.weights)
        grads_b: list[np.ndarray] = [np.empty(0)] * len(self.biases)
        for i in reversed(range(len(self.weights))):
            grads_W[i] = hs[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (zs[i - 1] > 0.0)
        return value, grads_W + grads_b

    def loss_value(self, X: np.ndarray, Y: np.ndarray, loss: str) -> float:
        return self.loss_and_grads(X, Y, loss)[0]

    def copy(self) -> "Mlp":
        net = Mlp(self.sizes, self.head)
        net.set_params([p.copy() for p in self.params()])
        return net


@dataclass
class AdamState:
    """First/second moment accumulators for one parameter list."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def init(self, params: list[np.ndarray]) -> None:
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def update(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        self.step_count += 1
        t = self.step_count
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1**t)
            v_hat = self.v[i] / (1 - self.beta2**t)
            out.append(p - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
        return out


def train(
    net: Mlp,
    X: np.ndarray,
    Y: np.ndarray,
    loss: str,
    epochs: int,
    lr: float,
    seed: int,
    record_every: int = 100,
) -> list[float]:
    """Full-batch Adam training; returns the sampled loss curve.

    The seed (re)initializes the parameters, so two calls with equal inputs
    produce bit-identical networks.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("empty training data")
    net.init_params(seed)
    adam = AdamState(lr=lr)
    adam.init(net.params())
    curve: list[float] = []
    value = float("nan")
    for epoch in range(epochs):
        value, grads = net.loss_and_grads(X, Y, loss)
        if not np.isfinite(value):
            raise TrainingDiverged(epoch, lr, value)
        if epoch % record_every == 0:
            curve.append(value)
        net.set_params(adam.update(net.params(), grads))
    curve.append(net.loss_value(X, Y, loss))
    return curve


def grad_check(
    net: Mlp, loss: str, X: np.ndarray, Y: np.ndarray, step: float = 1e-5
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    _, grads = net.loss_and_grads(X, Y, loss)
    params = net.params()
    worst = 0.0
    for pi, p in enumerate(params):
        flat = p.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up = net.loss_value(X, Y, loss)
            flat[j] = orig - step
            down = net.loss_value(X, Y, loss)
            flat[j] = orig
            numeric = (up - down) / (2 * step)
            analytic = grads[pi].reshape(-1)[j]
            denom = max(1.0, abs(numeric), abs(analytic))
            worst = max(worst, abs(numeric - analytic) / denom)
    return worst


def sample_gaussian(
    mean: np.ndarray, diag_cov: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw mean + sqrt(diag_cov) * standard normal."""
    mean = np.asarray(mean, dtype=np.float64)
    diag_cov = np.asarray(diag_cov, dtype=np.float64)
    if np.any(diag_cov <= 0):
        raise ValueError("diagonal covariance must be strictly positive")
    return mean + np.sqrt(diag_cov) * rng.standard_normal(mean.shape)


# ---------------------------------------------------------------------------
# Serialization: magic, version, head, sizes, then row-major float64 arrays.
# ---------------------------------------------------------------------------

_MAGIC = b"SPMLP\x00"
_FORMAT_VERSION = 1
_HEAD_CODES = {"linear": 0, "gaussian": 1, "logistic": 2}
_HEAD_NAMES = {v: k for k, v in _HEAD_CODES.items()}


def serialize_mlp(net: Mlp) -> bytes:
    parts = [
        _MAGIC,
        struct.pack("<HBB", _FORMAT_VERSION, _HEAD_CODES[net.head], len(net.sizes)),
        struct.pack(f"<{len(net.sizes)}I", *net.sizes),
    ]
    for W, b in zip(net.weights, net.biases):
        parts.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def deserialize_mlp(blob: bytes) -> Mlp:
    if blob[: len(_MAGIC)] != _MAGIC:
        raise ValueError("bad network magic")
    offset = len(_MAGIC)
    version, head_code, n_sizes = struct.unpack_from("<HBB", blob, offset)
    offset += 4
    if version != _FORMAT_VERSION:
        raise ValueError(f"unsupported network format version {version}")
    sizes = struct.unpack_from(f"<{n_sizes}I", blob, offset)
    offset += 4 * n_sizes
    net = Mlp(sizes, _HEAD_NAMES[head_code])
    for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        W = np.frombuffer(blob, "<f8", fan_in * fan_out, offset).reshape(fan_in, fan_out).copy()
        offset += fan_in * fan_out * 8
        b = np.frombuffer(blob, "<f8", fan_out, offset).copy()
        offset += fan_out * 8
        net.weights[i] = W
        net.biases[i] = b
    return net
