"""Floating-point reference network: a 4-unit LSTM unrolled over two steps
followed by a linear dense readout.

Gate biases are weights on a constant bias *input* (1.5 for the LSTM layer,
0.0239 for the dense layer), mirroring how the crossbar realizes them as an
extra input row.  Internally the LSTM layer is handled as one 6x16 matrix

    rows:    [x_t, h_prev[0..3], bias_input]
    columns: [f(4), i(4), c~(4), o(4)]

which is exactly the geometry programmed onto the crossbar.  Matrices follow
the "inputs are rows" convention, so a gate pre-activation is
``x * W + h_prev @ U + bias_input * b``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import SupervisedSet
from .errors import DivergenceError, LengthMismatch, MissingField, NonFiniteError, OutOfRange, SchemaError

HIDDEN = 4
GATES = ("f", "i", "c", "o")
LSTM_BIAS_INPUT = 1.5
DENSE_BIAS_INPUT = 0.0239
SCHEMA_VERSION = "v1"


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


@dataclass(frozen=True)
class WeightSet:
    W: dict[str, np.ndarray]  # gate -> (4,)
    U: dict[str, np.ndarray]  # gate -> (4, 4), U[k, j] couples h_prev[k] to unit j
    b: dict[str, np.ndarray]  # gate -> (4,)
    dense_w: np.ndarray  # (4,)
    dense_bias_weight: float
    lstm_bias_input: float = LSTM_BIAS_INPUT
    dense_bias_input: float = DENSE_BIAS_INPUT

    def __post_init__(self):
        for g in GATES:
            if np.shape(self.W[g]) != (HIDDEN,) or np.shape(self.b[g]) != (HIDDEN,):
                raise ValueError(f"gate {g}: W and b must have shape ({HIDDEN},)")
            if np.shape(self.U[g]) != (HIDDEN, HIDDEN):
                raise ValueError(f"gate {g}: U must have shape ({HIDDEN}, {HIDDEN})")
        if np.shape(self.dense_w) != (HIDDEN,):
            raise ValueError(f"dense_w must have shape ({HIDDEN},)")

    # -- packed views -------------------------------------------------------

    def lstm_matrix(self) -> np.ndarray:
        """The 6x16 matrix programmed onto the LSTM crossbar."""
        m = np.empty((HIDDEN + 2, 4 * HIDDEN))
        for k, g in enumerate(GATES):
            cols = slice(k * HIDDEN, (k + 1) * HIDDEN)
            m[0, cols] = self.W[g]
            m[1 : HIDDEN + 1, cols] = self.U[g]
            m[HIDDEN + 1, cols] = self.b[g]
        return m

    def dense_vector(self) -> np.ndarray:
        """The 5-entry column programmed onto the dense crossbar."""
        return np.append(np.asarray(self.dense_w, dtype=np.float64), self.dense_bias_weight)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.lstm_matrix().ravel(), self.dense_vector()])

    @classmethod
    def from_packed(cls, lstm_matrix, dense_vector, lstm_bias_input=LSTM_BIAS_INPUT,
                    dense_bias_input=DENSE_BIAS_INPUT) -> "WeightSet":
        m = np.array(lstm_matrix, dtype=np.float64)
        d = np.array(dense_vector, dtype=np.float64)
        if m.shape != (HIDDEN + 2, 4 * HIDDEN) or d.shape != (HIDDEN + 1,):
            raise ValueError(f"packed shapes must be (6, 16) and (5,), got {m.shape} and {d.shape}")
        W, U, b = {}, {}, {}
        for k, g in enumerate(GATES):
            cols = slice(k * HIDDEN, (k + 1) * HIDDEN)
            W[g] = m[0, cols].copy()
            U[g] = m[1 : HIDDEN + 1, cols].copy()
            b[g] = m[HIDDEN + 1, cols].copy()
        return cls(W, U, b, d[:HIDDEN].copy(), float(d[HIDDEN]), float(lstm_bias_input), float(dense_bias_input))

    @classmethod
    def from_flat(cls, theta, lstm_bias_input=LSTM_BIAS_INPUT, dense_bias_input=DENSE_BIAS_INPUT) -> "WeightSet":
        theta = np.asarray(theta, dtype=np.float64)
        n = (HIDDEN + 2) * 4 * HIDDEN
        return cls.from_packed(theta[:n].reshape(HIDDEN + 2, 4 * HIDDEN), theta[n:], lstm_bias_input, dense_bias_input)

    @classmethod
    def zeros(cls, **kw) -> "WeightSet":
        return cls.from_packed(np.zeros((HIDDEN + 2, 4 * HIDDEN)), np.zeros(HIDDEN + 1), **kw)

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 0.5) -> "WeightSet":
        return cls.from_flat(rng.uniform(-scale, scale, size=n_params()))

    def in_range(self) -> bool:
        return bool(np.all(np.abs(self.flat()) <= 1.0))


def n_params() -> int:
    return (HIDDEN + 2) * 4 * HIDDEN + HIDDEN + 1


@dataclass(frozen=True)
class CellState:
    h: np.ndarray
    C: np.ndarray

    @classmethod
    def zeros(cls) -> "CellState":
        return cls(np.zeros(HIDDEN), np.zeros(HIDDEN))


@dataclass(frozen=True)
class GateActivations:
    f: np.ndarray
    i: np.ndarray
    c_tilde: np.ndarray
    o: np.ndarray


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.05
    epochs: int = 500
    seed: int = 42
    clip_norm: float = 1.0
    batch_size: int = 1

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.epochs > 0 and self.clip_norm > 0 and self.batch_size > 0):
            raise ValueError("hyperparameters must all be positive")


def _require_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise NonFiniteError("non-finite value in network input")


def cell_step(w: WeightSet, x_t: float, prev: CellState) -> tuple[GateActivations, CellState]:
    _require_finite(x_t, prev.h, prev.C)
    v = np.concatenate([[x_t], prev.h, [w.lstm_bias_input]])
    z = v @ w.lstm_matrix()
    f = sigmoid(z[0:4])
    i = sigmoid(z[4:8])
    c_tilde = np.tanh(z[8:12])
    o = sigmoid(z[12:16])
    C = i * c_tilde + f * prev.C
    h = o * np.tanh(C)
    return GateActivations(f, i, c_tilde, o), CellState(h, C)


def dense(w: WeightSet, h) -> float:
    return float(np.dot(w.dense_w, h) + w.dense_bias_weight * w.dense_bias_input)


def forward(w: WeightSet, x_prev: float, x_curr: float) -> float:
    state = CellState.zeros()
    for x in (x_prev, x_curr):
        _, state = cell_step(w, x, state)
    return dense(w, state.h)


# -- batched training path --------------------------------------------------


def _batch_step(M, x, h, C, bias_input):
    n = x.shape[0]
    v = np.empty((n, HIDDEN + 2))
    v[:, 0] = x
    v[:, 1 : HIDDEN + 1] = h
    v[:, HIDDEN + 1] = bias_input
    z = v @ M
    f = sigmoid(z[:, 0:4])
    i = sigmoid(z[:, 4:8])
    g = np.tanh(z[:, 8:12])
    o = sigmoid(z[:, 12:16])
    C_new = i * g + f * C
    tC = np.tanh(C_new)
    return (v, f, i, g, o, C, tC), o * tC, C_new


def _predict_batch(M, d, X, lstm_bias_input, dense_bias_input):
    n = X.shape[0]
    h = np.zeros((n, HIDDEN))
    C = np.zeros((n, HIDDEN))
    caches = []
    for t in range(X.shape[1]):
        cache, h, C = _batch_step(M, X[:, t], h, C, lstm_bias_input)
        caches.append(cache)
    pred = h @ d[:HIDDEN] + d[HIDDEN] * dense_bias_input
    return pred, h, caches


def predict(w: WeightSet, inputs) -> np.ndarray:
    """Vectorised forward pass over an ``(n, 2)`` array of ``(x_prev, x_curr)``."""
    X = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    _require_finite(X)
    pred, _, _ = _predict_batch(w.lstm_matrix(), w.dense_vector(), X, w.lstm_bias_input, w.dense_bias_input)
    return pred


def loss_and_grad(M, d, X, y, lstm_bias_input=LSTM_BIAS_INPUT, dense_bias_input=DENSE_BIAS_INPUT):
    """Mean squared error over the batch and its BPTT gradient w.r.t. ``(M, d)``."""
    pred, h_last, caches = _predict_batch(M, d, X, lstm_bias_input, dense_bias_input)
    err = pred - y
    loss = float(np.mean(err**2))
    dpred = 2.0 * err / err.size

    dd = np.empty_like(d)
    dd[:HIDDEN] = h_last.T @ dpred
    dd[HIDDEN] = dense_bias_input * dpred.sum()

    dM = np.zeros_like(M)
    dh = np.outer(dpred, d[:HIDDEN])
    dC = np.zeros_like(dh)
    for v, f, i, g, o, C_prev, tC in reversed(caches):
        do = dh * tC
        dC = dC + dh * o * (1.0 - tC**2)
        dz = np.concatenate(
            [dC * C_prev * f * (1.0 - f), dC * g * i * (1.0 - i), dC * i * (1.0 - g**2), do * o * (1.0 - o)],
            axis=1,
        )
        dM += v.T @ dz
        dh = (dz @ M.T)[:, 1 : HIDDEN + 1]
        dC = dC * f
    return loss, dM, dd


def train(train_set: SupervisedSet, hp: Hyperparams = Hyperparams(), init: WeightSet | None = None,
          history: list | None = None) -> WeightSet:
    """Minibatch SGD with full BPTT over the two-step unroll.

    Each update clips the gradient to ``hp.clip_norm`` (global L2 norm) and then
    clips every weight to [-1, 1].  Row order is reshuffled every epoch from a
    generator seeded with ``hp.seed``, so a run is reproducible bit for bit.
    """
    if len(train_set) == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(hp.seed)
    w0 = init if init is not None else WeightSet.random(rng)
    M = w0.lstm_matrix()
    d = w0.dense_vector()
    X, y = train_set.inputs, train_set.targets
    _require_finite(X, y)
    n = len(train_set)

    for epoch in range(hp.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, hp.batch_size):
            idx = order[start : start + hp.batch_size]
            loss, dM, dd = loss_and_grad(M, d, X[idx], y[idx], w0.lstm_bias_input, w0.dense_bias_input)
            if not math.isfinite(loss):
                raise DivergenceError(f"loss became non-finite at epoch {epoch}")
            norm = math.sqrt(float(np.sum(dM * dM) + np.sum(dd * dd)))
            if not math.isfinite(norm):
                raise DivergenceError(f"gradient became non-finite at epoch {epoch}")
            scale = hp.learning_rate * min(1.0, hp.clip_norm / norm) if norm > 0 else 0.0
            M -= scale * dM
            d -= scale * dd
            np.clip(M, -1.0, 1.0, out=M)
            np.clip(d, -1.0, 1.0, out=d)
            total += loss * idx.size
        if history is not None:
            history.append(total / n)
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(d))):
        raise DivergenceError("weights became non-finite")
    return WeightSet.from_packed(M, d, w0.lstm_bias_input, w0.dense_bias_input)


def row_loss(w: WeightSet, row) -> float:
    x_prev, x_curr, target = (float(v) for v in row)
    return (forward(w, x_prev, x_curr) - target) ** 2


def gradient_check(w: WeightSet, row, step: float = 1e-5, floor: float = 1e-7) -> float:
    """Worst relative error between the BPTT gradient of one row's squared error
    and a central finite difference, over every parameter.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``; the floor keeps
    parameters with a vanishing gradient from dividing noise by noise.
    """
    row = np.asarray(row, dtype=np.float64)
    X, y = row[None, :2], row[2:3]
    _, dM, dd = loss_and_grad(w.lstm_matrix(), w.dense_vector(), X, y, w.lstm_bias_input, w.dense_bias_input)
    analytic = np.concatenate([dM.ravel(), dd])
    theta = w.flat()
    worst = 0.0
    for k in range(theta.size):
        hi, lo = theta.copy(), theta.copy()
        hi[k] += step
        lo[k] -= step
        numeric = (
            row_loss(WeightSet.from_flat(hi, w.lstm_bias_input, w.dense_bias_input), row)
            - row_loss(WeightSet.from_flat(lo, w.lstm_bias_input, w.dense_bias_input), row)
        ) / (2 * step)
        a = analytic[k]
        rel = abs(a - numeric) / max(abs(a), abs(numeric), floor)
        worst = max(worst, rel)
    return worst


def metrics(predictions, targets) -> tuple[float, float]:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.size != t.size:
        raise LengthMismatch(f"{p.size} predictions vs {t.size} targets")
    if p.size == 0:
        raise ValueError("metrics need at least one point")
    mse = float(np.mean((p - t) ** 2))
    return mse, math.sqrt(mse)


# -- weight files -----------------------------------------------------------


def weights_to_dict(w: WeightSet) -> dict:
    out: dict = {"version": SCHEMA_VERSION}
    for g in GATES:
        out[f"W_{g}"] = [float(v) for v in w.W[g]]
    for g in GATES:
        out[f"U_{g}"] = [[float(v) for v in row] for row in w.U[g]]
    for g in GATES:
        out[f"b_{g}"] = [float(v) for v in w.b[g]]
    out["lstm_bias_input"] = float(w.lstm_bias_input)
    out["dense_w"] = [float(v) for v in w.dense_w]
    out["dense_bias_weight"] = float(w.dense_bias_weight)
    out["dense_bias_input"] = float(w.dense_bias_input)
    return out


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(f"{name} is not finite")
    return value


def _weight(value, name: str) -> float:
    value = _number(value, name)
    if abs(value) > 1.0:
        raise OutOfRange(f"{name} = {value} outside [-1, 1]")
    return value


def _vector(data: dict, key: str) -> np.ndarray:
    if key not in data:
        raise MissingField(key)
    vec = data[key]
    if not isinstance(vec, list) or len(vec) != HIDDEN:
        raise SchemaError(f"{key} must be a list of {HIDDEN} numbers")
    return np.array([_weight(v, f"{key}[{k}]") for k, v in enumerate(vec)])


def weights_from_dict(data: dict) -> WeightSet:
    if not isinstance(data, dict):
        raise SchemaError("weight file must hold a JSON object")
    if data.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported or missing version {data.get('version')!r}, expected {SCHEMA_VERSION!r}")
    W = {g: _vector(data, f"W_{g}") for g in GATES}
    b = {g: _vector(data, f"b_{g}") for g in GATES}
    U = {}
    for g in GATES:
        key = f"U_{g}"
        if key not in data:
            raise MissingField(key)
        rows = data[key]
        if not isinstance(rows, list) or len(rows) != HIDDEN or any(
            not isinstance(r, list) or len(r) != HIDDEN for r in rows
        ):
            raise SchemaError(f"{key} must be a {HIDDEN}x{HIDDEN} nested list")
        U[g] = np.array([[_weight(v, f"{key}[{r}][{c}]") for c, v in enumerate(row)] for r, row in enumerate(rows)])
    for key in ("lstm_bias_input", "dense_bias_weight", "dense_bias_input"):
        if key not in data:
            raise MissingField(key)
    dense_w = _vector(data, "dense_w")
    known = {"version", "lstm_bias_input", "dense_w", "dense_bias_weight", "dense_bias_input"}
    known |= {f"{p}_{g}" for p in ("W", "U", "b") for g in GATES}
    extra = sorted(set(data) - known)
    if extra:
        raise SchemaError(f"unknown field(s): {', '.join(extra)}")
    return WeightSet(
        W, U, b, dense_w,
        _weight(data["dense_bias_weight"], "dense_bias_weight"),
        _number(data["lstm_bias_input"], "lstm_bias_input"),
        _number(data["dense_bias_input"], "dense_bias_input"),
    )


def export_weights(w: WeightSet, path: str | Path) -> None:
    if not w.in_range():
        raise OutOfRange("refusing to export weights outside [-1, 1]")
    # repr-based float output is the shortest string that parses back exactly
    Path(path).write_text(json.dumps(weights_to_dict(w), indent=2) + "\n", encoding="utf-8")


def import_weights(path: str | Path) -> WeightSet:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return weights_from_dict(data)
