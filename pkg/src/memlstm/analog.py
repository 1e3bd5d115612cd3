"""Behavioral models of the voltage-mode analog datapath.

Activation circuits take inputs scaled down by ``act_scale`` and emit inverted,
scaled-down outputs; the multiplier emits ``-(a*b)/mult_scale``.  Inverting
gain stages (:func:`restore_gain`) undo those factors between stages, so with
ideal parameters the whole chain reproduces the floating-point cell exactly.
Imperfection enters only through ``gain_error_rel``, ``offset_v`` and
``droop_rate``.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import numpy as np

from . import crossbar as xb
from .lstm import HIDDEN, CellState, WeightSet, sigmoid


@dataclass(frozen=True)
class AnalogBlockParams:
    act_scale: float = 10.0
    mult_scale: float = 4.0
    gain_error_rel: float = 0.0
    offset_v: float = 0.0
    lstm_bias_offset_v: float = 0.3
    dense_bias_offset_v: float = 0.25
    droop_rate: float = 0.0  # fraction lost per microsecond of hold
    offset_compensation: bool = False

    def __post_init__(self):
        if not self.act_scale > 0:
            raise ValueError("act_scale must be positive")
        if not self.mult_scale > 0:
            raise ValueError("mult_scale must be positive")
        if not self.gain_error_rel > -1:
            raise ValueError("gain_error_rel must exceed -1")
        if not 0 <= self.droop_rate < 1:
            raise ValueError("droop_rate must lie in [0, 1)")

    @property
    def lossy(self) -> bool:
        """True when the blocks lose or shift voltage, which is when the bias
        rows are driven above their software values to make up for it."""
        return self.gain_error_rel != 0 or self.offset_v != 0

    @property
    def ideal(self) -> bool:
        return not self.lossy and self.droop_rate == 0


IDEAL = AnalogBlockParams()


def sigmoid_block(v_in, p: AnalogBlockParams = IDEAL):
    return -(1.0 / p.act_scale) * sigmoid(p.act_scale * np.asarray(v_in)) * (1.0 + p.gain_error_rel) + p.offset_v


def tanh_block(v_in, p: AnalogBlockParams = IDEAL):
    return -(1.0 / p.act_scale) * np.tanh(p.act_scale * np.asarray(v_in)) * (1.0 + p.gain_error_rel) + p.offset_v


def multiplier_block(v_a, v_b, p: AnalogBlockParams = IDEAL):
    a = np.asarray(v_a, dtype=np.float64)
    b = np.asarray(v_b, dtype=np.float64)
    prod = a * b
    if np.any(np.abs(a) > 1.0) or np.any(np.abs(b) > 1.0):
        warnings.warn("multiplier input outside the +/-1 V operating range; output saturates", stacklevel=2)
        prod = np.clip(prod, -1.0, 1.0)
    return -prod / p.mult_scale * (1.0 + p.gain_error_rel) + p.offset_v


def restore_gain(v_in, factor: float):
    return factor * np.asarray(v_in)


def memory_hold(v, hold_time: float, p: AnalogBlockParams = IDEAL):
    if hold_time < 0:
        raise ValueError("hold_time must be non-negative")
    if p.droop_rate == 0:
        return v
    return np.asarray(v) * (1.0 - p.droop_rate) ** hold_time


def _restore(v, factor: float, p: AnalogBlockParams):
    # offset trim sits in front of the restoring stage
    if p.offset_compensation:
        v = np.asarray(v) - p.offset_v
    return restore_gain(v, factor)


# -- composed datapath ------------------------------------------------------


@dataclass(frozen=True)
class AnalogNetwork:
    """Programmed crossbars for both layers plus their bias input values."""

    lstm: xb.CrossbarArray  # 6x16
    dense: xb.CrossbarArray  # 5x1
    lstm_bias_input: float
    dense_bias_input: float
    read_noise_rel: float = 0.0

    def __post_init__(self):
        if self.lstm.shape != (HIDDEN + 2, 4 * HIDDEN):
            raise ValueError(f"LSTM crossbar must be 6x16, got {self.lstm.shape}")
        if self.dense.shape != (HIDDEN + 1, 1):
            raise ValueError(f"dense crossbar must be 5x1, got {self.dense.shape}")


def program_network(w: WeightSet, params: xb.MemristorParams = xb.MemristorParams(),
                    variation: xb.VariationModel | None = None) -> AnalogNetwork:
    lstm = xb.program(w.lstm_matrix(), params)
    dense = xb.program(w.dense_vector()[:, None], params)
    read_noise = 0.0
    if variation is not None:
        # one seed drives both layers; spawn keeps their draws independent
        s_lstm, s_dense = np.random.SeedSequence(variation.seed).spawn(2)
        lstm = xb.apply_variation(lstm, _reseed(variation, s_lstm))
        dense = xb.apply_variation(dense, _reseed(variation, s_dense))
        read_noise = variation.read_noise_rel
    return AnalogNetwork(lstm, dense, w.lstm_bias_input, w.dense_bias_input, read_noise)


def _reseed(model: xb.VariationModel, seq: np.random.SeedSequence) -> xb.VariationModel:
    return xb.VariationModel(model.sigma_rel, model.read_noise_rel, int(seq.generate_state(1, np.uint64)[0]))


def lstm_bias_voltage(net: AnalogNetwork, p: AnalogBlockParams) -> float:
    return net.lstm_bias_input + (p.lstm_bias_offset_v if p.lossy else 0.0)


def dense_bias_voltage(net: AnalogNetwork, p: AnalogBlockParams) -> float:
    return net.dense_bias_input + (p.dense_bias_offset_v if p.lossy else 0.0)


def analog_unit_step(net: AnalogNetwork, unit: int, x_t: float, h_prev, c_prev: float,
                     p: AnalogBlockParams = IDEAL, rng: np.random.Generator | None = None) -> tuple[float, float]:
    """One hidden unit's sub-cycle: four crossbar columns, three sigmoids, two
    tanh blocks and three multipliers.  Returns the unit's new ``(h, C)``."""
    v = np.concatenate([[x_t], h_prev, [lstm_bias_voltage(net, p)]])
    cols = [unit, HIDDEN + unit, 2 * HIDDEN + unit, 3 * HIDDEN + unit]
    z = xb.vmm(net.lstm, v, rng, net.read_noise_rel, cols)
    z = restore_gain(z, 1.0 / p.act_scale)

    s, m = p.act_scale, p.mult_scale
    f = _restore(sigmoid_block(z[0], p), -s, p)
    i = _restore(sigmoid_block(z[1], p), -s, p)
    c_tilde = _restore(tanh_block(z[2], p), -s, p)
    o = _restore(sigmoid_block(z[3], p), -s, p)

    C = _restore(multiplier_block(i, c_tilde, p), -m, p) + _restore(multiplier_block(f, c_prev, p), -m, p)
    tC = _restore(tanh_block(restore_gain(C, 1.0 / s), p), -s, p)
    h = _restore(multiplier_block(o, tC, p), -m, p)
    return float(h), float(C)


def analog_cell_step(net: AnalogNetwork, prev: CellState, x_t: float, p: AnalogBlockParams = IDEAL,
                     rng: np.random.Generator | None = None) -> CellState:
    h = np.empty(HIDDEN)
    C = np.empty(HIDDEN)
    for j in range(HIDDEN):
        h[j], C[j] = analog_unit_step(net, j, x_t, prev.h, prev.C[j], p, rng)
    return CellState(h, C)


def analog_dense(net: AnalogNetwork, h, p: AnalogBlockParams = IDEAL, rng: np.random.Generator | None = None) -> float:
    v = np.append(np.asarray(h, dtype=np.float64), dense_bias_voltage(net, p))
    return float(xb.vmm(net.dense, v, rng, net.read_noise_rel)[0])


def analog_forward(net: AnalogNetwork, x_prev: float, x_curr: float, p: AnalogBlockParams = IDEAL,
                   rng: np.random.Generator | None = None) -> float:
    """Two analog cell steps and the dense readout, without timing or memories."""
    state = CellState.zeros()
    for x in (x_prev, x_curr):
        state = analog_cell_step(net, state, x, p, rng)
    return analog_dense(net, state.h, p, rng)


# -- transfer curves --------------------------------------------------------

CURVES = ("sigmoid", "tanh", "multiplier")


def transfer_curve(block: str, p: AnalogBlockParams = IDEAL, start: float = -1.0, stop: float = 1.0,
                   step: float = 1e-3, v_b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    n = int(round((stop - start) / step)) + 1
    v_in = start + step * np.arange(n)
    if block == "sigmoid":
        v_out = sigmoid_block(v_in, p)
    elif block == "tanh":
        v_out = tanh_block(v_in, p)
    elif block == "multiplier":
        v_out = multiplier_block(v_in, v_b, p)
    else:
        raise ValueError(f"unknown block {block!r}; choose from {', '.join(CURVES)}")
    return v_in, v_out


def curve_csv(v_in, v_out) -> str:
    buf = io.StringIO()
    buf.write("v_in,v_out\n")
    for a, b in zip(v_in, v_out):
        buf.write(f"{a:.6f},{b:.9g}\n")
    return buf.getvalue()


def read_curve_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
