"""Differential-pair memristor crossbars.

Each signed weight ``w`` in [-1, 1] is held by two devices.  Only one of them
moves away from the off state:

    G+ = G_off + max(w, 0)  * (G_on - G_off)
    G- = G_off + max(-w, 0) * (G_on - G_off)

so ``(G+ - G-) / (G_on - G_off) == w`` exactly, finite off-state included.
Column outputs are the differential currents divided by ``G_on - G_off``,
which turns them back into unitless weighted sums.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import LengthMismatch, OutOfRange


@dataclass(frozen=True)
class MemristorParams:
    R_on: float = 10e3
    R_off: float = 10e6
    levels: int | None = None  # None means continuous programming

    def __post_init__(self):
        if not 0 < self.R_on < self.R_off:
            raise ValueError(f"need 0 < R_on < R_off, got R_on={self.R_on}, R_off={self.R_off}")
        if self.levels is not None and self.levels < 2:
            raise ValueError(f"levels must be >= 2, got {self.levels}")

    @property
    def G_on(self) -> float:
        return 1.0 / self.R_on

    @property
    def G_off(self) -> float:
        return 1.0 / self.R_off

    @property
    def G_range(self) -> float:
        return self.G_on - self.G_off


@dataclass(frozen=True)
class VariationModel:
    sigma_rel: float = 0.0
    read_noise_rel: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_rel < 0 or self.read_noise_rel < 0:
            raise ValueError("variation spreads must be non-negative")


@dataclass(frozen=True)
class CrossbarArray:
    G_plus: np.ndarray
    G_minus: np.ndarray
    params: MemristorParams = field(default_factory=MemristorParams)

    def __post_init__(self):
        gp = np.array(self.G_plus, dtype=np.float64, ndmin=2)
        gm = np.array(self.G_minus, dtype=np.float64, ndmin=2)
        if gp.shape != gm.shape:
            raise ValueError(f"G_plus {gp.shape} and G_minus {gm.shape} differ in shape")
        gp.setflags(write=False)
        gm.setflags(write=False)
        object.__setattr__(self, "G_plus", gp)
        object.__setattr__(self, "G_minus", gm)

    @property
    def rows(self) -> int:
        return self.G_plus.shape[0]

    @property
    def cols(self) -> int:
        return self.G_plus.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.G_plus.shape


def quantize(weights, levels: int) -> np.ndarray:
    """Snap to the nearest of ``levels`` evenly spaced points on [-1, 1].

    Exact ties go to the candidate closer to zero.
    """
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    w = np.asarray(weights, dtype=np.float64)
    step = 2.0 / (levels - 1)
    k = np.clip(np.floor((w + 1.0) / step), 0, levels - 2)
    lo = -1.0 + k * step
    hi = -1.0 + (k + 1) * step
    d_lo = w - lo
    d_hi = hi - w
    tie_pick = np.where(np.abs(hi) < np.abs(lo), hi, lo)
    return np.where(d_hi < d_lo, hi, np.where(d_lo < d_hi, lo, tie_pick))


def program(weights, params: MemristorParams = MemristorParams()) -> CrossbarArray:
    w = np.array(weights, dtype=np.float64, ndmin=2)
    if not np.all(np.isfinite(w)):
        raise OutOfRange("non-finite weight")
    bad = np.argwhere(np.abs(w) > 1.0)
    if bad.size:
        r, c = bad[0]
        raise OutOfRange(f"weight[{r},{c}] = {w[r, c]} outside [-1, 1]")
    if params.levels is not None:
        w = quantize(w, params.levels)
    g_off, g_range = params.G_off, params.G_range
    g_plus = g_off + np.maximum(w, 0.0) * g_range
    g_minus = g_off + np.maximum(-w, 0.0) * g_range
    return CrossbarArray(g_plus, g_minus, params)


def read_effective_weights(arr: CrossbarArray) -> np.ndarray:
    return (arr.G_plus - arr.G_minus) / arr.params.G_range


def column_currents(arr: CrossbarArray, v_in, rng: np.random.Generator | None = None,
                    read_noise_rel: float = 0.0, cols=None) -> np.ndarray:
    """Differential column currents in amperes for row voltages ``v_in``.

    With ``read_noise_rel > 0`` every conductance taking part in this read is
    scaled by an independent ``1 + read_noise_rel * N(0, 1)`` draw from ``rng``.
    """
    v = np.asarray(v_in, dtype=np.float64)
    if v.shape != (arr.rows,):
        raise LengthMismatch(f"{v.size} row voltages for a crossbar with {arr.rows} rows")
    gp, gm = arr.G_plus, arr.G_minus
    if cols is not None:
        gp, gm = gp[:, cols], gm[:, cols]
    if read_noise_rel > 0:
        if rng is None:
            raise ValueError("read noise needs an explicit generator")
        gp = gp * (1.0 + read_noise_rel * rng.standard_normal(gp.shape))
        gm = gm * (1.0 + read_noise_rel * rng.standard_normal(gm.shape))
    return v @ (gp - gm)


def vmm(arr: CrossbarArray, v_in, rng: np.random.Generator | None = None,
        read_noise_rel: float = 0.0, cols=None) -> np.ndarray:
    """Normalized column sums; equals ``W.T @ v_in`` for an ideal array."""
    return column_currents(arr, v_in, rng, read_noise_rel, cols) / arr.params.G_range


def apply_variation(arr: CrossbarArray, model: VariationModel) -> CrossbarArray:
    """Programming spread: each device gets its own lognormal factor (median 1)."""
    if model.sigma_rel == 0:
        return arr
    rng = np.random.default_rng(model.seed)
    p = arr.params
    fp = np.exp(model.sigma_rel * rng.standard_normal(arr.shape))
    fm = np.exp(model.sigma_rel * rng.standard_normal(arr.shape))
    gp = np.clip(arr.G_plus * fp, p.G_off, p.G_on)
    gm = np.clip(arr.G_minus * fm, p.G_off, p.G_on)
    return replace(arr, G_plus=gp, G_minus=gm)


def dump_crossbar(arr: CrossbarArray) -> str:
    buf = io.StringIO()
    buf.write("row,col,G_plus,G_minus\n")
    for r in range(arr.rows):
        for c in range(arr.cols):
            buf.write(f"{r},{c},{arr.G_plus[r, c]:.8e},{arr.G_minus[r, c]:.8e}\n")
    return buf.getvalue()


def read_crossbar_dump(text: str, params: MemristorParams = MemristorParams()) -> CrossbarArray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "row,col,G_plus,G_minus":
        raise ValueError("not a crossbar dump: bad header")
    recs = [ln.split(",") for ln in lines[1:]]
    rows = 1 + max(int(r[0]) for r in recs)
    cols = 1 + max(int(r[1]) for r in recs)
    gp = np.full((rows, cols), np.nan)
    gm = np.full((rows, cols), np.nan)
    for r, c, a, b in recs:
        gp[int(r), int(c)] = float(a)
        gm[int(r), int(c)] = float(b)
    if np.isnan(gp).any():
        raise ValueError("crossbar dump is missing cells")
    return CrossbarArray(gp, gm, params)
