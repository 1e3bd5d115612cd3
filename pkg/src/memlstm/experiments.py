"""Train / simulate / compare / sweep workflows shared by the command line and tests."""

from __future__ import annotations

import csv
import io
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analog as an
from . import crossbar as xb
from . import dataset as ds
from . import lstm
from . import scheduler as sch
from .config import RunConfig
from .errors import ConfigError, LengthMismatch

# Published figures for the 4-unit memristive LSTM on this dataset.  They are
# reproduced in reports for side-by-side reading and never used as results.
LITERATURE_REFERENCE = {
    "note": "published literature values, not measured by this run",
    "software_mse": 0.0112,
    "software_rmse": 0.1059,
    "analog_mse": 0.0101,
    "analog_rmse": 0.1004,
    "cycle_time_us": 88,
    "total_time_45_points_ms": 3.96,
    "peak_cell_power_mw": 210.67,
    "cell_area_um2": 58569,
}

SWEEP_PARAMETERS = ("sigma_rel", "levels", "droop_rate", "gain_error_rel")


def load_data(cfg: RunConfig) -> ds.PreparedData:
    series = ds.load_series(cfg.dataset.path) if cfg.dataset.path else ds.canonical_series()
    return ds.prepare(series, cfg.dataset.test_count)


# -- train ------------------------------------------------------------------


@dataclass(frozen=True)
class TrainResult:
    weights: lstm.WeightSet
    train_mse: float
    train_rmse: float
    test_mse: float
    test_rmse: float
    loss_history: list

    def report(self) -> dict:
        return {
            "scale": "normalized",
            "train": {"mse": self.train_mse, "rmse": self.train_rmse},
            "test": {"mse": self.test_mse, "rmse": self.test_rmse},
            "final_epoch_loss": self.loss_history[-1] if self.loss_history else None,
        }


def train_weights(cfg: RunConfig, data: ds.PreparedData | None = None) -> TrainResult:
    data = data or load_data(cfg)
    history: list = []
    w = lstm.train(data.train, cfg.hyperparams(), history=history)
    tr = lstm.metrics(lstm.predict(w, data.train.inputs), data.train.targets)
    te = lstm.metrics(lstm.predict(w, data.test.inputs), data.test.targets)
    return TrainResult(w, *tr, *te, history)


# -- simulate ---------------------------------------------------------------


@dataclass(frozen=True)
class SimulationResult:
    targets: np.ndarray
    software: np.ndarray
    analog: np.ndarray
    software_metrics: tuple[float, float]
    analog_metrics: tuple[float, float]
    cycle_time_us: float
    total_time_ms: float
    energy_mj: float
    traces: list

    def report(self) -> dict:
        return {
            "scale": "normalized",
            "n_points": int(self.targets.size),
            "software": {"mse": self.software_metrics[0], "rmse": self.software_metrics[1]},
            "analog": {"mse": self.analog_metrics[0], "rmse": self.analog_metrics[1]},
            "max_abs_difference": float(np.max(np.abs(self.analog - self.software))),
            "cycle_time_us": self.cycle_time_us,
            "total_time_ms": self.total_time_ms,
            "energy_mj": self.energy_mj,
            "energy_uj": self.energy_mj * 1e3,
        }


def _rng_for(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *path]))


def simulate(cfg: RunConfig, weights: lstm.WeightSet, data: ds.PreparedData | None = None,
             keep_traces: bool = False) -> SimulationResult:
    data = data or load_data(cfg)
    variation = cfg.variation_model()
    net = an.program_network(weights, cfg.memristor_params(), variation)
    timeline = sch.build_cycle_timeline(cfg.timeline_config(), cfg.power_model())
    rng = _rng_for(variation.seed, 1) if variation.read_noise_rel > 0 else None
    run = sch.run_test_set(timeline, data.test.inputs, net, cfg.analog_params(), rng, keep_traces)
    software = lstm.predict(weights, data.test.inputs)
    targets = np.array(data.test.targets)
    return SimulationResult(
        targets, software, run.predictions,
        lstm.metrics(software, targets), lstm.metrics(run.predictions, targets),
        timeline.cycle_time_us, run.total_time_ms, run.energy_mj, run.traces,
    )


def analog_rmse(cfg: RunConfig, weights: lstm.WeightSet, data: ds.PreparedData) -> float:
    return simulate(cfg, weights, data).analog_metrics[1]


# -- prediction files -------------------------------------------------------

PREDICTION_HEADER = ["index", "target", "prediction", "target_denorm", "prediction_denorm"]


def predictions_csv(targets, predictions, norm: ds.Normalizer) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PREDICTION_HEADER)
    for k, (t, p) in enumerate(zip(targets, predictions)):
        writer.writerow([k, repr(float(t)), repr(float(p)),
                         f"{ds.denormalize(norm, t):.6f}", f"{ds.denormalize(norm, p):.6f}"])
    return buf.getvalue()


def read_predictions_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Returns ``(targets, predictions)`` on the normalized scale."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"target", "prediction"} <= set(reader.fieldnames):
        raise ValueError(f"prediction file needs 'target' and 'prediction' columns, got {reader.fieldnames}")
    rows = list(reader)
    return (np.array([float(r["target"]) for r in rows]), np.array([float(r["prediction"]) for r in rows]))


# -- compare ----------------------------------------------------------------


COMPARISON_HEADER = ["index", "target", "software", "analog"]


@dataclass(frozen=True)
class Comparison:
    targets: np.ndarray
    software: np.ndarray
    analog: np.ndarray
    software_metrics: tuple[float, float]
    analog_metrics: tuple[float, float]

    @property
    def max_abs_delta(self) -> float:
        return float(np.max(np.abs(self.software - self.analog)))

    def csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COMPARISON_HEADER)
        for k, row in enumerate(zip(self.targets, self.software, self.analog)):
            writer.writerow([k, *(repr(float(v)) for v in row)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "n_points": int(self.targets.size),
            "software": {"mse": self.software_metrics[0], "rmse": self.software_metrics[1]},
            "analog": {"mse": self.analog_metrics[0], "rmse": self.analog_metrics[1]},
            "max_abs_delta": self.max_abs_delta,
        }


def compare(software, analog, targets) -> Comparison:
    s = np.asarray(software, dtype=np.float64)
    a = np.asarray(analog, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if not (s.size == a.size == t.size):
        raise LengthMismatch(f"software {s.size}, analog {a.size}, targets {t.size} points")
    return Comparison(t, s, a, lstm.metrics(s, t), lstm.metrics(a, t))


def read_comparison_csv(text: str) -> Comparison:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != COMPARISON_HEADER:
        raise ValueError(f"unexpected comparison header {reader.fieldnames}")
    rows = list(reader)
    cols = {k: np.array([float(r[k]) for r in rows]) for k in COMPARISON_HEADER[1:]}
    return compare(cols["software"], cols["analog"], cols["target"])


def render_summary(comp: Comparison) -> str:
    ref = LITERATURE_REFERENCE
    lines = [
        f"{'':10s} {'MSE':>10s} {'RMSE':>10s}   {'published MSE':>13s} {'published RMSE':>14s}",
        f"{'software':10s} {comp.software_metrics[0]:10.4f} {comp.software_metrics[1]:10.4f}"
        f"   {ref['software_mse']:13.4f} {ref['software_rmse']:14.4f}",
        f"{'analog':10s} {comp.analog_metrics[0]:10.4f} {comp.analog_metrics[1]:10.4f}"
        f"   {ref['analog_mse']:13.4f} {ref['analog_rmse']:14.4f}",
        f"max |software - analog| = {comp.max_abs_delta:.3g} over {comp.targets.size} points",
    ]
    return "\n".join(lines)


# -- sweep ------------------------------------------------------------------


def parse_sweep_value(parameter: str, raw):
    if parameter == "levels":
        if raw in ("continuous", None):
            return None
        value = int(raw)
        if value < 2:
            raise ConfigError(f"levels value {value} must be >= 2")
        return value
    return float(raw)


def _apply_sweep_value(cfg: RunConfig, parameter: str, value, seed: int) -> RunConfig:
    if parameter == "sigma_rel":
        return cfg.updated("variation", sigma_rel=value, seed=seed).updated(None, seed=None)
    cfg = cfg.updated("variation", seed=seed).updated(None, seed=None)
    if parameter == "levels":
        return cfg.updated("memristor", levels=value)
    return cfg.updated("analog", **{parameter: value})


def trial_seed(global_seed: int, value_index: int, trial: int) -> int:
    seq = np.random.SeedSequence([global_seed, value_index, trial])
    return int(seq.generate_state(1, np.uint64)[0])


def _run_trial(args) -> float:
    cfg, weights, data, parameter, value, seed = args
    return analog_rmse(_apply_sweep_value(cfg, parameter, value, seed), weights, data)


@dataclass(frozen=True)
class SweepPoint:
    value: object
    mean_rmse: float
    std_rmse: float
    rmses: tuple[float, ...]


def sweep(cfg: RunConfig, weights: lstm.WeightSet, parameter: str, values, trials: int,
          data: ds.PreparedData | None = None, workers: int = 1) -> list[SweepPoint]:
    """Analog test RMSE over seeded trials for each value of one non-ideality knob.

    Trial ``t`` of value ``k`` gets a seed derived from ``(global seed, k, t)``,
    so results do not depend on worker count or scheduling order.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {parameter!r}; choose from {', '.join(SWEEP_PARAMETERS)}")
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    values = [parse_sweep_value(parameter, v) for v in values]
    if not values:
        raise ConfigError("sweep needs at least one value")
    data = data or load_data(cfg)
    base_seed = cfg.seed if cfg.seed is not None else cfg.variation.seed
    jobs = [
        (cfg, weights, data, parameter, v, trial_seed(base_seed, k, t))
        for k, v in enumerate(values)
        for t in range(trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial, jobs))
    else:
        results = [_run_trial(j) for j in jobs]

    points = []
    for k, v in enumerate(values):
        r = [float(x) for x in results[k * trials : (k + 1) * trials]]
        # statistics works in exact rationals, so identical trials give std 0.0
        points.append(SweepPoint(v, statistics.fmean(r), statistics.pstdev(r), tuple(r)))
    return points


SWEEP_HEADER = ["parameter", "value", "trials", "mean_rmse", "std_rmse"]


def sweep_csv(parameter: str, points: list[SweepPoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for pt in points:
        value = "continuous" if pt.value is None else repr(pt.value)
        writer.writerow([parameter, value, len(pt.rmses), repr(pt.mean_rmse), repr(pt.std_rmse)])
    return buf.getvalue()


def read_sweep_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != SWEEP_HEADER:
        raise ValueError(f"unexpected sweep header {reader.fieldnames}")
    out = []
    for r in reader:
        out.append({
            "parameter": r["parameter"],
            "value": parse_sweep_value(r["parameter"], r["value"]),
            "trials": int(r["trials"]),
            "mean_rmse": float(r["mean_rmse"]),
            "std_rmse": float(r["std_rmse"]),
        })
    return out


def count_inversions(means) -> int:
    """Number of adjacent pairs where the mean goes up instead of down."""
    m = list(means)
    return sum(1 for a, b in zip(m, m[1:]) if b > a and not math.isclose(a, b, rel_tol=1e-12))
