"""Acceptance criteria, one test each. Every test records a pass/fail line that is
printed in the terminal summary."""

import time

import numpy as np
import pytest

from memlstm import analog as an
from memlstm import crossbar as xb
from memlstm import dataset as ds
from memlstm import experiments as ex
from memlstm import lstm
from memlstm import scheduler as sch
from memlstm.config import RunConfig

from conftest import ACCEPTANCE_LINES
from oracles import matvec_transpose


def record(number, name, ok, detail, started):
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] {number}. {name}: {detail} ({time.perf_counter() - started:.2f} s)")
    assert ok, detail


def test_1_normalized_table_values():
    t0 = time.perf_counter()
    expected = [0.015444, 0.027027, 0.054054, 0.048263, 0.032819, 0.059846]
    series = ds.canonical_series()
    got = ds.normalize(ds.fit_normalizer(series), series.values[:6])
    worst = float(np.max(np.abs(got - expected)))
    record(1, "normalized table values", worst <= 1e-6, f"max deviation {worst:.2e} (tol 1e-6)", t0)


def test_2_software_accuracy(trained, prepared):
    t0 = time.perf_counter()
    _, rmse = lstm.metrics(lstm.predict(trained, prepared.test.inputs), prepared.test.targets)
    record(2, "software accuracy", rmse <= 0.15, f"test RMSE {rmse:.5f} (bound 0.15)", t0)


def test_3_ideal_analog_equivalence(trained, prepared):
    t0 = time.perf_counter()
    run = sch.run_test_set(sch.build_cycle_timeline(), prepared.test.inputs, an.program_network(trained))
    ref = lstm.predict(trained, prepared.test.inputs)
    worst = float(np.max(np.abs(run.predictions - ref)))
    ok = run.predictions.shape == (45,) and worst <= 1e-6
    record(3, "ideal analog equivalence", ok, f"{run.predictions.size} points, max deviation {worst:.2e} (tol 1e-6)", t0)


def test_4_analog_ballpark(trained, prepared):
    t0 = time.perf_counter()
    cfg = RunConfig().updated("variation", sigma_rel=0.02).updated("memristor", levels="continuous")
    point = ex.sweep(cfg, trained, "sigma_rel", [0.02], 30, prepared)[0]
    _, software = lstm.metrics(lstm.predict(trained, prepared.test.inputs), prepared.test.targets)
    gap = abs(point.mean_rmse - software)
    ok = len(point.rmses) >= 30 and gap <= 0.05
    detail = f"mean analog RMSE {point.mean_rmse:.5f} over {len(point.rmses)} seeds vs software {software:.5f}, gap {gap:.5f} (tol 0.05)"
    record(4, "analog ballpark", ok, detail, t0)


def test_5_timing_exactness():
    t0 = time.perf_counter()
    tl = sch.build_cycle_timeline()
    bounds = tl.boundaries_us()
    total = sch.run_test_set(tl, np.zeros((45, 2)), an.program_network(lstm.WeightSet.zeros())).total_time_ms
    ok = bounds == [40.0, 42.0, 82.0, 84.0, 87.0, 88.0] and total == 3.96
    record(5, "timing exactness", ok, f"boundaries {bounds} us, 45 predictions {total} ms", t0)


def test_6_crossbar_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst_vmm = 0.0
    for _ in range(100):
        rows, cols = rng.integers(1, 17, 2)
        w = rng.uniform(-1, 1, (rows, cols))
        v = rng.uniform(-2, 2, rows)
        out = xb.vmm(xb.program(w), v)
        worst_vmm = max(worst_vmm, float(np.max(np.abs(out - matvec_transpose(w.tolist(), v.tolist())))))
    quant_ok = True
    for levels in (2, 4, 16):
        step = 2 / (levels - 1)
        # dense grid plus every decision midpoint
        grid = np.concatenate([np.linspace(-1, 1, 100_001), -1 + (np.arange(levels - 1) + 0.5) * step])
        err = float(np.max(np.abs(grid - xb.quantize(grid, levels))))
        quant_ok &= err <= 1 / (levels - 1) + 1e-12
    ok = worst_vmm <= 1e-9 and quant_ok
    record(6, "crossbar oracle", ok, f"vmm max deviation {worst_vmm:.2e} (tol 1e-9), quantization bound held: {quant_ok}", t0)


def test_7_gradient_check():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        w = lstm.WeightSet.random(rng)
        worst = max(worst, lstm.gradient_check(w, rng.uniform(0, 1, 3)))
    record(7, "gradient check", worst < 1e-4, f"max relative error {worst:.2e} over 20 instances (tol 1e-4)", t0)


def test_8_energy_accounting():
    t0 = time.perf_counter()
    uniform = sch.PowerModel(210.67, 210.67, 210.67)
    tl = sch.build_cycle_timeline(power=uniform)
    one_uj = sch.estimate_energy(tl, uniform, 1) * 1e3
    linear = all(sch.estimate_energy(tl, uniform, n) == pytest.approx(n * sch.estimate_energy(tl, uniform, 1), rel=1e-15)
                 for n in (2, 7, 45, 1000))
    ok = abs(one_uj - 18.539) <= 1e-3 and linear
    record(8, "energy accounting", ok, f"one cycle {one_uj:.6f} uJ (target 18.539 +/- 0.001), linear in cycles: {linear}", t0)
