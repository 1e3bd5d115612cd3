import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from memlstm import analog as an
from memlstm import lstm
from memlstm import scheduler as sch


@pytest.fixture(scope="module")
def net(trained):
    return an.program_network(trained)


def test_default_timeline():
    tl = sch.build_cycle_timeline()
    assert tl.cycle_ns == 88_000
    assert tl.cycle_time_us == 88.0
    assert tl.boundaries_us() == [40.0, 42.0, 82.0, 84.0, 87.0, 88.0]
    assert len(tl.subcycles()) == 8
    assert [p.kind for p in tl.phases].count(sch.DELAY) == 2
    assert tl.dense_phase().start_us == 84.0
    assert [(p.step, p.unit) for p in tl.subcycles(1)] == [(1, 0), (1, 1), (1, 2), (1, 3)]
    assert tl.subcycles(1)[0].start_us == 42.0


def test_timeline_contiguous():
    tl = sch.build_cycle_timeline()
    assert tl.phases[0].start_ns == 0
    for a, b in zip(tl.phases, tl.phases[1:]):
        assert b.start_ns == a.end_ns
    assert tl.phases[-1].end_ns == tl.cycle_ns


def test_short_subcycle():
    assert sch.build_cycle_timeline(sch.TimelineConfig(subcycle_us=5)).cycle_time_us == 48.0


@pytest.mark.parametrize("field", ["subcycle_us", "step_delay_us", "dense_us", "end_delay_us"])
def test_non_positive_duration_rejected(field):
    with pytest.raises(ValueError):
        sch.build_cycle_timeline(sch.TimelineConfig(**{field: 0}))


@given(st.integers(1, 50_000), st.integers(1, 5_000), st.integers(1, 5_000), st.integers(1, 5_000))
def test_cycle_is_sum_of_durations(sub, gap, dense, tail):
    cfg = sch.TimelineConfig(sub / 1000, gap / 1000, dense / 1000, tail / 1000)
    tl = sch.build_cycle_timeline(cfg)
    assert tl.cycle_ns == 8 * sub + 2 * gap + dense + tail
    assert sum(p.duration_ns for p in tl.phases) == tl.cycle_ns


def test_power_tags():
    tl = sch.build_cycle_timeline(power=sch.PowerModel(peak_cell_mw=200, dense_mw=50, idle_mw=1))
    tags = {p.kind: p.power_mw for p in tl.phases}
    assert tags == {sch.UNIT_SUBCYCLE: 200, sch.DELAY: 1, sch.DENSE: 50, sch.END_DELAY: 1}


# -- execution --------------------------------------------------------------


def test_ideal_prediction_matches_forward(trained, prepared, net):
    tl = sch.build_cycle_timeline()
    for x_prev, x_curr in prepared.test.inputs:
        pred, _ = sch.run_prediction(tl, net, an.IDEAL, x_prev, x_curr)
        assert pred == pytest.approx(lstm.forward(trained, x_prev, x_curr), abs=1e-9)


def test_trace_structure(net):
    pred, trace = sch.run_prediction(sch.build_cycle_timeline(), net, an.IDEAL, 0.4, 0.5)
    assert len(trace) == 13
    assert [e.kind for e in trace].count(sch.UNIT_SUBCYCLE) == 8
    assert trace[-1].kind == sch.CYCLE_SUMMARY
    assert trace[-1].output == pred
    assert trace[-1].duration_us == 88.0
    assert all(e.h is not None for e in trace if e.kind == sch.UNIT_SUBCYCLE)


def test_droop_before_dense_readout(net):
    p = an.AnalogBlockParams(droop_rate=0.001)
    tl = sch.build_cycle_timeline()
    pred, trace = sch.run_prediction(tl, net, p, 0.4, 0.5)
    step2 = [e for e in trace if e.kind == sch.UNIT_SUBCYCLE][4:]
    # unit 1 latches at 52 us and is read at 84 us
    ends = [e.start_us + e.duration_us for e in step2]
    assert ends == [52.0, 62.0, 72.0, 82.0]
    held = np.array([e.h for e in step2])
    decayed = held * 0.999 ** (84.0 - np.array(ends))
    assert decayed[0] == pytest.approx(held[0] * 0.999**32, rel=1e-14)
    assert pred == pytest.approx(an.analog_dense(net, decayed, p), abs=1e-14)


def test_droop_changes_result(net):
    tl = sch.build_cycle_timeline()
    ideal, _ = sch.run_prediction(tl, net, an.IDEAL, 0.4, 0.5)
    droopy, _ = sch.run_prediction(tl, net, an.AnalogBlockParams(droop_rate=0.001), 0.4, 0.5)
    assert droopy != ideal


@given(st.integers(1, 40))
def test_schedule_independence_without_droop(sub_us):
    w = lstm.WeightSet.random(np.random.default_rng(0))
    net = an.program_network(w)
    a, _ = sch.run_prediction(sch.build_cycle_timeline(), net, an.IDEAL, 0.2, 0.6)
    b, _ = sch.run_prediction(sch.build_cycle_timeline(sch.TimelineConfig(subcycle_us=sub_us)), net, an.IDEAL, 0.2, 0.6)
    assert a == b


def test_run_test_set_time_and_energy(prepared, net):
    tl = sch.build_cycle_timeline()
    run = sch.run_test_set(tl, prepared.test.inputs, net)
    assert run.predictions.shape == (45,)
    assert run.total_time_ms == 3.96
    assert sch.run_test_set(tl, prepared.test.inputs[:1], net).total_time_ms * 1000 == 88.0
    # default power: peak on the 8 sub-cycles only
    assert run.energy_mj == pytest.approx(45 * 210.67 * 80e-9 * 1e3, rel=1e-12)


def test_uniform_power_energy():
    uniform = sch.PowerModel(210.67, 210.67, 210.67)
    tl = sch.build_cycle_timeline(power=uniform)
    # 210.67 mW * 88 us = 18.539 uJ
    assert sch.cycle_energy_nj(tl) / 1000 == pytest.approx(18.539, abs=1e-3)
    assert sch.estimate_energy(tl, uniform, 1) * 1e3 == pytest.approx(18.53896, abs=1e-9)


def test_estimate_energy_examples():
    tl = sch.build_cycle_timeline()
    assert sch.estimate_energy(tl, sch.PowerModel(), 1) * 1e3 == pytest.approx(16.854, abs=1e-3)
    assert sch.estimate_energy(tl, sch.PowerModel(0, 0, 0), 5) == 0.0
    one = sch.estimate_energy(tl, sch.PowerModel(), 7)
    assert sch.estimate_energy(tl, sch.PowerModel(), 14) == 2 * one
    with pytest.raises(ValueError):
        sch.estimate_energy(tl, sch.PowerModel(), 0)


@given(st.floats(0, 500), st.floats(0, 500), st.floats(0, 500), st.floats(0.5, 4))
def test_energy_linear_in_power(peak, dense, idle, k):
    tl = sch.build_cycle_timeline()
    base = sch.estimate_energy(tl, sch.PowerModel(peak, dense, idle), 3)
    scaled = sch.estimate_energy(tl, sch.PowerModel(k * peak, k * dense, k * idle), 3)
    assert scaled == pytest.approx(k * base, rel=1e-12, abs=1e-300)


def test_trace_csv_round_trip(net):
    _, trace = sch.run_prediction(sch.build_cycle_timeline(), net, an.IDEAL, 0.4, 0.5)
    text = sch.trace_csv(trace)
    assert text.splitlines()[0] == "phase,start_us,duration_us,kind,power_mw,held_h,held_C,output"
    back = sch.read_trace_csv(text)
    assert len(back) == 13
    assert sch.trace_csv(back) == text
    for a, b in zip(trace, back):
        if a.h is not None:
            assert b.h == pytest.approx(a.h, rel=1e-8)
