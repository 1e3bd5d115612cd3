"""Cycle timeline, sample-hold driven execution, and time/energy accounting.

Time is kept in integer nanoseconds so phase boundaries compare exactly;
public accessors report microseconds or milliseconds.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import analog as an
from .lstm import HIDDEN

UNIT_SUBCYCLE = "unit_subcycle"
DELAY = "delay"
DENSE = "dense"
END_DELAY = "end_delay"
CYCLE_SUMMARY = "cycle_summary"

TIME_STEPS = 2


def _ns(us: float, name: str) -> int:
    ns = round(us * 1000)
    if ns <= 0:
        raise ValueError(f"{name} must be positive, got {us} us")
    if abs(ns - us * 1000) > 1e-6:
        raise ValueError(f"{name} = {us} us is not a whole number of nanoseconds")
    return int(ns)


@dataclass(frozen=True)
class TimelineConfig:
    subcycle_us: float = 10.0  # includes the 2 us settle inside each sub-cycle
    step_delay_us: float = 2.0
    dense_us: float = 3.0
    end_delay_us: float = 1.0


@dataclass(frozen=True)
class PowerModel:
    peak_cell_mw: float = 210.67
    dense_mw: float = 0.0
    idle_mw: float = 0.0

    def __post_init__(self):
        if min(self.peak_cell_mw, self.dense_mw, self.idle_mw) < 0:
            raise ValueError("power figures must be non-negative")

    def for_kind(self, kind: str) -> float:
        if kind == UNIT_SUBCYCLE:
            return self.peak_cell_mw
        if kind == DENSE:
            return self.dense_mw
        return self.idle_mw


@dataclass(frozen=True)
class Phase:
    name: str
    start_ns: int
    duration_ns: int
    kind: str
    power_mw: float
    step: int | None = None
    unit: int | None = None

    @property
    def end_ns(self) -> int:
        return self.start_ns + self.duration_ns

    @property
    def start_us(self) -> float:
        return self.start_ns / 1000

    @property
    def duration_us(self) -> float:
        return self.duration_ns / 1000

    @property
    def end_us(self) -> float:
        return self.end_ns / 1000


@dataclass(frozen=True)
class CycleTimeline:
    phases: tuple[Phase, ...]

    @property
    def cycle_ns(self) -> int:
        return self.phases[-1].end_ns

    @property
    def cycle_time_us(self) -> float:
        return self.cycle_ns / 1000

    def boundaries_us(self) -> list[float]:
        """End time of every phase that closes a stage (step, delay, dense, end)."""
        return [p.end_us for p in self.phases if not (p.kind == UNIT_SUBCYCLE and p.unit != HIDDEN - 1)]

    def subcycles(self, step: int | None = None) -> list[Phase]:
        return [p for p in self.phases if p.kind == UNIT_SUBCYCLE and (step is None or p.step == step)]

    def dense_phase(self) -> Phase:
        return next(p for p in self.phases if p.kind == DENSE)


def build_cycle_timeline(config: TimelineConfig = TimelineConfig(), power: PowerModel = PowerModel()) -> CycleTimeline:
    sub = _ns(config.subcycle_us, "subcycle_us")
    gap = _ns(config.step_delay_us, "step_delay_us")
    dense = _ns(config.dense_us, "dense_us")
    tail = _ns(config.end_delay_us, "end_delay_us")

    phases: list[Phase] = []
    t = 0

    def add(name, dur, kind, step=None, unit=None):
        nonlocal t
        phases.append(Phase(name, t, dur, kind, power.for_kind(kind), step, unit))
        t += dur

    for step in range(TIME_STEPS):
        for unit in range(HIDDEN):
            add(f"step{step + 1}_unit{unit + 1}", sub, UNIT_SUBCYCLE, step, unit)
        add(f"step{step + 1}_delay", gap, DELAY)
    add("dense", dense, DENSE)
    add("end_delay", tail, END_DELAY)
    return CycleTimeline(tuple(phases))


def with_power(timeline: CycleTimeline, power: PowerModel) -> CycleTimeline:
    return CycleTimeline(tuple(
        Phase(p.name, p.start_ns, p.duration_ns, p.kind, power.for_kind(p.kind), p.step, p.unit)
        for p in timeline.phases
    ))


def cycle_energy_nj(timeline: CycleTimeline) -> float:
    # mW * ns = pJ
    return sum(p.power_mw * p.duration_ns for p in timeline.phases) / 1000


def estimate_energy(timeline: CycleTimeline, pm: PowerModel, n_cycles: int) -> float:
    """Energy in millijoules for ``n_cycles`` cycles, each phase charged at the
    power ``pm`` assigns to its kind."""
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    return cycle_energy_nj(with_power(timeline, pm)) * n_cycles * 1e-6


# -- execution --------------------------------------------------------------


@dataclass(frozen=True)
class TraceEntry:
    phase: str
    start_us: float
    duration_us: float
    kind: str
    power_mw: float
    h: float | None = None
    C: float | None = None
    output: float | None = None


@dataclass
class _Memory:
    """Sample-hold cell: a buffered capacitor voltage and the time it was written."""

    value: float = 0.0
    written_ns: int = 0

    def read(self, now_ns: int, p: an.AnalogBlockParams) -> float:
        return float(an.memory_hold(self.value, (now_ns - self.written_ns) / 1000, p))


def run_prediction(timeline: CycleTimeline, net: an.AnalogNetwork, p: an.AnalogBlockParams,
                   x_prev: float, x_curr: float, rng: np.random.Generator | None = None,
                   ) -> tuple[float, list[TraceEntry]]:
    """Walk one cycle: each unit sub-cycle reads the previous step's memories at
    its start and latches its own ``h`` and ``C`` at its end; the dense phase
    reads the second step's ``h`` memories at its start."""
    mem_h = [[_Memory() for _ in range(HIDDEN)] for _ in range(TIME_STEPS)]
    mem_C = [[_Memory() for _ in range(HIDDEN)] for _ in range(TIME_STEPS)]
    inputs = (x_prev, x_curr)
    trace: list[TraceEntry] = []
    prediction = None

    for ph in timeline.phases:
        entry = TraceEntry(ph.name, ph.start_us, ph.duration_us, ph.kind, ph.power_mw)
        if ph.kind == UNIT_SUBCYCLE:
            s, j = ph.step, ph.unit
            if s == 0:
                h_prev = np.zeros(HIDDEN)
                c_prev = 0.0
            else:
                h_prev = np.array([m.read(ph.start_ns, p) for m in mem_h[s - 1]])
                c_prev = mem_C[s - 1][j].read(ph.start_ns, p)
            h, C = an.analog_unit_step(net, j, inputs[s], h_prev, c_prev, p, rng)
            mem_h[s][j] = _Memory(h, ph.end_ns)
            mem_C[s][j] = _Memory(C, ph.end_ns)
            entry = TraceEntry(ph.name, ph.start_us, ph.duration_us, ph.kind, ph.power_mw, h=h, C=C)
        elif ph.kind == DENSE:
            h_final = np.array([m.read(ph.start_ns, p) for m in mem_h[TIME_STEPS - 1]])
            prediction = an.analog_dense(net, h_final, p, rng)
            entry = TraceEntry(ph.name, ph.start_us, ph.duration_us, ph.kind, ph.power_mw, output=prediction)
        trace.append(entry)

    if prediction is None:
        raise ValueError("timeline has no dense phase")
    trace.append(TraceEntry("cycle", 0.0, timeline.cycle_time_us, CYCLE_SUMMARY,
                            cycle_energy_nj(timeline) * 1000 / timeline.cycle_ns, output=prediction))
    return prediction, trace


@dataclass(frozen=True)
class TestSetRun:
    predictions: np.ndarray
    total_time_ms: float
    energy_mj: float
    traces: list = field(default_factory=list, repr=False)


def run_test_set(timeline: CycleTimeline, inputs, net: an.AnalogNetwork, p: an.AnalogBlockParams = an.IDEAL,
                 rng: np.random.Generator | None = None, keep_traces: bool = False) -> TestSetRun:
    """Run one cycle per ``(x_prev, x_curr)`` row; energy uses the timeline's power tags."""
    X = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if X.shape[0] == 0 or X.shape[1] < 2:
        raise ValueError("need at least one (x_prev, x_curr) row")
    preds = np.empty(X.shape[0])
    traces = []
    for k, row in enumerate(X):
        preds[k], trace = run_prediction(timeline, net, p, row[0], row[1], rng)
        if keep_traces:
            traces.append(trace)
    n = X.shape[0]
    total_ms = n * timeline.cycle_ns / 1_000_000
    energy_mj = cycle_energy_nj(timeline) * n * 1e-6
    return TestSetRun(preds, total_ms, energy_mj, traces)


TRACE_HEADER = ["phase", "start_us", "duration_us", "kind", "power_mw", "held_h", "held_C", "output"]


def _fmt(v) -> str:
    return "" if v is None else f"{v:.9g}"


def trace_csv(trace: list[TraceEntry]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for e in trace:
        writer.writerow([e.phase, _fmt(e.start_us), _fmt(e.duration_us), e.kind, _fmt(e.power_mw),
                         _fmt(e.h), _fmt(e.C), _fmt(e.output)])
    return buf.getvalue()


def read_trace_csv(text: str) -> list[TraceEntry]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != TRACE_HEADER:
        raise ValueError(f"unexpected trace header {reader.fieldnames}")

    def opt(s):
        return float(s) if s else None

    return [
        TraceEntry(r["phase"], float(r["start_us"]), float(r["duration_us"]), r["kind"], float(r["power_mw"]),
                   opt(r["held_h"]), opt(r["held_C"]), opt(r["output"]))
        for r in reader
    ]
