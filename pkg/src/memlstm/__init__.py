"""Behavioral simulator of a memristive-crossbar LSTM forecaster."""

from .analog import AnalogBlockParams, AnalogNetwork, analog_cell_step, program_network
from .crossbar import CrossbarArray, MemristorParams, VariationModel, program, quantize, read_effective_weights, vmm
from .dataset import Normalizer, RawSeries, SupervisedSet, canonical_series, prepare
from .lstm import CellState, Hyperparams, WeightSet, cell_step, forward, metrics, train
from .scheduler import CycleTimeline, PowerModel, TimelineConfig, build_cycle_timeline, run_prediction, run_test_set

__version__ = "0.1.0"
