"""Run configuration: one JSON file, ``"version": "v1"``, unknown keys rejected.

Precedence, highest first: command-line flags, the config file, built-in
defaults.  A global ``seed`` (file or ``--seed``) replaces both the trainer
seed and the variation seed.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import analog as an
from . import crossbar as xb
from . import lstm
from . import scheduler as sch
from .errors import ConfigError


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DatasetSection(_Section):
    path: str | None = None  # None selects the bundled airline series
    test_count: int = Field(45, ge=1)


class TrainSection(_Section):
    learning_rate: float = Field(0.05, gt=0)
    epochs: int = Field(500, ge=1)
    seed: int = Field(42, ge=0, lt=2**64)
    clip_norm: float = Field(1.0, gt=0)
    batch_size: int = Field(1, ge=1)


class MemristorSection(_Section):
    R_on: float = Field(10e3, gt=0)
    R_off: float = Field(10e6, gt=0)
    levels: Union[int, Literal["continuous"], None] = None

    @field_validator("levels")
    @classmethod
    def _levels(cls, v):
        if v == "continuous":
            return None
        if v is not None and v < 2:
            raise ValueError("levels must be >= 2 or 'continuous'")
        return v


class VariationSection(_Section):
    sigma_rel: float = Field(0.0, ge=0)
    read_noise_rel: float = Field(0.0, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)


class AnalogSection(_Section):
    act_scale: float = Field(10.0, gt=0)
    mult_scale: float = Field(4.0, gt=0)
    gain_error_rel: float = Field(0.0, gt=-1)
    offset_v: float = 0.0
    lstm_bias_offset_v: float = 0.3
    dense_bias_offset_v: float = 0.25
    droop_rate: float = Field(0.0, ge=0, lt=1)
    offset_compensation: bool = False


class TimelineSection(_Section):
    subcycle_us: float = Field(10.0, gt=0)
    step_delay_us: float = Field(2.0, gt=0)
    dense_us: float = Field(3.0, gt=0)
    end_delay_us: float = Field(1.0, gt=0)


class PowerSection(_Section):
    peak_cell_mw: float = Field(210.67, ge=0)
    dense_mw: float = Field(0.0, ge=0)
    idle_mw: float = Field(0.0, ge=0)


class RunConfig(_Section):
    version: Literal["v1"] = "v1"
    dataset: DatasetSection = DatasetSection()
    train: TrainSection = TrainSection()
    memristor: MemristorSection = MemristorSection()
    variation: VariationSection = VariationSection()
    analog: AnalogSection = AnalogSection()
    timeline: TimelineSection = TimelineSection()
    power: PowerSection = PowerSection()
    output_dir: str = "runs"
    seed: int | None = Field(None, ge=0, lt=2**64)

    # -- domain objects -----------------------------------------------------

    def hyperparams(self) -> lstm.Hyperparams:
        t = self.train
        seed = self.seed if self.seed is not None else t.seed
        return lstm.Hyperparams(t.learning_rate, t.epochs, seed, t.clip_norm, t.batch_size)

    def memristor_params(self) -> xb.MemristorParams:
        m = self.memristor
        return xb.MemristorParams(m.R_on, m.R_off, m.levels)

    def variation_model(self) -> xb.VariationModel:
        v = self.variation
        seed = self.seed if self.seed is not None else v.seed
        return xb.VariationModel(v.sigma_rel, v.read_noise_rel, seed)

    def analog_params(self) -> an.AnalogBlockParams:
        return an.AnalogBlockParams(**self.analog.model_dump())

    def timeline_config(self) -> sch.TimelineConfig:
        return sch.TimelineConfig(**self.timeline.model_dump())

    def power_model(self) -> sch.PowerModel:
        return sch.PowerModel(**self.power.model_dump())

    def updated(self, section: str | None, **values) -> "RunConfig":
        """Copy with some fields replaced, re-validated."""
        data = self.model_dump()
        target = data if section is None else data[section]
        target.update(values)
        return from_dict(data)


def from_dict(data: dict) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(data)
        cfg.memristor_params()
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ConfigError(f"{where}: {first['msg']}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or "version" not in data:
        raise ConfigError(f"{path}: config must be an object with a 'version' key")
    return from_dict(data)
