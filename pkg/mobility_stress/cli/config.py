"""Pipeline configuration: defaults, a flat key=value file, and flag overrides."""

from __future__ import annotations

import datetime as dt
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from dotenv import dotenv_values
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from mobility_stress.dataset import TermCalendar
from mobility_stress.evaluation import FeatureSubset, ModelConfig
from mobility_stress.exceptions import ConfigInvalid, FileMissing
from mobility_stress.features import MetricConfig
from mobility_stress.nn import TrainConfig

_LIST_KEYS = ("hidden_sizes", "dropout_rates")


class PipelineConfig(BaseModel):
    """Every tunable of the pipeline, keyed as in the config file."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    utc_offset_hours: int = Field(default=-4, ge=-12, le=14)
    """Fixed offset used to cut timestamps into local days."""
    tile_size_m: float = Field(default=500.0, gt=0)
    eps_m: float = Field(default=300.0, gt=0)
    """Neighbourhood radius of the stay-region clustering."""
    min_pts: int = Field(default=5, ge=1)
    bin_minutes: int = Field(default=10, gt=0)
    """Width of the time bins fixes are thinned to before clustering."""
    term_first_day: dt.date = dt.date(2013, 3, 27)
    term_last_day: dt.date = dt.date(2013, 6, 5)
    min_days_per_user: int = Field(default=3, ge=1)

    hidden_sizes: Tuple[int, ...] = (57, 35, 35)
    dropout_rates: Tuple[float, ...] = (0.35, 0.25, 0.15)
    learning_rate: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    epsilon: float = Field(default=1e-8, gt=0)
    batch_size: int = Field(default=32, ge=2)
    max_epochs: int = Field(default=500, ge=1)
    patience: int = Field(default=20, ge=0)
    min_delta: float = Field(default=1e-4, ge=0)
    val_fraction: float = Field(default=0.15, gt=0, lt=0.5)

    k_folds: int = Field(default=5, ge=2)
    seed: int = 0
    subset: FeatureSubset = FeatureSubset.ALL
    """Feature subset whose models and training logs are written."""
    strict: bool = False
    """Fail on the first malformed input row instead of skipping it."""
    importance_repeats: int = Field(default=10, ge=1)

    @field_validator(*_LIST_KEYS, mode="before")
    @classmethod
    def _split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(part.strip() for part in value.split(",") if part.strip())
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "PipelineConfig":
        if self.term_first_day > self.term_last_day:
            raise ValueError("term_first_day must not be after term_last_day")
        if len(self.hidden_sizes) != len(self.dropout_rates):
            raise ValueError(
                f"{len(self.hidden_sizes)} hidden_sizes "
                f"but {len(self.dropout_rates)} dropout_rates"
            )
        if any(size < 1 for size in self.hidden_sizes):
            raise ValueError("hidden_sizes must be positive")
        if any(not 0 <= rate < 1 for rate in self.dropout_rates):
            raise ValueError("dropout_rates must lie in [0, 1)")
        return self

    def metric_settings(self) -> MetricConfig:
        return MetricConfig(
            tile_size_m=self.tile_size_m,
            eps_m=self.eps_m,
            min_pts=self.min_pts,
            bin_minutes=self.bin_minutes,
        )

    def term_calendar(self) -> TermCalendar:
        return TermCalendar(first_day=self.term_first_day, last_day=self.term_last_day)

    def network_settings(self) -> ModelConfig:
        return ModelConfig(
            hidden_sizes=self.hidden_sizes,
            dropout_rates=self.dropout_rates,
            val_fraction=self.val_fraction,
            train=TrainConfig(
                learning_rate=self.learning_rate,
                beta1=self.beta1,
                beta2=self.beta2,
                epsilon=self.epsilon,
                batch_size=self.batch_size,
                max_epochs=self.max_epochs,
                patience=self.patience,
                min_delta=self.min_delta,
                seed=self.seed,
            ),
        )


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> PipelineConfig:
    """Defaults, then the file at `path`, then non-None `overrides`.

    Raises:
        FileMissing: if `path` does not exist.
        ConfigInvalid: on unknown keys, keys without a value, or bad values.
    """
    values: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileMissing(f"config file not found: {path}")
        for key, value in dotenv_values(path).items():
            if value is None:
                raise ConfigInvalid(f"{path}: key '{key}' has no value")
            values[key] = value
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return PipelineConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigInvalid(f"invalid configuration: {e}") from e


def dump_config(cfg: PipelineConfig) -> str:
    """The effective configuration in the file format `load_config` reads."""
    lines = ["# effective mobility-stress configuration"]
    for key, value in cfg.model_dump(mode="json").items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"
