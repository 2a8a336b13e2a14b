"""Flat ``key = value`` experiment configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..errors import FormatError, ParameterError
from ..fuzzy import FEParams


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(";", ",").split(",") if x.strip())


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.replace(";", ",").split(",") if x.strip())


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    reference_temp: int = 25
    temperatures: tuple[int, ...] = (10, 25, 50)
    readings_per_temp: int = 50
    enrollment_readings: int = 50
    devices: int = 14
    cell_count: int = 128
    profiles: tuple[str, ...] = ("F401RE", "F446RE")
    weak_fraction: float = 0.04
    seed: int = 2023
    out_dir: str = "out"
    readings_file: str = ""
    enrollment_file: str = ""
    references_file: str = ""
    fe_t: int = 5
    fe_k: int = 80
    fe_delta: float = 1e-3
    fe_s: int = 128
    fe_key_len: int = 128
    fe_trials_per_temp: int = 50
    write_helper: bool = False
    strict: bool = False

    def __post_init__(self):
        if self.reference_temp not in self.temperatures:
            raise ParameterError(
                f"reference temperature {self.reference_temp} is not in {list(self.temperatures)}"
            )
        for name in ("readings_per_temp", "devices", "cell_count"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if self.enrollment_readings < 0 or self.fe_trials_per_temp < 0:
            raise ParameterError("enrollment_readings and fe_trials_per_temp must be non-negative")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")

    def path(self, explicit: str, default_name: str) -> Path:
        return Path(explicit) if explicit else Path(self.out_dir) / default_name

    @property
    def readings_path(self) -> Path:
        return self.path(self.readings_file, "readings.csv")

    @property
    def enrollment_path(self) -> Path:
        return self.path(self.enrollment_file, "enrollment.csv")

    @property
    def references_path(self) -> Path:
        return self.path(self.references_file, "references.csv")

    def fe_params(self) -> FEParams:
        return FEParams(n=self.cell_count, t=self.fe_t, delta=self.fe_delta, k=self.fe_k,
                        s=self.fe_s, key_len=self.fe_key_len)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


_CONVERTERS = {
    "temperatures": _int_list,
    "profiles": _str_list,
    "write_helper": _bool,
    "strict": _bool,
}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{source}: expected 'key = value'", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise FormatError(f"{source}: unknown key {key!r}", lineno)
        try:
            if key in _CONVERTERS:
                values[key] = _CONVERTERS[key](value)
            elif types[key] == "int":
                values[key] = int(value)
            elif types[key] == "float":
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError as exc:
            raise FormatError(f"{source}: bad value for {key}: {exc}", lineno) from None
    return ExperimentConfig(**values)


def load_config(path: str | os.PathLike | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    config = parse_config(path.read_text(encoding="utf-8"), source=str(path))
    return config
