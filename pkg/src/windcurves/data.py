"""Domain types and the dataset CSV format.

An :class:`EnvSample` holds one seven-variable environmental condition plus
the derived air density; a :class:`PowerRecord` holds the mean and standard
deviation of generator power for that condition; a :class:`Dataset` is an
ordered list of such pairs.  CSV cells use the shortest round-trip decimal
representation, so round-trips preserve every numeric field to well beyond
the guaranteed 12 significant digits (exactly, except for the percent
conversion of relative humidity, which can cost an ulp).
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import atmosphere
from .errors import (
    DuplicateVariable,
    EmptyDataset,
    IoError,
    LengthMismatch,
    MissingColumn,
    ParseError,
    UnknownVariable,
)

__all__ = [
    "VARIABLE_NAMES",
    "CSV_HEADER",
    "EnvSample",
    "PowerRecord",
    "TurbineSpec",
    "IEA_15MW",
    "Dataset",
    "load_dataset",
    "save_dataset",
    "select_inputs",
]

log = logging.getLogger(__name__)

#: Selectable variables, in canonical column order.
VARIABLE_NAMES = ("v", "yaw", "wave_h", "wave_dir", "temp", "pressure", "rh", "rho")

CSV_HEADER = (
    "v_mps", "yaw_deg", "wave_h_m", "wave_dir_deg", "temp_c",
    "pressure_pa", "rh_pct", "rho_kgm3", "p_mean_kw", "p_sd_kw",
)

_BETZ_LIMIT = 16.0 / 27.0


@dataclass(frozen=True)
class EnvSample:
    """One environmental condition.

    Units: wind speed m/s, directions degrees, wave height m, temperature
    degrees Celsius, pressure Pa, relative humidity as a fraction in [0, 1],
    air density kg/m^3 (optional until derived).
    """

    v: float
    yaw: float
    wave_h: float
    wave_dir: float
    temp: float
    pressure: float
    rh: float
    rho: float | None = None

    def __post_init__(self):
        if self.v < 0:
            raise ValueError(f"wind speed must be >= 0, got {self.v}")
        if self.wave_h < 0:
            raise ValueError(f"wave height must be >= 0, got {self.wave_h}")
        if self.pressure <= 0:
            raise ValueError(f"pressure must be > 0, got {self.pressure}")
        if not 0.0 <= self.rh <= 1.0:
            raise ValueError(f"relative humidity must be in [0, 1], got {self.rh}")
        if self.rho is not None and self.rho <= 0:
            raise ValueError(f"density must be > 0, got {self.rho}")

    @property
    def in_design_range(self) -> bool:
        """True when yaw and wave direction lie in the design box ([0, 30] and [0, 180])."""
        return 0.0 <= self.yaw <= 30.0 and 0.0 <= self.wave_dir <= 180.0

    def value(self, name: str) -> float | None:
        if name not in VARIABLE_NAMES:
            raise UnknownVariable(f"unknown variable {name!r}; expected one of {', '.join(VARIABLE_NAMES)}")
        return getattr(self, name)


@dataclass(frozen=True)
class PowerRecord:
    """Mean and standard deviation of generator power, kW."""

    p_mean: float
    p_sd: float | None = None

    def __post_init__(self):
        if self.p_mean < 0:
            raise ValueError(f"mean power must be >= 0, got {self.p_mean}")
        if self.p_sd is not None and self.p_sd < 0:
            raise ValueError(f"power standard deviation must be >= 0, got {self.p_sd}")


@dataclass(frozen=True)
class TurbineSpec:
    """Physical turbine constants.  Rotor area is derived from the diameter."""

    rated_power: float = 15000.0   # kW
    rotor_diameter: float = 240.0  # m
    cut_in: float = 3.0            # m/s
    rated_speed: float = 10.59     # m/s
    cut_out: float = 25.0          # m/s
    cp: float = 0.4559

    def __post_init__(self):
        if not 0 < self.cut_in < self.rated_speed < self.cut_out:
            raise ValueError("need 0 < cut_in < rated_speed < cut_out")
        if not 0 < self.cp < _BETZ_LIMIT:
            raise ValueError(f"power coefficient must lie in (0, 16/27), got {self.cp}")
        if self.rated_power <= 0 or self.rotor_diameter <= 0:
            raise ValueError("rated power and rotor diameter must be positive")

    @property
    def rotor_area(self) -> float:
        """Swept rotor area, pi*(d/2)^2, in m^2."""
        return math.pi * (self.rotor_diameter / 2.0) ** 2


#: Reference 15 MW offshore turbine used throughout as the default.
IEA_15MW = TurbineSpec()


@dataclass
class Dataset:
    """Ordered rows of (EnvSample, PowerRecord-or-None) plus a provenance tag.

    Treat as immutable after construction; all accessors return copies or
    views that do not mutate the rows.
    """

    rows: list = field(default_factory=list)
    provenance: str = ""

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def has_power(self) -> bool:
        return bool(self.rows) and self.rows[0][1] is not None

    @property
    def has_sd(self) -> bool:
        return self.has_power and self.rows[0][1].p_sd is not None

    @property
    def has_rho(self) -> bool:
        return bool(self.rows) and self.rows[0][0].rho is not None

    def env_samples(self):
        return [env for env, _ in self.rows]

    def column(self, name: str) -> np.ndarray:
        """One environmental variable over all rows, in row order."""
        values = []
        for env, _ in self.rows:
            value = env.value(name)
            if value is None:
                raise MissingColumn(f"variable {name!r} is not populated in this dataset")
            values.append(value)
        return np.asarray(values, dtype=float)

    def targets(self, target: str) -> np.ndarray:
        """Power target vector: 'mean' for p_mean, 'sd' for p_sd."""
        if target not in ("mean", "sd"):
            raise ValueError(f"target must be 'mean' or 'sd', got {target!r}")
        values = []
        for _, rec in self.rows:
            if rec is None:
                raise MissingColumn("dataset has no power columns")
            value = rec.p_mean if target == "mean" else rec.p_sd
            if value is None:
                raise MissingColumn("dataset has no p_sd column")
            values.append(value)
        return np.asarray(values, dtype=float)

    def subset(self, indices) -> "Dataset":
        """New dataset with the rows at ``indices``, in the given order."""
        return Dataset(rows=[self.rows[i] for i in indices], provenance=self.provenance)

    def with_provenance(self, tag: str) -> "Dataset":
        return replace(self, provenance=tag)


def _format(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def save_dataset(ds: Dataset, path, extra_columns=None) -> None:
    """Write a dataset to CSV with the canonical ten-column header.

    Unpopulated optional fields (rho, p_mean, p_sd) emit empty cells.
    Relative humidity is written in percent, matching the column name.
    ``extra_columns`` maps additional header names to per-row value
    sequences appended after the canonical columns.
    """
    if len(ds) == 0:
        raise EmptyDataset("refusing to save a dataset with no rows")
    extra_columns = extra_columns or {}
    for name, values in extra_columns.items():
        if len(values) != len(ds):
            raise LengthMismatch(f"extra column {name!r} has {len(values)} values for {len(ds)} rows")
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    with fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(CSV_HEADER) + list(extra_columns))
        for i, (env, rec) in enumerate(ds.rows):
            writer.writerow([
                _format(env.v), _format(env.yaw), _format(env.wave_h), _format(env.wave_dir),
                _format(env.temp), _format(env.pressure), _format(env.rh * 100.0),
                _format(env.rho),
                _format(rec.p_mean if rec is not None else None),
                _format(rec.p_sd if rec is not None else None),
            ] + [_format(values[i]) for values in extra_columns.values()])


def _cell(row, idx, line_no) -> float | None:
    if idx is None or idx >= len(row):
        return None
    text = row[idx].strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise ParseError(f"line {line_no}: bad number {text!r}") from exc


def load_dataset(path) -> Dataset:
    """Read a dataset CSV.

    The seven environmental columns are required; ``rho_kgm3``, ``p_mean_kw``
    and ``p_sd_kw`` are optional.  When the density column is absent or
    empty, density is recomputed from temperature, pressure and humidity.
    Rows whose yaw or wave direction fall outside the design box are kept
    and counted (a warning is logged), since ingested field data may exceed
    the designed ranges.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyDataset(f"{path}: empty file")
        header = [h.strip() for h in header]
        col = {name: header.index(name) if name in header else None for name in CSV_HEADER}
        required = CSV_HEADER[:7]
        for name in required:
            if col[name] is None:
                raise MissingColumn(f"{path}: missing required column {name!r}")

        rows = []
        populated_pattern = None
        out_of_design = 0
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            values = {name: _cell(row, col[name], line_no) for name in CSV_HEADER}
            for name in required:
                if values[name] is None:
                    raise ParseError(f"line {line_no}: empty required cell {name!r}")
            pattern = tuple(values[name] is not None for name in ("rho_kgm3", "p_mean_kw", "p_sd_kw"))
            if populated_pattern is None:
                populated_pattern = pattern
            elif pattern != populated_pattern:
                raise ParseError(f"line {line_no}: inconsistent populated-field pattern")

            rh = values["rh_pct"] / 100.0
            rho = values["rho_kgm3"]
            if rho is None:
                rho = atmosphere.air_density(values["temp_c"], values["pressure_pa"], rh)
            try:
                env = EnvSample(
                    v=values["v_mps"], yaw=values["yaw_deg"], wave_h=values["wave_h_m"],
                    wave_dir=values["wave_dir_deg"], temp=values["temp_c"],
                    pressure=values["pressure_pa"], rh=rh, rho=rho,
                )
            except ValueError as exc:
                raise ParseError(f"line {line_no}: {exc}") from exc
            if not env.in_design_range:
                out_of_design += 1
            rec = None
            if values["p_mean_kw"] is not None:
                rec = PowerRecord(p_mean=values["p_mean_kw"], p_sd=values["p_sd_kw"])
            rows.append((env, rec))

    if not rows:
        raise EmptyDataset(f"{path}: no data rows")
    if out_of_design:
        log.warning("%s: %d rows outside the design ranges for yaw/wave direction", path, out_of_design)
    return Dataset(rows=rows, provenance=str(path))


def select_inputs(ds: Dataset, names) -> tuple[np.ndarray, list]:
    """Design matrix for the named variables, columns in the given order.

    Returns (n x p matrix, list of names).  Raises :class:`UnknownVariable`
    for names outside the variable set and :class:`DuplicateVariable` for
    repeats.
    """
    names = list(names)
    if not names:
        raise ValueError("at least one variable name is required")
    seen = set()
    for name in names:
        if name not in VARIABLE_NAMES:
            raise UnknownVariable(f"unknown variable {name!r}; expected one of {', '.join(VARIABLE_NAMES)}")
        if name in seen:
            raise DuplicateVariable(f"variable {name!r} requested twice")
        seen.add(name)
    matrix = np.column_stack([ds.column(name) for name in names])
    return matrix, names
