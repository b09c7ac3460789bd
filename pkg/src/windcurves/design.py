"""Quasi-random experimental design over the seven-variable input space.

Points come from the standard Sobol sequence (Joe-Kuo direction numbers,
Gray-code ordering, origin included) and are mapped affinely onto
configurable per-variable ranges.  The sequence is fully deterministic;
no RNG is involved anywhere in this module except the uniform comparator
used by the space-filling diagnostic.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from . import atmosphere
from .data import Dataset, EnvSample
from .errors import ColumnCountMismatch, DimensionUnsupported, UnknownVariable

__all__ = [
    "DESIGN_VARIABLES",
    "MAX_DIMENSION",
    "VariableRanges",
    "DEFAULT_RANGES",
    "sobol_unit",
    "scale_design",
    "design_dataset",
    "max_dyadic_box_deviation",
]

#: Design variables in the fixed column order used by every design matrix.
DESIGN_VARIABLES = ("v", "yaw", "wave_h", "wave_dir", "temp", "pressure", "rh")

#: Largest supported Sobol dimension.
MAX_DIMENSION = 21


@dataclass(frozen=True)
class VariableRanges:
    """Per-variable (lower, upper) bounds, each in the variable's own unit.

    Defaults cover wind speed up to cut-out, yaw to 30 degrees, wave height
    to 20 m, wave direction to 180 degrees, temperature -20..40 C, pressure
    within 10 percent of one standard atmosphere, and the full humidity
    fraction.
    """

    v: tuple = (0.0, 25.0)
    yaw: tuple = (0.0, 30.0)
    wave_h: tuple = (0.0, 20.0)
    wave_dir: tuple = (0.0, 180.0)
    temp: tuple = (-20.0, 40.0)
    pressure: tuple = (91192.5, 111457.5)
    rh: tuple = (0.0, 1.0)

    def __post_init__(self):
        for name in DESIGN_VARIABLES:
            lower, upper = getattr(self, name)
            if not lower < upper:
                raise ValueError(f"range for {name!r} must satisfy lower < upper, got ({lower}, {upper})")

    @classmethod
    def from_mapping(cls, overrides) -> "VariableRanges":
        """Build ranges from a mapping like ``{"v": [0, 25], ...}``.

        Missing variables keep their defaults; unknown keys are rejected.
        """
        kwargs = {}
        for name, bounds in overrides.items():
            if name not in DESIGN_VARIABLES:
                raise UnknownVariable(
                    f"unknown design variable {name!r}; expected one of {', '.join(DESIGN_VARIABLES)}"
                )
            lower, upper = (float(b) for b in bounds)
            kwargs[name] = (lower, upper)
        return cls(**kwargs)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower, upper) vectors in design-variable order."""
        lower = np.array([getattr(self, name)[0] for name in DESIGN_VARIABLES])
        upper = np.array([getattr(self, name)[1] for name in DESIGN_VARIABLES])
        return lower, upper


DEFAULT_RANGES = VariableRanges()


def sobol_unit(n: int, d: int) -> np.ndarray:
    """First ``n`` points of the ``d``-dimensional Sobol sequence in [0, 1).

    Joe-Kuo (new) direction numbers with Gray-code ordering; the index-0
    point (the origin) is included.  Output is bit-identical across runs.
    """
    if not 1 <= d <= MAX_DIMENSION:
        raise DimensionUnsupported(f"dimension must lie in [1, {MAX_DIMENSION}], got {d}")
    if n < 1:
        raise ValueError(f"need at least one point, got {n}")
    sampler = qmc.Sobol(d=d, scramble=False, bits=32)
    with warnings.catch_warnings():
        # scipy warns when n is not a power of two; prefix determinism is
        # what matters here, not QMC balance.
        warnings.simplefilter("ignore", UserWarning)
        return sampler.random(n)


def scale_design(u: np.ndarray, ranges: VariableRanges = DEFAULT_RANGES) -> list:
    """Map unit-cube rows onto the seven design ranges as EnvSamples.

    Columns must follow the fixed order (v, yaw, wave_h, wave_dir, temp,
    pressure, rh).  Air density is populated from temperature, pressure
    and humidity.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[1] != len(DESIGN_VARIABLES):
        got = u.shape[1] if u.ndim == 2 else None
        raise ColumnCountMismatch(f"expected {len(DESIGN_VARIABLES)} columns, got {got}")
    lower, upper = ranges.bounds()
    scaled = lower + u * (upper - lower)
    samples = []
    for row in scaled:
        v, yaw, wave_h, wave_dir, temp, pressure, rh = row
        rho = atmosphere.air_density(temp, pressure, rh)
        samples.append(EnvSample(v=v, yaw=yaw, wave_h=wave_h, wave_dir=wave_dir,
                                 temp=temp, pressure=pressure, rh=rh, rho=rho))
    return samples


def design_dataset(n: int, ranges: VariableRanges = DEFAULT_RANGES,
                   skip_origin: bool = False) -> Dataset:
    """Sobol design of ``n`` conditions as a Dataset without power columns.

    With ``skip_origin`` the all-zeros first point is dropped and the next
    ``n`` points are used instead, for designs that must avoid the
    lower-bound corner.
    """
    u = sobol_unit(n + 1 if skip_origin else n, len(DESIGN_VARIABLES))
    if skip_origin:
        u = u[1:]
    samples = scale_design(u, ranges)
    return Dataset(rows=[(env, None) for env in samples], provenance=f"sobol n={n}")


def max_dyadic_box_deviation(u: np.ndarray, volume_exponent: int = 3) -> float:
    """Space-filling diagnostic: worst dyadic-box count deviation.

    Considers every axis-aligned partition of the unit cube into
    ``2**volume_exponent`` congruent dyadic boxes (all ways of splitting the
    exponent across dimensions) and returns the largest absolute difference
    between a box's point count and the expected ``n / 2**volume_exponent``.
    Lower is more uniform.
    """
    u = np.asarray(u, dtype=float)
    n, d = u.shape
    n_boxes = 2 ** volume_exponent
    expected = n / n_boxes
    worst = 0.0
    for split in itertools.product(range(volume_exponent + 1), repeat=d):
        if sum(split) != volume_exponent:
            continue
        index = np.zeros(n, dtype=np.int64)
        for k, bits in enumerate(split):
            if bits == 0:
                continue
            cells = np.minimum((u[:, k] * (1 << bits)).astype(np.int64), (1 << bits) - 1)
            index = index * (1 << bits) + cells
        counts = np.bincount(index, minlength=n_boxes)
        worst = max(worst, float(np.max(np.abs(counts - expected))))
    return worst
