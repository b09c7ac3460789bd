"""Desk-scale stochastic turbine simulator.

Maps environmental conditions to power records with a closed-form physical
model: cubic-law mean power with a cos^3 yaw penalty and a rated-power cap,
plus a fractional-polynomial standard-deviation surface.  Optional seeded
Gaussian noise makes it a stand-in for a far more expensive aeroelastic
simulator, so the full estimation pipeline can be exercised end to end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import FracPolyCoeffs, fracpoly_eval
from .data import Dataset, EnvSample, IEA_15MW, PowerRecord, TurbineSpec
from .errors import EmptyDataset, MissingDensity

__all__ = ["OracleConfig", "mean_power", "power_sd", "simulate"]


@dataclass(frozen=True)
class OracleConfig:
    """Simulator settings: turbine, noise levels, seed, sd-surface coefficients.

    noise_sd_mean is the standard deviation of additive Gaussian noise on
    mean power, in kW.  noise_sd_frac scales multiplicative Gaussian noise
    on the power standard deviation.  Both default to zero (noiseless).
    """

    spec: TurbineSpec = IEA_15MW
    noise_sd_mean: float = 0.0
    noise_sd_frac: float = 0.0
    seed: int = 42
    sd_coeffs: FracPolyCoeffs = field(default_factory=FracPolyCoeffs)

    def __post_init__(self):
        if self.noise_sd_mean < 0 or self.noise_sd_frac < 0:
            raise ValueError("noise parameters must be >= 0")


def mean_power(s: EnvSample, spec: TurbineSpec = IEA_15MW) -> float:
    """Mean generator power in kW for one condition.

    Zero below cut-in and at or above cut-out; otherwise the cubic law
    (1/2)*cp*rho*A*v^3*cos^3(yaw), capped at rated power.
    """
    if s.rho is None:
        raise MissingDensity("sample has no air density; populate rho first")
    if s.v < spec.cut_in or s.v >= spec.cut_out:
        return 0.0
    aero = 0.5 * spec.cp * s.rho * spec.rotor_area
    power_w = aero * s.v ** 3 * math.cos(math.radians(s.yaw)) ** 3
    return min(power_w / 1000.0, spec.rated_power)


def power_sd(s: EnvSample, cfg: OracleConfig = OracleConfig()) -> float:
    """Power standard deviation in kW from the fractional-polynomial surface."""
    if s.rho is None:
        raise MissingDensity("sample has no air density; populate rho first")
    return fracpoly_eval(s.v, s.wave_h, s.wave_dir, s.rho,
                         coeffs=cfg.sd_coeffs, spec=cfg.spec)


def simulate(samples, cfg: OracleConfig = OracleConfig()) -> Dataset:
    """Power records for a list of conditions, bit-reproducible per config.

    Row i draws its noise from a generator seeded with (cfg.seed, i), so
    results do not depend on how the sample list was sliced or batched.
    Mean power is clamped to [0, rated]; the standard deviation to >= 0.
    """
    samples = list(samples)
    if not samples:
        raise EmptyDataset("no samples to simulate")
    noisy = cfg.noise_sd_mean > 0 or cfg.noise_sd_frac > 0
    rows = []
    for i, env in enumerate(samples):
        p_mean = mean_power(env, cfg.spec)
        p_sd = power_sd(env, cfg)
        if noisy:
            z = np.random.default_rng((cfg.seed, i)).normal(size=2)
            p_mean = min(max(p_mean + cfg.noise_sd_mean * z[0], 0.0), cfg.spec.rated_power)
            p_sd = max(p_sd * (1.0 + cfg.noise_sd_frac * z[1]), 0.0)
        rows.append((env, PowerRecord(p_mean=p_mean, p_sd=p_sd)))
    return Dataset(rows=rows, provenance=f"oracle seed={cfg.seed}")
