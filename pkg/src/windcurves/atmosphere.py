"""Atmospheric physics and field-data preprocessing.

Air density from temperature, pressure and humidity; the IEC-style density
correction of wind speeds; the 10-minute wind-direction variability proxy
for yaw misalignment; and the join of fast (10-min) meteorological series
with slow (1-h) wave series into model-ready rows.
"""
from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .errors import EmptyOverlap, IoError, NonphysicalResult, ParseError, SeriesTooShort, TempOutOfRange

__all__ = [
    "AtmosphereConstants",
    "DEFAULT_CONSTANTS",
    "saturation_pressure",
    "air_density",
    "iec_corrected_speed",
    "yaw_proxy",
    "FastSeries",
    "WaveSeries",
    "YawSeries",
    "read_fast_series",
    "read_wave_series",
    "read_direction_series",
    "align_buoy_series",
]


@dataclass(frozen=True)
class AtmosphereConstants:
    """Physical constants for moist-air density and the density correction.

    ``kelvin_offset`` defaults to 273.3 K to reproduce the published
    formulation literally; pass 273.15 for the textbook conversion (the
    difference in density is below 0.06 %).
    """

    r_d: float = 287.05        # dry air gas constant, J/(kg K)
    r_v: float = 461.5         # water vapor gas constant, J/(kg K)
    kelvin_offset: float = 273.3
    rho_ref: float = 1.225     # sea-level reference density, kg/m^3

    def __post_init__(self):
        for name in ("r_d", "r_v", "kelvin_offset", "rho_ref"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_CONSTANTS = AtmosphereConstants()


def saturation_pressure(temp):
    """Saturation vapor pressure in Pa from the Magnus-Tetens correlation.

    Parameters
    ----------
    temp : float or ndarray
        Air temperature in degrees Celsius, within [-40, 60].

    Returns
    -------
    float or ndarray
        610.94 * exp(17.625*T / (T + 243.04)), strictly increasing in T.
    """
    t = np.asarray(temp, dtype=float)
    if np.any(t < -40.0) or np.any(t > 60.0):
        raise TempOutOfRange(f"temperature {temp} outside [-40, 60] C")
    p = 610.94 * np.exp(17.625 * t / (t + 243.04))
    return float(p) if t.ndim == 0 else p


def air_density(temp, pressure, rh, consts: AtmosphereConstants = DEFAULT_CONSTANTS):
    """Moist-air density in kg/m^3.

    The dry-air partial pressure (total minus water vapor) and the vapor
    partial pressure each contribute an ideal-gas term:

        rho = (P - rh*P_sat) / (R_d*(T + offset)) + rh*P_sat / (R_v*(T + offset))

    Parameters
    ----------
    temp : float or ndarray
        Air temperature, degrees Celsius.
    pressure : float or ndarray
        Total atmospheric pressure, Pa (> 0).
    rh : float or ndarray
        Relative humidity as a fraction in [0, 1].

    Raises
    ------
    NonphysicalResult
        If the computed density is not positive (inconsistent inputs).
    """
    t = np.asarray(temp, dtype=float)
    p = np.asarray(pressure, dtype=float)
    phi = np.asarray(rh, dtype=float)
    if np.any(p <= 0):
        raise ValueError("pressure must be positive")
    if np.any(phi < 0) or np.any(phi > 1):
        raise ValueError("relative humidity must be a fraction in [0, 1]")
    p_vap = phi * saturation_pressure(t)
    t_k = t + consts.kelvin_offset
    rho = (p - p_vap) / (consts.r_d * t_k) + p_vap / (consts.r_v * t_k)
    if np.any(rho <= 0):
        raise NonphysicalResult(f"non-positive density from T={temp}, P={pressure}, rh={rh}")
    return float(rho) if rho.ndim == 0 else rho


def iec_corrected_speed(v, rho, consts: AtmosphereConstants = DEFAULT_CONSTANTS):
    """Density-corrected wind speed, v * (rho / rho_ref)^(1/3).

    Maps measured speeds to the speeds that would yield the same kinetic
    power flux at the reference density, as used by the method of bins.
    """
    vv = np.asarray(v, dtype=float)
    rr = np.asarray(rho, dtype=float)
    if np.any(vv < 0):
        raise ValueError("wind speed must be non-negative")
    if np.any(rr <= 0):
        raise ValueError("density must be positive")
    out = vv * np.cbrt(rr / consts.rho_ref)
    return float(out) if out.ndim == 0 else out


def yaw_proxy(directions, window: int = 600):
    """Per-window standard deviation of a 1-Hz wind-direction series.

    The series is cut into non-overlapping windows of ``window`` samples
    (600 s = 10 min by default).  Within each window the directions are
    unwrapped (a jump between consecutive samples larger than 180 degrees
    is shifted by a multiple of 360) before taking the sample standard
    deviation with the n-1 denominator.  The result is the variability
    proxy for relative wind direction.

    Returns
    -------
    ndarray
        One value per complete window; length = floor(len(directions)/window).
    """
    d = np.asarray(directions, dtype=float)
    if d.ndim != 1:
        raise ValueError("direction series must be one-dimensional")
    if window < 2:
        raise ValueError("window must span at least 2 samples")
    if d.size < window:
        raise SeriesTooShort(f"series of {d.size} samples shorter than window {window}")
    n_win = d.size // window
    chunks = d[: n_win * window].reshape(n_win, window)
    unwrapped = np.unwrap(chunks, period=360.0, axis=1)
    return unwrapped.std(axis=1, ddof=1)


# --- buoy series ------------------------------------------------------------

@dataclass(frozen=True)
class FastSeries:
    """10-minute meteorological records: wind speed, temperature, pressure, humidity."""

    times: tuple
    v: np.ndarray
    temp: np.ndarray
    pressure: np.ndarray
    rh: np.ndarray


@dataclass(frozen=True)
class WaveSeries:
    """1-hour wave records: significant height and direction."""

    times: tuple
    wave_h: np.ndarray
    wave_dir: np.ndarray


@dataclass(frozen=True)
class YawSeries:
    """10-minute yaw-misalignment proxy values (degrees)."""

    times: tuple
    yaw: np.ndarray


def _parse_time(text, line_no):
    try:
        return datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    except ValueError as exc:
        raise ParseError(f"line {line_no}: bad timestamp {text!r}") from exc


def _parse_float(text, line_no):
    text = text.strip()
    if not text:
        return math.nan
    try:
        return float(text)
    except ValueError as exc:
        raise ParseError(f"line {line_no}: bad number {text!r}") from exc


def _read_rows(path, expected_header):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(expected_header):
            raise ParseError(f"{path}: expected header {','.join(expected_header)}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise ParseError(f"line {line_no}: expected {len(expected_header)} fields")
            rows.append((line_no, row))
    return rows


def read_fast_series(path) -> FastSeries:
    """Read a 10-minute CSV `timestamp_iso8601,v_mps,temp_c,pressure_pa,rh_pct`."""
    rows = _read_rows(path, ("timestamp_iso8601", "v_mps", "temp_c", "pressure_pa", "rh_pct"))
    times, cols = [], ([], [], [], [])
    for line_no, row in rows:
        times.append(_parse_time(row[0], line_no))
        for i in range(4):
            cols[i].append(_parse_float(row[i + 1], line_no))
    rh = np.asarray(cols[3]) / 100.0
    return FastSeries(tuple(times), np.asarray(cols[0]), np.asarray(cols[1]), np.asarray(cols[2]), rh)


def read_wave_series(path) -> WaveSeries:
    """Read a 1-hour CSV `timestamp_iso8601,wave_h_m,wave_dir_deg`."""
    rows = _read_rows(path, ("timestamp_iso8601", "wave_h_m", "wave_dir_deg"))
    times, hs, ds = [], [], []
    for line_no, row in rows:
        times.append(_parse_time(row[0], line_no))
        hs.append(_parse_float(row[1], line_no))
        ds.append(_parse_float(row[2], line_no))
    return WaveSeries(tuple(times), np.asarray(hs), np.asarray(ds))


def read_direction_series(path):
    """Read a 1-Hz CSV `timestamp_iso8601,dir_deg`; returns (times, directions)."""
    rows = _read_rows(path, ("timestamp_iso8601", "dir_deg"))
    times, ds = [], []
    for line_no, row in rows:
        times.append(_parse_time(row[0], line_no))
        ds.append(_parse_float(row[1], line_no))
    return tuple(times), np.asarray(ds)


def _check_increasing(times, label):
    for a, b in zip(times, times[1:]):
        if b <= a:
            raise ValueError(f"{label} timestamps must be strictly increasing")


def align_buoy_series(fast: FastSeries, wave: WaveSeries, yaw: YawSeries,
                      consts: AtmosphereConstants = DEFAULT_CONSTANTS):
    """Join fast met records, hourly wave records and the yaw proxy.

    Each hourly wave record is forward-filled onto the 10-minute slots of
    its hour.  Yaw values are matched on exact timestamps.  Rows missing
    any field (no wave cover, no yaw match, or NaN) are dropped.

    Returns
    -------
    (Dataset, int)
        Environmental rows without power columns (density populated from
        temperature, pressure and humidity) and the dropped-row count.
    """
    from .data import Dataset, EnvSample

    _check_increasing(fast.times, "fast")
    _check_increasing(wave.times, "wave")
    _check_increasing(yaw.times, "yaw")

    yaw_at = dict(zip(yaw.times, yaw.yaw))
    hour = timedelta(hours=1)
    rows = []
    dropped = 0
    for i, t in enumerate(fast.times):
        j = bisect_right(wave.times, t) - 1
        values = (fast.v[i], fast.temp[i], fast.pressure[i], fast.rh[i])
        yaw_val = yaw_at.get(t, math.nan)
        if j < 0 or t - wave.times[j] >= hour:
            dropped += 1
            continue
        wave_vals = (wave.wave_h[j], wave.wave_dir[j])
        if any(math.isnan(x) for x in (*values, yaw_val, *wave_vals)):
            dropped += 1
            continue
        v, temp, pressure, rh = values
        sample = EnvSample(
            v=v, yaw=float(yaw_val), wave_h=float(wave_vals[0]), wave_dir=float(wave_vals[1]),
            temp=temp, pressure=pressure, rh=rh,
            rho=air_density(temp, pressure, rh, consts),
        )
        rows.append((sample, None))
    if not rows:
        raise EmptyOverlap("no joined rows: series do not overlap or all rows incomplete")
    return Dataset(rows=rows, provenance="buoy-join"), dropped
