"""Classical power-curve baselines.

Two families live here: bin-averaged power curves over wind speed (plain,
and with the IEC density correction applied to the speeds first), and a
fractional-polynomial model of normalized power standard deviation in wind
speed, wave height and wave direction, fitted by Levenberg-Marquardt.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import atmosphere
from .data import Dataset, EnvSample, IEA_15MW, TurbineSpec
from .errors import (
    EmptyDataset,
    IoError,
    MissingDensity,
    ParseError,
    SingularJacobian,
    TooFewRows,
)

__all__ = [
    "BinnedCurve",
    "FracPolyCoeffs",
    "DEFAULT_SD_COEFFS",
    "FracPolyFitInfo",
    "fit_binning",
    "predict_binning",
    "save_curve",
    "load_curve",
    "fracpoly_eval",
    "fit_fracpoly",
    "save_coeffs",
    "load_coeffs",
]

CURVE_HEADER = ("bin_lower_mps", "mean_kw", "count")

#: Damping bounds for the Levenberg-Marquardt loop.
_LM_LAMBDA_MAX = 1e12


@dataclass(frozen=True)
class BinnedCurve:
    """Bin-averaged power curve.

    bins is an ordered list of (lower edge m/s, mean power kW, count); every
    edge is an integer multiple of bin_width.  density_corrected records
    whether speeds were IEC-corrected before binning, so predictions apply
    the same correction.
    """

    bin_width: float
    bins: tuple
    density_corrected: bool = False

    def __post_init__(self):
        if self.bin_width <= 0:
            raise ValueError(f"bin width must be > 0, got {self.bin_width}")
        if not self.bins:
            raise EmptyDataset("a binned curve needs at least one bin")
        edges = [b[0] for b in self.bins]
        if edges != sorted(edges):
            raise ValueError("bins must be sorted by lower edge")


def _binning_speed(env: EnvSample, corrected: bool) -> float:
    if not corrected:
        return env.v
    if env.rho is None:
        raise MissingDensity("density correction needs rho on every sample")
    return atmosphere.iec_corrected_speed(env.v, env.rho)


def fit_binning(ds: Dataset, width: float = 0.5, corrected: bool = False,
                spec: TurbineSpec = IEA_15MW, target: str = "mean") -> BinnedCurve:
    """Average the power target within fixed-width wind-speed bins.

    With ``corrected`` the speeds are first mapped through the IEC density
    correction.  ``target`` selects the column to average ("mean" or "sd").
    """
    if len(ds) == 0:
        raise EmptyDataset("cannot bin an empty dataset")
    values = ds.targets(target)
    sums: dict = {}
    for (env, _), value in zip(ds.rows, values):
        idx = int(math.floor(_binning_speed(env, corrected) / width))
        total, count = sums.get(idx, (0.0, 0))
        sums[idx] = (total + value, count + 1)
    bins = tuple((idx * width, total / count, count)
                 for idx, (total, count) in sorted(sums.items()))
    return BinnedCurve(bin_width=width, bins=bins, density_corrected=corrected)


def predict_binning(curve: BinnedCurve, s: EnvSample) -> float:
    """Mean of the bin containing the sample's (possibly corrected) speed.

    Speeds falling in an empty or out-of-range bin use the nearest populated
    bin; equidistant ties resolve to the lower bin.
    """
    speed = _binning_speed(s, curve.density_corrected)
    lower = math.floor(speed / curve.bin_width) * curve.bin_width
    best = min(curve.bins, key=lambda b: (abs(b[0] - lower), b[0]))
    return best[1]


def save_curve(curve: BinnedCurve, path) -> None:
    """Write a binned curve as CSV (lower edge, mean, count)."""
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    with fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for lower, mean, count in curve.bins:
            writer.writerow([repr(float(lower)), repr(float(mean)), count])


def load_curve(path, bin_width: float | None = None,
               density_corrected: bool = False) -> BinnedCurve:
    """Read a binned-curve CSV.

    The file format stores neither the bin width nor the correction flag;
    pass them explicitly, or the width is inferred as the smallest gap
    between consecutive edges (0.5 for a single-bin file).
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CURVE_HEADER:
            raise ParseError(f"{path}: expected header {','.join(CURVE_HEADER)}")
        bins = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                bins.append((float(row[0]), float(row[1]), int(row[2])))
            except (ValueError, IndexError) as exc:
                raise ParseError(f"line {line_no}: bad curve row {row!r}") from exc
    if not bins:
        raise EmptyDataset(f"{path}: no bins")
    if bin_width is None:
        edges = [b[0] for b in bins]
        diffs = [b - a for a, b in zip(edges, edges[1:])]
        bin_width = min(diffs) if diffs else 0.5
    return BinnedCurve(bin_width=bin_width, bins=tuple(bins),
                       density_corrected=density_corrected)


@dataclass(frozen=True)
class FracPolyCoeffs:
    """Constants of the normalized standard-deviation model.

    The model bracket is c0 + c1*(v/cut_out)^e1 + c2*(wave_h/sqrt(A))^e2
    + c3*(wave_dir/180)^e3.  Defaults are the published regression values.
    """

    c0: float = -2.63
    c1: float = 2.78
    e1: float = 0.37
    c2: float = 1.81
    e2: float = 1.21
    c3: float = -1.02
    e3: float = 4.86

    def __post_init__(self):
        if self.e1 <= 0 or self.e2 <= 0 or self.e3 <= 0:
            raise ValueError("exponents e1, e2, e3 must be > 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.c0, self.c1, self.e1, self.c2, self.e2, self.c3, self.e3])

    @classmethod
    def from_array(cls, params) -> "FracPolyCoeffs":
        c0, c1, e1, c2, e2, c3, e3 = (float(p) for p in params)
        return cls(c0=c0, c1=c1, e1=e1, c2=c2, e2=e2, c3=c3, e3=e3)


DEFAULT_SD_COEFFS = FracPolyCoeffs()


@dataclass(frozen=True)
class FracPolyFitInfo:
    converged: bool
    iterations: int
    sse: float


def _sd_scale(rho, spec: TurbineSpec):
    """Normalization constant (1/2)*rho*A*cut_out^3 in kW."""
    return 0.5 * np.asarray(rho, dtype=float) * spec.rotor_area * spec.cut_out ** 3 / 1000.0


def fracpoly_eval(v, wave_h, wave_dir, rho, coeffs: FracPolyCoeffs = DEFAULT_SD_COEFFS,
                  spec: TurbineSpec = IEA_15MW, dir_norm: float = 180.0):
    """Power standard deviation in kW, clamped at zero.

    Accepts scalars or broadcastable arrays.  Wave direction enters
    normalized by ``dir_norm`` degrees so the term is dimensionless.
    """
    t_v = np.asarray(v, dtype=float) / spec.cut_out
    t_h = np.asarray(wave_h, dtype=float) / math.sqrt(spec.rotor_area)
    t_b = np.asarray(wave_dir, dtype=float) / dir_norm
    bracket = (coeffs.c0 + coeffs.c1 * t_v ** coeffs.e1
               + coeffs.c2 * t_h ** coeffs.e2 + coeffs.c3 * t_b ** coeffs.e3)
    out = np.maximum(_sd_scale(rho, spec) * bracket, 0.0)
    return float(out) if out.ndim == 0 else out


def _fracpoly_features(ds: Dataset, spec: TurbineSpec, dir_norm: float):
    for env, _ in ds.rows:
        if env.rho is None:
            raise MissingDensity("the sd model normalization needs rho on every row")
    t_v = ds.column("v") / spec.cut_out
    t_h = ds.column("wave_h") / math.sqrt(spec.rotor_area)
    t_b = ds.column("wave_dir") / dir_norm
    y_norm = ds.targets("sd") / _sd_scale(ds.column("rho"), spec)
    return t_v, t_h, t_b, y_norm


def _bracket(params, t_v, t_h, t_b):
    c0, c1, e1, c2, e2, c3, e3 = params
    return c0 + c1 * t_v ** e1 + c2 * t_h ** e2 + c3 * t_b ** e3


def _jacobian(params, t_v, t_h, t_b):
    c0, c1, e1, c2, e2, c3, e3 = params
    n = len(t_v)
    jac = np.empty((n, 7))
    jac[:, 0] = 1.0
    for col, (c, e, t) in zip((1, 3, 5), ((c1, e1, t_v), (c2, e2, t_h), (c3, e3, t_b))):
        powered = t ** e
        jac[:, col] = powered
        # d/de of c*t^e is c*t^e*ln t; the t=0 limit is 0 for e > 0.
        with np.errstate(divide="ignore"):
            log_t = np.where(t > 0, np.log(np.where(t > 0, t, 1.0)), 0.0)
        jac[:, col + 1] = c * powered * log_t
    return jac


def fit_fracpoly(ds: Dataset, spec: TurbineSpec = IEA_15MW,
                 init: FracPolyCoeffs = DEFAULT_SD_COEFFS, dir_norm: float = 180.0,
                 max_iters: int = 500, full_output: bool = False):
    """Nonlinear least squares for the seven sd-model constants.

    Minimizes the sum of squared unclamped normalized residuals with a
    damped Gauss-Newton (Levenberg-Marquardt) iteration started from
    ``init``.  Stops when the relative SSE change drops below 1e-10 or
    after ``max_iters`` iterations; a stall at maximum damping counts as
    converged.  With ``full_output`` returns (coeffs, FracPolyFitInfo)
    so callers can see the convergence flag.
    """
    if len(ds) < 20:
        raise TooFewRows(f"need at least 20 rows to fit the sd model, got {len(ds)}")
    t_v, t_h, t_b, y_norm = _fracpoly_features(ds, spec, dir_norm)

    params = init.as_array()
    resid = _bracket(params, t_v, t_h, t_b) - y_norm
    sse = float(resid @ resid)
    converged = False
    iterations = 0
    lam = 1e-3
    for iterations in range(1, max_iters + 1):
        if sse == 0.0:
            converged = True
            iterations -= 1
            break
        jac = _jacobian(params, t_v, t_h, t_b)
        grad = jac.T @ resid
        hess = jac.T @ jac
        improved = False
        any_solved = False
        while lam <= _LM_LAMBDA_MAX:
            damped = hess + lam * np.diag(np.diag(hess))
            try:
                delta = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if not np.all(np.isfinite(delta)):
                lam *= 10.0
                continue
            any_solved = True
            cand = params + delta
            if cand[2] <= 0 or cand[4] <= 0 or cand[6] <= 0:
                lam *= 10.0
                continue
            cand_resid = _bracket(cand, t_v, t_h, t_b) - y_norm
            cand_sse = float(cand_resid @ cand_resid)
            if cand_sse < sse:
                improved = True
                break
            lam *= 10.0
        if not improved:
            if not any_solved:
                raise SingularJacobian("damped normal equations unsolvable at every damping level")
            # No admissible step reduces the SSE: numerically at a minimum.
            converged = True
            break
        rel_change = (sse - cand_sse) / sse
        params, resid, sse = cand, cand_resid, cand_sse
        lam = max(lam / 10.0, 1e-12)
        if rel_change < 1e-10:
            converged = True
            break

    coeffs = FracPolyCoeffs.from_array(params)
    if full_output:
        return coeffs, FracPolyFitInfo(converged=converged, iterations=iterations, sse=sse)
    return coeffs


def save_coeffs(coeffs: FracPolyCoeffs, path) -> None:
    """Write sd-model constants as JSON."""
    payload = {k: getattr(coeffs, k) for k in ("c0", "c1", "e1", "c2", "e2", "c3", "e3")}
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_coeffs(path) -> FracPolyCoeffs:
    """Read sd-model constants from JSON."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return FracPolyCoeffs(**{k: float(payload[k])
                                 for k in ("c0", "c1", "e1", "c2", "e2", "c3", "e3")})
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: not a coefficient file: {exc}") from exc
