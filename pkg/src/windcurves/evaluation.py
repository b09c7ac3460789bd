"""Error metrics, k-fold cross-validation, and analytic sensitivity checks.

A :class:`ModelRecipe` names a model family (binning, iec-bins, gp,
fracpoly), its inputs, and the power target; :func:`kfold` refits the
recipe on each training split and scores the held-out fold with MAE, RMSE
and NRMSE.  NRMSE is referenced to rated power for the mean target and to
the largest power standard deviation seen in each fold's training split
for the sd target.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import baselines, gp
from .data import Dataset, IEA_15MW, TurbineSpec, select_inputs
from .errors import (
    InvalidDensityOrder,
    IoError,
    LengthMismatch,
    NonpositiveReference,
    ParseError,
    TooFewRows,
    YawOutOfRange,
)

__all__ = [
    "FoldMetrics",
    "EvalReport",
    "ModelRecipe",
    "SensitivityThresholds",
    "mae",
    "rmse",
    "nrmse",
    "kfold",
    "compare_models",
    "yaw_density_ratio",
    "significance_thresholds",
    "total_energy",
    "save_reports",
    "load_reports",
    "format_report_table",
    "REPORT_HEADER",
]

REPORT_HEADER = ("model", "inputs", "target", "fold", "mae_kw", "rmse_kw", "nrmse_pct")

_FAMILIES = ("binning", "iec-bins", "gp", "fracpoly")
_DEFAULT_INPUTS = {
    "binning": ("v",),
    "iec-bins": ("v", "rho"),
    "fracpoly": ("v", "wave_h", "wave_dir", "rho"),
}


def _conformable(y, yhat):
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape or y.size == 0:
        raise LengthMismatch(f"vectors of length {y.size} and {yhat.size}")
    return y, yhat


def mae(y, yhat) -> float:
    """Mean absolute error."""
    y, yhat = _conformable(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def rmse(y, yhat) -> float:
    """Root mean squared error."""
    y, yhat = _conformable(y, yhat)
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def nrmse(y, yhat, ref: float) -> float:
    """RMSE as a percentage of a positive reference value."""
    if not ref > 0:
        raise NonpositiveReference(f"reference must be > 0, got {ref}")
    return 100.0 * rmse(y, yhat) / ref


@dataclass(frozen=True)
class FoldMetrics:
    fold: int
    mae_kw: float
    rmse_kw: float
    nrmse_pct: float
    reference_kw: float = float("nan")


@dataclass(frozen=True)
class EvalReport:
    """Per-fold errors for one model family on one target."""

    model: str
    inputs: tuple
    target: str
    folds: tuple

    @property
    def mae_avg(self) -> float:
        return float(np.mean([f.mae_kw for f in self.folds]))

    @property
    def rmse_avg(self) -> float:
        return float(np.mean([f.rmse_kw for f in self.folds]))

    @property
    def nrmse_avg(self) -> float:
        return float(np.mean([f.nrmse_pct for f in self.folds]))


@dataclass(frozen=True)
class ModelRecipe:
    """A named model family with its inputs and target.

    For the gp family ``inputs`` must be given; binning families always
    bin over wind speed (iec-bins also reads rho for the correction) and
    fracpoly uses its fixed four inputs, so their defaults are filled in.
    """

    family: str
    inputs: tuple = ()
    target: str = "mean"
    label: str = ""
    bin_width: float = 0.5
    gp_options: gp.GPFitOptions | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {', '.join(_FAMILIES)}")
        if self.target not in ("mean", "sd"):
            raise ValueError(f"target must be 'mean' or 'sd', got {self.target!r}")
        if self.family == "gp":
            if not self.inputs:
                raise ValueError("the gp family needs an explicit input list")
        elif not self.inputs:
            object.__setattr__(self, "inputs", _DEFAULT_INPUTS[self.family])
        if self.family == "fracpoly" and self.target != "sd":
            raise ValueError("the fracpoly family models only the sd target")
        object.__setattr__(self, "inputs", tuple(self.inputs))

    @property
    def name(self) -> str:
        return self.label or f"{self.family}({'+'.join(self.inputs)})"


def _fit_recipe(recipe: ModelRecipe, train: Dataset, spec: TurbineSpec):
    """Fit one recipe; returns a predictor mapping a Dataset to a vector."""
    if recipe.family in ("binning", "iec-bins"):
        curve = baselines.fit_binning(train, width=recipe.bin_width,
                                      corrected=recipe.family == "iec-bins",
                                      spec=spec, target=recipe.target)
        return lambda ds: np.array([baselines.predict_binning(curve, env) for env, _ in ds.rows])
    if recipe.family == "gp":
        x, names = select_inputs(train, recipe.inputs)
        model = gp.fit(x, train.targets(recipe.target), names=names,
                       target=recipe.target, options=recipe.gp_options)
        return lambda ds: gp.predict(model, select_inputs(ds, recipe.inputs)[0])
    coeffs = baselines.fit_fracpoly(train, spec=spec)
    return lambda ds: np.asarray(baselines.fracpoly_eval(
        ds.column("v"), ds.column("wave_h"), ds.column("wave_dir"), ds.column("rho"),
        coeffs=coeffs, spec=spec))


def _fold_indices(n: int, k: int, seed: int, shuffle: bool):
    if not n >= k >= 2:
        raise TooFewRows(f"need n >= k >= 2, got n={n}, k={k}")
    order = np.random.default_rng(seed).permutation(n) if shuffle else np.arange(n)
    return np.array_split(order, k)


def _evaluate_on_folds(ds: Dataset, folds, recipe: ModelRecipe, spec: TurbineSpec) -> EvalReport:
    metrics = []
    for i, held_out in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        train = ds.subset(train_idx)
        test = ds.subset(held_out)
        predictor = _fit_recipe(recipe, train, spec)
        yhat = predictor(test)
        y = test.targets(recipe.target)
        if recipe.target == "mean":
            ref = spec.rated_power
        else:
            ref = float(train.targets("sd").max())
        metrics.append(FoldMetrics(fold=i + 1, mae_kw=mae(y, yhat), rmse_kw=rmse(y, yhat),
                                   nrmse_pct=nrmse(y, yhat, ref), reference_kw=ref))
    return EvalReport(model=recipe.name, inputs=recipe.inputs, target=recipe.target,
                      folds=tuple(metrics))


def kfold(ds: Dataset, recipe: ModelRecipe, k: int = 10, seed: int = 42,
          spec: TurbineSpec = IEA_15MW, shuffle: bool = True) -> EvalReport:
    """k-fold cross-validation of one recipe.

    Rows are shuffled once by the seed (or kept contiguous with
    ``shuffle=False``), split into k folds whose sizes differ by at most
    one, and the recipe is refit with each fold held out in turn.
    """
    folds = _fold_indices(len(ds), k, seed, shuffle)
    return _evaluate_on_folds(ds, folds, recipe, spec)


def compare_models(ds: Dataset, recipes, k: int = 10, seed: int = 42,
                   spec: TurbineSpec = IEA_15MW, shuffle: bool = True) -> list:
    """kfold for several recipes over one shared fold assignment.

    Sharing folds makes the rows directly comparable.  Duplicate recipe
    names get a #2, #3, ... suffix in the output order.
    """
    recipes = list(recipes)
    if len(recipes) < 2:
        raise ValueError("model comparison needs at least 2 recipes")
    folds = _fold_indices(len(ds), k, seed, shuffle)
    seen: dict = {}
    reports = []
    for recipe in recipes:
        report = _evaluate_on_folds(ds, folds, recipe, spec)
        count = seen.get(report.model, 0) + 1
        seen[report.model] = count
        if count > 1:
            report = replace(report, model=f"{report.model}#{count}")
        reports.append(report)
    return reports


def yaw_density_ratio(rho: float, yaw: float) -> float:
    """|3 rho tan(yaw)|: yaw-to-density sensitivity ratio of cubic-law power."""
    if not 0 <= yaw < 90:
        raise YawOutOfRange(f"yaw must lie in [0, 90) degrees, got {yaw}")
    return abs(3.0 * rho * math.tan(math.radians(yaw)))


@dataclass(frozen=True)
class SensitivityThresholds:
    """Yaw angles where density and yaw sensitivities balance, at the density band edges."""

    rho_min: float
    rho_max: float
    theta1: float
    theta2: float


def significance_thresholds(rho_min: float, rho_max: float) -> SensitivityThresholds:
    """Yaw thresholds arctan(1/(3 rho)) in degrees for a density band.

    theta1 uses the high-density end (smaller angle), theta2 the
    low-density end; between them, yaw matters as much as density does
    across the band.
    """
    if not 0 < rho_min <= rho_max:
        raise InvalidDensityOrder(f"need 0 < rho_min <= rho_max, got ({rho_min}, {rho_max})")
    theta1 = math.degrees(math.atan(1.0 / (3.0 * rho_max)))
    theta2 = math.degrees(math.atan(1.0 / (3.0 * rho_min)))
    return SensitivityThresholds(rho_min=rho_min, rho_max=rho_max, theta1=theta1, theta2=theta2)


def total_energy(p_series, step_hours: float) -> float:
    """Energy in MWh of a fixed-step power series in kW."""
    p = np.asarray(p_series, dtype=float).ravel()
    if p.size == 0:
        raise LengthMismatch("empty power series")
    if not step_hours > 0:
        raise ValueError(f"step must be > 0 hours, got {step_hours}")
    return float(p.sum() * step_hours / 1000.0)


def save_reports(reports, path) -> None:
    """Write per-fold report rows as CSV; input names join with '+'."""
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    with fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for report in reports:
            for m in report.folds:
                writer.writerow([report.model, "+".join(report.inputs), report.target,
                                 m.fold, repr(m.mae_kw), repr(m.rmse_kw), repr(m.nrmse_pct)])


def load_reports(path) -> list:
    """Read a report CSV back into EvalReports, grouped in file order."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    grouped: dict = {}
    order = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != REPORT_HEADER:
            raise ParseError(f"{path}: expected header {','.join(REPORT_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                key = (row[0], row[1], row[2])
                fold = FoldMetrics(fold=int(row[3]), mae_kw=float(row[4]),
                                   rmse_kw=float(row[5]), nrmse_pct=float(row[6]))
            except (ValueError, IndexError) as exc:
                raise ParseError(f"line {line_no}: bad report row {row!r}") from exc
            if key not in grouped:
                grouped[key] = []
                order.append(key)
            grouped[key].append(fold)
    return [EvalReport(model=model, inputs=tuple(inputs.split("+")), target=target,
                       folds=tuple(grouped[(model, inputs, target)]))
            for model, inputs, target in order]


def format_report_table(reports) -> str:
    """Aligned text table of fold-averaged errors, one row per report."""
    rows = [("model", "inputs", "target", "mae_kw", "rmse_kw", "nrmse_pct")]
    for r in reports:
        rows.append((r.model, "+".join(r.inputs), r.target,
                     f"{r.mae_avg:.2f}", f"{r.rmse_avg:.2f}", f"{r.nrmse_avg:.4f}"))
    widths = [max(len(row[c]) for row in rows) for c in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    return "\n".join(lines)
