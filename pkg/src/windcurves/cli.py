"""Command-line entry point.

Subcommands: design, simulate, fit, predict, crossval, relevance,
sensitivity, report.  Exit codes: 2 for usage errors, 3 for I/O failures,
4 for unparsable inputs, 5 for numerical failures; the category name is
printed on standard error.  One master --seed (default 42) drives every
random choice; purpose-specific seeds derive from it by stable hashing,
so identical invocations produce byte-identical output files.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys

import numpy as np

from . import baselines, design, evaluation, gp, oracle
from .data import load_dataset, save_dataset, select_inputs
from .design import DESIGN_VARIABLES
from .errors import (
    ColumnCountMismatch,
    DuplicateVariable,
    EmptyDataset,
    IoError,
    ParseError,
    UnknownVariable,
    WindcurvesError,
)

__all__ = ["main", "derive_seed"]

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_NUMERICAL = 5

_PARSE_ERRORS = (ParseError, EmptyDataset, UnknownVariable, DuplicateVariable,
                 ColumnCountMismatch)


def derive_seed(master: int, purpose: str) -> int:
    """Stable 64-bit seed derived from the master seed and a purpose label."""
    digest = hashlib.sha256(f"{master}:{purpose}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _load_ranges(path) -> design.VariableRanges:
    if path is None:
        return design.DEFAULT_RANGES
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return design.VariableRanges.from_mapping(payload)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad ranges file: {exc}") from exc


def _gp_options(args, master: int) -> gp.GPFitOptions:
    opts = gp.GPFitOptions(seed=master)
    if getattr(args, "max_iters", None) is not None:
        opts = dataclasses.replace(opts, max_iters=args.max_iters)
    if getattr(args, "restarts", None) is not None:
        opts = opts.with_restarts(args.restarts)
    return opts


def _parse_inputs(text: str) -> tuple:
    return tuple(name.strip() for name in text.split(",") if name.strip())


def cmd_design(args) -> int:
    ranges = _load_ranges(args.ranges)
    ds = design.design_dataset(args.n, ranges=ranges, skip_origin=args.skip_origin)
    save_dataset(ds, args.out)
    lines = [f"wrote {len(ds)} design rows to {args.out}"]
    for name in DESIGN_VARIABLES:
        col = ds.column(name)
        lines.append(f"  {name:>8}  min {col.min():.6g}  max {col.max():.6g}")
    _say(args, "\n".join(lines))
    return 0


def cmd_simulate(args) -> int:
    ds = load_dataset(args.design)
    cfg = oracle.OracleConfig(noise_sd_mean=args.noise_mean_kw,
                              noise_sd_frac=args.noise_sd_frac,
                              seed=derive_seed(args.seed, "oracle"))
    out = oracle.simulate(ds.env_samples(), cfg)
    save_dataset(out, args.out)
    spec = cfg.spec
    _say(args, f"wrote {len(out)} rows to {args.out}\n"
               f"turbine: rated {spec.rated_power:g} kW, rotor {spec.rotor_diameter:g} m, "
               f"cut-in {spec.cut_in:g} m/s, rated speed {spec.rated_speed:g} m/s, "
               f"cut-out {spec.cut_out:g} m/s, cp {spec.cp:g}")
    return 0


def cmd_fit(args) -> int:
    ds = load_dataset(args.data)
    if args.model == "gp":
        x, names = select_inputs(ds, _parse_inputs(args.inputs))
        model = gp.fit(x, ds.targets(args.target), names=names, target=args.target,
                       options=_gp_options(args, args.seed))
        gp.save_model(model, args.out)
        _say(args, f"gp fit: nll {model.meta['nll']:.6g} after {model.meta['iterations']} "
                   f"iterations; wrote {args.out}")
    elif args.model in ("binning", "iec-bins"):
        curve = baselines.fit_binning(ds, width=args.width,
                                      corrected=args.model == "iec-bins", target=args.target)
        baselines.save_curve(curve, args.out)
        _say(args, f"{args.model}: {len(curve.bins)} bins of {curve.bin_width:g} m/s; "
                   f"wrote {args.out}")
    else:
        coeffs, info = baselines.fit_fracpoly(ds, full_output=True)
        baselines.save_coeffs(coeffs, args.out)
        flag = "converged" if info.converged else "NOT converged"
        _say(args, f"fracpoly: sse {info.sse:.6g} after {info.iterations} iterations "
                   f"({flag}); wrote {args.out}")
    return 0


def _sniff_model(path):
    """Classify a model file: GP JSON, coefficients JSON, or curve CSV."""
    try:
        with open(path, encoding="utf-8") as fh:
            head = fh.read(1)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if head in ("{", "["):
        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
        if isinstance(payload, dict) and "hyper" in payload:
            return "gp", gp.load_model(path)
        if isinstance(payload, dict) and "c0" in payload:
            return "fracpoly", baselines.load_coeffs(path)
        raise ParseError(f"{path}: JSON is neither a gp model nor sd coefficients")
    return "curve", baselines.load_curve(path, density_corrected=False)


def cmd_predict(args) -> int:
    kind, model = _sniff_model(args.model)
    if kind == "curve" and args.corrected:
        model = baselines.load_curve(args.model, density_corrected=True)
    ds = load_dataset(args.data)
    if kind == "gp":
        preds = gp.predict(model, select_inputs(ds, model.inputs)[0])
    elif kind == "fracpoly":
        preds = np.asarray(baselines.fracpoly_eval(
            ds.column("v"), ds.column("wave_h"), ds.column("wave_dir"), ds.column("rho"),
            coeffs=model))
    else:
        preds = np.array([baselines.predict_binning(model, env) for env, _ in ds.rows])
    save_dataset(ds, args.out, extra_columns={"pred_kw": preds})
    _say(args, f"wrote {len(ds)} predictions to {args.out}")
    return 0


def _build_recipe(args, master: int) -> evaluation.ModelRecipe:
    inputs = _parse_inputs(args.inputs) if args.inputs else ()
    gp_options = _gp_options(args, master) if args.model == "gp" else None
    return evaluation.ModelRecipe(family=args.model, inputs=inputs, target=args.target,
                                  bin_width=args.width, gp_options=gp_options)


def cmd_crossval(args) -> int:
    ds = load_dataset(args.data)
    recipe = _build_recipe(args, args.seed)
    report = evaluation.kfold(ds, recipe, k=args.k, seed=derive_seed(args.seed, "folds"),
                              shuffle=not args.no_shuffle)
    evaluation.save_reports([report], args.out)
    lines = [f"{report.model} on target {report.target}, {args.k} folds:"]
    for m in report.folds:
        lines.append(f"  fold {m.fold:2d}  mae {m.mae_kw:10.3f}  rmse {m.rmse_kw:10.3f}  "
                     f"nrmse {m.nrmse_pct:8.4f}%")
    lines.append(f"  average  mae {report.mae_avg:10.3f}  rmse {report.rmse_avg:10.3f}  "
                 f"nrmse {report.nrmse_avg:8.4f}%")
    lines.append(f"wrote {args.out}")
    _say(args, "\n".join(lines))
    return 0


def cmd_relevance(args) -> int:
    model = gp.load_model(args.model)
    report = gp.relevance(model)
    lines = [f"{'input':>10}  {'1/length':>10}  {'share_pct':>9}"]
    for entry in report.entries:
        lines.append(f"{entry.name:>10}  {entry.inv_length:>10.4f}  {entry.share:>9.2f}")
    print("\n".join(lines))
    return 0


def cmd_sensitivity(args) -> int:
    thresholds = evaluation.significance_thresholds(args.rho_min, args.rho_max)
    print(f"theta1_deg={thresholds.theta1:.4f} theta2_deg={thresholds.theta2:.4f}")
    if args.out:
        try:
            fh = open(args.out, "w", newline="", encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {args.out}: {exc}") from exc
        with fh:
            fh.write("yaw_deg,ratio_rho_min,ratio_rho_max\n")
            # tolist() yields plain Python floats; repr of a numpy scalar
            # would write cells like "np.float64(0.0)".
            for yaw in np.arange(0.0, 45.0 + 1e-9, 0.5).tolist():
                low = float(evaluation.yaw_density_ratio(args.rho_min, yaw))
                high = float(evaluation.yaw_density_ratio(args.rho_max, yaw))
                fh.write(f"{yaw!r},{low!r},{high!r}\n")
        _say(args, f"wrote ratio curve to {args.out}")
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        reports.extend(evaluation.load_reports(path))
    if args.out:
        evaluation.save_reports(reports, args.out)
    print(evaluation.format_report_table(reports))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="master seed (default 42)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="windcurves",
                                     description="Multi-input offshore wind power curve toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("design", parents=[common],
                       help="generate a quasi-random environmental design")
    p.add_argument("--n", type=int, required=True, help="number of design points")
    p.add_argument("--ranges", help="JSON file overriding per-variable ranges")
    p.add_argument("--skip-origin", action="store_true",
                   help="drop the all-lower-bounds first point")
    p.add_argument("--out", required=True, help="output dataset CSV")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", parents=[common],
                       help="run the built-in turbine simulator over a design")
    p.add_argument("--design", required=True, help="input design CSV")
    p.add_argument("--noise-mean-kw", type=float, default=0.0,
                   help="sd of additive noise on mean power, kW")
    p.add_argument("--noise-sd-frac", type=float, default=0.0,
                   help="fractional multiplicative noise on power sd")
    p.add_argument("--out", required=True, help="output dataset CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[common], help="fit one model to a dataset")
    p.add_argument("--data", required=True, help="training dataset CSV")
    p.add_argument("--model", required=True, choices=("binning", "iec-bins", "gp", "fracpoly"))
    p.add_argument("--inputs", default="", help="comma-separated inputs (gp only)")
    p.add_argument("--target", default="mean", choices=("mean", "sd"))
    p.add_argument("--width", type=float, default=0.5, help="bin width, m/s")
    p.add_argument("--max-iters", type=int, help="gp iteration cap (default 300)")
    p.add_argument("--restarts", type=int, help="gp restarts to keep (default 3)")
    p.add_argument("--out", required=True, help="model file (JSON, or CSV for binning)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[common],
                       help="append model predictions to a dataset")
    p.add_argument("--model", required=True, help="model file written by fit")
    p.add_argument("--data", required=True, help="dataset CSV to predict on")
    p.add_argument("--corrected", action="store_true",
                   help="treat a curve file as density-corrected")
    p.add_argument("--out", required=True, help="output CSV with pred_kw column")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("crossval", parents=[common],
                       help="k-fold cross-validation of one model recipe")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--model", required=True, choices=("binning", "iec-bins", "gp", "fracpoly"))
    p.add_argument("--inputs", default="", help="comma-separated inputs (gp only)")
    p.add_argument("--target", default="mean", choices=("mean", "sd"))
    p.add_argument("--width", type=float, default=0.5, help="bin width, m/s")
    p.add_argument("--k", type=int, default=10, help="fold count (default 10)")
    p.add_argument("--no-shuffle", action="store_true", help="use contiguous folds")
    p.add_argument("--max-iters", type=int, help="gp iteration cap (default 300)")
    p.add_argument("--restarts", type=int, help="gp restarts to keep (default 3)")
    p.add_argument("--out", required=True, help="per-fold report CSV")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("relevance", parents=[common],
                       help="input-importance table of a fitted gp model")
    p.add_argument("--model", required=True, help="gp model JSON")
    p.set_defaults(func=cmd_relevance)

    p = sub.add_parser("sensitivity", parents=[common],
                       help="yaw/density significance thresholds and ratio curve")
    p.add_argument("--rho-min", type=float, required=True, help="band lower density, kg/m3")
    p.add_argument("--rho-max", type=float, required=True, help="band upper density, kg/m3")
    p.add_argument("--out", help="optional ratio-curve CSV")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("report", parents=[common],
                       help="merge crossval reports into one comparison table")
    p.add_argument("--reports", nargs="+", required=True, help="report CSVs to merge")
    p.add_argument("--out", help="optional merged CSV")
    p.set_defaults(func=cmd_report)

    return parser


def _validate(parser: argparse.ArgumentParser, args) -> None:
    if args.subcommand == "design" and args.n < 1:
        parser.error("design: --n must be >= 1")
    if args.subcommand in ("fit", "crossval"):
        if args.model == "gp" and not args.inputs:
            parser.error(f"{args.subcommand}: --model gp needs --inputs")
        if args.model == "fracpoly" and args.target != "sd":
            parser.error(f"{args.subcommand}: --model fracpoly supports only --target sd")
        if args.subcommand == "crossval" and args.k < 2:
            parser.error("crossval: --k must be >= 2")
    if args.subcommand == "sensitivity" and not 0 < args.rho_min <= args.rho_max:
        parser.error("sensitivity: need 0 < --rho-min <= --rho-max")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    try:
        return args.func(args)
    except IoError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except _PARSE_ERRORS as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except WindcurvesError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
