"""Exact Gaussian-process regression with a per-input (ARD) squared-exponential kernel.

Training minimizes the negative log marginal likelihood over log-space
hyperparameters with gradient descent plus a backtracking line search,
restarted from several length-scale initializations.  Inputs are z-scored
and the target mean-centered before fitting, so fitted length-scales are
comparable across inputs; their inverses rank input relevance.

Prediction is the standard conditional mean: k*^T Sigma^-1 (y - mu),
de-standardized.  Models serialize to JSON with the full training set
embedded, as exact GP prediction requires it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.linalg.lapack import dpotri

from .errors import (
    CholeskyFailure,
    ConstantColumn,
    DimensionMismatch,
    IoError,
    ParseError,
    TooFewRows,
)

__all__ = [
    "GPHyperparameters",
    "GPFitOptions",
    "GPModel",
    "RelevanceEntry",
    "RelevanceReport",
    "kernel",
    "negative_log_likelihood",
    "fit",
    "predict",
    "relevance",
    "relevance_from_lengths",
    "save_model",
    "load_model",
]

_LOG_2PI = math.log(2.0 * math.pi)

#: Jitter added to the Gram diagonal, as fractions of the signal variance.
_JITTER_START = 1e-10
_JITTER_MAX = 1e-4


@dataclass(frozen=True)
class GPHyperparameters:
    """Kernel and noise hyperparameters, plus an optional linear mean.

    length_scales are in standardized-input units, one per input.  When
    mean_coeffs is absent the mean function is identically zero (the
    default used by fitting; centering removes the constant part).
    """

    signal_var: float
    length_scales: tuple
    noise_var: float
    mean_coeffs: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "length_scales", tuple(float(l) for l in self.length_scales))
        if self.mean_coeffs is not None:
            object.__setattr__(self, "mean_coeffs", tuple(float(c) for c in self.mean_coeffs))
            if len(self.mean_coeffs) != len(self.length_scales):
                raise DimensionMismatch("mean_coeffs must have one entry per input")
        if not self.signal_var > 0:
            raise ValueError(f"signal variance must be > 0, got {self.signal_var}")
        if not self.noise_var > 0:
            raise ValueError(f"noise variance must be > 0, got {self.noise_var}")
        if not self.length_scales or any(not l > 0 for l in self.length_scales):
            raise ValueError("every length scale must be > 0")

    @property
    def n_inputs(self) -> int:
        return len(self.length_scales)


@dataclass(frozen=True)
class GPFitOptions:
    """Knobs for the marginal-likelihood optimizer.

    restart_multipliers seeds one optimization run per entry, with initial
    length-scales set to that multiple of each standardized column's range.
    fixed_noise_var, when set, pins the noise variance instead of learning
    it (useful for interpolating noiseless data).
    """

    max_iters: int = 300
    restart_multipliers: tuple = (1.0, 0.3, 3.0)
    initial_step: float = 0.1
    max_step: float = 1.0
    max_halvings: int = 30
    grad_tol: float = 1e-6
    rel_tol: float = 1e-10
    fixed_noise_var: float | None = None
    seed: int = 42

    def with_restarts(self, count: int) -> "GPFitOptions":
        """Copy with only the first ``count`` restart multipliers kept."""
        if not 1 <= count <= len(self.restart_multipliers):
            raise ValueError(f"restart count must lie in [1, {len(self.restart_multipliers)}]")
        return replace(self, restart_multipliers=self.restart_multipliers[:count])


@dataclass
class GPModel:
    """A trained GP: hyperparameters, standardization constants, training set.

    train_x holds standardized inputs and train_y centered targets; chol is
    the lower Cholesky factor of the training covariance and alpha the
    cached solve of chol against train_y.
    """

    hyper: GPHyperparameters
    x_mean: np.ndarray
    x_sd: np.ndarray
    y_mean: float
    train_x: np.ndarray
    train_y: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    inputs: tuple = ()
    target: str = "mean"
    meta: dict = field(default_factory=dict)
    trace: tuple = ()


@dataclass(frozen=True)
class RelevanceEntry:
    name: str
    inv_length: float
    share: float


@dataclass(frozen=True)
class RelevanceReport:
    """Per-input inverse length-scales and their percent shares (sum 100)."""

    entries: tuple

    def shares(self) -> np.ndarray:
        return np.array([e.share for e in self.entries])

    def inv_lengths(self) -> np.ndarray:
        return np.array([e.inv_length for e in self.entries])


def kernel(x_i, x_j, hyper: GPHyperparameters) -> float:
    """Squared-exponential covariance between two points (no noise term).

    The noise variance enters only on the diagonal of the training Gram
    matrix, never in cross-covariances; this function returns the smooth
    part ``signal_var * exp(-0.5 * sum((dx_k / l_k)^2))``.
    """
    x_i = np.asarray(x_i, dtype=float).ravel()
    x_j = np.asarray(x_j, dtype=float).ravel()
    if x_i.shape != x_j.shape or x_i.shape[0] != hyper.n_inputs:
        raise DimensionMismatch(
            f"points of dimension {x_i.shape[0]}/{x_j.shape[0]} against {hyper.n_inputs} length scales"
        )
    scaled = (x_i - x_j) / np.asarray(hyper.length_scales)
    return float(hyper.signal_var * math.exp(-0.5 * float(scaled @ scaled)))


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D design matrix, got ndim={x.ndim}")
    return x


def _pairwise_sq(x: np.ndarray) -> np.ndarray:
    """Per-dimension squared distances, shape (p, n, n)."""
    diff = x[:, None, :] - x[None, :, :]
    return np.ascontiguousarray(np.moveaxis(diff * diff, 2, 0))


def _cross_sq_scaled(x_star: np.ndarray, x_train: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    d = (x_star[:, None, :] - x_train[None, :, :]) / lengths
    return np.einsum("mnp,mnp->mn", d, d)


def cross_covariance(x_star: np.ndarray, x_train: np.ndarray,
                     hyper: GPHyperparameters) -> np.ndarray:
    """m x n matrix of kernel values between query and training points."""
    lengths = np.asarray(hyper.length_scales)
    return hyper.signal_var * np.exp(-0.5 * _cross_sq_scaled(x_star, x_train, lengths))


def _se_gram(d2: np.ndarray, signal_var: float, lengths: np.ndarray) -> np.ndarray:
    inv_sq = 1.0 / (lengths * lengths)
    return signal_var * np.exp(-0.5 * np.tensordot(inv_sq, d2, axes=1))


def _factor_sigma(k_se: np.ndarray, noise_var: float, signal_var: float):
    """Cholesky of K_se + (noise + jitter) I under the escalating jitter policy."""
    n = k_se.shape[0]
    diag = np.arange(n)
    jitter = _JITTER_START * signal_var
    while True:
        sigma = k_se.copy()
        sigma[diag, diag] += noise_var + jitter
        try:
            chol = cho_factor(sigma, lower=True, check_finite=False)
        except LinAlgError:
            jitter *= 10.0
            if jitter > _JITTER_MAX * signal_var * (1.0 + 1e-12):
                raise CholeskyFailure(
                    f"covariance not positive definite at jitter {_JITTER_MAX:g} * signal_var"
                ) from None
            continue
        return chol, jitter


def _mean_vector(x: np.ndarray, hyper: GPHyperparameters) -> np.ndarray:
    if hyper.mean_coeffs is None:
        return np.zeros(x.shape[0])
    return x @ np.asarray(hyper.mean_coeffs)


def _nll_state(hyper_vec: np.ndarray, d2: np.ndarray, resid: np.ndarray):
    """NLL and its Cholesky byproducts for hyper_vec = (signal, l_1..l_p, noise)."""
    signal_var, noise_var = hyper_vec[0], hyper_vec[-1]
    lengths = hyper_vec[1:-1]
    k_se = _se_gram(d2, signal_var, lengths)
    chol, jitter = _factor_sigma(k_se, noise_var, signal_var)
    alpha = cho_solve(chol, resid, check_finite=False)
    n = len(resid)
    nll = 0.5 * float(resid @ alpha) + float(np.sum(np.log(np.diag(chol[0])))) + 0.5 * n * _LOG_2PI
    return nll, chol, alpha, k_se, jitter


def _nll_gradient(hyper_vec: np.ndarray, d2: np.ndarray, chol, alpha: np.ndarray,
                  k_se: np.ndarray, jitter: float) -> np.ndarray:
    """Gradient of the NLL over log-hyperparameters (signal, lengths, noise)."""
    signal_var, noise_var = hyper_vec[0], hyper_vec[-1]
    lengths = hyper_vec[1:-1]
    n = k_se.shape[0]
    inv, info = dpotri(chol[0], lower=True)
    if info != 0:
        raise CholeskyFailure(f"triangular inversion failed with code {info}")
    sigma_inv = np.tril(inv) + np.tril(inv, -1).T
    a_mat = sigma_inv - np.outer(alpha, alpha)
    grad = np.empty(len(hyper_vec))
    # The jitter scales with signal_var, so it contributes to that entry.
    grad[0] = 0.5 * (float(np.sum(a_mat * k_se)) + jitter * float(np.trace(a_mat)))
    for k in range(len(lengths)):
        grad[1 + k] = 0.5 * float(np.sum(a_mat * (k_se * d2[k]))) / lengths[k] ** 2
    grad[-1] = 0.5 * noise_var * float(np.trace(a_mat))
    return grad


def negative_log_likelihood(hyper: GPHyperparameters, train_x, train_y):
    """NLL of the data under the kernel, and its log-space gradient.

    The gradient is ordered (log signal_var, log l_1 .. log l_p,
    log noise_var).  Inputs are used as given; standardize first if the
    hyperparameters were fitted on standardized data.
    """
    x = _as_matrix(train_x)
    y = np.asarray(train_y, dtype=float).ravel()
    if x.shape[1] != hyper.n_inputs:
        raise DimensionMismatch(f"{x.shape[1]} input columns against {hyper.n_inputs} length scales")
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch("row counts of inputs and targets differ")
    d2 = _pairwise_sq(x)
    resid = y - _mean_vector(x, hyper)
    vec = np.array([hyper.signal_var, *hyper.length_scales, hyper.noise_var])
    nll, chol, alpha, k_se, jitter = _nll_state(vec, d2, resid)
    grad = _nll_gradient(vec, d2, chol, alpha, k_se, jitter)
    return nll, grad


def _minimize_restart(theta0: np.ndarray, d2: np.ndarray, resid: np.ndarray,
                      free: np.ndarray, options: GPFitOptions):
    """Gradient descent with backtracking line search over log-hyperparameters.

    theta0 is the full log-parameter vector; entries where ``free`` is False
    stay pinned.  Returns (nll, theta, iterations, trace).
    """
    theta = theta0.copy()
    nll, chol, alpha, k_se, jitter = _nll_state(np.exp(theta), d2, resid)
    grad = _nll_gradient(np.exp(theta), d2, chol, alpha, k_se, jitter)[free]
    step = options.initial_step
    trace = [nll]
    iterations = 0
    while iterations < options.max_iters:
        if np.max(np.abs(grad)) < options.grad_tol:
            break
        accepted = None
        for halving in range(options.max_halvings + 1):
            cand = theta.copy()
            cand[free] -= step * grad
            # Wild probes can overflow exp or leave the factorizable region;
            # both count as a rejected step, not an error.
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                params = np.exp(cand)
                state = None
                if np.all(np.isfinite(params)) and np.all(params > 0):
                    try:
                        state = _nll_state(params, d2, resid)
                    except CholeskyFailure:
                        state = None
            if state is not None and np.isfinite(state[0]) and state[0] < nll:
                accepted = (cand, state, halving)
                break
            step *= 0.5
        if accepted is None:
            break
        iterations += 1
        cand, state, halving = accepted
        rel_change = abs(nll - state[0]) / max(abs(nll), 1.0)
        theta = cand
        nll = state[0]
        trace.append(nll)
        grad = _nll_gradient(np.exp(theta), d2, *state[1:])[free]
        if halving == 0:
            step = min(step * 2.0, options.max_step)
        if rel_change < options.rel_tol:
            break
    return nll, theta, iterations, trace


def fit(train_x, train_y, names=None, target: str = "mean",
        options: GPFitOptions | None = None) -> GPModel:
    """Train a GP on a design matrix and target vector.

    Inputs are z-scored per column and the target mean-centered.  One
    optimization runs per restart multiplier; the lowest final NLL wins,
    ties going to the earliest restart.  Deterministic: restarts are fixed
    functions of the data, and the seed is recorded only as metadata.
    """
    options = options or GPFitOptions()
    x = _as_matrix(train_x)
    y = np.asarray(train_y, dtype=float).ravel()
    n, p = x.shape
    if y.shape[0] != n:
        raise DimensionMismatch("row counts of inputs and targets differ")
    if n < 5:
        raise TooFewRows(f"need at least 5 training rows, got {n}")
    names = tuple(names) if names is not None else tuple(f"x{k + 1}" for k in range(p))
    if len(names) != p:
        raise DimensionMismatch(f"{len(names)} names for {p} columns")

    x_mean = x.mean(axis=0)
    x_sd = x.std(axis=0)
    for k in range(p):
        # ptp catches columns of identical values whose std is a nonzero
        # rounding residue (the mean of repeated 3.3 is not exactly 3.3).
        if x_sd[k] == 0 or np.ptp(x[:, k]) == 0:
            raise ConstantColumn(f"input column {names[k]!r} is constant")
    y_mean = float(y.mean())
    y_c = y - y_mean
    var_y = float(y_c.var())
    if var_y == 0 or np.ptp(y) == 0:
        raise ConstantColumn("target is constant")
    x_std = (x - x_mean) / x_sd

    d2 = _pairwise_sq(x_std)
    col_range = x_std.max(axis=0) - x_std.min(axis=0)
    noise0 = options.fixed_noise_var if options.fixed_noise_var is not None else 0.01 * var_y
    free = np.ones(p + 2, dtype=bool)
    if options.fixed_noise_var is not None:
        free[-1] = False

    best = None
    for mult in options.restart_multipliers:
        theta0 = np.log(np.array([var_y, *(mult * col_range), noise0]))
        result = _minimize_restart(theta0, d2, y_c, free, options)
        if best is None or result[0] < best[0]:
            best = result
    nll, theta, iterations, trace = best

    final = np.exp(theta)
    if options.fixed_noise_var is not None:
        # exp(log(v)) can be an ulp off; honor the pinned value exactly
        final[-1] = options.fixed_noise_var
    hyper = GPHyperparameters(signal_var=float(final[0]),
                              length_scales=tuple(final[1:-1]),
                              noise_var=float(final[-1]))
    nll, chol, alpha, _, _ = _nll_state(final, d2, y_c)
    return GPModel(
        hyper=hyper, x_mean=x_mean, x_sd=x_sd, y_mean=y_mean,
        train_x=x_std, train_y=y_c, chol=np.tril(chol[0]), alpha=alpha,
        inputs=names, target=target,
        meta={"nll": float(nll), "iterations": int(iterations), "seed": int(options.seed)},
        trace=tuple(trace),
    )


def predict(model: GPModel, x_star) -> np.ndarray:
    """Posterior-mean predictions at query rows, in original target units."""
    x = _as_matrix(x_star)
    if x.shape[1] != model.hyper.n_inputs:
        raise DimensionMismatch(
            f"query has {x.shape[1]} columns, model expects {model.hyper.n_inputs}"
        )
    x_std = (x - model.x_mean) / model.x_sd
    k_star = cross_covariance(x_std, model.train_x, model.hyper)
    return model.y_mean + _mean_vector(x_std, model.hyper) + k_star @ model.alpha


def relevance_from_lengths(length_scales, names=None) -> RelevanceReport:
    """Inverse length-scales and percent shares for a set of inputs."""
    lengths = np.asarray(length_scales, dtype=float)
    if names is None:
        names = tuple(f"x{k + 1}" for k in range(len(lengths)))
    inv = 1.0 / lengths
    share = 100.0 * inv / inv.sum()
    entries = tuple(RelevanceEntry(name=str(nm), inv_length=float(i), share=float(s))
                    for nm, i, s in zip(names, inv, share))
    return RelevanceReport(entries=entries)


def relevance(model: GPModel) -> RelevanceReport:
    """Input-importance ranking of a trained model (standardized space)."""
    return relevance_from_lengths(model.hyper.length_scales, model.inputs)


def save_model(model: GPModel, path) -> None:
    """Serialize a model to JSON (hyperparameters plus full training data)."""
    if model.hyper.mean_coeffs is not None:
        raise ValueError("only zero-mean models serialize to the model file format")
    payload = {
        "inputs": list(model.inputs),
        "hyper": {
            "signal_var": model.hyper.signal_var,
            "noise_var": model.hyper.noise_var,
            "length_scales": list(model.hyper.length_scales),
        },
        "standardization": {
            "x_mean": model.x_mean.tolist(),
            "x_sd": model.x_sd.tolist(),
            "y_mean": model.y_mean,
        },
        "train_x": model.train_x.tolist(),
        "train_y": model.train_y.tolist(),
        "target": model.target,
        "meta": {"nll": model.meta.get("nll"), "iterations": model.meta.get("iterations"),
                 "seed": model.meta.get("seed")},
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_model(path) -> GPModel:
    """Load a model JSON and rebuild the covariance factorization."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    try:
        hyper = GPHyperparameters(
            signal_var=float(payload["hyper"]["signal_var"]),
            length_scales=tuple(payload["hyper"]["length_scales"]),
            noise_var=float(payload["hyper"]["noise_var"]),
        )
        x_mean = np.asarray(payload["standardization"]["x_mean"], dtype=float)
        x_sd = np.asarray(payload["standardization"]["x_sd"], dtype=float)
        y_mean = float(payload["standardization"]["y_mean"])
        train_x = np.asarray(payload["train_x"], dtype=float)
        train_y = np.asarray(payload["train_y"], dtype=float)
        inputs = tuple(payload["inputs"])
        target = payload["target"]
        meta = dict(payload.get("meta", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: not a model file: {exc}") from exc
    if train_x.ndim == 1:
        train_x = train_x[:, None]
    if train_x.shape[1] != hyper.n_inputs or train_x.shape[0] != train_y.shape[0]:
        raise ParseError(f"{path}: training data shape inconsistent with hyperparameters")
    d2 = _pairwise_sq(train_x)
    vec = np.array([hyper.signal_var, *hyper.length_scales, hyper.noise_var])
    _, chol, alpha, _, _ = _nll_state(vec, d2, train_y)
    return GPModel(hyper=hyper, x_mean=x_mean, x_sd=x_sd, y_mean=y_mean,
                   train_x=train_x, train_y=train_y, chol=np.tril(chol[0]), alpha=alpha,
                   inputs=inputs, target=target, meta=meta)
