"""GP regression: kernel algebra, likelihood, training, prediction, serialization."""

import math

import numpy as np
import pytest

from windcurves import design, oracle
from windcurves.data import EnvSample, select_inputs
from windcurves.errors import (
    CholeskyFailure,
    ConstantColumn,
    DimensionMismatch,
    IoError,
    ParseError,
    TooFewRows,
)
from windcurves.gp import (
    GPFitOptions,
    GPHyperparameters,
    GPModel,
    _factor_sigma,
    fit,
    kernel,
    load_model,
    negative_log_likelihood,
    predict,
    relevance,
    relevance_from_lengths,
    save_model,
)

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _hyper(signal=1.0, lengths=(1.0,), noise=1.0, mean=None):
    return GPHyperparameters(signal_var=signal, length_scales=lengths,
                             noise_var=noise, mean_coeffs=mean)


# --- hyperparameter and option types ----------------------------------------

def test_hyper_validation():
    with pytest.raises(ValueError):
        _hyper(signal=0.0)
    with pytest.raises(ValueError):
        _hyper(noise=-1.0)
    with pytest.raises(ValueError):
        _hyper(lengths=(1.0, 0.0))
    with pytest.raises(ValueError):
        _hyper(lengths=())


def test_hyper_mean_coeffs_dimension():
    _hyper(lengths=(1.0, 2.0), mean=(0.5, 0.5))
    with pytest.raises(DimensionMismatch):
        _hyper(lengths=(1.0, 2.0), mean=(0.5,))


def test_options_restart_selection():
    opts = GPFitOptions()
    assert opts.restart_multipliers == (1.0, 0.3, 3.0)
    assert opts.with_restarts(1).restart_multipliers == (1.0,)
    assert opts.with_restarts(2).restart_multipliers == (1.0, 0.3)
    with pytest.raises(ValueError):
        opts.with_restarts(0)
    with pytest.raises(ValueError):
        opts.with_restarts(4)


# --- kernel -----------------------------------------------------------------

def test_kernel_at_zero_distance():
    assert kernel([1.5, 2.0], [1.5, 2.0], _hyper(signal=3.0, lengths=(1.0, 2.0))) == 3.0


def test_kernel_one_length_scale_away():
    h = _hyper(signal=2.0, lengths=(0.7,))
    assert kernel([0.0], [0.7], h) == pytest.approx(2.0 * math.exp(-0.5), rel=1e-15)


def test_kernel_factorizes_over_inputs():
    h = _hyper(signal=1.0, lengths=(1.0, 3.0))
    combined = kernel([0.0, 0.0], [1.0, 3.0], h)
    only_first = kernel([0.0, 0.0], [1.0, 0.0], h)
    only_second = kernel([0.0, 0.0], [0.0, 3.0], h)
    assert combined == pytest.approx(only_first * only_second, rel=1e-14)


def test_kernel_decays_to_zero():
    assert kernel([0.0], [50.0], _hyper()) < 1e-300


def test_kernel_excludes_noise():
    # the noise variance never appears off the training diagonal
    a = kernel([0.0], [0.0], _hyper(noise=1e-9))
    b = kernel([0.0], [0.0], _hyper(noise=5.0))
    assert a == b == 1.0


def test_kernel_dimension_check():
    with pytest.raises(DimensionMismatch):
        kernel([0.0, 1.0], [0.0], _hyper())
    with pytest.raises(DimensionMismatch):
        kernel([0.0, 1.0], [0.0, 1.0], _hyper(lengths=(1.0,)))


# --- likelihood -------------------------------------------------------------

def test_nll_single_point_closed_form():
    """One centered observation: NLL = y^2/(2s) + log(s)/2 + log(2 pi)/2
    with s the total variance (the diagonal jitter shifts this only at the
    1e-10 level)."""
    nll, grad = negative_log_likelihood(_hyper(signal=1.0, noise=1.0), [[0.0]], [0.0])
    assert nll == pytest.approx(HALF_LOG_2PI + 0.5 * math.log(2.0), rel=1e-9)
    nll2, grad2 = negative_log_likelihood(_hyper(signal=1.0, noise=1.0), [[0.0]], [2.0])
    assert nll2 == pytest.approx(1.0 + 0.5 * math.log(2.0) + HALF_LOG_2PI, rel=1e-9)


def test_nll_single_point_gradient_closed_form():
    """For one point, A = 1/s - y^2/s^2 drives every derivative:
    d/dlog signal = A*signal/2, d/dlog noise = A*noise/2, and the
    length-scale derivative vanishes (no pairwise distances)."""
    _, grad = negative_log_likelihood(_hyper(signal=1.0, noise=1.0), [[0.0]], [2.0])
    np.testing.assert_allclose(grad, [-0.25, 0.0, -0.25], atol=1e-8)


def test_nll_gradient_ordering_and_shape():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(8, 3))
    y = rng.normal(size=8)
    _, grad = negative_log_likelihood(_hyper(lengths=(1.0, 2.0, 0.5), noise=0.1), x, y)
    assert grad.shape == (5,)  # signal, three lengths, noise


def test_nll_matches_finite_differences():
    """Analytic log-space gradients against central differences."""
    rng = np.random.default_rng(2718)
    x = rng.uniform(-2.0, 2.0, (20, 2))
    y = np.sin(x[:, 0]) + 0.3 * x[:, 1] ** 2 + 0.05 * rng.normal(size=20)

    def nll_at(vec):
        h = GPHyperparameters(signal_var=float(np.exp(vec[0])),
                              length_scales=tuple(np.exp(vec[1:-1])),
                              noise_var=float(np.exp(vec[-1])))
        return negative_log_likelihood(h, x, y)[0]

    worst = 0.0
    for _ in range(5):
        hyp = GPHyperparameters(
            signal_var=float(np.exp(rng.uniform(-1, 1))),
            length_scales=tuple(np.exp(rng.uniform(-1, 1, 2))),
            noise_var=float(np.exp(rng.uniform(-3, 0))),
        )
        _, grad = negative_log_likelihood(hyp, x, y)
        vec = np.log([hyp.signal_var, *hyp.length_scales, hyp.noise_var])
        step = 1e-5
        for j in range(4):
            up, dn = vec.copy(), vec.copy()
            up[j] += step
            dn[j] -= step
            fd = (nll_at(up) - nll_at(dn)) / (2.0 * step)
            worst = max(worst, abs(grad[j] - fd) / max(abs(fd), 1e-12))
    assert worst < 1e-6


def test_nll_dimension_checks():
    with pytest.raises(DimensionMismatch):
        negative_log_likelihood(_hyper(lengths=(1.0, 1.0)), [[0.0]], [1.0])
    with pytest.raises(DimensionMismatch):
        negative_log_likelihood(_hyper(), [[0.0], [1.0]], [1.0])


def test_factorization_jitter_escalation():
    """Nearly singular Gram matrices get growing diagonal jitter; matrices
    that are genuinely not positive semidefinite fail after the cap."""
    near_singular = np.array([[1.0, 1.0 + 1e-9], [1.0 + 1e-9, 1.0]])
    chol, jitter = _factor_sigma(near_singular, noise_var=0.0, signal_var=1.0)
    assert jitter > 1e-10  # the starting jitter was not enough
    assert np.isfinite(chol[0]).all()
    indefinite = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(CholeskyFailure):
        _factor_sigma(indefinite, noise_var=0.0, signal_var=1.0)


# --- fitting ----------------------------------------------------------------

def test_fit_requires_five_rows():
    with pytest.raises(TooFewRows):
        fit(np.zeros((4, 1)) + np.arange(4)[:, None], np.arange(4.0))


def test_fit_rejects_constant_input_column():
    x = np.column_stack([np.arange(6.0), np.full(6, 3.3)])
    with pytest.raises(ConstantColumn, match="wave_h"):
        fit(x, np.arange(6.0), names=("v", "wave_h"))


def test_fit_rejects_constant_target():
    with pytest.raises(ConstantColumn, match="target"):
        fit(np.arange(6.0)[:, None], np.full(6, 2.0))


def test_fit_name_count_checked():
    with pytest.raises(DimensionMismatch):
        fit(np.arange(6.0)[:, None], np.arange(6.0), names=("a", "b"))


def test_fit_recovers_length_scale():
    """Data drawn from a known GP: the fitted length-scale lands within a
    few percent of truth (back in raw input units)."""
    rng = np.random.default_rng(314)
    x = np.sort(rng.uniform(-3.0, 3.0, 40))
    true_l = 1.2
    k = 4.0 * np.exp(-0.5 * (x[:, None] - x[None, :]) ** 2 / true_l ** 2)
    y = np.linalg.cholesky(k + 1e-8 * np.eye(40)) @ rng.normal(size=40)
    m = fit(x[:, None], y, names=("x",))
    l_raw = m.hyper.length_scales[0] * m.x_sd[0]
    assert abs(l_raw - true_l) / true_l < 0.25
    # near-noiseless data drives the fitted noise far below the signal
    assert m.hyper.noise_var < 1e-4 * m.hyper.signal_var


def test_fit_predictions_invariant_to_affine_input_maps():
    """Standardization absorbs any affine rescaling of an input column."""
    rng = np.random.default_rng(314)
    x = np.sort(rng.uniform(-3.0, 3.0, 40))
    k = 4.0 * np.exp(-0.5 * (x[:, None] - x[None, :]) ** 2 / 1.2 ** 2)
    y = np.linalg.cholesky(k + 1e-8 * np.eye(40)) @ rng.normal(size=40)
    m_raw = fit(x[:, None], y)
    m_mapped = fit((3.7 * x + 12.0)[:, None], y)
    grid = np.linspace(-2.8, 2.8, 60)[:, None]
    p_raw = predict(m_raw, grid)
    p_mapped = predict(m_mapped, 3.7 * grid + 12.0)
    np.testing.assert_allclose(p_mapped, p_raw, atol=1e-6)


def test_fit_is_deterministic():
    rng = np.random.default_rng(5)
    x = rng.uniform(0.0, 1.0, (15, 2))
    y = x[:, 0] + 0.2 * rng.normal(size=15)
    a = fit(x, y, options=GPFitOptions().with_restarts(1))
    b = fit(x, y, options=GPFitOptions().with_restarts(1))
    assert a.hyper == b.hyper
    assert a.meta == b.meta


def test_fit_handles_duplicate_rows():
    x = np.array([[1.0], [1.0], [2.0], [3.0], [4.0], [5.0]])
    y = np.array([1.0, 1.1, 2.0, 2.9, 4.2, 5.0])
    m = fit(x, y)
    assert np.isfinite(m.meta["nll"])
    assert m.hyper.noise_var > 1e-4  # conflicting duplicates force real noise


def test_fit_pinned_noise_interpolates():
    """With the noise variance pinned near zero, noiseless physics data is
    reproduced at the training points."""
    u = design.sobol_unit(12, 2)
    x = np.column_stack([4.0 + 20.0 * u[:, 0], 30.0 * u[:, 1]])
    envs = [EnvSample(v=float(v), yaw=float(w), wave_h=1.0, wave_dir=30.0,
                      temp=10.0, pressure=101325.0, rh=0.5, rho=1.225)
            for v, w in x]
    y = oracle.simulate(envs).targets("mean")
    m = fit(x, y, names=("v", "yaw"),
            options=GPFitOptions(fixed_noise_var=1e-8).with_restarts(1))
    assert m.hyper.noise_var == 1e-8  # pinned, not learned
    rel = np.abs(predict(m, x) - y) / np.maximum(np.abs(y), 1.0)
    assert rel.max() < 1e-6


def test_fit_metadata_and_trace():
    rng = np.random.default_rng(8)
    x = rng.uniform(0.0, 1.0, (12, 1))
    y = np.cos(3.0 * x[:, 0]) + 0.1 * rng.normal(size=12)
    m = fit(x, y, options=GPFitOptions(seed=123).with_restarts(1))
    assert set(m.meta) == {"nll", "iterations", "seed"}
    assert m.meta["seed"] == 123
    assert m.meta["iterations"] >= 1
    # the trace records the accepted NLL path of the winning restart
    assert len(m.trace) == m.meta["iterations"] + 1
    assert all(b < a for a, b in zip(m.trace, m.trace[1:]))
    assert m.trace[-1] == pytest.approx(m.meta["nll"], rel=1e-12)


def test_fit_factorization_invariants():
    rng = np.random.default_rng(21)
    x = rng.uniform(-1.0, 1.0, (14, 2))
    y = x[:, 0] ** 2 + 0.1 * rng.normal(size=14)
    m = fit(x, y, options=GPFitOptions().with_restarts(1))
    assert np.allclose(m.chol, np.tril(m.chol))
    sigma = m.chol @ m.chol.T
    np.testing.assert_allclose(sigma @ m.alpha, m.train_y, atol=1e-8 * np.abs(m.train_y).max())
    # the reconstructed covariance matches kernel values plus the noise diagonal
    k01 = kernel(m.train_x[0], m.train_x[1], m.hyper)
    assert sigma[0, 1] == pytest.approx(k01, rel=1e-10)
    assert sigma[0, 0] == pytest.approx(m.hyper.signal_var + m.hyper.noise_var, rel=1e-9)


# --- prediction -------------------------------------------------------------

def _toy_model(signal=1.0, noise=1.0, y_val=2.0, y_mean=0.0, mean_coeffs=None):
    """Single-training-point model assembled by hand with exact algebra."""
    s = signal + noise
    return GPModel(
        hyper=_hyper(signal=signal, lengths=(1.0,), noise=noise, mean=mean_coeffs),
        x_mean=np.array([0.0]), x_sd=np.array([1.0]), y_mean=y_mean,
        train_x=np.array([[0.0]]), train_y=np.array([y_val]),
        chol=np.array([[math.sqrt(s)]]), alpha=np.array([y_val / s]),
    )


def test_predict_single_point_shrinkage():
    """At the training point the posterior mean is signal/(signal+noise)
    times the observation: equal variances halve it."""
    m = _toy_model(signal=1.0, noise=1.0, y_val=2.0)
    np.testing.assert_allclose(predict(m, [[0.0]]), [1.0])


def test_predict_reverts_to_mean_far_away():
    m = _toy_model(y_mean=10.0)
    np.testing.assert_allclose(predict(m, [[200.0]]), [10.0], atol=1e-12)


def test_predict_linear_mean_component():
    m = _toy_model(y_val=0.0, mean_coeffs=(2.0,))
    np.testing.assert_allclose(predict(m, [[1.5]]), [3.0], atol=1e-12)


def test_predict_dimension_check():
    with pytest.raises(DimensionMismatch):
        predict(_toy_model(), [[0.0, 1.0]])


def test_predict_matches_manual_kernel_sum():
    rng = np.random.default_rng(3)
    x = rng.uniform(0.0, 2.0, (10, 2))
    y = x[:, 0] * x[:, 1] + 0.05 * rng.normal(size=10)
    m = fit(x, y, options=GPFitOptions().with_restarts(1))
    query = np.array([[0.7, 1.1]])
    q_std = (query - m.x_mean) / m.x_sd
    k_star = np.array([kernel(q_std[0], row, m.hyper) for row in m.train_x])
    expected = m.y_mean + k_star @ m.alpha
    assert predict(m, query)[0] == pytest.approx(expected, rel=1e-12)


# --- relevance --------------------------------------------------------------

def test_relevance_equal_lengths():
    rep = relevance_from_lengths([2.0, 2.0, 2.0, 2.0])
    np.testing.assert_allclose(rep.shares(), 25.0)
    np.testing.assert_allclose(rep.inv_lengths(), 0.5)


def test_relevance_shares_sum_to_hundred():
    rep = relevance_from_lengths([0.1502, 2.717, 4.63])
    assert rep.shares().sum() == pytest.approx(100.0, abs=1e-9)


def test_relevance_inverse_proportionality():
    rep = relevance_from_lengths([1.0, 4.0], names=("a", "b"))
    assert rep.entries[0].share == pytest.approx(80.0, rel=1e-12)
    assert rep.entries[1].share == pytest.approx(20.0, rel=1e-12)
    assert rep.entries[0].name == "a"


def test_relevance_of_model_uses_input_names():
    rng = np.random.default_rng(4)
    x = rng.uniform(0.0, 1.0, (12, 2))
    y = 5.0 * x[:, 0] + 0.1 * rng.normal(size=12)
    m = fit(x, y, names=("v", "yaw"), options=GPFitOptions().with_restarts(1))
    rep = relevance(m)
    assert [e.name for e in rep.entries] == ["v", "yaw"]
    assert rep.entries[0].share > rep.entries[1].share  # v drives the target


def test_noise_input_gets_tiny_share():
    """An appended pure-noise column is suppressed by the ARD kernel."""
    ds = oracle.simulate(design.design_dataset(120).env_samples(), oracle.OracleConfig())
    x, _ = select_inputs(ds, ("v", "yaw", "rho"))
    junk = np.random.default_rng(99).normal(size=(len(ds), 1))
    m = fit(np.hstack([x, junk]), ds.targets("mean"),
            names=("v", "yaw", "rho", "junk"),
            options=GPFitOptions().with_restarts(1))
    shares = relevance(m).shares()
    assert shares[3] < 5.0
    assert shares[0] > 80.0  # wind speed dominates the mean-power target


# --- serialization ----------------------------------------------------------

def _small_model():
    rng = np.random.default_rng(17)
    x = rng.uniform(0.0, 1.0, (9, 2))
    y = np.sin(4.0 * x[:, 0]) + 0.1 * rng.normal(size=9)
    return fit(x, y, names=("v", "yaw"), options=GPFitOptions().with_restarts(1))


def test_model_file_round_trip(tmp_path):
    m = _small_model()
    path = tmp_path / "model.json"
    save_model(m, path)
    back = load_model(path)
    assert back.hyper == m.hyper
    assert back.inputs == m.inputs
    assert back.target == m.target
    assert back.meta == m.meta
    grid = np.random.default_rng(0).uniform(0.0, 1.0, (20, 2))
    np.testing.assert_array_equal(predict(back, grid), predict(m, grid))


def test_model_file_is_json_with_expected_keys(tmp_path):
    import json

    m = _small_model()
    path = tmp_path / "model.json"
    save_model(m, path)
    payload = json.loads(path.read_text())
    assert set(payload) == {"inputs", "hyper", "standardization", "train_x",
                            "train_y", "target", "meta"}
    assert set(payload["hyper"]) == {"signal_var", "noise_var", "length_scales"}
    assert set(payload["standardization"]) == {"x_mean", "x_sd", "y_mean"}


def test_linear_mean_models_do_not_serialize(tmp_path):
    m = _toy_model(mean_coeffs=(1.0,))
    with pytest.raises(ValueError):
        save_model(m, tmp_path / "m.json")


def test_load_model_errors(tmp_path):
    with pytest.raises(IoError):
        load_model(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    with pytest.raises(ParseError):
        load_model(bad)
    wrong = tmp_path / "wrong.json"
    wrong.write_text('{"hyper": {}}')
    with pytest.raises(ParseError):
        load_model(wrong)


def test_load_model_shape_consistency(tmp_path):
    import json

    m = _small_model()
    path = tmp_path / "model.json"
    save_model(m, path)
    payload = json.loads(path.read_text())
    payload["hyper"]["length_scales"] = payload["hyper"]["length_scales"][:1]
    path.write_text(json.dumps(payload))
    with pytest.raises(ParseError, match="shape"):
        load_model(path)
