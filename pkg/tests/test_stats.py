import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate
from scipy import stats as sps

from thermostat_lab.errors import (
    InsufficientDataError,
    InvalidInitialConditionError,
    InvalidParameterError,
    LowPowerWarning,
    TruncationWarning,
)
from thermostat_lab.micro import ModelParams
from thermostat_lab.rng import RngStream
from thermostat_lab.stats import (
    CorrelationEstimate,
    IncrementEnsemble,
    MomentAccumulator,
    autocov_psi,
    conditioning_frames,
    driver_increments,
    exp_decay_conditional,
    geometric_gaps,
    green_kubo_constants,
    ks_critical_coefficient,
    ks_two_sample,
    mean_and_se,
    moment_scaling_fit,
    simulate_stationary_psi,
    targets,
    uniform_sphere_speeds,
    v_correlations,
)


def params(N=2, d=2, lam=1.0, **kw):
    return ModelParams(N, d, lam, 0.1, float(N), 1.0, **kw)


# closed forms against direct quadrature of the stationary covariance exp(-lam|s|)/d


@pytest.mark.parametrize("lam,d", [(1.0, 2), (2.0, 3), (0.5, 2)])
def test_targets_against_quadrature(lam, d):
    cov = lambda s: math.exp(-lam * abs(s)) / d
    # split the square at the kink s = r
    v0 = 2 * integrate.dblquad(lambda s, r: cov(s - r), 0, 1, 0, lambda r: r, epsabs=1e-13, epsrel=1e-12)[0]
    assert targets.v_corr(0, lam, d) == pytest.approx(v0, rel=1e-8)
    for k in (1, 2, 5):
        vk = integrate.dblquad(lambda s, r: cov(s - r), 0, 1, k, k + 1, epsabs=1e-13, epsrel=1e-12)[0]
        assert targets.v_corr(k, lam, d) == pytest.approx(vk, rel=1e-8)
    # E~ = sum_{k>=1} E V_0 V_k = int_0^1 int_1^inf cov(s - r) ds dr
    et = integrate.dblquad(lambda s, r: cov(s - r), 0, 1, 1, np.inf, epsabs=1e-13, epsrel=1e-12)[0]
    assert targets.e_tilde(lam, d) == pytest.approx(et, rel=1e-8)
    h = integrate.dblquad(lambda s, r: cov(r - s), 0, 1, 0, lambda r: r, epsabs=1e-13, epsrel=1e-12)[0]
    assert targets.h_correction(lam, d) == pytest.approx(h, rel=1e-8)
    full = 2 * integrate.quad(cov, 0, np.inf, epsabs=1e-13)[0]
    assert targets.sigma_tilde(lam, d) == pytest.approx(full, rel=1e-8)
    assert targets.diffusion_rate(lam, d) == pytest.approx(full, rel=1e-8)
    assert targets.e_total(lam, d) == pytest.approx(full / 2, rel=1e-8)
    assert targets.e_total(lam, d) == pytest.approx(targets.e_tilde(lam, d) + targets.h_correction(lam, d), rel=1e-12)
    assert targets.v_corr(0, lam, d) + 2 * targets.e_tilde(lam, d) == pytest.approx(targets.sigma_tilde(lam, d), rel=1e-12)


def test_target_values_unit_rate():
    assert targets.v_corr(0, 1.0, 2) == pytest.approx(0.36788, abs=5e-6)
    assert targets.v_corr(1, 1.0, 2) == pytest.approx(0.19979, abs=5e-6)
    assert targets.e_tilde(1.0, 2) == pytest.approx(0.31606, abs=5e-6)
    assert targets.psi_autocov(1.0, 1.0, 2) == pytest.approx(math.exp(-1) / 2)
    with pytest.raises(ValueError):
        targets.v_corr(-1, 1.0, 2)


# accumulators


@settings(max_examples=60, deadline=None)
@given(
    arrays(float, st.tuples(st.integers(0, 30), st.just(3)), elements=st.floats(-1e3, 1e3)),
    arrays(float, st.tuples(st.integers(0, 30), st.just(3)), elements=st.floats(-1e3, 1e3)),
)
def test_accumulator_merge_equals_single_pass(a, b):
    merged = MomentAccumulator.from_samples(a) + MomentAccumulator.from_samples(b)
    whole = MomentAccumulator.from_samples(np.concatenate([a, b]))
    assert merged.count == whole.count
    scale = 1.0 + np.abs(np.concatenate([a, b])).max(initial=0.0) ** 2 * max(whole.count, 1)
    assert np.allclose(merged.mean, whole.mean, atol=1e-12 * math.sqrt(scale))
    assert np.allclose(merged.m2, whole.m2, atol=1e-12 * scale)


def test_mean_and_se():
    x = np.random.default_rng(0).standard_normal((1000, 2))
    mean, se, n = mean_and_se(x)
    assert n == 1000
    assert np.allclose(mean, x.mean(axis=0)) and np.allclose(se, x.std(axis=0, ddof=1) / math.sqrt(1000))
    assert np.all(np.isnan(MomentAccumulator.from_samples(x[:1]).variance))


def test_estimate_band_logic():
    e = CorrelationEstimate(np.array([1.0, 0.0]), np.array([0.1, 0.0]), 10, np.array([1.25, 1e-13]), "x")
    assert list(e.within(3)) == [True, True]
    assert not e.passes(2)
    assert e.to_dict(seed_range=(0, 10))["seed_range"] == [0, 10]
    assert e.z_scores()[0] == pytest.approx(-2.5)


# KS


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 200), st.integers(5, 200))
def test_ks_matches_scipy(seed, n, m):
    gen = np.random.default_rng(seed)
    a = gen.standard_normal(n)
    b = np.round(gen.standard_normal(m) + 0.3, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LowPowerWarning)
        r = ks_two_sample(a, b)
    assert r.statistic == pytest.approx(sps.ks_2samp(a, b, method="asymp").statistic, abs=1e-15)


def test_ks_basics():
    x = np.random.default_rng(1).standard_normal(500)
    assert ks_two_sample(x, x.copy()).statistic == 0.0
    assert ks_critical_coefficient(0.05) == pytest.approx(1.358, abs=1e-3)
    assert ks_critical_coefficient(0.01) == pytest.approx(1.628, abs=1e-3)
    with pytest.raises(InsufficientDataError):
        ks_two_sample([], x)
    with pytest.warns(LowPowerWarning):
        ks_two_sample(x[:10], x)
    d = ks_two_sample(x, x).to_dict()
    assert set(d) >= {"critical_0.05", "critical_0.01", "statistic"}


def test_ks_null_calibration_and_power():
    gen = np.random.default_rng(2)
    trials = 400
    rejections = sum(ks_two_sample(gen.standard_normal(500), gen.standard_normal(500)).rejects(0.05) for _ in range(trials))
    assert rejections / trials <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / trials)
    power = sum(ks_two_sample(gen.standard_normal(500), gen.normal(0.5, 1, 500)).rejects(0.05) for _ in range(50))
    assert power == 50


def test_uniform_sphere_speeds():
    s = uniform_sphere_speeds(3, 2, 3.0, 20_000, RngStream(0))
    assert s.shape[0] == 20_000
    sq = s**2
    assert abs(sq.mean() - 1.0) < 3 * sq.std(ddof=1) / math.sqrt(sq.size)


# psi ensembles


@pytest.fixture(scope="module")
def haar_ens():
    return simulate_stationary_psi(params(), 6.0, 3, n_traj=2000, grid_step=0.5)


def test_ensemble_shapes_and_invariants(haar_ens):
    e = haar_ens
    assert e.psi.shape == (2000, 13, 4) and e.V.shape == (2000, 6, 4) and e.HX.shape == (2000, 6, 4, 4)
    assert e.stationary and e.seed_range() == (0, 2000)
    assert np.abs(e.block_norms() - 1).max() < 1e-12
    # |V_j| <= sqrt(N) for unit windows; sym(HX) = V V^T / 2
    assert np.linalg.norm(e.V, axis=2).max() <= math.sqrt(2) + 1e-12
    sym = 0.5 * (e.HX + np.swapaxes(e.HX, 2, 3))
    assert np.abs(sym - 0.5 * np.einsum("rji,rjk->rjik", e.V, e.V)).max() < 1e-13


def test_ensemble_one_point_law(haar_ens):
    x = haar_ens.psi[:, 5]
    mean, se, _ = mean_and_se(x)
    assert np.all(np.abs(mean) <= 4 * se)
    mean2, se2, _ = mean_and_se(x**2)
    assert np.all(np.abs(mean2 - 0.5) <= 4 * se2)
    assert not ks_two_sample(haar_ens.psi[:, 0, 0], haar_ens.psi[:, 12, 0]).rejects(0.01)


def test_ensemble_backends_agree():
    a = simulate_stationary_psi(params(), 4.0, 9, n_traj=50, which="numba")
    b = simulate_stationary_psi(params(), 4.0, 9, n_traj=50, which="numpy")
    assert np.abs(a.psi - b.psi).max() < 1e-12
    assert np.abs(a.HX - b.HX).max() < 1e-12


def test_ensemble_chunking_and_streams():
    a = simulate_stationary_psi(params(), 3.0, RngStream(4, 10), n_traj=30, chunk=7)
    b = simulate_stationary_psi(params(), 3.0, RngStream(4, 10), n_traj=30, chunk=1000)
    c = simulate_stationary_psi(params(), 3.0, RngStream(4, 20), n_traj=10)
    assert np.array_equal(a.psi, b.psi)
    assert np.array_equal(a.psi[10:20], c.psi)


def test_ensemble_errors():
    with pytest.raises(InvalidParameterError):
        simulate_stationary_psi(params(), 0.0, 1)
    with pytest.raises(InvalidInitialConditionError):
        simulate_stationary_psi(params(), 1.0, 1, mode="conditioned")
    with pytest.raises(InvalidInitialConditionError):
        conditioning_frames(np.array([1.0, 0.0, 0.5, 0.0]), np.array([1.0, 0.0]))


def test_conditioning_frames_hit_target():
    a = np.array([0.6, 0.8, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0])
    nhat = np.array([0.0, 0.0, 1.0])
    phis = conditioning_frames(a, nhat)
    for k in range(3):
        assert np.allclose(phis[k].T @ nhat, a[3 * k : 3 * k + 3], atol=1e-14)
        assert np.allclose(phis[k].T @ phis[k], np.eye(3), atol=1e-14)


def test_autocov_small(haar_ens):
    est = autocov_psi(haar_ens, [0.0, 1.0])
    assert len(est) == 2
    assert np.allclose(est[0].target, 0.5 * np.eye(4))
    for e in est:
        assert e.passes(4)
    with pytest.raises(InvalidParameterError):
        autocov_psi(haar_ens, [0.3])


def test_low_power_warning():
    small = simulate_stationary_psi(params(), 3.0, 1, n_traj=20)
    with pytest.warns(LowPowerWarning):
        autocov_psi(small, [0.0])
    with pytest.raises(InsufficientDataError):
        autocov_psi(simulate_stationary_psi(params(), 3.0, 1, n_traj=1), [0.0])


@pytest.mark.parametrize("lam", [1.0, 2.0])
def test_conditioned_decay(lam):
    a = np.array([0.0, 1.0, 0.6, -0.8])
    ens = simulate_stationary_psi(params(lam=lam), 2.0, 5, n_traj=4000, mode="conditioned", initial=a)
    assert np.array_equal(exp_decay_conditional(ens, a, 0.0).estimate, a) or np.allclose(
        exp_decay_conditional(ens, a, 0.0).estimate, a, atol=1e-15
    )
    e = exp_decay_conditional(ens, a, 1.0)
    assert np.allclose(e.target, math.exp(-lam) * a)
    assert e.passes(4)
    with pytest.raises(InvalidParameterError):
        exp_decay_conditional(ens, -a, 1.0)


def test_v_correlations_small(haar_ens):
    est = v_correlations(haar_ens, 2)
    assert [e.extra["k"] for e in est] == [0, 1, 2]
    for e in est:
        assert e.passes(4)
    with pytest.raises(InvalidParameterError):
        v_correlations(haar_ens, 6)


def test_green_kubo_small_and_exact_diagonal():
    ens = simulate_stationary_psi(params(lam=2.0), 10.0, 6, n_traj=1000, grid_step=1.0)
    gk = green_kubo_constants(ens, 8)
    assert set(gk) == {"sigma_tilde", "e_tilde", "h_correction", "e_total", "stratonovich_gap"}
    # the diagonal of E - Sigma~/2 vanishes pathwise
    assert np.abs(np.diag(gk["stratonovich_gap"].estimate)).max() < 1e-13
    for e in gk.values():
        assert e.passes(4)
    with pytest.raises(InvalidParameterError):
        green_kubo_constants(ens, 5)


def test_green_kubo_truncation_warning(monkeypatch):
    ens = simulate_stationary_psi(params(lam=2.0), 10.0, 6, n_traj=200, grid_step=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        green_kubo_constants(ens, 8)
    # a tail this large only occurs for huge ensembles; fake it
    monkeypatch.setattr(targets, "v_tail", lambda k, lam, d: 1.0)
    with pytest.warns(TruncationWarning):
        green_kubo_constants(ens, 8)


def test_shift_mode_is_stationary():
    ens = simulate_stationary_psi(params(), 4.0, 8, n_traj=3000, mode="shift")
    assert ens.stationary
    assert np.abs(ens.block_norms() - 1).max() < 1e-12
    m2, se, _ = mean_and_se(ens.psi[:, 0] ** 2)
    assert np.all(np.abs(m2 - 0.5) <= 4 * se)
    for e in autocov_psi(ens, [1.0]):
        assert e.passes(4)


# moment scaling


def test_geometric_gaps():
    g = geometric_gaps(0.1, 8)
    assert g[0] == 0.1 and g[-1] == pytest.approx(12.8)
    assert math.log10(g[-1] / g[0]) >= 2


def test_moment_fit_on_brownian_sample():
    gen = np.random.default_rng(3)
    gaps = geometric_gaps(0.01, 8)
    l1 = [np.linalg.norm(gen.standard_normal((20_000, 2)) * math.sqrt(h), axis=1) for h in gaps]
    l2 = [np.abs(gen.standard_normal(20_000)) * h for h in gaps]
    inc = IncrementEnsemble(0.1, gaps, l1, l2, 0, 0, 20_000)
    assert moment_scaling_fit(inc, 4, 1).slope == pytest.approx(0.5, abs=0.02)
    assert moment_scaling_fit(inc, 4, 2).slope == pytest.approx(1.0, abs=0.02)
    fit = moment_scaling_fit(inc, 4, 1)
    assert fit.decades >= 2 and fit.to_dict()["level"] == 1


def test_moment_fit_errors():
    gaps = geometric_gaps(0.01, 8)
    inc = IncrementEnsemble(0.1, gaps, [np.ones(3)] * 8, [np.ones(3)] * 8, 0, 0, 3)
    with pytest.raises(InvalidParameterError):
        moment_scaling_fit(inc, 3, 1)
    with pytest.raises(InvalidParameterError):
        moment_scaling_fit(inc, 4, 3)
    short = IncrementEnsemble(0.1, gaps[:4], [np.ones(3)] * 4, [np.ones(3)] * 4, 0, 0, 3)
    with pytest.raises(InsufficientDataError):
        moment_scaling_fit(short, 4, 1)
    narrow = IncrementEnsemble(0.1, geometric_gaps(0.01, 6, 1.5), [np.ones(3)] * 6, [np.ones(3)] * 6, 0, 0, 3)
    with pytest.raises(InsufficientDataError):
        moment_scaling_fit(narrow, 4, 1)


def test_driver_increments_small():
    gaps = geometric_gaps(0.1, 3)
    inc = driver_increments(params(), 0.2, gaps, 1.0, 20, seed=1)
    assert len(inc.level1) == 3 and inc.level1[0].size == 20 * 10
    with pytest.raises(InvalidParameterError):
        driver_increments(params(), 0.2, [0.1, 0.15], 1.0, 5, seed=1)
    with pytest.raises(InvalidParameterError):
        driver_increments(params(), 0.2, gaps, 0.3, 5, seed=1)
