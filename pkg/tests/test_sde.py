import math

import numpy as np
import pytest
from scipy import stats

from thermostat_lab.errors import InvalidInitialConditionError, StepSizeError, UnsupportedModelError
from thermostat_lab.rng import RngStream
from thermostat_lab.sde import (
    SdeConfig,
    brownian_increments,
    ito_speed_solve,
    ou_exact_step,
    ou_paths,
    ou_projection_experiment,
    strat_sphere_solve,
)
from thermostat_lab.sde import solvers
from thermostat_lab.stats.ks import ks_two_sample


def test_brownian_increments():
    assert np.array_equal(brownian_increments(5, 0.0, 0.1, RngStream(0)), np.zeros(5))
    cfg = SdeConfig("strat-sphere", 2, 2, 1.0, 2.0)
    x = brownian_increments(10**6, cfg.delta, 0.01, RngStream(1))
    v = x**2
    assert abs(v.mean() - 0.01) < 3 * v.std(ddof=1) / math.sqrt(v.size)
    pairs = brownian_increments(2 * 10**5, 1.0, 0.01, RngStream(2)).reshape(-1, 2)
    c = pairs[:, 0] * pairs[:, 1]
    assert abs(c.mean()) < 3 * c.std(ddof=1) / math.sqrt(c.size)


def test_config_validation():
    with pytest.raises(UnsupportedModelError):
        SdeConfig("ito-speed", 2, 1)
    with pytest.raises(UnsupportedModelError):
        SdeConfig("langevin", 2, 2)
    with pytest.raises(InvalidInitialConditionError):
        SdeConfig("strat-sphere", 2, 2, total_energy=2.0, initial_state=(1.0, 0.0, 0.0, 0.0))
    with pytest.raises(InvalidInitialConditionError):
        SdeConfig("ito-speed", 2, 2, total_energy=2.0, initial_state=(1.4142135623730951, 0.0))
    assert SdeConfig("ito-speed", 2, 3, collision_rate=2.0).delta == pytest.approx(1 / 3)


def test_strat_sphere_energy_and_zero_noise():
    cfg = SdeConfig("strat-sphere", 3, 2, 1.0, 3.0, step=0.01, t_final=2.0, grid_points=21)
    s = strat_sphere_solve(cfg, 1, 50)
    assert np.abs((s.values**2).sum(axis=2) - 3.0).max() < 1e-12
    frozen = SdeConfig("strat-sphere", 3, 2, 1.0, 3.0, step=0.01, t_final=2.0, grid_points=5, variance_rate=0.0)
    z = strat_sphere_solve(frozen, 1, 3)
    assert np.array_equal(z.values, np.broadcast_to(frozen.x0(), z.values.shape))
    assert np.allclose(s.times, np.linspace(0, 2, 21))


def test_strat_sphere_single_particle_moments():
    cfg = SdeConfig("strat-sphere", 1, 2, 1.0, 1.0, step=0.005, t_final=1.0, initial_state=(1.0, 0.0))
    u = strat_sphere_solve(cfg, 2, 10_000).values[:, -1]
    assert np.abs((u**2).sum(axis=1) - 1).max() < 1e-12
    # on the unit circle with variance rate 1 the angle diffuses: E[u1] = exp(-t/2)
    m = u[:, 0]
    assert abs(m.mean() - math.exp(-0.5)) < 3 * m.std(ddof=1) / 100


def test_strat_sphere_rotation_equivariance():
    from thermostat_lab.geometry import sample_haar_rotation

    g = sample_haar_rotation(4, RngStream(3))
    x0 = np.array([1.0, 0.0, 0.0, 1.0])
    a = strat_sphere_solve(SdeConfig("strat-sphere", 2, 2, 1.0, 2.0, step=0.01, t_final=1.0, initial_state=tuple(x0)), 4, 4000)
    b = strat_sphere_solve(SdeConfig("strat-sphere", 2, 2, 1.0, 2.0, step=0.01, t_final=1.0, initial_state=tuple(g @ x0)), 5, 4000)
    ua = a.values[:, -1] @ g.T
    ub = b.values[:, -1]
    for k in range(4):
        se = math.sqrt(ua[:, k].var(ddof=1) / 4000 + ub[:, k].var(ddof=1) / 4000)
        assert abs(ua[:, k].mean() - ub[:, k].mean()) < 4 * se


def test_ito_speed_single_particle_constant():
    cfg = SdeConfig("ito-speed", 1, 2, 1.0, 2.0, step=0.01, t_final=1.0, grid_points=11)
    s = ito_speed_solve(cfg, 1, 5)
    assert np.all(s.values == math.sqrt(2.0))
    sp = strat_sphere_solve(SdeConfig("strat-sphere", 1, 2, 1.0, 2.0, step=0.01, t_final=1.0, grid_points=11), 1, 5)
    assert np.abs(np.linalg.norm(sp.values, axis=2) - math.sqrt(2.0)).max() < 1e-12


def test_ito_speed_frozen_for_large_rate():
    cfg = SdeConfig("ito-speed", 3, 2, 1e12, 3.0, step=0.01, t_final=1.0)
    s = ito_speed_solve(cfg, 1, 5)
    assert np.abs(s.values - 1.0).max() < 1e-5


def test_ito_speed_invariants():
    cfg = SdeConfig("ito-speed", 3, 2, 1.0, 3.0, step=0.01, t_final=2.0, grid_points=11)
    s = ito_speed_solve(cfg, 6, 500)
    assert np.all(s.values > 0)
    assert np.abs((s.values**2).sum(axis=2) - 3.0).max() < 1e-12
    assert s.rejections >= 0


def test_refinement_gives_up(monkeypatch):
    monkeypatch.setattr(solvers, "MAX_HALVINGS", 0)
    cfg = SdeConfig("ito-speed", 2, 2, 1.0, 2.0, step=0.5, t_final=50.0, initial_state=(1.4, math.sqrt(2 - 1.96)))
    with pytest.raises(StepSizeError):
        ito_speed_solve(cfg, 1, 200)


@pytest.mark.parametrize("N,d", [(2, 2), (2, 3)])
def test_speed_formulations_agree_small(N, d):
    kw = dict(collision_rate=1.0, total_energy=2.0, step=5e-3, t_final=2.0)
    v = ito_speed_solve(SdeConfig("ito-speed", N, d, **kw), 1, 3000).values[:, -1, 0]
    u = strat_sphere_solve(SdeConfig("strat-sphere", N, d, **kw), 2, 3000).values[:, -1]
    speed = np.linalg.norm(u.reshape(-1, N, d)[:, 0], axis=1)
    assert not ks_two_sample(v, speed).rejects(0.01)


def test_ou_exact_step_examples():
    assert ou_exact_step(0.7, 1e-12, xi=0.0) == pytest.approx(0.7)
    assert abs(ou_exact_step(0.7, 1e-12, RngStream(0)) - 0.7) < 1e-5
    for h in (0.01, 0.5, 2.0):
        x = np.full(200_000, 1.5)
        y = ou_exact_step(x, h, RngStream(1))
        mean, var = math.exp(-h / 2) * 1.5, 1 - math.exp(-h)
        assert abs(y.mean() - mean) < 3 * math.sqrt(var / y.size)
        assert abs(y.var(ddof=1) - var) < 3 * var * math.sqrt(2 / y.size)


def test_ou_stationary_variance_and_autocorrelation():
    cfg = SdeConfig("ou", 1, 1, step=0.5, t_final=21.0, grid_points=43)
    s = ou_paths(cfg, 3, 20_000)
    x20 = s.values[:, 40, 0]
    sq = x20**2
    assert abs(sq.mean() - 1) < 3 * sq.std(ddof=1) / math.sqrt(sq.size)
    x21 = s.values[:, 42, 0]
    r = stats.pearsonr(x20, x21)[0]
    assert abs(r - math.exp(-0.5)) < 3 * (1 - math.exp(-1)) / math.sqrt(x20.size)


def test_ou_projection_small():
    r = ou_projection_experiment(16, 2.0, 500, 1, step=0.02)
    assert r["n"] == 16 and r["mean_sup_deviation"] > 0
    assert r["ks"]["n"] == 500
