import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermostat_lab.errors import GridError, InvalidInitialConditionError, InvalidParameterError
from thermostat_lab.micro import DriverPath, ModelParams, rescale_driver, simulate_trajectory
from thermostat_lab.rng import RngStream
from thermostat_lab.rough import (
    SphereCoefficient,
    canonical_lift,
    chen_defect,
    holder_norms,
    solve_driven_ode,
    spiral_example,
    spiral_response,
    spiral_targets,
)
from thermostat_lab.rough._holder import holder_sup


def random_path(seed, n=200, m=3):
    gen = np.random.default_rng(seed)
    t = np.concatenate([[0.0], np.sort(gen.uniform(0, 1, n - 2)), [1.0]])
    return DriverPath(t, np.cumsum(gen.standard_normal((n, m)), axis=0) * 0.1)


@pytest.fixture(scope="module")
def simulated():
    p = ModelParams(2, 2, 1.0, 0.1, 2.0, 100.0, ode_step=0.01, grid_points=1001)
    tr = simulate_trajectory(p, RngStream(21))
    return tr, rescale_driver(tr.driver, 0.1, 1.0)


def test_linear_path_closed_form():
    a = np.array([1.0, -2.0])
    path = DriverPath(np.array([0.0, 1.0]), np.array([0 * a, a]))
    grid = np.linspace(0, 1, 11)
    rp = canonical_lift(path, grid)
    for i, t in enumerate(grid):
        assert np.allclose(rp.WW[i], np.outer(a, a) * t**2 / 2, atol=1e-15)
    assert np.array_equal(rp.W[0], np.zeros(2)) and np.array_equal(rp.WW[0], np.zeros((2, 2)))


def test_grid_outside_domain():
    path = random_path(0)
    with pytest.raises(GridError):
        canonical_lift(path, np.array([0.0, 1.5]))
    with pytest.raises(GridError):
        canonical_lift(path, np.array([0.5, 0.2]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_chen_and_symmetric_part(seed):
    path = random_path(seed)
    rp = canonical_lift(path, np.linspace(0, 1, 41))
    gen = np.random.default_rng(seed)
    scale = rp.scale()
    for _ in range(20):
        i, k, j = np.sort(gen.integers(0, 41, 3))
        s, u, t = rp.times[[i, k, j]]
        assert np.abs(chen_defect(rp, s, u, t)).max() <= 1e-12 * scale
        inc, area = rp.increment(i, j)
        assert np.abs(area + area.T - np.outer(inc, inc)).max() <= 1e-12 * max(scale, 1.0)
        assert np.array_equal(rp.W[j] - rp.W[i], (rp.W[k] - rp.W[i]) + (rp.W[j] - rp.W[k])) or np.allclose(
            rp.W[j] - rp.W[i], (rp.W[k] - rp.W[i]) + (rp.W[j] - rp.W[k]), atol=1e-15
        )


def test_chen_on_simulated_driver(simulated):
    _, W = simulated
    rp = canonical_lift(W, np.linspace(0, 1, 1001))
    gen = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        i, k, j = np.sort(gen.integers(0, 1001, 3))
        worst = max(worst, np.abs(chen_defect(rp, *rp.times[[i, k, j]])).max())
    assert worst < 1e-12 * rp.scale()


def test_chen_degenerate_triple_is_exactly_zero():
    rp = canonical_lift(random_path(3), np.linspace(0, 1, 11))
    for s in rp.times:
        assert np.array_equal(chen_defect(rp, s, s, rp.times[-1]), np.zeros((3, 3)))
    with pytest.raises(GridError):
        chen_defect(rp, 0.0, 0.55, 1.0)


@pytest.mark.parametrize("target", ["anchor", "local"])
def test_chen_detects_corruption(target):
    rp = canonical_lift(random_path(4), np.linspace(0, 1, 21))
    if target == "anchor":
        rp.WW[10, 0, 1] += 1e-6
        d = chen_defect(rp, rp.times[2], rp.times[10], rp.times[15])
    else:
        rp.local[5, 1, 2] += 1e-6
        d = chen_defect(rp, rp.times[2], rp.times[10], rp.times[15])
    assert np.abs(d).max() >= 1e-7


def test_composed_matches_anchored():
    rp = canonical_lift(random_path(5), np.linspace(0, 1, 31))
    for i, j in [(0, 30), (3, 17), (12, 13), (7, 7)]:
        assert np.allclose(rp.composed(i, j), rp.increment(i, j)[1], atol=1e-13)


def test_holder_linear_path():
    a = np.array([3.0, 4.0])
    path = DriverPath(np.array([0.0, 1.0]), np.array([0 * a, a]))
    rep = holder_norms(canonical_lift(path, np.linspace(0, 1, 51)), 0.4)
    assert abs(rep.seminorm_W - 5.0) < 1e-12
    assert rep.seminorm_WW >= 0 and np.isfinite(rep.norm)
    with pytest.raises(InvalidParameterError):
        holder_norms(canonical_lift(path, np.linspace(0, 1, 5)), 0.6)


def test_holder_refinement_monotone(simulated):
    _, W = simulated
    coarse = holder_norms(canonical_lift(W, np.linspace(0, 1, 101)), 0.4)
    fine = holder_norms(canonical_lift(W, np.linspace(0, 1, 201)), 0.4)
    assert fine.seminorm_W >= coarse.seminorm_W and fine.seminorm_WW >= coarse.seminorm_WW


@pytest.mark.slow
def test_holder_stable_for_small_eps():
    p = ModelParams(2, 2, 1.0, 0.05, 2.0, 400.0, ode_step=0.1, grid_points=2)
    W = rescale_driver(simulate_trajectory(p, RngStream(22)).driver, 0.05, 1.0)
    a = holder_norms(canonical_lift(W, np.linspace(0, 1, 1001)), 0.4).seminorm_W
    b = holder_norms(canonical_lift(W, np.linspace(0, 1, 10001)), 0.4).seminorm_W
    # the 10^4 grid is above the all-pairs limit and uses dyadic pairs
    assert np.isfinite(b) and a / 2 <= b <= 2 * a


def test_holder_backends_and_dyadic(which):
    rp = canonical_lift(random_path(6, n=400), np.linspace(0, 1, 300))
    full = holder_sup(rp.times, rp.W, rp.WW, 0.4, False, which)
    ref = holder_sup(rp.times, rp.W, rp.WW, 0.4, False, "numpy")
    assert np.allclose(full, ref, rtol=1e-13)
    dyadic = holder_sup(rp.times, rp.W, rp.WW, 0.4, True, which)
    assert dyadic[0] <= full[0] * (1 + 1e-12) and dyadic[1] <= full[1] * (1 + 1e-12)


def test_driven_ode_zero_driver():
    W = DriverPath(np.array([0.0, 1.0]), np.zeros((2, 4)))
    u0 = np.array([1.0, 0.0, 0.0, 1.0])
    sol = solve_driven_ode(SphereCoefficient(2.0), W, u0, 0.01)
    assert np.array_equal(sol.values[-1], u0)
    with pytest.raises(InvalidInitialConditionError):
        solve_driven_ode(SphereCoefficient(2.0), W, 2 * u0, 0.01)


def test_driven_ode_round_trip(simulated):
    tr, W = simulated
    times = tr.times * 0.01
    sol = solve_driven_ode(SphereCoefficient(2.0), W, tr.u[0], 0.01 * 0.01, times=times)
    got = sol.at(times)
    assert np.abs(got - tr.u).max() < 1e-6
    assert np.abs((sol.values**2).sum(axis=1) - 2.0).max() < 1e-12


def test_sphere_coefficient_tangent():
    A = SphereCoefficient(2.0)
    u = np.array([1.0, 0.0, 0.0, 1.0])
    xi = np.array([0.3, -1.0, 2.0, 0.5])
    assert abs(u @ A.apply(u, xi)) < 1e-15
    assert np.allclose(A(u) @ xi, A.apply(u, xi))


def test_general_coefficient_path():
    a = np.array([1.0, 0.5])
    W = DriverPath(np.array([0.0, 1.0]), np.array([0 * a, a]))
    sol = solve_driven_ode(lambda x: np.eye(2), W, np.zeros(2), 0.1)
    assert np.allclose(sol.values[-1], a)


def test_spiral_regression():
    path = spiral_example(0.1, 10**6)
    res = spiral_response(path)
    target = spiral_targets(0.1)
    assert abs(res["y2"] - target["y2"]) < 1e-6
    assert abs(res["y2"] - 0.5) <= 0.0035
    assert abs(res["sup_norm"] - 0.1) < 1e-12
    assert abs(res["area"] - target["area"]) < 1e-3
    with pytest.raises(InvalidParameterError):
        spiral_example(0.1, 5)


def test_spiral_sup_vanishes_while_y2_stays():
    for eps in (0.2, 0.1, 0.05):
        res = spiral_response(spiral_example(eps, 200_000))
        assert abs(res["sup_norm"] - eps) < 1e-12
        assert abs(res["y2"] - 0.5) <= eps**2 / 4 + 1e-3
