import math

import numpy as np
import pytest

from conftest import c1_config
from impulse_heat.configio import example_config
from impulse_heat.errors import OracleRefusal
from impulse_heat.mintime import minimal_time
from impulse_heat.norm import solve_norm
from impulse_heat.oracle import (
    OracleGrid,
    brute_norm,
    brute_time,
    random_instance,
    sphere_grid,
    trust_region_min,
)

FINE = OracleGrid(direction_resolution=math.pi / 720)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_sphere_grid_covers(dim):
    pts, chord = sphere_grid(dim, math.pi / 30)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1)
    probe = np.random.default_rng(0).normal(size=(2000, dim))
    probe /= np.linalg.norm(probe, axis=1)[:, None]
    nearest = np.min(np.linalg.norm(probe[:, None, :] - pts[None, :, :], axis=2), axis=1)
    assert nearest.max() <= chord + 1e-12


def test_trust_region_against_scipy():
    from scipy import optimize

    rng = np.random.default_rng(2)
    A = rng.normal(size=(3, 3))
    C = rng.normal(size=(5, 3)) * 3
    got = trust_region_min(A, C, 0.7)
    for c, g in zip(C, got):
        cons = {"type": "ineq", "fun": lambda v: 0.49 - v @ v}
        res = optimize.minimize(lambda v: np.sum((c + A @ v) ** 2), np.zeros(3), constraints=[cons], tol=1e-14)
        assert g == pytest.approx(math.sqrt(res.fun), abs=1e-6)


def test_refuses_large_instances():
    with pytest.raises(OracleRefusal):
        brute_norm(example_config(16), 1.5)


def test_example_single_mode_brackets():
    cfg = example_config(1)
    b = brute_norm(cfg, math.log(4), FINE)
    assert b.contains(1 / 18) and b.width <= 1e-2
    t = brute_time(cfg, 0.1, FINE)
    assert t.contains(math.log(4)) and t.width <= 1e-2


def test_random_instance_is_reproducible():
    a, b = random_instance(5), random_instance(5)
    assert np.array_equal(a.y0, b.y0) and np.array_equal(a.tau, b.tau)
    assert a.k0 >= 1


def test_solvers_inside_brackets_three_modes():
    cfg = random_instance(11, modes=3, impulses=2)
    T = 0.5 * (cfg.tau[0] + cfg.gamma)
    grid = OracleGrid(direction_resolution=math.pi / 90)
    assert brute_norm(cfg, T, grid).contains(solve_norm(cfg, T).value, 1e-12)


def test_c1_instance_bracket():
    cfg = c1_config()
    for T in (0.5, 1.0):
        assert brute_norm(cfg, T, FINE).contains(solve_norm(cfg, T).value, 1e-12)


def test_refinement_does_not_widen():
    cfg = random_instance(3)
    T = 0.5 * (cfg.tau[0] + cfg.gamma)
    coarse = OracleGrid(math.pi / 90, magnitude_resolution=2e-3)
    fine = coarse.refined(2)
    a, b = brute_norm(cfg, T, coarse), brute_norm(cfg, T, fine)
    assert b.width <= a.width + 1e-12
    value = solve_norm(cfg, T).value
    assert a.contains(value, 1e-12) and b.contains(value, 1e-12)


def test_time_bracket_random():
    cfg = random_instance(4)
    M = 0.5 * solve_norm(cfg, 0.5 * (cfg.tau[0] + cfg.gamma)).value
    assert brute_time(cfg, M, FINE).contains(minimal_time(cfg, M).optimal_time, 1e-12)


def test_grid_validation():
    with pytest.raises(ValueError):
        OracleGrid(direction_resolution=0.0)
