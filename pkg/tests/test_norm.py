import math

import numpy as np
import pytest

from conftest import LN2, LN4, c1_config
from impulse_heat.configio import load_config
from impulse_heat.errors import ConvergenceError, DegenerateAdjointError, DomainError, InfeasibleError, UsageError
from impulse_heat.norm import (
    NormOptions,
    build_problem,
    dual_value,
    feasibility_check,
    left_limit_extrapolated,
    recover_primal,
    solve_norm,
    solve_norm_restricted,
    with_warm_start,
)
from impulse_heat.spectral import Domain, Region
from impulse_heat.system import ControlSequence, ProblemConfig, evolve

CONFIGS = "configs"


def example_closed_form(T, r=1 / 6):
    """Single-mode minimal norm: all blocks push e_1 down at full strength."""
    if T < LN4:
        return (1 - r * math.exp(T)) / 2
    return (1 - r * math.exp(T)) / 6


def test_example_value_and_controls(example):
    sol = solve_norm(example, LN4)
    assert sol.value == pytest.approx(1 / 18, abs=1e-12)
    assert np.allclose(sol.controls.controls[:, 0], -1 / 18)
    assert np.allclose(sol.controls.controls[:, 1:], 0)
    assert np.linalg.norm(sol.terminal) == pytest.approx(1 / 6, abs=1e-12)


@pytest.mark.parametrize("T", [LN2, 0.8, 1.2, LN4 - 1e-4, LN4, 1.5, 1.7])
def test_example_closed_form(example, T):
    assert solve_norm(example, T).value == pytest.approx(example_closed_form(T), abs=1e-10)


def test_value_zero_at_gamma(example):
    sol = solve_norm(example, example.gamma)
    assert sol.value == 0.0
    assert sol.controls.sup_norm == 0.0


def test_horizon_checks(example, c1):
    with pytest.raises(DomainError):
        solve_norm(example, example.gamma + 0.1)
    with pytest.raises(DomainError):
        solve_norm(example, 0.5)
    with pytest.raises(DomainError):
        solve_norm(c1, 0.1)
    with pytest.raises(InfeasibleError):
        solve_norm(c1, 0.2)


def test_restricted_left_limit(example):
    assert solve_norm_restricted(example, 2) == pytest.approx(1 / 6, abs=1e-12)
    assert left_limit_extrapolated(example, 2) == pytest.approx(1 / 6, abs=1e-6)
    with pytest.raises(DomainError):
        solve_norm_restricted(example, 1)


def test_restricted_is_inf_when_unreachable(c1):
    assert solve_norm_restricted(c1, 2) == math.inf


def test_noop_region_restricted_equals_unrestricted():
    cfg = ProblemConfig.build(
        Domain.interval(), [0.2, 0.6], [1.0, 0.4], 0.15, [Region((0.3,), (2.5,)), Region((1.0,), (1.0,))], 2
    )
    assert solve_norm_restricted(cfg, 2) == pytest.approx(solve_norm(cfg, 0.6).value, rel=1e-10)
    sol = solve_norm(cfg, 0.6)
    assert sol.controls.block_norms[1] == 0.0


def test_recover_primal_example(example):
    prob = build_problem(example, LN4)
    zeta = -np.eye(16)[0]
    u = recover_primal(zeta, 1 / 18, prob)
    assert np.allclose(u.controls[:, 0], -1 / 18)
    report = feasibility_check(example, u, LN4)
    assert abs(report.residual) <= 1e-12
    zero = recover_primal(zeta, 0.0, prob)
    assert zero.sup_norm == 0.0


def test_degenerate_adjoint_raises():
    cfg = c1_config(y0=(0.0, 10.0), r=0.01)
    with pytest.raises(DegenerateAdjointError):
        solve_norm(cfg, 0.5)
    prob = build_problem(cfg, 0.5)
    with pytest.raises(DegenerateAdjointError):
        recover_primal(np.array([0.0, 1.0]), 1.0, prob)


def test_feasibility_bracketing(instances):
    for cfg in instances[:8]:
        T = 0.5 * (cfg.tau[0] + cfg.gamma)
        sol = solve_norm(cfg, T)
        prob = build_problem(cfg, T)
        up = feasibility_check(cfg, recover_primal(sol.dual_direction, sol.value + 1e-9, prob), T)
        assert up.residual <= 1e-12
        down = feasibility_check(cfg, recover_primal(sol.dual_direction, sol.value - 1e-3, prob), T)
        assert down.residual > 0


def test_feasibility_check_free_decay(example):
    zero = ControlSequence.zeros(2, 16, 2)
    assert abs(feasibility_check(example, zero, example.gamma).residual) < 1e-12
    assert feasibility_check(example, zero, 1.0).residual > 0


def test_boundary_touching_and_bang_bang(instances):
    for cfg in instances:
        for frac in (0.2, 0.5, 0.9):
            T = cfg.tau[0] + frac * (cfg.gamma - cfg.tau[0])
            sol = solve_norm(cfg, T)
            assert abs(np.linalg.norm(sol.terminal) - cfg.r) <= 1e-8 * max(1, cfg.r)
            assert np.all(np.abs(sol.controls.block_norms - sol.value) <= 1e-9 * max(1, sol.value))
            assert np.allclose(evolve(cfg, sol.controls, T), sol.terminal, atol=1e-12)


def test_weak_duality_random_directions(instances):
    rng = np.random.default_rng(7)
    for cfg in instances[:5]:
        T = 0.5 * (cfg.tau[0] + cfg.gamma)
        prob = build_problem(cfg, T)
        value = solve_norm(cfg, T).value
        for z in rng.normal(size=(50, cfg.modes)):
            assert dual_value(z, prob) <= value + 1e-9


def test_dual_value_input_checks(example):
    prob = build_problem(example, 1.0)
    with pytest.raises(UsageError):
        dual_value(np.zeros(16), prob)
    with pytest.raises(UsageError):
        dual_value(np.ones(3), prob)


def test_strict_monotonicity_within_intervals(instances):
    for cfg in instances[:10]:
        edges = list(cfg.tau[: cfg.k0]) + [cfg.gamma]
        for lo, hi in zip(edges, edges[1:]):
            ts = np.linspace(lo, hi, 7)[1:-1]
            vals = [solve_norm(cfg, t).value for t in ts]
            assert all(a > b for a, b in zip(vals, vals[1:]))


def test_warm_start_agrees(instances):
    cfg = instances[3]
    T = 0.5 * (cfg.tau[0] + cfg.gamma)
    cold = solve_norm(cfg, T)
    warm = solve_norm(cfg, T + 1e-3, with_warm_start(None, cold.dual_direction))
    again = solve_norm(cfg, T + 1e-3)
    assert warm.value == pytest.approx(again.value, rel=1e-12)


def test_ill_conditioned_first_instant():
    cfg, _ = load_config(f"{CONFIGS}/three_impulses.json")
    sol = solve_norm(cfg, cfg.tau[0])
    assert sol.value > 100
    assert np.all(np.abs(sol.controls.block_norms - sol.value) <= 1e-9 * sol.value)


def test_rectangle_config():
    cfg, opts = load_config(f"{CONFIGS}/rectangle.json")
    T = 0.5 * (cfg.tau[0] + cfg.gamma)
    sol = solve_norm(cfg, T, opts)
    assert sol.value > 0
    assert abs(np.linalg.norm(sol.terminal) - cfg.r) <= 1e-8


def test_c1_values_finite_after_second_impulse(c1):
    # mode 2 is steered only by u_2; mode 1 by both
    for T in (0.3, 0.5, 1.0):
        sol = solve_norm(c1, T)
        assert np.isfinite(sol.value)
        assert abs(np.linalg.norm(sol.terminal) - c1.r) <= 1e-8


def test_convergence_error_carries_bounds():
    err = ConvergenceError("stalled", lower=0.1, upper=0.2)
    assert (err.lower, err.upper) == (0.1, 0.2)
    assert "0.1" in str(err)


def test_options_feas_tol():
    assert NormOptions().feas_tol(0.5) == 1e-8
    assert NormOptions().feas_tol(3.0) == pytest.approx(3e-8)
    assert NormOptions(tol_feas=1e-6).feas_tol(3.0) == 1e-6
