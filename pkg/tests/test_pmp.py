import numpy as np
import pytest

from conftest import LN2, LN4
from impulse_heat.errors import UsageError
from impulse_heat.norm import solve_norm
from impulse_heat.pmp import adjoint_states, bang_bang_check, dual_alignment, max_principle_residual
from impulse_heat.system import ControlSequence


def test_adjoint_single_mode(example):
    r = 1 / 6
    term = r * np.eye(16)[0]
    trace = adjoint_states(example, term, 2)
    assert trace.values_at_impulses[1][0] == pytest.approx(-r)
    assert trace.values_at_impulses[0][0] == pytest.approx(-r * np.exp(-(LN4 - LN2)))
    zero = adjoint_states(example, np.zeros(16), 2)
    assert not np.any(zero.values_at_impulses)


def test_adjoint_example_optimum_halves(example):
    sol = solve_norm(example, LN4)
    trace = adjoint_states(example, sol.terminal, 2)
    assert np.allclose(trace.values_at_impulses[0], trace.values_at_impulses[1] / 2)


def test_example_controls_pass(example):
    u = np.zeros((2, 16))
    u[:, 0] = -1 / 18
    report = max_principle_residual(example, ControlSequence(u, 2), 1 / 18, LN4)
    assert report.passed
    assert np.all(report.cosines >= 1 - 1e-10)
    assert np.allclose(report.pairings, report.maxima)


def test_negated_block_fails(instances):
    for cfg in instances[:10]:
        T = 0.5 * (cfg.tau[0] + cfg.gamma)
        sol = solve_norm(cfg, T)
        ok = max_principle_residual(cfg, sol.controls, sol.value, T)
        assert ok.passed and np.all(ok.cosines >= 1 - 1e-10)
        u = sol.controls.controls.copy()
        u[0] = -u[0]
        bad = max_principle_residual(cfg, ControlSequence(u, sol.controls.active_count), sol.value, T)
        assert not bad.passed
        assert bad.cosines[0] < 1 - 1e-8


def test_bang_bang_check():
    u = ControlSequence(np.array([[0.6, 0.8], [1.0, 0.0]]), 2)
    assert bang_bang_check(u, 1.0).passed
    assert not bang_bang_check(u, 1.1).passed
    with pytest.raises(UsageError):
        bang_bang_check(u, -1.0)


def test_dual_alignment(instances):
    cfg = instances[0]
    T = 0.5 * (cfg.tau[0] + cfg.gamma)
    sol = solve_norm(cfg, T)
    assert dual_alignment(sol.dual_direction, sol.terminal) >= 1 - 1e-8
    assert dual_alignment(sol.dual_direction, -sol.terminal) <= -1 + 1e-8


def test_bad_arguments(example):
    u = ControlSequence.zeros(2, 16, 2)
    with pytest.raises(UsageError):
        max_principle_residual(example, u, 0.0, LN4)
    with pytest.raises(UsageError):
        adjoint_states(example, np.zeros(16), 3)
