import math

import pytest

from conftest import LN2, LN4, LN6
from impulse_heat.errors import ConsistencyError, DomainError, UsageError
from impulse_heat.mintime import (
    PlateauEntry,
    PlateauTable,
    Regime,
    _check_chain,
    invert_norm,
    minimal_time,
    plateau_table,
)
from impulse_heat.norm import solve_norm
from impulse_heat.system import Condition


def example_time(M, r=1 / 6):
    """Closed-form t*(M) for the single-mode two-impulse example."""
    if M == 0:
        return math.log(1 / r)
    if M < 1 / 18:
        return math.log((1 - 6 * M) / r)
    if M <= 1 / 6:
        return LN4
    if M < 1 / 3:
        return math.log((1 - 2 * M) / r)
    return LN2


@pytest.fixture(scope="module")
def example_table():
    from impulse_heat.configio import example_config

    return plateau_table(example_config())


def test_plateau_table_example(example_table):
    (e,) = example_table.entries
    assert (e.k, e.tau) == (2, pytest.approx(LN4))
    assert e.m_inf == pytest.approx(1 / 18, abs=1e-12)
    assert e.m_sup == pytest.approx(1 / 6, abs=1e-12)
    assert example_table.saturation == pytest.approx(1 / 3, abs=1e-12)
    assert example_table.condition is Condition.C2


@pytest.mark.parametrize("M", [0.0, 0.01, 0.05, 1 / 18, 0.1, 1 / 6, 0.2, 0.3, 1 / 3, 10.0])
def test_example_time_closed_form(example, example_table, M):
    sol = minimal_time(example, M, table=example_table)
    assert sol.optimal_time == pytest.approx(example_time(M), abs=1e-9)


def test_regimes(example, example_table):
    assert minimal_time(example, 0.0, table=example_table).regime == Regime("FreeDecay")
    assert str(minimal_time(example, 0.1, table=example_table).regime) == "Plateau(2)"
    assert str(minimal_time(example, 0.01, table=example_table).regime) == "Interior(2)"
    assert str(minimal_time(example, 0.2, table=example_table).regime) == "Interior(1)"
    assert str(minimal_time(example, 10.0, table=example_table).regime) == "Saturated"
    assert minimal_time(example, 0.0, table=example_table).optimal_time == pytest.approx(LN6, abs=1e-9)


def test_regime_parse_roundtrip():
    for text in ("Plateau(3)", "Interior(1)", "Saturated", "FreeDecay"):
        assert str(Regime.parse(text)) == text


def test_negative_bound(example):
    with pytest.raises(DomainError):
        minimal_time(example, -0.1)


def test_optimal_control_attains_target(example, example_table):
    for M in (0.02, 0.1, 0.25):
        sol = minimal_time(example, M, table=example_table)
        assert sol.controls.sup_norm <= M * (1 + 1e-9)
        assert sol.minimal_norm_at_optimum <= M * (1 + 1e-9)


def test_invert_norm_brackets(example):
    T = invert_norm(example, 0.25, (LN2, LN4))
    assert T == pytest.approx(math.log(6 * 0.5), abs=1e-10)
    with pytest.raises(UsageError):
        invert_norm(example, 0.25, (LN2, example.gamma))
    with pytest.raises(UsageError):
        invert_norm(example, 0.01, (LN2, LN4))


def test_chain_check_rejects_misordered():
    bad = PlateauTable((PlateauEntry(2, 1.0, 0.5, 0.2),), 2.0, 2, Condition.C2, 1.0)
    with pytest.raises(ConsistencyError):
        _check_chain(bad)
    bad = PlateauTable((PlateauEntry(2, 1.0, 0.1, 0.6),), 2.0, 2, Condition.C2, 0.5)
    with pytest.raises(ConsistencyError):
        _check_chain(bad)


def test_chain_ordered_on_instances(instances):
    for cfg in instances:
        table = plateau_table(cfg)
        for e in table.entries:
            assert e.m_inf <= e.m_sup


def test_c1_plateau_is_unbounded(c1):
    table = plateau_table(c1)
    (e,) = table.entries
    assert e.m_sup == math.inf
    assert table.saturation is None
    big = minimal_time(c1, 1e6, table=table)
    assert str(big.regime) == "Plateau(2)"
    assert big.optimal_time == pytest.approx(0.3)
    small = minimal_time(c1, 0.5 * e.m_inf, table=table)
    assert str(small.regime) == "Interior(2)"
    assert solve_norm(c1, small.optimal_time).value == pytest.approx(0.5 * e.m_inf, rel=1e-8)


def test_three_impulse_roundtrip():
    from impulse_heat.configio import load_config

    cfg, _ = load_config("configs/three_impulses.json")
    table = plateau_table(cfg)
    assert [e.k for e in table.entries] == [2, 3]
    for T in (0.3, 0.6, 1.0, 1.4):
        n = solve_norm(cfg, T).value
        assert minimal_time(cfg, n, table=table).optimal_time == pytest.approx(T, abs=1e-8)
