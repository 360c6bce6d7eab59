"""Minimal time t*(M) by inverting the minimal-norm function N*(.).

Between consecutive impulse instants N* is continuous and strictly
decreasing, so t*(M) there is its inverse.  At an impulse instant tau_k,
N* jumps from its left limit down to N*(tau_k), and every bound M in
between is served by the same time tau_k: that interval is a plateau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import ConsistencyError, DomainError, InfeasibleError, UsageError
from .norm import (
    NormOptions,
    NormSolution,
    build_problem,
    solve_norm,
    solve_norm_restricted,
    solve_problem,
    with_warm_start,
)
from .system import TIME_ATOL, Condition, ControlSequence, ProblemConfig

# half-width of the tolerance band used to classify M at plateau endpoints
PLATEAU_BAND = 1e-9


@dataclass(frozen=True)
class Regime:
    kind: str
    k: int | None = None

    def __str__(self):
        return self.kind if self.k is None else f"{self.kind}({self.k})"

    @classmethod
    def parse(cls, text: str) -> "Regime":
        if "(" in text:
            kind, rest = text.split("(", 1)
            return cls(kind, int(rest.rstrip(")")))
        return cls(text)


FREE_DECAY = Regime("FreeDecay")
SATURATED = Regime("Saturated")


@dataclass(frozen=True)
class PlateauEntry:
    k: int
    tau: float
    m_inf: float
    m_sup: float


@dataclass(frozen=True)
class PlateauTable:
    entries: tuple[PlateauEntry, ...]
    gamma: float
    k0: int
    condition: Condition
    # N*(tau_1) under (C2); any M at or above it is served at tau_1
    saturation: float | None = None

    def entry(self, k: int) -> PlateauEntry:
        for e in self.entries:
            if e.k == k:
                return e
        raise KeyError(k)

    def upper_value(self, j: int) -> float:
        """N* at the left end of the j-th inter-impulse interval (right limit at tau_j)."""
        if j == 1:
            return self.saturation if self.saturation is not None else math.inf
        return self.entry(j).m_inf

    def lower_value(self, j: int) -> float:
        """N* at the right end of the j-th interval (left limit at tau_{j+1}, or 0 at gamma)."""
        if j >= self.k0:
            return 0.0
        return self.entry(j + 1).m_sup


@dataclass(frozen=True)
class TimeSolution:
    M: float
    optimal_time: float
    regime: Regime
    minimal_norm_at_optimum: float
    controls: ControlSequence
    norm_solution: NormSolution | None = None


def plateau_table(config: ProblemConfig, opts: NormOptions | None = None) -> PlateauTable:
    entries = []
    for k in range(2, config.k0 + 1):
        tau = float(config.tau[k - 1])
        m_inf = solve_norm(config, tau, opts).value
        m_sup = solve_norm_restricted(config, k, opts)
        entries.append(PlateauEntry(k, tau, m_inf, m_sup))
    saturation = None
    if config.condition is Condition.C2:
        saturation = solve_norm(config, float(config.tau[0]), opts).value
    table = PlateauTable(tuple(entries), config.gamma, config.k0, config.condition, saturation)
    _check_chain(table)
    return table


def _check_chain(table: PlateauTable):
    chain = []
    for e in reversed(table.entries):
        chain += [e.m_inf, e.m_sup]
    if table.saturation is not None:
        chain.append(table.saturation)
    if any(v < -PLATEAU_BAND for v in chain):
        raise ConsistencyError(f"negative plateau value in {chain}")
    for lo, hi in zip(chain, chain[1:]):
        if lo > hi + PLATEAU_BAND * max(1.0, abs(hi) if math.isfinite(hi) else 1.0):
            raise ConsistencyError(f"plateau chain is not ordered: {chain}")


class _NormCurve:
    """N* on one inter-impulse interval with a fixed active set, memoized per call.

    Holding the active count fixed makes the function continuous on the
    closed interval: at the right end it returns the left limit.
    """

    def __init__(self, config, active, opts):
        self.config = config
        self.active = active
        self.opts = opts
        self.cache = {}
        self.zeta = None

    def solution(self, T):
        if T not in self.cache:
            try:
                sol = solve_problem(
                    build_problem(self.config, T, active=self.active),
                    with_warm_start(self.opts, self.zeta),
                )
                self.zeta = sol.dual_direction
            except InfeasibleError:
                sol = None
            self.cache[T] = sol
        return self.cache[T]

    def __call__(self, T):
        sol = self.solution(T)
        return math.inf if sol is None else sol.value


def invert_norm(
    config: ProblemConfig, M: float, bracket, opts: NormOptions | None = None, xtol: float = 1e-11
) -> float:
    """The T in ``bracket`` with N*(T) = M, by bracketed root finding.

    The open bracket must contain no impulse instant; N* is evaluated with
    the active set of its left end, so the right end yields the left limit.
    """
    return _invert(config, M, bracket, opts, xtol)[0]


def _invert(config, M, bracket, opts, xtol=1e-11):
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise UsageError(f"empty bracket ({lo}, {hi})")
    inner = config.tau[(config.tau > lo + TIME_ATOL) & (config.tau < hi - TIME_ATOL)]
    if inner.size:
        raise UsageError(f"bracket ({lo}, {hi}) contains impulse instants {inner}")
    active = int(np.searchsorted(config.tau, lo + TIME_ATOL, side="right"))
    curve = _NormCurve(config, active, opts)
    g_lo, g_hi = curve(lo), curve(hi)
    if not g_hi <= M <= g_lo:
        raise UsageError(f"M = {M} not bracketed: N* runs from {g_lo} to {g_hi} on ({lo}, {hi})")
    # bisect until the left end is finite so the root finder sees real numbers
    while not math.isfinite(g_lo):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if curve(mid) >= M:
            lo, g_lo = mid, curve(mid)
        else:
            hi, g_hi = mid, curve(mid)
    if g_lo == M:
        return lo, curve
    if g_hi == M:
        return hi, curve
    root = optimize.brentq(lambda T: curve(T) - M, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    return float(root), curve


def minimal_time(
    config: ProblemConfig,
    M: float,
    opts: NormOptions | None = None,
    table: PlateauTable | None = None,
) -> TimeSolution:
    """t*(M) together with the optimal control of minimal norm."""
    if not M >= 0:
        raise DomainError(f"control bound must be nonnegative, got {M}")
    n_imp = len(config.schedule)
    if M == 0:
        zero = ControlSequence.zeros(n_imp, config.modes, config.k0)
        return TimeSolution(0.0, config.gamma, FREE_DECAY, 0.0, zero)
    table = table or plateau_table(config, opts)
    band = PLATEAU_BAND * max(1.0, M)

    def at(T, regime, warm=None):
        sol = solve_norm(config, T, with_warm_start(opts, warm))
        return TimeSolution(M, T, regime, sol.value, sol.controls, sol)

    if table.saturation is not None and M >= table.saturation - band:
        return at(float(config.tau[0]), SATURATED)
    for e in table.entries:
        if e.m_inf - band <= M <= e.m_sup + band:
            return at(e.tau, Regime("Plateau", e.k))
    for j in range(1, config.k0 + 1):
        if table.lower_value(j) < M < table.upper_value(j):
            right = float(config.tau[j]) if j < config.k0 else config.gamma
            T, curve = _invert(config, M, (float(config.tau[j - 1]), right), opts)
            return at(T, Regime("Interior", j), curve.zeta)
    raise ConsistencyError(f"M = {M} is not covered by the plateau table")
