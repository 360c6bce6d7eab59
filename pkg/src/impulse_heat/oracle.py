"""Brute-force ground truth for small instances (at most 3 modes and 3 active impulses).

Nothing here touches the dual functional.  Feasibility of a bound m at time
T is decided in the primal: the control directions of all but one block are
enumerated on a sphere grid, and the remaining block is optimized exactly
(a trust-region subproblem).  The grid minimum is attained by an actual
control, so ``grid_min <= r`` certifies feasibility; a Lipschitz slack
covering the grid spacing certifies infeasibility when
``grid_min - slack > r``.  Scanning m (or t) then yields a certified bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OracleRefusal
from .spectral import Domain, Region, build_basis
from .system import ProblemConfig, active_count, free_decay_time_of

MAX_MODES = 3
MAX_IMPULSES = 3
MAX_GRID_ROWS = 2_000_000
DEFAULT_SEED = 42


@dataclass(frozen=True)
class OracleGrid:
    direction_resolution: float = math.pi / 180
    # None picks 1e-3 * |y0| and 1e-3 * gamma(y0)
    magnitude_resolution: float | None = None
    time_resolution: float | None = None

    def __post_init__(self):
        for name in ("direction_resolution", "magnitude_resolution", "time_resolution"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")

    def refined(self, factor: int = 2) -> "OracleGrid":
        return OracleGrid(
            self.direction_resolution / factor,
            None if self.magnitude_resolution is None else self.magnitude_resolution / factor,
            None if self.time_resolution is None else self.time_resolution / factor,
        )


@dataclass(frozen=True)
class OracleBracket:
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack


def sphere_grid(dim: int, step: float):
    """Unit vectors covering S^{dim-1}; returns (points, chord) with every unit
    vector within Euclidean distance ``chord`` of some point."""
    if dim == 1:
        return np.array([[1.0], [-1.0]]), 0.0
    if dim == 2:
        count = int(math.ceil(2 * math.pi / step))
        angles = 2 * math.pi * np.arange(count) / count
        spacing = 2 * math.pi / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=1), 2 * math.sin(spacing / 4)
    if dim == 3:
        rings = int(math.ceil(math.pi / step))
        dtheta = math.pi / rings
        pts = [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]
        for i in range(1, rings):
            theta = i * dtheta
            count = max(int(math.ceil(2 * math.pi * math.sin(theta) / dtheta)), 1)
            phi = 2 * math.pi * np.arange(count) / count
            st = math.sin(theta)
            pts += np.stack([st * np.cos(phi), st * np.sin(phi), np.full(count, math.cos(theta))], axis=1).tolist()
        # a point is within dtheta/2 in latitude and dtheta/2 along its ring
        angle = math.hypot(dtheta / 2, dtheta / 2)
        return np.array(pts), 2 * math.sin(min(angle, math.pi) / 2)
    raise OracleRefusal(f"sphere grids are limited to dimension {MAX_MODES}")


def trust_region_min(A: np.ndarray, C: np.ndarray, m: float) -> np.ndarray:
    """min over |v| <= m of |c + A v| for every row c of C."""
    C = np.atleast_2d(C)
    if m == 0:
        return np.linalg.norm(C, axis=1)
    s, Q = np.linalg.eigh(A.T @ A)
    s = np.maximum(s, 0.0)
    live = s > 1e-14 * max(s.max(), 1e-300)
    g_hat = (C @ A) @ Q  # rows: Q^T A^T c
    inv = np.where(live, 1.0 / np.where(live, s, 1.0), 0.0)
    v_hat = -g_hat * inv
    inside = np.linalg.norm(v_hat, axis=1) <= m
    # outside the ball: find mu > 0 with |(s + mu)^-1 g_hat| = m by bisection
    lo = np.zeros(C.shape[0])
    hi = np.linalg.norm(g_hat, axis=1) / m + 1e-300
    for _ in range(120):
        mu = 0.5 * (lo + hi)
        v = -g_hat * np.where(live, 1.0 / (s + mu[:, None]), 0.0)
        too_long = np.linalg.norm(v, axis=1) > m
        lo = np.where(too_long, mu, lo)
        hi = np.where(too_long, hi, mu)
    v_out = -g_hat * np.where(live, 1.0 / (s + hi[:, None]), 0.0)
    v_hat = np.where(inside[:, None], v_hat, v_out)
    V = v_hat @ Q.T
    return np.linalg.norm(C + V @ A.T, axis=1)


def _check_size(config: ProblemConfig, k: int):
    if config.modes > MAX_MODES or k > MAX_IMPULSES:
        raise OracleRefusal(
            f"brute force handles at most {MAX_MODES} modes and {MAX_IMPULSES} impulses "
            f"(got {config.modes} modes, {k} active impulses)"
        )


def _blocks(config: ProblemConfig, t: float, k: int):
    lam = config.basis.eigenvalues
    drift = np.exp(-lam * t) * config.y0
    maps = [np.exp(-lam * (t - config.tau[j]))[:, None] * config.schedule.regions[j].gram for j in range(k)]
    return drift, maps


def min_terminal_norm(drift, maps, m: float, step: float):
    """(grid minimum of |drift + sum_j A_j v_j| over |v_j| <= m, certification slack)."""
    if not maps or m == 0:
        return float(np.linalg.norm(drift)), 0.0
    order = sorted(range(len(maps)), key=lambda j: np.linalg.norm(maps[j], 2))
    exact = maps[order[-1]]
    gridded = [maps[j] for j in order[:-1]]
    dim = drift.size
    while True:
        pts, chord = sphere_grid(dim, step)
        if len(pts) ** len(gridded) <= MAX_GRID_ROWS:
            break
        step *= 1.5
    C = drift[None, :]
    for A in gridded:
        # each block either saturates its ball or is switched off
        shifts = np.vstack([np.zeros(dim), m * pts]) @ A.T
        C = (C[:, None, :] + shifts[None, :, :]).reshape(-1, dim)
    best = float(trust_region_min(exact, C, m).min())
    slack = sum(np.linalg.norm(A, 2) * m * chord for A in gridded)
    return best, float(slack)


def _verdict(config, t, k, m, step):
    drift, maps = _blocks(config, t, k)
    best, slack = min_terminal_norm(drift, maps, m, step)
    r = config.r
    return best <= r, best - slack > r


def brute_norm(config: ProblemConfig, T: float, grid: OracleGrid | None = None) -> OracleBracket:
    """Certified bracket for N*(T) from a magnitude scan."""
    grid = grid or OracleGrid()
    k = active_count(config, T)
    _check_size(config, k)
    h = grid.magnitude_resolution or 1e-3 * float(np.linalg.norm(config.y0))
    step = grid.direction_resolution
    if np.linalg.norm(np.exp(-config.basis.eigenvalues * T) * config.y0) <= config.r:
        return OracleBracket(0.0, 0.0)

    def feasible(i):
        return _verdict(config, T, k, i * h, step)[0]

    def refuted(i):
        return _verdict(config, T, k, i * h, step)[1]

    hi = 1
    while not feasible(hi):
        hi *= 2
        if hi * h > 1e12:
            return OracleBracket(_last_true(refuted, 0, hi), math.inf)
    upper = _first_true(feasible, 0, hi)
    lower = _last_true(refuted, 0, upper)
    return OracleBracket(lower * h, upper * h)


def brute_time(config: ProblemConfig, M: float, grid: OracleGrid | None = None) -> OracleBracket:
    """Certified bracket for t*(M) from an ascending time scan."""
    grid = grid or OracleGrid()
    _check_size(config, config.k0)
    dt = grid.time_resolution or 1e-3 * config.gamma
    step = grid.direction_resolution

    def feasible(i):
        t = i * dt
        return _verdict(config, t, active_count(config, t), M, step)[0]

    def refuted(i):
        t = i * dt
        return _verdict(config, t, active_count(config, t), M, step)[1]

    top = int(math.ceil(config.gamma / dt)) + 1
    first = _first_true(feasible, 0, top)
    last_refuted = _last_true(refuted, 0, first)
    return OracleBracket(last_refuted * dt, first * dt)


def _first_true(pred, lo: int, hi: int) -> int:
    """Smallest i in (lo, hi] with pred(i), assuming pred(hi) and monotone."""
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _last_true(pred, lo: int, hi: int) -> int:
    """Largest i in [lo, hi) with pred(i); lo when none (pred(0) is taken as true)."""
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def random_instance(
    rng: np.random.Generator | int | None = DEFAULT_SEED, modes: int = 2, impulses: int = 2
) -> ProblemConfig:
    """Seeded small instance on (0, pi) with random sub-interval control regions."""
    rng = np.random.default_rng(rng)
    domain = Domain.interval(math.pi)
    basis = build_basis(domain, modes)
    while True:
        y0 = rng.uniform(-1.0, 1.0, modes)
        y0[0] = rng.choice([-1.0, 1.0]) * rng.uniform(0.6, 1.2)
        r = float(np.linalg.norm(y0) * rng.uniform(0.15, 0.35))
        gamma = free_decay_time_of(basis, y0, r)
        tau = np.sort(rng.uniform(0.1 * gamma, 0.9 * gamma, impulses))
        if impulses > 1 and np.min(np.diff(tau)) < 0.08 * gamma:
            continue
        boxes = []
        for _ in range(impulses):
            length = rng.uniform(0.4, 0.9) * math.pi
            a = rng.uniform(0.0, math.pi - length)
            boxes.append(Region((a,), (a + length,)))
        return ProblemConfig.build(domain, tau, y0, r, boxes, mode_count=modes)
