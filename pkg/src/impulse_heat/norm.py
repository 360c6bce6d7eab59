"""Minimal-norm impulse control N*(T) through its dual functional.

For a terminal time T with k active impulses write b = e^{Delta T} y0 and
H_j = G_j E_j, E_j = diag(exp(-lambda (T - tau_j))).  A bound m is feasible
iff for every direction zeta

    <-b, zeta> <= r |zeta| + m * sum_j |H_j zeta|,

so N*(T) is the supremum over the unit sphere of

    J(zeta) = (<-b, zeta> - r |zeta|) / sum_j |H_j zeta|.

The maximizer gives the control u_j = m H_j zeta / |H_j zeta|, which
saturates every block (bang-bang) and puts the terminal state at -r zeta.
A point where both hold is certified optimal by weak duality, which is how
the solver decides it is done.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .errors import (
    ConvergenceError,
    DegenerateAdjointError,
    DomainError,
    InfeasibleError,
    UsageError,
)
from .spectral import reachable_projector
from .system import (
    TIME_ATOL,
    Condition,
    ControlSequence,
    ProblemConfig,
    active_count,
    evolve,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormOptions:
    starts: int = 8
    max_iter: int = 5000
    stall_window: int = 200
    stall_tol: float = 1e-11
    step0: float = 0.5
    newton_iter: int = 60
    # default 1e-8 * max(1, r)
    tol_feas: float | None = None
    warm_start: np.ndarray | None = field(default=None, compare=False)

    def feas_tol(self, r: float) -> float:
        return self.tol_feas if self.tol_feas is not None else 1e-8 * max(1.0, r)


@dataclass(frozen=True)
class NormProblem:
    config: ProblemConfig
    T: float
    active_count: int
    # H_j = G_j E_j for the active, non-null blocks, stacked (n_live, N, N)
    adjoint_maps: np.ndarray = field(repr=False)
    live: np.ndarray = field(repr=False)
    drift: np.ndarray = field(repr=False)

    @property
    def r(self) -> float:
        return self.config.r


@dataclass(frozen=True)
class NormSolution:
    T: float
    value: float
    dual_direction: np.ndarray
    controls: ControlSequence
    terminal: np.ndarray
    weak_duality_gap: float
    feasibility_residual: float
    iterations: int = 0


def build_problem(config: ProblemConfig, T: float, active: int | None = None) -> NormProblem:
    k = active_count(config, T) if active is None else int(active)
    if not 0 <= k <= len(config.schedule):
        raise UsageError(f"active count {k} outside 0..{len(config.schedule)}")
    lam = config.basis.eigenvalues
    maps, live = [], []
    for j in range(k):
        op = config.schedule.regions[j]
        if op.is_null:
            continue
        decay = np.exp(-lam * max(T - config.tau[j], 0.0))
        maps.append(op.gram * decay[None, :])
        live.append(j)
    n = config.modes
    adjoint = np.array(maps) if maps else np.zeros((0, n, n))
    drift = np.exp(-lam * T) * config.y0
    return NormProblem(config, float(T), k, adjoint, np.array(live, dtype=int), drift)


def _denominators(problem: NormProblem, Z: np.ndarray) -> np.ndarray:
    """|H_j zeta| for a batch of directions, shape (S, n_live)."""
    HZ = np.einsum("jmn,sn->sjm", problem.adjoint_maps, Z)
    return np.linalg.norm(HZ, axis=2)


def dual_value(zeta, problem: NormProblem) -> float:
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != problem.drift.shape:
        raise UsageError("dual direction has the wrong dimension")
    nz = float(np.linalg.norm(zeta))
    if nz == 0.0:
        raise UsageError("dual direction must be nonzero")
    den = float(_denominators(problem, zeta[None, :]).sum())
    if den == 0.0:
        return -math.inf
    return float((-problem.drift @ zeta - problem.r * nz) / den)


def _batch_value_grad(problem: NormProblem, Z: np.ndarray):
    HZ = np.einsum("jmn,sn->sjm", problem.adjoint_maps, Z)
    norms = np.linalg.norm(HZ, axis=2)
    den = norms.sum(axis=1)
    nz = np.linalg.norm(Z, axis=1)
    num = -Z @ problem.drift - problem.r * nz
    safe = np.where(norms > 0, norms, 1.0)
    unit = HZ / safe[:, :, None]
    grad_den = np.einsum("jmn,sjm->sn", problem.adjoint_maps, unit)
    grad_num = -problem.drift[None, :] - problem.r * Z / nz[:, None]
    ok = den > 0
    den_safe = np.where(ok, den, 1.0)
    value = np.where(ok, num / den_safe, -np.inf)
    grad = (grad_num * den_safe[:, None] - num[:, None] * grad_den) / den_safe[:, None] ** 2
    grad[~ok] = 0.0
    return value, grad


def recover_primal(zeta, m: float, problem: NormProblem) -> ControlSequence:
    """Bang-bang control u_j = m H_j zeta / |H_j zeta| on every active block.

    Blocks whose region operator is identically zero cannot act and get a
    zero control.
    """
    if m < 0:
        raise DomainError(f"control bound must be nonnegative, got {m}")
    config = problem.config
    u = np.zeros((len(config.schedule), config.modes))
    if m == 0:
        return ControlSequence(u, problem.active_count)
    zeta = np.asarray(zeta, dtype=float)
    for H, j in zip(problem.adjoint_maps, problem.live):
        v = H @ zeta
        nv = np.linalg.norm(v)
        if nv <= 1e-14 * max(np.linalg.norm(H), 1e-300) * np.linalg.norm(zeta):
            raise DegenerateAdjointError(
                f"adjoint direction vanishes on control region {j + 1}; increase mode_count"
            )
        u[j] = m * v / nv
    return ControlSequence(u, problem.active_count)


@dataclass(frozen=True)
class FeasibilityReport:
    residual: float
    max_block_norm: float
    terminal: np.ndarray

    @property
    def feasible(self) -> bool:
        return self.residual <= 0.0


def feasibility_check(config: ProblemConfig, controls, T: float) -> FeasibilityReport:
    seq = controls if isinstance(controls, ControlSequence) else ControlSequence(controls, active_count(config, T))
    terminal = evolve(config, seq, T)
    norms = np.linalg.norm(seq.controls, axis=1)
    return FeasibilityReport(
        float(np.linalg.norm(terminal) - config.r),
        float(norms.max()) if norms.size else 0.0,
        terminal,
    )


def _check_horizon(config: ProblemConfig, T: float):
    tau1, gamma = float(config.tau[0]), config.gamma
    if not math.isfinite(T) or T > gamma * (1 + 1e-12) + TIME_ATOL:
        raise DomainError(f"T = {T} exceeds gamma(y0) = {gamma}")
    if T < tau1 - TIME_ATOL:
        raise DomainError(f"T = {T} precedes the first impulse tau_1 = {tau1}")
    if config.condition is Condition.C1 and T <= tau1 + TIME_ATOL:
        raise DomainError(f"under (C1) T must exceed tau_1 = {tau1}, got {T}")


def _unreachable_gap(problem: NormProblem) -> float:
    """Distance from -b to everything the active controls can reach."""
    config = problem.config
    if problem.live.size == 0:
        return float(np.linalg.norm(problem.drift))
    cols = []
    lam = config.basis.eigenvalues
    for j in problem.live:
        proj = reachable_projector(config.schedule.regions[j])
        if np.allclose(proj, np.eye(config.modes), atol=1e-12):
            return 0.0
        decay = np.exp(-lam * max(problem.T - config.tau[j], 0.0))
        cols.append(decay[:, None] * proj)
    stacked = np.hstack(cols)
    U, s, _ = np.linalg.svd(stacked, full_matrices=False)
    basis = U[:, s > 1e-12 * s.max()] if s.size and s.max() > 0 else U[:, :0]
    b = problem.drift
    return float(np.linalg.norm(b - basis @ (basis.T @ b)))


def _start_directions(problem: NormProblem, count: int) -> np.ndarray:
    n = problem.drift.size
    b = problem.drift
    starts = [-b / np.linalg.norm(b)]
    for i in range(n):
        for sign in (1.0, -1.0):
            e = np.zeros(n)
            e[i] = sign
            starts.append(e)
    return np.array(starts[:count])


def _newton_polish(problem: NormProblem, zeta0: np.ndarray, iters: int):
    """Solve b + m sum_j H_j^T unit(H_j zeta) + r zeta = 0 with |zeta| = 1.

    Returns (zeta, m) or None when Newton does not settle on a root with m > 0.
    """
    H = problem.adjoint_maps
    b, r = problem.drift, problem.r
    n = b.size
    scale = max(float(np.linalg.norm(b)), r)

    def residual(z, m):
        v = H @ z
        nv = np.linalg.norm(v, axis=1)
        if np.any(nv == 0):
            return None, None, None
        unit = v / nv[:, None]
        push = np.einsum("jmn,jm->n", H, unit)
        F = np.concatenate([b + m * push + r * z, [0.5 * (z @ z - 1.0)]])
        return F, (unit, nv), push

    z = zeta0 / np.linalg.norm(zeta0)
    m = dual_value(z, problem)
    if not math.isfinite(m):
        return None
    F, aux, push = residual(z, m)
    if F is None:
        return None
    fnorm = np.linalg.norm(F)
    for _ in range(iters):
        if fnorm <= 1e-15 * scale:
            break
        unit, nv = aux
        curv = np.zeros((n, n))
        for Hj, uj, nj in zip(H, unit, nv):
            P = (np.eye(n) - np.outer(uj, uj)) / nj
            curv += Hj.T @ P @ Hj
        jac = np.zeros((n + 1, n + 1))
        jac[:n, :n] = m * curv + r * np.eye(n)
        jac[:n, n] = push
        jac[n, :n] = z
        try:
            step = np.linalg.lstsq(jac, -F, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        while t > 1e-8:
            z_new, m_new = z + t * step[:n], m + t * step[n]
            F_new, aux_new, push_new = residual(z_new, m_new)
            if F_new is not None and np.linalg.norm(F_new) < (1 - 1e-4 * t) * fnorm:
                break
            t *= 0.5
        else:
            break
        z, m, F, aux, push = z_new, m_new, F_new, aux_new, push_new
        fnorm = np.linalg.norm(F)
    if not (fnorm <= 1e-10 * scale and m > 0):
        return None
    return z / np.linalg.norm(z), m


def _quasi_newton(problem: NormProblem, zeta0: np.ndarray) -> np.ndarray:
    """BFGS refinement of J; handles the ill-conditioned directions where plain ascent crawls.

    J is homogeneous of degree zero, so it can be maximized over all of R^N.
    """

    def negative(z):
        value, grad = _batch_value_grad(problem, z[None, :])
        if not np.isfinite(value[0]):
            return 1e300, np.zeros_like(z)
        return -value[0], -grad[0]

    res = optimize.minimize(
        negative, zeta0, jac=True, method="BFGS", options={"gtol": 1e-14, "maxiter": 2000}
    )
    z = res.x if np.all(np.isfinite(res.x)) and np.any(res.x) else zeta0
    return z / np.linalg.norm(z)


def _zero_solution(problem: NormProblem) -> NormSolution:
    config = problem.config
    b = problem.drift
    controls = ControlSequence.zeros(len(config.schedule), config.modes, problem.active_count)
    return NormSolution(
        T=problem.T,
        value=0.0,
        dual_direction=-b / np.linalg.norm(b),
        controls=controls,
        terminal=b.copy(),
        weak_duality_gap=0.0,
        feasibility_residual=max(0.0, float(np.linalg.norm(b)) - config.r),
    )


def _certify(problem: NormProblem, zeta: np.ndarray, tol_feas: float, iterations: int):
    m = dual_value(zeta, problem)
    if not (math.isfinite(m) and m > 0):
        return None
    controls = recover_primal(zeta, m, problem)
    terminal = problem.drift + sum(
        H.T @ controls.controls[j] for H, j in zip(problem.adjoint_maps, problem.live)
    )
    residual = max(0.0, float(np.linalg.norm(terminal)) - problem.r)
    gap = max(0.0, controls.sup_norm - m)
    if residual > tol_feas or gap > 1e-9 * max(1.0, m):
        return None
    return NormSolution(problem.T, m, zeta, controls, terminal, gap, residual, iterations)


def _upper_bound(problem: NormProblem, zeta: np.ndarray) -> float:
    """Smallest m making the recovered control along ``zeta`` feasible (inf if none)."""
    try:
        unit = recover_primal(zeta, 1.0, problem)
    except DegenerateAdjointError:
        return math.inf
    push = sum(H.T @ unit.controls[j] for H, j in zip(problem.adjoint_maps, problem.live))

    def excess(m):
        return np.linalg.norm(problem.drift + m * push) - problem.r

    hi = 1.0
    while excess(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def solve_problem(problem: NormProblem, opts: NormOptions | None = None) -> NormSolution:
    """Solve the minimal-norm problem assembled by :func:`build_problem`."""
    opts = opts or NormOptions()
    b, r = problem.drift, problem.r
    tol_feas = opts.feas_tol(r)
    if np.linalg.norm(b) <= r * (1 + 1e-12):
        return _zero_solution(problem)
    if _unreachable_gap(problem) > r * (1 + 1e-12):
        raise InfeasibleError(
            f"target unreachable at T = {problem.T} with {problem.active_count} impulse(s)"
        )

    if opts.warm_start is not None:
        polished = _newton_polish(problem, np.asarray(opts.warm_start, dtype=float), opts.newton_iter)
        if polished is not None:
            sol = _certify(problem, polished[0], tol_feas, 0)
            if sol is not None:
                return sol

    Z = _start_directions(problem, opts.starts)
    values, _ = _batch_value_grad(problem, Z)
    best_Z, best_v = Z.copy(), values.copy()
    window_best = best_v.max()
    tried = []
    it = 0
    for it in range(1, opts.max_iter + 1):
        values, grad = _batch_value_grad(problem, Z)
        better = values > best_v
        best_v = np.where(better, values, best_v)
        best_Z[better] = Z[better]
        gnorm = np.linalg.norm(grad, axis=1)
        step = opts.step0 / math.sqrt(it)
        move = np.where(gnorm[:, None] > 0, grad / np.where(gnorm > 0, gnorm, 1.0)[:, None], 0.0)
        Z = Z + step * move
        Z /= np.linalg.norm(Z, axis=1)[:, None]
        if it % opts.stall_window == 0:
            # lowest index wins ties so the reduction is deterministic
            lead = int(np.argmax(best_v))
            for candidate in (best_Z[lead], None):
                if candidate is None:
                    candidate = _quasi_newton(problem, best_Z[lead])
                polished = _newton_polish(problem, candidate, opts.newton_iter)
                if polished is not None:
                    sol = _certify(problem, polished[0], tol_feas, it)
                    if sol is not None:
                        return sol
            tried.append(lead)
            stalled = best_v.max() - window_best < opts.stall_tol
            window_best = best_v.max()
            if stalled and len(tried) > 2:
                break

    for s in np.argsort(-best_v, kind="stable"):
        z = _quasi_newton(problem, best_Z[s])
        polished = _newton_polish(problem, z, opts.newton_iter)
        if polished is not None:
            sol = _certify(problem, polished[0], tol_feas, it)
            if sol is not None:
                return sol
        if dual_value(z, problem) > best_v[s]:
            best_v[s], best_Z[s] = dual_value(z, problem), z
    lead = int(np.argmax(best_v))
    z = best_Z[lead]
    den = _denominators(problem, z[None, :])[0]
    scales = np.linalg.norm(problem.adjoint_maps, axis=(1, 2))
    idle = np.flatnonzero(den <= 1e-6 * scales)
    if idle.size:
        j = int(problem.live[idle[0]])
        raise DegenerateAdjointError(
            f"best dual direction at T = {problem.T} is annihilated by control region {j + 1}; "
            "increase mode_count"
        )
    raise ConvergenceError(
        f"dual ascent did not certify an optimum at T = {problem.T}",
        lower=float(max(best_v.max(), 0.0)),
        upper=_upper_bound(problem, best_Z[lead]),
    )


def solve_norm(config: ProblemConfig, T: float, opts: NormOptions | None = None) -> NormSolution:
    """N*(T) with its bang-bang optimal control and duality certificates."""
    _check_horizon(config, T)
    return solve_problem(build_problem(config, T), opts)


def solve_norm_restricted(config: ProblemConfig, k: int, opts: NormOptions | None = None) -> float:
    """Minimal norm at tau_k using only u_1..u_{k-1}: the left limit of N* at tau_k.

    Returns ``inf`` when those controls cannot reach the target.
    """
    if not 2 <= k <= len(config.schedule):
        raise DomainError(f"restricted problem needs 2 <= k <= {len(config.schedule)}, got {k}")
    T = float(config.tau[k - 1])
    _check_horizon(config, T)
    try:
        return solve_problem(build_problem(config, T, active=k - 1), opts).value
    except InfeasibleError:
        return math.inf


def left_limit_extrapolated(
    config: ProblemConfig, k: int, eps=(1e-3, 1e-4, 1e-5), opts: NormOptions | None = None
) -> float:
    """Richardson-extrapolated N*(tau_k - eps) as eps -> 0 (cross-check only)."""
    T = float(config.tau[k - 1])
    eps = np.asarray(eps, dtype=float)
    vals = np.array([solve_norm(config, T - e, opts).value for e in eps])
    q = eps[0] / eps[1]
    if not np.allclose(eps[:-1] / eps[1:], q):
        raise UsageError("extrapolation needs a geometric eps sequence")
    table = vals
    for order in range(1, len(eps)):
        f = q**order
        table = (f * table[1:] - table[:-1]) / (f - 1)
    return float(table[-1])


def with_warm_start(opts: NormOptions | None, zeta) -> NormOptions:
    return replace(opts or NormOptions(), warm_start=None if zeta is None else np.array(zeta))
