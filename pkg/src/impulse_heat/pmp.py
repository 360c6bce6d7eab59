"""Checks of the maximum principle and the bang-bang structure of optimal controls."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAdjointError, UsageError
from .system import ControlSequence, ProblemConfig, active_count, evolve

TOL_ALIGN = 1e-8
TOL_MAG = 1e-8


@dataclass(frozen=True)
class AdjointTrace:
    T: float
    terminal_condition: np.ndarray
    # phi(tau_j) for j = 1..k, one row each
    values_at_impulses: np.ndarray


def adjoint_states(
    config: ProblemConfig, terminal_state, k: int, T: float | None = None
) -> AdjointTrace:
    """Backward heat solution with phi(T) = -terminal_state, sampled at tau_1..tau_k.

    ``T`` defaults to tau_k.  The adjoint is never time-stepped: each sample is
    the terminal condition times the exact diagonal decay factors.
    """
    if not 0 <= k <= len(config.schedule):
        raise UsageError(f"k = {k} outside 0..{len(config.schedule)}")
    if T is None:
        if k == 0:
            raise UsageError("terminal time required when no impulse is active")
        T = float(config.tau[k - 1])
    phi_T = -np.asarray(terminal_state, dtype=float)
    lam = config.basis.eigenvalues
    lags = T - config.tau[:k]
    if np.any(lags < -1e-12):
        raise UsageError("adjoint sampled after its terminal time")
    values = np.exp(-np.outer(np.maximum(lags, 0.0), lam)) * phi_T[None, :]
    return AdjointTrace(float(T), phi_T, values)


@dataclass(frozen=True)
class PmpReport:
    cosines: np.ndarray
    deviations: np.ndarray
    # <u_j, G_j phi(tau_j)> against its maximum M1 |G_j phi(tau_j)| over the ball
    pairings: np.ndarray
    maxima: np.ndarray
    tol_align: float
    tol_mag: float
    passed: bool

    def lines(self):
        for j, (c, d, p, m) in enumerate(zip(self.cosines, self.deviations, self.pairings, self.maxima), 1):
            yield f"block {j}: cos={c:.12f} |norm-M1|={d:.3e} pairing={p:.10g} max={m:.10g}"


def max_principle_residual(
    config: ProblemConfig,
    controls: ControlSequence,
    M1: float,
    T: float,
    tol_align: float = TOL_ALIGN,
    tol_mag: float = TOL_MAG,
) -> PmpReport:
    """Compare each control block with the maximizer of <u, chi phi(tau_j)> over |u| <= M1."""
    if not M1 > 0:
        raise UsageError(f"M1 must be positive, got {M1}")
    k = min(controls.active_count, active_count(config, T))
    terminal = evolve(config, controls, T)
    trace = adjoint_states(config, terminal, k, T)
    cosines, deviations, pairings, maxima = [], [], [], []
    for j in range(k):
        op = config.schedule.regions[j]
        if op.is_null:
            continue
        g = op.apply(trace.values_at_impulses[j])
        ng = float(np.linalg.norm(g))
        if ng <= 1e-14 * float(np.linalg.norm(trace.values_at_impulses[j])):
            raise DegenerateAdjointError(f"adjoint vanishes on control region {j + 1}")
        u = controls.controls[j]
        nu = float(np.linalg.norm(u))
        pairing = float(u @ g)
        cosines.append(pairing / (nu * ng) if nu > 0 else 0.0)
        deviations.append(abs(nu - M1))
        pairings.append(pairing)
        maxima.append(M1 * ng)
    cosines, deviations = np.array(cosines), np.array(deviations)
    passed = bool(
        np.all(cosines >= 1 - tol_align) and np.all(deviations <= tol_mag * max(1.0, M1))
    )
    return PmpReport(cosines, deviations, np.array(pairings), np.array(maxima), tol_align, tol_mag, passed)


@dataclass(frozen=True)
class BangBangReport:
    passed: bool
    norms: np.ndarray
    m: float


def bang_bang_check(controls: ControlSequence, m: float, tol: float = 1e-9) -> BangBangReport:
    """Every active block norm equals ``m`` within ``tol * max(1, m)``."""
    if m < 0:
        raise UsageError(f"m must be nonnegative, got {m}")
    norms = controls.block_norms
    passed = bool(np.all(np.abs(norms - m) <= tol * max(1.0, m)))
    return BangBangReport(passed, norms, float(m))


def dual_alignment(dual_direction, terminal) -> float:
    """Cosine between the dual direction and minus the terminal state."""
    z = np.asarray(dual_direction, dtype=float)
    y = -np.asarray(terminal, dtype=float)
    nz, ny = np.linalg.norm(z), np.linalg.norm(y)
    if nz == 0 or ny == 0:
        return 0.0
    return float(z @ y / (nz * ny))
