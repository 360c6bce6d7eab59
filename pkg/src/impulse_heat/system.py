"""Impulse-controlled heat dynamics: schedules, configs, evolution, free decay."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateProblemError,
    DomainError,
    TrivialProblemError,
    UsageError,
)
from .spectral import (
    Eigenbasis,
    Region,
    RegionOperator,
    build_basis,
    check_state,
    decay_factors,
    reachable_projector,
    region_gram,
)

# instants closer than this are identified (T == tau_k tests)
TIME_ATOL = 1e-12


class Condition(enum.Enum):
    """Whether the first impulse alone can reach the target ball."""

    C1 = "C1"  # it cannot
    C2 = "C2"  # it can

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ImpulseSchedule:
    instants: np.ndarray
    regions: tuple[RegionOperator, ...]

    def __post_init__(self):
        tau = np.asarray(self.instants, dtype=float).ravel()
        object.__setattr__(self, "instants", tau)
        object.__setattr__(self, "regions", tuple(self.regions))
        if tau.size == 0:
            raise ConfigurationError("schedule needs at least one impulse instant")
        if len(self.regions) != tau.size:
            raise ConfigurationError(
                f"{tau.size} instants but {len(self.regions)} control regions"
            )
        if not np.all(np.isfinite(tau)) or tau[0] <= 0:
            raise ConfigurationError("impulse instants must be finite and positive")
        if np.any(np.diff(tau) <= 0):
            raise ConfigurationError("impulse instants must be strictly increasing")

    def __len__(self):
        return self.instants.size

    @classmethod
    def from_boxes(cls, basis: Eigenbasis, instants, boxes) -> "ImpulseSchedule":
        """``boxes`` holds one :class:`Region` (or None for the whole domain) per instant."""
        ops = []
        for box in boxes:
            ops.append(region_gram(basis, box if box is not None else Region.full(basis.domain)))
        return cls(instants, tuple(ops))


@dataclass(frozen=True)
class ControlSequence:
    """Coefficient vectors u_1..u_K, one row per impulse; rows past ``active_count`` are zero."""

    controls: np.ndarray
    active_count: int

    def __post_init__(self):
        u = np.array(self.controls, dtype=float)
        if u.ndim != 2:
            raise UsageError("controls must be a (K, modes) array")
        if not 0 <= self.active_count <= u.shape[0]:
            raise UsageError(f"active_count {self.active_count} outside 0..{u.shape[0]}")
        if np.any(u[self.active_count:]):
            raise UsageError("controls beyond the active prefix must be exactly zero")
        u.setflags(write=False)
        object.__setattr__(self, "controls", u)

    @classmethod
    def zeros(cls, count: int, modes: int, active_count: int = 0) -> "ControlSequence":
        return cls(np.zeros((count, modes)), active_count)

    @property
    def block_norms(self) -> np.ndarray:
        return np.linalg.norm(self.controls[: self.active_count], axis=1)

    @property
    def sup_norm(self) -> float:
        norms = self.block_norms
        return float(norms.max()) if norms.size else 0.0


@dataclass(frozen=True)
class ProblemConfig:
    basis: Eigenbasis
    schedule: ImpulseSchedule
    y0: np.ndarray
    r: float
    # raw region boxes, kept so the config can be rebuilt at another mode count
    boxes: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        y0 = check_state(self.basis, self.y0)
        object.__setattr__(self, "y0", y0)
        if not (math.isfinite(self.r) and self.r > 0):
            raise ConfigurationError(f"target radius must be positive, got {self.r}")
        for op in self.schedule.regions:
            if op.size != self.basis.mode_count:
                raise ConfigurationError("region operator size does not match the basis")
        if np.linalg.norm(y0) <= self.r:
            raise DegenerateProblemError("degenerate: initial state already in target")
        if self.gamma <= self.tau[0]:
            raise TrivialProblemError("trivial problem: gamma ≤ tau_1")

    @classmethod
    def build(cls, domain, instants, y0, r, boxes=None, mode_count=None) -> "ProblemConfig":
        """Assemble a config from geometry; ``y0`` may list fewer coefficients than modes."""
        y0 = np.asarray(y0, dtype=float).ravel()
        mode_count = int(mode_count if mode_count is not None else max(len(y0), 1))
        if len(y0) > mode_count:
            if np.any(y0[mode_count:]):
                raise ConfigurationError(
                    f"y0 has {len(y0)} nonzero coefficients but only {mode_count} modes"
                )
            y0 = y0[:mode_count]
        basis = build_basis(domain, mode_count)
        coeffs = np.zeros(mode_count)
        coeffs[: len(y0)] = y0
        instants = np.asarray(instants, dtype=float).ravel()
        boxes = tuple(boxes) if boxes is not None else (None,) * instants.size
        schedule = ImpulseSchedule.from_boxes(basis, instants, boxes)
        return cls(basis, schedule, coeffs, float(r), boxes)

    def with_modes(self, mode_count: int) -> "ProblemConfig":
        if self.boxes is None:
            raise ConfigurationError("config was built from raw operators; cannot change modes")
        return ProblemConfig.build(
            self.basis.domain, self.tau, self.y0, self.r, self.boxes, mode_count
        )

    @property
    def tau(self) -> np.ndarray:
        return self.schedule.instants

    @property
    def modes(self) -> int:
        return self.basis.mode_count

    @cached_property
    def gamma(self) -> float:
        return _free_decay_time(self.basis, self.y0, self.r, self.tau[0])

    @cached_property
    def k0(self) -> int:
        """Number of impulse instants in (0, gamma]."""
        return active_count(self, self.gamma)

    @cached_property
    def condition(self) -> "Condition":
        return classify_condition(self)


def active_count(config: ProblemConfig, t: float) -> int:
    return int(np.searchsorted(config.tau, t + TIME_ATOL, side="right"))


def evolve(config: ProblemConfig, controls, t: float, include_impulse_at_t: bool = True) -> np.ndarray:
    """State y(t) (or y(t-) when the impulse exactly at t is excluded)."""
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    u = controls.controls if isinstance(controls, ControlSequence) else np.asarray(controls, dtype=float)
    if u.ndim != 2 or u.shape[1] != config.modes or u.shape[0] > len(config.schedule):
        raise UsageError(f"controls of shape {u.shape} do not fit the configuration")
    state = decay_factors(config.basis, t) * config.y0
    for j in range(min(u.shape[0], len(config.schedule))):
        tau = config.tau[j]
        if tau > t + TIME_ATOL:
            break
        if abs(tau - t) <= TIME_ATOL and not include_impulse_at_t:
            break
        state = state + decay_factors(config.basis, max(t - tau, 0.0)) * config.schedule.regions[j].apply(u[j])
    return state


def _free_decay_time(basis: Eigenbasis, y0: np.ndarray, r: float, tau1: float) -> float:
    norm0 = float(np.linalg.norm(y0))
    if norm0 <= r:
        raise DegenerateProblemError("degenerate: initial state already in target")
    lam = basis.eigenvalues
    a2 = y0 * y0

    def excess(t):
        return float(np.sum(a2 * np.exp(-2.0 * lam * t))) - r * r

    lo = 0.0
    hi = tau1 + math.log((2.0 * r + norm0) / r) / basis.lambda1
    while excess(hi) > 0:  # only reachable for a nonpositive tau1 guess
        hi *= 2.0
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def free_decay_time(config: ProblemConfig) -> float:
    """First time the uncontrolled state enters the target ball."""
    return config.gamma


def free_decay_time_of(basis: Eigenbasis, y0, r: float) -> float:
    """Same as :func:`free_decay_time` for raw data that need not form a valid config."""
    return _free_decay_time(basis, check_state(basis, y0), float(r), 0.0)


def first_impulse_gap(config: ProblemConfig) -> float:
    """Distance from the free state at tau_1 to what the first control can reach.

    The infimum over u_1 of |e^{Delta tau_1} y0 + G_1 u_1| is the norm of the
    component outside the range of G_1.
    """
    w = decay_factors(config.basis, config.tau[0]) * config.y0
    proj = reachable_projector(config.schedule.regions[0])
    return float(np.linalg.norm(w - proj @ w))


def classify_condition(config: ProblemConfig) -> Condition:
    return Condition.C1 if first_impulse_gap(config) > config.r else Condition.C2
