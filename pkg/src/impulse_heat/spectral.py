"""Dirichlet eigenbasis of the Laplacian on intervals and rectangles.

States are plain coefficient arrays against the orthonormal eigenfunctions
``sqrt(2/L) sin(n pi x / L)`` (tensor products on rectangles), so the heat
semigroup is diagonal and every region operator has a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, UsageError

DEFAULT_MODES = 16
# Gram eigenvalues below this fraction of the largest are treated as exact zeros
RANK_TOL = 1e-12


@dataclass(frozen=True)
class Domain:
    """``kind`` is ``"interval"`` (0, L) or ``"rectangle"`` (0, L1) x (0, L2)."""

    kind: str
    lengths: tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        object.__setattr__(self, "lengths", lengths)
        expected = {"interval": 1, "rectangle": 2}.get(self.kind)
        if expected is None:
            raise ConfigurationError(f"unknown domain kind {self.kind!r}")
        if len(lengths) != expected:
            raise ConfigurationError(
                f"{self.kind} needs {expected} side length(s), got {len(lengths)}"
            )
        if not all(np.isfinite(v) and v > 0 for v in lengths):
            raise ConfigurationError(f"side lengths must be positive, got {lengths}")

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @classmethod
    def interval(cls, length: float = np.pi) -> "Domain":
        return cls("interval", (length,))

    @classmethod
    def rectangle(cls, l1: float = np.pi, l2: float = np.pi) -> "Domain":
        return cls("rectangle", (l1, l2))


@dataclass(frozen=True)
class Region:
    """Axis-aligned sub-box ``[lo_i, hi_i]`` of the domain.

    A zero-width box is allowed and acts as a no-op control region.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in np.atleast_1d(self.lo)))
        object.__setattr__(self, "hi", tuple(float(v) for v in np.atleast_1d(self.hi)))
        if len(self.lo) != len(self.hi):
            raise ConfigurationError("region lo/hi dimension mismatch")

    @classmethod
    def full(cls, domain: Domain) -> "Region":
        return cls(tuple(0.0 for _ in domain.lengths), domain.lengths)

    def check_inside(self, domain: Domain):
        if len(self.lo) != domain.dim:
            raise ConfigurationError(
                f"region has dimension {len(self.lo)}, domain has {domain.dim}"
            )
        for lo, hi, length in zip(self.lo, self.hi, domain.lengths):
            if not (0.0 <= lo <= hi <= length):
                raise ConfigurationError(
                    f"region [{lo}, {hi}] is not contained in (0, {length})"
                )


@dataclass(frozen=True)
class Eigenbasis:
    domain: Domain
    mode_count: int
    eigenvalues: np.ndarray
    # one row of (1-based) sine indices per mode, one column per axis
    indices: np.ndarray

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    def unit(self, n: int) -> np.ndarray:
        """Coefficients of the n-th eigenfunction (1-based)."""
        e = np.zeros(self.mode_count)
        e[n - 1] = 1.0
        return e


def build_basis(domain: Domain, mode_count: int = DEFAULT_MODES) -> Eigenbasis:
    if int(mode_count) != mode_count or mode_count < 1:
        raise ConfigurationError(f"mode_count must be a positive integer, got {mode_count}")
    mode_count = int(mode_count)
    if domain.kind == "interval":
        (length,) = domain.lengths
        n = np.arange(1, mode_count + 1)
        eigenvalues = (n * np.pi / length) ** 2
        indices = n[:, None]
    else:
        l1, l2 = domain.lengths
        # the first N eigenvalues never need an index above N on either axis
        m, n = np.meshgrid(np.arange(1, mode_count + 1), np.arange(1, mode_count + 1), indexing="ij")
        m, n = m.ravel(), n.ravel()
        lam = (m * np.pi / l1) ** 2 + (n * np.pi / l2) ** 2
        # rounding makes float ties (e.g. (1,2) vs (2,1) on a square) compare equal
        key = np.round(lam, decimals=10 - int(np.floor(np.log10(lam.max()))))
        order = np.lexsort((n, m, key))[:mode_count]
        eigenvalues = lam[order]
        indices = np.stack([m[order], n[order]], axis=1)
    return Eigenbasis(domain, mode_count, np.asarray(eigenvalues, dtype=float), indices)


def check_state(basis: Eigenbasis, state) -> np.ndarray:
    w = np.asarray(state, dtype=float)
    if w.shape != (basis.mode_count,):
        raise UsageError(f"state has shape {w.shape}, basis has {basis.mode_count} modes")
    if not np.all(np.isfinite(w)):
        raise UsageError("state has non-finite coefficients")
    return w


def decay_factors(basis: Eigenbasis, t: float) -> np.ndarray:
    if t < 0:
        raise DomainError(f"semigroup time must be nonnegative, got {t}")
    return np.exp(-basis.eigenvalues * t)


def semigroup_apply(basis: Eigenbasis, t: float, state) -> np.ndarray:
    """Free heat evolution over time ``t``: coefficient n is damped by exp(-lambda_n t)."""
    return decay_factors(basis, t) * check_state(basis, state)


def _sine_gram_1d(length: float, a: float, b: float, idx: np.ndarray) -> np.ndarray:
    """(2/L) * integral_a^b sin(k_m x) sin(k_n x) dx via product-to-sum antiderivatives."""
    k = idx * np.pi / length
    km, kn = k[:, None], k[None, :]
    diff = km - kn
    total = km + kn
    same = np.isclose(diff, 0.0)
    safe = np.where(same, 1.0, diff)

    def antiderivative(x):
        cross = np.where(same, x, np.sin(diff * x) / safe)
        return 0.5 * (cross - np.sin(total * x) / total)

    return (2.0 / length) * (antiderivative(b) - antiderivative(a))


@dataclass(frozen=True)
class RegionOperator:
    """Galerkin matrix of multiplication by the indicator of ``region``.

    ``gram[m, n]`` is the integral over the region of e_m * e_n.
    """

    region: Region | None
    gram: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.asarray(self.gram, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ConfigurationError("gram must be a square matrix")
        if not np.allclose(g, g.T, atol=1e-12):
            raise ConfigurationError("gram must be symmetric")
        object.__setattr__(self, "gram", 0.5 * (g + g.T))

    @property
    def size(self) -> int:
        return self.gram.shape[0]

    @property
    def is_null(self) -> bool:
        return not np.any(self.gram)

    def apply(self, w) -> np.ndarray:
        return self.gram @ w


def region_gram(basis: Eigenbasis, region: Region) -> RegionOperator:
    region.check_inside(basis.domain)
    gram = np.ones((basis.mode_count, basis.mode_count))
    for axis, length in enumerate(basis.domain.lengths):
        gram = gram * _sine_gram_1d(length, region.lo[axis], region.hi[axis], basis.indices[:, axis])
    return RegionOperator(region, _clean_spectrum(gram))


def _clean_spectrum(gram: np.ndarray) -> np.ndarray:
    """Zero out numerically null directions so reachability is well defined."""
    gram = 0.5 * (gram + gram.T)
    mu, vecs = np.linalg.eigh(gram)
    cutoff = RANK_TOL * max(mu.max(initial=0.0), 0.0)
    small = mu <= cutoff
    if not small.any() or small.all():
        return np.zeros_like(gram) if small.all() else gram
    return (vecs[:, ~small] * mu[~small]) @ vecs[:, ~small].T


def reachable_projector(op: RegionOperator) -> np.ndarray:
    """Orthogonal projector onto the range of the Gram matrix."""
    mu, vecs = np.linalg.eigh(op.gram)
    keep = mu > RANK_TOL * max(mu.max(initial=0.0), 0.0)
    return vecs[:, keep] @ vecs[:, keep].T


def _check_dims(op: RegionOperator, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (op.size,):
        raise UsageError(f"vector of shape {w.shape} does not match {op.size}-mode region operator")
    return w


def restricted_norm(op: RegionOperator, w) -> float:
    """L2 norm of the indicator times ``w``, i.e. sqrt(w^T G w)."""
    w = _check_dims(op, w)
    return float(np.sqrt(max(w @ op.gram @ w, 0.0)))


def effect_norm(op: RegionOperator, w) -> float:
    """Norm of the truncated image ``G w``.

    This is the support function of ``{G u : |u| <= 1}`` and therefore the
    quantity that enters the finite-dimensional dual and the maximum
    condition. It coincides with :func:`restricted_norm` whenever G is an
    orthogonal projector (full-domain regions, and the continuum limit).
    """
    w = _check_dims(op, w)
    return float(np.linalg.norm(op.gram @ w))
