"""Sweeps of N*(.) and t*(.) and their CSV files.

The curve files are the tabulated form of the two value functions: N* on
(tau_1, gamma] with extra samples right around each impulse instant, and t*
on [0, 1.5 m_sup(2)].  Samples are computed in abscissa order with warm
starts, so the same config and grid always produce the same bytes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, InfeasibleError
from .mintime import PlateauTable, minimal_time, plateau_table
from .norm import NormOptions, solve_norm, with_warm_start
from .system import TIME_ATOL, ProblemConfig, active_count

NORM_SAMPLES = 400
TIME_SAMPLES = 400
JUMP_OFFSET = 1e-3
# relative slack for the monotonicity checks on computed values
MONOTONE_TOL = 1e-9

NORM_FILE = "norm_curve.csv"
TIME_FILE = "time_curve.csv"
PLATEAU_FILE = "plateaus.csv"
NORM_HEADER = ("T", "N_star", "regime")
TIME_HEADER = ("M", "t_star", "regime")
PLATEAU_HEADER = ("k", "tau_k", "m_inf", "m_sup")


@dataclass(frozen=True)
class CurveSample:
    x: float
    value: float
    regime: str


@dataclass(frozen=True)
class Discontinuity:
    k: int
    tau: float
    left_limit: float
    value: float


@dataclass
class CurveProfile:
    samples: list[CurveSample]
    discontinuities: list[Discontinuity] = field(default_factory=list)
    # (k, tau_k, m_inf, m_sup)
    plateaus: list[tuple[int, float, float, float]] = field(default_factory=list)

    @property
    def x(self) -> np.ndarray:
        return np.array([s.x for s in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.samples])

    def check(self):
        """Abscissae strictly increasing, values non-increasing."""
        check_monotone([s.x for s in self.samples], [s.value for s in self.samples])


def check_monotone(xs, vs, what: str = "curve"):
    xs, vs = np.asarray(xs, dtype=float), np.asarray(vs, dtype=float)
    if np.any(np.diff(xs) <= 0):
        i = int(np.argmax(np.diff(xs) <= 0))
        raise ConsistencyError(f"{what}: abscissae not increasing at row {i + 1} ({xs[i]}, {xs[i + 1]})")
    finite = np.isfinite(vs)
    if np.any(finite[:-1] & ~finite[1:]):
        raise ConsistencyError(f"{what}: infinite value after a finite one")
    both = np.flatnonzero(finite[:-1] & finite[1:])
    a, b = vs[both], vs[both + 1]
    rise = b - a - MONOTONE_TOL * np.maximum(1.0, np.abs(a))
    if np.any(rise > 0):
        i = int(both[np.argmax(rise > 0)])
        raise ConsistencyError(f"{what}: value increases at row {i + 1} ({vs[i]} -> {vs[i + 1]})")


def norm_grid(config: ProblemConfig, samples: int = NORM_SAMPLES, offset: float = JUMP_OFFSET) -> np.ndarray:
    t1, gamma = float(config.tau[0]), config.gamma
    grid = [t1 + (gamma - t1) * np.arange(1, samples + 1) / samples]
    for tau in config.tau[1 : config.k0]:
        grid.append([tau - offset, tau, tau + offset])
    pts = np.concatenate([np.ravel(g) for g in grid])
    pts = pts[(pts > t1 + TIME_ATOL) & (pts <= gamma)]
    pts = np.unique(pts)
    # snap near-duplicates onto impulse instants so tags stay exact
    keep = np.concatenate([[True], np.diff(pts) > 4 * TIME_ATOL])
    return pts[keep]


def _impulse_index(config, T):
    hit = np.flatnonzero(np.abs(config.tau - T) <= TIME_ATOL)
    return int(hit[0]) + 1 if hit.size else None


def norm_profile(
    config: ProblemConfig,
    opts: NormOptions | None = None,
    samples: int = NORM_SAMPLES,
    table: PlateauTable | None = None,
) -> CurveProfile:
    table = table or plateau_table(config, opts)
    out, zeta = [], None
    for T in norm_grid(config, samples):
        T = float(T)
        k = _impulse_index(config, T)
        if abs(T - config.gamma) <= TIME_ATOL * max(1.0, T):
            regime = "FreeDecay"
        elif k is not None:
            regime = f"Impulse({k})"
        else:
            regime = f"Interior({active_count(config, T)})"
        try:
            sol = solve_norm(config, T, with_warm_start(opts, zeta))
            value, zeta = float(sol.value), sol.dual_direction
        except InfeasibleError:
            value = math.inf
        out.append(CurveSample(T, value, regime))
    jumps = [Discontinuity(e.k, e.tau, float(e.m_sup), float(e.m_inf)) for e in table.entries]
    plateaus = [(e.k, e.tau, float(e.m_inf), float(e.m_sup)) for e in table.entries]
    profile = CurveProfile(out, jumps, plateaus)
    profile.check()
    return profile


def time_range(config: ProblemConfig, table: PlateauTable, opts: NormOptions | None = None) -> float:
    """Upper end of the M sweep: 1.5 m_sup(2), with fallbacks when there is no second impulse."""
    if table.entries and math.isfinite(table.entries[0].m_sup):
        return 1.5 * float(table.entries[0].m_sup)
    if table.saturation is not None:
        return 1.5 * float(table.saturation)
    t1 = float(config.tau[0])
    T = t1 + 0.05 * (config.gamma - t1)
    try:
        return 1.5 * float(solve_norm(config, T, opts).value)
    except InfeasibleError:
        return 1.5 * float(np.linalg.norm(config.y0))


def time_profile(
    config: ProblemConfig,
    opts: NormOptions | None = None,
    samples: int = TIME_SAMPLES,
    table: PlateauTable | None = None,
) -> CurveProfile:
    table = table or plateau_table(config, opts)
    top = time_range(config, table, opts)
    out = []
    for M in top * np.arange(samples) / (samples - 1):
        sol = minimal_time(config, float(M), opts, table)
        out.append(CurveSample(float(M), float(sol.optimal_time), str(sol.regime)))
    plateaus = [(e.k, e.tau, float(e.m_inf), float(e.m_sup)) for e in table.entries]
    profile = CurveProfile(out, [], plateaus)
    profile.check()
    return profile


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _write(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def write_curve(path, profile: CurveProfile, header):
    _write(Path(path), header, [(s.x, s.value, s.regime) for s in profile.samples])


def write_plateaus(path, table: PlateauTable):
    _write(Path(path), PLATEAU_HEADER, [(e.k, e.tau, e.m_inf, e.m_sup) for e in table.entries])


def read_csv(path, header):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != tuple(header):
        raise ConsistencyError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def validate_outputs(out_dir):
    """Re-read the three files and check their schemas and monotonicity."""
    out_dir = Path(out_dir)
    for name, header in ((NORM_FILE, NORM_HEADER), (TIME_FILE, TIME_HEADER)):
        rows = read_csv(out_dir / name, header)
        check_monotone([float(r[0]) for r in rows], [float(r[1]) for r in rows], name)
    rows = read_csv(out_dir / PLATEAU_FILE, PLATEAU_HEADER)
    for r in rows:
        k, _, m_inf, m_sup = int(r[0]), float(r[1]), float(r[2]), float(r[3])
        if not m_inf <= m_sup * (1 + MONOTONE_TOL) + MONOTONE_TOL:
            raise ConsistencyError(f"{PLATEAU_FILE}: plateau {k} has m_inf > m_sup")


@dataclass
class ProfileResult:
    table: PlateauTable
    norm: CurveProfile
    time: CurveProfile
    files: list[Path]


def run_profile(
    config: ProblemConfig,
    out_dir,
    opts: NormOptions | None = None,
    norm_samples: int = NORM_SAMPLES,
    time_samples: int = TIME_SAMPLES,
) -> ProfileResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = plateau_table(config, opts)
    norm = norm_profile(config, opts, norm_samples, table)
    time = time_profile(config, opts, time_samples, table)
    files = [out_dir / NORM_FILE, out_dir / TIME_FILE, out_dir / PLATEAU_FILE]
    write_curve(files[0], norm, NORM_HEADER)
    write_curve(files[1], time, TIME_HEADER)
    write_plateaus(files[2], table)
    validate_outputs(out_dir)
    return ProfileResult(table, norm, time, files)
