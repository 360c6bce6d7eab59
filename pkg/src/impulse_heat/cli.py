"""Command-line front end.

Exit codes: 0 success, 1 usage or I/O error, 2 convergence or consistency
failure, 3 invalid config, 4 a verification check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .configio import example_config, load_config
from .errors import (
    ConfigurationError,
    ConsistencyError,
    ConvergenceError,
    DegenerateAdjointError,
    DomainError,
    InfeasibleError,
    OracleRefusal,
    UsageError,
)
from .mintime import minimal_time, plateau_table
from .norm import left_limit_extrapolated, solve_norm, solve_norm_restricted
from .oracle import DEFAULT_SEED, OracleGrid, brute_norm, brute_time, random_instance
from .pmp import TOL_ALIGN, bang_bang_check, dual_alignment, max_principle_residual

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2, 3, 4
REPRO_TOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(args):
    if not args.config:
        raise UsageError("--config is required")
    if not Path(args.config).is_file():
        raise UsageError(f"cannot read config {args.config}")
    config, opts = load_config(args.config, args.modes)
    if getattr(args, "tol", None) is not None and args.command in ("norm", "time", "profile"):
        opts = replace(opts, tol_feas=args.tol)
    return config, opts


def _g(x) -> str:
    return f"{float(x):.10g}"


def cmd_gamma(args):
    config, _ = _load(args)
    print(f"gamma     = {_g(config.gamma)}")
    print(f"condition = {config.condition}")
    print(f"k0        = {config.k0}")
    return EXIT_OK


def _impulse_at(config, T):
    hit = np.flatnonzero(np.abs(config.tau - T) <= 1e-9 * max(1.0, T))
    return int(hit[0]) + 1 if hit.size else None


def cmd_norm(args):
    config, opts = _load(args)
    T = args.T
    if args.exclude_last:
        k = _impulse_at(config, T)
        if k is None or k < 2:
            raise UsageError("--exclude-last needs T equal to an impulse instant tau_k with k >= 2")
        value = solve_norm_restricted(config, k, opts)
        print(f"N*(tau_{k}-) = {_g(value)}  (left limit, impulses 1..{k - 1})")
        return EXIT_OK
    try:
        sol = solve_norm(config, T, opts)
    except InfeasibleError as exc:
        print(f"N*(T) = inf  ({exc})")
        return EXIT_OK
    print(f"N*(T)       = {_g(sol.value)}")
    print(f"block norms = {' '.join(_g(v) for v in sol.controls.block_norms)}")
    print(f"duality gap = {sol.weak_duality_gap:.3e}")
    print(f"feasibility residual = {sol.feasibility_residual:.3e}")
    if args.dump_controls:
        _dump(args.dump_controls, {"T": T, "value": sol.value, "controls": sol.controls.controls.tolist()})
    return EXIT_OK


def _dump(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def _pmp_lines(config, ns, tol):
    if ns is None or ns.value <= 0:
        return True, ["PMP: not applicable (zero control)"]
    rep = max_principle_residual(config, ns.controls, ns.value, ns.T, tol, tol)
    align = dual_alignment(ns.dual_direction, ns.terminal)
    lines = list(rep.lines())
    lines.append(f"dual/terminal anti-alignment cos={align:.12f}")
    ok = rep.passed and align >= 1 - tol
    lines.append(f"PMP: {'PASS' if ok else 'FAIL'}")
    return ok, lines


def cmd_time(args):
    config, opts = _load(args)
    sol = minimal_time(config, args.M, opts)
    print(f"t*(M)  = {_g(sol.optimal_time)}")
    print(f"regime = {sol.regime}")
    print(f"N*(t*) = {_g(sol.minimal_norm_at_optimum)}")
    print(f"block norms = {' '.join(_g(v) for v in sol.controls.block_norms)}")
    _, lines = _pmp_lines(config, sol.norm_solution, args.tol or TOL_ALIGN)
    for line in lines:
        print(line)
    if args.dump_controls:
        _dump(
            args.dump_controls,
            {"M": args.M, "t_star": sol.optimal_time, "regime": str(sol.regime), "controls": sol.controls.controls.tolist()},
        )
    return EXIT_OK


def cmd_profile(args):
    from .profile import run_profile

    config, opts = _load(args)
    if not args.out:
        raise UsageError("--out is required")
    res = run_profile(config, args.out, opts, args.samples, args.samples)
    files = list(res.files)
    if not args.no_plots:
        try:
            from .plotting import render_profiles
        except ImportError as exc:
            print(f"warning: {exc}; skipping figures", file=sys.stderr)
        else:
            files += render_profiles(res, args.out)
    for f in files:
        print(f)
    return EXIT_OK


def _verify_config(args):
    config, opts = _load(args)
    tol = args.tol or TOL_ALIGN
    if (args.T is None) == (args.M is None):
        raise UsageError("verify with --config needs exactly one of --T or --M")
    if args.T is not None:
        ns = solve_norm(config, args.T, opts)
        m = ns.value
    else:
        sol = minimal_time(config, args.M, opts)
        ns, m = sol.norm_solution, sol.minimal_norm_at_optimum
    bb = bang_bang_check(ns.controls, m) if ns is not None else None
    ok_bb = bb is None or bb.passed
    print(f"bang-bang: {'PASS' if ok_bb else 'FAIL'}" + (f" norms={bb.norms.tolist()} m={_g(m)}" if bb else ""))
    ok_pmp, lines = _pmp_lines(config, ns, tol)
    for line in lines:
        print(line)
    return EXIT_OK if ok_bb and ok_pmp else EXIT_VERIFY


def _verify_seed(args):
    seed = DEFAULT_SEED if args.seed is None else args.seed
    config = random_instance(seed, modes=args.modes or 2)
    grid = OracleGrid(direction_resolution=math.pi / 720)
    t1, gamma = float(config.tau[0]), config.gamma
    T = t1 + 0.5 * (gamma - t1)
    if args.T is not None:
        T = args.T
    ns = solve_norm(config, T)
    nb = brute_norm(config, T, grid)
    M = args.M if args.M is not None else 0.5 * ns.value
    ts = minimal_time(config, M)
    tb = brute_time(config, M, grid)
    ok_n = nb.contains(ns.value, 1e-12)
    ok_t = tb.contains(ts.optimal_time, 1e-12)
    print(f"instance seed={seed} gamma={_g(gamma)} tau={[_g(t) for t in config.tau]}")
    print(f"N*({_g(T)}) = {_g(ns.value)}  oracle [{_g(nb.lower)}, {_g(nb.upper)}]  {'PASS' if ok_n else 'FAIL'}")
    print(f"t*({_g(M)}) = {_g(ts.optimal_time)}  oracle [{_g(tb.lower)}, {_g(tb.upper)}]  {'PASS' if ok_t else 'FAIL'}")
    return EXIT_OK if ok_n and ok_t else EXIT_VERIFY


def cmd_verify(args):
    return _verify_config(args) if args.config else _verify_seed(args)


def repro_rows(modes: int = 16, r: float = 1 / 6):
    """(name, computed, expected) for the worked example."""
    config = example_config(modes, r)
    k2 = 2
    tau2 = float(config.tau[1])
    table = plateau_table(config)
    e = table.entry(k2)
    rows = [
        ("gamma = ln 6", config.gamma, math.log(6)),
        ("N*(tau_2) = 1/18", solve_norm(config, tau2).value, 1 / 18),
        ("left limit at tau_2 = 1/6", solve_norm_restricted(config, k2), 1 / 6),
        ("left limit (extrapolated) = 1/6", left_limit_extrapolated(config, k2), 1 / 6),
        ("plateau m_inf = 1/18", e.m_inf, 1 / 18),
        ("plateau m_sup = 1/6", e.m_sup, 1 / 6),
        ("t*(0.1) = ln 4", minimal_time(config, 0.1, table=table).optimal_time, math.log(4)),
    ]
    return [(name, float(v), float(x)) for name, v, x in rows]


def cmd_repro(args):
    start = time.perf_counter()
    rows = repro_rows(args.modes or 16, 1 / 6 if args.r is None else args.r)
    tol = args.tol or REPRO_TOL
    ok = True
    print(f"{'check':<34} {'computed':>20} {'expected':>20} {'error':>10}  result")
    for name, v, x in rows:
        err = abs(v - x)
        passed = err <= tol
        ok &= passed
        print(f"{name:<34} {v:>20.15g} {x:>20.15g} {err:>10.2e}  {'PASS' if passed else 'FAIL'}")
    print(f"{'ALL PASS' if ok else 'FAILED'} (tol {tol:g}, {time.perf_counter() - start:.2f} s)")
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON problem file")
    common.add_argument("--modes", type=int, metavar="INT", help="override the number of eigenmodes")
    common.add_argument("--tol", type=float, metavar="FLOAT", help="feasibility (norm/time/profile) or check tolerance")
    common.add_argument("--seed", type=int, metavar="INT", help="seed for a random oracle instance (verify)")

    p = _Parser(prog="impulse-heat", description="Minimal-norm and minimal-time impulse control of the heat equation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("gamma", parents=[common], help="free-decay time, condition class and k0")
    s.set_defaults(func=cmd_gamma)
    s = sub.add_parser("norm", parents=[common], help="minimal norm N*(T)")
    s.add_argument("--T", type=float, required=True, metavar="FLOAT")
    s.add_argument("--exclude-last", action="store_true", help="left limit at an impulse instant")
    s.add_argument("--dump-controls", metavar="PATH")
    s.set_defaults(func=cmd_norm)
    s = sub.add_parser("time", parents=[common], help="minimal time t*(M)")
    s.add_argument("--M", type=float, required=True, metavar="FLOAT")
    s.add_argument("--dump-controls", metavar="PATH")
    s.set_defaults(func=cmd_time)
    s = sub.add_parser("profile", parents=[common], help="write curve CSVs (and figures) to --out")
    s.add_argument("--out", metavar="DIR")
    s.add_argument("--samples", type=int, default=400, metavar="INT")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=cmd_profile)
    s = sub.add_parser("verify", parents=[common], help="PMP/bang-bang checks, or an oracle comparison with --seed")
    s.add_argument("--T", type=float, metavar="FLOAT")
    s.add_argument("--M", type=float, metavar="FLOAT")
    s.set_defaults(func=cmd_verify)
    s = sub.add_parser("repro-remark35", parents=[common], help="reproduce the worked two-impulse example")
    s.add_argument("--r", type=float, metavar="FLOAT", help="target radius (default 1/6)")
    s.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.modes is not None and args.modes < 1:
        print("error: --modes must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, ConsistencyError, DegenerateAdjointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (UsageError, DomainError, OracleRefusal, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
