"""JSON problem files.

Schema::

    {
      "domain": {"kind": "interval", "lengths": [3.141592653589793]},
      "modes": 16,
      "y0": {"coefficients": [1.0]},
      "r": 0.16666666666666666,
      "impulses": [
        {"tau": "ln(2)", "region": {"lo": [0.0], "hi": ["pi"]}},
        {"tau": "ln(4)"}
      ],
      "solver": {"max_iter": 5000, "tol_feas": 1e-8}
    }

Numbers may also be given as short arithmetic strings over ``pi``, ``e``,
``ln``, ``log``, ``exp`` and ``sqrt``.  A missing region means the whole
domain.
"""

from __future__ import annotations

import ast
import json
import math
import operator
from pathlib import Path

from .errors import ConfigurationError
from .norm import NormOptions
from .spectral import DEFAULT_MODES, Domain, Region
from .system import ProblemConfig

_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"ln": math.log, "log": math.log, "exp": math.exp, "sqrt": math.sqrt}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def _number(value, what: str) -> float:
    if isinstance(value, bool):
        raise ConfigurationError(f"{what}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(_eval(ast.parse(value, mode="eval").body))
        except (SyntaxError, ValueError, ZeroDivisionError, KeyError) as exc:
            raise ConfigurationError(f"{what}: cannot evaluate {value!r} ({exc})") from None
    raise ConfigurationError(f"{what}: expected a number, got {value!r}")


def _eval(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name):
        return _NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and len(node.args) == 1:
        return _FUNCS[node.func.id](_eval(node.args[0]))
    raise ValueError("unsupported expression")


def _numbers(values, what):
    if not isinstance(values, list):
        values = [values]
    return [_number(v, f"{what}[{i}]") for i, v in enumerate(values)]


def config_from_dict(data: dict, modes: int | None = None):
    """Returns ``(ProblemConfig, NormOptions)``."""
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    try:
        dom = data["domain"]
        domain = Domain(dom["kind"], tuple(_numbers(dom["lengths"], "domain.lengths")))
        y0 = data["y0"]
        coeffs = _numbers(y0["coefficients"] if isinstance(y0, dict) else y0, "y0")
        r = _number(data["r"], "r")
        impulses = data["impulses"]
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"missing or malformed field: {exc}") from None
    if not isinstance(impulses, list) or not impulses:
        raise ConfigurationError("impulses must be a nonempty list")
    tau, boxes = [], []
    for i, imp in enumerate(impulses):
        if not isinstance(imp, dict) or "tau" not in imp:
            raise ConfigurationError(f"impulses[{i}] needs a 'tau'")
        tau.append(_number(imp["tau"], f"impulses[{i}].tau"))
        reg = imp.get("region")
        if reg is None:
            boxes.append(None)
        else:
            try:
                boxes.append(Region(tuple(_numbers(reg["lo"], "lo")), tuple(_numbers(reg["hi"], "hi"))))
            except (KeyError, TypeError) as exc:
                raise ConfigurationError(f"impulses[{i}].region malformed: {exc}") from None
    mode_count = modes if modes is not None else data.get("modes", DEFAULT_MODES)
    config = ProblemConfig.build(domain, tau, coeffs, r, boxes, mode_count=mode_count)
    solver = data.get("solver") or {}
    known = {f for f in NormOptions.__dataclass_fields__ if f != "warm_start"}
    unknown = set(solver) - known
    if unknown:
        raise ConfigurationError(f"unknown solver options: {sorted(unknown)}")
    return config, NormOptions(**solver)


def load_config(path, modes: int | None = None):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON in {path}: {exc}") from None
    return config_from_dict(data, modes)


def config_to_dict(config: ProblemConfig) -> dict:
    if config.boxes is None:
        raise ConfigurationError("config was built from raw operators and has no geometry")
    impulses = []
    for tau, box in zip(config.tau, config.boxes):
        item = {"tau": float(tau)}
        if box is not None:
            item["region"] = {"lo": list(box.lo), "hi": list(box.hi)}
        impulses.append(item)
    return {
        "domain": {"kind": config.basis.domain.kind, "lengths": list(config.basis.domain.lengths)},
        "modes": config.modes,
        "y0": {"coefficients": [float(v) for v in config.y0]},
        "r": config.r,
        "impulses": impulses,
    }


def example_config(modes: int = DEFAULT_MODES, r: float = 1 / 6) -> ProblemConfig:
    """y0 = e_1 on (0, pi), impulses at ln 2 and ln 4 acting on the whole domain."""
    return ProblemConfig.build(
        Domain.interval(math.pi), [math.log(2), math.log(4)], [1.0], r, mode_count=modes
    )
