"""Command-line front end.

    alphawidth [--format csv|json] [--output PATH] [--timing] COMMAND ...

Commands: ``sample``, ``transform``, ``meanwidth``, ``verify KIND`` with KIND
in {bbl, urysohn, poincare, gaussian-poincare, variation}, and ``sweep
CONFIG.json``.  Every command emits one record per (function, parameter)
pair.  Exit status is 0 when every record passes, 1 on a failed check or a
numerical error, 2 on a usage or config error.  ``ALPHAWIDTH_WORKERS`` sets
the number of sweep worker processes (default 1).
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import jsonschema
import numpy as np

from . import lft, zoo
from .alphacore import AlphaFn, AlphaParam, support_function
from .extgrid import CONVEX, MASS, GridSpec, integrate, sample
from .inequalities import (check_bbl, check_gaussian_poincare, check_poincare, check_urysohn,
                           check_variation_formulas, poincare_grid, sample_psi, variation_grid)
from .meanwidth import DEFAULT_SCHEDULE, mean_width_limit, mean_width_repr, width_grids

COLUMNS = ("name", "n", "alpha", "beta", "kappa", "lhs", "rhs", "slack", "tolerance", "pass",
           "grid_m", "runtime_ms")
WORKERS_ENV = "ALPHAWIDTH_WORKERS"
CHECKS = ("bbl", "urysohn", "poincare", "gaussian-poincare", "variation")
COMMANDS = ("sample", "transform", "meanwidth") + CHECKS

_LIST_OF = lambda item: {"oneOf": [item, {"type": "array", "items": item, "minItems": 1}]}
_BETA = {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"enum": ["inf", "Infinity"]}]}

SWEEP_SCHEMA = {
    "type": "object",
    "required": ["command"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "n": _LIST_OF({"enum": [1, 2]}),
        "beta": _LIST_OF(_BETA),
        "alpha": _LIST_OF({"type": "number", "maximum": 0}),
        "fn": _LIST_OF({"type": "string"}),
        "fn2": _LIST_OF({"type": "string"}),
        "lambda": _LIST_OF({"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}),
        "kappa": {"type": "number"},
        "psi": _LIST_OF({"type": "string"}),
        "schedule": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
        "steps": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "grid": {
            "type": "object", "additionalProperties": False,
            "properties": {"lo": {"type": "number"}, "hi": {"type": "number"},
                           "m": {"type": "integer", "minimum": 3}},
        },
        "random": {
            "type": "object", "additionalProperties": False, "required": ["count"],
            "properties": {"count": {"type": "integer", "minimum": 1}, "seed": {"type": "integer"}},
        },
        "format": {"enum": ["csv", "json"]},
        "output": {"type": "string"},
    },
}

# sweep keys that expand into the cross product, in iteration order
_AXES = ("n", "beta", "alpha", "fn", "fn2", "lambda", "psi")


def _param(task: dict) -> AlphaParam:
    if task.get("alpha") is not None:
        return AlphaParam(float(task["alpha"]))
    return AlphaParam.from_beta(float(task.get("beta", math.inf)))


def _grid(task: dict, n: int) -> GridSpec:
    g = task.get("grid") or {}
    return GridSpec.box(g.get("lo", -8.0), g.get("hi", 8.0), g.get("m", 4097 if n == 1 else 65), dim=n)


def _descriptor(task: dict, key: str, param: AlphaParam, n: int, rng):
    text = task.get(key)
    if text is None or text == "random":
        if rng is None:
            raise ValueError(f"--{key} is required")
        return zoo.random_member(rng, param.beta, n)
    return zoo.parse(text, param.beta, n)


def _kappa_or_none(param: AlphaParam, n: int):
    try:
        return param.kappa(n)
    except ValueError:
        return None


def _record(name, n, param, kappa=None, lhs=None, rhs=None, tolerance=None, passed=True, grid_m=None,
            **diagnostics) -> dict:
    slack = None if lhs is None or rhs is None else lhs - rhs
    return {"name": name, "n": n, "alpha": param.alpha if param else None,
            "beta": param.beta if param else None, "kappa": kappa, "lhs": lhs, "rhs": rhs,
            "slack": slack, "tolerance": tolerance, "pass": bool(passed),
            "grid_m": grid_m, "runtime_ms": None, "diagnostics": diagnostics}


def _from_report(name, n, param, report) -> dict:
    diag = dict(report.diagnostics)
    kappa = diag.pop("kappa", _kappa_or_none(param, n) if param else None)
    grid_m = diag.pop("grid_m", None)
    rec = _record(name, n, param, kappa, report.lhs, report.rhs, report.tolerance, report.passed,
                  grid_m, **diag)
    rec["slack"] = report.slack
    return rec


def run_task(task: dict) -> dict:
    """Execute one record's worth of work; errors become failing records."""
    start = time.perf_counter()
    command = task["command"]
    n = int(task.get("n", 1))
    name = task.get("label") or command
    param = None
    try:
        rng = None
        if "random" in task:
            rng = np.random.default_rng([task["random"]["seed"], task["random"]["index"]])
        if command in ("poincare", "gaussian-poincare", "variation"):
            rec = _run_psi_check(task, command, n, name)
        else:
            param = _param(task)
            rec = _run_alpha(task, command, n, name, param, rng)
    except (ValueError, ArithmeticError) as exc:
        rec = _record(name, n, param, _kappa_or_none(param, n) if param else None, passed=False,
                      error=f"{type(exc).__name__}: {exc}")
    if task.get("timing"):
        rec["runtime_ms"] = (time.perf_counter() - start) * 1e3
    return rec


def _run_alpha(task, command, n, name, param, rng) -> dict:
    kappa = _kappa_or_none(param, n)
    if command in ("meanwidth", "urysohn"):
        primal, dual = width_grids(n, param.beta)
        f = AlphaFn.sample(_descriptor(task, "fn", param, n, rng), primal, param)
        if command == "urysohn":
            return _from_report(name, n, param, check_urysohn(f, dual))
        rep = mean_width_repr(f, dual)
        lim = mean_width_limit(f, tuple(task.get("schedule", DEFAULT_SCHEDULE)), dual)
        tol = 1e-2 * abs(rep.value) + rep.quadrature_error_estimate + lim.quadrature_error_estimate
        rec = _record(name, n, param, kappa, rep.value, lim.value, tol,
                      abs(rep.value - lim.value) <= tol, dual.m,
                      representation_error=rep.quadrature_error_estimate,
                      limit_error=lim.quadrature_error_estimate,
                      quotients=[list(q) for q in lim.epsilon_schedule])
        return rec
    spec = _grid(task, n)
    if command == "bbl":
        f = AlphaFn.sample(_descriptor(task, "fn", param, n, rng), spec, param)
        g = AlphaFn.sample(_descriptor(task, "fn2", param, n, rng), spec, param)
        lam = task.get("lambda")
        if lam is None:
            lam = float(rng.uniform(0.1, 0.9)) if rng is not None else 0.5
        report = check_bbl(f, g, float(lam), task.get("kappa"))
        return _from_report(name, n, param, report)
    desc = _descriptor(task, "fn", param, n, rng)
    if command == "sample":
        side = task.get("side", MASS)
        if side == MASS:
            fn = AlphaFn.sample(desc, spec, param).mass
            total = integrate(fn)
        else:
            fn = sample(desc, spec, CONVEX)
            total = None
        return _record(name, n, param, kappa, total, grid_m=spec.m, side=side,
                       points=spec.points().tolist(), values=_jsonable(fn.values))
    if command == "transform":
        f = AlphaFn.sample(desc, spec, param)
        dual = lft.dual_grid(f.base)
        h = support_function(f, dual)
        return _record(name, n, param, kappa, grid_m=dual.m,
                       boundary_argmax=h.meta.get("boundary_argmax", 0),
                       points=dual.points().tolist(), values=_jsonable(h.values))
    raise ValueError(f"unknown command {command!r}")


def _run_psi_check(task, command, n, name) -> dict:
    psi_name = task.get("psi", "x")
    if command == "variation":
        primal, dual = variation_grid()
        phi0 = sample(lambda p: np.sum(p ** 2, axis=-1) / 2, primal, CONVEX)
        steps = tuple(task.get("steps", (0.004, 0.002, 0.001)))
        report = check_variation_formulas(phi0, sample_psi(psi_name, primal), steps, dual)
        return _from_report(name, 1, None, report)
    beta = math.inf if command == "gaussian-poincare" else float(task.get("beta", math.inf))
    param = AlphaParam.from_beta(beta)
    psi = sample_psi(psi_name, poincare_grid(n, beta))
    if command == "gaussian-poincare":
        return _from_report(name, n, param, check_gaussian_poincare(psi))
    rec = _from_report(name, n, param, check_poincare(psi, n, beta))
    rec["kappa"] = 0.0 if math.isinf(beta) else 1 / (n - beta)
    return rec


def _jsonable(values: np.ndarray):
    return [v if math.isfinite(v) else ("inf" if v > 0 else "-inf") for v in values.ravel().tolist()]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (tuple, list)):
        return "x".join(_cell(v) for v in value)
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats by strings so the JSON is standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def render(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_clean(json.loads(json.dumps(records, default=_json_default))),
                          indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for rec in records:
        writer.writerow([_cell(rec.get(c)) for c in COLUMNS])
    return buf.getvalue()


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        k = int(raw)
    except ValueError:
        raise SystemExit(f"{WORKERS_ENV} must be an integer, got {raw!r}")
    return max(1, k)


def run_tasks(tasks: list[dict], workers: int = 1) -> list[dict]:
    """Run tasks, returning records in task order whatever the completion order."""
    if workers <= 1 or len(tasks) <= 1:
        return [run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_task, tasks))


def expand_sweep(config: dict) -> list[dict]:
    """Flat cross product of the list-valued keys; ``random`` adds count seeded zoo draws."""
    jsonschema.validate(config, SWEEP_SCHEMA)
    fixed = {k: v for k, v in config.items() if k not in _AXES and k not in ("random", "format", "output")}
    axes = [(k, config[k] if isinstance(config[k], list) else [config[k]]) for k in _AXES if k in config]
    draws = [None]
    if "random" in config:
        draws = list(range(config["random"]["count"]))
    tasks = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        for draw in draws:
            task = dict(fixed)
            task.update(zip((k for k, _ in axes), combo))
            if isinstance(task.get("beta"), str):
                task["beta"] = math.inf
            label = [task["command"]] + [f"{k}={task[k]}" for k, _ in axes]
            if draw is not None:
                task["random"] = {"seed": config["random"].get("seed", 0), "index": draw}
                label.append(f"random#{draw}")
            task["label"] = " ".join(str(s) for s in label)
            tasks.append(task)
    return tasks


def _beta(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError("beta must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alphawidth", description=__doc__.split("\n\n")[0])
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--output", "-o", default=None, help="write here instead of stdout")
    parser.add_argument("--timing", action="store_true", help="fill runtime_ms (breaks byte-determinism)")
    sub = parser.add_subparsers(dest="command", required=True)

    def alpha_opts(p, need_fn=True):
        grp = p.add_mutually_exclusive_group()
        grp.add_argument("--beta", type=_beta, default=None)
        grp.add_argument("--alpha", type=float, default=None)
        p.add_argument("--n", type=int, choices=(1, 2), default=1)
        if need_fn:
            p.add_argument("--fn", default="g_alpha", help="descriptor, e.g. indicator:-1,1 or quadratic:0,1")

    def grid_opts(p):
        p.add_argument("--lo", type=float, default=None)
        p.add_argument("--hi", type=float, default=None)
        p.add_argument("--m", type=int, default=None)

    p = sub.add_parser("sample", help="sample a descriptor on a grid")
    alpha_opts(p)
    grid_opts(p)
    p.add_argument("--side", choices=(MASS, CONVEX), default=MASS)

    p = sub.add_parser("transform", help="support function of an alpha-concave descriptor")
    alpha_opts(p)
    grid_opts(p)

    p = sub.add_parser("meanwidth", help="alpha-mean width by both routes")
    alpha_opts(p)
    p.add_argument("--schedule", type=float, nargs="+", default=list(DEFAULT_SCHEDULE))

    verify = sub.add_parser("verify", help="check one inequality")
    kinds = verify.add_subparsers(dest="kind", required=True)
    p = kinds.add_parser("bbl")
    alpha_opts(p)
    grid_opts(p)
    p.add_argument("--fn2", default="g_alpha")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--kappa", type=float, default=None)
    p = kinds.add_parser("urysohn")
    alpha_opts(p)
    for kind in ("poincare", "gaussian-poincare", "variation"):
        p = kinds.add_parser(kind)
        p.add_argument("--psi", default="x", help="one of const, x, x2, cos, x2cap")
        if kind == "poincare":
            p.add_argument("--beta", type=_beta, default=50.0)
            p.add_argument("--n", type=int, choices=(1, 2), default=1)
        if kind == "variation":
            p.add_argument("--steps", type=float, nargs="+", default=[0.004, 0.002, 0.001])

    p = sub.add_parser("sweep", help="cross-product sweep from a JSON config")
    p.add_argument("config")
    return parser


def _task_from_args(args) -> dict:
    command = args.kind if args.command == "verify" else args.command
    task = {"command": command}
    for key in ("n", "beta", "alpha", "fn", "fn2", "kappa", "psi", "side"):
        value = getattr(args, key, None)
        if value is not None:
            task[key] = value
    if getattr(args, "lam", None) is not None:
        task["lambda"] = args.lam
    if getattr(args, "schedule", None) is not None:
        task["schedule"] = args.schedule
    if getattr(args, "steps", None) is not None:
        task["steps"] = args.steps
    grid = {k: getattr(args, k) for k in ("lo", "hi", "m") if getattr(args, k, None) is not None}
    if grid:
        task["grid"] = grid
    task["label"] = " ".join([command] + [f"{k}={task[k]}" for k in ("fn", "fn2", "psi") if k in task])
    return task


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = args.format
    output = args.output
    if args.command == "sweep":
        try:
            with open(args.config) as fh:
                config = json.load(fh)
            tasks = expand_sweep(config)
        except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as exc:
            msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
            parser.error(f"bad sweep config: {msg}")
        fmt = fmt or config.get("format")
        output = output or config.get("output")
    else:
        tasks = [_task_from_args(args)]
    for t in tasks:
        t["timing"] = args.timing
    records = run_tasks(tasks, _workers())
    text = render(records, fmt or "csv")
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = [r for r in records if not r["pass"]]
    for r in failed:
        why = r["diagnostics"].get("error", f"slack {r['slack']!r} < -tolerance {r['tolerance']!r}")
        print(f"FAILED: {r['name']}: {why}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
