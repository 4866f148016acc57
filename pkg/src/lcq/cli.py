"""``lcq`` command-line front end.

Every command prints (or writes with ``--out``) one JSON document with the
fields ``schema``, ``value``, ``stderr``, ``method``, ``config`` and
``warnings``. Grid-valued results go to a CSV sidecar next to the JSON.
Exit codes: 0 success, 1 failed verification, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .convex import ConvexFunction, GridFunction, LogConcaveFunction, load_spec, write_grid_csv
from .grid import GridPlan, GridSpec
from .legendre import asplund_sum, conjugate, inf_convolution
from .projection import HaarSampler, Subspace, project_potential
from .quermass import (
    SCHEMA,
    blaschke_petkantschin_check,
    mixed_quermass_fd,
    mixed_quermass_representation,
    quermassintegral,
    total_mass,
)
from .verify import run_battery, rows_to_csv, BATTERY


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",")) if text else ()


def _add_grid_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("grids")
    g.add_argument("--half-width", type=float, help="ambient/target/fiber cube half width")
    g.add_argument("--count", type=int, help="nodes per axis")
    g.add_argument("--dual-half-width", type=float)
    g.add_argument("--dual-count", type=int)
    g.add_argument("--fiber-count", type=int)


def _add_mc_args(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=("mc", "axis"), default="mc")
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcq", description="Calculus of log-concave functions and their Quermassintegrals.")
    parser.add_argument("--version", action="version", version=f"lcq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, help_text, *, f=True, g=False, grids=True):
        p = sub.add_parser(name, help=help_text)
        if f:
            p.add_argument("--f", required=True, help="function-spec JSON for f = exp(-u)")
        if g:
            p.add_argument("--g", required=True, help="function-spec JSON for g = exp(-v)")
        if f:
            p.add_argument("--dim", type=int, required=True)
        if grids:
            _add_grid_args(p)
        p.add_argument("--out", help="write the result JSON here (grid results also get a .csv sidecar)")
        return p

    cmd("conjugate", "Fenchel conjugate u*")
    cmd("inf-conv", "infimal convolution of u and v", g=True)
    p = cmd("asplund-sum", "alpha.f (+) beta.g", g=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p = cmd("project", "projection f|xi")
    p.add_argument("--axes", help="coordinate subspace, e.g. 0,2")
    p.add_argument("--i", type=int, help="subspace dimension for a Haar sample")
    p.add_argument("--index", type=int, default=0, help="Haar sample index")
    p.add_argument("--seed", type=int)
    cmd("total-mass", "integral of f")
    p = cmd("quermass", "W_j(f)")
    p.add_argument("--j", type=int, required=True)
    _add_mc_args(p)
    p = cmd("mixed-quermass", "W_j(f, g)", g=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--method", choices=("fd", "representation", "both"), default="fd")
    p.add_argument("--t-steps", type=_floats, default=(0.08, 0.04, 0.02))
    p.add_argument("--budget", type=float, default=0.05, help="extrapolation budget (relative)")
    _add_mc_args(p)
    p = cmd("bp-check", "Blaschke-Petkantschin identity")
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--seed", type=int)
    p = cmd("verify", "run the invariant battery", f=False, grids=False)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--only", help="comma-separated subset of: " + ",".join(n for n, _ in BATTERY))
    return parser


# -- helpers -----------------------------------------------------------------------


def _plan(args) -> Optional[GridPlan]:
    if args.half_width is None and args.count is None:
        if args.dual_half_width is not None:
            raise ConfigError("--dual-half-width needs --half-width and --count")
        return None
    if args.half_width is None or args.count is None:
        raise ConfigError("--half-width and --count go together")
    return GridPlan(args.half_width, args.count, args.dual_half_width, args.dual_count, args.fiber_count)


def _dual(args, n) -> Optional[GridSpec]:
    if args.dual_half_width is None:
        return None
    return GridSpec.cube(n, args.dual_half_width, args.dual_count or args.count or 129)


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("handler",)}
    for k, v in cfg.items():
        if isinstance(v, tuple):
            cfg[k] = list(v)
    return cfg


def _require_seed(args):
    if getattr(args, "mode", "mc") == "mc" and args.seed is None:
        raise ConfigError("--seed is required for Monte Carlo runs")


def _function_payload(u: ConvexFunction, args) -> dict:
    if isinstance(u, GridFunction):
        if not args.out:
            raise ConfigError("grid-valued results need --out (the nodes go to a CSV sidecar)")
        sidecar = Path(args.out).with_suffix(".csv")
        write_grid_csv(u, sidecar)
        return {"kind": "grid", "csv": sidecar.name}
    return u.to_spec()


def _result(args, value, stderr=0.0, method="closed_form", warnings=(), **extra) -> dict:
    doc = {"schema": SCHEMA, "value": value, "stderr": stderr, "method": method,
           "config": _config(args), "warnings": list(dict.fromkeys(warnings))}
    doc.update(extra)
    return doc


def _method_of(u) -> str:
    return "grid" if isinstance(u, GridFunction) else "closed_form"


# -- commands ----------------------------------------------------------------------


def run_conjugate(args):
    u = load_spec(args.f, args.dim)
    plan = _plan(args)
    dual = _dual(args, args.dim)
    if dual is None and plan is not None and isinstance(u, GridFunction):
        dual = plan.ambient(args.dim)
    c = conjugate(u, dual)
    return _result(args, _function_payload(c, args), method=_method_of(c), warnings=getattr(c, "warnings", ()))


def run_inf_conv(args):
    u, v = load_spec(args.f, args.dim), load_spec(args.g, args.dim)
    plan = _plan(args)
    w = inf_convolution(u, v, plan.ambient(args.dim) if plan else None, _dual(args, args.dim))
    return _result(args, _function_payload(w, args), method=_method_of(w), warnings=getattr(w, "warnings", ()))


def run_asplund_sum(args):
    f = LogConcaveFunction(load_spec(args.f, args.dim))
    g = LogConcaveFunction(load_spec(args.g, args.dim))
    plan = _plan(args)
    s = asplund_sum(f, g, args.alpha, args.beta, plan.ambient(args.dim) if plan else None, _dual(args, args.dim))
    return _result(args, _function_payload(s.u, args), method=_method_of(s.u), warnings=getattr(s.u, "warnings", ()))


def _subspace(args) -> Subspace:
    n = args.dim
    if args.axes is not None:
        axes = _ints(args.axes)
        if not axes or any(not 0 <= a < n for a in axes) or len(set(axes)) != len(axes):
            raise ConfigError(f"--axes must list distinct axes in 0..{n - 1}")
        eye = np.eye(n)
        rest = [k for k in range(n) if k not in axes]
        return Subspace(eye[:, list(axes)], eye[:, rest])
    if args.i is None or args.seed is None:
        raise ConfigError("give --axes, or --i with --seed (and optionally --index)")
    return HaarSampler(args.seed).sample(args.index, n, args.i)


def run_project(args):
    u = load_spec(args.f, args.dim)
    xi = _subspace(args)
    plan = _plan(args)
    target = plan.target(xi.sub_dim) if plan else None
    fiber = plan.fiber(args.dim - xi.sub_dim) if plan else None
    up = project_potential(u, xi, target, fiber, closed_form=plan is None or not isinstance(u, GridFunction))
    return _result(args, _function_payload(up, args), method=_method_of(up), warnings=getattr(up, "warnings", ()),
                   basis=xi.basis.tolist())


def run_total_mass(args):
    f = LogConcaveFunction(load_spec(args.f, args.dim))
    plan = _plan(args)
    r = total_mass(f, plan.ambient(args.dim) if plan else None, closed_form=plan is None)
    return _result(args, r.value, r.stderr, r.method, r.warnings)


def run_quermass(args):
    _require_seed(args)
    f = LogConcaveFunction(load_spec(args.f, args.dim))
    r = quermassintegral(f, args.j, args.mode, args.samples, args.seed, _plan(args))
    return _result(args, r.value, r.stderr, r.method, r.warnings)


def run_mixed(args):
    _require_seed(args)
    f = LogConcaveFunction(load_spec(args.f, args.dim))
    g = LogConcaveFunction(load_spec(args.g, args.dim))
    plan = _plan(args)
    kw = dict(mode=args.mode, samples=args.samples, seed=args.seed, plan=plan)
    out = {}
    if args.method in ("fd", "both"):
        out["fd"] = mixed_quermass_fd(f, g, args.j, t_steps=args.t_steps, budget=args.budget, **kw)
    if args.method in ("representation", "both"):
        if plan is None:
            raise ConfigError("the representation method needs --half-width and --count")
        out["representation"] = mixed_quermass_representation(f, g, args.j, **kw)
    main = out.get("fd") or out["representation"]
    warnings = [w for r in out.values() for w in r.warnings]
    extra = {}
    if len(out) == 2:
        fd, rep = out["fd"], out["representation"]
        extra["results"] = {k: {"value": r.value, "stderr": r.stderr} for k, r in out.items()}
        extra["relative_gap"] = abs(fd.value - rep.value) / abs(fd.value) if fd.value else float("inf")
    return _result(args, main.value, main.stderr, "+".join(out), warnings, **extra)


def run_bp(args):
    if args.seed is None:
        raise ConfigError("--seed is required for Monte Carlo runs")
    plan = _plan(args)
    if plan is None:
        raise ConfigError("bp-check needs --half-width and --count")
    f = LogConcaveFunction(load_spec(args.f, args.dim))
    r = blaschke_petkantschin_check(f, args.i, args.samples, args.seed, plan)
    return _result(args, r["rhs"], r["stderr"], "quadrature", (), report=r)


def run_verify(args):
    only = [s for s in args.only.split(",") if s] if args.only else None
    known = {n for n, _ in BATTERY}
    if only and not set(only) <= known:
        raise ConfigError(f"unknown battery section(s): {sorted(set(only) - known)}")
    rows = run_battery(args.seed, only)
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r.passed for r in rows) else 1


HANDLERS = {
    "conjugate": run_conjugate,
    "inf-conv": run_inf_conv,
    "asplund-sum": run_asplund_sum,
    "project": run_project,
    "total-mass": run_total_mass,
    "quermass": run_quermass,
    "mixed-quermass": run_mixed,
    "bp-check": run_bp,
    "verify": run_verify,
}


def _error(kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"schema": SCHEMA, "error": kind, "message": message}) + "\n")
    return 2


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        if exc.code in (0, None):
            return 0
        return _error("usage", "invalid command line")
    try:
        result = HANDLERS[args.command](args)
    except (ConfigError, ValueError, TypeError, KeyError, OSError, json.JSONDecodeError) as exc:
        return _error(type(exc).__name__, str(exc))
    if isinstance(result, int):
        return result
    text = json.dumps(result, indent=2, sort_keys=True, default=float) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
