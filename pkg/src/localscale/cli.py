"""Command-line entry point: attractor, dimension, distortion, sweep and verify.

Every command prints one JSON document holding a manifest (library version,
command and all resolved parameters, SHA-256 of every file written) and the
result. Exit codes: 0 pass, 1 a checked property failed, 2 usage or
precondition error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import LocalScaleError

MAX_AUTO_LEVEL = 20


def _levels(text):
    """'2..8' or '2,3,5' -> list of ints."""
    try:
        if ".." in text:
            a, b = text.split("..")
            out = list(range(int(a), int(b) + 1))
        else:
            out = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}; use 'a..b' or 'a,b,c'") from None
    if not out:
        raise argparse.ArgumentTypeError("empty level list")
    return out


def _threads_default():
    try:
        return max(1, int(os.environ.get("FRACTAL_THREADS", "1")))
    except ValueError:
        return 1


def _add_family(p, required=True):
    g = p.add_argument_group("system selection")
    g.add_argument("--family", choices=["three_branch", "g_lambda", "cantor", "tiling"])
    g.add_argument("--t", type=float, help="three_branch parameter in [0, 1/2]")
    g.add_argument("--lambda", dest="lam", type=float, help="g_lambda parameter in (0, 1/4]")
    if required:
        g.add_argument("--spec", help="JSON file: a system dict or {'family': ..., ...}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=_threads_default(),
                        help="worker threads (default $FRACTAL_THREADS or 1); results do not depend on it")
    common.add_argument("--manifest", help="also write the manifest JSON to this path")

    parser = argparse.ArgumentParser(prog="localscale", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"localscale {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attractor", parents=[common], help="grid outer approximation of an attractor")
    _add_family(p)
    p.add_argument("--level", type=int, default=12)
    p.add_argument("--tol", type=float, help="Hausdorff tolerance (default: twice the minimum feasible)")
    p.add_argument("--render", help="write a PGM raster (1-D grids are drawn as a strip)")
    p.add_argument("--out", help="write the grid dump JSON here")

    p = sub.add_parser("dimension", parents=[common], help="dimension bracket and box-counting capacity")
    _add_family(p)
    p.add_argument("--n", type=int, default=7, help="cover level")
    p.add_argument("--levels", type=_levels, help="box-counting levels, e.g. 2..8")
    p.add_argument("--base", type=int, help="box-counting base (default: the family's natural base)")
    p.add_argument("--level", type=int, default=12, help="grid level (raised for 1-D when the levels need it)")
    p.add_argument("--slack", type=float, default=1.01, help="contraction constant slack, 1.0 for none")
    p.add_argument("--reading", choices=["closed", "open"], default="closed")
    p.add_argument("--mode", choices=["both", "bracket", "capacity-only"], default="both")
    p.add_argument("--csv", help="write box counts CSV here")

    p = sub.add_parser("distortion", parents=[common], help="Q(n), D(n) report")
    _add_family(p)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--net-eps", type=float)
    p.add_argument("--max-words", type=int, default=10**6)

    p = sub.add_parser("sweep", parents=[common], help="semi-continuity probes along a parameter sweep")
    p.add_argument("kind", choices=["measure", "dimension"])
    _add_family(p, required=False)
    p.add_argument("--t-star", type=float, required=True)
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--level", type=int, default=12)
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--slack", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=0.05)
    p.add_argument("--baseline", help="reference lower bound: a number or 'moran'")
    p.add_argument("--levels", type=_levels, default=list(range(3, 10)),
                   help="dyadic box-counting levels for the capacity column (dimension sweeps)")
    p.add_argument("--csv", help="write the sweep table here")

    p = sub.add_parser("verify", parents=[common], help="seeded property suites")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--suite", action="append", help="suite name (repeatable)")
    g.add_argument("--all", action="store_true")
    p.add_argument("--out", help="write the suite results JSON here")
    return parser


def _family_spec(args):
    from .families import FamilySpec

    if args.family is None:
        raise LocalScaleError("choose --family or --spec")
    params = {}
    if args.family == "three_branch":
        if args.t is None:
            raise LocalScaleError("three_branch needs --t")
        params["t"] = args.t
    if args.family == "g_lambda":
        if args.lam is None:
            raise LocalScaleError("g_lambda needs --lambda")
        params["lambda"] = args.lam
    return FamilySpec(args.family, params)


def _system(args):
    """(System, description dict) from --spec or --family."""
    from .families import FamilySpec, make_custom

    if getattr(args, "spec", None):
        with open(args.spec) as fh:
            d = json.load(fh)
        if "family" in d:
            spec = FamilySpec.from_dict(d)
            return spec.build(), spec.to_dict()
        return make_custom(d), {"spec": d}
    spec = _family_spec(args)
    return spec.build(), spec.to_dict()


def _write(path, text, outputs):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    outputs[path] = hashlib.sha256(text.encode()).hexdigest()


def _natural_base(F, desc):
    """3 for the Cantor system, 1/lambda when integral for g_lambda, else 2."""
    name = desc.get("family")
    if name == "cantor":
        return 3
    if name == "g_lambda":
        r = 1.0 / desc["lambda"]
        if abs(r - round(r)) < 1e-9:
            return int(round(r))
    return 2


def cmd_attractor(args, outputs):
    from .ifs import attractor, min_feasible_tol
    from .measure import measure_bracket

    F, desc = _system(args)
    tol = args.tol if args.tol is not None else 2 * min_feasible_tol(F, args.level)
    A = attractor(F, tol, args.level)
    br = measure_bracket(A, F)
    nat = br.natural(F.frame, F.dim)
    if args.out:
        _write(args.out, A.to_json(), outputs)
    if args.render:
        data = A.to_pgm() if A.dim == 2 else _strip_pgm(A)
        with open(args.render, "wb") as fh:
            fh.write(data)
        outputs[args.render] = hashlib.sha256(data).hexdigest()
    params = {**desc, "level": args.level, "tol": tol}
    result = {
        "cells": len(A),
        "error": A.error,
        "measure_normalized": {"inner": br.inner, "outer": br.outer},
        "measure_natural": {"inner": nat.inner, "outer": nat.outer},
        "frame": F.frame.to_dict() if F.frame is not None else None,
    }
    return params, result, True


def _strip_pgm(A, height=32):
    """1-D grid as a binary PGM strip: one column per cell, occupied 0, empty 255."""
    if A.dim != 1:
        raise LocalScaleError("render supports 1-D and 2-D grids")
    row = np.full(A.n_side, 255, dtype=np.uint8)
    row[A.cells[:, 0]] = 0
    return f"P5\n{A.n_side} {height}\n255\n".encode() + np.tile(row, height).tobytes()


def cmd_dimension(args, outputs):
    from .dimension import hdim_bracket, limit_capacity
    from .ifs import attractor, min_feasible_tol

    F, desc = _system(args)
    base = args.base or _natural_base(F, desc)
    frame = F.frame if base != 2 else None
    side = 2.0
    if frame is not None:
        lat = frame.lattice or (frame.lo, frame.hi)
        side = float(frame.to_normalized(lat[1]) - frame.to_normalized(lat[0]))
    levels = args.levels
    if levels is None:
        # every default scale stays at least four cells wide
        top = int(math.floor(math.log(side / (4 * 2.0 ** (1 - args.level))) / math.log(base) + 1e-9))
        levels = list(range(2, 9)) if base == 2 else list(range(1, max(top, 3) + 1))
    params = {**desc, "n": args.n, "slack": args.slack, "reading": args.reading, "mode": args.mode,
              "base": base, "levels": levels}
    result = {}
    if args.mode in ("both", "capacity-only"):
        level = args.level
        if F.dim == 1:
            need = math.ceil(3 - math.log2(side / float(base) ** max(levels)) - 1e-9)
            level = min(max(level, need), MAX_AUTO_LEVEL)
        params["level"] = level
        A = attractor(F, 2 * min_feasible_tol(F, level), level)
        est = limit_capacity(A, levels, base, frame)
        result["capacity"] = {"slope": est.slope, "residual": est.residual, "window": list(est.window),
                              "flat": est.flat}
        if args.csv:
            _write(args.csv, est.to_csv("natural frame" if frame is not None else "normalized [-1,1]^n"),
                   outputs)
    if args.mode in ("both", "bracket"):
        br = hdim_bracket(F, args.n, slack=args.slack, reading=args.reading)
        result["bracket"] = br.to_dict()
    return params, result, True


def cmd_distortion(args, outputs):
    from .distortion import distortion_report

    F, desc = _system(args)
    rep = distortion_report(F, args.n, net_eps=args.net_eps, seed=args.seed, max_words=args.max_words)
    params = {**desc, "n": args.n, "net_eps": args.net_eps, "max_words": args.max_words}
    return params, rep.to_dict(F), True


def cmd_sweep(args, outputs):
    from .dimension import moran_dimension
    from .families import dimension_semicontinuity_probe
    from .measure import measure_semicontinuity_probe

    spec = _family_spec(args)
    params = {**spec.to_dict(), "kind": args.kind, "t_star": args.t_star, "radius": args.radius,
              "steps": args.steps}
    if args.kind == "measure":
        params["level"] = args.level
        s = measure_semicontinuity_probe(spec, args.t_star, args.radius, args.steps, args.level,
                                         workers=args.threads)
        result = {"pass": s.passed, "star_outer": s.star_outer, "slack": s.slack,
                  "attractor_stability": s.stable, "max_outer": max(r["mu_outer"] for r in s.rows)}
        ok = s.passed and s.stable
    else:
        baseline = None
        if args.baseline == "moran":
            F = spec.build(args.t_star) if spec.parameter else spec.build()
            # coincident branches count once
            distinct = {(float(m.A[0, 0]), float(m.b[0])) for m in F.maps}
            baseline = moran_dimension([abs(a) for a, _ in sorted(distinct)])
        elif args.baseline is not None:
            baseline = float(args.baseline)
        params.update({"n": args.n, "slack": args.slack, "tolerance": args.tolerance, "baseline": baseline,
                       "levels": args.levels, "level": args.level})
        s = dimension_semicontinuity_probe(spec, args.t_star, args.radius, args.steps, args.n,
                                           levels=args.levels, level=args.level,
                                           slack=args.slack, tolerance=args.tolerance, baseline=baseline,
                                           workers=args.threads)
        result = {"pass": s.passed, "baseline": s.baseline, "threshold": s.threshold,
                  "min_lower": min(r["lower"] for r in s.rows)}
        ok = s.passed
    result["rows"] = len(s.rows)
    if args.csv:
        _write(args.csv, s.to_csv(), outputs)
    else:
        result["table"] = s.rows
    return params, result, ok


def cmd_verify(args, outputs):
    from .verify import SUITES, run_suite

    names = list(SUITES) if args.all else args.suite
    res = [run_suite(name, args.seed) for name in names]
    doc = [r.to_dict() for r in res]
    if args.out:
        _write(args.out, json.dumps(doc, sort_keys=True, indent=1) + "\n", outputs)
    summary = {r.name: r.passed for r in res}
    failed = [c.to_dict() for r in res for c in r.checks if not c.passed]
    return {"suites": names}, {"suites": summary, "failures": failed}, all(summary.values())


COMMANDS = {
    "attractor": cmd_attractor,
    "dimension": cmd_dimension,
    "distortion": cmd_distortion,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    outputs = {}
    try:
        params, result, ok = COMMANDS[args.command](args, outputs)
    except (LocalScaleError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    manifest = {
        "version": __version__,
        "command": args.command,
        "seed": args.seed,
        "threads": args.threads,
        "params": params,
        "outputs": dict(sorted(outputs.items())),
    }
    doc = {"manifest": manifest, "result": result, "pass": bool(ok)}
    text = json.dumps(doc, sort_keys=True, indent=1, allow_nan=True)
    if args.manifest:
        with open(args.manifest, "w") as fh:
            fh.write(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    print(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
