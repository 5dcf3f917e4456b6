"""Command-line front end: writes deterministic CSV/JSON data files.

Subcommands: locus, region, solve, order, magnitude, compare. Run
``momentum-lmm <command> --help`` for flags. Exit codes: 0 success,
2 bad arguments, 1 I/O failure.

CSV files use LF endings, one header row and shortest round-trip floats.
``solve`` appends a ``#diverged=true|false`` footer line. JSON files are
UTF-8 with sorted keys; non-finite numbers are written as the strings
``"inf"``, ``"-inf"`` or ``"nan"``.

Diffusion schedules (``solve --problem diffusion --schedule FILE``) are JSON
arrays of alpha values, index 0 being the noisiest step.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, diffusion, problems, stability
from .methods import Family, MethodSpec, integrate, linear_multistep_form, parse_method


class ArgError(Exception):
    pass


def _fmt(v) -> str:
    v = float(v)
    return repr(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def _write_json(path, obj):
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=1, ensure_ascii=False) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _write_csv(path, header, rows, footer=()):
    lines = [",".join(header)]
    lines += [",".join(cell if isinstance(cell, str) else _fmt(cell) for cell in row) for row in rows]
    lines += list(footer)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _floats(text, flag, count=None):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ArgError(f"{flag}: expected comma-separated numbers, got {text!r}")
    if count is not None and len(vals) != count:
        raise ArgError(f"{flag}: expected {count} values, got {len(vals)}")
    return vals


def _method_args(p, need=True):
    g = p.add_argument_group("method")
    g.add_argument("--family", choices=[f.value for f in Family if f is not Family.AGGREGATED],
                   required=need)
    g.add_argument("--order", type=int, default=None)
    g.add_argument("--beta", type=float, default=None)
    g.add_argument("--momentum", type=float, default=None, help="GHVB momentum number, e.g. 1.8")


def _spec(args) -> MethodSpec:
    fam = Family(args.family)
    try:
        if fam is Family.GHVB:
            if args.momentum is not None:
                if args.order is not None or args.beta is not None:
                    raise ArgError("--momentum: cannot be combined with --order/--beta")
                return MethodSpec.ghvb(args.momentum)
            if args.order is None:
                raise ArgError("--momentum: GHVB needs --momentum (or --order with --beta)")
            return MethodSpec(fam, order=args.order, beta=1.0 if args.beta is None else args.beta)
        if args.momentum is not None:
            raise ArgError("--momentum: only valid with --family ghvb")
        order = 1 if args.order is None else args.order
        if fam is Family.AB:
            if args.beta is not None:
                raise ArgError("--beta: AB takes no damping")
            return MethodSpec.ab(order)
        if args.beta is None:
            raise ArgError(f"--beta: required for --family {fam.value}")
        return MethodSpec(fam, order=order, beta=args.beta)
    except ValueError as exc:
        text = str(exc)
        flag = "--momentum" if "momentum" in text else "--beta" if "beta" in text else "--order"
        raise ArgError(f"{flag}: {text}")


def _problem(args):
    name = args.problem
    if name == "toy2x2":
        prob = problems.toy_2x2()
        t0 = prob.t0 if args.t0 is None else args.t0
        t1 = prob.t1 if args.t1 is None else args.t1
        if t0 != 0.0:
            raise ArgError("--t0: the toy problem starts at 0")
        return dataclasses.replace(prob, t1=t1)
    if name == "test-eq":
        try:
            lam = complex(args.lam.replace("i", "j")) if args.lam else -1.0
        except ValueError:
            raise ArgError(f"--lambda: not a number: {args.lam!r}")
        x0 = _floats(args.x0, "--x0") if args.x0 else [1.0]
        x0 = x0[0] if len(x0) == 1 else x0
        t0 = 0.0 if args.t0 is None else args.t0
        t1 = 1.0 if args.t1 is None else args.t1
        return problems.test_equation(lam, x0, t0, t1)
    raise ArgError(f"--problem: unknown problem {name!r}")


def _problem_args(p, choices=("toy2x2", "test-eq")):
    p.add_argument("--problem", choices=list(choices), required=True)
    p.add_argument("--lambda", dest="lam", default=None, help="test-eq rate; complex as '-1+2i'")
    p.add_argument("--x0", default=None, help="comma-separated initial state")
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--t1", type=float, default=None, help="end time (default 1, toy2x2: 3)")


def cmd_locus(args):
    spec = _spec(args)
    if args.samples < 2:
        raise ArgError("--samples: must be at least 2")
    curve = stability.locus(linear_multistep_form(spec), args.samples)
    if args.format == "json":
        _write_json(args.out, {"method": spec.label, "theta": curve.thetas,
                               "re": curve.values.real, "im": curve.values.imag})
    else:
        _write_csv(args.out, ["theta", "re", "im"],
                   zip(curve.thetas, curve.values.real, curve.values.imag))


def cmd_region(args):
    spec = _spec(args)
    re_rng = _floats(args.re, "--re", 2)
    im_rng = _floats(args.im, "--im", 2)
    res = [int(v) for v in _floats(args.resolution, "--resolution")]
    if len(res) not in (1, 2) or min(res) < 2:
        raise ArgError("--resolution: one or two integers >= 2")
    res = res[0] if len(res) == 1 else tuple(res)
    try:
        re, im = stability.raster_axes(re_rng, im_rng, res)
    except ValueError as exc:
        raise ArgError(f"--re/--im: {exc}")
    grid = stability.stability_raster(linear_multistep_form(spec), re_rng, im_rng, res)
    rows = [(x, y, "1" if grid[i, j] else "0") for i, y in enumerate(im) for j, x in enumerate(re)]
    if args.format == "json":
        _write_json(args.out, {"method": spec.label, "re": re, "im": im, "stable": grid.astype(int)})
    else:
        _write_csv(args.out, ["re", "im", "stable"], rows)


def cmd_solve(args):
    spec = _spec(args)
    if args.problem == "diffusion":
        if not args.schedule:
            raise ArgError("--schedule: required for --problem diffusion")
        try:
            sched = diffusion.AlphaSchedule.from_json(args.schedule)
        except OSError as exc:
            raise OSError(f"cannot read schedule: {exc}")
        except ValueError as exc:
            raise ArgError(f"--schedule: {exc}")
        lam = float(args.lam) if args.lam else 1.0
        x0 = np.array(_floats(args.x0, "--x0") if args.x0 else [1.0])
        noise = diffusion.linear_noise(lam * np.eye(x0.size), coords="bar")
        traj, _ = diffusion.sample_ode(spec, sched, noise, x0)
    else:
        if args.steps is None or args.steps < 1:
            raise ArgError("--steps: a positive step count is required")
        prob = _problem(args)
        traj = integrate(spec, prob, args.steps)
    dim = traj.states.shape[1]
    if args.format == "json":
        _write_json(args.out, {"method": spec.label, "times": traj.times,
                               "states": traj.states, "diverged": traj.diverged})
    else:
        _write_csv(args.out, ["t"] + [f"x{k}" for k in range(dim)],
                   [[t, *x] for t, x in zip(traj.times, traj.states)],
                   footer=[f"#diverged={'true' if traj.diverged else 'false'}"])


def cmd_order(args):
    spec = _spec(args)
    try:
        steps = [int(v) for v in args.steps.split(",")]
    except ValueError:
        raise ArgError(f"--steps: expected comma-separated integers, got {args.steps!r}")
    if len(steps) < 2 or any(n < 1 for n in steps) or steps != sorted(set(steps)):
        raise ArgError("--steps: need at least two strictly increasing positive counts")
    try:
        study = analysis.order_study(spec, _problem(args), steps)
    except ValueError as exc:
        raise ArgError(f"--steps: {exc}")
    out = {"method": spec.label, "steps": study.steps, "deltas": study.deltas,
           "errors": study.errors, "q": study.q, "formal_order": study.formal_order}
    if args.format == "json":
        _write_json(args.out, out)
    else:
        rows = [(str(a), str(b), q) for a, b, q in zip(steps, steps[1:], study.q)]
        _write_csv(args.out, ["steps_old", "steps_new", "q"], rows)


def _load_grid(path):
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path, allow_pickle=False)
    return np.asarray(json.loads(path.read_text(encoding="utf-8")), dtype=np.float64)


def cmd_magnitude(args):
    grid = _load_grid(args.input)
    if grid.ndim != 3:
        raise ArgError(f"--input: expected an H x W x C array, got shape {grid.shape}")
    C = grid.shape[-1]
    means = _floats(args.means, "--means", C) if args.means else [0.0] * C
    stds = _floats(args.stds, "--stds", C) if args.stds else [1.0] * C
    try:
        cfg = analysis.MagnitudeConfig(means, stds, tau=args.tau, pool_k=args.pool)
        score = analysis.magnitude_score(grid, cfg)
    except ValueError as exc:
        raise ArgError(f"--pool/--tau/--stds: {exc}")
    if args.format == "json":
        _write_json(args.out, {"score": score, "tau": args.tau, "pool": args.pool})
    else:
        _write_csv(args.out, ["score"], [[score]])


def cmd_compare(args):
    try:
        specs = [parse_method(s) for s in args.methods.split(",")]
    except ValueError as exc:
        raise ArgError(f"--methods: {exc}")
    if args.steps is None or args.steps < 1:
        raise ArgError("--steps: a positive step count is required")
    prob = _problem(args)
    rows = []
    for spec in specs:
        traj = integrate(spec, prob, args.steps)
        err = analysis.global_error(traj, prob.exact)
        rows.append((spec.label, err, float(np.linalg.norm(traj.final)),
                     "true" if traj.diverged else "false"))
    if args.format == "json":
        _write_json(args.out, {"problem": prob.label, "steps": args.steps, "results": [
            {"method": m, "final_error": e, "final_norm": n, "diverged": d == "true"}
            for m, e, n, d in rows]})
    else:
        _write_csv(args.out, ["method", "final_error", "final_norm", "diverged"], rows)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="momentum-lmm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out", required=True)
        p.add_argument("--format", choices=["csv", "json"], default=None)

    p = sub.add_parser("locus", help="boundary locus curve")
    _method_args(p)
    p.add_argument("--samples", type=int, default=512)
    common(p)
    p.set_defaults(func=cmd_locus)

    p = sub.add_parser("region", help="stability raster as re,im,stable triplets")
    _method_args(p)
    p.add_argument("--re", default="-4,1")
    p.add_argument("--im", default="-2.5,2.5")
    p.add_argument("--resolution", default="101")
    common(p)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("solve", help="integrate a problem, write the trajectory")
    _method_args(p)
    _problem_args(p, ("toy2x2", "test-eq", "diffusion"))
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--schedule", default=None, help="JSON array of alphas (diffusion problem)")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("order", help="empirical order of convergence")
    _method_args(p)
    _problem_args(p)
    p.add_argument("--steps", default="20,40,80,160,320,640")
    common(p)
    p.set_defaults(func=cmd_order, default_format="json")

    p = sub.add_parser("magnitude", help="thresholded magnitude score of an H x W x C grid")
    p.add_argument("--input", required=True, help=".npy or JSON nested array")
    p.add_argument("--tau", type=float, default=3.0)
    p.add_argument("--pool", type=int, default=4)
    p.add_argument("--means", default=None)
    p.add_argument("--stds", default=None)
    common(p)
    p.set_defaults(func=cmd_magnitude, default_format="json")

    p = sub.add_parser("compare", help="final errors of several methods on one problem")
    _problem_args(p)
    p.add_argument("--methods", required=True, help="e.g. euler,ab2,hb2:0.8,ghvb1.8")
    p.add_argument("--steps", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_compare)
    return parser


_VALUE_FLAGS = {"--lambda", "--x0", "--t0", "--t1", "--re", "--im", "--means", "--stds"}


def _glue_values(argv):
    # let values such as "-1+2i" or "-4,1" follow their flag without "="
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_glue_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        suffix = Path(args.out).suffix.lower()
        args.format = "json" if suffix == ".json" else "csv" if suffix == ".csv" else \
            getattr(args, "default_format", "csv")
    try:
        args.func(args)
    except ArgError as exc:
        print(f"momentum-lmm {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"momentum-lmm {args.command}: I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())
