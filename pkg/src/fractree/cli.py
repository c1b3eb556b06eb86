"""Command-line entry point: ``fractree <command> [options]``.

Every command writes one CSV or JSON artifact (``--out``, or standard output
when omitted).  Exit status is 0 on success, 2 on usage or validation errors
and 1 on numeric failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import bode, default_bode_grid, hinf_norm, norm_sweep_csv, norm_vs_epsilon, sample_response
from .errors import DegenerateAllRootsEqual, FractreeError, NumericError, ValidationError
from .identify import (
    default_id_grid,
    identify_structured,
    identify_unstructured,
    load_target_csv,
    synthesize_target,
    write_target_csv,
)
from .locus import default_schedule, fit_locus, trace_locus, zero_pole_set
from .response import FrequencyGrid
from .tree import (
    ConstantsOverride,
    Location,
    TreeParams,
    delta_for,
    delta_to_dict,
    enumerate_locations,
    finite_tree_response,
    undamaged_response,
)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _location(text: str) -> Location:
    try:
        return Location.parse(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _locations(text: str) -> list[Location]:
    """``g<=N``, ``all`` (same as ``g<=3``) or a comma-separated list of locations."""
    text = text.strip()
    if text.startswith("g<="):
        try:
            n = int(text[3:])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad generation bound {text!r}") from None
        if n < 1:
            raise argparse.ArgumentTypeError("generation bound must be >= 1")
        return enumerate_locations(n)
    if text == "all":
        return enumerate_locations(3)
    return [_location(part) for part in text.split(",") if part.strip()]


def _eps_range(text: str) -> list[float]:
    """``lo:hi:n`` (linear) or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return [float(x) for x in np.linspace(float(lo), float(hi), int(n))]
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eps specification {text!r}") from None


def _params(args) -> TreeParams:
    return TreeParams(args.k, args.b)


def _grid(args, default: FrequencyGrid) -> FrequencyGrid:
    if args.omega_min is None and args.omega_max is None and args.points is None:
        return default
    lo = args.omega_min if args.omega_min is not None else default.omegas[0]
    hi = args.omega_max if args.omega_max is not None else default.omegas[-1]
    n = args.points if args.points is not None else len(default)
    return FrequencyGrid.log(lo, hi, n)


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return _json(rows)
    if not rows:
        return ""
    cols = list(rows[0])
    out = [",".join(cols)]
    for r in rows:
        out.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in r.values()))
    return "\n".join(out) + "\n"


def _fmt_roots(vals) -> str:
    return ", ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in vals)


def cmd_delta(args) -> int:
    params = _params(args)
    damage = args.location.damaged(args.epsilon)
    delta = delta_for(damage, params)
    _write(args.out, _json(delta_to_dict(delta, damage, params)))
    if args.out not in (None, "-"):
        try:
            zps = zero_pole_set(delta, params)
        except DegenerateAllRootsEqual as exc:
            zps = exc.convention
            print("undamaged: Delta == 1")
        print(f"zeros: {_fmt_roots(zps.zeros)}")
        print(f"poles: {_fmt_roots(zps.poles)}")
    return 0


def cmd_locus(args) -> int:
    params = _params(args)
    table = trace_locus(args.location, params, default_schedule(args.eps_points, args.delta, args.eps_min))
    _write(args.out, table.to_csv())
    return 0


def cmd_fit(args) -> int:
    params = _params(args)
    table = trace_locus(args.location, params, default_schedule(args.eps_points, args.delta, args.eps_min))
    fit = fit_locus(table, args.degree)
    _write(args.out, _json(fit.to_dict()))
    return 0


def _evaluator(args, params):
    if args.location is None:
        return lambda s: undamaged_response(params, s)
    delta = delta_for(args.location.damaged(args.epsilon), params)
    if args.plant:
        return lambda s: undamaged_response(params, s) * delta(s)
    return delta


def cmd_bode(args) -> int:
    params = _params(args)
    fr = sample_response(_evaluator(args, params), _grid(args, default_bode_grid(params)))
    data = bode(fr)
    if args.format == "json":
        rows = [{"omega_rad_s": float(o), "mag_db": float(m), "phase_deg": float(p)} for o, m, p in data.rows()]
        _write(args.out, _json(rows))
    else:
        _write(args.out, data.to_csv())
    return 0


def cmd_hinf(args) -> int:
    params = _params(args)
    norm, om = hinf_norm(delta_for(args.location.damaged(args.epsilon), params), params)
    _write(args.out, _json({
        "location": str(args.location), "epsilon": args.epsilon, "hinf": norm, "argmax_omega": om,
    }))
    return 0


def cmd_norm_sweep(args) -> int:
    params = _params(args)
    rows = norm_vs_epsilon(args.locations, args.eps, params)
    if args.format == "json":
        _write(args.out, _json([
            {"location": str(r.location), "epsilon": r.epsilon, "hinf": r.hinf, "argmax_omega": r.argmax_omega}
            for r in rows
        ]))
    else:
        _write(args.out, norm_sweep_csv(rows))
    return 0


def cmd_synthesize(args) -> int:
    params = _params(args)
    grid = _grid(args, default_id_grid(params))
    target = synthesize_target(args.location, args.epsilon, params, grid, noise=args.noise, seed=args.seed)
    _write(args.out, write_target_csv(target))
    return 0


def cmd_identify(args) -> int:
    params = _params(args)
    candidates = args.candidates or enumerate_locations(args.generation or 2)
    g = args.generation or max(c.generation for c in candidates)
    target = load_target_csv(args.target, g, params, divide_out_ginf=args.divide_ginf)
    if args.mode == "unstructured":
        result = identify_unstructured(target, starts=args.starts, seed=args.seed)
    else:
        fits = None
        if args.source == "locus-fit":
            fits = {}
            for loc in candidates:
                fits[loc] = fit_locus(trace_locus(loc, params), args.degree)
        result = identify_structured(target, candidates, source=args.source, fits=fits)
    out = result.to_dict()
    out["seed"] = args.seed
    _write(args.out, _json(out))
    return 0


def cmd_oracle(args) -> int:
    params = _params(args)
    grid = _grid(args, default_bode_grid(params, 50))
    s = grid.s
    if args.location is None:
        overrides = ConstantsOverride()
        analytic = undamaged_response(params, s)
    else:
        damage = args.location.damaged(args.epsilon)
        overrides = ConstantsOverride.from_damage(damage, params)
        analytic = undamaged_response(params, s) * delta_for(damage, params)(s)
    finite = finite_tree_response(args.depth, overrides, args.termination, params, grid).values
    rel = np.abs(finite - analytic) / np.abs(analytic)
    rows = [
        {
            "omega_rad_s": float(o), "analytic_re": float(a.real), "analytic_im": float(a.imag),
            "finite_re": float(f.real), "finite_im": float(f.imag), "rel_error": float(e),
        }
        for o, a, f, e in zip(grid.omegas, analytic, finite, rel)
    ]
    _write(args.out, _table(rows, args.format))
    return 0


def _optional_location(text: str):
    return None if text.strip().lower() == "none" else _location(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fractree", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--k", type=float, default=2.0, help="nominal spring constant (default 2)")
    common.add_argument("--b", type=float, default=1.0, help="nominal damper constant (default 1)")
    common.add_argument("--out", "-o", default=None, help="output file (default: standard output)")
    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--omega-min", type=float, default=None)
    grid.add_argument("--omega-max", type=float, default=None)
    grid.add_argument("--points", type=int, default=None)
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=["csv", "json"], default="csv")
    sched = argparse.ArgumentParser(add_help=False)
    sched.add_argument("--eps-points", type=int, default=400)
    sched.add_argument("--eps-min", type=float, default=1e-3)
    sched.add_argument("--delta", type=float, default=1e-3, help="schedule starts at 1 - delta")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("delta", parents=[common], help="construct the damage disturbance")
    p.add_argument("--location", type=_location, required=True, help="g:n:spring|damper")
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("locus", parents=[common, sched], help="trace zero/pole loci (CSV)")
    p.add_argument("--location", type=_location, required=True)
    p.set_defaults(func=cmd_locus)

    p = sub.add_parser("fit", parents=[common, sched], help="polynomial fit of loci (JSON)")
    p.add_argument("--location", type=_location, required=True)
    p.add_argument("--degree", type=int, default=17)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bode", parents=[common, grid, fmt], help="Bode data of Delta (or of the plant)")
    p.add_argument("--location", type=_optional_location, default=None, help="'none' for G_inf")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--plant", action="store_true", help="emit G_inf * Delta instead of Delta")
    p.set_defaults(func=cmd_bode)

    p = sub.add_parser("hinf", parents=[common], help="H-infinity norm of Delta (JSON)")
    p.add_argument("--location", type=_location, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(func=cmd_hinf)

    p = sub.add_parser("norm-sweep", parents=[common, fmt], help="H-infinity norm versus eps")
    p.add_argument("--locations", type=_locations, default=enumerate_locations(2))
    p.add_argument("--eps", type=_eps_range, default=_eps_range("0.05:0.95:10"))
    p.set_defaults(func=cmd_norm_sweep)

    p = sub.add_parser("synthesize", parents=[common, grid], help="write an exact target CSV")
    p.add_argument("--location", type=_location, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("identify", parents=[common], help="identify damage from a target CSV (JSON)")
    p.add_argument("--mode", choices=["structured", "unstructured"], default="structured")
    p.add_argument("--target", required=True, help="CSV with omega_rad_s,re,im")
    p.add_argument("--divide-ginf", action="store_true", help="target holds G_inf*Delta samples")
    p.add_argument("--candidates", type=_locations, default=None, help="g<=N or comma list")
    p.add_argument("--generation", type=int, default=None, help="assumed generation (unstructured)")
    p.add_argument("--source", choices=["exact", "locus-fit"], default="exact")
    p.add_argument("--degree", type=int, default=17, help="locus-fit degree")
    p.add_argument("--starts", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("oracle", parents=[common, grid, fmt], help="finite tree versus closed form")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--termination", choices=["tail", "rigid"], default="tail")
    p.add_argument("--location", type=_optional_location, default=None)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"fractree: error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FractreeError, FloatingPointError, OverflowError) as exc:
        print(f"fractree: numeric failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fractree: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
