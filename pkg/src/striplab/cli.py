"""Command line interface: ``striplab <subcommand> [options]``.

Every run writes its artifacts plus ``manifest.json`` (parameters and
artifact hashes) into the output directory: ``--out``, else ``$STRIPLAB_OUT``,
else ``./striplab-out``. A JSON ``--config`` file supplies defaults that
command-line flags override.

Exit codes: 0 success, 2 usage error, 3 tolerance failure, 4 divergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .boundary import BoundaryData, parse_function
from .harmonic import DivergenceError
from .io import to_jsonable, write_csv, write_json_report, write_manifest, write_svg_plot
from .kernels import (
    BoundarySide,
    SeriesTruncation,
    feller_density,
    hitting_time_density,
    killed_heat_kernel,
    poisson_kernel,
    scaled_jump_kernels,
)

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE, EXIT_DIVERGENCE = 0, 2, 3, 4

KERNELS = ("poisson", "p0", "h", "feller", "k1", "k2")
FORMS = ("A0", "A1", "A2", "A", "Ainf", "trace", "traceT", "interior")


class UsageError(Exception):
    pass


def _floats(text: str) -> List[float]:
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if tok:
            out.append(math.inf if tok.lower() in ("inf", "infinity") else float(tok))
    return out


def _target(text) -> float:
    return math.inf if str(text).lower() in ("inf", "infinity") else float(text)


def _grid(start: float, stop: float, step: float) -> np.ndarray:
    if not step > 0 or stop < start:
        raise UsageError("grid needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _data(lower: str, upper: str) -> BoundaryData:
    try:
        return BoundaryData(parse_function(lower), parse_function(upper))
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"bad boundary data: {exc}") from None


# --------------------------------------------------------------------------
# subcommands; each returns (exit code, artifacts)


def cmd_eval_kernel(args, out: Path):
    trunc = SeriesTruncation(args.n_max, args.k_max, args.t_switch, args.tail_tol)
    grid = _grid(args.start, args.stop, args.step)
    k = args.kernel
    if k == "poisson":
        var, vals = "x1", poisson_kernel(grid, args.x2, args.xi1, args.side)
    elif k == "p0":
        var, vals = "y2", killed_heat_kernel(args.t, args.x2, grid, trunc)
    elif k == "h":
        var = "t"
        if grid[0] <= 0:
            raise UsageError("hitting density needs t > 0")
        vals = hitting_time_density(grid, args.x2, args.side, trunc)
    elif k == "feller":
        var, vals = "u", feller_density(grid, args.side, 0.0, args.eta_side)
    else:
        var = "u"
        k1, k2 = scaled_jump_kernels(args.ell, grid)
        vals = k1 if k == "k1" else k2
    vals = np.broadcast_to(np.asarray(vals, dtype=float), grid.shape)
    csv_path = write_csv(out / f"kernel_{k}.csv", ({var: a, "value": b} for a, b in zip(grid, vals)),
                         [var, "value"])
    arts = [csv_path]
    if args.svg:
        arts.append(write_svg_plot(out / f"kernel_{k}.svg", {k: (grid, vals)}, title=f"{k} kernel",
                                   xlabel=var, ylabel="value"))
    return EXIT_OK, arts


def _spec(args):
    from .forms import QuadratureSpec
    return QuadratureSpec(order=args.order, tol=args.tol, max_cutoff=args.max_cutoff)


def cmd_energy(args, out: Path):
    from .forms import form_value
    f = _data(args.lower, args.upper)
    params = {"form": args.form, "ell": args.ell, "lower": args.lower, "upper": args.upper}
    try:
        rep = form_value(args.form, f, args.ell, _spec(args))
    except DivergenceError as exc:
        path = write_json_report(out / "energy.json", params, {"diverged": True}, [str(exc)])
        return EXIT_DIVERGENCE, [path]
    errors = ["form diverges for this data"] if rep.diverged else []
    path = write_json_report(out / "energy.json", params, rep.to_dict(), errors)
    print(f"{rep.label}: {rep.value!r} (quadrature error {rep.quad_error:.2e}, tail {rep.tail_bound:.2e})")
    return (EXIT_DIVERGENCE if rep.diverged else EXIT_OK), [path]


def cmd_feller_check(args, out: Path):
    from .forms import QuadratureSpec, feller_limit
    phi = _data(args.phi_lower, args.phi_upper)
    psi = _data(args.psi_lower, args.psi_upper)
    spec = QuadratureSpec(order=args.order, tol=args.tol, alpha_schedule=tuple(_floats(args.alphas)))
    params = {"phi": phi.describe(), "psi": psi.describe(), "alphas": list(spec.alpha_schedule),
              "gap_tolerance": args.gap_tol}
    try:
        lim = feller_limit(phi, psi, spec)
    except DivergenceError as exc:
        return EXIT_DIVERGENCE, [write_json_report(out / "feller.json", params, {}, [str(exc)])]
    ok = lim.relative_gap <= args.gap_tol and lim.monotone
    errors = [] if ok else ["relative gap above tolerance or non-monotone sequence"]
    path = write_json_report(out / "feller.json", params, lim.to_dict(), errors)
    print(f"extrapolated {lim.extrapolated!r}, closed form {lim.closed_form!r}, gap {lim.relative_gap:.2e}")
    return (EXIT_OK if ok else EXIT_TOLERANCE), [path]


def cmd_mosco_scan(args, out: Path):
    from .mosco import GalerkinBasis, mosco_scan
    schedule = _floats(args.schedule)
    if not schedule:
        raise UsageError("empty schedule")
    target = _target(args.target)
    try:
        rep = mosco_scan(target, schedule, args.alpha, args.f, GalerkinBasis(args.R, args.m),
                         args.order, args.workers)
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    arts = [write_csv(out / "mosco_scan.csv", rep.rows(), ["ell", "gap", "relative_gap", "form_value"]),
            write_json_report(out / "mosco_scan.json", {"target": target, "schedule": schedule,
                                                        "alpha": args.alpha, "f": args.f,
                                                        "R": args.R, "m": args.m},
                              rep.to_dict(), [] if rep.monotone else ["gap sequence is not monotone"])]
    arts.append(write_svg_plot(out / "mosco_scan.svg", {"relative gap": (schedule, rep.relative_gaps)},
                               title=f"resolvent gap, target {args.target}", xlabel="ell",
                               ylabel="relative gap", logx=True))
    print("relative gaps: " + ", ".join(f"{g:.4g}" for g in rep.relative_gaps))
    code = EXIT_OK
    if args.max_gap is not None and not (rep.final_relative_gap <= args.max_gap and rep.monotone):
        code = EXIT_TOLERANCE
    return code, arts


def cmd_simulate(args, out: Path):
    from .kernels import InteriorPoint
    from .montecarlo import (
        SimConfig,
        empirical_exit_time,
        excursion_harvest,
        excursion_jump_law,
        exit_place_histogram,
        sample_exit,
        simulate_reflected,
    )
    cfg = SimConfig(dt=args.dt, n_paths=args.n_paths, seed=args.seed, bridge_correction=not args.no_bridge,
                    horizon=args.horizon, workers=args.workers)
    params = {"mode": args.mode, "x1": args.x1, "x2": args.x2, **cfg.__dict__}
    if args.mode == "exit":
        x = InteriorPoint(args.x1, args.x2)
        batch = sample_exit(x, cfg)
        _, times = empirical_exit_time(x, batch=batch)
        hist = exit_place_histogram(batch)
        results = {"side_probability": {"lower": batch.side_probability("lower"),
                                        "upper": batch.side_probability("upper")},
                   "side_probability_exact": {"lower": 1.0 - args.x2 / math.pi, "upper": args.x2 / math.pi},
                   "exit_time": times, "histogram": hist, "diagnostics": batch.diagnostics()}
        csv_path = write_csv(out / "exit_samples.csv", batch.rows(), ["tau", "side", "xi1"])
        json_path = write_json_report(out / "exit_report.json", params, results)
        print(f"P(lower) = {results['side_probability']['lower']:.5f} "
              f"(exact {results['side_probability_exact']['lower']:.5f})")
        return EXIT_OK, [csv_path, json_path]
    records = excursion_harvest(simulate_reflected((args.x1, args.x2), cfg), args.h_min, args.delta)
    law = excursion_jump_law(records)
    csv_path = write_csv(out / "excursions.csv", records.rows(),
                         ["start_x1", "end_x1", "start_side", "end_side", "max_height", "duration"])
    json_path = write_json_report(out / "excursion_report.json", {**params, "h_min": args.h_min,
                                                                   "delta": args.delta},
                                  law, law["errors"])
    print(f"{law['n_records']} excursions, side ratio {law['side_ratio']:.4f} "
          f"(target {law['side_ratio_target']:.4f})")
    return EXIT_OK, [csv_path, json_path]


def _tolerance_overrides(items: Sequence[str]):
    out = {}
    for item in items or ():
        try:
            key, value = item.split("=")
            n, name = key.split(".")
            out.setdefault(int(n), {})[name] = float(value)
        except ValueError:
            raise UsageError(f"tolerance override {item!r} is not of the form N.name=value") from None
    return out


def cmd_acceptance(args, out: Path):
    from .acceptance import CRITERIA, DEFAULT_TOLERANCES, AcceptanceContext, run_acceptance
    numbers = [int(v) for v in _floats(args.criteria)] if args.criteria else sorted(CRITERIA)
    bad = [n for n in numbers if n not in CRITERIA]
    if bad:
        raise UsageError(f"unknown criteria {bad}")
    overrides = _tolerance_overrides(args.tolerance)
    for n, vals in overrides.items():
        unknown = set(vals) - set(DEFAULT_TOLERANCES.get(n, {}))
        if n not in CRITERIA or unknown:
            raise UsageError(f"unknown tolerance for criterion {n}: {sorted(unknown)}")
    ctx = AcceptanceContext(seed=args.seed, workers=args.workers, tolerances=overrides)
    results = run_acceptance(numbers, ctx, echo=lambda s: print(s, flush=True))
    failed = [r.number for r in results if not r.passed]
    path = write_json_report(out / "acceptance.json", {"criteria": numbers, "seed": args.seed,
                                                       "tolerance_overrides": overrides},
                             {"criteria": [r.to_dict() for r in results], "passed": not failed,
                              "failed": failed},
                             [f"criterion {n} failed" for n in failed])
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return (EXIT_TOLERANCE if failed else EXIT_OK), [path]


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default parameters")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, default=20240521)
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    p = _Parser(prog="striplab", description="Kernels, boundary forms and simulations on the strip R x [0, pi].")
    p.add_argument("--version", action="version", version=f"striplab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("eval-kernel", parents=[common], help="tabulate a kernel on a grid")
    s.add_argument("--kernel", required=True, choices=KERNELS)
    s.add_argument("--start", type=float, default=-4.0)
    s.add_argument("--stop", type=float, default=4.0)
    s.add_argument("--step", type=float, default=0.5)
    s.add_argument("--x2", type=float, default=math.pi / 2, help="height of the interior point")
    s.add_argument("--xi1", type=float, default=0.0, help="boundary coordinate (poisson)")
    s.add_argument("--side", default="lower", choices=("lower", "upper"))
    s.add_argument("--eta-side", default="lower", choices=("lower", "upper"))
    s.add_argument("--t", type=float, default=1.0, help="time (p0)")
    s.add_argument("--ell", type=float, default=1.0, help="width scale (k1, k2)")
    s.add_argument("--n-max", type=int, default=64)
    s.add_argument("--k-max", type=int, default=8)
    s.add_argument("--t-switch", type=float, default=0.5)
    s.add_argument("--tail-tol", type=float, default=1e-12)
    s.add_argument("--svg", action="store_true", help="also write an SVG curve")
    s.set_defaults(func=cmd_eval_kernel)

    def quad_flags(s):
        s.add_argument("--order", type=int, default=20)
        s.add_argument("--tol", type=float, default=1e-9)

    s = sub.add_parser("energy", parents=[common], help="evaluate a boundary form")
    s.add_argument("--form", required=True, choices=FORMS)
    s.add_argument("--ell", type=float, default=1.0)
    s.add_argument("--lower", "--f-minus", dest="lower", default="0")
    s.add_argument("--upper", "--f-plus", dest="upper", default="0")
    quad_flags(s)
    s.add_argument("--max-cutoff", type=float, default=2e3)
    s.set_defaults(func=cmd_energy)

    s = sub.add_parser("feller-check", parents=[common], help="alpha-limit of the Feller functional")
    s.add_argument("--phi-lower", default="hat(center=0,halfwidth=1)")
    s.add_argument("--phi-upper", default="0")
    s.add_argument("--psi-lower", default="0")
    s.add_argument("--psi-upper", default="hat(center=0.5,halfwidth=1)")
    s.add_argument("--alphas", default="100,1000,10000")
    s.add_argument("--gap-tol", type=float, default=1e-2)
    quad_flags(s)
    s.set_defaults(func=cmd_feller_check)

    s = sub.add_parser("mosco-scan", parents=[common], help="resolvent gaps along a width schedule")
    s.add_argument("--target", default="0", help="0, a positive width, or inf")
    s.add_argument("--schedule", default="1,0.5,0.25,0.125")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--f", default="gauss(1)", help="registry data on the lower line")
    s.add_argument("--R", type=float, default=8.0)
    s.add_argument("--m", type=int, default=129)
    s.add_argument("--order", type=int, default=20)
    s.add_argument("--max-gap", type=float, default=None, help="fail with code 3 above this final gap")
    s.set_defaults(func=cmd_mosco_scan)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo exits or excursions")
    s.add_argument("--mode", required=True, choices=("exit", "excursions"))
    s.add_argument("--x1", type=float, default=0.0)
    s.add_argument("--x2", type=float, default=math.pi / 2)
    s.add_argument("--dt", type=float, default=1e-4)
    s.add_argument("--n-paths", type=int, default=10_000)
    s.add_argument("--horizon", type=float, default=1000.0)
    s.add_argument("--no-bridge", action="store_true", help="disable the bridge crossing test")
    s.add_argument("--h-min", type=float, default=0.1)
    s.add_argument("--delta", type=float, default=1.0)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("acceptance", parents=[common], help="run the acceptance suite")
    s.add_argument("--criteria", default="", help="comma-separated subset, default all")
    s.add_argument("--tolerance", action="append", default=[],
                   help="override as N.name=value, e.g. 6.ks=0.01")
    s.set_defaults(func=cmd_acceptance)
    return p


def _load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in choices), None)
    if known.config and command is not None:
        cfg = _load_config(known.config)
        subparser = choices[command]
        dests = {a.dest for a in subparser._actions} - {"help", "config"}
        unknown = set(cfg) - dests
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        # config values become defaults, so explicit flags win
        for action in subparser._actions:
            if action.dest in cfg:
                action.required = False
                if action.choices is not None and cfg[action.dest] not in action.choices:
                    raise UsageError(f"config value {cfg[action.dest]!r} for {action.dest} is not one of "
                                     f"{list(action.choices)}")
        subparser.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"striplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out or os.environ.get("STRIPLAB_OUT") or "striplab-out")
    params = {k: v for k, v in vars(args).items() if k != "func"}
    try:
        code, artifacts = args.func(args, out)
    except UsageError as exc:
        print(f"striplab: error: {exc}", file=sys.stderr)
        write_manifest(out, args.command, params, [], EXIT_USAGE)
        return EXIT_USAGE
    write_manifest(out, args.command, to_jsonable(params), artifacts, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
