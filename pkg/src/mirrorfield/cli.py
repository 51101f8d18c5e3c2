"""Command-line entry point: ``mirrorfield <subcommand> [options]``.

Exit codes: 0 success, 1 a selftest check failed, 2 invalid input,
3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, acceptance, entropy, measurement, qei, spectrum, unruh
from .errors import DomainError, MirrorfieldError, NonConvergenceError
from .io import format_csv, to_json
from .stress_tensor import flux_profile
from .trajectory import make_trajectory

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
_SKIP_ECHO = {"out", "config", "func", "command"}


def parse_grid(text: str) -> np.ndarray:
    """'lo:hi:n' or 'lo:hi:n:log'; a comma list is taken literally."""
    if "," in text or ":" not in text:
        try:
            return np.array([float(v) for v in text.split(",") if v.strip()])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad value list {text!r}") from None
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:n[:log], got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if n < 2:
        raise argparse.ArgumentTypeError("grid needs n >= 2")
    spacing = parts[3] if len(parts) == 4 else "linear"
    if spacing == "log":
        if lo <= 0 or hi <= 0:
            raise argparse.ArgumentTypeError("log grid needs positive bounds")
        return np.geomspace(lo, hi, n)
    if spacing != "linear":
        raise argparse.ArgumentTypeError(f"unknown grid spacing {spacing!r}")
    return np.linspace(lo, hi, n)


def parse_span(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    return lo, hi


def read_config(path: str) -> dict:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


# ---------------------------------------------------------------- helpers

def _meta(args) -> list[str]:
    items = {k: v for k, v in vars(args).items() if k not in _SKIP_ECHO}
    echo = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(items.items()))
    return [f"mirrorfield {__version__} {args.command}", f"config {echo}", f"seed {args.seed}"]


def _fmt(v) -> str:
    if isinstance(v, np.ndarray):
        return f"[{v[0]:.6g}..{v[-1]:.6g}]x{v.size}" if v.size else "[]"
    return str(v)


def _emit(args, text: str, summary: str) -> None:
    if args.out in (None, "-"):
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    else:
        Path(args.out).write_text(text)
        print(summary)


def _trajectory(args):
    return make_trajectory(args.trajectory, kappa=args.kappa, h=args.h, table=args.table)


def _units(args) -> tuple[float, float]:
    """(length unit, flux unit): 1/kappa and kappa^2 unless --absolute."""
    if args.absolute:
        return 1.0, 1.0
    return 1.0 / args.kappa, args.kappa**2


# ---------------------------------------------------------------- commands

def cmd_flux(args) -> int:
    traj = _trajectory(args)
    length, scale = _units(args)
    grid = args.grid if args.grid is not None else np.linspace(0.0, 20.0, 201)
    prof = flux_profile(traj, grid * length, scale=scale)
    prof.grid = prof.grid / length
    prof.deltas = [(p / length, c) for p, c in prof.deltas]
    text = prof.to_csv(header_lines=_meta(args))
    if args.format == "json":
        text = to_json({"grid": prof.grid, "flux": prof.values, "deltas": prof.deltas})
    i = int(np.argmin(np.abs(prof.grid - 0.5 * (prof.grid[0] + prof.grid[-1]))))
    _emit(args, text, f"flux: {prof.grid.size} points, flux({prof.grid[i]:.6g}) = {prof.values[i]:.6e}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    traj = _trajectory(args)
    length, _ = _units(args)
    packet = spectrum.WavePacket(args.center * length, args.width * length)
    omegas = args.omegas / length
    spec = spectrum.spectrum(traj, omegas, packet, workers=args.workers)
    rows = [(w * length, n, args.center, args.width) for w, n in zip(omegas, spec.occupations)]
    flagged = any(r.flagged for r in spec.reports)
    meta = _meta(args) + [f"packet overlaps a non-radiating epoch: {str(flagged).lower()}"]
    if args.format == "json":
        text = to_json({"omega": omegas * length, "occupation": spec.occupations,
                        "normalized": [r.normalized for r in spec.reports],
                        "packet_center": args.center, "packet_width": args.width,
                        "flagged": flagged})
    else:
        text = format_csv(["omega", "occupation", "packet_center", "packet_width"], rows, meta=meta)
    summary = f"spectrum: {len(rows)} frequencies"
    if len(rows) >= 2 and spec.occupations[1] > 0:
        kappa = 1.0 if not args.absolute else args.kappa
        planck = spectrum.planck(rows[0][0], kappa) / spectrum.planck(rows[1][0], kappa)
        summary += f", n(w0)/n(w1) = {spec.occupations[0] / spec.occupations[1]:.6g} (Planck {planck:.6g})"
    _emit(args, text, summary)
    return EXIT_OK


def cmd_entropy(args) -> int:
    traj = _trajectory(args)
    if args.grid is not None:
        rows = entropy.entropy_sweep(traj, args.x1, args.grid, eps=args.eps1)
        text = entropy.write_sweep_csv(rows, meta=_meta(args))
        if args.format == "json":
            text = to_json({"x1": args.x1, "rows": rows})
        _emit(args, text, f"entropy: {len(rows)} intervals from x1 = {args.x1:g}")
        return EXIT_OK
    spec = entropy.IntervalSpec(args.x1, args.x2, args.eps1, args.eps2)
    rep = entropy.entropy_report(traj, spec)
    if args.format == "csv":
        text = format_csv(["x1", "x2", "eps1", "eps2", "entropy", "renormalized_entropy"],
                          [(args.x1, args.x2, args.eps1, args.eps2, rep.raw, rep.renormalized)],
                          meta=_meta(args))
    else:
        text = to_json(rep)
    _emit(args, text, f"entropy: S = {rep.raw:.12e}, S_ren = {rep.renormalized:.12e}")
    return EXIT_OK


def cmd_ssa(args) -> int:
    if args.counterexample:
        rep = entropy.appendix2_counterexample(eps=args.eps if args.eps else 1e-6 * args.l,
                                               l=args.l, base=args.base)
    else:
        rep = entropy.ssa_check(_trajectory(args), args.base, args.l, args.kind, eps=args.eps)
    if args.format == "csv":
        text = format_csv(["S_AB", "S_BC", "S_B", "S_ABC", "delta", "cross_ratio_delta"],
                          [(rep.S_AB, rep.S_BC, rep.S_B, rep.S_ABC, rep.delta, rep.cross_ratio_delta)],
                          meta=_meta(args))
    else:
        text = to_json(rep)
    _emit(args, text, f"ssa ({rep.kind}): delta = {rep.delta:.12e}")
    return EXIT_OK


def _window(args):
    if args.window_table:
        return measurement.load_window(args.window_table)
    lo, hi = args.window
    return measurement.bump_window(lo, hi, args.amplitude)


def cmd_measure(args) -> int:
    window = _window(args)
    if args.thermal_gain:
        traj = _trajectory(args)
        grid = args.grid if args.grid is not None else np.linspace(10.0, 25.0, 16)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            g_minus, g_plus = measurement.thermal_gain(traj, window, grid, outcome=args.outcome)
        meta = _meta(args) + [f"warning {w.message}" for w in caught]
        text = format_csv(["x_L", "gain_minus", "gain_plus"], np.column_stack([grid, g_minus, g_plus]),
                          meta=meta)
        rate = float(np.polyfit(grid, np.log(np.abs(g_minus)), 1)[0]) if np.all(g_minus != 0) else 0.0
        _emit(args, text, f"measure: gain decay rate {rate:.6f}, final gain_plus {g_plus[-1]:.6e}")
        return EXIT_OK
    grid = args.grid if args.grid is not None else np.geomspace(10.0, 1000.0, 50)
    sweep = measurement.conditioned_sweep(window, grid, damped=args.damped)
    text = measurement.sweep_csv(sweep, meta=_meta(args))
    total = np.max(np.abs(sweep[0].values + sweep[1].values))
    summary = f"measure: {grid.size} points, max |sum over outcomes| {total:.3e}"
    if not window.is_zero():
        slope = float(np.polyfit(np.log(grid - window.x_E), np.log(np.abs(sweep[1].values)), 1)[0])
        summary += f", decay slope {slope:.4f}"
    _emit(args, text, summary)
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.grid is not None:
        reps = [qei.firewall_bound(float(E), args.r, args.l) for E in args.grid]
        rows = [(r.E_fw, r.bound_9, r.satisfied, r.E_plus_lower, r.E_tot_lower) for r in reps]
        text = format_csv(["E_fw", "bound", "satisfied", "E_plus_lower", "E_tot_lower"], rows,
                          meta=_meta(args))
        flips = sum(a.satisfied != b.satisfied for a, b in zip(reps, reps[1:]))
        _emit(args, text, f"bound: {len(reps)} energies, bound = {reps[0].bound_9:.12e}, {flips} flip(s)")
        return EXIT_OK
    rep = qei.firewall_bound(args.E_fw, args.r, args.l)
    _emit(args, to_json(rep), f"bound: E_fw < {rep.bound_9:.12e} is {str(rep.satisfied).lower()}, "
                              f"E_plus >= {rep.E_plus_lower:.12e}")
    return EXIT_OK


def cmd_appendix3(args) -> int:
    prof = qei.squeezed_profile(args.r, args.E_fw, args.l, args.c)
    rep = qei.verify_appendix3(prof, mollify=args.mollify)
    _emit(args, to_json(rep), f"appendix3: E_tot = {rep.E_tot_quadrature:.12e} "
                              f"(closed form {rep.E_tot_closed_form:.12e}), delta = {rep.delta_jump:.12e}")
    return EXIT_OK


def cmd_unruh(args) -> int:
    mode = unruh.unruh_mode(args.omega, args.a, args.N)
    if args.format == "json":
        text = to_json(mode.summary())
    else:
        text = mode.to_csv(meta=_meta(args) + [f"entropy {mode.entropy:.12e}"])
    _emit(args, text, f"unruh: S = {mode.entropy:.12e} over {mode.schmidt.size} levels")
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = acceptance.run_all(only=set(args.only) if args.only else None)
    failed = [r for r in results if not r.passed]
    print(f"selftest: {len(results) - len(failed)}/{len(results)} passed")
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, trajectory: str = "thermal", fmt: str = "csv") -> None:
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--out", help="output path ('-' for stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    p.add_argument("--seed", type=int, default=0, help="recorded in every output")
    p.add_argument("--trajectory", default=trajectory,
                   choices=("thermal", "pulse", "identity", "table"))
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--h", type=float, default=50.0, help="pulse duration")
    p.add_argument("--table", help="two-column x- x+ table for --trajectory table")
    p.add_argument("--absolute", action="store_true",
                   help="coordinates and values in absolute units instead of kappa units")
    p.add_argument("--grid", type=parse_grid, default=None, help="lo:hi:n[:log] or a comma list")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mirrorfield", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mirrorfield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flux", help="energy flux on a grid")
    _common(p)
    p.set_defaults(func=cmd_flux)

    p = sub.add_parser("spectrum", help="wave-packet occupation numbers")
    _common(p, trajectory="pulse")
    p.add_argument("--omegas", type=parse_grid, default=np.array([0.5, 1.0, 2.0]))
    p.add_argument("--center", type=float, default=25.0)
    p.add_argument("--width", type=float, default=10.0)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("entropy", help="interval entropies (sweep over x2 with --grid)")
    _common(p, fmt="json")
    p.add_argument("--x1", type=float, default=-30.0)
    p.add_argument("--x2", type=float, default=5.0)
    p.add_argument("--eps1", type=float, default=1e-2)
    p.add_argument("--eps2", type=float, default=1e-2)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("ssa", help="strong-subadditivity combination of three blocks")
    _common(p, fmt="json")
    p.add_argument("--base", type=float, default=0.0)
    p.add_argument("--l", type=float, default=1.0)
    p.add_argument("--kind", choices=("raw", "renormalized"), default="raw")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--counterexample", action="store_true",
                   help="renormalized combination on a map squeezing the first block")
    p.set_defaults(func=cmd_ssa)

    p = sub.add_parser("measure", help="one-bit conditioned flux or thermal gain")
    _common(p)
    p.add_argument("--window", type=parse_span, default=(-2.0, -1.0), help="bump support lo:hi")
    p.add_argument("--window-table", help="two-column x lambda table")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--damped", action="store_true", help="include the exp(-2<X^2>) factor")
    p.add_argument("--thermal-gain", action="store_true")
    p.add_argument("--outcome", type=int, choices=(0, 1), default=1)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("bound", help="firewall energy bound (sweep E_fw with --grid)")
    _common(p, fmt="json")
    p.add_argument("--E-fw", dest="E_fw", type=float, default=0.01)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--l", type=float, default=1.0)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("appendix3", help="squeezed-state shock: energies and saturation")
    _common(p, fmt="json")
    p.add_argument("--E-fw", dest="E_fw", type=float, default=0.01)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--l", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--mollify", action="store_true")
    p.set_defaults(func=cmd_appendix3)

    p = sub.add_parser("unruh", help="Schmidt weights of an Unruh-mode pair")
    _common(p)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1e6)
    p.add_argument("--N", type=int, default=3)
    p.set_defaults(func=cmd_unruh)

    p = sub.add_parser("selftest", help="run the acceptance checks")
    p.add_argument("--only", type=int, nargs="*", help="criterion numbers")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest, out=None, seed=0)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    cfg = read_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in cfg.items():
        if key not in actions or key in ("config", "help"):
            raise DomainError(f"unknown config key {key!r} for {args.command}")
        act = actions[key]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            conv = act.type or str
            try:
                defaults[key] = conv(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise DomainError(f"config {key}: {exc}") from None
            if act.choices is not None and defaults[key] not in act.choices:
                raise DomainError(f"config {key}: {raw!r} not in {sorted(act.choices)}")
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (DomainError, OSError) as exc:
        print(f"mirrorfield: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if getattr(args, "kappa", 1.0) <= 0 or not math.isfinite(getattr(args, "kappa", 1.0)):
        print("mirrorfield: error: kappa must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except NonConvergenceError as exc:
        print(f"mirrorfield: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MirrorfieldError, ValueError, OSError) as exc:
        print(f"mirrorfield: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
