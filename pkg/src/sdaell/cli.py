"""Command-line interface.

Exit codes: 0 success, 1 numerical or check failure, 2 usage or
configuration error.
"""
import argparse
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, brownian, problems
from .convergence import ConvergenceConfig, compare_exact, run_study
from .errors import InvalidResolution, SdaeError, UnknownProblem
from .model import assess, grid_samples
from .pencil import DEFAULT_TOL
from .stepper import SCHEMES, SolveOptions, integrate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_levels(text):
    """``"6..12"`` means 2**6 .. 2**12; ``"64,128,256"`` lists N directly."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split("..", 1))
            if lo > hi or lo < 0:
                raise ValueError
            return tuple(2**k for k in range(lo, hi + 1))
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid levels {text!r}; use 'a..b' (exponents) or 'N1,N2,...'"
        ) from None


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sdaell",
        description="Local-linearization solver for index-1 stochastic DAEs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--problem", default="paper3x3", help="registered problem name")
        p.add_argument("--horizon", type=float, default=None, help="override final time T")
        p.add_argument("--tol-identity", type=float, default=DEFAULT_TOL.identity_tol)
        p.add_argument("--tol-minsv", type=float, default=1e-12,
                       help="relative smallest-singular-value threshold")
        if seed:
            p.add_argument("--seed", type=int, default=42)

    sub.add_parser("list", help="list registered problems")

    p_check = sub.add_parser("check", help="sampled assumption checks")
    common(p_check, seed=False)
    p_check.add_argument("--grid", type=_positive_int, default=5,
                         help="grid points per state axis")
    p_check.add_argument("--box", type=float, default=3.0,
                         help="half-width of the sampled state box")
    p_check.add_argument("--times", type=_positive_int, default=3,
                         help="number of sampled times in [0, T]")
    p_check.add_argument("--k-monotone", type=float, default=2.0)
    p_check.add_argument("--out", type=Path, default=None, help="also write the report here")

    p_sim = sub.add_parser("simulate", help="integrate one path")
    common(p_sim)
    p_sim.add_argument("--scheme", choices=SCHEMES, default="ll")
    p_sim.add_argument("--n", type=_positive_int, default=2**10, help="number of steps (power of two)")
    p_sim.add_argument("--out", type=Path, default=Path("trajectory.csv"))

    p_conv = sub.add_parser("converge", help="pathwise convergence study")
    common(p_conv)
    p_conv.add_argument("--scheme", choices=("ll", "decomposed"), default="ll")
    p_conv.add_argument("--n-ref", type=_positive_int, default=2**16)
    p_conv.add_argument("--levels", type=parse_levels, default=parse_levels("6..12"))
    p_conv.add_argument("--samples", type=_positive_int, default=3)
    p_conv.add_argument("--exact", action="store_true",
                        help="measure errors against the problem's exact solution")
    p_conv.add_argument("--workers", type=_positive_int, default=1)
    p_conv.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p_conv.add_argument("--out", type=Path, default=Path("convergence.csv"),
                        help="report CSV; sibling files share its stem")
    return parser


def _options(args):
    tol = replace(DEFAULT_TOL, identity_tol=args.tol_identity)
    return SolveOptions(min_sv_tol=args.tol_minsv, tol=tol)


def _write_manifest(path, command, problem, parameters, outputs):
    manifest = {
        "command": command,
        "problem_name": problem,
        "parameters": parameters,
        "outputs": [str(o) for o in outputs],
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _manifest_path(out):
    return out.with_name(out.stem + ".manifest.json")


def cmd_list(args, registry, out):
    for name in registry.names():
        print(f"{name}: {registry.get(name).notes}", file=out)
    return EXIT_OK


def cmd_check(args, registry, out):
    entry = registry.get(args.problem, args.horizon)
    p = entry.problem
    opts = _options(args)
    t_samples = list(np.linspace(0.0, p.horizon_T, args.times))
    x_samples = grid_samples(p.dim_d, args.box, args.grid)
    report = assess(p, opts.derivative_cfg, opts.tol, t_samples=t_samples,
                    x_samples=x_samples, k_const=args.k_monotone)
    verdict = "all checks passed" if report.all_ok else "one or more checks FAILED"
    text = f"{report.details}\n{verdict}\n"
    out.write(text)
    if args.out is not None:
        args.out.write_text(text)
    return EXIT_OK if report.all_ok else EXIT_FAIL


def cmd_simulate(args, registry, out):
    entry = registry.get(args.problem, args.horizon)
    p = entry.problem
    lattice = brownian.generate(args.seed, args.n, p.dim_noise, p.horizon_T)
    traj = integrate(p, _options(args), lattice, args.scheme)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    traj.to_csv(args.out)
    params = {
        "scheme": args.scheme, "N": args.n, "seed": args.seed, "T": p.horizon_T,
        "tol_identity": args.tol_identity, "tol_minsv": args.tol_minsv,
    }
    _write_manifest(_manifest_path(args.out), "simulate", p.name, params, [args.out])
    print(f"wrote {traj.n_steps + 1} points to {args.out}", file=out)
    return EXIT_OK


def cmd_converge(args, registry, out):
    entry = registry.get(args.problem, args.horizon)
    p = entry.problem
    try:
        cfg = ConvergenceConfig(n_ref=args.n_ref, levels=args.levels, n_samples=args.samples,
                                base_seed=args.seed, scheme=args.scheme)
    except ValueError as err:
        raise UsageError(str(err)) from None
    if args.exact and entry.exact is None:
        raise UsageError(f"problem {entry.name!r} has no exact solution")
    opts = _options(args)
    if args.exact:
        report = compare_exact(p, entry.exact, cfg, opts, workers=args.workers)
    else:
        report = run_study(p, cfg, opts, workers=args.workers)

    stem = args.out.with_suffix("")
    stem.parent.mkdir(parents=True, exist_ok=True)
    report_csv = stem.with_suffix(".csv")
    rates_csv = stem.with_name(stem.name + "_rates.csv")
    plot_csv = stem.with_name(stem.name + "_plot.csv")
    report.to_csv(report_csv)
    report.rates_to_csv(rates_csv)
    report.plot_data_to_csv(plot_csv)
    outputs = [report_csv, rates_csv, plot_csv]
    if not args.no_figure:
        from .plotting import plot_convergence

        title = f"{p.name}: {'exact' if args.exact else 'reference N=' + str(cfg.n_ref)}"
        outputs.append(plot_convergence(report, stem.with_suffix(".png"), title=title))
    params = {
        "scheme": cfg.scheme, "n_ref": cfg.n_ref, "levels": list(cfg.levels),
        "samples": cfg.n_samples, "seed": cfg.base_seed, "T": p.horizon_T,
        "exact": bool(args.exact), "tol_identity": args.tol_identity,
        "tol_minsv": args.tol_minsv,
    }
    _write_manifest(_manifest_path(report_csv), "converge", p.name, params, outputs)

    for s in report.per_sample:
        rate = "undefined" if s.rate is None else f"{s.rate:.4f}"
        line = f"sample {s.sample} (seed {s.seed}): rate {rate}"
        if s.note:
            line += f"  [{s.note}]"
        print(line, file=out)
    mean = report.mean_rate
    print(f"mean rate: {'undefined' if mean is None else f'{mean:.4f}'}", file=out)
    return EXIT_OK


COMMANDS = {
    "list": cmd_list,
    "check": cmd_check,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
}


def main(argv=None, registry=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    registry = problems.REGISTRY if registry is None else registry
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args, registry, out)
    except (UnknownProblem, UsageError, InvalidResolution) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except SdaeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_FAIL


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
