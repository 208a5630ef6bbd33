"""Command-line entry point: ``cpdeconv <command> ...``.

Exit codes: 0 success/converged, 1 line-search failure, 2 usage error,
3 dimension mismatch, 4 stopped at max_iter, 5 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import formats
from .palm import BacktrackError, SolverConfig, solve
from .sim import TABLE_SCALE, DegradationSpec, degrade, psnr, rmse, synth_lowrank
from .sweep import rank_sweep, sweep_to_csv
from .tensor_model import DimensionMismatch, parameter_count, reconstruct_cube

EXIT_OK = 0
EXIT_BACKTRACK = 1
EXIT_USAGE = 2
EXIT_DIMENSION = 3
EXIT_MAX_ITER = 4
EXIT_IO = 5

log = logging.getLogger("cpdeconv")


class UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _rank_list(text):
    try:
        ranks = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rank list {text!r}") from None
    if not ranks or min(ranks) < 1:
        raise argparse.ArgumentTypeError(f"ranks must be positive integers, got {text!r}")
    return ranks


def _add_degradation_args(p):
    d = DegradationSpec()
    p.add_argument("--kernel-size", type=int, default=d.kernel_size, help="odd Gaussian kernel side (default: %(default)s)")
    p.add_argument("--kernel-sigma", type=float, default=d.kernel_sigma, help="Gaussian kernel std (default: %(default)s)")
    p.add_argument("--noise-sigma", type=float, default=d.noise_sigma, help="additive noise std (default: %(default)s)")
    p.add_argument("--seed", type=int, default=d.seed, help="noise seed (default: %(default)s)")


def _spec_from(args) -> DegradationSpec:
    try:
        return DegradationSpec(args.kernel_size, args.kernel_sigma, args.noise_sigma, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_synth(args):
    cube, factors = synth_lowrank(args.p, args.q, args.n, args.rank, args.seed, args.smoothness)
    formats.write_cube(args.out_cube, cube)
    if args.out_factors:
        formats.write_factors(args.out_factors, factors)
    return EXIT_OK


def cmd_degrade(args):
    clean = formats.read_cube(args.input)
    spec = _spec_from(args)
    if spec.kernel_size > min(clean.p, clean.q):
        raise UsageError(f"kernel size {spec.kernel_size} larger than the image plane ({clean.p}, {clean.q})")
    observed, kernels = degrade(clean, spec)
    formats.write_cube(args.out_cube, observed)
    formats.write_kernels(args.out_kernels, kernels)
    return EXIT_OK


def cmd_solve(args):
    observed = formats.read_cube(args.observed)
    kernels = formats.read_kernels(args.kernels)
    config = formats.read_config(args.config)
    init = formats.read_factors(args.init_factors) if args.init_factors else None
    reference = formats.read_cube(args.reference) if args.reference else None
    report = solve(observed, kernels, config, init=init, reference=reference)
    formats.write_factors(args.out_factors, report.final_factors)
    formats.write_report(args.report, report)
    summary = {
        "iterations": report.iterations_run,
        "stop_reason": report.stop_reason.value,
        "objective": report.objective_trace[-1],
    }
    if reference is not None:
        summary["best_psnr"] = report.best_psnr
    print(json.dumps(summary))
    return EXIT_OK if report.converged else EXIT_MAX_ITER


def cmd_reconstruct(args):
    factors = formats.read_factors(args.factors)
    formats.write_cube(args.out, reconstruct_cube(factors))
    return EXIT_OK


def cmd_metrics(args):
    ref = formats.read_cube(args.ref)
    test = formats.read_cube(args.test)
    err = rmse(ref, test)
    out = {
        "rmse": err * TABLE_SCALE if args.table_units else err,
        "psnr": psnr(ref, test, peak=args.peak),
    }
    if args.rank is not None:
        out["params"] = parameter_count(ref.p, ref.q, ref.n, args.rank)
    text = json.dumps(out, indent=2)
    if args.out:
        formats.atomic_write(args.out, (text + "\n").encode())
    print(text)
    return EXIT_OK


def cmd_rank_sweep(args):
    clean = formats.read_cube(args.clean)
    template = formats.read_config(args.config)
    rows = rank_sweep(clean, _spec_from(args), template, args.ranks)
    formats.atomic_write(args.out, sweep_to_csv(rows).encode())
    return EXIT_OK


def cmd_config(args):
    text = formats.format_config(SolverConfig(rank=args.rank))
    if args.out:
        formats.atomic_write(args.out, text.encode())
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpdeconv", description="Low-rank CPD deconvolution of hyperspectral cubes.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic low-rank cube and its factors")
    p.add_argument("--p", type=_positive_int, required=True)
    p.add_argument("--q", type=_positive_int, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--rank", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--smoothness", type=int, default=32, help="moving-average passes on A, B (default: %(default)s)")
    p.add_argument("--out-cube", required=True)
    p.add_argument("--out-factors")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("degrade", help="blur and add noise to a cube")
    p.add_argument("--in", dest="input", required=True)
    _add_degradation_args(p)
    p.add_argument("--out-cube", required=True)
    p.add_argument("--out-kernels", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("solve", help="estimate CPD factors from an observed cube")
    p.add_argument("--observed", required=True)
    p.add_argument("--kernels", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out-factors", required=True)
    p.add_argument("--report", required=True, help="per-iteration CSV trace")
    p.add_argument("--init-factors", help="start from these factors instead of a random draw")
    p.add_argument("--reference", help="clean cube for PSNR tracking")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("reconstruct", help="expand factors into a full cube")
    p.add_argument("--factors", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("metrics", help="RMSE/PSNR between two cubes, as JSON")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--table-units", action="store_true", help="report RMSE on a 0-255 scale")
    p.add_argument("--peak", type=float, default=1.0)
    p.add_argument("--rank", type=_positive_int, help="also report the parameter count at this rank")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("rank-sweep", help="best PSNR and parameter count versus rank")
    p.add_argument("--clean", required=True)
    p.add_argument("--config", required=True, help="config template; its rank is overridden")
    p.add_argument("--ranks", type=_rank_list, required=True, help="comma-separated, e.g. 1,2,3,5")
    _add_degradation_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank_sweep)

    p = sub.add_parser("config", help="print the default config file")
    p.add_argument("--rank", type=_positive_int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, formats.ConfigError) as exc:
        parser.error(str(exc))
    except DimensionMismatch as exc:
        print(f"cpdeconv: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except BacktrackError as exc:
        print(f"cpdeconv: {exc}", file=sys.stderr)
        return EXIT_BACKTRACK
    except OSError as exc:
        print(f"cpdeconv: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
