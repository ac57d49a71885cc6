"""Command-line front end.

Exit status: 0 on success or a passing verification, 1 when a verification
fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys

import numpy as np

from . import __version__, bounds, packing, verify, volume
from .errors import GrassmannError, InsufficientSamples, NoRoot

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_report(args, parameters: dict, results) -> str:
    doc = {
        "tool_version": __version__,
        "seed": args.seed,
        "parameters": parameters,
        "results": results,
    }
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="\n") as fh:
            yield fh


def cmd_bounds(args) -> int:
    k = args.k
    root_k = math.sqrt(k)
    delta_max = root_k if args.delta_max is None else args.delta_max
    delta_min = delta_max / args.steps if args.delta_min is None else args.delta_min
    if k < 1 or args.steps < 1:
        raise UsageError("k and steps must be positive")
    if not 0 < delta_min <= delta_max <= root_k * (1 + 1e-15):
        raise UsageError(f"need 0 < delta-min <= delta-max <= sqrt({k}) = {root_k:.6g}")
    grid = np.linspace(delta_min, delta_max, args.steps)
    table = bounds.emit_rate_table(k, grid)
    with _output(args.output) as fh:
        fh.write(bounds.rate_table_csv(table))
    return EXIT_OK


def cmd_crossover(args) -> int:
    ks = args.k
    if not ks or any(k < 2 for k in ks):
        raise UsageError("crossings are defined only for k >= 2")
    which = args.which
    columns = ["k"]
    if which in ("both", "rankin-lp"):
        columns.append("delta_star")
    if which in ("both", "lp-hamming"):
        columns.append("lp_hamming")
    lines = [",".join(columns)]
    status = EXIT_OK
    for k in ks:
        row = [str(k)]
        solvers = []
        if which in ("both", "rankin-lp"):
            solvers.append(bounds.crossover_delta_star)
        if which in ("both", "lp-hamming"):
            solvers.append(bounds.crossover_lp_hamming)
        for solve in solvers:
            try:
                row.append(f"{solve(k):.4g}")
            except NoRoot:
                row.append("NoRoot")
                status = EXIT_FAIL
        lines.append(",".join(row))
    with _output(args.output) as fh:
        fh.write("\n".join(lines) + "\n")
    return status


def cmd_verify(args) -> int:
    trials = args.trials
    if trials is None:
        trials = {"isometry": 1000, "density": 100, "rankin-ineq": 10_000, "counting": 200}[args.suite]
    if trials < 1:
        raise UsageError("trials must be positive")
    results = verify.run_suite(args.suite, trials, args.seed, args.threads)
    params = {"suite": args.suite, "trials": trials}
    with _output(args.output) as fh:
        fh.write(json_report(args, params, results))
    return EXIT_OK if results["passed"] else EXIT_FAIL


def cmd_volume(args) -> int:
    if not 0 < args.ratio < 1:
        raise UsageError("ratio must lie in (0, 1)")
    if any(n <= 2 * args.k for n in args.n):
        raise UsageError("every n must exceed 2k")
    if args.samples < 100:
        raise UsageError("at least 100 samples are required")
    trace = volume.lemma2_exponent_trace(
        args.ratio,
        args.k,
        args.n,
        args.samples,
        rng=args.seed,
        method=args.method,
        threads=args.threads,
        strict=False,
    )
    with _output(args.output) as fh:
        fh.write(",".join(volume.TRACE_COLUMNS) + "\n")
        for pt in trace:
            norm_log = "InsufficientSamples" if pt.insufficient else f"{pt.normalized_log:.12g}"
            fh.write(f"{pt.n},{pt.samples},{pt.mu_hat:.12g},{pt.stderr:.12g},{norm_log}\n")
    return EXIT_OK


def cmd_pack(args) -> int:
    M, k, n = args.M, args.k, args.n
    if M < 2 or k < 1 or n < 2:
        raise UsageError("need M >= 2, k >= 1, n >= 2")
    if 2 * k > n:
        raise UsageError("packing needs k <= n/2")
    if args.restarts < 1 or args.iterations < 1:
        raise UsageError("restarts and iterations must be positive")
    result = packing.best_of_restarts(
        M, k, n, args.restarts, args.iterations, rng=args.seed, allow_large_k=True
    )
    code = result.code
    if args.code_out:
        with _output(args.code_out) as fh:
            packing.write_code(code, fh)
    report = packing.bound_report(code)
    report["converged"] = result.converged
    params = {"M": M, "k": k, "n": n, "restarts": args.restarts, "iterations": args.iterations}
    with _output(args.output) as fh:
        fh.write(json_report(args, params, report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (1 = sequential)")
    common.add_argument("--output", "-o", default=None, help="output path (default stdout)")

    parser = argparse.ArgumentParser(prog="grasscodes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", parents=[common], help="rate bounds table as CSV")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--delta-min", type=float)
    p.add_argument("--delta-max", type=float)
    p.add_argument("--steps", type=int, default=200)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("crossover", parents=[common], help="crossing points of the bounds")
    p.add_argument("--k", type=_int_list, default=[2, 3, 4, 5, 10])
    p.add_argument("--which", choices=("both", "rankin-lp", "lp-hamming"), default="both")
    p.set_defaults(func=cmd_crossover)

    p = sub.add_parser("verify", parents=[common], help="randomized verification campaigns")
    p.add_argument("suite", choices=verify.SUITES)
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("volume", parents=[common], help="ball-mass exponent trace as CSV")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n", type=_int_list, default=[8, 16, 32])
    p.add_argument("--ratio", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--method", choices=("weighted", "uniform"), default="weighted")
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("pack", parents=[common], help="optimize a code and report its bounds")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--code-out", default=None, help="write the best code in text format")
    p.set_defaults(func=cmd_pack)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, GrassmannError) as exc:
        if isinstance(exc, InsufficientSamples):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
        parser.error(str(exc))  # exits with status 2


if __name__ == "__main__":
    sys.exit(main())
