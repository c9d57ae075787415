"""Command line front end.

Subcommands
-----------
moments    closed-form posterior means, variances, standard deviations
           and skewness for given counts
integrate  numerical integral of prod p_i^{m_i} times an optional
           prior expression over the simplex
compare    exact closed form vs separated quadrature vs tensor-grid
           quadrature vs (n <= 5) the brute-force nested oracle, with
           a tolerance gate on the pairwise deviations

The machine-readable run report (JSON, format_version 1) is the only
thing written to stdout; diagnostics go to stderr, so pipelines stay
clean. Floats serialize in shortest round-trip form, which preserves
all 17 significant digits on re-parse. A fixed invocation (including
the seed) produces a byte-identical report except for the wall-time
diagnostic.

Exit codes: 0 success, 2 malformed input, 3 numerical failure,
4 tolerance breach in compare.
"""

import argparse
import json
import math
import sys
import time

import numpy as np

from .expressions import EvaluationError, ExpressionSyntaxError, evaluate_batch, parse
from .moments import (
    as_exponent_vector,
    log_norm_integral,
    means,
    moment,
    skewness,
    std_dev,
    variance,
)
from .quadrature import (
    IntegrationError,
    QuadratureSpec,
    integrate_separable,
    integrate_simplex_log,
    nested_oracle,
    power_log_integrand,
    resolve_eval_budget,
)

__all__ = ["main", "build_parser", "cmd_moments", "cmd_integrate", "cmd_compare"]

FORMAT_VERSION = 1

_DEFAULT_TOL = 1e-8
_DEFAULT_NODES = 32


class _InputError(Exception):
    pass


def build_parser():
    parser = argparse.ArgumentParser(
        prog="simplexquad",
        description=(
            "Posterior moments of multinomial bin probabilities and "
            "numerical integration over the probability simplex."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument(
            "--counts",
            help="comma-separated counts, one per bin, each > -1",
        )
        group.add_argument(
            "--counts-file",
            help="file with counts, one per line; '#' starts a comment",
        )
        p.add_argument(
            "--plain",
            action="store_true",
            help="print bare numbers one per line instead of the JSON report",
        )

    p_moments = sub.add_parser(
        "moments", help="closed-form posterior moments for given counts"
    )
    add_common(p_moments)
    p_moments.add_argument(
        "--moment",
        help=(
            "comma list of 1-based bin indices for E[prod p_i]; repeat an "
            "index to raise its power (1,1 is the second moment of bin 1)"
        ),
    )

    p_integrate = sub.add_parser(
        "integrate",
        help="integrate prod p_i^{m_i} times a prior over the simplex",
    )
    add_common(p_integrate)
    p_integrate.add_argument(
        "--prior",
        default="1",
        help="prior weight expression over p1..pn (default: 1)",
    )
    p_integrate.add_argument(
        "--scheme",
        choices=("gauss", "mc", "oracle"),
        default="gauss",
        help="gauss: tensor Gauss grid; mc: Monte Carlo; oracle: brute force",
    )
    p_integrate.add_argument("--nodes", type=int, default=_DEFAULT_NODES)
    p_integrate.add_argument("--samples", type=int, default=100_000)
    p_integrate.add_argument("--seed", type=int, default=0)
    p_integrate.add_argument(
        "--tol",
        type=float,
        default=_DEFAULT_TOL,
        help="relative refinement target for --scheme oracle",
    )
    p_integrate.add_argument(
        "--moment",
        help="comma list of 1-based bin indices for a prior-weighted moment",
    )

    p_compare = sub.add_parser(
        "compare",
        help="cross-check the exact, separable, grid and oracle routes",
    )
    add_common(p_compare)
    p_compare.add_argument("--nodes", type=int, default=_DEFAULT_NODES)
    p_compare.add_argument(
        "--tol",
        type=float,
        default=_DEFAULT_TOL,
        help="largest tolerated pairwise relative deviation",
    )
    return parser


def _parse_counts_text(text):
    pieces = [piece.strip() for piece in text.split(",")]
    if not pieces or any(not piece for piece in pieces):
        raise _InputError(
            f"counts must be comma-separated numbers, got {text!r}"
        )
    try:
        return [float(piece) for piece in pieces]
    except ValueError:
        raise _InputError(
            f"counts must be comma-separated numbers, got {text!r}"
        ) from None


def _read_counts_file(path):
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise _InputError(f"cannot read counts file: {exc}") from None
    values = []
    for line in lines:
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        for piece in body.replace(",", " ").split():
            try:
                values.append(float(piece))
            except ValueError:
                raise _InputError(
                    f"bad count {piece!r} in {path}"
                ) from None
    return values


def _resolve_counts(args):
    if args.counts_file is not None:
        values = _read_counts_file(args.counts_file)
    else:
        values = _parse_counts_text(args.counts)
    if len(values) < 2:
        raise _InputError("need counts for at least two bins")
    counts = np.asarray(values, dtype=float)
    try:
        return as_exponent_vector(counts)
    except ValueError as exc:
        raise _InputError(str(exc)) from None


def _parse_moment_indices(text, n):
    if text is None:
        return None
    try:
        indices = [int(piece) for piece in text.split(",")]
    except ValueError:
        raise _InputError(
            f"--moment expects comma-separated bin indices, got {text!r}"
        ) from None
    if not indices:
        raise _InputError("--moment needs at least one bin index")
    for index in indices:
        if not 1 <= index <= n:
            raise _InputError(
                f"--moment index {index} is outside 1..{n}"
            )
    return indices


def _moment_multi_index(indices, n):
    a = np.zeros(n)
    for index in indices:
        a[index - 1] += 1.0
    return a


def _exp_or_none(log_value):
    try:
        return math.exp(log_value)
    except OverflowError:
        return None


def _make_report(command, counts, args, results, evaluations, wall_time,
                 extra_inputs=None):
    inputs = {
        "counts": [float(v) for v in counts],
        "nodes": int(getattr(args, "nodes", _DEFAULT_NODES)),
        "tol": float(getattr(args, "tol", _DEFAULT_TOL)),
        "eval_budget": int(resolve_eval_budget(None)),
    }
    if extra_inputs:
        inputs.update(extra_inputs)
    return {
        "format_version": FORMAT_VERSION,
        "command": command,
        "inputs": inputs,
        "results": results,
        "diagnostics": {
            "evaluations": int(evaluations),
            "wall_time_s": float(wall_time),
        },
    }


def cmd_moments(args):
    start = time.perf_counter()
    counts = _resolve_counts(args)
    n = counts.size
    indices = _parse_moment_indices(args.moment, n)

    mean_values = means(counts)
    results = {
        "mean": [float(v) for v in mean_values],
        "variance": [float(variance(counts, i)) for i in range(1, n + 1)],
        "std_dev": [float(std_dev(counts, i)) for i in range(1, n + 1)],
        "skewness": [float(skewness(counts, i)) for i in range(1, n + 1)],
        # self-check: the means must sum to 1
        "mean_sum": math.fsum(float(v) for v in mean_values),
    }
    if indices is not None:
        results["moment"] = {
            "index": indices,
            "value": moment(counts, _moment_multi_index(indices, n)),
        }
    report = _make_report(
        "moments", counts, args, results,
        evaluations=0,
        wall_time=time.perf_counter() - start,
        extra_inputs={"moment": indices},
    )
    return report, 0


def _quadrature_spec(args):
    if args.scheme == "gauss":
        return QuadratureSpec(scheme="gauss_grid", nodes_per_axis=args.nodes)
    if args.scheme == "mc":
        return QuadratureSpec(
            scheme="monte_carlo", samples=args.samples, seed=args.seed
        )
    return QuadratureSpec(scheme="nested_oracle", rel_tol=args.tol)


def _prior_weighted_log_integrand(counts, expr):
    base = power_log_integrand(counts)
    if expr.ast == ("num", 1.0):
        return base

    def log_f(points):
        prior = evaluate_batch(expr, points)
        with np.errstate(divide="ignore"):
            return base(points) + np.log(prior)

    return log_f


def _integrate_once(counts, expr, spec):
    n = counts.size
    log_f = _prior_weighted_log_integrand(counts, expr)
    if spec.scheme == "nested_oracle":
        def f(p):
            row = np.asarray(p, dtype=float)[None, :]
            return float(np.exp(log_f(row))[0])

        return nested_oracle(f, n=n, spec=spec)
    return integrate_simplex_log(n, log_f, spec)


def cmd_integrate(args):
    start = time.perf_counter()
    counts = _resolve_counts(args)
    n = counts.size
    indices = _parse_moment_indices(args.moment, n)
    try:
        expr = parse(args.prior)
    except ExpressionSyntaxError as exc:
        raise _InputError(f"bad --prior expression: {exc}") from None
    if expr.max_index > n:
        raise _InputError(
            f"prior references p{expr.max_index} but there are only {n} bins"
        )
    spec = _quadrature_spec(args)

    estimate = _integrate_once(counts, expr, spec)
    evaluations = estimate.evaluations
    results = {
        "log_value": estimate.log_value,
        "value": _exp_or_none(estimate.log_value),
        "std_error": estimate.std_error,
        "scheme": spec.scheme,
    }
    if indices is not None:
        shifted = counts + _moment_multi_index(indices, n)
        numerator = _integrate_once(shifted, expr, spec)
        evaluations += numerator.evaluations
        results["moment"] = {
            "index": indices,
            "value": math.exp(numerator.log_value - estimate.log_value),
            "log_numerator": numerator.log_value,
        }
    report = _make_report(
        "integrate", counts, args, results,
        evaluations=evaluations,
        wall_time=time.perf_counter() - start,
        extra_inputs={
            "prior": args.prior,
            "scheme": spec.scheme,
            "samples": int(args.samples),
            "seed": int(args.seed),
            "moment": indices,
        },
    )
    return report, 0


def cmd_compare(args):
    start = time.perf_counter()
    counts = _resolve_counts(args)
    n = counts.size

    exact_log = log_norm_integral(counts)
    grid_spec = QuadratureSpec(scheme="gauss_grid", nodes_per_axis=args.nodes)
    separable = integrate_separable(counts, grid_spec)
    grid = integrate_simplex_log(n, power_log_integrand(counts), grid_spec)

    oracle_estimate = None
    oracle_note = None
    if n <= 5:
        oracle_spec = QuadratureSpec(
            scheme="nested_oracle",
            rel_tol=max(min(args.tol * 1e-2, 1e-9), 1e-13),
        )
        try:
            oracle_estimate = nested_oracle(counts, spec=oracle_spec)
        except IntegrationError as exc:
            oracle_note = f"skipped: {exc}"
    else:
        oracle_note = f"skipped: the nested oracle is limited to n <= 5, got n={n}"

    log_values = {
        "exact": exact_log,
        "separable": separable.log_value,
        "grid": grid.log_value,
    }
    if oracle_estimate is not None:
        log_values["oracle"] = oracle_estimate.log_value

    # pairwise relative deviations, measured against the exact value
    # and computed in log space so large counts cannot underflow
    names = list(log_values)
    deviations = {}
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            first, second = names[a], names[b]
            deviations[f"{first}_vs_{second}"] = abs(
                math.exp(log_values[first] - exact_log)
                - math.exp(log_values[second] - exact_log)
            )
    max_deviation = max(deviations.values())
    within = max_deviation <= args.tol

    evaluations = separable.evaluations + grid.evaluations
    if oracle_estimate is not None:
        evaluations += oracle_estimate.evaluations
    results = {
        "log_exact": exact_log,
        "log_separable": separable.log_value,
        "log_grid": grid.log_value,
        "log_oracle": (
            oracle_estimate.log_value if oracle_estimate is not None else None
        ),
        "oracle_note": oracle_note,
        "deviations": deviations,
        "max_relative_deviation": max_deviation,
        "within_tolerance": within,
    }
    report = _make_report(
        "compare", counts, args, results,
        evaluations=evaluations,
        wall_time=time.perf_counter() - start,
    )
    return report, 0 if within else 4


def _plain_lines(report):
    results = report["results"]
    command = report["command"]
    if command == "moments":
        lines = []
        for key in ("mean", "variance", "std_dev", "skewness"):
            lines.extend(repr(v) for v in results[key])
        if "moment" in results:
            lines.append(repr(results["moment"]["value"]))
        return lines
    if command == "integrate":
        value = results["value"]
        lines = [
            repr(results["log_value"]),
            repr(value) if value is not None else "inf",
            repr(results["std_error"]),
        ]
        if "moment" in results:
            lines.append(repr(results["moment"]["value"]))
        return lines
    return [repr(results["max_relative_deviation"])]


def _emit(report, plain):
    if plain:
        sys.stdout.write("\n".join(_plain_lines(report)) + "\n")
    else:
        sys.stdout.write(json.dumps(report, indent=2) + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "moments":
            report, code = cmd_moments(args)
        elif args.command == "integrate":
            report, code = cmd_integrate(args)
        else:
            report, code = cmd_compare(args)
    except (_InputError, ExpressionSyntaxError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, EvaluationError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    _emit(report, args.plain)
    return code


if __name__ == "__main__":
    sys.exit(main())
