"""Command-line front end.

    u1proc run --scheme multicopy-iterative --n 7
    u1proc run --scheme preprocess --x 3 --format json
    u1proc table --n-max 15 --format csv
    u1proc plan --x 3

Exit codes: 0 ok, 2 invalid arguments, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import analysis
from .preprocess import MAX_STATE_X, CascadeError, build_allocation, q_distribution
from .protocols import (
    InvariantError,
    TrialRng,
    pipeline_x,
    run_cnot,
    run_hzb,
    run_multicopy_iterative,
    run_preprocess_pipeline,
    run_single_shot,
    run_vmc_iterative,
    scheme_equivalence_table,
)
from .statevec import StateVector

SCHEMES = ("cnot", "vmc", "hzb", "multicopy-iterative", "single-shot", "preprocess", "equivalence-table")
FORMATS = ("text", "json", "csv")
MAX_N = {"vmc": 20, "hzb": 15, "multicopy-iterative": 15, "single-shot": 15, "equivalence-table": 15}

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 2, 3


class UsageError(ValueError):
    pass


def rational(p: Fraction) -> dict:
    return {"rational": f"{p.numerator}/{p.denominator}", "decimal": format(float(p), ".15g")}


def frac_str(p: Fraction | None) -> str:
    return "" if p is None else f"{p.numerator}/{p.denominator}"


def parse_data(text: str | None) -> StateVector:
    if text is None:
        return StateVector(1, np.array([1, 1]) / np.sqrt(2))
    try:
        a_re, a_im, b_re, b_im = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--data expects a_re,a_im,b_re,b_im, got {text!r}") from None
    alpha, beta = complex(a_re, a_im), complex(b_re, b_im)
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1) > 1e-9:
        raise UsageError(f"data state has |alpha|^2 + |beta|^2 = {norm}, expected 1")
    return StateVector(1, np.array([alpha, beta]))


def _resolve_size(args) -> tuple[int, int | None]:
    """Return (N, X) for the chosen scheme, validating the combination."""
    scheme = args.scheme
    if scheme == "cnot":
        if args.n not in (None, 1):
            raise UsageError("the cnot scheme uses exactly one program qubit")
        return 1, None
    if scheme == "preprocess":
        if args.x is not None:
            x = args.x
            if args.n is not None and args.n != 2 ** x - 1:
                raise UsageError(f"--n {args.n} is inconsistent with --x {x}")
        elif args.n is not None:
            x = pipeline_x(args.n)
            if x is None:
                raise UsageError(f"preprocess needs N = 2**X - 1 copies, got N={args.n}")
        else:
            raise UsageError("preprocess needs --x or --n")
        if not 1 <= x <= MAX_STATE_X:
            raise UsageError(f"preprocess supports X in [1, {MAX_STATE_X}], got {x}")
        return 2 ** x - 1, x
    n = args.n if args.n is not None else (7 if scheme == "equivalence-table" else None)
    if n is None:
        raise UsageError(f"scheme {scheme} needs --n")
    if not 1 <= n <= MAX_N[scheme]:
        raise UsageError(f"scheme {scheme} supports N in [1, {MAX_N[scheme]}], got {n}")
    return n, None


def _formula(scheme: str, n: int, x: int | None) -> Fraction:
    if scheme == "cnot":
        return Fraction(1, 2)
    if scheme in ("vmc", "hzb"):
        return analysis.p_vmc(n)
    if scheme == "preprocess":
        return analysis.p_preprocess(x)
    return analysis.p_multicopy(n)


def build_run_report(args) -> dict:
    if args.mode == "montecarlo" and args.trials < 1:
        raise UsageError("--trials must be >= 1 in montecarlo mode")
    n, x = _resolve_size(args)
    data = parse_data(args.data)
    if args.scheme == "equivalence-table":
        return build_table_report(args.theta, n, data)

    rng = TrialRng(args.seed)
    common = dict(mode=args.mode, rng=rng, trials=args.trials)
    runner = {
        "vmc": lambda: run_vmc_iterative(args.theta, n, data, **common),
        "hzb": lambda: run_hzb(args.theta, n, data, **common),
        "multicopy-iterative": lambda: run_multicopy_iterative(args.theta, n, data, **common),
        "single-shot": lambda: run_single_shot(args.theta, n, data, **common),
        "preprocess": lambda: run_preprocess_pipeline(args.theta, x, data, **common),
        "cnot": lambda: run_cnot(args.theta, data, **common),
    }[args.scheme]
    result = runner()
    formula = _formula(args.scheme, n, x)
    if result.success_probability_exact != formula:
        raise InvariantError(
            f"simulated {result.success_probability_exact} differs from closed form {formula}"
        )

    amps = data.amplitudes
    report = {
        "scheme": args.scheme,
        "n": n,
        "x": x,
        "theta": args.theta,
        "mode": args.mode,
        "data": [amps[0].real, amps[0].imag, amps[1].real, amps[1].imag],
        "exact": rational(result.success_probability_exact),
        "formula": rational(formula),
        "empirical_rate": result.empirical_rate,
        "trials": result.trials,
        "seed": args.seed if args.mode == "montecarlo" else None,
        "residual_fidelity_on_success": result.residual_fidelity_on_success,
        "failure_rotation_histogram": {
            str(m): frac_str(p) for m, p in result.failure_rotation_histogram.items()
        },
    }
    if result.level_distribution is not None:
        report["q_distribution"] = {str(s): frac_str(q) for s, q in result.level_distribution.items()}
    return report


TABLE_COLUMNS = ("N", "p_vmc", "p_multicopy", "p_single_shot", "p_preprocess", "p_asymptotic")


def build_table_report(theta: float, n_max: int, data: StateVector | None = None) -> dict:
    if not 1 <= n_max <= 15:
        raise UsageError(f"table supports N_max in [1, 15], got {n_max}")
    rows = scheme_equivalence_table(theta, range(1, n_max + 1, 2), data)
    out = []
    for row in rows:
        if not row.consistent:
            raise InvariantError(f"schemes disagree at N={row.n}: {row}")
        out.append(
            {
                "N": row.n,
                "p_vmc": frac_str(analysis.p_vmc(row.n)),
                "p_multicopy": frac_str(row.p_iterative),
                "p_single_shot": frac_str(row.p_single_shot),
                "p_preprocess": frac_str(row.p_pipeline),
                "p_asymptotic": format(analysis.p_asymptotic(row.n), ".15g"),
            }
        )
    return {"scheme": "equivalence-table", "theta": theta, "rows": out}


def build_plan_report(x: int) -> dict:
    if not 1 <= x <= MAX_STATE_X:
        raise UsageError(f"plan supports X in [1, {MAX_STATE_X}], got {x}")
    plan = build_allocation(x)
    return {
        "x": x,
        "num_copies": plan.num_copies,
        "num_measured": plan.num_measured,
        "group_counts": {str(s): w for s, w in plan.group_counts.items()},
        "q_distribution": {str(s): frac_str(q) for s, q in q_distribution(plan).items()},
        "p_overall": frac_str(analysis.overall_from_levels(q_distribution(plan))),
        "groups": plan.table(),
    }


def _csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def render(report: dict, kind: str, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    if kind == "table" or report.get("scheme") == "equivalence-table":
        if fmt == "csv":
            return _csv(report["rows"], TABLE_COLUMNS)
        widths = {c: max(len(c), *(len(str(r[c])) for r in report["rows"])) for c in TABLE_COLUMNS}
        lines = ["  ".join(c.rjust(widths[c]) for c in TABLE_COLUMNS)]
        lines += ["  ".join(str(r[c]).rjust(widths[c]) for c in TABLE_COLUMNS) for r in report["rows"]]
        return "\n".join(lines) + "\n"
    if kind == "plan":
        columns = ("level", "run_start", "global_phase_exponent", "block", "sub_outcome", "path")
        if fmt == "csv":
            return _csv(report["groups"], columns)
        lines = [
            f"X = {report['x']}: {report['num_copies']} copies, measure {report['num_measured']} qubits first",
            "W_s: " + ", ".join(f"W_{s}={w}" for s, w in report["group_counts"].items()),
            "q_s: " + ", ".join(f"q_{s}={q}" for s, q in report["q_distribution"].items()),
            f"overall success: {report['p_overall']}",
            "",
            "  ".join(columns),
        ]
        lines += ["  ".join(str(g[c]) for c in columns) for g in report["groups"]]
        return "\n".join(lines) + "\n"

    flat = _flatten(report)
    if fmt == "csv":
        return _csv([{"field": k, "value": v} for k, v in flat], ("field", "value"))
    return "\n".join(f"{k}: {v}" for k, v in flat) + "\n"


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(_flatten(v, key + "."))
        elif isinstance(v, list):
            out.append((key, ",".join(str(e) for e in v)))
        elif v is not None:
            out.append((key, v))
    return out


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="u1proc", description="Programmable U(1) processors with multiple program copies."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scheme")
    run.add_argument("--scheme", required=True, choices=SCHEMES)
    run.add_argument("--n", type=int, help="number of program qubits / copies")
    run.add_argument("--x", type=int, help="preprocessing level (N = 2**X - 1)")
    run.add_argument("--theta", type=float, default=0.7)
    run.add_argument("--mode", choices=("exact", "montecarlo"), default="exact")
    run.add_argument("--trials", type=int, default=100_000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--format", choices=FORMATS, default="text")
    run.add_argument("--data", help="data qubit as a_re,a_im,b_re,b_im")

    table = sub.add_parser("table", help="scheme equivalence table")
    table.add_argument("--n-max", type=int, default=15)
    table.add_argument("--theta", type=float, default=0.7)
    table.add_argument("--format", choices=FORMATS, default="text")

    plan = sub.add_parser("plan", help="dump the preprocessing allocation plan")
    plan.add_argument("--x", type=int, required=True)
    plan.add_argument("--format", choices=FORMATS, default="text")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "run":
            report = build_run_report(args)
        elif args.command == "table":
            report = build_table_report(args.theta, args.n_max)
        else:
            report = build_plan_report(args.x)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantError, CascadeError) as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    sys.stdout.write(render(report, args.command, args.format))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
