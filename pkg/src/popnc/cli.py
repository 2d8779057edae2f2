"""Command-line interface.

Subcommands: minimize, arch-check, coercive-check, verify, parse.
Exit codes: 0 success/certified, 2 inconclusive (or failed verification),
3 input error, 4 internal numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import driver
from .builder import GeneratorSet, hierarchy_generators
from .certificates import (
    CertificateError,
    certificate_from_payload,
    format_certificate,
    verify_certificate,
)
from .polynomial import Polynomial, sum_of_squared_variables
from .problem_io import (
    ParseError,
    PopProblem,
    ProblemFormatError,
    emit_report,
    parse_problem,
)
from .sdp import SdpStructureError, SolverSettings

EXIT_OK = 0
EXIT_INCONCLUSIVE = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4


class _Parser(argparse.ArgumentParser):
    # usage problems are input errors (exit 3), not "inconclusive" (exit 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"popnc: input error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="popnc",
        description=(
            "Certified lower bounds for polynomial minimization over "
            "semi-algebraic sets, with numerical Archimedean and coercivity tests."
        ),
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_orders=True):
        p.add_argument("problem", help="problem file (see README for the format)")
        if with_orders:
            p.add_argument("--k-max", type=int, default=driver.DEFAULT_K_MAX,
                           help="highest relaxation order to try")
            p.add_argument("--k-start", type=int, default=None,
                           help="first relaxation order (defaults to the minimal valid order)")
        p.add_argument("--tol", type=float, default=None,
                       help="main tolerance of the subcommand (stabilization, "
                            "positivity or verification depending on the command)")
        p.add_argument("--c", type=float, default=None, help="override the level bound c")
        p.add_argument("--margin", type=float, default=None,
                       help="override the margin used when c is derived from x0")
        p.add_argument("--json", action="store_true", help="emit the full report as JSON on stdout")
        p.add_argument("--dump-sdp", metavar="DIR", default=None,
                       help="write each order's SDP in the debug dump format to DIR")

    common(sub.add_parser("minimize", help="run the lower-bound hierarchy"))
    common(sub.add_parser("arch-check", help="certify the Archimedean property numerically"))
    common(sub.add_parser("coercive-check", help="certify coercivity of the objective"))

    pv = sub.add_parser("verify", help="verify a certificate file against a problem file")
    pv.add_argument("certificate", help="certificate JSON file (report payload schema)")
    common(pv, with_orders=False)

    pp = sub.add_parser("parse", help="validate a problem file and print a summary")
    common(pp, with_orders=False)
    return ap


def _load_problem(args) -> PopProblem:
    with open(args.problem, "r", encoding="utf-8") as fh:
        text = fh.read()
    problem = parse_problem(text)
    if getattr(args, "margin", None) is not None:
        problem.margin = args.margin
    if getattr(args, "c", None) is not None:
        problem.c = args.c
        problem.x0 = None
    problem.validate()
    return problem


def _emit(args, payload: dict, human_lines: list[str]) -> None:
    if getattr(args, "json", False):
        print(emit_report(payload))
    else:
        for line in human_lines:
            print(line)


def cli_main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ParseError, ProblemFormatError, FileNotFoundError, IsADirectoryError,
            json.JSONDecodeError, KeyError) as exc:
        print(f"popnc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SdpStructureError, CertificateError, ArithmeticError) as exc:
        print(f"popnc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"popnc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _dispatch(args) -> int:
    settings = SolverSettings()

    if args.command == "parse":
        problem = _load_problem(args)
        _emit(args, {"command": "parse", "problem": problem.to_payload()},
              [f"ok: {len(problem.variables)} variables, "
               f"{len(problem.inequalities)} inequalities, "
               f"{len(problem.equalities)} equalities, c = {float(problem.resolved_c()):g}"])
        return EXIT_OK

    if args.command == "minimize":
        problem = _load_problem(args)
        report = driver.minimize(
            problem,
            k_start=args.k_start,
            k_max=args.k_max,
            stab_tol=args.tol if args.tol is not None else driver.DEFAULT_STAB_TOL,
            settings=settings,
            dump_dir=args.dump_sdp,
        )
        payload = {"command": "minimize", "problem": problem.to_payload(), **report.to_payload()}
        lines = [f"  k={o.order}: {o.value_repr}" for o in report.orders]
        lines.insert(0, f"verdict: {report.verdict}")
        if report.final_bound is not None:
            lines.append(f"final bound: {report.final_bound:.9g}")
        if report.verification is not None:
            lines.append(f"certificate residual: {float(report.verification.residual):.3e} "
                         f"({'ok' if report.verification.passed else 'FAILED'})")
        for cav in report.caveats:
            lines.append(f"note: {cav}")
        _emit(args, payload, lines)
        return EXIT_OK if report.verdict == "stabilized" else EXIT_INCONCLUSIVE

    if args.command == "arch-check":
        problem = _load_problem(args)
        report = driver.check_archimedean(
            problem, k_max=args.k_max, settings=settings,
            cert_tol=args.tol if args.tol is not None else 1e-5,
            dump_dir=args.dump_sdp,
        )
        payload = {"command": "arch-check", "problem": problem.to_payload(), **report.to_payload()}
        lines = [f"verdict: {report.verdict}"]
        lines += [f"  k={o.order}: rho = {o.value_repr}" for o in report.orders]
        if report.verdict == "certified":
            lines.append(f"Archimedean certified at k={report.order} with N = {report.bound:.9g}")
        _emit(args, payload, lines)
        return EXIT_OK if report.verdict == "certified" else EXIT_INCONCLUSIVE

    if args.command == "coercive-check":
        problem = _load_problem(args)
        report = driver.check_coercive(
            problem.objective, k_max=args.k_max,
            pos_tol=args.tol if args.tol is not None else driver.DEFAULT_POS_TOL,
            settings=settings, dump_dir=args.dump_sdp,
        )
        payload = {"command": "coercive-check", "problem": problem.to_payload(), **report.to_payload()}
        lines = [f"verdict: {report.verdict}"]
        lines += [f"  k={o.order}: rho = {o.value_repr}" for o in report.orders]
        if report.verdict == "certified":
            lines.append(f"coercive: top form >= {report.bound:.9g} * |x|^d  (k={report.order})")
        for note in report.notes:
            lines.append(f"note: {note}")
        _emit(args, payload, lines)
        return EXIT_OK if report.verdict == "certified" else EXIT_INCONCLUSIVE

    if args.command == "verify":
        problem = _load_problem(args)
        with open(args.certificate, "r", encoding="utf-8") as fh:
            payload_in = json.load(fh)
        if "certificate" in payload_in and isinstance(payload_in["certificate"], dict):
            payload_in = payload_in["certificate"]
        cert = certificate_from_payload(payload_in)
        target, gens = _verification_context(cert, problem)
        result = verify_certificate(
            cert, target, gens,
            tol=args.tol if args.tol is not None else 1e-5,
        )
        payload = {
            "command": "verify",
            "problem": problem.to_payload(),
            "verification": result.to_payload(),
            "certificate": cert.to_payload(),
        }
        _emit(args, payload, [
            f"residual: {float(result.residual):.6e}",
            f"min Gram eigenvalue: {result.min_gram_eig:.3e}",
            "verification: PASS" if result.passed else "verification: FAIL",
            format_certificate(cert),
        ])
        return EXIT_OK if result.passed else EXIT_INCONCLUSIVE

    raise ProblemFormatError(f"unknown command {args.command!r}")


def _verification_context(cert, problem: PopProblem):
    """Rebuild the target and generator set a certificate refers to."""
    n = problem.num_vars
    if cert.family == "coercivity":
        theta = sum_of_squared_variables(n) - Polynomial.constant(n, 1)
        return problem.objective.top_component(), GeneratorSet(num_vars=n, eq=(theta,))
    if cert.family == "archimedean":
        return -sum_of_squared_variables(n), hierarchy_generators(problem)
    if cert.family == "module":
        return problem.objective, GeneratorSet(
            num_vars=n, ineq=tuple(problem.inequalities), eq=tuple(problem.equalities)
        )
    return problem.objective, hierarchy_generators(problem)


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
