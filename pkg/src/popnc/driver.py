"""Orchestration of the three SDP hierarchies over increasing order.

Each routine solves a family of membership programs for k = k_min..k_max,
records a per-order outcome, and attaches a verified certificate to any
positive verdict.  The boundedness and coercivity tests are one-sided: they
certify or come back inconclusive, never refute.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Sequence

from .builder import (
    GeneratorSet,
    MembershipProgram,
    build_archimedean_check,
    build_coercivity_check,
    build_hierarchy_step,
    coercivity_min_order,
    hierarchy_generators,
    min_order,
)
from .certificates import (
    ModuleCertificate,
    VerificationResult,
    extract_certificate,
    program_generators,
    verify_certificate,
)
from .polynomial import Polynomial
from .problem_io import PopProblem
from .sdp import SdpSolution, SolverSettings, Status, dump_sdp, solve

DEFAULT_K_MAX = 6
DEFAULT_STAB_TOL = 1e-6
DEFAULT_POS_TOL = 1e-6

_ARCH_CAVEAT = (
    "convergence of the bounds to the global minimum is guaranteed only when "
    "the quadratic module of (g; h; c - f) is Archimedean; run arch-check to test this"
)
_STOP_RULE_NOTE = (
    "stopping rule: bound stabilized over two consecutive orders (heuristic; "
    "finite convergence holds generically but carries no computable stopping test)"
)


@dataclass
class OrderOutcome:
    order: int
    status: str
    value: float | None = None

    @property
    def value_repr(self) -> str:
        if self.value is not None:
            return f"{self.value:.9g}"
        if self.status == Status.PRIMAL_INFEASIBLE.value:
            return "+inf (infeasible)"
        if self.status == Status.DUAL_INFEASIBLE.value:
            return "unbounded"
        return self.status

    def to_payload(self) -> dict:
        return {"k": self.order, "status": self.status, "value": self.value,
                "value_repr": self.value_repr}


@dataclass
class MinimizeReport:
    orders: list[OrderOutcome]
    final_bound: float | None
    verdict: str  # stabilized | reached_max_order | infeasible_at_all_orders
    certificate: ModuleCertificate | None = None
    verification: VerificationResult | None = None
    caveats: list[str] = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def bounds(self) -> list[float]:
        return [o.value for o in self.orders if o.value is not None]

    def to_payload(self) -> dict:
        return {
            "command": "minimize",
            "bounds": self.bounds,
            "orders": [o.to_payload() for o in self.orders],
            "final_bound": self.final_bound,
            "verdict": self.verdict,
            "certificate": None if self.certificate is None else self.certificate.to_payload(),
            "verification": None if self.verification is None else self.verification.to_payload(),
            "caveats": self.caveats,
            "timing_s": self.elapsed_s,
        }


@dataclass
class ArchimedeanReport:
    orders: list[OrderOutcome]
    verdict: str  # certified | inconclusive
    bound: float | None = None
    order: int | None = None
    certificate: ModuleCertificate | None = None
    verification: VerificationResult | None = None
    notes: list[str] = field(default_factory=list)
    elapsed_s: float = 0.0

    def to_payload(self) -> dict:
        return {
            "command": "arch-check",
            "orders": [o.to_payload() for o in self.orders],
            "verdict": self.verdict,
            "rho": self.bound,
            "certified_order": self.order,
            "certificate": None if self.certificate is None else self.certificate.to_payload(),
            "verification": None if self.verification is None else self.verification.to_payload(),
            "notes": self.notes,
            "timing_s": self.elapsed_s,
        }


@dataclass
class CoercivityReport:
    orders: list[OrderOutcome]
    verdict: str  # certified | inconclusive | not_applicable
    bound: float | None = None
    order: int | None = None
    certificate: ModuleCertificate | None = None
    verification: VerificationResult | None = None
    subject: str = "objective"
    notes: list[str] = field(default_factory=list)
    elapsed_s: float = 0.0

    def to_payload(self) -> dict:
        return {
            "command": "coercive-check",
            "orders": [o.to_payload() for o in self.orders],
            "verdict": self.verdict,
            "delta": self.bound,
            "certified_order": self.order,
            "subject": self.subject,
            "certificate": None if self.certificate is None else self.certificate.to_payload(),
            "verification": None if self.verification is None else self.verification.to_payload(),
            "notes": self.notes,
            "timing_s": self.elapsed_s,
        }


def _maybe_dump(problem_sdp, dump_dir: str | None, family: str, k: int) -> None:
    if dump_dir:
        os.makedirs(dump_dir, exist_ok=True)
        dump_sdp(problem_sdp, os.path.join(dump_dir, f"{family}_k{k}.sdp"))


def minimize(
    problem: PopProblem,
    k_start: int | None = None,
    k_max: int = DEFAULT_K_MAX,
    stab_tol: float = DEFAULT_STAB_TOL,
    settings: SolverSettings | None = None,
    arch_report: ArchimedeanReport | None = None,
    dump_dir: str | None = None,
) -> MinimizeReport:
    """Run the lower-bound hierarchy; the bounds f_k are non-decreasing in k.

    Stops early once |f_k - f_{k-1}| <= stab_tol * (1 + |f_k|) holds for two
    consecutive orders.  Solver failures at an order are recorded and the
    sweep continues; nothing raises.
    """
    t0 = time.perf_counter()
    gens = hierarchy_generators(problem)
    kmin = min_order(gens, problem.objective)
    k0 = max(kmin, k_start if k_start is not None else kmin)

    orders: list[OrderOutcome] = []
    best: tuple[int, SdpSolution, MembershipProgram] | None = None
    prev_val: float | None = None
    consecutive = 0
    verdict = "reached_max_order"
    for k in range(k0, k_max + 1):
        sdp_prob = build_hierarchy_step(problem, k)
        _maybe_dump(sdp_prob, dump_dir, "hierarchy", k)
        sol = solve(sdp_prob, settings)
        if sol.status is Status.OPTIMAL:
            val = sol.obj_primal
            orders.append(OrderOutcome(k, sol.status.value, val))
            best = (k, sol, sdp_prob.meta)
            if prev_val is not None and abs(val - prev_val) <= stab_tol * (1 + abs(val)):
                consecutive += 1
            else:
                consecutive = 0
            prev_val = val
            if consecutive >= 2:
                verdict = "stabilized"
                break
        else:
            orders.append(OrderOutcome(k, sol.status.value))
            consecutive = 0

    if best is None and orders and all(
        o.status == Status.PRIMAL_INFEASIBLE.value for o in orders
    ):
        verdict = "infeasible_at_all_orders"

    certificate = None
    verification = None
    caveats = [_STOP_RULE_NOTE]
    if arch_report is None:
        caveats.append(_ARCH_CAVEAT)
    elif arch_report.verdict != "certified":
        caveats.append("arch-check was inconclusive; " + _ARCH_CAVEAT)
    if best is not None:
        _, sol, program = best
        certificate = extract_certificate(sol, program)
        verification = verify_certificate(
            certificate, program.target, program_generators(program)
        )
        if not verification.passed:
            caveats.append("certificate at the final order failed independent verification")

    return MinimizeReport(
        orders=orders,
        final_bound=None if best is None else next(
            o.value for o in reversed(orders) if o.value is not None
        ),
        verdict=verdict,
        certificate=certificate,
        verification=verification,
        caveats=caveats,
        elapsed_s=time.perf_counter() - t0,
    )


def check_archimedean(
    problem: PopProblem,
    k_max: int = DEFAULT_K_MAX,
    settings: SolverSettings | None = None,
    cert_tol: float = 1e-5,
    dump_dir: str | None = None,
) -> ArchimedeanReport:
    """Certify that the quadratic module of (g; h; c - f) is Archimedean.

    Solves rho_k = inf{lambda : lambda - |x|^2 in M_k} for increasing k and
    certifies at the first finite value whose certificate verifies.  The test
    is one-sided: failure at every order is inconclusive, not a refutation
    (an infeasible order means rho_k = +inf there).
    """
    t0 = time.perf_counter()
    gens = hierarchy_generators(problem)
    from .polynomial import sum_of_squared_variables

    kmin = min_order(gens, -sum_of_squared_variables(problem.num_vars))
    orders: list[OrderOutcome] = []
    notes: list[str] = []
    for k in range(kmin, k_max + 1):
        sdp_prob = build_archimedean_check(problem, k)
        _maybe_dump(sdp_prob, dump_dir, "archimedean", k)
        sol = solve(sdp_prob, settings)
        if sol.status is Status.OPTIMAL:
            cert = extract_certificate(sol, sdp_prob.meta)
            program = sdp_prob.meta
            ver = verify_certificate(cert, program.target, program_generators(program), tol=cert_tol)
            orders.append(OrderOutcome(k, sol.status.value, sol.obj_primal))
            if ver.passed:
                return ArchimedeanReport(
                    orders=orders,
                    verdict="certified",
                    bound=sol.obj_primal,
                    order=k,
                    certificate=cert,
                    verification=ver,
                    notes=notes,
                    elapsed_s=time.perf_counter() - t0,
                )
            notes.append(f"order {k}: optimal value found but certificate failed verification")
        else:
            orders.append(OrderOutcome(k, sol.status.value))
    return ArchimedeanReport(
        orders=orders, verdict="inconclusive", notes=notes,
        elapsed_s=time.perf_counter() - t0,
    )


def _diagonal_top_form(f: Polynomial) -> bool:
    """True when f = sum a_i x_i^(2d) + lower order with every a_i > 0."""
    d = f.degree()
    if d == 0 or d % 2:
        return False
    top = f.top_component()
    seen = set()
    for mono, coeff in top.terms.items():
        nz = [i for i, e in enumerate(mono) if e]
        if len(nz) != 1 or coeff <= 0:
            return False
        seen.add(nz[0])
    return len(seen) == f.num_vars


def check_coercive(
    f: Polynomial,
    k_max: int = DEFAULT_K_MAX,
    pos_tol: float = DEFAULT_POS_TOL,
    settings: SolverSettings | None = None,
    cert_tol: float = 1e-5,
    dump_dir: str | None = None,
) -> CoercivityReport:
    """Certify coercivity by bounding the top homogeneous form below on the sphere.

    Solves rho_k = sup{mu : f_d - mu in M_k(|x|^2 - 1)} for k = deg(f)/2..k_max
    and certifies once rho_k > pos_tol with a verified witness.  Odd-degree,
    constant and zero inputs cannot be coercive: not_applicable.
    """
    t0 = time.perf_counter()
    notes: list[str] = []
    if f.is_zero():
        return CoercivityReport([], "not_applicable", notes=["zero polynomial"], elapsed_s=0.0)
    d = f.degree()
    if d == 0:
        return CoercivityReport([], "not_applicable", notes=["constant polynomial"], elapsed_s=0.0)
    if d % 2:
        return CoercivityReport(
            [], "not_applicable",
            notes=["odd degree: a coercive polynomial has even degree"], elapsed_s=0.0,
        )
    if _diagonal_top_form(f):
        notes.append("top form is a positive diagonal form; minimal order expected to certify")

    kmin = coercivity_min_order(f)
    orders: list[OrderOutcome] = []
    if kmin > k_max:
        notes.append(f"k_max={k_max} is below the minimal order {kmin}; nothing solved")
    for k in range(kmin, k_max + 1):
        sdp_prob = build_coercivity_check(f, k)
        _maybe_dump(sdp_prob, dump_dir, "coercivity", k)
        sol = solve(sdp_prob, settings)
        if sol.status is Status.OPTIMAL:
            orders.append(OrderOutcome(k, sol.status.value, sol.obj_primal))
            if sol.obj_primal > pos_tol:
                program = sdp_prob.meta
                cert = extract_certificate(sol, program)
                ver = verify_certificate(cert, program.target, program_generators(program), tol=cert_tol)
                if ver.passed:
                    return CoercivityReport(
                        orders=orders, verdict="certified", bound=sol.obj_primal,
                        order=k, certificate=cert, verification=ver, notes=notes,
                        elapsed_s=time.perf_counter() - t0,
                    )
                notes.append(f"order {k}: positive value but certificate failed verification")
        else:
            orders.append(OrderOutcome(k, sol.status.value))
    return CoercivityReport(
        orders=orders, verdict="inconclusive", notes=notes,
        elapsed_s=time.perf_counter() - t0,
    )


def check_archimedean_sufficient(
    problem: PopProblem,
    alpha0: float,
    g_multipliers: Sequence[float] | None = None,
    h_multipliers: Sequence[float] | None = None,
    k_max: int = DEFAULT_K_MAX,
    pos_tol: float = DEFAULT_POS_TOL,
    settings: SolverSettings | None = None,
) -> CoercivityReport:
    """Sufficient Archimedean test via a user-supplied multiplier combination.

    Forms  alpha0 * f - sum_j lambda_j g_j - sum_l mu_l h_l  (alpha0, lambda_j
    >= 0; mu_l free) and runs the coercivity test on it: certified coercivity
    of the combination implies the Archimedean property of the module of
    (g; h; c - f).
    """
    lam = list(g_multipliers or [0.0] * len(problem.inequalities))
    mus = list(h_multipliers or [0.0] * len(problem.equalities))
    if alpha0 < 0:
        raise ValueError("alpha0 must be >= 0")
    if any(v < 0 for v in lam):
        raise ValueError("inequality multipliers must be >= 0")
    if len(lam) != len(problem.inequalities) or len(mus) != len(problem.equalities):
        raise ValueError("multiplier counts must match the generator counts")

    combo = problem.objective.scale(alpha0)
    for v, g in zip(lam, problem.inequalities):
        combo = combo - g.scale(v)
    for v, h in zip(mus, problem.equalities):
        combo = combo - h.scale(v)

    if combo.is_zero():
        return CoercivityReport(
            [], "not_applicable", subject="combination",
            notes=["multiplier combination is the zero polynomial"],
        )
    report = check_coercive(combo, k_max=k_max, pos_tol=pos_tol, settings=settings)
    report.subject = "combination"
    report.notes.append(
        "certified coercivity of the combination implies the Archimedean property "
        "of the quadratic module of (g; h; c - f)"
    )
    return report
