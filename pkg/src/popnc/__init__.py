"""popnc: certified global polynomial minimization on possibly non-compact sets.

Lower bounds come from sum-of-squares membership programs over the quadratic
module generated by the constraint polynomials together with a level bound
c - f; companion hierarchies certify the Archimedean property and coercivity
numerically.  Every positive verdict ships a certificate that is re-verified
with independent polynomial arithmetic.
"""

from .polynomial import Monomial, Polynomial, grlex_key, sum_of_squared_variables
from .problem_io import (
    ParseError,
    PopProblem,
    ProblemFormatError,
    emit_report,
    format_polynomial,
    parse_polynomial,
    parse_problem,
)
from .builder import (
    Direction,
    GeneratorSet,
    MembershipProgram,
    basis_size,
    build_archimedean_check,
    build_coercivity_check,
    build_hierarchy_step,
    build_membership_program,
    hierarchy_generators,
    min_order,
    monomial_basis,
)
from .sdp import (
    LinearConstraint,
    SdpProblem,
    SdpSolution,
    SdpStructureError,
    SolverSettings,
    Status,
    condition_report,
    dump_sdp,
    solve,
)
from .certificates import (
    CertificateError,
    ModuleCertificate,
    NotPsdError,
    SosDecomposition,
    SosWeight,
    VerificationResult,
    certificate_from_payload,
    certificate_to_payload,
    corollary_transform,
    extract_certificate,
    format_certificate,
    gram_to_polynomial,
    program_generators,
    sos_decompose,
    verify_certificate,
)
from .driver import (
    ArchimedeanReport,
    CoercivityReport,
    MinimizeReport,
    OrderOutcome,
    check_archimedean,
    check_archimedean_sufficient,
    check_coercive,
    minimize,
)
from .cli import cli_main

__version__ = "0.1.0"

__all__ = [
    "ArchimedeanReport",
    "CertificateError",
    "CoercivityReport",
    "Direction",
    "GeneratorSet",
    "LinearConstraint",
    "MembershipProgram",
    "MinimizeReport",
    "ModuleCertificate",
    "Monomial",
    "NotPsdError",
    "OrderOutcome",
    "ParseError",
    "Polynomial",
    "PopProblem",
    "ProblemFormatError",
    "SdpProblem",
    "SdpSolution",
    "SdpStructureError",
    "SolverSettings",
    "SosDecomposition",
    "SosWeight",
    "Status",
    "VerificationResult",
    "basis_size",
    "build_archimedean_check",
    "build_coercivity_check",
    "build_hierarchy_step",
    "build_membership_program",
    "certificate_from_payload",
    "certificate_to_payload",
    "check_archimedean",
    "check_archimedean_sufficient",
    "check_coercive",
    "cli_main",
    "condition_report",
    "corollary_transform",
    "dump_sdp",
    "emit_report",
    "extract_certificate",
    "format_certificate",
    "format_polynomial",
    "gram_to_polynomial",
    "grlex_key",
    "hierarchy_generators",
    "min_order",
    "minimize",
    "monomial_basis",
    "parse_polynomial",
    "parse_problem",
    "program_generators",
    "solve",
    "sos_decompose",
    "sum_of_squared_variables",
    "verify_certificate",
]
