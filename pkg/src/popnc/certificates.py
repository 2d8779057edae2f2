"""Positivity certificates: extraction from solver output and verification.

A module certificate witnesses an identity

    sigma_0 + sum_j sigma_j g_j + sum_l phi_l h_l  =  target - s * lambda

with each sigma given by a PSD Gram matrix over a monomial basis and each
phi_l a free polynomial.  Verification recomputes the identity with the
polynomial arithmetic of this package (exactly, when the data is rational)
and checks the Gram matrices for positive semidefiniteness; nothing is
trusted from solver bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .builder import GeneratorSet, MembershipProgram
from .polynomial import Coeff, Monomial, Polynomial, grlex_key, monomial_mul
from .sdp import SdpSolution, Status


class CertificateError(ValueError):
    """Certificate extraction or transformation failed."""


class NotPsdError(ValueError):
    """A matrix expected to be PSD has a significantly negative eigenvalue."""


def gram_to_polynomial(gram: Any, basis: Sequence[Monomial], num_vars: int) -> Polynomial:
    """Expand v' Q v over the monomial basis v.  Exact for Fraction entries."""
    rows = gram.tolist() if isinstance(gram, np.ndarray) else gram
    s = len(basis)
    terms: dict[Monomial, Coeff] = {}
    for i in range(s):
        row = rows[i]
        for j in range(s):
            q = row[j]
            if q == 0:
                continue
            mono = monomial_mul(basis[i], basis[j])
            terms[mono] = terms.get(mono, 0) + q
    return Polynomial(num_vars, terms)


def _gram_float(gram: Any) -> np.ndarray:
    if isinstance(gram, np.ndarray) and gram.dtype == float:
        return gram
    return np.array([[float(v) for v in row] for row in (gram.tolist() if isinstance(gram, np.ndarray) else gram)])


@dataclass
class SosWeight:
    tag: str  # "sigma0" | "ineq" | "cf"
    index: int | None
    basis: list[Monomial]
    gram: Any  # square symmetric matrix; float ndarray or nested rationals

    def polynomial(self, num_vars: int) -> Polynomial:
        return gram_to_polynomial(self.gram, self.basis, num_vars)

    def min_eigenvalue(self) -> float:
        g = _gram_float(self.gram)
        if g.size == 0:
            return 0.0
        return float(np.linalg.eigvalsh(0.5 * (g + g.T)).min())

    def frobenius(self) -> float:
        g = _gram_float(self.gram)
        return float(np.sqrt((g * g).sum()))


@dataclass
class ModuleCertificate:
    """Bound plus weights witnessing membership of target - s*lambda in M_k."""

    num_vars: int
    order: int
    lam: Coeff
    lam_sign: int  # s in the identity above: +1 (maximize), -1 (minimize), 0 (feasibility)
    sos_weights: list[SosWeight]
    eq_multipliers: list[tuple[int, Polynomial]] = field(default_factory=list)
    residual: Coeff = 0.0
    family: str = "membership"

    def weight(self, tag: str, index: int | None = None) -> SosWeight | None:
        for w in self.sos_weights:
            if w.tag == tag and (index is None or w.index == index):
                return w
        return None

    def reconstruct(self, gens: GeneratorSet) -> Polynomial:
        """sigma_0 + sum sigma_j g_j + sum phi_l h_l from the stored weights."""
        total = Polynomial.zero(self.num_vars)
        for w in self.sos_weights:
            sigma = w.polynomial(self.num_vars)
            if w.tag == "sigma0":
                total = total + sigma
            else:
                total = total + sigma * gens.ineq[w.index]
        for l, phi in self.eq_multipliers:
            total = total + phi * gens.eq[l]
        return total

    def expected(self, target: Polynomial) -> Polynomial:
        if self.lam_sign == 0 or self.lam == 0:
            return target
        shift = Polynomial.constant(self.num_vars, self.lam_sign * self.lam)
        return target - shift

    def to_payload(self) -> dict:
        return certificate_to_payload(self)


@dataclass
class VerificationResult:
    passed: bool
    residual: Coeff
    min_gram_eig: float
    tol: float

    def to_payload(self) -> dict:
        return {
            "passed": self.passed,
            "residual": float(self.residual),
            "min_gram_eig": self.min_gram_eig,
            "tol": self.tol,
        }


DEFAULT_RESIDUAL_TOL = 1e-5
DEFAULT_EIG_TOL = 1e-9


def verify_certificate(
    cert: ModuleCertificate,
    target: Polynomial,
    gens: GeneratorSet,
    tol: float = DEFAULT_RESIDUAL_TOL,
    eig_tol: float = DEFAULT_EIG_TOL,
) -> VerificationResult:
    """Recompute the certificate identity and Gram PSD-ness from scratch.

    Passes iff the l1 coefficient residual is <= tol * (1 + ||target||_1) and
    every Gram matrix has minimum eigenvalue >= -eig_tol.  Failure is a
    result, not an exception.
    """
    mismatch = cert.reconstruct(gens) - cert.expected(target)
    residual = mismatch.l1_norm()
    min_eig = min((w.min_eigenvalue() for w in cert.sos_weights), default=0.0)
    bound = tol * float(1 + target.l1_norm())
    passed = float(residual) <= bound and min_eig >= -eig_tol
    return VerificationResult(passed=passed, residual=residual, min_gram_eig=min_eig, tol=tol)


def _solver_block_indices(program: MembershipProgram) -> list[int | None]:
    out: list[int | None] = []
    nxt = 0
    for blk in program.blocks:
        if blk.kept:
            out.append(nxt)
            nxt += 1
        else:
            out.append(None)
    return out


def extract_certificate(solution: SdpSolution, program: MembershipProgram) -> ModuleCertificate:
    """Map an optimal solver point back to generator-level weights.

    Gram entries pruned at build time are provably zero in every feasible
    point, so they are restored as explicit zeros; generator scaling is
    undone.  The residual is recomputed here via polynomial arithmetic.
    """
    if solution.status is not Status.OPTIMAL:
        raise CertificateError(f"cannot extract a certificate from status {solution.status.value}")
    n = program.num_vars
    sblock = _solver_block_indices(program)

    weights: list[SosWeight] = []
    for blk, sb in zip(program.blocks, sblock):
        size = len(blk.basis)
        gram = np.zeros((size, size))
        if sb is not None:
            sub = solution.X[sb]
            idx = np.asarray(blk.kept, dtype=int)
            gram[np.ix_(idx, idx)] = 0.5 * (sub + sub.T)
        gram /= float(blk.scale)
        weights.append(SosWeight(tag=blk.tag, index=blk.gen_index, basis=list(blk.basis), gram=gram))

    multipliers: list[tuple[int, Polynomial]] = []
    offset = 0
    for eb in program.eq_blocks:
        coeffs = solution.free[offset : offset + len(eb.basis)]
        offset += len(eb.basis)
        terms = {mono: float(cv) / float(eb.scale) for mono, cv in zip(eb.basis, coeffs)}
        multipliers.append((eb.index, Polynomial(n, terms)))

    lam: Coeff = 0.0
    if program.lambda_index is not None:
        lam = float(solution.free[program.lambda_index])

    cert = ModuleCertificate(
        num_vars=n,
        order=program.order,
        lam=lam,
        lam_sign=program.lambda_sign,
        sos_weights=weights,
        eq_multipliers=multipliers,
        residual=0.0,
        family=program.family,
    )
    gens = _original_generators(program)
    cert.residual = (cert.reconstruct(gens) - cert.expected(program.target)).l1_norm()
    return cert


def _original_generators(program: MembershipProgram) -> GeneratorSet:
    ineq = []
    cf_index = None
    for blk in program.blocks:
        if blk.tag == "sigma0":
            continue
        if blk.tag == "cf":
            cf_index = blk.gen_index
        ineq.append(blk.generator.scale(blk.scale))
    eq = [eb.generator.scale(eb.scale) for eb in program.eq_blocks]
    return GeneratorSet(num_vars=program.num_vars, ineq=tuple(ineq), eq=tuple(eq), cf_index=cf_index)


def program_generators(program: MembershipProgram) -> GeneratorSet:
    """Unscaled generator set matching a built program (for verification)."""
    return _original_generators(program)


# ---------------------------------------------------------------------------
# quadratic-module transformation: drop the bound generator
# ---------------------------------------------------------------------------


def _merge_sigma0(w0: SosWeight, wcf: SosWeight, c: Coeff) -> SosWeight:
    """sigma_0' = sigma_0 + c * psi as a single Gram block over a merged basis."""
    basis = sorted(set(w0.basis) | set(wcf.basis), key=grlex_key)
    pos = {m: i for i, m in enumerate(basis)}
    s = len(basis)
    merged: list[list[Coeff]] = [[0] * s for _ in range(s)]
    rows0 = w0.gram.tolist() if isinstance(w0.gram, np.ndarray) else w0.gram
    rowsc = wcf.gram.tolist() if isinstance(wcf.gram, np.ndarray) else wcf.gram
    for i, mi in enumerate(w0.basis):
        pi = pos[mi]
        for j, mj in enumerate(w0.basis):
            merged[pi][pos[mj]] += rows0[i][j]
    for i, mi in enumerate(wcf.basis):
        pi = pos[mi]
        for j, mj in enumerate(wcf.basis):
            merged[pi][pos[mj]] += c * rowsc[i][j]
    exact = any(isinstance(v, Fraction) for row in merged for v in row)
    gram = merged if exact else np.array([[float(v) for v in row] for row in merged])
    return SosWeight(tag="sigma0", index=None, basis=basis, gram=gram)


def corollary_transform(
    cert: ModuleCertificate,
    f: Polynomial,
    gens: GeneratorSet,
    c: Coeff,
) -> tuple[Polynomial, ModuleCertificate]:
    """Fold the bound-generator weight back into the constant block.

    Given a certificate of f itself (lambda = 0) over (g; h; c - f) with SOS
    weight psi on the c - f generator, returns (1 + psi) and a certificate of
    (1 + psi) * f over (g; h): the identity f = q + psi (c - f) rearranges to
    (1 + psi) f = q + c psi, and c psi is PSD-representable since c >= 0.
    The output identity is verified before returning.
    """
    if gens.cf_index is None:
        raise CertificateError("generator set carries no bound generator")
    if cert.lam_sign != 0 and abs(float(cert.lam)) > 1e-12:
        raise CertificateError("transformation applies to certificates of f itself (lambda = 0)")
    if c < 0:
        raise CertificateError("the bound c must be non-negative")
    wcf = cert.weight("cf", gens.cf_index) or cert.weight("cf")
    if wcf is None:
        raise CertificateError("certificate has no weight on the bound generator")
    w0 = cert.weight("sigma0")
    if w0 is None:
        w0 = SosWeight("sigma0", None, [tuple([0] * cert.num_vars)], [[0]])

    one_plus_psi = Polynomial.constant(cert.num_vars, 1) + wcf.polynomial(cert.num_vars)

    new_ineq = [g for j, g in enumerate(gens.ineq) if j != gens.cf_index]
    new_gens = GeneratorSet(num_vars=gens.num_vars, ineq=tuple(new_ineq), eq=gens.eq)

    def shifted(j: int) -> int:
        return j if j < gens.cf_index else j - 1

    new_weights = [_merge_sigma0(w0, wcf, c)]
    for w in cert.sos_weights:
        if w.tag == "sigma0" or (w.tag == "cf" and w.index == gens.cf_index):
            continue
        new_weights.append(SosWeight(tag="ineq", index=shifted(w.index), basis=list(w.basis), gram=w.gram))

    target = one_plus_psi * f
    out = ModuleCertificate(
        num_vars=cert.num_vars,
        order=cert.order,
        lam=0,
        lam_sign=0,
        sos_weights=new_weights,
        eq_multipliers=list(cert.eq_multipliers),
        family="module",
    )
    out.residual = (out.reconstruct(new_gens) - target).l1_norm()
    bound = max(
        DEFAULT_RESIDUAL_TOL * float(1 + target.l1_norm()),
        10.0 * float(cert.residual) + 1e-12,
    )
    if float(out.residual) > bound:
        raise CertificateError(
            f"transformed identity failed verification: residual {float(out.residual):.3e}"
        )
    return one_plus_psi, out


# ---------------------------------------------------------------------------
# sum-of-squares splitting
# ---------------------------------------------------------------------------


@dataclass
class SosDecomposition:
    squares: list[Polynomial]
    truncation_error: float

    def total(self) -> Polynomial:
        out = Polynomial.zero(self.squares[0].num_vars) if self.squares else None
        for s in self.squares:
            out = out + s * s
        return out


def sos_decompose(
    gram: Any,
    basis: Sequence[Monomial],
    num_vars: int | None = None,
    eig_tol: float = DEFAULT_EIG_TOL,
    clip_ratio: float = 1e-7,
) -> SosDecomposition:
    """Split v'Qv into explicit squares via eigendecomposition.

    Eigenvalues below clip_ratio * lambda_max are dropped; the reported
    truncation error bounds the l1 distance between v'Qv and the returned
    sum of squares.  Raises NotPsdError when the matrix is not PSD within
    eig_tol.
    """
    g = _gram_float(gram)
    if g.shape[0] != g.shape[1] or g.shape[0] != len(basis):
        raise ValueError("Gram matrix and basis sizes do not match")
    if num_vars is None:
        num_vars = len(basis[0]) if basis else 1
    g = 0.5 * (g + g.T)
    vals, vecs = np.linalg.eigh(g)
    if vals.size and vals[0] < -eig_tol:
        raise NotPsdError(f"minimum eigenvalue {vals[0]:.3e} is below -eig_tol")
    lam_max = float(vals.max(initial=0.0))
    clip = clip_ratio * max(lam_max, 0.0)
    squares: list[Polynomial] = []
    dropped = 0.0
    s = len(basis)
    for i in range(s):
        lam = float(vals[i])
        vec = vecs[:, i]
        vec_l1 = float(np.abs(vec).sum())
        if lam > clip:
            coeff = math.sqrt(lam)
            terms = {m: coeff * float(v) for m, v in zip(basis, vec) if v != 0.0}
            squares.append(Polynomial(num_vars, terms))
        else:
            dropped += abs(lam) * vec_l1 * vec_l1
    slack = 1e-12 * (1.0 + float(np.abs(g).sum())) * max(1, s) ** 2
    return SosDecomposition(squares=squares, truncation_error=dropped + slack)


# ---------------------------------------------------------------------------
# payload serialization
# ---------------------------------------------------------------------------


def _num_to_payload(v: Coeff):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return float(v)


def _num_from_payload(v) -> Coeff:
    if isinstance(v, str):
        if "/" in v:
            num, den = v.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(v)
    return float(v)


def certificate_to_payload(cert: ModuleCertificate) -> dict:
    def gram_rows(gram):
        rows = gram.tolist() if isinstance(gram, np.ndarray) else gram
        return [[_num_to_payload(v) for v in row] for row in rows]

    return {
        "schema": "popnc.certificate/1",
        "family": cert.family,
        "num_vars": cert.num_vars,
        "order": cert.order,
        "lambda": _num_to_payload(cert.lam),
        "lambda_sign": cert.lam_sign,
        "residual": float(cert.residual),
        "sos_weights": [
            {
                "tag": w.tag,
                "index": w.index,
                "basis": [list(m) for m in w.basis],
                "gram": gram_rows(w.gram),
            }
            for w in cert.sos_weights
        ],
        "eq_multipliers": [
            {
                "index": l,
                "terms": [[list(m), _num_to_payload(cv)] for m, cv in phi.sorted_terms()],
            }
            for l, phi in cert.eq_multipliers
        ],
    }


def certificate_from_payload(payload: dict) -> ModuleCertificate:
    n = int(payload["num_vars"])
    weights = []
    for w in payload["sos_weights"]:
        basis = [tuple(int(e) for e in m) for m in w["basis"]]
        rows = [[_num_from_payload(v) for v in row] for row in w["gram"]]
        exact = any(isinstance(v, Fraction) for row in rows for v in row)
        gram = rows if exact else np.array([[float(v) for v in row] for row in rows])
        weights.append(SosWeight(tag=w["tag"], index=w["index"], basis=basis, gram=gram))
    mults = []
    for m in payload.get("eq_multipliers", []):
        terms = {tuple(int(e) for e in mono): _num_from_payload(cv) for mono, cv in m["terms"]}
        mults.append((int(m["index"]), Polynomial(n, terms)))
    return ModuleCertificate(
        num_vars=n,
        order=int(payload["order"]),
        lam=_num_from_payload(payload["lambda"]),
        lam_sign=int(payload["lambda_sign"]),
        sos_weights=weights,
        eq_multipliers=mults,
        residual=float(payload.get("residual", 0.0)),
        family=payload.get("family", "membership"),
    )


def format_certificate(cert: ModuleCertificate, digits: int = 6, drop_below: float = 1e-9) -> str:
    """Printable certificate; near-zero weight blocks are omitted from the text
    (they remain part of the stored certificate and of verification)."""
    from .problem_io import format_polynomial

    def rounded(p: Polynomial) -> Polynomial:
        return Polynomial(p.num_vars, {m: float(f"%.{digits}g" % float(cv)) for m, cv in p.terms.items()})

    lines = [f"order k = {cert.order}", f"lambda = {float(cert.lam):.{digits}g}"]
    for w in cert.sos_weights:
        if w.frobenius() < drop_below:
            continue
        name = {"sigma0": "sigma_0", "cf": "sigma[c-f]"}.get(w.tag, f"sigma[{(w.index or 0) + 1}]")
        lines.append(f"{name} = {format_polynomial(rounded(w.polynomial(cert.num_vars)))}")
    for l, phi in cert.eq_multipliers:
        if float(phi.l1_norm()) < drop_below:
            continue
        lines.append(f"phi[{l + 1}] = {format_polynomial(rounded(phi))}")
    lines.append(f"identity residual (l1) = {float(cert.residual):.3e}")
    return "\n".join(lines)
