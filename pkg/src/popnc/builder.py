"""Assembly of truncated quadratic-module membership programs as SDPs.

A membership program at order k asks for sum-of-squares weights sigma_j with
Gram bases of degree <= k - v_j (v_j the generator half-degree, v_0 = 0 for
the constant generator) and free polynomial multipliers phi_l of degree
<= 2k - w_l such that

    sigma_0 + sum_j sigma_j * g_j + sum_l phi_l * h_l  (+/- lambda)  =  target

holds as a polynomial identity of degree <= 2k.  Coefficient matching over
the monomials of degree <= 2k yields the linear constraints of a
block-diagonal semidefinite program; the decision scalar lambda (when
present) and the phi coefficients enter as free variables.

Three program families share this machinery:

* hierarchy step:   maximize lambda with target f over (g; h; c - f),
* boundedness test: minimize lambda with target -(x1^2 + ... + xn^2) over the
  same generators (finite value certifies an Archimedean module),
* coercivity test:  maximize mu with target f_d over the single equality
  generator x1^2 + ... + xn^2 - 1.

Generators are rescaled to unit l1 norm before assembly for conditioning;
extraction undoes the scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .polynomial import (
    Coeff,
    Monomial,
    Polynomial,
    grlex_key,
    monomial_mul,
    sum_of_squared_variables,
)
from .sdp import LinearConstraint, SdpProblem


class Direction(str, Enum):
    MAXIMIZE = "maximize_lambda"
    MINIMIZE = "minimize_lambda"
    FEASIBILITY = "feasibility"


def monomial_basis(num_vars: int, max_degree: int) -> list[Monomial]:
    """All monomials of total degree <= max_degree in graded-lex order.

    Length is C(num_vars + max_degree, num_vars).
    """
    if num_vars < 1:
        raise ValueError("num_vars must be >= 1")
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    basis: list[Monomial] = []

    def rec(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            basis.append(tuple(prefix + [remaining]))
            return
        for e in range(remaining + 1):
            rec(prefix + [e], remaining - e, slots - 1)

    out: list[Monomial] = []
    for d in range(max_degree + 1):
        basis.clear()
        rec([], d, num_vars)
        out.extend(sorted(basis, key=grlex_key))
    return out


def basis_size(num_vars: int, max_degree: int) -> int:
    return math.comb(num_vars + max_degree, num_vars)


@dataclass(frozen=True)
class GeneratorSet:
    """Inequality and equality generators with derived degree data.

    ``cf_index`` marks the position (within ``ineq``) of a bound generator of
    the form c - f when one has been appended; it is tagged separately in
    certificates.
    """

    num_vars: int
    ineq: tuple[Polynomial, ...] = ()
    eq: tuple[Polynomial, ...] = ()
    cf_index: int | None = None

    def __post_init__(self):
        for p in (*self.ineq, *self.eq):
            if p.num_vars != self.num_vars:
                raise ValueError("generator variable count does not match")
        if self.cf_index is not None and not 0 <= self.cf_index < len(self.ineq):
            raise ValueError("cf_index out of range")

    @property
    def half_degrees(self) -> list[int]:
        """v_j = ceil(deg(g_j) / 2), recomputed from the generators."""
        return [(g.degree() + 1) // 2 for g in self.ineq]

    @property
    def eq_degrees(self) -> list[int]:
        """w_l = deg(h_l)."""
        return [h.degree() for h in self.eq]


def min_order(gens: GeneratorSet, target: Polynomial) -> int:
    """Smallest order k at which the membership program is well formed."""
    k = max(1, (target.degree() + 1) // 2)
    for v in gens.half_degrees:
        k = max(k, v)
    for w in gens.eq_degrees:
        k = max(k, (w + 1) // 2)
    return k


@dataclass
class SosBlock:
    """One SOS weight: its (scaled) generator, full Gram basis and the subset
    of basis elements retained after structural reduction."""

    tag: str  # "sigma0" | "ineq" | "cf"
    gen_index: int | None
    generator: Polynomial  # scaled by 1/scale
    scale: Coeff
    basis: list[Monomial]
    kept: list[int] = field(default_factory=list)

    @property
    def kept_basis(self) -> list[Monomial]:
        return [self.basis[i] for i in self.kept]


@dataclass
class EqBlock:
    index: int
    generator: Polynomial  # scaled by 1/scale
    scale: Coeff
    basis: list[Monomial]


@dataclass
class MembershipProgram:
    """Structural description of a membership program; kept alongside the
    numeric SdpProblem so that solutions can be mapped back to certificates."""

    num_vars: int
    order: int
    target: Polynomial
    direction: Direction
    blocks: list[SosBlock]
    eq_blocks: list[EqBlock]
    constraint_index: list[Monomial]
    lambda_index: int | None  # position of lambda in the free-variable vector
    family: str = "membership"
    c: Coeff | None = None

    @property
    def lambda_sign(self) -> int:
        """Sign s in the identity  sum(...) + s*lambda = target."""
        if self.direction is Direction.MAXIMIZE:
            return 1
        if self.direction is Direction.MINIMIZE:
            return -1
        return 0


def _scaled(p: Polynomial) -> tuple[Polynomial, Coeff]:
    s = p.l1_norm()
    if s == 0:
        return p, 1
    one = Fraction(1) if isinstance(s, Fraction) else 1.0
    return p.scale(one / s), s


def _reduce_bases(blocks: list[SosBlock], eq_blocks: list[EqBlock],
                  target: Polynomial, lambda_sign: int) -> None:
    """Drop Gram-basis monomials whose diagonal entries are forced to zero.

    A coefficient-matching row whose only contributions are PSD diagonal
    entries, all entering with the same strict sign and with no free-variable
    term, forces those diagonal entries (hence their rows and columns) to
    zero whenever the matched target coefficient is zero.  Removing them
    never changes the feasible set, and it turns several structurally
    infeasible programs into strongly infeasible SDPs that the solver can
    classify.  Runs to a fixpoint.
    """
    free_reach: set[Monomial] = set()
    for eb in eq_blocks:
        for beta in eb.basis:
            for delta in eb.generator.terms:
                free_reach.add(monomial_mul(beta, delta))
    if lambda_sign != 0:
        free_reach.add(tuple([0] * target.num_vars))

    while True:
        # diag[mono] -> list of (block index, basis position, summed coefficient)
        diag: dict[Monomial, list[tuple[int, int, float]]] = {}
        offdiag: set[Monomial] = set()
        for bi, blk in enumerate(blocks):
            kept = blk.kept
            gen_terms = blk.generator.sorted_terms()
            for ai_pos, ai in enumerate(kept):
                ma = blk.basis[ai]
                for bj in kept[ai_pos:]:
                    mono_ab = monomial_mul(ma, blk.basis[bj])
                    if ai == bj:
                        acc: dict[Monomial, Coeff] = {}
                        for delta, co in gen_terms:
                            mono = monomial_mul(mono_ab, delta)
                            acc[mono] = acc.get(mono, 0) + co
                        for mono, co in acc.items():
                            if co != 0:
                                diag.setdefault(mono, []).append((bi, ai, float(co)))
                    else:
                        for delta, co in gen_terms:
                            if co != 0:
                                offdiag.add(monomial_mul(mono_ab, delta))

        to_drop: set[tuple[int, int]] = set()
        for mono, entries in diag.items():
            if mono in offdiag or mono in free_reach:
                continue
            if target.coefficient(mono) != 0:
                continue
            signs = {co > 0 for _, _, co in entries}
            if len(signs) == 1:
                to_drop.update((bi, ai) for bi, ai, _ in entries)
        if not to_drop:
            return
        for bi, blk in enumerate(blocks):
            blk.kept = [i for i in blk.kept if (bi, i) not in to_drop]


def build_membership_program(
    target: Polynomial,
    gens: GeneratorSet,
    k: int,
    direction: Direction | str = Direction.FEASIBILITY,
    family: str = "membership",
    c: Coeff | None = None,
) -> SdpProblem:
    """Assemble the order-k membership SDP for ``target`` over ``gens``.

    The returned SdpProblem carries the MembershipProgram as ``meta``.
    Raises ValueError when k is below the minimal well-formed order.
    """
    direction = Direction(direction)
    if target.num_vars != gens.num_vars:
        raise ValueError("target variable count does not match generators")
    kmin = min_order(gens, target)
    if k < kmin:
        raise ValueError(f"order {k} is below the minimal order {kmin}")
    n = gens.num_vars

    blocks: list[SosBlock] = [
        SosBlock(
            tag="sigma0",
            gen_index=None,
            generator=Polynomial.constant(n, 1),
            scale=1,
            basis=monomial_basis(n, k),
        )
    ]
    for j, g in enumerate(gens.ineq):
        scaled, s = _scaled(g)
        v = gens.half_degrees[j]
        blocks.append(
            SosBlock(
                tag="cf" if j == gens.cf_index else "ineq",
                gen_index=j,
                generator=scaled,
                scale=s,
                basis=monomial_basis(n, k - v),
            )
        )
    for blk in blocks:
        blk.kept = list(range(len(blk.basis)))

    eq_blocks: list[EqBlock] = []
    for l, h in enumerate(gens.eq):
        scaled, s = _scaled(h)
        w = gens.eq_degrees[l]
        eq_blocks.append(EqBlock(index=l, generator=scaled, scale=s,
                                 basis=monomial_basis(n, 2 * k - w)))

    lam_sign = {Direction.MAXIMIZE: 1, Direction.MINIMIZE: -1, Direction.FEASIBILITY: 0}[direction]
    _reduce_bases(blocks, eq_blocks, target, lam_sign)

    num_phi = sum(len(eb.basis) for eb in eq_blocks)
    has_lambda = direction is not Direction.FEASIBILITY
    num_free = num_phi + (1 if has_lambda else 0)
    lambda_index = num_phi if has_lambda else None

    # rows[mono] = (per-block symmetric coefficient matrices, free-var row)
    rows: dict[Monomial, tuple[dict[int, np.ndarray], np.ndarray]] = {}

    def row_for(mono: Monomial) -> tuple[dict[int, np.ndarray], np.ndarray]:
        row = rows.get(mono)
        if row is None:
            row = ({}, np.zeros(num_free))
            rows[mono] = row
        return row

    solver_block_dims: list[int] = []
    solver_block_of: list[int | None] = []  # SosBlock -> SdpProblem block index
    for blk in blocks:
        if blk.kept:
            solver_block_of.append(len(solver_block_dims))
            solver_block_dims.append(len(blk.kept))
        else:
            solver_block_of.append(None)

    for bi, blk in enumerate(blocks):
        sb = solver_block_of[bi]
        if sb is None:
            continue
        dim = len(blk.kept)
        kb = blk.kept_basis
        gen_terms = blk.generator.sorted_terms()
        for a in range(dim):
            for b in range(a, dim):
                mono_ab = monomial_mul(kb[a], kb[b])
                for delta, co in gen_terms:
                    mono = monomial_mul(mono_ab, delta)
                    mats, _ = row_for(mono)
                    mat = mats.get(sb)
                    if mat is None:
                        mat = np.zeros((dim, dim))
                        mats[sb] = mat
                    cf = float(co)
                    mat[a, b] += cf
                    if a != b:
                        mat[b, a] += cf

    offset = 0
    for eb in eq_blocks:
        gen_terms = eb.generator.sorted_terms()
        for pos, beta in enumerate(eb.basis):
            col = offset + pos
            for delta, co in gen_terms:
                mono = monomial_mul(beta, delta)
                _, free_row = row_for(mono)
                free_row[col] += float(co)
        offset += len(eb.basis)

    if has_lambda:
        _, free_row = row_for(tuple([0] * n))
        free_row[lambda_index] += float(lam_sign)

    for mono in target.terms:
        row_for(mono)

    constraint_index = sorted(rows, key=grlex_key)
    constraints = [
        LinearConstraint(
            blocks=rows[mono][0],
            free=rows[mono][1],
            rhs=float(target.coefficient(mono)),
        )
        for mono in constraint_index
    ]

    obj_free = np.zeros(num_free)
    sense = "min"
    if direction is Direction.MAXIMIZE:
        obj_free[lambda_index] = 1.0
        sense = "max"
    elif direction is Direction.MINIMIZE:
        obj_free[lambda_index] = 1.0
        sense = "min"

    meta = MembershipProgram(
        num_vars=n,
        order=k,
        target=target,
        direction=direction,
        blocks=blocks,
        eq_blocks=eq_blocks,
        constraint_index=constraint_index,
        lambda_index=lambda_index,
        family=family,
        c=c,
    )
    problem = SdpProblem(
        block_dims=solver_block_dims,
        num_free=num_free,
        constraints=constraints,
        obj_blocks={},
        obj_free=obj_free,
        sense=sense,
        meta=meta,
    )
    problem.validate()
    return problem


def hierarchy_generators(problem) -> GeneratorSet:
    """Generator set (g; h; c - f) with the bound generator appended last."""
    c = problem.resolved_c()
    n = problem.num_vars
    cf = Polynomial.constant(n, c) - problem.objective
    return GeneratorSet(
        num_vars=n,
        ineq=tuple(problem.inequalities) + (cf,),
        eq=tuple(problem.equalities),
        cf_index=len(problem.inequalities),
    )


def build_hierarchy_step(problem, k: int) -> SdpProblem:
    """Order-k lower-bound program: maximize lambda with f - lambda in M_k(g; h; c - f)."""
    gens = hierarchy_generators(problem)
    return build_membership_program(
        problem.objective, gens, k, Direction.MAXIMIZE,
        family="hierarchy", c=problem.resolved_c(),
    )


def build_archimedean_check(problem, k: int) -> SdpProblem:
    """Order-k boundedness program: minimize lambda with lambda - |x|^2 in M_k(g; h; c - f)."""
    gens = hierarchy_generators(problem)
    target = -sum_of_squared_variables(problem.num_vars)
    return build_membership_program(
        target, gens, k, Direction.MINIMIZE,
        family="archimedean", c=problem.resolved_c(),
    )


def coercivity_min_order(f: Polynomial) -> int:
    d = f.degree()
    return max(1, (d + 1) // 2)


def build_coercivity_check(f: Polynomial, k: int) -> SdpProblem:
    """Order-k coercivity program: maximize mu with f_d - mu = sigma + phi * (|x|^2 - 1).

    f must have even degree >= 2; the top homogeneous component f_d is the
    target and the sphere polynomial enters as an equality generator with a
    free multiplier of degree <= 2k - 2.
    """
    if f.is_zero():
        raise ValueError("coercivity test is undefined for the zero polynomial")
    d = f.degree()
    if d < 2 or d % 2 != 0:
        raise ValueError(f"coercivity requires even degree >= 2, got degree {d}")
    theta = sum_of_squared_variables(f.num_vars) - Polynomial.constant(f.num_vars, 1)
    gens = GeneratorSet(num_vars=f.num_vars, eq=(theta,))
    return build_membership_program(
        f.top_component(), gens, k, Direction.MAXIMIZE, family="coercivity",
    )
