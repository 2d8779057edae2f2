"""Dense block-diagonal semidefinite programming with status classification.

Problems are given in primal standard form with optional free variables:

    minimize    <C, X> + c' u
    subject to  <A_i, X> + B_i u = b_i,   i = 1..p
                X  block-diagonal PSD,  u free

(`sense="max"` negates the objective internally).  Free variables are
eliminated in a presolve step by an SVD-based projection of the constraints
onto the orthogonal complement of range(B); the reduced pure-PSD problem is
then solved by a primal-dual path-following interior-point method on the
homogeneous self-dual embedding

    A(X) - b tau            = 0
    -A'(y) + C tau - S      = 0
    <C, X> - b'y + kappa    = 0
    X, S PSD,  tau, kappa >= 0

with Nesterov-Todd scaling (the scaling point W with W S W = X) and a
Mehrotra-style adaptive centering parameter.  The Schur complement system is
symmetric positive definite and solved by Cholesky factorization.

Classification follows the embedding: tau bounded away from kappa yields an
optimal solution; tau -> 0 with kappa > 0 (ratio threshold
``infeas_ratio``) yields an infeasibility certificate, which is checked
explicitly before either PrimalInfeasible (Farkas ray y with A'(y) <= 0,
b'y > 0) or DualInfeasible (improving ray X with A(X) = 0, <C,X> < 0) is
declared.  Anything else, including hitting the iteration limit, is reported
as Unknown, never raised.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np


class Status(str, Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"
    UNKNOWN = "unknown"


class SdpStructureError(ValueError):
    """Malformed problem data (dimensions, symmetry)."""


@dataclass
class LinearConstraint:
    """One equality row: sum_b <blocks[b], X_b> + free . u = rhs."""

    blocks: dict[int, np.ndarray]
    free: np.ndarray
    rhs: float


@dataclass
class SdpProblem:
    block_dims: list[int]
    num_free: int
    constraints: list[LinearConstraint]
    obj_blocks: dict[int, np.ndarray] = field(default_factory=dict)
    obj_free: np.ndarray | None = None
    sense: str = "min"
    obj_offset: float = 0.0
    meta: Any = None

    def validate(self) -> None:
        if self.sense not in ("min", "max"):
            raise SdpStructureError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for d in self.block_dims:
            if d < 1:
                raise SdpStructureError("block dimensions must be >= 1")
        if self.num_free < 0:
            raise SdpStructureError("num_free must be >= 0")
        if self.obj_free is not None and len(self.obj_free) != self.num_free:
            raise SdpStructureError("objective free-vector length mismatch")
        for b, mat in self.obj_blocks.items():
            self._check_block(b, mat, "objective")
        for i, con in enumerate(self.constraints):
            if len(con.free) != self.num_free:
                raise SdpStructureError(f"constraint {i}: free-vector length mismatch")
            for b, mat in con.blocks.items():
                self._check_block(b, mat, f"constraint {i}")

    def _check_block(self, b: int, mat: np.ndarray, where: str) -> None:
        if not 0 <= b < len(self.block_dims):
            raise SdpStructureError(f"{where}: block index {b} out of range")
        d = self.block_dims[b]
        if mat.shape != (d, d):
            raise SdpStructureError(f"{where}: block {b} has shape {mat.shape}, expected {(d, d)}")
        if not np.allclose(mat, mat.T, atol=1e-12 * (1.0 + np.abs(mat).max())):
            raise SdpStructureError(f"{where}: block {b} coefficient matrix is not symmetric")


@dataclass
class SolverSettings:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    eig_tol: float = 1e-9
    max_iter: int = 200
    infeas_ratio: float = 1e6
    step_frac: float = 0.98


@dataclass
class SdpSolution:
    status: Status
    X: list[np.ndarray]
    free: np.ndarray
    y: np.ndarray
    obj_primal: float
    obj_dual: float
    residuals: dict[str, float]
    iterations: int
    trace: list[dict] = field(default_factory=list)
    message: str = ""

    def to_payload(self) -> dict:
        return {
            "status": self.status.value,
            "obj_primal": self.obj_primal,
            "obj_dual": self.obj_dual,
            "residuals": self.residuals,
            "iterations": self.iterations,
            "message": self.message,
        }


# ---------------------------------------------------------------------------
# presolve helpers
# ---------------------------------------------------------------------------


def _sym(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


@dataclass
class _Data:
    """Dense internal form (minimization sense)."""

    dims: list[int]
    A: list[np.ndarray]  # per block: (p, nb, nb)
    B: np.ndarray  # (p, q)
    b: np.ndarray  # (p,)
    C: list[np.ndarray]
    c: np.ndarray  # (q,)
    offset: float


def _to_internal(problem: SdpProblem) -> _Data:
    flip = -1.0 if problem.sense == "max" else 1.0
    p = len(problem.constraints)
    q = problem.num_free
    dims = list(problem.block_dims)
    A = [np.zeros((p, d, d)) for d in dims]
    B = np.zeros((p, q))
    b = np.zeros(p)
    for i, con in enumerate(problem.constraints):
        for bi, mat in con.blocks.items():
            A[bi][i] = _sym(np.asarray(mat, dtype=float))
        if q:
            B[i] = np.asarray(con.free, dtype=float)
        b[i] = con.rhs
    C = [np.zeros((d, d)) for d in dims]
    for bi, mat in problem.obj_blocks.items():
        C[bi] = flip * _sym(np.asarray(mat, dtype=float))
    c = np.zeros(q)
    if q and problem.obj_free is not None:
        c = flip * np.asarray(problem.obj_free, dtype=float)
    return _Data(dims, A, B, b, C, c, flip * problem.obj_offset)


def _apply_A(A: list[np.ndarray], X: list[np.ndarray]) -> np.ndarray:
    if not A:
        return np.zeros(0)
    p = A[0].shape[0] if A else 0
    out = np.zeros(p)
    for Ab, Xb in zip(A, X):
        out += np.einsum("ijk,jk->i", Ab, Xb)
    return out


def _apply_At(A: list[np.ndarray], y: np.ndarray) -> list[np.ndarray]:
    return [np.tensordot(y, Ab, axes=1) for Ab in A]


def _inner_blocks(P: list[np.ndarray], Q: list[np.ndarray]) -> float:
    return float(sum(np.tensordot(Pb, Qb) for Pb, Qb in zip(P, Q)))


def _fro_blocks(P: list[np.ndarray]) -> float:
    return math.sqrt(sum(float(np.tensordot(Pb, Pb)) for Pb in P))


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


def solve(problem: SdpProblem, settings: SolverSettings | None = None) -> SdpSolution:
    """Solve an SdpProblem; deterministic for identical inputs and settings.

    Never raises on numerical failure; iteration-limit and ill-posed cases
    come back with status Unknown.  Structural errors do raise.
    """
    problem.validate()
    st = settings or SolverSettings()
    data = _to_internal(problem)
    flip = -1.0 if problem.sense == "max" else 1.0
    sol = _solve_internal(data, st)
    sol.obj_primal = flip * sol.obj_primal
    sol.obj_dual = flip * sol.obj_dual
    return sol


def _solve_internal(data: _Data, st: SolverSettings) -> SdpSolution:
    p = len(data.b)
    q = data.B.shape[1] if data.B.ndim == 2 else 0

    # stage 1: screen all-zero rows (inconsistent ones certify infeasibility)
    keep: list[int] = []
    bscale = 1.0 + float(np.abs(data.b).max()) if p else 1.0
    for i in range(p):
        coefmax = max(
            [float(np.abs(Ab[i]).max()) if Ab[i].size else 0.0 for Ab in data.A] or [0.0]
        )
        if q:
            coefmax = max(coefmax, float(np.abs(data.B[i]).max()))
        if coefmax <= 1e-14:
            if abs(data.b[i]) > 1e-10 * bscale:
                return _infeasible_row_solution(data, i)
        else:
            keep.append(i)
    if len(keep) != p:
        screened = _Data(
            data.dims,
            [Ab[keep] for Ab in data.A],
            data.B[keep] if q else data.B,
            data.b[keep],
            data.C,
            data.c,
            data.offset,
        )
        sol = _solve_eliminated(screened, st)
        y_full = np.zeros(p)
        if sol.y.size == len(keep):
            y_full[np.asarray(keep, dtype=int)] = sol.y
        sol.y = y_full
        return sol
    return _solve_eliminated(data, st)


def _solve_eliminated(data: _Data, st: SolverSettings) -> SdpSolution:
    p = len(data.b)
    q = data.B.shape[1] if data.B.ndim == 2 else 0
    dims = data.dims

    # -- stage 2: eliminate free variables -------------------------------
    if q:
        U, sig, Vt = np.linalg.svd(data.B, full_matrices=True)
        tol = max(data.B.shape) * np.finfo(float).eps * (sig[0] if sig.size else 0.0)
        r = int(np.sum(sig > max(tol, 1e-13)))
        U1, U2 = U[:, :r], U[:, r:]
        V1 = Vt[:r].T
        V2 = Vt[r:].T
        c_null = V2.T @ data.c if V2.size else np.zeros(0)
        if c_null.size and np.abs(c_null).max() > 1e-11 * (1.0 + np.abs(data.c).max()):
            # objective unbounded along a free direction, provided the rest
            # of the problem is feasible at all
            feas = _Data(dims, data.A, data.B, data.b, [np.zeros_like(Cb) for Cb in data.C],
                         np.zeros(q), 0.0)
            probe = _solve_internal(feas, st)
            if probe.status is Status.OPTIMAL:
                ray_dir = V2 @ c_null
                ray = -ray_dir / np.linalg.norm(ray_dir)
                return SdpSolution(
                    status=Status.DUAL_INFEASIBLE,
                    X=[np.zeros((d, d)) for d in dims],
                    free=ray,
                    y=np.zeros(p),
                    obj_primal=float("nan"),
                    obj_dual=float("nan"),
                    residuals={"ray_eq": 0.0, "ray_obj": float(data.c @ ray)},
                    iterations=probe.iterations,
                    message="objective is unbounded along a free-variable direction",
                )
            if probe.status is Status.PRIMAL_INFEASIBLE:
                return probe
            probe.message = "unbounded free direction but feasibility probe inconclusive"
            probe.status = Status.UNKNOWN
            return probe
        w = U1 @ ((V1.T @ data.c) / sig[:r]) if r else np.zeros(p)
        A_red = [np.tensordot(U2.T, Ab, axes=1) for Ab in data.A]
        b_red = U2.T @ data.b
        C_red = [Cb - np.tensordot(w, Ab, axes=1) for Cb, Ab in zip(data.C, data.A)]
        offset = data.offset + float(w @ data.b)

        def recover_u(X: list[np.ndarray]) -> np.ndarray:
            res = data.b - (_apply_A(data.A, X) if data.A else 0.0)
            return V1 @ ((U1.T @ res) / sig[:r]) if r else np.zeros(q)

        def recover_y(y_red: np.ndarray, with_w: bool) -> np.ndarray:
            y = U2 @ y_red
            return y + w if with_w else y

    else:
        A_red, b_red, C_red, offset = data.A, data.b, data.C, data.offset

        def recover_u(X: list[np.ndarray]) -> np.ndarray:
            return np.zeros(0)

        def recover_y(y_red: np.ndarray, with_w: bool) -> np.ndarray:
            return y_red

    reduced = _Data(dims, A_red, data.B, b_red, C_red, data.c, offset)
    inner = _solve_reduced(reduced, st)

    X = inner.X
    if inner.status is Status.OPTIMAL:
        u = recover_u(X)
        y = recover_y(inner.y, with_w=True)
    elif inner.status is Status.PRIMAL_INFEASIBLE:
        u = np.zeros(q)
        y = recover_y(inner.y, with_w=False)
    elif inner.status is Status.DUAL_INFEASIBLE:
        if q:
            res = -(_apply_A(data.A, X) if data.A else np.zeros(p))
            u = V1 @ ((U1.T @ res) / sig[:r]) if r else np.zeros(q)
        else:
            u = np.zeros(0)
        y = np.zeros(len(data.b))
    else:
        u = np.zeros(q)
        y = recover_y(inner.y, with_w=False) if inner.y.size == len(b_red) else np.zeros(len(data.b))

    pobj = _inner_blocks(data.C, X) + float(data.c @ u) + data.offset if inner.status is Status.OPTIMAL else inner.obj_primal
    dobj = float(data.b @ y) + data.offset if inner.status is Status.OPTIMAL else inner.obj_dual
    return SdpSolution(
        status=inner.status,
        X=X,
        free=u,
        y=y,
        obj_primal=pobj,
        obj_dual=dobj,
        residuals=inner.residuals,
        iterations=inner.iterations,
        trace=inner.trace,
        message=inner.message,
    )


def _infeasible_row_solution(data: _Data, row: int) -> SdpSolution:
    p = len(data.b)
    y = np.zeros(p)
    # Farkas ray: A'(y) = 0, b'y = |b_row| > 0
    y[row] = -1.0 if data.b[row] < 0 else 1.0
    return SdpSolution(
        status=Status.PRIMAL_INFEASIBLE,
        X=[np.zeros((d, d)) for d in data.dims],
        free=np.zeros(data.B.shape[1] if data.B.ndim == 2 else 0),
        y=y,
        obj_primal=float("nan"),
        obj_dual=float("nan"),
        residuals={"farkas": 0.0},
        iterations=0,
        message=f"constraint row {row} has zero coefficients but nonzero right-hand side",
    )


def _max_step(P: list[np.ndarray], D: list[np.ndarray], chol: list[np.ndarray]) -> float:
    """sup {alpha : P + alpha D  PSD} for strictly PSD P with factors chol."""
    alpha = math.inf
    for Pb, Db, Lb in zip(P, D, chol):
        Y = np.linalg.solve(Lb, Db)
        Bm = np.linalg.solve(Lb, Y.T)
        lam = float(np.linalg.eigvalsh(_sym(Bm)).min())
        if lam < -1e-16:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def _nt_scaling(X: np.ndarray, S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (W, LX) with W symmetric PD satisfying W S W = X."""
    LX = np.linalg.cholesky(X)
    inner = _sym(LX.T @ S @ LX)
    d, Q = np.linalg.eigh(inner)
    d = np.maximum(d, 1e-300)
    G = (Q * (d ** -0.5)) @ Q.T
    W = _sym(LX @ G @ LX.T)
    return W, LX


def _solve_reduced(data: _Data, st: SolverSettings) -> SdpSolution:
    dims = data.dims
    p = len(data.b)
    nu = sum(dims)

    # row normalization for conditioning; duals are rescaled on exit
    rn = np.ones(p)
    for i in range(p):
        s = math.sqrt(
            sum(float(np.tensordot(Ab[i], Ab[i])) for Ab in data.A) + float(data.b[i]) ** 2
        )
        rn[i] = s if s > 1e-300 else 1.0
    A = [Ab / rn[:, None, None] for Ab in data.A]
    b = data.b / rn
    C = data.C

    def unscale_y(y: np.ndarray) -> np.ndarray:
        return y / rn

    keep = [i for i in range(p) if max(
        [float(np.abs(Ab[i]).max()) for Ab in A] or [0.0]) > 1e-14]
    dropped_inconsistent = [i for i in range(p) if i not in set(keep)
                            and abs(b[i]) > 1e-10 * (1.0 + float(np.abs(b).max()))]
    if dropped_inconsistent:
        i = dropped_inconsistent[0]
        y = np.zeros(p)
        y[i] = 1.0 if b[i] > 0 else -1.0
        return SdpSolution(
            status=Status.PRIMAL_INFEASIBLE,
            X=[np.zeros((d, d)) for d in dims],
            free=np.zeros(0),
            y=unscale_y(y),
            obj_primal=float("nan"), obj_dual=float("nan"),
            residuals={"farkas": 0.0}, iterations=0,
            message="reduced constraints are inconsistent",
        )
    if len(keep) != p:
        sel = np.asarray(keep, dtype=int)
        full_p = p
        A = [Ab[sel] for Ab in A]
        b = b[sel]
        p = len(keep)
    else:
        sel = None
        full_p = p

    def expand_y(y: np.ndarray) -> np.ndarray:
        if sel is None:
            return y
        out = np.zeros(full_p)
        out[sel] = y
        return out

    if nu == 0 or p == 0:
        return _solve_degenerate(data, A, b, C, p, st, expand_y, unscale_y)

    Anorm = max(1.0, max(math.sqrt(sum(float(np.tensordot(Ab[i], Ab[i])) for Ab in A))
                         for i in range(p)))
    bnorm = 1.0 + float(np.linalg.norm(b))
    cnorm = 1.0 + _fro_blocks(C)

    X = [np.eye(d) for d in dims]
    S = [np.eye(d) for d in dims]
    y = np.zeros(p)
    tau, kappa = 1.0, 1.0
    mu0 = (_inner_blocks(X, S) + tau * kappa) / (nu + 1)

    trace: list[dict] = []
    stalls = 0
    message = ""
    A_flat = [Ab.reshape(p, -1) for Ab in A]

    for it in range(st.max_iter):
        mu = (_inner_blocks(X, S) + tau * kappa) / (nu + 1)

        rp = tau * b - _apply_A(A, X)
        AtY = _apply_At(A, y)
        Rd = [tau * Cb - Sb - Ab for Cb, Sb, Ab in zip(C, S, AtY)]
        rg = kappa + _inner_blocks(C, X) - float(b @ y)

        # scaled candidate and user-facing tests
        Xs = [Xb / tau for Xb in X]
        ys = y / tau
        pres = float(np.linalg.norm(_apply_A(A, Xs) - b)) / bnorm
        Zs = [Cb - Ab for Cb, Ab in zip(C, _apply_At(A, ys))]
        dcone = max(max(0.0, -float(np.linalg.eigvalsh(_sym(Zb)).min())) for Zb in Zs)
        dres = dcone / cnorm
        pobj = _inner_blocks(C, Xs) + data.offset
        dobj = float(b @ ys) + data.offset
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))

        trace.append({
            "iter": it, "mu": mu, "tau": tau, "kappa": kappa,
            "pobj": pobj, "dobj": dobj, "pres": pres, "dres": dres, "gap": gap,
            "xnorm": _fro_blocks(Xs), "ynorm": float(np.linalg.norm(ys)),
            "bnorm": bnorm, "cnorm": cnorm,
        })

        if pres <= st.feas_tol and dres <= st.feas_tol and gap <= st.gap_tol:
            return SdpSolution(
                status=Status.OPTIMAL,
                X=Xs, free=np.zeros(0), y=unscale_y(expand_y(ys)),
                obj_primal=pobj, obj_dual=dobj,
                residuals={"primal": pres, "dual": dres, "gap": gap},
                iterations=it, trace=trace,
            )

        if kappa / max(tau, 1e-300) >= st.infeas_ratio:
            by = float(b @ y)
            if by > 1e-300:
                yr = y / by
                Sr = [Sb / by for Sb in S]
                resid = _fro_blocks([Ab + Sb for Ab, Sb in zip(_apply_At(A, yr), Sr)])
                quality = resid / (1.0 + float(np.linalg.norm(yr)) * Anorm)
                if quality <= st.feas_tol:
                    return SdpSolution(
                        status=Status.PRIMAL_INFEASIBLE,
                        X=[np.zeros((d, d)) for d in dims], free=np.zeros(0),
                        y=unscale_y(expand_y(yr)),
                        obj_primal=float("nan"), obj_dual=float("nan"),
                        residuals={"farkas": quality}, iterations=it, trace=trace,
                        message="Farkas certificate of primal infeasibility",
                    )
            cx = _inner_blocks(C, X)
            if cx < -1e-300:
                Xr = [Xb / (-cx) for Xb in X]
                resid = float(np.linalg.norm(_apply_A(A, Xr)))
                quality = resid / (1.0 + _fro_blocks(Xr) * Anorm)
                if quality <= st.feas_tol:
                    return SdpSolution(
                        status=Status.DUAL_INFEASIBLE,
                        X=Xr, free=np.zeros(0), y=np.zeros(full_p),
                        obj_primal=float("nan"), obj_dual=float("nan"),
                        residuals={"ray": quality}, iterations=it, trace=trace,
                        message="improving ray certificate of dual infeasibility",
                    )

        if tau < 1e-12 and kappa < 1e-12:
            message = "tau and kappa both vanished (problem is ill-posed or weakly infeasible)"
            break
        if mu < 1e-16 * (1.0 + mu0):
            message = "complementarity vanished without meeting a convergence test"
            break

        # Newton systems: NT scaling, Schur complement, predictor + corrector
        try:
            scal = [_nt_scaling(Xb, Sb) for Xb, Sb in zip(X, S)]
        except np.linalg.LinAlgError:
            message = "NT scaling failed (iterate left the cone numerically)"
            break
        W = [w for w, _ in scal]
        LXs = [lx for _, lx in scal]
        try:
            LSs = [np.linalg.cholesky(Sb) for Sb in S]
            Sinv = [np.linalg.solve(Sb, np.eye(Sb.shape[0])) for Sb in S]
        except np.linalg.LinAlgError:
            message = "dual block factorization failed"
            break

        M = np.zeros((p, p))
        T_flat = []
        for Ab, Wb, Af in zip(A, W, A_flat):
            Tb = np.matmul(np.matmul(Wb, Ab), Wb)
            T_flat.append(Tb.reshape(p, -1))
            M += Af @ T_flat[-1].T
        M = _sym(M)
        L = None
        base = float(np.mean(np.diag(M))) + 1e-300
        for jit in (0.0, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6):
            try:
                L = np.linalg.cholesky(M + jit * base * np.eye(p))
                break
            except np.linalg.LinAlgError:
                continue
        if L is None:
            message = "Schur complement factorization failed"
            break

        def msolve(rhs: np.ndarray) -> np.ndarray:
            return np.linalg.solve(L.T, np.linalg.solve(L, rhs))

        WCW = [Wb @ Cb @ Wb for Wb, Cb in zip(W, C)]
        hc = _apply_A(A, WCW)
        cw = _inner_blocks(C, WCW)
        v0 = msolve(hc + b)

        def direction(sigma: float, eta: float):
            E = [sigma * mu * Si - Xb - eta * (Wb @ Rb @ Wb)
                 for Si, Xb, Wb, Rb in zip(Sinv, X, W, Rd)]
            rhs1 = eta * rp - _apply_A(A, E)
            u0 = msolve(rhs1)
            rhs2 = -eta * rg - _inner_blocks(C, E) - (sigma * mu - tau * kappa) / tau
            denom = float((hc - b) @ v0) - cw - kappa / tau
            if abs(denom) < 1e-300:
                return None
            dtau = (rhs2 - float((hc - b) @ u0)) / denom
            dy = u0 + v0 * dtau
            AtDy = _apply_At(A, dy)
            dS = [_sym(Cb * dtau - Ab + eta * Rb) for Cb, Ab, Rb in zip(C, AtDy, Rd)]
            dX = [_sym(Eb + (Wb @ Ab @ Wb) - WCWb * dtau)
                  for Eb, Wb, Ab, WCWb in zip(E, W, AtDy, WCW)]
            dkappa = (sigma * mu - tau * kappa - kappa * dtau) / tau
            return dX, dy, dS, dtau, dkappa

        aff = direction(0.0, 1.0)
        if aff is None:
            message = "singular Newton system"
            break
        dXa, dya, dSa, dtaua, dkappaa = aff
        alpha_a = min(
            _max_step(X, dXa, LXs),
            _max_step(S, dSa, LSs),
            (-tau / dtaua) if dtaua < 0 else math.inf,
            (-kappa / dkappaa) if dkappaa < 0 else math.inf,
        )
        alpha_a = min(1.0, st.step_frac * alpha_a)
        mu_aff = (
            _inner_blocks([Xb + alpha_a * D for Xb, D in zip(X, dXa)],
                          [Sb + alpha_a * D for Sb, D in zip(S, dSa)])
            + (tau + alpha_a * dtaua) * (kappa + alpha_a * dkappaa)
        ) / (nu + 1)
        sigma = min(0.999, max(1e-8, (max(mu_aff, 0.0) / mu) ** 3))

        combo = direction(sigma, 1.0 - sigma)
        if combo is None:
            message = "singular Newton system"
            break
        dX, dy, dS, dtau, dkappa = combo
        alpha = min(
            _max_step(X, dX, LXs),
            _max_step(S, dS, LSs),
            (-tau / dtau) if dtau < 0 else math.inf,
            (-kappa / dkappa) if dkappa < 0 else math.inf,
        )
        alpha = min(1.0, st.step_frac * alpha)
        if not math.isfinite(alpha) or alpha <= 1e-10:
            stalls += 1
            if stalls >= 3:
                message = "step length collapsed"
                break
            alpha = max(alpha, 1e-10)
        else:
            stalls = 0

        X = [_sym(Xb + alpha * D) for Xb, D in zip(X, dX)]
        S = [_sym(Sb + alpha * D) for Sb, D in zip(S, dS)]
        y = y + alpha * dy
        tau += alpha * dtau
        kappa += alpha * dkappa

        if not all(map(math.isfinite, [tau, kappa])) or any(
            not np.all(np.isfinite(Xb)) for Xb in X
        ):
            message = "numerical breakdown (non-finite iterate)"
            break
    else:
        message = "iteration limit reached"

    Xs = [Xb / tau for Xb in X] if tau > 1e-300 else [np.zeros((d, d)) for d in dims]
    ys = y / tau if tau > 1e-300 else np.zeros(p)
    return SdpSolution(
        status=Status.UNKNOWN,
        X=Xs, free=np.zeros(0), y=unscale_y(expand_y(ys)),
        obj_primal=_inner_blocks(C, Xs) + data.offset,
        obj_dual=float(b @ ys) + data.offset,
        residuals={"tau": tau, "kappa": kappa},
        iterations=len(trace), trace=trace, message=message or "no convergence",
    )


def _solve_degenerate(data, A, b, C, p, st, expand_y, unscale_y) -> SdpSolution:
    """No constraints left, or no PSD blocks: solved in closed form."""
    dims = data.dims
    if p == 0:
        eigmins = [float(np.linalg.eigvalsh(_sym(Cb)).min()) if Cb.size else 0.0 for Cb in C]
        if all(m >= -1e-12 * (1.0 + _fro_blocks(C)) for m in eigmins):
            return SdpSolution(
                status=Status.OPTIMAL,
                X=[np.zeros((d, d)) for d in dims], free=np.zeros(0),
                y=unscale_y(expand_y(np.zeros(0))),
                obj_primal=data.offset, obj_dual=data.offset,
                residuals={"primal": 0.0, "dual": 0.0, "gap": 0.0},
                iterations=0, message="no active constraints",
            )
        bi = int(np.argmin(eigmins))
        vals, vecs = np.linalg.eigh(_sym(C[bi]))
        v = vecs[:, 0]
        X = [np.zeros((d, d)) for d in dims]
        X[bi] = np.outer(v, v)
        return SdpSolution(
            status=Status.DUAL_INFEASIBLE,
            X=X, free=np.zeros(0), y=unscale_y(expand_y(np.zeros(0))),
            obj_primal=float("nan"), obj_dual=float("nan"),
            residuals={"ray": 0.0}, iterations=0,
            message="objective block is indefinite with no constraints",
        )
    # no PSD blocks: all rows were zero-coefficient and already screened
    return SdpSolution(
        status=Status.OPTIMAL,
        X=[], free=np.zeros(0), y=unscale_y(expand_y(np.zeros(p))),
        obj_primal=data.offset, obj_dual=data.offset,
        residuals={"primal": 0.0, "dual": 0.0, "gap": 0.0},
        iterations=0, message="no semidefinite blocks",
    )


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def condition_report(problem: SdpProblem) -> dict:
    """Structural and scaling diagnostics used in emitted reports."""
    lo, hi = math.inf, 0.0
    for con in problem.constraints:
        for mat in con.blocks.values():
            nz = np.abs(mat[mat != 0])
            if nz.size:
                lo = min(lo, float(nz.min()))
                hi = max(hi, float(nz.max()))
        nz = np.abs(con.free[con.free != 0]) if len(con.free) else np.zeros(0)
        if nz.size:
            lo = min(lo, float(nz.min()))
            hi = max(hi, float(nz.max()))
    report = {
        "psd_block_dims": list(problem.block_dims),
        "num_constraints": len(problem.constraints),
        "num_free": problem.num_free,
        "sense": problem.sense,
        "coeff_abs_range": None if hi == 0.0 else [lo, hi],
        "rhs_abs_max": max((abs(c.rhs) for c in problem.constraints), default=0.0),
    }
    meta = problem.meta
    if meta is not None and hasattr(meta, "eq_blocks"):
        report["free_multiplier_dims"] = [len(eb.basis) for eb in meta.eq_blocks]
        report["decision_scalar"] = meta.lambda_index is not None
        report["order"] = meta.order
    return report


def dump_sdp(problem: SdpProblem, stream) -> None:
    """Write the problem in the plain-text exchange format (docs/sdp_dump_format.md)."""
    close = False
    if isinstance(stream, (str, bytes)):
        stream = open(stream, "w", encoding="utf-8")
        close = True
    try:
        w = stream.write
        w("popnc-sdp 1\n")
        w(f"sense {problem.sense}\n")
        w(f"blocks {len(problem.block_dims)}\n")
        for i, d in enumerate(problem.block_dims):
            w(f"block {i} psd {d}\n")
        w(f"free {problem.num_free}\n")
        w(f"offset {problem.obj_offset!r}\n")
        w("objective\n")
        for bi, mat in sorted(problem.obj_blocks.items()):
            for (r, c) in zip(*np.nonzero(np.triu(mat))):
                w(f"  obj {bi} {r} {c} {mat[r, c]!r}\n")
        if problem.obj_free is not None:
            for j in np.nonzero(problem.obj_free)[0]:
                w(f"  objfree {j} {problem.obj_free[j]!r}\n")
        for i, con in enumerate(problem.constraints):
            w(f"constraint {i} rhs {con.rhs!r}\n")
            for bi in sorted(con.blocks):
                mat = con.blocks[bi]
                for (r, c) in zip(*np.nonzero(np.triu(mat))):
                    w(f"  entry {bi} {r} {c} {mat[r, c]!r}\n")
            for j in np.nonzero(con.free)[0]:
                w(f"  freecoef {j} {con.free[j]!r}\n")
        w("end\n")
    finally:
        if close:
            stream.close()
