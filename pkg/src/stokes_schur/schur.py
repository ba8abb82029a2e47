"""Structured pressure Schur complements and their low-rank inverses.

For the enclosed staggered Stokes system the pressure Schur complement
S = B A^{-1} B^T collapses to closed forms:

  Neumann velocity BC   S_N = I - e e^T, the orthogonal projector onto
                        mean-zero pressures, where e = h * ones is the unit
                        discrete constant.  S_N is its own pseudoinverse.

  Dirichlet velocity BC A_D = A_N + (2/h^2) I_pert differs from A_N on r
                        marked velocity rows, so by Sherman-Morrison-Woodbury

                            S_D       = S_N - W^T K1^{-1} W
                            pinv(S_D) = S_N + W^T K2^{-1} W

                        with W = U A_N^{-1} B^T (r coupling rows),
                        K1 = (h^2/2) I_r + U A_N^{-1} U^T and
                        K2 = K1 - W W^T, both r x r and SPD.

  Full perturbation     when I_pert is the identity the correction has the
                        closed form pinv(S_D) = S_N + (2/h^2) pinv(B B^T),
                        with B B^T the pressure-space Neumann Laplacian.

A SchurRep carries whichever pieces its kind needs and exposes a matrix-free
apply plus a dense materialize (capped; see linalg.guard_dense).  W is
computed as A_N^{-1} B^T restricted to the marked rows, reusing one sparse
LU of A_N for all r right-hand sides; no SVD enters the structured path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import FactorizationError, ModeMismatchError, StructuralError
from .grid import StaggeredGrid
from .linalg import as_dense, guard_dense, pseudoinverse, sym_solve
from .operators import FULL, OperatorSet, build_operator_set

NEUMANN = "neumann"
DIRICHLET = "dirichlet"
DIRICHLET_INVERSE = "dirichlet_inverse"
LIMITING_INVERSE = "limiting_inverse"


def pressure_constant(grid: StaggeredGrid) -> np.ndarray:
    """Unit-norm discrete constant pressure, h * ones(dim_p)."""
    return np.full(grid.dim_p, grid.h)


def _cho_structural(a: np.ndarray, label: str):
    # these kernels are provably SPD; a failure means broken assembly
    try:
        return scipy.linalg.cho_factor(a, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise StructuralError(
            f"{label} failed to factorize although it is SPD by construction: {exc}"
        ) from exc


def _check_grids(grid: StaggeredGrid, ops: OperatorSet) -> None:
    if grid.n != ops.grid.n:
        raise ValueError(
            f"grid (n={grid.n}) and operator set (n={ops.grid.n}) disagree"
        )


@dataclass(frozen=True)
class SchurRep:
    """One Schur complement (or inverse) in structured form.

    kind selects the formula applied by apply(); base is the unit constant
    pressure vector, factor the r coupling rows W, kernel the r x r core
    (K1 for the direct form, K2 for the inverse) kept both as a matrix and
    factorized, and pressure_laplacian_pinv the unscaled pinv(B B^T) of the
    limiting form.  Instances come from the build_* functions below.
    """

    kind: str
    grid: StaggeredGrid
    mode: Optional[str]
    base: np.ndarray
    factor: Optional[np.ndarray] = None
    kernel: Optional[np.ndarray] = None
    kernel_factor: Optional[tuple] = None
    pressure_laplacian_pinv: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.grid.dim_p

    @property
    def rank_correction(self) -> int:
        """Rank budget of the deviation from the mean-zero projector."""
        if self.kind == NEUMANN:
            return 0
        if self.factor is not None:
            return self.factor.shape[0]
        return self.dim - 1

    def project(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto mean-zero pressures (apply of S_N)."""
        e = self.base
        return x - e * float(e @ x)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Matrix-free product with the represented operator."""
        x = np.asarray(x, dtype=float)
        out = self.project(x)
        if self.kind == NEUMANN:
            return out
        if self.kind == LIMITING_INVERSE:
            h = self.grid.h
            return out + (2.0 / (h * h)) * (self.pressure_laplacian_pinv @ x)
        coupled = scipy.linalg.cho_solve(self.kernel_factor, self.factor @ x)
        if self.kind == DIRICHLET:
            return out - self.factor.T @ coupled
        if self.kind == DIRICHLET_INVERSE:
            return out + self.factor.T @ coupled
        raise ValueError(f"unknown Schur kind {self.kind!r}")

    def materialize(self) -> np.ndarray:
        """Dense matrix of the represented operator (size-capped)."""
        guard_dense(self.grid.n, f"materializing a {self.kind} Schur form")
        e = self.base
        out = np.eye(self.dim) - np.outer(e, e)
        if self.kind == NEUMANN:
            return out
        if self.kind == LIMITING_INVERSE:
            h = self.grid.h
            return out + (2.0 / (h * h)) * self.pressure_laplacian_pinv
        coupled = scipy.linalg.cho_solve(self.kernel_factor, self.factor)
        if self.kind == DIRICHLET:
            return out - self.factor.T @ coupled
        if self.kind == DIRICHLET_INVERSE:
            return out + self.factor.T @ coupled
        raise ValueError(f"unknown Schur kind {self.kind!r}")


def build_schur_neumann(grid: StaggeredGrid) -> SchurRep:
    """S_N as a structured projector; no factorization is needed."""
    return SchurRep(
        kind=NEUMANN, grid=grid, mode=None, base=pressure_constant(grid)
    )


def _coupling_blocks(ops: OperatorSet) -> tuple[np.ndarray, np.ndarray]:
    """Shared rank-r data: W = U A_N^{-1} B^T and K1 = (h^2/2)I + U A_N^{-1}U^T.

    One sparse LU of A_N serves all r right-hand sides; W falls out as
    (B Z)^T with Z = A_N^{-1} U^T because A_N is symmetric.
    """
    try:
        lu = splu(ops.A_N.tocsc())
    except RuntimeError as exc:
        raise FactorizationError(
            f"LU of the Neumann Laplacian failed: {exc}"
        ) from exc
    z = lu.solve(ops.U.T.toarray())
    w = np.asarray((ops.B @ z).T)
    h = ops.grid.h
    k1 = 0.5 * h * h * np.eye(ops.r) + np.asarray(ops.U @ z)
    k1 = 0.5 * (k1 + k1.T)
    return w, k1


def build_schur_dirichlet(grid: StaggeredGrid, ops: OperatorSet) -> SchurRep:
    """S_D = S_N - W^T K1^{-1} W in rank-r form for the given perturbation."""
    _check_grids(grid, ops)
    w, k1 = _coupling_blocks(ops)
    return SchurRep(
        kind=DIRICHLET,
        grid=grid,
        mode=ops.mode,
        base=pressure_constant(grid),
        factor=w,
        kernel=k1,
        kernel_factor=_cho_structural(k1, "K1"),
    )


def build_schur_dirichlet_inverse(
    grid: StaggeredGrid, ops: OperatorSet
) -> SchurRep:
    """pinv(S_D) = S_N + W^T K2^{-1} W with K2 = K1 - W W^T."""
    _check_grids(grid, ops)
    w, k1 = _coupling_blocks(ops)
    k2 = k1 - w @ w.T
    k2 = 0.5 * (k2 + k2.T)
    return SchurRep(
        kind=DIRICHLET_INVERSE,
        grid=grid,
        mode=ops.mode,
        base=pressure_constant(grid),
        factor=w,
        kernel=k2,
        kernel_factor=_cho_structural(k2, "K2"),
    )


def build_limiting_inverse(
    grid: StaggeredGrid, ops: Optional[OperatorSet] = None
) -> SchurRep:
    """pinv(S_D) = S_N + (2/h^2) pinv(B B^T) for an identity perturbation.

    Valid whenever I_pert is the identity matrix, which the full mode always
    produces and the boundary mode produces exactly at n = 2 (every node is
    wall-adjacent there).  When no operator set is passed, full-mode
    operators are assembled internally.
    """
    if ops is None:
        ops = build_operator_set(grid, FULL)
    _check_grids(grid, ops)
    gap = ops.I_pert - sp.identity(grid.dim_velocity, format="csr")
    gap.eliminate_zeros()
    if gap.nnz != 0:
        raise ModeMismatchError(
            "limiting-case inverse needs an identity perturbation; "
            f"mode {ops.mode!r} at n={grid.n} leaves "
            f"{grid.dim_velocity - ops.r} rows unmarked"
        )
    guard_dense(grid.n, "limiting-case pseudoinverse")
    bbt = as_dense(ops.B @ ops.B.T)
    lap_pinv = pseudoinverse(bbt)
    lap_pinv = 0.5 * (lap_pinv + lap_pinv.T)
    return SchurRep(
        kind=LIMITING_INVERSE,
        grid=grid,
        mode=ops.mode,
        base=pressure_constant(grid),
        pressure_laplacian_pinv=lap_pinv,
    )


def schur_dense_oracle(a, b) -> np.ndarray:
    """Reference S = B A^{-1} B^T straight from the definition (size-capped).

    Takes the momentum block A (SPD) and the divergence B as matrices; the
    size guard is inferred from the pressure dimension.  A singular or
    indefinite A surfaces as a factorization error.
    """
    n_eff = math.isqrt(b.shape[0])
    guard_dense(max(n_eff, 2), "dense Schur oracle")
    b_dense = as_dense(b)
    a_dense = as_dense(a)
    s = b_dense @ sym_solve(a_dense, b_dense.T)
    return 0.5 * (s + s.T)


def helmholtz_split(
    grid: StaggeredGrid, ops: OperatorSet, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Split a velocity field into divergence-free and curl-free parts.

    Returns (w_div, w_curl) with B w_div = 0, C w_curl = 0 and
    w = w_div + w_curl; the parts are orthogonal because the row spaces of B
    and C are complementary.  Dense pseudoinverse based, hence size-capped.
    """
    _check_grids(grid, ops)
    guard_dense(grid.n, "Helmholtz splitting")
    w = np.asarray(w, dtype=float)
    if w.shape != (grid.dim_velocity,):
        raise ValueError(
            f"velocity vector has shape {w.shape}, expected ({grid.dim_velocity},)"
        )
    w_curl = pseudoinverse(ops.B) @ (ops.B @ w)
    w_div = w - w_curl
    return w_div, w_curl


def laplacian_inverse_split_check(grid: StaggeredGrid, ops: OperatorSet) -> float:
    """Frobenius error of inv(A_N) = pinv(B^T B) + pinv(C^T C) (size-capped)."""
    _check_grids(grid, ops)
    guard_dense(grid.n, "Laplacian inverse splitting")
    a = as_dense(ops.A_N)
    btb = as_dense(ops.B.T @ ops.B)
    ctc = as_dense(ops.C.T @ ops.C)
    resid = np.linalg.inv(a) - pseudoinverse(btb) - pseudoinverse(ctc)
    return float(np.linalg.norm(resid, "fro"))


def count_nonunit_eigenvalues(s, tol: float = 1e-8) -> int:
    """Number of eigenvalues of a symmetric matrix away from 1 by more than tol."""
    if isinstance(s, SchurRep):
        s = s.materialize()
    vals = np.linalg.eigvalsh(as_dense(s))
    return int(np.count_nonzero(np.abs(vals - 1.0) > tol))
