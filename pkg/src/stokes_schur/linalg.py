"""Dense verification kernels and the projected conjugate-gradient driver.

Dense routines (pseudoinverse, rank, symmetric solves) exist to cross-check
the structured sparse paths and are guarded by a problem-size cap so a typo
in a script cannot silently materialize a huge matrix.  The cap applies to
the grid parameter n, defaults to 32, and can be moved with the
STOKES_DENSE_CAP environment variable.

SVD-based routines share one cutoff rule: singular values at or below
max(rows, cols) * eps * sigma_max are treated as zero.  The only nullspace
in this problem family is the constant pressure mode, separated from the
physical spectrum by many orders of magnitude at these sizes, so the auto
rule is safe; an absolute cutoff can be passed for stress tests.

CG is written out explicitly rather than wrapping a canned solver because
the checks pin down iteration counts exactly; the loop applies an optional
projection (to keep iterates in a constraint subspace) and an optional
preconditioner, and records the preconditioned residual history.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg

from .errors import (
    CgDivergenceError,
    DenseCapError,
    FactorizationError,
    InvalidToleranceError,
)

DENSE_CAP_ENV = "STOKES_DENSE_CAP"
DENSE_CAP_DEFAULT = 32

Cutoff = Union[str, float]


def dense_cap() -> int:
    """Current grid-size cap for dense verification paths."""
    raw = os.environ.get(DENSE_CAP_ENV)
    if raw is None:
        return DENSE_CAP_DEFAULT
    try:
        cap = int(raw)
    except ValueError as exc:
        raise InvalidToleranceError(
            f"{DENSE_CAP_ENV} must be an integer, got {raw!r}"
        ) from exc
    if cap < 2:
        raise InvalidToleranceError(f"{DENSE_CAP_ENV} must be >= 2, got {cap}")
    return cap


def guard_dense(n: int, what: str = "dense verification") -> None:
    """Raise DenseCapError if grid size n exceeds the dense cap."""
    cap = dense_cap()
    if n > cap:
        raise DenseCapError(
            f"{what} requested at n={n}, above the cap {cap}; "
            f"raise {DENSE_CAP_ENV} to allow it"
        )


def as_dense(a) -> np.ndarray:
    """Materialize a sparse matrix (or pass a dense array through)."""
    if hasattr(a, "toarray"):
        return a.toarray()
    return np.asarray(a, dtype=float)


def _resolve_cutoff(s: np.ndarray, shape: tuple, cutoff: Cutoff) -> float:
    if isinstance(cutoff, str):
        if cutoff != "auto":
            raise InvalidToleranceError(f"cutoff must be 'auto' or a number, got {cutoff!r}")
        if s.size == 0:
            return 0.0
        return max(shape) * np.finfo(float).eps * float(s[0])
    cut = float(cutoff)
    if cut <= 0.0:
        raise InvalidToleranceError(f"cutoff must be positive, got {cut}")
    return cut


def pseudoinverse(a, cutoff: Cutoff = "auto") -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD of the densified operator.

    Singular values at or below the cutoff (absolute; 'auto' applies the
    max-dimension rule above) are dropped rather than inverted.
    """
    dense = as_dense(a)
    u, s, vt = np.linalg.svd(dense, full_matrices=False)
    cut = _resolve_cutoff(s, dense.shape, cutoff)
    keep = s > cut
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T


def rank_of(a, cutoff: Cutoff = "auto") -> int:
    """Numerical rank: singular values strictly above the cutoff."""
    dense = as_dense(a)
    if min(dense.shape) == 0:
        return 0
    s = np.linalg.svd(dense, compute_uv=False)
    cut = _resolve_cutoff(s, dense.shape, cutoff)
    return int(np.count_nonzero(s > cut))


def sym_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve with a dense SPD matrix through its Cholesky factorization."""
    try:
        factor = scipy.linalg.cho_factor(np.asarray(a, dtype=float), lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise FactorizationError(f"matrix is not SPD: {exc}") from exc
    return scipy.linalg.cho_solve(factor, np.asarray(b, dtype=float))


@dataclass(frozen=True)
class CgOptions:
    rel_tol: float = 1e-10
    max_iter: Optional[int] = None
    record_history: bool = True

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0.0):
            raise InvalidToleranceError(
                f"rel_tol must be positive, got {self.rel_tol}"
            )
        if self.max_iter is not None and self.max_iter < 1:
            raise InvalidToleranceError(
                f"max_iter must be >= 1, got {self.max_iter}"
            )


@dataclass(frozen=True)
class CgResult:
    x: np.ndarray
    iterations: int
    final_rel_residual: float
    converged: bool
    history: list = field(default_factory=list)


def cg_solve(
    apply_a: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    options: Optional[CgOptions] = None,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    precond: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    x0: Optional[np.ndarray] = None,
) -> CgResult:
    """Preconditioned CG on a symmetric positive (semi)definite operator.

    `project` is applied to the right-hand side, the initial guess, and every
    generated direction, which keeps the whole Krylov space inside a
    constraint subspace (mean-zero pressures, in practice).  Convergence is
    declared on the true-residual norm relative to ||b||; b = 0 returns x = 0
    immediately.  Hitting max_iter is reported as converged=False, not an
    error; a NaN/Inf residual or a direction of nonpositive curvature raises,
    since both mean the operator is not SPD on the subspace.
    """
    opts = options or CgOptions()
    b = np.asarray(b, dtype=float)
    if project is not None:
        b = project(b)
    norm_b = np.linalg.norm(b)
    if x0 is None:
        x = np.zeros_like(b)
    else:
        x = np.array(x0, dtype=float)
        if project is not None:
            x = project(x)
    if norm_b == 0.0:
        return CgResult(
            x=np.zeros_like(b),
            iterations=0,
            final_rel_residual=0.0,
            converged=True,
            history=[],
        )
    max_iter = opts.max_iter if opts.max_iter is not None else 10 * b.size

    r = b - apply_a(x) if x.any() else b.copy()
    if project is not None:
        r = project(r)
    z = precond(r) if precond is not None else r
    if project is not None:
        z = project(z)
    p = z.copy()
    rz = float(r @ z)
    history: list = []
    rel = float(np.linalg.norm(r) / norm_b)
    if opts.record_history:
        history.append(rel)
    if rel <= opts.rel_tol:
        return CgResult(x, 0, rel, True, history)

    iterations = 0
    for k in range(1, max_iter + 1):
        ap = apply_a(p)
        if project is not None:
            ap = project(ap)
        pap = float(p @ ap)
        if not np.isfinite(pap):
            raise CgDivergenceError(f"non-finite curvature at iteration {k}")
        if pap <= 0.0:
            raise CgDivergenceError(
                f"direction of nonpositive curvature at iteration {k} "
                f"(p^T A p = {pap:.3e}); operator is not SPD on the subspace"
            )
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        if project is not None:
            r = project(r)
        iterations = k
        rel = float(np.linalg.norm(r) / norm_b)
        if not np.isfinite(rel):
            raise CgDivergenceError(f"non-finite residual at iteration {k}")
        if opts.record_history:
            history.append(rel)
        if rel <= opts.rel_tol:
            return CgResult(x, iterations, rel, True, history)
        z = precond(r) if precond is not None else r
        if project is not None:
            z = project(z)
        rz_new = float(r @ z)
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p

    return CgResult(x, iterations, rel, False, history)
