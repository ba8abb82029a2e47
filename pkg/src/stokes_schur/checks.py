"""Property suite: every structural identity measured against its tolerance.

Eleven properties are evaluated per (grid size, perturbation mode) pair, in
a fixed order, each yielding one Check row with the measured error and the
tolerance it must stay under:

  div-of-curl                 B C^T = 0
  curl-of-gradient            C B^T = 0
  mixed-partials              cross derivatives commute on u and v routes
  laplacian-block-diagonal    B^T B + C^T C = A_N, cross blocks exactly zero
  operator-ranks              rank B = n^2 - 1, rank C = (n-1)^2
  helmholtz-split             velocity = Ker B (+) Ker C, stable residuals
  inverse-direct-sum          inv(A_N) = pinv(B^T B) + pinv(C^T C)
  schur-neumann-projector     B inv(A_N) B^T = I - e e^T
  schur-dirichlet-lowrank     B inv(A_D) B^T = S_N - W^T inv(K1) W
  schur-dirichlet-pinv        pinv(S_D) = S_N + W^T inv(K2) W
  limiting-inverse            pinv(S_D) = S_N + (2/h^2) pinv(B B^T), full mode

The first four are sparse-only and run at any size; the rest lean on dense
oracles and are size-capped, a cap violation surfacing as a failed row with
its error message rather than an exception.  Tolerances scale with the
tol_scale factor; random draws come from a generator seeded by (seed, n) so
reports are reproducible and byte-identical across runs.  Runtimes are
measured only on request, keeping default reports deterministic; the
runtime_ms key is always present (null when unmeasured) so round-trips are
lossless either way.

Rows for different (n, mode) pairs are computed independently by a pure
helper and could run concurrently; assembly into the report is a single
ordered pass.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    CgDivergenceError,
    DenseCapError,
    FactorizationError,
    InvalidToleranceError,
    ModeMismatchError,
    StructuralError,
)
from .grid import make_grid
from .linalg import guard_dense, pseudoinverse, rank_of
from .operators import (
    BOUNDARY,
    FULL,
    OperatorSet,
    build_operator_set,
    mixed_derivative_residual,
)
from .schur import (
    build_limiting_inverse,
    build_schur_dirichlet,
    build_schur_dirichlet_inverse,
    build_schur_neumann,
    helmholtz_split,
    laplacian_inverse_split_check,
    schur_dense_oracle,
)

MODES = (BOUNDARY, FULL)

HELMHOLTZ_DRAWS = 10

_CHECK_ERRORS = (
    DenseCapError,
    FactorizationError,
    StructuralError,
    ModeMismatchError,
    CgDivergenceError,
)


@dataclass(frozen=True)
class Check:
    """One measured property at one grid size and mode.

    measured_error is None when evaluation itself failed (for example a
    dense-cap violation); such rows carry the message in error and count as
    failed.  Otherwise passed is exactly measured_error <= tolerance.
    """

    name: str
    statement: str
    n: int
    mode: str
    measured_error: Optional[float]
    tolerance: float
    passed: bool
    error: Optional[str] = None
    runtime_ms: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statement": self.statement,
            "n": self.n,
            "mode": self.mode,
            "measured_error": self.measured_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "error": self.error,
            "runtime_ms": self.runtime_ms,
        }

    @staticmethod
    def from_dict(d: dict) -> "Check":
        return Check(
            name=d["name"],
            statement=d["statement"],
            n=int(d["n"]),
            mode=d["mode"],
            measured_error=(
                None if d["measured_error"] is None else float(d["measured_error"])
            ),
            tolerance=float(d["tolerance"]),
            passed=bool(d["passed"]),
            error=d.get("error"),
            runtime_ms=(
                None if d.get("runtime_ms") is None else float(d["runtime_ms"])
            ),
        )


@dataclass(frozen=True)
class CheckReport:
    """Full suite outcome: inputs, seed, and one Check per (property, n, mode)."""

    ns: tuple
    modes: tuple
    seed: int
    tol_scale: float
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> tuple:
        return tuple(c for c in self.checks if not c.passed)

    def to_json(self) -> str:
        payload = {
            "ns": list(self.ns),
            "modes": list(self.modes),
            "seed": self.seed,
            "tol_scale": self.tol_scale,
            "all_passed": self.all_passed,
            "checks": [c.to_dict() for c in self.checks],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "CheckReport":
        d = json.loads(text)
        return CheckReport(
            ns=tuple(int(n) for n in d["ns"]),
            modes=tuple(d["modes"]),
            seed=int(d["seed"]),
            tol_scale=float(d["tol_scale"]),
            checks=tuple(Check.from_dict(c) for c in d["checks"]),
        )

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for c in self.checks:
            d = c.to_dict()
            writer.writerow(["" if d[k] is None else d[k] for k in CSV_FIELDS])
        return out.getvalue()


CSV_FIELDS = (
    "name",
    "statement",
    "n",
    "mode",
    "measured_error",
    "tolerance",
    "passed",
    "error",
    "runtime_ms",
)


def checks_from_csv(text: str) -> list:
    """Parse rows written by CheckReport.to_csv back into Check objects."""
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for rec in reader:
        rows.append(
            Check(
                name=rec["name"],
                statement=rec["statement"],
                n=int(rec["n"]),
                mode=rec["mode"],
                measured_error=(
                    float(rec["measured_error"]) if rec["measured_error"] else None
                ),
                tolerance=float(rec["tolerance"]),
                passed=rec["passed"] == "True",
                error=rec["error"] or None,
                runtime_ms=float(rec["runtime_ms"]) if rec["runtime_ms"] else None,
            )
        )
    return rows


def _abs_max(m) -> float:
    """Largest magnitude among stored entries of a sparse matrix."""
    coo = m.tocoo()
    if coo.nnz == 0:
        return 0.0
    return float(np.max(np.abs(coo.data)))


def _fro(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, "fro"))


def _check_div_of_curl(grid, ops, seed) -> float:
    return _abs_max(ops.B @ ops.C.T)


def _check_curl_of_gradient(grid, ops, seed) -> float:
    return _abs_max(ops.C @ ops.B.T)


def _check_mixed_partials(grid, ops, seed) -> float:
    return mixed_derivative_residual(grid)


def _check_block_diagonal(grid, ops, seed) -> float:
    du = grid.dim_u
    a = ops.A_N.tocsr()
    b1 = ops.B1d
    btb = (b1.T @ b1).tocsr()
    bbt = (b1 @ b1.T).tocsr()
    eye_shift = sp.identity(grid.n, format="csr")
    eye_align = sp.identity(grid.n - 1, format="csr")
    uu = sp.kron(eye_shift, btb) + sp.kron(bbt, eye_align)
    vv = sp.kron(btb, eye_shift) + sp.kron(eye_align, bbt)
    return max(
        _abs_max(a[:du, du:]),
        _abs_max(a[du:, :du]),
        _abs_max(a[:du, :du] - uu),
        _abs_max(a[du:, du:] - vv),
    )


def _check_operator_ranks(grid, ops, seed) -> float:
    guard_dense(grid.n, "rank verification")
    want_b = grid.n * grid.n - 1
    want_c = (grid.n - 1) ** 2
    return float(abs(rank_of(ops.B) - want_b) + abs(rank_of(ops.C) - want_c))


def _check_helmholtz_split(grid, ops, seed) -> float:
    rng = np.random.default_rng([seed, grid.n])
    worst = 0.0
    for _ in range(HELMHOLTZ_DRAWS):
        w = rng.standard_normal(grid.dim_velocity)
        w_div, w_curl = helmholtz_split(grid, ops, w)
        nrm = float(np.linalg.norm(w))
        worst = max(
            worst,
            float(np.linalg.norm(ops.B @ w_div)) / nrm,
            float(np.linalg.norm(ops.C @ w_curl)) / nrm,
            float(np.linalg.norm(w - w_div - w_curl)) / nrm,
        )
    return worst


def _check_inverse_direct_sum(grid, ops, seed) -> float:
    return laplacian_inverse_split_check(grid, ops)


def _check_schur_neumann(grid, ops, seed) -> float:
    oracle = schur_dense_oracle(ops.A_N, ops.B)
    return _fro(oracle - build_schur_neumann(grid).materialize())


def _check_schur_dirichlet(grid, ops, seed) -> float:
    oracle = schur_dense_oracle(ops.A_D, ops.B)
    return _fro(oracle - build_schur_dirichlet(grid, ops).materialize())


def _check_schur_dirichlet_pinv(grid, ops, seed) -> float:
    oracle = schur_dense_oracle(ops.A_D, ops.B)
    structured = build_schur_dirichlet_inverse(grid, ops).materialize()
    return _fro(pseudoinverse(oracle) - structured)


def _check_limiting_inverse(grid, ops, seed) -> float:
    guard_dense(grid.n, "limiting-case comparison")
    full_ops = ops if ops.mode == FULL else build_operator_set(grid, FULL)
    smw = build_schur_dirichlet_inverse(grid, full_ops).materialize()
    lim = build_limiting_inverse(grid, full_ops).materialize()
    return _fro(smw - lim)


def _tol_sparse(grid) -> float:
    return 1e-12 / (grid.h * grid.h)


def _tol_zero(grid) -> float:
    return 0.0


def _tol_helmholtz(grid) -> float:
    return 1e-9


def _tol_oracle(grid) -> float:
    return 1e-8


def _tol_oracle_wide(grid) -> float:
    return 1e-7


def _tol_conditioned(grid) -> float:
    return 1e-7 if grid.n >= 8 else 1e-8


PROPERTIES = (
    ("div-of-curl", "B C^T = 0", _tol_sparse, _check_div_of_curl),
    ("curl-of-gradient", "C B^T = 0", _tol_sparse, _check_curl_of_gradient),
    (
        "mixed-partials",
        "d/dy d/dx = d/dx d/dy on both velocity components",
        _tol_sparse,
        _check_mixed_partials,
    ),
    (
        "laplacian-block-diagonal",
        "B^T B + C^T C = A_N with exactly zero cross blocks",
        _tol_zero,
        _check_block_diagonal,
    ),
    (
        "operator-ranks",
        "rank B = n^2 - 1 and rank C = (n-1)^2",
        _tol_zero,
        _check_operator_ranks,
    ),
    (
        "helmholtz-split",
        "velocity space = Ker B (+) Ker C with stable splitting",
        _tol_helmholtz,
        _check_helmholtz_split,
    ),
    (
        "inverse-direct-sum",
        "inv(A_N) = pinv(B^T B) + pinv(C^T C)",
        _tol_conditioned,
        _check_inverse_direct_sum,
    ),
    (
        "schur-neumann-projector",
        "B inv(A_N) B^T = I - e e^T",
        _tol_oracle,
        _check_schur_neumann,
    ),
    (
        "schur-dirichlet-lowrank",
        "B inv(A_D) B^T = S_N - W^T inv(K1) W",
        _tol_oracle,
        _check_schur_dirichlet,
    ),
    (
        "schur-dirichlet-pinv",
        "pinv(S_D) = S_N + W^T inv(K2) W",
        _tol_oracle_wide,
        _check_schur_dirichlet_pinv,
    ),
    (
        "limiting-inverse",
        "identity perturbation: pinv(S_D) = S_N + (2/h^2) pinv(B B^T)",
        _tol_oracle_wide,
        _check_limiting_inverse,
    ),
)

PROPERTY_NAMES = tuple(p[0] for p in PROPERTIES)


def checks_for(
    n: int, mode: str, seed: int, tol_scale: float, timings: bool = False
) -> list:
    """All property rows for one (n, mode) pair; pure and reentrant."""
    grid = make_grid(n)
    ops = build_operator_set(grid, mode)
    rows = []
    for name, statement, tol_fn, check_fn in PROPERTIES:
        tol = float(tol_fn(grid) * tol_scale)
        start = time.perf_counter()
        measured: Optional[float] = None
        error: Optional[str] = None
        try:
            measured = float(check_fn(grid, ops, seed))
        except _CHECK_ERRORS as exc:
            error = f"{type(exc).__name__}: {exc}"
        runtime = (
            round((time.perf_counter() - start) * 1000.0, 3) if timings else None
        )
        rows.append(
            Check(
                name=name,
                statement=statement,
                n=n,
                mode=mode,
                measured_error=measured,
                tolerance=tol,
                passed=measured is not None and measured <= tol,
                error=error,
                runtime_ms=runtime,
            )
        )
    return rows


def run_suite(
    ns: Sequence[int],
    modes: Sequence[str] = (BOUNDARY,),
    seed: int = 0,
    tol_scale: float = 1.0,
    timings: bool = False,
) -> CheckReport:
    """Evaluate all properties for every requested (n, mode) pair.

    Rows are ordered by n, then mode, then the fixed property order; the
    report records the seed and tolerance scale that produced it.
    """
    if not ns:
        raise InvalidToleranceError("at least one grid size is required")
    if not modes:
        raise InvalidToleranceError("at least one perturbation mode is required")
    for mode in modes:
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not (tol_scale > 0.0):
        raise InvalidToleranceError(f"tol_scale must be positive, got {tol_scale}")
    checks = []
    for n in ns:
        for mode in modes:
            checks.extend(checks_for(n, mode, seed, tol_scale, timings))
    return CheckReport(
        ns=tuple(int(n) for n in ns),
        modes=tuple(modes),
        seed=int(seed),
        tol_scale=float(tol_scale),
        checks=tuple(checks),
    )
