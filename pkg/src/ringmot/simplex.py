"""Two-phase revised simplex for equality-constrained LPs with sparse columns.

Columns are given structurally: each variable touches at most K rows, with
the row indices and coefficients stored in padded (N, K) arrays. The basis
matrix is dense and small (tens of rows), so factorizations are cheap and
the basic solution is recomputed from scratch every iteration.

Pricing uses the most-negative reduced cost with lowest-index tie-breaks;
after a run of degenerate pivots without objective progress the rule
switches to Bland's (lowest eligible index) until progress resumes, which
protects against cycling while keeping the pivot sequence deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TOL

@dataclass(frozen=True)
class LPResult:
    status: str          # optimal | infeasible | unbounded-guard
    x: np.ndarray        # primal values, length N (zeros unless basic)
    y: np.ndarray        # row duals, length M
    objective: float
    iterations: int


def _column(rows, coeffs, j, m):
    col = np.zeros(m)
    mask = rows[j] >= 0
    col[rows[j][mask]] = coeffs[j][mask]
    return col


def solve_equality_lp(
    rows: np.ndarray,
    coeffs: np.ndarray,
    c: np.ndarray,
    b: np.ndarray,
    tol: float = TOL.lp_pivot_tol,
    max_iters: int = 200_000,
) -> LPResult:
    """Minimize c.x subject to A x = b, x >= 0.

    rows / coeffs describe A column-wise with -1 padding. b must be
    non-negative (flip row signs beforehand if needed).
    """
    n_vars, _ = rows.shape
    m = b.size
    if np.any(b < 0):
        raise ValueError("b must be non-negative")

    # artificial variables occupy indices n_vars .. n_vars + m - 1
    basis = np.arange(n_vars, n_vars + m)
    valid = rows >= 0
    safe_rows = np.where(valid, rows, 0)

    def reduced_costs(y, cost_vec):
        gathered = np.where(valid, y[safe_rows] * coeffs, 0.0)
        return cost_vec - gathered.sum(axis=1)

    def basis_matrix(basis):
        B = np.zeros((m, m))
        for i, j in enumerate(basis):
            if j >= n_vars:
                B[j - n_vars, i] = 1.0
            else:
                mask = valid[j]
                B[rows[j][mask], i] = coeffs[j][mask]
        return B

    total_iters = 0

    stall_limit = 32

    def run_phase(cost_vec, allow_artificial):
        nonlocal basis, total_iters
        last_obj = np.inf
        stalled = 0
        bland = False
        while True:
            if total_iters > max_iters:
                return "unbounded-guard"
            total_iters += 1
            B = basis_matrix(basis)
            x_b = np.linalg.solve(B, b)
            c_b = cost_vec[basis]
            obj = float(np.dot(c_b, x_b))
            if obj < last_obj - tol:
                last_obj = obj
                stalled = 0
                bland = False
            else:
                stalled += 1
                if stalled >= stall_limit:
                    bland = True  # anti-cycling mode until progress resumes
            y = np.linalg.solve(B.T, c_b)
            r = reduced_costs(y, cost_vec[:n_vars])
            candidates = np.flatnonzero(r < -tol)
            r_cand = r[candidates]
            if allow_artificial:
                r_art = cost_vec[n_vars:] - y
                art_candidates = np.flatnonzero(r_art < -tol) + n_vars
                if art_candidates.size:
                    candidates = np.concatenate([candidates, art_candidates])
                    r_cand = np.concatenate([r_cand, r_art[art_candidates - n_vars]])
            if candidates.size == 0:
                return "optimal"
            if bland:
                entering = int(candidates.min())
            else:
                entering = int(candidates[np.argmin(r_cand)])
            col = (
                _column(rows, coeffs, entering, m)
                if entering < n_vars
                else np.eye(m)[entering - n_vars]
            )
            d = np.linalg.solve(B, col)
            movable = d > tol
            if not np.any(movable):
                return "unbounded"
            with np.errstate(divide="ignore"):
                ratios = np.where(movable, x_b / np.where(movable, d, 1.0), np.inf)
            theta = ratios[movable].min()
            # smallest variable index among blocking rows (Bland tie-break)
            blocking = np.flatnonzero(movable & (ratios <= theta * (1 + 1e-12) + 1e-12))
            leave_pos = blocking[np.argmin(basis[blocking])]
            basis[leave_pos] = entering

    # phase 1: drive artificials out
    cost1 = np.concatenate([np.zeros(n_vars), np.ones(m)])
    status = run_phase(cost1, allow_artificial=True)
    B = basis_matrix(basis)
    x_b = np.linalg.solve(B, b)
    art_mass = float(x_b[basis >= n_vars].sum()) if np.any(basis >= n_vars) else 0.0
    if status != "optimal" or art_mass > 1e-7:
        return LPResult("infeasible", np.zeros(n_vars), np.zeros(m), np.inf, total_iters)

    # phase 2: real objective; artificials may remain basic at zero
    cost2 = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])
    status = run_phase(cost2, allow_artificial=False)
    if status == "unbounded":
        return LPResult("unbounded-guard", np.zeros(n_vars), np.zeros(m), -np.inf, total_iters)
    if status != "optimal":
        return LPResult("unbounded-guard", np.zeros(n_vars), np.zeros(m), np.nan, total_iters)

    B = basis_matrix(basis)
    x_b = np.linalg.solve(B, b)
    y = np.linalg.solve(B.T, cost2[basis])
    x = np.zeros(n_vars)
    real = basis < n_vars
    x[basis[real]] = np.maximum(x_b[real], 0.0)
    objective = float(np.dot(c, x))
    return LPResult("optimal", x, y, objective, total_iters)
