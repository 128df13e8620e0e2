"""Exact discrete multimarginal transport by linear programming.

The joint measure over all m^n cells is optimized directly with the
in-house simplex, which keeps the oracle auditable and exposes row duals.
Cells with infinite cost are removed from the variable set instead of
big-M'd so the duals stay clean. One redundant marginal constraint per
extra marginal is dropped to keep the rows full rank, and rows are scaled
to unit norm before solving; stated tolerances apply after scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import TOL
from .costs import CostModel
from .errors import DomainError, SizeGuardError, StateError
from .measure1d import GridDensity
from .seidl import DiscretePlan
from .simplex import solve_equality_lp


@dataclass(frozen=True)
class DiscreteMarginal:
    """Atomic approximation of a density: distinct atoms with positive weights."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if atoms.ndim != 1 or atoms.shape != weights.shape:
            raise DomainError("atoms and weights must be 1d arrays of equal length")
        if np.unique(atoms).size != atoms.size:
            raise DomainError("atoms must be distinct")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > TOL.mass_tol:
            raise DomainError("weights must be positive and sum to 1")

    @property
    def m(self) -> int:
        return self.atoms.size


def quantize(rho: GridDensity, m: int) -> DiscreteMarginal:
    """Midpoint-quantile atoms with uniform weights 1/m."""
    if m < 1:
        raise DomainError("need at least one atom")
    atoms = np.asarray(rho.quantile((np.arange(1, m + 1) - 0.5) / m))
    return DiscreteMarginal(np.atleast_1d(atoms), np.full(m, 1.0 / m))


@dataclass(frozen=True)
class LPSolution:
    """Optimal plan, value, and per-marginal duals of the discrete problem."""

    status: str                      # optimal | infeasible | unbounded-guard
    value: float
    plan: DiscretePlan | None
    duals: np.ndarray | None         # (n, m); dropped rows carry 0
    marginal: DiscreteMarginal
    n: int
    iterations: int
    _cell_digits: np.ndarray | None = field(default=None, repr=False)
    _cell_costs: np.ndarray | None = field(default=None, repr=False)
    _cell_mass: np.ndarray | None = field(default=None, repr=False)

    def verify(self) -> dict:
        """Residuals of the optimality certificate (post row-unscaling)."""
        if self.status != "optimal":
            raise StateError("verification requires an optimal solution")
        digits, costs, mass = self._cell_digits, self._cell_costs, self._cell_mass
        m = self.marginal.m
        primal = 0.0
        for i in range(self.n):
            got = np.bincount(digits[:, i], weights=mass, minlength=m)
            primal = max(primal, float(np.max(np.abs(got - self.marginal.weights))))
        dual_at_cells = self.duals[np.arange(self.n)[None, :], digits].sum(axis=1)
        dual_feas = float(np.max(dual_at_cells - costs))
        support = mass > 1e-10
        slack = float(np.max(np.abs(costs[support] - dual_at_cells[support]))) if support.any() else 0.0
        dual_obj = float(self.n * np.dot(self.marginal.weights, self.duals.mean(axis=0)))
        return {
            "primal_violation": primal,
            "dual_infeasibility": dual_feas,
            "support_slackness": slack,
            "duality_gap": abs(dual_obj - self.value),
        }


def _cell_costs(marginal: DiscreteMarginal, n: int, w: CostModel):
    m = marginal.m
    pair = np.asarray(w.pair_matrix(marginal.atoms), dtype=float)
    digits = np.stack(
        np.meshgrid(*([np.arange(m)] * n), indexing="ij"), axis=-1
    ).reshape(-1, n)
    costs = np.zeros(digits.shape[0])
    for i in range(n):
        for j in range(i + 1, n):
            costs += 2.0 * pair[digits[:, i], digits[:, j]]
    return digits, costs


def solve_mmot(marginal: DiscreteMarginal, n: int, w: CostModel) -> LPSolution:
    """Exact LP over the m^n joint tensor with marginal equality constraints."""
    if n < 2:
        raise DomainError("need n >= 2 marginals")
    m = marginal.m
    if m**n > TOL.lp_cell_guard:
        raise SizeGuardError(f"m^n = {m**n} exceeds the {TOL.lp_cell_guard} cell guard")

    digits, costs = _cell_costs(marginal, n, w)
    finite = np.isfinite(costs)
    if not finite.any():
        return LPSolution("infeasible", np.inf, None, None, marginal, n, 0)
    digits = digits[finite]
    costs = costs[finite]

    # rows: all m constraints of marginal 0, first m-1 of marginals 1..n-1
    def row_id(i, j):
        return j if i == 0 else m + (i - 1) * (m - 1) + j

    n_rows = m + (n - 1) * (m - 1)
    col_rows = np.full((digits.shape[0], n), -1, dtype=np.int64)
    col_rows[:, 0] = digits[:, 0]
    for i in range(1, n):
        keep = digits[:, i] < m - 1
        col_rows[keep, i] = row_id(i, digits[keep, i])

    b = np.concatenate([marginal.weights] + [marginal.weights[:-1]] * (n - 1))
    counts = np.bincount(col_rows[col_rows >= 0].ravel(), minlength=n_rows)
    scale = 1.0 / np.sqrt(np.maximum(counts, 1))
    col_coeffs = np.where(col_rows >= 0, scale[np.maximum(col_rows, 0)], 0.0)

    res = solve_equality_lp(col_rows, col_coeffs, costs, b * scale)
    if res.status != "optimal":
        return LPSolution(res.status, np.inf, None, None, marginal, n, res.iterations)

    mass = res.x
    support = mass > 1e-12
    plan = DiscretePlan(
        marginal.atoms[digits[support]], mass[support] / mass[support].sum()
    )
    y = res.y * scale  # undo row scaling
    duals = np.zeros((n, m))
    duals[0, :] = y[:m]
    for i in range(1, n):
        duals[i, : m - 1] = y[m + (i - 1) * (m - 1) : m + i * (m - 1)]
    return LPSolution(
        "optimal",
        res.objective,
        plan,
        duals,
        marginal,
        n,
        res.iterations,
        _cell_digits=digits,
        _cell_costs=costs,
        _cell_mass=mass,
    )


def symmetrized_duals(sol: LPSolution) -> np.ndarray:
    """Single potential per atom: average of the marginal duals.

    Coordinate exchange maps optimal duals to optimal duals for symmetric
    problems, so the average stays dual-feasible and reproduces the value:
    n * sum_j weight_j v_j = optimal cost.
    """
    if sol.status != "optimal":
        raise StateError("duals require an optimal solution")
    return sol.duals.mean(axis=0)
