"""Numerical tolerances and grid sizes, pinned in one place.

Every tolerance used by a contract check lives here so that tests and
library code agree on the budgets.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # measure1d
    mass_tol: float = 1e-12          # |integral of density - 1|
    segment_mass_tol: float = 1e-10  # |segment mass - 1/n|
    quantile_cdf_tol: float = 1e-12  # |cdf(quantile(q)) - q|
    inverse_roundtrip_tol: float = 1e-9   # |quantile(cdf(x)) - x| where rho > 0
    concentration_windows: int = 4096

    # costs
    well_order_slack: float = 1e-9
    envelope_sandwich_tol: float = 1e-9
    threshold_inflation: float = 1e-6  # relative bump applied to the truncation level

    # seidl
    cdf_conjugacy_tol: float = 1e-9
    cycle_tol: float = 1e-8

    # mmot
    lp_pivot_tol: float = 1e-9
    lp_feasibility_tol: float = 1e-9
    lp_dual_tol: float = 1e-7
    lp_cell_guard: int = 200_000

    # kantorovich
    ctransform_guard: int = 1_000_000   # grid**(n-1) cap for one transform
    margin_guard: int = 10_000_000      # grid**n cap for exhaustive margin
    margin_samples: int = 1_000_000     # Monte-Carlo fallback sample count

    # semiclassical
    mollifier_table: int = 2048
    quad_grid: int = 4096               # internal z/x quadrature resolution


TOL = Tolerances()

TWO_PI = 6.283185307179586476925286766559


def gap_tolerance(grid_size: int, marginal_size: int) -> float:
    """Duality-gap budget: grid error plus quantization error."""
    return 10.0 / grid_size + 10.0 / marginal_size
