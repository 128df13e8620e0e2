"""Mollified fermionic trial states built from a transport plan.

A plan whose atoms keep all coordinates at torus distance >= alpha is
smeared with bumps of width eta < alpha / 4. In that regime the bump
supports never overlap, the determinantal cross terms vanish, and the
diagonal density reduces to permutation sums of one-particle factors

    B(x, y) = integral of PB(x - z) PB(y - z) / (rho ~ * PB)(z) dz,

with PB the periodized squared bump. The smeared state has single-particle
density n * rho exactly (up to plan quantization) and kinetic energy
n * (dirichlet(sqrt rho) + dirichlet(chi) / eta^2), which prices the
trial-state upper bound for the kinetic-plus-interaction functional.

All integrals use the composite midpoint rule on uniform torus grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from math import factorial

import numpy as np

from .config import TOL, TWO_PI
from .costs import CostModel
from .errors import ConstructionError, DomainError, RegimeError
from .measure1d import GridDensity
from .seidl import DiscretePlan, plan_cost, seidl_plan


# -- mollifier ------------------------------------------------------------


@dataclass(frozen=True)
class Mollifier:
    """Even bump on [-1, 1], tabulated with linear interpolation.

    Normalized so the integral of chi^2 over the tabulated piecewise-linear
    interpolant is exactly 1; the dirichlet energy of the interpolant is
    likewise exact.
    """

    t: np.ndarray
    values: np.ndarray
    dirichlet: float = field(init=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1 or t.size < 3:
            raise ConstructionError("mollifier needs matching 1d tables")
        if abs(t[0] + 1.0) > 1e-12 or abs(t[-1] - 1.0) > 1e-12:
            raise ConstructionError("mollifier support must be [-1, 1]")
        if np.max(np.abs(v - v[::-1])) > 1e-12:
            raise ConstructionError("mollifier must be even")
        h = np.diff(t)
        sq = np.sum(h * (v[:-1] ** 2 + v[:-1] * v[1:] + v[1:] ** 2) / 3.0)
        if abs(sq - 1.0) > 1e-10:
            raise ConstructionError("mollifier must satisfy integral chi^2 = 1")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dirichlet", float(np.sum(np.diff(v) ** 2 / h)))

    @classmethod
    def bump(cls, table: int = TOL.mollifier_table) -> "Mollifier":
        """Standard smooth bump exp(-1 / (1 - t^2)), normalized in L^2."""
        t = np.linspace(-1.0, 1.0, table)
        with np.errstate(divide="ignore", over="ignore"):
            inner = np.where(np.abs(t) < 1.0, 1.0 - t * t, 1.0)
            v = np.where(np.abs(t) < 1.0, np.exp(-1.0 / inner), 0.0)
        h = np.diff(t)
        sq = np.sum(h * (v[:-1] ** 2 + v[:-1] * v[1:] + v[1:] ** 2) / 3.0)
        return cls(t, v / np.sqrt(sq))

    def chi(self, x):
        """chi at unit scale, zero outside [-1, 1]."""
        return np.interp(np.asarray(x, dtype=float), self.t, self.values, left=0.0, right=0.0)

    def chi_sq(self, x):
        return self.chi(x) ** 2

    def chi_prime(self, x):
        """Piecewise-constant derivative of the tabulated interpolant."""
        x = np.asarray(x, dtype=float)
        slopes = np.diff(self.values) / np.diff(self.t)
        k = np.clip(np.searchsorted(self.t, x, side="right") - 1, 0, slopes.size - 1)
        return np.where(np.abs(x) < 1.0, slopes[k], 0.0)


def _wrap(x):
    """Signed torus representative in [-pi, pi)."""
    return np.mod(np.asarray(x, dtype=float) + np.pi, TWO_PI) - np.pi


# -- plan geometry ---------------------------------------------------------


def support_separation(plan: DiscretePlan) -> float:
    """Minimum pairwise torus distance between coordinates of any atom."""
    n = plan.n
    i, j = np.triu_indices(n, k=1)
    d = np.abs(plan.atoms[:, i] - plan.atoms[:, j])
    d = np.mod(d, TWO_PI)
    d = np.minimum(d, TWO_PI - d)
    return float(np.min(d)) if d.size else np.inf


# -- the smeared state -----------------------------------------------------


class GammaEta:
    """Mollified trial state for a separated plan, in the disjoint regime."""

    def __init__(
        self,
        plan: DiscretePlan,
        rho: GridDensity,
        chi: Mollifier,
        eta: float,
        quad_grid: int = TOL.quad_grid,
    ):
        if np.min(rho.values) <= 0:
            raise DomainError("mollified states need a strictly positive density")
        alpha = support_separation(plan)
        if not eta > 0:
            raise DomainError("eta must be positive")
        if not eta < alpha / 4:
            raise RegimeError(f"eta = {eta} is not below alpha / 4 = {alpha / 4}")
        self.plan = plan
        self.rho = rho
        self.chi = chi
        self.eta = float(eta)
        self.alpha = float(alpha)
        self.n = plan.n

        gz = quad_grid
        self.dz = TWO_PI / gz
        self.zgrid = (np.arange(gz) + 0.5) * self.dz
        # periodized squared bump against the density: (rho~ * chi_eta^2)(z)
        self.den = self._smear(rho.density(self.zgrid))
        if np.min(self.den) <= 0:
            raise ConstructionError("smeared density vanishes; eta too small for the grid")
        # unique coordinate values across all atoms, with (atom, slot) indices
        coords, inverse = np.unique(plan.atoms, return_inverse=True)
        self.coords = coords
        self.coord_index = inverse.reshape(plan.atoms.shape)
        # column kernels PB(y - z) / den(z) for each unique coordinate
        self.columns = self._pb_outer(self.coords) / self.den[None, :]

    # bump value helpers; chi_eta(x)^2 = chi(x / eta)^2 / eta
    def _pb_outer(self, pts):
        """Matrix PB(p - z) over (points, zgrid)."""
        diff = _wrap(pts[:, None] - self.zgrid[None, :]) / self.eta
        return self.chi.chi_sq(diff) / self.eta

    def _smear(self, samples):
        """Circular midpoint convolution of grid samples with the squared bump."""
        gz = samples.size
        reach = int(np.ceil(self.eta / self.dz)) + 1
        offsets = np.arange(-reach, reach + 1)
        kernel = self.chi.chi_sq(offsets * self.dz / self.eta) / self.eta
        out = np.zeros(gz)
        for off, kv in zip(offsets, kernel):
            if kv != 0.0:
                out += kv * np.roll(samples, off)
        return out * self.dz

    def b_matrix(self, xs) -> np.ndarray:
        """B(x, coord) for arbitrary positions x, over all unique coordinates."""
        pbx = self._pb_outer(np.asarray(xs, dtype=float))
        return (pbx * self.dz) @ self.columns.T

    def density_at(self, tuples) -> np.ndarray:
        """Diagonal n-particle density at the given coordinate tuples."""
        x = np.atleast_2d(np.asarray(tuples, dtype=float))
        if x.shape[1] != self.n:
            raise DomainError("tuples must have n coordinates")
        pts, inv = np.unique(x, return_inverse=True)
        b = self.b_matrix(pts)                      # (unique pts, coords)
        idx = inv.reshape(x.shape)                  # (nt, n) into pts
        rho_fac = self.rho.density(x)               # (nt, n)
        out = np.zeros(x.shape[0])
        for sigma in permutations(range(self.n)):
            prod = np.ones((x.shape[0], self.plan.atoms.shape[0]))
            for i in range(self.n):
                prod *= rho_fac[:, i][:, None] * b[idx[:, i]][:, self.coord_index[:, sigma[i]]]
            out += prod @ self.plan.weights
        return out / factorial(self.n)

    def coordinate_masses(self, grid: int) -> np.ndarray:
        """q(coord) = integral of rho(x) B(x, coord) dx at the given resolution."""
        xs = (np.arange(grid) + 0.5) * (TWO_PI / grid)
        b = self.b_matrix(xs)
        return (self.rho.density(xs) * (TWO_PI / grid)) @ b

    def total_mass(self, grid: int = 256) -> float:
        """Quadrature of the diagonal density over the n-torus."""
        q = self.coordinate_masses(grid)
        return float(np.dot(self.plan.weights, np.prod(q[self.coord_index], axis=1)))


def marginal_identity_check(gamma: GammaEta, grid: int = 256) -> float:
    """sup_x | n * integral of Gamma(x, rest) d rest  -  n * rho(x) |.

    The inner integrals are evaluated with the same per-axis midpoint rule
    as the outer grid, matching the stated quadrature budget.
    """
    n = gamma.n
    xs = (np.arange(grid) + 0.5) * (TWO_PI / grid)
    b = gamma.b_matrix(xs)                    # (grid, coords)
    q = gamma.coordinate_masses(grid)         # (coords,)
    acc = np.zeros(grid)
    for sigma in permutations(range(n)):
        first = gamma.coord_index[:, sigma[0]]
        rest = np.ones(gamma.plan.atoms.shape[0])
        for i in range(1, n):
            rest *= q[gamma.coord_index[:, sigma[i]]]
        acc += b[:, first] @ (gamma.plan.weights * rest)
    density = n * gamma.rho.density(xs) * acc / factorial(n)
    return float(np.max(np.abs(density - n * gamma.rho.density(xs))))


def sqrt_density_dirichlet(rho: GridDensity) -> float:
    """integral of |d sqrt(rho)|^2, exact per linear segment.

    On a segment from v0 to v1 with slope s the integrand is s^2 / (4 rho),
    whose antiderivative is (s / 4) log(rho); strict positivity required.
    """
    v0 = rho.values[:-1]
    v1 = rho.values[1:]
    if np.any(v0 <= 0) or np.any(v1 <= 0):
        raise DomainError("dirichlet energy of sqrt(rho) needs rho > 0")
    h = np.diff(rho.nodes)
    s = (v1 - v0) / h
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(np.abs(s) > 0, 0.25 * s * np.log(v1 / v0), 0.0)
    return float(np.sum(terms))


@dataclass(frozen=True)
class KineticReport:
    exact: float       # n (dirichlet(sqrt rho) + dirichlet(chi) / eta^2)
    quadrature: float  # direct trace over the constructed orbitals
    relative_mismatch: float


def kinetic_energy(gamma: GammaEta) -> KineticReport:
    """Both sides of the kinetic identity for the smeared state."""
    n = gamma.n
    eta = gamma.eta
    chi = gamma.chi
    rho = gamma.rho
    exact = n * (sqrt_density_dirichlet(rho) + chi.dirichlet / eta**2)

    # direct quadrature: K(z) = integral |d(sqrt(rho) chi_eta(. - z))|^2 dx,
    # assembled from three circular correlations on the z-grid
    zs = gamma.zgrid
    dz = gamma.dz
    rho_s = rho.density(zs)
    slopes = np.concatenate([rho._slopes, rho._slopes[-1:]])
    k = np.clip(np.searchsorted(rho.nodes, zs, side="right") - 1, 0, rho._slopes.size - 1)
    drho = rho._slopes[k]
    dsqrt_sq = drho**2 / (4.0 * rho_s)

    reach = int(np.ceil(eta / dz)) + 1
    offsets = np.arange(-reach, reach + 1)
    u = offsets * dz / eta
    k_sq = chi.chi_sq(u) / eta                         # chi_eta^2
    k_sq_prime = 2.0 * chi.chi(u) * chi.chi_prime(u) / eta**2   # (chi_eta^2)'
    k_d = chi.chi_prime(u) ** 2 / eta**3               # (chi_eta')^2

    def correlate(samples, kernel):
        out = np.zeros(samples.size)
        for off, kv in zip(offsets, kernel):
            if kv != 0.0:
                out += kv * np.roll(samples, -off)
        return out * dz

    # K(z) = int (dsqrt)^2 PB + (1/2) drho PB' + rho PD, shifted by z
    kz = correlate(dsqrt_sq, k_sq) + 0.5 * correlate(drho, k_sq_prime) + correlate(rho_s, k_d)
    kq = (gamma.columns * kz[None, :]).sum(axis=1) * dz   # per-coordinate integral
    quadrature = float(
        np.dot(gamma.plan.weights, kq[gamma.coord_index].sum(axis=1))
    )
    rel = abs(quadrature - exact) / max(abs(exact), 1e-300)
    return KineticReport(float(exact), quadrature, float(rel))


def interaction_energy(gamma: GammaEta, w: CostModel, grid: int = 1024) -> float:
    """integral of c_n against the diagonal density, via pair-marginal sums.

    The permutation sum collapses: every ordered coordinate pair of every
    atom contributes one smeared pair energy E[a, b].
    """
    xs = (np.arange(grid) + 0.5) * (TWO_PI / grid)
    pair = np.asarray(w.pair_matrix(xs), dtype=float)
    if not np.all(np.isfinite(pair)):
        raise DomainError("interaction quadrature needs a bounded cost; truncate first")
    d = (gamma.b_matrix(xs) * (gamma.rho.density(xs) * (TWO_PI / grid))[:, None])
    e = d.T @ pair @ d
    n = gamma.n
    i, j = np.triu_indices(n, k=1)
    per_atom = 2.0 * e[gamma.coord_index[:, i], gamma.coord_index[:, j]].sum(axis=1)
    return float(np.dot(gamma.plan.weights, per_atom))


def periodicity_defect(gamma: GammaEta, num_samples: int = 16) -> float:
    """Largest seam defect of the one-particle functions under x -> x + 2*pi.

    Compares values and derivatives of sqrt(rho(x)) chi_eta(x - z) computed
    at x and at x + 2*pi through the actual evaluation paths.
    """
    rng = np.random.default_rng(0)
    zs = rng.uniform(0.0, TWO_PI, num_samples)
    xs = rng.uniform(0.0, TWO_PI, num_samples)
    worst = 0.0
    rho, chi, eta = gamma.rho, gamma.chi, gamma.eta

    def phi_and_slope(x, z):
        x = np.mod(x, TWO_PI)
        r = rho.density(x)
        k = np.clip(np.searchsorted(rho.nodes, x, side="right") - 1, 0, rho._slopes.size - 1)
        dr = rho._slopes[k]
        u = _wrap(x - z) / eta
        val = np.sqrt(r) * chi.chi(u) / np.sqrt(eta)
        slope = (dr / (2.0 * np.sqrt(r))) * chi.chi(u) / np.sqrt(eta) + np.sqrt(r) * chi.chi_prime(u) / eta**1.5
        return val, slope

    for z in zs:
        v0, s0 = phi_and_slope(xs, z)
        v1, s1 = phi_and_slope(xs + TWO_PI, z)
        worst = max(worst, float(np.max(np.abs(v0 - v1))), float(np.max(np.abs(s0 - s1))))
    return worst


# -- the upper-bound curve --------------------------------------------------


@dataclass(frozen=True)
class BoundPoint:
    eps: float
    eta: float
    kinetic: float
    interaction: float
    bound: float


@dataclass(frozen=True)
class BoundCurve:
    points: tuple
    reference: float      # transport cost of the base plan
    slope: float | None   # log-log slope of bound - reference vs eps
    eta_coefficient: float
    notice: str | None


def upper_bound_curve(
    rho: GridDensity,
    w: CostModel,
    n: int,
    eps_list,
    m: int = 64,
    chi: Mollifier | None = None,
    interaction_grid: int = 1024,
) -> BoundCurve:
    """Trial-state upper bounds eps * kinetic + interaction along an eps list.

    The smearing width follows eta(eps) = min(alpha / 8, c eps^(1/4)) with c
    balancing the smearing cost error (growing like eta^2) against the
    kinetic price (eps / eta^2) at the largest eps, so both error terms
    scale like sqrt(eps) and the curve approaches the plan cost at that
    rate from above.
    """
    if chi is None:
        chi = Mollifier.bump()
    eps_arr = sorted((float(e) for e in eps_list), reverse=True)
    if not eps_arr or min(eps_arr) <= 0:
        raise DomainError("eps values must be positive")
    plan = seidl_plan(rho, n, m)
    reference = plan_cost(plan, w)
    alpha = support_separation(plan)
    cap = alpha / 8.0

    # probe the smearing error coefficient at the widest admissible width
    probe = GammaEta(plan, rho, chi, cap)
    smear_gap = interaction_energy(probe, w, interaction_grid) - reference
    a_coef = max(smear_gap / cap**2, 1e-12)
    c = min((n * chi.dirichlet / a_coef) ** 0.25, cap / max(eps_arr) ** 0.25)

    points = []
    notice = None
    for eps in eps_arr:
        eta = min(cap, c * eps**0.25)
        if not eta < alpha / 4:
            notice = f"curve truncated at eps = {eps}: eta would leave the regime"
            break
        gamma = GammaEta(plan, rho, chi, eta)
        kin = kinetic_energy(gamma).exact
        inter = interaction_energy(gamma, w, interaction_grid)
        points.append(BoundPoint(eps, eta, kin, inter, eps * kin + inter))

    slope = None
    gaps = np.array([p.bound - reference for p in points])
    if len(points) >= 2 and np.all(gaps > 0):
        coeffs = np.polyfit(np.log([p.eps for p in points]), np.log(gaps), 1)
        slope = float(coeffs[0])
    return BoundCurve(tuple(points), float(reference), slope, float(c), notice)
