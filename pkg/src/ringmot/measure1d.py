"""Non-atomic probability densities on [0, 2*pi].

Densities are piecewise linear between nodes, so segment masses are exact
quadratics and the CDF inverts in closed form. All operations are pure and
the types are immutable after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import TOL, TWO_PI
from .errors import ConstructionError, DegenerateQuantileError, DomainError


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


@dataclass(frozen=True)
class Segmentation:
    """Equal-mass boundaries d_0 < d_1 < ... < d_n covering [0, 2*pi]."""

    boundaries: tuple
    n: int

    def __post_init__(self):
        if len(self.boundaries) != self.n + 1:
            raise ConstructionError("need n + 1 boundaries")
        b = np.asarray(self.boundaries)
        if not np.all(np.diff(b) > 0):
            raise ConstructionError("boundaries must be strictly increasing")


@dataclass(frozen=True)
class GridDensity:
    """Piecewise-linear density with unit mass on [0, 2*pi].

    nodes   -- strictly increasing abscissae, first 0, last 2*pi
    values  -- non-negative ordinates (mass per unit length)
    periodic -- if set, values at 0 and 2*pi must agree
    """

    nodes: np.ndarray
    values: np.ndarray
    periodic: bool = False
    _cum: np.ndarray = field(init=False, repr=False, compare=False)
    _slopes: np.ndarray = field(init=False, repr=False, compare=False)
    _plateaus: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 2:
            raise ConstructionError("nodes and values must be 1d arrays of equal length >= 2")
        if abs(nodes[0]) > 0 or abs(nodes[-1] - TWO_PI) > 1e-12:
            raise ConstructionError("nodes must start at 0 and end at 2*pi")
        if not np.all(np.diff(nodes) > 0):
            raise ConstructionError("nodes must be strictly increasing")
        if np.any(values < 0):
            raise ConstructionError("density values must be non-negative")
        if self.periodic and abs(values[0] - values[-1]) > 1e-12:
            raise ConstructionError("periodic density needs equal endpoint values")
        h = np.diff(nodes)
        seg_mass = 0.5 * (values[:-1] + values[1:]) * h
        cum = np.concatenate(([0.0], np.cumsum(seg_mass)))
        if abs(cum[-1] - 1.0) > TOL.mass_tol:
            raise ConstructionError(
                f"total mass {cum[-1]!r} differs from 1 by more than {TOL.mass_tol}"
            )
        cum[-1] = 1.0
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "_slopes", (values[1:] - values[:-1]) / h)
        object.__setattr__(self, "_plateaus", cum[:-1][seg_mass == 0.0])

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_values(cls, nodes, values, periodic=False, normalize=False):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if normalize:
            h = np.diff(nodes)
            total = float(np.sum(0.5 * (values[:-1] + values[1:]) * h))
            if total <= 0:
                raise ConstructionError("cannot normalize a zero-mass density")
            values = values / total
        return cls(nodes, values, periodic)

    @classmethod
    def uniform(cls):
        return cls(np.array([0.0, TWO_PI]), np.array([1.0, 1.0]) / TWO_PI, periodic=True)

    @classmethod
    def cosine(cls, num_nodes: int = 641, amplitude: float = 1.0):
        """Normalized tabulation of (1 + amplitude * cos x) on a symmetric grid.

        amplitude = 1 touches zero at x = pi; pass amplitude < 1 where strict
        positivity is required (e.g. mollified trial states).
        """
        nodes = np.linspace(0.0, TWO_PI, num_nodes)
        return cls.from_values(
            nodes, 1.0 + amplitude * np.cos(nodes), periodic=True, normalize=True
        )

    @classmethod
    def random_positive(cls, seed: int, num_nodes: int = 65, lo: float = 0.25, hi: float = 1.75):
        """Seeded strictly positive density for randomized tests."""
        rng = np.random.default_rng(seed)
        values = rng.uniform(lo, hi, num_nodes)
        values[-1] = values[0]
        nodes = np.linspace(0.0, TWO_PI, num_nodes)
        return cls.from_values(nodes, values, periodic=True, normalize=True)

    # -- queries --------------------------------------------------------

    def density(self, x):
        """Pointwise density by linear interpolation."""
        x_arr, scalar = _as_array(x)
        out = np.interp(x_arr, self.nodes, self.values)
        return float(out) if scalar else out

    def cdf(self, x):
        """Exact integral of the density over [0, x]."""
        x_arr, scalar = _as_array(x)
        if np.any(x_arr < -1e-12) or np.any(x_arr > TWO_PI + 1e-12):
            raise DomainError("cdf argument outside [0, 2*pi]")
        x_arr = np.clip(x_arr, 0.0, TWO_PI)
        k = np.clip(np.searchsorted(self.nodes, x_arr, side="right") - 1, 0, self.nodes.size - 2)
        t = x_arr - self.nodes[k]
        out = self._cum[k] + self.values[k] * t + 0.5 * self._slopes[k] * t * t
        out = np.clip(out, 0.0, 1.0)
        return float(out) if scalar else out

    def quantile(self, q):
        """Unique x with cdf(x) = q; raises on flat-CDF plateaus at level q."""
        q_arr, scalar = _as_array(q)
        if np.any(q_arr < -1e-15) or np.any(q_arr > 1 + 1e-15):
            raise DomainError("quantile argument outside [0, 1]")
        q_arr = np.clip(q_arr, 0.0, 1.0)
        if self._plateaus.size and np.any(np.isin(q_arr, self._plateaus)):
            raise DegenerateQuantileError("flat CDF plateau at the requested mass level")
        k = np.clip(np.searchsorted(self._cum, q_arr, side="right") - 1, 0, self.nodes.size - 2)
        dq = q_arr - self._cum[k]
        v = self.values[k]
        s = self._slopes[k]
        h = np.diff(self.nodes)[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            # positive root of v t + s t^2 / 2 = dq, stable for small s
            disc = np.sqrt(np.maximum(v * v + 2.0 * s * dq, 0.0))
            t_quad = np.where(np.abs(s) > 1e-300, 2.0 * dq / np.maximum(disc + v, 1e-300), 0.0)
            t_lin = np.where(v > 0, dq / np.where(v > 0, v, 1.0), 0.0)
        t = np.where(np.abs(s) * h > 1e-14 * np.maximum(v, 1e-300), t_quad, t_lin)
        t = np.clip(t, 0.0, h)
        # one Newton polish keeps |cdf(x) - q| at the 1e-12 contract
        f = v * t + 0.5 * s * t * t - dq
        fp = v + s * t
        t = np.clip(np.where(fp > 0, t - f / np.where(fp > 0, fp, 1.0), t), 0.0, h)
        x = self.nodes[k] + t
        x = np.where(q_arr >= 1.0, TWO_PI, np.where(q_arr <= 0.0, 0.0, x))
        return float(x) if scalar else x

    def segments(self, n: int) -> Segmentation:
        """Boundaries d_i = quantile(i/n); each segment carries mass 1/n."""
        if n < 2:
            raise DomainError("need at least two segments")
        inner = self.quantile(np.arange(1, n) / n)
        bounds = (0.0, *map(float, np.atleast_1d(inner)), TWO_PI)
        return Segmentation(bounds, n)

    def mass_between(self, a, b):
        """Mass of the torus arc from a to b (counter-clockwise), endpoints in [0, 2*pi]."""
        a_arr, scalar = _as_array(a)
        b_arr, _ = _as_array(b)
        ca, cb = self.cdf(a_arr), self.cdf(b_arr)
        out = np.where(a_arr <= b_arr, cb - ca, 1.0 - (ca - cb))
        return float(out) if scalar else out

    def concentration(self, r: float) -> float:
        """Largest mass in any torus ball of radius r (sliding-window maximum)."""
        if not 0.0 < r <= np.pi + 1e-15:
            raise DomainError("concentration radius must lie in (0, pi]")
        if 2.0 * r >= TWO_PI:
            return 1.0
        centers = np.arange(TOL.concentration_windows) * (TWO_PI / TOL.concentration_windows)
        lo = np.mod(centers - r, TWO_PI)
        hi = np.mod(centers + r, TWO_PI)
        return float(np.max(self.mass_between(lo, hi)))

    def to_spec(self) -> dict:
        return {
            "schema": 1,
            "nodes": self.nodes.tolist(),
            "values": self.values.tolist(),
            "periodic": bool(self.periodic),
        }


def density_from_spec(spec: dict):
    """Build a density from its JSON spec, normalizing mass to 1.

    Returns (density, scale) where scale is the factor applied to the raw values.
    """
    try:
        nodes = np.asarray(spec["nodes"], dtype=float)
        values = np.asarray(spec["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConstructionError(f"malformed density spec: {exc}") from exc
    periodic = bool(spec.get("periodic", False))
    h = np.diff(nodes)
    if nodes.ndim != 1 or nodes.size < 2 or np.any(h <= 0):
        raise ConstructionError("density spec needs strictly increasing nodes")
    total = float(np.sum(0.5 * (values[:-1] + values[1:]) * h))
    if total <= 0:
        raise ConstructionError("density spec has non-positive total mass")
    scale = 1.0 / total
    return GridDensity(nodes, values * scale, periodic), scale


def load_density(path):
    with open(path, "r", encoding="utf-8") as fh:
        return density_from_spec(json.load(fh))
