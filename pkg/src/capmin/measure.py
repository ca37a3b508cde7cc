"""Discrete measures, quantile node tables, and a weak-star metric.

All measures here are finite atomic measures on the plane.  Unit mass is
the default and is asserted; sub-unit restrictions carry an explicit
mass field instead of silently renormalizing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import is_infinite

_MASS_TOL = 1e-12

#: Number of moment functionals in the weak-star metric.
WEAK_STAR_TERMS = 32


def _chebyshev_quantile(q):
    # inverse CDF of the arcsine distribution on [-1, 1]
    return -np.cos(np.pi * np.asarray(q))


def _lebesgue_quantile(q):
    return 2.0 * np.asarray(q) - 1.0

#: Node presets: name -> inverse CDF on the reference interval [-1, 1].
PRESETS = {
    "chebyshev": _chebyshev_quantile,
    "lebesgue": _lebesgue_quantile,
}


@dataclass(frozen=True)
class DiscreteMeasure:
    """Atomic measure sum_i weights[i] * delta(points[i]).

    Parameters
    ----------
    points : ndarray of complex
        Atom locations; the point at infinity is allowed.
    weights : ndarray of float
        Nonnegative atom masses.
    mass : float
        Declared total mass; defaults to 1 and must match the weight sum
        to within 1e-12.
    """

    points: np.ndarray
    weights: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(pts) != len(w):
            raise ValueError("points and weights must have equal length")
        if len(pts) == 0:
            raise ValueError("empty measure")
        if np.any(w < -_MASS_TOL):
            raise ValueError("negative weight")
        if abs(w.sum() - self.mass) > _MASS_TOL * max(1.0, abs(self.mass)):
            raise ValueError(
                f"weights sum to {w.sum():.15g}, declared mass {self.mass:.15g}"
            )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.points)

    # -- constructors ----------------------------------------------------

    @classmethod
    def point_mass(cls, z, mass: float = 1.0) -> "DiscreteMeasure":
        return cls(np.array([complex(z)]), np.array([float(mass)]), mass=mass)

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = np.asarray(points, dtype=complex).ravel()
        n = len(pts)
        return cls(pts, np.full(n, 1.0 / n))

    @classmethod
    def from_quantiles(cls, preset: str, a, b, count: int) -> "DiscreteMeasure":
        """Equal-weight atoms at the (i - 1/2)/count quantiles of a preset
        distribution transplanted onto the segment [a, b]."""
        nodes = quantile_points(preset, a, b, count)
        return cls.uniform(nodes)

    # -- operations -------------------------------------------------------

    def support_radius(self) -> float:
        fin = self.points[np.isfinite(self.points.real) & np.isfinite(self.points.imag)]
        return float(np.abs(fin).max()) if len(fin) else 0.0

    def moment(self, p: int) -> complex:
        """Integral of z^p against the measure (finite atoms only)."""
        return complex((self.weights * self.points ** p).sum())

    def restricted_to_disk(self, radius: float = 1.0, renormalize: bool = True):
        """Restriction to |z| <= radius.

        Returns (measure, dropped_mass).  With renormalize=True the kept
        atoms are rescaled to unit mass, which is the convention used for
        distribution comparisons; dropped atoms are reported through the
        returned mass so callers can flag them separately.
        """
        keep = np.abs(self.points) <= radius * (1 + 1e-12)
        keep &= np.isfinite(self.points.real) & np.isfinite(self.points.imag)
        if not keep.any():
            raise ValueError("restriction is empty")
        w = self.weights[keep]
        dropped = float(self.mass - w.sum())
        if renormalize:
            return DiscreteMeasure(self.points[keep], w / w.sum()), dropped
        return DiscreteMeasure(self.points[keep], w, mass=float(w.sum())), dropped

    def pushforward(self, f) -> "DiscreteMeasure":
        """Image measure under a pointwise map.

        f may be a callable on complex scalars or a geometry.MapSpec.
        """
        if hasattr(f, "apply_point"):
            g = f.apply_point
        else:
            g = f
        pts = np.array([g(z) for z in self.points])
        return DiscreteMeasure(pts, self.weights.copy(), mass=self.mass)

    def scaled_support(self, k: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points * k, self.weights.copy(), mass=self.mass)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        atoms = []
        for z, w in zip(self.points, self.weights):
            if is_infinite(z):
                atoms.append({"inf": True, "w": float(w)})
            else:
                atoms.append({"re": z.real, "im": z.imag, "w": float(w)})
        d = {"atoms": atoms}
        if abs(self.mass - 1.0) > _MASS_TOL:
            d["mass"] = self.mass
        return d

    @classmethod
    def from_json(cls, d: dict) -> "DiscreteMeasure":
        pts = []
        w = []
        for a in d["atoms"]:
            if a.get("inf"):
                pts.append(complex(np.inf, np.inf))
            else:
                pts.append(complex(a["re"], a["im"]))
            w.append(float(a["w"]))
        return cls(np.array(pts), np.array(w), mass=float(d.get("mass", 1.0)))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, s: str) -> "DiscreteMeasure":
        return cls.from_json(json.loads(s))


def zero_counting(q) -> DiscreteMeasure:
    """Normalized zero-counting measure of a polynomial.

    Accepts a pade.Polynomial (roots are extracted with pade.poly_roots)
    or any array of root locations; each root gets weight 1/degree.
    """
    if hasattr(q, "coefficients"):
        from . import pade

        roots = pade.poly_roots(q)
    else:
        roots = np.asarray(q, dtype=complex).ravel()
    if len(roots) == 0:
        raise ValueError("constant polynomial has no zero-counting measure")
    return DiscreteMeasure.uniform(roots)


def weak_star_distance(nu1: DiscreteMeasure, nu2: DiscreteMeasure,
                       radius: float = 1.0, terms: int = WEAK_STAR_TERMS) -> float:
    """Moment-based weak-star metric between measures supported in a disk.

    With g_{2m-1} = Re z^m and g_{2m} = Im z^m on the unit disk, the
    distance is sum_p 2^-p |int g_p d nu1 - int g_p d nu2| truncated at
    `terms` functionals (truncation tail is below 2^(1-terms)).  Supports
    must lie in |z| <= radius; atoms are rescaled by 1/radius first.

    Raises
    ------
    ValueError
        If either support sticks out of the declared disk.
    """
    for nu in (nu1, nu2):
        if nu.support_radius() > radius * (1 + 1e-9) or np.any(
            ~np.isfinite(nu.points.real) | ~np.isfinite(nu.points.imag)
        ):
            raise ValueError("support not inside the declared disk")
    z1 = nu1.points / radius
    z2 = nu2.points / radius
    p1 = np.ones_like(z1)
    p2 = np.ones_like(z2)
    total = 0.0
    for m in range(1, terms // 2 + 1):
        p1 = p1 * z1
        p2 = p2 * z2
        mom1 = (nu1.weights * p1).sum()
        mom2 = (nu2.weights * p2).sum()
        total += 2.0 ** -(2 * m - 1) * abs(mom1.real - mom2.real)
        total += 2.0 ** -(2 * m) * abs(mom1.imag - mom2.imag)
    return float(total)


@dataclass(frozen=True)
class InterpolationTable:
    """Node multiset for one interpolation level.

    For approximation order n the table holds 2n + 1 nodes.  Nodes may
    include the point at infinity; a table of coincident infinite nodes
    reproduces expansion-at-infinity interpolation.
    """

    nodes: tuple
    n: int
    preset: str | None = None

    def __post_init__(self):
        nd = tuple(complex(z) for z in self.nodes)
        if len(nd) != 2 * self.n + 1:
            raise ValueError("a level-n table has 2n + 1 nodes")
        object.__setattr__(self, "nodes", nd)

    def finite_nodes(self):
        return [z for z in self.nodes if not is_infinite(z)]

    def infinite_count(self) -> int:
        return sum(1 for z in self.nodes if is_infinite(z))

    @classmethod
    def at_infinity(cls, n: int) -> "InterpolationTable":
        from .geometry import INF

        return cls(nodes=(INF,) * (2 * n + 1), n=n, preset=None)


def quantile_points(preset: str, a, b, count: int) -> np.ndarray:
    """count points at midpoint quantiles of a preset law on segment [a, b]."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    a = complex(a)
    b = complex(b)
    q = (np.arange(1, count + 1) - 0.5) / count
    t = PRESETS[preset](q)  # in [-1, 1]
    return (a + b) / 2 + (b - a) / 2 * t


def quantile_nodes(preset: str, a, b, n: int) -> InterpolationTable:
    """Level-n interpolation table: 2n + 1 preset-quantile nodes on [a, b].

    The chebyshev preset uses the arcsine law (nodes cluster at the
    ends), the lebesgue preset spaces nodes uniformly.
    """
    pts = quantile_points(preset, a, b, 2 * n + 1)
    return InterpolationTable(nodes=tuple(pts), n=n, preset=preset)


def measure_to_csv_rows(nu: DiscreteMeasure):
    """Rows (re, im, weight) for delimited output."""
    rows = [("re", "im", "weight")]
    for z, w in zip(nu.points, nu.weights):
        rows.append((repr(float(z.real)), repr(float(z.imag)), repr(float(w))))
    return rows
