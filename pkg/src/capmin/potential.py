"""Potentials, discrete energies, Green potentials, and variational diagnostics.

Conventions
-----------
The spherical potential of an atomic measure uses the kernel
-log|z - t| for atoms with |t| <= 1 and -log|1 - z/t| for atoms with
|t| > 1; an atom at infinity contributes 0.  External fields are of the
form psi = (potential of the negated background measure) + offset; the
offset exists because scaled fields of the form V(z/k) - V(0) differ
from the potential of the rescaled atoms by a constant.

Two discrete energies appear:

* the public diagonal-excluded energy (weighted_energy), which is the
  literal double sum of the energy functional over distinct atoms;
* a cell-regularized energy used by the minimizers, where atom i carries
  the self-energy of a uniform blob of arclength cells[i]; this keeps
  the quadratic form positive enough that simplex minimization does not
  collapse onto a single atom.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .geometry import Compactum, discretize, is_infinite
from .measure import DiscreteMeasure

# self-energy of the uniform measure on a unit-length segment:
# -integral of log|x - y| over the unit square = 3/2
_BLOB_CONST = 1.5


# ---------------------------------------------------------------------------
# pointwise potentials

def spherical_potential(nu: DiscreteMeasure, z):
    """Spherically normalized potential of an atomic measure.

    Parameters
    ----------
    nu : DiscreteMeasure
    z : complex scalar or array

    Returns
    -------
    float or ndarray; +inf where z coincides with an atom of positive
    weight.
    """
    zs = np.asarray(z, dtype=complex)
    scalar = zs.ndim == 0
    zs = np.atleast_1d(zs)
    out = np.zeros(zs.shape, dtype=float)
    for t, w in zip(nu.points, nu.weights):
        if w == 0.0 or is_infinite(t):
            continue
        if abs(t) <= 1.0:
            d = np.abs(zs - t)
        else:
            d = np.abs(1.0 - zs / t)
        with np.errstate(divide="ignore"):
            out -= w * np.log(d)
    return float(out[0]) if scalar else out


def log_potential(nu: DiscreteMeasure, z):
    """Plain logarithmic potential -sum w log|z - t|.

    Requires all atoms finite; use spherical_potential when the measure
    charges infinity.
    """
    if any(is_infinite(t) for t in nu.points):
        raise ValueError("measure charges infinity; use spherical_potential")
    zs = np.asarray(z, dtype=complex)
    scalar = zs.ndim == 0
    zs = np.atleast_1d(zs)
    d = np.abs(zs[..., None] - nu.points[None, :])
    with np.errstate(divide="ignore"):
        out = -(np.log(d) @ nu.weights)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# external fields

def _chebyshev_neg_potential(q):
    """Integral of log|q - t| against the arcsine law on [-1, 1].

    Equals g(q) - log 2 with g the Green function of the segment; the
    formula log|q + sqrt(q-1)sqrt(q+1)| picks the branch with modulus
    >= 1 automatically.
    """
    q = np.asarray(q, dtype=complex)
    w = q + np.sqrt(q - 1.0) * np.sqrt(q + 1.0)
    return np.log(np.abs(w)) - math.log(2.0)


def _lebesgue_neg_potential(q):
    """Integral of log|q - t| against the uniform law on [-1, 1]."""
    q = np.asarray(q, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.abs(q + 1) < 1e-300, 0.0, (q + 1) * np.log(q + 1))
        b = np.where(np.abs(q - 1) < 1e-300, 0.0, (q - 1) * np.log(q - 1))
    return 0.5 * (a - b).real - 1.0


_PRESET_POTENTIALS = {
    "chebyshev": _chebyshev_neg_potential,
    "lebesgue": _lebesgue_neg_potential,
}


@dataclass(frozen=True)
class ExternalField:
    """External field psi acting on unit measures.

    kind:
      - "zero": the field of the point mass at infinity, identically 0;
      - "measure": psi(z) = -(spherical potential of `measure`)(z) + offset;
      - "scaled_preset": psi(z) = V(z/k) - V(0) where V is the closed-form
        integral of log|q - t| against the preset law on [-1, 1]; this is
        the continuum version of the shrinking fields used in the capacity
        experiments, free of atomic log singularities inside the disk.
    """

    kind: str = "zero"
    measure: DiscreteMeasure | None = None
    offset: float = 0.0
    preset: str | None = None
    k: float = 1.0

    def __post_init__(self):
        if self.kind == "measure":
            if self.measure is None:
                raise ValueError("measure-kind field needs a measure")
            if abs(self.measure.mass - 1.0) > 1e-9:
                raise ValueError("field measure must have unit mass")
        elif self.kind == "scaled_preset":
            if self.preset not in _PRESET_POTENTIALS:
                raise ValueError(f"unknown preset {self.preset!r}")
            if self.k <= 0:
                raise ValueError("k must be positive")
        elif self.kind != "zero":
            raise ValueError(f"unknown field kind {self.kind!r}")

    @classmethod
    def zero(cls) -> "ExternalField":
        return cls(kind="zero")

    @classmethod
    def from_measure(cls, mu: DiscreteMeasure, offset: float = 0.0) -> "ExternalField":
        return cls(kind="measure", measure=mu, offset=offset)

    @classmethod
    def from_scaled_preset(cls, preset: str, k: float) -> "ExternalField":
        return cls(kind="scaled_preset", preset=preset, k=float(k))

    def is_zero(self) -> bool:
        return self.kind == "zero"

    def values(self, z):
        """psi evaluated at z (scalar or array)."""
        zs = np.asarray(z, dtype=complex)
        scalar = zs.ndim == 0
        zs = np.atleast_1d(zs)
        if self.kind == "zero":
            out = np.zeros(zs.shape, dtype=float)
        elif self.kind == "measure":
            out = -spherical_potential(self.measure, zs) + self.offset
        else:
            pot = _PRESET_POTENTIALS[self.preset]
            out = pot(zs / self.k) - pot(np.array([0.0 + 0j]))[0]
        return float(out[0]) if scalar else out

    def support_points(self):
        """Finite singular points of the field (for disjointness checks)."""
        if self.kind == "measure":
            return [t for t in self.measure.points if not is_infinite(t)]
        if self.kind == "scaled_preset":
            # singular set is the segment [-k, k]; report its endpoints
            # plus the midpoint for coarse component checks
            return [complex(-self.k), 0.0 + 0.0j, complex(self.k)]
        return []

    def check_disjoint(self, points, margin: float = 1e-9):
        if self.kind != "measure":
            return
        pts = np.asarray(points, dtype=complex)
        for t in self.support_points():
            if np.abs(pts - t).min() < margin:
                raise ValueError("field support touches the evaluation set")


# ---------------------------------------------------------------------------
# discrete energies

def weighted_energy(nu: DiscreteMeasure, field: ExternalField | None = None) -> float:
    """Diagonal-excluded discrete energy of an atomic measure.

    -sum_{i != j} w_i w_j log|z_i - z_j| + 2 sum_i w_i psi(z_i).  Returns
    +inf when two atoms of positive weight coincide.  This is the literal
    double-sum energy; minimizers use the cell-regularized form instead.
    """
    if len(nu) < 2:
        raise ValueError("energy needs at least two atoms")
    if any(is_infinite(t) for t in nu.points):
        raise ValueError("energy of a measure charging infinity is undefined")
    z = nu.points
    w = nu.weights
    D = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(D, 1.0)
    pos = w > 0
    if np.any(D[np.ix_(pos, pos)] + np.eye(pos.sum()) == 0.0):
        return math.inf
    with np.errstate(divide="ignore"):
        logD = np.log(D)
    quad = -float(w @ logD @ w)  # diagonal contributes 0 by construction
    if field is None or field.is_zero():
        return quad
    return quad + 2.0 * float(field.values(z) @ w)


def energy_matrix(points: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Cell-regularized interaction matrix.

    Off-diagonal entries -log|z_i - z_j|; diagonal entries the
    self-energy of a uniform blob of length cells[i], namely
    -log(cells[i]) + 3/2.  Zero-width cells (isolated points) get a
    +inf diagonal, which the minimizers treat as unusable support.
    """
    D = np.abs(points[:, None] - points[None, :])
    np.fill_diagonal(D, 1.0)
    with np.errstate(divide="ignore"):
        A = -np.log(D)
        diag = np.where(cells > 0, -np.log(np.where(cells > 0, cells, 1.0)) + _BLOB_CONST, np.inf)
    np.fill_diagonal(A, diag)
    return A


def cell_energy(points, weights, cells, field_vals=None) -> float:
    """Cell-regularized energy w'Aw + 2 psi.w of an explicit configuration."""
    A = energy_matrix(np.asarray(points, complex), np.asarray(cells, float))
    w = np.asarray(weights, float)
    e = float(w @ A @ w)
    if field_vals is not None:
        e += 2.0 * float(np.asarray(field_vals, float) @ w)
    return e


# ---------------------------------------------------------------------------
# Green potentials

class ComplementMask:
    """Flood-filled occupancy grid for the complement of a compactum.

    The grid is flooded once from the field-support side (infinity seeds
    the border).  Queries then answer in O(1) whether a point lies in a
    complement component that meets the support.  Points whose cell is
    blocked sit on or next to K; those are reported as reachable so the
    caller falls through to the potential formula (boundary values).
    """

    def __init__(self, K: Compactum, targets, grid_n: int = 256):
        fin = [complex(t) for t in targets if not is_infinite(t)]
        has_inf = len(fin) < len(targets)
        pts = list(K.finite_vertices()) + fin
        xs = np.array([p.real for p in pts])
        ys = np.array([p.imag for p in pts])
        pad = 0.2 * max(np.ptp(xs), np.ptp(ys), 1e-6)
        self.x0 = float(xs.min() - pad)
        self.y0 = float(ys.min() - pad)
        self.hx = float(xs.max() + pad - self.x0) / grid_n
        self.hy = float(ys.max() + pad - self.y0) / grid_n
        self.n = grid_n
        blocked = np.zeros((grid_n, grid_n), dtype=bool)
        step = 0.5 * min(self.hx, self.hy)
        for c in K.components:
            if len(c) == 1 and is_infinite(c[0]):
                continue
            arr = np.array(c)
            ln = float(np.abs(np.diff(arr)).sum()) if len(arr) > 1 else 0.0
            count = max(len(arr), int(ln / step) + 1)
            from .geometry import _sample_polyline

            samp = _sample_polyline(arr, count) if len(arr) > 1 else arr
            for p in samp:
                cy, cx = self._cell(p)
                blocked[max(0, cy - 1): cy + 2, max(0, cx - 1): cx + 2] = True
        self.blocked = blocked
        seen = np.zeros_like(blocked)
        dq = deque()
        if has_inf:
            for cy in range(grid_n):
                for cx in (0, grid_n - 1):
                    if not blocked[cy, cx] and not seen[cy, cx]:
                        seen[cy, cx] = True
                        dq.append((cy, cx))
            for cx in range(grid_n):
                for cy in (0, grid_n - 1):
                    if not blocked[cy, cx] and not seen[cy, cx]:
                        seen[cy, cx] = True
                        dq.append((cy, cx))
        for t in fin:
            c = self._cell(t)
            if not blocked[c] and not seen[c]:
                seen[c] = True
                dq.append(c)
        while dq:
            cy, cx = dq.popleft()
            for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ny, nx = cy + dy, cx + dx
                if 0 <= ny < grid_n and 0 <= nx < grid_n and not seen[ny, nx] \
                        and not blocked[ny, nx]:
                    seen[ny, nx] = True
                    dq.append((ny, nx))
        self.seen = seen
        self.border_seen = bool(
            seen[0].any() or seen[-1].any() or seen[:, 0].any() or seen[:, -1].any()
        ) or has_inf

    def _cell(self, p):
        p = complex(p)
        cx = int((p.real - self.x0) / self.hx)
        cy = int((p.imag - self.y0) / self.hy)
        return min(max(cy, 0), self.n - 1), min(max(cx, 0), self.n - 1)

    def _inside_box(self, p) -> bool:
        p = complex(p)
        return (self.x0 <= p.real <= self.x0 + self.n * self.hx
                and self.y0 <= p.imag <= self.y0 + self.n * self.hy)

    def reachable(self, z) -> bool:
        if not self._inside_box(z):
            return self.border_seen
        c = self._cell(z)
        return bool(self.seen[c] or self.blocked[c])


@dataclass(frozen=True)
class BalayageSolution:
    """Internal bundle: minimizer weights on a cloud plus the pieces needed
    to evaluate the Green potential consistently."""

    points: np.ndarray
    weights: np.ndarray
    cells: np.ndarray
    psi: np.ndarray
    Aw: np.ndarray
    constant: float  # support-weighted mean of (Aw + psi)
    energy: float
    converged: bool

    def measure(self) -> DiscreteMeasure:
        keep = self.weights > 0
        w = self.weights[keep]
        return DiscreteMeasure(self.points[keep], w / w.sum())


def _solve_balayage(K: Compactum, field: ExternalField, m: int) -> BalayageSolution:
    from . import capacity  # local import; capacity builds on this module

    cloud = discretize(K, m)
    psi = field.values(cloud.points)
    w, E, Aw, converged = capacity.simplex_energy_minimize(cloud.points, cloud.cells, psi)
    c = float(w @ (Aw + psi))
    return BalayageSolution(
        points=cloud.points, weights=w, cells=cloud.cells, psi=psi, Aw=Aw,
        constant=c, energy=E, converged=converged,
    )


def green_potential(K: Compactum, field: ExternalField, z, m: int = 400,
                    _solution: BalayageSolution | None = None):
    """Green potential of K in the given field, evaluated at z.

    G(z) = (potential of the background measure minus its balayage onto
    K) + constant, normalized so the support-weighted mean of G over the
    discretized K vanishes.  For z in a component of the complement that
    does not meet the field support (infinity for the zero field), the
    value is 0 exactly.

    Near-atom queries are answered with the blob-consistent on-cloud
    value rather than the raw atomic sum, so boundary values stay finite.
    """
    sol = _solution if _solution is not None else _solve_balayage(K, field, m)
    zs = np.asarray(z, dtype=complex)
    scalar = zs.ndim == 0
    zs = np.atleast_1d(zs).ravel()

    targets = field.support_points()
    if field.is_zero():
        targets = [complex(math.inf, math.inf)]
    mask = ComplementMask(K, targets)
    tilde = sol.measure()
    on_cloud = sol.constant - sol.psi - sol.Aw  # blob-consistent boundary values
    out = np.empty(len(zs), dtype=float)
    for i, zz in enumerate(zs):
        j = int(np.abs(sol.points - zz).argmin())
        if abs(sol.points[j] - zz) < 0.5 * max(sol.cells[j], 1e-300):
            out[i] = on_cloud[j]
            continue
        if not mask.reachable(zz):
            out[i] = 0.0
            continue
        vt = spherical_potential(tilde, zz)
        out[i] = -float(field.values(zz)) - vt + sol.constant
    return float(out[0]) if scalar else out


def robin_constant(K: Compactum, m: int = 400) -> float:
    """Robin constant of K: the minimal discrete zero-field energy.

    cap K = exp(-robin_constant(K)).  A single-point set has +inf.
    """
    if K.is_single_point():
        return math.inf
    sol = _solve_balayage(K, ExternalField.zero(), m)
    return sol.energy


# ---------------------------------------------------------------------------
# variational machinery

@dataclass(frozen=True)
class VariationSpec:
    """Variation z -> z + t h(z) with h(z) = prod(z - a_l) / (z - w).

    w is the pole of the direction field, branch_points are the zeros
    a_l, and t is the (small, possibly complex) step used by the
    first-order checks.
    """

    w: complex
    branch_points: tuple
    t: complex = 1e-3

    def __post_init__(self):
        bps = tuple(complex(a) for a in self.branch_points)
        wv = complex(self.w)
        if any(abs(wv - a) < 1e-12 for a in bps):
            raise ValueError("pole w must differ from all branch points")
        object.__setattr__(self, "branch_points", bps)
        object.__setattr__(self, "w", wv)

    def h(self, z):
        z = np.asarray(z, dtype=complex)
        num = np.ones_like(z)
        for a in self.branch_points:
            num = num * (z - a)
        return num / (z - self.w)

    def h_prime(self, z):
        z = np.asarray(z, dtype=complex)
        num = np.ones_like(z)
        dnum = np.zeros_like(z)
        for a in self.branch_points:
            dnum = dnum * (z - a) + num
            num = num * (z - a)
        return dnum / (z - self.w) - num / (z - self.w) ** 2


def variation_functional(nu: DiscreteMeasure, field: ExternalField,
                         spec: VariationSpec) -> complex:
    """First-variation functional of the weighted energy.

    H = -sum_{i,j} w_i w_j (h(z_i) - h(z_j))/(z_i - z_j)
        + 2 sum_i sum_k w_i m_k h(z_i)/(z_i - zeta_k),

    where the i = j kernel value is the analytic limit h'(z_i) and
    zeta_k runs over the atoms of the background measure (atoms at
    infinity contribute nothing).  For extremal configurations H
    vanishes; Re(t H) is the first-order energy increment under
    z -> z + t h(z).
    """
    z = nu.points
    w = nu.weights
    if any(abs(complex(spec.w) - p) < 1e-12 for p in z):
        raise ValueError("variation pole lies on the support")
    Z1 = z[:, None]
    Z2 = z[None, :]
    hz = spec.h(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        Kh = (hz[:, None] - hz[None, :]) / (Z1 - Z2)
    ii = np.arange(len(z))
    Kh[ii, ii] = spec.h_prime(z)
    H = -complex((w[:, None] * w[None, :] * Kh).sum())
    if field.kind == "measure":
        for t, mk in zip(field.measure.points, field.measure.weights):
            if is_infinite(t) or mk == 0.0:
                continue
            H += 2.0 * mk * complex((w * hz / (z - t)).sum())
    elif field.kind == "scaled_preset":
        raise ValueError("variation functional needs an atomic or zero field")
    return H


def first_order_increment(nu: DiscreteMeasure, field: ExternalField,
                          spec: VariationSpec, edges) -> dict:
    """Compare the actual energy increment under z -> z + t h(z) with the
    first-order prediction Re(t H).

    edges : complex array of len(nu) + 1 cell edges bracketing the atoms
    in order (edges move with the variation, so the cell-regularized
    self-energy tracks the configuration).  Returns a dict with the
    measured increment, the prediction, and their difference.
    """
    z = nu.points
    w = nu.weights
    edges = np.asarray(edges, dtype=complex)
    if len(edges) != len(z) + 1:
        raise ValueError("need len(nu) + 1 cell edges")
    H = variation_functional(nu, field, spec)
    t = spec.t

    def energy_at(tv):
        zt = z + tv * spec.h(z)
        et = edges + tv * spec.h(edges)
        cells = np.abs(np.diff(et))
        fv = None if field.is_zero() else field.values(zt)
        return cell_energy(zt, w, cells, fv)

    inc = energy_at(t) - energy_at(0.0)
    pred = (t * H).real
    return {
        "increment": inc,
        "prediction": pred,
        "residual": inc - pred,
        "H": H,
    }


# ---------------------------------------------------------------------------
# S-property diagnostic

@dataclass(frozen=True)
class SPropertyReport:
    asymmetry: float
    probes: np.ndarray
    normal_plus: np.ndarray
    normal_minus: np.ndarray
    delta: float

    def to_json(self) -> dict:
        return {
            "asymmetry": self.asymmetry,
            "delta": self.delta,
            "probe_count": int(len(self.probes)),
        }


def s_property_diagnostic(F: Compactum, field: ExternalField,
                          probe_count: int = 21, delta: float = 1e-2,
                          m: int = 400) -> SPropertyReport:
    """One-sided normal-derivative comparison of the Green potential.

    At interior arc points of F, estimates both one-sided normal
    derivatives of G by (G(p + delta n) - 0)/delta (the on-arc value is
    0 by the mean normalization) and reports the maximal relative
    asymmetry |d+ - d-| / (|d+| + |d-|).  Symmetric configurations give
    values near 0; a one-sided field pushes the ratio up.
    """
    sol = _solve_balayage(F, field, m)
    spacing = F.arclength() / max(m - 1, 1)
    if delta < spacing:
        raise ValueError(
            f"delta = {delta:g} is below the discretization spacing {spacing:g}"
        )
    probes = []
    normals = []
    lengths = [float(np.abs(np.diff(np.array(c))).sum()) for c in F.components]
    total = sum(lengths)
    for c, ln in zip(F.components, lengths):
        if len(c) < 2 or ln == 0:
            continue
        count = max(3, int(round(probe_count * ln / total)))
        arr = np.array(c)
        seg = np.abs(np.diff(arr))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        for s in np.linspace(0.1 * ln, 0.9 * ln, count):
            idx = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg) - 1)
            frac = (s - cum[idx]) / seg[idx]
            p = arr[idx] + frac * (arr[idx + 1] - arr[idx])
            tangent = (arr[idx + 1] - arr[idx]) / seg[idx]
            probes.append(p)
            normals.append(1j * tangent)
    probes = np.array(probes)
    normals = np.array(normals)
    gp = green_potential(F, field, probes + delta * normals, m=m, _solution=sol)
    gm = green_potential(F, field, probes - delta * normals, m=m, _solution=sol)
    dplus = np.asarray(gp) / delta
    dminus = np.asarray(gm) / delta
    denom = np.maximum(np.abs(dplus) + np.abs(dminus), 1e-300)
    asym = float((np.abs(dplus - dminus) / denom).max())
    return SPropertyReport(
        asymmetry=asym, probes=probes, normal_plus=dplus, normal_minus=dminus,
        delta=delta,
    )
