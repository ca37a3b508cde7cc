"""Planar compacta, discretizations, and the maps used to deform them.

Compacta are finite unions of polyline components on the Riemann sphere.
The point at infinity is representable only as an isolated one-point
component.  All metric computations off the sphere use the chordal
(spherical) distance, so sets with infinite points compare cleanly
against bounded ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

# Relative discretization tolerance: sampling steps and containment checks
# are calibrated against diameter * TOL_DISC.
TOL_DISC = 1e-3

#: Point at infinity.  Any complex number with a non-finite part is treated
#: as the single point at infinity of the sphere.
INF = complex(math.inf, math.inf)

# Corner points of the quarter-scale square configuration used by the named
# sets below.  The square has horizontal and vertical sides of length 1/4,
# its center sits at CROSS_CENTER, and the four corners double as the branch
# points of the algebraic function studied in the experiments.
CORNERS = (
    (-2 + 3j) / 16,
    (2 + 3j) / 16,
    (-2 - 1j) / 16,
    (2 - 1j) / 16,
)
CROSS_CENTER = 1j / 16


def is_infinite(z) -> bool:
    """True when z represents the point at infinity."""
    z = complex(z)
    return not (math.isfinite(z.real) and math.isfinite(z.imag))


def chordal(z, w):
    """Chordal distance between two points of the extended plane.

    d(z, w) = |z - w| / sqrt((1 + |z|^2)(1 + |w|^2)), with the usual
    limit 1 / sqrt(1 + |z|^2) when one argument is infinite.  Accepts
    scalars or numpy arrays (broadcasting applies).
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    zinf = ~np.isfinite(z.real) | ~np.isfinite(z.imag)
    winf = ~np.isfinite(w.real) | ~np.isfinite(w.imag)
    zs = np.where(zinf, 0.0, z)
    ws = np.where(winf, 0.0, w)
    fz = 1.0 / np.sqrt(1.0 + np.abs(zs) ** 2)
    fw = 1.0 / np.sqrt(1.0 + np.abs(ws) ** 2)
    plain = np.abs(zs - ws) * fz * fw
    one_inf = np.where(zinf, fw, fz)
    out = np.where(zinf ^ winf, one_inf, np.where(zinf & winf, 0.0, plain))
    if out.ndim == 0:
        return float(out)
    return out


def _point_json(z: complex) -> dict:
    if is_infinite(z):
        return {"inf": True}
    return {"re": z.real, "im": z.imag}


def _point_from_json(d: dict) -> complex:
    if d.get("inf"):
        return INF
    return complex(d["re"], d["im"])


@dataclass(frozen=True)
class Compactum:
    """Finite union of polyline components with an optional label.

    components : tuple of tuples of complex vertices.  A component with a
    single vertex is an isolated point; a component whose first and last
    vertices coincide is a closed loop.
    """

    components: tuple
    label: str | None = None

    def __post_init__(self):
        comps = tuple(tuple(complex(z) for z in c) for c in self.components)
        if not comps or any(len(c) == 0 for c in comps):
            raise ValueError("compactum needs at least one nonempty component")
        for c in comps:
            if len(c) > 1 and any(is_infinite(z) for z in c):
                raise ValueError("infinity is representable only as an isolated point")
        object.__setattr__(self, "components", comps)

    # -- metric helpers -------------------------------------------------

    def finite_vertices(self) -> np.ndarray:
        vs = [z for c in self.components for z in c if not is_infinite(z)]
        return np.array(vs, dtype=complex)

    def has_infinity(self) -> bool:
        return any(is_infinite(c[0]) for c in self.components if len(c) == 1)

    def diameter(self) -> float:
        """Euclidean diameter of the finite part."""
        v = self.finite_vertices()
        if len(v) == 0:
            return 0.0
        samples = _dense_vertices(self, max(64, 8 * len(v)))
        d = np.abs(samples[:, None] - samples[None, :])
        return float(d.max())

    def arclength(self) -> float:
        total = 0.0
        for c in self.components:
            if len(c) > 1:
                arr = np.array(c)
                total += float(np.abs(np.diff(arr)).sum())
        return total

    def bounding_radius(self) -> float:
        v = self.finite_vertices()
        if len(v) == 0:
            return 0.0
        return float(np.abs(v).max())

    def is_single_point(self) -> bool:
        return len(self.components) == 1 and len(self.components[0]) == 1

    def min_distance(self, other: "Compactum") -> float:
        """Euclidean distance between the finite parts, via dense samples."""
        a = _dense_vertices(self, 2048)
        b = _dense_vertices(other, 2048)
        if len(a) == 0 or len(b) == 0:
            return math.inf
        block = 4096
        best = math.inf
        for i in range(0, len(a), block):
            d = np.abs(a[i : i + block, None] - b[None, :]).min()
            best = min(best, float(d))
        return best

    def intersection_points(self, other: "Compactum", tol: float = 1e-12):
        """Exact segment-segment intersection points between two compacta."""
        pts = []
        for c1 in self.components:
            for i in range(max(1, len(c1)) - 1):
                for c2 in other.components:
                    for j in range(max(1, len(c2)) - 1):
                        p = _segment_intersection(c1[i], c1[i + 1], c2[j], c2[j + 1], tol)
                        if p is not None:
                            pts.append(p)
        # merge duplicates
        out = []
        for p in pts:
            if all(abs(p - q) > 1e-9 for q in out):
                out.append(p)
        return out

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        d = {"components": [[_point_json(z) for z in c] for c in self.components]}
        if self.label is not None:
            d["label"] = self.label
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Compactum":
        comps = tuple(tuple(_point_from_json(p) for p in c) for c in d["components"])
        return cls(components=comps, label=d.get("label"))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, s: str) -> "Compactum":
        return cls.from_json(json.loads(s))


def _segment_intersection(a, b, c, d, tol):
    """Intersection point of segments [a,b] and [c,d], or None."""
    r = b - a
    s = d - c
    denom = (r * s.conjugate()).imag
    if abs(denom) < tol * max(abs(r) * abs(s), 1e-300):
        return None  # parallel or degenerate
    q = c - a
    t = (q * s.conjugate()).imag / denom
    u = (q * r.conjugate()).imag / denom
    if -tol <= t <= 1 + tol and -tol <= u <= 1 + tol:
        return a + t * r
    return None


def _dense_vertices(K: Compactum, n: int) -> np.ndarray:
    """Quasi-uniform sample of the finite part, at least the vertices."""
    finite_comps = [c for c in K.components if not (len(c) == 1 and is_infinite(c[0]))]
    if not finite_comps:
        return np.array([], dtype=complex)
    total = sum(
        float(np.abs(np.diff(np.array(c))).sum()) for c in finite_comps if len(c) > 1
    )
    out = []
    for c in finite_comps:
        if len(c) == 1:
            out.append(np.array([c[0]]))
            continue
        arr = np.array(c)
        ln = float(np.abs(np.diff(arr)).sum())
        k = max(len(c), 2, int(round(n * ln / total)) if total > 0 else 2)
        out.append(_sample_polyline(arr, k))
    return np.concatenate(out)


def _sample_polyline(vertices: np.ndarray, n: int, closed: bool | None = None) -> np.ndarray:
    """n points along a polyline, equally spaced in arclength.

    Open polylines include both endpoints.  Closed polylines (first and
    last vertex equal) place n points on [0, L) so no seam duplicate
    appears.
    """
    seg = np.abs(np.diff(vertices))
    L = seg.sum()
    if L == 0:
        return np.full(n, vertices[0])
    if closed is None:
        closed = abs(vertices[0] - vertices[-1]) < 1e-15
    if closed:
        s = L * np.arange(n) / n
    else:
        s = L * np.linspace(0.0, 1.0, n)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    return vertices[idx] + frac * (vertices[idx + 1] - vertices[idx])


@dataclass(frozen=True)
class PointCloud:
    """Discretization of a compactum: sample points plus arclength cells.

    cells[i] is the arclength of the piece of the parent set represented
    by points[i]; cell widths feed the self-energy regularization of the
    discrete energy minimizers.
    """

    points: np.ndarray
    cells: np.ndarray
    parent: Compactum

    def __len__(self):
        return len(self.points)


def discretize(K: Compactum, m: int) -> PointCloud:
    """Quasi-uniform arclength discretization with m points in total.

    Points are allocated to components proportionally to arclength, with
    at least two per component of positive length.  Endpoints of open
    components are always included.  Isolated finite points contribute
    themselves; an isolated point at infinity is rejected here since
    energy computations need finite supports.

    Parameters
    ----------
    K : Compactum
    m : int
        Total number of sample points (lower bounds per component may
        raise the actual count slightly).

    Returns
    -------
    PointCloud
    """
    if m < 2 and not K.is_single_point():
        raise ValueError("need at least two points")
    comps = []
    for c in K.components:
        if len(c) == 1:
            if is_infinite(c[0]):
                raise ValueError("cannot discretize the point at infinity")
            comps.append((np.array(c), 0.0))
        else:
            arr = np.array(c)
            comps.append((arr, float(np.abs(np.diff(arr)).sum())))
    total = sum(ln for _, ln in comps)
    pts = []
    cell = []
    for arr, ln in comps:
        if ln == 0.0:
            pts.append(np.array([arr[0]]))
            cell.append(np.array([0.0]))
            continue
        k = max(2, int(round(m * ln / total)) if total > 0 else 2)
        closed = abs(arr[0] - arr[-1]) < 1e-15
        p = _sample_polyline(arr, k, closed=closed)
        pts.append(p)
        if closed:
            h = ln / k
            cell.append(np.full(k, h))
        else:
            h = ln / (k - 1)
            w = np.full(k, h)
            w[0] = h / 2
            w[-1] = h / 2
            cell.append(w)
    points = np.concatenate(pts)
    cells = np.concatenate(cell)
    # shared vertices (e.g. arms of a star meeting at a center) produce
    # coincident samples; merge them so interaction matrices stay finite
    scale = max(1.0, float(np.abs(points).max()))
    keep = np.ones(len(points), dtype=bool)
    for i in range(len(points)):
        if not keep[i]:
            continue
        dup = np.abs(points[i + 1 :] - points[i]) < 1e-12 * scale
        if dup.any():
            idx = np.nonzero(dup)[0] + i + 1
            cells[i] += cells[idx].sum()
            keep[idx] = False
    return PointCloud(points=points[keep], cells=cells[keep], parent=K)


def distance_to_compactum(z, K: Compactum) -> float:
    """Euclidean distance from a point to the polylines of K."""
    z = complex(z)
    best = math.inf
    for c in K.components:
        if len(c) == 1:
            if not is_infinite(c[0]):
                best = min(best, abs(z - c[0]))
            continue
        for i in range(len(c) - 1):
            best = min(best, _point_segment_distance(z, c[i], c[i + 1]))
    return best


def _point_segment_distance(z, a, b) -> float:
    ab = b - a
    L2 = abs(ab) ** 2
    if L2 == 0:
        return abs(z - a)
    t = ((z - a) * ab.conjugate()).real / L2
    t = min(1.0, max(0.0, t))
    return abs(z - (a + t * ab))


def hausdorff_distance(K1: Compactum, K2: Compactum, samples: int = 4096) -> float:
    """Spherical Hausdorff distance between two compacta.

    Computed on dense quasi-uniform discretizations (roughly `samples`
    points per set) with the chordal metric, symmetrized.  Isolated
    infinite points enter with their exact chordal distances.
    """
    a = _dense_vertices(K1, samples)
    b = _dense_vertices(K2, samples)
    if K1.has_infinity():
        a = np.concatenate([a, [INF]])
    if K2.has_infinity():
        b = np.concatenate([b, [INF]])
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty compactum")
    d12 = 0.0
    block = 2048
    for i in range(0, len(a), block):
        d = chordal(a[i : i + block, None], b[None, :])
        d12 = max(d12, float(d.min(axis=1).max()))
    d21 = 0.0
    for i in range(0, len(b), block):
        d = chordal(b[i : i + block, None], a[None, :])
        d21 = max(d21, float(d.min(axis=1).max()))
    return max(d12, d21)


# ---------------------------------------------------------------------------
# maps

@dataclass(frozen=True)
class MapSpec:
    """Pointwise sphere-to-sphere map used to deform sets and measures.

    kind is one of 'disk', 'annulus', 'clamp_upper', 'clamp_lower',
    'scale'; params hold the numeric parameters of the map.
    """

    kind: str
    params: tuple = ()

    @classmethod
    def disk_projection(cls, R: float) -> "MapSpec":
        """Radial projection onto the closed disk of radius R: points with
        |z| > R move to z R / |z|, others stay."""
        if R <= 0:
            raise ValueError("radius must be positive")
        return cls("disk", (float(R),))

    @classmethod
    def annulus_projection(cls, r: float, R: float) -> "MapSpec":
        """Radial projection onto the closed annulus r <= |z| <= R."""
        if not (0 < r <= R):
            raise ValueError("need 0 < r <= R")
        return cls("annulus", (float(r), float(R)))

    @classmethod
    def clamp_upper(cls, height: float) -> "MapSpec":
        """Push points with Im z < height up to the line Im z = height."""
        return cls("clamp_upper", (float(height),))

    @classmethod
    def clamp_lower(cls, height: float) -> "MapSpec":
        """Push points with Im z > -height down to Im z = -height."""
        return cls("clamp_lower", (float(height),))

    @classmethod
    def scaling(cls, k: float) -> "MapSpec":
        """Multiplication by the real factor k."""
        if k == 0:
            raise ValueError("zero scale")
        return cls("scale", (float(k),))

    # longer aliases, matching the vocabulary used in configs
    halfplane_clamp_upper = clamp_upper
    halfplane_clamp_lower = clamp_lower
    scale = scaling

    def apply_point(self, z):
        z = complex(z)
        if is_infinite(z):
            return INF
        if self.kind == "disk":
            (R,) = self.params
            r = abs(z)
            return z if r <= R else z * (R / r)
        if self.kind == "annulus":
            r0, R0 = self.params
            r = abs(z)
            if r < r0:
                return z * (r0 / r) if r > 0 else complex(r0, 0.0)
            if r > R0:
                return z * (R0 / r)
            return z
        if self.kind == "clamp_upper":
            (h,) = self.params
            return complex(z.real, max(z.imag, h))
        if self.kind == "clamp_lower":
            (h,) = self.params
            return complex(z.real, min(z.imag, -h))
        if self.kind == "scale":
            (k,) = self.params
            return k * z
        raise ValueError(f"unknown map kind {self.kind!r}")

    def apply_points(self, zs):
        return np.array([self.apply_point(z) for z in np.asarray(zs, dtype=complex).ravel()])


def _insert_line_crossings(vertices, level: float):
    """Subdivide polyline segments where they cross Im z = level."""
    out = [vertices[0]]
    for i in range(1, len(vertices)):
        a, b = out[-1], vertices[i]
        ya, yb = a.imag - level, b.imag - level
        if ya * yb < 0:
            t = ya / (ya - yb)
            out.append(a + t * (b - a))
        out.append(b)
    return out


def apply_map(spec: MapSpec, K: Compactum) -> Compactum:
    """Image of a compactum under a MapSpec.

    Clamp maps first insert vertices where polyline segments cross the
    clamp line, so that the image polyline follows the folded geometry
    instead of cutting corners.
    """
    comps = []
    for c in K.components:
        if len(c) == 1:
            comps.append((spec.apply_point(c[0]),))
            continue
        verts = list(c)
        if spec.kind == "clamp_upper":
            verts = _insert_line_crossings(verts, spec.params[0])
        elif spec.kind == "clamp_lower":
            verts = _insert_line_crossings(verts, -spec.params[0])
        elif spec.kind == "disk":
            # crossing insertion against the circle |z| = R
            verts = _insert_circle_crossings(verts, spec.params[0])
        elif spec.kind == "annulus":
            verts = _insert_circle_crossings(verts, spec.params[0])
            verts = _insert_circle_crossings(verts, spec.params[1])
        comps.append(tuple(spec.apply_point(z) for z in verts))
    return Compactum(components=tuple(comps), label=K.label)


def _insert_circle_crossings(vertices, R: float):
    out = [vertices[0]]
    for i in range(1, len(vertices)):
        a, b = out[-1], vertices[i]
        ts = _circle_crossing_params(a, b, R)
        for t in ts:
            out.append(a + t * (b - a))
        out.append(b)
    return out


def _circle_crossing_params(a, b, R):
    d = b - a
    A = abs(d) ** 2
    if A == 0:
        return []
    B = 2 * (a.conjugate() * d).real
    C = abs(a) ** 2 - R * R
    disc = B * B - 4 * A * C
    if disc <= 0:
        return []
    r = math.sqrt(disc)
    out = [t for t in ((-B - r) / (2 * A), (-B + r) / (2 * A)) if 1e-12 < t < 1 - 1e-12]
    return sorted(out)


def symmetric_clamp(K: Compactum, j: int) -> Compactum:
    """Apply the height-1/j clamp toward the matching halfplane per component.

    Components lying in the closed upper halfplane are clamped up to
    Im z = 1/j, components in the closed lower halfplane down to -1/j.
    A component meeting both open halfplanes is rejected.
    """
    up = MapSpec.clamp_upper(1.0 / j)
    dn = MapSpec.clamp_lower(1.0 / j)
    comps = []
    for c in K.components:
        arr = np.array(c)
        if np.all(arr.imag >= -1e-15):
            comps.append(apply_map(up, Compactum((tuple(c),))).components[0])
        elif np.all(arr.imag <= 1e-15):
            comps.append(apply_map(dn, Compactum((tuple(c),))).components[0])
        else:
            raise ValueError("component crosses the real axis; split it first")
    return Compactum(components=tuple(comps), label=K.label)


# ---------------------------------------------------------------------------
# named sets

def circle(center=0.0, radius=1.0, segments: int = 512) -> Compactum:
    """Closed polygonal approximation of a circle (first vertex repeated)."""
    th = 2 * np.pi * np.arange(segments + 1) / segments
    pts = center + radius * np.exp(1j * th)
    pts[-1] = pts[0]
    return Compactum(components=(tuple(pts),), label="circle")


def build_named(name: str, **params) -> Compactum:
    """Construct one of the named sets of the study.

    Supported names:

    - ``K_star``: the two horizontal edges of the quarter-scale square,
      pairing the corner points along the top and along the bottom.
    - ``L``: the two diagonals of the same square, crossing at its center.
    - ``L_p``: the part of L in the halfplane Im z >= 2**-p (param ``p``).
    - ``E_segment``: straight segment with params ``a``, ``b`` (complex).
    - ``E_k``: the scaled segment [k a, k b]; params ``a``, ``b`` default
      to -1 and 1, param ``k`` is required.

    Returns
    -------
    Compactum
    """
    a1, a2, a3, a4 = CORNERS
    if name == "K_star":
        return Compactum(components=((a1, a2), (a3, a4)), label="K_star")
    if name == "L":
        return Compactum(components=((a1, a4), (a2, a3)), label="L")
    if name == "L_p":
        p = int(params["p"])
        if p not in (4, 5):
            raise ValueError("p must be 4 or 5")
        h = 2.0 ** -p
        comps = []
        for a, b in ((a1, a4), (a2, a3)):
            # keep the part of [a, b] with Im >= h; a is the upper end
            ya, yb = a.imag, b.imag
            if ya < h:
                raise ValueError("unexpected orientation")
            t = (ya - h) / (ya - yb)
            comps.append((a, a + t * (b - a)))
        return Compactum(components=tuple(comps), label=f"L_{p}")
    if name == "E_segment":
        a = complex(params["a"])
        b = complex(params["b"])
        if a == b:
            raise ValueError("degenerate segment")
        return Compactum(components=((a, b),), label="E_segment")
    if name == "E_k":
        a = complex(params.get("a", -1.0))
        b = complex(params.get("b", 1.0))
        k = float(params["k"])
        if k <= 0:
            raise ValueError("k must be positive")
        return Compactum(components=((k * a, k * b),), label=f"E_{k:g}")
    raise ValueError(f"unknown named set {name!r}")
