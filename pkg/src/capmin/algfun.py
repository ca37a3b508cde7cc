"""Square-root-type algebraic functions evaluated by branch tracking.

The central object is the product

    f(z) = prod_l (1 - a_l / z)**e_l

with finite nonzero branch points ``a_l`` and half-integer exponents
``e_l``.  Every factor tends to 1 at infinity, so f(inf) = 1 on the
principal sheet; the value anywhere else is pinned by analytic
continuation from a large real anchor.  Squaring removes the sign
ambiguity:

    f(z)**2 = W(z) = z**(-sum 2 e_l) * prod_l (z - a_l)**(2 e_l)

is single-valued and rational, so the continuation engine tracks the
continuous square root of W along a path, halving the step whenever the
argument of W moves by pi/2 or more between consecutive points.

The same engine, run along different paths, realizes the real-axis
branch, the branch outside a compactum, and small monodromy loops.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import (
    CORNERS,
    INF,
    Compactum,
    _point_segment_distance,
    distance_to_compactum,
    is_infinite,
)

BRANCH_MARGIN = 1e-6

# one subdivision stack deeper than this means the path is effectively
# pinned against a branch point
_MAX_SPLIT_DEPTH = 64

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _doubled(e: float) -> int:
    d = 2.0 * e
    r = round(d)
    if abs(d - r) > 1e-12:
        raise ValueError("exponents must be half-integers")
    return int(r)


@dataclass(frozen=True)
class BranchedFunction:
    """Multi-valued product (1 - a/z)**e with the branch pinned at infinity.

    Parameters
    ----------
    branch_points : tuple of complex
        Finite, distinct, nonzero points a_l.
    exponents : tuple of float
        Half-integers e_l, one per point.  Odd doubled exponents are
        genuine order-two branch points; even ones are rational factors.
    label : str
        Display name used in reports.
    anchor : float
        Real base point where the branch equals +1; must sit far outside
        the branch points.

    Notes
    -----
    The normalization f(inf) = 1 holds factor-wise for any exponents, so
    the exponent sum is not constrained here.  When the sum is not an
    integer the origin carries the complementary branching (the z**-sum
    prefactor), and the admissibility test accounts for it.
    """

    branch_points: tuple
    exponents: tuple
    label: str = ""
    anchor: float = 1e9

    def __post_init__(self):
        bps = tuple(complex(a) for a in self.branch_points)
        exps = tuple(float(e) for e in self.exponents)
        object.__setattr__(self, "branch_points", bps)
        object.__setattr__(self, "exponents", exps)
        if not bps or len(bps) != len(exps):
            raise ValueError("need exactly one exponent per branch point")
        for a in bps:
            if not (math.isfinite(a.real) and math.isfinite(a.imag)):
                raise ValueError("branch points must be finite")
            if a == 0:
                raise ValueError("branch points must be nonzero")
        for i in range(len(bps)):
            for j in range(i + 1, len(bps)):
                if abs(bps[i] - bps[j]) < 1e-12:
                    raise ValueError("branch points must be distinct")
        dd = tuple(_doubled(e) for e in exps)
        if any(d == 0 for d in dd):
            raise ValueError("zero exponents are not allowed")
        object.__setattr__(self, "_dd", dd)
        if self.anchor <= 4.0 * max(abs(a) for a in bps):
            raise ValueError("anchor must sit far outside the branch points")

    # -- structure --------------------------------------------------------

    @property
    def doubled_exponents(self) -> tuple:
        return self._dd

    @property
    def normalization(self):
        """(point, value) pair pinning the branch."""
        return (INF, 1.0)

    def origin_charge(self) -> int:
        """Doubled exponent carried by z = 0 in the squared function."""
        return -sum(self._dd)

    def square(self, z):
        """f(z)**2, a single-valued rational function.

        Accepts python/numpy complex scalars and mpmath.mpc alike; the
        balanced form below stays finite at z = 0 whenever the function
        itself does.
        """
        num = 1.0
        den = 1.0
        for a, d in zip(self.branch_points, self._dd):
            base = z - a
            if d > 0:
                num = num * base ** d
            else:
                den = den * base ** (-d)
        s = self.origin_charge()
        if s > 0:
            num = num * z ** s
        elif s < 0:
            den = den * z ** (-s)
        return num / den

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "branch_points": [[a.real, a.imag] for a in self.branch_points],
            "exponents": list(self.exponents),
            "normalization": {"point": "inf", "value": [1.0, 0.0]},
            "label": self.label,
            "anchor": self.anchor,
        }

    @classmethod
    def from_json(cls, d: dict) -> "BranchedFunction":
        return cls(
            branch_points=tuple(complex(p[0], p[1]) for p in d["branch_points"]),
            exponents=tuple(d["exponents"]),
            label=d.get("label", ""),
            anchor=float(d.get("anchor", 1e9)),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, s: str) -> "BranchedFunction":
        return cls.from_json(json.loads(s))


def cross_function() -> BranchedFunction:
    """The four-point function of the study.

    Branch points at the quarter-scale square corners, exponents +1/2 on
    the top pair and -1/2 on the bottom pair, normalized to 1 at infinity.
    """
    a1, a2, a3, a4 = CORNERS
    return BranchedFunction((a1, a2, a3, a4), (0.5, 0.5, -0.5, -0.5), label="f_star")


def inverse_sqrt_reference() -> BranchedFunction:
    """(1 - 1/z**2)**(-1/2), branch points at +-1; the demo reference."""
    return BranchedFunction((1.0, -1.0), (-0.5, -0.5), label="reference")


class _BranchTracker:
    """Carries the continuous square-root branch of W = f**2 along a path."""

    def __init__(self, f: BranchedFunction, extended: bool = False):
        self.f = f
        self.extended = bool(extended)
        if self.extended:
            from mpmath import mp

            z0 = mp.mpc(f.anchor)
            self._sqrt = mp.sqrt
            self._arg = mp.arg
            self._lift = mp.mpc
        else:
            z0 = complex(f.anchor)
            self._sqrt = cmath.sqrt
            self._arg = cmath.phase
            self._lift = complex
        self.z = z0
        self.w = f.square(z0)
        self.value = self._sqrt(self.w)

    def advance(self, target):
        f = self.f
        target = self._lift(target)
        # subdivision cannot rescue a path that genuinely grazes a branch
        # point, so this is a hard error
        za, zb = complex(self.z), complex(target)
        for a in f.branch_points:
            if _point_segment_distance(a, za, zb) < BRANCH_MARGIN:
                raise ValueError(
                    "continuation path passes within %g of branch point %s"
                    % (BRANCH_MARGIN, a)
                )
        pending = [target]
        while pending:
            if len(pending) > _MAX_SPLIT_DEPTH:
                raise RuntimeError("branch tracking failed to converge on a step")
            z_new = pending[-1]
            w_new = f.square(z_new)
            if w_new == 0:
                raise ValueError("path hits a zero of the squared function")
            ratio = w_new / self.w
            if abs(self._arg(ratio)) >= math.pi / 2:
                pending.append((self.z + z_new) / 2)
                continue
            pending.pop()
            self.value = self.value * self._sqrt(ratio)
            self.z = z_new
            self.w = w_new


def eval_continued(f: BranchedFunction, z, path=None, extended: bool = False):
    """Value of f at z, continued from the anchor.

    Parameters
    ----------
    path : sequence of complex, optional
        Intermediate waypoints between the anchor and z (both implicit).
        Without it the continuation runs along the straight segment, with
        adaptive halving; the chosen route decides the branch.
    extended : bool
        Track in mpmath arithmetic at the caller's working precision.
    """
    tr = _BranchTracker(f, extended)
    if path is not None:
        for p in path:
            tr.advance(p)
    tr.advance(z)
    return tr.value


def values_on_real_axis(f: BranchedFunction, xs, extended: bool = False):
    """Branch values at real points, swept once from the anchor downwards.

    This realizes the real-line branch: a single continuation down the
    real axis visiting every requested point, so adjacent outputs are
    values of one continuous function.  Results come back in input order.
    """
    xs = np.asarray(xs, dtype=float)
    flat = xs.ravel()
    order = np.argsort(-flat, kind="stable")
    tr = _BranchTracker(f, extended)
    out = [None] * flat.size
    for idx in order:
        tr.advance(float(flat[idx]))
        out[idx] = tr.value
    if extended:
        return out if xs.ndim == 1 else np.array(out, dtype=object).reshape(xs.shape)
    return np.array(out, dtype=complex).reshape(xs.shape)


def values_along(f: BranchedFunction, points, approach=(), extended: bool = False):
    """Branch values at each of ``points``, continued in the given order.

    The path runs anchor -> approach waypoints -> points; only the values
    at ``points`` are returned (as a list when ``extended``).
    """
    tr = _BranchTracker(f, extended)
    for p in approach:
        tr.advance(p)
    out = []
    for p in points:
        tr.advance(p)
        out.append(tr.value)
    if extended:
        return out
    return np.array(out, dtype=complex)


def monodromy_factor(f: BranchedFunction, index: int, radius: float | None = None):
    """Multiplicative factor after one counterclockwise loop around a point.

    -1 certifies a genuine order-two branch point; +1 a rational factor.
    """
    a = f.branch_points[index]
    others = [b for i, b in enumerate(f.branch_points) if i != index]
    if sum(f.doubled_exponents) != 0:
        others.append(0.0)  # the origin carries charge too
    if radius is None:
        lim = min((abs(a - b) for b in others), default=1.0 + abs(a))
        radius = min(0.45 * lim, 0.1 * (1.0 + abs(a)))
        radius = max(radius, 16 * BRANCH_MARGIN)
    # approach the loop from a direction pointing away from the other
    # points, so the incoming segment cannot graze them
    if others:
        away = a - sum(others) / len(others)
        u = away / abs(away) if away != 0 else 1.0
    else:
        u = 1.0
    last_err = None
    for rot in (1.0, 1j, -1.0, -1j):
        d = u * rot
        try:
            tr = _BranchTracker(f)
            tr.advance(a + 8 * radius * d)
            tr.advance(a + radius * d)
            v0 = tr.value
            th0 = cmath.phase(d)
            for step in range(1, 17):
                tr.advance(a + radius * cmath.exp(1j * (th0 + 2 * math.pi * step / 16)))
            return tr.value / v0
        except ValueError as exc:
            last_err = exc
    raise last_err


def taylor_at_infinity(f: BranchedFunction, N: int, extended: bool = False):
    """Coefficients c_0..c_N of f(z) = sum_m c_m z**-m on the anchor branch.

    Series composition: log f = sum_l e_l log(1 - a_l/z) has coefficients
    g_m = -sum_l e_l a_l**m / m, and exp recovers c by the convolution
    recurrence m c_m = sum_{k=1..m} k g_k c_{m-k}; c_0 = 1 exactly.
    """
    if N < 0:
        raise ValueError("need N >= 0")
    if N > 129:
        raise ValueError("series order capped at 129")
    if extended:
        from mpmath import mp

        bps = [mp.mpc(a) for a in f.branch_points]
        exps = [mp.mpf(e) for e in f.exponents]
        g = [mp.mpc(0)] * (N + 1)
        for m in range(1, N + 1):
            g[m] = -mp.fsum(
                (e * a ** m for a, e in zip(bps, exps)), absolute=False
            ) / m
        c = [mp.mpc(0)] * (N + 1)
        c[0] = mp.mpc(1)
        for m in range(1, N + 1):
            c[m] = mp.fsum(k * g[k] * c[m - k] for k in range(1, m + 1)) / m
        return c
    bps = np.array(f.branch_points, dtype=complex)
    exps = np.array(f.exponents, dtype=float)
    g = np.zeros(N + 1, dtype=complex)
    pw = np.ones_like(bps)
    for m in range(1, N + 1):
        pw = pw * bps
        g[m] = -(exps * pw).sum() / m
    c = np.zeros(N + 1, dtype=complex)
    c[0] = 1.0
    for m in range(1, N + 1):
        c[m] = sum(k * g[k] * c[m - k] for k in range(1, m + 1)) / m
    return c


# -- admissibility ---------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the grid monodromy test, with the failing evidence."""

    admissible: bool
    reason: str
    grid_n: int
    free_branch_points: tuple = ()
    island_charges: tuple = ()

    def to_json(self) -> dict:
        return {
            "admissible": self.admissible,
            "reason": self.reason,
            "grid_n": self.grid_n,
            "free_branch_points": [[p.real, p.imag] for p in self.free_branch_points],
            "island_charges": list(self.island_charges),
        }


def _clip_to_rect(a: complex, b: complex, x0, x1, y0, y1):
    """Parameter range of segment [a,b] inside the rectangle, or None."""
    t0, t1 = 0.0, 1.0
    d = b - a
    for p, q in (
        (-d.real, a.real - x0),
        (d.real, x1 - a.real),
        (-d.imag, a.imag - y0),
        (d.imag, y1 - a.imag),
    ):
        if p == 0:
            if q < 0:
                return None
            continue
        r = q / p
        if p < 0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
    if t0 > t1:
        return None
    return t0, t1


def admissibility_check(
    K: Compactum,
    f: BranchedFunction,
    E: Compactum,
    grid_n: int = 512,
    details: bool = False,
):
    """Whether K is an admissible cut set for f relative to E.

    Admissible means K avoids E and f has a single-valued branch on the
    connected component of the complement of K containing E.  The test
    runs a flood fill on a grid: the region reachable from E must contain
    no odd (order-two) branch point, and every enclosed island of the
    complement must carry an even total of doubled exponents (trivial
    monodromy for the tracked square root).  The charge the exponent sum
    induces at the origin participates like a branch point.

    K touching a branch point is fine (cut endpoints usually are branch
    points); K meeting E returns False rather than raising.

    Returns a bool, or the full AdmissibilityReport when ``details``.
    """

    def out(rep):
        return rep if details else rep.admissible

    if K.has_infinity() and E.has_infinity():
        return out(AdmissibilityReport(False, "K and E share the point at infinity", grid_n))
    if K.intersection_points(E):
        return out(AdmissibilityReport(False, "K intersects E", grid_n))
    if K.finite_vertices().size and E.finite_vertices().size:
        if K.min_distance(E) < 1e-9:
            return out(AdmissibilityReport(False, "K touches E", grid_n))

    charged = [
        (a, d) for a, d in zip(f.branch_points, f.doubled_exponents) if d % 2 != 0
    ]
    s0 = f.origin_charge()
    if s0 % 2 != 0:
        charged.append((0j, s0))
    if not charged:
        return out(AdmissibilityReport(True, "no order-two branch points", grid_n))

    box_pts = np.concatenate(
        [K.finite_vertices(), np.array([a for a, _ in charged], dtype=complex)]
    )
    xs, ys = box_pts.real, box_pts.imag
    span = max(float(np.ptp(xs)), float(np.ptp(ys)), 1e-6)
    pad = 0.25 * span + 1e-3
    x0, x1 = float(xs.min()) - pad, float(xs.max()) + pad
    y0, y1 = float(ys.min()) - pad, float(ys.max()) + pad
    hx = (x1 - x0) / grid_n
    hy = (y1 - y0) / grid_n
    step = 0.5 * min(hx, hy)

    def cell_of(z):
        i = int((z.imag - y0) / hy)
        j = int((z.real - x0) / hx)
        return min(max(i, 0), grid_n - 1), min(max(j, 0), grid_n - 1)

    # rasterize K as a blocked band one ring thick on each side
    blocked = np.zeros((grid_n, grid_n), dtype=bool)
    for comp in K.components:
        pts = [p for p in comp if not is_infinite(p)]
        if len(pts) == 1:
            i, j = cell_of(pts[0])
            blocked[max(i - 1, 0) : i + 2, max(j - 1, 0) : j + 2] = True
        for a, b in zip(pts[:-1], pts[1:]):
            npts = max(2, int(abs(b - a) / step) + 1)
            for t in np.linspace(0.0, 1.0, npts):
                i, j = cell_of(a + t * (b - a))
                blocked[max(i - 1, 0) : i + 2, max(j - 1, 0) : j + 2] = True

    # seed cells from E, clipped to the box
    seeds = np.zeros_like(blocked)
    escapes = E.has_infinity()
    for comp in E.components:
        pts = [p for p in comp if not is_infinite(p)]
        if len(pts) == 1:
            z = pts[0]
            if x0 <= z.real <= x1 and y0 <= z.imag <= y1:
                i, j = cell_of(z)
                if not blocked[i, j]:
                    seeds[i, j] = True
            else:
                escapes = True
        for a, b in zip(pts[:-1], pts[1:]):
            clip = _clip_to_rect(a, b, x0, x1, y0, y1)
            if clip is None:
                escapes = True
                continue
            t0, t1 = clip
            if t0 > 0 or t1 < 1:
                escapes = True
            npts = max(2, int(abs(b - a) * (t1 - t0) / step) + 1)
            for t in np.linspace(t0, t1, npts):
                i, j = cell_of(a + t * (b - a))
                if not blocked[i, j]:
                    seeds[i, j] = True

    free_labels, _ = ndimage.label(~blocked, structure=_FOUR_CONN)
    if escapes:
        border = np.zeros_like(seeds)
        border[0, :] = border[-1, :] = True
        border[:, 0] = border[:, -1] = True
        seeds |= border & ~blocked
    seed_ids = np.unique(free_labels[seeds])
    seed_ids = seed_ids[seed_ids > 0]
    if seed_ids.size == 0:
        return out(
            AdmissibilityReport(False, "E not resolvable at this grid size", grid_n)
        )
    reached = np.isin(free_labels, seed_ids)

    # order-two points sitting in the open E-region break single-valuedness
    cell_diag = math.hypot(hx, hy)
    free_pts = []
    for a, _ in charged:
        i, j = cell_of(a)
        if reached[i, j] and distance_to_compactum(a, K) > cell_diag:
            free_pts.append(a)
    if free_pts:
        return out(
            AdmissibilityReport(
                False,
                "order-two branch point in the component of E",
                grid_n,
                free_branch_points=tuple(free_pts),
            )
        )

    # islands: everything the flood did not reach; those touching the
    # border stand for the unbounded component, which no loop in the
    # E-region encircles
    islands, _ = ndimage.label(~reached, structure=_FOUR_CONN)
    skip = set(np.unique(islands[0, :])) | set(np.unique(islands[-1, :]))
    skip |= set(np.unique(islands[:, 0])) | set(np.unique(islands[:, -1]))
    charges: dict = {}
    for a, d in charged:
        i, j = cell_of(a)
        lbl = islands[i, j]
        if lbl == 0:
            # near-K point whose own cell got flooded: snap to the
            # closest non-reached cell in a small window
            best = None
            for di in range(-2, 3):
                for dj in range(-2, 3):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < grid_n and 0 <= jj < grid_n and islands[ii, jj] > 0:
                        dd2 = di * di + dj * dj
                        if best is None or dd2 < best[0]:
                            best = (dd2, islands[ii, jj])
            if best is None:
                return out(
                    AdmissibilityReport(
                        False,
                        "order-two branch point in the component of E",
                        grid_n,
                        free_branch_points=(a,),
                    )
                )
            lbl = best[1]
        charges[lbl] = charges.get(lbl, 0) + d
    odd = {lbl: c for lbl, c in charges.items() if lbl not in skip and c % 2 != 0}
    if odd:
        return out(
            AdmissibilityReport(
                False,
                "enclosed island carries odd branching",
                grid_n,
                island_charges=tuple(sorted(odd.values())),
            )
        )
    return out(
        AdmissibilityReport(
            True, "", grid_n, island_charges=tuple(sorted(charges.values()))
        )
    )
