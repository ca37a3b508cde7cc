"""Diagonal and multipoint rational interpolants with pole diagnostics.

Both constructions reduce to a homogeneous n x (n+1) linear system for the
denominator Q: Hankel moment rows for the classical approximant at
infinity, divided-difference rows over node prefixes for the multipoint
one.  The null direction comes from a singular value decomposition, the
numerator from truncation (classical) or interpolation (multipoint), and
degeneracies are recorded rather than repaired.

Precision is a run-time parameter: binary64 is fine up to order ~20 for
the systems of this study, beyond that the divided-difference tables need
extended arithmetic (the solver uses max(60, 8 n) digits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Compactum
from .measure import InterpolationTable
from . import algfun

_TRIM_FLOOR = 1e-300


def _workdps(n: int) -> int:
    # divided-difference growth eats roughly a fixed number of digits per
    # order; 8 per order with a 60-digit floor kept every tested system
    # rank-revealing
    return max(60, 8 * n)


def _is_mp(x) -> bool:
    import mpmath

    return isinstance(x, (mpmath.mpf, mpmath.mpc))


@dataclass(frozen=True)
class Polynomial:
    """Dense polynomial, coefficients in ascending degree order.

    Coefficients may be python/numpy complex or mpmath numbers; Horner
    evaluation runs in whatever arithmetic coefficients and argument
    induce.  Trailing coefficients below 1e-300 are trimmed on build.
    """

    coefficients: tuple

    def __post_init__(self):
        cs = tuple(self.coefficients)
        if not cs:
            cs = (0.0,)
        for c in cs:
            x = complex(c)
            if not (math.isfinite(x.real) and math.isfinite(x.imag)):
                raise ValueError("coefficients must be finite")
        last = 0
        for i, c in enumerate(cs):
            if abs(complex(c)) > _TRIM_FLOOR:
                last = i
        object.__setattr__(self, "coefficients", cs[: last + 1])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return self.degree == 0 and abs(complex(self.coefficients[0])) <= _TRIM_FLOOR

    def __call__(self, z):
        acc = 0 * z
        for c in reversed(self.coefficients):
            acc = acc * z + c
        return acc

    def derivative(self) -> "Polynomial":
        cs = self.coefficients
        if len(cs) == 1:
            return Polynomial((0.0,))
        return Polynomial(tuple(i * c for i, c in enumerate(cs) if i > 0))

    def coefficient_norm(self) -> float:
        return math.sqrt(sum(abs(complex(c)) ** 2 for c in self.coefficients))

    def as_complex_array(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coefficients], dtype=complex)

    def to_json(self) -> dict:
        return {
            "coefficients": [[complex(c).real, complex(c).imag] for c in self.coefficients]
        }

    @classmethod
    def from_json(cls, d: dict) -> "Polynomial":
        return cls(tuple(complex(p[0], p[1]) for p in d["coefficients"]))


@dataclass(frozen=True)
class PadeApproximant:
    """Type-(n, n) rational interpolant P/Q with solve diagnostics.

    residual is the largest relative violation of the defining linear
    conditions by the computed Q; degenerate marks rank deficiency or a
    common P, Q root (reported in common_roots, never cancelled).
    """

    numerator: Polynomial
    denominator: Polynomial
    order: int
    residual: float
    degenerate: bool = False
    common_roots: tuple = ()
    nodes: tuple = ()

    def __post_init__(self):
        if self.denominator.is_zero():
            raise ValueError("denominator is identically zero")

    def __call__(self, z):
        return self.numerator(z) / self.denominator(z)

    def poles(self):
        return poly_roots(self.denominator)

    def to_json(self) -> dict:
        return {
            "numerator": self.numerator.to_json(),
            "denominator": self.denominator.to_json(),
            "order": self.order,
            "residual": self.residual,
            "degenerate": self.degenerate,
            "common_roots": [[r.real, r.imag] for r in self.common_roots],
            "nodes": [[complex(x).real, complex(x).imag] for x in self.nodes],
        }


# -- null-space extraction ---------------------------------------------------


def _canonical_phase(q):
    """Rotate a unit vector so its largest entry is real positive."""
    mags = [abs(complex(x)) for x in q]
    k = max(range(len(q)), key=lambda i: (mags[i], -i))
    piv = complex(q[k])
    if mags[k] == 0:
        return q
    rot = mags[k] / piv
    return [x * rot for x in q]


def _null_vector_np(M: np.ndarray):
    scales = np.abs(M).max(axis=1)
    scales[scales == 0] = 1.0
    Me = M / scales[:, None]
    U, S, Vh = np.linalg.svd(Me)
    q = Vh[-1].conj()
    res = float(np.abs(Me @ q).max())
    deficient = S.size >= 2 and S[-2] <= S[0] * 1e-12
    return list(q), res, deficient


def _null_vector_mp(M_rows):
    from mpmath import mp

    rows = len(M_rows)
    cols = len(M_rows[0])
    scaled = []
    for row in M_rows:
        s = max(abs(x) for x in row)
        if s == 0:
            s = mp.mpf(1)
        scaled.append([x / s for x in row])
    A = mp.matrix(scaled)
    U, S, V = mp.svd(A, full_matrices=True, compute_uv=True)

    def residual(q):
        return max(
            abs(mp.fsum(scaled[i][j] * q[j] for j in range(cols)))
            for i in range(rows)
        )

    cand = [V[cols - 1, j] for j in range(cols)]
    best_q, best_r = cand, residual(cand)
    conj = [mp.conj(x) for x in cand]
    r2 = residual(conj)
    if r2 < best_r:
        best_q, best_r = conj, r2
    smin2 = S[rows - 2] if rows >= 2 else S[0]
    deficient = rows >= 2 and smin2 <= S[0] * mp.mpf(10) ** (-mp.dps + 8)
    return best_q, float(best_r), bool(deficient)


def _attach_common_roots(P: Polynomial, Q: Polynomial):
    """Common roots of P and Q within 1e-8, best effort."""
    if P.degree < 1 or Q.degree < 1:
        return ()
    try:
        rp = poly_roots(P)
        rq = poly_roots(Q)
    except Exception:
        return ()
    out = []
    for r in rq:
        for s in rp:
            if abs(r - s) < 1e-8 * max(1.0, abs(r)):
                out.append(r)
                break
    return tuple(out)


# -- classical approximant ---------------------------------------------------


def classical_pade(coeffs, n: int, precision: str = "double") -> PadeApproximant:
    """Diagonal approximant of f(z) = sum c_m z**-m from its coefficients.

    Q solves the n x (n+1) Hankel system sum_j q_j c_{r+j} = 0, r = 1..n
    (the vanishing of the z**-1..z**-n terms of Q f), as the minimal
    singular direction after row max-equilibration, normalized to unit
    coefficient norm with the largest coefficient real positive.  P is the
    truncation of Q f to powers z**0..z**n.
    """
    coeffs = list(coeffs)
    if n < 1:
        raise ValueError("order must be at least 1")
    if len(coeffs) < 2 * n + 1:
        raise ValueError("need at least 2n+1 coefficients")
    if all(abs(complex(c)) == 0 for c in coeffs):
        raise ValueError("all-zero coefficient input")
    if precision not in ("double", "extended"):
        raise ValueError("precision must be 'double' or 'extended'")

    if precision == "extended":
        from mpmath import mp

        with mp.workdps(_workdps(n)):
            cs = [c if _is_mp(c) else mp.mpc(c) for c in coeffs]
            M = [[cs[r + j] for j in range(n + 1)] for r in range(1, n + 1)]
            q, res, deficient = _null_vector_mp(M)
            q = _canonical_phase(q)
            Q = Polynomial(tuple(mp.mpc(x) for x in q))
            p = [
                mp.fsum(q[j] * cs[j - p_] for j in range(p_, n + 1))
                for p_ in range(n + 1)
            ]
            P = Polynomial(tuple(p))
    else:
        cs = np.array([complex(c) for c in coeffs], dtype=complex)
        M = np.empty((n, n + 1), dtype=complex)
        for r in range(1, n + 1):
            M[r - 1, :] = cs[r : r + n + 1]
        q, res, deficient = _null_vector_np(M)
        q = _canonical_phase(q)
        Q = Polynomial(tuple(q))
        p = [
            sum(q[j] * cs[j - p_] for j in range(p_, n + 1)) for p_ in range(n + 1)
        ]
        P = Polynomial(tuple(p))

    common = _attach_common_roots(P, Q)
    return PadeApproximant(
        numerator=P,
        denominator=Q,
        order=n,
        residual=res,
        degenerate=bool(deficient or common),
        common_roots=common,
    )


# -- multipoint approximant --------------------------------------------------


def _leja_order(nodes):
    """Leja-style ordering: start at max modulus, then greedily maximize
    the product of distances to the points already chosen (log sums, ties
    to the lowest index).  Tames divided-difference growth."""
    N = len(nodes)
    mags = [abs(complex(x)) for x in nodes]
    first = max(range(N), key=lambda i: (mags[i], -i))
    chosen = [first]
    rest = [i for i in range(N) if i != first]
    score = {i: 0.0 for i in rest}
    while rest:
        last = chosen[-1]
        for i in rest:
            d = abs(complex(nodes[i]) - complex(nodes[last]))
            score[i] += math.log(max(d, 1e-300))
        nxt = max(rest, key=lambda i: (score[i], -i))
        chosen.append(nxt)
        rest.remove(nxt)
        del score[nxt]
    return chosen


def _newton_coefficients(xs, ys):
    """Newton coefficients over the node prefixes, in-place tableau."""
    c = list(ys)
    N = len(xs)
    for m in range(1, N):
        for i in range(N - 1, m - 1, -1):
            c[i] = (c[i] - c[i - 1]) / (xs[i] - xs[i - m])
    return c


def _newton_to_monomial(xs, coeffs, zero, one):
    """Expand a Newton-form interpolant to monomial coefficients."""
    poly = [coeffs[-1]]
    for i in range(len(coeffs) - 2, -1, -1):
        shifted = [zero] + poly
        poly = [
            shifted[k] - (xs[i] * poly[k] if k < len(poly) else zero)
            for k in range(len(poly) + 1)
        ]
        poly[0] = poly[0] + coeffs[i]
    return poly


def _node_values(f, nodes, extended: bool):
    """f at the nodes: tracked continuation for branched functions, plain
    calls otherwise."""
    if isinstance(f, algfun.BranchedFunction):
        for a in f.branch_points:
            if min(abs(complex(x) - a) for x in nodes) < 1e-9:
                raise ValueError("interpolation node at a branch point")
        if all(abs(complex(x).imag) == 0 for x in nodes):
            vals = algfun.values_on_real_axis(
                f, [complex(x).real for x in nodes], extended=extended
            )
            return list(vals)
        return [algfun.eval_continued(f, complex(x), extended=extended) for x in nodes]
    if extended:
        from mpmath import mp

        return [f(mp.mpc(x)) for x in nodes]
    return [f(complex(x)) for x in nodes]


def multipoint_pade(
    f, table: InterpolationTable, n: int, precision: str = "double"
) -> PadeApproximant:
    """Type-(n, n) interpolant of f over the 2n+1 nodes of the table.

    Q solves the homogeneous system given by the vanishing of the Newton
    divided differences of f Q over the node prefixes of lengths
    n+2..2n+1; P interpolates f Q on the first n+1 nodes.  Nodes are
    Leja-ordered internally.  An all-infinity table routes to the
    classical construction (the coincident-node limit); mixed tables are
    not supported.
    """
    if table.n != n:
        raise ValueError("table order does not match n")
    if precision not in ("double", "extended"):
        raise ValueError("precision must be 'double' or 'extended'")
    extended = precision == "extended"
    inf_count = table.infinite_count()
    if inf_count == len(table.nodes):
        if not isinstance(f, algfun.BranchedFunction):
            raise TypeError("series data needs a BranchedFunction at infinity")
        if extended:
            from mpmath import mp

            with mp.workdps(_workdps(n)):
                coeffs = algfun.taylor_at_infinity(f, 2 * n, extended=True)
                return classical_pade(coeffs, n, precision="extended")
        coeffs = algfun.taylor_at_infinity(f, 2 * n)
        return classical_pade(coeffs, n, precision="double")
    if inf_count > 0:
        raise NotImplementedError(
            "mixed finite/infinite interpolation tables are not supported; "
            "use an all-infinity table or all finite nodes"
        )
    nodes = [complex(x) for x in table.nodes]
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if nodes[i] == nodes[j]:
                raise NotImplementedError(
                    "repeated finite nodes need derivative data"
                )

    if extended:
        from mpmath import mp

        with mp.workdps(_workdps(n)):
            vals = _node_values(f, nodes, extended=True)
            order_idx = _leja_order(nodes)
            xs = [mp.mpc(nodes[i]) for i in order_idx]
            ys = [vals[i] for i in order_idx]
            N = 2 * n + 1
            M = []
            cols = []
            for j in range(n + 1):
                data = [ys[i] * xs[i] ** j for i in range(N)]
                cols.append(_newton_coefficients(xs, data))
            M = [[cols[j][r] for j in range(n + 1)] for r in range(n + 1, N)]
            q, res, deficient = _null_vector_mp(M)
            q = _canonical_phase(q)
            Q = Polynomial(tuple(mp.mpc(x) for x in q))
            fq = [ys[i] * Q(xs[i]) for i in range(n + 1)]
            pc = _newton_coefficients(xs[: n + 1], fq)
            P = Polynomial(
                tuple(_newton_to_monomial(xs[: n + 1], pc, mp.mpc(0), mp.mpc(1)))
            )
    else:
        vals = _node_values(f, nodes, extended=False)
        order_idx = _leja_order(nodes)
        xs = [complex(nodes[i]) for i in order_idx]
        ys = [complex(vals[i]) for i in order_idx]
        N = 2 * n + 1
        cols = []
        for j in range(n + 1):
            data = [ys[i] * xs[i] ** j for i in range(N)]
            cols.append(_newton_coefficients(xs, data))
        M = np.array(
            [[cols[j][r] for j in range(n + 1)] for r in range(n + 1, N)],
            dtype=complex,
        )
        q, res, deficient = _null_vector_np(M)
        q = _canonical_phase(q)
        Q = Polynomial(tuple(q))
        fq = [ys[i] * Q(xs[i]) for i in range(n + 1)]
        pc = _newton_coefficients(xs[: n + 1], fq)
        P = Polynomial(tuple(_newton_to_monomial(xs[: n + 1], pc, 0j, 1.0)))

    common = _attach_common_roots(P, Q)
    return PadeApproximant(
        numerator=P,
        denominator=Q,
        order=n,
        residual=res,
        degenerate=bool(deficient or common),
        common_roots=common,
        nodes=tuple(table.nodes),
    )


# -- root extraction ---------------------------------------------------------


def poly_roots(Q, precision: str | None = None):
    """All roots of the polynomial, with multiplicity, as builtin complex.

    Double route: companion-matrix eigenvalues plus three Newton polish
    sweeps.  Extended route (chosen explicitly or whenever coefficients
    are mpmath numbers): simultaneous iteration at >= 60 digits.  Output
    sorted by (real, imag).
    """
    if isinstance(Q, Polynomial):
        cs = list(Q.coefficients)
    else:
        cs = list(Q)
    deg = len(cs) - 1
    while deg > 0 and abs(complex(cs[deg])) <= _TRIM_FLOOR:
        deg -= 1
    cs = cs[: deg + 1]
    if deg < 1:
        raise ValueError("need degree at least 1")
    if deg > 128:
        raise ValueError("degree capped at 128")
    if precision is None:
        precision = "extended" if any(_is_mp(c) for c in cs) else "double"
    if precision == "extended":
        from mpmath import mp

        with mp.workdps(max(mp.dps, 60)):
            desc = [c if _is_mp(c) else mp.mpc(c) for c in reversed(cs)]
            try:
                roots = mp.polyroots(desc, maxsteps=300, extraprec=100)
            except mp.NoConvergence:
                roots = mp.polyroots(desc, maxsteps=1000, extraprec=250)
            out = [complex(r) for r in roots]
    else:
        desc = np.array([complex(c) for c in reversed(cs)], dtype=complex)
        roots = np.roots(desc)
        der = np.polyder(desc)
        for _ in range(3):
            pv = np.polyval(desc, roots)
            dv = np.polyval(der, roots)
            ok = np.abs(dv) > 0
            roots[ok] = roots[ok] - pv[ok] / dv[ok]
        out = [complex(r) for r in roots]
    out.sort(key=lambda z: (z.real, z.imag))
    return out


# -- orthogonality residuals --------------------------------------------------


def _rectangle_nodes(x0, x1, y0, y1, samples):
    """Closed rectangle walk, bottom-right corner first, counterclockwise;
    samples/4 intervals per side so the corners are always nodes."""
    per = samples // 4
    c = [complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]
    pts = []
    for k in range(4):
        a, b = c[k], c[(k + 1) % 4]
        for i in range(per):
            pts.append(a + (b - a) * i / per)
    return pts


def orthogonality_residuals(
    Q,
    omega,
    f,
    L: Compactum,
    nu_max: int,
    samples: int = 8192,
    margin: float = 0.1,
    with_scales: bool = False,
):
    """Contour moments  (1/2 pi i)-free  ∮ Q(t) f(t) / omega(t) t**nu dt.

    The weight is the reciprocal of the polynomial ``omega`` (pass
    Polynomial((1,)) for weight one); ``omega`` must be zero-free inside
    the contour.  The contour is the rectangle enclosing L at the given
    margin, walked from its bottom-right corner, with the branch of f
    continued along it from the anchor (so the integrand uses the branch
    holomorphic outside L).  Trapezoid rule at ``samples`` nodes (>= 2048,
    divisible by 8) with one Richardson step reusing the even-index
    half-resolution pass.  Near-zero residuals relative to the returned
    scales certify the orthogonality relations the denominator satisfies.

    Returns the list of residuals for nu = 0..nu_max, or (residuals,
    scales) when ``with_scales``.
    """
    from mpmath import mp

    if samples < 2048 or samples % 8 != 0:
        raise ValueError("samples must be >= 2048 and divisible by 8")
    if nu_max < 0:
        raise ValueError("nu_max must be >= 0")
    verts = L.finite_vertices()
    if verts.size == 0:
        raise ValueError("L must have a finite part")
    x0 = float(verts.real.min()) - margin
    x1 = float(verts.real.max()) + margin
    y0 = float(verts.imag.min()) - margin
    y1 = float(verts.imag.max()) + margin
    if isinstance(f, algfun.BranchedFunction):
        for a in f.branch_points:
            on_edge = (
                min(abs(a.real - x0), abs(a.real - x1)) < 1e-9
                and y0 - 1e-9 <= a.imag <= y1 + 1e-9
            ) or (
                min(abs(a.imag - y0), abs(a.imag - y1)) < 1e-9
                and x0 - 1e-9 <= a.real <= x1 + 1e-9
            )
            if on_edge:
                raise ValueError("contour crosses a branch point")
    if omega.degree >= 1:
        for r in poly_roots(omega):
            if x0 < r.real < x1 and y0 < r.imag < y1:
                raise ValueError("weight must be zero-free inside the contour")

    dps = max(60, 8 * max(Q.degree, 1))
    with mp.workdps(dps):
        pts = _rectangle_nodes(x0, x1, y0, y1, samples)
        if isinstance(f, algfun.BranchedFunction):
            # one extra step closes the loop: the tracked branch must come
            # back to its start value, else f is not single-valued here
            looped = algfun.values_along(f, pts + [pts[0]], extended=True)
            fvals = looped[:-1]
            vmax = max(abs(v) for v in fvals)
            if abs(looped[-1] - looped[0]) > 1e-6 * max(vmax, 1.0):
                raise RuntimeError("branch is not single-valued along the contour")
        else:
            fvals = [f(mp.mpc(p)) for p in pts]
        zs = [mp.mpc(p) for p in pts]
        integrand = [Q(z) * fv / omega(z) for z, fv in zip(zs, fvals)]

        def moments(idx):
            m = len(idx)
            dz = [
                (zs[idx[(i + 1) % m]] - zs[idx[(i - 1) % m]]) / 2 for i in range(m)
            ]
            res = []
            sca = []
            pw = [mp.mpc(1)] * m
            for nu in range(nu_max + 1):
                res.append(
                    mp.fsum(integrand[idx[i]] * pw[i] * dz[i] for i in range(m))
                )
                sca.append(
                    mp.fsum(
                        abs(integrand[idx[i]]) * abs(pw[i]) * abs(dz[i])
                        for i in range(m)
                    )
                )
                if nu < nu_max:
                    pw = [pw[i] * zs[idx[i]] for i in range(m)]
            return res, sca

        full_idx = list(range(samples))
        half_idx = list(range(0, samples, 2))
        r_full, s_full = moments(full_idx)
        r_half, _ = moments(half_idx)
        out = [complex((4 * a - b) / 3) for a, b in zip(r_full, r_half)]
        scales = [float(s) for s in s_full]
    if with_scales:
        return out, scales
    return out
