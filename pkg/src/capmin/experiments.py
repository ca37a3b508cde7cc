"""Scripted pipelines: the pole-attraction counterexample, a classical
pole-distribution demo, external-field capacity bounds, and a three-point
minimal-continuum solver.

Every pipeline consumes an ExperimentConfig and returns an
ExperimentReport whose distances name the two objects compared and whose
verdicts carry their thresholds in the name.  Reports hold plain data
only (no timestamps, no environment echoes beyond the config), so a rerun
with the same config serializes byte-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    CORNERS,
    Compactum,
    _segment_intersection,
    build_named,
    discretize,
    hausdorff_distance,
    distance_to_compactum,
)
from .measure import (
    DiscreteMeasure,
    PRESETS,
    quantile_nodes,
    weak_star_distance,
    zero_counting,
)
from .potential import ExternalField, energy_matrix
from .capacity import (
    CapacityEstimate,
    energy_capacity,
    equilibrium_measure,
    fekete_capacity,
    simplex_energy_minimize,
)
from . import algfun, pade

_EXPERIMENTS = ("stahl_demo", "counterexample", "chebotarev", "field_bounds")
_FIELD_KS = (4, 16, 64, 256)
_DEMO_ORDERS = (6, 10, 16)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run description; the only input an experiment sees."""

    experiment: str
    k: int = 64
    n: int = 20
    mu_preset: str = "chebyshev"
    m: int = 400
    precision: str = "extended"
    seed: int = 0

    def __post_init__(self):
        if self.experiment not in _EXPERIMENTS:
            raise ValueError(
                f"experiment must be one of {_EXPERIMENTS}, got {self.experiment!r}"
            )
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError("k must be an integer >= 1")
        if not isinstance(self.n, int) or not (1 <= self.n <= 64):
            raise ValueError("n must be an integer in 1..64")
        if self.mu_preset not in PRESETS:
            raise ValueError(f"mu_preset must be one of {tuple(PRESETS)}")
        if not isinstance(self.m, int) or self.m < 100:
            raise ValueError("m must be an integer >= 100")
        if self.precision not in ("double", "extended"):
            raise ValueError("precision must be 'double' or 'extended'")
        if not isinstance(self.seed, int):
            raise ValueError("seed must be an integer")
        if self.experiment == "counterexample" and self.precision == "double" and self.n > 20:
            raise ValueError(
                "precision 'double' is unreliable for interpolation systems "
                "beyond order 20; rerun with precision='extended'"
            )

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "k": self.k,
            "n": self.n,
            "mu_preset": self.mu_preset,
            "m": self.m,
            "precision": self.precision,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ValueError("config must be a JSON object")
        known = {"experiment", "k", "n", "mu_preset", "m", "precision", "seed"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        if "experiment" not in d:
            raise ValueError("config must name an experiment")
        kwargs = dict(d)
        for key in ("k", "n", "m", "seed"):
            if key in kwargs:
                v = kwargs[key]
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ValueError(f"{key} must be an integer")
        return cls(**kwargs)


@dataclass(frozen=True)
class ExperimentReport:
    """Named results of one pipeline run.

    capacities: (name, CapacityEstimate) pairs
    pole_measures: (name, DiscreteMeasure) pairs
    distances: (name, float) pairs; the name states both compared objects
    verdicts: (name, bool) pairs; the name states the threshold
    """

    experiment: str
    capacities: tuple = ()
    pole_measures: tuple = ()
    distances: tuple = ()
    verdicts: tuple = ()
    notes: tuple = ()
    provenance: dict = None

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "provenance": self.provenance,
            "capacities": [
                {"name": k, "estimate": v.to_json()} for k, v in self.capacities
            ],
            "pole_measures": [
                {"name": k, "measure": v.to_json()} for k, v in self.pole_measures
            ],
            "distances": [{"name": k, "value": v} for k, v in self.distances],
            "verdicts": [{"name": k, "value": v} for k, v in self.verdicts],
            "notes": list(self.notes),
        }

    def verdict(self, name: str) -> bool:
        for k, v in self.verdicts:
            if k == name:
                return v
        raise KeyError(name)

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentReport":
        return cls(
            experiment=d["experiment"],
            capacities=tuple(
                (e["name"], CapacityEstimate.from_json(e["estimate"]))
                for e in d.get("capacities", ())
            ),
            pole_measures=tuple(
                (e["name"], DiscreteMeasure.from_json(e["measure"]))
                for e in d.get("pole_measures", ())
            ),
            distances=tuple((e["name"], e["value"]) for e in d.get("distances", ())),
            verdicts=tuple((e["name"], e["value"]) for e in d.get("verdicts", ())),
            notes=tuple(d.get("notes", ())),
            provenance=d.get("provenance"),
        )


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.experiment == "counterexample":
        return run_counterexample(cfg)
    if cfg.experiment == "stahl_demo":
        return run_stahl_demo(cfg)
    if cfg.experiment == "field_bounds":
        return run_field_bounds(cfg)
    if cfg.experiment == "chebotarev":
        return run_chebotarev(cfg)
    raise ValueError(cfg.experiment)


# -- shared helpers ----------------------------------------------------------


def field_sup_on_disk(field: ExternalField, nr: int = 48, nth: int = 256) -> float:
    """max |psi| over the closed unit disk, on a polar grid plus the real
    diameter (the preset potentials peak on the imaginary axis, but the
    grid does not assume that)."""
    rr = np.linspace(0.0, 1.0, nr)[1:]
    th = np.linspace(0.0, 2 * np.pi, nth, endpoint=False)
    zg = (rr[:, None] * np.exp(1j * th)[None, :]).ravel()
    zg = np.concatenate([zg, np.linspace(-1.0, 1.0, 1001).astype(complex), [0j]])
    return float(np.abs(field.values(zg)).max())


def _cross_seeded_caps(K: Compactum, field: ExternalField, m: int):
    """Zero-field and weighted capacity of K, each energy taken as the
    better of its own minimizer and the other problem's minimizer (the
    sandwich test must not fail on solver slack)."""
    cloud = discretize(K, m)
    psi = field.values(cloud.points)
    A = energy_matrix(cloud.points, cloud.cells)
    w0, e0, _, _ = simplex_energy_minimize(cloud.points, cloud.cells, np.zeros(len(cloud)))
    wp, ep, _, _ = simplex_energy_minimize(cloud.points, cloud.cells, psi)
    e0 = min(e0, float(wp @ A @ wp))
    ep = min(ep, float(w0 @ A @ w0 + 2.0 * float(psi @ w0)))
    return math.exp(-e0), math.exp(-ep)


def _pole_compactum(poles) -> Compactum:
    return Compactum(components=tuple((p,) for p in poles), label="poles")


def _counterexample_orders(n: int):
    return tuple(m for m in (n - 12, n - 8, n - 4, n) if m >= 2)


# -- the counterexample ------------------------------------------------------


def _fstar_disk_values(f: algfun.BranchedFunction, grid_n: int = 200):
    """Values of the branch of f holomorphic off the crossing set, on a
    grid over the unit square, swept column-wise from above and below and
    row-wise from the sides so no continuation step crosses a cut."""
    a1, a2, a3, a4 = CORNERS
    cuts = ((a1, a4), (a2, a3))
    xs = np.linspace(-1.0, 1.0, grid_n)
    vals = np.full((grid_n, grid_n), np.nan + 1j * np.nan, dtype=complex)
    done = np.zeros((grid_n, grid_n), dtype=bool)

    def crosses(p, q):
        for s0, s1 in cuts:
            if _segment_intersection(p, q, s0, s1, 1e-12) is not None:
                return True
        return False

    def sweep(points_by_line):
        # points_by_line: list of (approach waypoints, [(i, j, z), ...])
        for approach, cells in points_by_line:
            tr = None
            prev = None
            for i, j, z in cells:
                if done[i, j]:
                    continue
                start = approach[-1] if prev is None else prev
                if crosses(start, z):
                    prev = None
                    tr = None
                    continue
                if tr is None:
                    tr = algfun._BranchTracker(f)
                    for w in approach:
                        tr.advance(w)
                tr.advance(z)
                vals[i, j] = tr.value
                done[i, j] = True
                prev = z

    in_disk = (xs[None, :] ** 2 + xs[:, None] ** 2) <= 1.0

    cols_top = []
    cols_bot = []
    for j, x in enumerate(xs):
        idx = [i for i in range(grid_n) if in_disk[i, j]]
        top = [(i, j, complex(x, xs[i])) for i in sorted(idx, reverse=True)]
        bot = [(i, j, complex(x, xs[i])) for i in sorted(idx)]
        cols_top.append(((complex(x, 2.0),), top))
        cols_bot.append(((complex(x, -2.0),), bot))
    sweep(cols_top)
    sweep(cols_bot)

    rows_left = []
    rows_right = []
    for i, y in enumerate(xs):
        idx = [j for j in range(grid_n) if in_disk[i, j] and not done[i, j]]
        if not idx:
            continue
        left = [(i, j, complex(xs[j], y)) for j in sorted(idx)]
        right = [(i, j, complex(xs[j], y)) for j in sorted(idx, reverse=True)]
        rows_left.append(((complex(-2.0, 2.0), complex(-2.0, y)), left))
        rows_right.append(((complex(2.0, 2.0), complex(2.0, y)), right))
    sweep(rows_left)
    sweep(rows_right)
    return xs, vals, done, in_disk


def _grid_coverage(approximant, f, poles, grid_n: int = 200):
    """Fraction of a grid over the unit disk (pole disks of radius 1e-2
    removed) where |R - f| exceeds 1e-2 and 1e-4.  A diagnostic
    approximation of convergence in capacity, never a capacity claim."""
    xs, fv, done, in_disk = _fstar_disk_values(f, grid_n)
    Z = xs[None, :] + 1j * xs[:, None]
    keep = in_disk & done
    for p in poles:
        keep &= np.abs(Z - p) > 1e-2
    P = approximant.numerator.as_complex_array()
    Q = approximant.denominator.as_complex_array()
    num = np.zeros_like(Z)
    for c in P[::-1]:
        num = num * Z + c
    den = np.zeros_like(Z)
    for c in Q[::-1]:
        den = den * Z + c
    R = np.where(den != 0, num / np.where(den != 0, den, 1.0), np.inf)
    err = np.abs(R - fv)
    total = int(keep.sum())
    out = {}
    for eps in (1e-2, 1e-4):
        out[eps] = float((err[keep] > eps).sum()) / max(total, 1)
    excluded = 1.0 - total / max(int(in_disk.sum()), 1)
    return out, excluded


def run_counterexample(cfg: ExperimentConfig) -> ExperimentReport:
    """Interpolation on the real set E_k versus the crossing set the poles
    actually choose.

    Pipeline: nodes from the preset quantiles on [-k, k]; multipoint
    interpolants of the four-point function over a ladder of orders; the
    denominators' zero-counting measures, restricted to the unit disk,
    compared in the weak-star metric against the equilibrium measures of
    the crossing set L and of the two-edge set K_star; admissibility of
    both sets; weighted capacity comparison under the scaled preset field;
    orthogonality residuals of the final denominator against the
    reciprocal of the far-node polynomial.
    """
    if cfg.experiment != "counterexample":
        raise ValueError("config is not a counterexample run")
    k = float(cfg.k)
    fs = algfun.cross_function()
    L = build_named("L")
    Ks = build_named("K_star")
    Ek = build_named("E_k", k=k)
    lam_L = equilibrium_measure(L, cfg.m)
    lam_K = equilibrium_measure(Ks, cfg.m)

    orders = _counterexample_orders(cfg.n)
    distances = []
    pole_measures = []
    rhos = []
    final = None
    for order in orders:
        table = quantile_nodes(cfg.mu_preset, -k, k, order)
        r = pade.multipoint_pade(fs, table, order, precision=cfg.precision)
        poles = pade.poly_roots(r.denominator)
        nu = zero_counting(r.denominator)
        nu_d, dropped = nu.restricted_to_disk(1.0)
        rho_L = weak_star_distance(nu_d, lam_L)
        rhos.append(rho_L)
        distances.append((f"rho(nu_{order}|D, lambda_L)", rho_L))
        distances.append((f"dropped_mass(nu_{order} outside D)", dropped))
        pole_measures.append((f"nu_{order}", nu))
        final = (order, r, poles, nu_d)

    order, approx, poles, nu_d = final
    rho_L = rhos[-1]
    rho_K = weak_star_distance(nu_d, lam_K)
    distances.append((f"rho(nu_{order}|D, lambda_K_star)", rho_K))
    dmin = min(min(abs(p - 1 / 16), abs(p + 1 / 16)) for p in poles)
    distances.append((f"min distance of nu_{order} poles to +-1/16", dmin))

    adm_L = algfun.admissibility_check(L, fs, Ek)
    adm_K = algfun.admissibility_check(Ks, fs, Ek)

    field = ExternalField.from_scaled_preset(cfg.mu_preset, k)
    cap_K = energy_capacity(Ks, m=cfg.m)
    cap_L = energy_capacity(L, m=cfg.m)
    cap_Kw = energy_capacity(Ks, field, m=cfg.m)
    cap_Lw = energy_capacity(L, field, m=cfg.m)
    connector = Compactum(components=((CORNERS[0], 1.0 + 0j),), label="connector")
    cap_conn = energy_capacity(connector, m=cfg.m)
    capacities = [
        ("cap(K_star)", cap_K),
        ("cap(L)", cap_L),
        (f"cap_psi(K_star, k={cfg.k})", cap_Kw),
        (f"cap_psi(L, k={cfg.k})", cap_Lw),
        ("cap(connector a_1 to boundary)", cap_conn),
    ]

    # orthogonality of the final denominator against 1/omega, omega built
    # from the nodes of modulus above sqrt(k)
    table = quantile_nodes(cfg.mu_preset, -k, k, order)
    far = [complex(x) for x in table.nodes if abs(complex(x)) > math.sqrt(k)]
    om = np.array([1.0 + 0j])
    for x in far:
        om = np.convolve(om, np.array([-x, 1.0]))
    omega = pade.Polynomial(tuple(om))
    res, sca = pade.orthogonality_residuals(
        approx.denominator, omega, fs, L, nu_max=4, with_scales=True
    )
    rel = max(abs(r) / s for r, s in zip(res, sca))
    distances.append(("max relative orthogonality residual (nu<=4, weight 1/omega_far)", rel))

    cover, excluded = _grid_coverage(approx, fs, poles)
    distances.append(("grid fraction |R-f| > 1e-2 (disk, poles excluded)", cover[1e-2]))
    distances.append(("grid fraction |R-f| > 1e-4 (disk, poles excluded)", cover[1e-4]))
    distances.append(("grid fraction excluded (pole disks, cut band)", excluded))

    decreasing = all(a > b for a, b in zip(rhos, rhos[1:]))
    pole_near = dmin < 0.1
    dichotomy = rho_L < rho_K
    verdicts = [
        (f"rho(nu|D, lambda_L) strictly decreasing over orders {orders}", decreasing),
        (f"pole within 0.1 of +1/16 or -1/16 at n={order}", pole_near),
        ("admissibility_check rejects L on E_k", not adm_L),
        ("admissibility_check accepts K_star on E_k", adm_K),
        (f"rho(nu|D, lambda_L) < rho(nu|D, lambda_K_star) at n={order}", dichotomy),
        ("weighted cap(K_star) < 0.18", cap_Kw.value < 0.18),
        ("cap(connector) > 0.19", cap_conn.value > 0.19),
        (
            "tension: poles approach E_k crossings no admissible set may cover",
            pole_near and (not adm_L) and adm_K,
        ),
    ]
    notes = (
        "The admissible-side limit measure is defined through a hypothetical "
        "minimizing sequence and is not computable; this report demonstrates "
        "the attraction to the crossing-set equilibrium measure and the "
        "admissibility obstruction, nothing stronger.",
        "Grid coverage fractions approximate convergence in capacity on a "
        "200x200 grid; they are a diagnostic, never a capacity claim.",
    )
    return ExperimentReport(
        experiment=cfg.experiment,
        capacities=tuple(capacities),
        pole_measures=tuple(pole_measures),
        distances=tuple(distances),
        verdicts=tuple(verdicts),
        notes=notes,
        provenance={"config": cfg.to_json()},
    )


# -- classical pole-distribution demo ----------------------------------------


def _classical_at(f: algfun.BranchedFunction, order: int, precision: str):
    """Classical diagonal approximant of f from its expansion at infinity."""
    if precision == "extended":
        from mpmath import mp

        with mp.workdps(max(60, 8 * order)):
            c = algfun.taylor_at_infinity(f, 2 * order, extended=True)
    else:
        c = algfun.taylor_at_infinity(f, 2 * order)
    return pade.classical_pade(c, order, precision=precision)


def run_stahl_demo(cfg: ExperimentConfig) -> ExperimentReport:
    """Classical diagonal approximants for the inverse-sqrt reference and
    for the four-point function, with the capacity ranking of three
    candidate cut sets at the zero field."""
    if cfg.experiment != "stahl_demo":
        raise ValueError("config is not a stahl_demo run")
    ref = algfun.inverse_sqrt_reference()
    fs = algfun.cross_function()
    arcsine = DiscreteMeasure.from_quantiles("chebyshev", -1.0, 1.0, cfg.m)
    seg = build_named("E_segment", a=-1.0, b=1.0)

    distances = []
    pole_measures = []
    for order in _DEMO_ORDERS:
        r = _classical_at(ref, order, cfg.precision)
        nu = zero_counting(r.denominator)
        pole_measures.append((f"nu_{order}(reference)", nu))
        distances.append(
            (f"rho(nu_{order}(reference), arcsine)", weak_star_distance(nu, arcsine))
        )
        if order == _DEMO_ORDERS[-1]:
            poles = pade.poly_roots(r.denominator)
            worst = max(distance_to_compactum(p, seg) for p in poles)
            distances.append(
                (f"max distance of nu_{order}(reference) poles to [-1,1]", worst)
            )
            ref_rho_last = weak_star_distance(nu, arcsine)
            ref_worst = worst

    a1, a2, a3, a4 = CORNERS
    candidates = [
        ("K_star", build_named("K_star")),
        ("L", build_named("L")),
        ("K_vertical", Compactum(components=((a1, a3), (a2, a4)), label="K_vertical")),
    ]
    capacities = []
    energy_vals = {}
    fekete_vals = {}
    for name, K in candidates:
        e = energy_capacity(K, m=cfg.m)
        fk = fekete_capacity(K, n=32)
        capacities.append((f"cap({name}) [energy]", e))
        capacities.append((f"cap({name}) [fekete]", fk))
        energy_vals[name] = e.value
        fekete_vals[name] = fk.value
    winner = min(energy_vals, key=lambda nm: energy_vals[nm])
    winner_fk = min(fekete_vals, key=lambda nm: fekete_vals[nm])

    fstar_last = None
    for order in _DEMO_ORDERS:
        r = _classical_at(fs, order, cfg.precision)
        nu = zero_counting(r.denominator)
        pole_measures.append((f"nu_{order}(four-point)", nu))
        fstar_last = r
    poles = pade.poly_roots(fstar_last.denominator)
    win_set = dict(candidates)[winner]
    dh = hausdorff_distance(_pole_compactum(poles), win_set)
    worst_one_sided = max(distance_to_compactum(p, win_set) for p in poles)
    distances.append(
        (f"hausdorff(nu_{_DEMO_ORDERS[-1]}(four-point) poles, {winner})", dh)
    )
    distances.append(
        (
            f"max distance of nu_{_DEMO_ORDERS[-1]}(four-point) poles to {winner}",
            worst_one_sided,
        )
    )

    verdicts = [
        ("rho(nu_16(reference), arcsine) < 0.15", ref_rho_last < 0.15),
        ("all reference poles within 0.05 of [-1,1]", ref_worst < 0.05),
        ("capacity winner is the crossing set L", winner == "L"),
        ("both estimators rank the same winner", winner == winner_fk),
        (f"four-point poles within hausdorff 0.1 of {winner}", dh < 0.1),
    ]
    notes = (
        "The minimal-capacity candidate at the zero field is the crossing "
        "set L; the two-edge set stays admissible for real interpolation "
        "sets but is not the capacity minimizer.",
        "K_star and K_vertical are congruent (quarter-turn) two-segment "
        "configurations, so their capacities agree to solver tolerance and "
        "their mutual ranking is not meaningful.",
    )
    return ExperimentReport(
        experiment=cfg.experiment,
        capacities=tuple(capacities),
        pole_measures=tuple(pole_measures),
        distances=tuple(distances),
        verdicts=tuple(verdicts),
        notes=notes,
        provenance={"config": cfg.to_json()},
    )


# -- external-field capacity bounds ------------------------------------------


def run_field_bounds(cfg: ExperimentConfig) -> ExperimentReport:
    """Scaled preset fields psi_k on the unit disk: sup norms must decay
    in k, and the capacity sandwich cap/rho_k^2 <= cap_psi <= cap rho_k^2
    must hold for both named sets at every k."""
    if cfg.experiment != "field_bounds":
        raise ValueError("config is not a field_bounds run")
    sets = [("K_star", build_named("K_star")), ("L", build_named("L"))]
    distances = []
    verdicts = []
    capacities = []
    sups = []
    sandwich_ok = True
    for k in _FIELD_KS:
        field = ExternalField.from_scaled_preset(cfg.mu_preset, float(k))
        s = field_sup_on_disk(field)
        sups.append(s)
        rho_k = math.exp(s)
        distances.append((f"max|psi_{k}| on closed unit disk", s))
        distances.append((f"rho_{k} = exp(max|psi_{k}|)", rho_k))
        for name, K in sets:
            cap0, capw = _cross_seeded_caps(K, field, cfg.m)
            lo, hi = cap0 / rho_k**2, cap0 * rho_k**2
            ok = (lo - 1e-12) <= capw <= (hi + 1e-12)
            sandwich_ok = sandwich_ok and ok
            capacities.append(
                (
                    f"cap_psi({name}, k={k})",
                    CapacityEstimate(
                        value=capw,
                        method="energy",
                        n_or_m=cfg.m,
                        energy=-math.log(capw),
                        robin=-math.log(capw),
                    ),
                )
            )
            verdicts.append(
                (f"sandwich cap/rho^2 <= cap_psi <= cap rho^2 for {name} at k={k}", ok)
            )
    for name, K in sets:
        e = energy_capacity(K, m=cfg.m)
        capacities.append((f"cap({name})", e))
    decreasing = all(a > b for a, b in zip(sups, sups[1:]))
    verdicts = [
        (f"max|psi_k| strictly decreasing over k in {_FIELD_KS}", decreasing),
        (f"final max|psi_{_FIELD_KS[-1]}| < 0.05", sups[-1] < 0.05),
        ("rho_k decreases to 1", decreasing),
    ] + verdicts
    verdicts.append(("sandwich holds at every k for both sets", sandwich_ok))
    return ExperimentReport(
        experiment=cfg.experiment,
        capacities=tuple(capacities),
        distances=tuple(distances),
        verdicts=tuple(verdicts),
        notes=(
            "The weighted minimizer is cross-seeded with the zero-field "
            "minimizer (and vice versa) so the sandwich cannot fail on "
            "solver slack alone.",
        ),
        provenance={"config": cfg.to_json()},
    )


# -- three-point minimal continuum -------------------------------------------


def _collinear(pts) -> bool:
    a, b, c = pts
    scale = max(abs(b - a), abs(c - a), abs(c - b))
    if scale == 0:
        return True
    area = abs(((b - a) * (c - a).conjugate()).imag)
    return area <= 1e-12 * scale * scale


def _star(center: complex, pts) -> Compactum:
    comps = tuple(
        (complex(center), complex(p)) for p in pts if abs(p - center) > 1e-12
    )
    if not comps:
        comps = ((complex(center),),)
    return Compactum(components=comps, label="star")


def chebotarev_center(points, m: int = 400):
    """Center minimizing the capacity of the three-arm star on the points.

    Coordinate descent (ternary search per axis, shrinking brackets) on
    cap(star(c)).  The objective discretizes each arm with a fixed
    per-arm budget so the sample positions move continuously with the
    center; letting the global allocator redistribute points between
    arms makes the objective stepped at the 1/m scale and displaces the
    minimizer.  Collinear inputs return the middle point and the segment
    capacity with the degenerate flag set.

    Returns (center, CapacityEstimate).
    """
    pts = [complex(p) for p in points]
    if len(pts) != 3:
        raise ValueError("need exactly 3 points")
    for i in range(3):
        for j in range(i + 1, 3):
            if pts[i] == pts[j]:
                raise ValueError("points must be distinct")
    if _collinear(pts):
        d = max(
            ((q - p) for p in pts for q in pts),
            key=abs,
        )
        u = d / abs(d)
        ts = sorted(range(3), key=lambda i: (pts[i] / u).real)
        center = pts[ts[1]]
        seg = Compactum(
            components=((pts[ts[0]], pts[ts[2]]),), label="degenerate_star"
        )
        est = energy_capacity(seg, m=m)
        return center, replace(est, degenerate=True)

    per_arm = max(m // 3, 2)

    def objective(c: complex) -> float:
        clouds = []
        for p in pts:
            if abs(p - c) <= 1e-12:
                continue
            arm = Compactum(components=((complex(c), p),), label="arm")
            clouds.append(discretize(arm, per_arm))
        points_all = np.concatenate([cl.points for cl in clouds])
        cells_all = np.concatenate([cl.cells for cl in clouds])
        # arms share the center sample; merge duplicates as discretize does
        scale = max(1.0, float(np.abs(points_all).max()))
        keep = np.ones(len(points_all), dtype=bool)
        for i in range(len(points_all)):
            if not keep[i]:
                continue
            dup = np.abs(points_all[i + 1 :] - points_all[i]) < 1e-12 * scale
            if dup.any():
                idx = np.nonzero(dup)[0] + i + 1
                cells_all[i] += cells_all[idx].sum()
                keep[idx] = False
        _, E, _, _ = simplex_energy_minimize(
            points_all[keep], cells_all[keep], np.zeros(int(keep.sum()))
        )
        return math.exp(-E)

    c = sum(pts) / 3
    radius = max(abs(p - q) for p in pts for q in pts) / 2
    for _ in range(3):
        for axis in (1.0, 1j):
            lo, hi = -radius, radius
            for _ in range(18):
                m1 = lo + (hi - lo) / 3
                m2 = hi - (hi - lo) / 3
                if objective(c + axis * m1) <= objective(c + axis * m2):
                    hi = m2
                else:
                    lo = m1
            c = c + axis * (lo + hi) / 2
        radius /= 3
    return c, energy_capacity(_star(c, pts), m=m)


def run_chebotarev(cfg: ExperimentConfig) -> ExperimentReport:
    """Two deterministic demonstrations of the three-point solver."""
    if cfg.experiment != "chebotarev":
        raise ValueError("config is not a chebotarev run")
    w = np.exp(2j * np.pi / 3)
    roots = (1.0 + 0j, complex(w), complex(w * w))
    c1, est1 = chebotarev_center(roots, m=cfg.m)

    tri = (0j, 1.0 + 0j, 1.0 + 1j)
    c2, est2 = chebotarev_center(tri, m=cfg.m)
    paths = []
    for i in range(3):
        paths.append(energy_capacity(_star(tri[i], tri), m=cfg.m).value)

    distances = [
        ("|center(cube roots of unity)|", abs(c1)),
        (
            "cap margin: min two-segment path minus star({0,1,1+i})",
            min(paths) - est2.value,
        ),
    ]
    verdicts = [
        ("cube-roots center within 1e-2 of the origin", abs(c1) < 1e-2),
        (
            "star capacity below every two-segment path for {0,1,1+i}",
            est2.value < min(paths),
        ),
        (
            "center strictly inside the triangle {0,1,1+i}",
            0.0 < c2.real < 1.0 and 0.0 < c2.imag < 1.0 and c2.imag < c2.real,
        ),
    ]
    return ExperimentReport(
        experiment=cfg.experiment,
        capacities=(
            ("cap(chebotarev star, cube roots)", est1),
            ("cap(chebotarev star, {0,1,1+i})", est2),
        ),
        distances=tuple(distances),
        verdicts=tuple(verdicts),
        notes=(),
        provenance={"config": cfg.to_json()},
    )
