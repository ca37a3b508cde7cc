"""Result persistence: canonical JSON, content-addressed cache keys,
atomic writes, delimited output, and figure rendering.

The primary JSON of an experiment is canonical (sorted keys, tight
separators) so reruns with the same config produce byte-identical files.
Figures are rendered only on the report path; the experiment path stays
figure-free and cheap.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import re
import tempfile

from . import __version__
from .geometry import Compactum, build_named


def canonical_json(obj) -> str:
    """Deterministic serialization: sorted keys, no whitespace padding."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_hash(config: dict) -> str:
    """Cache key for a config: sha256 over the canonical config plus the
    package version, so results never survive a code change."""
    payload = canonical_json({"config": config, "version": __version__})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def atomic_write_text(path: str, text: str):
    """Write-then-rename so concurrent readers never see a partial file."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, rows):
    """RFC 4180 delimited output: CRLF records, minimal quoting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    for row in rows:
        w.writerow(row)
    atomic_write_text(path, buf.getvalue())


def _safe(name: str) -> str:
    s = re.sub(r"[^A-Za-z0-9_.-]+", "_", name)
    return s.strip("_") or "item"


def report_stem(report) -> str:
    cfg = (report.provenance or {}).get("config", {})
    return f"{report.experiment}-{content_hash(cfg)[:16]}"


def write_report(report, out_dir: str) -> dict:
    """Primary JSON plus delimited side files for one report.

    Returns {"json": path, "csv": [paths]}.  The JSON is canonical; the
    CSVs carry the pole measures and a summary of distances and verdicts.
    """
    from .measure import DiscreteMeasure, measure_to_csv_rows

    stem = report_stem(report)
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, stem + ".json")
    atomic_write_text(json_path, canonical_json(report.to_json()) + "\n")

    csv_paths = []
    for name, nu in report.pole_measures:
        p = os.path.join(out_dir, f"{stem}-{_safe(name)}.csv")
        write_csv(p, measure_to_csv_rows(nu))
        csv_paths.append(p)
    rows = [("kind", "name", "value")]
    for name, v in report.distances:
        rows.append(("distance", name, repr(float(v))))
    for name, v in report.verdicts:
        rows.append(("verdict", name, "pass" if v else "fail"))
    for name, est in report.capacities:
        rows.append(("capacity", name, repr(float(est.value))))
    p = os.path.join(out_dir, f"{stem}-summary.csv")
    write_csv(p, rows)
    csv_paths.append(p)
    return {"json": json_path, "csv": csv_paths}


# -- figures -----------------------------------------------------------------


def _draw_compactum(ax, K: Compactum, **kw):
    label = kw.pop("label", K.label or None)
    first = True
    for comp in K.components:
        xs = [z.real for z in comp]
        ys = [z.imag for z in comp]
        if len(comp) == 1:
            ax.plot(xs, ys, marker="o", linestyle="", label=label if first else None, **kw)
        else:
            ax.plot(xs, ys, label=label if first else None, **kw)
        first = False


def _measure_by_name(report, pattern: str):
    rx = re.compile(pattern)
    out = []
    for name, nu in report.pole_measures:
        m = rx.fullmatch(name)
        if m:
            out.append((m, nu))
    return out


def _distances_by_name(report, pattern: str):
    rx = re.compile(pattern)
    out = []
    for name, v in report.distances:
        m = rx.fullmatch(name)
        if m:
            out.append((m, v))
    return out


def render_figures(report, out_dir: str) -> list:
    """Figure files for one report; returns the paths written.

    Each experiment gets a pole/geometry picture where that makes sense
    plus a trend picture of its leading diagnostic.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stem = report_stem(report)
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    def save(fig, suffix):
        p = os.path.join(out_dir, f"{stem}-{suffix}.png")
        fig.savefig(p, dpi=150, bbox_inches="tight")
        plt.close(fig)
        paths.append(p)

    if report.experiment == "counterexample":
        name, nu = report.pole_measures[-1]
        fig, ax = plt.subplots(figsize=(6, 6))
        _draw_compactum(ax, build_named("L"), color="tab:red", lw=2, label="L")
        _draw_compactum(ax, build_named("K_star"), color="tab:green", lw=2, label="K_star")
        ax.plot([-0.3, 0.3], [0, 0], "k--", lw=1, label="E_k (clipped)")
        ax.plot([1 / 16, -1 / 16], [0, 0], "r+", ms=12, mew=2, label="L crossings")
        ax.plot(nu.points.real, nu.points.imag, "b.", ms=6, label=f"poles of {name}")
        ax.set_xlim(-0.32, 0.32)
        ax.set_ylim(-0.28, 0.36)
        ax.set_aspect("equal")
        ax.grid(alpha=0.3)
        ax.legend(loc="upper right", fontsize=8)
        ax.set_title("denominator zeros against the candidate sets")
        save(fig, "poles")

        trend = _distances_by_name(report, r"rho\(nu_(\d+)\|D, lambda_L\)")
        if trend:
            orders = [int(m.group(1)) for m, _ in trend]
            vals = [v for _, v in trend]
            fig, ax = plt.subplots(figsize=(5, 4))
            ax.semilogy(orders, vals, "o-")
            ax.set_xlabel("order n")
            ax.set_ylabel("rho(nu_n|D, lambda_L)")
            ax.grid(alpha=0.3, which="both")
            ax.set_title("weak-star distance to the crossing-set equilibrium")
            save(fig, "rho")

        fig, ax = plt.subplots(figsize=(6, 4))
        names = [k for k, _ in report.capacities]
        vals = [v.value for _, v in report.capacities]
        ax.barh(range(len(vals)), vals)
        ax.set_yticks(range(len(vals)))
        ax.set_yticklabels(names, fontsize=8)
        ax.axvline(0.18, color="k", ls="--", lw=1)
        ax.set_xlabel("capacity estimate")
        ax.set_title("capacity comparison")
        save(fig, "capacities")

    elif report.experiment == "stahl_demo":
        fig, axes = plt.subplots(1, 2, figsize=(11, 5))
        got = _measure_by_name(report, r"nu_(\d+)\(reference\)")
        if got:
            _, nu = got[-1]
            axes[0].plot([-1, 1], [0, 0], "k-", lw=2, label="[-1, 1]")
            axes[0].plot(nu.points.real, nu.points.imag, "b.", ms=7, label="poles")
            axes[0].set_ylim(-0.5, 0.5)
            axes[0].set_title("reference function")
            axes[0].legend(fontsize=8)
            axes[0].grid(alpha=0.3)
        got = _measure_by_name(report, r"nu_(\d+)\(four-point\)")
        if got:
            _, nu = got[-1]
            _draw_compactum(axes[1], build_named("L"), color="tab:red", lw=2, label="L")
            _draw_compactum(
                axes[1], build_named("K_star"), color="tab:green", lw=2, label="K_star"
            )
            axes[1].plot(nu.points.real, nu.points.imag, "b.", ms=7, label="poles")
            axes[1].set_aspect("equal")
            axes[1].set_title("four-point function")
            axes[1].legend(fontsize=8)
            axes[1].grid(alpha=0.3)
        save(fig, "poles")

        trend = _distances_by_name(report, r"rho\(nu_(\d+)\(reference\), arcsine\)")
        if trend:
            fig, ax = plt.subplots(figsize=(5, 4))
            ax.semilogy([int(m.group(1)) for m, _ in trend], [v for _, v in trend], "o-")
            ax.set_xlabel("order n")
            ax.set_ylabel("rho(nu_n, arcsine)")
            ax.grid(alpha=0.3, which="both")
            ax.set_title("reference pole distribution vs arcsine law")
            save(fig, "rho")

    elif report.experiment == "field_bounds":
        sup = _distances_by_name(report, r"max\|psi_(\d+)\| on closed unit disk")
        ks = [int(m.group(1)) for m, _ in sup]
        vals = [v for _, v in sup]
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(ks, vals, "o-", label="max|psi_k|")
        ax.axhline(0.05, color="k", ls="--", lw=1, label="0.05")
        ax.set_xlabel("k")
        ax.set_ylabel("sup norm on the unit disk")
        ax.grid(alpha=0.3, which="both")
        ax.legend(fontsize=8)
        ax.set_title("scaled-field decay")
        save(fig, "field-decay")

        fig, ax = plt.subplots(figsize=(6, 4))
        rho = {
            int(m.group(1)): v
            for m, v in _distances_by_name(report, r"rho_(\d+) = exp\(max\|psi_(\d+)\|\)")
        }
        caps0 = {k: v.value for k, v in report.capacities if re.fullmatch(r"cap\((\w+)\)", k)}
        for i, (nm, cap0) in enumerate(sorted(caps0.items())):
            set_name = re.fullmatch(r"cap\((\w+)\)", nm).group(1)
            for j, k in enumerate(sorted(rho)):
                r = rho[k]
                x = i * (len(rho) + 1) + j
                ax.plot([x, x], [cap0 / r**2, cap0 * r**2], "k-", lw=4, alpha=0.3)
                for cn, est in report.capacities:
                    if cn == f"cap_psi({set_name}, k={k})":
                        ax.plot([x], [est.value], "r_", ms=10, mew=2)
        ax.set_xticks(
            [i * (len(rho) + 1) + (len(rho) - 1) / 2 for i in range(len(caps0))]
        )
        ax.set_xticklabels([re.fullmatch(r"cap\((\w+)\)", nm).group(1) for nm in sorted(caps0)])
        ax.set_ylabel("capacity")
        ax.set_title("weighted capacity inside the sandwich (bars: cap/rho^2 .. cap rho^2)")
        save(fig, "sandwich")

    elif report.experiment == "chebotarev":
        fig, ax = plt.subplots(figsize=(5, 5))
        for nm, est in report.capacities:
            if est.configuration is not None and hasattr(est.configuration, "points"):
                pts = est.configuration.points
                ax.plot(pts.real, pts.imag, ".", ms=3, label=nm)
        ax.set_aspect("equal")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=7)
        ax.set_title("minimizing measures of the three-arm stars")
        save(fig, "stars")

    return paths
