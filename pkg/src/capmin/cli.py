"""Command line front end.

Exit codes: 0 on success (degenerate results are flagged in the output
but still exit 0), 2 for configuration and schema errors, 3 for
numerical failures inside a computation.

Results land in the directory named by --out, falling back to the
CAPMIN_RESULTS environment variable and then to ./results.  Experiment
results are cached under a content hash of the config plus the package
version; a rerun with the same config reuses the file byte-for-byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__, algfun, pade, reporting
from .capacity import balayage_report, energy_capacity, fekete_capacity
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    _classical_at,
    run_experiment,
)
from .geometry import Compactum, build_named, circle
from .measure import DiscreteMeasure, measure_to_csv_rows, quantile_nodes
from .potential import ExternalField


class ConfigError(ValueError):
    """Bad flags, bad config file, bad schema: exit code 2."""


def _complex(s: str) -> complex:
    try:
        return complex(s.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"cannot parse complex number {s!r}")


def _out_dir(args) -> str:
    return args.out or os.environ.get("CAPMIN_RESULTS", "results")


_SET_NAMES = ("segment", "circle", "K_star", "L", "L_p", "E_k")


def _named_set(args) -> Compactum:
    name = args.set
    try:
        if name == "segment":
            if args.a is None or args.b is None:
                raise ConfigError("--set segment needs --a and --b")
            return build_named("E_segment", a=_complex(args.a), b=_complex(args.b))
        if name == "circle":
            return circle(radius=args.radius)
        if name in ("K_star", "L"):
            return build_named(name)
        if name == "L_p":
            return build_named("L_p", p=args.p)
        if name == "E_k":
            if args.k is None:
                raise ConfigError("--set E_k needs --k")
            return build_named("E_k", k=args.k)
    except ConfigError:
        raise
    except (ValueError, KeyError) as e:
        raise ConfigError(str(e))
    raise ConfigError(f"unknown set {name!r}; choose from {_SET_NAMES}")


def _field(args) -> ExternalField | None:
    preset = getattr(args, "field_preset", None)
    fk = getattr(args, "field_k", None)
    if preset is None and fk is None:
        return None
    if preset is None or fk is None:
        raise ConfigError("--field-preset and --field-k go together")
    if fk <= 0:
        raise ConfigError("--field-k must be positive")
    return ExternalField.from_scaled_preset(preset, fk)


def _load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    try:
        return ExperimentConfig.from_json(raw)
    except ValueError as e:
        raise ConfigError(str(e))


def _report_path(cfg: ExperimentConfig, out: str) -> str:
    h = reporting.content_hash(cfg.to_json())
    return os.path.join(out, f"{cfg.experiment}-{h[:16]}.json")


def _ensure_report(cfg: ExperimentConfig, out: str, force: bool = False):
    """Cached report if present, else run and persist.  Returns
    (report, json_path, was_cached)."""
    path = _report_path(cfg, out)
    if not force and os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            return ExperimentReport.from_json(json.load(fh)), path, True
    rep = run_experiment(cfg)
    files = reporting.write_report(rep, out)
    return rep, files["json"], False


# -- handlers ----------------------------------------------------------------


def _cmd_capacity(args) -> int:
    K = _named_set(args)
    field = _field(args)
    methods = ("energy", "fekete") if args.method == "both" else (args.method,)
    for method in methods:
        if method == "energy":
            est = energy_capacity(K, field, m=args.m)
        else:
            est = fekete_capacity(K, field, n=args.n)
        line = (
            f"capacity set={K.label or args.set} method={est.method} "
            f"value={est.value!r} energy={est.energy!r} converged={est.converged}"
        )
        if est.degenerate:
            line += " degenerate=True"
        print(line)
    return 0


def _cmd_equilibrium(args) -> int:
    K = _named_set(args)
    est = energy_capacity(K, m=args.m)
    nu = est.configuration
    out = _out_dir(args)
    path = os.path.join(out, f"equilibrium-{K.label or args.set}-m{args.m}.csv")
    reporting.write_csv(path, measure_to_csv_rows(nu))
    print(f"equilibrium set={K.label or args.set} atoms={len(nu)} "
          f"capacity={est.value!r} robin={est.robin!r}")
    print(f"wrote {path}")
    return 0


def _cmd_balayage(args) -> int:
    K = _named_set(args)
    mu = DiscreteMeasure.from_quantiles(
        args.source_preset, _complex(args.source_a), _complex(args.source_b),
        args.source_count,
    )
    rep = balayage_report(mu, K, m=args.m)
    out = _out_dir(args)
    path = os.path.join(out, f"balayage-{K.label or args.set}-m{args.m}.csv")
    reporting.write_csv(path, measure_to_csv_rows(rep["measure"]))
    print(f"balayage set={K.label or args.set} atoms={len(rep['measure'])} "
          f"max_deviation={rep['max_deviation']!r} constant={rep['constant']!r}")
    print(f"wrote {path}")
    return 0


def _function_by_name(name: str) -> algfun.BranchedFunction:
    if name == "fstar":
        return algfun.cross_function()
    if name == "reference":
        return algfun.inverse_sqrt_reference()
    raise ConfigError("--function must be fstar or reference")


def _cmd_pade(args) -> int:
    f = _function_by_name(args.function)
    if args.order < 1:
        raise ConfigError("--order must be at least 1")
    if args.classical and args.nodes_preset:
        raise ConfigError("--classical and --nodes-preset are exclusive")
    if args.classical or not args.nodes_preset:
        r = _classical_at(f, args.order, args.precision)
        mode = "classical"
    else:
        if args.k is None or args.k <= 0:
            raise ConfigError("multipoint nodes need --k > 0")
        table = quantile_nodes(args.nodes_preset, -args.k, args.k, args.order)
        r = pade.multipoint_pade(f, table, args.order, precision=args.precision)
        mode = f"multipoint-{args.nodes_preset}"
    poles = pade.poly_roots(r.denominator)
    print(f"pade function={args.function} mode={mode} order={args.order} "
          f"residual={r.residual!r} degenerate={r.degenerate}")
    for p in poles:
        print(f"pole {p.real!r} {p.imag!r}")
    out = _out_dir(args)
    path = os.path.join(out, f"pade-{args.function}-{mode}-n{args.order}.json")
    reporting.atomic_write_text(path, reporting.canonical_json(r.to_json()) + "\n")
    print(f"wrote {path}")
    return 0


def _cmd_roots(args) -> int:
    try:
        coeffs = tuple(_complex(t) for t in args.coeffs.split(",") if t.strip())
    except ConfigError:
        raise
    if len(coeffs) < 2:
        raise ConfigError("--coeffs needs at least two comma-separated values")
    q = pade.Polynomial(coeffs)
    rts = pade.poly_roots(q, precision=args.precision)
    for r in rts:
        print(f"root {r.real!r} {r.imag!r}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    rep, path, cached = _ensure_report(cfg, out, force=args.force)
    print(f"{'cached' if cached else 'wrote'} {path}")
    for name, ok in rep.verdicts:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    return 0


def _cmd_report(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    rep, path, cached = _ensure_report(cfg, out, force=args.force)
    files = reporting.write_report(rep, out)
    figures = reporting.render_figures(rep, out)
    print(f"{'cached' if cached else 'wrote'} {files['json']}")
    for p in files["csv"] + figures:
        print(f"wrote {p}")
    for name, ok in rep.verdicts:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    return 0


# -- parser ------------------------------------------------------------------


def _add_set_flags(p: argparse.ArgumentParser):
    p.add_argument("--set", required=True, help=f"one of {_SET_NAMES}")
    p.add_argument("--a", help="segment endpoint (complex literal)")
    p.add_argument("--b", help="segment endpoint (complex literal)")
    p.add_argument("--k", type=float, help="scale for E_k")
    p.add_argument("--p", type=int, default=4, help="truncation level for L_p")
    p.add_argument("--radius", type=float, default=1.0, help="circle radius")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="capmin",
        description="logarithmic capacity, equilibrium measures and "
                    "rational interpolation experiments",
    )
    ap.add_argument("--version", action="version", version=f"capmin {__version__}")
    ap.add_argument("--out", help="output directory (default: $CAPMIN_RESULTS or ./results)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="capacity of a named set")
    _add_set_flags(p)
    p.add_argument("--method", default="both", choices=("energy", "fekete", "both"))
    p.add_argument("--n", type=int, default=32, help="Fekete subset size")
    p.add_argument("--m", type=int, default=400, help="discretization size")
    p.add_argument("--field-preset", choices=("chebyshev", "lebesgue"))
    p.add_argument("--field-k", type=float, help="scale of the preset field")
    p.set_defaults(fn=_cmd_capacity)

    p = sub.add_parser("equilibrium", help="equilibrium measure of a named set")
    _add_set_flags(p)
    p.add_argument("--m", type=int, default=400)
    p.set_defaults(fn=_cmd_equilibrium)

    p = sub.add_parser("balayage", help="sweep a segment measure onto a named set")
    _add_set_flags(p)
    p.add_argument("--m", type=int, default=400)
    p.add_argument("--source-a", default="-4", help="source segment endpoint")
    p.add_argument("--source-b", default="4", help="source segment endpoint")
    p.add_argument("--source-count", type=int, default=64)
    p.add_argument("--source-preset", default="chebyshev",
                   choices=("chebyshev", "lebesgue"))
    p.set_defaults(fn=_cmd_balayage)

    p = sub.add_parser("pade", help="diagonal rational approximant of a built-in function")
    p.add_argument("--function", required=True, help="fstar or reference")
    p.add_argument("--classical", action="store_true",
                   help="interpolate the expansion at infinity")
    p.add_argument("--nodes-preset", choices=("chebyshev", "lebesgue"),
                   help="multipoint nodes from preset quantiles on [-k, k]")
    p.add_argument("--k", type=float, help="node interval scale for multipoint")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--precision", default="double", choices=("double", "extended"))
    p.set_defaults(fn=_cmd_pade)

    p = sub.add_parser("roots", help="roots of a polynomial, ascending coefficients")
    p.add_argument("--coeffs", required=True,
                   help="comma-separated complex coefficients, constant first")
    p.add_argument("--precision", default=None, choices=("double", "extended"))
    p.set_defaults(fn=_cmd_roots)

    p = sub.add_parser("experiment", help="run a configured experiment (cached)")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--force", action="store_true", help="ignore the cache")
    p.set_defaults(fn=_cmd_experiment)

    p = sub.add_parser("report", help="experiment plus delimited output and figures")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--force", action="store_true", help="ignore the cache")
    p.set_defaults(fn=_cmd_report)

    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse already printed its message; normalize the code
        return int(e.code) if e.code else 0
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
