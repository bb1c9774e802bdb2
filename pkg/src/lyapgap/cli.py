"""Command line interface: ``lyapgap <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .anosov import anosov_diagnostic, hyperconvexity_check, transverse_exponent
from .exceptions import ConfigError, LyapgapError
from .experiment import (
    ExperimentConfig,
    build_representation,
    resolve_representation,
    resolve_surface,
    run,
    write_curve_csv,
)
from .hyperbolic import build_bolza_surface, fenchel_nielsen_twist, load_surface, save_surface
from .lyapunov import convergence_curve, gap_report, spectrum
from .representation import load_representation, rep_to_dict, save_representation, symmetric_power, wedge_power
from .thermo import (
    entropy,
    enumerate_closed_geodesics,
    enumerate_orbits,
    load_table,
    orbit_weights,
    renormalized_intersection,
    save_table,
)


def _emit(data: dict, out: str | None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _add_common(p, seed=True, horizon=None, samples=None):
    p.add_argument("--surface", default="bolza", help="surface JSON file (default: built-in Bolza octagon)")
    p.add_argument("--rep", required=True, help="representation file or recipe, e.g. 'sym(3, twist(0.5))'")
    if horizon is not None:
        p.add_argument("--horizon", type=float, default=horizon)
    if samples is not None:
        p.add_argument("--samples", type=int, default=samples)
    if seed:
        p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="output file (default: stdout)")


# -- handlers ------------------------------------------------------------------------


def _surface(args):
    if args.action == "build":
        save_surface(build_bolza_surface(), args.out)
        print(f"wrote {args.out}")
    else:
        load_surface(args.file)
        print(f"{args.file}: ok")


def _rep(args):
    if args.action == "check":
        rep = load_representation(args.file)
        print(json.dumps({"file": args.file, "d": rep.d, "provenance": rep.provenance,
                          "relator_sign": rep.relator_sign, "valid": True}))
        return
    surface = resolve_surface(getattr(args, "surface", None))
    if args.action == "fuchsian":
        rep = surface.fuchsian()
    elif args.action == "twist":
        rep = fenchel_nielsen_twist(surface, args.t)
    elif args.action == "sym":
        rep = symmetric_power(resolve_representation(args.of, surface), args.d)
    elif args.action == "wedge":
        rep = wedge_power(resolve_representation(args.of, surface), args.k)
    else:
        rep = build_representation(args.recipe, surface)
    if args.out:
        save_representation(rep, args.out)
    else:
        _emit(rep_to_dict(rep), None)


def _spectrum(args):
    surface = resolve_surface(args.surface)
    rep = resolve_representation(args.rep, surface)
    est = spectrum(surface, rep, args.horizon, args.samples, args.seed, args.jobs)
    data = est.to_dict()
    data["gap_report"] = [list(g) for g in gap_report(est)]
    data["provenance"] = rep.provenance
    _emit(data, args.out)
    if args.curve:
        t, curve = convergence_curve(surface, rep, args.horizon, args.seed)
        write_curve_csv(args.curve, t, curve)


def _transverse(args):
    surface = resolve_surface(args.surface)
    rep = resolve_representation(args.rep, surface)
    est = transverse_exponent(surface, rep, args.horizon, args.samples, args.seed, n_jobs=args.jobs)
    data = est.to_dict()
    data["provenance"] = rep.provenance
    _emit(data, args.out)


def _anosov(args):
    rep = resolve_representation(args.rep)
    fits = anosov_diagnostic(rep, args.max_word_length)
    _emit({"provenance": rep.provenance, "max_word_length": args.max_word_length,
           "fits": [f.to_dict() for f in fits]}, args.out)


def _hyperconvex(args):
    surface = resolve_surface(args.surface)
    rep = resolve_representation(args.rep, surface)
    score = hyperconvexity_check(surface, rep, args.triples, args.horizon, args.seed)
    _emit({"provenance": rep.provenance, "triples": args.triples, "horizon": args.horizon,
           "seed": args.seed, "min_score": score}, args.out)


def _thermo(args):
    if args.action == "enumerate":
        surface = resolve_surface(args.surface)
        if args.max_word_length is not None:
            table = enumerate_orbits(surface, args.max_word_length)
        else:
            table = enumerate_closed_geodesics(surface, args.max_length)
        save_table(table, args.out)
        print(f"wrote {len(table)} orbits to {args.out}")
        return
    table = load_table(args.table)
    if args.action == "weights":
        rep = resolve_representation(args.rep)
        table = orbit_weights(table, rep, args.ranks)
        save_table(table, args.out)
        print(f"wrote weights for {len(table)} orbits to {args.out}")
    elif args.action == "entropy":
        fit = entropy(table, "length" if args.rank is None else args.rank)
        _emit(fit.to_dict(), args.out)
    else:
        rep = resolve_representation(args.rep) if args.rep else None
        est = renormalized_intersection(table, rep, args.rank, args.n_boot, args.seed)
        _emit(est.to_dict(), args.out)


def _run(args):
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    overrides = {
        "representation": args.rep,
        "seed": args.seed,
        "surface": args.surface,
        "report": args.out,
        "curves": args.curves,
        "spectrum_horizon": args.horizon,
        "spectrum_samples": args.samples,
        "transverse_horizon": args.transverse_horizon,
        "transverse_samples": args.transverse_samples,
        "thermo_max_length": args.max_length,
        "n_jobs": args.jobs,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.estimators:
        data["estimators"] = args.estimators.split(",")
    config = ExperimentConfig.from_dict(data)
    report = run(config)
    summary = {"verdict": report.verdict, "ok": report.ok, "report": config.report,
               "failed_checks": sorted(k for k, v in report.checks.items() if not v)}
    print(json.dumps(summary, sort_keys=True))
    return 0 if report.ok else 1


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lyapgap", description="Lyapunov gaps of surface group representations")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("surface", help="build or verify the octagon model")
    ss = p.add_subparsers(dest="action", required=True)
    b = ss.add_parser("build")
    b.add_argument("--out", required=True)
    v = ss.add_parser("verify")
    v.add_argument("file")
    p.set_defaults(func=_surface)

    p = sub.add_parser("rep", help="construct or check representations")
    rs = p.add_subparsers(dest="action", required=True)
    for name in ("fuchsian", "twist", "sym", "wedge", "recipe"):
        r = rs.add_parser(name)
        r.add_argument("--surface", default="bolza")
        r.add_argument("--out")
        if name == "twist":
            r.add_argument("--t", type=float, required=True)
        if name == "sym":
            r.add_argument("--d", type=int, required=True)
            r.add_argument("--of", default="fuchsian", help="d=2 representation file or recipe")
        if name == "wedge":
            r.add_argument("--k", type=int, required=True)
            r.add_argument("--of", required=True, help="representation file or recipe")
        if name == "recipe":
            r.add_argument("recipe")
    c = rs.add_parser("check")
    c.add_argument("file")
    p.set_defaults(func=_rep)

    p = sub.add_parser("spectrum", help="QR Lyapunov spectrum")
    _add_common(p, horizon=1e4, samples=32)
    p.add_argument("--curve", help="write a convergence curve CSV here")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=_spectrum)

    p = sub.add_parser("transverse", help="transverse exponent through the fibre formula")
    _add_common(p, horizon=1e4, samples=16)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=_transverse)

    p = sub.add_parser("anosov-check", help="singular value ratio decay along words")
    p.add_argument("--rep", required=True)
    p.add_argument("--max-word-length", type=int, default=8)
    p.add_argument("--out")
    p.set_defaults(func=_anosov)

    p = sub.add_parser("hyperconvex", help="transversality of boundary map triples")
    _add_common(p, horizon=200.0)
    p.add_argument("--triples", type=int, default=100)
    p.set_defaults(func=_hyperconvex)

    p = sub.add_parser("thermo", help="closed orbits, entropy and renormalised intersection")
    ts = p.add_subparsers(dest="action", required=True)
    e = ts.add_parser("enumerate")
    e.add_argument("--surface", default="bolza")
    e.add_argument("--max-length", type=float, default=12.0, help="hyperbolic length cutoff")
    e.add_argument("--max-word-length", type=int, help="enumerate cyclic words instead")
    e.add_argument("--out", required=True)
    w = ts.add_parser("weights")
    w.add_argument("--table", required=True)
    w.add_argument("--rep", required=True)
    w.add_argument("--ranks", type=int, nargs="*")
    w.add_argument("--out", required=True)
    h = ts.add_parser("entropy")
    h.add_argument("--table", required=True)
    h.add_argument("--rank", type=int, help="use weights of this rank as periods")
    h.add_argument("--out")
    j = ts.add_parser("J")
    j.add_argument("--table", required=True)
    j.add_argument("--rep", help="compute weights from this representation first")
    j.add_argument("--rank", type=int, default=1)
    j.add_argument("--n-boot", type=int, default=200)
    j.add_argument("--seed", type=int, default=0)
    j.add_argument("--out")
    p.set_defaults(func=_thermo)

    p = sub.add_parser("run", help="run all estimators and write a gap report")
    p.add_argument("--config", help="JSON config; flags override its fields")
    p.add_argument("--rep")
    p.add_argument("--seed", type=int)
    p.add_argument("--surface")
    p.add_argument("--out", help="report path")
    p.add_argument("--curves", help="convergence curve CSV path")
    p.add_argument("--horizon", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--transverse-horizon", type=float)
    p.add_argument("--transverse-samples", type=int)
    p.add_argument("--max-length", type=float)
    p.add_argument("--estimators", help="comma separated subset of spectrum,transverse,thermo")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except LyapgapError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(json.dumps({"error": "cli.input", "message": str(exc)}), file=sys.stderr)
        return 2
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
