"""Command-line front end: catalog, generate, verify, spectrum.

Every failure mode exits with a distinct code (see errors.py); check
failures in `verify` exit 7 while reported-only findings never fail a run.
Set PDMPH_NO_COLOR to disable ANSI styling.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import (BudgetExceededError, CheckFailureError, ConfigError,
                     PdmphError)
from .pipeline import GeneratingSpec, catalog_rows, load_g_table, to_csv
from .profiles import MassProfile
from .report import (SYSTEM_PRESETS, build_report, emit_json, resolve_config,
                     write_report)
from .verify import (EIG_BUDGET, TRACEABLE, SystemBuilder, residual_trace,
                     run_suite, spectral_for, spectral_payload)


def _color(text, code, enabled):
    return f"\x1b[{code}m{text}\x1b[0m" if enabled else text


def _use_color():
    return sys.stdout.isatty() and not os.environ.get("PDMPH_NO_COLOR")


def _parse_kv(spec, what):
    """Parse 'kind:k=v,k=v' option syntax for --mass and --gauge."""
    kind, _, rest = spec.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            k, _, v = item.partition("=")
            if not _:
                raise ConfigError(f"bad {what} parameter {item!r} (expected k=v)")
            params[k] = v
    return kind, params


def _profile_from(cfg):
    kind = cfg["mass"]["kind"]
    if kind == "constant":
        return MassProfile.constant(float(cfg["mass"]["scale"]))
    if kind == "rational":
        return MassProfile.rational(float(cfg["mass"]["scale"]))
    return MassProfile.from_csv(cfg["mass"]["path"])


def _gauge_from(cfg):
    g = cfg["gauge"]
    if g["mode"] == "zero":
        return ("zero",)
    if g["mode"] == "scaled-g":
        return ("scaled-g", float(g["scale"]))
    xs, vals = np.loadtxt(g["path"], delimiter=",", comments="#", ndmin=2).T
    return ("table", xs, vals)


def _builder_from(cfg) -> SystemBuilder:
    profile = _profile_from(cfg)
    grid = cfg["grid"]
    fam = cfg["family"]
    if fam == "free":
        return SystemBuilder("free", profile, grid["xmin"], grid["xmax"])
    if fam == "hermitian-limit":
        xs = np.array([grid["xmin"] - 1.0, grid["xmin"], grid["xmax"], grid["xmax"] + 1.0])
        vals = np.full(4, float(cfg["g_const"]))
        spec = GeneratingSpec("custom-table", delta=cfg["delta"],
                              gauge_a=_gauge_from(cfg), g_table=(xs, vals))
    elif fam == "custom-table":
        spec = GeneratingSpec("custom-table", delta=cfg["delta"],
                              gauge_a=_gauge_from(cfg),
                              g_table=load_g_table(cfg["g_table"]))
    else:
        spec = GeneratingSpec(fam, alpha=cfg["alpha"], delta=cfg["delta"],
                              gauge_a=_gauge_from(cfg))
    corruption = None
    if cfg["corruption"]:
        corruption = (cfg["corruption"]["target"],
                      float(cfg["corruption"].get("amount", 0.1)))
    return SystemBuilder("family", profile, grid["xmin"], grid["xmax"],
                         spec=spec, corruption=corruption)


def _conventions(builder, cfg):
    bundle = builder.inputs(min(cfg["refine"])).bundle
    return {
        "mu_anchor": bundle.mu_anchor,
        "boundary_policy": ("one-sided 4th-order closures on the full grid; "
                           "Dirichlet interior block with odd-reflection closure "
                           "for eigenproblems"),
        "interior_window": ("index pad 8 plus a fixed margin of 8 coarse spacings "
                            "from each edge for refinement studies"),
        "groundstate_normalization": "value 1 at the quadrature anchor node",
    }


def cmd_catalog(args):
    rows = catalog_rows(args.family)
    widths = (18, 34, 16, 12, 16)
    header = ("family", "g(mu)", "default domain", "parameter", "constraint")
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for r in rows:
        dom = f"[{r['default_domain'][0]}, {r['default_domain'][1]}]"
        print("  ".join(str(v).ljust(w) for v, w in
                        zip((r["family"], r["g"], dom, r["alpha"], r["constraint"]), widths)))
    return 0


def _load_config(args):
    given = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            given = json.load(fh)
    overrides = {
        "family": getattr(args, "family", None),
        "alpha": getattr(args, "alpha", None),
        "delta": getattr(args, "delta", None),
        "grid.xmin": getattr(args, "xmin", None),
        "grid.xmax": getattr(args, "xmax", None),
        "grid.n": getattr(args, "n", None),
        "out": getattr(args, "out", None),
        "jobs": getattr(args, "jobs", None),
        "g_const": getattr(args, "g_const", None),
        "g_table": getattr(args, "g_table", None),
        "detune": getattr(args, "detune", None),
    }
    if getattr(args, "refine", None):
        overrides["refine"] = [int(v) for v in args.refine.split(",")]
    if getattr(args, "checks", None):
        overrides["checks"] = args.checks.split(",")
    if getattr(args, "mass", None):
        kind, params = _parse_kv(args.mass, "mass")
        overrides["mass"] = {"kind": kind,
                             "scale": float(params.get("scale", params.get("beta", 1.0))),
                             "path": params.get("path")}
    if getattr(args, "gauge", None):
        mode, params = _parse_kv(args.gauge, "gauge")
        overrides["gauge"] = {"mode": mode, "scale": float(params.get("scale", 1.0)),
                              "path": params.get("path")}
    return resolve_config(given, overrides)


def cmd_generate(args):
    cfg = _load_config(args)
    if cfg["family"] in SYSTEM_PRESETS:
        raise ConfigError("generate needs a catalog or custom-table family")
    builder = _builder_from(cfg)
    ds = builder.dressed(cfg["grid"]["n"])
    out = cfg["out"] or f"{cfg['family']}.csv"
    to_csv(ds, out)
    delta_ref = None
    if ds.printed_reference is not None:
        w = ds.grid.interior_mask(8)
        delta_ref = float((np.abs(ds.V_eff - (ds.printed_reference + cfg["delta"]))
                           / (1.0 + np.abs(ds.printed_reference)))[w].max())
    summary = {
        "family": cfg["family"],
        "csv": out,
        "n": cfg["grid"]["n"],
        "mu_anchor": ds.bundle.mu_anchor,
        "printed_form_max_rel_delta": delta_ref,
        "mass_gradient_printed_form_max_abs_delta":
            float(np.abs(ds.V_mu - ds.printed_vmu).max()) if ds.printed_vmu is not None else None,
    }
    print(emit_json(summary))
    return 0


def cmd_verify(args):
    cfg = _load_config(args)
    builder = _builder_from(cfg)
    results, spectral, findings = run_suite(
        builder, cfg["checks"], cfg["refine"], tol=cfg["tolerances"],
        probes=cfg["probes"], eig_levels=cfg["eig_levels"],
        detune=cfg["detune"], jobs=cfg["jobs"])
    payload = build_report(cfg, _conventions(builder, cfg), results, spectral, findings)
    out = cfg["out"] or "verify_report.json"
    write_report(payload, out)
    if getattr(args, "trace_dir", None) and builder.kind == "family":
        os.makedirs(args.trace_dir, exist_ok=True)
        for name in cfg["checks"]:
            if name in TRACEABLE:
                residual_trace(builder, name, max(cfg["refine"]),
                               os.path.join(args.trace_dir, f"{name}.csv"))
    color = _use_color()
    for r in results:
        mark = {"pass": _color("PASS", "32", color),
                "fail": _color("FAIL", "31", color),
                "reported-only": _color("INFO", "33", color)}[r.verdict]
        order = "n/a" if r.observed_order is None else f"{r.observed_order:5.2f}"
        res = f"residual={r.levels[-1].residual:9.3e}" if r.levels else \
            f"error: {r.notes.get('error', 'no data')}"
        print(f"{mark} {r.name:22s} {res} order={order}")
    print(f"report: {out}")
    if any(r.verdict == "fail" for r in results):
        raise CheckFailureError("one or more checks failed")
    return 0


def cmd_spectrum(args):
    cfg = _load_config(args)
    n = cfg["grid"]["n"]
    if n > EIG_BUDGET:
        raise BudgetExceededError(f"n = {n} exceeds the dense eigensolve budget ({EIG_BUDGET})")
    builder = _builder_from(cfg)
    sp = spectral_for(builder, n, cfg["tolerances"])
    payload = {
        "toolkit": {"name": "pdmph", "version": __version__},
        "config": cfg,
        "mu_anchor": builder.inputs(n).bundle.mu_anchor,
        "spectral": spectral_payload(sp, cap=int(getattr(args, "list_cap", 64) or 64)),
    }
    out = cfg["out"]
    doc = emit_json(payload)
    if out:
        write_report(payload, out)
        print(f"report: {out}")
    else:
        print(doc)
    return 0


def make_parser():
    p = argparse.ArgumentParser(
        prog="pdmph",
        description=("Position-dependent-mass non-Hermitian Hamiltonian toolkit: "
                     "build catalog systems from generating functions and verify "
                     "their operator identities numerically."))
    sub = p.add_subparsers(dest="command", required=True)

    cat = sub.add_parser("catalog", help="catalog inspection")
    catsub = cat.add_subparsers(dest="subcommand", required=True)
    lst = catsub.add_parser("list", help="list the generating-function families")
    lst.add_argument("--family", default=None)
    lst.set_defaults(func=cmd_catalog)

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON config file (strict schema)")
        sp.add_argument("--family", default=None)
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--delta", type=float, default=None)
        sp.add_argument("--mass", default=None, help="KIND[:k=v,...], e.g. rational:beta=1")
        sp.add_argument("--gauge", default=None, help="MODE[:scale=c|path=p]")
        sp.add_argument("--xmin", type=float, default=None)
        sp.add_argument("--xmax", type=float, default=None)
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--refine", default=None, help="comma-separated point counts")
        sp.add_argument("--checks", default=None, help="comma-separated check names")
        sp.add_argument("--g-const", dest="g_const", type=float, default=None)
        sp.add_argument("--g-table", dest="g_table", default=None)
        sp.add_argument("--detune", type=float, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--jobs", type=int, default=None)

    gen = sub.add_parser("generate", help="sample a dressed system to CSV")
    common(gen)
    gen.set_defaults(func=cmd_generate)

    ver = sub.add_parser("verify", help="run the verification suite")
    common(ver)
    ver.add_argument("--trace-dir", dest="trace_dir", default=None,
                     help="write per-check pointwise residual CSVs here")
    ver.set_defaults(func=cmd_verify)

    spec = sub.add_parser("spectrum", help="dense eigendecomposition report")
    common(spec)
    spec.add_argument("--list-cap", type=int, default=64)
    spec.set_defaults(func=cmd_spectrum)
    return p


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PdmphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
