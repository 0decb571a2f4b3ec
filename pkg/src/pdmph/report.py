"""Run configuration (strict schema) and deterministic report emission.

Reports must be byte-identical across runs with the same configuration and
toolkit version, so the JSON text is produced by a small deterministic
emitter: keys in insertion order, every float rendered as 17-significant-
digit lowercase scientific notation, no timestamps inside the payload.  The
wall-clock timestamp lives in a sidecar section that golden comparisons
exclude via :func:`payload_bytes`.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import ConfigError
from .pipeline import CATALOG, FAMILIES
from .verify import CHECK_NAMES, DEFAULT_TOLERANCES

SYSTEM_PRESETS = ("hermitian-limit", "free")

CONFIG_DEFAULTS = {
    "family": "morse",
    "alpha": 1.0,
    "delta": 0.0,
    "g_const": 1.0,
    "g_table": None,
    "gauge": {"mode": "zero", "scale": 1.0, "path": None},
    "mass": {"kind": "constant", "scale": 1.0, "path": None},
    "grid": {"xmin": None, "xmax": None, "n": 2001},
    "refine": [1001, 2001, 4001],
    "eig_levels": [501, 1001],
    "checks": ["eq25", "eq26", "groundstate", "gauge", "tau", "eta-hermiticity",
               "intertwining", "eq28"],
    "probes": 8,
    "tolerances": dict(DEFAULT_TOLERANCES),
    "detune": None,
    "corruption": None,
    "jobs": 1,
    "out": None,
}


def _merge_strict(defaults, given, path=""):
    if not isinstance(given, dict):
        raise ConfigError(f"config section {path or '<root>'} must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config key(s) {sorted(unknown)} in {path or '<root>'}")
    out = {}
    for key, dval in defaults.items():
        if key in given and isinstance(dval, dict) and dval is not None:
            out[key] = _merge_strict(dval, given[key], f"{path}{key}.")
        elif key in given:
            out[key] = given[key]
        else:
            out[key] = json.loads(json.dumps(dval)) if isinstance(dval, (dict, list)) else dval
    return out


def resolve_config(given=None, overrides=None):
    """Merge a config dict and CLI overrides onto the defaults, strictly.

    Unknown keys are rejected at every nesting level; the fully resolved
    configuration is echoed into every report so runs are self-describing.
    """
    cfg = _merge_strict(CONFIG_DEFAULTS, given or {})
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node[p]
        if parts[-1] not in node:
            raise ConfigError(f"unknown override {key!r}")
        node[parts[-1]] = val
    _validate(cfg)
    return cfg


def _validate(cfg):
    fam = cfg["family"]
    if fam not in FAMILIES and fam not in ("custom-table",) + SYSTEM_PRESETS:
        raise ConfigError(f"unknown family {fam!r}")
    if fam == "custom-table" and not cfg["g_table"]:
        raise ConfigError("family custom-table needs g_table (CSV path)")
    if cfg["mass"]["kind"] not in ("constant", "rational", "table"):
        raise ConfigError(f"unknown mass kind {cfg['mass']['kind']!r}")
    if cfg["gauge"]["mode"] not in ("zero", "scaled-g", "table"):
        raise ConfigError(f"unknown gauge mode {cfg['gauge']['mode']!r}")
    unknown = set(cfg["checks"]) - set(CHECK_NAMES)
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}")
    if len(cfg["refine"]) < 3:
        raise ConfigError("refine needs at least three levels for order fits")
    if cfg["grid"]["xmin"] is None or cfg["grid"]["xmax"] is None:
        domain = CATALOG.get(fam, (None, (-8.0, 8.0), None))[1]
        cfg["grid"]["xmin"], cfg["grid"]["xmax"] = domain
    if cfg["corruption"] is not None:
        cor = cfg["corruption"]
        if not isinstance(cor, dict) or set(cor) - {"target", "amount"}:
            raise ConfigError("corruption must be {target, amount}")


# ---------------------------------------------------------------------------
# deterministic JSON
# ---------------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "null"
        if math.isinf(v):
            return '"inf"' if v > 0 else '"-inf"'
        return f"{v:.16e}"
    if isinstance(value, complex):
        return _fmt({"re": value.real, "im": value.imag})
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_fmt(v)}" for k, v in value.items()) + "}"
    raise ConfigError(f"cannot serialize {type(value).__name__} deterministically")


def emit_json(obj):
    """Deterministic JSON text (17-significant-digit floats, fixed key order)."""
    return _fmt(obj)


def build_report(config, conventions, results, spectral, findings):
    """Assemble the verification report payload."""
    summary = {"pass": 0, "fail": 0, "reported-only": 0}
    for r in results:
        summary[r.verdict] += 1
    return {
        "toolkit": {"name": "pdmph", "version": __version__},
        "config": config,
        "conventions": conventions,
        "checks": [r.to_dict() for r in results],
        "spectral": spectral,
        "findings": findings,
        "summary": summary,
    }


def write_report(payload, path):
    """Write {payload, sidecar} to path; only the sidecar carries a timestamp."""
    doc = ('{"payload":' + emit_json(payload)
           + ',"sidecar":{"generated_at":'
           + json.dumps(datetime.now(timezone.utc).isoformat()) + "}}")
    with open(path, "w") as fh:
        fh.write(doc + "\n")
    return doc


def payload_bytes(path):
    """Deterministically re-emitted payload section of a report file.

    Golden comparisons use these bytes; the sidecar (timestamp) is excluded.
    """
    with open(path) as fh:
        doc = json.load(fh)
    return emit_json(doc["payload"]).encode()
