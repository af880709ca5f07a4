"""
Command-line front end.

Subcommands: ``kernel``, ``oracle``, ``verify``, ``modes``, ``qtable``.
Settings come from built-in defaults, then a flat ``key=value`` config
file (``--config``), then command-line flags, later sources winning.
Exit status is 0 on success, 1 when a check fails and 2 on a usage,
config or evaluation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import heatkernel as hk
from . import wavekernel as wk
from .angular import AngularField, angular_eigs, dist_to_integers, exact_modes, field_from_text
from .estimates import local_smoothing_Q, local_smoothing_envelope
from .quadrature import QuadratureSpec
from . import suites

SCHEMA = 1
OUTPUT_ENV = "ABWAVE_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError as e:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from e


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


# key -> (parser, default)
KEYS = {
    "alpha": (float, 1 / 3),
    "field": (str, None),
    "a": (float, 0.0),
    "K": (int, 4),
    "seed": (int, 0),
    "output_dir": (str, None),
    "format": (str, "json"),
    "jobs": (int, 1),
    "t": (float, None),
    "x": (_floats, None),
    "y": (_floats, None),
    "polar": (_bool, False),
    "rel_tol": (float, 1e-10),
    "max_nodes": (int, 200_000),
    "grid_alpha": (_floats, None),
    "grid_t": (_floats, None),
    "grid_r": (_floats, None),
    "grid_dtheta": (_floats, None),
    "theta2": (float, 0.3),
    "margin": (float, 0.1),
    "keep_cone": (_bool, False),
    "T": (float, 200.0),
    "res": (float, 1.0),
    "n_draws": (int, 20),
    "nu": (float, 1 / 3),
    "M": (float, 1.0),
    "timing": (_bool, True),
}


def parse_config_text(text: str) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in KEYS:
            raise ConfigError(f"config line {n}: unknown key {k!r}")
        out[k] = v
    return out


def resolve_config(file_values: dict, cli_values: dict) -> dict:
    """Defaults, then file, then CLI; each value is parsed and checked."""
    cfg = {k: d for k, (_, d) in KEYS.items()}
    for src in (file_values, cli_values):
        for k, v in src.items():
            if v is None:
                continue
            try:
                cfg[k] = KEYS[k][0](v)
            except ConfigError:
                raise
            except (TypeError, ValueError) as e:
                raise ConfigError(f"bad value for {k}: {v!r}") from e
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    if cfg["jobs"] < 1:
        raise ConfigError("jobs must be >= 1")
    if cfg["K"] < 0 or cfg["K"] > 8:
        raise ConfigError("K must lie in 0..8")
    for k in ("x", "y"):
        if cfg[k] is not None and len(cfg[k]) != 2:
            raise ConfigError(f"{k} needs two components")
    return cfg


def build_field(cfg: dict) -> AngularField:
    """The field from ``field`` (a table or ``alpha=`` file) or from ``alpha`` plus a constant ``a``."""
    if cfg["field"] is not None:
        try:
            fld = field_from_text(Path(cfg["field"]).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read field file: {e}") from e
        except ValueError as e:
            raise ConfigError(f"field file: {e}") from e
        if cfg["a"] == 0.0:
            return fld
        if fld.kind == "ab_exact":
            return AngularField.sampled(np.full(64, fld.alpha), np.full(64, cfg["a"]))
        return AngularField.sampled(fld.A_vals, fld.a_vals + cfg["a"])
    if cfg["a"] == 0.0:
        return AngularField.ab(cfg["alpha"])
    return AngularField.sampled(np.full(64, cfg["alpha"]), np.full(64, cfg["a"]))


def admissibility_message(fld: AngularField) -> Optional[str]:
    """None when the operator is nonnegative, else a diagnostic stating the condition."""
    if fld.a_is_zero():
        return None
    d = dist_to_integers(fld.flux())
    if fld.admissible():
        return None
    mu1 = angular_eigs(fld, 1)[0].mu
    return (f"field not admissible: the condition sup a_- < dist(flux, Z)^2 fails "
            f"(sup a_- = {fld.a_minus()!r}, dist(flux, Z)^2 = {d * d!r}, mu_1 = {mu1!r})")


def quad_spec(cfg: dict) -> QuadratureSpec:
    try:
        return QuadratureSpec(rel_tol=cfg["rel_tol"], max_nodes=cfg["max_nodes"])
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _json_value(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, complex):
        return [_json_value(v.real), _json_value(v.imag)]
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_json_value(x) for x in v]
    return v


def dumps(obj) -> str:
    """JSON with full round-trip float precision and a fixed key order."""
    return json.dumps(_json_value(obj), indent=1)


def csv_text(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _emit(text: str, cfg: dict, name: str) -> None:
    sys.stdout.write(text)
    out = cfg["output_dir"] or os.environ.get(OUTPUT_ENV)
    if out:
        p = Path(out)
        p.mkdir(parents=True, exist_ok=True)
        (p / name).write_text(text)


def _point(v: tuple, polar: bool) -> tuple:
    if polar:
        return (float(v[0]), float(v[1]))
    return (math.hypot(v[0], v[1]), math.atan2(v[1], v[0]) % (2 * math.pi))


# ---------------------------------------------------------------- commands

def cmd_kernel(kind: str, cfg: dict) -> int:
    fld = build_field(cfg)
    if not fld.a_is_zero():
        raise ConfigError("closed-form kernels need a = 0")
    if cfg["t"] is None or cfg["x"] is None or cfg["y"] is None:
        raise ConfigError("kernel needs t, x and y")
    x, y = _point(cfg["x"], cfg["polar"]), _point(cfg["y"], cfg["polar"])
    q = quad_spec(cfg)
    if kind == "heat":
        if not cfg["t"] > 0:
            raise ConfigError("heat kernel needs t > 0")
        cols, row = hk.HEAT_CSV_COLUMNS, hk.heat_row(fld, hk.heat_kernel(fld, cfg["t"], x, y, q))
        status = "ok"
    else:
        ev = wk.wave_kernel(fld, cfg["t"], x, y, q)
        cols, row = wk.WAVE_CSV_COLUMNS, wk.wave_row(fld, ev)
        status = ev.status
    if cfg["format"] == "csv":
        _emit(csv_text(cols, [row]), cfg, f"kernel_{kind}.csv")
    else:
        _emit(dumps({"schema": SCHEMA, "kind": kind, "status": status, "record": dict(zip(cols, row))}) + "\n",
              cfg, f"kernel_{kind}.json")
    if status != "ok":
        sys.stderr.write(f"point lies in a cone neighborhood ({status}); no value computed\n")
        return 2
    return 0


def _grid(cfg: dict, base: dict) -> dict:
    g = dict(base)
    for k in ("alpha", "t", "r", "dtheta"):
        if cfg["grid_" + k] is not None:
            g[k] = cfg["grid_" + k]
    return g


def _heat_oracle_item(p):
    return hk.heat_oracle([p])[0]


def _wave_oracle_item(p):
    return wk.wave_oracle([p])[0]


def cmd_oracle(kind: str, cfg: dict) -> int:
    t0 = time.perf_counter()
    if kind == "heat":
        g = _grid(cfg, hk.ORACLE_GRID)
        pts = hk.oracle_points(g, cfg["theta2"])
        rows = suites.pmap(_heat_oracle_item, pts, cfg["jobs"])
        thr = 1e-6
    else:
        g = _grid(cfg, wk.ORACLE_GRID)
        pts = wk.oracle_points(g, cfg["theta2"], cfg["margin"], keep_cone=cfg["keep_cone"])
        rows = suites.pmap(_wave_oracle_item, pts, cfg["jobs"])
        thr = 1e-4
    ok = [r for r in rows if r.get("status", "ok") == "ok"]
    skipped = [{"alpha": r["alpha"], "t": r["t"], "x": r["x"], "y": r["y"], "status": r["status"]}
               for r in rows if r.get("status", "ok") != "ok"]
    worst = max((r["rel_err"] for r in ok), default=0.0)
    passed = worst < thr
    summary = {"schema": SCHEMA, "kind": kind, "grid": {k: list(v) for k, v in g.items()},
               "n_points": len(ok), "max_rel_err": worst, "threshold": thr, "pass": passed,
               "skipped": skipped, "runtime_s": (time.perf_counter() - t0) if cfg["timing"] else 0.0}
    if kind == "wave":
        summary["structural_zero_points"] = sum(1 for r in ok if r.get("measure") == "structural-zero")
    if cfg["format"] == "csv":
        cols = ["alpha", "t", "r1", "theta1", "r2", "theta2", "ReClosed", "ImClosed", "ReOracle", "ImOracle",
                "rel_err"]
        data = [[r["alpha"], r["t"], r["x"][0], r["x"][1], r["y"][0], r["y"][1], r["closed"].real,
                 r["closed"].imag, r["oracle"].real, r["oracle"].imag, r["rel_err"]] for r in ok]
        _emit(csv_text(cols, data), cfg, f"oracle_{kind}.csv")
    else:
        _emit(dumps(summary) + "\n", cfg, f"oracle_{kind}.json")
    return 0 if passed else 1


def cmd_verify(suite: str, cfg: dict, explicit: set) -> int:
    fld = build_field(cfg)
    msg = admissibility_message(fld)
    if msg is not None:
        raise ConfigError(msg)
    names = suites.SUITES if suite == "all" else (suite,)
    reports = []
    t0 = time.perf_counter()
    for name in names:
        kw = {}
        if name == "decay":
            if "alpha" in explicit or "field" in explicit:
                if not fld.a_is_zero():
                    raise ConfigError("the decay suite needs a = 0")
                kw["alphas"] = (fld.flux(),)
            kw.update(K=cfg["K"], res=cfg["res"], jobs=cfg["jobs"])
        elif name == "bounds":
            if "alpha" in explicit:
                kw["alphas"] = (cfg["alpha"],)
            kw["jobs"] = cfg["jobs"]
        elif name == "smoothing":
            kw.update(T=cfg["T"], res=cfg["res"], jobs=cfg["jobs"])
        elif name == "strichartz":
            if {"alpha", "a", "field"} & explicit:
                kw["field"] = fld
            kw.update(n_draws=cfg["n_draws"], T=cfg["T"], res=cfg["res"], seed0=cfg["seed"],
                      jobs=cfg["jobs"], K=min(cfg["K"], 3) if "K" not in explicit else cfg["K"])
        elif name == "hardy":
            if "alpha" in explicit or "field" in explicit:
                kw["fluxes"] = (fld.flux(),)
        reports.extend(suites.run_suite(name, **kw))
    passed = all(r.passed for r in reports)
    items = []
    for r in reports:
        d = r.to_dict()
        if not cfg["timing"]:
            d["runtime_s"] = 0.0
        items.append(d)
    out = {"schema": SCHEMA, "suite": suite, "pass": passed, "n_checks": len(items),
           "n_failed": sum(1 for r in reports if not r.passed), "checks": items,
           "runtime_s": (time.perf_counter() - t0) if cfg["timing"] else 0.0}
    if cfg["format"] == "csv":
        cols = ["check_id", "parameters", "measured", "bound", "ratio", "pass", "runtime_s"]
        rows = [[d["check_id"], json.dumps(_json_value(d["parameters"])), json.dumps(_json_value(d["measured"])),
                 json.dumps(_json_value(d["bound"])), json.dumps(_json_value(d["ratio"])), d["pass"],
                 d["runtime_s"]] for d in items]
        _emit(csv_text(cols, rows), cfg, f"verify_{suite}.csv")
    else:
        _emit(dumps(out) + "\n", cfg, f"verify_{suite}.json")
    return 0 if passed else 1


def cmd_modes(cfg: dict) -> int:
    fld = build_field(cfg)
    K = cfg["K"]
    if fld.a_is_zero():
        modes = exact_modes(fld, -K, K)
        modes = sorted(modes, key=lambda m: (m.mu, m.k))
    else:
        modes = angular_eigs(fld, 2 * K + 1)
    cols = ["index", "label", "mu", "nu", "exact"]
    rows = [[i, m.label, m.mu, m.nu, int(m.exact)] for i, m in enumerate(modes)]
    warn = admissibility_message(fld)
    if cfg["format"] == "csv":
        _emit(csv_text(cols, rows), cfg, "modes.csv")
    else:
        _emit(dumps({"schema": SCHEMA, "flux": fld.flux(), "admissible": warn is None,
                     "modes": [dict(zip(cols, r)) for r in rows]}) + "\n", cfg, "modes.json")
    if warn is not None:
        sys.stderr.write(warn + "\n")
    return 0


def cmd_qtable(cfg: dict) -> int:
    nu, M = cfg["nu"], cfg["M"]
    b = lambda r: np.ones_like(np.asarray(r, dtype=float))
    Rs = [2.0 ** k for k in range(-10, 11)]
    rows = [[nu, M, R, local_smoothing_Q(nu, R, M, b), local_smoothing_envelope(nu, R, M, b)] for R in Rs]
    cols = ["nu", "M", "R", "Q", "envelope"]
    if cfg["format"] == "csv":
        _emit(csv_text(cols, rows), cfg, "qtable.csv")
    else:
        _emit(dumps({"schema": SCHEMA, "profile": "b = 1", "rows": [dict(zip(cols, r)) for r in rows]}) + "\n",
              cfg, "qtable.json")
    return 0


# ---------------------------------------------------------------- entry point

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value settings file")
    for k, (parse, _) in KEYS.items():
        flag = "--" + k.replace("_", "-")
        if parse is _bool:
            p.add_argument(flag, dest=k, nargs="?", const="true", default=None)
        else:
            p.add_argument(flag, dest=k, default=None)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abwave", description="Aharonov-Bohm heat and wave kernels and estimate checks")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("kernel", help="evaluate one kernel value")
    p.add_argument("kind", choices=("heat", "wave"))
    _add_common(p)
    p = sub.add_parser("oracle", help="closed form against the partial-wave sum on a grid")
    p.add_argument("kind", choices=("heat", "wave"))
    _add_common(p)
    p = sub.add_parser("verify", help="run an estimate suite")
    p.add_argument("suite", choices=suites.SUITES + ("all",))
    _add_common(p)
    p = sub.add_parser("modes", help="dump the angular spectrum")
    _add_common(p)
    p = sub.add_parser("qtable", help="Q_k(R, M) sweep over R")
    _add_common(p)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        file_values = {}
        if args.config:
            try:
                file_values = parse_config_text(Path(args.config).read_text())
            except OSError as e:
                raise ConfigError(f"cannot read config: {e}") from e
        cli_values = {k: getattr(args, k) for k in KEYS if getattr(args, k, None) is not None}
        cfg = resolve_config(file_values, cli_values)
        explicit = set(file_values) | set(cli_values)
        if args.command == "kernel":
            return cmd_kernel(args.kind, cfg)
        if args.command == "oracle":
            return cmd_oracle(args.kind, cfg)
        if args.command == "verify":
            return cmd_verify(args.suite, cfg, explicit)
        if args.command == "modes":
            return cmd_modes(cfg)
        return cmd_qtable(cfg)
    except ConfigError as e:
        sys.stderr.write(f"abwave: error: {e}\n")
        return 2
    except (ValueError, ArithmeticError, RuntimeError) as e:
        sys.stderr.write(f"abwave: evaluation error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
