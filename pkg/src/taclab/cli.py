"""Command-line front end.

Subcommands: quench (single run), sweep, gaps, ingest, fit, report.
Configuration is TOML with nested sections; every run drops a resolved
configuration snapshot next to its outputs.  Exit codes: 0 success,
2 configuration error, 3 numerical failure, 4 validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np

from . import __version__, analysis, correlator_dynamics, exact_oracle
from . import spectrum, sweep as sweep_mod, theory
from ._ivp import IntegrationError
from .model import (OPEN, PERIODIC, KzRamp, LinearRampG, ScheduleError,
                    ChainError, build_chain, load_tabulated_schedule)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

ERR_PREFIX = "taclab:error:"

SCHEMA_VERSION = 1

# Every recognized configuration key with its units / meaning; --help for
# a subcommand points here and unknown keys are rejected outright.
CONFIG_SCHEMA = {
    "schema_version": "int (must be 1)",
    "chain.L": "int, number of sites",
    "chain.topology": "open | periodic",
    "chain.base_J": "energy unit J (sign = ferro/antiferro)",
    "chain.base_g": "energy, initial-field scale",
    "chain.seed": "int, disorder seed",
    "chain.disorder.x": "dimensionless center of g_i / base_g",
    "chain.disorder.delta_J": "dimensionless half-width of J_i / base_J",
    "chain.disorder.delta_g": "dimensionless half-width of g_i / base_g",
    "schedule.kind": "linear_ramp_g | kz_ramp | tabulated",
    "schedule.tau_Q": "time in hbar/J",
    "schedule.J": "energy, coupling scale",
    "schedule.g_max_ratio": "kz_ramp initial g/J (> 1)",
    "schedule.g_min": "kz_ramp final field, energy",
    "schedule.table": "path to s,g,j CSV (tabulated)",
    "schedule.J_max": "tabulated coupling scale, energy",
    "quench.gamma": "dephasing rate, energy units",
    "quench.rtol": "integrator relative tolerance",
    "quench.atol": "integrator absolute tolerance",
    "quench.trajectory_samples": "int, sampled kink trajectory points",
    "quench.engine": "auto | correlator | oracle",
    "quench.dephasing_mode": "site_dephasing | eigenbasis_dephasing",
    "sweep.L": "list of int",
    "sweep.tau_Q": "list of times in hbar/J",
    "sweep.gamma": "list of rates",
    "sweep.delta": "list of disorder half-widths",
    "sweep.seeds_per_point": "int",
    "sweep.base_seed": "int",
    "gaps.L": "list of int, lengths for gap-vs-L table",
    "gaps.n_samples": "int, coarse scan resolution",
    "report.kzm_band": "list [lo, hi] of acceptable KZM exponents",
    "report.residual_ratio_min": "adiabatic detection threshold",
    "report.kink_floor": "drop fit points below this kink count",
}

DEFAULT_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "chain": {"L": 8, "topology": OPEN, "base_J": 1.0, "base_g": 1.0,
              "seed": 0},
    "schedule": {"kind": "linear_ramp_g", "tau_Q": 10.0, "J": 1.0},
    "quench": {"gamma": 0.0, "rtol": 1e-9, "atol": 1e-11,
               "trajectory_samples": 64, "engine": "auto",
               "dephasing_mode": "site_dephasing"},
    "sweep": {"L": [8], "tau_Q": [1.0, 10.0], "gamma": [0.0],
              "delta": [0.0], "seeds_per_point": 1, "base_seed": 0},
    "gaps": {"L": [64, 128, 256], "n_samples": 64},
    "report": {"kzm_band": [0.4, 0.6], "residual_ratio_min": 2.0,
               "kink_floor": 1e-3},
}


class ConfigError(ValueError):
    pass


def _err(msg, category="config"):
    print(f"{ERR_PREFIX}{category}: {msg}", file=sys.stderr)


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _validate_keys(config):
    for key in _flatten(config):
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")


def _merge(base, extra):
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _parse_set(expr):
    if "=" not in expr:
        raise ConfigError(f"--set needs key=value, got {expr!r}")
    key, raw = expr.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    node = value
    for part in reversed(key.split(".")):
        node = {part: node}
    return node


def load_config(path=None, overrides=()):
    config = DEFAULT_CONFIG
    if path is not None:
        with open(path, "rb") as fh:
            config = _merge(config, tomllib.load(fh))
    for expr in overrides:
        config = _merge(config, _parse_set(expr))
    _validate_keys(config)
    if config["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {config['schema_version']}")
    return config


def _snapshot(config, outdir):
    outdir.mkdir(parents=True, exist_ok=True)
    snap = dict(config)
    snap["_config_hash"] = sweep_mod.config_hash(config)
    with open(outdir / "resolved_config.json", "w") as fh:
        json.dump(snap, fh, indent=2, sort_keys=True)


def _build_chain(config):
    c = config["chain"]
    disorder = None
    if "disorder" in c:
        d = c["disorder"]
        disorder = (d["x"], d["delta_J"], d["delta_g"])
    return build_chain(c["L"], c["topology"], base_J=c["base_J"],
                       base_g=c["base_g"], disorder=disorder,
                       seed=c["seed"])


def _build_schedule(config):
    s = config["schedule"]
    kind = s["kind"]
    if kind == "linear_ramp_g":
        return LinearRampG(J=s["J"], tau_q=s["tau_Q"])
    if kind == "kz_ramp":
        return KzRamp(J=s["J"], tau_q=s["tau_Q"],
                      g_max_ratio=s.get("g_max_ratio", 2.0),
                      g_min=s.get("g_min", 0.0))
    if kind == "tabulated":
        return load_tabulated_schedule(s["table"], s["J_max"], s["tau_Q"])
    raise ConfigError(f"unknown schedule kind {kind!r}")


def _workers(args):
    if args.workers is not None:
        return args.workers
    env = os.environ.get("TACLAB_WORKERS")
    return int(env) if env else 1


def cmd_quench(args):
    config = load_config(args.config, args.set or ())
    outdir = Path(args.out)
    _snapshot(config, outdir)
    chain = _build_chain(config)
    schedule = _build_schedule(config)
    q = config["quench"]
    engine = q["engine"]
    if engine == "auto":
        engine = ("correlator" if chain.topology == OPEN
                  else "oracle")
    if engine == "correlator":
        res = correlator_dynamics.evolve(
            chain, schedule, gamma=q["gamma"], rtol=q["rtol"], atol=q["atol"],
            trajectory_samples=q["trajectory_samples"])
        energy = res.final_energy
        kinks = res.kinks
        if res.trajectory_samples is not None:
            np.savetxt(outdir / "trajectory.csv", res.trajectory_samples,
                       delimiter=",", header="t,kinks", comments="")
        for flag in res.flags:
            _err(f"flagged result: {flag}", category="numerical")
    else:
        if q["gamma"] == 0.0:
            state = exact_oracle.evolve_pure(chain, schedule,
                                             rtol=q["rtol"], atol=q["atol"])
        else:
            state = exact_oracle.evolve_lindblad(
                chain, schedule, q["gamma"], mode=q["dephasing_mode"],
                rtol=q["rtol"], atol=q["atol"])
        kinks = exact_oracle.kink_expectation(state, chain)
        energy = 2.0 * chain.base_J * kinks - chain.n_bonds * chain.base_J
    record = analysis.RunRecord(
        chain_id=f"L{chain.L}-seed{config['chain']['seed']}", engine=engine,
        L=chain.L, topology=chain.topology, n_couplings=chain.n_bonds,
        J_max=config["schedule"].get("J", 1.0), tau_Q=schedule.tau_q,
        tau_Q_unit="hbar_over_J", final_energy=energy, energy_unit="J",
        gamma=q["gamma"], seed=config["chain"]["seed"], realization_id="cli")
    analysis.emit([record], outdir / "runs.csv")
    print(f"kinks = {kinks:.6g}, final energy = {energy:.6g} "
          f"({engine} engine) -> {outdir / 'runs.csv'}")
    return EXIT_OK


def cmd_sweep(args):
    config = load_config(args.config, args.set or ())
    outdir = Path(args.out)
    _snapshot(config, outdir)
    s = config["sweep"]
    plan = sweep_mod.SweepPlan(
        Ls=tuple(s["L"]), tau_Qs=tuple(s["tau_Q"]),
        gammas=tuple(s["gamma"]), deltas=tuple(s["delta"]),
        seeds_per_point=s["seeds_per_point"],
        topology=config["chain"]["topology"],
        schedule_kind=config["schedule"]["kind"],
        J=config["schedule"]["J"], base_seed=s["base_seed"],
        engine=config["quench"]["engine"],
        rtol=config["quench"]["rtol"], atol=config["quench"]["atol"])
    records, failures = sweep_mod.run_sweep(plan, workers=_workers(args))
    for pt, msg in failures:
        _err(f"sweep point L={pt.L} tau_Q={pt.tau_Q} failed: {msg}",
             category="numerical")
    analysis.emit(records, outdir / "runs.csv")
    analysis.emit_aggregate(analysis.aggregate(records),
                            outdir / "aggregate.csv")
    print(f"{len(records)} records -> {outdir / 'runs.csv'}"
          + (f" ({len(failures)} failures)" if failures else ""))
    return EXIT_NUMERICAL if failures and not records else EXIT_OK


def cmd_gaps(args):
    config = load_config(args.config, args.set or ())
    outdir = Path(args.out)
    _snapshot(config, outdir)
    schedule = _build_schedule(config)
    rows = []
    for L in config["gaps"]["L"]:
        chain = build_chain(L, config["chain"]["topology"],
                            base_J=config["chain"]["base_J"],
                            base_g=config["chain"]["base_g"])
        scan = spectrum.gap_scan(chain, schedule,
                                 n_samples=config["gaps"]["n_samples"])
        spectrum.export_gap_scan(scan, outdir / f"gap_scan_L{L}.csv")
        rows.append((L, scan.s_c, scan.gap_at_sc))
        if scan.boundary_minimum:
            _err(f"L={L}: gap minimum on the scan boundary",
                 category="validation")
    spectrum.export_gap_vs_L(rows, outdir / "gap_vs_L.csv")
    print(f"gap tables for L={list(config['gaps']['L'])} -> {outdir}")
    return EXIT_OK


def cmd_ingest(args):
    report = analysis.ingest(args.input)
    print(f"{len(report.records)} valid records, "
          f"{report.n_rejected} rejected")
    for lineno, msg in report.errors:
        _err(f"line {lineno}: {msg}", category="validation")
    return EXIT_VALIDATION if report.errors else EXIT_OK


def cmd_fit(args):
    report = analysis.ingest(args.input)
    for lineno, msg in report.errors:
        _err(f"line {lineno}: {msg}", category="validation")
    if not report.records:
        _err("no valid records to fit", category="validation")
        return EXIT_VALIDATION
    group_by = tuple(args.group.split(",")) if args.group else ("L",)
    rows = analysis.aggregate(report.records, group_by=group_by + ("tau_Q",))
    by_group: dict = {}
    for (key, mean, sem, n) in rows:
        by_group.setdefault(key[:-1], []).append((key[-1], mean, sem))
    for gkey in sorted(by_group):
        pts = [(tau, k, analysis.sem_weight(k, sem))
               for (tau, k, sem) in sorted(by_group[gkey]) if k > 0]
        label = ",".join(f"{k}={v}" for k, v in zip(group_by, gkey))
        if len(pts) < 3:
            _err(f"group {label}: fewer than 3 positive points",
                 category="validation")
            continue
        fit = analysis.fit_power_law(pts)
        print(f"group {label}:")
        print(analysis.fit_report_text(fit))
    return EXIT_OK


def cmd_report(args):
    config = load_config(args.config, args.set or ())
    outdir = Path(args.out)
    _snapshot(config, outdir)
    report_cfg = config["report"]
    ing = analysis.ingest(args.input)
    for lineno, msg in ing.errors:
        _err(f"line {lineno}: {msg}", category="validation")
    if not ing.records:
        _err("no valid records", category="validation")
        return EXIT_VALIDATION
    report = sweep_mod.tac_verdict(
        ing.records, kzm_band=tuple(report_cfg["kzm_band"]),
        residual_ratio_min=report_cfg["residual_ratio_min"],
        kink_floor=report_cfg["kink_floor"],
        provenance={"config_hash": sweep_mod.config_hash(config),
                    "input": str(args.input)})
    text = report.render_text()
    (outdir / "tac_report.txt").write_text(text)
    print(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="taclab",
        description="Quench simulator and adiabaticity benchmark for the "
                    "transverse-field Ising chain.",
        epilog="Configuration keys (all units hbar = 1):\n" + "\n".join(
            f"  {k:28s} {v}" for k, v in CONFIG_SCHEMA.items()),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", default=None,
                           help="TOML configuration file")
            p.add_argument("--set", action="append", metavar="KEY=VALUE",
                           help="override a configuration key (repeatable)")
        p.add_argument("--out", default="taclab_out",
                       help="output directory")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel workers (default TACLAB_WORKERS or 1)")
        p.add_argument("--seed", type=int, default=None,
                       help="override chain.seed / sweep.base_seed")
        p.add_argument("--format", choices=["csv"], default="csv")

    p = sub.add_parser("quench", help="single quench run")
    common(p)
    p.set_defaults(func=cmd_quench)
    p = sub.add_parser("sweep", help="run a sweep plan")
    common(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("gaps", help="gap scans and gap-vs-L tables")
    common(p)
    p.set_defaults(func=cmd_gaps)
    p = sub.add_parser("ingest", help="validate an external run CSV")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_ingest)
    p = sub.add_parser("fit", help="power-law fits of a run CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--group", default="L",
                   help="comma-separated grouping columns")
    p.set_defaults(func=cmd_fit)
    p = sub.add_parser("report", help="TAC verdict from a run CSV")
    common(p)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is not None:
        extra = [f"chain.seed={args.seed}", f"sweep.base_seed={args.seed}"]
        args.set = (args.set or []) + extra
    try:
        return args.func(args)
    except (ConfigError, ChainError, ScheduleError, tomllib.TOMLDecodeError,
            FileNotFoundError, KeyError) as exc:
        _err(str(exc), category="config")
        return EXIT_CONFIG
    except IntegrationError as exc:
        _err(str(exc), category="numerical")
        return EXIT_NUMERICAL
    except analysis.IngestError as exc:
        _err(str(exc), category="validation")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
