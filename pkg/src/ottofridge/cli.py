"""Command-line front end: JSON configuration, command dispatch, CSV emission.

Commands:
    critical  -- print the frictionless schedule constants for the configured
                 frequency pair (critical mu, bang-bang hold times, kappa)
    simulate  -- solve the limit cycle of the configured CycleSpec
    optimize  -- derivative-free search over the configured free variables
    sweep     -- temperature sweep with power-law exponent fit
    ga        -- genetic search over piecewise schedules

Every output file starts with the tool version, a hash of the resolved
configuration and the seed, so identical (config, seed) pairs reproduce
byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .cycle import CycleSpec, limit_cycle
from .dynamics import BathSpec
from .optimize import (
    OptimizationSpec,
    ga_schedule_search,
    optimal_cold_frequency,
    optimize_time_allocation,
    solve_isochore_z,
)
from .scaling import SWEEP_KINDS, SweepSpec, temperature_sweep
from .schedules import Schedule, build_three_jump, critical_mu, three_jump_times

COMMANDS = ("critical", "simulate", "optimize", "sweep", "ga")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"config error at {path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# Configuration schema
# ---------------------------------------------------------------------------

_SCHEDULE_KEYS = {
    "three_jump": set(),
    "const_mu": {"mu", "critical"},
    "linear": {"duration"},
    "exponential": {"duration"},
    "piecewise_const": {"segments"},
}

DEFAULTS = {
    "cycle": {
        "omega_h": 10.0,
        "omega_c": 1.0,
        "T_h": 2.0,
        "T_c": 0.5,
        "Gamma": 1.0,
        "Gamma_h": None,
        "Gamma_c": None,
        "expansion": {"kind": "three_jump"},
        "compression": {"kind": "three_jump"},
        "tau_c": None,          # null: z-equation allocation
        "tau_h": None,
        "ode_tol": 1e-9,
    },
    "optimize": {
        "free": ["tau_c", "tau_h"],
        "bounds": {},
        "restarts": 3,
        "max_iter": 400,
    },
    "ga": {
        "segments": 2,
        "population": 32,
        "generations": 200,
        "crossover_rate": 0.9,
        "mutation_rate": 0.35,
        "mutation_scale": 0.25,
        "mutation_decay": 0.99,
        "tau_max": None,
    },
    "sweep": {
        "schedule": "three_jump",
        "omega_h": 100.0,
        "T_h": 1.0,
        "Gamma": 1.0,
        "t_max": 1.0,
        "t_min": 1e-4,
        "points_per_decade": 5,
        "kappa": None,
        "optimize_omega_c": False,
        "allocation": "z",
        "ode_tol": None,
        "tail_decades": 1.0,
    },
    "command-defaults": {
        "seed": 12345,
        "out": ".",
        "threads": 1,
        "tail_fit": None,
    },
}

_POSITIVE = {
    "cycle.omega_h", "cycle.omega_c", "cycle.T_h", "cycle.T_c", "cycle.Gamma",
    "cycle.Gamma_h", "cycle.Gamma_c", "cycle.ode_tol",
    "sweep.omega_h", "sweep.T_h", "sweep.Gamma", "sweep.t_max", "sweep.t_min",
    "sweep.kappa", "sweep.ode_tol", "sweep.tail_decades",
    "ga.tau_max", "optimize.restarts",
}
_NONNEGATIVE = {"cycle.tau_c", "cycle.tau_h"}


def _check_number(path: str, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if path in _POSITIVE and value <= 0:
        raise ConfigError(path, f"must be > 0, got {value}")
    if path in _NONNEGATIVE and value < 0:
        raise ConfigError(path, f"must be >= 0, got {value}")


def _validate_schedule_block(path: str, block):
    if not isinstance(block, dict):
        raise ConfigError(path, "schedule block must be an object")
    kind = block.get("kind")
    if kind not in _SCHEDULE_KEYS:
        raise ConfigError(f"{path}.kind", f"unknown schedule kind {kind!r}")
    allowed = _SCHEDULE_KEYS[kind] | {"kind"}
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", f"unknown key for kind {kind!r}")
    if kind in ("linear", "exponential") and "duration" not in block:
        raise ConfigError(f"{path}.duration", f"kind {kind!r} requires a duration")
    if kind == "const_mu" and "mu" not in block and not block.get("critical"):
        raise ConfigError(f"{path}.mu", "const_mu requires 'mu' or 'critical': true")


def _merge(path: str, defaults, user):
    """Defaults overlaid with user values; unknown keys rejected with their path."""
    if not isinstance(user, dict):
        raise ConfigError(path or "<root>", "expected an object")
    out = {}
    for key, dval in defaults.items():
        here = f"{path}.{key}" if path else key
        if key not in user:
            out[key] = json.loads(json.dumps(dval))
            continue
        uval = user[key]
        if key in ("expansion", "compression"):
            _validate_schedule_block(here, uval)
            out[key] = uval
        elif key in ("bounds",):
            if not isinstance(uval, dict):
                raise ConfigError(here, "expected an object of [lo, hi] pairs")
            out[key] = uval
        elif isinstance(dval, dict):
            out[key] = _merge(here, dval, uval)
        elif uval is None and dval is None:
            out[key] = None
        elif isinstance(dval, bool):
            if not isinstance(uval, bool):
                raise ConfigError(here, f"expected a boolean, got {uval!r}")
            out[key] = uval
        elif isinstance(dval, str):
            if not isinstance(uval, str):
                raise ConfigError(here, f"expected a string, got {uval!r}")
            out[key] = uval
        elif isinstance(dval, list):
            if not isinstance(uval, list):
                raise ConfigError(here, f"expected a list, got {uval!r}")
            out[key] = uval
        else:
            if uval is None:
                out[key] = None
            else:
                _check_number(here, uval)
                out[key] = uval
    for key in user:
        if key not in defaults:
            here = f"{path}.{key}" if path else key
            raise ConfigError(here, "unknown key")
    return out


@dataclass(frozen=True)
class Config:
    resolved: dict
    sha256: str

    @property
    def defaults(self) -> dict:
        return self.resolved["command-defaults"]


def parse_config(source: str | None) -> Config:
    """Parse and validate a JSON config from a file path or inline text."""
    if source is None:
        raw = {}
    else:
        text = source
        if not source.lstrip().startswith("{"):
            if not os.path.exists(source):
                raise ConfigError("<file>", f"config file not found: {source}")
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"malformed JSON: {exc}") from exc
    resolved = _merge("", DEFAULTS, raw)
    cyc = resolved["cycle"]
    if cyc["omega_c"] >= cyc["omega_h"]:
        raise ConfigError("cycle.omega_c", "must be smaller than cycle.omega_h")
    if resolved["sweep"]["t_min"] >= resolved["sweep"]["t_max"]:
        raise ConfigError("sweep.t_min", "must be smaller than sweep.t_max")
    if resolved["sweep"]["schedule"] not in SWEEP_KINDS:
        raise ConfigError("sweep.schedule",
                          f"unknown schedule kind {resolved['sweep']['schedule']!r}")
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return Config(resolved, hashlib.sha256(canon.encode()).hexdigest())


# ---------------------------------------------------------------------------
# Config -> domain objects
# ---------------------------------------------------------------------------

def _build_schedule(block: dict, w_from: float, w_to: float) -> Schedule:
    kind = block["kind"]
    if kind == "three_jump":
        return build_three_jump(w_from, w_to)
    if kind == "const_mu":
        if block.get("critical"):
            c = max(w_from, w_to) / min(w_from, w_to)
            mu_star, _ = critical_mu(c, omega_h=max(w_from, w_to))
            mu = mu_star if w_to < w_from else -mu_star
        else:
            mu = block["mu"]
        return Schedule.const_mu(w_from, w_to, mu)
    if kind == "linear":
        return Schedule.linear(w_from, w_to, block["duration"])
    if kind == "exponential":
        return Schedule.exponential(w_from, w_to, block["duration"])
    if kind == "piecewise_const":
        return Schedule.piecewise(w_from, w_to, [tuple(s) for s in block["segments"]])
    raise ConfigError("schedule.kind", f"unhandled kind {kind!r}")


def cycle_spec_from_config(config: Config) -> CycleSpec:
    c = config.resolved["cycle"]
    g_h = c["Gamma_h"] if c["Gamma_h"] is not None else c["Gamma"]
    g_c = c["Gamma_c"] if c["Gamma_c"] is not None else c["Gamma"]
    hot = BathSpec(c["T_h"], g_h)
    cold = BathSpec(c["T_c"], g_c)
    expansion = _build_schedule(c["expansion"], c["omega_h"], c["omega_c"])
    compression = _build_schedule(c["compression"], c["omega_c"], c["omega_h"])
    tau_c, tau_h = c["tau_c"], c["tau_h"]
    if tau_c is None or tau_h is None:
        alloc = solve_isochore_z(g_h, g_c, expansion.duration + compression.duration)
        tau_c = alloc.tau_c if tau_c is None else tau_c
        tau_h = alloc.tau_h if tau_h is None else tau_h
    return CycleSpec(hot, cold, c["omega_h"], c["omega_c"], expansion, compression,
                     tau_c=tau_c, tau_h=tau_h, ode_tol=c["ode_tol"])


def sweep_spec_from_config(config: Config, seed: int, tail_fit: float | None) -> SweepSpec:
    s = config.resolved["sweep"]
    return SweepSpec(
        kind=s["schedule"], omega_h=s["omega_h"], t_hot=s["T_h"], gamma=s["Gamma"],
        t_max=s["t_max"], t_min=s["t_min"], points_per_decade=int(s["points_per_decade"]),
        kappa=s["kappa"], optimize_omega_c=s["optimize_omega_c"],
        allocation=s["allocation"], ode_tol=s["ode_tol"],
        tail_decades=tail_fit if tail_fit is not None else s["tail_decades"],
        seed=seed,
    )


def optimization_spec_from_config(config: Config, seed: int) -> OptimizationSpec:
    base = cycle_spec_from_config(config)
    o = config.resolved["optimize"]
    free = tuple(o["free"])
    bounds = {k: tuple(v) for k, v in o["bounds"].items()}
    for name in free:
        if name in bounds:
            continue
        if name == "omega_c":
            bounds[name] = (base.omega_c / 10.0, min(base.omega_c * 10.0, base.omega_h * 0.99))
        elif name in ("tau_c", "tau_h"):
            ref = getattr(base, name)
            bounds[name] = (max(ref, 1e-9) / 20.0, max(ref, 1e-9) * 20.0)
        else:
            ref = base.expansion.duration if name == "tau_hc" else base.compression.duration
            bounds[name] = (max(ref, 1e-9) / 20.0, max(ref, 1e-9) * 20.0)
    g = config.resolved["ga"]
    return OptimizationSpec(
        base=base, free=free, bounds=bounds, seed=seed,
        restarts=int(o["restarts"]), max_iter=int(o["max_iter"]),
        segments=int(g["segments"]), population=int(g["population"]),
        generations=int(g["generations"]), crossover_rate=g["crossover_rate"],
        mutation_rate=g["mutation_rate"], mutation_scale=g["mutation_scale"],
        mutation_decay=g["mutation_decay"], tau_max=g["tau_max"],
    )


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _header_lines(config: Config, seed: int) -> list[str]:
    canon = json.dumps(config.resolved, sort_keys=True, separators=(",", ":"))
    return [
        f"# ottofridge {__version__}",
        f"# config_sha256 {config.sha256}",
        f"# seed {seed}",
        f"# config {canon}",
    ]


def _write_table(path: str, config: Config, seed: int, columns: list[str],
                 rows: list[tuple], footer: list[str] | None = None,
                 sep: str = ",") -> None:
    lines = _header_lines(config, seed)
    lines.append(sep.join(columns))
    for row in rows:
        lines.append(sep.join(_fmt(v) if isinstance(v, (int, float, np.integer, np.floating))
                              else str(v) for v in row))
    lines.extend(footer or [])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_critical(config: Config, out: str, seed: int, threads: int,
                  tail_fit: float | None) -> int:
    c = config.resolved["cycle"]
    w_h, w_c = c["omega_h"], c["omega_c"]
    ratio = w_h / w_c
    mu_star, tau_star = critical_mu(ratio, omega_h=w_h)
    tau1, tau2 = three_jump_times(w_h, w_c)
    _, kappa2 = optimal_cold_frequency(2.0, 1.0)
    _, kappa32 = optimal_cold_frequency(1.5, 1.0)
    print(f"compression ratio C = {ratio:.9g}")
    print(f"critical mu*        = {mu_star:.9g}")
    print(f"tau* (const-mu)     = {tau_star:.9g}  [= {tau_star * w_h:.9g}/omega_h]")
    print(f"three-jump tau_1    = {tau1:.9g}")
    print(f"three-jump tau_2    = {tau2:.9g}")
    print(f"three-jump total    = {tau1 + tau2:.9g}")
    print(f"kappa(nu=2)         = {kappa2:.9g}")
    print(f"kappa(nu=3/2)       = {kappa32:.9g}")
    _write_table(os.path.join(out, "critical.csv"), config, seed,
                 ["C", "mu_star", "tau_star", "tau_1", "tau_2", "tau_three_jump",
                  "kappa_nu2", "kappa_nu32"],
                 [(ratio, mu_star, tau_star, tau1, tau2, tau1 + tau2, kappa2, kappa32)])
    return 0


def _cmd_simulate(config: Config, out: str, seed: int, threads: int,
                  tail_fit: float | None) -> int:
    spec = cycle_spec_from_config(config)
    state, record = limit_cycle(spec)
    rows = [(b.name, b.duration, b.start.e_h, b.start.e_l, b.start.e_c,
             b.end.e_h, b.end.e_l, b.end.e_c, b.delta_e) for b in record.branches]
    footer = [
        f"# q_c {_fmt(record.q_c)}",
        f"# q_h {_fmt(record.q_h)}",
        f"# w {_fmt(record.w)}",
        f"# tau_total {_fmt(record.tau_total)}",
        f"# r_c {_fmt(record.r_c)}",
        f"# sigma {_fmt(record.sigma)}",
        f"# cop {_fmt(record.cop)}",
        f"# spectral_radius {_fmt(record.spectral_radius)}",
        f"# iterations {record.iterations}",
    ]
    _write_table(os.path.join(out, "cycle.csv"), config, seed,
                 ["branch", "tau", "e_h_start", "e_l_start", "e_c_start",
                  "e_h_end", "e_l_end", "e_c_end", "delta_e"], rows, footer)
    print(f"limit cycle found: spectral radius {record.spectral_radius:.6g}, "
          f"{record.iterations} iterations, residual {record.residual:.3g}")
    print(f"Q_c = {record.q_c:.9g}   Q_h = {record.q_h:.9g}   W = {record.w:.9g}")
    print(f"tau = {record.tau_total:.9g}   R_c = {record.r_c:.9g}   "
          f"sigma = {record.sigma:.9g}   COP = {record.cop:.9g}")
    return 0


def _cmd_optimize(config: Config, out: str, seed: int, threads: int,
                  tail_fit: float | None) -> int:
    spec = optimization_spec_from_config(config, seed)
    result = optimize_time_allocation(spec)
    names = list(spec.free)
    rows = [tuple(values.get(n, float("nan")) for n in names) + (rc,)
            for values, rc in result.restarts]
    _write_table(os.path.join(out, "optimize.csv"), config, seed,
                 names + ["r_c"], rows,
                 footer=[f"# best_r_c {_fmt(result.best_record.r_c)}"])
    print(f"best R_c = {result.best_record.r_c:.9g} at "
          + ", ".join(f"{n} = {v:.9g}" for n, v in result.best_values.items()))
    if result.z_comparison is not None:
        zc = result.z_comparison
        print(f"z-equation allocation: z = {zc['z']:.9g}, R_c = {zc['r_c_z']:.9g}, "
              f"relative gap {zc['relative_gap']:.3g} "
              f"({'agrees' if zc['agree_1pct'] else 'DISAGREES'} within 1%)")
    if result.failures:
        print(f"note: {result.failures} objective evaluations failed")
    return 0


def _cmd_sweep(config: Config, out: str, seed: int, threads: int,
               tail_fit: float | None) -> int:
    spec = sweep_spec_from_config(config, seed, tail_fit)
    result = temperature_sweep(spec, threads=threads)
    columns = ["T_c", "omega_c", "tau_hc", "tau_c", "tau_ch", "tau_h",
               "tau_total", "Q_c", "Q_h", "W", "R_c", "sigma", "converged_flag"]
    rows = [r.csv_fields() for r in result.rows]
    footer = []
    for label, fit in (("fit", result.fit), ("tail_fit", result.tail_fit)):
        if fit is not None:
            footer.append(f"# {label} delta {_fmt(fit.delta)} prefactor {_fmt(fit.prefactor)} "
                          f"rms {_fmt(fit.rms_residual)} n {fit.n_used}")
    for r in result.rows:
        if r.flag == 0:
            footer.append(f"# failed T_c {_fmt(r.t_c)} {r.error}")
        elif r.flag == 2:
            footer.append(f"# non_cooling T_c {_fmt(r.t_c)}")
    _write_table(os.path.join(out, "sweep.csv"), config, seed, columns, rows, footer)
    _write_table(os.path.join(out, "sweep.dat"), config, seed, columns, rows, footer, sep=" ")
    print(f"sweep {spec.kind}: {len(result.rows)} points, "
          f"{sum(1 for r in result.rows if r.flag == 1)} cooling")
    if result.fit is not None:
        print(f"fit: delta = {result.fit.delta:.4f} (rms {result.fit.rms_residual:.3g})")
    if result.tail_fit is not None:
        print(f"tail fit ({spec.tail_decades:g} decades): delta = {result.tail_fit.delta:.4f}")
    return 0


def _cmd_ga(config: Config, out: str, seed: int, threads: int,
            tail_fit: float | None) -> int:
    spec = optimization_spec_from_config(config, seed)
    result = ga_schedule_search(spec)
    rows = list(enumerate(result.history))
    _write_table(os.path.join(out, "ga.csv"), config, seed,
                 ["generation", "best_r_c"], rows,
                 footer=[f"# champion_r_c {_fmt(result.fitness)}",
                         f"# evaluations {result.evaluations}"])
    segs = ", ".join(f"(omega={w:.6g}, tau={t:.6g})" for w, t in result.schedule.segments)
    print(f"champion R_c = {result.fitness:.9g} with segments [{segs}]")
    return 0


_HANDLERS = {
    "critical": _cmd_critical,
    "simulate": _cmd_simulate,
    "optimize": _cmd_optimize,
    "sweep": _cmd_sweep,
    "ga": _cmd_ga,
}


def run_command(name: str, config: Config, out: str = ".", seed: int | None = None,
                threads: int | None = None, tail_fit: float | None = None) -> int:
    """Run one command against a parsed config; returns the exit status."""
    if name not in _HANDLERS:
        raise ConfigError("<command>", f"unknown command {name!r}")
    cd = config.defaults
    seed = int(cd["seed"]) if seed is None else int(seed)
    threads = int(cd["threads"]) if threads is None else int(threads)
    if tail_fit is None:
        tail_fit = cd["tail_fit"]
    os.makedirs(out, exist_ok=True)
    return _HANDLERS[name](config, out, seed, threads, tail_fit)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ottofridge",
        description="Quantum Otto refrigeration cycle simulator and optimizer "
                    "(natural units hbar = k_B = m = 1)")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None,
                        help="JSON config file path, or inline JSON text")
    parser.add_argument("--seed", type=int, default=None, help="PRNG seed (u64)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for sweep evaluation")
    parser.add_argument("--tail-fit", type=float, default=None, dest="tail_fit",
                        help="decades included in the tail-window exponent fit")
    args = parser.parse_args(argv)
    try:
        config = parse_config(args.config)
        out = args.out if args.out is not None else config.defaults["out"]
        return run_command(args.command, config, out=out, seed=args.seed,
                           threads=args.threads, tail_fit=args.tail_fit)
    except ConfigError as exc:
        print("ERROR " + json.dumps({"command": args.command,
                                     "type": "ConfigError", "message": str(exc)}),
              file=sys.stderr)
        return 2
    except Exception as exc:
        print("ERROR " + json.dumps({"command": args.command,
                                     "type": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
