"""Command-line front end.

Commands: run, compare, stability-map, validate. Configuration is resolved
with precedence built-in defaults < FLEXCTL_SEED (seed only) < config file
< command-line flags. Config files are flat `key = value` lines with `#`
comments; keys mirror the dataclass fields (`params.R`, `gains.k_P`,
`schedule.h_min`, `initial.theta`, `duration`, ...).

Exit codes: 0 ok, 2 usage/config error, 3 divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .controller import GainSet, GuardSet
from .discretizer import SamplingTooSmallError
from .matseries import SeriesOptions
from .plant import DesiredState, MotorParams, PlantState
from .scheduler import ScheduleSpec
from .simulator import (DivergenceError, SimConfig, compare_gain_modes, run,
                        schedule_hash, write_trace_csv)
from .stability import stability_map
from .checks import run_identity_checks

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIVERGENCE = 3

_SECTIONS = {
    "params": MotorParams,
    "gains": GainSet,
    "guards": GuardSet,
    "desired": DesiredState,
    "initial": PlantState,
    "schedule": ScheduleSpec,
}


class ConfigError(ValueError):
    """Bad config file contents or inconsistent option values."""


def _known_keys() -> dict[str, type]:
    keys: dict[str, type] = {"duration": float}
    for section, cls in _SECTIONS.items():
        for f in fields(cls):
            kind = {"float": float, "int": int, "str": str}.get(f.type, f.type)
            keys[f"{section}.{f.name}"] = kind
    return keys


def parse_config_file(path) -> dict[str, str]:
    """Flat `key = value` lines; `#` starts a comment; blank lines ignored."""
    values: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def build_sim_config(file_values: dict[str, str] | None = None,
                     overrides: dict[str, object] | None = None) -> SimConfig:
    """Resolve a SimConfig from defaults, FLEXCTL_SEED, file, and overrides."""
    known = _known_keys()
    resolved: dict[str, object] = {}

    env_seed = os.environ.get("FLEXCTL_SEED")
    if env_seed is not None:
        try:
            resolved["schedule.seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"FLEXCTL_SEED must be an integer, got {env_seed!r}") from exc

    for key, raw in (file_values or {}).items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            resolved[key] = known[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc

    for key, value in (overrides or {}).items():
        if value is not None:
            resolved[key] = value

    kwargs: dict[str, object] = {}
    try:
        base = SimConfig()
        for section, cls in _SECTIONS.items():
            section_kwargs = {
                f.name: resolved[f"{section}.{f.name}"]
                for f in fields(cls) if f"{section}.{f.name}" in resolved
            }
            if section_kwargs:
                kwargs[section] = replace(getattr(base, section), **section_kwargs)
        duration = resolved.get("duration")
        if duration is not None:
            kwargs["duration"] = duration
        return replace(base, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_snapshot(cfg: SimConfig) -> dict[str, object]:
    """Flat key -> value image of a resolved config, manifest-ready."""
    snap: dict[str, object] = {"duration": cfg.duration}
    for section, cls in _SECTIONS.items():
        obj = getattr(cfg, section)
        for f in fields(cls):
            snap[f"{section}.{f.name}"] = getattr(obj, f.name)
    return snap


def write_manifest(path, command: str, cfg_snapshot: dict[str, object],
                   seeds: list[int], outputs: list[str],
                   extra: dict[str, object] | None = None) -> None:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "seeds": seeds,
        "outputs": outputs,
        "config": cfg_snapshot,
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _parse_seeds(text: str) -> list[int]:
    """`3`, `1,2,5`, or `1..10` (inclusive range)."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        seeds = list(range(int(lo), int(hi) + 1))
        if not seeds:
            raise ConfigError(f"empty seed range {text!r}")
        return seeds
    return [int(part) for part in text.split(",")]


def _shared_flags(sub: argparse.ArgumentParser, h_min_default=None, h_max_default=None) -> None:
    sub.add_argument("--config", type=str, default=None, help="flat key=value config file")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--duration", type=float, default=None, help="simulation horizon [s]")
    sub.add_argument("--h-min", type=float, default=h_min_default)
    sub.add_argument("--h-max", type=float, default=h_max_default)
    sub.add_argument("--gain-mode", choices=("dynamic", "constant"), default=None)
    sub.add_argument("--fidelity", choices=("corrected", "paper_literal"), default=None)


def _overrides_from_args(args) -> dict[str, object]:
    return {
        "schedule.seed": args.seed,
        "duration": args.duration,
        "schedule.h_min": args.h_min,
        "schedule.h_max": args.h_max,
        "gains.gain_mode": args.gain_mode,
        "params.fidelity": args.fidelity,
    }


def _resolve(args) -> SimConfig:
    file_values = parse_config_file(args.config) if args.config else None
    return build_sim_config(file_values, _overrides_from_args(args))


def cmd_run(args) -> int:
    cfg = _resolve(args)
    out = Path(args.out)
    manifest_path = out.with_suffix(".manifest.json")
    try:
        trace = run(cfg)
        code = EXIT_OK
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        trace = exc.trace
        code = EXIT_DIVERGENCE
    write_trace_csv(trace, out)
    write_manifest(manifest_path, "run", config_snapshot(cfg),
                   seeds=[cfg.schedule.seed], outputs=[str(out)])
    return code


def cmd_compare(args) -> int:
    cfg = _resolve(args)
    seeds = _parse_seeds(args.seeds) if args.seeds else [cfg.schedule.seed]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    outputs: list[str] = []
    rows = []
    for seed in seeds:
        seeded = replace(cfg, schedule=replace(cfg.schedule, seed=seed))
        result = compare_gain_modes(seeded)
        if len(seeds) == 1:
            dyn_path, con_path = outdir / "dynamic.csv", outdir / "constant.csv"
        else:
            dyn_path, con_path = outdir / f"dynamic_s{seed}.csv", outdir / f"constant_s{seed}.csv"
        write_trace_csv(result.dynamic, dyn_path)
        write_trace_csv(result.constant, con_path)
        outputs += [str(dyn_path), str(con_path)]
        s = result.summary
        rows.append((seed, s.final_theta_err_dynamic, s.final_omega_err_dynamic,
                     s.final_theta_err_constant, s.final_omega_err_constant, s.schedule_hash))

    summary_path = outdir / "summary.csv"
    with summary_path.open("w", newline="") as f:
        f.write("seed,final_theta_err_dynamic,final_omega_err_dynamic,"
                "final_theta_err_constant,final_omega_err_constant,schedule_hash\n")
        for seed, td, od, tc, oc, sh in rows:
            f.write(f"{seed},{td!r},{od!r},{tc!r},{oc!r},{sh}\n")
    outputs.append(str(summary_path))
    write_manifest(outdir / "compare.manifest.json", "compare", config_snapshot(cfg),
                   seeds=seeds, outputs=outputs)
    return EXIT_OK


def cmd_stability_map(args) -> int:
    cfg = _resolve(args)
    gains = cfg.gains
    if args.kp is not None:
        gains = replace(gains, k_P=args.kp)
    if args.kd is not None:
        gains = replace(gains, k_D=args.kd)
    if args.h_min > args.h_max or args.omega_min > args.omega_max:
        raise ConfigError("axis bounds must satisfy min <= max")
    if args.n_h < 1 or args.n_omega < 1:
        raise ConfigError("grid sizes must be >= 1")
    h_values = np.linspace(args.h_min, args.h_max, args.n_h)
    omega_values = np.linspace(args.omega_min, args.omega_max, args.n_omega)
    grid = stability_map(cfg.params, gains, h_values, omega_values,
                         desired=cfg.desired)
    out = Path(args.out)
    grid.write_csv(out)
    snapshot = config_snapshot(replace(cfg, gains=gains))
    write_manifest(out.with_suffix(".manifest.json"), "stability-map", snapshot,
                   seeds=[], outputs=[str(out)],
                   extra={"grid": {"h_min": args.h_min, "h_max": args.h_max,
                                   "omega_min": args.omega_min, "omega_max": args.omega_max,
                                   "n_h": args.n_h, "n_omega": args.n_omega,
                                   "stable_cells": grid.stable_count()}})
    print(f"stable cells (margin <= 0): {grid.stable_count()} of {grid.margins.size}")
    return EXIT_OK


def cmd_validate(args) -> int:
    options = SeriesOptions(tol=args.tol) if args.tol is not None else None
    results = run_identity_checks(seed=args.seed if args.seed is not None else 0,
                                  trials=args.trials, options=options)
    width = max(len(r.name) for r in results)
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        all_ok &= r.passed
        print(f"{status}  {r.name:<{width}}  max_error={r.max_error:.3e}  tolerance={r.tolerance:.0e}")
    print("all checks passed" if all_ok else "FAILURES present")
    return EXIT_OK if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flexctl",
        description="Energy-based DC motor control under switched sampling periods.")
    parser.add_argument("--version", action="version", version=f"flexctl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="closed-loop simulation, trace CSV out")
    _shared_flags(p_run)
    p_run.add_argument("--out", type=str, default="trace.csv")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="dynamic vs constant gain on shared schedules")
    _shared_flags(p_cmp)
    p_cmp.add_argument("--out", type=str, default=".", help="output directory")
    p_cmp.add_argument("--seeds", type=str, default=None,
                       help="seed sweep: `3`, `1,2,5`, or `1..10`")
    p_cmp.set_defaults(func=cmd_compare)

    p_map = sub.add_parser("stability-map", help="V1 margin over an (h, |omega|) grid")
    _shared_flags(p_map, h_min_default=0.01, h_max_default=0.3)
    p_map.add_argument("--out", type=str, default="stability_map.csv")
    p_map.add_argument("--omega-min", type=float, default=0.0)
    p_map.add_argument("--omega-max", type=float, default=10.0)
    p_map.add_argument("--n-h", type=int, default=50)
    p_map.add_argument("--n-omega", type=int, default=50)
    p_map.add_argument("--kp", type=float, default=None)
    p_map.add_argument("--kd", type=float, default=None)
    p_map.set_defaults(func=cmd_stability_map)

    p_val = sub.add_parser("validate", help="series/discretizer identity suite vs oracles")
    p_val.add_argument("--seed", type=int, default=None)
    p_val.add_argument("--trials", type=int, default=50)
    p_val.add_argument("--tol", type=float, default=None,
                       help="inject a series truncation tolerance (degradation testing)")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SamplingTooSmallError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
