"""Command-line entry point.

    spgpnav run --scenario doorway --agents 2 --method spgp --trials 10 --seed 0 --out r.csv
    spgpnav sweep --scenario doorway --deltas 0.5,1,1.5,2 --out sweep.csv --plot sweep.svg
    spgpnav render trial.npz --out trial.svg
    spgpnav scenario save --scenario hallway --agents 4 --out hallway.json

``--config FILE`` reads a JSON object whose keys are the long flag names
(``t-max`` or ``t_max``); flags given on the command line take precedence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from spgpnav import __version__, harness, plotting
from spgpnav.scenarios import (
    SCENARIOS,
    ScenarioError,
    build_scenario,
    load_scenario,
    save_scenario,
    with_params,
)
from spgpnav.simulator import run

DEFAULTS = {
    "scenario": "doorway",
    "agents": 2,
    "method": "spgp",
    "trials": 10,
    "seed": 0,
    "delta": None,
    "gamma": None,
    "dt": None,
    "t_max": None,
    "out": None,
    "format": "csv",
    "workers": 1,
    "deltas": "0.5,1.0,1.5,2.0",
    "log_dir": None,
    "plot": None,
}
COMMON_KEYS = ("scenario", "agents", "method", "trials", "seed", "delta", "gamma", "dt",
               "t_max", "out", "format", "workers", "plot")
RUN_KEYS = COMMON_KEYS + ("log_dir",)
SWEEP_KEYS = COMMON_KEYS + ("deltas",)


class CliError(Exception):
    pass


def _add_run_flags(p: argparse.ArgumentParser, sweep: bool) -> None:
    # defaults stay None so the config file can fill anything not given on the command line
    p.add_argument("--config", help="JSON file with default values for these flags")
    p.add_argument("--scenario", help=f"one of {', '.join(SCENARIOS)} or a scenario file")
    p.add_argument("--agents", type=int, help="number of agents (built-in scenarios)")
    p.add_argument("--method", choices=harness.METHODS,
                   help="spgp (perturbation on) or sbc (certificates only)")
    p.add_argument("--trials", type=int, help="trials per experiment")
    p.add_argument("--seed", type=int, help="base seed; trial k uses seed + k")
    p.add_argument("--delta", type=float, help="perturbation radius (m)")
    p.add_argument("--gamma", type=float, help="barrier gain")
    p.add_argument("--dt", type=float, help="time step (s)")
    p.add_argument("--t-max", dest="t_max", type=int, help="step limit per trial")
    p.add_argument("--out", help="results file (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"), help="results format")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--plot", help="SVG path for a figure of the results")
    if sweep:
        p.add_argument("--deltas", help="comma-separated perturbation radii")
    else:
        p.add_argument("--log-dir", dest="log_dir", help="save every trial's log here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spgpnav", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"spgpnav {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_flags(sub.add_parser("run", help="run seeded trials of one scenario"), False)
    _add_run_flags(sub.add_parser("sweep", help="makespan against perturbation radius"), True)

    render = sub.add_parser("render", help="draw a trial log or a sweep file as SVG")
    render.add_argument("input", help="trial log (.npz) or sweep results (.csv/.json)")
    render.add_argument("--out", required=True, help="SVG output path")

    scen = sub.add_parser("scenario", help="save, load or validate scenario files")
    scen_sub = scen.add_subparsers(dest="action", required=True)
    save = scen_sub.add_parser("save", help="write a built-in scenario to a file")
    save.add_argument("--config")
    save.add_argument("--scenario")
    save.add_argument("--agents", type=int)
    save.add_argument("--delta", type=float)
    save.add_argument("--gamma", type=float)
    save.add_argument("--dt", type=float)
    save.add_argument("--t-max", dest="t_max", type=int)
    save.add_argument("--out", help="output path (stdout when omitted)")
    for action in ("load", "validate"):
        p = scen_sub.add_parser(action, help=f"{action} a scenario file")
        p.add_argument("path")
    return parser


def _read_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise CliError(f"{path}: expected a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(args: argparse.Namespace, keys) -> dict:
    """Built-in defaults, then the config file, then command-line flags."""
    settings = {k: DEFAULTS[k] for k in keys}
    if getattr(args, "config", None):
        config = _read_config(args.config)
        unknown = sorted(set(config) - set(keys))
        if unknown:
            raise CliError(f"{args.config}: unknown key(s) {unknown}")
        settings.update(config)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            settings[k] = v
    return settings


def _overrides(s: dict) -> dict:
    return {k: s[k] for k in ("delta", "gamma", "dt", "t_max") if s.get(k) is not None}


def _scenario(s: dict):
    name = s["scenario"]
    if name in SCENARIOS:
        return build_scenario(name, int(s["agents"]), _overrides(s))
    if not os.path.isfile(str(name)):
        raise CliError(f"unknown scenario {name!r}: not a built-in name or a file")
    try:
        with open(name, encoding="utf-8") as fh:
            config = load_scenario(fh.read())
    except ScenarioError as exc:
        raise CliError(f"{name}: {exc}") from exc
    return with_params(config, **_overrides(s)) if _overrides(s) else config


def _emit(result, s: dict) -> None:
    if s["out"]:
        for path in harness.emit_results(result, s["out"], s["format"]):
            print(f"wrote {path}", file=sys.stderr)
    elif s["format"] == "json":
        sys.stdout.write(harness.results_json(result))
    else:
        sys.stdout.write(harness.results_csv(result))


def _positive(s: dict, key: str) -> None:
    if int(s[key]) < 1:
        raise CliError(f"--{key.replace('_', '-')} must be >= 1")


def cmd_run(args) -> int:
    s = resolve(args, RUN_KEYS)
    _positive(s, "trials")
    _positive(s, "workers")
    config = _scenario(s)
    result = harness.experiment(config, s["method"], int(s["trials"]), int(s["seed"]),
                                int(s["workers"]))
    _emit(result, s)
    if s["log_dir"] or s["plot"]:
        if s["log_dir"]:
            os.makedirs(s["log_dir"], exist_ok=True)
        perturb = s["method"] == "spgp"
        for k, rec in enumerate(result.records):
            if not s["log_dir"] and k:
                break
            log, _ = run(config, rec.seed, perturb)
            if s["log_dir"]:
                path = os.path.join(s["log_dir"],
                                    f"{config.name}_{s['method']}_seed{rec.seed}.npz")
                harness.save_log(log, config, path)
            if k == 0 and s["plot"]:
                plotting.write_svg(plotting.trajectory_svg(log, config), s["plot"])
    return 0


def _deltas(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(d) for d in text]
    try:
        return [float(d) for d in str(text).split(",") if d.strip()]
    except ValueError as exc:
        raise CliError(f"--deltas: {exc}") from exc


def cmd_sweep(args) -> int:
    s = resolve(args, SWEEP_KEYS)
    _positive(s, "trials")
    _positive(s, "workers")
    config = _scenario(s)
    result = harness.sweep(config, _deltas(s["deltas"]), int(s["trials"]), int(s["seed"]),
                           int(s["workers"]), method=s["method"])
    _emit(result, s)
    if s["plot"]:
        title = f"{config.name}, {config.n_agents} agents"
        plotting.write_svg(plotting.sweep_svg(result.curve(), title), s["plot"])
    return 0


def cmd_render(args) -> int:
    if args.input.endswith(".npz"):
        log, config = harness.load_log(args.input)
        text = plotting.trajectory_svg(log, config)
    else:
        text = plotting.sweep_svg(harness.read_sweep_curve(args.input))
    plotting.write_svg(text, args.out)
    return 0


def cmd_scenario(args) -> int:
    if args.action == "save":
        s = resolve(args, ("scenario", "agents", "delta", "gamma", "dt", "t_max", "out"))
        if s["scenario"] not in SCENARIOS:
            raise CliError(f"--scenario must be one of {', '.join(SCENARIOS)}")
        text = save_scenario(_scenario(s))
        if s["out"]:
            harness.write_text(s["out"], text)
        else:
            sys.stdout.write(text)
        return 0
    try:
        with open(args.path, encoding="utf-8") as fh:
            config = load_scenario(fh.read())
    except OSError as exc:
        raise CliError(f"cannot read {args.path}: {exc.strerror or exc}") from exc
    except ScenarioError as exc:
        raise CliError(f"{args.path}: {exc}") from exc
    if args.action == "validate":
        print(f"{args.path}: ok")
    else:
        print(f"{config.name}: {config.n_agents} agents, {len(config.walls)} walls, "
              f"{len(config.obstacles)} obstacles, dt={config.dt}, t_max={config.t_max}, "
              f"delta={config.spgp.delta}, gamma={config.safety.gamma}")
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "render": cmd_render, "scenario": cmd_scenario}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CliError, ScenarioError, harness.HarnessError, OSError, ValueError) as exc:
        print(f"spgpnav: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
