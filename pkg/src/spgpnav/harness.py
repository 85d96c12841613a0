"""Seeded trial batches, summaries, radius sweeps and result files.

Every trial of an experiment uses its own seed, ``base_seed + k``, so the
results do not depend on how trials are spread over worker processes.
Aggregates use the population standard deviation.

CSV schema (version 1), one row per scenario x method x metric::

    scenario,method,metric,mean,std,trials,seed

``seed`` is the base seed. Sweep files name the metric ``<metric>@delta=<d>``.
The per-trial records go to a second CSV whose columns are :data:`TRIAL_COLUMNS`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from spgpnav.metrics import TrajectoryLog, TrialResult
from spgpnav.scenarios import (
    ScenarioConfig,
    build_scenario,
    from_document,
    to_document,
    with_params,
)
from spgpnav.simulator import run

CSV_VERSION = 1
CSV_HEADER = ("scenario", "method", "metric", "mean", "std", "trials", "seed")
METHODS = ("spgp", "sbc")
METRICS = ("success_rate", "avg_delta_v", "path_deviation", "makespan",
           "deadlock_count", "min_pair_h")
TRIAL_COLUMNS = ("scenario", "method", "delta", "seed", "success", "collision",
                 "agents_arrived", "makespan", "makespan_max", "avg_delta_v",
                 "path_deviation", "deadlock_count", "perturb_count",
                 "qp_infeasible_count", "min_pair_h", "steps")


class HarnessError(RuntimeError):
    pass


@dataclass
class TrialRecord:
    seed: int
    result: TrialResult

    def values(self) -> dict[str, float]:
        """Per-trial scalars; agent lists are averaged over agents."""
        r = self.result
        return {
            "success_rate": 100.0 if r.success else 0.0,
            "avg_delta_v": float(np.mean(r.avg_delta_v)),
            "path_deviation": float(np.mean(r.path_deviation)),
            "makespan": float(np.mean(r.makespan)),
            "deadlock_count": float(r.deadlock_count),
            "min_pair_h": float(r.min_pair_h),
        }


@dataclass
class ExperimentSummary:
    scenario: str
    n_agents: int
    method: str
    trials: int
    seed: int
    delta: float
    records: list[TrialRecord]
    stats: dict[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def success_rate(self) -> float:
        return self.stats["success_rate"][0]

    @property
    def mean_makespan(self) -> float:
        return self.stats["makespan"][0]


@dataclass
class SweepResult:
    scenario: str
    n_agents: int
    deltas: list[float]
    summaries: list[ExperimentSummary]

    def curve(self) -> list[tuple[float, float, float]]:
        """``(delta, mean makespan, std)`` per swept radius."""
        return [(d, *s.stats["makespan"]) for d, s in zip(self.deltas, self.summaries)]


def mean_std(values) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation."""
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        raise ValueError("no values to aggregate")
    return float(np.mean(a)), float(np.std(a))


def summarize(records: list[TrialRecord]) -> dict[str, tuple[float, float]]:
    per = [r.values() for r in records]
    return {m: mean_std([p[m] for p in per]) for m in METRICS}


def _run_one(args) -> tuple[int, TrialResult]:
    doc, seed, perturb = args
    _, result = run(from_document(doc), seed, perturb)
    return seed, result


def run_trials(config: ScenarioConfig, method: str, trials: int, base_seed: int,
               workers: int = 1) -> list[TrialRecord]:
    if method not in METHODS:
        raise HarnessError(f"method must be one of {METHODS}, got {method!r}")
    if trials < 1:
        raise HarnessError("trials must be >= 1")
    perturb = method == "spgp"
    seeds = [base_seed + k for k in range(trials)]
    if workers > 1 and trials > 1:
        doc = to_document(config)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = dict(pool.map(_run_one, [(doc, s, perturb) for s in seeds]))
    else:
        done = {s: run(config, s, perturb)[1] for s in seeds}
    return [TrialRecord(seed=s, result=done[s]) for s in seeds]


def experiment(config: ScenarioConfig, method: str, trials: int, base_seed: int,
               workers: int = 1) -> ExperimentSummary:
    """Run and summarize ``trials`` seeded trials of an already built scenario."""
    records = run_trials(config, method, trials, base_seed, workers)
    return ExperimentSummary(
        scenario=config.name, n_agents=config.n_agents, method=method, trials=trials,
        seed=base_seed, delta=config.spgp.delta, records=records, stats=summarize(records))


def run_experiment(scenario: str, n_agents: int, method: str, trials: int, base_seed: int,
                   overrides: dict | None = None, workers: int = 1) -> ExperimentSummary:
    config = build_scenario(scenario, n_agents, overrides)
    return experiment(config, method, trials, base_seed, workers)


def sweep(config: ScenarioConfig, deltas, trials: int, base_seed: int,
          workers: int = 1, method: str = "spgp") -> SweepResult:
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise HarnessError("need at least one perturbation radius")
    if any(not d > 0 for d in deltas):
        raise HarnessError("perturbation radii must be > 0")
    summaries = [experiment(with_params(config, delta=d), method, trials, base_seed, workers)
                 for d in deltas]
    return SweepResult(scenario=config.name, n_agents=config.n_agents, deltas=deltas,
                       summaries=summaries)


def sweep_radius(scenario: str, n_agents: int, deltas, trials: int, base_seed: int,
                 overrides: dict | None = None, workers: int = 1) -> SweepResult:
    return sweep(build_scenario(scenario, n_agents, overrides), deltas, trials, base_seed,
                 workers)


# ---------------------------------------------------------------- emission

def _num(x: float) -> str:
    # repr is the shortest round-tripping form, so equal floats give equal bytes
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _rows(result) -> list[tuple]:
    if isinstance(result, ExperimentSummary):
        return [(result.scenario, result.method, m, *result.stats[m], result.trials, result.seed)
                for m in METRICS]
    rows = []
    for d, s in zip(result.deltas, result.summaries):
        rows.extend((s.scenario, s.method, f"{m}@delta={_num(d)}", *s.stats[m], s.trials, s.seed)
                    for m in METRICS)
    return rows


def _trial_rows(result) -> list[tuple]:
    summaries = [result] if isinstance(result, ExperimentSummary) else result.summaries
    rows = []
    for s in summaries:
        for rec in s.records:
            r = rec.result
            v = rec.values()
            rows.append((s.scenario, s.method, s.delta, rec.seed, r.success, r.collision,
                         r.agents_arrived, v["makespan"], max(r.makespan), v["avg_delta_v"],
                         v["path_deviation"], r.deadlock_count, r.perturb_count,
                         r.qp_infeasible_count, r.min_pair_h, r.steps))
    return rows


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _num(v) for v in row])
    return buf.getvalue()


def results_csv(result) -> str:
    """Aggregate table for an :class:`ExperimentSummary` or :class:`SweepResult`."""
    return _csv(CSV_HEADER, _rows(result))


def trials_csv(result) -> str:
    return _csv(TRIAL_COLUMNS, _trial_rows(result))


def results_document(result) -> dict:
    summaries = [result] if isinstance(result, ExperimentSummary) else result.summaries
    return {
        "format": "spgpnav-results",
        "version": CSV_VERSION,
        "experiments": [
            {"scenario": s.scenario, "agents": s.n_agents, "method": s.method,
             "delta": s.delta, "trials": s.trials, "seed": s.seed,
             "stats": {m: {"mean": s.stats[m][0], "std": s.stats[m][1]} for m in METRICS},
             "records": [dict(seed=rec.seed, **asdict(rec.result)) for rec in s.records]}
            for s in summaries
        ],
    }


def results_json(result) -> str:
    return json.dumps(results_document(result), indent=2, sort_keys=True,
                      default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise HarnessError(f"cannot write {path}: {exc.strerror or exc}") from exc


def trials_path(path: str) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}_trials{ext or '.csv'}"


def emit_results(result, path: str, fmt: str = "csv") -> list[str]:
    """Write the aggregate file and, for CSV, the per-trial file next to it.

    Returns the paths written.
    """
    if fmt == "csv":
        write_text(path, results_csv(result))
        extra = trials_path(path)
        write_text(extra, trials_csv(result))
        return [path, extra]
    if fmt == "json":
        write_text(path, results_json(result))
        return [path]
    raise HarnessError(f"unknown format {fmt!r}; expected csv or json")


# ---------------------------------------------------------------- trajectory logs

def save_log(log: TrajectoryLog, config: ScenarioConfig, path: str) -> None:
    """Store a trial's log with its scenario so it can be rendered later."""
    events = [[int(s), str(k), int(a), None if p is None else _plain(p)]
              for s, k, a, p in log.events]
    try:
        with open(path, "wb") as fh:
            np.savez_compressed(
                fh, dt=log.dt, t_max=log.t_max, ids=np.asarray(log.ids),
                original_goals=log.original_goals, positions=log.positions,
                velocities=log.velocities, controls=log.controls, nominals=log.nominals,
                modes=log.modes, goals=log.goals, min_pair_h=log.min_pair_h,
                min_obstacle_h=log.min_obstacle_h, events=json.dumps(events),
                scenario=json.dumps(to_document(config), sort_keys=True))
    except OSError as exc:
        raise HarnessError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _plain(p):
    if isinstance(p, (tuple, list, np.ndarray)):
        return [float(v) for v in p]
    return float(p)


def load_log(path: str) -> tuple[TrajectoryLog, ScenarioConfig]:
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise HarnessError(f"cannot read log {path}: {exc}") from exc
    with data:
        try:
            events = [(s, k, a, tuple(p) if isinstance(p, list) else p)
                      for s, k, a, p in json.loads(str(data["events"]))]
            log = TrajectoryLog(
                dt=float(data["dt"]), t_max=int(data["t_max"]),
                ids=[int(i) for i in data["ids"]], original_goals=data["original_goals"],
                positions=data["positions"], velocities=data["velocities"],
                controls=data["controls"], nominals=data["nominals"], modes=data["modes"],
                goals=data["goals"], min_pair_h=data["min_pair_h"],
                min_obstacle_h=data["min_obstacle_h"], events=events)
            config = from_document(json.loads(str(data["scenario"])))
        except KeyError as exc:
            raise HarnessError(f"{path}: not a trajectory log (missing {exc})") from exc
    return log, config


def read_sweep_curve(path: str) -> list[tuple[float, float, float]]:
    """``(delta, mean makespan, std)`` from a sweep results file (CSV or JSON)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise HarnessError(f"cannot read {path}: {exc.strerror or exc}") from exc
    curve = []
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
            for e in doc["experiments"]:
                s = e["stats"]["makespan"]
                curve.append((float(e["delta"]), float(s["mean"]), float(s["std"])))
        except (ValueError, KeyError, TypeError) as exc:
            raise HarnessError(f"{path}: not a results document ({exc})") from exc
    else:
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise HarnessError(f"{path}: header must be {','.join(CSV_HEADER)}")
        for row in reader:
            metric, _, delta = row["metric"].partition("@delta=")
            if metric == "makespan" and delta:
                curve.append((float(delta), float(row["mean"]), float(row["std"])))
    if not curve:
        raise HarnessError(f"{path}: no makespan sweep rows found")
    return curve
