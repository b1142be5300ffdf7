"""Experiment configuration, batch running, CSV output, and snapshots.

An experiment is a JSON config naming an environment (stationary arms or a
synthetic CFG target), a list of schedulers, and trial/step counts.  Trial
``i`` always runs with seed ``base_seed + i``, independently of worker
count, so results are reproducible byte for byte.  Campaigns can be
snapshotted at a chosen step and resumed later; the resumed continuation
replays the exact trajectory the uninterrupted run would have taken.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, SnapshotError
from .metrics import auc, bootstrap_ci, coverage_timeline, mann_whitney_u
from .schedulers import SCHEDULER_NAMES, make_scheduler
from .simulator import (
    BernoulliArmsEnv,
    BernoulliTrialRunner,
    CfgTarget,
    Edge,
    FuzzCampaignRunner,
    TrialLog,
    load_target,
)

__all__ = [
    "ExperimentConfig",
    "load_config",
    "ExperimentResult",
    "run_experiment",
    "write_snapshot",
    "read_snapshot",
    "resume_experiment",
    "TRIAL_LOG_COLUMNS",
    "SUMMARY_COLUMNS",
    "SNAPSHOT_VERSION",
]

TRIAL_LOG_COLUMNS = (
    "step",
    "scheduler",
    "trial",
    "action",
    "interesting",
    "regret",
    "covered_features",
    "corpus_size",
    "select_ops",
    "update_ops",
)

SUMMARY_COLUMNS = (
    "scheduler",
    "trials",
    "final_cov_mean",
    "final_cov_ci_lo",
    "final_cov_ci_hi",
    "auc_mean",
    "auc_ci_lo",
    "auc_ci_hi",
    "mean_final_regret",
    "mwu_p_vs_baseline",
)

SNAPSHOT_VERSION = 1

_CONFIG_KEYS = {
    "environment",
    "schedulers",
    "trials",
    "steps",
    "base_seed",
    "output_dir",
    "sampling_interval",
    "interesting_policy",
}

_POLICIES = ("new-feature", "new-bucket")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description."""

    arms: tuple[float, ...] | None
    target: CfgTarget | None
    schedulers: tuple[str, ...]
    trials: int
    steps: int
    base_seed: int
    output_dir: str
    sampling_interval: int
    interesting_policy: str

    @property
    def k_size(self) -> int:
        return len(self.arms) if self.arms is not None else self.target.k_size

    def env_payload(self) -> dict[str, Any]:
        """Self-contained environment description for snapshots."""
        if self.arms is not None:
            return {"arms": list(self.arms)}
        return {
            "edges": [
                {
                    "id": e.id,
                    "prereqs": sorted(e.prereqs),
                    "p": e.p,
                    "time_range": list(e.time_range),
                    "size_range": list(e.size_range),
                }
                for e in self.target.edges
            ]
        }


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _parse_environment(env: Any, base_dir: Path) -> tuple[tuple[float, ...] | None, CfgTarget | None]:
    _require(isinstance(env, dict), "'environment' must be an object")
    keys = set(env)
    if keys == {"arms"}:
        arms = env["arms"]
        _require(
            isinstance(arms, list) and arms and all(isinstance(a, (int, float)) for a in arms),
            "'environment.arms' must be a non-empty list of numbers",
        )
        _require(all(0.0 <= float(a) <= 1.0 for a in arms), "arm probabilities must lie in [0, 1]")
        return tuple(float(a) for a in arms), None
    if keys == {"target"}:
        _require(isinstance(env["target"], str), "'environment.target' must be a path string")
        path = Path(env["target"])
        if not path.is_absolute():
            path = base_dir / path
        return None, load_target(path)
    if keys == {"edges"}:
        edges = tuple(
            Edge(
                id=int(e["id"]),
                prereqs=frozenset(int(x) for x in e["prereqs"]),
                p=float(e["p"]),
                time_range=tuple(e["time_range"]),
                size_range=tuple(e["size_range"]),
            )
            for e in env["edges"]
        )
        return None, CfgTarget(edges)
    raise ConfigError(
        "'environment' must contain exactly one of 'arms', 'target', or 'edges'"
    )


def parse_config(raw: Any, base_dir: Path | str = ".") -> ExperimentConfig:
    """Validate a raw config mapping; unknown keys are rejected."""
    _require(isinstance(raw, dict), "config must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    for key in ("environment", "schedulers", "trials", "steps"):
        _require(key in raw, f"missing required config key: {key!r}")

    arms, target = _parse_environment(raw["environment"], Path(base_dir))

    schedulers = raw["schedulers"]
    _require(
        isinstance(schedulers, list) and schedulers and all(isinstance(s, str) for s in schedulers),
        "'schedulers' must be a non-empty list of scheduler names",
    )
    for name in schedulers:
        _require(
            name in SCHEDULER_NAMES,
            f"unknown scheduler {name!r}; expected one of {', '.join(SCHEDULER_NAMES)}",
        )
    _require(len(set(schedulers)) == len(schedulers), "'schedulers' must not repeat names")

    trials = raw["trials"]
    steps = raw["steps"]
    _require(isinstance(trials, int) and trials >= 1, "'trials' must be an integer >= 1")
    _require(isinstance(steps, int) and steps >= 1, "'steps' must be an integer >= 1")

    base_seed = raw.get("base_seed", 0)
    _require(isinstance(base_seed, int), "'base_seed' must be an integer")

    output_dir = raw.get("output_dir", "results")
    _require(isinstance(output_dir, str) and output_dir, "'output_dir' must be a path string")

    interval = raw.get("sampling_interval", 100)
    _require(isinstance(interval, int) and interval >= 1, "'sampling_interval' must be >= 1")

    policy = raw.get("interesting_policy", "new-feature")
    _require(policy in _POLICIES, f"'interesting_policy' must be one of {_POLICIES}")

    return ExperimentConfig(
        arms=arms,
        target=target,
        schedulers=tuple(schedulers),
        trials=trials,
        steps=steps,
        base_seed=base_seed,
        output_dir=output_dir,
        sampling_interval=interval,
        interesting_policy=policy,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and validate an experiment config file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return parse_config(raw, path.parent)


# ----------------------------------------------------------------------
# running

def _build_runner(config: ExperimentConfig, scheduler_name: str, trial: int):
    seed = config.base_seed + trial
    scheduler = make_scheduler(scheduler_name, config.k_size, seed)
    if config.arms is not None:
        return BernoulliTrialRunner(
            BernoulliArmsEnv(config.arms), scheduler, config.steps, seed
        )
    return FuzzCampaignRunner(
        config.target, scheduler, config.steps, seed, config.interesting_policy
    )


def _run_task(args: tuple) -> tuple[str, int, TrialLog, dict | None]:
    config, scheduler_name, trial, snapshot_at = args
    runner = _build_runner(config, scheduler_name, trial)
    state = None
    if snapshot_at is not None:
        runner.run_to(snapshot_at)
        state = runner.state_dict()
    runner.run_to()
    return scheduler_name, trial, runner.take_log(trial), state


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    logs: dict[tuple[str, int], TrialLog]
    summary: list[dict[str, Any]]
    output_dir: Path
    snapshot_path: Path | None


def _final_window(steps: int) -> int:
    return max(1, steps // 10)


def _summarize(config: ExperimentConfig, logs: dict[tuple[str, int], TrialLog]) -> list[dict[str, Any]]:
    baseline = config.schedulers[0]
    window = _final_window(config.steps)
    rows = []
    finals_by_sched: dict[str, list[int]] = {}
    for name in config.schedulers:
        finals_by_sched[name] = [
            int(logs[(name, i)].covered[-1]) for i in range(config.trials)
        ]
    for name in config.schedulers:
        finals = finals_by_sched[name]
        aucs = []
        regrets = []
        for i in range(config.trials):
            log = logs[(name, i)]
            timeline = coverage_timeline(log, config.sampling_interval)
            aucs.append(auc(timeline) if len(timeline) >= 2 else 0.0)
            regrets.append(float(log.regret[-window:].mean()))
        cov_lo, cov_hi = bootstrap_ci(finals, seed=config.base_seed)
        auc_lo, auc_hi = bootstrap_ci(aucs, seed=config.base_seed)
        _, p = mann_whitney_u(finals, finals_by_sched[baseline])
        rows.append(
            {
                "scheduler": name,
                "trials": config.trials,
                "final_cov_mean": float(np.mean(finals)),
                "final_cov_ci_lo": cov_lo,
                "final_cov_ci_hi": cov_hi,
                "auc_mean": float(np.mean(aucs)),
                "auc_ci_lo": auc_lo,
                "auc_ci_hi": auc_hi,
                "mean_final_regret": float(np.mean(regrets)),
                "mwu_p_vs_baseline": p,
            }
        )
    return rows


def _format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trial_csv(path: Path, log: TrialLog) -> None:
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_LOG_COLUMNS)
        for i in range(len(log)):
            writer.writerow(
                [
                    int(log.steps[i]),
                    log.scheduler,
                    log.trial,
                    int(log.actions[i]),
                    int(log.interesting[i]),
                    repr(float(log.regret[i])),
                    int(log.covered[i]),
                    int(log.corpus_size[i]),
                    int(log.select_ops[i]),
                    int(log.update_ops[i]),
                ]
            )


def write_summary_csv(path: Path, rows: list[dict[str, Any]]) -> None:
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in SUMMARY_COLUMNS])


def trial_csv_name(scheduler: str, trial: int, resumed: bool = False) -> str:
    suffix = "-resumed" if resumed else ""
    return f"{scheduler}-trial{trial:04d}{suffix}.csv"


def run_experiment(
    config: ExperimentConfig,
    jobs: int = 1,
    snapshot_at: int | None = None,
) -> ExperimentResult:
    """Run all (scheduler, trial) pairs, write CSVs, optionally snapshot."""
    if snapshot_at is not None and not 1 <= snapshot_at < config.steps:
        raise ConfigError("snapshot step must satisfy 1 <= snapshot_at < steps")
    tasks = [
        (config, name, trial, snapshot_at)
        for name in config.schedulers
        for trial in range(config.trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_task, tasks))
    else:
        outcomes = [_run_task(t) for t in tasks]

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logs: dict[tuple[str, int], TrialLog] = {}
    states = []
    for name, trial, log, state in outcomes:
        logs[(name, trial)] = log
        write_trial_csv(out_dir / trial_csv_name(name, trial), log)
        if state is not None:
            states.append({"scheduler": name, "trial": trial, "state": state})

    summary = _summarize(config, logs)
    write_summary_csv(out_dir / "summary.csv", summary)

    snapshot_path = None
    if snapshot_at is not None:
        snapshot_path = out_dir / f"snapshot-step{snapshot_at}.json"
        payload = {
            "config": {
                "environment": config.env_payload(),
                "schedulers": list(config.schedulers),
                "trials": config.trials,
                "steps": config.steps,
                "base_seed": config.base_seed,
                "output_dir": config.output_dir,
                "sampling_interval": config.sampling_interval,
                "interesting_policy": config.interesting_policy,
            },
            "snapshot_step": snapshot_at,
            "runners": states,
        }
        write_snapshot(snapshot_path, payload)

    return ExperimentResult(config, logs, summary, out_dir, snapshot_path)


# ----------------------------------------------------------------------
# snapshots

def _canonical(payload: dict[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def write_snapshot(path: str | Path, payload: dict[str, Any]) -> None:
    body = {
        "version": SNAPSHOT_VERSION,
        "checksum": hashlib.sha256(_canonical(payload).encode("ascii")).hexdigest(),
        "payload": payload,
    }
    Path(path).write_text(json.dumps(body), encoding="ascii")


def read_snapshot(path: str | Path) -> dict[str, Any]:
    try:
        body = json.loads(Path(path).read_text(encoding="ascii"))
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot: {exc}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SnapshotError(f"snapshot is not valid JSON: {exc}") from exc
    if not isinstance(body, dict) or set(body) != {"version", "checksum", "payload"}:
        raise SnapshotError("snapshot file has an unexpected layout")
    if body["version"] != SNAPSHOT_VERSION:
        raise SnapshotError(
            f"snapshot version {body['version']!r} is not supported (expected {SNAPSHOT_VERSION})"
        )
    digest = hashlib.sha256(_canonical(body["payload"]).encode("ascii")).hexdigest()
    if digest != body["checksum"]:
        raise SnapshotError("snapshot checksum mismatch; the file is corrupt")
    return body["payload"]


def _resume_task(args: tuple) -> tuple[str, int, TrialLog]:
    config, entry = args
    name, trial, state = entry["scheduler"], entry["trial"], entry["state"]
    runner = _build_runner(config, name, trial)
    runner.load_state(state)
    runner.run_to()
    return name, trial, runner.take_log(trial)


def resume_experiment(snapshot_path: str | Path, jobs: int = 1) -> ExperimentResult:
    """Resume a snapshotted campaign; writes suffix logs for each trial."""
    payload = read_snapshot(snapshot_path)
    config = parse_config(payload["config"], Path(snapshot_path).parent)
    tasks = [(config, entry) for entry in payload["runners"]]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_resume_task, tasks))
    else:
        outcomes = [_resume_task(t) for t in tasks]

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logs: dict[tuple[str, int], TrialLog] = {}
    for name, trial, log in outcomes:
        logs[(name, trial)] = log
        write_trial_csv(out_dir / trial_csv_name(name, trial, resumed=True), log)
    return ExperimentResult(config, logs, [], out_dir, None)
