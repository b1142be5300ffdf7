"""Seed schedulers: the adaptive bandit family and the baselines.

Every scheduler speaks the same two-call protocol:

* ``observe(record, coverage, interesting)`` feeds back one execution:
  the coverage map it produced and whether it was classified interesting.
  Interesting inputs are retained in the corpus.
* ``next()`` returns the id of the retained input to fuzz next and
  increments its ``times_fuzzed`` counter.

The bandit family (``rare-minus``, ``rare-plus``, ``sample``) keeps a Beta
posterior per feature, updates it on every observation whether or not the
feature is currently selectable, and schedules the favored input of the
feature chosen by :func:`seedsched.bandit.select_action`.  ``greedy`` uses
the same bookkeeping but picks the feature with the highest posterior mean.
``uniform`` and ``round-robin`` ignore the posterior entirely and draw from
the retained inputs directly.

Constructors take only the feature-space size and a seed; there is nothing
to tune.  Op-cost counters track abstract work per call (posterior entries
touched plus samples drawn) so scheduling overhead can be audited without a
wall clock.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from . import bandit
from .bandit import PosteriorState, Variant, init_posterior
from .coverage import (
    FavoredTable,
    GlobalCoverage,
    InputRecord,
    absorb,
    selectable_features,
    update_favored,
)
from .errors import DimensionMismatch, EmptyCorpusError
from .rng import SeededRng

__all__ = [
    "Scheduler",
    "TScheduler",
    "GreedyScheduler",
    "UniformScheduler",
    "RoundRobinScheduler",
    "SCHEDULER_NAMES",
    "make_scheduler",
]


class Scheduler:
    """Shared corpus and coverage bookkeeping for all schedulers."""

    name: str = "base"

    def __init__(self, k_size: int, seed: int) -> None:
        if k_size <= 0:
            raise ValueError("k_size must be a positive integer")
        self.k_size = int(k_size)
        self.seed = int(seed)
        self.rng = SeededRng(seed, stream=0)
        self.corpus: dict[str, InputRecord] = {}
        self.insertion_order: list[str] = []
        self.global_coverage = GlobalCoverage.empty(k_size)
        self.observations = 0
        self.last_action: int | None = None
        self.last_select_ops = 0
        self.last_update_ops = 0
        self.total_select_ops = 0
        self.total_update_ops = 0

    # -- feedback ------------------------------------------------------

    def observe(self, record: InputRecord, coverage: np.ndarray, interesting: bool) -> None:
        cov = np.asarray(coverage)
        if cov.shape != (self.k_size,):
            raise DimensionMismatch("coverage map length must equal k_size")
        touched = int(np.count_nonzero(cov))
        self._learn(record, cov, interesting)
        absorb(self.global_coverage, cov)
        if interesting and record.id not in self.corpus:
            self.corpus[record.id] = record
            self.insertion_order.append(record.id)
        self._retain(record, interesting)
        self.observations += 1
        self.last_update_ops = touched
        self.total_update_ops += touched

    def _learn(self, record: InputRecord, cov: np.ndarray, interesting: bool) -> None:
        """Posterior update hook; baselines without a posterior skip it."""

    def _retain(self, record: InputRecord, interesting: bool) -> None:
        """Favored-table hook for schedulers that keep one."""

    # -- scheduling ----------------------------------------------------

    def next(self) -> str:
        input_id, action, ops = self._choose()
        self.corpus[input_id].times_fuzzed += 1
        self.last_action = action
        self.last_select_ops = ops
        self.total_select_ops += ops
        return input_id

    def _choose(self) -> tuple[str, int, int]:
        raise NotImplementedError

    # -- persistence ---------------------------------------------------

    def state_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "k_size": self.k_size,
            "seed": self.seed,
            "rng": self.rng.state_dict(),
            "corpus": [
                {
                    "id": r.id,
                    "size": r.size,
                    "exec_time": r.exec_time,
                    "features": sorted(r.features),
                    "times_fuzzed": r.times_fuzzed,
                }
                for r in (self.corpus[i] for i in self.insertion_order)
            ],
            "total_hits": [int(v) for v in self.global_coverage.total_hits],
            "seen_buckets": [sorted(s) for s in self.global_coverage.seen_buckets],
            "observations": self.observations,
            "total_select_ops": self.total_select_ops,
            "total_update_ops": self.total_update_ops,
        }

    def load_state(self, state: dict[str, Any]) -> None:
        if state.get("name") != self.name or state.get("k_size") != self.k_size:
            raise ValueError("scheduler state does not match this scheduler")
        self.rng.load_state(state["rng"])
        self.corpus = {}
        self.insertion_order = []
        for row in state["corpus"]:
            rec = InputRecord(
                id=row["id"],
                size=row["size"],
                exec_time=row["exec_time"],
                features=frozenset(row["features"]),
                times_fuzzed=row["times_fuzzed"],
            )
            self.corpus[rec.id] = rec
            self.insertion_order.append(rec.id)
        self.global_coverage = GlobalCoverage(
            np.array(state["total_hits"], dtype=np.int64),
            [set(s) for s in state["seen_buckets"]],
        )
        self.observations = state["observations"]
        self.total_select_ops = state["total_select_ops"]
        self.total_update_ops = state["total_update_ops"]


class _PosteriorScheduler(Scheduler):
    """Schedulers that maintain the per-feature Beta posterior."""

    def __init__(self, k_size: int, seed: int) -> None:
        super().__init__(k_size, seed)
        self.posterior: PosteriorState = init_posterior(k_size)
        self.favored = FavoredTable(k_size)

    def _learn(self, record: InputRecord, cov: np.ndarray, interesting: bool) -> None:
        reward = bandit.compute_reward(cov, interesting)
        bandit.update_posterior(self.posterior, reward)

    def _retain(self, record: InputRecord, interesting: bool) -> None:
        if interesting:
            update_favored(self.favored, record)

    def _favored_input(self, feature: int) -> str:
        return self.favored.input_for(feature)

    def state_dict(self) -> dict[str, Any]:
        state = super().state_dict()
        state["alpha"] = [repr(float(v)) for v in self.posterior.alpha]
        state["beta"] = [repr(float(v)) for v in self.posterior.beta]
        state["favored"] = {
            str(k): [iid, repr(float(w))] for k, (iid, w) in sorted(self.favored.entries.items())
        }
        return state

    def load_state(self, state: dict[str, Any]) -> None:
        super().load_state(state)
        self.posterior = PosteriorState(
            np.array([float(v) for v in state["alpha"]]),
            np.array([float(v) for v in state["beta"]]),
        )
        self.favored = FavoredTable(
            self.k_size,
            {int(k): (iid, float(w)) for k, (iid, w) in state["favored"].items()},
        )


class TScheduler(_PosteriorScheduler):
    """Thompson-style scheduler over features, with optional rareness damping."""

    def __init__(self, k_size: int, variant: Variant | str, seed: int) -> None:
        super().__init__(k_size, seed)
        self.variant = Variant.parse(variant)
        self.name = self.variant.value

    def _choose(self) -> tuple[str, int, int]:
        mask = selectable_features(self.favored)
        action = bandit.select_action(self.posterior, self.variant, mask, self.rng)
        # theta draws (K) + argmax scan (K), plus K psi draws or phi reads
        ops = 2 * self.k_size
        if self.variant is not Variant.RARE_MINUS:
            ops += self.k_size
        return self._favored_input(action), action, ops


class GreedyScheduler(_PosteriorScheduler):
    """Argmax of the posterior mean; smallest index wins ties."""

    name = "greedy"

    def __init__(self, k_size: int, seed: int) -> None:
        super().__init__(k_size, seed)

    def _choose(self) -> tuple[str, int, int]:
        mask = selectable_features(self.favored)
        if not mask.any():
            raise EmptyCorpusError("no selectable feature; seed the corpus first")
        means = self.posterior.alpha / (self.posterior.alpha + self.posterior.beta)
        action = int(np.argmax(np.where(mask, means, -np.inf)))
        return self._favored_input(action), action, 2 * self.k_size


class UniformScheduler(Scheduler):
    """Uniformly random over retained inputs."""

    name = "uniform"

    def __init__(self, k_size: int, seed: int) -> None:
        super().__init__(k_size, seed)

    def _choose(self) -> tuple[str, int, int]:
        if not self.insertion_order:
            raise EmptyCorpusError("no retained input; seed the corpus first")
        idx = int(self.rng.integers(0, len(self.insertion_order)))
        return self.insertion_order[idx], idx, 1


class RoundRobinScheduler(Scheduler):
    """Cycles through retained inputs in insertion order."""

    name = "round-robin"

    def __init__(self, k_size: int, seed: int) -> None:
        super().__init__(k_size, seed)
        self.cursor = 0

    def _choose(self) -> tuple[str, int, int]:
        if not self.insertion_order:
            raise EmptyCorpusError("no retained input; seed the corpus first")
        idx = self.cursor % len(self.insertion_order)
        self.cursor = idx + 1
        return self.insertion_order[idx], idx, 1

    def state_dict(self) -> dict[str, Any]:
        state = super().state_dict()
        state["cursor"] = self.cursor
        return state

    def load_state(self, state: dict[str, Any]) -> None:
        super().load_state(state)
        self.cursor = state["cursor"]


SCHEDULER_NAMES = (
    "rare-minus",
    "rare-plus",
    "sample",
    "greedy",
    "uniform",
    "round-robin",
)


def make_scheduler(name: str, k_size: int, seed: int) -> Scheduler:
    """Build a scheduler from its registry name."""
    if name in (Variant.RARE_MINUS.value, Variant.RARE_PLUS.value, Variant.SAMPLE.value):
        return TScheduler(k_size, name, seed)
    if name == "greedy":
        return GreedyScheduler(k_size, seed)
    if name == "uniform":
        return UniformScheduler(k_size, seed)
    if name == "round-robin":
        return RoundRobinScheduler(k_size, seed)
    raise ValueError(f"unknown scheduler {name!r}; expected one of {', '.join(SCHEDULER_NAMES)}")
