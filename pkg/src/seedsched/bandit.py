"""Beta-Bernoulli posterior bookkeeping and feature selection.

Each coverage feature k keeps a Beta(alpha_k, beta_k) posterior over "how
often does exercising this feature lead to something new".  An executed
input pays reward 1 to every feature it covers when the input was
interesting and reward 0 to every feature it covers otherwise; features the
input did not touch are left alone.  Selection draws a success-rate sample
theta_k ~ Beta(alpha_k, beta_k) per feature and, depending on the variant,
damps it by a rareness factor so that features whose inputs have already
produced many discoveries stop monopolising the schedule:

* ``rare-minus``  picks argmax theta_k (no rareness correction);
* ``rare-plus``   picks argmax phi_k * theta_k with the deterministic
  correction phi_k = (alpha_k + beta_k) / (alpha_k**2 + alpha_k + beta_k);
* ``sample``      picks argmax psi_k * theta_k with psi_k drawn from
  Beta(alpha_k + beta_k, alpha_k**2), whose mean is phi_k.

phi decays like 1/alpha once alpha dominates beta and tends to 1 when beta
dominates, so the correction only bites on frequently rewarded features.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyCorpusError, SnapshotError
from .rng import SeededRng

__all__ = [
    "Variant",
    "PosteriorState",
    "init_posterior",
    "compute_reward",
    "update_posterior",
    "sample_theta",
    "sample_psi",
    "expected_phi",
    "compute_pbar",
    "select_action",
    "save_posterior",
    "load_posterior",
]

POSTERIOR_FORMAT_TAG = "seedsched-posterior-v1"


class Variant(str, enum.Enum):
    """Selection rule used by the adaptive scheduler."""

    RARE_MINUS = "rare-minus"
    RARE_PLUS = "rare-plus"
    SAMPLE = "sample"

    @classmethod
    def parse(cls, value: "Variant | str") -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            names = ", ".join(v.value for v in cls)
            raise ValueError(f"unknown variant {value!r}; expected one of {names}") from None


@dataclass
class PosteriorState:
    """Per-feature Beta posterior parameters, stored as float64 vectors."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self) -> None:
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 1:
            raise DimensionMismatch("alpha and beta must be 1-D vectors of equal length")
        if self.alpha.size == 0:
            raise ValueError("feature space must hold at least one feature")
        if np.any(self.alpha < 1.0) or np.any(self.beta < 1.0):
            raise ValueError("posterior parameters start at 1 and never drop below it")

    @property
    def k_size(self) -> int:
        return int(self.alpha.size)

    def copy(self) -> "PosteriorState":
        return PosteriorState(self.alpha.copy(), self.beta.copy())


def init_posterior(k_size: int) -> PosteriorState:
    """Uniform Beta(1, 1) posterior over ``k_size`` features."""
    if k_size <= 0:
        raise ValueError("k_size must be a positive integer")
    return PosteriorState(np.ones(k_size), np.ones(k_size))


def compute_reward(coverage: np.ndarray, interesting: bool) -> dict[int, int]:
    """Per-feature reward for one executed input.

    Features with a nonzero hit count receive 1 if the input was interesting
    and 0 otherwise; untouched features are absent from the result.
    """
    cov = np.asarray(coverage)
    if cov.ndim != 1:
        raise DimensionMismatch("coverage map must be a 1-D vector")
    bit = 1 if interesting else 0
    return {int(k): bit for k in np.flatnonzero(cov)}


def update_posterior(state: PosteriorState, reward: dict[int, int]) -> PosteriorState:
    """Conjugate update: alpha_k += r_k, beta_k += 1 - r_k per present feature."""
    k_size = state.k_size
    for k, r in reward.items():
        if not 0 <= k < k_size:
            raise DimensionMismatch(f"feature index {k} outside [0, {k_size})")
        if r not in (0, 1):
            raise ValueError(f"reward for feature {k} must be 0 or 1, got {r!r}")
        state.alpha[k] += r
        state.beta[k] += 1 - r
    return state


def sample_theta(state: PosteriorState, rng: SeededRng) -> np.ndarray:
    """One success-rate draw theta_k ~ Beta(alpha_k, beta_k) per feature."""
    return rng.beta(state.alpha, state.beta)


def sample_psi(state: PosteriorState, rng: SeededRng) -> np.ndarray:
    """One rareness draw psi_k ~ Beta(alpha_k + beta_k, alpha_k**2) per feature."""
    return rng.beta(state.alpha + state.beta, state.alpha**2)


def expected_phi(state: PosteriorState) -> np.ndarray:
    """Deterministic rareness factor, the mean of the psi distribution."""
    total = state.alpha + state.beta
    return total / (state.alpha**2 + total)


def compute_pbar(state: PosteriorState) -> np.ndarray:
    """Posterior means normalized across features.

    Reporting quantity only; selection never consumes it.
    """
    means = state.alpha / (state.alpha + state.beta)
    return means / means.sum()


def select_action(
    state: PosteriorState,
    variant: Variant | str,
    selectable: np.ndarray,
    rng: SeededRng,
) -> int:
    """Pick the feature with the highest selection score among selectable ones.

    Scores for all features are drawn (selectable or not) so that the random
    stream consumed per call depends only on the feature-space size; the mask
    is applied afterwards.  Ties resolve to the smallest index.
    """
    variant = Variant.parse(variant)
    mask = np.asarray(selectable, dtype=bool)
    if mask.shape != (state.k_size,):
        raise DimensionMismatch("selectable mask length must equal k_size")
    if not mask.any():
        raise EmptyCorpusError("no selectable feature; seed the corpus first")
    if variant is Variant.RARE_MINUS:
        scores = sample_theta(state, rng)
    elif variant is Variant.RARE_PLUS:
        scores = expected_phi(state) * sample_theta(state, rng)
    else:
        # theta and psi come from one fused draw; same distributions as
        # sample_theta/sample_psi but a single rejection pass per step
        a = np.concatenate([state.alpha, state.alpha + state.beta])
        b = np.concatenate([state.beta, state.alpha * state.alpha])
        draws = rng.beta(a, b)
        k = state.k_size
        scores = draws[:k] * draws[k:]
    masked = np.where(mask, scores, -np.inf)
    return int(np.argmax(masked))


# ----------------------------------------------------------------------
# posterior snapshots

def save_posterior(state: PosteriorState, path: str | Path) -> None:
    """Write (k_size, alpha, beta) as tagged text; floats round-trip exactly."""
    lines = [POSTERIOR_FORMAT_TAG, str(state.k_size)]
    lines.append(" ".join(repr(float(v)) for v in state.alpha))
    lines.append(" ".join(repr(float(v)) for v in state.beta))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_posterior(path: str | Path) -> PosteriorState:
    """Read a posterior snapshot written by :func:`save_posterior`."""
    try:
        lines = Path(path).read_text(encoding="ascii").splitlines()
    except OSError as exc:
        raise SnapshotError(f"cannot read posterior snapshot: {exc}") from exc
    if len(lines) != 4 or lines[0] != POSTERIOR_FORMAT_TAG:
        raise SnapshotError("not a recognized posterior snapshot")
    try:
        k_size = int(lines[1])
        alpha = np.array([float(v) for v in lines[2].split()], dtype=np.float64)
        beta = np.array([float(v) for v in lines[3].split()], dtype=np.float64)
    except ValueError as exc:
        raise SnapshotError(f"malformed posterior snapshot: {exc}") from exc
    if alpha.size != k_size or beta.size != k_size:
        raise SnapshotError("posterior snapshot length disagrees with its header")
    return PosteriorState(alpha, beta)
