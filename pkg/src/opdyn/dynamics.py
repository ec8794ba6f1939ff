"""Population sampling and simulation of mediated opinion updates.

Each step applies x(t+1) = lam * x(0) + (1 - lam) * W @ y(t), where
y(t) equals f(x(t)) on adopter nodes and x(t) elsewhere. Updates are
synchronous and pure; a run's trajectory records the population mean
and the largest individual change at every step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import ValidityError
from .graph import InfluenceMatrix
from .transform import Transformation

# A run counts as settled when the average-opinion series moves less
# than this between consecutive steps.
AVG_STABLE_TOL = 1e-4


@dataclass(frozen=True)
class ScenarioConfig:
    """Protocol parameters for one simulated population.

    Innate opinions come from a two-group mixture: with probability
    kappa a node is positive-leaning (truncated Gaussian around
    group_means[0]), otherwise negative-leaning (around group_means[1]),
    both with sd group_sd. Stubbornness is truncated Gaussian around
    lambda_mean with sd lambda_sd. A fraction phi of nodes adopt the
    transformation for everything they express.
    """

    lambda_mean: float
    kappa: float
    phi: float
    lambda_sd: float = 0.05
    steps: int = 100
    seeds: tuple[int, ...] = tuple(range(20))
    group_means: tuple[float, float] = (0.75, 0.25)
    group_sd: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.lambda_mean < 1.0:
            raise ValidityError(f"lambda_mean must lie in (0, 1), got {self.lambda_mean!r}")
        if self.lambda_sd < 0.0:
            raise ValidityError(f"lambda_sd must be >= 0, got {self.lambda_sd!r}")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValidityError(f"kappa must lie in [0, 1], got {self.kappa!r}")
        if not 0.0 <= self.phi <= 1.0:
            raise ValidityError(f"phi must lie in [0, 1], got {self.phi!r}")
        if self.steps < 0:
            raise ValidityError(f"steps must be >= 0, got {self.steps!r}")
        if len(self.seeds) == 0:
            raise ValidityError("seed list must be nonempty")
        for m in self.group_means:
            if not 0.0 <= m <= 1.0:
                raise ValidityError(f"group means must lie in [0, 1], got {m!r}")
        if self.group_sd < 0.0:
            raise ValidityError(f"group_sd must be >= 0, got {self.group_sd!r}")


@dataclass(frozen=True, eq=False)
class PopulationState:
    """Innate opinions, stubbornness, and the adopter mask for one run."""

    innate: np.ndarray
    stubbornness: np.ndarray
    adopters: np.ndarray

    def __post_init__(self):
        n = self.innate.shape[0]
        if self.stubbornness.shape != (n,) or self.adopters.shape != (n,):
            raise ValidityError("population vectors must have equal length")
        if n and (self.innate.min() < 0.0 or self.innate.max() > 1.0):
            raise ValidityError("innate opinions must lie in [0, 1]")
        if n and (self.stubbornness.min() <= 0.0 or self.stubbornness.max() >= 1.0):
            raise ValidityError("stubbornness must lie strictly inside (0, 1)")
        if self.adopters.dtype != np.bool_:
            raise ValidityError("adopter mask must be boolean")

    @property
    def n(self) -> int:
        return int(self.innate.shape[0])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Per-step record of one simulation run.

    avg_opinion has steps + 1 entries (t = 0 included); max_step_change
    has one entry per step; final is the opinion vector after the last
    step.
    """

    avg_opinion: np.ndarray
    max_step_change: np.ndarray
    final: np.ndarray

    def __post_init__(self):
        if self.avg_opinion.ndim != 1 or self.max_step_change.ndim != 1:
            raise ValidityError("trajectory series must be one-dimensional")
        if self.avg_opinion.shape[0] != self.max_step_change.shape[0] + 1:
            raise ValidityError(
                "avg_opinion needs one more entry than max_step_change, got "
                f"{self.avg_opinion.shape[0]} and {self.max_step_change.shape[0]}"
            )
        if self.final.size and (self.final.min() < 0.0 or self.final.max() > 1.0):
            raise ValidityError("final opinions must lie in [0, 1]")

    @property
    def steps(self) -> int:
        return int(self.max_step_change.shape[0])

    def avg_change(self) -> np.ndarray:
        """Absolute per-step change of the average-opinion series."""
        return np.abs(np.diff(self.avg_opinion))

    def stabilized(self, tol: float = AVG_STABLE_TOL) -> bool:
        """True when the average opinion settled by the final step."""
        changes = self.avg_change()
        return bool(changes.size == 0 or changes[-1] < tol)


def _truncated(rng: np.random.Generator, mean: float, sd: float, count: int,
               strict: bool = False) -> np.ndarray:
    """Gaussian draws resampled per element until inside the unit interval."""
    if sd == 0.0:
        if strict and not 0.0 < mean < 1.0:
            raise ValidityError(
                f"sd = 0 with mean {mean!r} can never land strictly inside (0, 1)"
            )
        return np.full(count, float(mean))
    v = rng.normal(mean, sd, count)
    while True:
        bad = ((v <= 0.0) | (v >= 1.0)) if strict else ((v < 0.0) | (v > 1.0))
        if not bad.any():
            return v
        v[bad] = rng.normal(mean, sd, int(bad.sum()))


def sample_truncated_gaussian(mean: float, sd: float, count: int, seed: int) -> np.ndarray:
    """i.i.d. Gaussian draws, each resampled until it lands in [0, 1].

    sd = 0 returns the constant mean. The mean must itself lie in
    [0, 1]; outside it the sd = 0 case could never terminate.
    """
    if sd < 0.0:
        raise ValidityError(f"sd must be >= 0, got {sd!r}")
    if not 0.0 <= mean <= 1.0:
        raise ValidityError(f"mean must lie in [0, 1], got {mean!r}")
    if count < 0:
        raise ValidityError(f"count must be >= 0, got {count}")
    return _truncated(np.random.default_rng(seed), mean, sd, count)


def sample_population(config: ScenarioConfig, n: int, seed: int) -> PopulationState:
    """Draw one population from the scenario's distributions.

    The master seed splits into three independent substreams (innate
    opinions, stubbornness, adopter choice), so e.g. changing phi leaves
    the innate draws untouched. Exactly round(phi * n) adopters are
    chosen uniformly without replacement.
    """
    if n < 1:
        raise ValidityError(f"population size must be >= 1, got {n}")
    seq = np.random.SeedSequence(seed)
    innate_rng, stub_rng, adopt_rng = (np.random.default_rng(s) for s in seq.spawn(3))

    positive = innate_rng.random(n) < config.kappa
    innate = np.empty(n)
    innate[positive] = _truncated(
        innate_rng, config.group_means[0], config.group_sd, int(positive.sum())
    )
    innate[~positive] = _truncated(
        innate_rng, config.group_means[1], config.group_sd, int((~positive).sum())
    )

    stubbornness = _truncated(stub_rng, config.lambda_mean, config.lambda_sd, n, strict=True)

    adopters = np.zeros(n, dtype=bool)
    k = int(round(config.phi * n))
    if k:
        adopters[adopt_rng.choice(n, size=k, replace=False)] = True
    return PopulationState(innate=innate, stubbornness=stubbornness, adopters=adopters)


def step(
    x_t: np.ndarray,
    x0: np.ndarray,
    lam: np.ndarray | float,
    W: InfluenceMatrix,
    f: Transformation,
    adopters: np.ndarray,
) -> np.ndarray:
    """One synchronous update; inputs are left unmodified.

    Adopter nodes expose f(x) to their neighbors, everyone else exposes
    x unchanged. The result is clipped to [0, 1] to absorb the
    eps-level overshoot allowed by row sums within 1e-12 of 1.
    """
    x_t = np.asarray(x_t, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    n = W.n
    if x_t.shape != (n,) or x0.shape != (n,) or adopters.shape != (n,):
        raise ValidityError(
            f"dimension mismatch: matrix has {n} nodes, "
            f"vectors have shapes {x_t.shape}, {x0.shape}, {adopters.shape}"
        )
    lam = np.asarray(lam, dtype=float)
    if lam.ndim not in (0, 1) or (lam.ndim == 1 and lam.shape != (n,)):
        raise ValidityError(f"stubbornness shape {lam.shape} does not match {n} nodes")

    y = x_t.copy()
    if adopters.any():
        y[adopters] = f.apply(x_t[adopters])
    nxt = lam * x0 + (1.0 - lam) * W.dot(y)
    np.clip(nxt, 0.0, 1.0, out=nxt)
    return nxt


def run(population: PopulationState, W: InfluenceMatrix, f: Transformation,
        steps: int) -> Trajectory:
    """Iterate the update rule and record the trajectory."""
    if steps < 0:
        raise ValidityError(f"steps must be >= 0, got {steps}")
    x0 = population.innate
    lam = population.stubbornness
    adopters = population.adopters
    x = x0.copy()
    avg = np.empty(steps + 1)
    change = np.empty(steps)
    avg[0] = x.mean()
    for t in range(steps):
        nxt = step(x, x0, lam, W, f, adopters)
        change[t] = np.max(np.abs(nxt - x)) if x.size else 0.0
        avg[t + 1] = nxt.mean()
        x = nxt
    return Trajectory(avg_opinion=avg, max_step_change=change, final=x)


def long_run_average(traj: Trajectory) -> float:
    """Population mean opinion at the final recorded step."""
    return float(traj.avg_opinion[-1])


TRAJECTORY_HEADER = ["t", "avg_opinion", "max_step_change"]


def write_trajectory_csv(traj: Trajectory, stream: IO[str]) -> None:
    """One row per time index; max_step_change is nan at t = 0."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    for t, a in enumerate(traj.avg_opinion):
        c = "nan" if t == 0 else repr(float(traj.max_step_change[t - 1]))
        writer.writerow([t, repr(float(a)), c])
