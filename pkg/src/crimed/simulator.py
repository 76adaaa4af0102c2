"""Run loop, Monte-Carlo replication and lower-bound slopes."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .corrupted_kl import check_eps, delta_min, kl_eps_gauss
from .environments import BanditInstance, make_rng
from .errors import DomainError
from .policies import build_policy, normalise_descriptor


def default_checkpoints(horizon: int, count: int = 100) -> list[int]:
    """Roughly ``count`` log-spaced steps in ``[1, horizon]``, always ending at ``horizon``."""
    grid = np.unique(np.round(np.logspace(0.0, math.log10(horizon), count)).astype(int))
    steps = [int(s) for s in grid if 1 <= s <= horizon]
    if steps[-1] != horizon:
        steps.append(horizon)
    return steps


def _clean_checkpoints(checkpoints, horizon):
    if checkpoints is None:
        return default_checkpoints(horizon)
    steps = sorted({int(c) for c in checkpoints})
    if not steps or steps[0] < 1 or steps[-1] > horizon:
        raise DomainError(f"checkpoints must lie in [1, {horizon}]")
    return steps


@dataclass
class RunTrace:
    """One simulated run.

    ``regret[i]`` is the pseudo-regret ``sum_a N_a(t) gap_a`` after
    ``checkpoints[i]`` steps; ``realized_regret`` uses the drawn true rewards
    (``sum_n best_mean - Y_n``) instead.
    """

    checkpoints: list[int]
    regret: np.ndarray
    realized_regret: np.ndarray
    counts: list[int]
    gaps: tuple[float, ...]
    arms: np.ndarray | None = None
    rewards: np.ndarray | None = None
    observations: np.ndarray | None = None
    corrupted: np.ndarray | None = None

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])


def run(instance: BanditInstance, policy, horizon: int, seed, checkpoints=None,
        record: bool = False) -> RunTrace:
    """Play ``horizon`` rounds of select -> pull -> update.

    ``policy`` is a descriptor (name or dict); ``seed`` is an int or a numpy
    Generator.  The policy only ever sees observations.
    """
    learner = build_policy(policy, instance, horizon)
    if horizon < learner.n_arms * learner.n_min:
        raise DomainError(
            f"horizon {horizon} is shorter than the initial phase "
            f"({learner.n_arms} arms x {learner.n_min} pulls)"
        )
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    steps = _clean_checkpoints(checkpoints, horizon)
    gaps = instance.gaps
    best = instance.best_mean

    regret = np.empty(len(steps))
    realized = np.empty(len(steps))
    if record:
        arms = np.empty(horizon, dtype=np.int64)
        rewards = np.empty(horizon)
        observations = np.empty(horizon)
        corrupted = np.empty(horizon, dtype=bool)

    pull = instance.pull
    select = learner.select_arm
    update = learner.update
    pseudo = 0.0
    real = 0.0
    next_i = 0
    next_cp = steps[0]
    for n in range(horizon):
        arm = select()
        reward, obs, hit = pull(arm, n, rng)
        update(arm, obs)
        pseudo += gaps[arm]
        real += best - reward
        if record:
            arms[n] = arm
            rewards[n] = reward
            observations[n] = obs
            corrupted[n] = hit
        if n + 1 == next_cp:
            regret[next_i] = pseudo
            realized[next_i] = real
            next_i += 1
            next_cp = steps[next_i] if next_i < len(steps) else -1

    trace = RunTrace(steps, regret, realized, list(learner.counts), gaps)
    if record:
        trace.arms, trace.rewards, trace.observations, trace.corrupted = arms, rewards, observations, corrupted
    return trace


@dataclass
class MonteCarloSummary:
    policy: str
    checkpoints: list[int]
    mean_regret: np.ndarray
    p5: np.ndarray
    p95: np.ndarray
    final_regrets: np.ndarray
    mean_realized_regret: np.ndarray
    mean_counts: np.ndarray
    reps: int
    wall_seconds: float = field(default=0.0, compare=False)

    def regret_at(self, step: int) -> float:
        return float(self.mean_regret[self.checkpoints.index(step)])


def _run_rep(args):
    instance, policy, horizon, master_seed, rep, checkpoints = args
    trace = run(instance, policy, horizon, make_rng(master_seed, rep), checkpoints)
    return rep, trace.regret, trace.realized_regret, trace.counts


def worker_count(requested: int | None = None) -> int:
    """Worker processes to use, capped by ``CRIMED_THREADS`` when set."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("CRIMED_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def monte_carlo(instance: BanditInstance, policy, horizon: int, reps: int, master_seed: int,
                checkpoints=None, workers: int | None = None) -> MonteCarloSummary:
    """Aggregate ``reps`` independent runs; rep ``r`` uses ``make_rng(master_seed, r)``.

    Results are sorted by rep before aggregation, so the summary does not
    depend on the number of workers or on completion order.
    """
    if reps < 1:
        raise DomainError("reps must be at least 1")
    descriptor = normalise_descriptor(policy)
    steps = _clean_checkpoints(checkpoints, horizon)
    jobs = [(instance, descriptor, horizon, master_seed, r, steps) for r in range(reps)]
    started = time.perf_counter()
    n_workers = min(worker_count(workers), reps)
    if n_workers > 1:
        with ProcessPoolExecutor(n_workers) as pool:
            results = list(pool.map(_run_rep, jobs, chunksize=max(1, reps // (4 * n_workers))))
    else:
        results = [_run_rep(job) for job in jobs]
    results.sort(key=lambda r: r[0])
    regrets = np.array([r[1] for r in results])
    realized = np.array([r[2] for r in results])
    counts = np.array([r[3] for r in results], dtype=float)
    return MonteCarloSummary(
        policy=descriptor["name"],
        checkpoints=steps,
        mean_regret=regrets.mean(axis=0),
        p5=np.percentile(regrets, 5, axis=0),
        p95=np.percentile(regrets, 95, axis=0),
        final_regrets=regrets[:, -1].copy(),
        mean_realized_regret=realized.mean(axis=0),
        mean_counts=counts.mean(axis=0),
        reps=reps,
        wall_seconds=time.perf_counter() - started,
    )


@dataclass(frozen=True)
class LowerBoundReport:
    """Per-arm ``1 / kl`` slopes (``None`` for optimal arms, ``inf`` if the gap is too small)."""

    eps: float
    gaps: tuple[float, ...]
    standardized_gaps: tuple[float, ...]
    slopes: tuple[float | None, ...]

    @property
    def regret_coefficient(self) -> float:
        """Asymptotic ``lim E[R_T] / log T`` lower bound: ``sum_a gap_a * slope_a``."""
        total = 0.0
        for gap, slope in zip(self.gaps, self.slopes):
            if slope is not None:
                total += gap * slope
        return total


def lower_bound_report(instance: BanditInstance, eps: float | None = None) -> LowerBoundReport:
    eps = check_eps(instance.eps if eps is None else eps)
    dmin = delta_min(eps)
    sigma = instance.sigma
    gaps = instance.gaps
    standardized = tuple(g / sigma for g in gaps)
    slopes = []
    for gap in standardized:
        if gap <= 0.0:
            slopes.append(None)
        elif gap <= dmin:
            slopes.append(math.inf)
        else:
            kl = kl_eps_gauss(0.0, gap, eps)
            slopes.append(1.0 / kl if kl > 0.0 else math.inf)
    return LowerBoundReport(eps, gaps, standardized, tuple(slopes))
