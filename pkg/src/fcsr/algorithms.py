"""Fixed-budget identification algorithms for grouped bandits.

Implements the feasibility-constrained successive-rejects strategy (FCSR)
and three baselines (uniform sampling, successive rejects with the
feasibility-gated score, explore-then-commit). Every run takes exactly one
instance, a total pull budget T, and a random stream, and returns a
:class:`RunTrace` whose ``decision`` is an arm id in 1..K or 0 when the
survivor does not look feasible.

FCSR splits the budget three ways per elimination round: a uniform pass over
the arm's attributes, an adaptive thresholding pass that concentrates pulls
on attributes whose empirical means sit close to the threshold, and a
feasibility pass that re-samples empirically infeasible attributes from a
dedicated per-arm budget. Budgets of eliminated arms are recycled into later
uniform passes.

All integer budget splits (floors of fractional budgets, the round
schedule) are computed in exact rational arithmetic: float rounding of
quantities like ``0.29 * 100`` would otherwise shift single pulls and break
pinned schedule values.

Each run is single-threaded over private state; runs are embarrassingly
parallel across trials as long as every trial gets its own RngStream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    BanditInstance,
    RngStream,
    StatsState,
    _as_generator,
)

__all__ = [
    "ScheduleSpec",
    "FcsrConfig",
    "RunTrace",
    "build_schedule",
    "uniform_phase",
    "apt_phase",
    "sample_until_feasible",
    "run_fcsr",
    "run_uniform_baseline",
    "run_sr_baseline",
    "run_etc_baseline",
    "run_algorithm",
    "ALGORITHM_IDS",
]

ALGORITHM_IDS = ("fcsr", "us", "sr", "etc")

DEFAULT_FEASIBILITY_FRACTION = 0.2
DEFAULT_APT_FRACTION = 0.3
DEFAULT_EXPLORE_FRACTION = 0.5


def _exact(x: float | int | Fraction) -> Fraction:
    """Exact rational value of a numeric parameter.

    Floats go through their shortest decimal repr, so f=0.2 means exactly
    1/5 rather than the nearest binary double.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


def _floor_mul(frac: Fraction, n: int) -> int:
    return int(frac * n // 1)


@dataclass(frozen=True)
class ScheduleSpec:
    """Successive-rejects round budgets for K arms and budget T.

    ``cumulative[r-1]`` is n_r, the total sample count each surviving arm
    should have reached by the end of round r; ``delta[r-1]`` is the
    per-arm increment for round r. The normalizer is
    nbar = 1/2 + sum_{k=2}^{K} 1/k and
    n_r = ceil(floor((1-f) T) / (nbar (K+1-r))).

    Ceilings can overshoot: the weighted total
    sum_r (K+1-r) delta[r-1] is at most floor((1-f) T) + (K-1), never more.
    The hard per-run budget guard (not the schedule) enforces total pulls
    <= T.
    """

    num_arms: int
    budget: int
    feasibility_fraction: float
    nbar: float
    cumulative: tuple[int, ...]
    delta: tuple[int, ...]

    def weighted_total(self) -> int:
        """sum over rounds of (arms alive) * (per-arm increment)."""
        k = self.num_arms
        return sum((k + 1 - r) * d for r, d in enumerate(self.delta, start=1))


def build_schedule(
    num_arms: int, budget: int, feasibility_fraction: float = 0.0
) -> ScheduleSpec:
    """Compute the elimination schedule exactly.

    Args:
        num_arms: K >= 2.
        budget: total pull budget T >= 0.
        feasibility_fraction: fraction f in [0, 1) reserved away from the
            round schedule (0 for the plain successive-rejects baseline).
    """
    if num_arms < 2:
        raise ValueError("the round schedule needs at least 2 arms")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    f = _exact(feasibility_fraction)
    if not 0 <= f < 1:
        raise ValueError(f"feasibility fraction must lie in [0, 1), got {feasibility_fraction}")
    sr_budget = _floor_mul(1 - f, budget)
    nbar = Fraction(1, 2) + sum(Fraction(1, k) for k in range(2, num_arms + 1))
    cumulative = tuple(
        math.ceil(Fraction(sr_budget) / (nbar * (num_arms + 1 - r)))
        for r in range(1, num_arms)
    )
    delta = tuple(
        cur - prev for cur, prev in zip(cumulative, (0,) + cumulative[:-1])
    )
    return ScheduleSpec(
        num_arms=num_arms,
        budget=budget,
        feasibility_fraction=feasibility_fraction,
        nbar=float(nbar),
        cumulative=cumulative,
        delta=delta,
    )


@dataclass(frozen=True)
class FcsrConfig:
    """Hyperparameters for one FCSR run.

    Args:
        budget: total pull budget T.
        feasibility_fraction: f in (0, 1); fT is split evenly into per-arm
            feasibility budgets. Default 0.2.
        apt_fraction: g in (0, 1); share of each round's per-arm budget sent
            to the adaptive thresholding pass. Default 0.3.
        threshold: feasibility threshold; None means use the instance's own.
        sub_gaussian_r: optional scale hint carried for reporting; the run
            itself never uses it (the algorithm is parameter-free).

    A budget of at least K*M is recommended so every attribute can be
    sampled at least once; smaller budgets are legal and simply force the
    final decision from sparse statistics.
    """

    budget: int
    feasibility_fraction: float = DEFAULT_FEASIBILITY_FRACTION
    apt_fraction: float = DEFAULT_APT_FRACTION
    threshold: float | None = None
    sub_gaussian_r: float | None = None

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        if not 0.0 < self.feasibility_fraction < 1.0:
            raise ValueError("feasibility fraction must lie strictly inside (0, 1)")
        if not 0.0 < self.apt_fraction < 1.0:
            raise ValueError("apt fraction must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class RunTrace:
    """Everything observable about one run.

    ``decision`` is the chosen arm (1..K) or 0 for "no feasible arm".
    ``per_round_scores`` holds, for each scoring point, the (arm, score)
    pairs of the arms still in play. Round-structured algorithms fill
    ``elimination_order`` with exactly K-1 arms.
    """

    decision: int
    pulls_total: int
    pulls_by_phase: dict[str, int] = field(default_factory=dict)
    elimination_order: tuple[int, ...] = ()
    per_round_scores: tuple[tuple[tuple[int, float], ...], ...] = ()


class _Draws:
    """Per-trial reward source with chunked buffers per (arm, attribute).

    Single pulls pop from a buffer refilled in blocks from the trial's
    generator; block uniform passes draw the sum of n pulls in one shot with
    the exact distribution of that sum. Both paths depend only on the
    trial's own generator and pull history, so a run is reproducible from
    its (seed, stream) alone.
    """

    __slots__ = ("_arms", "_gen", "_bufs", "_chunk")

    def __init__(
        self, instance: BanditInstance, gen: np.random.Generator, chunk: int = 512
    ) -> None:
        self._arms = instance.arms
        self._gen = gen
        self._bufs: list[list[list[float]]] = [
            [[] for _ in row] for row in instance.arms
        ]
        self._chunk = chunk

    def one(self, arm0: int, attr0: int) -> float:
        buf = self._bufs[arm0][attr0]
        if not buf:
            vals = self._arms[arm0][attr0].draw_many(self._chunk, self._gen)
            buf.extend(vals[::-1].tolist())
        return buf.pop()

    def total(self, arm0: int, attr0: int, n: int) -> float:
        return self._arms[arm0][attr0].draw_sum(n, self._gen)


def _row_score(mu_row: list[float], threshold: float) -> float:
    lowest = min(mu_row)
    if lowest > threshold:
        return sum(mu_row) / len(mu_row)
    return lowest


def _uniform_pulls(
    arm0: int,
    budget: int,
    limit: int,
    sums: list[float],
    counts: list[int],
    mu: list[float],
    draws: _Draws,
) -> int:
    """floor(budget/M) pulls per attribute in order; truncated after ``limit`` pulls."""
    m = len(sums)
    if budget <= 0 or limit <= 0:
        return 0
    quota = budget // m
    if quota <= 0:
        return 0
    used = 0
    for j in range(m):
        take = quota if quota <= limit - used else limit - used
        if take <= 0:
            break
        x = draws.total(arm0, j, take)
        s = sums[j] + x
        c = counts[j] + take
        sums[j] = s
        counts[j] = c
        mu[j] = s / c
        used += take
    return used


def _apt_pulls(
    arm0: int,
    steps: int,
    threshold: float,
    sums: list[float],
    counts: list[int],
    mu: list[float],
    draws: _Draws,
) -> int:
    """Adaptive thresholding pulls: each step samples the attribute minimizing
    sqrt(count) * |empirical mean - threshold|, lowest index on ties."""
    if steps <= 0:
        return 0
    m = len(sums)
    sqrt = math.sqrt
    one = draws.one
    scores = [sqrt(counts[j]) * abs(mu[j] - threshold) for j in range(m)]
    inner = range(1, m)
    for _ in range(steps):
        j = 0
        best = scores[0]
        for t in inner:
            v = scores[t]
            if v < best:
                best = v
                j = t
        x = one(arm0, j)
        s = sums[j] + x
        c = counts[j] + 1
        sums[j] = s
        counts[j] = c
        est = s / c
        mu[j] = est
        d = est - threshold
        scores[j] = sqrt(c) * (d if d >= 0.0 else -d)
    return steps


def _suf_pulls(
    arm0: int,
    feasibility_budget: int,
    threshold: float,
    sums: list[float],
    counts: list[int],
    mu: list[float],
    draws: _Draws,
    limit: int,
) -> tuple[int, int]:
    """Sample-until-feasible pass.

    Repeatedly takes the lowest-index attribute whose empirical mean is at
    or below the threshold and samples it until it crosses, spending from
    the arm's feasibility budget and never exceeding ``limit`` pulls.
    Returns (pulls made, remaining feasibility budget).
    """
    cap = feasibility_budget if feasibility_budget <= limit else limit
    if cap <= 0:
        return 0, feasibility_budget
    m = len(sums)
    one = draws.one
    used = 0
    while used < cap:
        j = -1
        for t in range(m):
            if mu[t] <= threshold:
                j = t
                break
        if j < 0:
            break
        while used < cap:
            x = one(arm0, j)
            s = sums[j] + x
            c = counts[j] + 1
            sums[j] = s
            counts[j] = c
            est = s / c
            mu[j] = est
            used += 1
            if est > threshold:
                break
    return used, feasibility_budget - used


class _RunState:
    """Python-list mirror of the global statistics for one run."""

    __slots__ = ("sums", "counts", "mu", "draws", "used")

    def __init__(self, instance: BanditInstance, gen: np.random.Generator) -> None:
        k, m = instance.num_arms, instance.num_attributes
        self.sums = [[0.0] * m for _ in range(k)]
        self.counts = [[0] * m for _ in range(k)]
        self.mu = [[0.0] * m for _ in range(k)]
        self.draws = _Draws(instance, gen)
        self.used = 0

    def uniform(self, arm0: int, budget: int, cap: int) -> int:
        n = _uniform_pulls(
            arm0, budget, cap - self.used,
            self.sums[arm0], self.counts[arm0], self.mu[arm0], self.draws,
        )
        self.used += n
        return n

    def apt(self, arm0: int, budget: int, threshold: float, cap: int) -> int:
        steps = budget if budget <= cap - self.used else cap - self.used
        n = _apt_pulls(
            arm0, steps, threshold,
            self.sums[arm0], self.counts[arm0], self.mu[arm0], self.draws,
        )
        self.used += n
        return n

    def suf(
        self, arm0: int, feasibility_budget: int, threshold: float, cap: int
    ) -> tuple[int, int]:
        n, remaining = _suf_pulls(
            arm0, feasibility_budget, threshold,
            self.sums[arm0], self.counts[arm0], self.mu[arm0], self.draws,
            cap - self.used,
        )
        self.used += n
        return n, remaining

    def score(self, arm0: int, threshold: float) -> float:
        return _row_score(self.mu[arm0], threshold)


# ---------------------------------------------------------------------------
# Standalone phase operations over StatsState (the contract surface).
# ---------------------------------------------------------------------------


def _on_stats_row(stats: StatsState, arm: int):
    i = arm - 1
    if not 0 <= i < stats.num_arms:
        raise IndexError(f"arm {arm} out of range 1..{stats.num_arms}")
    return (
        i,
        stats.reward_sums[i].tolist(),
        [int(c) for c in stats.pull_counts[i]],
        stats.empirical_means[i].tolist(),
    )


def _write_stats_row(
    stats: StatsState, i: int, sums: list[float], counts: list[int], mu: list[float]
) -> None:
    stats.reward_sums[i] = sums
    stats.pull_counts[i] = counts
    stats.empirical_means[i] = mu


def uniform_phase(
    instance: BanditInstance,
    stats: StatsState,
    arm: int,
    budget: int,
    rng: RngStream | np.random.Generator,
) -> int:
    """Sample each attribute of ``arm`` floor(budget / M) times, in order.

    The remainder budget mod M is discarded. Returns the number of pulls
    made; ``stats`` is updated in place.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    gen = _as_generator(rng)
    i, sums, counts, mu = _on_stats_row(stats, arm)
    n = _uniform_pulls(i, budget, budget, sums, counts, mu, _Draws(instance, gen))
    _write_stats_row(stats, i, sums, counts, mu)
    return n


def apt_phase(
    instance: BanditInstance,
    stats: StatsState,
    arm: int,
    budget: int,
    threshold: float,
    rng: RngStream | np.random.Generator,
) -> int:
    """Run exactly ``budget`` adaptive thresholding pulls on ``arm``.

    Each step pulls the attribute with the smallest
    sqrt(count) * |empirical mean - threshold|, lowest index on ties,
    continuing from whatever statistics ``stats`` already holds.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    gen = _as_generator(rng)
    i, sums, counts, mu = _on_stats_row(stats, arm)
    n = _apt_pulls(i, budget, threshold, sums, counts, mu, _Draws(instance, gen))
    _write_stats_row(stats, i, sums, counts, mu)
    return n


def sample_until_feasible(
    instance: BanditInstance,
    stats: StatsState,
    arm: int,
    feasibility_budget: int,
    threshold: float,
    rng: RngStream | np.random.Generator,
) -> int:
    """Push ``arm``'s empirically infeasible attributes above the threshold.

    Works through attributes lowest index first, sampling each until its
    empirical mean strictly exceeds the threshold, and stops when no
    attribute is at or below the threshold or the feasibility budget runs
    out. Returns the unspent feasibility budget; on a return value > 0
    every attribute of the arm is empirically feasible.
    """
    if feasibility_budget < 0:
        raise ValueError("feasibility budget must be non-negative")
    gen = _as_generator(rng)
    i, sums, counts, mu = _on_stats_row(stats, arm)
    _, remaining = _suf_pulls(
        i, feasibility_budget, threshold, sums, counts, mu,
        _Draws(instance, gen), feasibility_budget,
    )
    _write_stats_row(stats, i, sums, counts, mu)
    return remaining


# ---------------------------------------------------------------------------
# Full algorithm runs.
# ---------------------------------------------------------------------------


def run_fcsr(
    instance: BanditInstance,
    config: FcsrConfig,
    rng: RngStream | np.random.Generator,
) -> RunTrace:
    """Feasibility-constrained successive rejects.

    K-1 elimination rounds; in each, every surviving arm gets a uniform
    pass (its share of the round budget plus redistributed feasibility
    budget of dead arms), an adaptive thresholding pass, and a
    sample-until-feasible pass from its personal feasibility budget. The
    lowest-scoring arm is dropped (lowest index on score ties) and its
    remaining feasibility budget joins the shared pool. The survivor is
    returned if it looks feasible, else 0.

    A global guard truncates any phase that would push total pulls past the
    budget, so ``pulls_total <= budget`` always holds.
    """
    k, m = instance.num_arms, instance.num_attributes
    if k < 2:
        raise ValueError("fcsr needs at least 2 arms")
    budget = config.budget
    threshold = (
        instance.threshold if config.threshold is None else config.threshold
    )
    g = _exact(config.apt_fraction)
    f = _exact(config.feasibility_fraction)
    schedule = build_schedule(k, budget, config.feasibility_fraction)

    state = _RunState(instance, _as_generator(rng))
    feas_budget = [int(f * budget / k // 1)] * k
    extra_pool = 0
    active = list(range(k))
    eliminated: list[int] = []
    round_scores: list[tuple[tuple[int, float], ...]] = []
    phase_pulls = {"uniform": 0, "apt": 0, "suf": 0}

    for r in range(1, k):
        increment = schedule.delta[r - 1]
        share = extra_pool // len(active)
        extra_pool -= share * len(active)
        uniform_budget = _floor_mul(1 - g, increment) + share
        apt_budget = _floor_mul(g, increment)
        for i in active:
            phase_pulls["uniform"] += state.uniform(i, uniform_budget, budget)
            phase_pulls["apt"] += state.apt(i, apt_budget, threshold, budget)
            pulls, feas_budget[i] = state.suf(i, feas_budget[i], threshold, budget)
            phase_pulls["suf"] += pulls
        scored = [(i, state.score(i, threshold)) for i in active]
        round_scores.append(tuple((i + 1, s) for i, s in scored))
        loser = min(scored, key=lambda pair: (pair[1], pair[0]))[0]
        active.remove(loser)
        eliminated.append(loser + 1)
        extra_pool += feas_budget[loser]
        feas_budget[loser] = 0

    survivor = active[0]
    feasible = min(state.mu[survivor]) > threshold
    return RunTrace(
        decision=survivor + 1 if feasible else 0,
        pulls_total=state.used,
        pulls_by_phase=phase_pulls,
        elimination_order=tuple(eliminated),
        per_round_scores=tuple(round_scores),
    )


def run_uniform_baseline(
    instance: BanditInstance,
    budget: int,
    rng: RngStream | np.random.Generator,
    threshold: float | None = None,
) -> RunTrace:
    """Split the budget evenly: floor(T / (K*M)) pulls per attribute.

    Decides on the empirically feasible arm with the highest empirical arm
    mean (lowest index on ties), or 0 when no arm looks feasible.
    """
    k, m = instance.num_arms, instance.num_attributes
    tau = instance.threshold if threshold is None else threshold
    state = _RunState(instance, _as_generator(rng))
    quota = budget // (k * m)
    for i in range(k):
        state.uniform(i, quota * m, budget)
    scores = tuple((i + 1, state.score(i, tau)) for i in range(k))
    feasible = [i for i in range(k) if min(state.mu[i]) > tau]
    if feasible:
        pick = min(feasible, key=lambda i: (-sum(state.mu[i]) / m, i))
        decision = pick + 1
    else:
        decision = 0
    return RunTrace(
        decision=decision,
        pulls_total=state.used,
        pulls_by_phase={"uniform": state.used},
        per_round_scores=(scores,),
    )


def run_sr_baseline(
    instance: BanditInstance,
    budget: int,
    rng: RngStream | np.random.Generator,
    threshold: float | None = None,
) -> RunTrace:
    """Successive rejects with the feasibility-gated score.

    The full budget goes through the round schedule (no feasibility
    reserve); each round every surviving arm takes its increment as a
    uniform pass, then the lowest-scoring arm is dropped. The survivor is
    returned only if empirically feasible.
    """
    k = instance.num_arms
    if k < 2:
        raise ValueError("successive rejects needs at least 2 arms")
    tau = instance.threshold if threshold is None else threshold
    schedule = build_schedule(k, budget, 0.0)
    state = _RunState(instance, _as_generator(rng))
    active = list(range(k))
    eliminated: list[int] = []
    round_scores: list[tuple[tuple[int, float], ...]] = []
    for r in range(1, k):
        increment = schedule.delta[r - 1]
        for i in active:
            state.uniform(i, increment, budget)
        scored = [(i, state.score(i, tau)) for i in active]
        round_scores.append(tuple((i + 1, s) for i, s in scored))
        loser = min(scored, key=lambda pair: (pair[1], pair[0]))[0]
        active.remove(loser)
        eliminated.append(loser + 1)
    survivor = active[0]
    feasible = min(state.mu[survivor]) > tau
    return RunTrace(
        decision=survivor + 1 if feasible else 0,
        pulls_total=state.used,
        pulls_by_phase={"uniform": state.used},
        elimination_order=tuple(eliminated),
        per_round_scores=tuple(round_scores),
    )


def run_etc_baseline(
    instance: BanditInstance,
    budget: int,
    rng: RngStream | np.random.Generator,
    threshold: float | None = None,
    explore_fraction: float = DEFAULT_EXPLORE_FRACTION,
) -> RunTrace:
    """Two-stage explore-then-commit.

    Stage one spreads ``explore_fraction`` of the budget uniformly over all
    K*M attributes and keeps the min(M, K) highest-scoring arms as
    candidates. Stage two spreads the remaining budget uniformly over the
    candidates' attributes. The highest-scoring candidate is returned if it
    looks feasible, else 0.
    """
    if not 0.0 < explore_fraction < 1.0:
        raise ValueError("explore fraction must lie strictly inside (0, 1)")
    k, m = instance.num_arms, instance.num_attributes
    tau = instance.threshold if threshold is None else threshold
    state = _RunState(instance, _as_generator(rng))

    explore_total = _floor_mul(_exact(explore_fraction), budget)
    quota1 = explore_total // (k * m)
    for i in range(k):
        state.uniform(i, quota1 * m, budget)
    explore_used = state.used
    stage1 = [(i, state.score(i, tau)) for i in range(k)]
    ranked = sorted(stage1, key=lambda pair: (-pair[1], pair[0]))
    candidates = [i for i, _ in ranked[: min(m, k)]]

    remaining = budget - state.used
    quota2 = remaining // (len(candidates) * m)
    for i in candidates:
        state.uniform(i, quota2 * m, budget)
    final = [(i, state.score(i, tau)) for i in candidates]
    pick = min(final, key=lambda pair: (-pair[1], pair[0]))[0]
    feasible = min(state.mu[pick]) > tau
    return RunTrace(
        decision=pick + 1 if feasible else 0,
        pulls_total=state.used,
        pulls_by_phase={
            "explore": explore_used,
            "commit": state.used - explore_used,
        },
        per_round_scores=(
            tuple((i + 1, s) for i, s in stage1),
            tuple((i + 1, s) for i, s in final),
        ),
    )


def run_algorithm(
    name: str,
    instance: BanditInstance,
    budget: int,
    rng: RngStream | np.random.Generator,
    *,
    feasibility_fraction: float = DEFAULT_FEASIBILITY_FRACTION,
    apt_fraction: float = DEFAULT_APT_FRACTION,
    explore_fraction: float = DEFAULT_EXPLORE_FRACTION,
    threshold: float | None = None,
) -> RunTrace:
    """Dispatch a run by stable algorithm identifier.

    Identifiers: "fcsr", "us" (uniform), "sr" (successive rejects),
    "etc" (explore-then-commit).
    """
    if name == "fcsr":
        config = FcsrConfig(
            budget=budget,
            feasibility_fraction=feasibility_fraction,
            apt_fraction=apt_fraction,
            threshold=threshold,
        )
        return run_fcsr(instance, config, rng)
    if name == "us":
        return run_uniform_baseline(instance, budget, rng, threshold)
    if name == "sr":
        return run_sr_baseline(instance, budget, rng, threshold)
    if name == "etc":
        return run_etc_baseline(
            instance, budget, rng, threshold, explore_fraction
        )
    raise ValueError(
        f"unknown algorithm {name!r}; valid identifiers: {', '.join(ALGORITHM_IDS)}"
    )
