"""Algorithm tests: schedule, phases, full runs, budget guard, determinism."""

from fractions import Fraction

import numpy as np
import pytest

from fcsr.algorithms import (
    FcsrConfig,
    apt_phase,
    build_schedule,
    run_algorithm,
    run_etc_baseline,
    run_fcsr,
    run_sr_baseline,
    run_uniform_baseline,
    sample_until_feasible,
    uniform_phase,
)
from fcsr.core import BanditInstance, Bernoulli, Gaussian, RngStream, StatsState

# Two arms, deterministic rewards: arm 1 always pays 1, arm 2 always 0.
SEPARATING = BanditInstance(
    arms=((Bernoulli(1.0),), (Bernoulli(0.0),)), threshold=0.5
)


def _instance(means, tau, variance=0.1):
    rows = tuple(tuple(Gaussian(float(x), variance) for x in row) for row in means)
    return BanditInstance(rows, tau)


# ---------------------------------------------------------------------------
# Schedule
# ---------------------------------------------------------------------------


def test_schedule_smallest_case():
    spec = build_schedule(2, 100, 0.0)
    assert spec.nbar == 1.0
    assert spec.cumulative == (50,)
    assert spec.delta == (50,)


def test_schedule_reference_values():
    # nbar = 1/2 + sum_{k=2..10} 1/k; n_1 = ceil(8000 / (10 nbar)) = 330.
    spec = build_schedule(10, 10_000, 0.2)
    harmonic = sum(1 / k for k in range(2, 11))
    assert spec.nbar == pytest.approx(0.5 + harmonic, rel=1e-12)
    assert spec.nbar == pytest.approx(2.428968, abs=1e-6)
    assert spec.cumulative[0] == 330


def test_schedule_monotone_and_bounded():
    rng = np.random.default_rng(19)
    for _ in range(500):
        k = int(rng.integers(2, 40))
        budget = int(rng.integers(0, 100_000))
        f = round(float(rng.uniform(0.0, 0.9)), 4)
        spec = build_schedule(k, budget, f)
        assert all(d >= 0 for d in spec.delta)
        assert all(
            b >= a for a, b in zip(spec.cumulative, spec.cumulative[1:])
        )
        # Ceilings can overshoot the reserve-adjusted budget, but by < K.
        reserve_adjusted = int((1 - Fraction(str(f))) * budget // 1)
        assert spec.weighted_total() <= reserve_adjusted + (k - 1)


def test_schedule_validation():
    with pytest.raises(ValueError):
        build_schedule(1, 100)
    with pytest.raises(ValueError):
        build_schedule(3, -1)
    with pytest.raises(ValueError):
        build_schedule(3, 100, 1.0)


# ---------------------------------------------------------------------------
# Uniform phase
# ---------------------------------------------------------------------------


def _fresh_stats(instance):
    return StatsState.for_instance(instance)


def test_uniform_exact_division():
    instance = _instance([[0.5] * 5], tau=0.4)
    stats = _fresh_stats(instance)
    pulls = uniform_phase(instance, stats, 1, 10, RngStream(0))
    assert pulls == 10
    assert stats.pull_counts[0].tolist() == [2, 2, 2, 2, 2]


def test_uniform_discards_remainder():
    instance = _instance([[0.5] * 5], tau=0.4)
    stats = _fresh_stats(instance)
    pulls = uniform_phase(instance, stats, 1, 11, RngStream(0))
    assert pulls == 10
    assert stats.pull_counts[0].tolist() == [2, 2, 2, 2, 2]


def test_uniform_floors_to_zero():
    instance = _instance([[0.5] * 5], tau=0.4)
    stats = _fresh_stats(instance)
    assert uniform_phase(instance, stats, 1, 3, RngStream(0)) == 0
    assert stats.total_pulls() == 0


def test_uniform_leaves_other_arms_alone():
    instance = _instance([[0.5, 0.5], [0.7, 0.7]], tau=0.4)
    stats = _fresh_stats(instance)
    uniform_phase(instance, stats, 2, 8, RngStream(1))
    assert stats.pull_counts[0].tolist() == [0, 0]
    assert stats.pull_counts[1].tolist() == [4, 4]


# ---------------------------------------------------------------------------
# Adaptive thresholding phase
# ---------------------------------------------------------------------------


def test_apt_pulls_smallest_index_score():
    # counts [4, 1], means [0.6, 0.55], tau 0.5 -> scores [0.2, 0.05]:
    # attribute 2 is pulled first.
    instance = BanditInstance(
        arms=((Bernoulli(1.0), Bernoulli(1.0)),), threshold=0.5
    )
    stats = _fresh_stats(instance)
    stats.reward_sums[0] = [2.4, 0.55]
    stats.pull_counts[0] = [4, 1]
    stats.empirical_means[0] = [0.6, 0.55]
    apt_phase(instance, stats, 1, 1, 0.5, RngStream(0))
    assert stats.pull_counts[0].tolist() == [4, 2]


def test_apt_zero_budget_is_noop():
    instance = _instance([[0.5, 0.7]], tau=0.5)
    stats = _fresh_stats(instance)
    before = stats.copy()
    assert apt_phase(instance, stats, 1, 0, 0.5, RngStream(0)) == 0
    assert np.array_equal(stats.pull_counts, before.pull_counts)


def test_apt_fresh_arm_breaks_ties_low():
    # All counts zero means every score is 0; the lowest index wins.
    instance = BanditInstance(
        arms=((Bernoulli(1.0), Bernoulli(1.0), Bernoulli(1.0)),), threshold=0.5
    )
    stats = _fresh_stats(instance)
    apt_phase(instance, stats, 1, 1, 0.5, RngStream(0))
    assert stats.pull_counts[0].tolist() == [1, 0, 0]


# ---------------------------------------------------------------------------
# Sample-until-feasible phase
# ---------------------------------------------------------------------------


def test_suf_stops_once_above_threshold():
    instance = BanditInstance(arms=((Bernoulli(1.0),),), threshold=0.5)
    stats = _fresh_stats(instance)
    stats.reward_sums[0, 0] = 0.4
    stats.pull_counts[0, 0] = 1
    stats.empirical_means[0, 0] = 0.4
    remaining = sample_until_feasible(instance, stats, 1, 5, 0.5, RngStream(0))
    assert remaining == 4
    assert stats.pull_counts[0, 0] == 2
    assert stats.empirical_means[0, 0] == pytest.approx(0.7)


def test_suf_noop_when_all_feasible():
    instance = BanditInstance(arms=((Bernoulli(1.0), Bernoulli(1.0)),), threshold=0.5)
    stats = _fresh_stats(instance)
    stats.reward_sums[0] = [0.9, 0.8]
    stats.pull_counts[0] = [1, 1]
    stats.empirical_means[0] = [0.9, 0.8]
    assert sample_until_feasible(instance, stats, 1, 7, 0.5, RngStream(0)) == 7
    assert stats.total_pulls() == 2


def test_suf_exhausts_budget_on_hopeless_attribute():
    instance = BanditInstance(arms=((Bernoulli(0.0),),), threshold=0.5)
    stats = _fresh_stats(instance)
    remaining = sample_until_feasible(instance, stats, 1, 7, 0.5, RngStream(0))
    assert remaining == 0
    assert stats.pull_counts[0, 0] == 7
    assert stats.empirical_means[0, 0] == 0.0


def test_suf_postcondition_randomized():
    rng = np.random.default_rng(37)
    for _ in range(300):
        m = int(rng.integers(1, 5))
        means = rng.uniform(0, 1, size=(1, m))
        tau = float(rng.uniform(0.1, 0.9))
        instance = _instance(means, tau, variance=0.2)
        stats = _fresh_stats(instance)
        budget = int(rng.integers(0, 60))
        remaining = sample_until_feasible(
            instance, stats, 1, budget, tau, RngStream(int(rng.integers(1 << 30)))
        )
        assert 0 <= remaining <= budget
        if remaining > 0:
            assert stats.min_empirical_mean(1) > tau


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------


def test_fcsr_separates_deterministic_arms():
    for seed in range(30):
        trace = run_fcsr(SEPARATING, FcsrConfig(budget=100), RngStream(seed))
        assert trace.decision == 1
        assert trace.elimination_order == (2,)


def test_fcsr_flags_infeasible_instances():
    # Every attribute mean at least 0.2 below the threshold: the survivor
    # should look infeasible almost always.
    instance = _instance(
        [[0.25, 0.3], [0.2, 0.28], [0.1, 0.3]], tau=0.5, variance=0.3
    )
    zeros = sum(
        run_fcsr(instance, FcsrConfig(budget=100_000), RngStream(5, t)).decision == 0
        for t in range(60)
    )
    assert zeros >= 57  # >= 95%


def test_fcsr_eliminates_all_but_one():
    instance = _instance(np.linspace(0.2, 0.8, 12).reshape(4, 3), tau=0.1)
    trace = run_fcsr(instance, FcsrConfig(budget=5000), RngStream(11))
    assert len(trace.elimination_order) == 3
    survivor = (set(range(1, 5)) - set(trace.elimination_order)).pop()
    assert trace.decision in (0, survivor)
    assert len(trace.per_round_scores) == 3


def test_fcsr_identical_seeds_identical_traces():
    instance = _instance([[0.6, 0.4], [0.55, 0.52], [0.3, 0.9]], tau=0.45)
    a = run_fcsr(instance, FcsrConfig(budget=4000), RngStream(9, 3))
    b = run_fcsr(instance, FcsrConfig(budget=4000), RngStream(9, 3))
    c = run_fcsr(instance, FcsrConfig(budget=4000), RngStream(9, 4))
    assert a == b
    assert a != c


def test_fcsr_with_threshold_below_support_never_uses_feasibility_pass():
    # Bounded rewards in [0, 1] with tau = -0.5: no empirical mean can sit at
    # or below the threshold, so the feasibility pass never fires and the
    # final gate always passes.
    instance = BanditInstance(
        arms=tuple(
            (Bernoulli(p), Bernoulli(p / 2)) for p in (0.9, 0.6, 0.3)
        ),
        threshold=-0.5,
    )
    for seed in range(10):
        trace = run_fcsr(instance, FcsrConfig(budget=3000), RngStream(seed))
        assert trace.pulls_by_phase["suf"] == 0
        assert trace.decision != 0


def test_fcsr_budget_zero():
    trace = run_fcsr(SEPARATING, FcsrConfig(budget=0), RngStream(0))
    assert trace.decision == 0
    assert trace.pulls_total == 0


def test_fcsr_requires_two_arms():
    single = BanditInstance(arms=((Bernoulli(0.9),),), threshold=0.5)
    with pytest.raises(ValueError):
        run_fcsr(single, FcsrConfig(budget=100), RngStream(0))


def test_fcsr_config_validation():
    with pytest.raises(ValueError):
        FcsrConfig(budget=100, feasibility_fraction=0.0)
    with pytest.raises(ValueError):
        FcsrConfig(budget=100, apt_fraction=1.0)
    with pytest.raises(ValueError):
        FcsrConfig(budget=-1)


def test_uniform_baseline_examples():
    assert run_uniform_baseline(SEPARATING, 100, RngStream(3)).decision == 1
    # Budget below one pull per attribute: zero data, nothing looks feasible.
    trace = run_uniform_baseline(SEPARATING, 1, RngStream(3))
    assert trace.pulls_total == 0
    assert trace.decision == 0


def test_uniform_baseline_no_feasible_arm_returns_flag():
    instance = BanditInstance(
        arms=((Bernoulli(0.0),), (Bernoulli(0.0),)), threshold=0.5
    )
    assert run_uniform_baseline(instance, 50, RngStream(1)).decision == 0


def test_sr_baseline_examples():
    assert run_sr_baseline(SEPARATING, 100, RngStream(3)).decision == 1
    with pytest.raises(ValueError):
        run_sr_baseline(
            BanditInstance(arms=((Bernoulli(0.5),),), threshold=0.1), 10, RngStream(0)
        )


def test_sr_budget_guard_exact():
    # K=2, M=1, odd budget: the ceiling schedule wants one pull too many and
    # the guard must clamp the total at exactly the budget.
    instance = BanditInstance(
        arms=((Bernoulli(0.9),), (Bernoulli(0.1),)), threshold=0.5
    )
    trace = run_sr_baseline(instance, 101, RngStream(2))
    assert trace.pulls_total == 101


def test_etc_baseline_examples():
    assert run_etc_baseline(SEPARATING, 100, RngStream(3)).decision == 1
    with pytest.raises(ValueError):
        run_etc_baseline(SEPARATING, 100, RngStream(3), explore_fraction=1.0)


def test_etc_candidate_set_degenerates_to_all_arms():
    # K <= M keeps every arm, so the second stage scores all of them.
    instance = _instance([[0.7, 0.6, 0.8], [0.5, 0.4, 0.9]], tau=0.2)
    trace = run_etc_baseline(instance, 600, RngStream(8))
    assert len(trace.per_round_scores[1]) == 2


def test_run_algorithm_dispatch():
    for name in ("fcsr", "us", "sr", "etc"):
        trace = run_algorithm(name, SEPARATING, 120, RngStream(4))
        assert trace.decision == 1
    with pytest.raises(ValueError):
        run_algorithm("nope", SEPARATING, 120, RngStream(4))


def test_budget_compliance_randomized_small():
    rng = np.random.default_rng(53)
    names = ("fcsr", "us", "sr", "etc")
    for i in range(400):
        k = int(rng.integers(2, 6))
        m = int(rng.integers(1, 4))
        means = rng.uniform(0, 1, size=(k, m))
        tau = float(rng.uniform(0.2, 0.8))
        instance = _instance(means, tau, variance=0.2)
        budget = int(rng.integers(0, 400))
        trace = run_algorithm(
            names[i % 4], instance, budget, RngStream(int(rng.integers(1 << 30)))
        )
        assert trace.pulls_total <= budget
        assert trace.pulls_total == sum(trace.pulls_by_phase.values())
