import math

import numpy as np
import pytest

from tunnelbench.errors import InputError, TuningError
from tunnelbench.problems import (
    IsingProblem,
    brute_force_ground_state,
    build_chimera,
    evaluate_energy,
    random_ising,
    weak_strong_pair,
)
from tunnelbench.sa import (
    SaSchedule,
    sa_acceptance_rate,
    sa_boltzmann_counts,
    sa_run,
    sa_success_probability,
    sa_tune,
)

FALSE_MIN = np.array([1] * 8 + [-1] * 8, dtype=np.int8)


def test_schedule_validation():
    with pytest.raises(InputError):
        SaSchedule(2.0, 1.0, 10)
    with pytest.raises(InputError):
        SaSchedule(0.1, 1.0, 0)
    with pytest.raises(InputError):
        SaSchedule(0.0, 1.0, 10, interpolation="geometric")
    geo = SaSchedule(0.5, 2.0, 3, interpolation="geometric")
    assert geo.betas() == pytest.approx([0.5, 1.0, 2.0])
    lin = SaSchedule(0.0, 2.0, 5)
    assert lin.betas() == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])


def test_single_spin_cold_limit():
    problem = IsingProblem(1, {(0,): 1.0})
    config, energy = sa_run(problem, SaSchedule(1.0, 30.0, 60), seed=2)
    assert config[0] == 1 and energy == -1.0


def test_returned_energy_matches_evaluation():
    problem = random_ising(12, "complete", seed=5)
    config, energy = sa_run(problem, SaSchedule(0.1, 2.0, 100), seed=3)
    assert energy == evaluate_energy(problem, config)


def test_bitwise_determinism():
    problem = random_ising(14, "complete", seed=1)
    schedule = SaSchedule(0.2, 3.0, 150)
    a_cfg, a_e = sa_run(problem, schedule, seed=9)
    b_cfg, b_e = sa_run(problem, schedule, seed=9)
    assert np.array_equal(a_cfg, b_cfg) and a_e == b_e
    c_cfg, _ = sa_run(problem, schedule, seed=10)
    assert not np.array_equal(a_cfg, c_cfg)


def test_zero_beta_walk_accepts_everything():
    problem = random_ising(10, "complete", seed=2)
    rate = sa_acceptance_rate(problem, SaSchedule(0.0, 0.0, 300), seed=4)
    assert rate == 1.0


def test_tuned_sa_matches_exhaustive_oracle():
    graph = build_chimera(1, 2)
    problem = random_ising(16, graph, seed=11)
    _, target, _ = brute_force_ground_state(problem)
    p, se = sa_success_probability(
        problem, SaSchedule(0.1, 3.0, 500), n_runs=100, seed=7, target_energy=target
    )
    assert p >= 0.95


def test_success_probability_trivial_and_deterministic():
    problem = IsingProblem(1, {(0,): 1.0})
    schedule = SaSchedule(0.5, 10.0, 30)
    p, se = sa_success_probability(problem, schedule, 25, 3, -1.0)
    assert p == 1.0 and se == 0.0
    problem2 = weak_strong_pair()
    sched2 = SaSchedule(0.1, 1.2, 60)  # deliberately weak: p strictly inside (0,1)
    p1 = sa_success_probability(problem2, sched2, 60, 5, -40.48)
    p2 = sa_success_probability(problem2, sched2, 60, 5, -40.48)
    assert p1 == p2
    assert 0.0 < p1[0] < 1.0


def test_cold_start_in_false_minimum_rarely_escapes():
    problem = weak_strong_pair()
    schedule = SaSchedule(8.0, 8.0, 10_000)
    escapes = 0
    n_chains = 20
    for seed in range(n_chains):
        _, energy = sa_run(problem, schedule, seed=seed, init_config=FALSE_MIN)
        if energy <= -40.48 + 1e-9:
            escapes += 1
    # rate per sweep must be far below 1; even one escape over the whole
    # budget corresponds to ~5e-6 per sweep
    assert escapes <= 1
    rate_bound = (escapes + 3) / (n_chains * schedule.n_sweeps)
    assert rate_bound < 0.01


def test_detailed_balance_two_spins():
    problem = IsingProblem(2, {(0, 1): 0.6, (0,): 0.3, (1,): -0.2})
    beta = 0.7
    counts = sa_boltzmann_counts(problem, beta, n_sweeps=120_000, seed=12, thin=10)
    states = [np.array([s0, s1], dtype=np.int8) for s0 in (-1, 1) for s1 in (-1, 1)]
    # counts index packs s0 as the most significant bit, +1 -> 1
    energies = np.array([evaluate_energy(problem, s) for s in states])
    weights = np.exp(-beta * energies)
    expected = weights / weights.sum() * counts.sum()
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    # 3 sigma above the dof=3 mean under correlated-sample inflation margin
    assert chi2 < 3 + 3 * math.sqrt(6)


def test_tune_minimizes_observed_effort():
    problems = [weak_strong_pair() for _ in range(4)]
    targets = [-40.48] * 4
    result = sa_tune(
        problems,
        quantile=0.5,
        sweep_grid=[100, 300],
        beta_grid=[(0.1, 1.0), (0.1, 3.0)],
        target_energies=targets,
        n_runs=20,
        seed=1,
    )
    efforts = [row[3] for row in result.rows if row[3] is not None]
    assert result.effort == min(efforts)
    assert result.schedule.n_sweeps in (100, 300)


def test_tune_single_dominant_point():
    problem = IsingProblem(1, {(0,): 1.0})
    result = sa_tune(
        [problem],
        quantile=0.5,
        sweep_grid=[5, 50],
        beta_grid=[(0.5, 8.0)],
        target_energies=[-1.0],
        n_runs=10,
        seed=0,
    )
    # both points succeed; fewer sweeps wins the tie on effort
    assert result.schedule.n_sweeps == 5


def test_tune_total_failure_reports_best():
    # impossible target: below the true optimum
    problem = random_ising(10, "complete", seed=4)
    with pytest.raises(TuningError) as err:
        sa_tune(
            [problem],
            quantile=0.5,
            sweep_grid=[10],
            beta_grid=[(0.1, 1.0)],
            target_energies=[-1e9],
            n_runs=5,
            seed=0,
        )
    assert err.value.best_p == 0.0
