"""Simulated annealing with restart-based success accounting and grid tuning.

A run performs Metropolis single-spin updates, one attempt per spin per
sweep, with the inverse temperature interpolated across sweeps.  Energy
differences are maintained incrementally through per-variable adjacency
lists over the K-local terms; a full refresh once per sweep caps float
drift.  The best configuration ever seen is returned, because success is
defined as having found the optimum, not as ending in it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .errors import InputError, TuningError
from .problems import IsingProblem, as_config, evaluate_energy


@dataclass(frozen=True)
class SaSchedule:
    """Annealing schedule in inverse temperature (units 1/J)."""

    beta_init: float
    beta_final: float
    n_sweeps: int
    interpolation: str = "linear"
    spin_order: str = "sequential"

    def __post_init__(self):
        if not 0 <= self.beta_init <= self.beta_final:
            raise InputError("need 0 <= beta_init <= beta_final")
        if self.n_sweeps < 1:
            raise InputError("need n_sweeps >= 1")
        if self.interpolation not in ("linear", "geometric"):
            raise InputError(f"unknown interpolation {self.interpolation!r}")
        if self.interpolation == "geometric" and self.beta_init <= 0:
            raise InputError("geometric interpolation needs beta_init > 0")
        if self.spin_order not in ("sequential", "random"):
            raise InputError(f"unknown spin order {self.spin_order!r}")

    def betas(self) -> np.ndarray:
        if self.interpolation == "linear":
            return np.linspace(self.beta_init, self.beta_final, self.n_sweeps)
        ratio = self.beta_final / self.beta_init
        return self.beta_init * ratio ** np.linspace(0.0, 1.0, self.n_sweeps)


@njit(cache=True)
def _sa_kernel(coeffs, var_off, var_flat, adj_off, adj_terms, betas, s, seed, random_order):
    np.random.seed(seed)
    n = s.shape[0]
    n_terms = coeffs.shape[0]
    prod = np.empty(n_terms, dtype=np.int8)
    for t in range(n_terms):
        p = 1
        for idx in range(var_off[t], var_off[t + 1]):
            p *= s[var_flat[idx]]
        prod[t] = p
    energy = 0.0
    for t in range(n_terms):
        energy -= coeffs[t] * prod[t]
    best_e = energy
    best_s = s.copy()
    accepts = 0
    order = np.arange(n)
    for sweep in range(betas.shape[0]):
        beta = betas[sweep]
        if random_order:
            order = np.random.permutation(n)
        for oi in range(n):
            i = order[oi]
            delta = 0.0
            for k in range(adj_off[i], adj_off[i + 1]):
                delta += 2.0 * coeffs[adj_terms[k]] * prod[adj_terms[k]]
            if delta <= 0.0 or np.random.random() < np.exp(-beta * delta):
                accepts += 1
                s[i] = -s[i]
                for k in range(adj_off[i], adj_off[i + 1]):
                    prod[adj_terms[k]] = -prod[adj_terms[k]]
                energy += delta
                if energy < best_e:
                    best_e = energy
                    best_s[:] = s
        energy = 0.0
        for t in range(n_terms):
            energy -= coeffs[t] * prod[t]
        if energy < best_e:
            best_e = energy
            best_s[:] = s
    return best_s, best_e, accepts


@njit(cache=True)
def _sa_visit_counts(coeffs, var_off, var_flat, adj_off, adj_terms, beta, n_sweeps, burn, thin, s, seed):
    """Fixed-temperature walk returning end-of-sweep state visit counts
    (diagnostic for sampling correctness; n is assumed small)."""
    np.random.seed(seed)
    n = s.shape[0]
    n_terms = coeffs.shape[0]
    prod = np.empty(n_terms, dtype=np.int8)
    for t in range(n_terms):
        p = 1
        for idx in range(var_off[t], var_off[t + 1]):
            p *= s[var_flat[idx]]
        prod[t] = p
    counts = np.zeros(1 << n, dtype=np.int64)
    for sweep in range(n_sweeps):
        for i in range(n):
            delta = 0.0
            for k in range(adj_off[i], adj_off[i + 1]):
                delta += 2.0 * coeffs[adj_terms[k]] * prod[adj_terms[k]]
            if delta <= 0.0 or np.random.random() < np.exp(-beta * delta):
                s[i] = -s[i]
                for k in range(adj_off[i], adj_off[i + 1]):
                    prod[adj_terms[k]] = -prod[adj_terms[k]]
        if sweep >= burn and (sweep - burn) % thin == 0:
            idx = 0
            for i in range(n):
                idx = (idx << 1) | (1 if s[i] > 0 else 0)
            counts[idx] += 1
    return counts


def _kernel_inputs(problem: IsingProblem):
    coeffs, var_off, var_flat, adj_off, adj_terms = problem.term_arrays
    return coeffs, var_off, var_flat, adj_off, adj_terms


def _derive(seed: int, *path) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, path)]).generate_state(1)[0] % (2**31 - 1))


def sa_run(problem: IsingProblem, schedule: SaSchedule, seed: int, init_config=None):
    """One annealing run; returns (best configuration, exact energy).

    Starts from a uniform random configuration unless ``init_config`` is
    given.  Same (problem, schedule, seed) gives identical output.
    """
    rng = np.random.default_rng(seed)
    if init_config is None:
        init = rng.choice(np.array([-1, 1], dtype=np.int8), size=problem.n)
    else:
        init = as_config(init_config, problem.n).copy()
    kernel_seed = int(rng.integers(0, 2**31 - 1))
    best_s, _, _ = _sa_kernel(
        *_kernel_inputs(problem),
        schedule.betas(),
        init,
        kernel_seed,
        schedule.spin_order == "random",
    )
    return best_s, float(evaluate_energy(problem, best_s))


def sa_acceptance_rate(problem: IsingProblem, schedule: SaSchedule, seed: int) -> float:
    """Fraction of accepted Metropolis proposals over one run (diagnostic)."""
    rng = np.random.default_rng(seed)
    init = rng.choice(np.array([-1, 1], dtype=np.int8), size=problem.n)
    kernel_seed = int(rng.integers(0, 2**31 - 1))
    _, _, accepts = _sa_kernel(
        *_kernel_inputs(problem),
        schedule.betas(),
        init,
        kernel_seed,
        schedule.spin_order == "random",
    )
    return accepts / (schedule.n_sweeps * problem.n)


def sa_boltzmann_counts(
    problem: IsingProblem,
    beta: float,
    n_sweeps: int,
    seed: int = 0,
    burn: int | None = None,
    thin: int = 1,
) -> np.ndarray:
    """End-of-sweep state occupancy at fixed temperature, for small n.

    State index packs spins as bits with s_0 the most significant and +1
    mapping to bit 1.
    """
    if problem.n > 16:
        raise InputError("occupancy diagnostic limited to n <= 16")
    if burn is None:
        burn = max(10, n_sweeps // 10)
    rng = np.random.default_rng(seed)
    init = rng.choice(np.array([-1, 1], dtype=np.int8), size=problem.n)
    kernel_seed = int(rng.integers(0, 2**31 - 1))
    return _sa_visit_counts(
        *_kernel_inputs(problem), beta, n_sweeps, burn, thin, init, kernel_seed
    )


def sa_success_probability(
    problem: IsingProblem,
    schedule: SaSchedule,
    n_runs: int,
    seed: int,
    target_energy: float,
) -> tuple[float, float]:
    """Fraction of independent runs reaching target_energy (within 1e-9),
    with the binomial standard error."""
    if n_runs < 1:
        raise InputError("need n_runs >= 1")
    hits = 0
    for r in range(n_runs):
        _, energy = sa_run(problem, schedule, _derive(seed, r))
        if energy <= target_energy + 1e-9:
            hits += 1
    p = hits / n_runs
    return p, math.sqrt(p * (1.0 - p) / n_runs)


@dataclass
class TuneResult:
    schedule: SaSchedule
    effort: float
    rows: list  # (n_sweeps, beta_init, beta_final, quantile_effort, min_p, max_p)


def sa_tune(
    instances,
    quantile: float,
    sweep_grid,
    beta_grid,
    target_energies=None,
    n_runs: int = 50,
    seed: int = 0,
    base_schedule: SaSchedule | None = None,
) -> TuneResult:
    """Grid search minimizing the q-quantile of estimated total effort.

    Effort per instance is n_sweeps * N * ceil(ln(0.01)/ln(1-p)), the total
    spin updates needed for 99% confidence under restarts.  ``beta_grid``
    holds (beta_init, beta_final) pairs.  Ties break toward fewer sweeps,
    then smaller beta_final, then smaller beta_init.  If no grid point
    succeeds on any instance, raises TuningError carrying the point with
    the highest observed success probability.
    """
    from .bench import nearest_rank_quantile, restarts_to_target
    from .problems import brute_force_ground_state

    instances = list(instances)
    if not instances:
        raise InputError("need at least one tuning instance")
    if target_energies is None:
        target_energies = [brute_force_ground_state(p)[1] for p in instances]
    proto = base_schedule or SaSchedule(0.1, 3.0, 100)

    rows = []
    best_key = None
    best_row = None
    best_p_seen, best_point_seen = 0.0, None
    for n_sweeps in sweep_grid:
        for beta_init, beta_final in beta_grid:
            schedule = replace(
                proto, beta_init=beta_init, beta_final=beta_final, n_sweeps=int(n_sweeps)
            )
            efforts, ps = [], []
            for idx, (prob, target) in enumerate(zip(instances, target_energies)):
                p, _ = sa_success_probability(
                    prob, schedule, n_runs, _derive(seed, idx, int(n_sweeps)), target
                )
                ps.append(p)
                efforts.append(n_sweeps * prob.n * restarts_to_target(p))
            q_eff = nearest_rank_quantile(efforts, quantile)
            rows.append((n_sweeps, beta_init, beta_final, q_eff, min(ps), max(ps)))
            if max(ps) > best_p_seen:
                best_p_seen, best_point_seen = max(ps), schedule
            if q_eff is None:
                continue
            key = (q_eff, n_sweeps, beta_final, beta_init)
            if best_key is None or key < best_key:
                best_key = key
                best_row = schedule
    if best_row is None:
        raise TuningError(
            "no grid point reached the target on the tuning quantile",
            best_point=best_point_seen,
            best_p=best_p_seen,
        )
    return TuneResult(schedule=best_row, effort=best_key[0], rows=rows)
