"""Number partitioning: instances, heuristics, and closed-form statistics.

Instances carry arbitrary-precision positive integers so residues are exact;
the real-valued ensemble behind the analytic formulas is recovered as
a_j / 2^b.  The cost of a configuration s is E(s) = |Omega_s| with the
signed residue Omega_s = sum_j a_j s_j.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numba import njit

from .errors import InputError
from .problems import as_config

KK_ALPHA = 0.72  # decay exponent of the differencing heuristic's residue


@dataclass(frozen=True)
class NppInstance:
    """N positive integers below 2^b."""

    a: tuple
    bits: int

    def __post_init__(self):
        if len(self.a) < 1:
            raise InputError("instance needs at least one number")
        limit = 1 << self.bits
        for v in self.a:
            if not 1 <= v < limit:
                raise InputError(f"value {v} outside [1, 2^{self.bits})")

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def mean_sq(self) -> float:
        """Empirical <a^2> of the rescaled reals a_j / 2^b."""
        scale = float(1 << self.bits)
        return float(sum((v / scale) ** 2 for v in self.a) / self.n)

    @property
    def is_hard(self) -> bool:
        """Whether b/N clears the hardness threshold 1 - log2(N)/(2N)."""
        kappa_c = 1.0 - math.log2(self.n) / (2 * self.n)
        return self.bits / self.n >= kappa_c


@dataclass(frozen=True)
class Partition:
    """A configuration with its exact signed residue."""

    config: np.ndarray
    omega: int

    @property
    def energy(self) -> int:
        return abs(self.omega)


def generate_npp(n: int, bits: int, seed: int = 0) -> NppInstance:
    """Uniform instance: a_j drawn independently from [1, 2^bits)."""
    if n < 2 or bits < 1:
        raise InputError("need n >= 2 and bits >= 1")
    import random

    rng = random.Random(seed)
    return NppInstance(tuple(rng.randrange(1, 1 << bits) for _ in range(n)), bits)


def residue(instance: NppInstance, config) -> tuple[int, int]:
    """Exact (Omega, E) of a configuration."""
    s = as_config(config, instance.n)
    omega = sum(v * int(sign) for v, sign in zip(instance.a, s))
    return omega, abs(omega)


def partition_from_config(instance: NppInstance, config) -> Partition:
    s = as_config(config, instance.n)
    omega, _ = residue(instance, s)
    return Partition(config=s, omega=omega)


def greedy_partition(instance: NppInstance) -> Partition:
    """Largest-first greedy: place each number in the currently lighter set,
    ties going to the first set."""
    order = sorted(range(instance.n), key=lambda i: (-instance.a[i], i))
    sum_a, sum_b = 0, 0
    config = np.empty(instance.n, dtype=np.int8)
    for i in order:
        if sum_a <= sum_b:
            sum_a += instance.a[i]
            config[i] = 1
        else:
            sum_b += instance.a[i]
            config[i] = -1
    return partition_from_config(instance, config)


def kk_partition(instance: NppInstance) -> Partition:
    """Karmarkar-Karp differencing: repeatedly replace the two largest
    numbers by their difference; the final survivor is the residue.

    The partition itself is rebuilt by two-coloring the difference tree:
    the larger operand keeps the combined node's side, the smaller takes
    the opposite side.
    """
    n = instance.n
    values = list(instance.a)
    heap = [(-values[i], i) for i in range(n)]
    heapq.heapify(heap)
    children: dict[int, tuple[int, int]] = {}
    next_id = n
    while len(heap) > 1:
        neg_u, u = heapq.heappop(heap)
        neg_v, v = heapq.heappop(heap)
        diff = (-neg_u) - (-neg_v)
        children[next_id] = (u, v)
        heapq.heappush(heap, (-diff, next_id))
        next_id += 1
    root_value, root = -heap[0][0], heap[0][1]
    sign = {root: 1}
    stack = [root]
    while stack:
        node = stack.pop()
        if node in children:
            larger, smaller = children[node]
            sign[larger] = sign[node]
            sign[smaller] = -sign[node]
            stack.extend((larger, smaller))
    config = np.array([sign[i] for i in range(n)], dtype=np.int8)
    part = partition_from_config(instance, config)
    assert part.energy == root_value, "difference-tree coloring is inconsistent"
    return part


def algorithmic_tunneling(
    instance: NppInstance,
    kappa: int,
    seed: int = 0,
    max_steps: int | None = None,
    at_most: bool = False,
    kappa_guard: int = 6,
    init_config=None,
    trace: list | None = None,
) -> Partition:
    """Greedy descent over simultaneous flips of exactly kappa spins.

    Each step enumerates all C(N, kappa) groups (all sizes 1..kappa with
    ``at_most``), applies the single best strictly improving flip, and stops
    at a local minimum or after max_steps (default 50*N/kappa).  ``trace``,
    if given, collects the energy after every applied step.
    """
    n = instance.n
    if not 1 <= kappa <= n:
        raise InputError(f"kappa must be in [1, {n}], got {kappa}")
    if kappa > kappa_guard:
        raise InputError(
            f"kappa={kappa} exceeds the guard {kappa_guard}: each step would "
            f"enumerate C({n},{kappa}) = {math.comb(n, kappa)} flips"
        )
    if max_steps is None:
        max_steps = max(1, (50 * n) // kappa)
    if init_config is None:
        rng = np.random.default_rng(seed)
        config = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
    else:
        config = as_config(init_config, n).copy()
    omega, energy = residue(instance, config)
    sizes = range(1, kappa + 1) if at_most else (kappa,)
    for _ in range(max_steps):
        best_delta = None
        best_group = None
        for k in sizes:
            for group in combinations(range(n), k):
                delta = -2 * sum(instance.a[j] * int(config[j]) for j in group)
                if abs(omega + delta) < (energy if best_delta is None else abs(omega + best_delta)):
                    best_delta = delta
                    best_group = group
        if best_group is None:
            break
        omega += best_delta
        energy = abs(omega)
        for j in best_group:
            config[j] = -config[j]
        if trace is not None:
            trace.append(energy)
    return Partition(config=config, omega=omega)


def npp_brute_force(instance: NppInstance, max_n: int = 30) -> Partition:
    """Exact minimum residue by meet-in-the-middle over signed half sums.

    The representative among ties is the lexicographically smallest
    configuration (-1 sorts before +1, leftmost variable most significant).
    """
    n = instance.n
    if n > max_n:
        raise InputError(f"refusing exact search for n={n} > {max_n}")
    if n == 1:
        return partition_from_config(instance, np.array([1], dtype=np.int8))
    left = list(range((n + 1) // 2))
    right = list(range(len(left), n))

    def signed_sums(indices):
        sums = []
        for m in range(1 << len(indices)):
            total = 0
            for pos, j in enumerate(indices):
                bit = (m >> (len(indices) - 1 - pos)) & 1
                total += instance.a[j] if bit else -instance.a[j]
            sums.append(total)
        return sums

    left_sums = signed_sums(left)
    right_sums = signed_sums(right)
    right_sorted = sorted(set(right_sums))
    import bisect

    best = None
    for ls in left_sums:
        pos = bisect.bisect_left(right_sorted, -ls)
        for p in (pos - 1, pos):
            if 0 <= p < len(right_sorted):
                cand = abs(ls + right_sorted[p])
                if best is None or cand < best:
                    best = cand
    # Lexicographically earliest witness: first right config per sum value,
    # first left config (both enumerations are already in lex order).
    first_right = {}
    for m, rs in enumerate(right_sums):
        if rs not in first_right:
            first_right[rs] = m
    for m, ls in enumerate(left_sums):
        for target in sorted({-ls - best, -ls + best}):
            if target in first_right:
                mr = first_right[target]
                config = np.empty(n, dtype=np.int8)
                for pos, j in enumerate(left):
                    config[j] = 1 if (m >> (len(left) - 1 - pos)) & 1 else -1
                for pos, j in enumerate(right):
                    config[j] = 1 if (mr >> (len(right) - 1 - pos)) & 1 else -1
                return partition_from_config(instance, config)
    raise AssertionError("meet-in-the-middle bookkeeping failed")


@dataclass(frozen=True)
class NppStats:
    """Closed-form ensemble predictions for random instances.

    ``density`` is the residue density in the parity-lattice convention
    (signed residues share the parity of sum(a), so allowed values are
    spaced by two and carry twice the naive Gaussian weight).
    """

    n: int
    mean_sq: float
    kappa: int
    alpha: float
    mean_energy: float
    min_energy_median: float
    q: float
    sigma_q: float
    p_kappa_00: float
    e_at: float
    e_ratio_vs_kk: float
    n_kappa: float

    def density(self, omega) -> np.ndarray:
        var = self.n * self.mean_sq
        omega = np.asarray(omega, dtype=np.float64)
        return 2.0 / math.sqrt(2 * math.pi * var) * np.exp(-(omega**2) / (2 * var))


def predict_stats(n: int, mean_sq: float, kappa: int, alpha: float = KK_ALPHA) -> NppStats:
    """Evaluate the ensemble formulas; logs of N are base two throughout."""
    if n < 1 or mean_sq <= 0 or kappa < 1 or alpha <= 0:
        raise InputError("parameters must be positive")
    q = 1.0 - 2.0 * kappa / n
    mean_energy = math.sqrt(2.0 * mean_sq * n / math.pi)
    log2n = math.log2(n)
    return NppStats(
        n=n,
        mean_sq=mean_sq,
        kappa=kappa,
        alpha=alpha,
        mean_energy=mean_energy,
        min_energy_median=mean_energy * 2.0 ** (-n),
        q=q,
        sigma_q=mean_sq * math.sqrt(max(0.0, 1.0 - q * q)),
        p_kappa_00=1.0 / math.sqrt(8.0 * math.pi * kappa * mean_sq),
        e_at=4.0 * math.pi * kappa * mean_sq * (kappa / n) ** kappa * math.exp(-kappa),
        e_ratio_vs_kk=n ** (alpha * log2n - kappa) * kappa**kappa * math.exp(-kappa),
        n_kappa=(math.e / kappa) * math.exp(kappa / alpha),
    )


# ---------------------------------------------------------------------------
# Direct simulated annealing on the residue cost, for runtime scaling studies.
# Energies are exact int64 deltas; beta is quoted per 2^b so that schedules
# transfer across bit depths (the cost behaves like sum of a_j/2^b reals).


@njit(cache=True)
def _npp_sa_kernel(a, betas, s, seed):
    np.random.seed(seed)
    n = a.shape[0]
    omega = np.int64(0)
    for j in range(n):
        omega += a[j] * s[j]
    best = abs(omega)
    best_s = s.copy()
    for sweep in range(betas.shape[0]):
        beta = betas[sweep]
        for j in range(n):
            new_omega = omega - 2 * a[j] * s[j]
            delta = abs(new_omega) - abs(omega)
            if delta <= 0 or np.random.random() < np.exp(-beta * delta):
                omega = new_omega
                s[j] = -s[j]
                if abs(omega) < best:
                    best = abs(omega)
                    best_s[:] = s
    return best_s, best


def npp_anneal(
    instance: NppInstance,
    beta_init: float,
    beta_final: float,
    n_sweeps: int,
    seed: int = 0,
) -> Partition:
    """Metropolis annealing of |Omega| with a linear-in-beta schedule.

    beta_init/beta_final are in units of 1/2^b.  Requires the integers to
    fit comfortably in int64 (bits + log2(N) <= 62).
    """
    if n_sweeps < 1 or not 0 <= beta_init <= beta_final:
        raise InputError("need n_sweeps >= 1 and 0 <= beta_init <= beta_final")
    if instance.bits + math.log2(instance.n) > 62:
        raise InputError("instance too wide for the int64 annealer")
    a = np.array(instance.a, dtype=np.int64)
    scale = float(1 << instance.bits)
    betas = np.linspace(beta_init, beta_final, n_sweeps) / scale
    rng = np.random.default_rng(seed)
    init = rng.choice(np.array([-1, 1], dtype=np.int64), size=instance.n)
    best_s, _ = _npp_sa_kernel(a, betas, init, int(rng.integers(0, 2**31 - 1)))
    return partition_from_config(instance, best_s.astype(np.int8))


def npp_sa_success_probability(
    instance: NppInstance,
    target_energy: int,
    beta_init: float,
    beta_final: float,
    n_sweeps: int,
    n_runs: int,
    seed: int = 0,
) -> tuple[float, float]:
    """Fraction of independent annealing runs reaching the target residue."""
    hits = 0
    for r in range(n_runs):
        part = npp_anneal(
            instance, beta_init, beta_final, n_sweeps, seed=_derive_seed(seed, r)
        )
        if part.energy <= target_energy:
            hits += 1
    p = hits / n_runs
    return p, math.sqrt(p * (1 - p) / n_runs)


def _derive_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Persistence


def save_npp_instance(path, instance: NppInstance, seed=None) -> None:
    payload = {
        "format": "npp-1",
        "N": instance.n,
        "b": instance.bits,
        "a": [str(v) for v in instance.a],
    }
    if seed is not None:
        payload["seed"] = seed
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_npp_instance(path) -> NppInstance:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "npp-1":
        raise InputError(f"unsupported NPP format {payload.get('format')!r}")
    values = tuple(int(v) for v in payload["a"])
    instance = NppInstance(values, int(payload["b"]))
    if instance.n != int(payload["N"]):
        raise InputError("N field disagrees with the value list")
    return instance
