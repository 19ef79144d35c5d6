"""Discrete imaginary-time path-integral Monte Carlo annealer for 2-local
transverse-field Ising problems.

Each spin j carries a worldline of M replica values sigma_j(tau).  The
sampled distribution is exp(-beta * H_cl) with

    H_cl = (B(s)/M) * sum_tau H_P(sigma(tau))
           - Jperp(s) * sum_j sum_tau sigma_j(tau) sigma_j(tau+1),

    Jperp(s) = -(1/(2 beta)) ln tanh(A(s) beta / M)  > 0,

periodic or open along tau.  Updates are single-worldline clusters: a
contiguous tau-interval is grown from a random seed replica through parallel
neighbors with the bond probability 1 - exp(-2 beta Jperp), then the whole
interval flip is Metropolis-accepted against the spatial energy change.
(The bond rule uses the dimensionless action coupling beta*Jperp; detailed
balance against exp(-beta H_cl) fails without the beta.)  A sweep makes two
such attempts for every worldline.  Inverse temperatures are quoted per
linear frequency: beta = 1/(k_B T / h) with energies in GHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from numba import njit

from .errors import InputError, TuningError
from .problems import IsingProblem, evaluate_energies, evaluate_energy


class AnnealSchedule:
    """Transverse/problem amplitude pair (A(s), B(s)) in GHz over s in [0,1].

    Tabulated schedules interpolate linearly between points; the linear kind
    is A(s) = A0*(1-s), B(s) = B0*s.
    """

    def __init__(self, points, kind: str = "tabulated", name: str | None = None):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
            raise InputError("schedule needs rows of (s, A_GHz, B_GHz)")
        s = pts[:, 0]
        if s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
            raise InputError("s must increase strictly from 0 to 1")
        if np.any(pts[:, 1:] < 0):
            raise InputError("amplitudes must be nonnegative")
        if kind not in ("linear", "tabulated"):
            raise InputError(f"unknown schedule kind {kind!r}")
        self.points = pts
        self.kind = kind
        self.name = name or kind

    @classmethod
    def linear(cls, a0: float = 1.0, b0: float = 1.0) -> "AnnealSchedule":
        return cls([(0.0, a0, 0.0), (1.0, 0.0, b0)], kind="linear", name="linear")

    def a(self, s):
        return np.interp(s, self.points[:, 0], self.points[:, 1])

    def b(self, s):
        return np.interp(s, self.points[:, 0], self.points[:, 2])

    def to_csv(self, path, metadata: dict | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# kind={self.kind}\n# name={self.name}\n")
            for key, value in (metadata or {}).items():
                fh.write(f"# {key}={value}\n")
            fh.write("s,A_GHz,B_GHz\n")
            for s, a, b in self.points:
                fh.write(f"{float(s)!r},{float(a)!r},{float(b)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "AnnealSchedule":
        kind, name = "tabulated", None
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if "=" in body:
                        key, value = body.split("=", 1)
                        if key.strip() == "kind":
                            kind = value.strip()
                        elif key.strip() == "name":
                            name = value.strip()
                    continue
                if line.lower().startswith("s,"):
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise InputError(f"bad schedule row {line!r}")
                rows.append(tuple(float(x) for x in parts))
        return cls(rows, kind=kind, name=name)


def builtin_schedule(name: str) -> AnnealSchedule:
    """Load one of the schedules shipped with the package
    ("linear" or "dw2x-approx")."""
    ref = resources.files("tunnelbench").joinpath(f"data/{name}.csv")
    if not ref.is_file():
        raise InputError(f"no builtin schedule named {name!r}")
    with resources.as_file(ref) as path:
        return AnnealSchedule.from_csv(path)


@dataclass
class WorldlineState:
    """M replica values per spin, plus the imaginary-time boundary rule."""

    spins: np.ndarray  # int8, shape (n, M)
    boundary: str = "periodic"
    beta: float = 1.0

    def __post_init__(self):
        self.spins = np.asarray(self.spins, dtype=np.int8)
        if self.spins.ndim != 2 or self.spins.shape[1] < 1:
            raise InputError("worldline state needs shape (n, M>=1)")
        if self.boundary not in ("periodic", "open"):
            raise InputError(f"unknown boundary {self.boundary!r}")
        if self.beta <= 0:
            raise InputError("beta must be positive")

    @property
    def n(self) -> int:
        return self.spins.shape[0]

    @property
    def trotter(self) -> int:
        return self.spins.shape[1]


def replica_coupling(a_ghz: float, beta: float, trotter: int) -> float:
    """Ferromagnetic coupling between adjacent replicas of one spin.

    Jperp = -(1/(2 beta)) ln tanh(A beta / M); always positive, and +inf at
    A = 0 (frozen worldline - the caller must handle the limit).
    Evaluated through log1p so large arguments do not round tanh to one.
    """
    if a_ghz < 0 or beta <= 0 or trotter < 1:
        raise InputError("need A >= 0, beta > 0, M >= 1")
    if a_ghz == 0.0:
        return math.inf
    x = a_ghz * beta / trotter
    e2 = math.exp(-2.0 * x)
    # ln tanh x = ln(1-e^-2x) - ln(1+e^-2x)
    log_tanh = math.log1p(-e2) - math.log1p(e2)
    # floor at the smallest positive float once e^-2x underflows
    return max(-log_tanh / (2.0 * beta), 5e-324)


def effective_classical_energy(
    problem: IsingProblem, state: WorldlineState, schedule: AnnealSchedule, s: float
) -> float:
    """Energy of the replicated classical system at annealing parameter s."""
    if problem.max_order > 2:
        from .errors import UnsupportedProblemError

        raise UnsupportedProblemError("worldline energy defined for K<=2 problems")
    spins = state.spins
    m = state.trotter
    b_s = float(schedule.b(s))
    spatial = float(np.sum(evaluate_energies(problem, spins.T))) * b_s / m
    jperp = replica_coupling(float(schedule.a(s)), state.beta, m)
    if state.boundary == "periodic":
        corr = float(np.sum(spins * np.roll(spins, -1, axis=1)))
    else:
        corr = float(np.sum(spins[:, :-1] * spins[:, 1:]))
    if math.isinf(jperp):
        if corr > 0:
            return -math.inf
        if corr < 0:
            return math.inf
        return spatial
    return spatial - jperp * corr


@njit(cache=True)
def _time_bond_probability(a, beta, m):
    """Bond-activation probability 1 - exp(-2 beta Jperp) between parallel
    tau-neighbors; equals one in the frozen-worldline limit A -> 0."""
    x = a * beta / m
    if x <= 0.0:
        return 1.0
    e2 = np.exp(-2.0 * x)
    k_time = -0.5 * (np.log1p(-e2) - np.log1p(e2))
    return -np.expm1(-2.0 * k_time)


@njit(cache=True)
def _worldline_cluster_update(h, nbr_off, nbr_idx, nbr_val, sigma, j, p_add, scale, periodic):
    """Grow a contiguous tau-interval of worldline j and Metropolis-flip it
    against the spatial action change (scale = beta*B/M)."""
    m = sigma.shape[1]
    tau0 = np.random.randint(0, m)
    lo = tau0
    hi = tau0
    size = 1
    while size < m:
        nxt = lo - 1
        if nxt < 0:
            if not periodic:
                break
            nxt += m
        if sigma[j, nxt] != sigma[j, lo]:
            break
        if np.random.random() >= p_add:
            break
        lo = nxt
        size += 1
    while size < m:
        nxt = hi + 1
        if nxt >= m:
            if not periodic:
                break
            nxt -= m
        if sigma[j, nxt] != sigma[j, hi]:
            break
        if np.random.random() >= p_add:
            break
        hi = nxt
        size += 1
    action = 0.0
    tau = lo
    for _ in range(size):
        local = h[j]
        for k in range(nbr_off[j], nbr_off[j + 1]):
            local += nbr_val[k] * sigma[nbr_idx[k], tau]
        action += 2.0 * sigma[j, tau] * local
        tau += 1
        if tau >= m:
            tau -= m
    action *= scale
    if action <= 0.0 or np.random.random() < np.exp(-action):
        tau = lo
        for _ in range(size):
            sigma[j, tau] = -sigma[j, tau]
            tau += 1
            if tau >= m:
                tau -= m


@njit(cache=True)
def _qmc_sweeps(h, nbr_off, nbr_idx, nbr_val, a_arr, b_arr, beta, periodic, sigma, seed):
    np.random.seed(seed)
    n, m = sigma.shape
    for sweep in range(a_arr.shape[0]):
        p_add = _time_bond_probability(a_arr[sweep], beta, m)
        scale = beta * b_arr[sweep] / m
        for j in range(n):
            for _ in range(2):
                _worldline_cluster_update(
                    h, nbr_off, nbr_idx, nbr_val, sigma, j, p_add, scale, periodic
                )
    return sigma


@njit(cache=True)
def _qmc_measure(
    h, nbr_off, nbr_idx, nbr_val, a, b, beta, periodic, sigma, n_sweeps, burn, seed
):
    """Fixed-s sampling; returns (sum_z, sum_timecorr, n_samples) where the
    per-sweep observables are averaged over replicas (and time bonds)."""
    np.random.seed(seed)
    n, m = sigma.shape
    sum_z = np.zeros(n)
    sum_tt = np.zeros(n)
    samples = 0
    p_add = _time_bond_probability(a, beta, m)
    scale = beta * b / m
    for sweep in range(n_sweeps):
        for j in range(n):
            for _ in range(2):
                _worldline_cluster_update(
                    h, nbr_off, nbr_idx, nbr_val, sigma, j, p_add, scale, periodic
                )
        if sweep >= burn:
            samples += 1
            bonds = m if periodic else m - 1
            for j in range(n):
                acc = 0.0
                for tau in range(m):
                    acc += sigma[j, tau]
                sum_z[j] += acc / m
                acc = 0.0
                for tau in range(bonds):
                    nxt = tau + 1
                    if nxt >= m:
                        nxt -= m
                    acc += sigma[j, tau] * sigma[j, nxt]
                sum_tt[j] += acc / bonds
    return sum_z, sum_tt, samples


def _two_local(problem: IsingProblem):
    return problem.two_local_arrays()


def _derive(seed: int, *path) -> int:
    return int(
        np.random.SeedSequence([int(seed), *map(int, path)]).generate_state(1)[0]
        % (2**31 - 1)
    )


def qmc_anneal(
    problem: IsingProblem,
    schedule: AnnealSchedule,
    beta: float,
    trotter: int,
    n_sweeps: int,
    boundary: str = "periodic",
    seed: int = 0,
    readout: str = "slice0",
):
    """Anneal all worldlines from a random start; returns (config, energy).

    The annealing parameter advances once per sweep, s = i/n_sweeps.
    ``readout`` is either "slice0" (return replica tau=0) or "best-replica"
    (return the minimum-energy replica under the classical cost).
    """
    if beta <= 0 or trotter < 2 or n_sweeps < 1:
        raise InputError("need beta > 0, M >= 2, n_sweeps >= 1")
    if boundary not in ("periodic", "open"):
        raise InputError(f"unknown boundary {boundary!r}")
    if readout not in ("slice0", "best-replica"):
        raise InputError(f"unknown readout {readout!r}")
    h, off, idx, val = _two_local(problem)
    svals = np.arange(1, n_sweeps + 1, dtype=np.float64) / n_sweeps
    a_arr = schedule.a(svals).astype(np.float64)
    b_arr = schedule.b(svals).astype(np.float64)
    rng = np.random.default_rng(seed)
    sigma = rng.choice(np.array([-1, 1], dtype=np.int8), size=(problem.n, trotter))
    kernel_seed = int(rng.integers(0, 2**31 - 1))
    sigma = _qmc_sweeps(
        h, off, idx, val, a_arr, b_arr, float(beta), boundary == "periodic", sigma, kernel_seed
    )
    if readout == "slice0":
        config = sigma[:, 0].copy()
    else:
        energies = evaluate_energies(problem, sigma.T)
        config = sigma[:, int(np.argmin(energies))].copy()
    return config, float(evaluate_energy(problem, config))


def qmc_success_probability(
    problem: IsingProblem,
    schedule: AnnealSchedule,
    beta: float,
    trotter: int,
    n_sweeps: int,
    boundary: str,
    n_runs: int,
    seed: int,
    target_energy: float,
) -> tuple[float, float]:
    """Fraction of independent annealing runs reaching the target energy."""
    if n_runs < 1:
        raise InputError("need n_runs >= 1")
    hits = 0
    for r in range(n_runs):
        _, energy = qmc_anneal(
            problem, schedule, beta, trotter, n_sweeps, boundary, _derive(seed, r)
        )
        if energy <= target_energy + 1e-9:
            hits += 1
    p = hits / n_runs
    return p, math.sqrt(p * (1.0 - p) / n_runs)


def qmc_sample_fixed(
    problem: IsingProblem,
    a_ghz: float,
    b_ghz: float,
    beta: float,
    trotter: int,
    n_sweeps: int,
    burn: int = 100,
    boundary: str = "periodic",
    seed: int = 0,
):
    """Equilibrium sampling at fixed (A, B, beta); diagnostic observables.

    Returns dict with per-spin replica-averaged magnetization "sz" and
    tau-neighbor correlation "time_corr".
    """
    h, off, idx, val = _two_local(problem)
    rng = np.random.default_rng(seed)
    sigma = rng.choice(np.array([-1, 1], dtype=np.int8), size=(problem.n, trotter))
    kernel_seed = int(rng.integers(0, 2**31 - 1))
    sum_z, sum_tt, samples = _qmc_measure(
        h,
        off,
        idx,
        val,
        float(a_ghz),
        float(b_ghz),
        float(beta),
        boundary == "periodic",
        sigma,
        n_sweeps,
        burn,
        kernel_seed,
    )
    if samples == 0:
        raise InputError("no samples collected; raise n_sweeps above burn")
    return {"sz": sum_z / samples, "time_corr": sum_tt / samples, "samples": samples}


@dataclass
class PairOperatingPoint:
    n_sweeps: int
    beta: float
    p_hat: float
    stderr: float
    rows: list  # (n_sweeps, beta, p_hat, stderr)
    saturation_beta: dict

    @property
    def product(self) -> float:
        return self.beta * self.n_sweeps


def optimize_pair_parameters(
    problem: IsingProblem,
    target_p0: float,
    sweep_grid,
    beta_grid,
    schedule: AnnealSchedule,
    trotter: int = 64,
    boundary: str = "periodic",
    n_runs: int = 100,
    seed: int = 0,
    target_energy: float | None = None,
) -> PairOperatingPoint:
    """Pick (n_sweeps, beta) minimizing beta*n_sweeps at fixed success.

    Among grid points whose estimated success probability reaches
    ``target_p0``, the smallest beta*n_sweeps wins (ties toward fewer
    sweeps, then smaller beta).  The saturation beta per sweep count - the
    smallest beta within one standard error of that sweep count's best
    probability - is recorded.  Raises TuningError with the best point if
    no grid point reaches the target.
    """
    if not 0.0 < target_p0 < 1.0:
        raise InputError("target success probability must be in (0,1)")
    if target_energy is None:
        from .problems import brute_force_ground_state

        target_energy = brute_force_ground_state(problem)[1]
    rows = []
    by_sweeps: dict[int, list] = {}
    for n_sweeps in sweep_grid:
        for beta in beta_grid:
            p, se = qmc_success_probability(
                problem,
                schedule,
                beta,
                trotter,
                int(n_sweeps),
                boundary,
                n_runs,
                _derive(seed, int(n_sweeps), int(beta * 1000)),
                target_energy,
            )
            rows.append((int(n_sweeps), float(beta), p, se))
            by_sweeps.setdefault(int(n_sweeps), []).append((float(beta), p, se))
    saturation = {}
    for n_sweeps, entries in by_sweeps.items():
        top = max(p for _, p, _ in entries)
        for beta, p, se in sorted(entries):
            if p >= top - max(se, 1e-12):
                saturation[n_sweeps] = beta
                break
    feasible = [r for r in rows if r[2] >= target_p0]
    if not feasible:
        best = max(rows, key=lambda r: r[2])
        raise TuningError(
            f"no grid point reached p0 >= {target_p0}; best was "
            f"p={best[2]:.3f} at (n_sweeps={best[0]}, beta={best[1]})",
            best_point=(best[0], best[1]),
            best_p=best[2],
        )
    chosen = min(feasible, key=lambda r: (r[1] * r[0], r[0], r[1]))
    return PairOperatingPoint(
        n_sweeps=chosen[0],
        beta=chosen[1],
        p_hat=chosen[2],
        stderr=chosen[3],
        rows=rows,
        saturation_beta=saturation,
    )
