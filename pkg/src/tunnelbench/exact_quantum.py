"""Exact reference solvers for small transverse-field Ising systems.

The annealing Hamiltonian is H(s) = -A(s) sum_j sigma_j^x + B(s) H_P with
A, B in GHz (linear frequencies).  Schroedinger evolution applies the 2*pi
phase factor: i dpsi/dt = 2*pi*H_GHz(t/T) psi with t in nanoseconds.  The
Hamiltonian is never materialized; sigma^x terms act by axis swaps on the
2^n state vector and H_P is a precomputed diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import LinearOperator, eigsh

from .constants import KB_OVER_H_GHZ_PER_K, NOISE_LINE_WIDTH_GHZ, NOISE_OHMIC_ETA
from .errors import InputError, NumericalError
from .problems import IsingProblem
from .qmc import AnnealSchedule

SPECTRUM_MAX_N = 20
EVOLVE_MAX_N = 16


def classical_energy_diagonal(problem: IsingProblem) -> np.ndarray:
    """H_P eigenvalues over the 2^n computational basis.

    Basis index m encodes qubit j in bit j with bit 0 meaning sigma^z = +1.
    """
    if problem.n > SPECTRUM_MAX_N:
        raise InputError(f"diagonal for n={problem.n} exceeds the n<={SPECTRUM_MAX_N} guard")
    dim = 1 << problem.n
    states = np.arange(dim, dtype=np.uint64)
    diag = np.zeros(dim)
    for key, c in problem.terms.items():
        prod = np.ones(dim)
        for j in key:
            prod *= 1.0 - 2.0 * ((states >> np.uint64(j)) & np.uint64(1)).astype(np.float64)
        diag -= c * prod
    return diag


def _apply_sigma_x_sum(v: np.ndarray, n: int, out: np.ndarray) -> np.ndarray:
    """out += sum_j sigma_j^x v via axis reversals."""
    for j in range(n):
        out += v.reshape(-1, 2, 1 << j)[:, ::-1, :].reshape(-1)
    return out


@dataclass
class QuantumModel:
    """An Ising problem lifted to qubits, plus its annealing schedule."""

    problem: IsingProblem
    schedule: AnnealSchedule
    diag: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.problem.n > SPECTRUM_MAX_N:
            raise InputError(f"quantum model capped at n <= {SPECTRUM_MAX_N}")
        self.diag = classical_energy_diagonal(self.problem)

    @property
    def dim(self) -> int:
        return 1 << self.problem.n

    def operator(self, s: float) -> LinearOperator:
        a = float(self.schedule.a(s))
        b = float(self.schedule.b(s))
        n = self.problem.n
        diag = self.diag

        def matvec(v):
            v = np.asarray(v).reshape(-1)
            out = b * diag * v
            if a != 0.0:
                flip = np.zeros_like(out)
                _apply_sigma_x_sum(v, n, flip)
                out -= a * flip
            return out

        return LinearOperator((self.dim, self.dim), matvec=matvec, dtype=np.float64)

    def dense(self, s: float) -> np.ndarray:
        if self.problem.n > 12:
            raise InputError("dense Hamiltonian capped at n <= 12")
        eye = np.eye(self.dim)
        op = self.operator(s)
        return np.column_stack([op.matvec(eye[:, i]) for i in range(self.dim)])


@dataclass
class SpectrumResult:
    s_grid: np.ndarray
    energies: np.ndarray  # (len(s_grid), k)
    min_gap: float
    s_min_gap: float

    def gap(self) -> np.ndarray:
        return self.energies[:, 1] - self.energies[:, 0]


def _lowest_eigs(model: QuantumModel, s: float, k: int, v0=None):
    dim = model.dim
    if k >= dim - 1 or dim <= 64:
        mat = model.dense(s) if model.problem.n <= 12 else None
        if mat is not None:
            vals, vecs = np.linalg.eigh(mat)
            return vals[:k], vecs[:, :k]
    try:
        vals, vecs = eigsh(model.operator(s), k=k, which="SA", v0=v0, maxiter=5000)
    except Exception as exc:  # ArpackNoConvergence and friends
        raise NumericalError(f"eigensolver failed at s={s}: {exc}") from exc
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def spectrum_vs_s(model: QuantumModel, k: int = 2, s_grid=None) -> SpectrumResult:
    """k lowest instantaneous eigenvalues on a grid of annealing parameters.

    Consecutive grid points warm-start the iterative eigensolver with the
    previous ground vector, which also makes the output deterministic.
    """
    if s_grid is None:
        s_grid = np.linspace(0.0, 1.0, 51)
    s_grid = np.asarray(s_grid, dtype=np.float64)
    if k < 2:
        raise InputError("need at least two levels to define a gap")
    energies = np.empty((len(s_grid), k))
    v0 = None
    for i, s in enumerate(s_grid):
        vals, vecs = _lowest_eigs(model, float(s), k, v0=v0)
        energies[i] = vals[:k]
        v0 = np.ascontiguousarray(vecs[:, 0])
    gaps = energies[:, 1] - energies[:, 0]
    imin = int(np.argmin(gaps))
    return SpectrumResult(
        s_grid=s_grid,
        energies=energies,
        min_gap=float(gaps[imin]),
        s_min_gap=float(s_grid[imin]),
    )


@njit(cache=True)
def _apply_phase(psi, inverse, unique, angle):
    table = np.empty(unique.shape[0], dtype=np.complex128)
    for u in range(unique.shape[0]):
        table[u] = np.exp(-1j * angle * unique[u])
    for i in range(psi.shape[0]):
        psi[i] *= table[inverse[i]]


@njit(cache=True)
def _apply_x_rotations(psi, n, theta):
    c = np.cos(theta)
    s = np.sin(theta)
    dim = psi.shape[0]
    for j in range(n):
        stride = 1 << j
        block = stride << 1
        for base in range(0, dim, block):
            for off in range(stride):
                i0 = base + off
                i1 = i0 + stride
                v0 = psi[i0]
                v1 = psi[i1]
                psi[i0] = c * v0 + 1j * s * v1
                psi[i1] = c * v1 + 1j * s * v0


@njit(cache=True)
def _split_steps(psi, inverse, unique, thetas, phis):
    """Strang chain Z(phi_0/2) X(theta_0) Z((phi_0+phi_1)/2) X(theta_1) ...

    thetas[k] = 2*pi*A_k*dt (x-rotation angle per spin), phis[k] =
    2*pi*B_k*dt (diagonal phase per unit classical energy).  Consecutive
    half phases are merged; every factor is unitary, so the norm is exact.
    """
    dim = psi.shape[0]
    n = 0
    d = dim
    while d > 1:
        d >>= 1
        n += 1
    steps = thetas.shape[0]
    _apply_phase(psi, inverse, unique, 0.5 * phis[0])
    for k in range(steps):
        _apply_x_rotations(psi, n, thetas[k])
        if k + 1 < steps:
            _apply_phase(psi, inverse, unique, 0.5 * (phis[k] + phis[k + 1]))
        else:
            _apply_phase(psi, inverse, unique, 0.5 * phis[k])
    return psi


def split_propagate(psi, diag, a_vals, b_vals, dt_ns):
    """Propagate psi through len(a_vals) Strang steps of width dt_ns under
    H = -A sigma^x sum + B diag (GHz); exactly norm preserving.

    The classical diagonal usually takes few distinct values, so phases are
    evaluated on the unique set and gathered.
    """
    unique, inverse = np.unique(np.asarray(diag, dtype=np.float64), return_inverse=True)
    thetas = 2.0 * math.pi * np.asarray(a_vals, dtype=np.float64) * dt_ns
    phis = 2.0 * math.pi * np.asarray(b_vals, dtype=np.float64) * dt_ns
    return _split_steps(psi, inverse.astype(np.int64), unique, thetas, phis)


@dataclass
class EvolutionResult:
    times_ns: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    max_norm_error: float


def schrodinger_evolve(
    model: QuantumModel,
    t_qa_ns: float,
    output_times=None,
    dt_ns: float = 0.005,
) -> EvolutionResult:
    """Closed-system anneal from the s=0 ground state.

    Returns populations of the two lowest instantaneous eigenstates on the
    output grid.  The splitting step is second order; halve dt_ns to check
    convergence.  Raises NumericalError if unitarity degrades (a step-size
    or rounding failure).
    """
    if model.problem.n > EVOLVE_MAX_N:
        raise InputError(f"state-vector evolution capped at n <= {EVOLVE_MAX_N}")
    if t_qa_ns <= 0:
        raise InputError("annealing time must be positive")
    if output_times is None:
        output_times = np.linspace(0.0, t_qa_ns, 11)
    output_times = np.sort(np.asarray(output_times, dtype=np.float64))
    if output_times[0] < 0 or output_times[-1] > t_qa_ns * (1 + 1e-12):
        raise InputError("output times must lie in [0, T_QA]")

    _, vecs = _lowest_eigs(model, 0.0, 2)
    psi = vecs[:, 0].astype(np.complex128)
    p0 = np.empty(len(output_times))
    p1 = np.empty(len(output_times))
    max_norm_err = 0.0
    t_now = 0.0
    for i, t_out in enumerate(output_times):
        if t_out > t_now:
            n_steps = max(1, int(math.ceil((t_out - t_now) / dt_ns)))
            dt = (t_out - t_now) / n_steps
            mids = t_now + (np.arange(n_steps) + 0.5) * dt
            s_mid = mids / t_qa_ns
            psi = split_propagate(
                psi, model.diag, model.schedule.a(s_mid), model.schedule.b(s_mid), dt
            )
            t_now = t_out
        norm = float(np.linalg.norm(psi))
        max_norm_err = max(max_norm_err, abs(norm - 1.0))
        vals, vecs = _lowest_eigs(model, float(t_out / t_qa_ns), 2)
        p0[i] = abs(np.vdot(vecs[:, 0], psi)) ** 2
        p1[i] = abs(np.vdot(vecs[:, 1], psi)) ** 2
    if max_norm_err > 1e-6:
        raise NumericalError(f"norm drifted by {max_norm_err:.2e}; reduce dt_ns")
    return EvolutionResult(
        times_ns=output_times, p0=p0, p1=p1, max_norm_error=max_norm_err
    )


@dataclass
class RateModel:
    """Two-level relaxation model of the anneal.

    gap_ghz(s) is the instantaneous splitting Delta_10; w10(s) the downward
    rate in 1/ns (its microscopic form is supplied by the caller); the
    upward rate follows from detailed balance at temperature_mk.
    """

    gap_ghz: callable
    w10: callable
    temperature_mk: float
    t_qa_ns: float

    def w01(self, s: float) -> float:
        kt = temperature_to_frequency(self.temperature_mk)
        return self.w10(s) * math.exp(-self.gap_ghz(s) / kt)


def rate_evolve(model: RateModel, n_points: int = 201):
    """Integrate dp0/dt = -(W01 + W10) p0 + W10 from p0(0)=1.

    Returns (times_ns, p0).  The equilibrium value at frozen s is
    1/(1 + exp(-Delta/kT)); decaying rates trap the population above/below
    that curve.
    """
    if model.t_qa_ns <= 0:
        raise InputError("t_qa_ns must be positive")

    def rhs(t, y):
        s = min(1.0, max(0.0, t / model.t_qa_ns))
        w10 = model.w10(s)
        if w10 < 0:
            raise InputError("rates must be nonnegative")
        w01 = model.w01(s)
        return [-(w01 + w10) * y[0] + w10]

    times = np.linspace(0.0, model.t_qa_ns, n_points)
    sol = solve_ivp(
        rhs, (0.0, model.t_qa_ns), [1.0], t_eval=times, method="LSODA",
        rtol=1e-8, atol=1e-10,
    )
    if not sol.success:
        raise NumericalError(f"rate integration failed: {sol.message}")
    p0 = np.clip(sol.y[0], 0.0, 1.0)
    return times, p0


def equilibrium_p0(gap_ghz: float, temperature_mk: float) -> float:
    """Boltzmann ground-state population of a two-level system."""
    kt = temperature_to_frequency(temperature_mk)
    return 1.0 / (1.0 + math.exp(-gap_ghz / kt))


def temperature_to_frequency(t_mk: float) -> float:
    """k_B T / h in GHz for a temperature in millikelvin."""
    if t_mk <= 0:
        raise InputError("temperature must be positive")
    return KB_OVER_H_GHZ_PER_K * (t_mk * 1e-3)


def beta_from_temperature(t_mk: float) -> float:
    """Inverse temperature in 1/GHz (the linear-frequency convention)."""
    return 1.0 / temperature_to_frequency(t_mk)


def noise_parameters(b_ratio: float):
    """Rescale the measured end-of-anneal noise parameters to mid-anneal.

    (W(s)/W_end)^2 = eta(s)/eta_end = B(s)/B(1); returns (W_GHz, eta) and
    reproduces the measured pair exactly at b_ratio = 1.
    """
    if b_ratio < 0:
        raise InputError("B(s)/B(1) must be nonnegative")
    return NOISE_LINE_WIDTH_GHZ * math.sqrt(b_ratio), NOISE_OHMIC_ETA * b_ratio


def synthetic_decay_rate(w0_per_ns: float, decay: float, s_star: float):
    """Exponential freeze-out family W10(s) = W0 exp(-decay*(s-s*)) past s*.

    A stand-in for microscopic rate curves: fast relaxation before the
    crossing, rapidly vanishing afterwards, which traps population.
    """

    def w10(s: float) -> float:
        return w0_per_ns * (1.0 if s <= s_star else math.exp(-decay * (s - s_star)))

    return w10


def write_spectrum_csv(path, result: SpectrumResult, config_digest=None) -> None:
    k = result.energies.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        if config_digest:
            fh.write(f"# config={config_digest}\n")
        fh.write("s," + ",".join(f"E{i}" for i in range(k)) + "\n")
        for s, row in zip(result.s_grid, result.energies):
            fh.write(",".join(repr(float(x)) for x in (s, *row)) + "\n")


def write_evolution_csv(path, result: EvolutionResult, config_digest=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if config_digest:
            fh.write(f"# config={config_digest}\n")
        fh.write("t_ns,P0,P1\n")
        for t, a, b in zip(result.times_ns, result.p0, result.p1):
            fh.write(f"{float(t)!r},{float(a)!r},{float(b)!r}\n")
