"""Tunneling-action quantities for mean-field spin models.

A domain of D aligned spins moving through coherent states with polar angle
theta and purely imaginary azimuth phi sees the reduced potential

    upsilon(theta) = -A sin(theta) - B g(cos(theta)),

where g is the rescaled per-spin cost of the domain.  Between two minima of
upsilon, energy conservation along the imaginary-time trajectory fixes

    cosh(phi(theta)) = (A sin(theta_s) + B (g_s - g(cos theta))) / (A sin theta)

with theta_s the (meta)stable starting minimum, and the per-spin tunneling
exponent is the reduced one-way action

    a_min/hbar = (1/2) integral arccosh(cosh phi(theta)) sin(theta) dtheta

over the classically forbidden region cosh(phi) >= 1.  The symmetric-sector
level splitting of a rigid domain then scales as exp(-D a_min/hbar), which
is what the exact-diagonalization cross-check measures.

A published deep-well shortcut drops the A sin(theta_s) term, writing the
integrand as arcsinh(v/(A sin theta)) sin(theta) with
v^2 = B^2 (g - g_s)^2 - A^2 sin^2(theta), counts the full bounce (no 1/2),
and needs clamping at the turning points v^2 = 0 because the root turns
negative near the wells; it is available as wkb_action(deep_well=True) but
overestimates the splitting exponent except for very deep wells.

Action functionals on sampled multi-spin paths use units with hbar = 1:
pass energies and the imaginary-time grid in reciprocal units (e.g. angular
frequency and its inverse time).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from .constants import KB_OVER_H_GHZ_PER_K
from .errors import InputError, NumericalError
from .problems import IsingProblem, evaluate_energies


def mean_field_energy(thetas, phis, problem: IsingProblem, a_amp: float, b_amp: float) -> float:
    """Coherent-state energy -A sum sin(theta)cosh(phi) + B <H_P>.

    The azimuthal angles are purely imaginary (phi stores the real
    hyperbolic part), so <sigma^x> = sin(theta)cosh(phi) and <sigma^z> =
    cos(theta); the product structure factorizes over distinct spins.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    phis = np.asarray(phis, dtype=np.float64)
    if thetas.shape != (problem.n,) or phis.shape != (problem.n,):
        raise InputError(f"need angle arrays of shape ({problem.n},)")
    transverse = -a_amp * float(np.sum(np.sin(thetas) * np.cosh(phis)))
    classical = float(evaluate_energies(problem, np.cos(thetas)[None, :])[0])
    return transverse + b_amp * classical


@dataclass(frozen=True)
class ReducedPotential:
    """Rescaled single-angle potential of a rigid tunneling domain."""

    a_amp: float
    b_amp: float
    g: callable
    domain: int = 1

    def upsilon(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        return -self.a_amp * np.sin(theta) - self.b_amp * np.asarray(
            self.g(np.cos(theta)), dtype=np.float64
        )


@dataclass(frozen=True)
class WkbResult:
    a_min: float
    theta0: float
    theta1: float
    turning_points: tuple
    theta_start: float = float("nan")


def _local_minima(pot: ReducedPotential, n_scan: int):
    grid = np.linspace(0.0, math.pi, n_scan + 1)
    vals = pot.upsilon(grid)
    minima = []
    if vals[0] < vals[1]:
        minima.append(grid[0])
    for i in range(1, len(grid) - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            res = minimize_scalar(
                lambda t: float(pot.upsilon(t)),
                bounds=(grid[i - 1], grid[i + 1]),
                method="bounded",
                options={"xatol": 1e-12},
            )
            minima.append(float(res.x))
    if vals[-1] < vals[-2]:
        minima.append(grid[-1])
    # Deduplicate refined minima that collapsed to the same point.
    unique = []
    for t in sorted(minima):
        if not unique or t - unique[-1] > 1e-6:
            unique.append(t)
    return unique


def wkb_action(
    pot: ReducedPotential,
    n_scan: int = 1000,
    rel_tol: float = 1e-8,
    deep_well: bool = False,
) -> WkbResult:
    """Tunneling exponent a_min/hbar of the reduced potential.

    The default evaluates the reduced one-way action along the
    energy-conserving trajectory out of the higher (metastable) minimum;
    exp(-D*a_min) then tracks the exact level splitting of a D-spin domain.
    ``deep_well=True`` evaluates the bounce shortcut instead (see module
    docstring); in that mode a NumericalError signals that the squared
    velocity is negative everywhere and the shortcut does not apply.

    Returns a_min = 0 when the potential has a single minimum (no barrier).
    """
    if pot.a_amp <= 0:
        raise InputError("transverse amplitude must be positive")
    minima = _local_minima(pot, n_scan)
    if len(minima) < 2:
        theta = minima[0] if minima else math.pi / 2
        return WkbResult(
            a_min=0.0, theta0=theta, theta1=theta, turning_points=(theta, theta),
            theta_start=theta,
        )
    vals = [float(pot.upsilon(t)) for t in minima]
    order = sorted(range(len(minima)), key=lambda i: (vals[i], minima[i]))
    lo_min, hi_min = sorted((minima[order[0]], minima[order[1]]))
    v_lo, v_hi = float(pot.upsilon(lo_min)), float(pot.upsilon(hi_min))
    theta_s = lo_min if v_lo >= v_hi else hi_min  # metastable = higher energy
    g_s = float(pot.g(math.cos(theta_s)))
    sin_s = math.sin(theta_s)

    if deep_well:

        def v_squared(theta):
            diff = pot.b_amp * (float(pot.g(math.cos(theta))) - g_s)
            return diff * diff - (pot.a_amp * math.sin(theta)) ** 2

        grid = np.linspace(lo_min, hi_min, max(2000, n_scan))
        v2 = np.array([v_squared(t) for t in grid])
        positive = v2 > 0
        if not positive.any():
            raise NumericalError(
                "no classically forbidden region between the minima "
                "(v^2 < 0 throughout); the deep-well shortcut does not apply"
            )
        peak = int(np.argmax(v2))
        i = peak
        while i > 0 and positive[i - 1]:
            i -= 1
        theta_a = grid[i] if i == 0 else brentq(v_squared, grid[i - 1], grid[i], xtol=1e-14)
        i = peak
        while i < len(grid) - 1 and positive[i + 1]:
            i += 1
        theta_b = (
            grid[i] if i == len(grid) - 1 else brentq(v_squared, grid[i], grid[i + 1], xtol=1e-14)
        )

        def integrand(theta):
            v2_val = v_squared(theta)
            if v2_val <= 0.0:
                return 0.0
            sin_t = math.sin(theta)
            return math.asinh(math.sqrt(v2_val) / (pot.a_amp * sin_t)) * sin_t

        value, _ = quad(integrand, theta_a, theta_b, epsabs=0.0, epsrel=rel_tol, limit=500)
        return WkbResult(
            a_min=float(value),
            theta0=float(lo_min),
            theta1=float(hi_min),
            turning_points=(float(theta_a), float(theta_b)),
            theta_start=float(theta_s),
        )

    # barrier measure: cosh(phi) - 1 >= 0 inside the forbidden region
    def barrier(theta):
        return pot.a_amp * (sin_s - math.sin(theta)) + pot.b_amp * (
            g_s - float(pot.g(math.cos(theta)))
        )

    direction = 1.0 if theta_s == lo_min else -1.0
    theta_far = hi_min if direction > 0 else lo_min
    grid = theta_s + direction * np.linspace(0.0, abs(theta_far - theta_s), max(2000, n_scan))
    w = np.array([barrier(t) for t in grid])
    inside = w > 0
    if not inside[1:].any():
        raise NumericalError("no barrier found along the trajectory")
    exit_idx = 1
    while exit_idx < len(grid) - 1 and inside[exit_idx + 1]:
        exit_idx += 1
    if exit_idx == len(grid) - 1:
        theta_exit = float(theta_far)
    else:
        theta_exit = float(
            brentq(barrier, grid[exit_idx], grid[exit_idx + 1], xtol=1e-14)
        )

    def integrand(theta):
        wv = barrier(theta)
        if wv <= 0.0:
            return 0.0
        sin_t = math.sin(theta)
        return math.acosh(1.0 + wv / (pot.a_amp * sin_t)) * sin_t

    a, b = sorted((float(theta_s), theta_exit))
    value, _ = quad(integrand, a, b, epsabs=0.0, epsrel=rel_tol, limit=500)
    return WkbResult(
        a_min=0.5 * float(value),
        theta0=float(lo_min),
        theta1=float(hi_min),
        turning_points=(a, b),
        theta_start=float(theta_s),
    )


@dataclass
class SpinPath:
    """Per-spin (theta, phi) samples on an imaginary-time grid.

    Shapes: tau (k,), theta and phi (n_spins, k).  Paths must be periodic:
    the first and last samples agree within ``periodic_tol``.
    """

    tau: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    periodic_tol: float = 1e-9

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=np.float64)
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=np.float64))
        self.phi = np.atleast_2d(np.asarray(self.phi, dtype=np.float64))
        if self.tau.ndim != 1 or len(self.tau) < 2:
            raise InputError("need a 1-d tau grid with at least two samples")
        if np.any(np.diff(self.tau) <= 0):
            raise InputError("tau grid must increase strictly")
        k = len(self.tau)
        if self.theta.shape[1] != k or self.phi.shape != self.theta.shape:
            raise InputError("theta/phi must have shape (n_spins, len(tau))")
        if np.any(self.theta < -1e-12) or np.any(self.theta > math.pi + 1e-12):
            raise InputError("theta must lie in [0, pi]")

    @property
    def n_spins(self) -> int:
        return self.theta.shape[0]

    @property
    def beta(self) -> float:
        return float(self.tau[-1] - self.tau[0])

    def is_periodic(self) -> bool:
        return bool(
            np.all(np.abs(self.theta[:, 0] - self.theta[:, -1]) <= self.periodic_tol)
            and np.all(np.abs(self.phi[:, 0] - self.phi[:, -1]) <= self.periodic_tol)
        )


def berry_phase(path: SpinPath, spin: int) -> float:
    """Geometric contribution integral (1 - cos theta) dphi along the path."""
    theta = path.theta[spin]
    phi = path.phi[spin]
    mid = 1.0 - 0.5 * (np.cos(theta[:-1]) + np.cos(theta[1:]))
    return float(np.sum(mid * np.diff(phi)))


def action_functional(path: SpinPath, problem: IsingProblem, a_amp: float, b_amp: float) -> float:
    """Trapezoidal action S/hbar = (1/2) sum_j omega_j + integral V dtau.

    Units assume hbar = 1: a_amp, b_amp and 1/tau must share the same
    energy unit.  Raises InputError on non-periodic paths.
    """
    if path.n_spins != problem.n:
        raise InputError(f"path has {path.n_spins} spins, problem has {problem.n}")
    if not path.is_periodic():
        raise InputError("path endpoints differ: the action needs a periodic path")
    potential = np.array(
        [
            mean_field_energy(path.theta[:, i], path.phi[:, i], problem, a_amp, b_amp)
            for i in range(len(path.tau))
        ]
    )
    action = float(np.trapezoid(potential, path.tau))
    action += 0.5 * sum(berry_phase(path, j) for j in range(path.n_spins))
    return action


def polish_path(
    path: SpinPath,
    problem: IsingProblem,
    a_amp: float,
    b_amp: float,
    rounds: int = 20,
    step: float = 0.1,
) -> SpinPath:
    """Coordinate-descent polish of a user-supplied path (optional helper).

    Interior samples of theta and phi move one at a time if the move lowers
    the action; the step halves whenever a full round makes no progress.
    Endpoints stay tied to preserve periodicity.  This is a local polish,
    not a global instanton search.
    """
    theta = path.theta.copy()
    phi = path.phi.copy()
    current = action_functional(path, problem, a_amp, b_amp)
    k = len(path.tau)
    for _ in range(rounds):
        improved = False
        for j in range(path.n_spins):
            for i in range(1, k - 1):
                for arr, lo, hi in ((theta, 0.0, math.pi), (phi, -np.inf, np.inf)):
                    base = arr[j, i]
                    for delta in (step, -step):
                        candidate = min(hi, max(lo, base + delta))
                        if candidate == base:
                            continue
                        arr[j, i] = candidate
                        trial_path = SpinPath(path.tau, theta, phi, path.periodic_tol)
                        trial = action_functional(trial_path, problem, a_amp, b_amp)
                        if trial < current - 1e-15:
                            current = trial
                            improved = True
                            base = candidate
                        else:
                            arr[j, i] = base
        if not improved:
            step *= 0.5
            if step < 1e-6:
                break
    return SpinPath(path.tau.copy(), theta, phi, path.periodic_tol)


def rate_exponent(domain: int, a_min: float) -> float:
    """Tunneling-rate exponent D * a_min/hbar; linear in the domain size."""
    if domain < 0:
        raise InputError("domain size must be nonnegative")
    return domain * a_min


def thermal_exponent(barrier_ghz: float, temperature_mk: float) -> float:
    """Arrhenius exponent Delta E/(k_B T) with the barrier in GHz."""
    if temperature_mk <= 0:
        raise InputError("temperature must be positive")
    return barrier_ghz / (KB_OVER_H_GHZ_PER_K * temperature_mk * 1e-3)


def tunneling_beats_thermal(
    domain: int, a_min: float, barrier_ghz: float, temperature_mk: float
) -> bool:
    """Whether the thermal exponent exceeds the tunneling exponent, i.e.
    barriers are tall and narrow enough for tunneling to win."""
    return thermal_exponent(barrier_ghz, temperature_mk) > rate_exponent(domain, a_min)


def curie_weiss_splitting(domain: int, a_amp: float, b_amp: float, g) -> float:
    """Gap between the two lowest levels of the maximum-spin sector of
    H = -A sum sigma^x - B * D * g(2 S_z / D); the exact-diagonalization
    reference for tunneling splittings of a rigid domain of D spins."""
    if domain < 1:
        raise InputError("need at least one spin")
    spin = domain / 2.0
    m = np.arange(-spin, spin + 1)
    diag = -b_amp * domain * np.asarray(g(2.0 * m / domain), dtype=np.float64)
    # sum sigma^x = 2 S_x with <m+1|S_x|m> = sqrt(S(S+1) - m(m+1))/2
    sx_off = 0.5 * np.sqrt(spin * (spin + 1) - m[:-1] * (m[:-1] + 1))
    ham = np.diag(diag) - 2.0 * a_amp * (np.diag(sx_off, 1) + np.diag(sx_off, -1))
    vals = np.linalg.eigvalsh(ham)
    return float(vals[1] - vals[0])


# ---------------------------------------------------------------------------
# Path persistence: CSV rows "tau,theta_1,phi_1,...,theta_n,phi_n".


def save_path_csv(filename, path: SpinPath) -> None:
    n = path.n_spins
    header = "tau," + ",".join(f"theta_{j+1},phi_{j+1}" for j in range(n))
    with open(filename, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for i, tau in enumerate(path.tau):
            cells = [repr(float(tau))]
            for j in range(n):
                cells.append(repr(float(path.theta[j, i])))
                cells.append(repr(float(path.phi[j, i])))
            fh.write(",".join(cells) + "\n")


def load_path_csv(filename) -> SpinPath:
    with open(filename, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "tau" or (len(header) - 1) % 2 != 0:
            raise InputError("expected header tau,theta_1,phi_1,...")
        n = (len(header) - 1) // 2
        taus, thetas, phis = [], [], []
        for line in fh:
            parts = [float(x) for x in line.strip().split(",")]
            if len(parts) != 1 + 2 * n:
                raise InputError("row width disagrees with header")
            taus.append(parts[0])
            thetas.append(parts[1::2])
            phis.append(parts[2::2])
    return SpinPath(
        np.array(taus), np.array(thetas).T, np.array(phis).T
    )
