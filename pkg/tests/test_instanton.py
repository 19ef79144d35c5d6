import math

import numpy as np
import pytest

from tunnelbench.errors import InputError, NumericalError
from tunnelbench.instanton import (
    ReducedPotential,
    SpinPath,
    action_functional,
    berry_phase,
    curie_weiss_splitting,
    load_path_csv,
    mean_field_energy,
    polish_path,
    rate_exponent,
    save_path_csv,
    thermal_exponent,
    tunneling_beats_thermal,
    wkb_action,
)
from tunnelbench.problems import IsingProblem, evaluate_energy, random_ising

QUADRATIC = lambda x: np.asarray(x) ** 2


def _dense_coherent_expectation(problem, a_amp, b_amp, thetas, phis):
    """Independent oracle: bilinear coherent-state form <u|H|v>/<u|v> with
    the analytically continued azimuth, built from explicit 2^n vectors."""
    n = problem.n
    kets = []
    bras = []
    for theta, phi in zip(thetas, phis):
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        kets.append(np.array([c, math.exp(-phi) * s]))
        bras.append(np.array([c, math.exp(+phi) * s]))
    # qubit j occupies bit j (least significant), so later spins go on the
    # left of the kron chain
    ket = kets[0]
    bra = bras[0]
    for k, b in zip(kets[1:], bras[1:]):
        ket = np.kron(k, ket)
        bra = np.kron(b, bra)
    dim = 1 << n
    ham = np.zeros((dim, dim))
    states = np.arange(dim)
    z = 1.0 - 2.0 * ((states[:, None] >> np.arange(n)[None, :]) & 1)
    diag = np.zeros(dim)
    for key, coeff in problem.terms.items():
        prod = np.ones(dim)
        for j in key:
            prod *= z[:, j]
        diag -= coeff * prod
    ham += b_amp * np.diag(diag)
    for j in range(n):
        flip = states ^ (1 << j)
        ham[states, flip] -= a_amp
    return float(bra @ ham @ ket) / float(bra @ ket)


def test_mean_field_transverse_configuration():
    problem = random_ising(6, "complete", seed=1)
    thetas = np.full(6, math.pi / 2)
    phis = np.zeros(6)
    assert mean_field_energy(thetas, phis, problem, 1.0, 0.0) == pytest.approx(-6.0)


def test_mean_field_poles_give_classical_energy():
    problem = random_ising(5, "complete", seed=4)
    up = evaluate_energy(problem, np.ones(5, dtype=np.int8))
    value = mean_field_energy(np.zeros(5), np.zeros(5), problem, 0.7, 1.3)
    assert value == pytest.approx(1.3 * up)


def test_mean_field_matches_dense_oracle():
    rng = np.random.default_rng(8)
    problem = random_ising(6, "complete", seed=11)
    for _ in range(5):
        thetas = rng.uniform(0.1, math.pi - 0.1, size=6)
        phis = rng.uniform(-0.8, 0.8, size=6)
        fast = mean_field_energy(thetas, phis, problem, 0.9, 1.4)
        slow = _dense_coherent_expectation(problem, 0.9, 1.4, thetas, phis)
        assert fast == pytest.approx(slow, abs=1e-8)


def test_wkb_minima_location():
    res = wkb_action(ReducedPotential(0.5, 1.0, QUADRATIC))
    assert res.theta0 == pytest.approx(math.asin(0.25), abs=1e-7)
    assert res.theta1 == pytest.approx(math.pi - math.asin(0.25), abs=1e-7)
    assert res.a_min == pytest.approx(1.09519, rel=1e-4)


def test_wkb_deep_well_variant():
    res = wkb_action(ReducedPotential(0.5, 1.0, QUADRATIC), deep_well=True)
    assert res.a_min == pytest.approx(1.63179, rel=1e-4)
    # the shortcut clamps its turning points strictly inside the wells
    assert res.turning_points[0] > res.theta0
    assert res.turning_points[1] < res.theta1


def test_wkb_no_barrier_when_minima_merge():
    res = wkb_action(ReducedPotential(3.0, 1.0, QUADRATIC))
    assert res.a_min == 0.0 and res.theta0 == res.theta1


def test_wkb_deep_well_error_without_forbidden_region():
    with pytest.raises(NumericalError):
        wkb_action(ReducedPotential(0.9, 1.0, QUADRATIC), deep_well=True)


def test_wkb_monotone_in_transverse_amplitude():
    previous = None
    for a_amp in np.linspace(0.1, 0.9, 9):
        value = wkb_action(ReducedPotential(a_amp, 1.0, QUADRATIC)).a_min
        if previous is not None:
            assert value < previous
        previous = value


def test_wkb_symmetric_under_mirror():
    left = wkb_action(ReducedPotential(0.4, 1.0, lambda x: np.asarray(x) ** 2 + 0.2 * np.asarray(x)))
    right = wkb_action(ReducedPotential(0.4, 1.0, lambda x: np.asarray(x) ** 2 - 0.2 * np.asarray(x)))
    assert left.a_min == pytest.approx(right.a_min, abs=1e-8)


def test_wkb_quadrature_tolerance_stability():
    coarse = wkb_action(ReducedPotential(0.5, 1.0, QUADRATIC), n_scan=500)
    fine = wkb_action(ReducedPotential(0.5, 1.0, QUADRATIC), n_scan=4000)
    assert coarse.a_min == pytest.approx(fine.a_min, rel=1e-6)


def test_wkb_matches_splitting_slope():
    res = wkb_action(ReducedPotential(0.5, 1.0, QUADRATIC))
    sizes = [8, 10, 12, 14, 16]
    logs = [-math.log(curie_weiss_splitting(d, 0.5, 1.0, QUADRATIC)) for d in sizes]
    slope = np.polyfit(sizes, logs, 1)[0]
    assert abs(slope - res.a_min) / res.a_min < 0.2


def _constant_path(problem, theta, beta=4.0, k=41):
    tau = np.linspace(0.0, beta, k)
    thetas = np.full((problem.n, k), theta)
    phis = np.zeros((problem.n, k))
    return SpinPath(tau, thetas, phis)


def test_action_constant_path():
    problem = IsingProblem(2, {(0, 1): 1.0})
    a_amp, b_amp = 0.5, 1.0
    pot = ReducedPotential(a_amp, b_amp, QUADRATIC)
    res = wkb_action(pot)
    path = _constant_path(problem, res.theta0, beta=4.0)
    action = action_functional(path, problem, a_amp, b_amp)
    v_min = mean_field_energy(
        np.full(2, res.theta0), np.zeros(2), problem, a_amp, b_amp
    )
    assert action == pytest.approx(4.0 * v_min, rel=1e-12)
    assert berry_phase(path, 0) == 0.0


def test_action_linear_in_domain_size():
    # identical per-spin paths in a uniform ferromagnetic domain: the
    # k-spin action is k times the single-spin action with matched scaling
    beta, k = 3.0, 101
    tau = np.linspace(0.0, beta, k)
    theta_t = 0.8 + 0.5 * np.sin(2 * math.pi * tau / beta) ** 2
    phi_t = 0.3 * np.sin(2 * math.pi * tau / beta)
    single = IsingProblem(1, {(0,): 1.0})
    path1 = SpinPath(tau, theta_t[None, :], phi_t[None, :])
    a1 = action_functional(path1, single, 0.7, 1.1)
    for d in (2, 4):
        multi = IsingProblem(d, {(j,): 1.0 for j in range(d)})
        path_d = SpinPath(tau, np.tile(theta_t, (d, 1)), np.tile(phi_t, (d, 1)))
        ad = action_functional(path_d, multi, 0.7, 1.1)
        assert ad == pytest.approx(d * a1, rel=1e-12)


def test_action_grid_refinement_converges():
    problem = IsingProblem(1, {(0,): 1.0})
    values = {}
    for k in (51, 101, 201):
        tau = np.linspace(0.0, 2.0, k)
        theta = 1.0 + 0.4 * np.sin(math.pi * tau / 2.0) ** 2
        phi = 0.2 * np.sin(2 * math.pi * tau / 2.0)
        path = SpinPath(tau, theta[None, :], phi[None, :])
        values[k] = action_functional(path, problem, 0.6, 0.9)
    assert abs(values[101] - values[201]) / abs(values[201]) < 1e-4


def test_action_rejects_open_path():
    problem = IsingProblem(1, {(0,): 1.0})
    tau = np.linspace(0.0, 1.0, 11)
    theta = np.linspace(0.3, 1.0, 11)[None, :]
    phi = np.zeros((1, 11))
    with pytest.raises(InputError):
        action_functional(SpinPath(tau, theta, phi), problem, 1.0, 1.0)


def test_path_validation():
    with pytest.raises(InputError):
        SpinPath(np.array([0.0, 0.0]), np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(InputError):
        SpinPath(np.array([0.0, 1.0]), np.full((1, 2), 4.0), np.zeros((1, 2)))


def test_polish_lowers_action():
    problem = IsingProblem(1, {(0,): 1.0})
    tau = np.linspace(0.0, 2.0, 21)
    rng = np.random.default_rng(3)
    theta = np.full(21, 1.2)
    theta[1:-1] += rng.uniform(-0.3, 0.3, size=19)
    path = SpinPath(tau, theta[None, :], np.zeros((1, 21)))
    before = action_functional(path, problem, 0.8, 1.0)
    polished = polish_path(path, problem, 0.8, 1.0, rounds=6, step=0.2)
    after = action_functional(polished, problem, 0.8, 1.0)
    assert after <= before


def test_rate_and_thermal_exponents():
    assert rate_exponent(0, 1.3) == 0.0
    assert rate_exponent(8, 1.3) == pytest.approx(2 * rate_exponent(4, 1.3))
    # 0.96 GHz barrier at 12 mK: Arrhenius exponent 0.96/0.250
    assert thermal_exponent(0.96, 12.0) == pytest.approx(0.96 / 0.25004, rel=1e-3)
    assert tunneling_beats_thermal(8, 0.2, 0.96, 2.0)
    assert not tunneling_beats_thermal(8, 2.0, 0.96, 50.0)


def test_path_csv_roundtrip(tmp_path):
    tau = np.linspace(0.0, 1.0, 5)
    theta = np.vstack([np.full(5, 0.4), np.full(5, 1.1)])
    phi = np.vstack([np.zeros(5), 0.1 * np.ones(5)])
    path = SpinPath(tau, theta, phi)
    dest = tmp_path / "path.csv"
    save_path_csv(dest, path)
    header = dest.read_text().splitlines()[0]
    assert header == "tau,theta_1,phi_1,theta_2,phi_2"
    back = load_path_csv(dest)
    assert np.allclose(back.tau, path.tau)
    assert np.allclose(back.theta, path.theta)
    assert np.allclose(back.phi, path.phi)
