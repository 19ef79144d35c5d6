import math

import numpy as np
import pytest

from tunnelbench.bench import (
    BenchmarkRecord,
    nearest_rank_quantile,
    pair_to_network_estimate,
    params_digest,
    qmc_effort_seconds,
    quantile_ci,
    read_records,
    restarts_to_target,
    sa_effort_seconds,
    scaling_fit,
    summary_rows,
    sweeps_condition_check,
    time_to_target,
    write_records,
    write_summary_csv,
)
from tunnelbench.errors import InputError


def test_time_to_target_one_run_at_99():
    assert time_to_target(0.99, 20e-6) == pytest.approx(20e-6)
    assert time_to_target(1.0, 7.0) == 7.0
    assert time_to_target(0.999, 3.0) == 3.0


def test_time_to_target_half():
    # ln(0.01)/ln(0.5) = 6.6438561897747
    assert time_to_target(0.5, 20e-6) == pytest.approx(132.877123795e-6, rel=1e-9)


def test_time_to_target_monotone_and_continuous():
    ps = np.linspace(0.01, 0.989, 200)
    values = [time_to_target(p, 1.0) for p in ps]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert time_to_target(0.9899999, 1.0) == pytest.approx(1.0, rel=1e-4)


def test_time_to_target_absent_and_errors():
    assert math.isinf(time_to_target(0.0, 1.0))
    with pytest.raises(InputError):
        time_to_target(1.5, 1.0)
    with pytest.raises(InputError):
        time_to_target(0.5, 0.0)


def test_sa_effort():
    assert sa_effort_seconds(5e4, 945) == pytest.approx(9.45e-3)
    assert sa_effort_seconds(1, 1) == pytest.approx(0.2e-9)
    # 1e9 restarts of the median 945-variable run
    assert 1e9 * sa_effort_seconds(5e4, 945) == pytest.approx(9.45e6)


def test_qmc_effort_constants():
    # beta=32.5 with the hardware-style schedule: 28.275 us per worldline
    t_run = qmc_effort_seconds(1, 1, 32.5, "dw2x")
    assert t_run == pytest.approx(28.275e-6)
    assert abs(t_run - 28.3e-6) / 28.3e-6 < 1e-3
    assert qmc_effort_seconds(1, 1, 10.0, "linear") == pytest.approx(1.15e-6)
    # per-qubit total at the pair operating point
    assert qmc_effort_seconds(23000, 1, 32.5, "dw2x") == pytest.approx(0.650325)
    with pytest.raises(InputError):
        qmc_effort_seconds(1, 1, 10.0, "mystery")
    with pytest.raises(InputError):
        qmc_effort_seconds(1, 1, -1.0, "linear")


def test_nearest_rank_quantile():
    values = list(range(1, 101))
    assert nearest_rank_quantile(values, 0.5) == 50
    assert nearest_rank_quantile(values, 0.85) == 85
    assert nearest_rank_quantile([3.0, math.inf], 0.9) is None


def test_quantile_ci_constant_sample():
    point, (lo, hi) = quantile_ci([4.0] * 25, 0.5, n_boot=200, seed=1)
    assert point == 4.0 and lo == 4.0 and hi == 4.0


def test_quantile_ci_absent():
    point, (lo, hi) = quantile_ci([math.inf] * 5, 0.5, n_boot=10, seed=1)
    assert point is None and lo is None and hi is None


def test_quantile_ci_coverage_lognormal():
    # the 95% bootstrap CI should cover the true median in >= 90 of 100 trials
    rng = np.random.default_rng(42)
    true_median = math.exp(0.3)
    covered = 0
    for trial in range(100):
        sample = np.exp(0.3 + 0.8 * rng.standard_normal(80))
        _, (lo, hi) = quantile_ci(sample, 0.5, n_boot=300, seed=trial)
        if lo <= true_median <= hi:
            covered += 1
    assert covered >= 90


def test_scaling_fit_exact():
    sizes = np.array([10, 14, 18, 22, 26])
    times = 2.0 ** (0.8 * sizes) * 3.0
    fit = scaling_fit(sizes, times)
    assert fit.alpha == pytest.approx(0.8, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-9)
    assert fit.residual == pytest.approx(0.0, abs=1e-18)


def test_scaling_fit_noise_ci_covers():
    rng = np.random.default_rng(7)
    sizes = np.arange(10, 26, 2)
    hits = 0
    for _ in range(50):
        times = 2.0 ** (0.9 * sizes + rng.standard_normal(len(sizes)) * 0.4)
        fit = scaling_fit(sizes, times)
        if fit.ci[0] <= 0.9 <= fit.ci[1]:
            hits += 1
    assert hits >= 42


def test_scaling_fit_guards():
    with pytest.raises(InputError):
        scaling_fit([1, 2, 3], [1.0, 2.0, 4.0])
    with pytest.raises(InputError):
        scaling_fit([1, 2, 3, 4], [1.0, 2.0, 0.0, 4.0])


def test_pair_to_network_estimate():
    assert pair_to_network_estimate(0.95, 1, 1, 1) == 2
    assert pair_to_network_estimate(0.9, 2, 1, 1) == 3
    assert pair_to_network_estimate(0.999999, 3, 10, 2) == 20  # one run floor
    tiny = pair_to_network_estimate(1e-12, 400, 1, 1)
    assert math.isinf(tiny)


def test_sweeps_condition():
    assert sweeps_condition_check(23000, 71)
    assert not sweeps_condition_check(1, 0.5)
    assert not sweeps_condition_check(10, 1.0)  # boundary excluded
    assert sweeps_condition_check(11, 1.0)


def test_restarts_to_target():
    assert restarts_to_target(0.999) == 1.0
    assert restarts_to_target(0.5) == 7.0
    assert math.isinf(restarts_to_target(0.0))


def _record(instance, success, algorithm="sa", n_sweeps=100, n_vars=16):
    return BenchmarkRecord(
        instance=instance,
        algorithm=algorithm,
        params=params_digest({"x": 1}),
        seed=1,
        success=success,
        n_sweeps=n_sweeps,
        n_vars=n_vars,
        best_energy=-1.0,
    )


def test_records_roundtrip(tmp_path):
    path = tmp_path / "records.jsonl"
    records = [_record("a", True), _record("b", False)]
    write_records(path, records, meta={"config": "abc"})
    back, meta = read_records(path)
    assert meta == {"config": "abc"}
    assert back == records


def test_summary_rows_and_csv(tmp_path):
    records = []
    for instance, successes in (("i0", 5), ("i1", 10), ("i2", 0)):
        for r in range(10):
            records.append(_record(instance, r < successes))
    rows = summary_rows(
        records, [0.5, 0.85], lambda rec: 1.0, n_boot=50, seed=0
    )
    # tts values are {t(0.5)=6.64, t(1.0)=1.0, inf}; the median is 6.64
    assert rows[0][1] == 0.5 and rows[0][2] == pytest.approx(6.6438561897747, rel=1e-9)
    # 85th percentile lands on the absent instance
    assert rows[1][1] == 0.85 and rows[1][2] is None
    path = tmp_path / "summary.csv"
    write_summary_csv(path, rows, config_digest="deadbeef")
    text = path.read_text()
    assert text.splitlines()[0] == "# config=deadbeef"
    assert text.splitlines()[1] == "N,quantile,tts_seconds,ci_lo,ci_hi,algorithm"
    assert "absent" in text
