"""Time-to-99%-success accounting, quantiles with bootstrap CIs, scaling fits.

Runtimes are modeled, not measured: per-update costs on a single core are
fixed constants (see constants.py) and the only measured quantity is the
success probability of a run.  An instance whose success probability is zero
has no finite time-to-solution; such entries are reported absent rather than
dropped.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .constants import T_SU_SECONDS, T_WORLDLINE_SECONDS_PER_BETA
from .errors import InputError

TARGET_CONFIDENCE = 0.99


@dataclass
class BenchmarkRecord:
    """One solver run on one instance; the harness input row."""

    instance: str
    algorithm: str
    params: str  # digest of the parameter set actually used
    seed: int
    success: bool
    n_sweeps: int
    n_vars: int
    best_energy: float
    beta: float | None = None
    wall_constants: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "BenchmarkRecord":
        return cls(**json.loads(line))


def params_digest(params: dict) -> str:
    blob = json.dumps(params, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def write_records(path, records, meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_records(path):
    meta, records = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            payload = json.loads(line)
            if "meta" in payload and "instance" not in payload:
                meta = payload["meta"]
            else:
                records.append(BenchmarkRecord(**payload))
    return records, meta


def time_to_target(p: float, t_run: float) -> float:
    """Total time to reach the optimum with 99% confidence when a single
    run of duration t_run succeeds with probability p.

    t_run * ln(0.01)/ln(1-p), floored at one run for p >= 0.99; p = 0 has
    no finite answer and returns inf (reported absent downstream).
    """
    if not 0.0 <= p <= 1.0:
        raise InputError(f"success probability {p} outside [0, 1]")
    if t_run <= 0:
        raise InputError(f"run time must be positive, got {t_run}")
    if p == 0.0:
        return math.inf
    if p >= TARGET_CONFIDENCE:
        return t_run
    return t_run * math.log(1.0 - TARGET_CONFIDENCE) / math.log(1.0 - p)


def restarts_to_target(p: float) -> float:
    """Expected number of restarts, ceil(ln(0.01)/ln(1-p)), at least one."""
    if p <= 0.0:
        return math.inf
    if p >= TARGET_CONFIDENCE:
        return 1.0
    return max(1.0, math.ceil(math.log(1.0 - TARGET_CONFIDENCE) / math.log(1.0 - p)))


def sa_effort_seconds(n_sweeps: float, n_vars: int) -> float:
    """Single-core model time of one SA run: n_sweeps * N * T_su."""
    return n_sweeps * n_vars * T_SU_SECONDS


def qmc_effort_seconds(n_sweeps: float, n_vars: int, beta: float, schedule_kind: str) -> float:
    """Single-core model time of one QMC run: n_sweeps * N * T_worldline.

    The worldline update time scales linearly with beta with a per-schedule
    constant (the transverse field magnitude sets the worldline activity).
    """
    if beta <= 0:
        raise InputError(f"beta must be positive, got {beta}")
    try:
        per_beta = T_WORLDLINE_SECONDS_PER_BETA[schedule_kind]
    except KeyError:
        raise InputError(
            f"unknown schedule kind {schedule_kind!r}; "
            f"expected one of {sorted(T_WORLDLINE_SECONDS_PER_BETA)}"
        ) from None
    return n_sweeps * n_vars * beta * per_beta


def nearest_rank_quantile(values, q: float):
    """Nearest-rank quantile; returns None ("absent") if the rank lands on an
    infinite entry, which encodes an uncomputable time-to-solution."""
    if len(values) == 0:
        raise InputError("empty sample")
    if not 0.0 < q < 1.0:
        raise InputError(f"quantile must be in (0,1), got {q}")
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    rank = max(1, math.ceil(q * len(ordered)))
    value = ordered[rank - 1]
    return None if math.isinf(value) else float(value)


def quantile_ci(values, q: float, n_boot: int = 1000, seed: int = 0):
    """Empirical nearest-rank quantile plus a 95% percentile bootstrap CI.

    Bootstrap resamples instances (the values), matching error bars computed
    over instance sets.  Returns (quantile, (lo, hi)); the quantile is None
    when absent, and CI bounds may be inf if enough resamples are absent.
    """
    point = nearest_rank_quantile(values, q)
    if point is None:
        return None, (None, None)
    arr = np.asarray(values, dtype=np.float64)
    rng = np.random.default_rng(seed)
    boots = np.empty(n_boot)
    rank = max(1, math.ceil(q * len(arr)))
    for b in range(n_boot):
        sample = np.sort(rng.choice(arr, size=len(arr), replace=True))
        boots[b] = sample[rank - 1]
    # nearest-rank percentiles keep infinities intact instead of producing nan
    lo, hi = np.percentile(boots, [2.5, 97.5], method="nearest")
    return point, (float(lo), float(hi))


@dataclass
class FitResult:
    """Least-squares fit of runtime T ~ prefactor * 2^(alpha*N)."""

    alpha: float
    prefactor: float
    residual: float
    ci: tuple[float, float]


def scaling_fit(sizes, times) -> FitResult:
    """Fit log2(T) against N over at least four sizes.

    The CI is the 95% interval on the slope from the usual OLS standard
    error with a t quantile at n-2 degrees of freedom.
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if sizes.shape != times.shape or sizes.ndim != 1:
        raise InputError("sizes and times must be matching 1-d sequences")
    if len(sizes) < 4:
        raise InputError("scaling fit needs at least four sizes")
    if np.any(times <= 0) or np.any(~np.isfinite(times)):
        raise InputError("times must be positive and finite")
    y = np.log2(times)
    slope, intercept = np.polyfit(sizes, y, 1)
    fitted = slope * sizes + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    dof = len(sizes) - 2
    sxx = float(np.sum((sizes - sizes.mean()) ** 2))
    stderr = math.sqrt(ss_res / dof / sxx) if dof > 0 else float("nan")
    from scipy.stats import t as t_dist

    width = t_dist.ppf(0.975, dof) * stderr
    return FitResult(
        alpha=float(slope),
        prefactor=float(2.0**intercept),
        residual=ss_res,
        ci=(float(slope - width), float(slope + width)),
    )


def pair_to_network_estimate(p: float, c: int, n_sweeps: float, beta: float) -> float:
    """Relative network effort predicted from single-pair success probability.

    n_sweeps * beta * ceil(ln(0.01)/ln(1 - p^c)) where c is the number of
    cluster pairs in the network; used to co-optimize (beta, n_sweeps).
    Returns inf when p^c underflows to zero (absent point).
    """
    if not 0.0 < p < 1.0:
        raise InputError(f"pair success probability must be in (0,1), got {p}")
    if c < 1:
        raise InputError(f"pair count must be >= 1, got {c}")
    p_all = p**c
    if p_all <= 0.0:
        return math.inf
    if p_all >= TARGET_CONFIDENCE:
        runs = 1.0
    else:
        runs = max(1.0, math.ceil(math.log(1.0 - TARGET_CONFIDENCE) / math.log(1.0 - p_all)))
    return n_sweeps * beta * runs


def sweeps_condition_check(n_sweeps: float, t_qa_ns: float) -> bool:
    """Diagnostic: does the sweep count clear 1ns/T_QA with a 10x margin?

    The boundary n_sweeps * T_QA = 10 ns is excluded (strict inequality).
    """
    return n_sweeps * t_qa_ns > 10.0


def summary_rows(records, quantiles, effort_fn, n_boot: int = 1000, seed: int = 0):
    """Aggregate records into TTS quantile rows grouped by (algorithm, N).

    ``effort_fn(record) -> seconds`` maps one run to its modeled duration;
    per-instance success probabilities use all runs of that instance.
    Returns rows of (n_vars, quantile, tts_seconds, ci_lo, ci_hi, algorithm)
    with None marking absent entries.
    """
    groups: dict[tuple[str, int], dict[str, list]] = {}
    for rec in records:
        key = (rec.algorithm, rec.n_vars)
        groups.setdefault(key, {}).setdefault(rec.instance, []).append(rec)
    rows = []
    for (algorithm, n_vars), by_instance in sorted(groups.items()):
        tts = []
        for instance in sorted(by_instance):
            runs = by_instance[instance]
            p = sum(r.success for r in runs) / len(runs)
            t_run = effort_fn(runs[0])
            tts.append(time_to_target(p, t_run) if p > 0 else math.inf)
        for q in quantiles:
            point, (lo, hi) = quantile_ci(tts, q, n_boot=n_boot, seed=seed)
            rows.append((n_vars, q, point, lo, hi, algorithm))
    return rows


def write_summary_csv(path, rows, config_digest: str | None = None) -> None:
    """Write "N,quantile,tts_seconds,ci_lo,ci_hi,algorithm" rows; absent
    entries render as the literal string "absent"."""

    def cell(x):
        if x is None:
            return "absent"
        if isinstance(x, float) and math.isinf(x):
            return "absent"
        return repr(x) if isinstance(x, float) else str(x)

    with open(path, "w", encoding="utf-8") as fh:
        if config_digest is not None:
            fh.write(f"# config={config_digest}\n")
        fh.write("N,quantile,tts_seconds,ci_lo,ci_hi,algorithm\n")
        for n_vars, q, point, lo, hi, algorithm in rows:
            fh.write(
                f"{n_vars},{cell(q)},{cell(point)},{cell(lo)},{cell(hi)},{algorithm}\n"
            )
