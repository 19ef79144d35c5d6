"""Benchmark workbench for rugged-landscape optimization.

Crafted Ising instance generators (weak-strong cluster pairs and networks
on Chimera graphs), simulated annealing, path-integral worldline annealing,
exact quantum reference solvers, tunneling-action calculators, number
partitioning heuristics, and time-to-solution accounting.
"""

from .bench import (
    BenchmarkRecord,
    FitResult,
    pair_to_network_estimate,
    qmc_effort_seconds,
    quantile_ci,
    sa_effort_seconds,
    scaling_fit,
    sweeps_condition_check,
    time_to_target,
)
from .errors import (
    CertificationError,
    InputError,
    NumericalError,
    TuningError,
    UnsupportedProblemError,
)
from .exact_quantum import (
    QuantumModel,
    RateModel,
    noise_parameters,
    rate_evolve,
    schrodinger_evolve,
    spectrum_vs_s,
    temperature_to_frequency,
)
from .instanton import (
    ReducedPotential,
    SpinPath,
    action_functional,
    curie_weiss_splitting,
    mean_field_energy,
    rate_exponent,
    wkb_action,
)
from .npp import (
    NppInstance,
    Partition,
    algorithmic_tunneling,
    generate_npp,
    greedy_partition,
    kk_partition,
    npp_brute_force,
    predict_stats,
    residue,
)
from .problems import (
    ChimeraGraph,
    IsingProblem,
    brute_force_ground_state,
    build_chimera,
    evaluate_energy,
    random_ising,
    weak_strong_network,
    weak_strong_pair,
)
from .qmc import (
    AnnealSchedule,
    WorldlineState,
    builtin_schedule,
    effective_classical_energy,
    optimize_pair_parameters,
    qmc_anneal,
    qmc_success_probability,
    replica_coupling,
)
from .sa import SaSchedule, sa_run, sa_success_probability, sa_tune

__version__ = "0.1.0"
