"""Command-line workbench: instance generation, solvers, and reporting.

Round trip: ``generate`` writes instance files, ``solve`` turns instances
into benchmark records (JSON lines), ``bench`` aggregates records into
time-to-solution quantiles (CSV plus figure).  ``npp-study`` runs the
number-partitioning pipeline end to end.  Every stochastic quantity derives
from --seed; rerunning a command with identical arguments reproduces its
CSV/JSONL outputs byte for byte.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import bench, npp, problems, qmc, sa
from .constants import T_SU_SECONDS, T_WORLDLINE_SECONDS_PER_BETA
from .errors import InputError, NumericalError


def _config_digest(args: argparse.Namespace) -> str:
    # output location and worker count do not change any result
    skip = {"func", "out", "workers"}
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _derive_seed(master: int, *path) -> int:
    return int(np.random.SeedSequence([int(master), *map(int, path)]).generate_state(1)[0])


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_schedule(spec: str) -> qmc.AnnealSchedule:
    if Path(spec).exists():
        return qmc.AnnealSchedule.from_csv(spec)
    try:
        return qmc.builtin_schedule(spec)
    except InputError:
        raise InputError(
            f"schedule {spec!r} is neither a readable file nor a builtin name"
        ) from None


def _schedule_family(schedule: qmc.AnnealSchedule) -> str:
    if schedule.kind == "linear" or schedule.name == "linear":
        return "linear"
    if "dw2x" in (schedule.name or ""):
        return "dw2x"
    raise InputError(
        f"no worldline-time constant known for schedule {schedule.name!r}; "
        "use a name containing 'linear' or 'dw2x'"
    )


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    out = _outdir(args)
    digest = _config_digest(args)
    written = []
    if args.kind == "weak-strong-pair":
        problem = problems.weak_strong_pair(args.h1, args.h2)
        config, energy, _ = problems.brute_force_ground_state(problem)
        meta = {
            "generator": "weak-strong-pair",
            "seed": args.seed,
            "pattern": "single-domino",
            "h1": args.h1,
            "h2": args.h2,
            "reference_optimum": [int(v) for v in config],
            "reference_energy": energy,
            "config": digest,
        }
        path = out / "pair.json"
        problems.save_instance(path, problem, meta)
        written.append(path)
    elif args.kind == "weak-strong-network":
        graph = problems.build_chimera(args.rows, args.cols, _parse_broken(args.broken))
        for i in range(args.count):
            seed = _derive_seed(args.seed, i)
            problem, reference = problems.weak_strong_network(
                graph, seed=seed, h1=args.h1, h2=args.h2
            )
            meta = {
                "generator": "weak-strong-network",
                "seed": seed,
                "pattern": "mirrored-dominoes",
                "rows": args.rows,
                "cols": args.cols,
                "broken": sorted(_parse_broken(args.broken)),
                "h1": args.h1,
                "h2": args.h2,
                "reference_optimum": [int(v) for v in reference],
                "reference_energy": problems.evaluate_energy(problem, reference),
                "config": digest,
            }
            path = out / f"network_{args.rows}x{args.cols}_{i:03d}.json"
            problems.save_instance(path, problem, meta)
            written.append(path)
    elif args.kind == "random-ising":
        for i in range(args.count):
            seed = _derive_seed(args.seed, i)
            if args.graph == "complete":
                problem = problems.random_ising(args.n, "complete", seed=seed)
            else:
                graph = problems.build_chimera(args.rows, args.cols, _parse_broken(args.broken))
                problem = problems.random_ising(graph.n_active, graph, seed=seed)
            meta = {"generator": "random-ising", "seed": seed, "graph": args.graph,
                    "config": digest}
            if problem.n <= 24:
                config, energy, _ = problems.brute_force_ground_state(problem)
                meta["reference_optimum"] = [int(v) for v in config]
                meta["reference_energy"] = energy
            path = out / f"random_{problem.n}_{i:03d}.json"
            problems.save_instance(path, problem, meta)
            written.append(path)
    elif args.kind == "npp":
        for i in range(args.count):
            seed = _derive_seed(args.seed, i)
            instance = npp.generate_npp(args.n, args.bits, seed=seed)
            path = out / f"npp_{args.n}_{args.bits}_{i:03d}.json"
            npp.save_npp_instance(path, instance, seed=seed)
            written.append(path)
    else:
        raise InputError(f"unknown instance kind {args.kind!r}")
    for path in written:
        print(path)
    return 0


def _parse_broken(text: str):
    if not text:
        return frozenset()
    return frozenset(int(tok) for tok in text.split(",") if tok.strip())


# ---------------------------------------------------------------------------
# solve


def _target_energy(problem, meta, allow_brute=True):
    if "reference_energy" in meta:
        return float(meta["reference_energy"])
    if allow_brute and problem.n <= 24:
        return problems.brute_force_ground_state(problem)[1]
    raise InputError(
        "instance metadata lacks reference_energy and the problem is too "
        "large for the exhaustive oracle"
    )


def _stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "big")


def _solve_one(task):
    args_d, instance_path = task
    problem, meta = problems.load_instance(instance_path)
    name = Path(instance_path).stem
    master = _derive_seed(args_d["seed"], _stable_hash(name))
    records = []
    if args_d["algorithm"] == "sa":
        target = _target_energy(problem, meta)
        schedule = sa.SaSchedule(args_d["beta_init"], args_d["beta_final"], args_d["sweeps"])
        params = bench.params_digest(
            {"algorithm": "sa", "beta_init": schedule.beta_init,
             "beta_final": schedule.beta_final, "n_sweeps": schedule.n_sweeps}
        )
        for r in range(args_d["runs"]):
            seed = _derive_seed(master, r)
            _, energy = sa.sa_run(problem, schedule, seed)
            records.append(
                bench.BenchmarkRecord(
                    instance=name,
                    algorithm="sa",
                    params=params,
                    seed=seed,
                    success=bool(energy <= target + 1e-9),
                    n_sweeps=schedule.n_sweeps,
                    n_vars=problem.n,
                    best_energy=energy,
                    wall_constants={"t_su_seconds": T_SU_SECONDS},
                )
            )
    elif args_d["algorithm"] == "qmc":
        target = _target_energy(problem, meta)
        schedule = _load_schedule(args_d["schedule"])
        family = _schedule_family(schedule)
        params = bench.params_digest(
            {"algorithm": "qmc", "schedule": schedule.name, "beta": args_d["beta"],
             "trotter": args_d["trotter"], "n_sweeps": args_d["sweeps"],
             "boundary": args_d["boundary"], "readout": args_d["readout"]}
        )
        for r in range(args_d["runs"]):
            seed = _derive_seed(master, r)
            _, energy = qmc.qmc_anneal(
                problem, schedule, args_d["beta"], args_d["trotter"], args_d["sweeps"],
                args_d["boundary"], seed, args_d["readout"],
            )
            records.append(
                bench.BenchmarkRecord(
                    instance=name,
                    algorithm="qmc",
                    params=params,
                    seed=seed,
                    success=bool(energy <= target + 1e-9),
                    n_sweeps=args_d["sweeps"],
                    n_vars=problem.n,
                    best_energy=energy,
                    beta=args_d["beta"],
                    wall_constants={
                        "t_worldline_seconds_per_beta": T_WORLDLINE_SECONDS_PER_BETA[family],
                        "schedule_kind": family,
                    },
                )
            )
    elif args_d["algorithm"] == "brute":
        config, energy, degeneracy = problems.brute_force_ground_state(problem)
        params = bench.params_digest({"algorithm": "brute"})
        success = True
        if "reference_energy" in meta:
            success = bool(abs(energy - float(meta["reference_energy"])) <= 1e-9)
        records.append(
            bench.BenchmarkRecord(
                instance=name,
                algorithm="brute",
                params=params,
                seed=0,
                success=success,
                n_sweeps=0,
                n_vars=problem.n,
                best_energy=energy,
            )
        )
    else:
        raise InputError(f"unsupported algorithm {args_d['algorithm']!r}")
    return name, records


def cmd_solve(args) -> int:
    out = _outdir(args)
    digest = _config_digest(args)
    if args.algorithm == "exact":
        return _solve_exact(args, out, digest)
    args_d = {
        "algorithm": args.algorithm,
        "seed": args.seed,
        "runs": args.runs,
        "sweeps": args.sweeps,
        "beta_init": args.beta_init,
        "beta_final": args.beta_final,
        "beta": args.beta,
        "trotter": args.trotter,
        "boundary": args.boundary,
        "readout": args.readout,
        "schedule": args.schedule,
    }
    tasks = [(args_d, str(p)) for p in args.instances]
    results = []
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for name, recs in pool.map(_solve_one, tasks):
                results.append((name, recs))
    else:
        for task in tasks:
            results.append(_solve_one(task))
    records = [r for _, recs in sorted(results) for r in recs]
    path = out / "records.jsonl"
    bench.write_records(path, records, meta={"config": digest})
    print(path)
    return 0


def _solve_exact(args, out: Path, digest: str) -> int:
    from . import exact_quantum as xq
    from . import plots

    schedule = _load_schedule(args.schedule)
    for instance_path in args.instances:
        problem, _ = problems.load_instance(instance_path)
        name = Path(instance_path).stem
        model = xq.QuantumModel(problem, schedule)
        result = xq.spectrum_vs_s(
            model, k=args.levels, s_grid=np.linspace(0.0, 1.0, args.grid)
        )
        csv_path = out / f"{name}_spectrum.csv"
        xq.write_spectrum_csv(csv_path, result, config_digest=digest)
        plots.plot_spectrum(result, out / f"{name}_spectrum.png")
        print(csv_path)
        if args.tqa is not None:
            ev = xq.schrodinger_evolve(
                model, args.tqa, output_times=np.linspace(0.0, args.tqa, 21),
                dt_ns=args.dt,
            )
            ev_path = out / f"{name}_evolution.csv"
            xq.write_evolution_csv(ev_path, ev, config_digest=digest)
            plots.plot_evolution(ev, out / f"{name}_evolution.png")
            print(ev_path)
    return 0


# ---------------------------------------------------------------------------
# bench


def _record_effort_seconds(record: bench.BenchmarkRecord) -> float:
    if record.algorithm == "sa":
        return bench.sa_effort_seconds(record.n_sweeps, record.n_vars)
    if record.algorithm == "qmc":
        kind = record.wall_constants.get("schedule_kind", "linear")
        return bench.qmc_effort_seconds(record.n_sweeps, record.n_vars, record.beta, kind)
    raise InputError(f"no wall-clock model for algorithm {record.algorithm!r}")


def cmd_bench(args) -> int:
    from . import plots

    out = _outdir(args)
    digest = _config_digest(args)
    records = []
    for path in args.records:
        recs, _ = bench.read_records(path)
        records.extend(recs)
    if not records:
        raise InputError("no records found")
    quantiles = [float(q) for q in args.quantiles.split(",")]
    rows = bench.summary_rows(
        records, quantiles, _record_effort_seconds, n_boot=args.bootstrap, seed=args.seed
    )
    csv_path = out / "summary.csv"
    bench.write_summary_csv(csv_path, rows, config_digest=digest)
    plots.plot_tts_summary(rows, out / "summary.png")
    print(csv_path)
    return 0


# ---------------------------------------------------------------------------
# npp-study


def cmd_npp_study(args) -> int:
    from . import plots

    out = _outdir(args)
    digest = _config_digest(args)
    sizes = [int(tok) for tok in args.sizes.split(",")]
    heuristics = args.heuristics.split(",")
    known = {"greedy", "kk", "at", "brute"}
    if not set(heuristics) <= known:
        raise InputError(f"heuristics must be among {sorted(known)}")

    residue_rows = []
    efforts = []
    for n in sizes:
        instances = [
            npp.generate_npp(n, n, seed=_derive_seed(args.seed, n, i))
            for i in range(args.count)
        ]
        optima = [npp.npp_brute_force(inst) for inst in instances] if n <= 30 else None
        per_method: dict[str, list] = {}
        for i, inst in enumerate(instances):
            if "greedy" in heuristics:
                per_method.setdefault("greedy", []).append(npp.greedy_partition(inst).energy)
            if "kk" in heuristics:
                per_method.setdefault("kk", []).append(npp.kk_partition(inst).energy)
            if "at" in heuristics:
                part = npp.algorithmic_tunneling(
                    inst, args.kappa, seed=_derive_seed(args.seed, n, i, 7)
                )
                per_method.setdefault("at", []).append(part.energy)
            if "brute" in heuristics and optima is not None:
                per_method.setdefault("brute", []).append(optima[i].energy)
        for method, values in per_method.items():
            med = sorted(values)[len(values) // 2]
            residue_rows.append((n, method, med))

        if args.sa_scaling:
            if optima is None:
                raise InputError("SA scaling needs sizes within the exact-oracle guard")
            per_instance = []
            for i, inst in enumerate(instances[: args.sa_instances]):
                eff = _tuned_npp_sa_effort(
                    inst, optima[i].energy, args, _derive_seed(args.seed, n, i, 13)
                )
                per_instance.append(eff)
            finite = [e for e in per_instance if math.isfinite(e)]
            if not finite:
                raise NumericalError(f"annealer never hit the optimum at N={n}")
            efforts.append((n, sorted(finite)[len(finite) // 2]))

    res_path = out / "npp_residues.csv"
    with open(res_path, "w", encoding="utf-8") as fh:
        fh.write(f"# config={digest}\n")
        fh.write("N,method,median_residue\n")
        for n, method, med in residue_rows:
            fh.write(f"{n},{method},{med}\n")
    plots.plot_npp_residues(residue_rows, out / "npp_residues.png")
    print(res_path)

    if args.sa_scaling:
        fit = bench.scaling_fit([e[0] for e in efforts], [e[1] for e in efforts])
        fit_path = out / "npp_scaling.csv"
        with open(fit_path, "w", encoding="utf-8") as fh:
            fh.write(f"# config={digest}\n")
            fh.write("N,median_spin_updates\n")
            for n, eff in efforts:
                fh.write(f"{n},{eff!r}\n")
            fh.write(f"# alpha={fit.alpha!r} prefactor={fit.prefactor!r} "
                     f"ci=({fit.ci[0]!r},{fit.ci[1]!r})\n")
        plots.plot_scaling(
            [e[0] for e in efforts], [e[1] for e in efforts], fit,
            out / "npp_scaling.png",
        )
        print(fit_path)
        print(f"alpha={fit.alpha:.3f} ci=({fit.ci[0]:.3f},{fit.ci[1]:.3f})")
    return 0


def _tuned_npp_sa_effort(instance, target, args, seed) -> float:
    """Median-case total spin updates for 99% success with a small local
    (n_sweeps, beta_final) grid tuned per instance size."""
    n = instance.n
    best = math.inf
    sweep_grid = [max(8, (1 << n) // (n * f)) for f in (8, 2)]
    for n_sweeps in sweep_grid:
        for beta_final in (2.0, 6.0):
            p, _ = npp.npp_sa_success_probability(
                instance, target, 0.05, beta_final, n_sweeps, args.sa_runs, seed=seed
            )
            if p == 0.0:
                continue
            effort = n_sweeps * n * bench.restarts_to_target(p)
            best = min(best, effort)
    return best


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tunnelbench",
        description="rugged-landscape optimization workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write instance files")
    gen.add_argument("--kind", required=True,
                     choices=["weak-strong-pair", "weak-strong-network", "random-ising", "npp"])
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--rows", type=int, default=1)
    gen.add_argument("--cols", type=int, default=2)
    gen.add_argument("--broken", default="", help="comma-separated qubit indices")
    gen.add_argument("--h1", type=float, default=0.44)
    gen.add_argument("--h2", type=float, default=-1.0)
    gen.add_argument("--n", type=int, default=16)
    gen.add_argument("--bits", type=int, default=16)
    gen.add_argument("--graph", default="chimera", choices=["complete", "chimera"])
    gen.set_defaults(func=cmd_generate)

    sol = sub.add_parser("solve", help="run a solver over instance files")
    sol.add_argument("--algorithm", required=True, choices=["sa", "qmc", "exact", "brute"])
    sol.add_argument("instances", nargs="+")
    sol.add_argument("--out", required=True)
    sol.add_argument("--seed", type=int, default=0)
    sol.add_argument("--workers", type=int, default=1)
    sol.add_argument("--runs", type=int, default=100)
    sol.add_argument("--sweeps", type=int, default=1000)
    sol.add_argument("--beta-init", type=float, default=0.1, dest="beta_init")
    sol.add_argument("--beta-final", type=float, default=3.0, dest="beta_final")
    sol.add_argument("--beta", type=float, default=10.0)
    sol.add_argument("--trotter", type=int, default=64)
    sol.add_argument("--boundary", default="periodic", choices=["periodic", "open"])
    sol.add_argument("--readout", default="slice0", choices=["slice0", "best-replica"])
    sol.add_argument("--schedule", default="linear")
    sol.add_argument("--levels", type=int, default=3)
    sol.add_argument("--grid", type=int, default=51)
    sol.add_argument("--tqa", type=float, default=None, help="also run the anneal (ns)")
    sol.add_argument("--dt", type=float, default=0.005)
    sol.set_defaults(func=cmd_solve)

    ben = sub.add_parser("bench", help="aggregate records into TTS quantiles")
    ben.add_argument("--records", nargs="+", required=True)
    ben.add_argument("--out", required=True)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--quantiles", default="0.5,0.75,0.85")
    ben.add_argument("--bootstrap", type=int, default=1000)
    ben.set_defaults(func=cmd_bench)

    study = sub.add_parser("npp-study", help="number partitioning heuristics study")
    study.add_argument("--out", required=True)
    study.add_argument("--seed", type=int, default=0)
    study.add_argument("--sizes", default="14,16,18,20")
    study.add_argument("--count", type=int, default=50)
    study.add_argument("--kappa", type=int, default=2)
    study.add_argument("--heuristics", default="greedy,kk,at,brute")
    study.add_argument("--sa-scaling", action="store_true", dest="sa_scaling")
    study.add_argument("--sa-runs", type=int, default=60, dest="sa_runs")
    study.add_argument("--sa-instances", type=int, default=20, dest="sa_instances")
    study.set_defaults(func=cmd_npp_study)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
