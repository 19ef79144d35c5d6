"""Figure rendering for the report-producing commands.

Every plot lands next to its delimited twin (same stem, .png) so reports
stay self-contained; the CSV remains the canonical output.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_tts_summary(rows, path) -> None:
    """Time-to-solution quantiles vs problem size, one line per
    (algorithm, quantile); absent entries are skipped."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    series: dict[tuple[str, float], list] = {}
    for n_vars, q, point, lo, hi, algorithm in rows:
        if point is None or (isinstance(point, float) and math.isinf(point)):
            continue
        series.setdefault((algorithm, q), []).append((n_vars, point, lo, hi))
    for (algorithm, q), pts in sorted(series.items()):
        pts.sort()
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        down = [y - (lo if lo is not None else y) for y, (_, _, lo, _) in zip(ys, pts)]
        up = [
            (hi if hi is not None and math.isfinite(hi) else y) - y
            for y, (_, _, _, hi) in zip(ys, pts)
        ]
        ax.errorbar(xs, ys, yerr=[down, up], marker="o", capsize=3, label=f"{algorithm} q={q:g}")
    ax.set_yscale("log")
    ax.set_xlabel("problem size N")
    ax.set_ylabel("time to 99% success (s)")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_spectrum(result, path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.5, 3.8))
    for i in range(result.energies.shape[1]):
        ax1.plot(result.s_grid, result.energies[:, i], label=f"E{i}")
    ax1.set_xlabel("s")
    ax1.set_ylabel("energy (GHz)")
    ax1.legend(fontsize=8)
    gap = result.gap()
    ax2.plot(result.s_grid, gap)
    ax2.axvline(result.s_min_gap, color="k", ls=":", lw=0.8)
    ax2.set_xlabel("s")
    ax2.set_ylabel("E1 - E0 (GHz)")
    ax2.set_title(f"min gap {result.min_gap:.3f} GHz at s={result.s_min_gap:.3f}", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_evolution(result, path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    ax.plot(result.times_ns, result.p0, "o-", label="P0")
    ax.plot(result.times_ns, result.p1, "s-", label="P1")
    ax.set_xlabel("t (ns)")
    ax.set_ylabel("population")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_npp_residues(rows, path) -> None:
    """Median residue vs N per heuristic, log scale."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    series: dict[str, list] = {}
    for n, method, median in rows:
        series.setdefault(method, []).append((n, median))
    for method, pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [max(p[1], 0.5) for p in pts], "o-", label=method)
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("median residue")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_scaling(sizes, efforts, fit, path, ylabel="median spin updates to 99%") -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.semilogy(sizes, efforts, "o", base=2, label="measured")
    xs = [min(sizes), max(sizes)]
    ax.semilogy(
        xs,
        [fit.prefactor * 2 ** (fit.alpha * x) for x in xs],
        "-",
        base=2,
        label=f"fit alpha={fit.alpha:.3f}",
    )
    ax.set_xlabel("N")
    ax.set_ylabel(ylabel)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
