"""Matplotlib figure rendering for the report path.

Figures are written straight to files; no interactive backend is ever
touched, so this stays usable on headless machines.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .activation import PiecewiseActivation, eval_piecewise
from .experiment import AggregateStats, RunRecord


def plot_piecewise(pair: PiecewiseActivation, path: str,
                   x_lo: float = -3.0, x_hi: float = 3.0, n: int = 601) -> None:
    """Render one combinatorial activation pair over [x_lo, x_hi]."""
    if n < 2:
        raise ValueError("need at least two sample points")
    xs = [x_lo + (x_hi - x_lo) * i / (n - 1) for i in range(n)]
    ys = [eval_piecewise(pair, x) for x in xs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys, lw=1.6)
    ax.axvline(0.0, color="0.6", lw=0.8, ls="--")
    ax.set_xlabel("x")
    ax.set_ylabel("f(x)")
    ax.set_title(f"{pair.resting.name} (x<0) | {pair.active.name} (x>=0)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_run_summary(records: list[RunRecord], path: str) -> None:
    """Histogram panel: evaluations, node counts, generalization scores.

    Only solution-finding runs appear; a run with no solution has no
    champion to measure.
    """
    solved = [r for r in records if r.solution]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    panels = (
        ("evaluations", [r.evaluations for r in solved]),
        ("champion nodes", [r.nodes for r in solved]),
        ("generalization score", [r.generalization for r in solved]),
    )
    for ax, (label, values) in zip(axes, panels):
        if values:
            ax.hist(values, bins=min(20, max(5, len(set(values)))),
                    color="#4878a8", edgecolor="white")
        ax.set_xlabel(label)
        ax.set_ylabel("runs")
        ax.grid(alpha=0.3)
    total = len(records)
    fig.suptitle(f"{len(solved)}/{total} runs found a solution")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(rows: list[tuple[str, AggregateStats]], path: str) -> None:
    """Bar chart of solution and generalization-pass rates per preset."""
    names = [name for name, _ in rows]
    sol = [100.0 * a.solution_rate for _, a in rows]
    sol_err = [100.0 * a.solution_rate_stderr for _, a in rows]
    gen = [100.0 * a.generalization_pass_rate for _, a in rows]
    gen_err = [100.0 * a.generalization_pass_rate_stderr for _, a in rows]
    xs = range(len(names))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6.0, 1.6 * len(names)), 4))
    ax.bar([x - width / 2 for x in xs], sol, width, yerr=sol_err,
           capsize=3, label="solution", color="#4878a8")
    ax.bar([x + width / 2 for x in xs], gen, width, yerr=gen_err,
           capsize=3, label="generalization pass", color="#a85448")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("rate (%)")
    ax.set_ylim(0, 105)
    ax.legend()
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
