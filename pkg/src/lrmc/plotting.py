"""Convergence figures rendered next to the CSV traces."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["plot_convergence"]

_FLOOR = 1e-24  # keeps log axes finite when a run bottoms out at zero


def _clip(values):
    return [max(v, _FLOOR) for v in values]


def plot_convergence(results, out_dir: str | Path) -> list[Path]:
    """Render cost/gradient-vs-iteration and cost-vs-time figures.

    Takes the CellResult list of a batch run; cells that failed before
    producing a trace are skipped.  Returns the written file paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    traced = [r for r in results if r.trace is not None and r.trace.records]
    if not traced:
        return []

    written = []

    fig, (ax_cost, ax_grad) = plt.subplots(1, 2, figsize=(11, 4.2))
    for result in traced:
        records = result.trace.records
        iters = [rec.iteration for rec in records]
        label = result.cell.label.replace("_", "-")
        ax_cost.semilogy(iters, _clip([rec.cost for rec in records]), label=label)
        ax_grad.semilogy(iters, _clip([rec.grad_norm for rec in records]), label=label)
    ax_cost.set_xlabel("iteration")
    ax_cost.set_ylabel("cost")
    ax_grad.set_xlabel("iteration")
    ax_grad.set_ylabel("gradient norm")
    ax_cost.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "convergence_iterations.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4.2))
    for result in traced:
        records = result.trace.records
        ax.semilogy(
            [rec.wall_time_s for rec in records],
            _clip([rec.cost for rec in records]),
            label=result.cell.label.replace("_", "-"),
        )
    ax.set_xlabel("wall time (s)")
    ax.set_ylabel("cost")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "convergence_time.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written
