"""Plots of the per-generation traces a selection run wrote to disk."""

from __future__ import annotations

import re
from pathlib import Path


class PlottingError(RuntimeError):
    """Traces missing, or matplotlib is not installed."""


def read_trace(path: Path | str) -> dict[str, list[float]]:
    """Parse a tab-separated trace file into one list per column."""
    path = Path(path)
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line]
    if not lines:
        raise PlottingError(f"{path}: empty trace")
    header = lines[0].split("\t")
    columns: dict[str, list[float]] = {name: [] for name in header}
    for line in lines[1:]:
        values = line.split("\t")
        if len(values) != len(header):
            raise PlottingError(f"{path}: ragged trace row")
        for name, token in zip(header, values):
            columns[name].append(float(token))
    return columns


def render_plots(output_dir: Path | str) -> list[Path]:
    """One fitness plot and one mutation-probability plot per trace file."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise PlottingError("matplotlib is required for plotting; install the 'plot' extra") from exc

    root = Path(output_dir)
    traces = sorted((root / "select").glob("trace_k*.tsv"))
    if not traces:
        raise PlottingError(f"no trace files under {root / 'select'}")
    plots_dir = root / "plots"
    plots_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for trace_path in traces:
        match = re.fullmatch(r"trace_k(\d+)\.tsv", trace_path.name)
        label = match.group(1) if match else trace_path.stem
        columns = read_trace(trace_path)
        generations = columns["generation"]

        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(generations, columns["best_fitness"], marker="o", label="best")
        ax.plot(generations, columns["mean_fitness"], marker=".", label="mean")
        ax.set_xlabel("generation")
        ax.set_ylabel("fitness")
        ax.set_title(f"fitness, pool size {label}")
        ax.legend()
        fig.tight_layout()
        fitness_path = plots_dir / f"fitness_k{label}.png"
        fig.savefig(fitness_path)
        plt.close(fig)

        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(generations, columns["p_inter"], marker="o", color="tab:orange")
        ax.set_xlabel("generation")
        ax.set_ylabel("inter-cluster mutation probability")
        ax.set_ylim(0.0, 1.0)
        ax.set_title(f"adaptive mutation, pool size {label}")
        fig.tight_layout()
        p_inter_path = plots_dir / f"p_inter_k{label}.png"
        fig.savefig(p_inter_path)
        plt.close(fig)

        written.extend([fitness_path, p_inter_path])
    return written
