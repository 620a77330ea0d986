"""Figure rendering for bound reports.

Charts are written as SVG next to the CSV tables. Determinism matters more
than beauty here: the SVG hashsalt is pinned to the config hash and the
date metadata is stripped, so re-running a command reproduces the file byte
for byte.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _deterministic_save(fig, path, salt: str) -> None:
    with plt.rc_context({"svg.hashsalt": salt}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def save_bound_chart(log_methods: dict[str, float], path, salt: str = "prunebound") -> None:
    """Bar chart of ln(bound) per method, sorted ascending."""
    items = sorted(log_methods.items(), key=lambda kv: kv[1])
    names = [k for k, _ in items]
    values = [v for _, v in items]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(names)), values, color="#4878b0")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("ln(bound)")
    ax.set_title("Generalization bounds, natural-log scale")
    ax.axhline(0.0, color="black", linewidth=0.6)
    fig.tight_layout()
    _deterministic_save(fig, path, salt)


def save_sweep_chart(dims: list[int], series: dict[str, list[float]], path,
                     salt: str = "prunebound") -> None:
    """ln(bound) versus hidden dimension, one line per method."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for name in sorted(series):
        ax.plot(dims, series[name], marker="o", label=name)
    ax.set_xlabel("hidden dimension")
    ax.set_ylabel("ln(bound)")
    ax.set_title("Bound growth with model size")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _deterministic_save(fig, path, salt)
