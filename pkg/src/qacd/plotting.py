"""Report figures rendered next to the CSV outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

LABELS = {"qacd": "QACD", "pc": "PC-stable", "qacd_ablation_t0": "QACD (T_max=0)"}


def _style(ax):
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.grid(alpha=0.3, linewidth=0.5)


def plot_f1_vs_n(rows: list[dict], path, title: str | None = None) -> Path:
    """Mean skeleton F1 (with std band) against sample size, one line per method."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    methods = list(dict.fromkeys(r["method"] for r in rows))
    for m in methods:
        rs = sorted((r for r in rows if r["method"] == m), key=lambda r: r["n_samples"])
        n = [r["n_samples"] for r in rs]
        mu = [r["mean_f1"] for r in rs]
        sd = [r["std_f1"] for r in rs]
        ax.plot(n, mu, marker="o", label=LABELS.get(m, m))
        ax.fill_between(n, [a - b for a, b in zip(mu, sd)], [a + b for a, b in zip(mu, sd)], alpha=0.2)
    ax.set_xscale("log")
    ax.set_xlabel("sample size N")
    ax.set_ylabel("skeleton F1")
    if title:
        ax.set_title(title)
    _style(ax)
    ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_summary(summary: list[dict], path, metrics=("f1", "nshd", "nsid_low"), title: str | None = None) -> Path:
    """Grouped bars of mean +- std per method for a few metrics."""
    methods = list(dict.fromkeys(r["method"] for r in summary))
    metrics = [m for m in metrics if any(r["metric"] == m and r["count"] for r in summary)]
    fig, axes = plt.subplots(1, max(len(metrics), 1), figsize=(2.6 * max(len(metrics), 1) + 0.5, 3.2), squeeze=False)
    for ax, metric in zip(axes[0], metrics):
        mu, sd = [], []
        for m in methods:
            row = next((r for r in summary if r["method"] == m and r["metric"] == metric), None)
            mu.append(row["mean"] if row and row["mean"] is not None else 0.0)
            sd.append(row["std"] if row and row["std"] is not None else 0.0)
        ax.bar(range(len(methods)), mu, yerr=sd, capsize=3, color=[f"C{i}" for i in range(len(methods))])
        ax.set_xticks(range(len(methods)))
        ax.set_xticklabels([LABELS.get(m, m) for m in methods], rotation=20, ha="right", fontsize=8)
        ax.set_title(metric)
        _style(ax)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
