"""Figure rendering for run and sweep reports.

Figures are written straight to files next to the CSV output; nothing is
shown interactively.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import RunMetrics

DPI = 150


def save_run_figure(metrics: RunMetrics, path: str | Path) -> None:
    """Per-frame compute profile: actual vs dense MACs, and per-layer
    recompute fractions."""
    frames = sorted({r.frame_idx for r in metrics.layer_records})
    actual = []
    dense = []
    for f in frames:
        recs = [r for r in metrics.layer_records if r.frame_idx == f]
        actual.append(sum(r.actual_macs for r in recs))
        dense.append(sum(r.dense_macs for r in recs))

    fig, (ax_macs, ax_frac) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_macs.bar(frames, actual, color="#1f77b4", label="actual MACs")
    ax_macs.plot(frames, dense, "k--", lw=1.2, label="dense equivalent")
    ax_macs.set_ylabel("MACs / frame")
    ax_macs.legend(loc="upper right", fontsize=8)
    title = f"{metrics.mode} run"
    if metrics.tau is not None:
        title += f", tau={metrics.tau:g}"
    ax_macs.set_title(title)

    for name in metrics.layer_names():
        recs = metrics.layer_frames(name)
        if all(r.kind == "relu" for r in recs):
            continue
        fracs = [r.recomputed / r.total if r.total else 0.0 for r in recs]
        ax_frac.plot([r.frame_idx for r in recs], fracs, marker="o", ms=3, label=name)
    ax_frac.set_ylim(-0.05, 1.05)
    ax_frac.set_xlabel("frame")
    ax_frac.set_ylabel("recomputed fraction")
    ax_frac.legend(loc="upper right", fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_sweep_figure(rows: list[dict[str, object]], path: str | Path) -> None:
    """Savings ratio (and accuracy, when labeled) as a function of tau."""
    taus = [float(str(r["tau"])) for r in rows]
    ratios = [float(str(r["savings_ratio"])) for r in rows]
    accs = [str(r["accuracy"]) for r in rows]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(taus, ratios, "o-", color="#1f77b4", label="savings ratio")
    ax.set_xlabel("tau")
    ax.set_ylabel("actual / dense MACs")
    ax.set_ylim(0, 1.05)
    if any(a != "" for a in accs):
        ax2 = ax.twinx()
        ax2.plot(taus, [float(a) for a in accs], "s--", color="#d62728", label="accuracy")
        ax2.set_ylabel("accuracy")
        ax2.set_ylim(0, 1.05)
        lines, labels = ax.get_legend_handles_labels()
        lines2, labels2 = ax2.get_legend_handles_labels()
        ax.legend(lines + lines2, labels + labels2, loc="center right", fontsize=8)
    else:
        ax.legend(loc="center right", fontsize=8)
    ax.set_title("compute vs change threshold")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
