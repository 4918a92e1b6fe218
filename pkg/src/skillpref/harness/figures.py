"""Figure rendering for every CSV family the CLI emits.

Each function draws one PNG next to the delimited output and returns
the path. The Agg backend keeps everything headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def learning_curve_figure(rows, path) -> Path:
    if not rows:
        raise ValueError("no metric rows to plot")
    steps = [r.step for r in rows]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    top.plot(steps, [r.return_gt for r in rows], label="ground-truth return")
    top.plot(steps, [r.return_hat for r in rows], label="learned return", alpha=0.7)
    top.set_ylabel("episode return")
    top.legend()
    bottom.plot(steps, [r.feedback_used for r in rows], color="tab:green")
    bottom.set_ylabel("feedback used")
    bottom.set_xlabel("environment step")
    return _finish(fig, path)


def prop1_figure(sweeps, path) -> Path:
    if not sweeps:
        raise ValueError("no sweeps to plot")
    fig, ax = plt.subplots(figsize=(6, 4))
    for sweep in sweeps:
        c = sweep.rows[0].c
        deltas = [row.delta for row in sweep.rows]
        ax.plot(deltas, [row.probit_var for row in sweep.rows], label=f"closed form, c={c:g}")
        ax.plot(deltas, [row.mc_var for row in sweep.rows], "o", ms=3,
                label=f"Monte Carlo, c={c:g}")
    ax.set_xlabel("return gap")
    ax.set_ylabel("preference variance")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def matchrate_figure(buckets, path) -> Path:
    if not buckets:
        raise ValueError("no buckets to plot")
    fig, ax = plt.subplots(figsize=(6, 4))
    centers = [(b.bucket_lo + b.bucket_hi) / 2 for b in buckets]
    widths = [b.bucket_hi - b.bucket_lo for b in buckets]
    ax.bar(centers, [b.match_rate for b in buckets], width=widths,
           edgecolor="black", alpha=0.7)
    ax.axhline(0.5, ls="--", color="gray", lw=1)
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("trajectory return gap")
    ax.set_ylabel("match rate with oracle")
    return _finish(fig, path)


def distinguish_figure(result, path) -> Path:
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.bar([0, 1], [result.skill_ratio, result.disagreement_ratio],
           tick_label=["skill", "disagreement"], color=["tab:blue", "tab:orange"])
    for x, ratios in ((0, result.skill_by_seed), (1, result.disagreement_by_seed)):
        ax.plot([x] * len(ratios), ratios, "k.", ms=4)
    ax.set_ylabel("distinguishable-query ratio")
    ax.set_ylim(0, 1.05)
    return _finish(fig, path)


def ablation_figure(cells, path, last: int = 10) -> Path:
    if not cells:
        raise ValueError("no ablation cells to plot")
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [
        f"{'pre' if c.pretrain_on else 'no-pre'}\n{c.selection}"
        + ("\n+surf" if c.surf else "")
        for c in cells
    ]
    finals = [c.metrics.final_return_gt(last=last) for c in cells]
    ax.bar(range(len(cells)), finals, tick_label=labels)
    ax.set_ylabel("final ground-truth return")
    ax.tick_params(axis="x", labelsize=8)
    return _finish(fig, path)
