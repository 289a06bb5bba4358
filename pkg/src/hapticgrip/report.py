"""Figure rendering for experiment and analysis outputs.

Each report function takes the row dicts the harness/analysis emit and
writes one PNG. Figures mirror the delimited outputs: safe-margin rate and
lift rate by trial and mode, lift counts by trial, a per-trial signal trace,
and the neural-efficiency summary.
"""

from __future__ import annotations

import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .telemetry import Telemetry

MARGIN = (3.0, 4.0)
MODE_COLORS = {
    "NoFeedback": "tab:gray",
    "Feedback": "tab:blue",
    "Autonomous": "tab:green",
}


def _rate_by_trial(rows, key, flag):
    """mode -> (trials, rates) of mean flag per trial."""
    acc = defaultdict(lambda: defaultdict(list))
    for r in rows:
        acc[r[key]][int(r["trial"])].append(1.0 if r[flag] else 0.0)
    out = {}
    for mode, per_trial in acc.items():
        trials = sorted(per_trial)
        out[mode] = (trials, [float(np.mean(per_trial[k])) for k in trials])
    return out


def plot_margin_rate(attempt_rows, path) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode, (trials, rates) in sorted(_rate_by_trial(attempt_rows, "mode", "in_margin").items()):
        ax.plot(trials, rates, "o-", label=mode, color=MODE_COLORS.get(mode))
    ax.set_xlabel("Trial")
    ax.set_ylabel("P(grasp within 3-4 V margin)")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_lift_rate(attempt_rows, path) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode, (trials, rates) in sorted(_rate_by_trial(attempt_rows, "mode", "lifted").items()):
        ax.plot(trials, rates, "o-", label=mode, color=MODE_COLORS.get(mode))
    ax.set_xlabel("Trial")
    ax.set_ylabel("P(successful 3 s lift)")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_lift_counts(trial_rows, path) -> str:
    acc = defaultdict(lambda: defaultdict(list))
    for r in trial_rows:
        acc[r["group"]][int(r["trial"])].append(float(r["lifts"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    for group, per_trial in sorted(acc.items()):
        trials = sorted(per_trial)
        ax.plot(trials, [np.mean(per_trial[k]) for k in trials], "o-", label=group)
    ax.set_xlabel("Trial")
    ax.set_ylabel("Lifts per trial (mean)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_trace(telem: Telemetry, path, title: str = "") -> str:
    """Stacked per-tick signals: flexion, motor command, percent closed, load, vibration."""
    cols = telem.arrays()
    t = cols["t"]
    fig, axes = plt.subplots(5, 1, figsize=(8, 9), sharex=True)
    axes[0].plot(t, cols["s_f"], lw=0.6, color="tab:purple")
    axes[0].set_ylabel("$S_f$")
    axes[1].plot(t, cols["u_c"], lw=0.6, color="tab:orange")
    axes[1].set_ylabel("$u_c$ (V)")
    axes[2].plot(t, cols["aperture_pct"], lw=0.8, color="tab:brown")
    axes[2].set_ylabel("% closed")
    axes[3].plot(t, cols["load"], lw=0.8, color="tab:red")
    axes[3].axhspan(MARGIN[0], MARGIN[1], color="tab:green", alpha=0.15, label="safe margin")
    axes[3].set_ylabel("$L$ (V)")
    axes[3].legend(loc="lower right", fontsize=8)
    axes[4].plot(t, cols["nu"], lw=0.6, color="tab:blue")
    axes[4].set_ylabel(r"$\nu$ env (V)")
    axes[4].set_xlabel("time (s)")
    air = cols["airborne"]
    rises = np.flatnonzero(air[1:] & ~air[:-1]) + 1
    falls = np.flatnonzero(~air[1:] & air[:-1]) + 1
    for ax in axes:
        for i in rises:
            ax.axvline(t[i], color="green", ls="--", lw=0.6, alpha=0.6)
        for i in falls:
            ax.axvline(t[i], color="brown", ls=":", lw=0.6, alpha=0.6)
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_neural_efficiency(eff_rows, path) -> str:
    """Neural efficiency per trial, one line per region."""
    acc = defaultdict(lambda: ([], []))
    for r in eff_rows:
        acc[r["region"]][0].append(int(r["trial"]))
        acc[r["region"]][1].append(float(r["neural_efficiency"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    for region, (trials, eff) in sorted(acc.items()):
        order = np.argsort(trials)
        ax.plot(np.asarray(trials)[order], np.asarray(eff)[order], "o-", label=region)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("Trial")
    ax.set_ylabel("Neural efficiency")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_hbt(eff_rows, path) -> str:
    acc = defaultdict(lambda: ([], []))
    for r in eff_rows:
        acc[r["region"]][0].append(int(r["trial"]))
        acc[r["region"]][1].append(float(r["mean_hbt"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    for region, (trials, hbt) in sorted(acc.items()):
        order = np.argsort(trials)
        ax.plot(np.asarray(trials)[order], np.asarray(hbt)[order], "o-", label=region)
    ax.set_xlabel("Trial")
    ax.set_ylabel(r"mean $\Delta$HbT ($\mu$M)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_experiment_figures(result, out_dir: str) -> list[str]:
    """Standard figure set for a batch run; returns written paths."""
    fig_dir = os.path.join(out_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    attempt_rows = result.attempt_rows()
    trial_rows = result.trial_rows()
    written = [
        plot_margin_rate(attempt_rows, os.path.join(fig_dir, "margin_rate.png")),
        plot_lift_rate(attempt_rows, os.path.join(fig_dir, "lift_rate.png")),
        plot_lift_counts(trial_rows, os.path.join(fig_dir, "lift_counts.png")),
    ]
    if result.sessions and result.sessions[0].telemetry:
        s = result.sessions[0]
        written.append(
            plot_trace(
                s.telemetry[0],
                os.path.join(fig_dir, f"trace_{s.session_id}_trial1.png"),
                title=f"{s.session_id} trial 1",
            )
        )
    return written
