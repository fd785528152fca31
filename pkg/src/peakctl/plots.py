"""Figure rendering for the report path.

Every CLI report that emits delimited data also renders the matching
matplotlib figure next to it (PNG, Agg backend).  The singular phase is
drawn in red on top of the orbit.
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .nsn import NSNResult
from .synthesis import SynthesisReport


def _phase_mask(res: NSNResult, name: str):
    for n, a, b in res.phases:
        if n == name and b > a:
            return (res.trajectory.t >= a) & (res.trajectory.t <= b)
    return None


def plot_orbit(res: NSNResult, path) -> None:
    traj = res.trajectory
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(traj.x, traj.y, color="C0", lw=1.5, label="orbit")
    m = _phase_mask(res, "singular")
    if m is not None:
        ax.plot(traj.x[m], traj.y[m], color="red", lw=2.5,
                label="singular arc")
    ax.axhline(res.report.ystar, color="gray", ls=":", lw=0.8)
    ax.plot([traj.x[0]], [traj.y[0]], "ko", ms=5)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_timeseries(res: NSNResult, path) -> None:
    traj = res.trajectory
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    ax1.plot(traj.t, traj.y, color="C0")
    ax1.axhline(res.report.ystar, color="gray", ls=":", lw=0.8)
    ax1.set_ylabel("y")
    ax2.step(traj.t, traj.u, color="C1", where="post")
    ax2.set_ylabel("u")
    ax2.set_xlabel("t")
    for ax in (ax1, ax2):
        for n, a, b in res.phases:
            if n == "singular" and b > a:
                ax.axvspan(a, b, color="red", alpha=0.12)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_budget_curve(report: SynthesisReport, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if report.budget_curve:
        ys = [p[0] for p in report.budget_curve]
        Ls = [p[1] for p in report.budget_curve]
        ax.plot(ys, Ls, "o-", color="C0", ms=3)
    ax.axhline(report.K, color="gray", ls="--", lw=0.8, label="budget")
    ax.axvline(report.ystar, color="red", ls=":", lw=1.0, label="optimal level")
    ax.set_xlabel("held level")
    ax.set_ylabel("budget needed")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(values: Sequence[float], ystars: Sequence[float],
               peaks: Sequence[float], axis_label: str, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(values, ystars, "o-", label="optimal level", ms=3)
    ax.plot(values, peaks, "s--", label="achieved peak", ms=3)
    ax.set_xlabel(axis_label)
    ax.set_ylabel("y")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
