"""CSV tables and matplotlib figures for the throttling analysis."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from .attacks import PolicyComparison, build_store, compare_policies, write_comparison_csv  # noqa: E402
from .crypto import ServerSecret, generate_secret  # noqa: E402
from .throttle import DelayPolicy, PolicyKind  # noqa: E402

DEFAULT_POLICIES = ("none", "exp:2:cap20", "exp:4:cap20")


def delay_schedule(policy: DelayPolicy, attempts: int, interval: float = 1.0) -> List[Tuple[int, float, float]]:
    """``(attempt, wait before it, total wait so far)`` for attempts 1..N.

    Timestamp policies are evaluated as if every response took *interval*.
    """
    rows, total = [], 0.0
    for a in range(1, attempts + 1):
        wait = 0.0 if a == 1 else policy.delay(a, 0.0, interval)
        total += wait
        rows.append((a, wait, total))
    return rows


def plot_delay_schedule(policies: Sequence[DelayPolicy], attempts: int, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for p in policies:
        if p.kind is PolicyKind.NONE:
            continue
        rows = delay_schedule(p, attempts)
        if not any(r[1] > 0 for r in rows):
            continue
        xs = [r[0] for r in rows[1:]]
        ax1.step(xs, [r[1] for r in rows[1:]], where="mid", label=p.label())
        ax2.plot(xs, [r[2] for r in rows[1:]], marker=".", label=p.label())
    for ax, title in ((ax1, "wait before attempt"), (ax2, "cumulative wait")):
        ax.set_yscale("log")
        ax.set_xlabel("attempt")
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
        ax.set_ylabel("time-units")
        ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
    ax1.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_policy_comparison(rows: Sequence[PolicyComparison], path) -> Path:
    labels = [r.policy.label() for r in rows]
    times = [max(r.sim_time, 1.0) for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    bars = ax.bar(labels, times, color="0.6", edgecolor="k")
    for bar, r in zip(bars, rows):
        ax.annotate(f"{r.sim_time:g}", (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=8)
    ax.set_yscale("log")
    ax.set_ylabel("simulated time to exhaust dictionary")
    ax.set_title(f"dictionary of {rows[0].attempts} words" if rows else "")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_report(
    out_dir,
    *,
    words: int = 10,
    policies: Sequence[DelayPolicy] = tuple(DelayPolicy.parse(p) for p in DEFAULT_POLICIES),
    schedule_attempts: int = 20,
    secret: ServerSecret = None,
) -> Dict[str, Path]:
    """Run a target-absent dictionary attack under each policy and write
    ``comparison.csv``, ``schedule.csv`` and two PNG figures to *out_dir*.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    secret = secret or generate_secret()
    store = build_store([("victim", "correct horse battery staple")])
    dictionary = [f"word{i:05d}" for i in range(words)]
    rows = compare_policies(dictionary, "victim", store, list(policies), secret)

    paths = {"comparison": out / "comparison.csv", "schedule": out / "schedule.csv"}
    with open(paths["comparison"], "w", newline="") as fh:
        write_comparison_csv(rows, fh)
    with open(paths["schedule"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("policy", "attempt", "wait", "cumulative"))
        for p in policies:
            for a, wait, total in delay_schedule(p, schedule_attempts):
                w.writerow((p.label(), a, f"{wait:g}", f"{total:g}"))
    paths["schedule_png"] = plot_delay_schedule(policies, schedule_attempts, out / "delay_schedule.png")
    paths["comparison_png"] = plot_policy_comparison(rows, out / "policy_comparison.png")
    return paths
