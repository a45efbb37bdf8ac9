"""Matplotlib rendering of command outputs to image files.

Loaded lazily by the CLI when ``--figures DIR`` is given; every command then
drops a PNG next to its delimited output.  Pure file rendering, no display.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, directory, name) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_bound(rows, directory) -> str:
    """Bound against horizon, one line per (x, y) pair."""
    fig, ax = plt.subplots(figsize=(6, 4))
    series: dict[tuple, list] = {}
    for row in rows:
        series.setdefault((row["x"], row["y"]), []).append((row["T"], row["G"]))
    for (x, y), pts in series.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker="o", ms=3, label=f"x={x:g}, y={y:g}")
    ax.set_xlabel("horizon T")
    ax.set_ylabel("occupation bound")
    if len(series) <= 10:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, directory, "bound.png")


def render_resolvent(rows, directory) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    series: dict[float, list] = {}
    for row in rows:
        series.setdefault(row["lambda"], []).append((row["r"], row["Q"]))
    for lam, pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker="o", ms=3, label=f"lambda={lam:g}")
    ax.set_xlabel("distance r")
    ax.set_ylabel("resolvent value")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, directory, "resolvent.png")


def render_simulate(rows, directory) -> str:
    """Estimates with 3 SE whiskers, one bar per row."""
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [f"{r['control']}\ny={r['y']:g}" for r in rows]
    means = [r["mean"] for r in rows]
    errs = [3.0 * r["std_error"] for r in rows]
    ax.bar(range(len(rows)), means, yerr=errs, capsize=4, color="#4878d0")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("occupation estimate")
    ax.grid(alpha=0.3, axis="y")
    return _save(fig, directory, "simulate.png")


def render_integral(rows, directory) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [r.get("kind", "bound") for r in rows]
    vals = [r["value"] for r in rows]
    ax.bar(range(len(rows)), vals, color="#6acc64")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("path-integral bound")
    ax.grid(alpha=0.3, axis="y")
    return _save(fig, directory, "integral_bound.png")


def render_verify(reports, directory) -> str:
    """Residual/margin scatter per check family, failures highlighted."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    names = sorted({r.name for r in reports})
    index = {n: i for i, n in enumerate(names)}
    for r in reports:
        mag = abs(r.residual) if r.residual != 0.0 else 1e-17
        ax.semilogy(index[r.name], mag,
                    marker="o" if r.passed else "x", ms=5,
                    color="#4878d0" if r.passed else "#d65f5f")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("|residual| or |margin|")
    ax.grid(alpha=0.3)
    fig.subplots_adjust(bottom=0.35)
    return _save(fig, directory, "verify.png")
