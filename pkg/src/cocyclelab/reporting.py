"""Figure rendering for the CLI report path.

Each helper takes already-computed arrays and writes one PNG next to the
delimited output; nothing here recomputes results.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_walk(distances, path, title="random walk distance"):
    fig, ax = plt.subplots(figsize=(6, 4))
    steps = np.arange(len(distances))
    ax.plot(steps, distances, lw=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("|W_n|")
    ax.set_title(title)
    return _finish(fig, path)


def plot_compression(report, path, title="compression fit"):
    radii = np.array([b[0] for b in report.buckets])
    mins = np.array([b[2] for b in report.buckets])
    gmeans = np.array([b[3] for b in report.buckets])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(radii, mins, "o", ms=4, label="bucket min")
    ax.loglog(radii, gmeans, "s", ms=3, alpha=0.6, label="bucket gmean")
    anchor = mins[len(mins) // 2] / radii[len(radii) // 2] ** report.alpha_envelope
    ax.loglog(
        radii,
        anchor * radii**report.alpha_envelope,
        "--",
        label=f"slope {report.alpha_envelope:.3f}",
    )
    ax.set_xlabel("radius")
    ax.set_ylabel("cocycle norm")
    ax.legend()
    ax.set_title(title)
    return _finish(fig, path)


def plot_markov(report, path, title="Markov-type ratio"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(report.n, report.ratio, yerr=report.stderr, fmt=".", ms=3, label="Monte Carlo")
    if report.exact_ratio is not None:
        ax.plot(report.n, report.exact_ratio, "-", lw=1, label="exact chain")
    ax.axhline(1.0, color="k", lw=0.5)
    ax.set_xlabel("n")
    ax.set_ylabel("E||b(W_n)||^p / (n E||b(W_1)||^p)")
    ax.legend()
    ax.set_title(title)
    return _finish(fig, path)


def plot_eta(witness, path, title="eta witness"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step(witness.breakpoints, witness.values, where="post")
    ax.set_xscale("log")
    ax.set_xlabel("radius")
    ax.set_ylabel("eta")
    ax.set_title(f"{title} (slope {witness.slope:.3f}, diverges={witness.diverges})")
    return _finish(fig, path)


def plot_moduli(curves, path, title="moduli"):
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, curve in curves:
        ax.plot(curve.args, curve.values, label=label)
    ax.set_xlabel("argument")
    ax.set_ylabel("value")
    ax.legend()
    ax.set_title(title)
    return _finish(fig, path)


def plot_ode(solution, path, title="radial solution"):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(solution.r, solution.psi)
    if solution.predicted_limit is not None:
        ax1.axhline(solution.predicted_limit, color="r", ls="--", lw=0.8)
    ax1.set_xlabel("r")
    ax1.set_ylabel("psi")
    ax2.plot(solution.r, solution.phi)
    ax2.set_xlabel("r")
    ax2.set_ylabel("phi")
    fig.suptitle(title)
    return _finish(fig, path)
