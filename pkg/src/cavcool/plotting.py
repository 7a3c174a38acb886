"""Figure rendering for the CLI report path.

Each CLI command that emits a CSV also renders a matching PNG next to it
(unless --no-plot).  Acceptance rests on the data files; these figures are
the quick-look companions.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_trajectory(times, m, path: str, *, extra: dict[str, np.ndarray] | None = None,
                      title: str = "mean phonon number") -> str:
    """Log-scale m(t) plot, optionally with additional labelled series."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(times, np.maximum(np.asarray(m), 1e-300), label="m(t)")
    for label, series in (extra or {}).items():
        ax.plot(times, np.maximum(np.asarray(series), 1e-300), "--", label=label)
    ax.set_yscale("log")
    ax.set_xlabel("t [1/kappa]")
    ax.set_ylabel("m")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def render_compare(times, series: dict[str, np.ndarray], path: str) -> str:
    """Overlay of m(t) from the different solution routes."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    styles = {"full25": "-", "analytic": "o", "oracle": "--", "weak5": "-."}
    for label, values in series.items():
        style = styles.get(label, "-")
        if style == "o":
            stride = max(1, len(times) // 30)
            ax.plot(times[::stride], values[::stride], "o", mfc="none", label=label)
        else:
            ax.plot(times, values, style, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("t [1/kappa]")
    ax.set_ylabel("m")
    ax.set_title("mean phonon number: route comparison")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def render_sweep_line(xs, ys, path: str, *, xlabel: str, ylabel: str, logx: bool, logy: bool = True) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(xs, ys)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def render_sweep_grid(nus, deltas, grid, path: str, *, label: str) -> str:
    """Logarithmic contour map over (nu/kappa, delta_eff/kappa)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    with np.errstate(divide="ignore"):
        z = np.log10(np.maximum(np.asarray(grid), 1e-300))
    pcm = ax.pcolormesh(nus, deltas, z.T, shading="auto", cmap="viridis")
    ax.contour(nus, deltas, z.T, colors="k", linewidths=0.4, alpha=0.5)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("nu / kappa")
    ax.set_ylabel("delta_eff / kappa")
    fig.colorbar(pcm, ax=ax, label=f"log10 {label}")
    return _finish(fig, path)


def render_phase(states, path: str, *, tilde: bool = True) -> str:
    """Phase diagrams of the (k7, k8) and (k9, k10) coherence pairs."""
    states = np.asarray(states)
    prefix = "~" if tilde else ""
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 4.0))
    axes[0].plot(states[:, 1], states[:, 2], lw=0.8)
    axes[0].set_xlabel(f"{prefix}k7")
    axes[0].set_ylabel(f"{prefix}k8")
    axes[1].plot(states[:, 3], states[:, 4], lw=0.8)
    axes[1].set_xlabel(f"{prefix}k9")
    axes[1].set_ylabel(f"{prefix}k10")
    for ax in axes:
        ax.axhline(0, color="k", lw=0.4)
        ax.axvline(0, color="k", lw=0.4)
        ax.set_aspect("equal", adjustable="datalim")
        ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def render_oracle(times, m, trace_error, path: str) -> str:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 5.5), sharex=True)
    ax1.plot(times, m)
    ax1.set_ylabel("m = <b+b>")
    ax1.set_yscale("log")
    ax1.grid(True, which="both", alpha=0.3)
    ax2.semilogy(times, np.maximum(trace_error, 1e-18))
    ax2.set_ylabel("|tr rho - 1|")
    ax2.set_xlabel("t [1/kappa]")
    ax2.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)
