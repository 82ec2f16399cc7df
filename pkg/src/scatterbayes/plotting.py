"""Static figure output for reconstructions: boundary overlay and misfit
trace. Files are vector graphics with deterministic bytes for fixed inputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Deterministic SVG ids; the date is suppressed per-savefig.
matplotlib.rcParams["svg.hashsalt"] = "scatterbayes"

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def _closed(theta, r, center):
    th = np.append(theta, theta[0] + 2 * np.pi)
    rr = np.append(r, r[0])
    return center[0] + rr * np.cos(th), center[1] + rr * np.sin(th)


def plot_boundary(path, theta, r_mean, r_low, r_high, center=(0.0, 0.0),
                  truth_points=None, title=None) -> None:
    """Overlay of posterior mean boundary, credible band, and truth."""
    fig, ax = plt.subplots(figsize=(5, 5))
    bx, by = _closed(theta, r_low, center)
    tx, ty = _closed(theta, r_high, center)
    ax.fill(np.concatenate([bx, tx[::-1]]), np.concatenate([by, ty[::-1]]),
            color="0.8", lw=0, label="credible band")
    mx, my = _closed(theta, r_mean, center)
    ax.plot(mx, my, "b-", lw=1.5, label="posterior mean")
    if truth_points is not None:
        pts = np.vstack([truth_points, truth_points[:1]])
        ax.plot(pts[:, 0], pts[:, 1], "r--", lw=1.2, label="truth")
    ax.plot([center[0]], [center[1]], "k+", ms=8)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    if title:
        ax.set_title(title)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_trace(path, iterations, phi, title=None) -> None:
    """Misfit potential along the retained chain."""
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(iterations, phi, "k-", lw=0.6)
    ax.set_xlabel("iteration")
    ax.set_ylabel("potential")
    if title:
        ax.set_title(title)
    if np.all(np.asarray(phi) > 0):
        ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
