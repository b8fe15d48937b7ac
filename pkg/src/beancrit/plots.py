"""Figure rendering to files; no interactive backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_META = {"Date": None}  # keep output bytes independent of the wall clock


def _boundary_xy(omega, n: int = 720):
    th = np.linspace(0.0, 2.0 * np.pi, n + 1)
    pts = omega.point(th)
    return pts[:, 0], pts[:, 1]


def save_field_contour(path, grid, omega, title: str, levels: int = 24) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    vals = np.where(grid.mask, grid.values, np.nan)
    cs = ax.contourf(grid.xs, grid.ys, vals, levels=levels, cmap="viridis")
    fig.colorbar(cs, ax=ax, shrink=0.9)
    bx, by = _boundary_xy(omega)
    ax.plot(bx, by, "k-", lw=1.2)
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)


def save_field_surface(path, grid, title: str) -> None:
    fig = plt.figure(figsize=(7.0, 5.6))
    ax = fig.add_subplot(projection="3d")
    X, Y = np.meshgrid(grid.xs, grid.ys)
    vals = np.where(grid.mask, grid.values, np.nan)
    ax.plot_surface(X, Y, vals, cmap="viridis", rstride=2, cstride=2, linewidth=0)
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)


def save_loop(path, loop, title: str = "magnetization loop") -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(loop.drive, loop.magnetization, "-", lw=1.5)
    ax.set_xlabel("drive H")
    ax.set_ylabel("mean(h - H)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)


def save_front(path, components, omega, title: str = "penetration front") -> None:
    fig, ax = plt.subplots(figsize=(6.0, 5.6))
    bx, by = _boundary_xy(omega)
    ax.plot(bx, by, "k-", lw=1.2)
    for comp in components:
        ax.plot(comp[:, 0], comp[:, 1], "C3-", lw=1.5)
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)


def save_ladder(path, rows, title: str = "distance to the constrained solution") -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ps = [r.p for r in rows]
    gaps = [r.gap_l2 for r in rows]
    ax.loglog(ps, gaps, "o-", lw=1.5)
    ax.set_xlabel("exponent p")
    ax.set_ylabel("L2 gap")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)
