"""Uniform cell-centered grids over the bounding box of a domain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import DomainBoundary
from .errors import InvalidField


@dataclass
class ScalarGrid:
    """A scalar field sampled at cell centers of a bounding-box grid.

    values holds a number for every cell of the box, row iy, column ix.
    mask marks the cells whose center lies inside the domain; producers are
    free to store a natural extension on outside cells so that interpolation
    near the boundary stays well defined.
    """

    x0: float
    y0: float
    hx: float
    hy: float
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.values.shape != self.mask.shape:
            raise InvalidField(
                f"values shape {self.values.shape} != mask shape {self.mask.shape}"
            )

    # ── construction ─────────────────────────────────────────────────────────

    @classmethod
    def empty(cls, omega: DomainBoundary, n: int) -> "ScalarGrid":
        """An all-zero grid of n*n cells covering the bounding box of omega."""
        xmin, xmax, ymin, ymax = omega.bounding_box
        hx = (xmax - xmin) / n
        hy = (ymax - ymin) / n
        g = cls(xmin, ymin, hx, hy, np.zeros((n, n)), np.zeros((n, n), dtype=bool))
        g.mask = omega.contains(g.points())
        return g

    @classmethod
    def from_function(cls, omega: DomainBoundary, n: int, fn) -> "ScalarGrid":
        g = cls.empty(omega, n)
        g.values = np.asarray(fn(g.points()), dtype=float)
        return g

    def like(self, values: np.ndarray) -> "ScalarGrid":
        """A new grid with the same geometry and the given values."""
        return ScalarGrid(self.x0, self.y0, self.hx, self.hy, np.asarray(values, dtype=float), self.mask)

    # ── geometry ─────────────────────────────────────────────────────────────

    @property
    def shape(self):
        return self.values.shape

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + (np.arange(self.shape[1]) + 0.5) * self.hx

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + (np.arange(self.shape[0]) + 0.5) * self.hy

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def cell_size(self) -> float:
        return max(self.hx, self.hy)

    def points(self) -> np.ndarray:
        """Cell centers, shape (ny, nx, 2)."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.stack([X, Y], axis=-1)

    def same_geometry(self, other: "ScalarGrid") -> bool:
        return self.shape == other.shape and np.isclose(self.hx, other.hx) and np.isclose(
            self.hy, other.hy
        ) and np.isclose(self.x0, other.x0) and np.isclose(self.y0, other.y0)

    # ── evaluation ───────────────────────────────────────────────────────────

    def interp(self, pts) -> np.ndarray:
        """Bilinear interpolation of values at points, shape (..., 2)."""
        pts = np.asarray(pts, dtype=float)
        ny, nx = self.shape
        fx = (pts[..., 0] - self.x0) / self.hx - 0.5
        fy = (pts[..., 1] - self.y0) / self.hy - 0.5
        # indices clamped, weights free: linear extrapolation in the outer
        # half-cell ring, where boundary points of a tight box land
        ix = np.clip(np.floor(fx).astype(int), 0, nx - 2)
        iy = np.clip(np.floor(fy).astype(int), 0, ny - 2)
        wx = fx - ix
        wy = fy - iy
        v = self.values
        return (
            v[iy, ix] * (1 - wx) * (1 - wy)
            + v[iy, ix + 1] * wx * (1 - wy)
            + v[iy + 1, ix] * (1 - wx) * wy
            + v[iy + 1, ix + 1] * wx * wy
        )

    def gradient(self) -> np.ndarray:
        """Central-difference gradient, shape (ny, nx, 2); one-sided at box edges."""
        gy, gx = np.gradient(self.values, self.hy, self.hx)
        return np.stack([gx, gy], axis=-1)

    def interior_mask(self) -> np.ndarray:
        """Cells whose full 4-neighbor stencil lies inside the domain mask."""
        m = self.mask
        out = m.copy()
        out[1:-1, 1:-1] = (
            m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
        )
        out[0, :] = out[-1, :] = False
        out[:, 0] = out[:, -1] = False
        return out

    def integrate(self, integrand: np.ndarray | None = None) -> float:
        """Masked cell-area quadrature of integrand (defaults to the field)."""
        v = self.values if integrand is None else np.asarray(integrand)
        return float(np.sum(v[self.mask]) * self.cell_area)
