"""Planar convex bodies and their gauge calculus.

A body K is compact, convex, with the origin in its interior.  Its gauge is

    rho_K(xi) = inf{t >= 0 : xi in t*K},

positively 1-homogeneous with  c1*|xi| <= rho_K(xi) <= c2*|xi|.  The polar
body K0 = {z : <z, xi> <= 1 for all xi in K} has gauge equal to the support
function of K, and the two satisfy the duality  rho_K(D rho_K0(xi)) = 1.

Three shapes are supported:

* ``disk(radius, center)`` and ``ellipse(a, b, center)`` evaluate gauge,
  support, and their first two derivatives in closed form, including offset
  centers (the offset solves a scalar quadratic).
* ``from_boundary_points(points)`` completes a sampled boundary by chords.
  The polygon is then the body: gauge queries intersect a ray with the
  matching edge exactly, support queries maximize over vertices exactly.
  Such bodies are only piecewise smooth; derivative queries fall back to
  central differences and second derivatives vanish along faces, so the
  curvature-dependent machinery elsewhere expects the smooth shapes.

All evaluators accept arrays of shape (..., 2) and return shape (...).
"""

from __future__ import annotations

import numpy as np

from .errors import ZeroVector
from . import tolerances as tol

_Array = np.ndarray


def _as_points(xi) -> _Array:
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 2:
        raise ValueError(f"expected trailing axis of length 2, got shape {xi.shape}")
    return xi


def _check_nonzero(xi: _Array) -> None:
    norms = np.hypot(xi[..., 0], xi[..., 1])
    if np.any(norms < tol.ZERO_VECTOR_ATOL):
        raise ZeroVector("gauge derivative requested at zero direction")


class ConvexBody:
    """A convex body given as a disk, an ellipse, or sampled boundary points."""

    def __init__(self, kind: str, *, axes=None, center=None, points=None):
        self.kind = kind
        if kind in ("disk", "ellipse"):
            self.axes = np.asarray(axes, dtype=float)
            self.center = np.asarray(center, dtype=float)
            if np.any(self.axes <= 0.0):
                raise ValueError("semi-axes must be positive")
            # origin interior to center + E  <=>  |S c| < 1 with S = diag(1/a, 1/b)
            sc = self.center / self.axes
            if sc @ sc >= 1.0:
                raise ValueError("origin must lie strictly inside the body")
            self._sc = sc
            self._A = float(sc @ sc) - 1.0
            self.points = None
        elif kind == "parametric":
            self.points = self._prepare_polygon(np.asarray(points, dtype=float))
            self.axes = None
            self.center = None
            self._angles = np.arctan2(self.points[:, 1], self.points[:, 0])
        else:
            raise ValueError(f"unknown body kind {kind!r}")

    # ── constructors ─────────────────────────────────────────────────────────

    @classmethod
    def disk(cls, radius: float, center=(0.0, 0.0)) -> "ConvexBody":
        return cls("disk", axes=(radius, radius), center=center)

    @classmethod
    def ellipse(cls, a: float, b: float, center=(0.0, 0.0)) -> "ConvexBody":
        return cls("ellipse", axes=(a, b), center=center)

    @classmethod
    def from_boundary_points(cls, points) -> "ConvexBody":
        return cls("parametric", points=points)

    @staticmethod
    def _prepare_polygon(pts: _Array) -> _Array:
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise ValueError("boundary points must be an (n, 2) array, n >= 3")
        order = np.argsort(np.arctan2(pts[:, 1], pts[:, 0]))
        pts = pts[order]
        nxt = np.roll(pts, -1, axis=0)
        sector = pts[:, 0] * nxt[:, 1] - pts[:, 1] * nxt[:, 0]
        if np.any(sector <= 0.0):
            raise ValueError("origin must lie strictly inside the sampled boundary")
        edge = nxt - pts
        turn = edge[:, 0] * np.roll(edge, -1, axis=0)[:, 1] - edge[:, 1] * np.roll(edge, -1, axis=0)[:, 0]
        scale = float(np.max(np.abs(pts))) ** 2
        if np.any(turn < -1e-12 * scale):
            raise ValueError("sampled boundary is not convex")
        return pts

    def __repr__(self) -> str:
        if self.kind == "parametric":
            return f"ConvexBody(parametric, {len(self.points)} samples)"
        return f"ConvexBody({self.kind}, axes={tuple(self.axes)}, center={tuple(self.center)})"

    # ── gauge and support ────────────────────────────────────────────────────

    def gauge(self, xi) -> _Array:
        """rho_K(xi); vectorized over leading axes."""
        xi = _as_points(xi)
        if self.kind == "parametric":
            return self._polygon_gauge(xi)
        u = xi / self.axes
        dot = u @ self._sc
        q = np.sqrt(dot * dot - self._A * np.einsum("...i,...i->...", u, u))
        # positive root of t^2*A - 2*t*dot + |u|^2 = 0 with A < 0
        return (dot - q) / self._A

    def support(self, xi) -> _Array:
        """Support function of K, i.e. the gauge of the polar body K0."""
        xi = _as_points(xi)
        if self.kind == "parametric":
            return np.max(xi @ self.points.T, axis=-1)
        return xi @ self.center + np.sqrt((xi * xi) @ (self.axes * self.axes))

    def _polygon_gauge(self, xi: _Array) -> _Array:
        phi = np.arctan2(xi[..., 1], xi[..., 0])
        idx = np.searchsorted(self._angles, phi) - 1
        idx = idx % len(self.points)
        p = self.points[idx]
        q = self.points[(idx + 1) % len(self.points)]
        # boundary hit of the ray through xi:  b = p + lam*(q - p),  cross(b, xi) = 0
        cx = lambda a, b: a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
        denom = cx(q - p, xi)
        lam = np.where(denom != 0.0, -cx(p, xi) / np.where(denom == 0.0, 1.0, denom), 0.0)
        b = p + lam[..., None] * (q - p)
        bnorm = np.hypot(b[..., 0], b[..., 1])
        xnorm = np.hypot(xi[..., 0], xi[..., 1])
        return np.where(xnorm == 0.0, 0.0, xnorm / np.where(bnorm == 0.0, 1.0, bnorm))

    # ── derivatives ──────────────────────────────────────────────────────────

    def grad_gauge(self, xi) -> _Array:
        """D rho_K(xi); 0-homogeneous, satisfies Euler's identity <D rho, xi> = rho."""
        xi = _as_points(xi)
        _check_nonzero(xi)
        if self.kind == "parametric":
            return self._fd_grad(self.gauge, xi, tol.GRAD_FD_REL_STEP)
        u = xi / self.axes
        t = self.gauge(xi)
        w = u - t[..., None] * self._sc
        q = np.einsum("...i,...i->...", w, self._sc) + t  # equals sqrt(dot^2 - A|u|^2) > 0
        return (w / self.axes) / q[..., None]

    def hess_gauge(self, xi) -> _Array:
        """D^2 rho_K(xi), shape (..., 2, 2); PSD with null direction xi."""
        xi = _as_points(xi)
        _check_nonzero(xi)
        if self.kind == "parametric":
            return self._fd_hess(self.gauge, xi, tol.HESS_FD_REL_STEP)
        u = xi / self.axes
        t = self.gauge(xi)
        w = u - t[..., None] * self._sc
        q = np.einsum("...i,...i->...", w, self._sc) + t
        g = (w / self.axes) / q[..., None]
        ssc = self._sc / self.axes  # S^T S c
        ss = np.zeros(xi.shape[:-1] + (2, 2))
        ss[..., 0, 0] = 1.0 / self.axes[0] ** 2
        ss[..., 1, 1] = 1.0 / self.axes[1] ** 2
        outer = lambda a, b: a[..., :, None] * b[..., None, :]
        sscb = np.broadcast_to(ssc, g.shape)
        # (1 - |Sc|^2) = -A, so the rank-one correction carries a factor +A
        h = ss - outer(sscb, g) - outer(g, sscb) + self._A * outer(g, g)
        return h / q[..., None, None]

    def grad_support(self, xi) -> _Array:
        """Gradient of the support function: the boundary point touched by xi."""
        xi = _as_points(xi)
        _check_nonzero(xi)
        if self.kind == "parametric":
            return self._fd_grad(self.support, xi, tol.GRAD_FD_REL_STEP)
        m = xi * (self.axes * self.axes)
        s = np.sqrt((xi * xi) @ (self.axes * self.axes))
        return self.center + m / s[..., None]

    def _fd_grad(self, f, xi: _Array, rel_step: float) -> _Array:
        h = rel_step * np.hypot(xi[..., 0], xi[..., 1])[..., None, None]
        e = np.eye(2)
        steps = h * e  # (..., 2, 2): steps[..., k, :] perturbs axis k
        out = np.stack(
            [
                (f(xi + steps[..., k, :]) - f(xi - steps[..., k, :])) / (2.0 * h[..., 0, 0])
                for k in range(2)
            ],
            axis=-1,
        )
        return out

    def _fd_hess(self, f, xi: _Array, rel_step: float) -> _Array:
        h = (rel_step * np.hypot(xi[..., 0], xi[..., 1]))[..., None]
        e1 = np.zeros_like(xi)
        e1[..., 0] = h[..., 0]
        e2 = np.zeros_like(xi)
        e2[..., 1] = h[..., 0]
        f0 = f(xi)
        hxx = (f(xi + e1) - 2.0 * f0 + f(xi - e1)) / h[..., 0] ** 2
        hyy = (f(xi + e2) - 2.0 * f0 + f(xi - e2)) / h[..., 0] ** 2
        hxy = (
            f(xi + e1 + e2) - f(xi + e1 - e2) - f(xi - e1 + e2) + f(xi - e1 - e2)
        ) / (4.0 * h[..., 0] ** 2)
        out = np.empty(xi.shape[:-1] + (2, 2))
        out[..., 0, 0] = hxx
        out[..., 1, 1] = hyy
        out[..., 0, 1] = hxy
        out[..., 1, 0] = hxy
        return out

    # ── derived bodies and summaries ─────────────────────────────────────────

    def reflected(self) -> "ConvexBody":
        """The reflected body -K."""
        if self.kind == "parametric":
            return ConvexBody.from_boundary_points(-self.points)
        return ConvexBody(self.kind, axes=self.axes, center=-self.center)

    def boundary_points(self, n: int = tol.PARAMETRIC_SAMPLES) -> _Array:
        """n points on the boundary of K (the stored samples for polygons)."""
        if self.kind == "parametric":
            return self.points.copy()
        th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return self.center + np.stack([self.axes[0] * np.cos(th), self.axes[1] * np.sin(th)], axis=-1)

    def gauge_bounds(self, n: int = tol.PARAMETRIC_SAMPLES) -> tuple[float, float]:
        """(c1, c2) with c1*|xi| <= rho(xi) <= c2*|xi|, sampled over directions."""
        th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        vals = self.gauge(dirs)
        return float(np.min(vals)), float(np.max(vals))


class GaugePair:
    """The four gauges attached to a body: rho, rho0, and their reflections.

    rho       gauge of K
    rho0      gauge of the polar body K0 (= support function of K)
    rho_minus gauge of -K            (rho_minus(xi) = rho(-xi))
    rho0_minus gauge of (-K)0 = -K0  (rho0_minus(xi) = rho0(-xi))
    """

    def __init__(self, body: ConvexBody):
        self.body = body
        self.reflected = body.reflected()

    def rho(self, xi):
        return self.body.gauge(xi)

    def rho0(self, xi):
        return self.body.support(xi)

    def rho_minus(self, xi):
        return self.reflected.gauge(xi)

    def rho0_minus(self, xi):
        return self.reflected.support(xi)


def polar_boundary_points(body: ConvexBody, n: int = tol.PARAMETRIC_SAMPLES) -> _Array:
    """Points on the boundary of the polar body K0.

    The radial function of K0 in direction e is 1/rho_K0(e) = 1/support_K(e).
    """
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
    return dirs / body.support(dirs)[..., None]
