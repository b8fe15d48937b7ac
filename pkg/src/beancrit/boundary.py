"""Closed C^2 boundary curves of plane domains, with preset shapes.

Every preset is a counterclockwise curve y(theta), theta in [0, 2*pi), star
shaped around the origin, so membership tests are exact.  The class exposes
points, tangents, inward unit normals, Euclidean curvature, and the speed
|y'(theta)| needed as the line element in boundary integrals.

Presets
-------
disk(radius)
ellipse(a, b)                        boundary (a cos t, b sin t)
cassini(a, c)                        product of distances to (+-c, 0) equals a^2;
                                     requires a > c; concave waist for a < c*sqrt(2)
perturbed_disk(radius, amplitudes, modes, phases)
                                     r(t) = R * (1 + sum_i amp_i cos(k_i t + ph_i))
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

from .errors import DegenerateNormal

_TWO_PI = 2.0 * np.pi


class DomainBoundary:
    """A closed boundary curve with analytic first and second derivatives."""

    def __init__(self, kind: str, params: dict):
        self.kind = kind
        self.params = dict(params)
        self._validate()
        th = np.linspace(0.0, _TWO_PI, 4096, endpoint=False)
        pts = self.point(th)
        self._bbox = (
            float(pts[:, 0].min()),
            float(pts[:, 0].max()),
            float(pts[:, 1].min()),
            float(pts[:, 1].max()),
        )
        hull = pts[ConvexHull(pts).vertices]
        gaps = hull[:, None, :] - hull[None, :, :]
        self._diameter = float(np.hypot(gaps[..., 0], gaps[..., 1]).max())

    # ── constructors ─────────────────────────────────────────────────────────

    @classmethod
    def disk(cls, radius: float = 1.0) -> "DomainBoundary":
        return cls("disk", {"radius": float(radius)})

    @classmethod
    def ellipse(cls, a: float, b: float) -> "DomainBoundary":
        return cls("ellipse", {"a": float(a), "b": float(b)})

    @classmethod
    def cassini(cls, a: float, c: float) -> "DomainBoundary":
        return cls("cassini", {"a": float(a), "c": float(c)})

    @classmethod
    def perturbed_disk(cls, radius=1.0, amplitudes=(0.15,), modes=(5,), phases=None) -> "DomainBoundary":
        amplitudes = tuple(float(a) for a in np.atleast_1d(amplitudes))
        modes = tuple(int(k) for k in np.atleast_1d(modes))
        if phases is None:
            phases = (0.0,) * len(amplitudes)
        phases = tuple(float(p) for p in np.atleast_1d(phases))
        if not (len(amplitudes) == len(modes) == len(phases)):
            raise ValueError("amplitudes, modes, phases must have equal length")
        return cls(
            "perturbed_disk",
            {"radius": float(radius), "amplitudes": amplitudes, "modes": modes, "phases": phases},
        )

    def _validate(self) -> None:
        p = self.params
        if self.kind == "disk":
            if p["radius"] <= 0:
                raise ValueError("radius must be positive")
        elif self.kind == "ellipse":
            if p["a"] <= 0 or p["b"] <= 0:
                raise ValueError("semi-axes must be positive")
        elif self.kind == "cassini":
            if not p["a"] > p["c"] > 0:
                raise ValueError("cassini parameters require a > c > 0")
        elif self.kind == "perturbed_disk":
            th = np.linspace(0.0, _TWO_PI, 8192, endpoint=False)
            if np.min(self._radial(th)[0]) <= 0:
                raise ValueError("perturbation amplitudes drive the radius nonpositive")
        else:
            raise ValueError(f"unknown boundary kind {self.kind!r}")

    def __repr__(self) -> str:
        return f"DomainBoundary({self.kind}, {self.params})"

    # ── radial form (all presets except the ellipse) ─────────────────────────

    def _radial(self, th):
        """(r, r', r'') of the polar radius at parameter th."""
        p = self.params
        if self.kind == "disk":
            r = np.full_like(th, p["radius"], dtype=float)
            z = np.zeros_like(r)
            return r, z, z
        if self.kind == "perturbed_disk":
            r = np.ones_like(th, dtype=float)
            r1 = np.zeros_like(r)
            r2 = np.zeros_like(r)
            for amp, k, ph in zip(p["amplitudes"], p["modes"], p["phases"]):
                r += amp * np.cos(k * th + ph)
                r1 -= amp * k * np.sin(k * th + ph)
                r2 -= amp * k * k * np.cos(k * th + ph)
            R = p["radius"]
            return R * r, R * r1, R * r2
        if self.kind == "cassini":
            a4 = p["a"] ** 4
            c2 = p["c"] ** 2
            c4 = c2 * c2
            g = a4 - c4 * np.sin(2.0 * th) ** 2
            sg = np.sqrt(g)
            f = c2 * np.cos(2.0 * th) + sg
            f1 = -2.0 * c2 * np.sin(2.0 * th) - c4 * np.sin(4.0 * th) / sg
            f2 = (
                -4.0 * c2 * np.cos(2.0 * th)
                - 4.0 * c4 * np.cos(4.0 * th) / sg
                - c4 * c4 * np.sin(4.0 * th) ** 2 / (g * sg)
            )
            r = np.sqrt(f)
            r1 = f1 / (2.0 * r)
            r2 = f2 / (2.0 * r) - f1 * f1 / (4.0 * f * r)  # r'' for r = sqrt(f)
            return r, r1, r2
        raise AssertionError(self.kind)

    # ── curve evaluators ─────────────────────────────────────────────────────

    def point(self, th):
        th = np.asarray(th, dtype=float)
        if self.kind == "ellipse":
            return np.stack([self.params["a"] * np.cos(th), self.params["b"] * np.sin(th)], axis=-1)
        r, _, _ = self._radial(th)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    def tangent(self, th):
        """y'(theta), not normalized."""
        th = np.asarray(th, dtype=float)
        if self.kind == "ellipse":
            return np.stack([-self.params["a"] * np.sin(th), self.params["b"] * np.cos(th)], axis=-1)
        r, r1, _ = self._radial(th)
        ct, st = np.cos(th), np.sin(th)
        return np.stack([r1 * ct - r * st, r1 * st + r * ct], axis=-1)

    def second_derivative(self, th):
        th = np.asarray(th, dtype=float)
        if self.kind == "ellipse":
            return np.stack([-self.params["a"] * np.cos(th), -self.params["b"] * np.sin(th)], axis=-1)
        r, r1, r2 = self._radial(th)
        ct, st = np.cos(th), np.sin(th)
        return np.stack(
            [(r2 - r) * ct - 2.0 * r1 * st, (r2 - r) * st + 2.0 * r1 * ct], axis=-1
        )

    def speed(self, th):
        t = self.tangent(th)
        return np.hypot(t[..., 0], t[..., 1])

    def inward_normal(self, th):
        """Unit normal pointing into the enclosed region."""
        t = self.tangent(th)
        s = np.hypot(t[..., 0], t[..., 1])
        if np.any(s < 1e-14):
            raise DegenerateNormal("boundary tangent vanished")
        return np.stack([-t[..., 1], t[..., 0]], axis=-1) / s[..., None]

    def curvature(self, th):
        """Euclidean curvature; positive where the region is locally convex."""
        t = self.tangent(th)
        dd = self.second_derivative(th)
        s = np.hypot(t[..., 0], t[..., 1])
        return (t[..., 0] * dd[..., 1] - t[..., 1] * dd[..., 0]) / s**3

    # ── region queries ───────────────────────────────────────────────────────

    def contains(self, pts):
        """Strict membership of points in the open enclosed region (exact)."""
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        p = self.params
        if self.kind == "disk":
            return x * x + y * y < p["radius"] ** 2
        if self.kind == "ellipse":
            return (x / p["a"]) ** 2 + (y / p["b"]) ** 2 < 1.0
        if self.kind == "cassini":
            d1 = (x - p["c"]) ** 2 + y * y
            d2 = (x + p["c"]) ** 2 + y * y
            return d1 * d2 < p["a"] ** 4
        # star shaped: compare against the radial function
        r, _, _ = self._radial(np.arctan2(y, x))
        return x * x + y * y < r * r

    @property
    def bounding_box(self):
        """(xmin, xmax, ymin, ymax) of the curve."""
        return self._bbox

    @property
    def diameter(self) -> float:
        return self._diameter

    def sample_thetas(self, n: int):
        return np.linspace(0.0, _TWO_PI, n, endpoint=False)
