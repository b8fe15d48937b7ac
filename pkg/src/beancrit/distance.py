"""Gauge distance to the boundary, projections, and normal ray fans.

The distance of x in Omega to the boundary, measured by the polar gauge, is

    d(x) = min over y on bdry Omega of rho0(x - y),

and the reversed variant d_minus uses the gauge of -K0, i.e. the support
function of -K.  Along the ray  y + t * D rho(nu(y))  through a boundary
point y with inward unit normal nu(y) the distance grows linearly,
d = t, up to the cut length l(y).  The fan bundles, per boundary sample,
the ray direction, the normal gauge value rho(nu), the cut length, and the
anisotropic curvature kappa that makes  (1 - t * kappa)  the Jacobian of
the normal-coordinate change of variables.

Both field construction and point evaluation share one method: a coarse
scan over dense boundary samples followed by golden-section refinement of
the boundary parameter.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .boundary import DomainBoundary
from .convex import ConvexBody
from .errors import CutExceeded, OutsideDomain
from .grid import ScalarGrid
from . import tolerances as tol

log = logging.getLogger(__name__)

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_TWO_PI = 2.0 * np.pi


@dataclass
class ProjectionSet:
    """Boundary parameters attaining the distance from one point."""

    thetas: np.ndarray
    is_singular: bool


class DistanceSolver:
    """Distance to the boundary through the support gauge of one body.

    Pass the body K itself for the forward distance d (its support function
    is the gauge of K0) and the reflected body -K for the reversed distance.
    """

    def __init__(self, omega: DomainBoundary, body: ConvexBody, n_dense: int = tol.FAN_RAYS):
        self.omega = omega
        self.body = body
        self.n_dense = n_dense
        self.thetas = omega.sample_thetas(n_dense)
        self.bpoints = omega.point(self.thetas)
        # chunk sizes keep the (points x boundary) matrices around 32 MB
        self._chunk = max(256, int(4.0e6 / n_dense))

    # ── internals ────────────────────────────────────────────────────────────

    def _values_against(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """rho0(x - y) for every pair; X (m, 2), Y (n, 2) -> (m, n)."""
        if self.body.kind in ("disk", "ellipse"):
            # support(x - y) = <c, x-y> + |A(x-y)| with A = diag(a, b);
            # expanding the square turns the pair evaluation into one matmul
            a = self.body.axes
            c = self.body.center
            Xs = X * a
            Ys = Y * a
            quad = (
                np.einsum("ij,ij->i", Xs, Xs)[:, None]
                + np.einsum("ij,ij->i", Ys, Ys)[None, :]
                - 2.0 * (Xs @ Ys.T)
            )
            np.maximum(quad, 0.0, out=quad)
            return (X @ c)[:, None] - (Y @ c)[None, :] + np.sqrt(quad)
        return self.body.support(X[:, None, :] - Y[None, :, :])

    def _value_at_theta(self, X: np.ndarray, th: np.ndarray) -> np.ndarray:
        return self.body.support(X - self.omega.point(th))

    def _refine(self, X: np.ndarray, lo: np.ndarray, hi: np.ndarray):
        """Vectorized golden-section minimization of theta -> rho0(x - y(theta))."""
        span = float(np.max(hi - lo))
        theta_tol = 1e-7
        iters = max(1, int(np.ceil(np.log(theta_tol / span) / np.log(_GOLDEN))))
        a, b = lo.copy(), hi.copy()
        for _ in range(iters):
            c = b - _GOLDEN * (b - a)
            d = a + _GOLDEN * (b - a)
            fc = self._value_at_theta(X, c)
            fd = self._value_at_theta(X, d)
            left = fc < fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
        mid = 0.5 * (a + b)
        return self._value_at_theta(X, mid), mid % _TWO_PI

    # ── evaluation ───────────────────────────────────────────────────────────

    def evaluate(self, pts, stride: int = 4, with_theta: bool = False):
        """Distance at arbitrary points, shape (..., 2); works outside Omega too
        (there it returns the unsigned distance back to the boundary)."""
        pts = np.asarray(pts, dtype=float)
        flat = pts.reshape(-1, 2)
        Y = self.bpoints[::stride]
        th = self.thetas[::stride]
        dth = _TWO_PI / len(th)
        out = np.empty(len(flat))
        outth = np.empty(len(flat))
        step = self._chunk * stride
        for i in range(0, len(flat), step):
            X = flat[i : i + step]
            vals = self._values_against(X, Y)
            k = np.argmin(vals, axis=1)
            t0 = th[k]
            v, t = self._refine(X, t0 - dth, t0 + dth)
            out[i : i + step] = v
            outth[i : i + step] = t
        if with_theta:
            return out.reshape(pts.shape[:-1]), outth.reshape(pts.shape[:-1])
        return out.reshape(pts.shape[:-1])

    def scan_field(self, pts, stride: int = 4):
        """Coarse scan plus refinement over many points.

        Returns (d, theta, gap, extent): the distance, the refined projection
        parameter, the value gap to the best competing projection basin (inf
        if none), and the arc length of near-optimal boundary samples.  A
        small gap marks a ridge cell (two distinct basins tie), a large
        extent marks a flat minimum (a continuum of projections, e.g. the
        center of a disk); both are resolved at the strided sample spacing.
        """
        pts = np.asarray(pts, dtype=float)
        flat = pts.reshape(-1, 2)
        Y = self.bpoints[::stride]
        ths = self.thetas[::stride]
        n = len(Y)
        dth = _TWO_PI / n
        d = np.empty(len(flat))
        theta = np.empty(len(flat))
        gap = np.empty(len(flat))
        extent = np.empty(len(flat))
        chunk = self._chunk * stride
        for i in range(0, len(flat), chunk):
            X = flat[i : i + chunk]
            vals = self._values_against(X, Y)
            k = np.argmin(vals, axis=1)
            rows = np.arange(len(X))
            best = vals[rows, k]
            # competing basins: other local minima, excluding the argmin's own
            # immediate neighbors on the sample circle
            left = np.roll(vals, 1, axis=1)
            right = np.roll(vals, -1, axis=1)
            lm = (vals < left) & (vals <= right)
            vm = np.where(lm, vals, np.inf)
            idx = np.arange(n)[None, :]
            dist = np.abs(idx - k[:, None])
            dist = np.minimum(dist, n - dist)
            vm[dist <= 1] = np.inf
            second = vm.min(axis=1)
            near = vals <= (best + tol.PROJECTION_VALUE_SLACK)[:, None]
            t0 = ths[k]
            v, t = self._refine(X, t0 - dth, t0 + dth)
            d[i : i + chunk] = v
            theta[i : i + chunk] = t
            gap[i : i + chunk] = second - best
            extent[i : i + chunk] = near.sum(axis=1) * dth
        shape = pts.shape[:-1]
        return d.reshape(shape), theta.reshape(shape), gap.reshape(shape), extent.reshape(shape)


# ── scalar operations ────────────────────────────────────────────────────────


def minkowski_distance(omega: DomainBoundary, body: ConvexBody, x, outside_slack: float = 0.0) -> float:
    """Distance of one point to the boundary in the polar gauge of K.

    Raises OutsideDomain for points outside the closure by more than
    outside_slack (measured by the same gauge).
    """
    solver = DistanceSolver(omega, body)
    x = np.asarray(x, dtype=float)
    val = float(solver.evaluate(x[None, :])[0])
    if not bool(omega.contains(x)):
        if val > outside_slack:
            raise OutsideDomain(f"point {tuple(x)} lies outside the domain by {val:.3g}")
        return 0.0
    return val


def minkowski_distance_minus(omega: DomainBoundary, body: ConvexBody, x, outside_slack: float = 0.0) -> float:
    """Reversed distance, measured by the gauge of -K0."""
    return minkowski_distance(omega, body.reflected(), x, outside_slack)


def projections(
    omega: DomainBoundary,
    body: ConvexBody,
    x,
    n_scan: int = 8192,
    value_slack: float = tol.PROJECTION_VALUE_SLACK,
    cluster_gap: float = tol.PROJECTION_CLUSTER_GAP,
    max_clusters: int = 64,
) -> ProjectionSet:
    """All boundary parameters attaining the distance from x, clustered.

    Candidates within value_slack of the minimum are grouped into clusters
    separated by angular gaps above cluster_gap; each cluster is refined by
    golden-section search.  More than one cluster marks x as singular.
    """
    x = np.asarray(x, dtype=float)
    solver = DistanceSolver(omega, body, n_dense=n_scan)
    vals = solver._values_against(x[None, :], solver.bpoints)[0]
    best = float(vals.min())
    cand = np.flatnonzero(vals <= best + value_slack)
    th = solver.thetas[cand]
    extent = len(cand) * _TWO_PI / n_scan
    # circular clustering by angular gaps
    gaps = np.diff(th)
    wrap_gap = _TWO_PI - (th[-1] - th[0]) if len(th) > 1 else 0.0
    breaks = np.flatnonzero(gaps > cluster_gap)
    groups = np.split(np.arange(len(th)), breaks + 1)
    if len(groups) > 1 and wrap_gap <= cluster_gap:
        groups[0] = np.concatenate([groups[-1], groups[0]])
        groups = groups[:-1]
    dth = _TWO_PI / n_scan
    centers = []
    for g in groups[:max_clusters]:
        lo = th[g].min() - dth
        hi = th[g].max() + dth
        if hi - lo > np.pi:  # wrapped cluster: refine around its circular mean
            ang = np.angle(np.mean(np.exp(1j * th[g])))
            lo, hi = ang - dth * (len(g) / 2 + 1), ang + dth * (len(g) / 2 + 1)
        _, t = solver._refine(x[None, :], np.array([lo]), np.array([hi]))
        centers.append(float(t[0]))
    thetas = np.sort(np.array(centers))
    # more than one cluster, or one cluster stretched over a macroscopic arc
    # (a flat minimum, e.g. the center of a disk), marks the point singular
    singular = len(groups) > 1 or extent > tol.SINGULAR_EXTENT
    return ProjectionSet(thetas=thetas, is_singular=singular)


# ── ray fan ──────────────────────────────────────────────────────────────────


@dataclass
class FanSide:
    """Per-sample ray data for one orientation (forward or reversed)."""

    rho_nu: np.ndarray      # rho(nu(y)) of the orientation's body
    ray: np.ndarray         # ray directions D rho(nu(y)), shape (n, 2)
    cut: np.ndarray         # cut lengths l(y)
    kappa: np.ndarray       # anisotropic curvature
    m0: float               # bound on the Jacobian ratio along admissible rays

    def interp(self, arr: np.ndarray, th) -> np.ndarray:
        n = len(arr)
        pos = (np.asarray(th, dtype=float) % _TWO_PI) / _TWO_PI * n
        i0 = np.floor(pos).astype(int) % n
        w = pos - np.floor(pos)
        return arr[i0] * (1.0 - w) + arr[(i0 + 1) % n] * w

    def kappa_at(self, th):
        return self.interp(self.kappa, th)

    def cut_at(self, th):
        return self.interp(self.cut, th)


@dataclass
class RayFan:
    """Normal ray data at uniformly sampled boundary points, both orientations."""

    thetas: np.ndarray
    points: np.ndarray
    normals: np.ndarray     # inward unit normals
    tangents: np.ndarray    # unit tangents
    speed: np.ndarray       # |y'(theta)|, the line element
    forward: FanSide        # rays of d (body K)
    reversed: FanSide       # rays of d_minus (body -K)

    def side(self, reverse: bool) -> FanSide:
        return self.reversed if reverse else self.forward


def _cut_lengths(solver: DistanceSolver, Y, rays, diam) -> np.ndarray:
    """Largest t with distance(y + t*ray) == t, per ray, by march and bisection."""
    n = len(Y)
    th_probe = np.linspace(0.0, _TWO_PI, 64, endpoint=False)
    dirs = np.stack([np.cos(th_probe), np.sin(th_probe)], axis=-1)
    c2_polar = float(np.max(solver.body.support(dirs)))
    t_max = 1.05 * c2_polar * diam
    slack = tol.CUT_CHECK_SLACK * max(1.0, diam)

    def ok(t):
        pts = Y + t[:, None] * rays
        return solver.evaluate(pts, stride=8) >= t - slack

    marks = np.linspace(0.0, t_max, 33)
    lo = np.zeros(n)
    hi = np.full(n, t_max)
    alive = np.ones(n, dtype=bool)
    for m in marks[1:]:
        t = np.where(alive, m, lo)
        good = ok(t)
        lo = np.where(alive & good, t, lo)
        newly_bad = alive & ~good
        hi = np.where(newly_bad, t, hi)
        alive = alive & good
    # bracket [lo, hi] now holds the cut length; bisect
    width = tol.CUT_LENGTH_RTOL * diam
    iters = max(1, int(np.ceil(np.log2((marks[1] - marks[0]) / width))))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        good = ok(mid)
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    cut = 0.5 * (lo + hi)
    # dyadic verification below the found cut
    for frac in (0.25, 0.5, 0.75, 0.875):
        bad = ~ok(cut * frac)
        if np.any(bad):
            log.warning("cut-length check failed below l on %d rays", int(bad.sum()))
            break
    return cut


def _kappa_weingarten(solver, Y, rays, normals, tangents, rho_nu, cut, body, h_grid):
    """Curvature from W = -D^2 rho(Dd) * D^2 d, sampled a few cells inside.

    The distance Hessian is taken at offset t0 along each ray, which measures
    the level set there; the exact ray transform kappa_t = kappa/(1 - t*kappa)
    is inverted to pull the value back to the boundary.
    """
    t0 = np.minimum(tol.CURVATURE_OFFSET_CELLS * h_grid, 0.25 * cut)
    x0 = Y + t0[:, None] * rays
    h = h_grid
    e1 = np.array([h, 0.0])
    e2 = np.array([0.0, h])
    f = solver.evaluate
    f0 = f(x0)
    hxx = (f(x0 + e1) - 2.0 * f0 + f(x0 - e1)) / h**2
    hyy = (f(x0 + e2) - 2.0 * f0 + f(x0 - e2)) / h**2
    hxy = (f(x0 + e1 + e2) - f(x0 + e1 - e2) - f(x0 - e1 + e2) + f(x0 - e1 - e2)) / (4.0 * h**2)
    grad_d = normals / rho_nu[:, None]
    ddr = body.hess_gauge(grad_d)  # (n, 2, 2)
    # kappa_t0 = -tau . D^2rho(Dd) D^2d tau restricted to the tangent line
    hd = np.empty_like(ddr)
    hd[:, 0, 0] = hxx
    hd[:, 1, 1] = hyy
    hd[:, 0, 1] = hd[:, 1, 0] = hxy
    w = -np.einsum("nij,njk->nik", ddr, hd)
    k_t0 = np.einsum("ni,nij,nj->n", tangents, w, tangents)
    return k_t0 / (1.0 + t0 * k_t0)


def _kappa_jacobian(omega, body, thetas, rays, tangents_raw):
    """Curvature from the normal-coordinate Jacobian: the map
    Phi(theta, t) = y + t * p(theta) has det D Phi linear in t, and
    kappa = -det[p', p] / det[y', p] with p' by central differences."""
    delta = 1e-5
    nu_p = omega.inward_normal(thetas + delta)
    nu_m = omega.inward_normal(thetas - delta)
    p_p = body.grad_gauge(nu_p)
    p_m = body.grad_gauge(nu_m)
    dp = (p_p - p_m) / (2.0 * delta)
    cross = lambda a, b: a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return -cross(dp, rays) / cross(tangents_raw, rays)


def build_ray_fan(
    omega: DomainBoundary,
    body: ConvexBody,
    n: int = tol.FAN_RAYS,
    h_grid: float | None = None,
    solvers: tuple[DistanceSolver, DistanceSolver] | None = None,
) -> RayFan:
    """Assemble the normal ray fan of (omega, K), both orientations."""
    if h_grid is None:
        h_grid = omega.diameter / tol.GRID_RESOLUTION
    thetas = omega.sample_thetas(n)
    Y = omega.point(thetas)
    raw_tan = omega.tangent(thetas)
    speed = np.hypot(raw_tan[:, 0], raw_tan[:, 1])
    tangents = raw_tan / speed[:, None]
    normals = omega.inward_normal(thetas)
    if solvers is None:
        solvers = (
            DistanceSolver(omega, body, n),
            DistanceSolver(omega, body.reflected(), n),
        )
    sides = []
    for solver in solvers:
        bd = solver.body
        rho_nu = bd.gauge(normals)
        rays = bd.grad_gauge(normals)
        cut = _cut_lengths(solver, Y, rays, omega.diameter)
        kw = _kappa_weingarten(solver, Y, rays, normals, tangents, rho_nu, cut, bd, h_grid)
        kj = _kappa_jacobian(omega, bd, thetas, rays, raw_tan)
        mismatch = np.abs(kw - kj) > tol.KAPPA_DISAGREE_WARN * np.maximum(1.0, np.abs(kj))
        if np.any(mismatch):
            log.warning(
                "curvature methods disagree on %d of %d rays; using the Jacobian values there",
                int(mismatch.sum()),
                n,
            )
        kappa = np.where(mismatch, kj, kw)
        m0 = float(max(1.0, np.max(1.0 - cut * kappa)))
        sides.append(FanSide(rho_nu=rho_nu, ray=rays, cut=cut, kappa=kappa, m0=m0))
    return RayFan(
        thetas=thetas,
        points=Y,
        normals=normals,
        tangents=tangents,
        speed=speed,
        forward=sides[0],
        reversed=sides[1],
    )


def jacobian_factor(fan: RayFan, index, t_from, t, reverse: bool = False):
    """M = (1 - t*kappa) / (1 - t_from*kappa) for rays given by fan sample index.

    Clamped at zero; raises CutExceeded when t overruns the cut length.
    """
    side = fan.side(reverse)
    kappa = side.kappa[index]
    cut = side.cut[index]
    t = np.asarray(t, dtype=float)
    if np.any(t > cut * (1.0 + tol.CUT_LENGTH_RTOL) + tol.CUT_LENGTH_RTOL):
        raise CutExceeded("ray parameter beyond the cut length")
    num = np.maximum(1.0 - t * kappa, 0.0)
    den = 1.0 - np.asarray(t_from, dtype=float) * kappa
    return num / den


def change_of_variables_integrate(
    omega: DomainBoundary,
    body: ConvexBody,
    fan: RayFan,
    integrand,
    clip=None,
    reverse: bool = False,
    nodes: int = tol.RAY_NODES,
) -> float:
    """Boundary-fan quadrature of an integral over the region swept by rays:

        integral = sum over samples of  rho(nu) |y'| dtheta *
                   integral_0^clip  f(y + t*ray) (1 - t*kappa) dt

    with composite trapezoid in t.  clip defaults to the cut lengths.
    """
    side = fan.side(reverse)
    n = len(fan.thetas)
    upper = side.cut if clip is None else np.broadcast_to(np.asarray(clip, dtype=float), (n,))
    upper = np.minimum(upper, side.cut)
    s = np.linspace(0.0, 1.0, nodes)
    t = upper[:, None] * s[None, :]
    pts = fan.points[:, None, :] + t[..., None] * side.ray[:, None, :]
    vals = integrand(pts.reshape(-1, 2)).reshape(n, nodes)
    vals = vals * (1.0 - t * side.kappa[:, None])
    inner = np.trapezoid(vals, t, axis=1)
    dtheta = _TWO_PI / n
    return float(np.sum(side.rho_nu * fan.speed * inner) * dtheta)


# ── assembled workspace ──────────────────────────────────────────────────────


@dataclass
class DistanceData:
    """A distance field on a grid with per-cell projection diagnostics."""

    grid: ScalarGrid        # distance values on every box cell
    theta: np.ndarray       # refined projection parameter per cell
    gap: np.ndarray         # value gap to the best competing basin
    extent: np.ndarray      # arc length of near-optimal boundary samples

    def singular(self, value_slack: float = tol.PROJECTION_VALUE_SLACK) -> np.ndarray:
        """Cells whose projection is not effectively unique.

        A wider value_slack (a few grid cells) yields the exclusion mask for
        finite-difference checks, which need the projection unique on the
        whole stencil.
        """
        return (self.gap <= value_slack) | (self.extent > tol.SINGULAR_EXTENT)


class Workspace:
    """Domain, body, grid, distance fields, and ray fan, built once."""

    def __init__(self, omega: DomainBoundary, body: ConvexBody, n_grid: int = tol.GRID_RESOLUTION,
                 n_fan: int = tol.FAN_RAYS):
        start = time.perf_counter()
        self.omega = omega
        self.body = body
        self.body_reflected = body.reflected()
        self.n_grid = n_grid
        self.n_fan = n_fan
        self.template = ScalarGrid.empty(omega, n_grid)
        self.solver_fwd = DistanceSolver(omega, body, n_fan)
        self.solver_rev = DistanceSolver(omega, self.body_reflected, n_fan)
        pts = self.template.points()
        self.fwd = self._scan(self.solver_fwd, pts)
        self.rev = self._scan(self.solver_rev, pts)
        self.fan = build_ray_fan(
            omega, body, n_fan, h_grid=self.template.cell_size,
            solvers=(self.solver_fwd, self.solver_rev),
        )
        self.build_seconds = time.perf_counter() - start

    def _scan(self, solver: DistanceSolver, pts) -> DistanceData:
        d, th, gap, extent = solver.scan_field(pts)
        shape = self.template.shape
        return DistanceData(grid=self.template.like(d.reshape(shape)), theta=th.reshape(shape),
                            gap=gap.reshape(shape), extent=extent.reshape(shape))

    def side(self, reverse: bool):
        """(distance data, fan side, ray body) of one orientation."""
        if reverse:
            return self.rev, self.fan.reversed, self.body_reflected
        return self.fwd, self.fan.forward, self.body

    def ray_points(self, theta_star, t, reverse: bool = False):
        """Phi(theta, t) = y(theta) + t * D rho(nu(theta)) for per-cell rays."""
        _, _, bd = self.side(reverse)
        th = np.asarray(theta_star, dtype=float)
        y = self.omega.point(th)
        p = bd.grad_gauge(self.omega.inward_normal(th))
        t = np.asarray(t, dtype=float)
        return y + t[..., None] * p

    @property
    def d(self) -> ScalarGrid:
        return self.fwd.grid

    @property
    def d_minus(self) -> ScalarGrid:
        return self.rev.grid
