"""One quasistatic step: clamp minimizer, clipping lengths, dual field.

Given a gauge-Lipschitz profile ubar, the constrained quadratic problem

    minimize  integral of (v - ubar)^2  over fields with  rho(Dv) <= 1,
    v = 0 on the boundary,

has the explicit solution  u = min(max(ubar, -d_minus), d).  The domain
splits into  Omega+ = {ubar > d},  Omega- = {ubar < -d_minus},  and the
untouched region between.  The dual field

    v(x) = integral from d(x) to lambda of (ubar(Phi(y, t)) - t) M_x(t) dt

on Omega+ (mirrored with reversed rays on Omega-) pairs with u in the
stationarity system  -div(v D rho(Du)) = ubar - u,  which is checked here
in weak form against a fixed bank of smooth compactly supported bumps.
lambda is the clipping length: how far along its ray the profile stays
above the constraint, and M_x(t) = (1 - t kappa)/(1 - d(x) kappa) is the
Jacobian ratio of the normal coordinates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .convex import ConvexBody
from .distance import Workspace
from .errors import InfeasibleCompetitor, NotLipschitz
from .grid import ScalarGrid
from . import tolerances as tol

log = logging.getLogger(__name__)

_CHUNK = 8192


# ── input validation ─────────────────────────────────────────────────────────


def lipschitz_excess(ws: Workspace, ubar: ScalarGrid) -> float:
    """Worst relative violation of ubar(x) - ubar(z) <= rho0(x - z) over
    neighboring cell pairs inside the domain."""
    v = ubar.values
    m = ubar.mask
    hx, hy = ubar.hx, ubar.hy
    worst = 0.0
    for dx, dy in ((1, 0), (0, 1), (1, 1), (1, -1)):
        step = np.array([dx * hx, dy * hy])
        bound = float(ws.body.support(step))
        bound_rev = float(ws.body.support(-step))
        sl = (slice(max(dy, 0), v.shape[0] + min(dy, 0)), slice(max(dx, 0), v.shape[1] + min(dx, 0)))
        sr = (slice(max(-dy, 0), v.shape[0] + min(-dy, 0)), slice(max(-dx, 0), v.shape[1] + min(-dx, 0)))
        both = m[sl] & m[sr]
        if not both.any():
            continue
        diff = v[sr][both] - v[sl][both]  # ubar(x + step) - ubar(x)
        worst = max(worst, float(np.max(diff / bound - 1.0)), float(np.max(-diff / bound_rev - 1.0)))
    return worst


def require_lipschitz(ws: Workspace, ubar: ScalarGrid) -> None:
    excess = lipschitz_excess(ws, ubar)
    if excess > tol.LIPSCHITZ_SLACK:
        raise NotLipschitz(f"profile violates the gauge gradient bound by {excess:.3g}")


# ── explicit minimizer and partition ─────────────────────────────────────────


def explicit_minimizer(ws: Workspace, ubar: ScalarGrid, validate: bool = True) -> ScalarGrid:
    """Cellwise clamp of ubar between -d_minus and d."""
    if validate:
        require_lipschitz(ws, ubar)
    clipped = np.minimum(np.maximum(ubar.values, -ws.d_minus.values), ws.d.values)
    return ubar.like(clipped)


def partition_labels(ws: Workspace, ubar: ScalarGrid) -> np.ndarray:
    """+1 on Omega+, -1 on Omega-, 0 between; ties fall to 0."""
    up = ubar.values - ws.d.values > tol.PARTITION_SLACK
    dn = -ws.d_minus.values - ubar.values > tol.PARTITION_SLACK
    return np.where(up, 1, np.where(dn, -1, 0)).astype(np.int8)


# ── clipping lengths ─────────────────────────────────────────────────────────


def _march_clip(ubar: ScalarGrid, phi_points, t_nodes, sign: int):
    """First parameter where the strict ray predicate fails, by node march
    plus bisection; sign +1 tests ubar > t, sign -1 tests ubar < -t."""
    vals = ubar.interp(phi_points)
    margin = tol.CLIP_PREDICATE_MARGIN
    good = sign * vals - t_nodes > margin
    fails = ~good
    any_fail = fails.any(axis=-1)
    first = np.where(any_fail, np.argmax(fails, axis=-1), t_nodes.shape[-1] - 1)
    hi = np.take_along_axis(t_nodes, first[..., None], axis=-1)[..., 0]
    lo = np.take_along_axis(t_nodes, np.maximum(first - 1, 0)[..., None], axis=-1)[..., 0]
    lo = np.where(first == 0, 0.0, lo)
    return any_fail, lo, hi


def _bisect_clip(ws: Workspace, ubar: ScalarGrid, theta, lo, hi, sign: int, reverse: bool):
    margin = tol.CLIP_PREDICATE_MARGIN
    span = float(np.max(hi - lo, initial=0.0))
    if span <= 0.0:
        return lo
    iters = max(1, int(np.ceil(np.log2(span / tol.CLIP_LENGTH_TOL))))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pts = ws.ray_points(theta, mid, reverse=reverse)
        good = sign * ubar.interp(pts) - mid > margin
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    return 0.5 * (lo + hi)


def clip_lengths_at(ws: Workspace, ubar: ScalarGrid, theta, reverse: bool,
                    nodes: int = tol.RAY_NODES):
    """Clipping length along the rays with parameters theta (vectorized).

    Forward rays clip where ubar(Phi(y, t)) stops exceeding t; reversed rays
    where it stops lying below -t.  Capped at the cut length.
    """
    theta = np.asarray(theta, dtype=float)
    _, side, _ = ws.side(reverse)
    cut = side.cut_at(theta)
    frac = np.linspace(0.0, 1.0, nodes)
    sign = -1 if reverse else 1
    out = np.empty(theta.shape)
    flat_theta = theta.reshape(-1)
    flat_cut = cut.reshape(-1)
    flat_out = out.reshape(-1)
    for i in range(0, len(flat_theta), _CHUNK):
        th = flat_theta[i : i + _CHUNK]
        ct = flat_cut[i : i + _CHUNK]
        t_nodes = ct[:, None] * frac[None, :]
        pts = ws.ray_points(th[:, None], t_nodes, reverse=reverse)
        any_fail, lo, hi = _march_clip(ubar, pts, t_nodes, sign)
        lam = _bisect_clip(ws, ubar, th, lo, hi, sign, reverse)
        flat_out[i : i + _CHUNK] = np.where(any_fail, lam, ct)
    return out


def clipping_lengths(ws: Workspace, ubar: ScalarGrid, nodes: int = tol.RAY_NODES):
    """(lambda, lambda_minus) at the fan samples."""
    th = ws.fan.thetas
    return (
        clip_lengths_at(ws, ubar, th, reverse=False, nodes=nodes),
        clip_lengths_at(ws, ubar, th, reverse=True, nodes=nodes),
    )


# ── dual field ───────────────────────────────────────────────────────────────


@dataclass
class StepOutput:
    u: ScalarGrid
    v: ScalarGrid
    labels: np.ndarray
    lam: np.ndarray
    lam_minus: np.ndarray
    singular_zeroed: int


def dual_function(ws: Workspace, ubar: ScalarGrid, labels: np.ndarray | None = None,
                  nodes: int = tol.RAY_NODES) -> tuple[ScalarGrid, int]:
    """The dual field v on the grid; singular cells are zeroed and counted."""
    if labels is None:
        labels = partition_labels(ws, ubar)
    v = np.zeros(ubar.shape)
    zeroed = 0
    frac = np.linspace(0.0, 1.0, nodes)
    for sign, reverse in ((1, False), (-1, True)):
        data, side, _ = ws.side(reverse)
        active = (labels == sign) & ubar.mask
        sing = active & data.singular()
        zeroed += int(sing.sum())
        active &= ~sing
        iy, ix = np.nonzero(active)
        if len(iy) == 0:
            continue
        theta = data.theta[iy, ix]
        t_lo = data.grid.values[iy, ix]
        kappa = side.kappa_at(theta)
        vals = np.empty(len(iy))
        for i in range(0, len(iy), _CHUNK):
            sl = slice(i, i + _CHUNK)
            th = theta[sl]
            d0 = t_lo[sl]
            cut = side.cut_at(th)
            # per-cell clipping length: march the cell's own ray
            t_nodes = cut[:, None] * frac[None, :]
            pts = ws.ray_points(th[:, None], t_nodes, reverse=reverse)
            any_fail, lo, hi = _march_clip(ubar, pts, t_nodes, sign)
            lam = _bisect_clip(ws, ubar, th, lo, hi, sign, reverse)
            lam = np.where(any_fail, lam, cut)
            lam = np.maximum(lam, d0)
            # quadrature on [d(x), lambda]; the endpoint is the sign change
            t_q = d0[:, None] + (lam - d0)[:, None] * frac[None, :]
            pts_q = ws.ray_points(th[:, None], t_q, reverse=reverse)
            k = kappa[sl][:, None]
            m_fac = np.maximum(1.0 - t_q * k, 0.0) / (1.0 - d0[:, None] * k)
            integ = (sign * ubar.interp(pts_q) - t_q) * m_fac
            vals[sl] = np.trapezoid(integ, t_q, axis=1)
        v[iy, ix] = np.maximum(vals, 0.0)
    return ubar.like(v), zeroed


def solve_step(ws: Workspace, ubar: ScalarGrid, nodes: int = tol.RAY_NODES) -> StepOutput:
    """Full step: minimizer, partition, clipping lengths, dual field."""
    u = explicit_minimizer(ws, ubar)
    labels = partition_labels(ws, ubar)
    lam, lam_minus = clipping_lengths(ws, ubar, nodes=nodes)
    v, zeroed = dual_function(ws, ubar, labels, nodes=nodes)
    return StepOutput(u=u, v=v, labels=labels, lam=lam, lam_minus=lam_minus,
                      singular_zeroed=zeroed)


# ── test-function bank ───────────────────────────────────────────────────────


def _bump(s):
    """C-infinity bump on (-1, 1), equal to 1 at 0."""
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


def _bump_prime(s):
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    q = 1.0 - si * si
    out[inside] = np.exp(1.0 - 1.0 / q) * (-2.0 * si / (q * q))
    return out


class TestBank:
    """Fixed bank of tensor-product bumps compactly supported inside Omega."""

    __test__ = False  # not a test case, despite the name

    def __init__(self, omega, count: int = tol.TEST_BANK_SIZE, seed: int = tol.TEST_BANK_SEED):
        rng = np.random.default_rng(seed)
        xmin, xmax, ymin, ymax = omega.bounding_box
        sx = xmax - xmin
        centers, radii = [], []
        shrink = 1.0
        attempts = 0
        while len(centers) < count:
            attempts += 1
            if attempts % 2000 == 0:
                shrink *= 0.8  # domain too tight for the drawn sizes
            c = rng.uniform((xmin, ymin), (xmax, ymax))
            r = rng.uniform(0.08, 0.25, size=2) * sx * shrink
            ts = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
            ring = c + np.stack([r[0] * np.cos(ts), r[1] * np.sin(ts)], axis=-1) * 1.02
            corners = c + np.array([[r[0], r[1]], [r[0], -r[1]], [-r[0], r[1]], [-r[0], -r[1]]]) * 1.02
            if omega.contains(ring).all() and omega.contains(corners).all():
                centers.append(c)
                radii.append(r)
        self.centers = np.array(centers)
        self.radii = np.array(radii)

    def __len__(self) -> int:
        return len(self.centers)

    def phi(self, i: int, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        sx = (pts[..., 0] - self.centers[i, 0]) / self.radii[i, 0]
        sy = (pts[..., 1] - self.centers[i, 1]) / self.radii[i, 1]
        return _bump(sx) * _bump(sy)

    def grad_phi(self, i: int, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        sx = (pts[..., 0] - self.centers[i, 0]) / self.radii[i, 0]
        sy = (pts[..., 1] - self.centers[i, 1]) / self.radii[i, 1]
        gx = _bump_prime(sx) * _bump(sy) / self.radii[i, 0]
        gy = _bump(sx) * _bump_prime(sy) / self.radii[i, 1]
        return np.stack([gx, gy], axis=-1)


# ── stationarity residual ────────────────────────────────────────────────────


@dataclass
class ResidualReport:
    weak_residual: float       # worst normalized weak-form defect over the bank
    feasibility_excess: float  # max of rho(Du) - 1 where the dual field lives


def gauge_flux(body: ConvexBody, grad: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """weight * D rho(grad) with zero rows where the weight or gradient vanishes."""
    flux = np.zeros_like(grad)
    live = (weight > tol.DUAL_ZERO_THRESHOLD) & (np.hypot(grad[..., 0], grad[..., 1]) > tol.ZERO_VECTOR_ATOL)
    if np.any(live):
        flux[live] = body.grad_gauge(grad[live]) * weight[live][:, None]
    return flux


def weak_divergence_residual(ws: Workspace, potential: ScalarGrid, weight: ScalarGrid,
                             rhs: np.ndarray, bank: TestBank) -> float:
    """max over the bank of |sum weight <D rho(D pot), D phi> - sum rhs phi| / |phi|_H1."""
    grad = potential.gradient()
    flux = gauge_flux(ws.body, grad, weight.values)
    pts = potential.points()
    area = potential.cell_area
    m = potential.mask
    worst = 0.0
    for i in range(len(bank)):
        phi = bank.phi(i, pts)
        gphi = bank.grad_phi(i, pts)
        lhs = float(np.sum((flux[..., 0] * gphi[..., 0] + flux[..., 1] * gphi[..., 1])[m]) * area)
        rhs_val = float(np.sum((rhs * phi)[m]) * area)
        norm = float(np.sqrt(np.sum((phi * phi + gphi[..., 0] ** 2 + gphi[..., 1] ** 2)[m]) * area))
        worst = max(worst, abs(lhs - rhs_val) / norm)
    return worst


def mk_residual(ws: Workspace, u: ScalarGrid, v: ScalarGrid, ubar: ScalarGrid,
                bank: TestBank | None = None) -> ResidualReport:
    """Weak defect of -div(v D rho(Du)) = ubar - u and the gradient feasibility."""
    if bank is None:
        bank = TestBank(ws.omega)
    weak = weak_divergence_residual(ws, u, v, ubar.values - u.values, bank)
    grad = u.gradient()
    live = (v.values > tol.DUAL_ZERO_THRESHOLD) & u.interior_mask()
    excess = float(np.max(ws.body.gauge(grad[live]) - 1.0)) if live.any() else 0.0
    return ResidualReport(weak_residual=weak, feasibility_excess=excess)


# ── minimality against sampled competitors ───────────────────────────────────


def random_lipschitz_field(ws: Workspace, rng: np.random.Generator,
                           n_bumps: int = 5, base: np.ndarray | None = None) -> np.ndarray:
    """A smooth field with exact gauge gradient bound 1, via analytic scaling."""
    g = ws.template
    xmin, xmax, ymin, ymax = ws.omega.bounding_box
    pts = g.points()
    total = np.zeros(g.shape)
    gtot = np.zeros(g.shape + (2,))
    for _ in range(n_bumps):
        c = rng.uniform((xmin, ymin), (xmax, ymax))
        r = rng.uniform(0.15, 0.45, size=2) * (xmax - xmin)
        amp = rng.uniform(-1.0, 1.0)
        sx = (pts[..., 0] - c[0]) / r[0]
        sy = (pts[..., 1] - c[1]) / r[1]
        total += amp * _bump(sx) * _bump(sy)
        gtot[..., 0] += amp * _bump_prime(sx) * _bump(sy) / r[0]
        gtot[..., 1] += amp * _bump(sx) * _bump_prime(sy) / r[1]
    if base is not None:
        total = base + total
        # base gradients are not analytic; fall back to central differences
        gb = g.like(total).gradient()
        gtot = gb
    norms = ws.body.gauge(gtot.reshape(-1, 2)).reshape(g.shape)
    scale = max(1.0, float(norms.max()) * (1.0 + 1e-9))
    return total / scale


def discrete_gauge_of_gradient(ws: Workspace, values: np.ndarray) -> float:
    grad = ws.template.like(values).gradient()
    inner = ws.template.interior_mask()
    return float(ws.body.gauge(grad[inner]).max())


@dataclass
class MinimalityReport:
    margins: np.ndarray        # J(w) - J(u) - (1 - tol) * |u - w|^2, per trial
    distances: np.ndarray      # |u - w|_L2 per trial
    violations: int


def minimality_check(ws: Workspace, ubar: ScalarGrid, trials: int = 100,
                     seed: int = 0) -> MinimalityReport:
    """Random feasible competitors w never beat u by more than quadratic growth."""
    rng = np.random.default_rng(seed)
    u = explicit_minimizer(ws, ubar)
    area = ubar.cell_area
    m = ubar.mask
    ju = float(np.sum((u.values - ubar.values)[m] ** 2) * area)
    margins = np.empty(trials)
    dists = np.empty(trials)
    for k in range(trials):
        pert = random_lipschitz_field(ws, rng, n_bumps=int(rng.integers(2, 6)))
        w = u.values + rng.uniform(0.2, 1.0) * pert
        w = np.minimum(np.maximum(w, -ws.d_minus.values), ws.d.values)
        excess = discrete_gauge_of_gradient(ws, w)
        if excess > 1.0:
            w = w / excess
        if discrete_gauge_of_gradient(ws, w) > 1.0 + tol.FEASIBILITY_GATE:
            raise InfeasibleCompetitor("competitor exceeds the gradient bound after scaling")
        jw = float(np.sum((w - ubar.values)[m] ** 2) * area)
        dist2 = float(np.sum((w - u.values)[m] ** 2) * area)
        margins[k] = (jw - ju) - (1.0 - tol.MINIMALITY_REL_TOL) * dist2
        dists[k] = np.sqrt(dist2)
    return MinimalityReport(margins=margins, distances=dists,
                            violations=int(np.sum(margins < 0.0)))
