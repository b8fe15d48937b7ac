"""Quasistatic evolution under a piecewise monotone external drive.

With drive H(t), the field stays in the moving band [H - d_minus, H + d]
and only moves when pushed by a band edge.  On a monotone piece starting
from the field h_a this gives closed forms,

    increasing:  h(t) = max(h_a, H(t) - d_minus),
    decreasing:  h(t) = min(h_a, H(t) + d),

which compose across pieces.  The catch-up discrete scheme

    h_next = min(max(h_prev, H_next - d_minus), H_next + d)

reproduces them at the sample times of a monotone piece.  The
dissipation-rate field w plays the role of the dual field of one step: on
an increasing piece,

    w(x) = H'(t) * integral of M_x(s) ds  from d_minus(x) to the front,

where the front position along the reversed ray through x is the first s
with h_a(Phi(s)) + s >= H(t), and M is the Jacobian ratio of the normal
coordinates (closed-form antiderivative, no quadrature).  The induced
electric field is E = w D rho(Dh), checked against Faraday's law in weak
form.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, minimize

from .distance import Workspace
from .errors import EmptyFront, InvalidField, NonmonotonePiece
from .grid import ScalarGrid
from .step import TestBank, gauge_flux, lipschitz_excess, weak_divergence_residual
from . import tolerances as tol

_CHUNK = 8192


# ── drive profiles ───────────────────────────────────────────────────────────


@dataclass
class LinearPiece:
    t0: float
    t1: float
    h0: float
    h1: float

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise NonmonotonePiece(f"piece times must increase, got [{self.t0}, {self.t1}]")

    @property
    def increasing(self) -> bool:
        return self.h1 >= self.h0

    def value(self, t):
        s = (np.asarray(t, dtype=float) - self.t0) / (self.t1 - self.t0)
        return self.h0 + s * (self.h1 - self.h0)

    def rate(self, t):
        return np.full_like(np.asarray(t, dtype=float), (self.h1 - self.h0) / (self.t1 - self.t0))


class SampledPiece:
    """Monotone piece through given samples, with a monotone C1 interpolant."""

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(times) < 2 or np.any(np.diff(times) <= 0):
            raise NonmonotonePiece("sample times must strictly increase")
        dv = np.diff(values)
        if np.any(dv > 0) and np.any(dv < 0):
            raise NonmonotonePiece("sample values change direction within a piece")
        self.t0 = float(times[0])
        self.t1 = float(times[-1])
        self.h0 = float(values[0])
        self.h1 = float(values[-1])
        self.increasing = self.h1 >= self.h0
        self._interp = PchipInterpolator(times, values)
        self._rate = self._interp.derivative()

    def value(self, t):
        return self._interp(np.asarray(t, dtype=float))

    def rate(self, t):
        return self._rate(np.asarray(t, dtype=float))


class DriveProfile:
    """Continuous piecewise monotone drive t -> H(t)."""

    def __init__(self, pieces):
        if not pieces:
            raise NonmonotonePiece("a drive needs at least one piece")
        for a, b in zip(pieces, pieces[1:]):
            if abs(b.t0 - a.t1) > tol.JUNCTION_CONTINUITY_TOL:
                raise NonmonotonePiece(f"piece gap in time at t={a.t1}")
            if abs(float(b.value(b.t0)) - float(a.value(a.t1))) > tol.JUNCTION_CONTINUITY_TOL:
                raise NonmonotonePiece(f"drive jumps at t={a.t1}")
        self.pieces = list(pieces)
        self.t0 = pieces[0].t0
        self.t1 = pieces[-1].t1
        self._starts = [p.t0 for p in pieces]

    @classmethod
    def ramp(cls, rate: float, duration: float, h0: float = 0.0) -> "DriveProfile":
        return cls([LinearPiece(0.0, duration, h0, h0 + rate * duration)])

    @classmethod
    def triangle(cls, peak: float, duration: float, h0: float = 0.0) -> "DriveProfile":
        half = 0.5 * duration
        return cls([LinearPiece(0.0, half, h0, peak), LinearPiece(half, duration, peak, h0)])

    @classmethod
    def from_points(cls, times, values) -> "DriveProfile":
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(times) < 2:
            raise NonmonotonePiece("need at least two drive points")
        return cls([LinearPiece(times[i], times[i + 1], values[i], values[i + 1])
                    for i in range(len(times) - 1)])

    def piece_index(self, t: float) -> int:
        i = bisect_right(self._starts, t) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape)
        flat_t = t.reshape(-1)
        flat = out.reshape(-1)
        for j, tj in enumerate(flat_t):
            p = self.pieces[self.piece_index(float(tj))]
            flat[j] = float(p.value(np.clip(tj, p.t0, p.t1)))
        return out if out.shape else float(out)

    def rate(self, t: float) -> float:
        p = self.pieces[self.piece_index(t)]
        return float(p.rate(np.clip(t, p.t0, p.t1)))


# ── closed-form evolution ────────────────────────────────────────────────────


def admissible_projection(ws: Workspace, h, drive_value: float) -> np.ndarray:
    """Clamp into the band [H - d_minus, H + d]; this is the catch-up step."""
    return np.minimum(np.maximum(h, drive_value - ws.d_minus.values),
                      drive_value + ws.d.values)


def validate_initial(ws: Workspace, h0: ScalarGrid, drive_value: float) -> None:
    """Initial fields must obey the gradient bound and the drive band."""
    excess = lipschitz_excess(ws, h0)
    if excess > tol.LIPSCHITZ_SLACK:
        raise InvalidField(f"initial field violates the gauge gradient bound by {excess:.3g}")
    band = np.max(np.abs(h0.values - admissible_projection(ws, h0.values, drive_value))[h0.mask],
                  initial=0.0)
    if band > tol.LIPSCHITZ_SLACK:
        raise InvalidField(f"initial field leaves the drive band by {band:.3g}")


def monotone_piece_field(ws: Workspace, h_start: np.ndarray, piece, t: float) -> np.ndarray:
    """Closed form within one monotone piece, from the field at the piece start."""
    hval = float(piece.value(np.clip(t, piece.t0, piece.t1)))
    if piece.increasing:
        return np.maximum(h_start, hval - ws.d_minus.values)
    return np.minimum(h_start, hval + ws.d.values)


def closed_form_field(ws: Workspace, profile: DriveProfile, h0: ScalarGrid, t: float) -> ScalarGrid:
    """The exact field at time t, composing the piece closed forms."""
    h = admissible_projection(ws, h0.values, float(profile.value(profile.t0)))
    for p in profile.pieces:
        if p.t0 >= t:
            break
        h = monotone_piece_field(ws, h, p, min(t, p.t1))
    return h0.like(h)


def discrete_evolution(ws: Workspace, profile: DriveProfile, h0: ScalarGrid, n_steps: int):
    """Catch-up scheme at uniform sample times; yields (t, field values)."""
    times = np.linspace(profile.t0, profile.t1, n_steps + 1)
    h = admissible_projection(ws, h0.values, float(profile.value(profile.t0)))
    yield times[0], h
    for t in times[1:]:
        h = admissible_projection(ws, h, float(profile.value(t)))
        yield float(t), h


# ── dissipation and the electric field ───────────────────────────────────────


def _front_positions(ws: Workspace, h_start: ScalarGrid, drive_value: float, reverse: bool):
    """Per-cell front position along each ray, for the active cells.

    Returns (iy, ix, sigma, d0, kappa, zeroed).  On the reversed side the
    front is the first s with h(Phi_minus(s)) + s >= H, on the forward side
    the first s with h(Phi(s)) - s <= H; both one-sided predicates are
    monotone along the ray because h is gauge-Lipschitz.
    """
    data, side, _ = ws.side(reverse)
    sign = 1.0 if reverse else -1.0
    # active: the band edge has reached the cell
    if reverse:
        active = h_start.values < drive_value - data.grid.values
    else:
        active = h_start.values > drive_value + data.grid.values
    active &= h_start.mask
    sing = active & data.singular()
    zeroed = int(sing.sum())
    active &= ~sing
    iy, ix = np.nonzero(active)
    if len(iy) == 0:
        return iy, ix, np.empty(0), np.empty(0), np.empty(0), zeroed
    theta = data.theta[iy, ix]
    d0 = data.grid.values[iy, ix]
    kappa = side.kappa_at(theta)
    cut = side.cut_at(theta)
    sigma = np.empty(len(iy))
    for i in range(0, len(iy), _CHUNK):
        sl = slice(i, i + _CHUNK)
        th = theta[sl]
        lo = d0[sl].copy()
        hi = cut[sl].copy()
        g_hi = sign * (h_start.interp(ws.ray_points(th, hi, reverse=reverse)) + sign * hi) \
            - sign * drive_value
        done = g_hi < 0.0  # front past the cut: whole ray active
        span = float(np.max(hi - lo, initial=0.0))
        iters = max(1, int(np.ceil(np.log2(max(span / tol.EVENT_BISECT_TOL, 2.0)))))
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            g = sign * (h_start.interp(ws.ray_points(th, mid, reverse=reverse)) + sign * mid) \
                - sign * drive_value
            below = g < 0.0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        sigma[sl] = np.where(done, cut[sl], 0.5 * (lo + hi))
    return iy, ix, sigma, d0, kappa, zeroed


def _m_antiderivative(a, b, d0, kappa):
    """Integral of (1 - s kappa) / (1 - d0 kappa) ds from a to b."""
    return ((b - a) - 0.5 * kappa * (b * b - a * a)) / (1.0 - d0 * kappa)


def dissipation_rate(ws: Workspace, h_start: ScalarGrid, drive_value: float,
                     drive_rate: float) -> tuple[ScalarGrid, int]:
    """The rate field w at drive level H, from the field at the piece start.

    Nonzero only on the active region; singular cells are zeroed and counted.
    """
    reverse = drive_rate >= 0.0
    iy, ix, sigma, d0, kappa, zeroed = _front_positions(ws, h_start, drive_value, reverse)
    w = np.zeros(h_start.shape)
    w[iy, ix] = abs(drive_rate) * _m_antiderivative(d0, sigma, d0, kappa)
    return h_start.like(np.maximum(w, 0.0)), zeroed


def rate_field(ws: Workspace, h_start: ScalarGrid, drive_value: float,
               drive_rate: float) -> np.ndarray:
    """Exact time derivative of the closed-form field: the rate on the active
    region, zero elsewhere."""
    if drive_rate >= 0.0:
        active = h_start.values < drive_value - ws.d_minus.values
    else:
        active = h_start.values > drive_value + ws.d.values
    return np.where(active, drive_rate, 0.0)


def electric_field(ws: Workspace, w: ScalarGrid, h: ScalarGrid) -> np.ndarray:
    """E = w D rho(Dh), zero where the rate field or the gradient vanishes."""
    return gauge_flux(ws.body, h.gradient(), w.values)


def faraday_residual(ws: Workspace, h: ScalarGrid, w: ScalarGrid, dh_dt: np.ndarray,
                     bank: TestBank | None = None) -> float:
    """Weak defect of div(w D rho(Dh)) = dh/dt over the test bank."""
    if bank is None:
        bank = TestBank(ws.omega)
    return weak_divergence_residual(ws, h, w, -dh_dt, bank)


# ── penetration ──────────────────────────────────────────────────────────────


def _refined_extremum(ws: Workspace, h_vals: np.ndarray, increasing: bool) -> float:
    """Continuous extremum of h + d_minus (or h - d), sharper than the grid.

    The cell maximum misses the true extremum by a fraction of a cell, which
    the saturation time inherits.  Polishing with a simplex search on the
    interpolated field plus the exact distance removes that bias.
    """
    g = ws.template
    m = g.mask
    solver = ws.solver_rev if increasing else ws.solver_fwd
    sign = 1.0 if increasing else -1.0
    dist = ws.d_minus.values if increasing else ws.d.values
    # score = sign*h + dist; the wanted extremum is sign * max(score)
    score = np.where(m, sign * h_vals + dist, -np.inf)
    i = int(np.argmax(score))
    grid_best = float(score.reshape(-1)[i])
    x0 = g.points().reshape(-1, 2)[i]
    hg = g.like(h_vals)

    def f(x):
        if not bool(np.asarray(ws.omega.contains(x)).reshape(())):
            return 1e12  # keep the simplex inside without inf arithmetic
        return -(sign * float(hg.interp(x)) + float(solver.evaluate(x[None, :])[0]))

    res = minimize(f, x0, method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 2000})
    return sign * max(grid_best, -float(res.fun))


def full_penetration_time(ws: Workspace, profile: DriveProfile, h0: ScalarGrid):
    """First time the whole domain rides a band edge, or None if never.

    On an increasing piece this happens once H reaches max(h + d_minus)
    over the domain; on a decreasing piece once H reaches min(h - d).
    """
    h = admissible_projection(ws, h0.values, float(profile.value(profile.t0)))
    for p in profile.pieces:
        if p.increasing:
            target = _refined_extremum(ws, h, increasing=True)
            lo, hi = float(p.value(p.t0)), float(p.value(p.t1))
            if hi >= target - tol.PENETRATION_TIME_TOL:
                if lo >= target:
                    return float(p.t0)
                return float(brentq(lambda t: float(p.value(t)) - target, p.t0, p.t1,
                                    xtol=tol.PENETRATION_TIME_TOL))
        else:
            target = _refined_extremum(ws, h, increasing=False)
            lo, hi = float(p.value(p.t0)), float(p.value(p.t1))
            if hi <= target + tol.PENETRATION_TIME_TOL:
                if lo <= target:
                    return float(p.t0)
                return float(brentq(lambda t: float(p.value(t)) - target, p.t0, p.t1,
                                    xtol=tol.PENETRATION_TIME_TOL))
        h = monotone_piece_field(ws, h, p, p.t1)
    return None


def penetration_front(ws: Workspace, h_start: ScalarGrid, drive_value: float,
                      increasing: bool = True):
    """The moving front as polyline components in physical coordinates.

    The front is the level set where the band edge meets the old field:
    {h + d_minus = H} for increasing drive, {h - d = H} for decreasing.
    """
    from skimage import measure

    if increasing:
        level_field = h_start.values + ws.d_minus.values
    else:
        level_field = h_start.values - ws.d.values
    g = h_start
    contours = measure.find_contours(level_field, drive_value, mask=g.mask)
    out = []
    for c in contours:
        x = g.x0 + (c[:, 1] + 0.5) * g.hx
        y = g.y0 + (c[:, 0] + 0.5) * g.hy
        out.append(np.stack([x, y], axis=-1))
    if not out:
        raise EmptyFront(f"no front at drive level {drive_value:.6g}")
    return out


# ── hysteresis ───────────────────────────────────────────────────────────────


@dataclass
class LoopData:
    times: np.ndarray
    drive: np.ndarray
    magnetization: np.ndarray
    terminal: ScalarGrid
    snapshots: list = field(default_factory=list)  # (t, ScalarGrid) pairs


def magnetization(ws: Workspace, h: np.ndarray, drive_value: float) -> float:
    """Domain mean of h - H: the diamagnetic moment per unit area."""
    return float(np.mean(h[ws.template.mask]) - drive_value)


def hysteresis_loop(ws: Workspace, profile: DriveProfile, h0: ScalarGrid,
                    samples_per_piece: int = tol.LOOP_SAMPLES_PER_PIECE,
                    snapshots_per_piece: int = 0) -> LoopData:
    """Magnetization curve along the drive, evaluated with the piece closed
    forms (no marching error)."""
    times, drives, mags, snaps = [], [], [], []
    h = admissible_projection(ws, h0.values, float(profile.value(profile.t0)))
    for ip, p in enumerate(profile.pieces):
        ts = np.linspace(p.t0, p.t1, samples_per_piece + 1)
        if ip > 0:
            ts = ts[1:]  # junction sample already emitted
        for t in ts:
            hv = float(p.value(t))
            ht = monotone_piece_field(ws, h, p, float(t))
            times.append(float(t))
            drives.append(hv)
            mags.append(magnetization(ws, ht, hv))
        if snapshots_per_piece:
            for t in np.linspace(p.t0, p.t1, snapshots_per_piece + 1)[1:]:
                snaps.append((float(t), h0.like(monotone_piece_field(ws, h, p, float(t)))))
        h = monotone_piece_field(ws, h, p, p.t1)
    return LoopData(times=np.array(times), drive=np.array(drives),
                    magnetization=np.array(mags), terminal=h0.like(h), snapshots=snaps)
