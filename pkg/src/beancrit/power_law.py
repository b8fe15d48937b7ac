"""Smooth power-law approximation of the constrained step problem.

The hard constraint rho(Dv) <= 1 is replaced by a penalty with exponent p,

    J_p(v) = sum over domain cells of [ (1/p) rho(D_h v)^p + (v - ubar)^2 ] * cell area,

with v = 0 off the domain and D_h the zero-padded central difference.  As p
grows the minimizers approach the clamp solution of the constrained
problem; the report tracks that gap along a ladder of exponents.

The discrete gradient uses the exact transpose of D_h, so descent with
Armijo backtracking has a consistent slope test at any p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import Workspace
from .errors import BoundaryViolation, NonConvergence
from .grid import ScalarGrid
from .step import explicit_minimizer
from . import tolerances as tol


# ── discrete operators (exact transposes of one another) ─────────────────────


def central_gradient(vals: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Central differences with zero ghost cells, shape (ny, nx, 2)."""
    p = np.pad(vals, 1)
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) / (2.0 * hx)
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2.0 * hy)
    return np.stack([gx, gy], axis=-1)


def central_gradient_adjoint(flux: np.ndarray, hx: float, hy: float) -> np.ndarray:
    px = np.pad(flux[..., 0], 1)
    py = np.pad(flux[..., 1], 1)
    ax = (px[1:-1, :-2] - px[1:-1, 2:]) / (2.0 * hx)
    ay = (py[:-2, 1:-1] - py[2:, 1:-1]) / (2.0 * hy)
    return ax + ay


# ── the penalized functional ─────────────────────────────────────────────────


def _check_boundary(v: np.ndarray, mask: np.ndarray) -> None:
    off = np.abs(v[~mask])
    if off.size and off.max() > 0.0:
        raise BoundaryViolation(f"field is nonzero off the domain by {off.max():.3g}")


def _gauge_powers(ws: Workspace, v: np.ndarray, mask: np.ndarray, hx: float, hy: float, p: float):
    grad = central_gradient(v, hx, hy)
    rho = ws.body.gauge(grad.reshape(-1, 2)).reshape(v.shape)
    rho = np.where(mask, rho, 0.0)
    return grad, rho


def evaluate_jp(ws: Workspace, v: ScalarGrid, ubar: ScalarGrid, p: float) -> float:
    """J_p of a field vanishing off the domain."""
    if p < tol.POWER_MIN_EXPONENT:
        raise ValueError(f"exponent must be at least {tol.POWER_MIN_EXPONENT}")
    _check_boundary(v.values, v.mask)
    m = v.mask
    _, rho = _gauge_powers(ws, v.values, m, v.hx, v.hy, p)
    pen = np.sum(rho[m] ** p) / p
    quad = np.sum((v.values - ubar.values)[m] ** 2)
    return float((pen + quad) * v.cell_area)


def gradient_jp(ws: Workspace, v: ScalarGrid, ubar: ScalarGrid, p: float) -> np.ndarray:
    """Exact gradient of the discrete J_p, zero off the domain."""
    _check_boundary(v.values, v.mask)
    m = v.mask
    grad, rho = _gauge_powers(ws, v.values, m, v.hx, v.hy, p)
    flux = np.zeros_like(grad)
    live = m & (rho > tol.GRADIENT_ZERO_FLOOR)
    if live.any():
        flux[live] = ws.body.grad_gauge(grad[live]) * (rho[live] ** (p - 1.0))[:, None]
    out = central_gradient_adjoint(flux, v.hx, v.hy) + 2.0 * np.where(m, v.values - ubar.values, 0.0)
    out[~m] = 0.0
    return out * v.cell_area


# ── descent ──────────────────────────────────────────────────────────────────


@dataclass
class PowerResult:
    v: ScalarGrid
    objective: float
    iterations: int
    converged: bool
    max_rho: float  # largest rho(D_h v) over domain cells at the end


def minimize_jp(ws: Workspace, ubar: ScalarGrid, p: float, v0: ScalarGrid | None = None,
                max_iterations: int = tol.POWER_MAX_ITERATIONS,
                strict: bool = False) -> PowerResult:
    """Armijo-backtracking descent from the scaled clamp solution."""
    if v0 is None:
        u = explicit_minimizer(ws, ubar)
        start = np.where(ubar.mask, tol.POWER_WARM_START_SCALE * u.values, 0.0)
        v0 = ubar.like(start)
    _check_boundary(v0.values, v0.mask)
    v = v0.values.copy()
    vg = ubar.like(v)
    j = evaluate_jp(ws, vg, ubar, p)
    step = 1.0
    history = [j]
    n_done = 0
    converged = False
    for it in range(max_iterations):
        g = gradient_jp(ws, ubar.like(v), ubar, p)
        slope = float(np.sum(g * g))
        if slope == 0.0:
            converged = True
            n_done = it
            break
        while True:
            trial = v - step * g
            jt = evaluate_jp(ws, ubar.like(trial), ubar, p)
            if jt <= j - tol.POWER_ARMIJO_C * step * slope:
                break
            step *= tol.POWER_BACKTRACK
            if step < 1e-18:
                raise NonConvergence(f"line search stalled at p={p}, iteration {it}")
        v = trial
        j = jt
        history.append(j)
        step /= tol.POWER_BACKTRACK  # probe a longer step next time
        n_done = it + 1
        if len(history) > tol.POWER_CONVERGE_WINDOW:
            past = history[-1 - tol.POWER_CONVERGE_WINDOW]
            if past - j <= tol.POWER_CONVERGE_RTOL * max(abs(past), 1e-30):
                converged = True
                break
    if strict and not converged:
        raise NonConvergence(f"no convergence in {max_iterations} iterations at p={p}")
    vg = ubar.like(v)
    _, rho = _gauge_powers(ws, v, ubar.mask, ubar.hx, ubar.hy, p)
    return PowerResult(v=vg, objective=j, iterations=n_done, converged=converged,
                       max_rho=float(rho[ubar.mask].max()))


# ── the exponent ladder ──────────────────────────────────────────────────────


@dataclass
class LadderRow:
    p: float
    gap_l2: float       # |v_p - u|_L2 against the clamp solution
    objective: float    # J_p(v_p)
    limit_value: float  # the constrained objective at the clamp solution
    iterations: int
    max_rho: float


def gamma_report(ws: Workspace, ubar: ScalarGrid,
                 exponents=tol.POWER_EXPONENTS) -> list[LadderRow]:
    """Minimize along increasing exponents, warm-starting each from the last."""
    u = explicit_minimizer(ws, ubar)
    m = ubar.mask
    area = ubar.cell_area
    j_limit = float(np.sum((u.values - ubar.values)[m] ** 2) * area)
    rows = []
    v_prev = None
    for p in exponents:
        res = minimize_jp(ws, ubar, p, v0=v_prev)
        gap = float(np.sqrt(np.sum((res.v.values - u.values)[m] ** 2) * area))
        rows.append(LadderRow(p=float(p), gap_l2=gap, objective=res.objective,
                              limit_value=j_limit, iterations=res.iterations,
                              max_rho=res.max_rho))
        v_prev = res.v
    return rows
