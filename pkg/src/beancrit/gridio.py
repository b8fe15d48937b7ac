"""Delimited output with stable formatting, and field input.

All floats are written with repr-faithful precision (%.17g) so files are
bitwise reproducible across runs.  Grid files carry every cell of the
bounding box in row-major order (y outer, x inner), which makes reading
them back shape-checkable.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import FormatError, ShapeMismatch
from .grid import ScalarGrid


def _g(x: float) -> str:
    return f"{float(x):.17g}"


def write_grid_csv(path, grid: ScalarGrid) -> None:
    pts = grid.points()
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y", "value"])
        for iy in range(grid.shape[0]):
            for ix in range(grid.shape[1]):
                w.writerow([_g(pts[iy, ix, 0]), _g(pts[iy, ix, 1]), _g(grid.values[iy, ix])])


def read_grid_csv(path, template: ScalarGrid) -> ScalarGrid:
    """Read a grid file back onto a known geometry.

    The row count must match the template exactly; coordinates are checked
    against the template's cell centers.
    """
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r, None)
        if header is None:
            raise FormatError(f"{path}: empty file")
        cols = [c.strip() for c in header]
        for need in ("x", "y", "value"):
            if need not in cols:
                raise FormatError(f"{path}: missing column '{need}'")
        jx, jy, jv = cols.index("x"), cols.index("y"), cols.index("value")
        rows = list(r)
    ny, nx = template.shape
    if len(rows) != ny * nx:
        raise ShapeMismatch(f"{path}: {len(rows)} rows, expected {ny}x{nx} = {ny * nx}")
    vals = np.empty(ny * nx)
    xs = np.empty(ny * nx)
    ys = np.empty(ny * nx)
    try:
        for i, row in enumerate(rows):
            xs[i] = float(row[jx])
            ys[i] = float(row[jy])
            vals[i] = float(row[jv])
    except (ValueError, IndexError) as e:
        raise FormatError(f"{path}: bad row {i + 2}: {e}") from None
    pts = template.points().reshape(-1, 2)
    scale = max(template.hx, template.hy)
    if np.max(np.abs(xs - pts[:, 0])) > 1e-9 * scale or np.max(np.abs(ys - pts[:, 1])) > 1e-9 * scale:
        raise ShapeMismatch(f"{path}: cell centers do not match the configured grid")
    return template.like(vals.reshape(template.shape))


def write_fan_csv(path, ws) -> None:
    """Per-ray geometry: parameter, foot point, cut length and curvature of
    both orientations."""
    fan = ws.fan
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["theta", "px", "py", "l", "kappa", "l_minus", "kappa_minus"])
        for i in range(len(fan.thetas)):
            w.writerow([_g(fan.thetas[i]), _g(fan.points[i, 0]), _g(fan.points[i, 1]),
                        _g(fan.forward.cut[i]), _g(fan.forward.kappa[i]),
                        _g(fan.reversed.cut[i]), _g(fan.reversed.kappa[i])])


def write_clip_csv(path, thetas, lam, lam_minus) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["theta", "lambda", "lambda_minus"])
        for i in range(len(thetas)):
            w.writerow([_g(thetas[i]), _g(lam[i]), _g(lam_minus[i])])


def write_loop_csv(path, loop) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "Hs", "M"])
        for t, hv, m in zip(loop.times, loop.drive, loop.magnetization):
            w.writerow([_g(t), _g(hv), _g(m)])


def write_front_csv(path, components) -> None:
    """Polyline components separated by a nan,nan row."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y"])
        for k, comp in enumerate(components):
            if k:
                w.writerow(["nan", "nan"])
            for x, y in comp:
                w.writerow([_g(x), _g(y)])


def read_front_csv(path):
    with open(path, newline="") as f:
        r = csv.reader(f)
        next(r)
        comps, cur = [], []
        for row in r:
            x, y = float(row[0]), float(row[1])
            if np.isnan(x):
                if cur:
                    comps.append(np.array(cur))
                cur = []
            else:
                cur.append((x, y))
        if cur:
            comps.append(np.array(cur))
    return comps


def write_ladder_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["p", "gap_l2", "Jp", "J", "iterations", "max_rho_Du"])
        for r in rows:
            w.writerow([_g(r.p), _g(r.gap_l2), _g(r.objective), _g(r.limit_value),
                        str(r.iterations), _g(r.max_rho)])
