import numpy as np

from beancrit import DomainBoundary, ScalarGrid


def make_grid(n=64):
    omega = DomainBoundary.disk(1.0)
    return omega, ScalarGrid.empty(omega, n)


def test_from_function_and_points():
    omega, grid = make_grid()
    f = ScalarGrid.from_function(omega, 64, lambda p: p[..., 0] + 2 * p[..., 1])
    pts = grid.points()
    assert np.allclose(f.values, pts[..., 0] + 2 * pts[..., 1])


def test_interp_reproduces_affine_fields_exactly():
    omega, grid = make_grid()
    f = ScalarGrid.from_function(omega, 64, lambda p: 0.3 * p[..., 0] - 1.7 * p[..., 1] + 0.5)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-0.9, 0.9, (200, 2))
    vals = f.interp(pts)
    assert np.max(np.abs(vals - (0.3 * pts[:, 0] - 1.7 * pts[:, 1] + 0.5))) < 1e-12


def test_interp_extrapolates_past_outer_centers():
    # boundary points of a tight box land half a cell outside the outermost
    # centers; affine fields must still come back exact there
    omega, _ = make_grid()
    f = ScalarGrid.from_function(omega, 64, lambda p: 1.0 - p[..., 0])
    edge = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    vals = f.interp(edge)
    assert np.max(np.abs(vals - (1.0 - edge[:, 0]))) < 1e-12


def test_gradient_of_linear_field():
    omega, _ = make_grid()
    f = ScalarGrid.from_function(omega, 64, lambda p: 2.0 * p[..., 0] - 0.5 * p[..., 1])
    g = f.gradient()
    assert np.max(np.abs(g[1:-1, 1:-1, 0] - 2.0)) < 1e-10
    assert np.max(np.abs(g[1:-1, 1:-1, 1] + 0.5)) < 1e-10


def test_integrate_disk_area():
    omega, grid = make_grid(256)
    ones = grid.like(np.ones(grid.shape))
    assert abs(ones.integrate() - np.pi) < 2e-2


def test_mask_matches_contains():
    omega, grid = make_grid(32)
    pts = grid.points()
    assert np.array_equal(grid.mask, omega.contains(pts))


def test_interior_mask_strictly_smaller():
    omega, grid = make_grid(64)
    inner = grid.interior_mask()
    assert inner.sum() < grid.mask.sum()
    assert not (inner & ~grid.mask).any()


def test_like_shares_geometry():
    omega, grid = make_grid(32)
    other = grid.like(np.zeros(grid.shape))
    assert other.same_geometry(grid)
    assert other.cell_area == grid.cell_area
