import numpy as np
import pytest

from beancrit import (
    ConvexBody,
    DomainBoundary,
    ScalarGrid,
    TestBank,
    Workspace,
    clipping_lengths,
    dual_function,
    explicit_minimizer,
    minimality_check,
    mk_residual,
    partition_labels,
    solve_step,
)
from beancrit.errors import NotLipschitz
from beancrit.step import lipschitz_excess, random_lipschitz_field


def constant_field(ws, value):
    return ws.template.like(np.full(ws.template.shape, value))


def test_minimizer_is_the_clamp(ws_disk_small):
    ubar = constant_field(ws_disk_small, 1.0)
    u = explicit_minimizer(ws_disk_small, ubar)
    m = ws_disk_small.template.mask
    assert np.max(np.abs(u.values[m] - ws_disk_small.d.values[m])) < 1e-12

    ubar2 = constant_field(ws_disk_small, -0.5)
    u2 = explicit_minimizer(ws_disk_small, ubar2)
    expect = np.maximum(-0.5, -ws_disk_small.d_minus.values[m])
    assert np.max(np.abs(u2.values[m] - expect)) < 1e-12


def test_inactive_when_within_the_band(ws_disk_small):
    # a gentle field already inside [-d_minus, d] is left untouched
    ubar = ScalarGrid.from_function(ws_disk_small.omega, 128,
                                    lambda p: 0.1 * np.sin(2 * p[..., 0]))
    u = explicit_minimizer(ws_disk_small, ubar, validate=False)
    m = ws_disk_small.d.values > 0.25
    assert np.max(np.abs(u.values[m] - ubar.values[m])) < 1e-12


def test_labels_partition(ws_disk_small):
    ubar = constant_field(ws_disk_small, 1.0)
    labels = partition_labels(ws_disk_small, ubar)
    m = ws_disk_small.template.mask
    assert set(np.unique(labels[m])) <= {-1, 0, 1}
    assert (labels[m] == 1).all()  # clamped down everywhere inside

    ubar2 = constant_field(ws_disk_small, -1.0)
    labels2 = partition_labels(ws_disk_small, ubar2)
    assert (labels2[m] == -1).all()


def test_labels_tie_is_neutral(ws_disk_small):
    # a field equal to the upper obstacle touches it without crossing
    ubar = ws_disk_small.d
    labels = partition_labels(ws_disk_small, ubar)
    assert (labels[ws_disk_small.template.mask] == 0).all()


def test_lipschitz_validation():
    ws = Workspace(DomainBoundary.disk(1.0), ConvexBody.disk(1.0), 64, 256)
    rough = ScalarGrid.from_function(ws.omega, 64, lambda p: 3.0 * p[..., 0])
    assert lipschitz_excess(ws, rough) > 1.0
    with pytest.raises(NotLipschitz):
        explicit_minimizer(ws, rough)
    smooth = ScalarGrid.from_function(ws.omega, 64, lambda p: 0.5 * p[..., 0])
    assert lipschitz_excess(ws, smooth) < 1e-9


def test_clipping_lengths_saturated(ws_disk_small):
    ubar = constant_field(ws_disk_small, 1.0)
    lam, _ = clipping_lengths(ws_disk_small, ubar)
    # the whole ray clamps: the clip length runs to the cut
    assert np.max(np.abs(lam - ws_disk_small.fan.forward.cut)) < 1e-5


def test_clipping_lengths_knife_edge(ws_disk):
    # ubar = 1 - x: at theta=0 the constraint is active only at the boundary
    # point itself, elsewhere on the right half it is active along the full ray
    ubar = ScalarGrid.from_function(ws_disk.omega, 256, lambda p: 1.0 - p[..., 0])
    lam, _ = clipping_lengths(ws_disk, ubar)
    th = ws_disk.fan.thetas
    at0 = int(np.argmin(np.abs(np.angle(np.exp(1j * th)))))
    assert lam[at0] < 0.01
    ang = np.angle(np.exp(1j * th))
    wide = (np.abs(ang) > 0.05) & (np.abs(ang) < np.pi / 2)
    cuts = ws_disk.fan.forward.cut[wide]
    assert np.min(lam[wide] / cuts) > 0.99


def test_dual_function_saturated_disk(ws_disk):
    # ubar = 1, unit disk: u = d, lambda runs to the cut, and
    # v(r) = (1/r) * int_{1-r}^{1} (1-t)^2 dt = r^2 / 3
    ubar = constant_field(ws_disk, 1.0)
    out = solve_step(ws_disk, ubar)
    pts = ws_disk.template.points()
    r = np.hypot(pts[..., 0], pts[..., 1])
    m = ws_disk.template.mask & (r > 0.05)
    assert np.max(np.abs(out.v.values[m] - r[m] ** 2 / 3.0)) < 2e-4
    assert (out.labels[m] == 1).all()


def test_dual_function_mirrored(ws_disk):
    # pushing down against the lower obstacle mirrors the saturated case
    ubar = constant_field(ws_disk, -1.0)
    out = solve_step(ws_disk, ubar)
    pts = ws_disk.template.points()
    r = np.hypot(pts[..., 0], pts[..., 1])
    m = ws_disk.template.mask & (r > 0.05)
    assert np.max(np.abs(out.v.values[m] - r[m] ** 2 / 3.0)) < 2e-4
    assert (out.labels[m] == -1).all()


def test_dual_function_tilted_drive(ws_disk):
    # ubar = 1 - x: along the ray at angle theta the integrand picks up the
    # factor (1 - cos theta), so v = (1 - cos theta) r^2 / 3
    ubar = ScalarGrid.from_function(ws_disk.omega, 256, lambda p: 1.0 - p[..., 0])
    out = solve_step(ws_disk, ubar)
    pts = ws_disk.template.points()
    r = np.hypot(pts[..., 0], pts[..., 1])
    th = np.arctan2(pts[..., 1], pts[..., 0])
    m = ws_disk.template.mask & (r > 0.05)
    expect = (1.0 - np.cos(th[m])) * r[m] ** 2 / 3.0
    assert np.max(np.abs(out.v.values[m] - expect)) < 2e-4


def test_forced_singular_cells_are_zeroed():
    ws = Workspace(DomainBoundary.disk(1.0), ConvexBody.disk(1.0), 64, 256)
    ubar = ws.template.like(np.ones(ws.template.shape))
    v0, zeroed0 = dual_function(ws, ubar)
    # flag a block of regular cells as ridge cells and rebuild
    ws.fwd.gap[10:14, 30:34] = 0.0
    v1, zeroed1 = dual_function(ws, ubar)
    assert zeroed1 > zeroed0
    assert (v1.values[10:14, 30:34] == 0.0).all()


def test_minimality_no_cheaper_competitor(ws_disk_small):
    ubar = constant_field(ws_disk_small, 1.0)
    rep = minimality_check(ws_disk_small, ubar, trials=20, seed=3)
    assert rep.violations == 0
    assert np.min(rep.margins) > -1e-12


def test_weak_residual_saturated(ws_disk, bank_disk):
    ubar = constant_field(ws_disk, 1.0)
    out = solve_step(ws_disk, ubar)
    rep = mk_residual(ws_disk, out.u, out.v, ubar, bank=bank_disk)
    assert rep.weak_residual < 1e-3
    assert rep.feasibility_excess < 1e-6


def test_random_fields_are_admissible(ws_disk_small, rng):
    f = random_lipschitz_field(ws_disk_small, rng, n_bumps=4)
    excess = lipschitz_excess(ws_disk_small, ws_disk_small.template.like(f))
    assert excess < 0.05  # analytic gradient bound, finite-offset slack


def test_bank_deterministic(ws_disk_small):
    b1 = TestBank(ws_disk_small.omega, count=5, seed=11)
    b2 = TestBank(ws_disk_small.omega, count=5, seed=11)
    pts = np.array([[0.1, 0.2], [0.0, 0.0], [-0.3, 0.4]])
    for i in range(5):
        assert np.array_equal(b1.phi(i, pts), b2.phi(i, pts))


def test_bank_gradients_match_finite_differences(ws_disk_small):
    bank = TestBank(ws_disk_small.omega, count=4, seed=5)
    rng = np.random.default_rng(2)
    pts = rng.uniform(-0.5, 0.5, (40, 2))
    eps = 1e-6
    for i in range(4):
        g = bank.grad_phi(i, pts)
        for k in range(2):
            step = np.zeros(2)
            step[k] = eps
            fd = (bank.phi(i, pts + step) - bank.phi(i, pts - step)) / (2 * eps)
            assert np.max(np.abs(fd - g[:, k])) < 1e-5
