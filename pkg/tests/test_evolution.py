import numpy as np
import pytest

from beancrit import (
    DriveProfile,
    LinearPiece,
    SampledPiece,
    admissible_projection,
    closed_form_field,
    discrete_evolution,
    dissipation_rate,
    electric_field,
    faraday_residual,
    full_penetration_time,
    hysteresis_loop,
    magnetization,
    penetration_front,
    rate_field,
)
from beancrit.errors import EmptyFront, InvalidField, NonmonotonePiece
from beancrit.evolution import validate_initial


def zero_field(ws):
    return ws.template.like(np.zeros(ws.template.shape))


def radius(ws):
    pts = ws.template.points()
    return np.hypot(pts[..., 0], pts[..., 1])


# ── drive profiles ───────────────────────────────────────────────────────────


def test_piece_validation():
    with pytest.raises(NonmonotonePiece):
        LinearPiece(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(NonmonotonePiece):
        SampledPiece([0.0, 1.0, 0.5], [0.0, 1.0, 2.0])
    with pytest.raises(NonmonotonePiece):
        SampledPiece([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])  # direction change
    with pytest.raises(NonmonotonePiece):
        DriveProfile([])
    with pytest.raises(NonmonotonePiece):
        DriveProfile([LinearPiece(0, 1, 0, 1), LinearPiece(2, 3, 1, 0)])  # gap
    with pytest.raises(NonmonotonePiece):
        DriveProfile([LinearPiece(0, 1, 0, 1), LinearPiece(1, 2, 0.5, 0)])  # jump
    with pytest.raises(NonmonotonePiece):
        DriveProfile.from_points([0.0], [0.0])


def test_profile_evaluation():
    prof = DriveProfile.triangle(1.0, 2.0)
    assert prof.value(0.0) == 0.0
    assert prof.value(1.0) == 1.0
    assert abs(prof.value(1.5) - 0.5) < 1e-15
    assert prof.rate(0.5) == 1.0
    assert prof.rate(1.5) == -1.0
    ts = np.array([0.0, 0.25, 1.0, 1.75, 2.0])
    assert np.allclose(prof.value(ts), [0.0, 0.25, 1.0, 0.25, 0.0])


def test_sampled_piece_matches_data():
    times = np.array([0.0, 0.3, 1.0, 1.4])
    values = np.array([0.0, 0.5, 0.7, 1.1])
    piece = SampledPiece(times, values)
    assert np.allclose(piece.value(times), values)
    assert piece.increasing
    dense = piece.value(np.linspace(0, 1.4, 200))
    assert np.all(np.diff(dense) >= -1e-12)  # shape preserving


def test_from_points_round_trip():
    prof = DriveProfile.from_points([0.0, 1.0, 3.0], [0.0, 2.0, -1.0])
    assert len(prof.pieces) == 2
    assert prof.value(0.5) == 1.0
    assert abs(prof.value(2.0) - 0.5) < 1e-15


# ── closed forms and the catch-up scheme ─────────────────────────────────────


def test_ramp_closed_form(ws_disk_small):
    prof = DriveProfile.ramp(1.0, 1.0)
    h0 = zero_field(ws_disk_small)
    for t in (0.25, 0.6, 1.0):
        h = closed_form_field(ws_disk_small, prof, h0, t)
        expect = np.maximum(0.0, t - ws_disk_small.d_minus.values)
        m = ws_disk_small.template.mask
        assert np.max(np.abs(h.values[m] - expect[m])) == 0.0


def test_triangle_reversal(ws_disk_small):
    # after the peak the field is capped from above by H + d
    prof = DriveProfile.triangle(0.8, 2.0)
    h0 = zero_field(ws_disk_small)
    up = closed_form_field(ws_disk_small, prof, h0, 1.0)
    down = closed_form_field(ws_disk_small, prof, h0, 1.5)
    expect = np.minimum(up.values, prof.value(1.5) + ws_disk_small.d.values)
    m = ws_disk_small.template.mask
    assert np.max(np.abs(down.values[m] - expect[m])) == 0.0
    assert np.min(up.values[m] - down.values[m]) >= 0.0


def test_discrete_matches_closed_form_at_samples(ws_disk_small):
    prof = DriveProfile.triangle(0.7, 2.0)
    h0 = zero_field(ws_disk_small)
    m = ws_disk_small.template.mask
    for t, hv in discrete_evolution(ws_disk_small, prof, h0, n_steps=16):
        expect = closed_form_field(ws_disk_small, prof, h0, t)
        assert np.max(np.abs(hv[m] - expect.values[m])) < 1e-12


def test_discrete_between_sample_bound(ws_disk_small):
    # piecewise constant interpolant of the scheme stays within dt * max|H'|
    prof = DriveProfile.triangle(0.7, 2.0)
    h0 = zero_field(ws_disk_small)
    n = 16
    dt = 2.0 / n
    rate_max = 0.7
    m = ws_disk_small.template.mask
    steps = list(discrete_evolution(ws_disk_small, prof, h0, n_steps=n))
    for (ta, ha), (tb, _) in zip(steps, steps[1:]):
        for t in np.linspace(ta, tb, 4):
            expect = closed_form_field(ws_disk_small, prof, h0, t)
            err = np.max(np.abs(ha[m] - expect.values[m]))
            assert err <= dt * rate_max + 1e-12


def test_projection_idempotent(ws_disk_small, rng):
    h = rng.uniform(-1.0, 1.0, ws_disk_small.template.shape)
    p1 = admissible_projection(ws_disk_small, h, 0.3)
    p2 = admissible_projection(ws_disk_small, p1, 0.3)
    assert np.array_equal(p1, p2)
    assert np.all(p1 <= 0.3 + ws_disk_small.d.values + 1e-15)
    assert np.all(p1 >= 0.3 - ws_disk_small.d_minus.values - 1e-15)


def test_validate_initial_rejects_band_violation(ws_disk_small):
    bad = ws_disk_small.template.like(np.full(ws_disk_small.template.shape, 0.4))
    with pytest.raises(InvalidField):
        validate_initial(ws_disk_small, bad, 0.0)
    validate_initial(ws_disk_small, zero_field(ws_disk_small), 0.0)  # passes


def test_validate_initial_rejects_steep_field(ws_disk_small):
    pts = ws_disk_small.template.points()
    bad = ws_disk_small.template.like(3.0 * pts[..., 0])
    with pytest.raises(InvalidField):
        validate_initial(ws_disk_small, bad, 0.0)


# ── dissipation, electric field, faraday ─────────────────────────────────────


def test_dissipation_saturated_disk(ws_disk):
    # fully penetrated unit disk driven further up at rate a: w = a r / 2
    a = 2.0
    h_start = ws_disk.template.like(1.0 - ws_disk.d_minus.values)
    w, zeroed = dissipation_rate(ws_disk, h_start, 1.5, a)
    r = radius(ws_disk)
    m = ws_disk.template.mask & (r > 0.1) & ~ws_disk.rev.singular()
    assert np.max(np.abs(w.values[m] - a * r[m] / 2.0) / (a * r[m] / 2.0)) < 1e-3
    assert zeroed == 0  # no disk cell trips the flat-minimum detector here


def test_rate_field_active_region(ws_disk_small):
    h0 = zero_field(ws_disk_small)
    rf = rate_field(ws_disk_small, h0, 0.5, 1.0)
    active = 0.0 < 0.5 - ws_disk_small.d_minus.values
    assert np.array_equal(rf != 0.0, active)
    assert np.all(rf[active] == 1.0)


def test_electric_field_radial(ws_disk):
    # saturated disk: flux lines point along the outward radial direction
    h = ws_disk.template.like(1.5 - ws_disk.d_minus.values)
    h_start = ws_disk.template.like(1.0 - ws_disk.d_minus.values)
    w, _ = dissipation_rate(ws_disk, h_start, 1.5, 1.0)
    e = electric_field(ws_disk, w, h)
    r = radius(ws_disk)
    pts = ws_disk.template.points()
    m = ws_disk.template.mask & (r > 0.2) & ws_disk.template.interior_mask() & (w.values > 1e-6)
    rx = pts[..., 0][m] / r[m]
    ry = pts[..., 1][m] / r[m]
    ex, ey = e[..., 0][m], e[..., 1][m]
    cross = np.abs(ex * ry - ey * rx)
    dot = ex * rx + ey * ry
    assert np.max(cross / np.maximum(np.abs(dot), 1e-12)) < 5e-2
    assert np.all(dot > 0)


def test_faraday_residual_saturated(ws_disk, bank_disk):
    h = ws_disk.template.like(1.5 - ws_disk.d_minus.values)
    h_start = ws_disk.template.like(1.0 - ws_disk.d_minus.values)
    w, _ = dissipation_rate(ws_disk, h_start, 1.5, 1.0)
    dh_dt = rate_field(ws_disk, h_start, 1.5, 1.0)
    res = faraday_residual(ws_disk, h, w, dh_dt, bank=bank_disk)
    assert res < 1e-3


# ── penetration ──────────────────────────────────────────────────────────────


def test_penetration_time_ramp(ws_disk):
    for a in (0.5, 1.0, 2.0):
        prof = DriveProfile.ramp(a, 3.0)
        tau = full_penetration_time(ws_disk, prof, zero_field(ws_disk))
        assert tau is not None
        assert abs(tau - 1.0 / a) < 1e-6


def test_penetration_never(ws_disk_small):
    prof = DriveProfile.ramp(1.0, 0.5)  # stops before reaching the center
    assert full_penetration_time(ws_disk_small, prof, zero_field(ws_disk_small)) is None


def test_penetration_decreasing(ws_disk):
    # ramp down from zero: saturation when H reaches min(h - d) = -1
    prof = DriveProfile.from_points([0.0, 3.0], [0.0, -3.0])
    tau = full_penetration_time(ws_disk, prof, zero_field(ws_disk))
    assert abs(tau - 1.0) < 1e-6


def test_penetration_front_circle(ws_disk):
    h0 = zero_field(ws_disk)
    for level in (0.3, 0.6):
        fronts = penetration_front(ws_disk, h0, level, increasing=True)
        pts = np.concatenate(fronts)
        r = np.hypot(pts[:, 0], pts[:, 1])
        assert np.max(np.abs(r - (1.0 - level))) < 1e-3


def test_penetration_front_empty(ws_disk_small):
    with pytest.raises(EmptyFront):
        penetration_front(ws_disk_small, zero_field(ws_disk_small), 1.5, increasing=True)


# ── hysteresis ───────────────────────────────────────────────────────────────


def test_magnetization_ramp_oracle(ws_disk):
    # unit disk, h0 = 0, H = t <= 1: M(t) = ((1-t)^3 - 1) / 3
    h0 = zero_field(ws_disk)
    prof = DriveProfile.ramp(1.0, 1.0)
    for t in (0.25, 0.5, 0.9):
        h = closed_form_field(ws_disk, prof, h0, t)
        m = magnetization(ws_disk, h.values, t)
        expect = ((1.0 - t) ** 3 - 1.0) / 3.0
        assert abs(m - expect) < 1e-3


def test_magnetization_is_diamagnetic_on_ramp(ws_disk_small):
    h0 = zero_field(ws_disk_small)
    prof = DriveProfile.ramp(1.0, 1.0)
    loop = hysteresis_loop(ws_disk_small, prof, h0, samples_per_piece=8)
    assert np.all(loop.magnetization[1:] < 0)
    assert loop.magnetization[0] == 0.0


def test_hysteresis_terminal_closed_form(ws_disk_small):
    # up then back to the start: the terminal field is the lower envelope of
    # the peak field and the final band ceiling
    prof = DriveProfile.triangle(0.8, 2.0)
    h0 = zero_field(ws_disk_small)
    loop = hysteresis_loop(ws_disk_small, prof, h0, samples_per_piece=16)
    up = np.maximum(0.0, 0.8 - ws_disk_small.d_minus.values)
    expect = np.minimum(up, 0.0 + ws_disk_small.d.values)
    m = ws_disk_small.template.mask
    assert np.max(np.abs(loop.terminal.values[m] - expect[m])) == 0.0


def test_hysteresis_snapshots(ws_disk_small):
    prof = DriveProfile.triangle(0.6, 2.0)
    loop = hysteresis_loop(ws_disk_small, prof, zero_field(ws_disk_small),
                           samples_per_piece=4, snapshots_per_piece=2)
    assert len(loop.snapshots) == 4
    ts = [t for t, _ in loop.snapshots]
    assert ts == sorted(ts)
    for _, snap in loop.snapshots:
        assert snap.values.shape == ws_disk_small.template.shape


def test_loop_samples_cover_profile(ws_disk_small):
    prof = DriveProfile.triangle(0.6, 2.0)
    loop = hysteresis_loop(ws_disk_small, prof, zero_field(ws_disk_small), samples_per_piece=5)
    assert loop.times[0] == 0.0 and loop.times[-1] == 2.0
    assert len(loop.times) == 11
    assert np.all(np.diff(loop.times) > 0)
