"""Newton refinement, continuation tracking, and the first-order predictor."""

import numpy as np
import pytest

from foliationlab import (
    CollisionError,
    ConvergenceError,
    FoliationParams,
    RunConfig,
    closed_form_sing,
    counts,
    eval_field,
    family_field,
    first_order_point,
    group_action,
    group_elements,
    jouanolou_field,
    newton_refine,
    pushforward_factor,
    track_one,
    track_singularities,
)

DESK = [(n, d) for n in (2, 3, 4) for d in (1, 2, 3)]
CFG = RunConfig()


def test_newton_from_exact_point():
    f = jouanolou_field(2, 2)
    p = closed_form_sing(2, 2)[0]
    out = newton_refine(f, np.array(p.coords), CFG, m=p.m)
    assert out.converged
    assert out.residual < 1e-13
    assert out.newton_iters <= 1
    assert out.m == p.m


def test_newton_pulls_back_perturbed_start():
    f = jouanolou_field(3, 2)
    p = closed_form_sing(3, 2)[4]
    start = np.array(p.coords) + 1e-3 * np.array([1 + 1j, -1, 0.5j])
    out = newton_refine(f, start, CFG)
    assert out.converged
    assert np.max(np.abs(np.array(out.coords) - np.array(p.coords))) < 1e-10


def test_newton_singular_jacobian_reports_instead_of_raising():
    f = jouanolou_field(2, 2)
    out = newton_refine(f, np.zeros(2, dtype=complex), CFG)
    assert not out.converged
    assert "singular" in out.note


def test_track_at_zero_is_bitwise_closed_form():
    for n, d in [(2, 2), (3, 2), (2, 3)]:
        pts = closed_form_sing(n, d)
        params = FoliationParams(n, d)
        for p in pts:
            t = track_one(params, p.m, CFG)
            assert t.coords == p.coords


def test_track_matches_linear_response_2_2():
    # dx_1/dalpha_1 at the all-ones point is 1/7
    h = 1e-6
    t = track_one(FoliationParams(2, 2, (h, 0)), 7, CFG)
    assert abs((t.coords[0] - 1) / h - 1 / 7) < 1e-4


def test_track_determinism():
    params = FoliationParams(3, 2, (0.02 - 0.01j, 0.01j, -0.015))
    a = track_one(params, 11, CFG)
    b = track_one(params, 11, CFG)
    assert a.coords == b.coords


def test_track_all_and_residuals():
    rng = np.random.default_rng(41)
    for n, d in [(2, 2), (3, 2), (2, 3)]:
        re, im = rng.uniform(-0.02, 0.02, size=(2, n))
        params = FoliationParams(n, d, tuple(re + 1j * im))
        f = family_field(params)
        tracked = track_singularities(params, CFG)
        assert len(tracked) == counts(n, d).N
        for t in tracked:
            assert t.converged
            assert np.max(np.abs(eval_field(f, np.array(t.coords)))) < 1e-10


def test_track_collision_guard():
    cfg = RunConfig(dedup_tol=10.0)  # every pair now "collides"
    with pytest.raises(CollisionError):
        track_singularities(FoliationParams(2, 2, (0.01, 0.0)), cfg)


def test_track_failure_raises_convergence_error():
    cfg = RunConfig(newton_tol=1e-15, max_iters=1)
    with pytest.raises(ConvergenceError):
        track_one(FoliationParams(2, 2, (0.04 + 0.02j, -0.03j)), 3, cfg)


def test_tracking_commutes_with_group():
    rng = np.random.default_rng(52)
    for n, d in [(2, 2), (3, 2)]:
        N = counts(n, d).N
        re, im = rng.uniform(-0.02, 0.02, size=(2, n))
        params = FoliationParams(n, d, tuple(re + 1j * im))
        tracked = track_singularities(params, CFG)
        for k in (1, N // 2):
            g = group_elements(n, d)[k]
            _, alpha_t, _ = pushforward_factor(g, params)
            tracked_t = track_singularities(FoliationParams(n, d, alpha_t), CFG)
            for m in range(1, N + 1):
                moved = group_action(g, np.array(tracked[m - 1].coords))
                target = np.array(tracked_t[(m + k - 1) % N].coords)
                assert np.max(np.abs(moved - target)) < 1e-8


def test_first_order_at_zero_is_bitwise():
    for n, d in [(2, 2), (3, 2), (3, 3)]:
        for p in closed_form_sing(n, d):
            pred = first_order_point(n, d, p.m, np.zeros(n))
            assert tuple(pred) == p.coords


def test_first_order_linear_in_alpha():
    rng = np.random.default_rng(63)
    n, d = 3, 2
    for _ in range(5):
        m = int(rng.integers(1, 16))
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        p0 = first_order_point(n, d, m, np.zeros(n))
        pa = first_order_point(n, d, m, 0.01 * a)
        pb = first_order_point(n, d, m, 0.02 * a)
        # the predictor is affine in alpha
        assert np.allclose(pb - p0, 2 * (pa - p0), rtol=1e-12, atol=1e-14)


def test_first_order_derivative_matches_tracking():
    # directional derivative of the tracked point equals the predictor slope
    rng = np.random.default_rng(74)
    h = 1e-6
    for n, d in [(2, 2), (3, 2)]:
        N = counts(n, d).N
        m = int(rng.integers(1, N + 1))
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a /= np.max(np.abs(a))
        t = np.array(track_one(FoliationParams(n, d, tuple(h * a)), m, CFG).coords)
        p0 = first_order_point(n, d, m, np.zeros(n))
        slope_fd = (t - p0) / h
        slope_pred = (first_order_point(n, d, m, h * a) - p0) / h
        assert np.max(np.abs(slope_fd - slope_pred)) < 1e-4


def test_quadratic_remainder_scaling():
    # halving alpha divides the predictor error by about four, on the whole grid
    rng = np.random.default_rng(85)
    for n, d in DESK:
        N = counts(n, d).N
        for _ in range(3):
            m = int(rng.integers(1, N + 1))
            a = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
            a *= 0.02 / np.max(np.abs(a))
            errs = []
            for scale in (1.0, 0.5):
                t = track_one(FoliationParams(n, d, tuple(scale * a)), m, CFG)
                errs.append(np.max(np.abs(
                    np.array(t.coords) - first_order_point(n, d, m, scale * a))))
            assert 3.0 < errs[0] / errs[1] < 5.5


def test_continuation_handles_radius_boundary():
    # a perturbation at the configured radius still tracks with escalation room
    a = np.array([0.05, 0.0])
    t = track_one(FoliationParams(2, 2, tuple(a)), 7, CFG)
    assert t.converged and t.residual < 1e-10
