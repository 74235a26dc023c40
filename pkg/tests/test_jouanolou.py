"""Family definition, closed-form singularities, and the diagonal symmetry group."""

import cmath
import math

import numpy as np
import pytest

from foliationlab import (
    FactorizationError,
    FoliationParams,
    GroupElement,
    counts,
    closed_form_sing,
    eval_field,
    family_field,
    generator_weights,
    group_action,
    group_elements,
    jouanolou_field,
    pushforward_factor,
    unit_root,
)

DESK = [(n, d) for n in (2, 3, 4) for d in (1, 2, 3)]


def test_counts_frozen_values():
    assert counts(2, 2).N == 7
    assert counts(3, 2).N == 15
    assert counts(3, 3).N == 40
    assert counts(3, 2).M == 35
    assert counts(3, 2).K == 5
    assert counts(3, 3).K == 10
    assert counts(5, 2).K == 21
    # K vanishes for even n and for d = 1
    assert counts(2, 2).K == 0
    assert counts(4, 2).K == 0
    assert counts(3, 1).K == 0


def test_counts_against_binomials():
    for n, d in DESK:
        c = counts(n, d)
        assert c.N == sum(d**t for t in range(n + 1))
        assert c.M == n * math.comb(n + d, d) + math.comb(n + d - 1, d) - 1
        if n % 2 == 1 and d >= 2:
            assert (d + 1) * c.K == c.N


def test_field_components_2_2():
    f = jouanolou_field(2, 2)
    assert f.components[0] == {(0, 2): 1, (3, 0): -1}
    assert f.components[1] == {(0, 0): 1, (2, 1): -1}


def test_family_field_constant_slots():
    a, b = 0.03 - 0.01j, -0.02j
    f = family_field(FoliationParams(2, 2, (a, b)))
    assert f.components[0][(0, 0)] == a
    assert f.components[1][(0, 0)] == 1 + b
    # alpha = 0 gives back the unperturbed field
    assert family_field(FoliationParams(2, 2)).components == jouanolou_field(2, 2).components


def test_closed_forms_are_zeros_and_distinct():
    for n, d in DESK:
        pts = closed_form_sing(n, d)
        f = jouanolou_field(n, d)
        assert len(pts) == counts(n, d).N
        coords = np.array([p.coords for p in pts])
        for p in pts:
            assert np.max(np.abs(eval_field(f, np.array(p.coords)))) < 1e-12
        for i in range(len(pts)):
            d_ij = np.max(np.abs(coords[i + 1:] - coords[i]), axis=1) if i + 1 < len(pts) else []
            assert all(v > 1e-6 for v in d_ij)
        assert np.allclose(coords[-1], np.ones(n), rtol=0, atol=1e-14)


def test_closed_form_exponents():
    # coordinate i of p_m is xi^(-m (d + ... + d^(n+1-i))), coordinate 1 is xi^m
    n, d = 3, 2
    N = counts(n, d).N
    pts = closed_form_sing(n, d)
    for m in range(1, N + 1):
        p = pts[m - 1]
        assert p.m == m
        xi = cmath.exp(2j * cmath.pi * m / N)
        want = [xi, xi ** (-(d + d * d)), xi ** (-d)]
        assert np.allclose(np.array(p.coords), np.array(want), rtol=0, atol=1e-12)


def test_generator_weights_frozen():
    assert generator_weights(2, 2) == (1, 5)
    assert generator_weights(3, 2) == (1, 9, 13)
    assert generator_weights(2, 3) == (1, 10)


def test_group_elements_structure():
    for n, d in [(2, 2), (3, 2), (2, 3)]:
        N = counts(n, d).N
        els = group_elements(n, d)
        assert len(els) == N
        w = generator_weights(n, d)
        for k, g in enumerate(els):
            assert g.k == k
            assert g.order == N
            assert g.weights == tuple((k * wi) % N for wi in w)


def test_group_action_permutes_singularities():
    for n, d in [(2, 2), (3, 2)]:
        N = counts(n, d).N
        pts = closed_form_sing(n, d)
        for g in group_elements(n, d):
            for m in (1, N // 2, N):
                moved = group_action(g, np.array(pts[m - 1].coords))
                target = pts[(m + g.k - 1) % N].coords
                assert np.allclose(moved, np.array(target), rtol=0, atol=1e-12)


def test_pushforward_factor_frozen_2_2():
    a, b = 0.03 - 0.01j, 0.02 + 0.04j
    g = group_elements(2, 2)[1]
    c, alpha_t, residual = pushforward_factor(g, FoliationParams(2, 2, (a, b)))
    assert residual < 1e-12
    assert abs(c - unit_root(5, 7)) < 1e-12           # xi^(-d) for k=1
    assert abs(alpha_t[0] - unit_root(3, 7) * a) < 1e-12
    assert abs(alpha_t[1] - b) < 1e-12


def test_pushforward_factor_identity_element():
    g = group_elements(2, 2)[0]
    c, alpha_t, residual = pushforward_factor(g, FoliationParams(2, 2, (0.01, 0.02)))
    assert c == 1 and residual < 1e-15
    assert np.allclose(alpha_t, (0.01, 0.02))


def test_pushforward_residual_all_powers():
    rng = np.random.default_rng(915)
    for n, d in [(2, 2), (3, 2), (2, 3)]:
        N = counts(n, d).N
        for g in group_elements(n, d):
            re, im = rng.uniform(-0.03, 0.03, size=(2, n))
            params = FoliationParams(n, d, tuple(re + 1j * im))
            c, alpha_t, residual = pushforward_factor(g, params)
            assert residual < 1e-12
            assert abs(abs(c) - 1) < 1e-12
            # diagonal scalings only rotate the perturbation parameters
            for ai, ti in zip(params.alpha, alpha_t):
                assert abs(abs(ti) - abs(ai)) < 1e-12


def test_pushforward_rejects_non_group_scaling():
    bogus = GroupElement(k=1, weights=(1, 4), order=7)
    with pytest.raises(FactorizationError):
        pushforward_factor(bogus, FoliationParams(2, 2, (0.01, 0.0)))
