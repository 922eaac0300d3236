import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from covertmac.channel import DmicChannel, GeneralMac, paper_channel, reduce_single_user
from covertmac.infodiv import chi2_mixture, divergence_profile, mutual_information
from covertmac.region import (CovertParams, NotReducible, ZeroDenominator, convex_mix, corner, corner_general,
                              corner_ic, evaluate, jammer_region_point, single_user_constants,
                              single_user_tradeoff, tradeoff_knee, two_user_region_point)
from conftest import random_dmmac, random_single_user


def _oracle(params, ch):
    """Corner computed cell by cell from the divergences, no shared code paths."""
    prof = divergence_profile(ch)
    num, key, den = np.zeros(2), np.zeros(2), 0.0
    for t, pt in enumerate(params.joint.p_t):
        for x3, px in enumerate(params.joint.p_x3_given_t[t]):
            rho = params.rho[t]
            num += pt * px * rho * prof.d_y[:, x3]
            key += pt * px * rho * (prof.d_z[:, x3] - prof.d_y[:, x3])
            if rho.sum() > 0:
                den += pt * px * rho.sum() ** 2 * chi2_mixture(*rho, x3, ch)
    r = params.beta * math.sqrt(2) * num / math.sqrt(den)
    k = np.maximum(params.beta * math.sqrt(2) * key / math.sqrt(den), 0)
    r3 = sum(pt * mutual_information(params.joint.p_x3_given_t[t], ch.gamma_y[0, 0])
             for t, pt in enumerate(params.joint.p_t))
    return r, k, r3


def _random_params(rng, ch, t=None):
    t = t or int(rng.integers(1, 4))
    return CovertParams.mac(rng.dirichlet(np.ones(t)), rng.dirichlet(np.ones(ch.x3_size), t),
                            rng.random((t, 2)) * 2, rng.random(2))


def test_corner_against_oracle(rng):
    for _ in range(40):
        ch = random_dmmac(rng)
        p = _random_params(rng, ch)
        got = corner(p, ch)
        r, k, r3 = _oracle(p, ch)
        np.testing.assert_allclose(got.r, r, rtol=1e-12)
        np.testing.assert_allclose(got.k, k, rtol=1e-12, atol=1e-15)
        assert got.R3 == pytest.approx(r3, abs=1e-13)


def test_paper_point_by_hand(paper):
    p = CovertParams.mac([1.0], [[1.0, 0.0]], [[1.0, 0.0]], [1.0, 1.0])
    prof = divergence_profile(paper)
    chi = chi2_mixture(1.0, 0.0, 0, paper)
    got = corner(p, paper)
    assert got.r1 == pytest.approx(math.sqrt(2) * prof.d_y[0, 0] / math.sqrt(chi), rel=1e-13)
    assert got.r2 == 0.0 and got.R3 == 0.0


def test_zero_intensity_raises(paper):
    p = CovertParams.mac([1.0], [[0.5, 0.5]], [[0.0, 0.0]], [1, 1])
    with pytest.raises(ZeroDenominator):
        corner(p, paper)


def test_scale_invariance_in_rho(rng):
    ch = random_dmmac(rng)
    p = _random_params(rng, ch)
    q = CovertParams(p.joint, p.rho * 37.0, p.beta)
    np.testing.assert_allclose(corner(q, ch).values(), corner(p, ch).values(), rtol=1e-12)


def test_beta_scales_rate_and_key(rng):
    ch = random_dmmac(rng)
    p = _random_params(rng, ch)
    half = p.with_beta(p.beta / 2)
    np.testing.assert_allclose(corner(half, ch).r, corner(p, ch).r / 2, rtol=1e-13)
    np.testing.assert_allclose(corner(half, ch).k_signed, corner(p, ch).k_signed / 2, rtol=1e-13)


def test_single_user_closed_form(rng):
    for _ in range(20):
        ch = random_single_user(rng)
        dy, dz, chi2 = single_user_constants(ch)
        cap = math.sqrt(2) * dy / math.sqrt(chi2)
        knee = tradeoff_knee(ch)
        assert single_user_tradeoff(0.0, ch) == pytest.approx(0.0 if dz > dy else cap)
        assert single_user_tradeoff(knee + 1, ch) == pytest.approx(cap)
        if dz > dy:
            assert single_user_tradeoff(knee / 2, ch) == pytest.approx(cap / 2)
        # the corner at full intensity and beta = 1 sits on the knee
        pt = corner(CovertParams.mac([1.0], [np.eye(ch.x3_size)[0]], [[1.0, 0.0]], [1, 1]), ch)
        assert pt.r1 == pytest.approx(cap) and pt.k1 == pytest.approx(knee)


def test_single_user_needs_reducible(paper):
    with pytest.raises(NotReducible):
        single_user_constants(paper)
    single_user_constants(reduce_single_user(paper, 2, 1), 2)


def test_two_user_point_matches_corner(rng):
    ch = random_single_user(rng)
    got = two_user_region_point(0.3, 0.7, 0.5, ch)
    p = CovertParams.mac([1.0], [np.eye(ch.x3_size)[0]], [[0.3, 0.7]], [0.5, 0.5])
    np.testing.assert_allclose(got.r, corner(p, ch).r, rtol=1e-12)


def test_convex_mix_is_linear(rng):
    for _ in range(20):
        ch = random_dmmac(rng)
        a, b = _random_params(rng, ch), _random_params(rng, ch)
        b = b.with_beta(a.beta)
        lam = float(rng.random())
        mixed = corner(convex_mix(a, b, lam, ch), ch)
        ca, cb = corner(a, ch), corner(b, ch)
        np.testing.assert_allclose(mixed.r, lam * ca.r + (1 - lam) * cb.r, atol=1e-12)
        np.testing.assert_allclose(mixed.k_signed, lam * ca.k_signed + (1 - lam) * cb.k_signed, atol=1e-12)
        assert mixed.R3 == pytest.approx(lam * ca.R3 + (1 - lam) * cb.R3, abs=1e-12)


def test_convex_mix_needs_equal_beta(paper):
    a = CovertParams.mac([1.0], [[1.0, 0.0]], [[1.0, 1.0]], [1.0, 1.0])
    with pytest.raises(ValueError):
        convex_mix(a, a.with_beta([0.5, 1.0]), 0.5, paper)


def test_general_mac_agrees_with_mac(rng):
    ch = random_dmmac(rng, x3_size=2)
    p = _random_params(rng, ch)
    g = corner_general(p, GeneralMac.from_dmmac(ch))
    m = corner(p, ch)
    np.testing.assert_allclose(g.r, m.r, rtol=1e-12)
    np.testing.assert_allclose(g.k, m.k, rtol=1e-12, atol=1e-15)
    assert g.values()[2] == pytest.approx(m.R3, abs=1e-13)
    np.testing.assert_allclose(evaluate(p, ch).values(), m.values())


def test_ic_takes_worst_receiver(rng):
    a, b = random_dmmac(rng, x3_size=2, y_size=3), random_dmmac(rng, x3_size=2, y_size=3)
    ic = DmicChannel(a.gamma_y, b.gamma_y, a.gamma_z)
    p = _random_params(rng, a)
    got = corner_ic(p, ic)
    ca, cb = corner(p, ic.receiver(1)), corner(p, ic.receiver(2))
    assert got.r1 == pytest.approx(ca.r1) and got.r2 == pytest.approx(cb.r2)
    assert got.R3 == pytest.approx(min(ca.R3, cb.R3))


def test_jammer_point_drops_r3(paper):
    p = CovertParams.mac([1.0], [[0.5, 0.5]], [[1.0, 1.0]], [1, 1])
    j = jammer_region_point(p, paper)
    assert "R3" not in j.as_dict() and j.r1 == corner(p, paper).r1


@given(st.floats(0, 3))
def test_tradeoff_is_monotone_concave(k):
    ch = reduce_single_user(paper_channel(), 1, 1)
    f = lambda x: single_user_tradeoff(x, ch)
    assert f(k) <= f(k + 0.1) + 1e-15
    assert f(k + 0.05) >= (f(k) + f(k + 0.1)) / 2 - 1e-12


def test_params_serialization(rng, paper):
    p = _random_params(rng, paper)
    q = CovertParams.from_dict(p.to_dict())
    assert q.digest() == p.digest()
    np.testing.assert_array_equal(q.vector(), p.vector())
