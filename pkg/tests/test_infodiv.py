import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import entropy

from covertmac.channel import Dmmac, GeneralMac, paper_channel
from covertmac.infodiv import (IntensityError, JointInputLaw, NotAbsolutelyContinuous, ProductLaw,
                               blahut_arimoto, chi2_general, chi2_matrix, chi2_mixture, cond_mi_bound,
                               cond_mi_nc, divergence_profile, kl, local_div_ratio, mi_identity_gap,
                               mutual_information)
from conftest import random_dmmac

pmf = st.integers(2, 6).flatmap(
    lambda n: st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n)).map(lambda v: np.array(v) / sum(v))


@given(pmf)
def test_kl_against_scipy(p):
    q = np.roll(p, 1)
    assert kl(p, q) == pytest.approx(entropy(p, q), abs=1e-13)
    assert kl(p, p) == 0.0


def test_kl_infinite_is_raised():
    with pytest.raises(NotAbsolutelyContinuous) as err:
        kl([0.5, 0.5], [1.0, 0.0])
    assert err.value.symbols == (1,)
    # zero mass of p where q vanishes is fine
    assert kl([1.0, 0.0], [0.5, 0.0 + 0.5]) == pytest.approx(math.log(2))


def test_blahut_arimoto_bsc():
    eps = 0.11
    w = np.array([[1 - eps, eps], [eps, 1 - eps]])
    cap, p = blahut_arimoto(w)
    h = -eps * math.log(eps) - (1 - eps) * math.log(1 - eps)
    assert cap == pytest.approx(math.log(2) - h, abs=1e-12)
    np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-6)


def test_blahut_arimoto_against_grid(paper):
    w = paper.gamma_y[0, 0]
    cap, _ = blahut_arimoto(w)
    grid = max(mutual_information([1 - a, a], w) for a in np.linspace(0, 1, 20001))
    assert cap >= grid - 1e-12
    assert cap - grid < 1e-8


def test_chi2_definition(paper):
    r1, r2 = 0.3, 0.9
    g = paper.gamma_z
    mix = (r1 * g[1, 0, 1] + r2 * g[0, 1, 1]) / (r1 + r2)
    want = np.sum((mix - g[0, 0, 1]) ** 2 / g[0, 0, 1])
    assert chi2_mixture(r1, r2, 1, paper) == pytest.approx(want, rel=1e-13)
    a = chi2_matrix(paper)[1]
    r = np.array([r1, r2])
    assert r @ a @ r == pytest.approx((r1 + r2) ** 2 * want, rel=1e-12)


def test_chi2_zero_intensity(paper):
    with pytest.raises(IntensityError):
        chi2_mixture(0.0, 0.0, 0, paper)


@given(st.floats(0.01, 5), st.floats(0.01, 5), st.integers(0, 1))
def test_chi2_general_agrees_on_binary(r1, r2, x3):
    ch = paper_channel()
    gm = GeneralMac.from_dmmac(ch)
    assert chi2_general([r1, r2], None, (x3,), gm) == pytest.approx(chi2_mixture(r1, r2, x3, ch), rel=1e-12)


def test_divergence_profile(paper):
    prof = divergence_profile(paper)
    assert prof.d_y[0, 1] == pytest.approx(entropy(paper.gamma_y[1, 0, 1], paper.gamma_y[0, 0, 1]))
    assert prof.d_z[1, 0] == pytest.approx(entropy(paper.gamma_z[0, 1, 0], paper.gamma_z[0, 0, 0]))


def test_cond_mi_nc_by_hand(paper):
    joint = JointInputLaw(np.array([0.25, 0.75]), np.array([[1.0, 0.0], [0.4, 0.6]]))
    w = paper.gamma_y[0, 0]
    want = 0.75 * mutual_information([0.4, 0.6], w)  # phase 0 is deterministic
    assert cond_mi_nc(joint, paper) == pytest.approx(want, abs=1e-14)


def test_cond_mi_nc_general_subsets(rng):
    gy = rng.dirichlet(np.ones(3), size=(2, 2, 2))
    gz = rng.dirichlet(np.ones(3), size=(2, 2, 2))
    gm = GeneralMac((2,), (2, 2), gy, gz)
    joint = JointInputLaw(np.array([1.0]), (np.array([[0.5, 0.5]]), np.array([[0.3, 0.7]])))
    b = cond_mi_nc(joint, gm)
    # chain rule: I(X2,X3;Y) = I(X2;Y) + I(X3;Y|X2)
    w = gy[0]
    p = np.multiply.outer([0.5, 0.5], [0.3, 0.7]).ravel()
    i_both = mutual_information(p, w.reshape(4, 3))
    assert b[frozenset({2, 3})] == pytest.approx(i_both, abs=1e-13)
    assert b[frozenset()] == 0.0
    assert b[frozenset({2})] <= b[frozenset({2, 3})] + 1e-15


def _random_law(rng, t, x3):
    return ProductLaw(rng.dirichlet(np.ones(t)), rng.random(t), rng.random(t), rng.dirichlet(np.ones(x3), t))


def test_product_law_round_trip(rng):
    law = _random_law(rng, 3, 2)
    back = ProductLaw.from_joint(law.joint())
    np.testing.assert_allclose(back.p1, law.p1, atol=1e-13)
    bad = law.joint().copy()
    bad[0, 0, 0, 0] += 0.01
    bad[0, 1, 1, 0] -= 0.01
    with pytest.raises(ValueError):
        ProductLaw.from_joint(bad)


def test_mi_identity_on_random_laws(rng):
    for _ in range(50):
        ch = random_dmmac(rng)
        law = _random_law(rng, int(rng.integers(1, 4)), ch.x3_size)
        for user in (1, 2):
            for fixed in (0, 1):
                try:
                    assert mi_identity_gap(law, ch, user, fixed) <= 1e-12
                except NotAbsolutelyContinuous:
                    pass


def test_cond_mi_bound_holds(rng):
    for _ in range(50):
        ch = random_dmmac(rng)
        law = _random_law(rng, 1, ch.x3_size)
        value, bound = cond_mi_bound(law, ch)
        assert value <= bound + 1e-12


def test_local_div_ratio_tends_to_one(paper):
    r = [abs(local_div_ratio(a / 2, a / 2, 0, paper) - 1) for a in (2e-2, 2e-3, 2e-4)]
    assert r[0] > r[1] > r[2]
    # first-order convergence: the gap shrinks tenfold per decade
    assert r[1] / r[2] == pytest.approx(10, rel=0.05)


def test_local_div_ratio_domain(paper):
    with pytest.raises(ValueError):
        local_div_ratio(0.3, 0.0, 0, paper)
