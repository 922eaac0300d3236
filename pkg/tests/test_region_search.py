import json
import math

import numpy as np
import pytest

from covertmac.channel import paper_channel, reduce_single_user
from covertmac.region import (LN2, CovertParams, InfeasibleQuery, RegionQuery, corner, default_phases,
                              grid_search, maximize, single_user_tradeoff, tradeoff_knee)
from covertmac.region.sweep import CSV_HEADER, boundary_sweep, curve_csv, curve_params_json
from conftest import random_single_user


def test_query_validation():
    with pytest.raises(ValueError):
        RegionQuery({"r1": -1.0})
    with pytest.raises(ValueError):
        RegionQuery({"r1": 0.0, "r2": 0.0})


def test_default_phases(paper):
    assert default_phases(paper) == 6


def test_maximize_matches_closed_form(rng):
    for _ in range(3):
        ch = random_single_user(rng)
        knee = tradeoff_knee(ch)
        for b in (0.0, knee / 3, 2 * knee + 0.1):
            point = maximize(RegionQuery({"r1": 1.0}, {"k1": b}), ch)
            assert point.rates.r1 == pytest.approx(single_user_tradeoff(b, ch), abs=1e-6)
            assert point.rates.k1 <= b + 1e-9


def test_witness_reproduces_rates(paper):
    q = RegionQuery({"r1": 1.0, "r2": 1.0}, {"k1": 0.3, "k2": 0.3}, {"R3": 0.05})
    point = maximize(q, paper, starts=16)
    again = corner(point.params, paper)
    np.testing.assert_allclose(again.values(), point.rates.values(), atol=1e-9)
    assert again.R3 >= 0.05 - 1e-9 and max(again.k) <= 0.3 + 1e-9
    rates, params = point
    assert params is point.params


def test_budgets_only_shrink_the_optimum(paper):
    loose = maximize(RegionQuery({"r2": 1.0}, {"k2": 0.5}), paper, starts=16).objective
    tight = maximize(RegionQuery({"r2": 1.0}, {"k2": 0.05}), paper, starts=16).objective
    assert tight <= loose + 1e-9


def test_infeasible_rate(paper):
    with pytest.raises(InfeasibleQuery):
        maximize(RegionQuery({"r1": 1.0}, {}, {"R3": 1.0}), paper, starts=8)
    with pytest.raises(InfeasibleQuery):
        maximize(RegionQuery({"r1": 1.0}, {"k1": -0.1}), paper)


def test_capacity_edge_of_r3(paper):
    # the silent-user capacity in bits is feasible, slightly above it is not
    maximize(RegionQuery({"r1": 1.0}, {}, {"R3": 0.1965 * LN2}), paper, starts=8)
    with pytest.raises(InfeasibleQuery):
        maximize(RegionQuery({"r1": 1.0}, {}, {"R3": 0.2 * LN2}), paper, starts=8)


def test_grid_is_a_lower_bound(paper):
    q = RegionQuery({"r1": 1.0, "r2": 0.5}, {"k1": 0.4, "k2": 0.4})
    g = grid_search(q, paper, points=30)
    m = maximize(q, paper, n_phases=1, starts=16)
    assert g.objective <= m.objective + 1e-9
    assert g.objective >= 0.9 * m.objective


def test_pinned_x3(paper):
    q = RegionQuery({"r2": 1.0}, {"k2": 0.2}, {}, {0: [0.0, 1.0]})
    point = maximize(q, paper, starts=8)
    np.testing.assert_allclose(point.params.joint.p_x3_given_t[:, 1], 1.0)


def test_maximize_is_deterministic(paper):
    q = RegionQuery({"r1": 1.0, "R3": 2.0}, {"k1": 0.2, "k2": 0.2})
    a = maximize(q, paper, starts=8, seed=3)
    b = maximize(q, paper, starts=8, seed=3)
    assert a.params.digest() == b.params.digest()


def test_sweep_outputs(paper):
    curve = boundary_sweep(paper, {"k1": 0.5, "k2": 0.5}, {"r1": 0.2}, ("r2", "R3"), n_angles=5, starts=8)
    text = curve_csv(curve)
    lines = text.splitlines()
    assert lines[0].split(",") == CSV_HEADER and len(lines) == 6
    ids = set(json.loads(curve_params_json(curve)))
    assert {line.split(",")[-1] for line in lines[1:]} <= ids
    # each sample maximizes its own direction among the sampled points
    pts = curve.points()
    for s, p in zip(curve.samples, pts):
        w = np.array([max(math.cos(s.angle), 1e-9), max(math.sin(s.angle), 1e-9)])
        assert w @ p >= (pts @ w).max() - 1e-7
    assert curve.support(0.0) == pytest.approx(pts[:, 0].max(), rel=1e-6)
    assert curve_csv(curve, 1 / LN2) != text


def test_warm_curve_gives_nesting(paper):
    outer = boundary_sweep(paper, {"k1": 0.5, "k2": 0.5}, {"R3": 0.02}, ("r1", "r2"), n_angles=5, starts=8)
    inner = boundary_sweep(paper, {"k1": 0.5, "k2": 0.5}, {"R3": 0.1}, ("r1", "r2"), n_angles=5, starts=8,
                           warm_curve=outer)
    for s in outer.samples:
        assert inner.support(s.angle) <= outer.support(s.angle) + 1e-7
