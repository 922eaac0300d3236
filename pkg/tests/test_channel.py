import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from covertmac.channel import (ChannelError, ChannelParseError, ChannelStructureError, ChannelValueError,
                               DmicChannel, Dmmac, GeneralMac, averaged_channel, dumps, from_rows,
                               is_user_inert, is_x3_inert, load, loads, paper_channel, paper_channel_rows,
                               reduce_single_user, restrict_x3, save, validate)
from conftest import random_dmmac


def test_paper_channel_matches_row_layout(paper):
    rows = paper_channel_rows()
    gy = np.array(rows["gamma_y"])
    # row order (x1, x2, x3) with x3 fastest
    assert paper.gamma_y[1, 0, 1].tolist() == gy[5].tolist()
    assert paper.gamma_y[0, 1, 0].tolist() == gy[2].tolist()
    assert paper.x3_size == 2 and paper.y_size == 6 and paper.z_size == 6
    assert validate(paper).ok


def test_rows_must_sum_to_one():
    gy = np.full((2, 2, 1, 2), 0.5)
    gz = gy.copy()
    gz[1, 1, 0] = [0.5, 0.6]
    with pytest.raises(ChannelValueError):
        Dmmac(gy, gz)


def test_shape_errors():
    with pytest.raises(ChannelStructureError):
        Dmmac(np.full((3, 2, 1, 2), 0.5), np.full((3, 2, 1, 2), 0.5))
    with pytest.raises(ChannelStructureError):
        from_rows(np.full((3, 2), 0.5), np.full((4, 2), 0.5), 1)


def test_negative_entry_reported_with_index():
    doc = {"x3_size": 1, "gamma_y": [[0.5, 0.5]] * 4, "gamma_z": [[0.5, 0.5]] * 3 + [[1.5, -0.5]]}
    with pytest.raises(ChannelValueError, match="negative"):
        loads(json.dumps(doc), from_rows=True)


def test_parse_error_names_position():
    with pytest.raises(ChannelParseError, match="line 1"):
        loads("{not json")


def test_validate_flags_support_and_indistinct():
    gy = np.array([[[[0.5, 0.5, 0.0]], [[0.3, 0.3, 0.4]]], [[[0.2, 0.8, 0.0]], [[1 / 3] * 3]]])
    gz = np.array([[[[0.5, 0.5]], [[0.5, 0.5]]], [[[0.1, 0.9]], [[0.4, 0.6]]]])
    report = validate(Dmmac(gy, gz))
    kinds = sorted((v.kind, v.output, v.user) for v in report)
    # user 2 leaks into y's empty letter and is invisible at z
    assert kinds == [("distinct", "z", 2), ("support", "y", 2)]
    assert not report.ok and len(report) == 2
    assert "output 2" in str(next(v for v in report if v.kind == "support"))


def test_round_trip_is_exact(tmp_path, rng):
    for _ in range(5):
        ch = random_dmmac(rng)
        path = tmp_path / "c.json"
        save(ch, path)
        back = load(path)
        assert back == ch
        assert dumps(back) == path.read_text()


def test_round_trip_other_kinds(rng):
    a, b = random_dmmac(rng, x3_size=2, y_size=3), random_dmmac(rng, x3_size=2, y_size=4)
    ic = DmicChannel(a.gamma_y, b.gamma_y, a.gamma_z)
    assert loads(dumps(ic)) == ic
    gm = GeneralMac.from_dmmac(a)
    assert loads(dumps(gm)) == gm


def test_unknown_kind():
    with pytest.raises(ChannelStructureError, match="kind"):
        loads('{"kind": "bsc"}')


def test_reduce_and_restrict(paper):
    red = reduce_single_user(paper, 1, x3=1)
    assert is_x3_inert(red) and is_user_inert(red, 2)
    assert np.array_equal(red.gamma_z[1, 1, 0], paper.gamma_z[1, 0, 1])
    r = restrict_x3(paper, 0)
    assert r.x3_size == 1 and np.array_equal(r.gamma_y[:, :, 0], paper.gamma_y[:, :, 0])
    assert not is_x3_inert(paper)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_averaged_channel_by_enumeration(r1, r2, alpha):
    ch = paper_channel()
    av = averaged_channel(ch, [[r1, r2]], alpha)
    p1, p2 = r1 * alpha, r2 * alpha
    want = sum(w * ch.gamma_z[a, b] for (a, b), w in
               {(0, 0): (1 - p1) * (1 - p2), (1, 0): p1 * (1 - p2),
                (0, 1): (1 - p1) * p2, (1, 1): p1 * p2}.items())
    np.testing.assert_allclose(av.z_given_x3[0], want, atol=1e-14)
    np.testing.assert_allclose(av.z_given_x3.sum(axis=-1), 1.0, atol=1e-13)


def test_averaged_channel_rejects_large_intensity(paper):
    with pytest.raises(ValueError):
        averaged_channel(paper, [[2.0, 0.0]], 0.6)


def test_errors_share_a_base():
    assert issubclass(ChannelParseError, ChannelError) and issubclass(ChannelError, ValueError)
