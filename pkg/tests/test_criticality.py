import math

import numpy as np
import pytest

from floquet_dqpt import (Branch, critical_points, critical_points_general, critical_points_pql,
                          critical_times, gapless_momenta, make_custom, make_pql, on_phase_boundary,
                          return_probability)
from floquet_dqpt.criticality import wrap_k

PI = np.pi
SETS = [(0.5, 1.1), (0.5, 2.1), (0.5, 3.1), (0.5, 4.1), (0.6, 1.5), (0.9, 0.9), (1, 1), (1.7, 1.7)]


def kdist(a, b):
    d = abs(a - b) % (2 * PI)
    return min(d, 2 * PI - d)


def test_single_cusp_set():
    pts = critical_points_pql(0.5 * PI, 1.1 * PI)
    assert critical_times(pts) == pytest.approx([1.5])
    assert {p.branch for p in pts} == {Branch.SECOND_HY_INTEGER}
    kc = math.asin(1 / 1.1)
    expected = sorted(wrap_k(x) for x in (kc, PI - kc, -kc, kc - PI))
    assert sorted(p.k_c for p in pts) == pytest.approx(expected)
    assert all(abs(p.principal_k) <= PI / 2 for p in pts)


def test_null_set():
    assert critical_points_pql(0.5 * PI, 0.5 * PI) == []


def test_equal_amplitude_mirror_pair():
    ts = critical_times(critical_points_pql(0.9 * PI, 0.9 * PI))
    kc = math.asin(1 / 1.8)
    assert ts == pytest.approx([1 / (1.8 * math.cos(kc)), 2 - 1 / (1.8 * math.cos(kc))])


@pytest.mark.parametrize("jx,jy", SETS)
def test_zero_certification_and_halves(jx, jy):
    pts = critical_points_pql(jx * PI, jy * PI)
    assert pts
    for p in pts:
        assert -PI <= p.k_c < PI
        assert return_probability(make_pql(jx * PI, jy * PI), p.k_c, p.s_c) < 1e-10
        if p.branch.first_half:
            assert 0 < p.s_c < 1
        else:
            assert 1 < p.s_c < 2
    keys = [(round(p.s_c, 9), p.k_c) for p in pts]
    assert keys == sorted(keys)


def test_integer_branch_times_universal():
    for jx, jy in [(1.2, 2.3), (1.7, 2.9), (2.2, 4.4)]:
        for p in critical_points_pql(jx * PI, jy * PI):
            if p.branch == Branch.FIRST_HX_INTEGER:
                m, q = p.indices
                assert p.s_c == pytest.approx((2 * q - 1) / (2 * m))
            if p.branch == Branch.SECOND_HY_INTEGER:
                n, q = p.indices
                assert p.s_c == pytest.approx(2 - (2 * q - 1) / (2 * n))


def test_duplicates_merged_with_labels():
    pts = critical_points_pql(PI, PI)
    keys = [(round(p.s_c, 9), round(p.k_c, 9)) for p in pts]
    assert len(keys) == len(set(keys))
    for p in pts:
        assert (p.branch, p.indices) in p.labels


def test_general_solver_matches_closed_form():
    for jx, jy in SETS:
        p = make_pql(jx * PI, jy * PI)
        generic = make_custom(p.h_x, p.h_y)
        a = critical_points_pql(jx * PI, jy * PI)
        b = critical_points_general(generic)
        assert len(a) == len(b), (jx, jy)
        for x, y in zip(a, b):
            assert x.s_c == pytest.approx(y.s_c, abs=1e-9)
            assert kdist(x.k_c, y.k_c) < 1e-9
            assert x.branch == y.branch


def test_general_solver_custom_protocol():
    proto = make_custom(lambda k: 2.5 * np.cos(k) + 0.4 * np.cos(2 * k), lambda k: 3.6 * np.sin(k))
    pts = critical_points(proto)
    assert pts
    for p in pts:
        assert return_probability(proto, p.k_c, p.s_c) < 1e-10


def test_tangential_level_touch_found():
    # h_y peaks at exactly pi, so the integer level is touched, not crossed
    proto = make_custom(lambda k: 0.3 * np.cos(k), lambda k: PI * np.sin(k))
    ks = [p.k_c for p in critical_points(proto) if p.branch == Branch.SECOND_HY_INTEGER]
    assert ks and min(kdist(k, PI / 2) for k in ks) < 1e-8


def test_gapless_examples():
    g = gapless_momenta(make_pql(PI, PI))
    got = sorted((round(x.k_0, 9), x.m, x.n) for x in g)
    assert got == sorted([(0.0, 1, 0), (round(-PI, 9), -1, 0), (round(PI / 2, 9), 0, 1),
                          (round(-PI / 2, 9), 0, -1)])
    assert gapless_momenta(make_pql(0.5 * PI, 1.1 * PI)) == []
    half = gapless_momenta(make_pql(0.5 * PI, PI))
    assert sorted((round(x.k_0, 9), x.m, x.n) for x in half) == [(round(-PI / 2, 9), 0, -1),
                                                                 (round(PI / 2, 9), 0, 1)]


def test_gapless_general_matches_pql():
    p = make_pql(PI, 2 * PI)
    a = gapless_momenta(p)
    b = gapless_momenta(make_custom(p.h_x, p.h_y))
    assert [(x.m, x.n) for x in a] == [(x.m, x.n) for x in b]
    for x in b:
        hx, hy = p.fields(x.k_0)
        assert abs(hx - x.m * PI) < 1e-9 and abs(hy - x.n * PI) < 1e-9


def test_gapless_points_are_critical():
    for jx, jy in [(PI, PI), (2 * PI, 2 * PI), (PI, 2 * PI)]:
        pts = critical_points_pql(jx, jy)
        for g0 in gapless_momenta(make_pql(jx, jy)):
            if g0.m != 0:
                branch_k = [p.k_c for p in pts if p.branch == Branch.FIRST_HX_INTEGER]
                assert min(kdist(g0.k_0, k) for k in branch_k) < 1e-9
            if g0.n != 0:
                branch_k = [p.k_c for p in pts if p.branch == Branch.SECOND_HY_INTEGER]
                assert min(kdist(g0.k_0, k) for k in branch_k) < 1e-9


def test_phase_boundary():
    flag, wit = on_phase_boundary(PI, PI)
    assert flag and (1, 0) in wit and (0, 1) in wit
    assert on_phase_boundary(0.5 * PI, 1.1 * PI) == (False, [])
    assert on_phase_boundary(math.sqrt(2) * PI, math.sqrt(2) * PI)[1] == [(1, 1)]
