import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floquet_dqpt import (DegenerateBandError, DomainError, critical_points, detect_cusps,
                          evolution_operator, k_grid, make_pql, rate_function, return_amplitude,
                          return_probability, s_grid, spectrum_at)
from floquet_dqpt.observables import ReturnTrace, amplitude_grid, full_return_amplitude

PI = np.pi


def test_k_grid_avoids_symmetry_points():
    ks = k_grid(300)
    assert ks.size == 300 and ks[0] > -PI and ks[-1] < PI
    for special in (0.0, PI / 2, -PI / 2, -PI):
        assert np.min(np.abs(ks - special)) > 1e-3
    assert np.allclose(np.diff(ks), 2 * PI / 300)
    with pytest.raises(DomainError):
        k_grid(1)


def test_amplitude_at_zero_time():
    assert return_amplitude(make_pql(0.7, 2.3), 0.4, 1, 0.0) == pytest.approx(1.0)


def test_amplitude_example_first_half():
    p = make_pql(0.5 * PI, 1.1 * PI)
    G = return_amplitude(p, 0.0, -1, 1 - 1e-12)
    assert G == pytest.approx(1j, abs=1e-10)


def test_probability_examples():
    p = make_pql(0.5 * PI, 1.1 * PI)
    assert return_probability(p, 0.3, 0.0) == pytest.approx(1.0)
    assert return_probability(p, np.arcsin(1 / 1.1), 1.5) < 1e-28
    assert return_probability(p, 0.0, 0.5) == pytest.approx(1.0)


def test_amplitude_matches_overlap():
    p = make_pql(0.6 * PI, 1.5 * PI)
    for k in (-2.0, -0.3, 0.9):
        sp = spectrum_at(p, k)
        for v in (1, -1):
            psi = sp.psi(v)
            for t in (0.25, 0.99, 1.0, 1.6, 3.3, 5.9):
                direct = np.vdot(psi, evolution_operator(p, k, t).apply(psi))
                assert full_return_amplitude(p, k, v, t) == pytest.approx(direct, abs=1e-12)


def test_amplitude_gapless_and_domain_errors():
    p = make_pql(PI, PI)
    with pytest.raises(DegenerateBandError):
        return_amplitude(p, PI / 2, -1, 0.3)
    with pytest.raises(DomainError):
        return_amplitude(p, 0.3, -1, 2.0)
    with pytest.raises(DomainError):
        return_probability(p, 0.3, -0.1)


def test_probability_finite_at_gapless_momentum():
    p = make_pql(PI, PI)
    g = return_probability(p, PI / 2, 1.25)
    assert 0.0 <= g <= 1.0


def test_probability_array_shapes():
    p = make_pql(1.0, 2.0)
    assert return_probability(p, np.zeros(3), np.zeros(4)).shape == (3, 4)
    assert return_probability(p, 0.1, np.zeros(4)).shape == (4,)
    assert return_probability(p, np.zeros(3), 0.2).shape == (3,)


@settings(max_examples=60, deadline=None)
@given(jx=st.floats(0.1, 5), jy=st.floats(0.1, 5), s=st.floats(0, 1.999))
def test_v_independence_and_bounds(jx, jy, s):
    p = make_pql(jx, jy)
    ks = k_grid(64)
    hx, hy = p.fields(ks)
    gp = np.abs(amplitude_grid(hx, hy, [s], 1)) ** 2
    gm = np.abs(amplitude_grid(hx, hy, [s], -1)) ** 2
    g = return_probability(p, ks, np.array([s]))
    ok = np.isfinite(gp)
    assert np.max(np.abs(gp - gm)[ok]) < 1e-12
    assert np.max(np.abs(g - gp)[ok]) < 1e-12
    assert np.all(g >= 0) and np.all(g <= 1 + 1e-12)


def test_rate_trace_basic():
    tr = rate_function(make_pql(0.6 * PI, 1.5 * PI), s_grid(500), 100)
    assert tr.g.shape == (100, 500)
    assert tr.f[0] == pytest.approx(0, abs=1e-10)
    assert np.all(tr.f >= -1e-12)
    t, f = tr.periodic(3)
    assert t.size == 1500 and np.array_equal(f[:500], f[1000:])
    with pytest.raises(DomainError):
        rate_function(make_pql(1, 1), s_grid(10), 1)


def test_detect_requires_uniform_fine_grid():
    p = make_pql(0.5 * PI, 1.1 * PI)
    with pytest.raises(DomainError):
        detect_cusps(rate_function(p, s_grid(400), 50))
    s = np.sort(np.random.default_rng(0).uniform(0, 2, 1200))
    with pytest.raises(DomainError):
        detect_cusps(rate_function(p, s, 50))


def test_flat_trace_has_no_cusps():
    p = make_pql(0.5 * PI, 0.5 * PI)
    rep = detect_cusps(rate_function(p), critical_points(p))
    assert rep.detected == [] and rep.predicted == []


@pytest.mark.parametrize("jy,expected", [
    (1.1, [1.5]),
    (2.1, [1.25, 1.5, 1.75]),
])
def test_detect_small_sets(jy, expected):
    p = make_pql(0.5 * PI, jy * PI)
    rep = detect_cusps(rate_function(p), critical_points(p))
    assert np.allclose(rep.times, expected, atol=1e-3)
    assert len(rep.matched) == len(expected)
    assert not rep.unmatched_detected and not rep.unmatched_predicted
    for _, _, dt in rep.matched:
        assert abs(dt) <= 2 * rep.ds


def test_report_serializes():
    p = make_pql(0.5 * PI, 1.1 * PI)
    d = detect_cusps(rate_function(p), critical_points(p)).to_dict()
    assert d["detected"][0]["t"] == pytest.approx(1.5)
    assert d["matched"][0]["predicted"] == pytest.approx(1.5)


def test_detect_on_synthetic_trace():
    # hand-built trace: zero amplitude enforced by the real protocol, f replaced by a V-shape
    p = make_pql(0.5 * PI, 1.1 * PI)
    tr = rate_function(p, s_grid(2000), 60)
    s = tr.s_grid
    synth = ReturnTrace(p, tr.k_grid, s, tr.g, 0.1 * s - 0.3 * np.abs(s - 1.5))
    rep = detect_cusps(synth, [1.5])
    assert rep.times == pytest.approx([1.5])
