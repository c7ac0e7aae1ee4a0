import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from floquet_dqpt import (DegenerateBandError, DomainError, PauliOperator, evolution_operator,
                          evolve_eigenstate, floquet_operator, make_custom, make_pql,
                          micromotion_operator, spectrum_at)
from floquet_dqpt.floquet_core import band_arrays, eigenstates_from_n
from floquet_dqpt.protocols import SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z

PI = np.pi
SETS = [(0.5, 1.1), (0.5, 4.1), (0.6, 1.5), (0.9, 0.9), (1.7, 1.7)]


def reference_U(hx, hy):
    return expm(-1j * hy * SIGMA_Y) @ expm(-1j * hx * SIGMA_X)


def test_identity_for_zero_fields():
    p = make_custom(lambda k: 0 * k, lambda k: 0 * k)
    assert np.allclose(floquet_operator(p, 0.3).to_matrix(), SIGMA_0)


def test_full_period_minus_identity():
    U = floquet_operator(make_pql(PI, PI), PI / 2).to_matrix()
    assert np.allclose(U, -SIGMA_0, atol=1e-15)


def test_half_pi_x_rotation():
    U = floquet_operator(make_pql(0.5 * PI, 1.1 * PI), 0.0).to_matrix()
    assert np.allclose(U, -1j * SIGMA_X, atol=1e-15)


@pytest.mark.parametrize("jx,jy", SETS)
def test_floquet_operator_matches_expm(jx, jy):
    p = make_pql(jx * PI, jy * PI)
    for k in np.linspace(-PI, PI, 13, endpoint=False):
        hx, hy = p.fields(k)
        assert np.allclose(floquet_operator(p, k).to_matrix(), reference_U(hx, hy), atol=1e-12)


def test_pauli_product_matches_dense():
    rng = np.random.default_rng(3)
    a = PauliOperator(*(rng.normal(size=4) + 1j * rng.normal(size=4)))
    b = PauliOperator(*(rng.normal(size=4) + 1j * rng.normal(size=4)))
    assert np.allclose((a @ b).to_matrix(), a.to_matrix() @ b.to_matrix())
    assert np.allclose(a.dagger().to_matrix(), a.to_matrix().conj().T)
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    assert np.allclose(a.apply(psi), a.to_matrix() @ psi)


def test_exp_axis_matches_expm():
    for axis, sig in (("x", SIGMA_X), ("y", SIGMA_Y), ("z", SIGMA_Z)):
        assert np.allclose(PauliOperator.exp_axis(0.7, axis).to_matrix(), expm(-0.7j * sig))
    with pytest.raises(ValueError):
        PauliOperator.exp_axis(0.1, "w")


def test_spectrum_example_gapped():
    sp = spectrum_at(make_pql(0.5 * PI, 1.1 * PI), 0.0)
    assert sp.E == pytest.approx(0.5 * PI)
    assert np.allclose(sp.n, [1, 0, 0])
    assert not sp.gapless


def test_spectrum_gapless_examples():
    sp = spectrum_at(make_pql(PI, PI), PI / 2)
    assert sp.E == pytest.approx(PI) and sp.gapless
    sp0 = spectrum_at(make_custom(lambda k: 0 * k, lambda k: 0 * k), 0.2)
    assert sp0.E == 0.0 and sp0.gapless


@pytest.mark.parametrize("jx,jy", SETS)
def test_spectrum_invariants(jx, jy):
    p = make_pql(jx * PI, jy * PI)
    for k in np.linspace(-PI, PI, 41, endpoint=False) + 0.013:
        sp = spectrum_at(p, k)
        hx, hy = p.fields(k)
        assert np.cos(sp.E) == pytest.approx(np.cos(hx) * np.cos(hy), abs=1e-12)
        assert np.linalg.norm(sp.n) == pytest.approx(1, abs=1e-10)
        Heff = sp.effective_hamiltonian()
        # independent oracle: matrix logarithm via expm of the effective Hamiltonian
        assert np.allclose(expm(-1j * Heff), reference_U(hx, hy), atol=1e-10)
        U = floquet_operator(p, k).to_matrix()
        for v in (1, -1):
            psi = sp.psi(v)
            assert np.vdot(psi, psi).real == pytest.approx(1, abs=1e-12)
            assert np.allclose(Heff @ psi, v * sp.E * psi, atol=1e-10)
            assert np.allclose(U @ psi, np.exp(-1j * v * sp.E) * psi, atol=1e-10)
        assert abs(np.vdot(sp.psi_plus, sp.psi_minus)) < 1e-10


def test_gauge_fallback_at_poles():
    for nz in (1.0, -1.0):
        n = np.array([0.0, 0.0, nz])
        for v in (1, -1):
            psi = eigenstates_from_n(n, v)
            M = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
            assert np.isfinite(psi).all()
            assert np.allclose(M @ psi, v * psi)
            assert np.vdot(psi, psi).real == pytest.approx(1)


def test_band_arrays_stable_near_edges():
    E, n, sinE = band_arrays(np.array([1e-7, PI - 1e-7]), np.array([1e-7, 1e-7]))
    assert np.allclose(np.linalg.norm(n, axis=0), 1)
    assert E[0] == pytest.approx(np.hypot(1e-7, 1e-7), rel=1e-6)


@pytest.mark.parametrize("jx,jy", SETS)
def test_micromotion_branches(jx, jy):
    p = make_pql(jx * PI, jy * PI)
    k = 0.37
    hx, hy = p.fields(k)
    assert np.allclose(micromotion_operator(p, k, 0.0).to_matrix(), SIGMA_0)
    assert np.allclose(micromotion_operator(p, k, 0.4).to_matrix(), expm(-0.4j * hx * SIGMA_X))
    assert np.allclose(micromotion_operator(p, k, 1.3).to_matrix(),
                       expm(-0.3j * hy * SIGMA_Y) @ expm(-1j * hx * SIGMA_X))
    left = micromotion_operator(p, k, 1 - 1e-13).to_matrix()
    right = micromotion_operator(p, k, 1.0).to_matrix()
    assert np.allclose(left, right, atol=1e-12)
    near_end = micromotion_operator(p, k, 2 - 1e-13).to_matrix()
    assert np.allclose(near_end, floquet_operator(p, k).to_matrix(), atol=1e-11)


def test_micromotion_continuity_example():
    U = micromotion_operator(make_pql(0.5 * PI, 1.1 * PI), 0.0, 1.0).to_matrix()
    assert np.allclose(U, -1j * SIGMA_X)


@pytest.mark.parametrize("s", [-0.1, 2.0, 3.0])
def test_micromotion_domain(s):
    with pytest.raises(DomainError):
        micromotion_operator(make_pql(1, 1), 0.1, s)


@pytest.mark.parametrize("jx,jy", SETS)
def test_evolve_eigenstate(jx, jy):
    p = make_pql(jx * PI, jy * PI)
    k = -1.1
    sp = spectrum_at(p, k)
    for v in (1, -1):
        psi = sp.psi(v)
        assert np.allclose(evolve_eigenstate(p, k, v, 0.0), psi)
        assert np.allclose(evolve_eigenstate(p, k, v, 2.0), np.exp(-1j * v * sp.E) * psi)
        assert np.allclose(evolve_eigenstate(p, k, v, 4.0), np.exp(-2j * v * sp.E) * psi)
        for t in (0.3, 1.7, 4.6, 7.2):
            direct = evolution_operator(p, k, t).apply(psi)
            got = evolve_eigenstate(p, k, v, t)
            assert np.allclose(got, direct, atol=1e-12)
            assert np.linalg.norm(got) == pytest.approx(1)


def test_evolve_gapless_raises():
    with pytest.raises(DegenerateBandError) as exc:
        evolve_eigenstate(make_pql(PI, PI), PI / 2, -1, 0.5)
    assert exc.value.k == pytest.approx(PI / 2)


@settings(max_examples=80, deadline=None)
@given(k=st.floats(-PI, PI), jx=st.floats(0.05, 6), jy=st.floats(0.05, 6))
def test_unitarity_and_reexponentiation(k, jx, jy):
    p = make_pql(jx, jy)
    U = floquet_operator(p, k)
    assert np.allclose((U.dagger() @ U).to_matrix(), SIGMA_0, atol=1e-12)
    sp = spectrum_at(p, k)
    if not sp.gapless:
        rebuilt = PauliOperator.exp_vector(sp.E, sp.n)
        assert U.distance(rebuilt) < 1e-10
