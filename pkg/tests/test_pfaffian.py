import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bingham_hgm import (InputError, MultiplicityTheta, SingularPointError, pfaffian_matrix,
                         reduced_pfaffian_matrix, series_grad)
from bingham_hgm.pfaffian import (directional_field, log_directional_field, log_vector_field,
                                  pfaffian_matrices, reduced_directional_field)


def random_point(rng, q_max=6, spread=2.0):
    q = int(rng.integers(2, q_max + 1))
    gaps = rng.uniform(0.05, spread, size=q - 1)
    phi = np.concatenate([[0.0], -np.cumsum(gaps)])
    d = rng.integers(1, 4, size=q)
    return phi, d


def grad_at(phi, d):
    return series_grad(MultiplicityTheta.from_blocks(phi, d), 1e-14).values


def fd_block_derivative(phi, d, i, h=1e-5):
    e = np.zeros_like(phi)
    e[i] = h
    return (grad_at(phi + e, d) - grad_at(phi - e, d)) / (2 * h)


def test_column_sum_law(rng):
    for _ in range(1000):
        phi, d = random_point(rng)
        for i in range(phi.size):
            P = pfaffian_matrix(i, phi, d)
            expect = np.zeros(phi.size)
            expect[i] = 1.0
            assert np.max(np.abs(P.sum(axis=0) - expect)) <= 1e-12


@pytest.mark.parametrize("phi,d", [
    ([0.0, -0.3, -0.7], [1, 1, 1]),
    ([0.0, -0.4, -1.1], [2, 1, 3]),
    ([0.5, 0.2, -0.1, -0.6], [1, 2, 1, 2]),
])
def test_pfaffian_reproduces_derivatives(phi, d):
    phi, d = np.asarray(phi), np.asarray(d)
    G = grad_at(phi, d)
    for i in range(phi.size):
        lhs = pfaffian_matrix(i, phi, d) @ G
        assert np.allclose(lhs, fd_block_derivative(phi, d, i), rtol=1e-7, atol=1e-10)


def test_integrability(rng):
    # dP_i/dphi_j + P_i P_j == dP_j/dphi_i + P_j P_i
    h = 1e-6
    for _ in range(20):
        phi, d = random_point(rng, q_max=5)
        q = phi.size
        for i in range(q):
            for j in range(i + 1, q):
                e_i, e_j = np.eye(q)[i] * h, np.eye(q)[j] * h
                dPi_j = (pfaffian_matrix(i, phi + e_j, d) - pfaffian_matrix(i, phi - e_j, d)) / (2 * h)
                dPj_i = (pfaffian_matrix(j, phi + e_i, d) - pfaffian_matrix(j, phi - e_i, d)) / (2 * h)
                Pi, Pj = pfaffian_matrix(i, phi, d), pfaffian_matrix(j, phi, d)
                lhs, rhs = dPi_j + Pi @ Pj, dPj_i + Pj @ Pi
                assert np.allclose(lhs, rhs, atol=1e-6 * (1 + np.abs(lhs).max()))


def test_reduced_system_reproduces_derivatives():
    phi, d = np.array([0.7, 0.3, 0.0]), np.array([1, 2, 1])
    G = grad_at(phi, d)
    Gt = np.concatenate([[G.sum()], G[:-1]])
    for i in range(phi.size - 1):
        dG = fd_block_derivative(phi, d, i)
        dGt = np.concatenate([[dG.sum()], dG[:-1]])
        assert np.allclose(reduced_pfaffian_matrix(i, phi, d) @ Gt, dGt, rtol=1e-7, atol=1e-10)


def test_reduced_requires_zero_last_value():
    with pytest.raises(InputError):
        reduced_pfaffian_matrix(0, np.array([1.0, 0.5]))
    R = reduced_pfaffian_matrix(0, MultiplicityTheta.from_blocks([1.0, 0.5]))
    assert R.shape == (2, 2)
    with pytest.raises(InputError):
        reduced_pfaffian_matrix(1, np.array([1.0, 0.0]))


def test_directional_fields_match_matrices(rng):
    for _ in range(50):
        phi, d = random_point(rng)
        q = phi.size
        v = rng.normal(size=q)
        G = rng.uniform(0.1, 1.0, size=q)
        P = pfaffian_matrices(phi, d)
        assert np.allclose(directional_field(phi, d, v, G), np.einsum("i,ijk,k->j", v, P, G),
                           rtol=1e-12, atol=1e-12)
        psi = phi - phi[-1]
        vr = v.copy()
        vr[-1] = 0.0
        Gt = rng.uniform(0.1, 1.0, size=q)
        R = sum(vr[i] * reduced_pfaffian_matrix(i, psi, d) for i in range(q - 1))
        assert np.allclose(reduced_directional_field(psi, d, vr, Gt), R @ Gt, rtol=1e-11, atol=1e-12)


def test_log_field_consistent_with_linear(rng):
    phi, d = np.array([0.0, -0.5, -1.2]), np.array([1, 2, 2])
    G = grad_at(phi, d)
    GL = G / G.sum()
    for i in range(3):
        dG = pfaffian_matrix(i, phi, d) @ G
        C, dC = G.sum(), G[i]
        expect = dG / C - G * dC / C ** 2
        assert np.allclose(log_vector_field(i, phi, GL, d), expect, rtol=1e-12, atol=1e-14)
    v = np.array([0.3, -1.0, 0.5])
    assert np.allclose(log_directional_field(phi, d, v, GL),
                       sum(v[i] * log_vector_field(i, phi, GL, d) for i in range(3)), atol=1e-14)


@given(st.lists(st.floats(0.01, 3.0), min_size=1, max_size=5),
       st.lists(st.integers(1, 3), min_size=6, max_size=6),
       st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_log_field_preserves_simplex(gaps, d, v):
    phi = np.concatenate([[0.0], -np.cumsum(gaps)])
    q = phi.size
    d = np.asarray(d[:q])
    GL = d / d.sum()
    out = log_directional_field(phi, d, np.asarray(v[:q]), GL)
    assert abs(out.sum()) <= 1e-10 * (1 + np.abs(out).max())


def test_singular_point_error():
    with pytest.raises(SingularPointError):
        pfaffian_matrix(0, np.array([0.0, -1e-12, -1.0]))


def test_index_out_of_range():
    with pytest.raises(InputError):
        pfaffian_matrix(3, np.array([0.0, -1.0]))
