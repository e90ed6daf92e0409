import numpy as np
import pytest
from hypothesis import given, strategies as st

from irs_rsbf.numerics import (ContractViolation, SingularMatrixError, cholesky, dominant_rank_one,
                               eig_ratio, fix_phase, generalized_rayleigh_max, hermitian_eig,
                               hermitize, is_hermitian, kron)

from conftest import crandn, random_hermitian


def test_eig_identity():
    lam, V = hermitian_eig(np.eye(2))
    assert np.allclose(lam, [1, 1])
    assert np.allclose(V.conj().T @ V, np.eye(2))


def test_eig_diagonal_sorted():
    lam, V = hermitian_eig(np.diag([3.0, -1.0]))
    assert np.allclose(lam, [-1, 3])
    assert np.allclose(np.abs(V), [[0, 1], [1, 0]])


@given(st.integers(0, 10_000))
def test_eig_reconstructs(seed):
    rng = np.random.default_rng(seed)
    A = random_hermitian(rng, 8)
    lam, V = hermitian_eig(A)
    assert np.max(np.abs(V @ np.diag(lam) @ V.conj().T - A)) < 1e-9


def test_eig_rejects_non_hermitian():
    with pytest.raises(ContractViolation):
        hermitian_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ContractViolation):
        hermitize(np.ones((2, 3)))


def test_hermitian_flag_tolerance():
    A = np.array([[1.0, 1.0 + 1e-14], [1.0, 1.0]])
    assert is_hermitian(A)
    assert not is_hermitian(np.array([[1.0, 1.1], [1.0, 1.0]]))


def test_rayleigh_ordinary_case():
    x, v = generalized_rayleigh_max(np.eye(2), np.diag([1.0, 5.0]))
    assert v == pytest.approx(5.0)
    assert np.allclose(np.abs(x), [0, 1])


def test_rayleigh_equal_matrices():
    _, v = generalized_rayleigh_max(np.diag([1.0, 4.0]), np.diag([1.0, 4.0]))
    assert v == pytest.approx(1.0)


def test_rayleigh_beats_random_sampling(rng):
    M = crandn(rng, 4, 4)
    A = M @ M.conj().T + 0.1 * np.eye(4)
    b = crandn(rng, 4)
    B = np.outer(b, b.conj()) + 0.05 * np.eye(4)
    x, v = generalized_rayleigh_max(A, B)
    X = crandn(rng, 10**5, 4)
    q = np.real(np.einsum("ci,ij,cj->c", X.conj(), B, X)) / np.real(np.einsum("ci,ij,cj->c", X.conj(), A, X))
    assert v >= q.max() - 1e-12
    assert np.linalg.norm(x) == pytest.approx(1.0)


@given(st.integers(0, 10_000), st.floats(0.1, 10.0))
def test_rayleigh_scaling(seed, s):
    rng = np.random.default_rng(seed)
    M = crandn(rng, 3, 3)
    A = M @ M.conj().T + np.eye(3)
    B = random_hermitian(rng, 3)
    v = generalized_rayleigh_max(A, B)[1]
    assert generalized_rayleigh_max(s * A, s * B)[1] == pytest.approx(v, abs=1e-9, rel=1e-9)
    assert generalized_rayleigh_max(A, s * B)[1] == pytest.approx(s * v, rel=1e-9, abs=1e-9)


def test_rayleigh_requires_positive_definite():
    with pytest.raises(SingularMatrixError):
        generalized_rayleigh_max(np.diag([1.0, 0.0]), np.eye(2))


def test_kron_cases(rng):
    b = np.array([2.0, 3.0])
    assert np.array_equal(kron(np.array([1.0]), b), b)
    assert np.array_equal(kron(np.array([1, 1]), np.array([1, -1])), [1, -1, 1, -1])
    a = crandn(rng, 2, 2)
    c = crandn(rng, 3)
    K = kron(a, c)
    assert K.shape == (6, 2)
    for i in range(2):
        for k in range(3):
            assert abs(K[i * 3 + k, 1] - a[i, 1] * c[k]) < 1e-15


def test_cholesky_cases(rng):
    assert np.allclose(cholesky(np.eye(3)), np.eye(3))
    assert np.allclose(cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    M = crandn(rng, 5, 5)
    A = M @ M.conj().T + np.eye(5)
    L = cholesky(A)
    assert np.allclose(L @ L.conj().T, A, atol=1e-10)
    assert np.allclose(L, np.tril(L))
    with pytest.raises(SingularMatrixError):
        cholesky(np.diag([1.0, -1.0]))


def test_dominant_rank_one(rng):
    v = crandn(rng, 4)
    v /= np.linalg.norm(v)
    x, lam = dominant_rank_one(np.outer(v, v.conj()))
    assert lam == pytest.approx(1.0)
    assert abs(abs(np.vdot(x, v)) - 1) < 1e-12
    x0, lam0 = dominant_rank_one(np.zeros((3, 3)))
    assert lam0 == 0 and not np.any(x0)


def test_dominant_rank_one_is_best_approximation(rng):
    M = crandn(rng, 4, 4)
    A = M @ M.conj().T
    x, _ = dominant_rank_one(A)
    lam = np.linalg.eigvalsh(A)
    # Eckart-Young: the residual equals the discarded spectrum
    assert np.linalg.norm(A - np.outer(x, x.conj())) == pytest.approx(np.sqrt(np.sum(lam[:-1] ** 2)))
    for _ in range(200):
        y = crandn(rng, 4)
        assert np.linalg.norm(A - np.outer(y, y.conj())) >= np.linalg.norm(A - np.outer(x, x.conj())) - 1e-9


def test_fix_phase_and_ratio(rng):
    v = fix_phase(crandn(rng, 5))
    k = np.argmax(np.abs(v))
    assert abs(v[k].imag) < 1e-15 and v[k].real > 0
    assert eig_ratio(np.diag([1.0, 0.0])) == 0.0
    assert eig_ratio(np.diag([1.0, 0.5])) == pytest.approx(0.5)
