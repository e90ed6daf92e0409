"""Dense complex matrix kernels shared by the solvers.

Thin wrappers over LAPACK (via numpy/scipy) that enforce Hermitian input,
fix the global phase of returned vectors and raise typed errors.
"""

import numpy as np
from scipy.linalg import solve_triangular

HERMITIAN_RTOL = 1e-12
PD_RTOL = 1e-12


class ContractViolation(ValueError):
    """Input does not satisfy the documented precondition."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Matrix expected positive definite is singular or indefinite."""


def _as_square(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {A.shape}")
    return A


def is_hermitian(A, rtol=HERMITIAN_RTOL):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    scale = np.max(np.abs(A)) if A.size else 0.0
    return bool(np.max(np.abs(A - A.conj().T), initial=0.0) <= rtol * max(scale, 1e-300))


def hermitize(A, rtol=HERMITIAN_RTOL, check=True):
    """Return (A + A^H)/2 after checking that A is Hermitian to ``rtol``."""
    A = _as_square(A)
    if check and not is_hermitian(A, rtol):
        raise ContractViolation("matrix is not Hermitian within tolerance")
    return 0.5 * (A + A.conj().T)


def fix_phase(v):
    """Rotate ``v`` so its largest-magnitude entry is real and nonnegative.

    Works column-wise on 2-D input.
    """
    v = np.array(v, dtype=complex)
    if v.ndim == 1:
        if v.size == 0:
            return v
        k = np.argmax(np.abs(v))
        if abs(v[k]) > 0:
            v *= np.exp(-1j * np.angle(v[k]))
        return v
    idx = np.argmax(np.abs(v), axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    rot = np.where(np.abs(ph) > 0, np.exp(-1j * np.angle(ph)), 1.0)
    return v * rot[None, :]


def hermitian_eig(A):
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray, real, ascending
    eigenvectors : ndarray, unitary, columns phase-normalized
    """
    A = hermitize(A)
    lam, V = np.linalg.eigh(A)
    return lam, fix_phase(V)


def cholesky(A):
    """Lower-triangular L with L L^H = A; raises on indefinite input."""
    A = hermitize(A)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("matrix is not positive definite") from exc


def generalized_rayleigh_max(A, B):
    """Maximize ``(x^H B x) / (x^H A x)`` over nonzero x.

    A must be Hermitian positive definite, B Hermitian. The problem is
    whitened with the Cholesky factor of A, so only a Hermitian
    eigenproblem is solved.

    Returns
    -------
    x : unit-norm maximizer
    value : the maximal quotient
    """
    A = hermitize(A)
    B = hermitize(B)
    if A.shape != B.shape:
        raise ContractViolation("A and B must have equal shapes")
    lam_a = np.linalg.eigvalsh(A)
    if lam_a[0] <= PD_RTOL * max(lam_a[-1], 0.0) or lam_a[-1] <= 0:
        raise SingularMatrixError("A is not positive definite")
    L = cholesky(A)
    Y = solve_triangular(L, B, lower=True)
    Bw = solve_triangular(L, Y.conj().T, lower=True).conj().T
    _, U = np.linalg.eigh(0.5 * (Bw + Bw.conj().T))
    x = solve_triangular(L.conj().T, U[:, -1], lower=False)
    x = fix_phase(x / np.linalg.norm(x))
    value = np.real(x.conj() @ B @ x) / np.real(x.conj() @ A @ x)
    return x, float(value)


def kron(a, b):
    """Kronecker product; 1-D inputs are treated as column vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim == 1 and b.ndim == 1:
        return np.kron(a, b)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    return np.kron(a, b)


def dominant_rank_one(A):
    """Best rank-one factor of a Hermitian PSD matrix.

    Returns ``(sqrt(lam_max) * u_max, lam_max)``; a zero matrix gives a zero
    vector.
    """
    lam, V = hermitian_eig(A)
    top = max(float(lam[-1]), 0.0)
    if top == 0.0:
        return np.zeros(A.shape[0], dtype=complex), 0.0
    return np.sqrt(top) * V[:, -1], top


def eig_ratio(A):
    """Second-to-first eigenvalue ratio of a PSD matrix (0 for rank <= 1)."""
    lam = np.linalg.eigvalsh(hermitize(A, check=False))
    if lam.size < 2 or lam[-1] <= 0:
        return 0.0
    return max(float(lam[-2]), 0.0) / float(lam[-1])
