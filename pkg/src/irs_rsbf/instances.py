"""Random problem instances for checks and tests.

Cascades are built as ``diag(h) @ H_AR`` from i.i.d. complex Gaussians so
that they share the structure of the geometric model without its tiny
path-loss scale; noise power is 1.
"""

import numpy as np

from .channel import SampleBank, SystemConfig


def cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_instance(rng, M=2, N=4, K=1, D=2, eve_scale=0.5, P_max=1.0, **config_kw):
    """Returns ``(H_AB, bank, config)`` with uniform sample weights."""
    H_AR = cn(rng, (N, M))
    H_AB = cn(rng, N)[:, None] * H_AR
    G = eve_scale * cn(rng, (K, D, N))[..., None] * H_AR
    bank = SampleBank(G, np.full((K, D), 1.0 / D))
    config = SystemConfig(M=M, N_az=N, N_el=1, K=K, D_K=D, P_max=P_max, sigma0_sq=1.0,
                          **config_kw)
    return H_AB, bank, config


def random_weights(rng, K, D):
    mu = rng.uniform(0.05, 1.0, size=(K, D))
    return mu / mu.sum(axis=1, keepdims=True)


def random_sdp(rng, n=4, m=5, complex_=True):
    """Strictly feasible, bounded equality-form SDP (minimize)."""
    from . import sdp  # noqa: PLC0415

    def herm():
        A = rng.standard_normal((n, n)) + (1j * rng.standard_normal((n, n)) if complex_ else 0)
        return (A + A.conj().T) / 2

    X0 = np.eye(n) + 0.1 * herm()
    cons = [sdp.Constraint(A, float(np.real(np.trace(A @ X0)))) for A in [herm() for _ in range(m)]]
    C = herm()
    C = C + (np.abs(np.linalg.eigvalsh(C)).max() + 1.0) * np.eye(n)
    return sdp.SdpProblem(C, equalities=cons)
