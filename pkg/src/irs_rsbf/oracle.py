"""Brute-force references for tests: phase grids, random beamformers and a
first-order SDP solver. Nothing in the main algorithms imports this module."""

from dataclasses import dataclass

import numpy as np

GRID_LIMIT = 10**8
GRID_MAX_N = 6
CHUNK = 1 << 16


def _fractional(num, den_per_eve, mode):
    if den_per_eve.shape[-1] == 0:
        return num
    if mode == "colluding":
        return num / (den_per_eve.sum(axis=-1) + 1.0)
    return np.min(num[..., None] / (den_per_eve + 1.0), axis=-1)


def _as_bank(eve_cascades, weights, shape):
    G = np.asarray(eve_cascades, dtype=complex)
    if G.size == 0:
        G = np.zeros((0, 1) + shape, dtype=complex)
    elif G.ndim == 3:
        G = G[:, None]
    mu = np.ones(G.shape[:2]) / G.shape[1] if weights is None else np.asarray(weights, dtype=float)
    return G, mu.reshape(G.shape[:2])


def q_objective(Q, w, H_AB, eve_cascades, weights=None, sigma0_sq=1.0, mode="colluding"):
    """Fractional objective for a batch of q rows (batch x N) at fixed w."""
    G, mu = _as_bank(eve_cascades, weights, np.shape(H_AB))
    Q = np.atleast_2d(Q)
    a = H_AB @ w
    num = np.abs(Q @ a) ** 2 / sigma0_sq + 1.0
    ev = np.einsum("ktnm,m->ktn", G, w)
    e = np.abs(np.einsum("cn,ktn->ckt", Q, ev)) ** 2 / sigma0_sq
    return _fractional(num, np.einsum("ckt,kt->ck", e, mu), mode)


def w_objective(W, q, H_AB, eve_cascades, weights=None, sigma0_sq=1.0, mode="colluding"):
    """Fractional objective for a batch of w rows (batch x M) at fixed q."""
    G, mu = _as_bank(eve_cascades, weights, np.shape(H_AB))
    W = np.atleast_2d(W)
    b = q @ H_AB
    num = np.abs(W @ b) ** 2 / sigma0_sq + 1.0
    rows = np.einsum("n,ktnm->ktm", q, G)
    e = np.abs(np.einsum("cm,ktm->ckt", W, rows)) ** 2 / sigma0_sq
    return _fractional(num, np.einsum("ckt,kt->ck", e, mu), mode)


def phase_grid(levels, N):
    """All q with q_0 = 1 and the other phases on the ``levels`` grid, in index order.

    The objectives only see |q . x|, so fixing the first phase loses nothing.
    """
    if N > GRID_MAX_N or levels ** N > GRID_LIMIT:
        raise ValueError(f"refusing to enumerate {levels}^{N} phase vectors")
    steps = np.exp(2j * np.pi * np.arange(levels) / levels)
    for start in range(0, levels ** (N - 1), CHUNK):
        idx = np.arange(start, min(start + CHUNK, levels ** (N - 1)))
        digits = np.stack([(idx // levels ** p) % levels for p in range(N - 2, -1, -1)], axis=1) \
            if N > 1 else np.zeros((idx.size, 0), dtype=int)
        yield np.concatenate([np.ones((idx.size, 1)), steps[digits]], axis=1)


def grid_search_q(w, H_AB, eve_cascades, weights, levels, mode="colluding", sigma0_sq=1.0):
    """Exact optimum of the q-objective over quantized phases; returns (q, value)."""
    N = np.shape(H_AB)[0]
    best_q, best = None, -np.inf
    for Q in phase_grid(levels, N):
        vals = q_objective(Q, w, H_AB, eve_cascades, weights, sigma0_sq, mode)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best_q, best = Q[i], float(vals[i])
    return best_q, best


def quantization_slack(q, w, H_AB, eve_cascades, weights, levels, mode="colluding", sigma0_sq=1.0):
    """Largest objective change when any one phase of ``q`` moves by half a grid step."""
    base = q_objective(q, w, H_AB, eve_cascades, weights, sigma0_sq, mode)[0]
    half = np.pi / levels
    pert = []
    for n in range(q.size):
        for s in (-1, 1):
            p = q.copy()
            p[n] *= np.exp(1j * s * half)
            pert.append(p)
    vals = q_objective(np.array(pert), w, H_AB, eve_cascades, weights, sigma0_sq, mode)
    return float(np.max(np.abs(vals - base)))


def sphere_draws(rng, draws, M, P_max):
    """``draws`` vectors uniform on the sphere of radius sqrt(P_max).

    Drawn in one call so a longer run extends a shorter one with the same seed.
    """
    z = rng.standard_normal((draws, M, 2))
    W = z[..., 0] + 1j * z[..., 1]
    return np.sqrt(P_max) * W / np.linalg.norm(W, axis=1, keepdims=True)


def random_search_w(q, H_AB, eve_cascades, weights, config, draws, rng, mode="colluding"):
    """Best of ``draws`` random full-power beamformers; returns (w, value)."""
    W = sphere_draws(rng, draws, np.shape(H_AB)[1], config.P_max)
    vals = np.concatenate([w_objective(W[i:i + CHUNK], q, H_AB, eve_cascades, weights,
                                       config.sigma0_sq, mode) for i in range(0, draws, CHUNK)])
    i = int(np.argmax(vals))
    return W[i], float(vals[i])


def joint_brute_force(H_AB, eve_cascades, weights, config, levels=64, draws=10**4, rng=None,
                      mode="colluding"):
    """Phase grid crossed with a shared random w pool; returns (w, q, log2 value)."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    W = sphere_draws(rng, draws, np.shape(H_AB)[1], config.P_max)
    best = (None, None, -np.inf)
    for Q in phase_grid(levels, np.shape(H_AB)[0]):
        for q in Q:
            vals = w_objective(W, q, H_AB, eve_cascades, weights, config.sigma0_sq, mode)
            i = int(np.argmax(vals))
            if vals[i] > best[2]:
                best = (W[i], q, float(vals[i]))
    return best[0], best[1], float(np.log2(best[2]))


# ---------------------------------------------------------------------------
# first-order SDP reference


@dataclass
class AdmmResult:
    X: np.ndarray
    scalar_values: np.ndarray
    objective_value: float
    iterations: int
    converged: bool


def admm_solve(problem, tol=1e-10, max_iter=200_000, mu=1.0):
    """Alternating-direction dual augmented Lagrangian for an ``SdpProblem``.

    Works on complex Hermitian blocks directly. Inequalities receive slack
    scalars; all scalars are nonnegative 1x1 blocks next to the matrix block.
    """
    n = problem.dim
    cons = list(problem.equalities) + list(problem.inequalities)
    p, n_in = len(cons), len(problem.inequalities)
    ns = problem.n_scalars
    nx = ns + n_in
    sign = -1.0 if problem.sense == "maximize" else 1.0
    C = sign * np.asarray(problem.objective, dtype=complex)
    c = np.zeros(nx)
    if problem.objective_scalars is not None:
        c[:ns] = sign * np.asarray(problem.objective_scalars, dtype=float)
    A = np.array([np.asarray(k.matrix, dtype=complex) for k in cons]).reshape(p, n, n)
    A = (A + A.conj().transpose(0, 2, 1)) / 2
    a = np.zeros((p, nx))
    for i, k in enumerate(cons):
        if k.scalars is not None:
            a[i, :ns] = k.scalars
    a[len(problem.equalities):, ns:] = np.eye(n_in)
    b = np.array([k.rhs for k in cons], dtype=float)

    def op(X, x):
        return np.real(np.einsum("kij,ij->k", A.conj(), X)) + a @ x

    def adj(y):
        return np.einsum("k,kij->ij", y, A), a.T @ y

    gram = np.real(np.einsum("kij,lij->kl", A.conj(), A)) + a @ a.T
    gram_inv = np.linalg.pinv(gram)
    X, x = np.zeros((n, n), dtype=complex), np.zeros(nx)
    S, s = np.zeros((n, n), dtype=complex), np.zeros(nx)
    scale = 1.0 + max(np.linalg.norm(b), np.linalg.norm(C), np.linalg.norm(c))
    converged = False
    for it in range(1, max_iter + 1):
        y = -gram_inv @ (mu * (op(X, x) - b) + op(S - C, s - c))
        Ay, ay = adj(y)
        V = C - Ay - mu * X
        v = c - ay - mu * x
        lam, U = np.linalg.eigh((V + V.conj().T) / 2)
        S = (U * np.clip(lam, 0, None)) @ U.conj().T
        s = np.clip(v, 0, None)
        X_new, x_new = (S - V) / mu, (s - v) / mu
        X_new = (X_new + X_new.conj().T) / 2
        pres = np.linalg.norm(op(X_new, x_new) - b) / scale
        dres = (np.linalg.norm(C - Ay - S) + np.linalg.norm(c - ay - s)) / scale
        step = (np.linalg.norm(X_new - X) + np.linalg.norm(x_new - x)) * mu
        X, x = X_new, x_new
        if it % 50 == 0:
            # keep primal and dual residuals balanced
            if pres > 10 * dres:
                mu = min(mu * 2, 1e6)
            elif dres > 10 * pres:
                mu = max(mu / 2, 1e-6)
        if max(pres, dres) < tol and step < tol * scale:
            converged = True
            break
    value = float(np.real(np.vdot(C, X)) + c @ x)
    return AdmmResult(X=X, scalar_values=x[:ns], objective_value=sign * value,
                      iterations=it, converged=converged)

