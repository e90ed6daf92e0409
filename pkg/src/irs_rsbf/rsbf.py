"""Robust secure beamforming by alternating optimization.

Two problem variants share one loop skeleton:

* colluding Eves: maximize ``(|q H_AB w|^2 + s2) / (sum_k sum_t mu_kt |q G_kt w|^2 + s2)``;
  the w-step is a generalized Rayleigh quotient, the q-step a
  Charnes-Cooper SDP relaxation.
* non-colluding Eves: maximize ``min_k (|q H_AB w|^2 + s2) / (sum_t mu_kt |q G_kt w|^2 + s2)``;
  both steps are SDP relaxations.

All internal arithmetic is done on channels normalized by the noise standard
deviation so that the SDPs are well scaled; reported objectives are in
bits/s/Hz.
"""

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
import logging
from typing import NamedTuple

import numpy as np

from . import sdp
from .channel import build_sample_bank
from .numerics import dominant_rank_one, eig_ratio, generalized_rayleigh_max, hermitize

log = logging.getLogger(__name__)

COLLUDING = "colluding"
NONCOLLUDING = "noncolluding"

_audit = ContextVar("rsbf_step_audit", default=None)


@dataclass
class BeamformingSolution:
    w: np.ndarray
    q: np.ndarray
    objective: float
    inner_history: list = field(default_factory=list)  # one non-decreasing run per outer iteration
    outer_history: list = field(default_factory=list)
    status: str = "converged"
    mode: str = COLLUDING
    sdp_failures: int = 0
    weights: np.ndarray = None  # final sample weights (K x D_K)

    @property
    def iterations(self):
        return sum(len(run) for run in self.inner_history)


class StepResult(NamedTuple):
    vector: np.ndarray
    ratio: float  # fractional objective of the returned vector
    sdp_bound: float  # relaxed optimum of the same ratio (nan if no SDP)
    rank_one: bool
    sdp_status: str
    kind: str
    candidate_ratio: float  # ratio of the vector recovered from the SDP


@contextmanager
def step_audit():
    """Collect every :class:`StepResult` produced inside the block."""
    records = []
    token = _audit.set(records)
    try:
        yield records
    finally:
        _audit.reset(token)


def _record(step):
    records = _audit.get()
    if records is not None:
        records.append(step)
    return step


# ---------------------------------------------------------------------------
# objectives


def colluding_ratio(w, q, H_AB, bank, sigma0_sq):
    sig = abs(q @ H_AB @ w) ** 2
    eve = 0.0
    if bank.K:
        eve = float(np.sum(bank.weights * np.abs(np.einsum("n,ktnm,m->kt", q, bank.samples, w)) ** 2))
    return (sig + sigma0_sq) / (eve + sigma0_sq)


def noncolluding_ratio(w, q, H_AB, bank, sigma0_sq):
    sig = abs(q @ H_AB @ w) ** 2
    if not bank.K:
        return (sig + sigma0_sq) / sigma0_sq
    eve = np.sum(bank.weights * np.abs(np.einsum("n,ktnm,m->kt", q, bank.samples, w)) ** 2, axis=1)
    return float(np.min((sig + sigma0_sq) / (eve + sigma0_sq)))


def surrogate(w, q, H_AB, bank, sigma0_sq, mode=COLLUDING):
    """log2 of the fractional objective being maximized."""
    f = colluding_ratio if mode == COLLUDING else noncolluding_ratio
    return float(np.log2(f(w, q, H_AB, bank, sigma0_sq)))


# ---------------------------------------------------------------------------
# weights


def update_weights(w, q, bank, mode="proportional"):
    """Per-Eve sample weights from the received wiretap powers.

    ``proportional``: mu_kt proportional to |q G_kt w|^2.
    ``worst``: all mass on the strongest sample (lowest index on ties).
    Zero power at every sample of an Eve gives uniform weights.
    """
    if not bank.K:
        return bank.weights.copy()
    p = np.abs(np.einsum("n,ktnm,m->kt", q, bank.samples, w)) ** 2
    mu = np.empty_like(p)
    for k in range(bank.K):
        tot = p[k].sum()
        if tot <= 0 or not np.isfinite(tot):
            mu[k] = 1.0 / bank.D
        elif mode == "worst":
            mu[k] = 0.0
            mu[k, int(np.argmax(p[k]))] = 1.0
        else:
            mu[k] = p[k] / tot
            mu[k] /= mu[k].sum()
    return mu


# ---------------------------------------------------------------------------
# randomization


def gaussian_randomize(lifted, evaluator, trials, rng, kind="phase", P_max=None):
    """Best of ``trials`` Gaussian draws r ~ CN(0, lifted).

    ``kind="phase"`` maps every entry to unit modulus, ``kind="power"`` scales
    the draw to squared norm ``P_max``. ``evaluator`` takes a batch
    (trials x n) and returns one score per row.

    Returns ``(vector, score)``.
    """
    lifted = hermitize(lifted, check=False)
    lam, V = np.linalg.eigh(lifted)
    root = V * np.sqrt(np.clip(lam, 0, None))[None, :]
    n = lifted.shape[0]
    z = (rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n))) / np.sqrt(2)
    r = z @ root.T
    if kind == "phase":
        cand = np.exp(1j * np.angle(r))
        cand[np.abs(r) == 0] = 1.0
    elif kind == "power":
        nrm = np.linalg.norm(r, axis=1, keepdims=True)
        nrm[nrm == 0] = 1.0
        cand = np.sqrt(P_max) * r / nrm
    else:
        raise ValueError(f"unknown kind {kind!r}")
    scores = np.asarray(evaluator(cand), dtype=float)
    best = int(np.argmax(scores))
    return cand[best], float(scores[best])


def _unit_modulus(v):
    q = np.exp(1j * np.angle(v))
    q[np.abs(v) == 0] = 1.0
    return q


def _pick(scores):
    """Index of the best candidate; earlier ones (the incumbent) win ties."""
    return int(np.argmax(scores))


# ---------------------------------------------------------------------------
# assembly helpers (noise-normalized)


def _normalized(H_AB, bank, sigma0_sq):
    s = 1.0 / np.sqrt(sigma0_sq)
    return H_AB * s, bank.samples * s


def _q_ratio_batch(a, eve_vecs, mu, mode):
    """Fractional q-objective for a batch of q rows; noise normalized to 1.

    a : (N,) = H_AB w;  eve_vecs : (K, D, N) = G_kt w.
    """
    def f(Q):
        Q = np.atleast_2d(Q)
        num = np.abs(Q @ a) ** 2 + 1.0
        if eve_vecs.shape[0] == 0:
            return num
        e = np.abs(np.einsum("cn,ktn->ckt", Q, eve_vecs)) ** 2
        den = np.einsum("ckt,kt->ck", e, mu)
        if mode == COLLUDING:
            return num / (den.sum(axis=1) + 1.0)
        return np.min(num[:, None] / (den + 1.0), axis=1)
    return f


def _w_ratio_batch(b, eve_rows, mu, mode):
    """Fractional w-objective for a batch of w rows.

    b : (M,) = q H_AB;  eve_rows : (K, D, M) = q G_kt.
    """
    def f(W):
        W = np.atleast_2d(W)
        num = np.abs(W @ b) ** 2 + 1.0
        if eve_rows.shape[0] == 0:
            return num
        e = np.abs(np.einsum("cm,ktm->ckt", W, eve_rows)) ** 2
        den = np.einsum("ckt,kt->ck", e, mu)
        if mode == COLLUDING:
            return num / (den.sum(axis=1) + 1.0)
        return np.min(num[:, None] / (den + 1.0), axis=1)
    return f


def selector(n, N):
    """E_n: single unit entry at (n, n)."""
    E = np.zeros((N, N))
    E[n, n] = 1.0
    return E


# ---------------------------------------------------------------------------
# w-steps


def update_w_colluding(q, bank, H_AB, config, w_in=None):
    """Closed-form w for fixed q and weights (generalized Rayleigh quotient)."""
    Hn, Gn = _normalized(H_AB, bank, config.sigma0_sq)
    b = q @ Hn
    rows = np.einsum("n,ktnm->ktm", q, Gn)
    M = Hn.shape[1]
    A1 = np.einsum("kt,ktm,ktl->ml", bank.weights, rows.conj(), rows) if bank.K else np.zeros((M, M))
    B1 = np.outer(b.conj(), b)
    tau = 1.0 / config.P_max
    x, _ = generalized_rayleigh_max(hermitize(A1, check=False) + tau * np.eye(M),
                                    hermitize(B1, check=False) + tau * np.eye(M))
    w = np.sqrt(config.P_max) * x
    f = _w_ratio_batch(b, rows, bank.weights, COLLUDING)
    cands = [w] if w_in is None else [w_in, w]
    scores = f(np.array(cands))
    best = _pick(scores)
    step = StepResult(cands[best], float(scores[best]), np.nan, True, "closed_form", "w_colluding",
                      float(scores[-1]))
    return _record(step)


def _w_sdp(C_list, A3, P_max):
    """min r  s.t. tr(C_k X) + v <= r, tr(A3 X) + v >= 1, tr X <= v P_max."""
    M = A3.shape[0]
    if not C_list:
        C_list = [np.zeros((M, M))]
    ineq = [sdp.Constraint(C, 0.0, np.array([1.0, -1.0])) for C in C_list]
    ineq.append(sdp.Constraint(-A3, -1.0, np.array([-1.0, 0.0])))
    ineq.append(sdp.Constraint(np.eye(M), 0.0, np.array([-P_max, 0.0])))
    return sdp.SdpProblem(objective=np.zeros((M, M), dtype=complex), sense="minimize",
                          inequalities=ineq, n_scalars=2, objective_scalars=np.array([0.0, 1.0]))


def update_w_noncolluding(q, bank, H_AB, config, rng, w_in=None):
    """SDR w-step for the max-min objective."""
    Hn, Gn = _normalized(H_AB, bank, config.sigma0_sq)
    b = q @ Hn
    rows = np.einsum("n,ktnm->ktm", q, Gn)
    C_list = [np.einsum("t,tm,tl->ml", bank.weights[k], rows[k].conj(), rows[k]) for k in range(bank.K)]
    A3 = np.outer(b.conj(), b)
    sol = sdp.solve(_w_sdp(C_list, A3, config.P_max))
    f = _w_ratio_batch(b, rows, bank.weights, NONCOLLUDING)
    cands = [] if w_in is None else [w_in]
    rank_one, bound, cand_ratio = False, np.nan, np.nan
    if sol.optimal and sol.scalar_values[0] > 0:
        W = sol.X / sol.scalar_values[0]
        bound = 1.0 / sol.objective_value if sol.objective_value > 0 else np.inf
        rank_one = eig_ratio(W) <= sdp.RANK_ONE_RATIO
        principal, _ = dominant_rank_one(W)
        nrm = np.linalg.norm(principal)
        if rank_one:
            # keep the SDP's power unless it exceeds the budget through round-off
            cand = principal if nrm ** 2 <= config.P_max else principal * np.sqrt(config.P_max) / nrm
        else:
            cand, _ = gaussian_randomize(W, f, config.rand_trials, rng, kind="power", P_max=config.P_max)
            cands.append(np.sqrt(config.P_max) * principal / nrm if nrm > 0 else principal)
        cand_ratio = float(f(cand)[0])
        cands.append(cand)
    elif not cands:
        cands.append(np.sqrt(config.P_max) * b.conj() / max(np.linalg.norm(b), 1e-300))
    scores = f(np.array(cands))
    best = _pick(scores)
    return _record(StepResult(cands[best], float(scores[best]), bound, rank_one, sol.status,
                              "w_noncolluding", cand_ratio))


# ---------------------------------------------------------------------------
# q-steps


def _q_sdp_colluding(A2, B2):
    """Charnes-Cooper form: max tr(A2 Q2) + s  s.t. tr(B2 Q2) + s = 1, diag(Q2) = s."""
    N = A2.shape[0]
    eq = [sdp.Constraint(B2, 1.0, np.array([1.0]))]
    eq += [sdp.Constraint(selector(n, N), 0.0, np.array([-1.0])) for n in range(N)]
    return sdp.SdpProblem(objective=A2, sense="maximize", equalities=eq, n_scalars=1,
                          objective_scalars=np.array([1.0]))


def _q_sdp_noncolluding(F_list, A2):
    """min r'  s.t. tr(F_k S) + v' <= r', tr(A2 S) + v' >= 1, diag(S) = v'."""
    N = A2.shape[0]
    if not F_list:
        F_list = [np.zeros((N, N))]
    ineq = [sdp.Constraint(F, 0.0, np.array([1.0, -1.0])) for F in F_list]
    ineq.append(sdp.Constraint(-A2, -1.0, np.array([-1.0, 0.0])))
    eq = [sdp.Constraint(selector(n, N), 0.0, np.array([-1.0, 0.0])) for n in range(N)]
    return sdp.SdpProblem(objective=np.zeros((N, N), dtype=complex), sense="minimize",
                          equalities=eq, inequalities=ineq, n_scalars=2,
                          objective_scalars=np.array([0.0, 1.0]))


def _q_step(A2, B2_or_F, a, eve_vecs, mu, config, rng, q_in, mode):
    N = A2.shape[0]
    f = _q_ratio_batch(a, eve_vecs, mu, mode)
    if mode == COLLUDING:
        sol = sdp.solve(_q_sdp_colluding(A2, B2_or_F))
    else:
        sol = sdp.solve(_q_sdp_noncolluding(B2_or_F, A2))
    cands = [] if q_in is None else [np.asarray(q_in, dtype=complex)]
    rank_one, bound, cand_ratio = False, np.nan, np.nan
    scale = sol.scalar_values[0] if sol.scalar_values.size else 0.0
    if sol.optimal and scale > 0:
        Q1 = sol.X / scale
        if mode == COLLUDING:
            bound = sol.objective_value
        else:
            bound = 1.0 / sol.objective_value if sol.objective_value > 0 else np.inf
        # Q1 lifts q^H q, so q itself is the dominant direction of conj(Q1)
        Qt = Q1.conj()
        rank_one = eig_ratio(Qt) <= sdp.RANK_ONE_RATIO
        principal, _ = dominant_rank_one(Qt)
        if rank_one:
            cand = _unit_modulus(principal)
        else:
            cand, _ = gaussian_randomize(Qt, f, config.rand_trials, rng, kind="phase")
            cands.append(_unit_modulus(principal))
        cand_ratio = float(f(cand)[0])
        cands.append(cand)
    elif not cands:
        cands.append(np.ones(N, dtype=complex))
    scores = f(np.array(cands))
    best = _pick(scores)
    return _record(StepResult(cands[best], float(scores[best]), bound, rank_one, sol.status,
                              f"q_{mode}", cand_ratio))


def update_q_colluding(w, bank, H_AB, config, rng, q_in=None):
    """SDR q-step for the colluding objective (best of input and recovered q)."""
    Hn, Gn = _normalized(H_AB, bank, config.sigma0_sq)
    a = Hn @ w
    ev = np.einsum("ktnm,m->ktn", Gn, w)
    A2 = np.outer(a, a.conj())
    N = a.size
    B2 = np.einsum("kt,ktn,ktl->nl", bank.weights, ev, ev.conj()) if bank.K else np.zeros((N, N))
    return _q_step(A2, B2, a, ev, bank.weights, config, rng, q_in, COLLUDING)


def update_q_noncolluding(w, bank, H_AB, config, rng, q_in=None):
    """SDR q-step for the max-min objective."""
    Hn, Gn = _normalized(H_AB, bank, config.sigma0_sq)
    a = Hn @ w
    ev = np.einsum("ktnm,m->ktn", Gn, w)
    A2 = np.outer(a, a.conj())
    F_list = [np.einsum("t,tn,tl->nl", bank.weights[k], ev[k], ev[k].conj()) for k in range(bank.K)]
    return _q_step(A2, F_list, a, ev, bank.weights, config, rng, q_in, NONCOLLUDING)


# ---------------------------------------------------------------------------
# alternating loop


def initial_point(H_AB, config):
    """Starting (w, q).

    w is the conjugated, power-scaled first row of the cascade. q co-phases
    the IRS elements for Bob under that w instead of starting from all ones:
    with q = 1 the reflected signal adds up incoherently at Bob, and whenever
    the Eves then receive more power the first w-step switches the useful
    signal off and the iteration never leaves that point. The loop in
    :func:`alternate` additionally refines this q with one q-step before the
    first w-step.
    """
    row = H_AB[0]
    nrm = np.linalg.norm(row)
    if nrm == 0:
        w = np.full(H_AB.shape[1], np.sqrt(config.P_max / H_AB.shape[1]), dtype=complex)
    else:
        w = np.sqrt(config.P_max) * row.conj() / nrm
    q = _unit_modulus((H_AB @ w).conj())
    return w, q


def alternate(H_AB, bank, config, rng, mode=COLLUDING):
    """Two-layer loop: outer weight updates, inner w/q alternation.

    Both layers stop when consecutive objective values (bits/s/Hz) differ by
    at most ``config.epsilon``; the inner loop compares against the last
    inner value, carried across outer iterations.
    """
    w, q = initial_point(H_AB, config)
    q_step = update_q_colluding if mode == COLLUDING else update_q_noncolluding
    # one Eve-aware q-step before the first w-step; see initial_point
    q = q_step(w, bank, H_AB, config, rng, q_in=q).vector
    ratio = colluding_ratio if mode == COLLUDING else noncolluding_ratio
    r_in_prev = 0.0
    r_out_prev = 0.0
    inner_hist, outer_hist = [], []
    status = "iteration_capped"
    failures = 0
    for _ in range(config.outer_max):
        bank = bank.with_weights(update_weights(w, q, bank, config.weight_mode))
        run = []
        inner_done = False
        for _ in range(config.inner_max):
            if mode == COLLUDING:
                ws = update_w_colluding(q, bank, H_AB, config, w_in=w)
                w = ws.vector
                qs = update_q_colluding(w, bank, H_AB, config, rng, q_in=q)
            else:
                ws = update_w_noncolluding(q, bank, H_AB, config, rng, w_in=w)
                w = ws.vector
                qs = update_q_noncolluding(w, bank, H_AB, config, rng, q_in=q)
            failures += (ws.sdp_status not in ("optimal", "closed_form")) + (qs.sdp_status != "optimal")
            q = qs.vector
            r = float(np.log2(ratio(w, q, H_AB, bank, config.sigma0_sq)))
            run.append(r)
            converged = abs(r - r_in_prev) <= config.epsilon
            r_in_prev = r
            if converged:
                inner_done = True
                break
        inner_hist.append(run)
        r_out = run[-1]
        outer_hist.append(r_out)
        if inner_done and abs(r_out - r_out_prev) <= config.epsilon:
            status = "converged"
            break
        r_out_prev = r_out
    if failures:
        log.info("%d SDP steps did not reach optimality; incumbents kept", failures)
    return BeamformingSolution(w=w, q=q, objective=outer_hist[-1], inner_history=inner_hist,
                               outer_history=outer_hist, status=status, mode=mode,
                               sdp_failures=failures, weights=bank.weights)


def _rng(config, rng):
    return rng if rng is not None else np.random.default_rng(config.seed)


def solve_colluding(channel, uncertainty, config, rng=None, bank=None):
    """Robust design against colluding Eves."""
    rng = _rng(config, rng)
    if bank is None:
        bank = build_sample_bank(uncertainty, channel.H_AR, config, rng)
    return alternate(channel.H_AB, bank, config, rng, COLLUDING)


def solve_noncolluding(channel, uncertainty, config, rng=None, bank=None):
    """Robust design against non-colluding Eves."""
    rng = _rng(config, rng)
    if bank is None:
        bank = build_sample_bank(uncertainty, channel.H_AR, config, rng)
    return alternate(channel.H_AB, bank, config, rng, NONCOLLUDING)


def solve(channel, uncertainty, config, mode=COLLUDING, rng=None, bank=None):
    fn = solve_colluding if mode == COLLUDING else solve_noncolluding
    return fn(channel, uncertainty, config, rng=rng, bank=bank)
