import numpy as np
import pytest
from hypothesis import given, strategies as st

from irs_rsbf import instances, oracle, rsbf, sdp
from irs_rsbf.baselines import perfect_csi_scheme
from irs_rsbf.channel import (SampleBank, SystemConfig, build_sample_bank, degenerate_uncertainty,
                              draw_channel)

from conftest import crandn


def empty_bank(N, M):
    return SampleBank(np.zeros((0, 1, N, M), dtype=complex), np.zeros((0, 1)))


def unit_w(rng, M, P=1.0):
    w = crandn(rng, M)
    return np.sqrt(P) * w / np.linalg.norm(w)


# ---------------------------------------------------------------- weights


def test_weights_single_sample(rng):
    H, bank, _ = instances.random_instance(rng, K=2, D=1)
    mu = rsbf.update_weights(unit_w(rng, 2), np.ones(4), bank)
    assert np.array_equal(mu, np.ones((2, 1)))


def test_weights_three_to_one():
    G = np.zeros((1, 2, 1, 1), dtype=complex)
    G[0, 0, 0, 0] = np.sqrt(3.0)
    G[0, 1, 0, 0] = 1.0
    mu = rsbf.update_weights(np.ones(1), np.ones(1), SampleBank(G, np.full((1, 2), 0.5)))
    assert np.allclose(mu, [[0.75, 0.25]])
    worst = rsbf.update_weights(np.ones(1), np.ones(1), SampleBank(G, np.full((1, 2), 0.5)), "worst")
    assert np.array_equal(worst, [[1.0, 0.0]])


def test_weights_zero_power_uniform():
    bank = SampleBank(np.zeros((1, 4, 2, 2), dtype=complex), np.full((1, 4), 0.25))
    assert np.allclose(rsbf.update_weights(np.ones(2), np.ones(2), bank), 0.25)


@given(st.integers(0, 10_000))
def test_weights_simplex_and_permutation(seed):
    rng = np.random.default_rng(seed)
    H, bank, _ = instances.random_instance(rng, M=3, N=4, K=2, D=5)
    w, q = unit_w(rng, 3), np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    mu = rsbf.update_weights(w, q, bank)
    assert np.all(mu >= 0) and np.allclose(mu.sum(axis=1), 1.0, atol=1e-12)
    perm = rng.permutation(5)
    mu_p = rsbf.update_weights(w, q, SampleBank(bank.samples[:, perm], bank.weights))
    assert np.allclose(mu_p, mu[:, perm], atol=1e-15)


# ---------------------------------------------------------------- w-steps


def test_w_colluding_no_eves_is_mrt(rng):
    H = crandn(rng, 4, 3)
    q = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    cfg = SystemConfig(M=3, N_az=4, N_el=1, K=0, sigma0_sq=1.0, P_max=2.0)
    w = rsbf.update_w_colluding(q, empty_bank(4, 3), H, cfg).vector
    b = q @ H
    assert np.linalg.norm(w) ** 2 == pytest.approx(2.0)
    assert abs(np.vdot(w, b.conj())) / (np.linalg.norm(w) * np.linalg.norm(b)) == pytest.approx(1.0)


def test_w_colluding_b_equals_a():
    # one Eve seeing exactly Bob's cascade: every direction gives ratio 1
    H = np.array([[1.0, 0.5], [0.2, 1.0]], dtype=complex)
    bank = SampleBank(H[None, None], np.ones((1, 1)))
    cfg = SystemConfig(M=2, N_az=2, N_el=1, K=1, sigma0_sq=1.0, P_max=3.0)
    step = rsbf.update_w_colluding(np.ones(2), bank, H, cfg)
    assert step.ratio == pytest.approx(1.0)
    assert np.linalg.norm(step.vector) ** 2 == pytest.approx(3.0)


def test_w_colluding_beats_random_search():
    rng = np.random.default_rng(11)
    for _ in range(5):
        H, bank, cfg = instances.random_instance(rng, M=2, N=4, K=2, D=2)
        q = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        step = rsbf.update_w_colluding(q, bank, H, cfg)
        _, best = oracle.random_search_w(q, H, bank.samples, bank.weights, cfg, 10**5, rng)
        assert step.ratio >= best - 1e-9


def test_w_noncolluding_single_eve_matches_closed_form():
    rng = np.random.default_rng(12)
    for _ in range(5):
        H, bank, cfg = instances.random_instance(rng, M=3, N=4, K=1, D=3)
        q = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        a = rsbf.update_w_colluding(q, bank, H, cfg).ratio
        b = rsbf.update_w_noncolluding(q, bank, H, cfg, rng).ratio
        assert b == pytest.approx(a, abs=1e-3)


def test_w_noncolluding_no_eves_is_mrt(rng):
    H = crandn(rng, 4, 3)
    q = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    cfg = SystemConfig(M=3, N_az=4, N_el=1, K=0, sigma0_sq=1.0)
    step = rsbf.update_w_noncolluding(q, empty_bank(4, 3), H, cfg, rng)
    b = q @ H
    assert step.ratio == pytest.approx(1 + np.linalg.norm(b) ** 2, rel=1e-6)


def test_w_sdp_symmetric_eves_tight(rng):
    H, bank, cfg = instances.random_instance(rng, M=3, N=4, K=1, D=2)
    q = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    rows = np.einsum("n,ktnm->ktm", q, bank.samples)
    C = np.einsum("t,tm,tl->ml", bank.weights[0], rows[0].conj(), rows[0])
    b = q @ H
    sol = sdp.solve(rsbf._w_sdp([C, C], np.outer(b.conj(), b), cfg.P_max))
    v, r = sol.scalar_values
    for _ in range(2):
        assert np.real(np.trace(C @ sol.X)) + v == pytest.approx(r, abs=1e-6)


# ---------------------------------------------------------------- q-steps


def test_q_single_element(rng):
    H = crandn(rng, 1, 2)
    cfg = SystemConfig(M=2, N_az=1, N_el=1, K=0, sigma0_sq=1.0)
    w = unit_w(rng, 2)
    for update in (rsbf.update_q_colluding, rsbf.update_q_noncolluding):
        assert np.allclose(update(w, empty_bank(1, 2), H, cfg, rng).vector, [1.0])


@given(st.integers(0, 10_000))
def test_q_no_eves_aligns_phases(seed):
    rng = np.random.default_rng(seed)
    H = crandn(rng, 5, 3)
    w = unit_w(rng, 3)
    cfg = SystemConfig(M=3, N_az=5, N_el=1, K=0, sigma0_sq=1.0)
    q = rsbf.update_q_colluding(w, empty_bank(5, 3), H, cfg, rng).vector
    a = H @ w
    aligned = np.exp(-1j * np.angle(a))
    assert abs(q @ a) == pytest.approx(abs(aligned @ a), rel=1e-6)
    assert np.allclose(np.abs(q), 1.0, atol=1e-9)


def test_q_steps_vs_phase_grid():
    rng = np.random.default_rng(13)
    for i in range(6):
        K = 1 + i % 2
        H, bank, cfg = instances.random_instance(rng, M=2, N=4, K=K, D=2)
        w = unit_w(rng, 2)
        for mode, update in ((rsbf.COLLUDING, rsbf.update_q_colluding),
                             (rsbf.NONCOLLUDING, rsbf.update_q_noncolluding)):
            step = update(w, bank, H, cfg, rng)
            q_g, v_g = oracle.grid_search_q(w, H, bank.samples, bank.weights, 16, mode)
            slack = oracle.quantization_slack(q_g, w, H, bank.samples, bank.weights, 16, mode)
            assert step.ratio >= v_g - slack
            if mode == rsbf.NONCOLLUDING and K == 2:
                assert step.ratio >= 0.95 * v_g


def test_q_noncolluding_single_eve_matches_colluding():
    rng = np.random.default_rng(14)
    for _ in range(5):
        H, bank, cfg = instances.random_instance(rng, M=2, N=4, K=1, D=2)
        w = unit_w(rng, 2)
        a = rsbf.update_q_colluding(w, bank, H, cfg, rng).ratio
        b = rsbf.update_q_noncolluding(w, bank, H, cfg, rng).ratio
        assert b == pytest.approx(a, abs=1e-3 * a)


def test_q_step_keeps_better_input(rng):
    H, bank, cfg = instances.random_instance(rng, M=2, N=4, K=2, D=2)
    w = unit_w(rng, 2)
    q_g, v_g = oracle.grid_search_q(w, H, bank.samples, bank.weights, 16)
    step = rsbf.update_q_colluding(w, bank, H, cfg, rng, q_in=q_g)
    assert step.ratio >= v_g


def test_sdr_bound_holds():
    rng = np.random.default_rng(15)
    with rsbf.step_audit() as steps:
        for i in range(8):
            H, bank, cfg = instances.random_instance(rng, M=2, N=4, K=1 + i % 2, D=2)
            w = unit_w(rng, 2)
            rsbf.update_q_colluding(w, bank, H, cfg, rng)
            rsbf.update_q_noncolluding(w, bank, H, cfg, rng)
    assert len(steps) == 16
    for s in steps:
        assert s.sdp_status == "optimal"
        assert s.sdp_bound >= s.candidate_ratio - 1e-6
        if s.rank_one:
            assert s.candidate_ratio == pytest.approx(s.sdp_bound, abs=1e-6)


# ---------------------------------------------------------------- randomization


def test_randomize_rank_one_recovers_pattern(rng):
    v = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    seen = []
    rsbf.gaussian_randomize(np.outer(v, v.conj()), lambda Q: seen.append(Q.copy()) or np.zeros(len(Q)), 20, rng)
    for q in seen[0]:
        rot = q / v
        assert np.allclose(rot, rot[0])


def test_randomize_more_trials_never_worse(rng):
    M = crandn(rng, 4, 4)
    lifted = M @ M.conj().T
    a = crandn(rng, 4)

    def f(Q):
        return np.abs(Q @ a) ** 2

    _, one = rsbf.gaussian_randomize(lifted, f, 1, np.random.default_rng(3))
    _, many = rsbf.gaussian_randomize(lifted, f, 100, np.random.default_rng(3))
    assert many >= one
    w, _ = rsbf.gaussian_randomize(lifted, f, 10, rng, kind="power", P_max=2.0)
    assert np.linalg.norm(w) ** 2 == pytest.approx(2.0)
    with pytest.raises(ValueError):
        rsbf.gaussian_randomize(lifted, f, 1, rng, kind="other")


def test_randomize_close_to_grid_optimum():
    rng = np.random.default_rng(16)
    H, bank, cfg = instances.random_instance(rng, M=2, N=3, K=1, D=2)
    w = unit_w(rng, 2)
    Hn, _ = rsbf._normalized(H, bank, 1.0)
    a = Hn @ w
    ev = np.einsum("ktnm,m->ktn", bank.samples, w)
    B2 = np.einsum("kt,ktn,ktl->nl", bank.weights, ev, ev.conj())
    sol = sdp.solve(rsbf._q_sdp_colluding(np.outer(a, a.conj()), B2))
    lifted = (sol.X / sol.scalar_values[0]).conj()
    f = rsbf._q_ratio_batch(a, ev, bank.weights, rsbf.COLLUDING)
    _, value = rsbf.gaussian_randomize(lifted, f, 500, rng)
    _, v_grid = oracle.grid_search_q(w, H, bank.samples, bank.weights, 64)
    assert value >= 0.95 * v_grid


# ---------------------------------------------------------------- full loop


def small_config(**kw):
    return SystemConfig(**{"M": 4, "N_az": 2, "N_el": 2, "D_K": 4, "eval_samples": 50, **kw})


def test_no_eves_gives_bob_rate():
    cfg = small_config(K=0)
    ch = draw_channel(cfg, np.random.default_rng(0))
    unc = degenerate_uncertainty(ch)
    for mode in (rsbf.COLLUDING, rsbf.NONCOLLUDING):
        sol = rsbf.solve(ch, unc, cfg, mode=mode, rng=np.random.default_rng(1))
        r_b = np.log2(1 + abs(sol.q @ ch.H_AB @ sol.w) ** 2 / cfg.sigma0_sq)
        assert sol.objective == pytest.approx(r_b, rel=1e-9)
        assert len(sol.inner_history[0]) <= 2


def test_degenerate_bank_matches_perfect_csi():
    cfg = small_config(D_K=1)
    ch = draw_channel(cfg, np.random.default_rng(3))
    unc = degenerate_uncertainty(ch)
    bank = build_sample_bank(unc, ch.H_AR, cfg, np.random.default_rng(0), amplitude="nominal")
    a = rsbf.solve_colluding(ch, unc, cfg, rng=np.random.default_rng(5), bank=bank)
    b = perfect_csi_scheme(ch, cfg, rng=np.random.default_rng(5))
    assert a.inner_history == b.inner_history
    assert np.allclose(a.w, b.w) and np.allclose(a.q, b.q)


def test_joint_oracle_agreement():
    rng = np.random.default_rng(17)
    for _ in range(3):
        H, bank, cfg = instances.random_instance(rng, M=2, N=2, K=1, D=2)
        sol = rsbf.alternate(H, bank, cfg, rng)
        b = bank.with_weights(sol.weights)
        _, _, v = oracle.joint_brute_force(H, b.samples, b.weights, cfg, 64, 10**4, rng)
        assert sol.objective >= v - 0.02 * abs(v)


def test_single_eve_modes_agree():
    rng = np.random.default_rng(18)
    for _ in range(3):
        H, bank, cfg = instances.random_instance(rng, M=2, N=4, K=1, D=2)
        a = rsbf.alternate(H, bank, cfg, np.random.default_rng(0), rsbf.COLLUDING)
        b = rsbf.alternate(H, bank, cfg, np.random.default_rng(0), rsbf.NONCOLLUDING)
        assert b.objective == pytest.approx(a.objective, abs=1e-3)


@given(st.integers(0, 10_000), st.sampled_from([rsbf.COLLUDING, rsbf.NONCOLLUDING]))
def test_solution_invariants(seed, mode):
    rng = np.random.default_rng(seed)
    H, bank, cfg = instances.random_instance(rng, M=3, N=4, K=2, D=3, P_max=2.0)
    sol = rsbf.alternate(H, bank, cfg, rng, mode)
    assert np.linalg.norm(sol.w) ** 2 <= cfg.P_max + 1e-9
    assert np.allclose(np.abs(sol.q), 1.0, atol=1e-9)
    for run in sol.inner_history:
        assert all(b >= a for a, b in zip(run, run[1:]))
    assert sol.status in ("converged", "iteration_capped")
    final = bank.with_weights(sol.weights)
    assert rsbf.surrogate(sol.w, sol.q, H, final, 1.0, mode) == pytest.approx(sol.objective, abs=1e-12)
    assert (rsbf.surrogate(sol.w, sol.q, H, final, 1.0, rsbf.COLLUDING)
            <= rsbf.surrogate(sol.w, sol.q, H, final, 1.0, rsbf.NONCOLLUDING) + 1e-15)


@given(st.integers(0, 10_000), st.floats(0, 2 * np.pi))
def test_global_phase_invariance(seed, theta):
    rng = np.random.default_rng(seed)
    H, bank, _ = instances.random_instance(rng, M=2, N=4, K=2, D=2)
    w, q = unit_w(rng, 2), np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    for mode in (rsbf.COLLUDING, rsbf.NONCOLLUDING):
        a = rsbf.surrogate(w, q, H, bank, 1.0, mode)
        b = rsbf.surrogate(w, np.exp(1j * theta) * q, H, bank, 1.0, mode)
        assert a == pytest.approx(b, abs=1e-10)


@given(st.integers(0, 10_000), st.floats(0.01, 100.0))
def test_scale_consistency_no_eves(seed, s):
    rng = np.random.default_rng(seed)
    H = crandn(rng, 4, 2)
    w = unit_w(rng, 2)
    cfg = SystemConfig(M=2, N_az=4, N_el=1, K=0, sigma0_sq=1.0, P_max=1.0)
    cfg_s = cfg.with_(sigma0_sq=s, P_max=s)
    q1 = rsbf.update_q_colluding(w, empty_bank(4, 2), H, cfg, np.random.default_rng(0)).vector
    q2 = rsbf.update_q_colluding(np.sqrt(s) * w, empty_bank(4, 2), H, cfg_s, np.random.default_rng(0)).vector
    a = H @ w
    assert abs(q1 @ a) == pytest.approx(abs(q2 @ a), rel=1e-6)
