import numpy as np
import pytest

from irs_rsbf import instances, oracle

from conftest import crandn


def test_grid_single_element(rng):
    H = crandn(rng, 1, 2)
    q, v = oracle.grid_search_q(np.ones(2), H, np.zeros((0, 1, 2)), None, 8)
    assert np.array_equal(q, [1.0])
    assert v == pytest.approx(1 + abs(H @ np.ones(2))[0] ** 2)


def test_grid_guard():
    with pytest.raises(ValueError):
        next(oracle.phase_grid(4, 7))
    with pytest.raises(ValueError):
        next(oracle.phase_grid(64, 5))


def test_grid_enumerates_everything():
    Q = np.concatenate(list(oracle.phase_grid(4, 3)))
    assert Q.shape == (16, 3)
    assert len({tuple(np.round(r, 12)) for r in Q}) == 16


def test_grid_two_elements_alignment(rng):
    H = crandn(rng, 2, 2)
    w = crandn(rng, 2)
    a = H @ w
    q, v = oracle.grid_search_q(w, H, np.zeros((0, 2, 2)), None, 4)
    exact = 1 + (np.abs(a).sum()) ** 2
    # worst misalignment on a 4-level grid is pi/4
    assert exact * (1 + np.cos(np.pi / 4)) / 2 - 1 <= v <= exact + 1e-12


def test_grid_global_phase_rotation(rng):
    H, bank, _ = instances.random_instance(rng, M=2, N=3, K=2, D=2)
    w = crandn(rng, 2)
    _, v = oracle.grid_search_q(w, H, bank.samples, bank.weights, 8)
    rot = np.exp(1j * 0.7)
    _, v_rot = oracle.grid_search_q(w, rot * H, rot * bank.samples, bank.weights, 8)
    assert v_rot == pytest.approx(v, rel=1e-12)


def test_slack_zero_at_constant_objective(rng):
    H = crandn(rng, 1, 2)
    assert oracle.quantization_slack(np.ones(1, dtype=complex), np.ones(2), H,
                                     np.zeros((0, 1, 2)), None, 16) == pytest.approx(0.0, abs=1e-12)


def test_random_search_reproducible_and_nested(rng):
    H, bank, cfg = instances.random_instance(rng, M=3, N=4, K=1, D=2, P_max=2.0)
    q = np.ones(4)
    a = oracle.random_search_w(q, H, bank.samples, bank.weights, cfg, 1, np.random.default_rng(4))
    b = oracle.random_search_w(q, H, bank.samples, bank.weights, cfg, 1, np.random.default_rng(4))
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]
    assert np.linalg.norm(a[0]) ** 2 == pytest.approx(2.0)
    prev = -np.inf
    for draws in (10, 20, 40, 80, 160):
        _, v = oracle.random_search_w(q, H, bank.samples, bank.weights, cfg, draws, np.random.default_rng(4))
        assert v >= prev
        prev = v


def test_joint_brute_force_nested_and_reproducible(rng):
    H, bank, cfg = instances.random_instance(rng, M=2, N=2, K=1, D=2)
    a = oracle.joint_brute_force(H, bank.samples, bank.weights, cfg, 8, 200, np.random.default_rng(1))
    b = oracle.joint_brute_force(H, bank.samples, bank.weights, cfg, 8, 200, np.random.default_rng(1))
    assert a[2] == b[2] and np.array_equal(a[0], b[0])
    more_draws = oracle.joint_brute_force(H, bank.samples, bank.weights, cfg, 8, 400, np.random.default_rng(1))
    finer = oracle.joint_brute_force(H, bank.samples, bank.weights, cfg, 16, 200, np.random.default_rng(1))
    assert more_draws[2] >= a[2]
    # the 16-level grid contains the 8-level grid
    assert finer[2] >= a[2]


def test_objectives_match_direct_formula(rng):
    H, bank, _ = instances.random_instance(rng, M=2, N=3, K=2, D=3)
    w, q = crandn(rng, 2), np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
    e = np.array([[abs(q @ bank.samples[k, t] @ w) ** 2 for t in range(3)] for k in range(2)])
    per = (e * bank.weights).sum(axis=1)
    num = 1 + abs(q @ H @ w) ** 2
    for fn, x, y in ((oracle.q_objective, q, w), (oracle.w_objective, w, q)):
        assert fn(x, y, H, bank.samples, bank.weights)[0] == pytest.approx(num / (1 + per.sum()))
        assert fn(x, y, H, bank.samples, bank.weights, mode="noncolluding")[0] == \
            pytest.approx(min(num / (1 + per)))


def test_sphere_draws_on_sphere(rng):
    W = oracle.sphere_draws(rng, 100, 3, 4.0)
    assert np.allclose(np.linalg.norm(W, axis=1), 2.0)
