"""Comparison schemes: MRT, perfect Eve CSI and average-AoA designs."""

import numpy as np

from . import rsbf, sdp
from .channel import irs_rows, single_sample_bank
from .numerics import dominant_rank_one, eig_ratio
from .rsbf import COLLUDING, BeamformingSolution


def mrt_scheme(channel, config, rng=None):
    """Eve-agnostic design.

    q maximizes ||q H_AB||^2 through the same SDR machinery as the robust
    q-step (no Eve term), then w is matched to the effective channel.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    Hn = channel.H_AB / np.sqrt(config.sigma0_sq)
    N = Hn.shape[0]
    A = Hn @ Hn.conj().T
    problem = rsbf._q_sdp_colluding(A, np.zeros((N, N)))
    sol = sdp.solve(problem)

    def gain(Q):
        return np.linalg.norm(np.atleast_2d(Q) @ Hn, axis=1) ** 2

    cands = [np.ones(N, dtype=complex)]
    if sol.optimal and sol.scalar_values[0] > 0:
        Qt = (sol.X / sol.scalar_values[0]).conj()
        principal, _ = dominant_rank_one(Qt)
        cands.append(rsbf._unit_modulus(principal))
        if eig_ratio(Qt) > sdp.RANK_ONE_RATIO:
            cands.append(rsbf.gaussian_randomize(Qt, gain, config.rand_trials, rng)[0])
    q = cands[int(np.argmax(gain(np.array(cands))))]
    eff = q @ channel.H_AB
    nrm = np.linalg.norm(eff)
    w = np.sqrt(config.P_max) * (eff.conj() / nrm if nrm > 0 else np.ones_like(eff) / np.sqrt(eff.size))
    r_b = float(np.log2(1 + abs(eff @ w) ** 2 / config.sigma0_sq))
    return BeamformingSolution(w=w, q=q, objective=r_b, inner_history=[[r_b]], outer_history=[r_b],
                               status="converged" if sol.optimal else "iteration_capped",
                               mode="mrt", sdp_failures=int(not sol.optimal))


def perfect_csi_scheme(channel, config, mode=COLLUDING, rng=None):
    """Alternating design with the true Eve cascades as a one-sample bank."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    bank = single_sample_bank(channel.G_true)
    return rsbf.alternate(channel.H_AB, bank, config, rng, mode)


def average_bank(channel, uncertainty, config):
    """One sample per Eve at the interval midpoints, nominal amplitude."""
    mid = uncertainty.midpoint()
    rows = irs_rows(mid.amp_lo, mid.az_lo, mid.el_lo, mid.phase, config)
    return single_sample_bank(rows[:, :, None] * channel.H_AR[None, :, :])


def average_scheme(channel, uncertainty, config, mode=COLLUDING, rng=None):
    """Non-robust design for the average Eve angles."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    return rsbf.alternate(channel.H_AB, average_bank(channel, uncertainty, config), config, rng, mode)
