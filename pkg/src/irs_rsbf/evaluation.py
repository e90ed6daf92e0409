"""Achievable and secrecy rates, empirical worst case and Monte Carlo sweeps."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
import math
import os
import struct

import numpy as np

from .channel import (build_uncertainty, degenerate_uncertainty, draw_channel, irs_rows,
                      sample_eve_parameters)

log = logging.getLogger(__name__)

SCHEMES = ("robust", "perfect", "average", "mrt")
SWEEP_VARIABLES = ("delta_angle", "p_max")


@dataclass
class EvaluationReport:
    R_B: float
    R_E_colluding: float
    R_E_noncolluding: float
    R_s_colluding: float
    R_s_noncolluding: float
    worst_case_R_s: float = math.nan
    per_eve_rates: list = field(default_factory=list)
    samples_used: int = 1

    def R_s(self, mode):
        return self.R_s_colluding if mode == "colluding" else self.R_s_noncolluding

    def R_E(self, mode):
        return self.R_E_colluding if mode == "colluding" else self.R_E_noncolluding


def rate(q, H, w, sigma0_sq):
    """log2(1 + |q H w|^2 / sigma0_sq)."""
    return float(np.log2(1.0 + abs(np.asarray(q) @ np.asarray(H) @ np.asarray(w)) ** 2 / sigma0_sq))


def _secrecy(r_b, eve_snr):
    """Rates from Bob's rate and per-Eve SNRs; eve_snr has Eves on the last axis."""
    per_eve = np.log2(1.0 + eve_snr)
    r_c = np.log2(1.0 + eve_snr.sum(axis=-1))
    r_i = per_eve.max(axis=-1) if eve_snr.shape[-1] else np.zeros(eve_snr.shape[:-1])
    return per_eve, r_c, r_i, np.maximum(r_b - r_c, 0.0), np.maximum(r_b - r_i, 0.0)


def secrecy_rates(q, w, H_AB, eve_cascades, sigma0_sq):
    """Bob's rate, colluding (sum) and non-colluding (max) Eve rates, clamped ASRs."""
    q = np.asarray(q)
    w = np.asarray(w)
    r_b = rate(q, H_AB, w, sigma0_sq)
    G = np.asarray(eve_cascades).reshape(-1, *np.shape(H_AB))
    snr = np.abs(np.einsum("n,knm,m->k", q, G, w)) ** 2 / sigma0_sq
    per_eve, r_c, r_i, s_c, s_i = _secrecy(r_b, snr)
    return EvaluationReport(R_B=r_b, R_E_colluding=float(r_c), R_E_noncolluding=float(r_i),
                            R_s_colluding=float(s_c), R_s_noncolluding=float(s_i),
                            worst_case_R_s=float(s_c), per_eve_rates=per_eve.tolist())


def worst_case_asr(solution, uncertainty, channel, config, rng, mode="colluding", eval_samples=None):
    """Minimum ASR over sampled Eve channels in the uncertainty set.

    Draw 0 is the nominal channel; the remaining ``eval_samples`` draws take
    uniform angles in every interval and the *upper* amplitude bound. The
    rate fields of the report belong to the minimizing draw.
    """
    S = config.eval_samples if eval_samples is None else eval_samples
    K = uncertainty.K
    amp, az, el = sample_eve_parameters(uncertainty, S, rng, amplitude="max")
    amp = np.concatenate([uncertainty.amp_nominal[:, None], amp], axis=1)
    az = np.concatenate([uncertainty.az_nominal[:, None], az], axis=1)
    el = np.concatenate([uncertainty.el_nominal[:, None], el], axis=1)
    phase = np.broadcast_to(uncertainty.phase[:, None, :], amp.shape)
    rows = irs_rows(amp, az, el, phase, config)  # K x (S+1) x N
    q, w = np.asarray(solution.q), np.asarray(solution.w)
    r_b = rate(q, channel.H_AB, w, config.sigma0_sq)
    x = channel.H_AR @ w  # N
    snr = (np.abs(rows @ (q * x)) ** 2 / config.sigma0_sq).T.reshape(S + 1, K)
    per_eve, r_c, r_i, s_c, s_i = _secrecy(r_b, snr)
    s = s_c if mode == "colluding" else s_i
    j = int(np.argmin(s))
    return EvaluationReport(R_B=r_b, R_E_colluding=float(r_c[j]), R_E_noncolluding=float(r_i[j]),
                            R_s_colluding=float(s_c[j]), R_s_noncolluding=float(s_i[j]),
                            worst_case_R_s=float(s[j]), per_eve_rates=per_eve[j].tolist(),
                            samples_used=S + 1)


# ---------------------------------------------------------------------------
# Monte Carlo


def parse_scheme(name, default_mode="colluding"):
    """``robust-colluding`` -> ("robust", "colluding"); bare names take ``default_mode``."""
    base, _, mode = name.partition("-")
    mode = mode or default_mode
    if base not in SCHEMES or mode not in ("colluding", "noncolluding"):
        raise ValueError(f"unknown scheme {name!r}")
    return base, mode


def _value_key(value):
    return int.from_bytes(struct.pack(">d", float(value)), "big")


def cell_rngs(seed, trial, value):
    """Independent streams for one (sweep value, trial) cell.

    The channel depends on the trial only, so every sweep value sees the same
    channels; the design and evaluation streams also depend on the value
    itself, never on its position in the sweep.
    """
    channel = np.random.default_rng([seed, 0, trial])
    design = np.random.default_rng([seed, 1, trial, _value_key(value)])
    evaluate = np.random.default_rng([seed, 2, trial, _value_key(value)])
    return channel, design, evaluate


def run_scheme(scheme, mode, channel, uncertainty, config, rng):
    from . import baselines, rsbf  # noqa: PLC0415

    if scheme == "robust":
        return rsbf.solve(channel, uncertainty, config, mode=mode, rng=rng)
    if scheme == "perfect":
        return baselines.perfect_csi_scheme(channel, config, mode=mode, rng=rng)
    if scheme == "average":
        return baselines.average_scheme(channel, uncertainty, config, mode=mode, rng=rng)
    return baselines.mrt_scheme(channel, config, rng=rng)


def run_cell(config, schemes, sweep_variable, value, trial, default_mode="colluding"):
    """All schemes on one channel draw; one row dict per scheme."""
    if sweep_variable == "delta_angle":
        cfg = config.with_(delta_angle_deg=float(value))
    elif sweep_variable == "p_max":
        cfg = config.with_(P_max=float(value))
    else:
        raise ValueError(f"unknown sweep variable {sweep_variable!r}")
    ch_rng, _, _ = cell_rngs(cfg.seed, trial, value)
    channel = draw_channel(cfg, ch_rng)
    unc = build_uncertainty(channel, np.deg2rad(cfg.delta_angle_deg), cfg.delta_amp_db)
    rows = []
    for name in schemes:
        scheme, mode = parse_scheme(name, default_mode)
        _, d_rng, e_rng = cell_rngs(cfg.seed, trial, value)
        row = dict(sweep_value=float(value), trial=trial, scheme=f"{scheme}-{mode}",
                   seed=cfg.seed)
        try:
            sol = run_scheme(scheme, mode, channel, unc, cfg, d_rng)
            # the perfect-CSI design knows the Eve channels exactly
            eval_set = degenerate_uncertainty(channel) if scheme == "perfect" else unc
            wc = worst_case_asr(sol, eval_set, channel, cfg, e_rng, mode)
            nom = secrecy_rates(sol.q, sol.w, channel.H_AB, channel.G_true, cfg.sigma0_sq)
            row.update(worst_case_asr=wc.worst_case_R_s, nominal_asr=nom.R_s(mode), r_b=nom.R_B,
                       r_e=nom.R_E(mode), iterations=sol.iterations, status=sol.status)
        except Exception as exc:  # noqa: BLE001 - failures are recorded per row
            log.warning("trial %d value %s scheme %s failed: %s", trial, value, name, exc)
            row.update(worst_case_asr=math.nan, nominal_asr=math.nan, r_b=math.nan, r_e=math.nan,
                       iterations=0, status="failed")
        rows.append(row)
    return rows


def _run_cell_args(args):
    return run_cell(*args)


def monte_carlo(config, schemes, sweep_variable, values, trials, default_mode="colluding", workers=1):
    """Sweep ``values`` of ``sweep_variable`` (degrees for ``delta_angle``, W for ``p_max``).

    Returns ``(rows, summary)``: ``rows`` ordered by (value, trial, scheme),
    ``summary`` maps (value, scheme) to a dict of mean/std over non-failed
    trials plus the failure count.
    """
    jobs = [(config, tuple(schemes), sweep_variable, v, t, default_mode)
            for v in values for t in range(trials)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_args, jobs, chunksize=1))
    else:
        results = [_run_cell_args(j) for j in jobs]
    rows = [r for cell in results for r in cell]
    summary = summarize(rows)
    return rows, summary


def summarize(rows):
    out = {}
    keys = sorted({(r["sweep_value"], r["scheme"]) for r in rows},
                  key=lambda k: (k[0], [r["scheme"] for r in rows].index(k[1])))
    for key in keys:
        sel = [r for r in rows if (r["sweep_value"], r["scheme"]) == key]
        ok = [r for r in sel if r["status"] != "failed"]
        stats = {"n": len(ok), "failed": len(sel) - len(ok)}
        for col in ("worst_case_asr", "nominal_asr", "r_b", "r_e", "iterations"):
            vals = np.array([r[col] for r in ok], dtype=float)
            stats[col] = float(vals.mean()) if vals.size else math.nan
            stats[col + "_std"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        out[key] = stats
    return out


def default_workers():
    return os.cpu_count() or 1
