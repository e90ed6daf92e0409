"""Self-checks behind ``irs-rsbf verify``.

Each check prints one ``PASS``/``FAIL`` line; the suite returns 1 if any
check fails. Output is deterministic for a fixed seed (no timings are
printed except in the full suite's budget line).
"""

import sys
import time

import numpy as np

from . import instances, oracle, rsbf, sdp
from .channel import SystemConfig, build_sample_bank, build_uncertainty, draw_channel
from .evaluation import secrecy_rates

DEFAULT_TOLERANCES = {
    "kkt": 1e-7,
    "sdp_reference": 1e-4,
    "embedding": 1e-6,
    "w_oracle": 1e-9,
    "sdr_bound": 1e-6,
    "full_solve_seconds": 60.0,
}


def _check_sdp_fixtures(rng, tol):
    E = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    fixtures = [
        (sdp.SdpProblem(np.eye(2), equalities=[sdp.Constraint(E[0], 1.0), sdp.Constraint(E[1], 1.0)]), 2.0),
        (sdp.SdpProblem(np.diag([1.0, 2.0]), equalities=[sdp.Constraint(np.eye(2), 1.0)]), 1.0),
    ]
    worst = 0.0
    for problem, value in fixtures:
        s = sdp.solve(problem)
        if not s.optimal:
            return False, f"status {s.status}"
        worst = max(worst, s.primal_residual, s.dual_residual, s.duality_gap, abs(s.objective_value - value))
    return worst <= tol["kkt"], f"worst residual {worst:.2e}"


def _check_sdp_reference(rng, tol, count):
    worst = 0.0
    for _ in range(count):
        problem = instances.random_sdp(rng)
        worst = max(worst, abs(sdp.solve(problem).objective_value - oracle.admm_solve(problem).objective_value))
    return worst <= tol["sdp_reference"], f"max |ipm - admm| {worst:.2e} over {count}"


def _check_embedding(rng, tol, count):
    worst = 0.0
    for _ in range(count):
        problem = instances.random_sdp(rng, n=3, m=3)
        worst = max(worst, abs(sdp.solve(problem, embed=True).objective_value
                               - sdp.solve(problem, embed=False).objective_value))
    return worst <= tol["embedding"], f"max |embedded - native| {worst:.2e}"


def _check_q_step(rng, tol, count):
    worst = np.inf
    for i in range(count):
        K = 1 + i % 2
        H, bank, cfg = instances.random_instance(rng, M=2, N=4, K=K, D=2)
        bank = bank.with_weights(instances.random_weights(rng, K, 2))
        w = instances.cn(rng, 2)
        w *= np.sqrt(cfg.P_max) / np.linalg.norm(w)
        for mode, update in ((rsbf.COLLUDING, rsbf.update_q_colluding),
                             (rsbf.NONCOLLUDING, rsbf.update_q_noncolluding)):
            step = update(w, bank, H, cfg, rng)
            qg, vg = oracle.grid_search_q(w, H, bank.samples, bank.weights, 16, mode)
            slack = oracle.quantization_slack(qg, w, H, bank.samples, bank.weights, 16, mode)
            worst = min(worst, step.ratio - (vg - slack))
    return worst >= 0, f"min margin over grid oracle {worst:.3e}"


def _check_w_step(rng, tol, count, draws):
    worst = np.inf
    for i in range(count):
        H, bank, cfg = instances.random_instance(rng, M=1 + i % 4, N=4, K=1 + i % 2, D=2)
        q = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        step = rsbf.update_w_colluding(q, bank, H, cfg)
        _, v = oracle.random_search_w(q, H, bank.samples, bank.weights, cfg, draws, rng)
        worst = min(worst, step.ratio - v)
    return worst >= -tol["w_oracle"], f"min closed-form margin {worst:.3e}"


def _small_channel_config(**kw):
    return SystemConfig(M=4, N_az=2, N_el=2, D_K=4, eval_samples=50, **kw)


def _check_solver_runs(rng, tol, count):
    """Monotone inner runs, SDR bounds and rate orderings on geometric channels."""
    cfg = _small_channel_config()
    bad_mono = bad_bound = bad_order = 0
    with rsbf.step_audit() as steps:
        for trial in range(count):
            ch = draw_channel(cfg, np.random.default_rng([cfg.seed, trial]))
            unc = build_uncertainty(ch, np.deg2rad(cfg.delta_angle_deg))
            bank = build_sample_bank(unc, ch.H_AR, cfg, rng)
            for mode in (rsbf.COLLUDING, rsbf.NONCOLLUDING):
                sol = rsbf.solve(ch, unc, cfg, mode=mode, rng=rng, bank=bank)
                bad_mono += sum(any(b < a for a, b in zip(run, run[1:])) for run in sol.inner_history)
                rep = secrecy_rates(sol.q, sol.w, ch.H_AB, ch.G_true, cfg.sigma0_sq)
                b = bank.with_weights(sol.weights)
                sc = rsbf.surrogate(sol.w, sol.q, ch.H_AB, b, cfg.sigma0_sq, rsbf.COLLUDING)
                si = rsbf.surrogate(sol.w, sol.q, ch.H_AB, b, cfg.sigma0_sq, rsbf.NONCOLLUDING)
                bad_order += (rep.R_E_colluding < rep.R_E_noncolluding or rep.R_s_colluding < 0
                              or rep.R_s_noncolluding < 0 or sc > si)
    for s in steps:
        if s.sdp_status == "optimal" and np.isfinite(s.sdp_bound):
            bad_bound += s.sdp_bound < s.candidate_ratio - tol["sdr_bound"]
            if s.rank_one:
                bad_bound += abs(s.sdp_bound - s.candidate_ratio) > tol["sdr_bound"]
    ok = bad_mono == 0 and bad_bound == 0 and bad_order == 0
    return ok, f"{len(steps)} steps; monotonicity {bad_mono}, sdr bound {bad_bound}, ordering {bad_order} violations"


def _check_determinism(rng, tol):
    cfg = _small_channel_config()
    out = []
    for _ in range(2):
        r = np.random.default_rng(cfg.seed)
        ch = draw_channel(cfg, r)
        unc = build_uncertainty(ch, np.deg2rad(cfg.delta_angle_deg))
        sol = rsbf.solve(ch, unc, cfg, rng=r)
        out.append(np.concatenate([sol.w, sol.q]).tobytes())
    return out[0] == out[1], "repeat solve bitwise identical" if out[0] == out[1] else "repeat solve differs"


def _check_full_size(rng, tol):
    cfg = SystemConfig()
    ch = draw_channel(cfg, np.random.default_rng(cfg.seed))
    unc = build_uncertainty(ch, np.deg2rad(cfg.delta_angle_deg))
    worst = 0.0
    for mode in (rsbf.COLLUDING, rsbf.NONCOLLUDING):
        t0 = time.perf_counter()
        rsbf.solve(ch, unc, cfg, mode=mode, rng=np.random.default_rng(1))
        worst = max(worst, time.perf_counter() - t0)
    budget = tol["full_solve_seconds"]
    return worst <= budget, f"M=16 N=16 solve within {budget:g} s budget"


def run_suite(level="quick", seed=0, tolerances=None, out=None):
    out = out or sys.stdout
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    full = level == "full"
    checks = [
        ("sdp analytic fixtures", lambda r: _check_sdp_fixtures(r, tol)),
        ("sdp vs first-order reference", lambda r: _check_sdp_reference(r, tol, 20 if full else 5)),
        ("complex embedding", lambda r: _check_embedding(r, tol, 5)),
        ("q-step vs phase grid", lambda r: _check_q_step(r, tol, 50 if full else 6)),
        ("w-step vs random search", lambda r: _check_w_step(r, tol, 50 if full else 6, 10**5 if full else 10**4)),
        ("solver invariants", lambda r: _check_solver_runs(r, tol, 6 if full else 2)),
        ("determinism", lambda r: _check_determinism(r, tol)),
    ]
    if full:
        checks.append(("full-size timing", lambda r: _check_full_size(r, tol)))
    failures = 0
    for i, (name, fn) in enumerate(checks):
        rng = np.random.default_rng([seed, i])
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # noqa: BLE001 - reported as a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=out)
    print(f"{len(checks) - failures}/{len(checks)} checks passed", file=out)
    return 1 if failures else 0
