"""Command line entry point: ``run``, ``solve-once`` and ``verify``.

Experiments are described by an INI file; every key is optional and an
empty file reproduces the built-in defaults::

    [system]       M, N_az, N_el, K, L, P_max, sigma0_sq, varsigma0, c_los,
                   c_nlos, wavelength, d0, nlos_spread_deg
    [geometry]     alice, irs, bob (x, y, z), eve_centers (x, y, z; x, y, z),
                   eve_region_radius
    [uncertainty]  delta_angle_deg, delta_amp_db, D_K, sample_amplitude
    [algorithm]    epsilon, rand_trials, inner_max, outer_max, weight_mode
    [evaluation]   eval_samples
    [experiment]   schemes, mode, sweep_variable, values, trials, seed,
                   output, emit_plot_script, workers
"""

import argparse
import configparser
import csv
from dataclasses import dataclass, field, fields
import io as _io
import logging
import math
import os
from pathlib import Path
import re
import sys
import time

import numpy as np

from . import __version__, sdp
from .channel import SystemConfig, build_uncertainty, degenerate_uncertainty, draw_channel
from .evaluation import (SWEEP_VARIABLES, cell_rngs, default_workers, monte_carlo, parse_scheme,
                         run_scheme, secrecy_rates, worst_case_asr)
from .io import config_hash, load_run, save_run

log = logging.getLogger(__name__)

CONFIG_ENV = "IRS_RSBF_CONFIG"
CSV_COLUMNS = ("sweep_value", "trial", "scheme", "worst_case_asr", "nominal_asr", "r_b", "r_e",
               "iterations", "status", "seed")

SECTIONS = {
    "system": ("M", "N_az", "N_el", "K", "L", "P_max", "sigma0_sq", "varsigma0", "c_los", "c_nlos",
               "wavelength", "d0", "nlos_spread_deg"),
    "geometry": ("alice", "irs", "bob", "eve_centers", "eve_region_radius"),
    "uncertainty": ("delta_angle_deg", "delta_amp_db", "D_K", "sample_amplitude"),
    "algorithm": ("epsilon", "rand_trials", "inner_max", "outer_max", "weight_mode"),
    "evaluation": ("eval_samples",),
    "experiment": ("schemes", "mode", "sweep_variable", "values", "trials", "seed", "output",
                   "emit_plot_script", "workers"),
}

FIG3_VALUES = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)


class ConfigError(ValueError):
    """Invalid experiment file; ``str()`` reads ``path:line: message``."""


@dataclass
class ExperimentSpec:
    base: SystemConfig = field(default_factory=SystemConfig)
    schemes: tuple = ("robust-colluding",)
    mode: str = "colluding"
    sweep_variable: str = "delta_angle"
    values: tuple = FIG3_VALUES
    trials: int = 100
    output: str = "results.csv"
    emit_plot_script: bool = False
    workers: int = 0  # 0: one per core

    def __post_init__(self):
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ValueError(f"sweep_variable must be one of {', '.join(SWEEP_VARIABLES)}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.mode not in ("colluding", "noncolluding"):
            raise ValueError("mode must be 'colluding' or 'noncolluding'")
        for name in self.schemes:
            parse_scheme(name, self.mode)

    @property
    def scheme_names(self):
        return tuple("-".join(parse_scheme(s, self.mode)) for s in self.schemes)


# ---------------------------------------------------------------------------
# config files


def _key_lines(text):
    """(section, key) -> 1-based line number of its assignment."""
    lines, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), no)
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            lines[(section, m.group(1).strip().lower())] = no
    return lines


def _parse_vector(text, dims=3):
    vals = tuple(float(x) for x in text.replace("(", "").replace(")", "").split(","))
    if len(vals) != dims:
        raise ValueError(f"expected {dims} comma-separated numbers")
    return vals


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


_CONFIG_TYPES = {f.name: f for f in fields(SystemConfig)}


def _parse_config_value(key, text):
    if key in ("alice", "irs", "bob"):
        return _parse_vector(text)
    if key == "eve_centers":
        parts = [p for p in text.split(";") if p.strip()]
        return tuple(_parse_vector(p) for p in parts)
    default = _CONFIG_TYPES[key].default
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, str):
        return text.strip()
    if key == "d0" and text.strip().lower() in ("", "none", "auto"):
        return None
    return float(text)


def parse_spec(text, path="<config>"):
    """Build an :class:`ExperimentSpec` from INI text; errors name the offending line."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str.lower
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"{path}:{line or 1}: {exc.message if hasattr(exc, 'message') else exc}") from None
    lines = _key_lines(text)

    def fail(section, key, msg):
        no = lines.get((section, key)) or lines.get((section, None)) or 1
        raise ConfigError(f"{path}:{no}: {msg}")

    lower = {k.lower(): k for k in _CONFIG_TYPES}
    cfg_kw, exp_kw = {}, {}
    for section in parser.sections():
        if section not in SECTIONS:
            fail(section, None, f"unknown section [{section}]")
        allowed = {k.lower(): k for k in SECTIONS[section]}
        for key, raw in parser.items(section):
            if key not in allowed:
                fail(section, key, f"unknown key '{key}' in [{section}]")
            name = allowed[key]
            try:
                if section == "experiment":
                    exp_kw[name] = _parse_experiment_value(name, raw)
                else:
                    cfg_kw[lower[key]] = _parse_config_value(lower[key], raw)
            except ValueError as exc:
                fail(section, key, f"bad value for '{key}': {exc}")
    where = {k.lower(): s for s, ks in SECTIONS.items() for k in ks}
    seed = exp_kw.pop("seed", None)
    if seed is not None:
        cfg_kw["seed"] = seed
    try:
        base = SystemConfig(**cfg_kw)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in cfg_kw if re.search(rf"\b{re.escape(k)}\b", msg)), None)
        sec = where.get(key.lower()) if key else None
        fail(sec, key.lower() if key else None, msg)
    try:
        return ExperimentSpec(base=base, **exp_kw)
    except ValueError as exc:
        msg = str(exc)
        hints = {"schemes": "scheme", "values": "sweep values", "sweep_variable": "sweep_variable",
                 "trials": "trials", "mode": "mode"}
        key = next((k for k, h in hints.items() if k in exp_kw and h in msg), None)
        fail("experiment", key, msg)


def _parse_experiment_value(name, raw):
    if name == "schemes":
        return tuple(s.strip() for s in raw.split(",") if s.strip())
    if name == "values":
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if name in ("trials", "seed", "workers"):
        v = int(raw)
        if v < 0:
            raise ValueError("must be nonnegative")
        return v
    if name == "emit_plot_script":
        return _parse_bool(raw)
    return raw.strip()


def load_spec(path=None):
    """Read the experiment file at ``path``, or at ``$IRS_RSBF_CONFIG``, or use defaults."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return ExperimentSpec()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}:0: cannot read config: {exc.strerror}") from None
    return parse_spec(text, path)


# ---------------------------------------------------------------------------
# CSV output


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def render_csv(spec, rows, summary):
    """CSV text: metadata comment, header, data rows by (value, trial), then summary rows."""
    buf = _io.StringIO()
    buf.write(f"# irs_rsbf {__version__} config_hash={config_hash(spec.base)} "
              f"sweep={spec.sweep_variable} trials={spec.trials} seed={spec.base.seed} "
              f"sdp_tol={sdp.TOL!r} eval_samples={spec.base.eval_samples}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    for (value, scheme), st in summary.items():
        status = (f"summary std={_fmt(st['worst_case_asr_std'])} nominal_std={_fmt(st['nominal_asr_std'])} "
                  f"n={st['n']} failed={st['failed']}")
        writer.writerow([_fmt(value), "mean", scheme, _fmt(st["worst_case_asr"]), _fmt(st["nominal_asr"]),
                         _fmt(st["r_b"]), _fmt(st["r_e"]), _fmt(st["iterations"]), status,
                         spec.base.seed])
    return buf.getvalue()


PLOT_TEMPLATE = '''"""Plot mean +/- std worst-case ASR per scheme from {csv_name}."""

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

here = Path(__file__).resolve().parent
data = defaultdict(lambda: defaultdict(list))
with open(here / "{csv_name}", encoding="utf-8") as fh:
    rows = csv.DictReader(line for line in fh if not line.startswith("#"))
    for row in rows:
        if row["trial"] == "mean" or row["status"] == "failed":
            continue
        data[row["scheme"]][float(row["sweep_value"])].append(float(row["worst_case_asr"]))

fig, ax = plt.subplots()
for scheme, by_value in data.items():
    x = sorted(by_value)
    mean = np.array([np.mean(by_value[v]) for v in x])
    std = np.array([np.std(by_value[v]) for v in x])
    ax.plot(x, mean, marker="o", label=scheme)
    ax.fill_between(x, mean - std, mean + std, alpha=0.2)
ax.set_xlabel("{xlabel}")
ax.set_ylabel("worst-case ASR (bits/s/Hz)")
ax.grid(True, alpha=0.3)
ax.legend()
fig.savefig(here / "{png_name}", dpi=150, bbox_inches="tight")
'''


def plot_script(csv_path, sweep_variable):
    csv_path = Path(csv_path)
    xlabel = "AoA error bound (deg)" if sweep_variable == "delta_angle" else "P_max (W)"
    return PLOT_TEMPLATE.format(csv_name=csv_path.name, png_name=csv_path.stem + ".png", xlabel=xlabel)


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _apply_overrides(spec, args):
    base_kw, kw = {}, {}
    if getattr(args, "seed", None) is not None:
        base_kw["seed"] = args.seed
    if getattr(args, "scheme", None):
        kw["schemes"] = tuple(s.strip() for s in args.scheme.split(",") if s.strip())
    for name in ("trials", "workers"):
        if getattr(args, name, None) is not None:
            kw[name] = getattr(args, name)
    if getattr(args, "out", None):
        kw["output"] = args.out
    if getattr(args, "emit_plot_script", False):
        kw["emit_plot_script"] = True
    if getattr(args, "sweep", None):
        kw["sweep_variable"] = args.sweep
    if getattr(args, "values", None):
        kw["values"] = tuple(float(v) for v in args.values.split(","))
    fields_ = {f.name: getattr(spec, f.name) for f in fields(ExperimentSpec)}
    fields_.update(kw)
    fields_["base"] = spec.base.with_(**base_kw) if base_kw else spec.base
    return ExperimentSpec(**fields_)


def cmd_run(args):
    spec = _apply_overrides(load_spec(args.config), args)
    workers = spec.workers or default_workers()
    rows, summary = monte_carlo(spec.base, spec.scheme_names, spec.sweep_variable, spec.values,
                                spec.trials, spec.mode, workers=workers)
    text = render_csv(spec, rows, summary)
    if spec.output == "-":
        sys.stdout.write(text)
    else:
        _write_text(spec.output, text)
        if spec.emit_plot_script:
            out = Path(spec.output)
            _write_text(out.with_name(out.stem + "_plot.py"), plot_script(out, spec.sweep_variable))
    failed = sum(r["status"] == "failed" for r in rows)
    if failed:
        log.warning("%d of %d rows failed", failed, len(rows))
    return 0


def cmd_solve_once(args):
    spec = _apply_overrides(load_spec(args.config), args)
    scheme, mode = parse_scheme(spec.schemes[0], spec.mode)
    if args.replay:
        cfg, channel, _ = load_run(args.replay)
        cfg = cfg.with_(seed=spec.base.seed) if args.seed is not None else cfg
    else:
        cfg = spec.base
        channel = draw_channel(cfg, cell_rngs(cfg.seed, args.trial, cfg.delta_angle_deg)[0])
    unc = build_uncertainty(channel, np.deg2rad(cfg.delta_angle_deg), cfg.delta_amp_db)
    _, d_rng, e_rng = cell_rngs(cfg.seed, args.trial, cfg.delta_angle_deg)
    t0 = time.perf_counter()
    if args.dump_sdp:
        with sdp.dump_to(args.dump_sdp):
            sol = run_scheme(scheme, mode, channel, unc, cfg, d_rng)
    else:
        sol = run_scheme(scheme, mode, channel, unc, cfg, d_rng)
    elapsed = time.perf_counter() - t0
    nom = secrecy_rates(sol.q, sol.w, channel.H_AB, channel.G_true, cfg.sigma0_sq)
    eval_set = degenerate_uncertainty(channel) if scheme == "perfect" else unc
    wc = worst_case_asr(sol, eval_set, channel, cfg, e_rng, mode)
    print(f"scheme        {scheme}-{mode}")
    print(f"R_B           {nom.R_B:.6g}")
    print(f"R_E           {nom.R_E(mode):.6g}")
    print(f"R_s nominal   {nom.R_s(mode):.6g}")
    print(f"R_s worst     {wc.worst_case_R_s:.6g}")
    print(f"iterations    {sol.iterations} (outer {len(sol.outer_history)}), status {sol.status}")
    print(f"wall time     {elapsed:.3f} s")
    out = args.out or "solution.json"
    save_run(out, cfg, channel, sol, extra={"scheme": f"{scheme}-{mode}"})
    print(f"saved         {out}")
    return 0


def cmd_verify(args):
    from .verify import run_suite  # noqa: PLC0415

    return run_suite(args.level, seed=args.seed if args.seed is not None else 0)


def build_parser():
    p = argparse.ArgumentParser(prog="irs-rsbf", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help=f"experiment INI file (default: ${CONFIG_ENV} or built-ins)")
        sp.add_argument("--scheme", help="scheme name, e.g. robust-colluding, mrt, perfect-noncolluding")
        sp.add_argument("--seed", type=int)

    run = sub.add_parser("run", help="Monte Carlo sweep to CSV")
    common(run)
    run.add_argument("--trials", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--out", help="CSV path ('-' for stdout)")
    run.add_argument("--emit-plot-script", action="store_true")
    run.add_argument("--sweep", choices=SWEEP_VARIABLES)
    run.add_argument("--values", help="comma-separated sweep values")
    run.set_defaults(func=cmd_run)

    once = sub.add_parser("solve-once", help="solve one channel draw and save it")
    common(once)
    once.add_argument("--trial", type=int, default=0, help="channel index")
    once.add_argument("--replay", help="solution JSON whose channel is reused")
    once.add_argument("--out", help="solution JSON path (default solution.json)")
    once.add_argument("--dump-sdp", metavar="DIR", help="write every SDP solved to DIR")
    once.set_defaults(func=cmd_solve_once)

    ver = sub.add_parser("verify", help="oracle and invariant checks")
    ver.add_argument("level", nargs="?", choices=("quick", "full"), default="quick")
    ver.add_argument("--seed", type=int)
    ver.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
