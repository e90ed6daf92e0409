"""JSON round trips for configs, channel draws and beamforming solutions.

Complex arrays are stored as ``{"re": [...], "im": [...], "shape": [...]}``.
"""

from dataclasses import asdict, fields
import hashlib
import json
import math

import numpy as np

from .channel import ChannelRealization, PathComponent, SystemConfig
from .rsbf import BeamformingSolution

FORMAT_VERSION = 1


def encode_array(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist(), "shape": list(a.shape)}
    return {"re": a.astype(float).ravel().tolist(), "shape": list(a.shape)}


def decode_array(d):
    re = np.asarray(d["re"], dtype=float)
    out = re + 1j * np.asarray(d["im"], dtype=float) if "im" in d else re
    return out.reshape(d["shape"])


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def config_to_dict(config):
    return {k: _plain(v) for k, v in asdict(config).items()}


def config_from_dict(d):
    known = {f.name for f in fields(SystemConfig)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kw = dict(d)
    for key in ("alice", "irs", "bob"):
        if key in kw:
            kw[key] = tuple(float(x) for x in kw[key])
    if "eve_centers" in kw:
        kw["eve_centers"] = tuple(tuple(float(x) for x in c) for c in kw["eve_centers"])
    return SystemConfig(**kw)


def config_hash(config):
    """Short digest identifying a configuration (for output metadata)."""
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _path_to_dict(p):
    d = asdict(p)
    d["alpha"] = [p.alpha.real, p.alpha.imag]
    return d


def _path_from_dict(d):
    d = dict(d)
    d["alpha"] = complex(*d["alpha"])
    return PathComponent(**d)


def channel_to_dict(ch):
    return {
        "H_AR": encode_array(ch.H_AR),
        "h_RB": encode_array(ch.h_RB),
        "h_RE": encode_array(ch.h_RE),
        "eve_positions": None if ch.eve_positions is None else encode_array(ch.eve_positions),
        "paths": {
            "AR": [_path_to_dict(p) for p in ch.paths.get("AR", [])],
            "RB": [_path_to_dict(p) for p in ch.paths.get("RB", [])],
            "RE": [[_path_to_dict(p) for p in ps] for ps in ch.paths.get("RE", [])],
        },
    }


def channel_from_dict(d):
    H_AR = decode_array(d["H_AR"])
    h_RB = decode_array(d["h_RB"])
    h_RE = decode_array(d["h_RE"]).reshape(-1, H_AR.shape[0])
    paths = {
        "AR": [_path_from_dict(p) for p in d["paths"]["AR"]],
        "RB": [_path_from_dict(p) for p in d["paths"]["RB"]],
        "RE": [[_path_from_dict(p) for p in ps] for ps in d["paths"]["RE"]],
    }
    eve = d.get("eve_positions")
    return ChannelRealization(H_AR=H_AR, h_RB=h_RB, h_RE=h_RE, H_AB=h_RB[:, None] * H_AR,
                              G_true=h_RE[:, :, None] * H_AR[None, :, :], paths=paths,
                              eve_positions=None if eve is None else decode_array(eve))


def _finite(x):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x


def solution_to_dict(sol):
    return {
        "w": encode_array(sol.w),
        "q": encode_array(sol.q),
        "objective": _finite(float(sol.objective)),
        "inner_history": [[float(r) for r in run] for run in sol.inner_history],
        "outer_history": [float(r) for r in sol.outer_history],
        "status": sol.status,
        "mode": sol.mode,
        "sdp_failures": int(sol.sdp_failures),
        "weights": None if sol.weights is None else encode_array(sol.weights),
    }


def solution_from_dict(d):
    weights = d.get("weights")
    objective = d["objective"]
    return BeamformingSolution(
        w=decode_array(d["w"]), q=decode_array(d["q"]),
        objective=math.nan if objective is None else objective,
        inner_history=[list(run) for run in d["inner_history"]],
        outer_history=list(d["outer_history"]), status=d["status"], mode=d["mode"],
        sdp_failures=d.get("sdp_failures", 0),
        weights=None if weights is None else decode_array(weights),
    )


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def save_run(path, config, channel, solution, extra=None):
    """One file with everything needed to replay and re-evaluate a solve."""
    doc = {"format": FORMAT_VERSION, "config": config_to_dict(config),
           "config_hash": config_hash(config), "channel": channel_to_dict(channel),
           "solution": solution_to_dict(solution)}
    if extra:
        doc.update(extra)
    dump_json(doc, path)


def load_run(path):
    """Returns ``(config, channel, solution)`` from :func:`save_run` output."""
    doc = load_json(path)
    if doc.get("format") != FORMAT_VERSION:
        raise ValueError(f"unsupported format {doc.get('format')!r}")
    return (config_from_dict(doc["config"]), channel_from_dict(doc["channel"]),
            solution_from_dict(doc["solution"]))
