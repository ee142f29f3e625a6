"""Config-driven experiment runner.

A run reads a YAML document made of blocks (``domain``, ``field``,
``partition``, ``weight``, ``solve``, ``verify``, ``output``,
``counterexample``), builds the fixture, runs one subcommand and writes CSV
artifacts plus ``summary.json`` into the output directory.  Keys may be
nested under their block or written flat as ``block.key``.

Exit codes: 0 when every hard check passes, 1 when a hard check fails,
2 when the run stops on an error (a JSON error record is written).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
import yaml

from . import geometry, partition as part_mod, transport, velocity, verify, weight as weight_mod
from .errors import CarlemanLabError, ParseError, ValidationError

SUBCOMMANDS = (
    "partition", "weight", "solve", "verify-carleman", "verify-observability", "counterexample",
)

SCHEMA = {
    "domain": {"kind", "center", "radius", "min", "max", "vertices"},
    "field": {"kind", "vector", "radius", "rate", "phase", "table"},
    "partition": {"mode", "sstar", "samples", "margin", "times"},
    "weight": {"r", "sstar"},
    "solve": {
        "fixture", "h", "dt", "slices", "n_table", "center", "width", "amplitude",
        "wavevector", "phase", "offset", "freqs", "radius", "value",
    },
    "verify": {"T", "s_count", "s_span", "C0", "family", "holdout"},
    "output": {"dir"},
    "counterexample": {"sigma", "rho", "T", "h", "dt"},
}

NEEDS = {
    "partition": ("domain", "field"),
    "weight": ("domain", "field"),
    "solve": ("domain", "field"),
    "verify-carleman": ("domain", "field"),
    "verify-observability": ("domain", "field"),
    "counterexample": (),
}

DEFAULT_SSTAR = 0.8
DEFAULT_OUT = "carleman_lab_out"


# ------------------------------------------------------------------ config
@dataclass
class ExperimentConfig:
    blocks: dict
    lines: dict = dc_field(default_factory=dict)  # "block.key" -> source line

    def get(self, block, key, default=None):
        return self.blocks.get(block, {}).get(key, default)

    def has(self, block):
        return bool(self.blocks.get(block))

    # resolved values -------------------------------------------------
    @property
    def sstar(self):
        a = self.get("partition", "sstar")
        b = self.get("weight", "sstar")
        if a is not None and b is not None and float(a) != float(b):
            raise ValidationError("partition.sstar and weight.sstar disagree")
        return float(a if a is not None else b if b is not None else DEFAULT_SSTAR)


def _key_lines(node, prefix=""):
    """Map dotted keys to 1-based source lines using the composed YAML tree."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for knode, vnode in node.value:
            key = f"{prefix}{knode.value}"
            out[key] = knode.start_mark.line + 1
            if isinstance(vnode, yaml.MappingNode):
                out.update(_key_lines(vnode, key + "."))
    return out


def parse_config(text):
    """Parse and validate a config document; returns an :class:`ExperimentConfig`."""
    try:
        raw = yaml.safe_load(text)
        lines = _key_lines(yaml.compose(text)) if text.strip() else {}
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ParseError(f"malformed config: {exc.problem}",
                         line=None if mark is None else mark.line + 1) from None
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed config: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError("config must be a mapping of blocks")
    blocks = {}
    for top, value in raw.items():
        top = str(top)
        if "." in top:
            block, key = top.split(".", 1)
            if block not in SCHEMA:
                raise ParseError(f"unknown block '{block}'", line=lines.get(top), key=top)
            blocks.setdefault(block, {})[key] = value
            lines[f"{block}.{key}"] = lines.get(top)
            continue
        if top not in SCHEMA:
            raise ParseError(f"unknown block '{top}'", line=lines.get(top), key=top)
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise ParseError(f"block '{top}' must be a mapping", line=lines.get(top), key=top)
        blocks.setdefault(top, {}).update({str(k): v for k, v in value.items()})
    for block, keys in blocks.items():
        for key in keys:
            if key not in SCHEMA[block]:
                dotted = f"{block}.{key}"
                raise ParseError(f"unknown key '{dotted}'", line=lines.get(dotted), key=dotted)
    cfg = ExperimentConfig(blocks, lines)
    _validate_values(cfg)
    return cfg


def _validate_values(cfg):
    s = cfg.sstar
    if not (1.0 / math.sqrt(2.0) < s < 1.0):
        raise ValidationError(
            f"aperture must exceed 1/√2 ≈ 0.7071 and stay below 1, got S* = {s}"
        )
    for block, key in (("solve", "h"), ("counterexample", "h"), ("weight", "r")):
        v = cfg.get(block, key)
        if v is not None and not float(v) > 0:
            raise ValidationError(f"{block}.{key} must be positive, got {v}")
    for block in ("verify", "counterexample"):
        T = cfg.get(block, "T")
        if T is not None and not float(T) > 0:
            raise ValidationError(f"{block}.T must be positive, got {T}")
    kind = cfg.get("domain", "kind")
    if cfg.has("domain") and kind not in (None, *geometry.KINDS, "box", "polygon"):
        raise ValidationError(f"domain.kind must be one of {geometry.KINDS}, got {kind!r}")
    mode = cfg.get("partition", "mode", "greedy")
    if mode not in ("uniform", "greedy", "times"):
        raise ValidationError(f"partition.mode must be uniform, greedy or times, got {mode!r}")
    if mode == "times" and not cfg.get("partition", "times"):
        raise ValidationError("partition.mode 'times' needs a partition.times list of cut times")


def check_requirements(cfg, subcommand):
    for block in NEEDS[subcommand]:
        if not cfg.has(block):
            raise ValidationError(f"subcommand '{subcommand}' needs a '{block}' block")


# ------------------------------------------------------------------ builders
def build_domain(cfg):
    d = cfg.blocks["domain"]
    kind = d.get("kind")
    if kind == geometry.INTERVAL:
        return geometry.Domain.interval(*_pair(d, "min", "max"))
    if kind == geometry.DISK:
        return geometry.Domain.disk(d.get("center", (0.0, 0.0)), d.get("radius", 1.0))
    if kind in (geometry.AXIS_BOX, "box"):
        return geometry.Domain.box(d["min"], d["max"]) if "min" in d else _missing("domain.min")
    if kind in (geometry.CONVEX_POLYGON, "polygon"):
        return geometry.Domain.polygon(d["vertices"]) if "vertices" in d else _missing("domain.vertices")
    raise ValidationError("domain.kind is required")


def _pair(block, a, b):
    if a not in block or b not in block:
        raise ValidationError(f"interval needs domain.{a} and domain.{b}")
    lo, hi = block[a], block[b]
    lo = lo[0] if isinstance(lo, list) else lo
    hi = hi[0] if isinstance(hi, list) else hi
    return float(lo), float(hi)


def _missing(key):
    raise ValidationError(f"{key} is required for this domain kind")


def build_field(cfg, dim):
    f = cfg.blocks["field"]
    kind = f.get("kind", "constant")
    T = cfg.get("verify", "T")
    if kind == "table":
        if "table" not in f:
            raise ValidationError("field.table (CSV path) is required for a tabulated field")
        fld = velocity.TabulatedField.from_csv(f["table"])
        if T is not None and abs(float(T) - fld.horizon) > 1e-12 * max(1.0, fld.horizon):
            raise ValidationError("verify.T must match the last time of field.table")
    else:
        if T is None:
            raise ValidationError("verify.T (time horizon) is required")
        T = float(T)
        if kind == "constant":
            if "vector" not in f:
                raise ValidationError("field.vector is required for a constant field")
            fld = velocity.ConstantField(f["vector"], T)
        elif kind == "rotation":
            if dim != 2:
                raise ValidationError("a rotation field needs a two-dimensional domain")
            fld = velocity.RotationField(f.get("radius", 1.0), f.get("rate", 1.0), T,
                                         f.get("phase", 0.0))
        else:
            raise ValidationError(f"field.kind must be constant, rotation or table, got {kind!r}")
    if fld.dim != dim:
        raise ValidationError(f"field dimension {fld.dim} differs from domain dimension {dim}")
    return fld


def build_partition(cfg, fld):
    mode = cfg.get("partition", "mode", "greedy")
    samples = int(cfg.get("partition", "samples", part_mod.CERTIFICATE_SAMPLES))
    if mode == "uniform":
        return part_mod.uniform_partition(fld, cfg.sstar, n_samples=samples)
    if mode == "times":
        return part_mod.from_times(fld, cfg.get("partition", "times"), cfg.sstar, n_samples=samples)
    margin = float(cfg.get("partition", "margin", 0.01))
    return part_mod.greedy_partition(fld, cfg.sstar, margin=margin, n_samples=samples)


def grid_step(cfg, dom):
    return float(cfg.get("solve", "h", 0.02 * dom.diameter()))


def sample_times(partition, fld, h, cfg, block="solve"):
    """Uniform samples per piece: at least ``slices`` and step no larger than ``dt``."""
    dt = float(cfg.get(block, "dt", h / fld.hstar))
    base = int(cfg.get("solve", "slices", 8))
    pieces = []
    for a, b in zip(partition.times[:-1], partition.times[1:]):
        n = max(base, int(math.ceil((b - a) / dt - 1e-9)), 2)
        n += n % 2
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    return np.concatenate(pieces + [partition.times[-1:]])


def profile_from_solve(cfg, dom):
    s = cfg.blocks.get("solve", {})
    kind = s.get("fixture", "gaussian")
    delta = dom.diameter()
    amp = float(s.get("amplitude", 1.0))
    if kind == "gaussian":
        return transport.gaussian(s.get("center", dom.centroid()), s.get("width", 0.25 * delta), amp)
    if kind == "cosine":
        k = s.get("wavevector", [2.0 * math.pi / delta] * dom.dim)
        return transport.cosine_profile(k, s.get("phase", 0.0), s.get("offset", 0.0), amp)
    if kind == "trig":
        return transport.trig_product(s.get("freqs", [math.pi / delta] * dom.dim), amp)
    if kind == "bump":
        return transport.bump(s.get("radius", 0.25 * delta), s.get("center"), amp)
    if kind == "constant":
        return transport.constant_profile(s.get("value", 1.0))
    raise ValidationError(f"solve.fixture must be gaussian, cosine, trig, bump or constant, got {kind!r}")


def gaussian_family(rng, dom, n):
    delta, c = dom.diameter(), dom.centroid()
    out = []
    for _ in range(n):
        center = c + 0.25 * delta * rng.uniform(-1.0, 1.0, dom.dim)
        width = delta * rng.uniform(0.15, 0.3)
        out.append((f"gaussian c={np.round(center, 6).tolist()} w={width:.6g}",
                    transport.gaussian(center, width)))
    return out


def cosine_family(rng, dom, n):
    delta = dom.diameter()
    out = []
    for _ in range(n):
        k = rng.uniform(-6.0, 6.0, dom.dim) / delta
        phase = rng.uniform(0.0, 2.0 * math.pi)
        offset = rng.uniform(0.0, 1.5)
        out.append((f"cosine k={np.round(k, 6).tolist()} phase={phase:.6g} offset={offset:.6g}",
                    transport.cosine_profile(k, phase, offset)))
    return out


def mixed_family(rng, dom, n):
    """Alternating Gaussians and trigonometric products."""
    delta = dom.diameter()
    out = []
    for i in range(n):
        if i % 2 == 0:
            out.extend(gaussian_family(rng, dom, 1))
        else:
            freqs = rng.uniform(1.0, 6.0, dom.dim) / delta
            out.append((f"trig f={np.round(freqs, 6).tolist()}", transport.trig_product(freqs)))
    return out


# ------------------------------------------------------------------ output
def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    hard: bool = True
    detail: str = ""


@dataclass
class RunArtifact:
    subcommand: str
    out_dir: Path
    files: list = dc_field(default_factory=list)
    checks: list = dc_field(default_factory=list)
    info: dict = dc_field(default_factory=dict)
    timings: dict = dc_field(default_factory=dict)

    def add(self, name, passed, value, hard=True, detail=""):
        self.checks.append(Check(name, bool(passed), float(value), hard, detail))

    @property
    def exit_code(self):
        return 0 if all(c.passed for c in self.checks if c.hard) else 1

    def summary(self):
        return {
            "subcommand": self.subcommand,
            "exit_code": self.exit_code,
            "files": [p.name for p in self.files],
            "checks": [
                {"name": c.name, "passed": c.passed, "hard": c.hard, "value": c.value,
                 "detail": c.detail}
                for c in self.checks
            ],
            "failures": [c.name for c in self.checks if c.hard and not c.passed],
            "info": self.info,
            "timings": self.timings,
        }

    def write_summary(self):
        path = self.out_dir / "summary.json"
        path.write_text(json.dumps(_jsonable(self.summary()), indent=2, sort_keys=True) + "\n")
        return path


# ------------------------------------------------------------------ subcommands
def _setup(cfg):
    dom = build_domain(cfg)
    fld = build_field(cfg, dom.dim)
    return dom, fld


def _weight_checks(art, dom, fld, w, h, require_observability):
    grid = dom.interior_grid(h)
    apex = weight_mod.check_apex_cone(w, dom, grid)
    art.add("apex cone margin", apex >= 0, apex)
    ok, gaps = weight_mod.check_separation(w)
    art.add("apex distance separation", ok, min(gaps) if gaps else math.inf,
            detail="gaps mu_(j+1) - M_j and max/min ordering")
    pphi = weight_mod.check_pphi_lower_bound(w, fld, grid)
    art.add("weight derivative lower bound margin", pphi >= 0, pphi)
    cert = weight_mod.observability_condition(w, fld)
    art.add("observability time condition", cert.holds, cert.margin, hard=require_observability,
            detail=f"j*={cert.jstar}")
    return cert


def run_partition(cfg, art, rng, require_observability):
    dom, fld = _setup(cfg)
    p = build_partition(cfg, fld)
    margin = p.certificate.margin
    rows = [
        [j, p.times[j], p.times[j + 1], *p.axes[j], margin]
        for j in range(p.m)
    ]
    header = ["j", "t_start", "t_end", *[f"eta_{i + 1}" for i in range(fld.dim)], "margin"]
    art.files.append(write_csv(art.out_dir / "partition.csv", header, rows))
    art.add("cone condition margin", margin >= 0, margin)
    art.info.update(m=p.m, mode=cfg.get("partition", "mode", "greedy"), sstar=p.sstar)


def run_weight(cfg, art, rng, require_observability):
    dom, fld = _setup(cfg)
    p = build_partition(cfg, fld)
    w = weight_mod.build_weight(dom, fld, p, cfg.get("weight", "r"))
    art.add("cone condition margin", p.certificate.margin >= 0, p.certificate.margin)
    windows = w.window_lengths()
    d = fld.dim
    rows = [
        [j, w.times[j], *p.axes[j], w.radii[j], *w.apexes[j], w.mu[j], w.M[j],
         w.beta, w.cstar, windows[j]]
        for j in range(w.m)
    ]
    header = ["j", "t_j", *[f"eta_{i + 1}" for i in range(d)], "R_j",
              *[f"x_{i + 1}" for i in range(d)], "mu_j", "M_j", "beta", "cstar",
              "window_threshold"]
    art.files.append(write_csv(art.out_dir / "weight.csv", header, rows))
    cert = _weight_checks(art, dom, fld, w, grid_step(cfg, dom), require_observability)
    art.info.update(m=w.m, beta=w.beta, cstar=w.cstar, R0=w.radii[0],
                    threshold=cert.threshold, q=cert.q, jstar=cert.jstar)


def run_solve(cfg, art, rng, require_observability):
    dom, fld = _setup(cfg)
    p = build_partition(cfg, fld)
    h = grid_step(cfg, dom)
    grid, bgrid = dom.interior_grid(h), dom.boundary_grid(h)
    times = sample_times(p, fld, h, cfg)
    F = profile_from_solve(cfg, dom)

    def u0(x):
        return F(x)

    def g(x, t):
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:1])
        uniq, inv = np.unique(t, return_inverse=True)
        return F(x - fld.displacement_many(uniq)[inv])

    n_table = int(cfg.get("solve", "n_table", transport.DEFAULT_TABLE))
    sol = transport.solve_characteristics(dom, fld, u0, g, grid, bgrid, times, n_table=n_table)
    coords = [c for c in ("x", "y")[: dom.dim]]
    rows = (
        [t, *grid.nodes[i], sol.interior[k, i]]
        for k, t in enumerate(times) for i in range(len(grid))
    )
    art.files.append(write_csv(art.out_dir / "slices.csv", ["t", *coords, "u"], rows))
    tr = transport.boundary_trace(sol)
    rows = (
        [i, t, tr.values[k, i], tr.h_dot_nu[k, i], tr.sigma[k, i]]
        for k, t in enumerate(times) for i in range(len(bgrid))
    )
    art.files.append(write_csv(art.out_dir / "trace.csv",
                               ["node", "t", "g", "h_dot_nu", "in_sigma"], rows))
    ep = verify.energy_profile(sol)
    resid = float(np.max(np.abs(ep.identity_residual)))
    art.add("energy identity residual", resid <= ep.tau_q, resid, detail=f"tau_q={ep.tau_q:.3e}")
    slack = float(min(ep.en1_slack.min(), ep.en2_slack.min()))
    art.add("energy estimates slack", ep.estimates_hold, slack, detail=f"tau_q={ep.tau_q:.3e}")
    art.info.update(nodes=len(grid), boundary_nodes=len(bgrid), slices=int(times.size),
                    notes=list(sol.notes))


def _family_solutions(family, fld, dom, grid, bgrid, times):
    return [transport.manufactured_solution(F, fld, dom, grid, bgrid, times, label)
            for label, F in family]


def run_verify_carleman(cfg, art, rng, require_observability):
    dom, fld = _setup(cfg)
    p = build_partition(cfg, fld)
    w = weight_mod.build_weight(dom, fld, p, cfg.get("weight", "r"))
    h = grid_step(cfg, dom)
    _weight_checks(art, dom, fld, w, h, require_observability)
    grid, bgrid = dom.interior_grid(h), dom.boundary_grid(h)
    times = sample_times(p, fld, h, cfg)
    n_fit = int(cfg.get("verify", "family", 5))
    n_hold = int(cfg.get("verify", "holdout", 5))
    fit = _family_solutions(gaussian_family(rng, dom, n_fit), fld, dom, grid, bgrid, times)
    hold = _family_solutions(cosine_family(rng, dom, n_hold), fld, dom, grid, bgrid, times)
    s_values, est = verify.default_s_grid(w, fld, grid, n=int(cfg.get("verify", "s_count", 16)),
                                          span=float(cfg.get("verify", "s_span", 50.0)))
    C0 = float(cfg.get("verify", "C0", 1.0))
    rep_fit = verify.carleman_report(fit, w, s_values, C0)
    rep_hold = verify.carleman_report(hold, w, s_values, C0)
    C_uniform, valid = verify.fit_constants(rep_fit, rep_hold)
    scaled = verify.carleman_report([s.scaled(3.0) for s in fit[:1]], w, s_values, C0)
    drift = float(np.max(np.abs(scaled.terms[0].C - rep_fit.terms[0].C) / rep_fit.terms[0].C))

    rows = []
    for role, rep in (("fit", rep_fit), ("holdout", rep_hold)):
        for t in rep.terms:
            for k, s in enumerate(s_values):
                rows.append([role, t.label, s, t.log_bulk[k], math.log(s) - C0 * s,
                             t.slices, t.log_res[k], t.sigma, t.final, t.C[k]])
    header = ["role", "solution", "s", "log_bulk", "log_slice_factor", "slices", "log_res",
              "sigma", "final", "C_s"]
    art.files.append(write_csv(art.out_dir / "carleman.csv", header, rows))
    art.add("fitted constant finite", math.isfinite(C_uniform), C_uniform)
    art.add("held-out solutions satisfy fitted constant", valid, C_uniform)
    art.add("fitted constant scale invariance", drift <= 1e-9, drift)
    art.info.update(C_uniform=C_uniform, s0=est.s0, s0_source=est.source, C0=C0,
                    s_min=s_values[0], s_max=s_values[-1])


def run_verify_observability(cfg, art, rng, require_observability):
    dom, fld = _setup(cfg)
    p = build_partition(cfg, fld)
    w = weight_mod.build_weight(dom, fld, p, cfg.get("weight", "r"))
    h = grid_step(cfg, dom)
    cert = _weight_checks(art, dom, fld, w, h, require_observability)
    grid, bgrid = dom.interior_grid(h), dom.boundary_grid(h)
    times = sample_times(p, fld, h, cfg)
    family = mixed_family(rng, dom, int(cfg.get("verify", "family", 10)))
    sols = _family_solutions(family, fld, dom, grid, bgrid, times)
    rep = verify.observability_ratio(sols, w, fld)
    if cert.holds:
        window = (w.times[cert.jstar], w.times[cert.jstar + 1])
    else:
        window = (w.times[0], w.times[-1])
    windows_ok = all(bool(verify.extend_window_check(s, window)) for s in sols)
    rows = [
        [label, rep.sup_norms[i], rep.trace_norms[i], rep.ratios[i],
         "holds" if cert.holds else "fails", -1 if cert.jstar is None else cert.jstar]
        for i, label in enumerate(rep.labels)
    ]
    art.files.append(write_csv(art.out_dir / "observability.csv",
                               ["solution", "sup_norm", "trace_norm", "ratio", "certificate",
                                "jstar"], rows))
    art.add("observation ratios finite", rep.all_finite, rep.family_sup)
    art.add("window extension bounds", windows_ok, 0.0)
    art.info.update(verdict=rep.verdict, family_sup=rep.family_sup, threshold=cert.threshold,
                    q=cert.q, jstar=cert.jstar)


def run_counterexample(cfg, art, rng, require_observability):
    c = cfg.blocks.get("counterexample", {})
    sigma = float(c.get("sigma", 1.0))
    rho = float(c.get("rho", 0.5))
    T = float(c.get("T", 2.0 * math.pi))
    sc = transport.rotating_bump_counterexample(sigma, rho, horizon=T)
    h = float(c.get("h", 0.02 * sc.domain.diameter()))
    dt = float(c.get("dt", h / rho))
    n = max(2, int(math.ceil(T / dt - 1e-9)))
    n += n % 2
    times = np.linspace(0.0, T, n + 1)
    grid, bgrid = sc.domain.interior_grid(h), sc.domain.boundary_grid(h)
    sol = transport.solve_scenario(sc, grid, bgrid, times)
    ep = verify.energy_profile(sol)
    tr = transport.boundary_trace(sol)
    gnorm = math.sqrt(max(tr.norm_sq(), 0.0))
    u0norm = math.sqrt(ep.energy[0])
    rep = verify.observability_ratio([sol], weight_mod.build_weight(
        sc.domain, sc.field, part_mod.greedy_partition(sc.field, cfg.sstar), None), sc.field)
    speeds = sc.field.speed(times)
    centers = np.array([sc.support_center(t) for t in times])
    rows = [[t, ep.energy[k], ep.flux[k], speeds[k], *centers[k]] for k, t in enumerate(times)]
    art.files.append(write_csv(art.out_dir / "counterexample.csv",
                               ["t", "energy", "flux", "speed", "center_x", "center_y"], rows))
    drift = float(np.max(np.abs(ep.energy - ep.energy[0])))
    art.add("boundary trace vanishes", gnorm <= 1e-12 * u0norm, gnorm)
    art.add("interior energy constant", drift <= ep.tau_q, drift, detail=f"tau_q={ep.tau_q:.3e}")
    art.add("observability verdict", rep.verdict == "observability fails", 0.0, detail=rep.verdict)
    speed_err = float(np.max(np.abs(speeds - rho)))
    art.add("field speed equals rho", speed_err <= 1e-12, speed_err,
            detail=f"H0={sc.field.h0:.17g} H*={sc.field.hstar:.17g}")
    art.info.update(verdict=rep.verdict, trace_norm=gnorm, u0_norm=u0norm, tau_q=ep.tau_q)


RUNNERS = {
    "partition": run_partition,
    "weight": run_weight,
    "solve": run_solve,
    "verify-carleman": run_verify_carleman,
    "verify-observability": run_verify_observability,
    "counterexample": run_counterexample,
}


def run_experiment(cfg, subcommand, out_dir=None, seed=0, require_observability=False):
    """Run one subcommand; returns the :class:`RunArtifact` (summary already written)."""
    if subcommand not in RUNNERS:
        raise ValidationError(f"unknown subcommand {subcommand!r}")
    check_requirements(cfg, subcommand)
    out = Path(out_dir or cfg.get("output", "dir", DEFAULT_OUT))
    out.mkdir(parents=True, exist_ok=True)
    art = RunArtifact(subcommand, out)
    art.info.update(seed=int(seed), require_observability=bool(require_observability))
    rng = np.random.default_rng(int(seed))
    start = time.perf_counter()
    RUNNERS[subcommand](cfg, art, rng, require_observability)
    art.timings["total_s"] = time.perf_counter() - start
    art.write_summary()
    return art


def error_record(exc):
    rec = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("line", "key"):
        if getattr(exc, attr, None) is not None:
            rec[attr] = getattr(exc, attr)
    return {"error": rec, "exit_code": 2}


def build_parser():
    ap = argparse.ArgumentParser(prog="carleman-lab", description=__doc__.split("\n\n")[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="YAML experiment config (optional for counterexample)")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, default=0, help="seed for the solution families")
    ap.add_argument("--require-observability", action="store_true",
                    help="treat a failed observability time condition as a hard failure")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        text = Path(args.config).read_text() if args.config else ""
        cfg = parse_config(text)
        out = out or cfg.get("output", "dir", DEFAULT_OUT)
        art = run_experiment(cfg, args.subcommand, out, args.seed, args.require_observability)
    except (CarlemanLabError, OSError, ValueError) as exc:
        rec = error_record(exc)
        payload = json.dumps(rec, sort_keys=True)
        print(payload, file=sys.stderr)
        target = Path(out or DEFAULT_OUT)
        try:
            target.mkdir(parents=True, exist_ok=True)
            (target / "summary.json").write_text(payload + "\n")
        except OSError:
            pass
        return 2
    for c in art.checks:
        tag = "PASS" if c.passed else ("FAIL" if c.hard else "INFO")
        print(f"{tag} {c.name}: {c.value:.6g}" + (f" ({c.detail})" if c.detail else ""))
    print(f"wrote {len(art.files)} CSV file(s) to {art.out_dir}")
    return art.exit_code


if __name__ == "__main__":
    sys.exit(main())
