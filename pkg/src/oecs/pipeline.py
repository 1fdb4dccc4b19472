"""End-to-end detection run: strain, singularities, structures, verification.

A run writes CSV tables, SVG figures and a ``manifest.json`` listing every
output file with its SHA-256 hash. Nothing time-dependent is recorded, so
equal configurations on equal inputs give byte-identical manifests.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field, fields
from pathlib import Path

import numpy as np
from matplotlib.path import Path as MplPath

from . import __version__
from .elliptic import build_section, default_half_length, default_mu_range, sweep_mu
from .errors import (ConfigError, DegenerateCore, LeftDomain, LinearizationDegenerate,
                     NoConnection, OecsError, SectionBlocked)
from .flows import analytic_flow
from .geostrophic import GeoConstants, geostrophic_velocity
from .hyperbolic import extract_hyperbolic, find_eigenvalue_extrema, saddle_comparison_report
from .io import read_grid, read_ssh, sha256_file, write_csv, write_json, write_polylines
from .kinematics import eigen_fields, okubo_weiss, strain_and_spin, vorticity
from .lagrangian import MaterialBlob, blob_deformation_metric, polygon_moments
from .parabolic import (assemble_chains, connect_to_wedge, trisector_separatrices,
                        weak_minimizer_check)
from .plotting import CurveLayer, HeatLayer, MarkerLayer, export_plot
from .singularity import TRISECTOR, WEDGE, find_singularities, pair_wedges

log = logging.getLogger(__name__)

STAGES = ("elliptic", "hyperbolic", "parabolic", "advect")


@dataclass
class RunConfig:
    """Settings of one pipeline run.

    Exactly one of ``flow`` (an analytic fixture name) and ``input`` (an
    ``OECS-GRID`` or, with ``input_kind="ssh"``, an ``OECS-SSH`` file) is
    required. ``None`` thresholds take data-derived defaults.
    """

    output_dir: str = "oecs_out"
    flow: str | None = None
    flow_params: dict = dc_field(default_factory=dict)
    input: str | None = None
    input_kind: str = "grid"
    time: float = 0.0
    stages: tuple = ("elliptic", "hyperbolic", "parabolic")
    step: float | None = None
    wedge_pair_distance: float | None = None
    section_half_length: float | None = None
    section_samples: int = 40
    mu_range: tuple | None = None
    n_mu: int = 21
    capture_radius: float | None = None
    advect_horizon: float = 1.0
    blob_radius: float | None = None
    equator_cutoff: float = 5.0
    g: float = 9.81
    earth_radius: float = 6.371e6
    omega: float = 7.2921e-5
    workers: int = 1
    plots: bool = True

    def validate(self):
        if (self.flow is None) == (self.input is None):
            raise ConfigError("give exactly one of 'flow' and 'input'")
        if self.input is not None:
            if self.input_kind not in ("grid", "ssh"):
                raise ConfigError(f"input_kind must be 'grid' or 'ssh', got {self.input_kind!r}")
            if not Path(self.input).is_file():
                raise ConfigError(f"input file not found: {self.input}")
        bad = [s for s in self.stages if s not in STAGES]
        if bad:
            raise ConfigError(f"unknown stages {bad}; choose from {list(STAGES)}")
        for name in ("step", "wedge_pair_distance", "section_half_length", "capture_radius",
                     "blob_radius"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("advect_horizon", "equator_cutoff", "g", "earth_radius", "omega"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.section_samples < 3 or self.n_mu < 1 or self.workers < 1:
            raise ConfigError("section_samples >= 3, n_mu >= 1 and workers >= 1 required")
        if self.mu_range is not None:
            lo, hi = self.mu_range
            if not lo <= hi:
                raise ConfigError("mu_range must be (low, high) with low <= high")
        return self

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "stages" in d:
            d["stages"] = tuple(d["stages"])
        if d.get("mu_range") is not None:
            d["mu_range"] = tuple(d["mu_range"])
        return cls(**d)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc

    def to_dict(self):
        d = asdict(self)
        d["stages"] = list(self.stages)
        if self.mu_range is not None:
            d["mu_range"] = list(self.mu_range)
        return d


@dataclass
class PipelineResult:
    manifest: dict
    manifest_path: Path
    field: object
    singularities: list
    families: list = dc_field(default_factory=list)
    hyperbolic: list = dc_field(default_factory=list)
    saddle_report: object = None
    segments: list = dc_field(default_factory=list)
    chains: list = dc_field(default_factory=list)
    blobs: list = dc_field(default_factory=list)


def load_field(config):
    """Velocity field described by ``config``."""
    if config.flow is not None:
        return analytic_flow(config.flow, **config.flow_params)
    if config.input_kind == "ssh":
        consts = GeoConstants(config.g, config.earth_radius, config.omega)
        return geostrophic_velocity(read_ssh(config.input), consts, config.equator_cutoff)
    return read_grid(config.input)


def _pts(objs):
    return np.array([o.position for o in objs]).reshape(-1, 2)


class _Writer:
    def __init__(self, out):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, name):
        self.files.append(name)
        return self.out / name

    def listing(self):
        return [{"name": n, "sha256": sha256_file(self.out / n)} for n in sorted(set(self.files))]


def _strain_stage(field, t, w):
    X, Y = field.grid()
    ok = field.gradient_ok(X, Y)
    J = np.full(X.shape + (2, 2), np.nan)
    J[ok] = field.gradient(X[ok], Y[ok], t)
    S, _ = strain_and_spin(J)
    om = vorticity(J)
    s1 = np.full(X.shape, np.nan)
    s2 = np.full(X.shape, np.nan)
    eig = eigen_fields(S[ok])
    s1[ok], s2[ok] = eig.s1, eig.s2
    ow = np.where(ok, okubo_weiss(S, om), np.nan)
    rows = [[float(x), float(y), float(a), float(b), float(c), float(d)]
            for x, y, a, b, c, d in zip(X[ok], Y[ok], s1[ok], s2[ok], om[ok], ow[ok])]
    write_csv(w.path("strain.csv"), ["x", "y", "s1", "s2", "vorticity", "okubo_weiss"], rows)
    return X, Y, s2, ow


def _elliptic_stage(field, t, cfg, sing, h, w):
    max_sep = cfg.wedge_pair_distance or 20 * field.grid_step
    pairs = pair_wedges(sing, max_sep)
    mu_range = cfg.mu_range or default_mu_range(field, t)
    notes = []

    def run(pair):
        where = f"wedge pair at ({pair.midpoint[0]:.4g}, {pair.midpoint[1]:.4g})"
        try:
            L = cfg.section_half_length or default_half_length(pair, sing, cap=10 * max_sep)
            sec = build_section(pair, L, cfg.section_samples, sing)
            return sweep_mu(sec, mu_range, cfg.n_mu, field, t, step=h, singularities=sing)
        except SectionBlocked as exc:
            notes.append(f"{where}: {exc}")
            return None
        except OecsError as exc:
            raise type(exc)(f"{where}: {exc}") from exc

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            fams = list(ex.map(run, pairs))
    else:
        fams = [run(p) for p in pairs]
    fams = [f for f in fams if f is not None and f.cycles]
    curves = []
    for k, fam in enumerate(fams):
        for j, c in enumerate(fam.cycles):
            curves.append(({"family": k, "mu": float(c.mu), "sign": int(c.sign),
                            "area": float(c.area), "boundary": int(j == fam.boundary)}, c.cycle))
    write_polylines(w.path("elliptic_cycles.csv"), curves)
    summary = {"wedge_pairs": len(pairs), "families": len(fams),
               "cycles": sum(len(f.cycles) for f in fams), "mu_range": list(mu_range),
               "degenerate": sum(len(f.degenerate) for f in fams),
               "crossings_between_signs": sum(f.crossings_between_signs for f in fams)}
    return fams, summary, notes


def _hyperbolic_stage(field, t, sing, h, w):
    rep = saddle_comparison_report(field, t)
    attracting, repelling = find_eigenvalue_extrema(field, t)
    structs = []
    # a single core can carry both a repelling and an attracting curve
    for core in repelling + attracting:
        try:
            structs.append(extract_hyperbolic(core, core.kind, field, t, step=h,
                                              singularities=sing))
        except DegenerateCore:
            continue
    write_csv(w.path("saddles.csv"), ["type", "x", "y", "detail", "nearest", "matched"],
              [[r["type"], r["x"], r["y"], r["detail"], r["nearest"], int(r["matched"])]
               for r in rep.rows()])
    curves = []
    for k, s in enumerate(structs):
        for b, (pts, why) in enumerate(zip(s.branches, s.stop_reasons)):
            curves.append(({"structure": k, "kind": s.kind, "branch": b, "stop": why}, pts))
    write_polylines(w.path("hyperbolic_branches.csv"), curves)
    summary = {"objective_saddles": len(rep.saddles), "stagnation_saddles": len(rep.stagnation),
               "unmatched_saddles": len(rep.unmatched_saddles),
               "unmatched_stagnation": len(rep.unmatched_stagnation),
               "constant_strain": rep.constant_strain}
    return structs, rep, summary


def _parabolic_stage(field, t, cfg, sing, h, w):
    wedges = [s for s in sing if s.kind == WEDGE]
    segments, notes = [], []
    for tri in (s for s in sing if s.kind == TRISECTOR):
        try:
            seps = trisector_separatrices(tri, field, t, step=h)
        except LinearizationDegenerate as exc:
            notes.append(f"trisector at ({tri.x:.4g}, {tri.y:.4g}): {exc}")
            continue
        for fam in sorted(seps):
            for sp in seps[fam]:
                try:
                    seg = connect_to_wedge(sp, fam, field, t, wedges, cfg.capture_radius,
                                           step=h, start=tri, singularities=sing)
                except (NoConnection, OecsError):
                    continue
                weak_minimizer_check(seg, field, t)
                segments.append(seg)
    passed = [s for s in segments if s.check.passed]
    chains = assemble_chains(passed)
    write_polylines(w.path("parabolic_segments.csv"), [
        ({"family": s.family, "passed": int(s.check.passed),
          "fail_arclength": "" if s.check.fail_arclength is None else s.check.fail_arclength},
         s.polyline) for s in segments])
    write_csv(w.path("parabolic_chains.csv"), ["chain", "position", "family", "x0", "y0", "x1", "y1",
                                               "length"],
              [[k, j, s.family, float(s.polyline[0, 0]), float(s.polyline[0, 1]),
                float(s.polyline[-1, 0]), float(s.polyline[-1, 1]), s.length]
               for k, ch in enumerate(chains) for j, s in enumerate(ch.segments)])
    summary = {"segments": len(segments), "passed": len(passed), "chains": len(chains),
               "longest_chain": max((len(c.segments) for c in chains), default=0)}
    return segments, chains, summary, notes


def _advect_stage(field, t, cfg, fams, X, Y, ow, w):
    """Blob inside each family boundary versus one at the strongest OW minimum outside."""
    boundaries = [f.boundary_cycle.cycle for f in fams]
    inside = np.zeros(X.shape, dtype=bool)
    flat = np.column_stack([X.ravel(), Y.ravel()])
    for b in boundaries:
        inside |= MplPath(b).contains_points(flat).reshape(X.shape)
    rows, blobs, notes = [], [], []
    free = np.where(inside | ~np.isfinite(ow), np.inf, ow)
    ref = None
    if np.isfinite(free).any() and free.min() < 0:
        j, i = np.unravel_index(np.argmin(free), free.shape)
        ref = (float(X[j, i]), float(Y[j, i]))
    for k, b in enumerate(boundaries):
        area, centroid, _ = polygon_moments(b)
        r = cfg.blob_radius or 0.25 * np.sqrt(abs(area) / np.pi)
        cands = [("family", k, tuple(float(c) for c in centroid))]
        if ref is not None:
            cands.append(("okubo_weiss_min", k, ref))
        for label, fam, c in cands:
            try:
                m = blob_deformation_metric(MaterialBlob(c, r), field, t, t + cfg.advect_horizon)
            except LeftDomain as exc:
                notes.append(f"{label} blob at ({c[0]:.4g}, {c[1]:.4g}) left the domain "
                             f"at t = {exc.exit_time:.4g}")
                continue
            rows.append([label, fam, c[0], c[1], float(r), m.area_ratio, m.perimeter_ratio,
                         m.max_aspect])
            blobs.append((label, fam, c, m))
    write_csv(w.path("blobs.csv"), ["blob", "family", "x", "y", "radius", "area_ratio",
                                    "perimeter_ratio", "max_aspect"], rows)
    return blobs, {"blobs": len(rows), "horizon": cfg.advect_horizon}, notes


def _plots(field, X, Y, s2, ow, sing, res, w):
    bounds = field.bounds
    marks = [MarkerLayer(_pts([s for s in sing if s.kind == WEDGE]), "wedge", "o", "tab:blue"),
             MarkerLayer(_pts([s for s in sing if s.kind == TRISECTOR]), "trisector", "^",
                         "tab:red")]
    export_plot([HeatLayer(X[0], Y[:, 0], ow, "Okubo-Weiss")] + marks,
                w.path("singularities.svg"), "Strain singularities", bounds)
    if "elliptic" in res:
        cyc = [c for f in res["elliptic"] for c in f.cycles]
        export_plot([HeatLayer(X[0], Y[:, 0], s2, "s2", cmap="Greys", symmetric=False),
                     CurveLayer([c.cycle for c in cyc], "mu",
                                values=np.array([c.mu for c in cyc]))] + marks,
                    w.path("elliptic.svg"), "Elliptic structures", bounds)
    if "hyperbolic" in res:
        structs, rep = res["hyperbolic"]
        rep_c = [b for s in structs if s.kind == "repelling" for b in s.branches]
        att_c = [b for s in structs if s.kind == "attracting" for b in s.branches]
        export_plot([HeatLayer(X[0], Y[:, 0], s2, "s2", cmap="Greys", symmetric=False),
                     CurveLayer(rep_c, "repelling", "tab:red"),
                     CurveLayer(att_c, "attracting", "tab:blue"),
                     MarkerLayer(_pts(rep.saddles), "objective saddle", "s", "k"),
                     MarkerLayer(_pts(rep.stagnation), "stagnation point", "x", "tab:orange")],
                    w.path("hyperbolic.svg"), "Hyperbolic structures", bounds)
    if "parabolic" in res:
        segments, chains = res["parabolic"]
        export_plot([HeatLayer(X[0], Y[:, 0], s2, "s2", cmap="Greys", symmetric=False),
                     CurveLayer([s.polyline for s in segments if not s.check.passed],
                                "rejected", "0.6", linewidth=0.8),
                     CurveLayer([s.polyline for c in chains for s in c.segments], "chains",
                                "tab:green", linewidth=2.0)] + marks,
                    w.path("parabolic.svg"), "Parabolic structures", bounds)


def _manifest_config(cfg):
    # where outputs go is not part of the result; inputs are identified by content
    d = cfg.to_dict()
    d.pop("output_dir")
    if cfg.input is not None:
        d["input"] = {"name": Path(cfg.input).name, "sha256": sha256_file(cfg.input)}
    return d


def run_pipeline(config):
    """Run the configured stages and write all outputs.

    Raises
    ------
    ConfigError
        Before any computation if the configuration is invalid.
    """
    cfg = config.validate()
    field = load_field(cfg)
    t = float(cfg.time)
    h = cfg.step or field.grid_step / 5
    w = _Writer(cfg.output_dir)
    manifest = {"version": __version__, "config": _manifest_config(cfg),
                "field": {"kind": field.kind, "bounds": list(field.bounds),
                          "shape": [field.y_axis.count, field.x_axis.count]},
                "step": h, "counts": {}, "notes": []}
    X, Y, s2, ow = _strain_stage(field, t, w)
    sing = find_singularities(field, t)
    write_csv(w.path("singularities.csv"), ["x", "y", "kind", "delta", "transverse"],
              [[s.x, s.y, s.kind, s.delta, int(s.transverse)] for s in sing])
    manifest["counts"]["singularities"] = {k: sum(s.kind == k for s in sing)
                                           for k in ("wedge", "trisector", "unclassified")}
    log.info("%d singularities", len(sing))
    res = {}
    result = PipelineResult(manifest, w.out / "manifest.json", field, sing)
    if "elliptic" in cfg.stages or "advect" in cfg.stages:
        fams, summary, notes = _elliptic_stage(field, t, cfg, sing, h, w)
        res["elliptic"] = result.families = fams
        manifest["counts"]["elliptic"] = summary
        manifest["notes"] += notes
    if "hyperbolic" in cfg.stages:
        structs, rep, summary = _hyperbolic_stage(field, t, sing, h, w)
        result.hyperbolic, result.saddle_report = structs, rep
        res["hyperbolic"] = (structs, rep)
        manifest["counts"]["hyperbolic"] = summary
    if "parabolic" in cfg.stages:
        segments, chains, summary, notes = _parabolic_stage(field, t, cfg, sing, h, w)
        result.segments, result.chains = segments, chains
        res["parabolic"] = (segments, chains)
        manifest["counts"]["parabolic"] = summary
        manifest["notes"] += notes
    if "advect" in cfg.stages:
        blobs, summary, notes = _advect_stage(field, t, cfg, result.families, X, Y, ow, w)
        result.blobs = blobs
        manifest["counts"]["advect"] = summary
        manifest["notes"] += notes
    if cfg.plots:
        _plots(field, X, Y, s2, ow, sing, res, w)
    manifest["files"] = w.listing()
    write_json(result.manifest_path, manifest)
    return result
