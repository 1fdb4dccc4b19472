"""Command-line front end.

Every verb accepts ``--config FILE`` (JSON with :class:`RunConfig` keys)
and flag overrides. Exit status: 0 success, 2 configuration error, 3 data
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, OecsError
from .geostrophic import GeoConstants, geostrophic_velocity
from .grid_field import GridAxis, GriddedField
from .io import read_ssh, write_csv, write_grid, write_json
from .kinematics import FrameChange, TransformedField, find_stagnation_points
from .lagrangian import MaterialBlob, advect, blob_deformation_metric, cauchy_green
from .pipeline import RunConfig, load_field, run_pipeline
from .plotting import CurveLayer, MarkerLayer, export_plot

log = logging.getLogger("oecs")

PIPELINE_VERBS = {
    "strain": (),
    "singularities": (),
    "elliptic": ("elliptic",),
    "hyperbolic": ("hyperbolic",),
    "parabolic": ("parabolic",),
    "report": ("elliptic", "hyperbolic", "parabolic", "advect"),
}


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _key_values(items, what):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"{what} expects KEY=VALUE, got {item!r}")
        out[key.replace("-", "_")] = _parse_value(value)
    return out


def _add_source(p):
    g = p.add_argument_group("input")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--flow", help="analytic flow name")
    g.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="analytic flow parameter (repeatable)")
    g.add_argument("--input", help="OECS-GRID (or OECS-SSH with --input-kind ssh) file")
    g.add_argument("--input-kind", choices=("grid", "ssh"))
    g.add_argument("--time", type=float, help="analysis time")
    g.add_argument("-o", "--output", help="output directory")
    g.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key (value parsed as JSON when possible)")


def _config(args, stages=None):
    base = {}
    if args.config:
        base = RunConfig.from_file(args.config).to_dict()
    if args.flow is not None:
        base["flow"], base["input"] = args.flow, None
    if args.input is not None:
        base["input"], base["flow"] = args.input, None
    if args.input_kind is not None:
        base["input_kind"] = args.input_kind
    if args.param:
        base["flow_params"] = {**base.get("flow_params", {}), **_key_values(args.param, "--param")}
    if args.time is not None:
        base["time"] = args.time
    if args.output is not None:
        base["output_dir"] = args.output
    if stages is not None:
        base["stages"] = list(stages)
    base.update(_key_values(args.set, "--set"))
    return RunConfig.from_dict(base).validate()


def _cmd_pipeline(args):
    cfg = _config(args, PIPELINE_VERBS[args.verb])
    res = run_pipeline(cfg)
    print(json.dumps(res.manifest["counts"], sort_keys=True))
    for note in res.manifest["notes"]:
        print(f"note: {note}", file=sys.stderr)
    print(f"wrote {res.manifest_path}")
    return 0


def _load_points(args):
    if args.points:
        try:
            pts = np.loadtxt(args.points, delimiter=",", skiprows=1, usecols=(0, 1), ndmin=2)
        except OSError as exc:
            raise ConfigError(f"cannot read points file {args.points}") from exc
        return pts
    if args.point:
        return np.array(args.point, dtype=float).reshape(-1, 2)
    return None


def _cmd_advect(args):
    cfg = _config(args, ())
    field = load_field(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = cfg.time
    t1 = t0 + (args.horizon if args.horizon is not None else cfg.advect_horizon)
    pts = _load_points(args)
    if pts is None and args.blob is None:
        raise ConfigError("give --points, --point or --blob")
    summary = {}
    if pts is not None:
        res = advect(pts, field, t0, t1, dt=args.dt, gradient=True)
        C = cauchy_green(res.gradient)
        rows = [[*p0, *p1, a, b, c] for p0, p1, a, b, c in
                zip(pts.tolist(), res.positions.tolist(), C.c11, C.c12, C.c22)]
        write_csv(out / "flowmap.csv", ["x0", "y0", "x1", "y1", "c11", "c12", "c22"], rows)
        summary["points"] = len(pts)
    if args.blob is not None:
        cx, cy, r = args.blob
        blob = MaterialBlob((cx, cy), r)
        m = blob_deformation_metric(blob, field, t0, t1, dt=args.dt)
        summary["blob"] = {"center": [cx, cy], "radius": r, "area_ratio": m.area_ratio,
                           "perimeter_ratio": m.perimeter_ratio, "max_aspect": m.max_aspect}
        closed = lambda P: np.vstack([P, P[:1]])
        export_plot([CurveLayer([closed(blob.polygon)], "initial", "0.5"),
                     CurveLayer([closed(m.final_polygon)], "advected", "tab:red")],
                    out / "blob.svg", f"Blob over [{t0:g}, {t1:g}]")
    summary.update({"t0": t0, "t1": t1})
    write_json(out / "advect.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_geostrophic(args):
    if not args.input:
        raise ConfigError("geostrophic needs --input (an OECS-SSH file)")
    if not Path(args.input).is_file():
        raise ConfigError(f"input file not found: {args.input}")
    consts = GeoConstants(args.g, args.earth_radius, args.omega)
    field = geostrophic_velocity(read_ssh(args.input), consts, args.equator_cutoff)
    write_grid(args.out, field)
    speed = np.hypot(field.u, field.v)
    print(f"wrote {args.out} (deg/day; max speed {speed.max():.6g})")
    return 0


def _cmd_frame(args):
    cfg = _config(args, ())
    field = load_field(cfg)
    frame = FrameChange.uniform(args.theta0, args.rotation_rate, args.offset, args.velocity)
    tf = TransformedField(field, frame, t_ref=cfg.time)
    t_axis = GridAxis(cfg.time, args.dt, args.nt) if args.nt > 1 else None
    sampled = GriddedField.from_function(tf.velocity, tf.x_axis, tf.y_axis, t_axis)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_grid(out / "transformed.grid", sampled)
    st_old = find_stagnation_points(field, cfg.time)
    st_new = find_stagnation_points(tf, cfg.time)
    export_plot([MarkerLayer(np.array([q.position for q in st_new]).reshape(-1, 2),
                             "stagnation points (new frame)", "x", "tab:orange")],
                out / "transformed.svg", "Transformed frame",
                (*tf.x_axis.coords[[0, -1]], *tf.y_axis.coords[[0, -1]]))
    print(json.dumps({"stagnation_points_old": len(st_old),
                      "stagnation_points_new": len(st_new)}))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="oecs", description="Objective Eulerian coherent structures")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="verb", required=True)
    helps = {"strain": "rate-of-strain invariants and singularities",
             "singularities": "wedge/trisector singularities of the strain tensor",
             "elliptic": "elliptic families around wedge pairs",
             "hyperbolic": "objective saddles and their attracting/repelling curves",
             "parabolic": "alternating wedge-trisector chains (jet cores)",
             "report": "all stages plus blob advection, with figures"}
    for verb, text in helps.items():
        sp = sub.add_parser(verb, help=text)
        _add_source(sp)
        sp.set_defaults(func=_cmd_pipeline)

    sp = sub.add_parser("advect", help="advect points or a circular blob")
    _add_source(sp)
    sp.add_argument("--points", help="CSV with x,y columns and a header line")
    sp.add_argument("--point", type=float, nargs=2, action="append", metavar=("X", "Y"))
    sp.add_argument("--blob", type=float, nargs=3, metavar=("CX", "CY", "R"))
    sp.add_argument("--horizon", type=float)
    sp.add_argument("--dt", type=float)
    sp.set_defaults(func=_cmd_advect)

    sp = sub.add_parser("geostrophic", help="SSH (OECS-SSH) to velocity in deg/day (OECS-GRID)")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True, help="output OECS-GRID file")
    sp.add_argument("--g", type=float, default=9.81)
    sp.add_argument("--earth-radius", type=float, default=6.371e6)
    sp.add_argument("--omega", type=float, default=7.2921e-5)
    sp.add_argument("--equator-cutoff", type=float, default=5.0)
    sp.set_defaults(func=_cmd_geostrophic)

    sp = sub.add_parser("frame-transform", help="resample a field in a rotating/translating frame")
    _add_source(sp)
    sp.add_argument("--theta0", type=float, default=0.0)
    sp.add_argument("--rotation-rate", type=float, default=0.0)
    sp.add_argument("--offset", type=float, nargs=2, default=(0.0, 0.0))
    sp.add_argument("--velocity", type=float, nargs=2, default=(0.0, 0.0))
    sp.add_argument("--nt", type=int, default=1)
    sp.add_argument("--dt", type=float, default=1.0)
    sp.set_defaults(func=_cmd_frame)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OecsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
