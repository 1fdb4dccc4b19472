"""Text grid formats, CSV tables and the JSON run manifest.

``OECS-GRID 1`` files hold velocity samples::

    OECS-GRID 1
    nx ny nt
    x0 dx y0 dy t0 dt
    u v            (nx*ny*nt lines, x fastest, then y, then t)

``OECS-SSH 1`` uses the same layout with a single ``h`` column. A file with
``nt = 1`` is read as a snapshot valid at any time.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .geostrophic import SshGrid
from .grid_field import GridAxis, GriddedField

GRID_MAGIC = "OECS-GRID 1"
SSH_MAGIC = "OECS-SSH 1"


def _fmt(x):
    return repr(float(x))


def _read_lattice(path, magic, ncols):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    with path.open("r", encoding="ascii") as fh:
        head = fh.readline().strip()
        if head != magic:
            raise DataError(f"{path}: expected header {magic!r}, got {head!r}")
        try:
            nx, ny, nt = (int(s) for s in fh.readline().split())
            x0, dx, y0, dy, t0, dt = (float(s) for s in fh.readline().split())
        except ValueError as exc:
            raise DataError(f"{path}: malformed size or axis line") from exc
        try:
            data = np.loadtxt(fh, dtype=float, ndmin=2)
        except ValueError as exc:
            raise DataError(f"{path}: malformed sample line ({exc})") from exc
    if data.shape != (nx * ny * nt, ncols):
        raise DataError(f"{path}: expected {nx * ny * nt} lines of {ncols} values, "
                        f"got array of shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: non-finite samples")
    try:
        xa, ya = GridAxis(x0, dx, nx), GridAxis(y0, dy, ny)
        ta = GridAxis(t0, dt, nt) if nt > 1 else None
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return xa, ya, ta, data.reshape(nt, ny, nx, ncols)


def _write_lattice(path, magic, xa, ya, ta, columns):
    nt = 1 if ta is None else ta.count
    t0, dt = (0.0, 1.0) if ta is None else (ta.start, ta.step)
    cols = np.stack([np.asarray(c, dtype=float).reshape(nt, ya.count, xa.count) for c in columns],
                    axis=-1).reshape(-1, len(columns))
    with Path(path).open("w", encoding="ascii", newline="\n") as fh:
        fh.write(magic + "\n")
        fh.write(f"{xa.count} {ya.count} {nt}\n")
        fh.write(" ".join(_fmt(v) for v in (xa.start, xa.step, ya.start, ya.step, t0, dt)) + "\n")
        for row in cols:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def read_grid(path):
    """Load an ``OECS-GRID 1`` file as a :class:`GriddedField`."""
    xa, ya, ta, d = _read_lattice(path, GRID_MAGIC, 2)
    return GriddedField(xa, ya, ta, d[..., 0], d[..., 1])


def write_grid(path, field):
    _write_lattice(path, GRID_MAGIC, field.x_axis, field.y_axis, field.t_axis,
                   (field.u, field.v))


def read_ssh(path):
    """Load an ``OECS-SSH 1`` file (lon/lat in degrees, t in days, h in m)."""
    xa, ya, ta, d = _read_lattice(path, SSH_MAGIC, 1)
    return SshGrid(xa, ya, ta, d[..., 0])


def write_ssh(path, ssh):
    _write_lattice(path, SSH_MAGIC, ssh.lon, ssh.lat, ssh.t_axis, (ssh.h,))


def write_csv(path, header, rows):
    """Write rows (sequences or dicts keyed by ``header``) with plain floats."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            if isinstance(r, dict):
                r = [r[k] for k in header]
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def write_polylines(path, curves):
    """One row per vertex: ``curve, vertex, x, y`` plus per-curve attributes.

    ``curves`` is a list of ``(attributes_dict, points)``; all dicts must
    share the same keys.
    """
    keys = list(curves[0][0]) if curves else []
    rows = []
    for cid, (attrs, pts) in enumerate(curves):
        for k, (x, y) in enumerate(np.asarray(pts, dtype=float)):
            rows.append([cid, k, float(x), float(y)] + [attrs[a] for a in keys])
    write_csv(path, ["curve", "vertex", "x", "y"] + keys, rows)


def sha256_file(path):
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_json(path, obj):
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
