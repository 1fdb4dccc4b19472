"""Layered SVG figures of detected structures.

Figures are built on a bare :class:`matplotlib.figure.Figure` (no pyplot
state) and saved with a fixed hash salt and no date, so equal inputs give
byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure

_RC = {"svg.hashsalt": "oecs", "svg.fonttype": "path", "path.simplify": False}


@dataclass
class HeatLayer:
    """Scalar field on a regular grid, drawn as an image."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    label: str = ""
    cmap: str = "RdBu_r"
    symmetric: bool = True


@dataclass
class CurveLayer:
    """Polylines, optionally coloured by one value per curve."""

    curves: list
    label: str = ""
    color: str = "k"
    values: np.ndarray | None = None
    cmap: str = "viridis"
    linewidth: float = 1.2


@dataclass
class MarkerLayer:
    points: np.ndarray
    label: str = ""
    marker: str = "o"
    color: str = "k"
    size: float = 30.0
    extra: dict = dc_field(default_factory=dict)


def _draw_heat(ax, fig, layer):
    v = np.ma.masked_invalid(np.asarray(layer.values, dtype=float))
    if layer.symmetric and v.count():
        m = float(np.abs(v).max()) or 1.0
        vmin, vmax = -m, m
    else:
        vmin = vmax = None
    x, y = np.asarray(layer.x), np.asarray(layer.y)
    dx = (x[-1] - x[0]) / (len(x) - 1) / 2
    dy = (y[-1] - y[0]) / (len(y) - 1) / 2
    im = ax.imshow(v, origin="lower", cmap=layer.cmap, vmin=vmin, vmax=vmax,
                   extent=(x[0] - dx, x[-1] + dx, y[0] - dy, y[-1] + dy),
                   interpolation="nearest", aspect="equal")
    fig.colorbar(im, ax=ax, label=layer.label, shrink=0.8)


def _draw_curves(ax, fig, layer):
    if not layer.curves:
        return
    segs = [np.asarray(c, dtype=float) for c in layer.curves]
    if layer.values is None:
        lc = LineCollection(segs, colors=layer.color, linewidths=layer.linewidth,
                            label=layer.label or None)
        ax.add_collection(lc)
        return
    lc = LineCollection(segs, cmap=layer.cmap, linewidths=layer.linewidth)
    lc.set_array(np.asarray(layer.values, dtype=float))
    ax.add_collection(lc)
    fig.colorbar(lc, ax=ax, label=layer.label, shrink=0.8)


def export_plot(layers, path, title=None, bounds=None, xlabel="x", ylabel="y"):
    """Render ``layers`` (drawn in order) to an SVG file at ``path``.

    An empty layer list gives a valid figure with axes only. ``bounds`` is
    ``(x0, x1, y0, y1)``; by default the data limits are used.
    """
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(6.4, 5.2))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot()
        has_legend = False
        for layer in layers:
            if isinstance(layer, HeatLayer):
                _draw_heat(ax, fig, layer)
            elif isinstance(layer, CurveLayer):
                _draw_curves(ax, fig, layer)
                has_legend |= bool(layer.label) and layer.values is None and bool(layer.curves)
            elif isinstance(layer, MarkerLayer):
                pts = np.asarray(layer.points, dtype=float).reshape(-1, 2)
                if len(pts):
                    ax.scatter(pts[:, 0], pts[:, 1], marker=layer.marker, c=layer.color,
                               s=layer.size, label=layer.label or None, zorder=3,
                               **layer.extra)
                    has_legend |= bool(layer.label)
            else:
                raise TypeError(f"unknown layer type {type(layer).__name__}")
        if bounds is not None:
            ax.set_xlim(bounds[0], bounds[1])
            ax.set_ylim(bounds[2], bounds[3])
        else:
            ax.autoscale_view()
        ax.set_aspect("equal", adjustable="box")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if has_legend:
            ax.legend(loc="upper right", fontsize="small")
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path
