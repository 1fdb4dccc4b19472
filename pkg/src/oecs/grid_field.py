"""Velocity fields on regular grids and in closed form.

Two concrete field types share one small interface:

* :class:`GriddedField` holds samples on a regular ``(t, y, x)`` lattice and
  interpolates bilinearly in space and linearly in time.
* :class:`AnalyticField` wraps closed-form velocity and gradient functions.

Both expose ``velocity(x, y, t)`` and ``gradient(x, y, t)`` on broadcastable
numpy arrays, plus ``contains`` masks used by the integrators to stop at
the data edge. Field objects are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain

# Relative slack used when testing whether a coordinate is on the grid.
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class GridAxis:
    """Regularly spaced coordinate axis ``start + k * step``, ``k < count``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not np.isfinite(self.start) or not np.isfinite(self.step):
            raise ValueError("axis start and step must be finite")
        if self.step <= 0:
            raise ValueError(f"axis step must be positive, got {self.step}")
        if self.count < 2:
            raise ValueError(f"axis needs at least 2 nodes, got {self.count}")

    @classmethod
    def from_bounds(cls, lo, hi, count):
        return cls(float(lo), (float(hi) - float(lo)) / (count - 1), int(count))

    @property
    def stop(self):
        return self.start + self.step * (self.count - 1)

    @property
    def coords(self):
        return self.start + self.step * np.arange(self.count)

    def locate(self, x):
        """Cell index and fractional offset of ``x`` (clipped to the last cell)."""
        s = (np.asarray(x, dtype=float) - self.start) / self.step
        i = np.clip(np.floor(s).astype(int), 0, self.count - 2)
        return i, s - i


class VelocityField:
    """Common interface of gridded and analytic velocity fields.

    Subclasses set ``kind``, ``x_axis`` and ``y_axis`` and implement
    :meth:`velocity` and :meth:`gradient`. The axes define the analysis
    grid and the spatial domain.
    """

    kind = "abstract"
    x_axis: GridAxis
    y_axis: GridAxis
    #: Width of the finite-difference stencil used by :meth:`gradient`;
    #: zero when gradients are exact.
    stencil = 0.0

    def velocity(self, x, y, t):
        raise NotImplementedError

    def gradient(self, x, y, t):
        """Velocity gradient with shape ``broadcast(x, y).shape + (2, 2)``.

        Entry ``[..., i, j]`` is the derivative of component ``i`` with
        respect to coordinate ``j``.
        """
        raise NotImplementedError

    @property
    def bounds(self):
        return (self.x_axis.start, self.x_axis.stop,
                self.y_axis.start, self.y_axis.stop)

    @property
    def grid_step(self):
        return min(self.x_axis.step, self.y_axis.step)

    @property
    def extent(self):
        x0, x1, y0, y1 = self.bounds
        return max(x1 - x0, y1 - y0)

    def contains(self, x, y, margin=0.0):
        x0, x1, y0, y1 = self.bounds
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        tol = _EDGE_TOL * max(self.extent, 1.0)
        return ((x >= x0 + margin - tol) & (x <= x1 - margin + tol)
                & (y >= y0 + margin - tol) & (y <= y1 - margin + tol))

    def gradient_ok(self, x, y):
        """Mask of points where :meth:`gradient` can be evaluated."""
        return self.contains(x, y, margin=self.stencil)

    def grid(self):
        """Meshgrid ``(X, Y)`` of the analysis grid, shape ``(ny, nx)``."""
        return np.meshgrid(self.x_axis.coords, self.y_axis.coords)


class GriddedField(VelocityField):
    """Velocity samples on a regular lattice.

    Parameters
    ----------
    x_axis, y_axis : GridAxis
        Spatial axes.
    t_axis : GridAxis or None
        Time axis. ``None`` marks a single frozen snapshot valid at any time.
    u, v : array_like
        Velocity components with shape ``(nt, ny, nx)`` (or ``(ny, nx)`` for a
        snapshot).
    """

    kind = "gridded"

    def __init__(self, x_axis, y_axis, t_axis, u, v):
        u = np.array(u, dtype=float)
        v = np.array(v, dtype=float)
        if u.ndim == 2:
            u, v = u[None], v[None]
        nt = 1 if t_axis is None else t_axis.count
        shape = (nt, y_axis.count, x_axis.count)
        if u.shape != shape or v.shape != shape:
            raise ValueError(f"samples must have shape {shape}, got {u.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("gridded samples must be finite")
        u.setflags(write=False)
        v.setflags(write=False)
        self.x_axis, self.y_axis, self.t_axis = x_axis, y_axis, t_axis
        self.u, self.v = u, v
        self.stencil = max(x_axis.step, y_axis.step)

    @classmethod
    def from_function(cls, fn, x_axis, y_axis, t_axis=None):
        """Sample ``fn(x, y, t) -> (u, v)`` on the lattice."""
        X, Y = np.meshgrid(x_axis.coords, y_axis.coords)
        times = [0.0] if t_axis is None else list(t_axis.coords)
        us, vs = [], []
        for t in times:
            u, v = fn(X, Y, t)
            us.append(np.broadcast_to(u, X.shape))
            vs.append(np.broadcast_to(v, X.shape))
        return cls(x_axis, y_axis, t_axis, np.stack(us), np.stack(vs))

    def _time_weights(self, t):
        if self.t_axis is None:
            return 0, 0, 0.0
        ax = self.t_axis
        tol = _EDGE_TOL * max(abs(ax.stop - ax.start), 1.0)
        if t < ax.start - tol or t > ax.stop + tol:
            raise OutOfDomain(f"time {t} outside [{ax.start}, {ax.stop}]")
        k, w = ax.locate(t)
        k, w = int(k), float(np.clip(w, 0.0, 1.0))
        return k, k + 1, w

    def _interp(self, x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not np.all(self.contains(x, y)):
            raise OutOfDomain("point outside gridded domain "
                              f"{tuple(round(b, 6) for b in self.bounds)}")
        k0, k1, wt = self._time_weights(t)
        i, fx = self.x_axis.locate(x)
        j, fy = self.y_axis.locate(y)
        out = []
        for comp in (self.u, self.v):
            val = 0.0
            for k, wk in ((k0, 1.0 - wt), (k1, wt)):
                if wk == 0.0:
                    continue
                c = comp[k]
                val = val + wk * ((1 - fx) * (1 - fy) * c[j, i]
                                  + fx * (1 - fy) * c[j, i + 1]
                                  + (1 - fx) * fy * c[j + 1, i]
                                  + fx * fy * c[j + 1, i + 1])
            out.append(val)
        return out[0], out[1]

    def velocity(self, x, y, t):
        return self._interp(x, y, t)

    def gradient(self, x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not np.all(self.gradient_ok(x, y)):
            raise OutOfDomain("gradient stencil leaves the gridded domain")
        hx, hy = self.x_axis.step, self.y_axis.step
        # clip keeps stencil nodes on the grid despite the edge tolerance
        x0, x1, y0, y1 = self.bounds
        up, vp = self._interp(np.minimum(x + hx, x1), y, t)
        um, vm = self._interp(np.maximum(x - hx, x0), y, t)
        uq, vq = self._interp(x, np.minimum(y + hy, y1), t)
        un, vn = self._interp(x, np.maximum(y - hy, y0), t)
        J = np.empty(np.broadcast(x, y).shape + (2, 2))
        J[..., 0, 0] = (up - um) / (2 * hx)
        J[..., 1, 0] = (vp - vm) / (2 * hx)
        J[..., 0, 1] = (uq - un) / (2 * hy)
        J[..., 1, 1] = (vq - vn) / (2 * hy)
        return J


class AnalyticField(VelocityField):
    """Closed-form velocity field with exact gradients.

    ``velocity_fn(x, y, t)`` returns ``(u, v)``; ``gradient_fn(x, y, t)``
    returns the four entries ``(du/dx, du/dy, dv/dx, dv/dy)``. Both act
    elementwise on numpy arrays. The axes only bound the analysis domain;
    evaluation is valid everywhere.
    """

    kind = "analytic"

    def __init__(self, name, params, velocity_fn, gradient_fn, x_axis, y_axis):
        self.name = name
        self.params = dict(params)
        self._vel = velocity_fn
        self._grad = gradient_fn
        self.x_axis, self.y_axis = x_axis, y_axis

    def velocity(self, x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        u, v = self._vel(x, y, t)
        shape = np.broadcast(x, y).shape
        return np.broadcast_to(u, shape) * 1.0, np.broadcast_to(v, shape) * 1.0

    def gradient(self, x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        a, b, c, d = self._grad(x, y, t)
        J = np.empty(np.broadcast(x, y).shape + (2, 2))
        J[..., 0, 0] = a
        J[..., 0, 1] = b
        J[..., 1, 0] = c
        J[..., 1, 1] = d
        return J

    def with_axes(self, x_axis, y_axis):
        return AnalyticField(self.name, self.params, self._vel, self._grad,
                             x_axis, y_axis)

    def __repr__(self):
        return f"AnalyticField({self.name!r}, {self.params})"


def sample_velocity(field, x, t):
    """Velocity vector at point ``x = (x1, x2)`` and time ``t``."""
    u, v = field.velocity(x[0], x[1], t)
    return np.array([float(u), float(v)])


def velocity_gradient(field, x, t):
    """2x2 velocity gradient at point ``x`` and time ``t``."""
    return field.gradient(np.float64(x[0]), np.float64(x[1]), t)
