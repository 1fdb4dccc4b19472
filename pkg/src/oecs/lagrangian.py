"""Particle advection and the finite-time deformation measures built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LeftDomain, OutOfDomain, SingularGradient
from .kinematics import R, strain_at

DEFAULT_STEPS = 200
#: Auxiliary-grid half spacing for flow-map gradients, relative to domain size.
GRADIENT_REL_DELTA = 1e-4


@dataclass
class FlowMapResult:
    positions: np.ndarray
    gradient: np.ndarray | None
    t0: float
    t1: float
    history: np.ndarray | None = None
    times: np.ndarray | None = None


@dataclass
class CauchyGreen:
    c11: np.ndarray
    c12: np.ndarray
    c22: np.ndarray

    @property
    def matrix(self):
        return np.stack([np.stack([self.c11, self.c12], -1),
                         np.stack([self.c12, self.c22], -1)], -2)


@dataclass
class TaylorCheck:
    slope: float
    taus: np.ndarray
    errors: np.ndarray
    exact: bool


@dataclass
class MaterialBlob:
    center: tuple
    radius: float
    n_boundary_points: int = 400

    @property
    def polygon(self):
        phi = np.linspace(0.0, 2 * np.pi, self.n_boundary_points, endpoint=False)
        c = np.asarray(self.center, dtype=float)
        return c + self.radius * np.column_stack([np.cos(phi), np.sin(phi)])


@dataclass
class BlobMetrics:
    area_ratio: float
    perimeter_ratio: float
    max_aspect: float
    initial_aspect: float
    final_polygon: np.ndarray


def _velocity(field, P, t, bounded):
    if bounded and not np.all(field.contains(P[..., 0], P[..., 1])):
        raise OutOfDomain("point outside the field domain")
    u, v = field.velocity(P[..., 0], P[..., 1], t)
    return np.stack([u, v], axis=-1)


def advect(points, field, t0, t1, dt=None, gradient=False, delta=None, bounded=None,
           keep_history=False):
    """Advect ``points`` from ``t0`` to ``t1`` with fixed-step RK4.

    Parameters
    ----------
    points : array_like, shape (..., 2)
    dt : float, optional
        Step size; defaults to ``(t1 - t0) / 200``. Backward advection is
        allowed, the sign of ``dt`` follows ``t1 - t0``.
    gradient : bool
        Also return the flow-map gradient from four auxiliary trajectories
        per point at ``+-delta`` (default ``1e-4`` times the domain size).
    bounded : bool, optional
        Require trajectories to stay inside the field bounds. Defaults to
        True for gridded fields; closed-form fields may be evaluated anywhere.

    Raises
    ------
    LeftDomain
        When a trajectory leaves the domain; ``exit_time`` is the start of
        the failing step.
    """
    P0 = np.asarray(points, dtype=float)
    shape = P0.shape[:-1]
    P = P0.reshape(-1, 2)
    span = float(t1) - float(t0)
    if dt is None:
        n_steps = DEFAULT_STEPS
    else:
        if dt <= 0:
            raise ValueError("dt must be positive")
        n_steps = max(1, int(np.ceil(abs(span) / dt - 1e-9)))
    h = span / n_steps
    bounded = field.kind == "gridded" if bounded is None else bounded
    if gradient:
        d = GRADIENT_REL_DELTA * field.extent if delta is None else delta
        offs = np.array([[0, 0], [d, 0], [-d, 0], [0, d], [0, -d]])
        X = P[:, None, :] + offs[None]
    else:
        X = P[:, None, :]
    hist = [X[:, 0].copy()] if keep_history else None
    t = float(t0)
    for k in range(n_steps):
        try:
            k1 = _velocity(field, X, t, bounded)
            k2 = _velocity(field, X + 0.5 * h * k1, t + 0.5 * h, bounded)
            k3 = _velocity(field, X + 0.5 * h * k2, t + 0.5 * h, bounded)
            k4 = _velocity(field, X + h * k3, t + h, bounded)
        except OutOfDomain as exc:
            raise LeftDomain(f"trajectory left the domain near t = {t:.6g}", exit_time=t) from exc
        X = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = float(t0) + (k + 1) * h
        if keep_history:
            hist.append(X[:, 0].copy())
    if bounded and not np.all(field.contains(X[..., 0], X[..., 1])):
        raise LeftDomain(f"trajectory left the domain near t = {t:.6g}", exit_time=t)
    G = None
    if gradient:
        G = np.empty((len(P), 2, 2))
        G[:, :, 0] = (X[:, 1] - X[:, 2]) / (2 * d)
        G[:, :, 1] = (X[:, 3] - X[:, 4]) / (2 * d)
        G = G.reshape(shape + (2, 2))
    history = times = None
    if keep_history:
        history = np.stack(hist).reshape((n_steps + 1,) + shape + (2,))
        times = float(t0) + h * np.arange(n_steps + 1)
    return FlowMapResult(X[:, 0].reshape(shape + (2,)), G, float(t0), float(t1), history, times)


def cauchy_green(gradient):
    """Right Cauchy--Green tensor ``(grad F)^T grad F``.

    Raises
    ------
    SingularGradient
        If any gradient has a (numerically) vanishing determinant.
    """
    G = np.asarray(gradient, dtype=float)
    det = np.linalg.det(G)
    scale = np.sum(G * G, axis=(-2, -1))
    if np.any(~np.isfinite(det)) or np.any(np.abs(det) <= 1e-14 * np.maximum(scale, 1e-300)):
        raise SingularGradient("flow-map gradient is singular")
    C = np.swapaxes(G, -1, -2) @ G
    return CauchyGreen(C[..., 0, 0], 0.5 * (C[..., 0, 1] + C[..., 1, 0]), C[..., 1, 1])


def taylor_order_check(field, x0, t0, tau_list, dt=None):
    """Log--log slope of ``||C(tau) - I - 2 S tau||_F`` against ``tau``.

    The remainder of the linear expansion of ``C`` is quadratic in ``tau``,
    so the slope should be close to 2. When every error is at rounding
    level the expansion is exact (``exact=True``, slope NaN).
    """
    taus = np.asarray(sorted(tau_list), dtype=float)
    # a factor of 4 is enough for a stable slope fit
    if taus.min() <= 0 or taus.max() / taus.min() < 4:
        raise ValueError("tau values must be positive and span at least a factor of 4")
    x0 = np.asarray(x0, dtype=float)
    S = strain_at(field, x0[0], x0[1], t0)
    I = np.eye(2)
    errs = []
    for tau in taus:
        res = advect(x0, field, t0, t0 + tau, dt=dt, gradient=True)
        C = cauchy_green(res.gradient).matrix
        errs.append(float(np.linalg.norm(C - I - 2 * S * tau)))
    errs = np.array(errs)
    if np.all(errs < 1e-9):
        return TaylorCheck(float("nan"), taus, errs, True)
    slope = float(np.polyfit(np.log(taus), np.log(errs), 1)[0])
    return TaylorCheck(slope, taus, errs, False)


def _curve_tangents(P, closed):
    if closed:
        return 0.5 * (np.roll(P, -1, axis=0) - np.roll(P, 1, axis=0))
    return np.gradient(P, axis=0)


def finite_time_measures(curve, field, t0, t1, dt=None, tangents=None, closed=False):
    """Finite-time shear ``p`` and stretch ``q`` of a material curve.

    ``q = sqrt(<x', C x'> / <x', x'>)`` and
    ``p = <x', D x'> / sqrt(<x', C x'> <x', x'>)`` with ``D = (C R - R C) / 2``,
    evaluated at each vertex of ``curve`` with tangents ``x'`` (finite
    differences of the vertices unless given).

    Returns
    -------
    (ndarray, ndarray)
        ``p`` and ``q`` per vertex.
    """
    P = np.asarray(curve, dtype=float)
    X = _curve_tangents(P, closed) if tangents is None else np.asarray(tangents, float)
    res = advect(P, field, t0, t1, dt=dt, gradient=True)
    C = cauchy_green(res.gradient).matrix
    D = 0.5 * (C @ R - R @ C)
    xx = np.einsum("ni,ni->n", X, X)
    xCx = np.einsum("ni,nij,nj->n", X, C, X)
    xDx = np.einsum("ni,nij,nj->n", X, D, X)
    q = np.sqrt(xCx / xx)
    p = xDx / np.sqrt(xCx * xx)
    return p, q


def polygon_moments(P):
    """Area, centroid and central second-moment matrix of a simple polygon."""
    x, y = P[:, 0], P[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    A = 0.5 * cr.sum()
    cx = ((x + xn) * cr).sum() / (6 * A)
    cy = ((y + yn) * cr).sum() / (6 * A)
    ixx = ((x * x + x * xn + xn * xn) * cr).sum() / 12
    iyy = ((y * y + y * yn + yn * yn) * cr).sum() / 12
    ixy = ((x * yn + 2 * x * y + 2 * xn * yn + xn * y) * cr).sum() / 24
    M = np.array([[ixx - A * cx * cx, ixy - A * cx * cy],
                  [ixy - A * cx * cy, iyy - A * cy * cy]]) / A
    return A, np.array([cx, cy]), M


def _aspect(P):
    lam = np.linalg.eigvalsh(polygon_moments(P)[2])
    return float(np.sqrt(lam[1] / lam[0]))


def _perimeter(P):
    return float(np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1).sum())


def blob_deformation_metric(blob, field, t0, t1, dt=None, n_frames=20):
    """Deformation of a material blob over ``[t0, t1]``.

    Area and perimeter ratios compare the advected boundary polygon with
    the initial one. The aspect ratio is that of the polygon's
    second-moment ellipse; ``max_aspect`` is its largest value over
    ``n_frames`` equally spaced times including ``t1``.

    Raises
    ------
    LeftDomain
    """
    P = blob.polygon if isinstance(blob, MaterialBlob) else np.asarray(blob, dtype=float)
    res = advect(P, field, t0, t1, dt=dt, keep_history=True)
    idx = np.unique(np.linspace(0, len(res.times) - 1, n_frames + 1).round().astype(int))
    aspects = [_aspect(res.history[i]) for i in idx]
    Q = res.positions
    a0 = polygon_moments(P)[0]
    return BlobMetrics(float(polygon_moments(Q)[0] / a0), _perimeter(Q) / _perimeter(P),
                       max(aspects), aspects[0], Q)
