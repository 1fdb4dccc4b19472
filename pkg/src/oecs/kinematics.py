"""Rate-of-strain kinematics, deformation rates and observer changes.

Tensors are plain numpy arrays whose trailing two axes are the 2x2 matrix,
so every function works on a single point or on whole grids at once.
The 90-degree rotation ``R = [[0, -1], [1, 0]]`` fixes the relative
orientation of the eigenvectors, ``e2 = R e1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import Degenerate, OutOfDomain, ZeroTangent
from .grid_field import GridAxis, VelocityField

R = np.array([[0.0, -1.0], [1.0, 0.0]])

#: Relative threshold below which two eigenvalues count as repeated.
DEGENERACY_RTOL = 1e-10


def rot90(v):
    """Apply ``R`` to vectors stored in the last axis."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def strain_and_spin(J):
    """Split a velocity gradient into ``S = (J + J^T)/2`` and ``W = (J - J^T)/2``."""
    J = np.asarray(J, dtype=float)
    Jt = np.swapaxes(J, -1, -2)
    return 0.5 * (J + Jt), 0.5 * (J - Jt)


def vorticity(J):
    """Scalar vorticity ``dv/dx - du/dy`` (twice the spin entry ``W[1, 0]``)."""
    J = np.asarray(J, dtype=float)
    return J[..., 1, 0] - J[..., 0, 1]


@dataclass(frozen=True)
class StrainEigenData:
    """Eigenvalues ``s1 <= s2`` and unit eigenvectors with ``e2 = R e1``.

    Fields may be scalars/vectors or arrays of them; ``degenerate`` marks
    points with repeated eigenvalues where ``e1`` and ``e2`` are arbitrary.
    """

    s1: np.ndarray
    s2: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    degenerate: np.ndarray


def degeneracy_threshold(s1, s2):
    return DEGENERACY_RTOL * np.maximum(np.maximum(np.abs(s1), np.abs(s2)), 1.0)


def eigen_fields(S):
    """Closed-form eigen-decomposition of (stacks of) symmetric 2x2 tensors.

    The sign of ``e1`` is fixed globally: its first nonzero component is
    positive. ``e2`` is then ``R e1``.
    """
    S = np.asarray(S, dtype=float)
    a, b, d = S[..., 0, 0], S[..., 0, 1], S[..., 1, 1]
    m = 0.5 * (a + d)
    r = np.hypot(0.5 * (a - d), b)
    s1, s2 = m - r, m + r
    theta = 0.5 * np.arctan2(2.0 * b, a - d)  # direction of the s2 eigenvector
    e1 = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    flip = (e1[..., 0] < 0) | ((e1[..., 0] == 0) & (e1[..., 1] < 0))
    e1 = np.where(flip[..., None], -e1, e1)
    e1 = e1 / np.linalg.norm(e1, axis=-1, keepdims=True)
    return StrainEigenData(s1, s2, e1, rot90(e1),
                           (s2 - s1) < degeneracy_threshold(s1, s2))


def strain_eigen(S):
    """Eigen-decomposition of a single rate-of-strain tensor.

    Raises
    ------
    Degenerate
        If the eigenvalues are repeated (``s2 - s1`` below the threshold).
    """
    eig = eigen_fields(S)
    if np.any(eig.degenerate):
        raise Degenerate(f"repeated eigenvalue {float(np.mean(eig.s1)):.6g}")
    return eig


def _tangent_norm2(x_prime):
    x_prime = np.asarray(x_prime, dtype=float)
    n2 = np.einsum("...i,...i->...", x_prime, x_prime)
    if np.any(n2 == 0):
        raise ZeroTangent("tangent vector has zero length")
    return x_prime, n2


def stretch_rate(x_prime, S):
    """Material stretching rate ``<x', S x'> / <x', x'>``."""
    x_prime, n2 = _tangent_norm2(x_prime)
    Sx = np.einsum("...ij,...j->...i", S, x_prime)
    return np.einsum("...i,...i->...", x_prime, Sx) / n2


def shear_rate(x_prime, S):
    """Material shear rate ``<x', (S R - R S) x'> / <x', x'>``."""
    x_prime, n2 = _tangent_norm2(x_prime)
    S = np.asarray(S, dtype=float)
    C = S @ R - R @ S
    Cx = np.einsum("...ij,...j->...i", C, x_prime)
    return np.einsum("...i,...i->...", x_prime, Cx) / n2


def okubo_weiss(S, omega):
    """Okubo--Weiss parameter ``s2^2 - omega^2``.

    This normalization uses the larger strain eigenvalue itself; the common
    oceanographic variant ``4 s2^2 - omega^2`` (normal plus shear strain
    squared) differs by the factor on the strain term.
    """
    return eigen_fields(S).s2 ** 2 - np.asarray(omega, dtype=float) ** 2


def strain_at(field, x, y, t):
    """Rate-of-strain tensor of ``field`` at arrays of points."""
    return strain_and_spin(field.gradient(x, y, t))[0]


def _polyline_tangents(points):
    pts = np.asarray(points, dtype=float)
    tang = np.gradient(pts, axis=0)
    if len(pts) > 2 and np.allclose(pts[0], pts[-1]):
        # closed curve: central difference across the seam
        tang[0] = tang[-1] = 0.5 * (pts[1] - pts[-2])
    return tang


def curve_average_rates(curve, field, t):
    """Arclength averages of stretch and shear rates along a polyline.

    Returns
    -------
    (float, float)
        Averaged material stretch rate and averaged material shear rate,
        computed with the trapezoidal rule on the polyline arclength.
    """
    pts = np.asarray(curve, dtype=float)
    if len(pts) < 2:
        raise ValueError("curve needs at least two points")
    ds = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    sigma = ds.sum()
    if sigma <= 0:
        raise ValueError("curve has zero length")
    S = strain_at(field, pts[:, 0], pts[:, 1], t)
    tang = _polyline_tangents(pts)
    q = stretch_rate(tang, S)
    p = shear_rate(tang, S)
    trap = lambda f: float(np.sum(0.5 * (f[1:] + f[:-1]) * ds) / sigma)
    return trap(q), trap(p)


# --------------------------------------------------------------------------
# Observer changes x = Q(t) x~ + b(t)
# --------------------------------------------------------------------------

def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class FrameChange:
    """Time-dependent rotation angle and translation of an observer.

    The new coordinates ``x~`` relate to the old ones by
    ``x = Q(theta(t)) x~ + b(t)``.
    """

    theta: Callable[[float], float]
    theta_dot: Callable[[float], float]
    b: Callable[[float], np.ndarray]
    b_dot: Callable[[float], np.ndarray]

    @classmethod
    def uniform(cls, theta0=0.0, omega=0.0, b0=(0.0, 0.0), velocity=(0.0, 0.0)):
        """Constant rotation rate ``omega`` and constant translation speed."""
        b0 = np.asarray(b0, dtype=float)
        c = np.asarray(velocity, dtype=float)
        return cls(lambda t: theta0 + omega * t, lambda t: omega,
                   lambda t: b0 + c * t, lambda t: c)

    @classmethod
    def identity(cls):
        return cls.uniform()

    def Q(self, t):
        return rotation(self.theta(t))

    def Q_dot(self, t):
        return self.theta_dot(t) * (R @ self.Q(t))

    def to_old(self, pts, t):
        """Map new-frame points ``x~`` (last axis) to old coordinates ``x``."""
        pts = np.asarray(pts, dtype=float)
        return pts @ self.Q(t).T + np.asarray(self.b(t))

    def to_new(self, pts, t):
        pts = np.asarray(pts, dtype=float)
        return (pts - np.asarray(self.b(t))) @ self.Q(t)


class TransformedField(VelocityField):
    """A velocity field seen by another observer.

    ``v~(x~, t) = Q^T [v(Q x~ + b, t) - Q_dot x~ - b_dot]`` and
    ``grad v~ = Q^T (grad v) Q - Q^T Q_dot``. The analysis axes cover the
    pulled-back domain at ``t_ref``: its bounding box for analytic fields and
    the largest centred box that stays inside the data for gridded ones.
    """

    def __init__(self, base, frame, t_ref=0.0, n=None):
        self.base, self.frame = base, frame
        self.kind = base.kind
        self.stencil = base.stencil
        x0, x1, y0, y1 = base.bounds
        corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
        new = frame.to_new(corners, t_ref)
        centre = new.mean(axis=0)
        if base.kind == "gridded":
            W, H = (x1 - x0) / 2, (y1 - y0) / 2
            th = frame.theta(t_ref)
            c, s = abs(np.cos(th)), abs(np.sin(th))
            k = min(W / (W * c + H * s), H / (W * s + H * c))
            hw, hh = k * W * 0.999, k * H * 0.999
            lo, hi = centre - (hw, hh), centre + (hw, hh)
        else:
            lo, hi = new.min(axis=0), new.max(axis=0)
        nx = n[0] if n else base.x_axis.count
        ny = n[1] if n else base.y_axis.count
        self.x_axis = GridAxis.from_bounds(lo[0], hi[0], nx)
        self.y_axis = GridAxis.from_bounds(lo[1], hi[1], ny)

    def _old_points(self, x, y, t):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        old = self.frame.to_old(np.stack([x, y], axis=-1), t)
        return x, y, old[..., 0], old[..., 1]

    def velocity(self, x, y, t):
        x, y, xo, yo = self._old_points(x, y, t)
        u, v = self.base.velocity(xo, yo, t)
        Q, Qd, bd = self.frame.Q(t), self.frame.Q_dot(t), self.frame.b_dot(t)
        wx = u - (Qd[0, 0] * x + Qd[0, 1] * y) - bd[0]
        wy = v - (Qd[1, 0] * x + Qd[1, 1] * y) - bd[1]
        return Q[0, 0] * wx + Q[1, 0] * wy, Q[0, 1] * wx + Q[1, 1] * wy

    def gradient(self, x, y, t):
        _, _, xo, yo = self._old_points(x, y, t)
        J = self.base.gradient(xo, yo, t)
        Q = self.frame.Q(t)
        return Q.T @ J @ Q - Q.T @ self.frame.Q_dot(t)

    def gradient_ok(self, x, y):
        return self.contains(x, y)


def transform_velocity(field, frame, t_ref=0.0):
    """Velocity field of ``field`` as seen from the observer ``frame``."""
    return TransformedField(field, frame, t_ref=t_ref)


# --------------------------------------------------------------------------
# Stagnation points (frame-dependent; used for comparison only)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StagnationPoint:
    position: np.ndarray
    kind: str  # "saddle", "center" or "node"
    eigenvalues: np.ndarray


def _classify_gradient(J):
    ev = np.linalg.eigvals(J)
    if np.all(np.abs(ev.imag) > 1e-12 * max(1.0, np.abs(ev).max())):
        return "center", ev
    re = np.sort(ev.real)
    if re[0] < 0 < re[1]:
        return "saddle", ev
    return "node", ev


def _newton_zero(fun, jac, x0, tol, max_iter=30):
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        f = fun(x)
        if np.linalg.norm(f) < tol:
            return x, True
        try:
            dx = np.linalg.solve(jac(x), -f)
        except np.linalg.LinAlgError:
            return x, False
        x = x + dx
    return x, np.linalg.norm(fun(x)) < tol


def _sign_change(*corners):
    stack = np.stack(corners)
    return (stack.min(axis=0) <= 0) & (stack.max(axis=0) >= 0)


def find_stagnation_points(field, t):
    """Zeros of the velocity field and their linear type.

    Cells whose corner values of both components bracket zero are refined by
    Newton iteration on ``v`` with the field gradient as Jacobian.
    """
    X, Y = field.grid()
    u, v = field.velocity(X, Y, t)
    cells = (_sign_change(u[:-1, :-1], u[1:, :-1], u[:-1, 1:], u[1:, 1:])
             & _sign_change(v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]))
    h = field.grid_step
    vscale = max(float(np.max(np.hypot(u, v))), 1e-300)
    found = []
    for j, i in zip(*np.nonzero(cells)):
        x0 = np.array([X[j, i] + field.x_axis.step / 2, Y[j, i] + field.y_axis.step / 2])

        def fun(p):
            uu, vv = field.velocity(p[0], p[1], t)
            return np.array([float(uu), float(vv)])

        def jac(p):
            return field.gradient(np.float64(p[0]), np.float64(p[1]), t)

        try:
            p, ok = _newton_zero(fun, jac, x0, tol=1e-10 * vscale)
        except OutOfDomain:
            continue
        lo = (X[j, i] - 1e-9, Y[j, i] - 1e-9)
        if not ok or not (lo[0] <= p[0] <= X[j, i + 1] + 1e-9
                          and lo[1] <= p[1] <= Y[j + 1, i] + 1e-9):
            continue
        if any(np.linalg.norm(p - q.position) < h / 2 for q in found):
            continue
        if not field.gradient_ok(p[0], p[1]):
            continue
        kind, ev = _classify_gradient(jac(p))
        found.append(StagnationPoint(p, kind, ev))
    return found


def strain_grid(field, t):
    """Rate of strain on the analysis grid.

    Returns ``(X, Y, S, valid)``; ``S`` is NaN at nodes too close to the edge
    of a gridded domain for the gradient stencil.
    """
    X, Y = field.grid()
    valid = field.gradient_ok(X, Y)
    S = np.full(X.shape + (2, 2), np.nan)
    if np.any(valid):
        S[valid] = strain_at(field, X[valid], Y[valid], t)
    return X, Y, S, valid
