"""Repeated-eigenvalue points of the rate-of-strain tensor.

A singularity is a common zero of ``A = s11 - s22`` and ``B = s12``. With
``alpha = A / 2`` and ``beta = B`` the sign of ``det d(alpha, beta)/d(x, y)``
separates wedges (positive, index +1/2) from trisectors (negative, index
-1/2). The winding number of ``(alpha, beta)`` around a small circle gives
an independent check of the same index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousWinding, OutOfDomain
from .kinematics import strain_at, strain_grid

WEDGE, TRISECTOR, UNCLASSIFIED = "wedge", "trisector", "unclassified"

#: Relative Jacobian determinant below which a zero is not transverse.
TRANSVERSE_RTOL = 1e-8
MAX_NEWTON = 20


@dataclass(frozen=True)
class Singularity:
    position: np.ndarray
    kind: str
    delta: float
    time: float = 0.0
    transverse: bool = True

    @property
    def x(self):
        return float(self.position[0])

    @property
    def y(self):
        return float(self.position[1])


@dataclass(frozen=True)
class WedgePair:
    a: Singularity
    b: Singularity
    midpoint: np.ndarray
    separation: float


def _ab(field, p, t):
    """``(alpha, beta) = ((s11 - s22) / 2, s12)`` at points ``p[..., 2]``."""
    p = np.asarray(p, dtype=float)
    S = strain_at(field, p[..., 0], p[..., 1], t)
    return np.stack([0.5 * (S[..., 0, 0] - S[..., 1, 1]), S[..., 0, 1]], axis=-1)


def _fd_step(field):
    # gridded strain is piecewise smooth at the grid scale; analytic is smooth
    if field.kind == "gridded":
        return 0.5 * field.grid_step
    return 1e-5 * field.grid_step


def ab_jacobian(field, t, position, h=None):
    """Difference Jacobian of ``(alpha, beta)`` at ``position``.

    Central differences, falling back to one-sided ones where the stencil
    would leave the region in which the gradient can be evaluated.
    """
    h = _fd_step(field) if h is None else h
    p = np.asarray(position, dtype=float)
    cols = []
    for e in np.eye(2):
        fwd = bool(field.gradient_ok(*(p + h * e)))
        bwd = bool(field.gradient_ok(*(p - h * e)))
        if fwd and bwd:
            v = _ab(field, np.array([p + h * e, p - h * e]), t)
            cols.append((v[0] - v[1]) / (2 * h))
        elif fwd or bwd:
            q = p + h * e if fwd else p - h * e
            v = _ab(field, np.array([q, p]), t)
            cols.append((v[0] - v[1]) / (h if fwd else -h))
        else:
            raise OutOfDomain("difference stencil leaves the domain")
    return np.column_stack(cols)


def _newton(field, t, x0, tol, damped):
    x = np.array(x0, dtype=float)
    for _ in range(MAX_NEWTON):
        try:
            f = _ab(field, x, t)
            J = ab_jacobian(field, t, x)
        except OutOfDomain:
            return x, False
        dx = np.linalg.lstsq(J, -f, rcond=None)[0]
        if damped:
            lam, f0 = 1.0, np.linalg.norm(f)
            while lam > 1e-4:
                try:
                    if np.linalg.norm(_ab(field, x + lam * dx, t)) < f0:
                        break
                except OutOfDomain:
                    pass
                lam /= 2
            dx = lam * dx
        x = x + dx
        if not np.all(field.gradient_ok(x[0], x[1])):
            return x, False
        if np.linalg.norm(dx) < tol:
            return x, True
    return x, False


def _corner_sign_change(F):
    c = np.stack([F[:-1, :-1], F[1:, :-1], F[:-1, 1:], F[1:, 1:]])
    # zeros count as sign changes so zeros on grid nodes are not missed
    return np.all(np.isfinite(c), axis=0) & (c.min(axis=0) <= 0) & (c.max(axis=0) >= 0)


def classify_singularity(field, t, position):
    """Kind and classification determinant of a refined zero.

    Returns
    -------
    (str, float)
        ``"wedge"`` if ``delta > 0``, ``"trisector"`` if ``delta < 0`` and
        ``"unclassified"`` if ``|delta|`` is negligible against the squared
        size of the Jacobian.
    """
    J = ab_jacobian(field, t, position)
    delta = float(np.linalg.det(J))
    scale = float(np.sum(J * J))
    if scale == 0 or abs(delta) <= TRANSVERSE_RTOL * scale:
        return UNCLASSIFIED, delta
    return (WEDGE if delta > 0 else TRISECTOR), delta


def find_singularities(field, t, include_nontransverse=True):
    """Locate and classify all singularities of ``S`` on the analysis grid.

    Every grid cell where both ``A`` and ``B`` change sign is refined by
    Newton iteration (damped as a fallback) on ``(alpha, beta)`` until the
    update is below ``1e-8`` grid steps. Zeros found within half a grid step
    of each other are merged. Zeros whose Jacobian is near singular are
    reported with ``transverse=False`` and kind ``"unclassified"``.
    """
    X, Y, S, _ = strain_grid(field, t)
    A = S[..., 0, 0] - S[..., 1, 1]
    B = S[..., 0, 1]
    cells = _corner_sign_change(A) & _corner_sign_change(B)
    hx, hy = field.x_axis.step, field.y_axis.step
    h = field.grid_step
    tol = 1e-8 * h
    found = []
    for j, i in zip(*np.nonzero(cells)):
        lo = np.array([X[j, i], Y[j, i]])
        centre = lo + (hx / 2, hy / 2)
        p, ok = _newton(field, t, centre, tol, damped=False)
        if not ok:
            p, ok = _newton(field, t, centre, tol, damped=True)
        if not ok:
            continue
        # accept only zeros belonging to this cell (with a little slack)
        if np.any(p < lo - 0.01 * h) or np.any(p > lo + (hx, hy) + 0.01 * h):
            continue
        if any(np.linalg.norm(p - q.position) < h / 2 for q in found):
            continue
        kind, delta = classify_singularity(field, t, p)
        transverse = kind != UNCLASSIFIED
        if transverse or include_nontransverse:
            found.append(Singularity(p, kind, delta, t, transverse))
    found.sort(key=lambda s: (s.y, s.x))
    return found


def eigenvector_index(field, t, position, radius, n_samples=256):
    """Index of the eigenvector fields of ``S`` around a circle.

    Half the winding number of the vector ``(alpha, beta)``; +1/2 for a
    wedge, -1/2 for a trisector and 0 when the circle encloses no
    singularity.

    Raises
    ------
    AmbiguousWinding
        If the angle jumps by more than pi/2 between consecutive samples or
        the circle passes through a zero.
    """
    phi = np.linspace(0.0, 2 * np.pi, n_samples + 1)
    c = np.asarray(position, dtype=float)
    pts = c + radius * np.column_stack([np.cos(phi), np.sin(phi)])
    v = _ab(field, pts, t)
    if np.any(np.hypot(v[:, 0], v[:, 1]) == 0):
        raise AmbiguousWinding("circle passes through a singularity")
    ang = np.arctan2(v[:, 1], v[:, 0])
    jumps = np.angle(np.exp(1j * np.diff(ang)))
    if np.any(np.abs(jumps) > np.pi / 2):
        raise AmbiguousWinding("angle of (alpha, beta) under-resolved on circle; "
                               "increase n_samples or shrink radius")
    winding = int(round(jumps.sum() / (2 * np.pi)))
    return winding / 2


def pair_wedges(singularities, max_separation, isolation=1.5):
    """Mutually nearest wedge pairs that are isolated from other singularities.

    A pair qualifies when its separation is at most ``max_separation`` and no
    other singularity lies within ``isolation * separation`` of its
    midpoint.
    """
    wedges = [s for s in singularities if s.kind == WEDGE]
    if len(wedges) < 2:
        return []
    P = np.array([w.position for w in wedges])
    D = np.linalg.norm(P[:, None] - P[None], axis=-1)
    np.fill_diagonal(D, np.inf)
    nearest = D.argmin(axis=1)
    others = np.array([s.position for s in singularities])
    pairs = []
    for i, j in enumerate(nearest):
        if j <= i or nearest[j] != i or D[i, j] > max_separation:
            continue
        mid = 0.5 * (P[i] + P[j])
        sep = float(D[i, j])
        d = np.linalg.norm(others - mid, axis=1)
        d = d[(np.linalg.norm(others - P[i], axis=1) > 0)
              & (np.linalg.norm(others - P[j], axis=1) > 0)]
        if np.any(d < isolation * sep):
            continue
        pairs.append(WedgePair(wedges[i], wedges[j], mid, sep))
    pairs.sort(key=lambda p: p.separation)
    return pairs
