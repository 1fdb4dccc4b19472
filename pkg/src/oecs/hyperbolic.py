"""Objective saddles and the attracting/repelling curves through them.

Cores are isolated maxima of ``s2`` (repelling) and minima of ``s1``
(attracting). From each core an ``e1``-line (repelling) or ``e2``-line
(attracting) is traced both ways for as long as the magnitude of the
core eigenvalue keeps decreasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DegenerateCore
from .kinematics import eigen_fields, find_stagnation_points, strain_at, strain_grid
from .tensorline import E1, E2, DirectionSpec, integrate_tensorlines

REPELLING, ATTRACTING = "repelling", "attracting"

#: Neighbourhood variation below which an extremum counts as a plateau.
PLATEAU_TOL = 1e-10
#: Relative rise (times the core value) that ends a branch.
RISE_RTOL = 1e-6


@dataclass(frozen=True)
class ObjectiveSaddle:
    position: np.ndarray
    s1: float
    s2: float
    kind: str

    @property
    def strength(self):
        return abs(self.s2) if self.kind == REPELLING else abs(self.s1)


@dataclass
class HyperbolicOecs:
    kind: str
    core: ObjectiveSaddle
    branches: list
    stop_reasons: list
    values: list = dc_field(default_factory=list)

    @property
    def endpoints(self):
        return [b[-1] for b in self.branches]


def _eigenvalues_at(field, t, p):
    p = np.asarray(p, dtype=float)
    eig = eigen_fields(strain_at(field, p[..., 0], p[..., 1], t))
    return eig.s1, eig.s2


def _strict_extrema(F):
    """Interior nodes not below any of their 8 neighbours (and not a plateau)."""
    c = F[1:-1, 1:-1]
    ok = np.isfinite(c)
    lo = c.copy()
    for dj in (-1, 0, 1):
        for di in (-1, 0, 1):
            if dj == 0 and di == 0:
                continue
            nb = F[1 + dj:F.shape[0] - 1 + dj, 1 + di:F.shape[1] - 1 + di]
            ok &= np.isfinite(nb) & (c >= nb)
            lo = np.minimum(lo, nb)
    ok &= (c - lo) >= PLATEAU_TOL
    j, i = np.nonzero(ok)
    return j + 1, i + 1


def _biquadratic_offset(F, j, i, hx, hy):
    fx = (F[j, i + 1] - F[j, i - 1]) / (2 * hx)
    fy = (F[j + 1, i] - F[j - 1, i]) / (2 * hy)
    fxx = (F[j, i + 1] - 2 * F[j, i] + F[j, i - 1]) / hx ** 2
    fyy = (F[j + 1, i] - 2 * F[j, i] + F[j - 1, i]) / hy ** 2
    fxy = (F[j + 1, i + 1] - F[j + 1, i - 1] - F[j - 1, i + 1] + F[j - 1, i - 1]) / (4 * hx * hy)
    H = np.array([[fxx, fxy], [fxy, fyy]])
    try:
        off = -np.linalg.solve(H, [fx, fy])
    except np.linalg.LinAlgError:
        return np.zeros(2)
    return np.clip(off, [-hx, -hy], [hx, hy])


def _polish(fun, p, h, max_iter=20):
    """Newton iteration on the gradient of a smooth scalar field."""
    eta = 1e-4 * h
    p0 = p.copy()
    for _ in range(max_iter):
        offs = np.array([[0, 0], [eta, 0], [-eta, 0], [0, eta], [0, -eta],
                         [eta, eta], [-eta, -eta], [eta, -eta], [-eta, eta]])
        v = fun(p + offs)
        g = np.array([v[1] - v[2], v[3] - v[4]]) / (2 * eta)
        hxx = (v[1] - 2 * v[0] + v[2]) / eta ** 2
        hyy = (v[3] - 2 * v[0] + v[4]) / eta ** 2
        hxy = (v[5] + v[6] - v[7] - v[8]) / (4 * eta ** 2)
        try:
            dp = -np.linalg.solve([[hxx, hxy], [hxy, hyy]], g)
        except np.linalg.LinAlgError:
            return p
        p = p + dp
        if np.linalg.norm(p - p0) > h:
            return p0  # wandered off; keep the grid estimate
        if np.linalg.norm(dp) < 1e-12 * max(h, 1.0):
            break
    return p


def find_eigenvalue_extrema(field, t):
    """Isolated minima of ``s1`` and maxima of ``s2`` on the analysis grid.

    Candidates pass an 8-neighbour test, are shifted by a biquadratic fit and,
    for closed-form fields, polished by Newton iteration on the continuous
    eigenvalue field so positions do not depend on the grid.

    Returns
    -------
    (list, list)
        Attracting cores (minima of ``s1``) and repelling cores (maxima of
        ``s2``) as :class:`ObjectiveSaddle` objects.
    """
    X, Y, S, valid = strain_grid(field, t)
    s1 = np.full(X.shape, np.nan)
    s2 = np.full(X.shape, np.nan)
    eig = eigen_fields(S[valid])
    s1[valid], s2[valid] = eig.s1, eig.s2
    hx, hy = field.x_axis.step, field.y_axis.step
    out = []
    for F, kind, sgn in ((s1, ATTRACTING, -1.0), (s2, REPELLING, 1.0)):
        G = sgn * F
        cores = []
        for j, i in zip(*_strict_extrema(G)):
            p = np.array([X[j, i], Y[j, i]]) + _biquadratic_offset(G, j, i, hx, hy)
            if field.kind == "analytic":
                idx = 0 if kind == ATTRACTING else 1
                p = _polish(lambda q: sgn * _eigenvalues_at(field, t, q)[idx], p, field.grid_step)
            if not field.gradient_ok(p[0], p[1]):
                continue
            if any(np.linalg.norm(p - c.position) < 1.5 * field.grid_step for c in cores):
                continue
            a, b = _eigenvalues_at(field, t, p)
            cores.append(ObjectiveSaddle(p, float(a), float(b), kind))
        cores.sort(key=lambda c: -c.strength)
        out.append(cores)
    return out[0], out[1]


def extract_hyperbolic(core, kind, field, t, step=None, singularities=None, max_length=None):
    """Trace the hyperbolic structure through ``core`` in both directions.

    Each branch starts one step away from the core along ``+-e_i`` and stops
    at the first vertex where ``|s_i|`` rises by more than ``1e-6`` times
    its core value (that vertex is dropped), near a singularity or at the
    domain edge.

    Raises
    ------
    DegenerateCore
        If the core has repeated eigenvalues.
    """
    p = np.asarray(getattr(core, "position", core), dtype=float)
    eig = eigen_fields(strain_at(field, p[0], p[1], t))
    if eig.degenerate:
        raise DegenerateCore(f"core at ({p[0]:.4g}, {p[1]:.4g}) has repeated eigenvalues")
    if kind == REPELLING:
        family, e, which = E1, eig.e1, 1
    elif kind == ATTRACTING:
        family, e, which = E2, eig.e2, 0
    else:
        raise ValueError(f"kind must be {REPELLING!r} or {ATTRACTING!r}")
    h = field.grid_step / 5 if step is None else float(step)
    core_val = abs(float((eig.s1, eig.s2)[which]))
    seeds = np.array([p + h * e, p - h * e])
    dirs = np.array([e, -e])
    prev = np.abs(np.array(_eigenvalues_at(field, t, seeds)[which]))
    values = [[core_val, prev[0]], [core_val, prev[1]]]

    def monotone(idx, old, new, tan, s):
        v = np.abs(_eigenvalues_at(field, t, new)[which])
        rise = v > prev[idx] + RISE_RTOL * core_val
        keep = ~rise
        prev[idx[keep]] = v[keep]
        for k, j in enumerate(idx):
            if keep[k]:
                values[j].append(float(v[k]))
        return rise

    trajs = integrate_tensorlines(seeds, dirs, DirectionSpec(family), field, t, step=h,
                                  max_length=max_length, singularities=singularities,
                                  detect_closure=False, monotone=monotone)
    branches, reasons = [], []
    for j, tr in enumerate(trajs):
        if tr is None:
            branches.append(p[None].copy())
            reasons.append("singularity")
            values[j] = values[j][:1]
            continue
        branches.append(np.vstack([p, tr.points]))
        reasons.append(tr.stop_reason)
        values[j] = values[j][:len(tr.points) + 1]
    core_obj = core if isinstance(core, ObjectiveSaddle) else ObjectiveSaddle(
        p, float(eig.s1), float(eig.s2), kind)
    return HyperbolicOecs(kind, core_obj, branches, reasons, [np.array(v) for v in values])


@dataclass
class SaddleReport:
    saddles: list
    stagnation: list
    distances: np.ndarray
    radius: float
    constant_strain: bool
    unmatched_saddles: list
    unmatched_stagnation: list

    def rows(self):
        """Flat table: one row per objective saddle and per stagnation point."""
        rows = []
        for k, s in enumerate(self.saddles):
            d = float(self.distances[k].min()) if self.distances.size else float("inf")
            rows.append({"type": "objective_saddle", "x": float(s.position[0]),
                         "y": float(s.position[1]), "detail": s.kind,
                         "nearest": d, "matched": k not in self.unmatched_saddles})
        for k, q in enumerate(self.stagnation):
            d = float(self.distances[:, k].min()) if self.distances.size else float("inf")
            rows.append({"type": "stagnation_point", "x": float(q.position[0]),
                         "y": float(q.position[1]), "detail": q.kind,
                         "nearest": d, "matched": k not in self.unmatched_stagnation})
        return rows


def _merge_cores(attracting, repelling, tol):
    cores = list(repelling)
    for a in attracting:
        if not any(np.linalg.norm(a.position - c.position) < tol for c in cores):
            cores.append(a)
    return cores


def saddle_comparison_report(field, t, radius=None):
    """Pair objective saddles with (frame-dependent) saddle stagnation points.

    An objective saddle with no saddle-type stagnation point within
    ``radius`` (default five grid steps) is flagged, and vice versa. A
    spatially constant rate of strain is reported as ``constant_strain``
    since it has no isolated extrema at all.
    """
    radius = 5 * field.grid_step if radius is None else radius
    attracting, repelling = find_eigenvalue_extrema(field, t)
    saddles = _merge_cores(attracting, repelling, field.grid_step)
    stagnation = [q for q in find_stagnation_points(field, t) if q.kind == "saddle"]
    _, _, S, valid = strain_grid(field, t)
    s2 = eigen_fields(S[valid]).s2
    constant = bool(np.ptp(s2) < PLATEAU_TOL * max(1.0, float(np.abs(s2).max())))
    if saddles and stagnation:
        D = np.linalg.norm(np.array([s.position for s in saddles])[:, None]
                           - np.array([q.position for q in stagnation])[None], axis=-1)
    else:
        D = np.full((len(saddles), len(stagnation)), np.inf)
    un_s = [k for k in range(len(saddles)) if not np.any(D[k] <= radius)]
    un_q = [k for k in range(len(stagnation)) if not np.any(D[:, k] <= radius)]
    return SaddleReport(saddles, stagnation, D, radius, constant, un_s, un_q)
