"""Integration of orientation-free direction fields of the strain tensor.

Eigenvector fields and the ``chi`` fields built from them have no global
orientation, so every RK4 step flips the sampled directions to agree with
the current tangent before combining them. All seeds of a batch advance
together; the per-seed loop only appears when trajectories are packed up.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ImmediateDegeneracy, OutOfDomain, OutsideUmu, Degenerate
from .kinematics import degeneracy_threshold, eigen_fields, strain_at, stretch_rate, shear_rate

E1, E2, CHI = "E1", "E2", "CHI"
STOP_REASONS = ("singularity", "boundary", "max_length", "closed", "monotonicity", "user")

# failure codes of a direction evaluation
_OK, _OUTSIDE, _DEGENERATE, _NOT_IN_U = 0, 1, 2, 3

#: Smallest cosine between a stage direction and the step tangent.
TURN_COS = np.cos(np.pi / 4)


@dataclass(frozen=True)
class DirectionSpec:
    """Which direction field to follow: ``E1``, ``E2`` or ``CHI`` (``mu``, ``sign``)."""

    family: str
    mu: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if self.family not in (E1, E2, CHI):
            raise ValueError(f"unknown direction family {self.family!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


@dataclass
class TensorlineTrajectory:
    """Polyline traced along a direction field.

    ``tangents`` holds the orientation-corrected unit direction sampled at
    every vertex.
    """

    points: np.ndarray
    arclengths: np.ndarray
    tangents: np.ndarray
    stop_reason: str
    spec: DirectionSpec
    info: dict = dc_field(default_factory=dict)

    @property
    def length(self):
        return float(self.arclengths[-1])

    def __len__(self):
        return len(self.points)


def chi_from_eigen(eig, mu, sign):
    """Unit ``chi`` directions from eigen data; NaN where ``mu`` is outside ``[s1, s2]``."""
    gap = eig.s2 - eig.s1
    tol = degeneracy_threshold(eig.s1, eig.s2)
    inside = (mu >= eig.s1 - tol) & (mu <= eig.s2 + tol)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.sqrt(np.clip((eig.s2 - mu) / gap, 0.0, 1.0))
        b = np.sqrt(np.clip((mu - eig.s1) / gap, 0.0, 1.0))
    chi = a[..., None] * eig.e1 + (sign * b)[..., None] * eig.e2
    chi = chi / np.linalg.norm(chi, axis=-1, keepdims=True)
    return np.where(inside[..., None], chi, np.nan), inside


def eval_chi(x, t, mu, sign, field):
    """Unit vector ``chi_mu^sign`` at point ``x``.

    ``chi = sqrt((s2 - mu)/(s2 - s1)) e1 + sign * sqrt((mu - s1)/(s2 - s1)) e2``.

    Raises
    ------
    Degenerate
        At repeated eigenvalues.
    OutsideUmu
        If ``mu`` is not within ``[s1, s2]`` at ``x``.
    """
    S = strain_at(field, np.float64(x[0]), np.float64(x[1]), t)
    eig = eigen_fields(S)
    if eig.degenerate:
        raise Degenerate("chi is undefined at repeated eigenvalues")
    chi, inside = chi_from_eigen(eig, mu, sign)
    if not inside:
        raise OutsideUmu(f"mu={mu:g} outside [{float(eig.s1):.6g}, {float(eig.s2):.6g}]")
    return chi


class _Directions:
    """Batched direction-field sampler with per-seed ``mu`` and ``sign``.

    Eigenvectors come straight from the strain angle; their global sign is
    irrelevant here because every sample is re-oriented by the integrator.
    """

    def __init__(self, field, t, family, mu, sign):
        self.field, self.t, self.family = field, t, family
        self.mu, self.sign = mu, sign

    def __call__(self, pts, idx):
        n = len(pts)
        d = np.full((n, 2), np.nan)
        code = np.full(n, _OUTSIDE)
        ok = self.field.gradient_ok(pts[:, 0], pts[:, 1])
        if not np.any(ok):
            return d, code
        if ok.all():
            J = self.field.gradient(pts[:, 0], pts[:, 1], self.t)
        else:
            J = self.field.gradient(pts[ok, 0], pts[ok, 1], self.t)
        a, d_ = J[:, 0, 0], J[:, 1, 1]
        b = 0.5 * (J[:, 0, 1] + J[:, 1, 0])
        half = 0.5 * (a - d_)
        r = np.hypot(half, b)
        m = 0.5 * (a + d_)
        s1, s2 = m - r, m + r
        theta = 0.5 * np.arctan2(b, half)
        c, sn = np.cos(theta), np.sin(theta)
        sub = np.where(2 * r < degeneracy_threshold(s1, s2), _DEGENERATE, _OK)
        # e1 = (-sin, cos) and e2 = R e1 = (-cos, -sin)
        if self.family == E1:
            dd = np.column_stack([-sn, c])
        elif self.family == E2:
            dd = np.column_stack([-c, -sn])
        else:
            j = idx[ok]
            mu, sg = self.mu[j], self.sign[j]
            tol = degeneracy_threshold(s1, s2)
            inside = (mu >= s1 - tol) & (mu <= s2 + tol)
            with np.errstate(invalid="ignore", divide="ignore"):
                wa = np.sqrt(np.clip((s2 - mu) / (2 * r), 0.0, 1.0))
                wb = sg * np.sqrt(np.clip((mu - s1) / (2 * r), 0.0, 1.0))
            dd = np.column_stack([-wa * sn - wb * c, wa * c - wb * sn])
            dd /= np.hypot(dd[:, 0], dd[:, 1])[:, None]
            sub[(~inside) & (sub == _OK)] = _NOT_IN_U
        dd[sub != _OK] = np.nan
        if ok.all():
            return dd, sub
        d[ok] = dd
        code[ok] = sub
        return d, code


def _orient(d, ref):
    s = np.sign(np.einsum("ij,ij->i", d, ref))
    s[s == 0] = 1.0
    return d * s[:, None]


def integrate_tensorlines(seeds, seed_dirs, spec, field, t, step=None, max_length=None,
                          singularities=None, r_sing=None, r_close=None,
                          detect_closure=True, monotone=None, user=None,
                          mu=None, sign=None, max_points=None):
    """Trace many tensorlines at once.

    Parameters
    ----------
    seeds, seed_dirs : array_like, shape (n, 2)
        Start points and initial orientations.
    spec : DirectionSpec
        Direction family. For ``CHI`` the per-seed arrays ``mu`` and ``sign``
        override ``spec.mu`` and ``spec.sign`` when given.
    step : float, optional
        Arclength step; defaults to a fifth of the grid step.
    max_length : float, optional
        Arclength cap; defaults to twice the domain perimeter.
    singularities : sequence, optional
        Points (or :class:`Singularity` objects) to stay ``r_sing`` away from.
        Degenerate samples stop a trajectory in any case.
    monotone, user : callable, optional
        ``fn(idx, old, new, tangent, s)`` returning a boolean stop mask for
        the active seeds ``idx``. A ``monotone`` stop drops the new vertex,
        a ``user`` stop keeps it.

    Returns
    -------
    list
        One :class:`TensorlineTrajectory` per seed, or ``None`` where the seed
        itself could not be evaluated.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float)).copy()
    n = len(seeds)
    seed_dirs = np.broadcast_to(np.asarray(seed_dirs, dtype=float), (n, 2))
    h = field.grid_step / 5 if step is None else float(step)
    if h <= 0:
        raise ValueError("step must be positive")
    x0, x1, y0, y1 = field.bounds
    L = 4 * ((x1 - x0) + (y1 - y0)) if max_length is None else float(max_length)
    r_sing = 2 * h if r_sing is None else r_sing
    r_close = h if r_close is None else r_close
    mu_arr = np.broadcast_to(np.asarray(spec.mu if mu is None else mu, float), (n,))
    sg_arr = np.broadcast_to(np.asarray(spec.sign if sign is None else sign, float), (n,))
    dirs = _Directions(field, t, spec.family, mu_arr, sg_arr)
    sing = np.empty((0, 2))
    if singularities is not None and len(singularities):
        sing = np.array([getattr(s, "position", s) for s in singularities], dtype=float)
    max_steps = int(np.ceil(L / h)) + 1 if max_points is None else max_points

    idx_all = np.arange(n)
    d0, code0 = dirs(seeds, idx_all)
    near0 = _near(seeds, sing, r_sing)
    valid = (code0 == _OK) & ~near0
    d0 = np.where(valid[:, None], _orient(np.nan_to_num(d0), seed_dirs), np.nan)

    # accepted vertices per step as (seed indices, points, tangents)
    hist = [(idx_all[valid], seeds[valid], d0[valid])]
    seed_tan = d0.copy()
    reason = np.array([""] * n, dtype=object)
    active = valid.copy()
    pos, tan = seeds.copy(), d0.copy()
    arclen = np.zeros(n)

    for _ in range(max_steps):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        x, ref = pos[idx], tan[idx]
        k1 = ref
        k2, c2 = dirs(x + 0.5 * h * k1, idx)
        k2 = _orient(k2, ref)
        k3, c3 = dirs(x + 0.5 * h * k2, idx)
        k3 = _orient(k3, ref)
        k4, c4 = dirs(x + h * k3, idx)
        k4 = _orient(k4, ref)
        new = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        dn, cn = dirs(new, idx)
        dn = _orient(dn, ref)
        codes = np.stack([c2, c3, c4, cn])
        # a stage that turns too far means an unresolved degenerate zone
        for kk in (k2, k3, k4, dn):
            sharp = np.abs(np.einsum("ij,ij->i", kk, ref)) < TURN_COS
            codes[:, sharp & np.all(codes == _OK, axis=0)] = _DEGENERATE
        bad = np.any(codes != _OK, axis=0)
        first = codes[np.argmax(codes != _OK, axis=0), np.arange(len(idx))]
        why = np.where((first == _OUTSIDE) | (first == _NOT_IN_U), "boundary", "singularity")
        stop = bad.copy()
        reason[idx[bad]] = why[bad]
        keep = ~bad
        s_new = arclen[idx] + h
        near = _near(new, sing, r_sing)
        mono = np.zeros(len(idx), dtype=bool)
        if monotone is not None:
            mono = keep & np.asarray(monotone(idx, x, new, dn, s_new), dtype=bool)
            reason[idx[mono]] = "monotonicity"
            keep &= ~mono
            stop |= mono
        # accept the new vertex for all remaining seeds
        acc = idx[keep]
        hist.append((acc, new[keep], dn[keep]))
        pos[acc], tan[acc], arclen[acc] = new[keep], dn[keep], s_new[keep]
        for cond, label in (
            (keep & near, "singularity"),
            (keep & _closed(new, dn, seeds[idx], seed_tan[idx], s_new, r_close, h)
             if detect_closure else np.zeros(len(idx), bool), "closed"),
        ):
            fire = cond & ~stop
            reason[idx[fire]] = label
            stop |= fire
        if user is not None:
            fire = keep & ~stop
            if np.any(fire):
                u = np.zeros(len(idx), dtype=bool)
                u[fire] = np.asarray(user(idx[fire], x[fire], new[fire], dn[fire],
                                          s_new[fire]), dtype=bool)
                reason[idx[u]] = "user"
                stop |= u
        capped = keep & ~stop & (s_new >= L - 1e-12 * L)
        reason[idx[capped]] = "max_length"
        stop |= capped
        active[idx[stop]] = False
    reason[active] = "max_length"

    owner = np.concatenate([hh[0] for hh in hist])
    order = np.argsort(owner, kind="stable")
    allp = np.concatenate([hh[1] for hh in hist])[order]
    allt = np.concatenate([hh[2] for hh in hist])[order]
    starts = np.searchsorted(owner[order], np.arange(n + 1))
    out = []
    for j in range(n):
        if not valid[j]:
            out.append(None)
            continue
        P = allp[starts[j]:starts[j + 1]]
        T = allt[starts[j]:starts[j + 1]]
        s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(P, axis=0), axis=1))])
        sp = spec if mu is None and sign is None else DirectionSpec(spec.family, float(mu_arr[j]), int(sg_arr[j]))
        out.append(TensorlineTrajectory(P, s, T, str(reason[j]), sp))
    return out


def _near(p, sing, r):
    if len(sing) == 0:
        return np.zeros(len(p), dtype=bool)
    d2 = ((p[:, None, :] - sing[None]) ** 2).sum(-1)
    return d2.min(axis=1) < r * r


def _closed(new, dn, seed, seed_tan, s, r_close, h):
    near = np.linalg.norm(new - seed, axis=1) < r_close
    aligned = np.einsum("ij,ij->i", dn, seed_tan) > 0.9
    return near & aligned & (s > 10 * h)


def integrate_tensorline(seed, seed_dir, spec, field, t, step=None, **kwargs):
    """Trace one tensorline from ``seed`` with initial orientation ``seed_dir``.

    Raises
    ------
    ImmediateDegeneracy
        If the direction field cannot be evaluated at the seed.
    OutsideUmu
        For ``CHI`` seeds where ``mu`` is not between the eigenvalues.
    OutOfDomain
        If the seed lies outside the field domain.
    """
    seed = np.asarray(seed, dtype=float)
    if not np.all(field.gradient_ok(seed[0], seed[1])):
        raise OutOfDomain(f"seed {tuple(seed)} outside the field domain")
    if spec.family == CHI:
        try:
            eval_chi(seed, t, spec.mu, spec.sign, field)
        except Degenerate as exc:
            raise ImmediateDegeneracy(str(exc)) from None
    (traj,) = integrate_tensorlines(seed[None], np.asarray(seed_dir, float)[None], spec,
                                    field, t, step=step, **kwargs)
    if traj is None:
        raise ImmediateDegeneracy(f"direction field undefined at seed {tuple(seed)}")
    return traj


def _lagrange_slope(u, y, at):
    """Derivative at ``at`` of the polynomial through ``(u[:, k], y[:, k])``."""
    n, m = u.shape
    w = np.zeros((n, m))
    for k in range(m):
        for j in range(m):
            if j == k:
                continue
            term = 1.0 / (u[:, k] - u[:, j])
            for l in range(m):
                if l != k and l != j:
                    term = term * (at - u[:, l]) / (u[:, k] - u[:, l])
            w[:, k] += term
    return np.einsum("nk,nkd->nd", w, y)


def polyline_tangents(points, closed=None):
    """Unit tangents of a polyline from five-point differences in chord length.

    Spacing may be uneven. A polyline whose ends nearly meet is treated as
    closed; its duplicate end vertex is differentiated periodically.
    """
    P = np.asarray(points, dtype=float)
    n = len(P)
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    med = np.median(seg)
    if closed is None:
        closed = n > 6 and np.linalg.norm(P[-1] - P[0]) < 1.01 * med
    if n < 5:
        d = np.gradient(P, axis=0)
        return d / np.linalg.norm(d, axis=1, keepdims=True)
    if closed:
        # drop end vertices that nearly duplicate the start
        m = n
        while m > 5 and np.linalg.norm(P[m - 1] - P[0]) < 0.25 * med:
            m -= 1
        Q = P[:m]
        u = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(Q, axis=0), axis=1))])
        period = u[-1] + np.linalg.norm(Q[0] - Q[-1])
        off = np.arange(-2, 3)
        idx = np.arange(m)[:, None] + off
        uu = u[idx % m] + period * np.floor_divide(idx, m)
        d = _lagrange_slope(uu, Q[idx % m], u)
        if n > m:
            # dropped vertices sit between Q[-1] and Q[0] + period
            extra = u[-1] + np.cumsum(np.linalg.norm(np.diff(P[m - 1:], axis=0), axis=1))
            j = (m - 1) + np.arange(-1, 4)
            uj = u[j % m] + period * np.floor_divide(j, m)
            de = _lagrange_slope(np.tile(uj, (n - m, 1)),
                                 np.broadcast_to(Q[j % m], (n - m, 5, 2)), extra)
            d = np.vstack([d, de])
    else:
        u = np.concatenate([[0.0], np.cumsum(seg)])
        start = np.clip(np.arange(n) - 2, 0, n - 5)
        idx = start[:, None] + np.arange(5)
        d = _lagrange_slope(u[idx], P[idx], u)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def verify_rates_along(trajectory, field, t, spec=None, tangents="field"):
    """Largest violation of the defining rate along a trajectory.

    For ``CHI`` lines this is ``max |q_dot - mu|``, for ``E1``/``E2`` lines
    ``max |p_dot|``, with the rate-of-strain tensor re-evaluated from the
    field. ``tangents="field"`` uses the orientation-corrected direction
    stored at each vertex; ``tangents="polyline"`` differentiates the vertices
    themselves, which also measures how closely the polyline follows the
    field (only meaningful away from singularities).
    """
    spec = trajectory.spec if spec is None else spec
    P = trajectory.points
    if tangents == "polyline":
        T = polyline_tangents(P, closed=False)
    elif tangents == "field":
        T = trajectory.tangents
    else:
        raise ValueError("tangents must be 'polyline' or 'field'")
    S = strain_at(field, P[:, 0], P[:, 1], t)
    if spec.family == CHI:
        return float(np.max(np.abs(stretch_rate(T, S) - spec.mu)))
    return float(np.max(np.abs(shear_rate(T, S))))
