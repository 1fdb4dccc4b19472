"""Closed orbits of the chi fields: elliptic structures and vortex boundaries.

A Poincare section through the midpoint of a wedge pair is seeded densely;
each seed is traced along ``chi_mu^sign`` until it crosses the section line
again in the same direction on the same side of the midpoint. Zeros of the
resulting displacement are refined by the Illinois variant of regula falsi,
all brackets of all ``(mu, sign)`` combinations advancing in one batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from matplotlib.path import Path

from .errors import (Degenerate, IntersectionAnomaly, NoReturn, OutsideUmu,
                     SectionBlocked)
from .kinematics import eigen_fields, rot90, strain_at, strain_grid
from .singularity import WedgePair
from .tensorline import (CHI, DirectionSpec, TensorlineTrajectory, chi_from_eigen, eval_chi,
                         integrate_tensorlines)

#: Return-map slopes below this (per unit section length) mean no isolation.
ISOLATION_SLOPE = 1e-3


@dataclass(frozen=True)
class PoincareSection:
    """Segment ``base + c * direction`` for ``|c| <= half_length``."""

    base: np.ndarray
    direction: np.ndarray
    half_length: float
    samples: np.ndarray

    @property
    def normal(self):
        """Unit normal of the section; chi orbits are seeded along it."""
        return -rot90(self.direction)

    @property
    def coords(self):
        return (self.samples - self.base) @ self.direction

    def point(self, c):
        c = np.asarray(c, dtype=float)
        return self.base + c[..., None] * self.direction


@dataclass
class EllipticOecs:
    mu: float
    sign: int
    cycle: np.ndarray
    enclosed_singularities: list
    return_slope: float
    seed_coord: float = 0.0
    #: the integrated chi line behind ``cycle`` (without the interpolated
    #: return point that closes the polygon)
    trajectory: TensorlineTrajectory | None = None

    @property
    def area(self):
        return polygon_area(self.cycle)


@dataclass
class CycleSearch:
    """Outcome of a limit-cycle search at one ``(mu, sign)``.

    Iterating yields the isolated cycles. ``degenerate`` marks a return map
    that vanishes along the whole section (a continuum of closed orbits).
    """

    mu: float
    sign: int
    cycles: list
    degenerate: bool
    coords: np.ndarray
    displacements: np.ndarray
    rejected: int = 0

    def __iter__(self):
        return iter(self.cycles)

    def __len__(self):
        return len(self.cycles)


@dataclass
class EllipticFamily:
    cycles: list
    boundary: int | None
    degenerate: list = dc_field(default_factory=list)
    crossings_between_signs: int = 0

    @property
    def boundary_cycle(self):
        return None if self.boundary is None else self.cycles[self.boundary]


def polygon_area(P):
    P = np.asarray(P, dtype=float)
    x, y = P[:, 0], P[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _clearance(p, a, b):
    """Distance of points ``p`` from segment ``a``--``b``."""
    ab = b - a
    s = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return np.linalg.norm(p - (a + s[:, None] * ab), axis=1)


def build_section(pair, half_length, n_samples=40, singularities=(), clearance=None):
    """Section through the midpoint of a wedge pair, normal to the pair axis.

    Raises
    ------
    SectionBlocked
        If a singularity other than the pair lies within ``clearance`` of the
        section (default: half the seed spacing).
    """
    if isinstance(pair, WedgePair):
        a, b = pair.a.position, pair.b.position
    else:
        a, b = (np.asarray(p, dtype=float) for p in pair)
    a, b = np.asarray(a, float), np.asarray(b, float)
    axis = (b - a) / np.linalg.norm(b - a)
    direction = rot90(axis)
    base = 0.5 * (a + b)
    c = np.linspace(-half_length, half_length, n_samples)
    section = PoincareSection(base, direction, float(half_length), base + c[:, None] * direction)
    clearance = half_length / max(n_samples - 1, 1) if clearance is None else clearance
    others = [np.asarray(getattr(s, "position", s), float) for s in singularities]
    others = [p for p in others if min(np.linalg.norm(p - a), np.linalg.norm(p - b)) > 1e-12]
    if others:
        d = _clearance(np.array(others), section.point(-half_length), section.point(half_length))
        if np.any(d < clearance):
            p = others[int(np.argmin(d))]
            raise SectionBlocked(f"singularity at ({p[0]:.4g}, {p[1]:.4g}) lies on the section")
    return section


def default_half_length(pair, singularities, cap=None):
    """0.9 times the distance from the pair midpoint to the nearest other singularity."""
    mid = pair.midpoint
    d = [np.linalg.norm(s.position - mid) for s in singularities
         if s is not pair.a and s is not pair.b]
    L = 0.9 * min(d) if d else np.inf
    if cap is not None:
        L = min(L, cap)
    if not np.isfinite(L):
        raise ValueError("cannot size the section: give half_length explicitly")
    return float(L)


def default_mu_range(field, t, fraction=0.2):
    """``(-fraction * m, fraction * m)`` with ``m`` the domain median of ``|s2|``."""
    _, _, S, valid = strain_grid(field, t)
    s2 = eigen_fields(S[valid]).s2
    m = float(np.median(np.abs(s2)))
    return -fraction * m, fraction * m


def _hermite_crossing(p0, p1, t0, t1, h, base, normal, direction):
    """Section coordinate where the cubic Hermite arc p0->p1 meets the section line."""
    g0 = (p0 - base) @ normal
    g1 = (p1 - base) @ normal
    tau = np.clip(g0 / (g0 - g1), 0.0, 1.0)
    m0, m1 = h * t0, h * t1
    for _ in range(8):
        t2, t3 = tau * tau, tau ** 3
        p = ((2 * t3 - 3 * t2 + 1)[:, None] * p0 + (t3 - 2 * t2 + tau)[:, None] * m0
             + (-2 * t3 + 3 * t2)[:, None] * p1 + (t3 - t2)[:, None] * m1)
        dp = ((6 * t2 - 6 * tau)[:, None] * p0 + (3 * t2 - 4 * tau + 1)[:, None] * m0
              + (-6 * t2 + 6 * tau)[:, None] * p1 + (3 * t2 - 2 * tau)[:, None] * m1)
        g = (p - base) @ normal
        dg = dp @ normal
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dg != 0, g / dg, 0.0)
        tau = np.clip(tau - step, 0.0, 1.0)
    t2, t3 = tau * tau, tau ** 3
    p = ((2 * t3 - 3 * t2 + 1)[:, None] * p0 + (t3 - 2 * t2 + tau)[:, None] * m0
         + (-2 * t3 + 3 * t2)[:, None] * p1 + (t3 - t2)[:, None] * m1)
    return (p - base) @ direction, p


class _ReturnMap:
    """Batched first-return map of a section for arrays of ``(c, mu, sign)``."""

    def __init__(self, section, field, t, step, singularities, max_length):
        self.section, self.field, self.t = section, field, t
        self.h = field.grid_step / 5 if step is None else float(step)
        self.singularities = singularities
        self.max_length = (4 * np.pi * section.half_length if max_length is None
                           else max_length)

    def __call__(self, c, mu, sign, keep_paths=False):
        sec, h = self.section, self.h
        c = np.asarray(c, dtype=float)
        n = len(c)
        seeds = sec.point(c)
        ret = np.full(n, np.nan)
        hit = np.full((n, 2), np.nan)
        last_tan = np.full((n, 2), np.nan)
        base, normal, direction = sec.base, sec.normal, sec.direction

        def crossing(idx, old, new, tan, s):
            prev = last_tan[idx]
            prev = np.where(np.isnan(prev), (new - old) / h, prev)
            last_tan[idx] = tan
            g0 = (old - base) @ normal
            g1 = (new - base) @ normal
            fire = (g0 < 0) & (g1 >= 0) & (s > 4 * h)
            if np.any(fire):
                cc, pp = _hermite_crossing(old[fire], new[fire], prev[fire], tan[fire],
                                           h, base, normal, direction)
                ret[idx[fire]] = cc
                hit[idx[fire]] = pp
            return fire

        trajs = integrate_tensorlines(
            seeds, normal, DirectionSpec(CHI), self.field, self.t, step=h,
            max_length=self.max_length, singularities=self.singularities,
            detect_closure=False, user=crossing, mu=mu, sign=sign)
        disp = np.full(n, np.nan)
        reasons = []
        for k, tr in enumerate(trajs):
            reasons.append(None if tr is None else tr.stop_reason)
            if tr is None or tr.stop_reason != "user":
                continue
            if np.sign(ret[k]) != np.sign(c[k]) and c[k] != 0:
                reasons[-1] = "opposite_side"
                continue
            disp[k] = ret[k] - c[k]
        paths = None
        if keep_paths:
            paths = []
            for k, tr in enumerate(trajs):
                if np.isnan(disp[k]):
                    paths.append(None)
                    continue
                # the last vertex lies past the section; the return point closes the cycle
                inner = TensorlineTrajectory(tr.points[:-1], tr.arclengths[:-1],
                                             tr.tangents[:-1], "closed", tr.spec)
                paths.append((np.vstack([inner.points, hit[k]]), inner))
        return disp, reasons, paths


def return_displacement(seed, mu, sign, field, t, section=None, step=None,
                        singularities=None, max_length=None):
    """Signed displacement along the section of the first same-side return.

    Without ``section``, the section runs from the origin through the seed.

    Raises
    ------
    OutsideUmu
        If ``mu`` is not between the eigenvalues at the seed.
    NoReturn
        If the trajectory stops before crossing the section again.
    """
    seed = np.asarray(seed, dtype=float)
    if section is None:
        r = float(np.linalg.norm(seed))
        if r == 0:
            raise ValueError("seed at the origin needs an explicit section")
        section = PoincareSection(np.zeros(2), seed / r, r, seed[None])
    try:
        eval_chi(seed, t, mu, sign, field)
    except Degenerate as exc:
        raise NoReturn(str(exc), "singularity") from None
    c = float((seed - section.base) @ section.direction)
    rm = _ReturnMap(section, field, t, step, singularities, max_length)
    disp, reasons, _ = rm(np.array([c]), np.array([mu]), np.array([sign]))
    if np.isnan(disp[0]):
        raise NoReturn(f"no return to the section (stopped: {reasons[0]})", reasons[0])
    return float(disp[0])


def _enclosed(cycle, singularities):
    if not singularities:
        return []
    path = Path(cycle)
    pts = np.array([getattr(s, "position", s) for s in singularities], float)
    inside = path.contains_points(pts)
    return [s for s, k in zip(singularities, inside) if k]


def _search(section, mus, signs, field, t, step=None, singularities=None,
            max_length=None, min_enclosed=2, max_iter=40):
    """Limit-cycle searches for many ``(mu, sign)`` pairs at once."""
    rm = _ReturnMap(section, field, t, step, singularities, max_length)
    h = rm.h
    tol = 1e-3 * h
    cs = section.coords
    m = len(mus)
    C = np.tile(cs, m)
    MU = np.repeat(mus, len(cs))
    SG = np.repeat(signs, len(cs))
    D = rm(C, MU, SG)[0].reshape(m, len(cs))
    spacing = np.diff(cs).min() if len(cs) > 1 else 1.0

    results, brackets = [], []
    for j in range(m):
        d = D[j]
        fin = np.isfinite(d)
        degenerate = False
        if fin.sum() >= 3:
            slopes = np.diff(d[fin]) / np.diff(cs[fin])
            degenerate = (np.all(np.abs(slopes) <= ISOLATION_SLOPE)
                          and np.all(np.abs(d[fin]) <= ISOLATION_SLOPE * spacing))
        results.append(CycleSearch(float(mus[j]), int(signs[j]), [], degenerate, cs, d))
        if degenerate:
            continue
        for half in (cs < 0, cs > 0):
            k = np.nonzero(half)[0]
            for a, b in zip(k[:-1], k[1:]):
                if np.isfinite(d[a]) and np.isfinite(d[b]) and d[a] * d[b] <= 0:
                    brackets.append([j, cs[a], cs[b], d[a], d[b]])
    if not brackets:
        return results

    B = np.array(brackets, dtype=float)
    jj = B[:, 0].astype(int)
    a, b, fa, fb = B[:, 1].copy(), B[:, 2].copy(), B[:, 3].copy(), B[:, 4].copy()
    root = np.where(fa == 0, a, np.where(fb == 0, b, np.nan))
    alive = np.isnan(root)
    side = np.zeros(len(a), dtype=int)
    for _ in range(max_iter):
        live = np.nonzero(alive)[0]
        if len(live) == 0:
            break
        x = (a[live] * fb[live] - b[live] * fa[live]) / (fb[live] - fa[live])
        fx = rm(x, mus[jj[live]], signs[jj[live]])[0]
        for q, i in enumerate(live):
            if not np.isfinite(fx[q]):
                alive[i] = False
                continue
            if fx[q] == 0:
                root[i], alive[i] = x[q], False
                continue
            if fx[q] * fb[i] < 0:
                a[i], fa[i] = b[i], fb[i]
                b[i], fb[i] = x[q], fx[q]
                side[i] = 0
            else:
                b[i], fb[i] = x[q], fx[q]
                fa[i] *= 0.5 if side[i] == 1 else 1.0  # Illinois
                side[i] = 1
            slope_ab = (fb[i] - fa[i]) / (b[i] - a[i])
            if abs(b[i] - a[i]) < tol or abs(fx[q]) < tol * abs(slope_ab):
                root[i], alive[i] = b[i], False

    ok = np.nonzero(np.isfinite(root))[0]
    if len(ok) == 0:
        return results
    dc = np.minimum(spacing / 10, np.abs(B[ok, 2] - B[ok, 1]) / 2)
    cc = np.concatenate([root[ok], root[ok] - dc, root[ok] + dc])
    jt = np.tile(jj[ok], 3)
    disp, _, paths = rm(cc, mus[jt], signs[jt], keep_paths=True)
    n = len(ok)
    slope = (disp[2 * n:] - disp[n:2 * n]) / (2 * dc)
    for q, i in enumerate(ok):
        res = results[jj[i]]
        path, traj = paths[q] if paths[q] is not None else (None, None)
        if path is None or not np.isfinite(slope[q]) or abs(slope[q]) <= ISOLATION_SLOPE:
            res.rejected += 1
            continue
        enc = _enclosed(path, singularities or [])
        if len(enc) < min_enclosed:
            res.rejected += 1
            continue
        cyc = EllipticOecs(res.mu, res.sign, path, enc, float(slope[q]), float(root[i]), traj)
        if any(_same_cycle(cyc, o, h) for o in res.cycles):
            continue
        res.cycles.append(cyc)
    for res in results:
        res.cycles.sort(key=lambda e: e.area)
    return results


def _same_cycle(p, q, h):
    ap, aq = p.area, q.area
    cp, cq = p.cycle.mean(axis=0), q.cycle.mean(axis=0)
    return abs(ap - aq) <= 1e-3 * max(ap, aq) and np.linalg.norm(cp - cq) < h


def find_limit_cycles(section, mu, sign, field, t, step=None, singularities=None,
                      max_length=None, min_enclosed=2):
    """Isolated closed orbits of ``chi_mu^sign`` crossing the section.

    Returns
    -------
    CycleSearch
        Iterable over :class:`EllipticOecs`; ``degenerate`` is set instead
        when the return map vanishes identically.
    """
    return _search(section, np.array([float(mu)]), np.array([int(sign)]), field, t,
                   step=step, singularities=singularities, max_length=max_length,
                   min_enclosed=min_enclosed)[0]


def _crosses(p, q):
    P, Q = p.cycle, q.cycle
    # edges of length <= ell can only cross if some vertices are within ell
    ell = max(np.linalg.norm(np.diff(P, axis=0), axis=1).max(),
              np.linalg.norm(np.diff(Q, axis=0), axis=1).max())
    lo = np.maximum(P.min(0), Q.min(0)) - ell
    hi = np.minimum(P.max(0), Q.max(0)) + ell
    if np.any(lo > hi):
        return False
    d2 = np.add.outer((P * P).sum(1), (Q * Q).sum(1)) - 2 * P @ Q.T
    if d2.min() > 1.01 * ell * ell:
        return False
    return Path(P).intersects_path(Path(Q), filled=False)


def sweep_mu(section, mu_range, n_mu, field, t, step=None, singularities=None,
             max_length=None, min_enclosed=2, signs=(1, -1)):
    """Elliptic family over a grid of ``mu`` values and both signs.

    The member with the largest enclosed area is the vortex boundary.

    Raises
    ------
    IntersectionAnomaly
        If two cycles of the same sign cross.
    """
    lo, hi = mu_range
    mus = np.linspace(lo, hi, n_mu)
    M = np.repeat(mus, len(signs))
    G = np.tile(np.asarray(signs), n_mu)
    searches = _search(section, M, G, field, t, step=step, singularities=singularities,
                       max_length=max_length, min_enclosed=min_enclosed)
    cycles = [c for s in searches for c in s.cycles]
    cycles.sort(key=lambda e: (e.mu, -e.sign, e.area))
    across = 0
    for i in range(len(cycles)):
        for j in range(i + 1, len(cycles)):
            if not _crosses(cycles[i], cycles[j]):
                continue
            if cycles[i].sign == cycles[j].sign:
                raise IntersectionAnomaly(
                    f"cycles at mu={cycles[i].mu:.4g} and mu={cycles[j].mu:.4g} "
                    f"(sign {cycles[i].sign:+d}) cross")
            across += 1
    boundary = int(np.argmax([c.area for c in cycles])) if cycles else None
    degenerate = [(s.mu, s.sign) for s in searches if s.degenerate]
    return EllipticFamily(cycles, boundary, degenerate, across)


def rotated_field_witness(x, t, mu, sign, field, delta=1e-5, return_check=False):
    """Rotation rate of ``chi_mu^sign`` with respect to ``mu`` at ``x``.

    The analytic value ``sign / (2 sqrt((mu - s1)(s2 - mu)))`` equals the
    cross product ``chi x d(chi)/d(mu)``; with ``return_check=True`` the
    central-difference estimate of that cross product is returned as well.

    Raises
    ------
    Degenerate
        If ``mu`` is not strictly between ``s1`` and ``s2``.
    """
    S = strain_at(field, np.float64(x[0]), np.float64(x[1]), t)
    eig = eigen_fields(S)
    s1, s2 = float(eig.s1), float(eig.s2)
    if eig.degenerate or not (s1 < mu < s2):
        raise Degenerate(f"mu={mu:g} not strictly inside ({s1:.6g}, {s2:.6g})")
    o = sign / (2 * np.sqrt((mu - s1) * (s2 - mu)))
    if not return_check:
        return float(o)
    chi = chi_from_eigen(eig, mu, sign)[0]
    cp = chi_from_eigen(eig, mu + delta, sign)[0]
    cm = chi_from_eigen(eig, mu - delta, sign)[0]
    dchi = (cp - cm) / (2 * delta)
    fd = float(chi[0] * dchi[1] - chi[1] * dchi[0])
    return float(o), fd
