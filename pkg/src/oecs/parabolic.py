"""Jet cores as alternating chains of e1/e2 connections between singularities.

Separatrices leave each trisector along the radial directions of its
linearization. Those that reach a wedge are kept when the neutrality
function ``N`` (``s2**2`` along e1-lines, ``s1**2`` along e2-lines) has a
convex trench next to every vertex, and surviving segments are linked into
chains whose families alternate.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import LinearizationDegenerate, NoConnection
from .kinematics import eigen_fields, rot90, strain_at
from .singularity import TRISECTOR, WEDGE, ab_jacobian
from .tensorline import E1, E2, DirectionSpec, integrate_tensorline, polyline_tangents

#: Trench search radius in grid steps.
TRENCH_STEPS = 10


@dataclass(frozen=True)
class Separatrix:
    family: str
    angle: float
    seed: np.ndarray
    direction: np.ndarray


@dataclass
class NeutralityCheck:
    passed: bool
    fail_arclength: float | None = None
    reason: str = ""
    trench_offsets: np.ndarray | None = None


@dataclass
class HeteroclinicSegment:
    start: object
    end: object
    family: str
    polyline: np.ndarray
    hit_distance: float
    check: NeutralityCheck | None = None

    @property
    def length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.polyline, axis=0), axis=1)))


@dataclass
class ParabolicChain:
    segments: list
    nodes: list = dc_field(default_factory=list)

    @property
    def total_length(self):
        return sum(s.length for s in self.segments)

    @property
    def families(self):
        return [s.family for s in self.segments]


def _radial_angles(J):
    """Angles in [0, 2 pi) where the eigenvector of the linear model is radial.

    With ``alpha = a x + b y`` and ``beta = c x + d y`` the radial condition
    is ``alpha sin 2th - beta cos 2th = 0`` (a cubic in ``tan th``).
    """
    (a, b), (c, d) = J

    def g(th):
        al = a * np.cos(th) + b * np.sin(th)
        be = c * np.cos(th) + d * np.sin(th)
        return al * np.sin(2 * th) - be * np.cos(2 * th)

    # offset by half a sample so roots at 0 and 2 pi are not split or doubled
    th = np.linspace(0.0, 2 * np.pi, 3601) - np.pi / 3600
    v = g(th)
    lo = np.nonzero((v[:-1] == 0) | (v[:-1] * v[1:] < 0))[0]
    left, right = th[lo], th[lo + 1]
    for _ in range(60):
        mid = 0.5 * (left + right)
        gm = g(mid)
        same = np.sign(gm) == np.sign(g(left))
        left = np.where(same, mid, left)
        right = np.where(same, right, mid)
    th = np.mod(0.5 * (left + right), 2 * np.pi)
    th[th > 2 * np.pi - 1e-12] = 0.0
    return np.sort(th)


def trisector_separatrices(tri, field, t, step=None):
    """Separatrix seeds of a trisector, three per eigenvector family.

    A radial direction ``th`` belongs to the ``e2`` family when the
    deviatoric strain is positive along it, ``alpha cos 2th + beta sin 2th > 0``,
    and to ``e1`` otherwise. Seeds sit two steps out along each ray.

    Returns
    -------
    dict
        ``{"E1": [Separatrix, ...], "E2": [...]}``.
    """
    if getattr(tri, "kind", TRISECTOR) != TRISECTOR:
        raise ValueError(f"separatrices need a trisector, got {tri.kind}")
    p = np.asarray(getattr(tri, "position", tri), dtype=float)
    J = ab_jacobian(field, t, p)
    scale = float(np.sum(J * J))
    if scale == 0 or abs(np.linalg.det(J)) < 1e-8 * scale:
        raise LinearizationDegenerate("linearization at the trisector is singular")
    h = field.grid_step / 5 if step is None else float(step)
    out = {E1: [], E2: []}
    for th in _radial_angles(J):
        u = np.array([np.cos(th), np.sin(th)])
        al, be = J @ u
        fam = E2 if al * np.cos(2 * th) + be * np.sin(2 * th) > 0 else E1
        out[fam].append(Separatrix(fam, float(th), p + 2 * h * u, u))
    if len(out[E1]) != 3 or len(out[E2]) != 3:
        raise LinearizationDegenerate(
            f"expected 3 radial directions per family, got {len(out[E1])}/{len(out[E2])}")
    return out


def connect_to_wedge(seed, family, field, t, wedges, capture_radius=None, step=None,
                     start=None, singularities=None, max_length=None, direction=None):
    """Follow a separatrix until it comes within ``capture_radius`` of a wedge.

    ``seed`` may be a :class:`Separatrix`. Other singularities stop the
    trajectory at the usual stand-off distance.

    Raises
    ------
    NoConnection
        If the trajectory ends anywhere else.
    """
    if isinstance(seed, Separatrix):
        direction = seed.direction if direction is None else direction
        family = seed.family
        seed = seed.seed
    seed = np.asarray(seed, dtype=float)
    h = field.grid_step / 5 if step is None else float(step)
    cap = 2 * h if capture_radius is None else capture_radius
    W = np.array([getattr(w, "position", w) for w in wedges], dtype=float).reshape(-1, 2)
    if direction is None:
        d = eigen_fields(strain_at(field, seed[0], seed[1], t))
        direction = d.e1 if family == E1 else d.e2
    hit = {}

    def captured(idx, old, new, tan, s):
        if len(W) == 0:
            return np.zeros(len(idx), dtype=bool)
        dist = np.linalg.norm(new[:, None, :] - W[None], axis=-1)
        k = dist.argmin(axis=1)
        fire = dist[np.arange(len(idx)), k] < cap
        for q in np.nonzero(fire)[0]:
            hit["wedge"], hit["distance"] = int(k[q]), float(dist[q, k[q]])
        return fire

    others = []
    if singularities is not None:
        for s in singularities:
            p = np.asarray(getattr(s, "position", s), float)
            if start is not None and np.allclose(p, getattr(start, "position", start)):
                continue
            if len(W) and np.min(np.linalg.norm(W - p, axis=1)) < 1e-12:
                continue
            others.append(p)
    traj = integrate_tensorline(seed, direction, DirectionSpec(family), field, t, step=h,
                                max_length=max_length, singularities=others,
                                detect_closure=False, user=captured)
    if traj.stop_reason != "user":
        raise NoConnection(f"{family}-line from ({seed[0]:.4g}, {seed[1]:.4g}) "
                           f"ended without reaching a wedge ({traj.stop_reason})")
    end = wedges[hit["wedge"]]
    pts = traj.points
    if start is not None:
        pts = np.vstack([np.asarray(getattr(start, "position", start), float), pts])
    return HeteroclinicSegment(start, end, family, pts, hit["distance"])


def neutrality_function(field, t, family):
    """``N`` along ``family`` lines: ``s2**2`` for e1-lines, ``s1**2`` for e2-lines."""

    def N(p):
        eig = eigen_fields(strain_at(field, p[..., 0], p[..., 1], t))
        return (eig.s2 if family == E1 else eig.s1) ** 2

    return N


def _hessian_along(N, pts, dirs, eta):
    """``<d, Hess N d>`` at ``pts`` by central differences of step ``eta``."""
    f0 = N(pts)
    fp = N(pts + eta * dirs)
    fm = N(pts - eta * dirs)
    return (fp - 2 * f0 + fm) / eta ** 2


def neutral_trench_check(points, N, cross_dir, h, arclengths=None, eta=None,
                         search_steps=TRENCH_STEPS, n_per_step=4):
    """Weak-minimizer test on a polyline for a neutrality function ``N``.

    For every vertex the normal line ``x + eps n`` (``n = R tangent``) is
    searched out to ``search_steps * h`` in both senses for the nearest
    strict local minimum of ``N`` (the trench). Every sample from the vertex
    to that trench must satisfy ``<e, Hess N e> > 0`` with ``e`` the unit
    direction returned by ``cross_dir``.

    Parameters
    ----------
    points : array_like, shape (n, 2)
    N : callable
        Neutrality function of points ``(..., 2)``.
    cross_dir : callable
        Unit direction field of points used to project the Hessian.
    h : float
        Grid step setting the search radius and sample spacing.
    """
    P = np.asarray(points, dtype=float)
    if arclengths is None:
        arclengths = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(P, axis=0), axis=1))])
    eta = 1e-2 * h if eta is None else eta
    n = rot90(polyline_tangents(P, closed=False))
    K = search_steps * n_per_step
    eps = np.arange(-K, K + 1) * (h / n_per_step)
    line = P[:, None, :] + eps[None, :, None] * n[:, None, :]
    F = N(line)
    offsets = np.full(len(P), np.nan)
    for k in range(len(P)):
        f = F[k]
        interior = np.arange(1, len(f) - 1)
        is_min = (f[interior] < f[interior - 1]) & (f[interior] < f[interior + 1])
        # a trench exactly on the vertex
        mins = interior[is_min]
        if len(mins) == 0:
            return NeutralityCheck(False, float(arclengths[k]), "trench not found", offsets)
        m = mins[np.argmin(np.abs(mins - K))]
        offsets[k] = eps[m]
        lo, hi = sorted((K, m))
        seg = line[k, lo:hi + 1]
        curv = _hessian_along(N, seg, cross_dir(seg), eta)
        if np.any(~(curv > 0)):
            return NeutralityCheck(False, float(arclengths[k]), "outside convexity set", offsets)
    return NeutralityCheck(True, None, "", offsets)


def weak_minimizer_check(segment, field, t, eta=None):
    """Neutrality test of a heteroclinic segment, stored on ``segment.check``.

    The Hessian of ``N_{e_i}`` is projected on the other eigenvector
    ``e_j``. Returns the :class:`NeutralityCheck`; on failure
    ``fail_arclength`` locates the first failing vertex.
    """
    fam = segment.family
    N = neutrality_function(field, t, fam)

    def cross(p):
        eig = eigen_fields(strain_at(field, p[..., 0], p[..., 1], t))
        return eig.e2 if fam == E1 else eig.e1

    h = field.grid_step
    if eta is None:
        eta = h if field.kind == "gridded" else 1e-2 * h
    # the ends sit on singularities where e_j is undefined; skip them
    P = segment.polyline
    inner = P[1:-1] if len(P) > 6 else P
    res = neutral_trench_check(inner, N, cross, h, eta=eta)
    if res.fail_arclength is not None and inner is not P:
        res.fail_arclength += float(np.linalg.norm(P[1] - P[0]))
    segment.check = res
    return res


def _node_key(s):
    p = np.asarray(getattr(s, "position", s), dtype=float)
    return (round(float(p[0]), 9), round(float(p[1]), 9))


def assemble_chains(segments):
    """Maximal chains of segments whose families alternate.

    Consecutive segments share a singularity and differ in family; every
    segment and singularity appears at most once per chain. Chains are
    returned longest first (ties broken by segment count, then position).
    """
    segs = list(segments)
    ends = [(_node_key(s.start), _node_key(s.end)) for s in segs]
    incident = {}
    for k, (a, b) in enumerate(ends):
        incident.setdefault(a, []).append(k)
        incident.setdefault(b, []).append(k)

    def other(k, node):
        a, b = ends[k]
        return b if node == a else a

    def extensions(path, node):
        last = segs[path[-1]].family
        return [k for k in incident.get(node, []) if k not in path and segs[k].family != last]

    found = set()
    chains = []

    def grow(path, nodes):
        nxt = [k for k in extensions(path, nodes[-1]) if other(k, nodes[-1]) not in nodes]
        if not nxt:
            # only maximal if it cannot be extended at the front either
            front = [k for k in incident.get(nodes[0], []) if k not in path
                     and segs[k].family != segs[path[0]].family
                     and other(k, nodes[0]) not in nodes]
            if front:
                return
            key = tuple(path) if path[0] <= path[-1] else tuple(reversed(path))
            if key not in found:
                found.add(key)
                chains.append((list(key), nodes if key == tuple(path) else nodes[::-1]))
            return
        for k in nxt:
            grow(path + [k], nodes + [other(k, nodes[-1])])

    for k, (a, b) in enumerate(ends):
        grow([k], [a, b])
        grow([k], [b, a])
    out = [ParabolicChain([segs[k] for k in path], [n for n in nodes]) for path, nodes in chains]
    out.sort(key=lambda c: (-c.total_length, -len(c.segments), c.nodes))
    return out
