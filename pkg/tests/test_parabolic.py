import numpy as np
import pytest

from oecs import analytic_flow
from oecs.errors import NoConnection
from oecs.parabolic import (HeteroclinicSegment, assemble_chains, connect_to_wedge,
                            neutral_trench_check, trisector_separatrices, weak_minimizer_check)
from oecs.singularity import TRISECTOR, WEDGE, Singularity, find_singularities
from oecs.tensorline import E1, E2

NORMAL_FORM = dict(S0=((0, 0), (0, 0)), S1=((1, 0), (0, -1)), S2=((0, -1), (-1, 0)))


def _split(sing):
    return ([s for s in sing if s.kind == TRISECTOR], [s for s in sing if s.kind == WEDGE])


def test_normal_form_separatrix_angles():
    f = analytic_flow("linear_strain", **NORMAL_FORM)
    tri = find_singularities(f, 0.0)[0]
    seps = trisector_separatrices(tri, f, 0.0)
    got = {fam: sorted(np.degrees([s.angle for s in seps[fam]])) for fam in seps}
    assert np.allclose(got[E2], [0, 120, 240], atol=1e-6)
    assert np.allclose(got[E1], [60, 180, 300], atol=1e-6)
    for s in seps[E1] + seps[E2]:
        assert np.isclose(np.linalg.norm(s.seed - tri.position), 2 * f.grid_step / 5)


def test_wedge_rejected():
    f = analytic_flow("linear_strain")
    wedge = find_singularities(f, 0.0)[0]
    with pytest.raises(ValueError):
        trisector_separatrices(wedge, f, 0.0)


@pytest.fixture(scope="module")
def wt():
    f = analytic_flow("wedge_trisector")
    sing = find_singularities(f, 0.0)
    (tri,), wedges = _split(sing)
    return f, sing, tri, wedges


def test_axis_connection(wt):
    f, sing, tri, wedges = wt
    sep = next(s for s in trisector_separatrices(tri, f, 0.0)[E1] if abs(s.angle) < 1e-9)
    seg = connect_to_wedge(sep, E1, f, 0.0, wedges, start=tri, singularities=sing)
    assert seg.end is wedges[0]
    assert np.allclose(seg.polyline[0], (-1, 0))
    assert np.abs(seg.polyline[:, 1]).max() < 1e-12
    assert seg.hit_distance < 2 * f.grid_step / 5
    assert seg.length == pytest.approx(2.0, abs=0.05)
    assert weak_minimizer_check(seg, f, 0.0).passed and seg.check.passed


def test_no_connection_leaves_domain(wt):
    f, sing, tri, wedges = wt
    sep = next(s for s in trisector_separatrices(tri, f, 0.0)[E2]
               if abs(s.angle - np.pi) < 1e-9)
    with pytest.raises(NoConnection):
        connect_to_wedge(sep, E2, f, 0.0, wedges, start=tri, singularities=sing)


def test_trench_check_on_parabola():
    pts = np.column_stack([np.linspace(-1, 1, 41), np.zeros(41)])
    up = lambda p: np.broadcast_to([0.0, 1.0], p.shape)
    res = neutral_trench_check(pts, lambda p: p[..., 1] ** 2, up, 0.05)
    assert res.passed
    assert np.allclose(res.trench_offsets, 0)


def test_trench_check_fails_on_flat_neutrality():
    pts = np.column_stack([np.linspace(-1, 1, 41), np.zeros(41)])
    up = lambda p: np.broadcast_to([0.0, 1.0], p.shape)
    res = neutral_trench_check(pts, lambda p: np.ones(p.shape[:-1]), up, 0.05)
    assert not res.passed and res.fail_arclength == 0.0


def test_constant_strain_segment_fails():
    f = analytic_flow("linear_strain", S0=((1, 0), (0, -1)), S1=((0, 0), (0, 0)),
                      S2=((0, 0), (0, 0)))
    line = np.column_stack([np.linspace(-0.5, 0.5, 30), np.zeros(30)])
    seg = HeteroclinicSegment((-0.5, 0.0), (0.5, 0.0), E2, line, 0.0)
    assert not weak_minimizer_check(seg, f, 0.0).passed


def _seg(a, b, fam):
    return HeteroclinicSegment(np.array(a, float), np.array(b, float), fam,
                               np.array([a, b], float), 0.0)


def test_chain_assembly():
    chains = assemble_chains([_seg((0, 0), (1, 0), E1), _seg((1, 0), (1, 2), E2)])
    assert len(chains) == 1 and chains[0].families == [E1, E2]
    chains = assemble_chains([_seg((0, 0), (1, 0), E1), _seg((1, 0), (1, 2), E1)])
    assert len(chains) == 2 and all(len(c.segments) == 1 for c in chains)
    assert chains[0].total_length >= chains[1].total_length


def test_jet_chain_regression():
    f = analytic_flow("perturbed_jet")
    sing = find_singularities(f, 0.0)
    tris, wedges = _split(sing)
    segs = []
    for tri in tris:
        seps = trisector_separatrices(tri, f, 0.0)
        for fam in sorted(seps):
            for sp in seps[fam]:
                try:
                    seg = connect_to_wedge(sp, fam, f, 0.0, wedges, start=tri, singularities=sing)
                except NoConnection:
                    continue
                if weak_minimizer_check(seg, f, 0.0).passed:
                    segs.append(seg)
    chains = assemble_chains(segs)
    assert chains[0].families == [E2, E1, E2]
    assert all(abs(p[1]) < 1.0 for s in chains[0].segments for p in s.polyline)
