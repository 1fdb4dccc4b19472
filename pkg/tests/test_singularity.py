import numpy as np
import pytest

from oecs import analytic_flow
from oecs.errors import AmbiguousWinding
from oecs.singularity import (TRISECTOR, UNCLASSIFIED, WEDGE, Singularity, classify_singularity,
                              eigenvector_index, find_singularities, pair_wedges)


def linear(S1, S2, S0=((0, 0), (0, 0)), **kw):
    return analytic_flow("linear_strain", S0=S0, S1=S1, S2=S2, **kw)


WEDGE_FIELD = dict(S1=((1, 0), (0, -1)), S2=((0, 1), (1, 0)))        # [[x, y], [y, -x]]
TRI_FIELD = dict(S1=((1, 0), (0, -1)), S2=((0, -1), (-1, 0)))        # [[x, -y], [-y, -x]]
SWAP_FIELD = dict(S1=((0, 1), (1, 0)), S2=((1, 0), (0, -1)))         # [[y, x], [x, -y]]


def test_single_wedge_at_origin():
    sing = find_singularities(linear(**WEDGE_FIELD), 0.0)
    assert len(sing) == 1
    assert np.allclose(sing[0].position, 0, atol=1e-10)
    assert sing[0].kind == WEDGE


def test_constant_strain_has_none():
    f = linear(S0=((1, 0), (0, -1)), S1=((0, 0), (0, 0)), S2=((0, 0), (0, 0)))
    assert find_singularities(f, 0.0) == []


def test_cellular_singularities_not_transverse(cellular):
    sing = find_singularities(cellular, 0.0)
    assert len(sing) > 0
    assert all(not s.transverse and s.kind == UNCLASSIFIED for s in sing)
    assert find_singularities(cellular, 0.0, include_nontransverse=False) == []


@pytest.mark.parametrize("spec, kind, index", [
    (WEDGE_FIELD, WEDGE, 0.5), (TRI_FIELD, TRISECTOR, -0.5), (SWAP_FIELD, TRISECTOR, -0.5)])
def test_classification_matches_winding(spec, kind, index):
    f = linear(**spec)
    k, delta = classify_singularity(f, 0.0, (0.0, 0.0))
    assert k == kind
    assert eigenvector_index(f, 0.0, (0.0, 0.0), 0.1) == index


def test_index_zero_away_from_singularity():
    assert eigenvector_index(linear(**WEDGE_FIELD), 0.0, (1.0, 1.0), 0.2) == 0


def test_winding_under_resolved():
    with pytest.raises(AmbiguousWinding):
        eigenvector_index(linear(**WEDGE_FIELD), 0.0, (0.0, 0.0), 0.1, n_samples=3)


def test_wedge_trisector_fixture():
    sing = find_singularities(analytic_flow("wedge_trisector"), 0.0)
    kinds = {s.kind: s.position for s in sing}
    assert np.allclose(kinds[TRISECTOR], (-1, 0), atol=1e-9)
    assert np.allclose(kinds[WEDGE], (1, 0), atol=1e-9)


def _wedge(x, y):
    return Singularity(np.array([x, y], float), WEDGE, 1.0)


def test_pair_wedges():
    pairs = pair_wedges([_wedge(0, 0), _wedge(1, 0)], 2.0)
    assert len(pairs) == 1
    assert np.allclose(pairs[0].midpoint, (0.5, 0))
    assert pair_wedges([_wedge(0, 0), _wedge(3, 0)], 2.0) == []


def test_pair_needs_clear_annulus():
    crowd = [_wedge(0, 0), _wedge(1, 0), Singularity(np.array([0.5, 0.6]), TRISECTOR, -1.0)]
    assert pair_wedges(crowd, 2.0) == []


def test_singularities_map_with_observer():
    from oecs.kinematics import FrameChange, TransformedField
    base = analytic_flow("wedge_trisector")
    frame = FrameChange.uniform(0.3, 0.7, (0.1, 0.2), (0.5, -0.4))
    t = 0.8
    tf = TransformedField(base, frame, t_ref=t)
    found = find_singularities(tf, t)
    mapped = frame.to_old(np.array([s.position for s in found]), t)
    ref = np.array([s.position for s in find_singularities(base, t)])
    assert len(found) == len(ref)
    d = np.linalg.norm(mapped[:, None] - ref[None], axis=-1).min(axis=1)
    assert d.max() < 1e-6
