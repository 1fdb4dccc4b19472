import numpy as np
import pytest

from oecs import analytic_flow
from oecs.errors import DegenerateCore
from oecs.hyperbolic import (ATTRACTING, REPELLING, RISE_RTOL, extract_hyperbolic,
                             find_eigenvalue_extrema, saddle_comparison_report)

HALF_PI = np.pi / 2


@pytest.fixture(scope="module")
def cores():
    f = analytic_flow("cellular")
    return f, find_eigenvalue_extrema(f, 0.0)


def test_single_core_at_origin(cores):
    _, (att, rep) = cores
    assert len(att) == len(rep) == 1
    assert np.allclose(rep[0].position, 0, atol=1e-9)
    assert rep[0].kind == REPELLING and att[0].kind == ATTRACTING


def _endpoint_sets(hyp):
    return sorted(map(tuple, np.round(hyp.endpoints, 6)))


def test_repelling_ends_on_y_axis(cores):
    f, (_, rep) = cores
    hyp = extract_hyperbolic(rep[0], REPELLING, f, 0.0)
    ends = np.array(hyp.endpoints)
    assert np.allclose(np.sort(ends[:, 1]), (-HALF_PI, HALF_PI), atol=0.05)
    assert np.abs(ends[:, 0]).max() < 0.05
    assert set(hyp.stop_reasons) <= {"monotonicity", "singularity"}


def test_attracting_ends_on_x_axis(cores):
    f, (att, _) = cores
    hyp = extract_hyperbolic(att[0], ATTRACTING, f, 0.0)
    ends = np.array(hyp.endpoints)
    assert np.allclose(np.sort(ends[:, 0]), (-HALF_PI, HALF_PI), atol=0.05)
    assert np.abs(ends[:, 1]).max() < 0.05


@pytest.mark.parametrize("kind", [REPELLING, ATTRACTING])
def test_values_never_rise(cores, kind):
    f, (att, rep) = cores
    hyp = extract_hyperbolic((rep if kind == REPELLING else att)[0], kind, f, 0.0)
    for v in hyp.values:
        assert np.all(np.diff(v) <= RISE_RTOL * v[0])


def test_degenerate_core():
    f = analytic_flow("rigid_rotation")
    with pytest.raises(DegenerateCore):
        extract_hyperbolic((0.0, 0.0), REPELLING, f, 0.0)


def test_bad_kind(cores):
    f, (_, rep) = cores
    with pytest.raises(ValueError):
        extract_hyperbolic(rep[0], "sideways", f, 0.0)


def test_saddle_report_cellular():
    rep = saddle_comparison_report(analytic_flow("cellular"), 0.0)
    assert len(rep.saddles) == 1 and len(rep.stagnation) == 1
    assert not rep.unmatched_saddles and not rep.constant_strain
    assert {r["type"] for r in rep.rows()} == {"objective_saddle", "stagnation_point"}


def test_constant_strain_flagged(saddle):
    rep = saddle_comparison_report(saddle, 0.0)
    assert rep.constant_strain
    assert rep.saddles == [] and len(rep.stagnation) == 1
    assert rep.unmatched_stagnation == [0]


def test_translated_observer_loses_stagnation_point():
    # a uniformly translating observer moves the stagnation point but not the core
    f = analytic_flow("cellular", translate=(0.5, 0.0))
    rep = saddle_comparison_report(f, 0.0)
    att, rep_cores = find_eigenvalue_extrema(f, 0.0)
    assert np.allclose(rep_cores[0].position, 0, atol=1e-9)
    assert all(np.linalg.norm(q.position) > 0.05 for q in rep.stagnation)
