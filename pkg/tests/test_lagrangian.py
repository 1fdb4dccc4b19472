import numpy as np
import pytest

from oecs import analytic_flow
from oecs.errors import LeftDomain, SingularGradient
from oecs.kinematics import FrameChange, TransformedField
from oecs.lagrangian import (MaterialBlob, advect, blob_deformation_metric, cauchy_green,
                             finite_time_measures, polygon_moments, taylor_order_check)

E = np.e


def test_saddle_flow_map(saddle):
    res = advect([1.0, 1.0], saddle, 0.0, 1.0, gradient=True)
    assert np.allclose(res.positions, (E, 1 / E), atol=1e-6)
    assert np.allclose(res.gradient, np.diag((E, 1 / E)), atol=1e-4)
    C = cauchy_green(res.gradient).matrix
    assert np.allclose(C, np.diag((E * E, E ** -2)), atol=1e-3)


def test_rotation_flow_map(rotation):
    res = advect([1.0, 0.0], rotation, 0.0, np.pi / 2, gradient=True)
    assert np.allclose(res.positions, (0, 1), atol=1e-6)
    assert np.allclose(cauchy_green(res.gradient).matrix, np.eye(2), atol=1e-6)


def test_backward_advection_inverts(cellular):
    x0 = np.array([[0.4, 0.2], [-1.0, 0.7]])
    fwd = advect(x0, cellular, 0.0, 0.8)
    back = advect(fwd.positions, cellular, 0.8, 0.0)
    assert np.allclose(back.positions, x0, atol=1e-9)


def test_simple_shear_cauchy_green():
    f = analytic_flow("simple_shear")
    for t in (0.5, 1.0, 2.0):
        res = advect([0.1, 0.2], f, 0.0, t, gradient=True)
        assert np.allclose(cauchy_green(res.gradient).matrix, [[1, t], [t, 1 + t * t]],
                           atol=1e-6)


def test_incompressible_determinant(cellular, rng):
    res = advect(rng.uniform(-2, 2, (30, 2)), cellular, 0.0, 1.0, gradient=True)
    assert np.abs(np.linalg.det(res.gradient) - 1).max() < 1e-4
    C = cauchy_green(res.gradient).matrix
    assert np.all(np.linalg.eigvalsh(C) > 0)


def test_singular_gradient():
    with pytest.raises(SingularGradient):
        cauchy_green(np.zeros((2, 2)))


def test_leaves_gridded_domain(saddle):
    from oecs.grid_field import GriddedField
    g = GriddedField.from_function(saddle.velocity, saddle.x_axis, saddle.y_axis)
    with pytest.raises(LeftDomain) as info:
        advect([1.5, 0.1], g, 0.0, 2.0)
    assert 0 < info.value.exit_time < 2.0
    # closed-form fields are not bounded by default
    assert advect([1.5, 0.1], saddle, 0.0, 2.0).positions[0] > 2.0


def test_bad_step(saddle):
    with pytest.raises(ValueError):
        advect([0.0, 0.0], saddle, 0.0, 1.0, dt=-0.1)


@pytest.mark.parametrize("name, x0", [("steady_saddle", (1.0, 1.0)),
                                      ("cellular", (np.pi / 4, np.pi / 4))])
def test_taylor_slope(name, x0):
    res = taylor_order_check(analytic_flow(name), x0, 0.0, [0.1, 0.05, 0.025, 0.0125])
    assert 1.9 <= res.slope <= 2.1 and not res.exact


def test_taylor_exact_for_rotation(rotation):
    res = taylor_order_check(rotation, (0.5, 0.2), 0.0, [0.1, 0.05, 0.025, 0.0125])
    assert res.exact and np.isnan(res.slope)


def test_taylor_span_check(saddle):
    with pytest.raises(ValueError):
        taylor_order_check(saddle, (1, 1), 0.0, [0.1, 0.05])


def test_measures_saddle_axis(saddle):
    P = np.column_stack([np.linspace(0.2, 1.0, 9), np.zeros(9)])
    p, q = finite_time_measures(P, saddle, 0.0, 1.0)
    assert np.allclose(q, E, atol=1e-4) and np.allclose(p, 0, atol=1e-6)


def test_measures_rotation(rotation, rng):
    P = rng.uniform(-1, 1, (12, 2))
    p, q = finite_time_measures(P, rotation, 0.0, 1.3)
    assert np.allclose(q, 1, atol=1e-6) and np.allclose(p, 0, atol=1e-6)


def test_measures_objective(cellular):
    frame = FrameChange.uniform(0.3, 0.8, (0.2, -0.1), (0.4, 0.3))
    tf = TransformedField(cellular, frame, t_ref=0.0)
    s = np.linspace(0, 1, 15)
    P = np.column_stack([0.3 + 0.5 * s, 0.2 + 0.3 * s ** 2])
    X = np.gradient(P, axis=0)
    p, q = finite_time_measures(P, cellular, 0.0, 0.5, tangents=X)
    Q = frame.Q(0.0)
    p2, q2 = finite_time_measures(frame.to_new(P, 0.0), tf, 0.0, 0.5, tangents=X @ Q)
    assert np.allclose(p, p2, atol=1e-5) and np.allclose(q, q2, atol=1e-5)


def test_polygon_moments_of_rectangle():
    A, c, M = polygon_moments(np.array([[0, 0], [4, 0], [4, 2], [0, 2]], float))
    assert A == pytest.approx(8)
    assert np.allclose(c, (2, 1))
    assert np.allclose(M, np.diag((16 / 12, 4 / 12)))


def test_blob_under_rotation(rotation):
    m = blob_deformation_metric(MaterialBlob((0.5, 0.0), 0.2), rotation, 0.0, 1.0)
    assert m.area_ratio == pytest.approx(1, abs=1e-6)
    assert m.perimeter_ratio == pytest.approx(1, abs=1e-6)
    assert m.max_aspect == pytest.approx(m.initial_aspect, abs=1e-6)
    assert m.initial_aspect == pytest.approx(1, abs=1e-3)


def test_blob_under_saddle(saddle):
    m = blob_deformation_metric(MaterialBlob((0.0, 0.0), 0.1), saddle, 0.0, 1.0)
    assert m.area_ratio == pytest.approx(1, abs=1e-6)
    assert m.perimeter_ratio > 1.5
    assert m.max_aspect == pytest.approx(E * E, rel=1e-3)
