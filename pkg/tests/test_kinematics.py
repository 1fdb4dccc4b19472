import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oecs import analytic_flow
from oecs.errors import Degenerate, ZeroTangent
from oecs.kinematics import (R, FrameChange, TransformedField, curve_average_rates,
                             eigen_fields, find_stagnation_points, okubo_weiss, rotation,
                             shear_rate, strain_and_spin, strain_eigen, stretch_rate,
                             transform_velocity, vorticity)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("J, S, w12", [
    ([[0, -1], [1, 0]], [[0, 0], [0, 0]], -1.0),
    ([[1, 0], [0, -1]], [[1, 0], [0, -1]], 0.0),
    ([[0, 2], [0, 0]], [[0, 1], [1, 0]], 1.0),
])
def test_strain_spin_split(J, S, w12):
    S_, W = strain_and_spin(np.array(J, float))
    assert np.allclose(S_, S)
    assert W[0, 1] == pytest.approx(w12)


def test_vorticity_sign():
    assert vorticity(np.array([[0.0, -1.0], [1.0, 0.0]])) == pytest.approx(2.0)


def test_eigen_diagonal():
    d = strain_eigen(np.diag([1.0, -1.0]))
    assert (d.s1, d.s2) == (-1.0, 1.0)
    assert np.allclose(d.e1, (0, 1)) and np.allclose(d.e2, (-1, 0))


def test_eigen_shear_axes():
    d = strain_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert d.s1 == pytest.approx(-1) and d.s2 == pytest.approx(1)
    assert np.allclose(d.e1, np.array([1, -1]) / np.sqrt(2))


def test_eigen_degenerate():
    with pytest.raises(Degenerate):
        strain_eigen(np.zeros((2, 2)))
    assert eigen_fields(np.eye(2) * 3.0).degenerate


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite)
def test_eigen_convention_properties(a, b, d):
    S = np.array([[a, b], [b, d]])
    eig = eigen_fields(S)
    if eig.degenerate:
        return
    assert eig.s1 <= eig.s2
    assert np.allclose(eig.e2, R @ eig.e1, atol=1e-12)
    assert np.linalg.norm(eig.e1) == pytest.approx(1, abs=1e-12)
    first = eig.e1[np.nonzero(eig.e1)[0][0]]
    assert first > 0
    scale = max(1.0, abs(eig.s1), abs(eig.s2))
    assert np.allclose(S @ eig.e1, eig.s1 * eig.e1, atol=1e-10 * scale)
    assert np.allclose(S @ eig.e2, eig.s2 * eig.e2, atol=1e-10 * scale)
    # pointwise rate identities along the eigenvectors
    assert stretch_rate(eig.e1, S) == pytest.approx(eig.s1, abs=1e-10 * scale)
    assert shear_rate(eig.e2, S) == pytest.approx(0, abs=1e-10 * scale)


def test_stretch_and_shear_examples():
    S = np.diag([-1.0, 1.0])
    x = np.array([1.0, 1.0]) / np.sqrt(2)
    assert stretch_rate(x, S) == pytest.approx(0.0, abs=1e-15)
    # <x, (S R - R S) x> = 2 (s2 - s1) x1 x2 for this S
    assert shear_rate(x, S) == pytest.approx(2.0)
    with pytest.raises(ZeroTangent):
        stretch_rate(np.zeros(2), S)


def test_okubo_weiss_examples():
    cases = [([[0, -1], [1, 0]], -4.0), ([[1, 0], [0, -1]], 1.0), ([[0, 2], [0, 0]], -3.0)]
    for J, expected in cases:
        J = np.array(J, float)
        S, _ = strain_and_spin(J)
        assert okubo_weiss(S, vorticity(J)) == pytest.approx(expected)


def test_curve_average_rates():
    phi = np.linspace(0, 2 * np.pi, 721)
    circle = np.column_stack([np.cos(phi), np.sin(phi)])
    assert np.allclose(curve_average_rates(circle, analytic_flow("rigid_rotation"), 0), 0)
    seg = np.column_stack([np.linspace(-1, 1, 50), np.zeros(50)])
    q, p = curve_average_rates(seg, analytic_flow("steady_saddle"), 0)
    assert q == pytest.approx(1.0) and p == pytest.approx(0.0, abs=1e-14)
    vortex = analytic_flow("axisymmetric_vortex", profile="power", exponent=2.0)
    q, _ = curve_average_rates(circle, vortex, 0)
    assert q == pytest.approx(0.0, abs=1e-12)


def test_identity_frame_leaves_field_unchanged(cellular):
    tf = transform_velocity(cellular, FrameChange.identity())
    x, y = np.array([0.3, -1.2]), np.array([0.7, 2.0])
    assert np.allclose(np.stack(tf.velocity(x, y, 0.4)), np.stack(cellular.velocity(x, y, 0.4)))
    assert np.allclose(tf.gradient(x, y, 0.4), cellular.gradient(x, y, 0.4))


def test_translation_of_saddle(saddle):
    c = np.array([0.4, -0.3])
    tf = transform_velocity(saddle, FrameChange.uniform(velocity=c))
    xt, t = np.array([0.2, 0.5]), 1.5
    u, v = tf.velocity(xt[0], xt[1], t)
    assert np.allclose((u, v), (xt[0] + c[0] * t - c[0], -xt[1] - c[1] * t - c[1]))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
       st.floats(0, 2), st.floats(-1, 1), st.floats(-1, 1))
def test_strain_objective_spin_not(theta0, omega, cx, cy, t, x, y):
    base = analytic_flow("cellular")
    frame = FrameChange.uniform(theta0, omega, (0.1, -0.2), (cx, cy))
    tf = TransformedField(base, frame)
    xo = frame.to_old(np.array([x, y]), t)
    J_old = base.gradient(xo[0], xo[1], t)
    J_new = tf.gradient(x, y, t)
    S_old, W_old = strain_and_spin(J_old)
    S_new, W_new = strain_and_spin(J_new)
    e_old, e_new = eigen_fields(S_old), eigen_fields(S_new)
    assert e_new.s1 == pytest.approx(e_old.s1, abs=1e-6)
    assert e_new.s2 == pytest.approx(e_old.s2, abs=1e-6)
    Q, Qd = frame.Q(t), frame.Q_dot(t)
    assert np.allclose(W_new, Q.T @ W_old @ Q - Q.T @ Qd, atol=1e-6)
    if not e_old.degenerate:
        assert abs(abs(e_new.e2 @ (Q.T @ e_old.e2)) - 1) < 1e-6


def test_stagnation_points():
    s = find_stagnation_points(analytic_flow("steady_saddle"), 0)
    assert len(s) == 1 and s[0].kind == "saddle" and np.allclose(s[0].position, 0, atol=1e-10)
    r = find_stagnation_points(analytic_flow("rigid_rotation"), 0)
    assert len(r) == 1 and r[0].kind == "center"


def test_stagnation_point_moves_with_observer(saddle):
    # v - c = 0 at x = (c1, -c2): the frame sees a different stagnation point
    c = np.array([0.5, 0.25])
    tf = transform_velocity(saddle, FrameChange.uniform(velocity=c))
    pts = find_stagnation_points(tf, 0.0)
    assert len(pts) == 1
    assert np.allclose(pts[0].position, (c[0], -c[1]), atol=1e-9)


def test_rotation_matrix():
    assert np.allclose(rotation(np.pi / 2), R)
