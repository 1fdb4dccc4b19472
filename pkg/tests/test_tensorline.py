import numpy as np
import pytest

from oecs import analytic_flow
from oecs.errors import ImmediateDegeneracy, OutOfDomain, OutsideUmu
from oecs.kinematics import eigen_fields, strain_at
from oecs.tensorline import (CHI, E1, E2, DirectionSpec, eval_chi, integrate_tensorline,
                             integrate_tensorlines, polyline_tangents, verify_rates_along)

DIAG = dict(S0=((-1, 0), (0, 1)), S1=((0, 0), (0, 0)), S2=((0, 0), (0, 0)))


def test_direction_spec_validation():
    with pytest.raises(ValueError):
        DirectionSpec("E3")
    with pytest.raises(ValueError):
        DirectionSpec(CHI, 0.0, 2)


def test_chi_endpoints(cellular):
    x = np.array([0.4, 0.3])
    eig = eigen_fields(strain_at(cellular, x[0], x[1], 0.0))
    for sign in (1, -1):
        assert np.allclose(eval_chi(x, 0.0, eig.s1, sign, cellular), eig.e1, atol=1e-12)
        c = eval_chi(x, 0.0, eig.s2, sign, cellular)
        assert abs(abs(c @ eig.e2) - 1) < 1e-12


def test_chi_equal_weights():
    f = analytic_flow("linear_strain", **DIAG)
    eig = eigen_fields(strain_at(f, 0.0, 0.0, 0.0))
    for sign in (1, -1):
        c = eval_chi((0.0, 0.0), 0.0, 0.0, sign, f)
        assert np.allclose(c, (eig.e1 + sign * eig.e2) / np.sqrt(2))


def test_chi_outside_band():
    f = analytic_flow("linear_strain", **DIAG)
    with pytest.raises(OutsideUmu):
        eval_chi((0.0, 0.0), 0.0, 1.5, 1, f)


def test_saddle_e2_line_runs_along_axis(saddle):
    tr = integrate_tensorline((1.0, 0.0), (1.0, 0.0), DirectionSpec(E2), saddle, 0.0)
    assert tr.stop_reason == "boundary"
    assert np.abs(tr.points[:, 1]).max() < 1e-14
    assert tr.points[-1, 0] == pytest.approx(2.0, abs=saddle.grid_step)


def test_chi_circle_closes():
    f = analytic_flow("axisymmetric_vortex", profile="power", exponent=2.0)
    tr = integrate_tensorline((1.0, 0.0), (0.0, 1.0), DirectionSpec(CHI, 0.0, -1), f, 0.0)
    assert tr.stop_reason == "closed"
    r = np.hypot(*tr.points.T)
    assert np.abs(r - 1).max() < 1e-3
    assert tr.length == pytest.approx(2 * np.pi, abs=0.05)
    assert verify_rates_along(tr, f, 0.0) < 1e-6
    assert verify_rates_along(tr, f, 0.0, tangents="polyline") < 1e-6


def test_seed_on_singularity():
    f = analytic_flow("linear_strain")
    with pytest.raises(ImmediateDegeneracy):
        integrate_tensorline((0.0, 0.0), (1.0, 0.0), DirectionSpec(E1), f, 0.0)


def test_seed_outside_domain(saddle):
    with pytest.raises(OutOfDomain):
        integrate_tensorline((5.0, 0.0), (1.0, 0.0), DirectionSpec(E1), saddle, 0.0)


def test_unit_speed_and_orientation(cellular, rng):
    seeds = rng.uniform(-2.5, 2.5, (20, 2))
    trs = integrate_tensorlines(seeds, np.tile((1.0, 0.0), (20, 1)), DirectionSpec(E1),
                                cellular, 0.0, max_length=3.0)
    for tr in trs:
        if tr is None:
            continue
        n = np.linalg.norm(tr.tangents, axis=1)
        assert np.allclose(n, 1, atol=1e-12)
        assert np.all(np.einsum("ij,ij->i", tr.tangents[1:], tr.tangents[:-1]) > 0)


def test_chi_line_keeps_stretch_rate(cellular):
    spec = DirectionSpec(CHI, 0.1, 1)
    tr = integrate_tensorline((0.6, 0.3), (1.0, 0.0), spec, cellular, 0.0, max_length=1.0)
    assert verify_rates_along(tr, cellular, 0.0) < 1e-6
    # finite-difference tangents carry the O(step^4) discretization error
    assert verify_rates_along(tr, cellular, 0.0, tangents="polyline") < 1e-5


def test_monotone_and_user_stops(saddle):
    def user(idx, old, new, tan, s):
        return new[:, 0] > 1.5

    tr = integrate_tensorline((1.0, 0.0), (1.0, 0.0), DirectionSpec(E2), saddle, 0.0, user=user)
    assert tr.stop_reason == "user" and tr.points[-1, 0] > 1.5

    def mono(idx, old, new, tan, s):
        return new[:, 0] > 1.5

    tr = integrate_tensorline((1.0, 0.0), (1.0, 0.0), DirectionSpec(E2), saddle, 0.0,
                              monotone=mono)
    assert tr.stop_reason == "monotonicity" and tr.points[-1, 0] <= 1.5


def test_polyline_tangents_on_circle():
    phi = np.sort(np.random.default_rng(3).uniform(0, 2 * np.pi, 400))
    P = np.column_stack([np.cos(phi), np.sin(phi)])
    T = polyline_tangents(P, closed=True)
    assert np.abs(np.abs(np.einsum("ij,ij->i", T, np.column_stack([-P[:, 1], P[:, 0]]))) - 1).max() < 1e-6


def test_trajectory_objective():
    from oecs.kinematics import FrameChange, TransformedField
    base = analytic_flow("cellular")
    frame = FrameChange.uniform(0.4, 0.9, (0.2, -0.1), (0.3, 0.6))
    t = 0.5
    tf = TransformedField(base, frame, t_ref=t)
    seed = np.array([0.7, -0.4])
    eig = eigen_fields(strain_at(base, seed[0], seed[1], t))
    a = integrate_tensorline(seed, eig.e1, DirectionSpec(E1), base, t, step=0.01,
                             max_length=1.5)
    seed_new = frame.to_new(seed, t)
    b = integrate_tensorline(seed_new, frame.Q(t).T @ eig.e1, DirectionSpec(E1), tf, t,
                             step=0.01, max_length=1.5)
    back = frame.to_old(b.points, t)
    d = np.linalg.norm(back[:, None] - a.points[None], axis=-1)
    assert max(d.min(axis=0).max(), d.min(axis=1).max()) < 1e-4
