import numpy as np
import pytest

from oecs import analytic_flow
from oecs.elliptic import (PoincareSection, build_section, default_mu_range, find_limit_cycles,
                           polygon_area, return_displacement, rotated_field_witness, sweep_mu)
from oecs.errors import Degenerate, SectionBlocked
from oecs.singularity import Singularity, WEDGE, find_singularities, pair_wedges
from oecs.tensorline import verify_rates_along


@pytest.fixture(scope="module")
def vortex_family():
    f = analytic_flow("perturbed_vortex")
    sing = find_singularities(f, 0.0)
    pair = pair_wedges(sing, 2.0)[0]
    sec = build_section(pair, 2.0, 40, sing)
    fam = sweep_mu(sec, default_mu_range(f, 0.0), 21, f, 0.0, singularities=sing)
    return f, sing, fam


def test_polygon_area():
    assert polygon_area([[0, 0], [2, 0], [2, 1], [0, 1]]) == pytest.approx(2.0)


def test_witness_matches_difference(cellular, rng):
    for x in rng.uniform(-2.5, 2.5, (20, 2)):
        from oecs.kinematics import eigen_fields, strain_at
        eig = eigen_fields(strain_at(cellular, x[0], x[1], 0.0))
        if eig.degenerate:
            continue
        mu = eig.s1 + rng.uniform(0.2, 0.8) * (eig.s2 - eig.s1)
        for sign in (1, -1):
            o, fd = rotated_field_witness(x, 0.0, mu, sign, cellular, return_check=True)
            assert np.sign(o) == sign
            assert abs(o - fd) <= 1e-4 * abs(o)


def test_witness_outside_band(cellular):
    with pytest.raises(Degenerate):
        rotated_field_witness((0.4, 0.3), 0.0, 10.0, 1, cellular)


def test_section_blocked():
    pair = pair_wedges([Singularity(np.array([-0.5, 0.0]), WEDGE, 1.0),
                        Singularity(np.array([0.5, 0.0]), WEDGE, 1.0)], 2.0)[0]
    other = Singularity(np.array([0.0, 0.8]), WEDGE, 1.0)
    with pytest.raises(SectionBlocked):
        build_section(pair, 1.0, 20, [other])


def test_circle_continuum_is_degenerate():
    f = analytic_flow("axisymmetric_vortex", profile="power", exponent=2.0)
    c = np.linspace(0.3, 1.5, 10)
    sec = PoincareSection(np.zeros(2), np.array([1.0, 0.0]), 1.5, np.column_stack([c, 0 * c]))
    res = find_limit_cycles(sec, 0.0, -1, f, 0.0, min_enclosed=0)
    assert res.degenerate and len(res) == 0
    assert abs(return_displacement((1.0, 0.0), 0.0, -1, f, 0.0)) < 1e-8


def test_family_cycles_keep_rate(vortex_family):
    f, sing, fam = vortex_family
    assert len(fam.cycles) >= 5
    for c in fam.cycles:
        assert len(c.enclosed_singularities) >= 2
        assert verify_rates_along(c.trajectory, f, 0.0) <= 1e-6


def test_family_nested(vortex_family):
    from matplotlib.path import Path
    _, _, fam = vortex_family
    assert fam.boundary_cycle.area == max(c.area for c in fam.cycles)
    cyc = sorted(fam.cycles, key=lambda c: c.area)
    for k, inner in enumerate(cyc):
        for outer in cyc[k + 1:]:
            assert not Path(inner.cycle).intersects_path(Path(outer.cycle), filled=False)
            assert Path(outer.cycle).contains_points(inner.cycle).all()
