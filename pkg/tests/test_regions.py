import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fatoubasin import regions
from fatoubasin.curve import default_curve
from fatoubasin.regions import CertificationError, RegionParams


def test_default_certification_margins(machine):
    rep = regions.certify_params(0.05, 100.0, machine=machine)
    assert rep.passed
    vals = {c.name: (round(c.lhs, 2), round(c.rhs, 2)) for c in rep.checks}
    assert vals["2R - 2log(2R) > R + 2log(R)"] == (189.40, 109.21)
    assert vals["2R sin(pi/8) > 4log(R)"] == (76.54, 18.42)


@pytest.mark.parametrize("eps,R", [(0.05, 10.0), (0.05, 19.0), (0.5, 1.5)])
def test_bad_parameters_rejected(eps, R):
    assert not regions.certify_params(eps, R, empirical=False).passed
    with pytest.raises(CertificationError):
        RegionParams(eps=eps, R=R)


def test_report_json():
    rep = regions.certify_params(0.05, 100.0, empirical=False)
    assert '"pass": true' in rep.to_json()


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 0.049), st.floats(-0.39, 0.39), st.floats(0.01, 0.99))
def test_nesting_D_inside_V(r, th, ratio):
    u = -r * np.exp(1j * th)
    z = -r * ratio * np.exp(1j * th / 2)
    curve = default_curve()
    p = (z, u + curve(z))
    assert regions.in_D(p)
    assert regions.in_V(z) and regions.in_V(u)
    x, y = 1 / z, 1 / u
    assert regions.in_D_xy(x, y)


def test_sector_edges_are_open():
    assert not regions.in_V(-0.05 + 0j)
    assert not regions.in_V(0j)
    assert not regions.in_V(-0.01 * np.exp(1j * math.pi / 8))
    assert regions.in_Tprime(-150 + 0j, 100, 200)
    assert not regions.in_Tprime(-150 * np.exp(0.2j), 100, 200)
    with pytest.raises(ValueError):
        regions.in_U(-1.0, 0.0)


def test_invariance_uniform_samples(machine):
    z, w = regions.sample_D(10 ** 4, machine.params, machine.curve, seed=3)
    assert len(z) == 10 ** 4
    z1, w1 = machine.fmap.forward_many(z, w, 1)
    assert np.all(regions.in_D((z1, w1), machine.params, machine.curve))


def test_invariance_near_edges_overshoots_only_the_angle(machine):
    # near the sector edge the image may leave D by a tiny angle; radii and |z| < |u| hold
    z, w = regions.sample_D(10 ** 4, machine.params, machine.curve, seed=1, boundary=0.5)
    z1, w1 = machine.fmap.forward_many(z, w, 1)
    u1 = w1 - machine.curve(z1)
    eps = machine.params.eps
    assert np.all(np.abs(z1) < np.abs(u1)) and np.all(np.abs(u1) < eps)
    over = np.maximum(np.abs(np.angle(-z1)), np.abs(np.angle(-u1))) - machine.params.aperture
    assert over.max() < 5e-4
    out = ~np.asarray(regions.in_D((z1, w1), machine.params, machine.curve))
    assert out.sum() <= 50


def test_entry_property(machine):
    # orbits of points delta-close to the boundary of D still enter D
    from fatoubasin import kernels
    from fatoubasin.analysis import classify_many
    rng = np.random.default_rng(41)
    z = regions.sample_V(300, machine.params.eps, rng, machine.params.aperture, rmin=1e-3)
    w = machine.curve(z) - np.abs(z) * (1 + 1e-3) * np.exp(1j * rng.uniform(-0.3, 0.3, 300))
    codes, entry = classify_many(z, w, 10 ** 5, machine)
    assert np.all((codes == kernels.CODE_BASIN_D) | (codes == kernels.CODE_BASIN_DPRIME))
    assert entry.max() < 10 ** 5
