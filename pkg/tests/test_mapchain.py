import cmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fatoubasin import jets, mapchain


def bidisk(n, radius, seed):
    rng = np.random.default_rng(seed)
    pick = lambda: radius * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    return pick(), pick()


def test_chain_matches_closed_form_near_origin():
    fm = mapchain.default_map()
    z, w = bidisk(500, 0.2, 1)
    for a, b in zip(z, w):
        c = mapchain.closed_form(a, b)
        d = fm.forward(a, b)
        assert abs(c[0] - d[0]) + abs(c[1] - d[1]) < 1e-14


def test_chain_has_ten_maps_and_inverse_reverses():
    ch = mapchain.default_chain()
    assert len(ch) == 10
    inv = ch.inverse()
    z, w = 0.1 - 0.05j, -0.07 + 0.02j
    a = ch.apply(z, w)
    b = inv.apply(*a)
    assert abs(b[0] - z) + abs(b[1] - w) < 1e-15


def test_elementary_inverse_is_exact_on_jets():
    for e in mapchain.default_chain().maps:
        m = e.inverse().apply_jet(e.apply_jet(jets.MapJet.identity(5)))
        assert m == jets.MapJet.identity(5)


def test_germ_rational_and_complex_agree():
    ch = mapchain.default_chain()
    a = mapchain.germ_of_chain(ch, 5, jets.RATIONAL)
    b = mapchain.germ_of_chain(ch, 5, jets.COMPLEX)
    for (i, j), v in a.second.coeffs.items():
        assert abs(complex(v) - b.second.coeff(i, j)) < 1e-12


def test_axis_is_fixed_pointwise():
    fm = mapchain.default_map()
    w = np.linspace(-10, 10, 41) + 3j
    z1, w1 = fm.forward_many(np.zeros_like(w), w, 1)
    assert np.all(z1 == 0)
    assert np.max(np.abs(w1 - w) / np.abs(w)) < 1e-14


def test_round_trip_escalation_is_decided_by_moduli_only():
    fm = mapchain.default_map()
    z, w = bidisk(2000, 1.0, 2)
    err, esc = fm.round_trip(z, w)
    assert err.max() < 1e-12
    _, _, m1 = mapchain.stage_moduli(fm.chain, z, w)
    assert np.all(esc[m1 >= mapchain.ESCALATE_MODULUS])
    assert np.all(err[~esc] < 1e-12)


def test_binary64_alone_fails_where_escalation_is_used():
    # documents why the switch exists: some unit-bidisk points lose all accuracy
    fm = mapchain.default_map()
    z, w = bidisk(2000, 1.0, 2)
    with np.errstate(all="ignore"):
        a, b = fm.forward_many(z, w, 1)
        c, d = fm.inverse_many(a, b, 1)
        raw = np.abs(c - z) + np.abs(d - w)
    assert not np.all(raw < 1e-12)


def test_newton_inverse_agrees_with_inverse_chain():
    fm = mapchain.default_map()
    p = (-0.01 + 0.002j, 0.03 - 0.01j)
    q1 = fm.inverse(*p)
    q2 = mapchain.newton_inverse(p, fm)
    assert abs(q1[0] - q2[0]) + abs(q1[1] - q2[1]) < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-4, 0.04), st.floats(-0.3, 0.3), st.integers(1, 200))
def test_orbit_matches_iteration(r, th, n):
    p = (-r * cmath.exp(1j * th), -0.5 * r)
    tr = mapchain.orbit(p, n)
    assert tr.length == n + 1 and not tr.truncated
    q = p
    fm = mapchain.default_map()
    for _ in range(n):
        q = fm.forward(*q)
    assert abs(tr.z[-1] - q[0]) + abs(tr.w[-1] - q[1]) < 1e-15


def test_orbit_truncates_on_overflow():
    tr = mapchain.orbit((3.0, 3.0), 50)
    assert tr.truncated
    assert np.all(np.isfinite(tr.z)) and np.all(np.isfinite(tr.w))


def test_orbit_csv_is_plain_reprs(curve):
    tr = mapchain.orbit((-1e-3, -1e-2), 3, curve)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "n,re_z,im_z,re_w,im_w,re_u,im_u"
    assert len(lines) == 5
    assert "np." not in tr.to_csv()
    assert float(lines[1].split(",")[1]) == -1e-3


def test_negative_orbit_length_rejected():
    with pytest.raises(ValueError):
        mapchain.orbit((0j, 0j), -1)
