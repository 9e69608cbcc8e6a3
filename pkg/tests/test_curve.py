import math
from fractions import Fraction

import numpy as np
import pytest

from fatoubasin import curve as cv, jets, mapchain


def test_gamma3_and_exact_coefficients(curve):
    assert curve.exact[0] == Fraction(-1, 9)
    assert all(isinstance(c, Fraction) for c in curve.exact)
    assert np.allclose(curve.coeffs, [complex(c) for c in curve.exact], rtol=1e-15, atol=0)


def test_solver_matches_graph_transform_oracle(curve):
    oracle = cv.graph_transform_oracle(curve.order)
    assert tuple(oracle[:3]) == (0, 0, 0)
    assert tuple(oracle[3:]) == tuple(curve.exact)


def test_invariance_residual_vanishes_through_order(curve):
    m = mapchain.germ_of_chain(mapchain.default_chain(), curve.order + 1)
    res = cv.invariance_residual(m, [Fraction(0)] * 3 + list(curve.exact))
    assert all(r == 0 for r in res)


def test_closed_form_germ_equals_chain_germ():
    assert cv.closed_form_germ(6) == mapchain.germ_of_chain(mapchain.default_chain(), 6)


def test_residual_slope(curve):
    slope, radii, res = cv.residual_slope(curve)
    assert slope >= 8.5
    assert np.all(np.diff(np.log(res)) > 0)


def test_bounds_are_finite_and_hold(curve):
    assert math.isfinite(curve.C1) and math.isfinite(curve.C2) and curve.M > 0
    z = cv.sector_samples(curve.eps, 2000, seed=99)
    assert np.all(np.abs(curve(z)) <= curve.C1 * np.abs(z) ** 3 * (1 + 1e-3))


def test_eval_curve_rejects_outside_sector(curve):
    with pytest.raises(ValueError):
        cv.eval_curve(curve, 0.01 + 0j)
    g, dg, bound = cv.eval_curve(curve, -0.01 + 0j)
    exact = sum(float(c) * (-0.01) ** (k + 3) for k, c in enumerate(curve.exact))
    assert abs(g - exact) < 1e-20 and 0 < bound < 1e-15


def test_json_roundtrip(curve):
    back = cv.CurveSeries.from_json(curve.to_json())
    assert back.exact == curve.exact
    assert back.coeffs == curve.coeffs
    assert back.order == curve.order


def test_resonant_pivot_raises():
    # the identity germ has no z**2 term, so every pivot vanishes
    with pytest.raises(jets.JetError):
        cv.solve_curve(jets.MapJet.identity(9), 8)


def test_curve_fatou_translation():
    cf = cv.default_curve_fatou()
    z = -0.004 + 0.0003j
    assert abs(cf(cf.f(z)) - (cf(z) + 1)) < 1e-8
    with pytest.raises(ValueError):
        cv.curve_fatou(0.01 + 0j)


def test_phi_on_gamma_shift(curve):
    fm = mapchain.default_map()
    for z in (-0.01 + 0j, -0.02 + 0.004j):
        p = (z, complex(curve(z)))
        assert abs(cv.phi_on_gamma(fm.forward(*p)) - cv.phi_on_gamma(p) - 1) < 1e-6


def test_residual_at_reference_radius(curve):
    assert cv.residual_mp(curve, -1e-2) < 10 * (1e-2) ** (curve.order + 1)


def test_curve_fatou_translation_on_half_sector(curve):
    cf = cv.default_curve_fatou()
    for z in cv.sector_samples(curve.eps / 2, 8, seed=12):
        assert abs(cf(cf.f(z)) - cf(z) - 1) < 1e-6
