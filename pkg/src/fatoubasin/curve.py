"""Parabolic curve ``w = gamma(z)`` along the direction (1, 0) and the
one-dimensional Fatou coordinate of ``F`` restricted to it.

``gamma`` is found as a formal power series from the invariance identity
``gamma(F1(z, gamma(z))) = F2(z, gamma(z))``, one coefficient per order.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import jets, mapchain
from .jets import Jet2, MapJet, JetError

SECTOR = math.pi / 8


@dataclass(frozen=True)
class CurveSeries:
    """``gamma(z) = sum_{k >= 3} coeffs[k - 3] z**k`` truncated at degree ``order``.

    ``M`` bounds the truncation error by ``M |z|**(order + 1)`` on the sector
    of radius ``eps``; ``C1`` and ``C2`` are measured sup-ratios
    ``|gamma| / |z|**3`` and ``|gamma'| / |z|**2`` over sector samples.
    """

    coeffs: tuple
    order: int
    exact: tuple = ()
    M: float = 0.0
    C1: float = math.nan
    C2: float = math.nan
    eps: float = 0.05

    @property
    def full(self) -> np.ndarray:
        """Ascending coefficients ``[gamma_0, ..., gamma_N]`` (the first three vanish)."""
        out = np.zeros(self.order + 1, dtype=np.complex128)
        out[3:] = self.coeffs
        return out

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.full)

    def gamma_array(self, zs):
        return self(np.asarray(zs, dtype=np.complex128))

    def derivative(self, z):
        full = self.full
        return np.polynomial.polynomial.polyval(z, full[1:] * np.arange(1, len(full)))

    def with_bounds(self, **kw) -> "CurveSeries":
        data = dict(coeffs=self.coeffs, order=self.order, exact=self.exact, M=self.M,
                    C1=self.C1, C2=self.C2, eps=self.eps)
        data.update(kw)
        return CurveSeries(**data)

    def to_json(self) -> str:
        rows = [[k + 3, c.real, c.imag] for k, c in enumerate(self.coeffs)]
        out = {"order": self.order, "coeffs": rows, "C1": self.C1, "C2": self.C2, "M": self.M,
               "eps": self.eps}
        if self.exact:
            out["exact"] = [[k + 3, f"{c.numerator}/{c.denominator}"]
                            for k, c in enumerate(self.exact)]
        return json.dumps(out, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CurveSeries":
        d = json.loads(text)
        coeffs = tuple(complex(re, im) for _, re, im in sorted(d["coeffs"]))
        exact = tuple(Fraction(v) for _, v in sorted(d.get("exact", [])))
        return cls(coeffs, d["order"], exact, d.get("M", 0.0), d.get("C1", math.nan),
                   d.get("C2", math.nan), d.get("eps", 0.05))


# ---------------------------------------------------------------------------
# solving


def _univariate(jet: Jet2, n: int) -> list:
    """Coefficients of ``z**0 .. z**n`` of a jet that only depends on ``z``."""
    return [jet.coeff(i, 0) for i in range(n + 1)]


def invariance_residual(m: MapJet, gamma: Sequence) -> list:
    """Coefficients of ``F2(z, g(z)) - g(F1(z, g(z)))`` for the polynomial ``g``."""
    N = m.order
    zj = Jet2.var_z(N, m.mode)
    gj = Jet2(N, {(k, 0): c for k, c in enumerate(gamma) if k <= N}, m.mode)
    f1 = m.first.substitute(zj, gj)
    f2 = m.second.substitute(zj, gj)
    lhs = jets.univariate_compose(list(gamma), f1)
    return _univariate(f2 - lhs, N)


def solve_curve(m: Optional[MapJet] = None, N: int = jets.DEFAULT_ORDER) -> CurveSeries:
    """Solve the invariance identity order by order up to ``gamma_N``.

    The jet must have order at least ``N + 1``: ``gamma_k`` is fixed by the
    ``z**(k + 1)`` coefficient, where it enters linearly with pivot
    ``k * p20 - q11``.  A vanishing pivot signals a resonance and raises.
    """
    if m is None:
        m = mapchain.germ_of_chain(mapchain.default_chain(), N + 1)
    if N < 3:
        raise ValueError("curve order must be at least 3")
    if m.order < N + 1:
        raise JetError(f"jet of order {m.order} cannot determine gamma_{N}; need {N + 1}")
    mode = m.mode
    zero = Fraction(0) if mode == jets.RATIONAL else 0j
    if m.second.coeff(2, 0) != 0 or m.first.coeff(2, 0) == 0:
        raise JetError("(1, 0) is not a non-degenerate characteristic direction of this jet")
    gamma = [zero] * (N + 1)
    for k in range(2, N + 1):
        r0 = invariance_residual(m, gamma)[k + 1]
        trial = list(gamma)
        trial[k] = zero + 1
        pivot = invariance_residual(m, trial)[k + 1] - r0
        if pivot == 0:
            raise JetError(f"resonant pivot at order {k}")
        gamma[k] = -r0 / pivot
        if k == 2 and gamma[2] != 0:
            raise JetError("curve with a quadratic term is not supported")
    exact = tuple(gamma[3:]) if mode == jets.RATIONAL else ()
    coeffs = tuple(complex(c) for c in gamma[3:])
    return _attach_bounds(CurveSeries(coeffs, N, exact))


def closed_form_germ(N: int) -> MapJet:
    """Jet of ``F`` built directly from the nested-exponential formulas."""
    z = Jet2.var_z(N)
    w = Jet2.var_w(N)
    e = jets.jet_exp(w * 2 + z)
    a = jets.jet_exp(z * e)
    b = jets.jet_exp(z * e * 2)
    c = jets.jet_exp(z * e * 3)
    half = Fraction(1, 2)
    f1 = z * a
    f2 = (w + z * half - z * e * half + z * z * b * half - z * z * z * c * Fraction(3, 4)) \
        * jets.jet_exp(z * a + z * z * b * half)
    return MapJet(f1, f2)


def graph_transform_oracle(N: int = jets.DEFAULT_ORDER, m: Optional[MapJet] = None,
                           max_sweeps: int = 64) -> list:
    """Independent curve coefficients by fixed-point sweeps over the full jet.

    Every sweep corrects all coefficients at once,
    ``gamma_k <- gamma_k + res_{k+1}(gamma) / k``, until the residual vanishes
    through order ``N + 1``.  Uses the closed-form germ by default.
    """
    m = m or closed_form_germ(N + 1)
    gamma = [Fraction(0)] * (N + 1)
    p20 = m.first.coeff(2, 0)
    q11 = m.second.coeff(1, 1)
    for _ in range(max_sweeps):
        res = invariance_residual(m, gamma)
        if all(res[k + 1] == 0 for k in range(2, N + 1)):
            return gamma
        gamma = [gamma[k] + (res[k + 1] / (k * p20 - q11) if k >= 2 else 0)
                 for k in range(N + 1)]
    raise JetError("graph-transform sweeps did not settle")


def _attach_bounds(c: CurveSeries, n_samples: int = 1000, seed: int = 0) -> CurveSeries:
    mags = [abs(x) for x in c.coeffs]
    ks = [k + 3 for k, a in enumerate(mags) if a > 0]
    if ks:
        q = max(abs(c.coeffs[k - 3]) ** (1.0 / k) for k in ks)
        A = max(abs(c.coeffs[k - 3]) / q ** k for k in ks)
        M = A * q ** (c.order + 1) / max(1e-12, 1 - q * c.eps)
    else:
        M = 0.0
    z = sector_samples(c.eps, n_samples, seed)
    C1 = float(np.max(np.abs(c(z)) / np.abs(z) ** 3))
    C2 = float(np.max(np.abs(c.derivative(z)) / np.abs(z) ** 2))
    return c.with_bounds(M=float(M), C1=C1, C2=C2)


def sector_samples(eps: float, n: int, seed: int = 0, rmin: float = 0.0) -> np.ndarray:
    """Random points of the open sector ``rmin < |z| < eps``, ``|arg(-z)| < pi/8``."""
    rng = np.random.default_rng(seed)
    r = rng.uniform(max(rmin, eps * 1e-4), eps, n) * (1 - 1e-12)
    th = rng.uniform(-SECTOR, SECTOR, n) * (1 - 1e-9)
    return -r * np.exp(1j * th)


# ---------------------------------------------------------------------------
# evaluation


def eval_curve(c: CurveSeries, z: complex, check: bool = True):
    """Return ``(gamma(z), gamma'(z), truncation bound M |z|**(N+1))``."""
    if check and not (0 < abs(z) < c.eps and abs(cmath.phase(-z)) < SECTOR):
        raise ValueError("z lies outside the sector")
    return complex(c(z)), complex(c.derivative(z)), c.M * abs(z) ** (c.order + 1)


def residual_mp(c: CurveSeries, z, dps: int = 80):
    """``|F2(z, gamma) - gamma(F1(z, gamma))|`` in high precision."""
    import mpmath
    with mpmath.workdps(dps):
        coeffs = [mpmath.mpf(x.numerator) / x.denominator for x in c.exact] if c.exact \
            else [mpmath.mpc(x) for x in c.coeffs]
        zz = mpmath.mpc(z)
        g = sum(a * zz ** (k + 3) for k, a in enumerate(coeffs))
        f1, f2 = mapchain.closed_form(zz, g, mpmath.exp)
        g1 = sum(a * f1 ** (k + 3) for k, a in enumerate(coeffs))
        return float(abs(f2 - g1))


def residual_slope(c: CurveSeries, radii=None, angle: float = 0.0):
    """Least-squares slope of ``log |residual|`` against ``log |z|``."""
    if radii is None:
        radii = np.logspace(-4, -2, 9)
    zs = [-r * cmath.exp(1j * angle) for r in radii]
    res = np.array([residual_mp(c, z) for z in zs])
    slope = np.polyfit(np.log(radii), np.log(res), 1)[0]
    return float(slope), np.asarray(radii), res


# ---------------------------------------------------------------------------
# one-dimensional Fatou coordinate on the curve


@dataclass(frozen=True)
class CurveFatou:
    """Fatou coordinate of ``f(z) = F1(z, gamma(z))`` in ``tau = -1/z``.

    ``zeta(tau) = tau - b log tau + sum_j a_j tau**-j`` solves
    ``zeta(T(tau)) = zeta(tau) + 1`` formally; the value at ``z`` is the
    limit ``zeta(tau_n) - n`` along the orbit.
    """

    curve: CurveSeries
    f_coeffs: tuple
    b: Fraction
    a: tuple
    tau_min: float = 400.0

    def f(self, z):
        g = complex(self.curve(z))
        return mapchain.closed_form(z, g)[0]

    def series(self, tau):
        s = 1 / tau
        acc = 0j
        for aj in reversed(self.a):
            acc = (acc + complex(aj)) * s
        return tau - float(self.b) * cmath.log(tau) + acc

    def __call__(self, z, tol: float = 1e-10, max_iter: int = 10 ** 6):
        tau = -1 / complex(z)
        zc = complex(z)
        n = 0
        bound = self._tail(tau)
        while bound > tol or abs(tau) < self.tau_min:
            if n >= max_iter:
                raise RuntimeError("curve Fatou coordinate did not converge")
            zc = self.f(zc)
            tau = -1 / zc
            n += 1
            bound = self._tail(tau)
        return self.series(tau) - n

    def _tail(self, tau):
        """Size of the first omitted correction term."""
        scale = max([abs(complex(x)) for x in self.a] + [1.0])
        return scale * abs(tau) ** (-(len(self.a) + 1))


def _series_mul(a, b, n):
    out = [Fraction(0)] * (n + 1)
    for i, x in enumerate(a[: n + 1]):
        if x == 0:
            continue
        for j, y in enumerate(b[: n + 1 - i]):
            out[i + j] += x * y
    return out


def _series_inv(a, n):
    out = [Fraction(0)] * (n + 1)
    out[0] = 1 / a[0]
    for k in range(1, n + 1):
        acc = sum(a[j] * out[k - j] for j in range(1, min(k, len(a) - 1) + 1))
        out[k] = -acc / a[0]
    return out


def _series_log1p(a, n):
    """``log(a)`` for ``a[0] == 1`` via ``(log a)' = a' / a``."""
    inv = _series_inv(a, n)
    da = [k * a[k] for k in range(1, min(len(a), n + 1))]
    q = _series_mul(da, inv, n)
    return [Fraction(0)] + [q[k - 1] / k for k in range(1, n + 1)]


def curve_fatou_machine(curve: Optional[CurveSeries] = None, J: int = 5) -> CurveFatou:
    """Build the formal Fatou coordinate for the on-curve map.

    Needs the curve's exact coefficients.  ``J`` correction terms are solved
    (the on-curve jet has order ``J + 3``).
    """
    curve = curve or solve_curve()
    if not curve.exact:
        raise ValueError("curve Fatou coordinate needs exact curve coefficients")
    n = J + 3
    m = mapchain.germ_of_chain(mapchain.default_chain(), max(n, curve.order + 1))
    zj = Jet2.var_z(m.order)
    gj = Jet2(m.order, {(k + 3, 0): c for k, c in enumerate(curve.exact)})
    f = _univariate(m.first.substitute(zj, gj), n)
    if f[0] != 0 or f[1] != 1 or f[2] == 0:
        raise JetError("on-curve map is not z + a z^2 + ...")
    # normalize the quadratic coefficient to 1 (true for this map)
    if f[2] != 1:
        raise JetError("on-curve quadratic coefficient must equal 1")
    c3 = f[3]
    b = 1 - c3
    # Q(s) = f(-s) / (-s); P = T / tau = 1 / Q
    Q = [f[k + 1] * (-1) ** k for k in range(n)]
    P = _series_inv(Q, n - 1)
    if P[1] != 1 or P[2] != b:
        raise JetError("unexpected on-curve expansion")
    logP = _series_log1p(P, n - 1)
    a: list = []
    for j in range(1, J + 1):
        # delta(s) = (P - 1 - s)/s - b log P + sum a_i ((P)^-i - 1) s^i
        delta = [Fraction(0)] * (n - 1)
        for k in range(n - 1):
            delta[k] += P[k + 1] - (1 if k == 0 else 0)
        for k in range(n - 1):
            delta[k] -= b * logP[k]
        Pinv = _series_inv(P, n - 1)
        powk = [Fraction(1)] + [Fraction(0)] * (n - 1)
        for i, ai in enumerate(a + [Fraction(0)], start=1):
            powk = _series_mul(powk, Pinv, n - 1)
            term = list(powk)
            term[0] -= 1
            for k in range(n - 1 - i):
                delta[k + i] += ai * term[k]
        # a_j enters the s^(j+1) coefficient with weight -j
        a.append(delta[j + 1] / j if j + 1 < len(delta) else Fraction(0))
    return CurveFatou(curve, tuple(f), b, tuple(a))


def curve_fatou(z: complex, tol: float = 1e-10, machine: Optional[CurveFatou] = None) -> complex:
    """Fatou coordinate of the on-curve dynamics at ``z`` in the sector."""
    machine = machine or default_curve_fatou()
    if not (0 < abs(z) < machine.curve.eps and abs(cmath.phase(-z)) < SECTOR):
        raise ValueError("z lies outside the sector")
    return machine(z, tol)


def phi_on_gamma(p, tol: float = 1e-12, machine: Optional[CurveFatou] = None,
                 budget: int = 10 ** 5, N: Optional[int] = None, fmap=None) -> complex:
    """``Phi(p) = zeta(pi_1 F^N(p)) - N`` for the first ``N`` landing near the curve.

    Passing ``N`` overrides the landing index (it must itself be admissible).
    """
    machine = machine or default_curve_fatou()
    fmap = fmap or mapchain.default_map()
    eps = machine.curve.eps
    z, w = complex(p[0]), complex(p[1])

    def near(z, w):
        return (0 < abs(z) < eps and abs(cmath.phase(-z)) < SECTOR
                and abs(w - complex(machine.curve(z))) < tol)

    k = 0
    target = N if N is not None else budget
    while True:
        if N is None and near(z, w):
            break
        if k == target:
            if N is not None and near(z, w):
                break
            raise ValueError("orbit does not land near the curve within the budget")
        z, w = fmap.forward(z, w)
        k += 1
    return machine(z) - k


_DEFAULT: dict = {}


def default_curve() -> CurveSeries:
    if "curve" not in _DEFAULT:
        _DEFAULT["curve"] = solve_curve()
    return _DEFAULT["curve"]


def default_curve_fatou() -> CurveFatou:
    if "cf" not in _DEFAULT:
        _DEFAULT["cf"] = curve_fatou_machine(default_curve())
    return _DEFAULT["cf"]
