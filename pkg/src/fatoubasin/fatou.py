"""Abel-Fatou coordinate of ``F`` on the basin of the degenerate direction.

Near the origin and away from the curve, the chart ``(x, y) = (1/z, 1/u)``
with ``u = w - gamma(z)`` puts ``F`` in the form

    x1 = x - 1 + g(1/y) + c/x + ...,     y1 = y + (1 + h(1/y))/x + ...

The coordinate is the limit of

    mu_n(x, y) = mu(x_n, y_n) + n,
    mu(x, y)   = x + r log x + s log y + x beta(1/y) + sum_i x**-i sigma_i(1/y)

where ``beta`` solves ``(1 + h) beta' - (1 - g) beta = -g`` (as a function of
``y``), ``r = c`` and ``s = -k``.  The correction series ``sigma_i`` vanish at
infinity, so they leave the limit unchanged; they cancel the increment
``mu(x1, y1) + 1 - mu(x, y)`` order by order in ``1/x`` and make the tail
of the limit decay like ``|x|**-(K + 1)``.

All series in ``1/y`` here are asymptotic, not convergent (their
coefficients grow factorially), and are summed to their smallest term.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import jets, mapchain, regions
from .curve import CurveSeries, default_curve
from .jets import JetError, MapJet, ZUSeries
from .regions import RegionParams

DEFAULT_U_ORDER = 36
DEFAULT_CORRECTIONS = 2


# ---------------------------------------------------------------------------
# exact expansion


def chain_expansion(chain: mapchain.MapChain, curve: CurveSeries, K: int, M: int):
    """``F(z, u + gamma(z))`` as a pair of :class:`ZUSeries`."""
    Z = ZUSeries.z(K, M)
    W = ZUSeries.u(K, M) + Z.compose_poly(_gamma_full(curve))
    for e in chain.maps:
        other = Z if e.axis == mapchain.SECOND else W
        if e.kind == mapchain.DIAGONAL:
            if e.axis == mapchain.SECOND:
                W = W * e.data[0]
            else:
                Z = Z * e.data[0]
            continue
        poly = other.compose_poly(e.data) if e.data else ZUSeries(K, M)
        if e.kind == mapchain.SHEAR:
            if e.axis == mapchain.SECOND:
                W = W + poly
            else:
                Z = Z + poly
        else:
            if poly.c[0, 0] != 0:
                raise JetError("overshear exponent with a constant term is not rational")
            f = poly.exp()
            if e.axis == mapchain.SECOND:
                W = W * f
            else:
                Z = Z * f
    return Z, W


def jet_expansion(m: MapJet, curve: CurveSeries, K: int, M: int):
    """Same as :func:`chain_expansion` from a (total-degree) jet of ``F``."""
    if m.mode != jets.RATIONAL:
        raise JetError("series extraction needs a rational jet")
    Z = ZUSeries.z(K, M)
    W = ZUSeries.u(K, M) + Z.compose_poly(_gamma_full(curve))
    out = []
    for part in (m.first, m.second):
        total = ZUSeries(K, M)
        Wp = [ZUSeries.const(1, K, M)]
        for _ in range(m.order):
            Wp.append(Wp[-1] * W)
        Zp = ZUSeries.const(1, K, M)
        for i in range(min(m.order, K) + 1):
            for j in range(m.order + 1 - i):
                cij = part.coeff(i, j)
                if cij != 0:
                    total = total + Zp * Wp[j] * cij
            Zp = Zp * Z
        out.append(total)
    return out[0], out[1]


def _gamma_full(curve: CurveSeries) -> list:
    if not curve.exact:
        raise JetError("series extraction needs exact curve coefficients")
    return [Fraction(0)] * 3 + list(curve.exact)


def _lin_solve(i: int, a2: np.ndarray, P: np.ndarray, rhs: np.ndarray, upto: int) -> np.ndarray:
    """Solve ``i a2 s + P s' = rhs`` for a series ``s`` in ``u`` (``P = O(u**2)``).

    For ``i = 0`` the equation fixes ``s`` up to its constant, chosen as 0,
    and requires ``rhs`` to vanish to second order.
    """
    s = [Fraction(0)] * (upto + 1)
    if P[0] != 0 or P[1] != 0:
        raise JetError("expected P = O(u^2)")
    if i == 0:
        if rhs[0] != 0 or rhs[1] != 0:
            raise JetError("obstruction at low order; log weights are inconsistent")
        for j in range(2, upto + 2):
            acc = rhs[j] if j < len(rhs) else Fraction(0)
            # (P s')[j] = sum_l P[l] (j - l + 1) s[j - l + 1]; top index j - 1 with l = 2
            for l in range(3, j + 1):
                acc -= P[l] * (j - l + 1) * s[j - l + 1]
            if j - 1 <= upto:
                s[j - 1] = acc / (P[2] * (j - 1)) if j - 1 > 0 else Fraction(0)
        return np.array(s, dtype=object)
    lead = i * a2[0]
    for j in range(upto + 1):
        acc = rhs[j]
        for l in range(1, j + 1):
            acc -= i * a2[l] * s[j - l]
        for l in range(2, j + 2):
            if 0 <= j - l + 1 <= upto and l < len(P):
                acc -= P[l] * (j - l + 1) * s[j - l + 1]
        s[j] = acc / lead
    return np.array(s, dtype=object)


@dataclass(frozen=True)
class SeriesData:
    """Exact constants and series (ascending coefficients in ``u = 1/y``).

    ``sigma[i]`` multiplies ``x**-i``; ``tau[0]`` is the fiber analogue of
    ``sigma[0]``.  ``xi`` holds fiber corrections ``((i, a, b), f)`` standing
    for ``x**-i L(x)**a L(y)**b f(u)`` and ``xi_y`` pairs ``(j, c)`` for
    ``c y x**-j``.  ``valid`` is the highest ``u``-degree
    that is exact.
    """

    g: tuple
    h: tuple
    c: Fraction
    r: Fraction
    s: Fraction
    k: Fraction
    kappa: Fraction
    beta: tuple
    sigma: tuple
    tau: tuple
    a2: tuple
    valid: int
    xi: tuple = ()
    xi_y: tuple = ()


def reduce_expansion(Z1: ZUSeries, W1: ZUSeries, curve: CurveSeries,
                     corrections: int = DEFAULT_CORRECTIONS) -> SeriesData:
    """Extract all series from ``F`` written in ``(z, u)``."""
    K, M = Z1.K, Z1.M
    if K < corrections + 3:
        raise JetError("z-truncation too low for the requested corrections")
    valid = M - 4
    U1 = W1 - Z1.compose_poly(_gamma_full(curve))
    A = Z1.shift_z(1)                  # z1 / z, exact through z**(K-1)
    B = A.reciprocal()                 # x1 / x
    one_u = np.array([Fraction(1)] + [Fraction(0)] * M, dtype=object)
    if not np.array_equal(B.c[0], one_u):
        raise JetError("x1/x must reduce to 1 on the axis")
    g = B.c[1] + one_u
    if g[0] != 0:
        raise JetError("g must vanish at 0")
    c = B.c[2][0]
    E = U1.shift_u(1)                  # u1 / u, exact through u**(M-1)
    Einv = E.reciprocal()              # y1 / y
    if not np.array_equal(Einv.c[0][:M], one_u[:M]):
        raise JetError("u1/u must reduce to 1 on the axis")
    if Einv.c[1][0] != 0:
        raise JetError("y1 - y must stay bounded near the curve")
    H = np.append(Einv.c[1][1:], Fraction(0))      # 1 + h
    if H[0] != 1:
        raise JetError("unexpected normalization of y1 - y")
    h = H - one_u
    a2 = Z1.c[2]
    P = U1.c[1]                                     # u1 = u + P(u) z + ...
    logB = B.log()
    logE = Einv.log()

    # beta: the z**0 part of the increment is  g + (g - 1) beta + P beta' = 0
    beta = _lin_solve(-1, one_u - g, P, -g, valid)
    # check against the full expansion
    xbeta = (B * U1.compose_u_series(beta) - ZUSeries.from_u(beta, K, M)).shift_z(1)
    chk = xbeta.c[0] + g
    if any(chk[j] != 0 for j in range(valid)):
        raise JetError("beta equation not satisfied by the expansion")

    base = ZUSeries(K, M)
    base.c[: K] = B.c[1: K + 1]                    # x1 - x as a z-series
    base = base + 1 + xbeta                         # + 1 + (x1 beta(u1) - x beta(u))
    # z**1 part fixes r and s
    D1 = base.c[1]
    Lr = logB.c[1]
    Ls = logE.c[1]
    if Ls[0] != 0 or Ls[1] == 0 or Lr[0] == 0:
        raise JetError("cannot determine the log weights")
    r = -D1[0] / Lr[0]
    s = -(D1[1] + r * Lr[1]) / Ls[1]
    inc = base + logB * r + logE * s

    # corrections sigma_i multiply z**i
    sigma = []
    zpow = ZUSeries.const(1, K, M)
    for i in range(corrections + 1):
        rhs = -inc.c[i + 1]
        sig = _lin_solve(i, a2, P, rhs, valid)
        term = Z1.compose_poly([0] * i + [1]) * U1.compose_u_series(sig) \
            - zpow * ZUSeries.from_u(sig, K, M)
        inc = inc + term
        if any(inc.c[i + 1][j] != 0 for j in range(valid - 1)):
            raise JetError(f"correction {i} failed to cancel its order")
        sigma.append(tuple(sig))
        zpow = zpow * ZUSeries.z(K, M)

    # fiber coordinate: y - kappa log y + log t + tau_0(u)
    b_full = np.array([Fraction(0)] * (M + 1), dtype=object)
    b_full[: len(beta)] = beta
    inv1b = jets._u_inv(one_u + b_full)
    Dxi = H - inv1b
    if Dxi[0] != 0 or Ls[1] == 0:
        raise JetError("fiber increment does not vanish at u = 0")
    kappa = Dxi[1] / Ls[1]
    Dxi = Dxi - Ls * kappa
    tau0 = _lin_solve(0, a2, P, -Dxi, valid)

    k = -s
    trim = lambda a: tuple(a[: valid + 1])
    xi, xi_y = (), ()
    if corrections >= 1:
        xi, xi_y = _fiber_corrections(Z1, U1, Einv, logB, logE, beta, sigma, r, s, kappa, tau0,
                                a2, P, valid, order=min(corrections + 1, K - 2))
    return SeriesData(trim(g), trim(h), c, r, s, k, kappa, trim(beta),
                      tuple(trim(x) for x in sigma), (trim(tau0),), trim(a2), valid,
                      tuple((key, trim(f)) for key, f in xi), tuple(xi_y))


class _LogPoly:
    """Polynomial in ``La = L(x)``, ``Lb = L(y)`` with :class:`ZUSeries` coefficients."""

    def __init__(self, terms=None):
        self.t = dict(terms or {})

    def __add__(self, o):
        out = dict(self.t)
        for k, v in o.t.items():
            out[k] = out[k] + v if k in out else v
        return _LogPoly(out)

    def __mul__(self, o):
        if isinstance(o, _LogPoly):
            out: dict = {}
            for (a, b), v in self.t.items():
                for (c, d), w in o.t.items():
                    k = (a + c, b + d)
                    out[k] = out[k] + v * w if k in out else v * w
            return _LogPoly(out)
        return _LogPoly({k: v * o for k, v in self.t.items()})

    def coeff(self, key, i):
        return self.t[key].c[i] if key in self.t else None


def _binom_power(L: tuple, ell: ZUSeries, a: int, which: int) -> _LogPoly:
    """``(L + ell)**a`` where ``L`` is the log symbol with index ``which``."""
    K, M = ell.K, ell.M
    out = _LogPoly()
    lp = ZUSeries.const(1, K, M)
    for j in range(a + 1):
        key = (a - j, 0) if which == 0 else (0, a - j)
        out = out + _LogPoly({key: lp * math.comb(a, j)})
        lp = lp * ell
    return out


def _fiber_corrections(Z1, U1, Einv, logB, logE, beta, sigma, r, s, kappa, tau0,
                       a2, P, valid, order):
    """Log-polynomial corrections removing the fiber increments through ``z**(order+1)``."""
    K, M = Z1.K, Z1.M
    one = ZUSeries.const(1, K, M)
    zs = ZUSeries.z(K, M)
    # y1 - y = y D0(z) + (analytic); the y D0(z) part is carried separately
    D = Einv - one
    D0 = np.array([D.c[i][0] for i in range(K + 1)], dtype=object)
    Dc = D.c.copy()
    Dc[:, 0] = Fraction(0)
    dy = ZUSeries(K, M, Dc).shift_u(1)
    pad = lambda a: np.array(list(a[: M + 1]) + [Fraction(0)] * max(0, M + 1 - len(a)), dtype=object)
    ib = ZUSeries.from_u(jets._u_inv(pad([Fraction(1)]) + pad(beta)), K, M)
    sig = ZUSeries(K, M)
    for i, sg in enumerate(sigma):
        sig = sig + zs.compose_poly([0] * i + [1]) * ZUSeries.from_u(pad(sg), K, M)
    Q = _LogPoly({(0, 0): sig * ib, (1, 0): ib * r, (0, 1): ib * s})
    # 1/t = z ib / (1 + z Q)
    zQ = Q * zs
    geo = _LogPoly({(0, 0): one})
    term = _LogPoly({(0, 0): one})
    for _ in range(K):
        term = term * zQ * Fraction(-1)
        geo = geo + term
    invt = geo * (zs * ib)
    # L(t - 1) - L(t) = -sum invt**k / k
    dlogt = _LogPoly()
    pw = _LogPoly({(0, 0): one})
    for k in range(1, K + 1):
        pw = pw * invt
        dlogt = dlogt + pw * Fraction(-1, k)
    tau_step = U1.compose_u_series(pad(tau0)) - ZUSeries.from_u(pad(tau0), K, M)
    inc = dlogt + _LogPoly({(0, 0): dy + tau_step + logE * (-kappa)})
    yinc = D0.copy()                    # increment part  y * sum yinc[i] z**i
    lim = valid - 2

    def nonzero(i, upto):
        return [key for key, v in inc.t.items() if any(v.c[i][j] != 0 for j in range(upto))]

    if nonzero(0, lim) or nonzero(1, lim):
        raise JetError("fiber increment does not vanish through first order")
    if any(yinc[j] != 0 for j in range(3)):
        raise JetError("unexpected low-order growth of y1 - y")
    found = []
    ycorr = []
    for i in range(1, order + 1):
        zi = Z1.compose_poly([0] * i + [1])
        zpi = zs.compose_poly([0] * i + [1])
        # y z**(i+1) cancels y z**(i+2);  y1 Y(z1) - y Y(z) = y (Einv Y(Z1) - Y(z))
        cy = -yinc[i + 2] / ((i + 1) * a2[0])
        if cy != 0:
            zi1 = Z1.compose_poly([0] * (i + 1) + [cy])
            br = Einv * zi1 - zs.compose_poly([0] * (i + 1) + [cy])
            yinc = yinc + np.array([br.c[j][0] for j in range(K + 1)], dtype=object)
            bc = br.c.copy()
            bc[:, 0] = Fraction(0)
            inc = inc + _LogPoly({(0, 0): ZUSeries(K, M, bc).shift_u(1)})
            ycorr.append((i + 1, cy))
        if yinc[i + 2] != 0:
            raise JetError("growth term failed to cancel")
        for deg in range(i, -1, -1):
            for a in range(deg, -1, -1):
                key = (a, deg - a)
                rhs = inc.coeff(key, i + 1)
                if rhs is None or not any(rhs[j] != 0 for j in range(lim)):
                    continue
                f = _lin_solve(i, a2, P, -rhs, valid)
                new = _binom_power(None, logB, key[0], 0) * _binom_power(None, logE, key[1], 1) \
                    * (zi * U1.compose_u_series(pad(f)))
                old = _LogPoly({key: zpi * ZUSeries.from_u(pad(f), K, M)})
                inc = inc + new + old * Fraction(-1)
                found.append(((i, key[0], key[1]), f))
        lim -= 1
        if nonzero(i + 1, lim):
            raise JetError(f"fiber correction of order {i} failed to cancel")
    return found, ycorr


def extract_series(m: MapJet, curve: Optional[CurveSeries] = None, order: int = 6):
    """``(g, h, c, k)`` from a rational jet of ``F``; ``g``, ``h`` through ``u**order``.

    The jet must have total order at least ``order + 4`` so that the
    coefficients returned are not affected by truncation.
    """
    curve = curve or default_curve()
    if m.order < order + 4:
        raise JetError(f"jet order {m.order} is too low for series through u^{order}")
    Z1, W1 = jet_expansion(m, curve, 3, m.order)
    d = reduce_expansion(Z1, W1, curve, corrections=0)
    cut = lambda a: tuple(a[: order + 1])
    return cut(d.g), cut(d.h), d.c, d.k


def c_from_curve(curve: Optional[CurveSeries] = None, N: int = 6) -> tuple:
    """``c`` two ways: from ``1/z1`` along the curve, and as ``1 - c3``."""
    curve = curve or default_curve()
    m = mapchain.germ_of_chain(mapchain.default_chain(), N)
    zj = jets.Jet2.var_z(N)
    gj = jets.Jet2(N, {(k + 3, 0): v for k, v in enumerate(curve.exact)})
    f1 = m.first.substitute(zj, gj)
    # 1/z1 = (1/z) * 1/(z1/z); the z-coefficient of 1/z1 is the z**2 one of z/z1
    q = jets.jet_reciprocal(f1.divide_monomial(1, 0))
    direct = q.coeff(2, 0)
    c3 = f1.coeff(3, 0)
    return direct, 1 - c3


# ---------------------------------------------------------------------------
# numerical machine


class NotInBasin(ValueError):
    """The orbit did not reach the coordinate domain within the budget."""


def log_cut(v):
    """Logarithm with its cut on the positive real axis (argument in ``(0, 2 pi)``)."""
    return np.log(-np.asarray(v, dtype=np.complex128)) + 1j * math.pi


def _mp_log_cut(v):
    import mpmath
    return mpmath.log(-v) + 1j * mpmath.pi


def _frac_to_mp(q):
    import mpmath
    return mpmath.mpf(q.numerator) / q.denominator


@dataclass
class PsiValue:
    """Value of a limit-defined coordinate with its tail-error estimate.

    ``entry`` is the first iterate found in the coordinate domain and ``N``
    the total number of iterates used.
    """

    value: complex
    err: float
    entry: int
    N: int


class FatouMachine:
    """Numerical evaluation of the Fatou coordinate and its relatives.

    Built from :class:`SeriesData`; immutable after construction apart from
    lazily measured constants (``c_eta``), which are cached once.
    """

    def __init__(self, data: SeriesData, curve: CurveSeries, params: Optional[RegionParams] = None,
                 chain: Optional[mapchain.MapChain] = None, n_tail: int = 3000,
                 n_max: int = 100_000, tol: float = 1e-12):
        self.data = data
        self.curve = curve
        self.params = params or regions.DEFAULT_PARAMS
        self.fmap = mapchain.FMap(chain) if chain is not None else mapchain.default_map()
        self.n_tail = int(n_tail)
        self.n_max = int(n_max)
        self.tol = float(tol)
        f = lambda seq: np.array([complex(x) for x in seq], dtype=np.complex128)
        self._g = f(data.g)
        self._h = f(data.h)
        self._beta = f(data.beta)
        self._sigma = [f(s) for s in data.sigma]
        self._tau0 = f(data.tau[0])
        self._xi = [(key, f(c)) for key, c in data.xi]
        self._xi_y = [(j, complex(c)) for j, c in data.xi_y]
        self.c = complex(data.c)
        self.r = complex(data.r)
        self.s = complex(data.s)
        self.k = complex(data.k)
        self.kappa = complex(data.kappa)
        self._c_eta: Optional[float] = None
        self._gamma = curve.full

    # -- series ----------------------------------------------------------------
    def g(self, u):
        return np.polynomial.polynomial.polyval(np.asarray(u, np.complex128), self._g)

    def h(self, u):
        return np.polynomial.polynomial.polyval(np.asarray(u, np.complex128), self._h)

    def _cut_index(self, u):
        """Optimal truncation index for the asymptotic series at ``u``."""
        u = np.atleast_1d(np.asarray(u, np.complex128))
        j = np.arange(len(self._beta))
        env = np.abs(self._beta)
        env[0] = np.inf
        with np.errstate(divide="ignore", over="ignore"):
            mags = env[None, :] * np.abs(u)[:, None] ** j[None, :]
        return np.argmin(mags, axis=1), j

    def _asym(self, coeffs, u):
        """Sum of ``coeffs`` at ``u`` up to (excluding) the smallest term; with error."""
        shape = np.shape(u)
        u = np.atleast_1d(np.asarray(u, np.complex128))
        idx, j = self._cut_index(u)
        terms = coeffs[None, :] * u[:, None] ** j[None, :]
        keep = j[None, :] < idx[:, None]
        total = np.where(keep, terms, 0).sum(axis=1)
        err = np.abs(terms[np.arange(len(u)), idx])
        return total.reshape(shape), err.reshape(shape)

    def beta_with_error(self, u):
        return self._asym(self._beta, u)

    def beta(self, u):
        return self._asym(self._beta, u)[0]

    def beta_prime_y(self, u):
        """``d beta / d y`` at ``y = 1/u`` (termwise, same truncation)."""
        db = -np.concatenate([[0], self._beta[1:] * np.arange(1, len(self._beta))])
        # d/dy sum b_j u^j = sum -j b_j u^(j+1)
        shifted = np.concatenate([[0], db[:-1]])
        return self._asym(shifted, u)[0]

    def beta_residual(self, y):
        """Residual of ``(1 + h) beta' - (1 - g) beta + g`` at ``y``."""
        u = 1 / np.asarray(y, np.complex128)
        return (1 + self.h(u)) * self.beta_prime_y(u) - (1 - self.g(u)) * self.beta(u) + self.g(u)

    # -- charts ------------------------------------------------------------------
    def to_xy(self, p):
        z = np.asarray(p[0], np.complex128)
        w = np.asarray(p[1], np.complex128)
        u = w - self.curve(z)
        if np.any(z == 0) or np.any(u == 0):
            raise ValueError("chart pole: point on the axis or on the curve")
        return 1 / z, 1 / u

    def from_xy(self, x, y):
        z = 1 / np.asarray(x, np.complex128)
        return z, 1 / np.asarray(y, np.complex128) + self.curve(z)

    # -- coordinate --------------------------------------------------------------
    def mu0(self, x, y, corrections: Optional[int] = None):
        """``mu(x, y)``; ``corrections=-1`` drops every correction series."""
        x = np.asarray(x, np.complex128)
        u = 1 / np.asarray(y, np.complex128)
        out = x + self.r * log_cut(x) + self.s * log_cut(1 / u) + x * self.beta(u)
        nc = len(self._sigma) if corrections is None else corrections + 1
        for i in range(nc):
            out = out + x ** (-i) * self._asym(self._sigma[i], u)[0]
        return out

    def mu0_error(self, x, y):
        """Asymptotic-series truncation error of :meth:`mu0`."""
        x = np.asarray(x, np.complex128)
        u = 1 / np.asarray(y, np.complex128)
        err = np.abs(x) * self._asym(self._beta, u)[1]
        for i, s in enumerate(self._sigma):
            err = err + np.abs(x) ** (-i) * self._asym(s, u)[1]
        return err

    def mu0_kernel(self, x, y):
        """The reduced form used by the compiled region test (``beta`` and ``sigma_0``)."""
        from . import kernels
        beta, rho = self.kernel_series()
        return kernels.mu0(complex(x), complex(y), self.r, self.s, beta, rho)

    def kernel_series(self):
        """Fixed truncations of ``beta`` and ``sigma_0`` valid on ``|y| >= R``."""
        idx, _ = self._cut_index(np.array([1 / self.params.R]))
        n = int(idx[0])
        return (np.ascontiguousarray(self._beta[:n]), np.ascontiguousarray(self._sigma[0][:n]))

    def mu(self, x, y, n: Optional[int] = None):
        """``mu_n(x, y)``; with ``n=None`` the limit mode (``n_tail`` iterates)."""
        z, w = self.from_xy(x, y)
        steps = self.n_tail if n is None else int(n)
        return self._value_after(complex(z), complex(w), steps, 0)

    def _value_after(self, z, w, N, entry):
        if N < 1:
            x, y = self.to_xy((z, w))
            return PsiValue(complex(self.mu0(x, y)), float(self.mu0_error(x, y)), entry, 0)
        zs, ws = self.fmap.forward_many(np.array([z]), np.array([w]), N - 1)
        z1, w1 = self.fmap.forward(zs[0], ws[0])
        if not (np.isfinite(z1) and np.isfinite(w1)):
            raise NotInBasin("orbit left the numerical range")
        xb, yb = self.to_xy((z1, w1))
        b = complex(self.mu0(xb, yb))
        # the float increment drowns in roundoff; measure it in high precision
        noise = 16 * np.finfo(float).eps * (abs(xb) + abs(b) + N)
        inc = self.increment_mp((zs[0], ws[0]), dps=30)
        tail = 2 * inc * abs(xb) / (len(self._sigma) + 1)
        err = tail + float(self.mu0_error(xb, yb)) + noise
        return PsiValue(b + N, err, entry, N)

    # -- fiber coordinate ------------------------------------------------------------
    def xi_hat(self, t, x, y):
        """``y - kappa L(y) + L(t) + tau_0(u)`` plus the fiber corrections."""
        t = np.asarray(t, np.complex128)
        x = np.asarray(x, np.complex128)
        y = np.asarray(y, np.complex128)
        u = 1 / y
        lx, ly = log_cut(x), log_cut(y)
        out = y - self.kappa * ly + log_cut(t) + self._asym(self._tau0, u)[0]
        for (i, a, b), f in self._xi:
            out = out + x ** (-i) * lx ** a * ly ** b * self._asym(f, u)[0]
        for j, cj in self._xi_y:
            out = out + cj * y * x ** (-j)
        return out

    def xi_hat_mp(self, t, z, w):
        """High-precision :meth:`xi_hat` at ``(t, z, w)``."""
        gam = [_frac_to_mp(g) for g in self.curve.exact]
        u = w - sum(a * z ** (k + 3) for k, a in enumerate(gam))
        x, y = 1 / z, 1 / u
        cut = self._mp_cut(u)
        lx, ly = _mp_log_cut(x), _mp_log_cut(y)
        out = y - _frac_to_mp(self.data.kappa) * ly + _mp_log_cut(t) \
            + self._mp_series(self.data.tau[0], u, cut)
        for (i, a, b), f in self.data.xi:
            out += x ** (-i) * lx ** a * ly ** b * self._mp_series(f, u, cut)
        for j, cj in self.data.xi_y:
            out += _frac_to_mp(cj) * y * x ** (-j)
        return out

    # -- basin entry ---------------------------------------------------------------
    def kernel_args(self, accept_d: bool = True, roundoff: float = 1e-15):
        beta, rho = self.kernel_series()
        return (np.ascontiguousarray(self._gamma), float(self.params.eps), float(self.params.R),
                self.r, self.s, beta, rho, float(self.c_eta), float(self.curve.M),
                float(self.curve.order + 1), float(roundoff), bool(accept_d))

    def first_entry(self, p, budget: Optional[int] = None, strict: bool = False):
        """``(code, index)`` of the first region hit by the forward orbit of ``p``."""
        from . import kernels
        budget = self.n_max if budget is None else int(budget)
        codes, entry = kernels.classify_many(
            np.array([complex(p[0])]), np.array([complex(p[1])]), budget,
            *self.fmap._fwd, *self.kernel_args(accept_d=not strict))
        return int(codes[0]), int(entry[0])

    def psi(self, p, N: Optional[int] = None, strict: bool = False,
            budget: Optional[int] = None) -> PsiValue:
        """Fatou coordinate of ``p`` from the orbit point ``F^N(p)``.

        Without ``N`` the orbit is followed to its first entry into ``D``
        (into ``D'`` with ``strict=True``) and then ``n_tail`` steps further.
        """
        from . import kernels
        z, w = complex(p[0]), complex(p[1])
        if N is None:
            code, entry = self.first_entry(p, budget, strict)
            if code not in (kernels.CODE_BASIN_D, kernels.CODE_BASIN_DPRIME):
                raise NotInBasin(f"no domain entry within the budget (code {code})")
            N = entry + self.n_tail
        else:
            entry = -1
        val = self._value_after(z, w, int(N), entry)
        zN, wN = self.fmap.forward_many(np.array([z]), np.array([w]), int(N))
        if not regions.in_D((zN[0], wN[0]), self.params, self.curve):
            raise NotInBasin("F^N(p) is not in the coordinate domain")
        return val

    def psi_many(self, zs, ws, N: int):
        """Vectorized ``mu(F^N p) + N`` for points already known to be in ``D``."""
        zN, wN = self.fmap.forward_many(zs, ws, int(N))
        x, y = self.to_xy((zN, wN))
        return self.mu0(x, y) + N, zN, wN

    def theta(self, p, N: Optional[int] = None):
        """``(psi(p), 1/(w - gamma(z)))``."""
        t = self.psi(p, N)
        return t.value, complex(self.to_xy(p)[1])

    def theta_inverse_many(self, t, y, guess=None, N: Optional[int] = None,
                           tol: float = 1e-11, max_iter: int = 40, strict: bool = True):
        """Points ``(z, w)`` with ``Theta = (t, y)``, by Newton in ``x`` (vectorized).

        ``psi`` is evaluated as ``mu(F^N p) + N`` with a fixed ``N`` so the
        solved function is smooth in ``x``.  With ``strict=False`` points
        that do not converge come back as NaN instead of raising.
        """
        t = np.atleast_1d(np.asarray(t, np.complex128))
        y = np.atleast_1d(np.asarray(y, np.complex128))
        t, y = np.broadcast_arrays(t, y)
        N = self.n_tail if N is None else int(N)
        u = 1 / y
        b = self.beta(u)
        if guess is None:
            x = (t - self.r * log_cut(t) - self.s * log_cut(y)) / (1 + b)
        else:
            x = np.array(np.broadcast_to(guess, t.shape), np.complex128)
        done = np.zeros(t.shape, bool)
        with np.errstate(all="ignore"):  # non-finite inputs end up as failures
            for _ in range(max_iter):
                z, w = self.from_xy(x, y)
                val, _, _ = self.psi_many(z, w, N)
                f = val - t
                done = np.abs(f) <= tol * np.maximum(1.0, np.abs(t))
                if done.all():
                    break
                x = np.where(done, x, x - f / (1 + b + self.r / x))
        if not done.all():
            if strict:
                raise RuntimeError("Theta inverse did not converge")
            x = np.where(done, x, np.nan)
        with np.errstate(all="ignore"):
            return self.from_xy(x, y)

    def theta_inverse(self, t: complex, y: complex, guess: Optional[complex] = None,
                      tol: float = 1e-11, max_iter: int = 40):
        """Point ``p`` in ``D`` with ``Theta(p) = (t, y)``."""
        z, w = self.theta_inverse_many(t, y, guess, tol=tol, max_iter=max_iter)
        return complex(z[0]), complex(w[0])

    # -- measured constants ------------------------------------------------------------
    @property
    def c_eta(self) -> float:
        if self._c_eta is None:
            self._c_eta = self.measure_c_eta()
        return self._c_eta

    def sample_dprime_xy(self, n: int, seed: int = 0, xmax_factor: float = 20.0):
        """Random ``(x, y)`` in the chart image of ``D'`` (with ``t ~ x``)."""
        R = self.params.R
        rng = np.random.default_rng(seed)
        ap = self.params.aperture * (1 - 1e-6)
        ax = rng.uniform(2.3 * R, xmax_factor * R, n)
        ay = rng.uniform(1.01 * R, 0.45 * ax)
        x = -ax * np.exp(1j * rng.uniform(-ap, ap, n) * 0.8)
        y = -ay * np.exp(1j * rng.uniform(-ap, ap, n))
        return x, y

    def measure_c_eta(self, n: int = 256, seed: int = 7) -> float:
        """``2 sup |psi - mu_reduced| |x|`` over samples of ``D'``."""
        x, y = self.sample_dprime_xy(n, seed)
        z, w = self.from_xy(x, y)
        val, _, _ = self.psi_many(z, w, self.n_tail)
        beta, rho = self.kernel_series()
        from . import kernels
        red = np.array([kernels.mu0(complex(a), complex(b), self.r, self.s, beta, rho)
                        for a, b in zip(x, y)])
        return float(2 * np.max(np.abs(val - red) * np.abs(x)))

    def measure_eta_slope(self, n: int = 64, seed: int = 11, rel_step: float = 1e-2) -> float:
        """``sup |d eta / dx|`` over samples of ``D'``, by central differences.

        ``eta = psi - (x + r log x + s log y + x beta(y))`` is the part of
        ``psi`` beyond the leading terms.
        """
        x, y = self.sample_dprime_xy(n, seed)
        d = rel_step * np.abs(x)

        def eta(xx):
            z, w = self.from_xy(xx, y)
            val, _, _ = self.psi_many(z, w, self.n_tail)
            return val - self.mu0(xx, y, corrections=-1)

        return float(np.max(np.abs((eta(x + d) - eta(x - d)) / (2 * d))))

    def fit_k(self, x: complex = -1e6, ys=(-40.0, -60.0, -90.0, -135.0, -200.0, -300.0),
              dps: int = 60) -> complex:
        """``k`` as the ``1/(xy)`` coefficient of the raw increment (``s = 0``, no corrections).

        The increment ``x + r log x + x beta(y)`` over one step is evaluated in
        high precision; ``x`` times it is fitted by a polynomial in ``1/y``.
        """
        import mpmath
        rows, rhs = [], []
        with mpmath.workdps(dps):
            bet = [_frac_to_mp(b) for b in self.data.beta]
            gam = [_frac_to_mp(g) for g in self.curve.exact]
            r = _frac_to_mp(self.data.r)

            def gamma(z):
                return sum(a * z ** (k + 3) for k, a in enumerate(gam))

            def beta(u):
                terms = [b * u ** j for j, b in enumerate(bet)]
                m = min(range(1, len(terms)), key=lambda j: abs(terms[j]) if bet[j] else mpmath.inf)
                return mpmath.fsum(terms[:m])

            def part(x, y):
                return x + r * _mp_log_cut(x) + x * beta(1 / y)

            X = mpmath.mpc(x)
            for yv in ys:
                Y = mpmath.mpc(yv)
                z = 1 / X
                w = 1 / Y + gamma(z)
                z1, w1 = self.fmap.chain.apply(z, w, mpmath.exp, _frac_to_mp)
                x1, y1 = 1 / z1, 1 / (w1 - gamma(z1))
                inc = part(x1, y1) + 1 - part(X, Y)
                rows.append([complex(1 / Y) ** j for j in range(1, 5)])
                rhs.append(complex(X * inc))
        coef = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)[0]
        return complex(coef[0])

    def increment_mp(self, p, dps: int = 50, corrections: Optional[int] = None):
        """``|mu(F p) + 1 - mu(p)|`` evaluated in high precision at the point ``p``."""
        import mpmath
        with mpmath.workdps(dps):
            z, w = mpmath.mpc(complex(p[0])), mpmath.mpc(complex(p[1]))
            z1, w1 = self.fmap.chain.apply(z, w, mpmath.exp, _frac_to_mp)
            return float(abs(self.mu_mp(z1, w1, corrections) + 1 - self.mu_mp(z, w, corrections)))

    def _mp_series(self, coeffs, u, cut):
        import mpmath
        return mpmath.fsum(_frac_to_mp(c) * u ** j for j, c in enumerate(coeffs[:cut]))

    def _mp_cut(self, u):
        idx, _ = self._cut_index(np.array([complex(u)]))
        return int(idx[0])

    def mu_mp(self, z, w, corrections: Optional[int] = None):
        """High-precision :meth:`mu0` at the point ``(z, w)``."""
        gam = [_frac_to_mp(g) for g in self.curve.exact]
        u = w - sum(a * z ** (k + 3) for k, a in enumerate(gam))
        x, y = 1 / z, 1 / u
        cut = self._mp_cut(u)
        out = x + _frac_to_mp(self.data.r) * _mp_log_cut(x) \
            + _frac_to_mp(self.data.s) * _mp_log_cut(y) + x * self._mp_series(self.data.beta, u, cut)
        nc = len(self.data.sigma) if corrections is None else corrections + 1
        for i in range(nc):
            out += x ** (-i) * self._mp_series(self.data.sigma[i], u, cut)
        return out

    # -- beta oracle -------------------------------------------------------------------
    def solve_beta_ode(self, y: complex, start_modulus: Optional[float] = None,
                       via: Optional[complex] = None, rtol: float = 1e-12):
        """``beta(y)`` by integrating the linear ODE outward from the series value.

        The homogeneous solution grows like ``exp(y)``, so integration is
        stable only towards larger ``|y|`` in the sector; the path starts on
        the ray of ``y`` at modulus ``start_modulus`` (default ``R``) and may
        pass through ``via``.
        """
        from scipy.integrate import solve_ivp
        y = complex(y)
        rs = float(start_modulus or self.params.R)
        if abs(y) < rs:
            raise ValueError("the ODE oracle integrates outward only")
        y0 = y / abs(y) * rs
        b0 = complex(self.beta(1 / y0))
        nodes = [y0] + ([complex(via)] if via is not None else []) + [y]
        b = b0
        for a, c in zip(nodes[:-1], nodes[1:]):
            def rhs(tau, v, a=a, c=c):
                yy = a + tau * (c - a)
                u = 1 / yy
                val = complex(v[0], v[1])
                d = ((1 - complex(self.g(u))) * val - complex(self.g(u))) / (1 + complex(self.h(u)))
                d *= (c - a)
                return [d.real, d.imag]
            sol = solve_ivp(rhs, (0.0, 1.0), [b.real, b.imag], method="DOP853",
                            rtol=rtol, atol=1e-16)
            if not sol.success:
                raise RuntimeError(sol.message)
            b = complex(sol.y[0, -1], sol.y[1, -1])
        return b

    # -- export ------------------------------------------------------------------------
    def to_json(self) -> str:
        q = lambda v: f"{v.numerator}/{v.denominator}"
        d = self.data
        out = {
            "c": q(d.c), "k": q(d.k), "r": q(d.r), "s": q(d.s), "kappa": q(d.kappa),
            "g": [q(v) for v in d.g], "h": [q(v) for v in d.h], "beta": [q(v) for v in d.beta],
            "sigma": [[q(v) for v in s] for s in d.sigma], "tau0": [q(v) for v in d.tau[0]],
            "valid_degree": d.valid, "eps": self.params.eps, "R": self.params.R,
            "n_tail": self.n_tail, "n_max": self.n_max, "tol": self.tol,
            "c_eta": self._c_eta,
        }
        return json.dumps(out, indent=1)


def psi_csv(rows) -> str:
    """CSV ``re_z,im_z,re_w,im_w,re_psi,im_psi,err_est`` from ``(p, PsiValue)`` pairs."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["re_z", "im_z", "re_w", "im_w", "re_psi", "im_psi", "err_est"])
    for p, v in rows:
        z, w = complex(p[0]), complex(p[1])
        if v is None:
            wr.writerow([repr(z.real), repr(z.imag), repr(w.real), repr(w.imag), "", "", ""])
        else:
            wr.writerow([repr(z.real), repr(z.imag), repr(w.real), repr(w.imag),
                         repr(v.value.real), repr(v.value.imag), repr(v.err)])
    return buf.getvalue()


def _fingerprint(chain: mapchain.MapChain, curve: CurveSeries, M: int, corrections: int) -> str:
    kinds, axes, ndeg, coefs = chain.encode()
    h = hashlib.sha256()
    for a in (kinds, axes, ndeg, coefs):
        h.update(np.ascontiguousarray(a).tobytes())
    h.update(repr([str(q) for q in curve.exact]).encode())
    h.update(f"{M}/{corrections}".encode())
    return h.hexdigest()


def series_to_dict(data: SeriesData) -> dict:
    q = lambda v: str(Fraction(v))
    qs = lambda seq: [q(v) for v in seq]
    return {
        "g": qs(data.g), "h": qs(data.h), "c": q(data.c), "r": q(data.r), "s": q(data.s),
        "k": q(data.k), "kappa": q(data.kappa), "beta": qs(data.beta),
        "sigma": [qs(x) for x in data.sigma], "tau": [qs(x) for x in data.tau],
        "a2": qs(data.a2), "valid": data.valid,
        "xi": [[list(key), qs(f)] for key, f in data.xi],
        "xi_y": [[j, q(c)] for j, c in data.xi_y],
    }


def series_from_dict(d: dict) -> SeriesData:
    F = Fraction
    fs = lambda seq: tuple(F(v) for v in seq)
    return SeriesData(fs(d["g"]), fs(d["h"]), F(d["c"]), F(d["r"]), F(d["s"]), F(d["k"]),
                      F(d["kappa"]), fs(d["beta"]), tuple(fs(x) for x in d["sigma"]),
                      tuple(fs(x) for x in d["tau"]), fs(d["a2"]), int(d["valid"]),
                      tuple((tuple(key), fs(f)) for key, f in d["xi"]),
                      tuple((int(j), F(c)) for j, c in d["xi_y"]))


def build_series(chain: Optional[mapchain.MapChain] = None, curve: Optional[CurveSeries] = None,
                 M: int = DEFAULT_U_ORDER, corrections: int = DEFAULT_CORRECTIONS) -> SeriesData:
    """Exact series from scratch (about 20 s at the default orders)."""
    chain = chain or mapchain.default_chain()
    curve = curve or default_curve()
    Z1, W1 = chain_expansion(chain, curve, corrections + 3, M)
    return reduce_expansion(Z1, W1, curve, corrections)


_DATA_FILE = os.path.join(os.path.dirname(__file__), "data", "default_series.json")


def load_series(chain: mapchain.MapChain, curve: CurveSeries, M: int, corrections: int,
                path: str = _DATA_FILE) -> Optional[SeriesData]:
    """Shipped series if its fingerprint matches ``(chain, curve, M, corrections)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            blob = json.load(fh)
    except OSError:
        return None
    if blob.get("fingerprint") != _fingerprint(chain, curve, M, corrections):
        return None
    return series_from_dict(blob["series"])


def save_series(data: SeriesData, chain: mapchain.MapChain, curve: CurveSeries, M: int,
                corrections: int, path: str = _DATA_FILE) -> None:
    blob = {"fingerprint": _fingerprint(chain, curve, M, corrections),
            "series": series_to_dict(data)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh, indent=0)
        fh.write("\n")


def build_machine(chain: Optional[mapchain.MapChain] = None, curve: Optional[CurveSeries] = None,
                  params: Optional[RegionParams] = None, M: int = DEFAULT_U_ORDER,
                  corrections: int = DEFAULT_CORRECTIONS, use_cache: bool = True,
                  **kw) -> FatouMachine:
    """Machine for ``chain``; the shipped series are reused when they match."""
    default = chain is None
    chain = chain or mapchain.default_chain()
    curve = curve or default_curve()
    data = load_series(chain, curve, M, corrections) if use_cache else None
    if data is None:
        data = build_series(chain, curve, M, corrections)
    return FatouMachine(data, curve, params, None if default else chain, **kw)


_DEFAULT: dict = {}


def default_machine() -> FatouMachine:
    if "m" not in _DEFAULT:
        _DEFAULT["m"] = build_machine()
    return _DEFAULT["m"]


def solve_beta(y: complex, machine: Optional[FatouMachine] = None, method: str = "series"):
    """``beta(y)`` for ``y`` in ``U_R``: asymptotic series, or the ODE oracle."""
    machine = machine or default_machine()
    if not regions.in_U(y, machine.params.R):
        raise ValueError("y lies outside U_R")
    if method == "series":
        return complex(machine.beta(1 / complex(y)))
    if method == "ode":
        return machine.solve_beta_ode(y)
    raise ValueError(f"unknown method {method!r}")


def psi(p, machine: Optional[FatouMachine] = None, **kw) -> PsiValue:
    return (machine or default_machine()).psi(p, **kw)


def mu(x, y, machine: Optional[FatouMachine] = None, n: Optional[int] = None) -> PsiValue:
    return (machine or default_machine()).mu(x, y, n)


def theta(p, machine: Optional[FatouMachine] = None, **kw):
    return (machine or default_machine()).theta(p, **kw)


def to_xy(p, curve: Optional[CurveSeries] = None):
    curve = curve or default_curve()
    z, w = complex(p[0]), complex(p[1])
    u = w - complex(curve(z))
    if z == 0 or u == 0:
        raise ValueError("chart pole: point on the axis or on the curve")
    return 1 / z, 1 / u


def from_xy(x, y, curve: Optional[CurveSeries] = None):
    curve = curve or default_curve()
    z = 1 / complex(x)
    return z, 1 / complex(y) + complex(curve(z))
