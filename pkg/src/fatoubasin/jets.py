"""Truncated bivariate power series (jets) at the origin.

A :class:`Jet2` stores the coefficients of ``sum c[i, j] z**i w**j`` for
``i + j <= order``.  Two coefficient modes are supported:

``"rational"``
    coefficients are :class:`fractions.Fraction`; every operation is exact.
``"complex"``
    coefficients are binary64 complex numbers.

Maps fixing the origin are pairs of jets (:class:`MapJet`).  The module also
locates characteristic directions of a tangent-to-identity germ and computes
the director of a non-degenerate one.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

RATIONAL = "rational"
COMPLEX = "complex"
MODES = (RATIONAL, COMPLEX)

DEFAULT_ORDER = 8


class JetError(ValueError):
    """Mode or order mismatch, or an operation undefined on the given jet."""


def _zero(mode):
    return Fraction(0) if mode == RATIONAL else 0j


def _one(mode):
    return Fraction(1) if mode == RATIONAL else 1 + 0j


def _coerce(value, mode):
    if mode == RATIONAL:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, (int, np.integer)):
            return Fraction(int(value))
        if isinstance(value, str):
            return Fraction(value)
        raise JetError(f"cannot store {value!r} exactly in rational mode")
    return complex(value)


class Jet2:
    """Immutable truncated power series in ``(z, w)``.

    Parameters
    ----------
    order : int
        Total-degree truncation ``N``.
    coeffs : mapping ``(i, j) -> coefficient``
        Missing keys are zero; keys with ``i + j > order`` are dropped.
    mode : {"rational", "complex"}
    """

    __slots__ = ("order", "mode", "_c")

    def __init__(self, order: int, coeffs=None, mode: str = RATIONAL):
        if mode not in MODES:
            raise JetError(f"unknown coefficient mode {mode!r}")
        if order < 0:
            raise JetError("order must be non-negative")
        self.order = int(order)
        self.mode = mode
        dtype = object if mode == RATIONAL else np.complex128
        c = np.empty((order + 1, order + 1), dtype=dtype)
        c.fill(_zero(mode))
        if coeffs:
            for (i, j), v in coeffs.items():
                if i < 0 or j < 0:
                    raise JetError("negative exponent")
                if i + j <= order:
                    c[i, j] = _coerce(v, mode)
        self._c = c

    # -- construction helpers -------------------------------------------------
    @classmethod
    def _from_array(cls, order, mode, arr):
        jet = cls.__new__(cls)
        jet.order = order
        jet.mode = mode
        mask = np.add.outer(np.arange(order + 1), np.arange(order + 1)) > order
        arr = arr.copy()
        arr[mask] = _zero(mode)
        jet._c = arr
        return jet

    @classmethod
    def constant(cls, value, order: int, mode: str = RATIONAL) -> "Jet2":
        return cls(order, {(0, 0): value}, mode)

    @classmethod
    def var_z(cls, order: int, mode: str = RATIONAL) -> "Jet2":
        return cls(order, {(1, 0): 1}, mode)

    @classmethod
    def var_w(cls, order: int, mode: str = RATIONAL) -> "Jet2":
        return cls(order, {(0, 1): 1}, mode)

    # -- access ---------------------------------------------------------------
    def coeff(self, i: int, j: int):
        if i < 0 or j < 0 or i + j > self.order:
            return _zero(self.mode)
        return self._c[i, j]

    @property
    def coeffs(self) -> dict:
        """Nonzero coefficients keyed by ``(i, j)``."""
        out = {}
        for i in range(self.order + 1):
            for j in range(self.order + 1 - i):
                v = self._c[i, j]
                if v != 0:
                    out[(i, j)] = v
        return out

    def array(self) -> np.ndarray:
        return self._c.copy()

    def homogeneous(self, degree: int) -> dict:
        return {(i, degree - i): self._c[i, degree - i]
                for i in range(degree + 1)
                if degree <= self.order and self._c[i, degree - i] != 0}

    def is_zero(self) -> bool:
        return not self.coeffs

    def to_mode(self, mode: str) -> "Jet2":
        if mode == self.mode:
            return self
        if mode == COMPLEX:
            return Jet2._from_array(self.order, mode, self._c.astype(np.complex128))
        raise JetError("cannot convert a complex jet to rational mode")

    def truncate(self, order: int) -> "Jet2":
        if order > self.order:
            raise JetError("cannot raise the truncation order")
        return Jet2._from_array(order, self.mode, self._c[: order + 1, : order + 1])

    # -- arithmetic -----------------------------------------------------------
    def _check(self, other: "Jet2"):
        if not isinstance(other, Jet2):
            raise JetError("expected a Jet2")
        if other.order != self.order or other.mode != self.mode:
            raise JetError(
                f"jet mismatch: order {self.order}/{other.order}, "
                f"mode {self.mode}/{other.mode}")

    def _lift(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            return other
        return Jet2.constant(_coerce(other, self.mode), self.order, self.mode)

    def __add__(self, other):
        other = self._lift(other)
        return Jet2._from_array(self.order, self.mode, self._c + other._c)

    __radd__ = __add__

    def __neg__(self):
        return Jet2._from_array(self.order, self.mode, -self._c)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if isinstance(other, Jet2):
            return jet_mul(self, other)
        return Jet2._from_array(self.order, self.mode,
                                self._c * _coerce(other, self.mode))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise JetError("only non-negative integer powers")
        result = Jet2.constant(1, self.order, self.mode)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Jet2):
            return NotImplemented
        return (self.order == other.order and self.mode == other.mode
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.order, self.mode, tuple(sorted(self.coeffs.items()))))

    def __repr__(self):
        terms = ", ".join(f"z^{i}w^{j}: {v}" for (i, j), v in
                          sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), -kv[0][0])))
        return f"Jet2(order={self.order}, mode={self.mode}, {{{terms}}})"

    # -- evaluation -----------------------------------------------------------
    def __call__(self, z, w):
        """Evaluate the polynomial at a point (numbers or numpy arrays)."""
        total = 0
        for i in range(self.order, -1, -1):
            row = 0
            for j in range(self.order - i, -1, -1):
                c = self._c[i, j]
                row = row * w + (complex(c) if self.mode == RATIONAL else c)
            total = total * z + row
        return total

    def substitute(self, zj: "Jet2", wj: "Jet2") -> "Jet2":
        """Return ``self(zj, wj)``; both arguments must vanish at the origin."""
        self._check(zj)
        self._check(wj)
        if zj.coeff(0, 0) != 0 or wj.coeff(0, 0) != 0:
            raise JetError("substituted jets must fix the origin")
        N = self.order
        wpow = [Jet2.constant(1, N, self.mode)]
        for _ in range(N):
            wpow.append(wpow[-1] * wj)
        total = Jet2.constant(0, N, self.mode)
        for i in range(N, -1, -1):
            row = Jet2.constant(0, N, self.mode)
            for j in range(N - i + 1):
                c = self._c[i, j]
                if c != 0:
                    row = row + wpow[j] * c
            total = total * zj + row
        return total

    def divide_monomial(self, i: int, j: int) -> "Jet2":
        """Exact quotient by ``z**i w**j``; the result has order ``N - i - j``."""
        N = self.order - i - j
        if N < 0:
            raise JetError("order too small for the requested quotient")
        for a in range(self.order + 1):
            for b in range(self.order + 1 - a):
                if (a < i or b < j) and self._c[a, b] != 0:
                    raise JetError(f"jet is not divisible by z^{i} w^{j}")
        return Jet2._from_array(N, self.mode, self._c[i:i + N + 1, j:j + N + 1])

    def raise_order(self, order: int) -> "Jet2":
        """Pad with zeros; the caller vouches the padded terms are exact."""
        out = Jet2(order, None, self.mode)
        out._c[: self.order + 1, : self.order + 1] = self._c
        return out

    def d_dz(self) -> "Jet2":
        arr = np.empty_like(self._c)
        arr.fill(_zero(self.mode))
        for i in range(1, self.order + 1):
            arr[i - 1, :] = self._c[i, :] * i
        return Jet2._from_array(self.order, self.mode, arr)

    def d_dw(self) -> "Jet2":
        arr = np.empty_like(self._c)
        arr.fill(_zero(self.mode))
        for j in range(1, self.order + 1):
            arr[:, j - 1] = self._c[:, j] * j
        return Jet2._from_array(self.order, self.mode, arr)

    # -- serialization ----------------------------------------------------------
    def to_json(self) -> str:
        rows = []
        for (i, j), v in sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0][0])):
            if self.mode == RATIONAL:
                rows.append([i, j, f"{v.numerator}/{v.denominator}"])
            else:
                rows.append([i, j, [v.real, v.imag]])
        return json.dumps({"order": self.order, "coeffs": rows})

    @classmethod
    def from_json(cls, text: str) -> "Jet2":
        data = json.loads(text)
        rows = data["coeffs"]
        mode = COMPLEX if rows and isinstance(rows[0][2], list) else RATIONAL
        coeffs = {}
        for i, j, v in rows:
            coeffs[(i, j)] = complex(*v) if mode == COMPLEX else Fraction(v)
        return cls(data["order"], coeffs, mode)


def jet_mul(a: Jet2, b: Jet2) -> Jet2:
    """Product of two jets truncated at their common order."""
    a._check(b)
    N = a.order
    out = np.empty_like(a._c)
    out.fill(_zero(a.mode))
    for i in range(N + 1):
        ra = a._c[i, : N + 1 - i]
        if not ra.any():
            continue
        for k in range(N + 1 - i):
            rb = b._c[k, : N + 1 - i - k]
            if not rb.any():
                continue
            width = N + 1 - i - k
            out[i + k, :width] += np.convolve(ra[:width], rb)[:width]
    return Jet2._from_array(N, a.mode, out)


def _series_of(f_coeffs: Sequence, a: Jet2) -> Jet2:
    """``sum f_coeffs[m] * a**m`` for a jet without constant term (Horner)."""
    total = Jet2.constant(0, a.order, a.mode)
    for c in reversed(f_coeffs):
        total = total * a + c
    return total


def jet_exp(a: Jet2) -> Jet2:
    """Exponential of a jet with zero constant term."""
    if a.coeff(0, 0) != 0:
        raise JetError("jet_exp requires a zero constant term")
    N = a.order
    if a.mode == RATIONAL:
        coeffs = [Fraction(1, math.factorial(m)) for m in range(N + 1)]
    else:
        coeffs = [1.0 / math.factorial(m) for m in range(N + 1)]
    return _series_of(coeffs, a)


def jet_log1p(a: Jet2) -> Jet2:
    """``log(1 + a)`` for a jet with zero constant term."""
    if a.coeff(0, 0) != 0:
        raise JetError("jet_log1p requires a zero constant term")
    N = a.order
    if a.mode == RATIONAL:
        coeffs = [Fraction(0)] + [Fraction((-1) ** (m + 1), m) for m in range(1, N + 1)]
    else:
        coeffs = [0.0] + [(-1) ** (m + 1) / m for m in range(1, N + 1)]
    return _series_of(coeffs, a)


def jet_reciprocal(a: Jet2) -> Jet2:
    """``1 / a`` for a unit jet (nonzero constant term)."""
    c0 = a.coeff(0, 0)
    if c0 == 0:
        raise JetError("only units can be inverted")
    t = a * (1 / c0 if a.mode == COMPLEX else Fraction(1) / c0) - 1
    coeffs = [(-1) ** m for m in range(a.order + 1)]
    if a.mode == RATIONAL:
        coeffs = [Fraction(c) for c in coeffs]
    inv = _series_of(coeffs, t)
    return inv * (1 / c0 if a.mode == COMPLEX else Fraction(1) / c0)


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class MapJet:
    """Jet of a map ``(z, w) -> (first, second)`` fixing the origin."""

    first: Jet2
    second: Jet2

    def __post_init__(self):
        self.first._check(self.second)
        if self.first.coeff(0, 0) != 0 or self.second.coeff(0, 0) != 0:
            raise JetError("map jets must fix the origin")

    @property
    def order(self) -> int:
        return self.first.order

    @property
    def mode(self) -> str:
        return self.first.mode

    @classmethod
    def identity(cls, order: int = DEFAULT_ORDER, mode: str = RATIONAL) -> "MapJet":
        return cls(Jet2.var_z(order, mode), Jet2.var_w(order, mode))

    def is_tangent_to_identity(self) -> bool:
        f, s = self.first, self.second
        return (f.coeff(1, 0) == 1 and f.coeff(0, 1) == 0
                and s.coeff(1, 0) == 0 and s.coeff(0, 1) == 1)

    def homogeneous(self, degree: int) -> tuple[dict, dict]:
        return self.first.homogeneous(degree), self.second.homogeneous(degree)

    def nonlinear_order(self) -> int:
        """``nu(F)``: degree of the lowest nonvanishing nonlinear homogeneous part."""
        for k in range(2, self.order + 1):
            p, q = self.homogeneous(k)
            if p or q:
                return k
        raise JetError("nonlinear part vanishes identically up to the jet order")

    def __call__(self, z, w):
        return self.first(z, w), self.second(z, w)

    def to_mode(self, mode: str) -> "MapJet":
        return MapJet(self.first.to_mode(mode), self.second.to_mode(mode))


def map_compose(outer: MapJet, inner: MapJet) -> MapJet:
    """Jet of ``outer o inner``."""
    if outer.order != inner.order or outer.mode != inner.mode:
        raise JetError("map jets must share order and mode")
    return MapJet(outer.first.substitute(inner.first, inner.second),
                  outer.second.substitute(inner.first, inner.second))


# ---------------------------------------------------------------------------
# characteristic directions


@dataclass(frozen=True)
class CharacteristicDirection:
    """Projective direction ``[v1 : v2]`` with ``P_k(v) = lambda * v``."""

    direction: tuple
    lam: object
    degenerate: bool
    multiplicity: int = 1

    def vector(self) -> tuple:
        return self.direction


def _homog_eval(part: dict, a, b):
    return sum((c * a ** i * b ** j for (i, j), c in part.items()), 0)


def _chart_polynomial(p: dict, q: dict, k: int, mode: str) -> list:
    """Coefficients (ascending in u) of ``r(u) = Q(1, u) - u P(1, u)``."""
    zero = _zero(mode)
    r = [zero] * (k + 2)
    for (i, j), c in q.items():
        r[j] += c
    for (i, j), c in p.items():
        r[j + 1] -= c
    while len(r) > 1 and r[-1] == 0:
        r.pop()
    return r


def _poly_roots(coeffs: list, mode: str) -> list[tuple[object, int]]:
    """Roots with multiplicities; exact (sympy) in rational mode."""
    if all(c == 0 for c in coeffs):
        raise JetError("r(u) vanishes identically: every direction is characteristic")
    if len(coeffs) == 1:
        return []
    if mode == RATIONAL:
        import sympy
        u = sympy.Symbol("u")
        poly = sympy.Poly(sum(sympy.Rational(c.numerator, c.denominator) * u ** n
                              for n, c in enumerate(coeffs)), u)
        out = []
        for root, mult in sympy.roots(poly).items():
            if root.is_rational:
                out.append((Fraction(int(root.p), int(root.q)), mult))
            else:
                out.append((complex(sympy.N(root, 30)), mult))
        return out
    raw = np.roots(np.array(coeffs[::-1], dtype=complex))
    out: list[tuple[object, int]] = []
    for root in raw:
        for n, (prev, m) in enumerate(out):
            if abs(prev - root) < 1e-8:
                out[n] = (prev, m + 1)
                break
        else:
            out.append((complex(root), 1))
    return out


def characteristic_directions(m: MapJet) -> list[CharacteristicDirection]:
    """All characteristic directions of a tangent-to-identity jet.

    Directions are normalised so that the larger-modulus entry equals 1.
    """
    if not m.is_tangent_to_identity():
        raise JetError("map jet is not tangent to the identity")
    k = m.nonlinear_order()
    p, q = m.homogeneous(k)
    mode = m.mode
    out = []
    for u0, mult in _poly_roots(_chart_polynomial(p, q, k, mode), mode):
        lam = _homog_eval(p, _one(mode), u0)
        if abs(u0) <= 1:
            direction = (_one(mode), u0)
        else:
            direction = (1 / u0, _one(mode))
        out.append(CharacteristicDirection(direction, lam, lam == 0 if mode == RATIONAL
                                           else abs(lam) < 1e-12, mult))
    if _homog_eval(p, 0, _one(mode)) == 0:
        lam = _homog_eval(q, 0, _one(mode))
        out.append(CharacteristicDirection((_zero(mode), _one(mode)), lam,
                                           lam == 0 if mode == RATIONAL else abs(lam) < 1e-12))
    return out


def director(m: MapJet, d: CharacteristicDirection):
    """Director ``r'(u0) / P_k(1, u0)`` of a non-degenerate direction in the chart ``[1 : u]``."""
    if d.degenerate:
        raise JetError("directors are defined for non-degenerate directions only")
    v1, v2 = d.direction
    if v1 == 0:
        raise JetError("direction [0:1] lies outside the chart [1:u]; swap coordinates first")
    u0 = v2 / v1
    k = m.nonlinear_order()
    p, q = m.homogeneous(k)
    r = _chart_polynomial(p, q, k, m.mode)
    dr = sum((n * c * u0 ** (n - 1) for n, c in enumerate(r) if n), _zero(m.mode))
    return dr / _homog_eval(p, _one(m.mode), u0)


def residual_norm(m: MapJet, d: CharacteristicDirection):
    """``|P_k(v) - lambda v|`` (exactly zero in rational mode)."""
    k = m.nonlinear_order()
    p, q = m.homogeneous(k)
    v1, v2 = d.direction
    e1 = _homog_eval(p, v1, v2) - d.lam * v1
    e2 = _homog_eval(q, v1, v2) - d.lam * v2
    return max(abs(e1), abs(e2))


def univariate_compose(coeffs: Iterable, a: Jet2) -> Jet2:
    """``sum coeffs[m] * a**m`` where ``a`` has no constant term."""
    coeffs = list(coeffs)[: a.order + 1]
    return _series_of(coeffs, a)


# ---------------------------------------------------------------------------
# anisotropic truncation


def _u_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = len(a)
    return np.convolve(a, b)[:n]


def _u_inv(a: np.ndarray) -> np.ndarray:
    if a[0] == 0:
        raise JetError("only units can be inverted")
    n = len(a)
    out = np.empty(n, dtype=a.dtype)
    out.fill(0)
    out[0] = 1 / a[0]
    for k in range(1, n):
        out[k] = -np.dot(a[1:k + 1], out[k - 1::-1][:k]) / a[0]
    return out


def _u_exp(a: np.ndarray) -> np.ndarray:
    """``exp`` of a univariate series with zero constant term (``E' = a' E``)."""
    if a[0] != 0:
        raise JetError("exp requires a zero constant term")
    n = len(a)
    out = np.empty(n, dtype=a.dtype)
    out.fill(0)
    out[0] = 1
    da = np.array([k * a[k] for k in range(n)], dtype=a.dtype)
    for k in range(1, n):
        out[k] = np.dot(da[1:k + 1], out[k - 1::-1][:k]) / k
    return out


def _u_log(a: np.ndarray) -> np.ndarray:
    """``log`` of a univariate series with constant term 1."""
    if a[0] != 1:
        raise JetError("log requires constant term 1")
    n = len(a)
    da = np.array([k * a[k] for k in range(n)], dtype=a.dtype)
    q = _u_mul(da, _u_inv(a))
    out = np.empty(n, dtype=a.dtype)
    out.fill(0)
    for k in range(1, n):
        out[k] = q[k] / k
    return out


class ZUSeries:
    """Series in ``(z, u)`` truncated at degree ``K`` in ``z`` and ``M`` in ``u``.

    Used where one variable is needed to high order and the other only to
    a few orders (expansions in ``u`` at fixed low powers of ``z``).
    Coefficients are exact rationals.
    """

    __slots__ = ("K", "M", "c")

    def __init__(self, K: int, M: int, c=None):
        self.K, self.M = K, M
        if c is None:
            c = np.empty((K + 1, M + 1), dtype=object)
            c.fill(Fraction(0))
        self.c = c

    @classmethod
    def const(cls, v, K, M):
        s = cls(K, M)
        s.c[0, 0] = Fraction(v)
        return s

    @classmethod
    def z(cls, K, M):
        s = cls(K, M)
        s.c[1, 0] = Fraction(1)
        return s

    @classmethod
    def u(cls, K, M):
        s = cls(K, M)
        s.c[0, 1] = Fraction(1)
        return s

    @classmethod
    def from_u(cls, series, K, M):
        s = cls(K, M)
        for j, v in enumerate(list(series)[: M + 1]):
            s.c[0, j] = Fraction(v)
        return s

    def _new(self, c):
        return ZUSeries(self.K, self.M, c)

    def zpart(self, i: int) -> np.ndarray:
        """Coefficient of ``z**i`` as a series in ``u``."""
        return self.c[i].copy()

    def __add__(self, o):
        if isinstance(o, ZUSeries):
            return self._new(self.c + o.c)
        out = self.c.copy()
        out[0, 0] += Fraction(o)
        return self._new(out)

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.c)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, ZUSeries):
            return self._new(self.c * Fraction(o))
        out = np.empty_like(self.c)
        out.fill(Fraction(0))
        for i in range(self.K + 1):
            if not self.c[i].any():
                continue
            for k in range(self.K + 1 - i):
                if o.c[k].any():
                    out[i + k] += _u_mul(self.c[i], o.c[k])
        return self._new(out)

    __rmul__ = __mul__

    def _split(self):
        """``(a0, N)`` with ``a0`` the ``z**0`` part and ``N`` nilpotent."""
        n = self._new(self.c.copy())
        n.c[0].fill(Fraction(0))
        return self.c[0].copy(), n

    def _times_u_series(self, s: np.ndarray):
        out = np.empty_like(self.c)
        for i in range(self.K + 1):
            out[i] = _u_mul(self.c[i], s)
        return self._new(out)

    def exp(self):
        a0, nil = self._split()
        total = ZUSeries.const(1, self.K, self.M)
        term = ZUSeries.const(1, self.K, self.M)
        for m in range(1, self.K + 1):
            term = term * nil * Fraction(1, m)
            total = total + term
        return total._times_u_series(_u_exp(a0))

    def reciprocal(self):
        a0, nil = self._split()
        inv0 = _u_inv(a0)
        q = nil._times_u_series(inv0)
        total = ZUSeries.const(1, self.K, self.M)
        term = ZUSeries.const(1, self.K, self.M)
        for _ in range(self.K):
            term = -(term * q)
            total = total + term
        return total._times_u_series(inv0)

    def log(self):
        a0, nil = self._split()
        q = nil._times_u_series(_u_inv(a0))
        total = ZUSeries.from_u(_u_log(a0), self.K, self.M)
        term = ZUSeries.const(1, self.K, self.M)
        for m in range(1, self.K + 1):
            term = term * q
            total = total + term * Fraction((-1) ** (m + 1), m)
        return total

    def shift_z(self, n: int = 1):
        """Exact quotient by ``z**n``; the top ``n`` degrees in ``z`` become unknown (zero)."""
        if self.c[:n].any():
            raise JetError(f"series is not divisible by z^{n}")
        out = np.empty_like(self.c)
        out.fill(Fraction(0))
        out[: self.K + 1 - n] = self.c[n:]
        return self._new(out)

    def shift_u(self, n: int = 1):
        """Exact quotient by ``u**n``; the top ``n`` degrees in ``u`` become unknown (zero)."""
        if self.c[:, :n].any():
            raise JetError(f"series is not divisible by u^{n}")
        out = np.empty_like(self.c)
        out.fill(Fraction(0))
        out[:, : self.M + 1 - n] = self.c[:, n:]
        return self._new(out)

    def compose_poly(self, coeffs):
        """``sum coeffs[m] self**m`` (Horner); ``self`` must vanish at the origin."""
        if self.c[0, 0] != 0:
            raise JetError("composition needs a zero constant term")
        total = ZUSeries(self.K, self.M)
        for v in reversed(list(coeffs)):
            total = total * self + Fraction(v)
        return total

    def compose_u_series(self, b, base=None):
        """``b(V)`` for ``V = u + delta`` with ``delta`` divisible by ``z``.

        ``b`` is a univariate series in ``u``; the Taylor expansion in
        ``delta`` terminates at order ``K``.
        """
        b = np.array([Fraction(v) for v in list(b)[: self.M + 1]]
                     + [Fraction(0)] * max(0, self.M + 1 - len(b)), dtype=object)
        delta = self - ZUSeries.u(self.K, self.M)
        if delta.c[0].any():
            raise JetError("argument must equal u modulo z")
        total = ZUSeries.from_u(b, self.K, self.M)
        deriv = b
        power = ZUSeries.const(1, self.K, self.M)
        for m in range(1, self.K + 1):
            deriv = np.array([deriv[j + 1] * (j + 1) for j in range(self.M)] + [Fraction(0)],
                             dtype=object)
            power = power * delta * Fraction(1, m)
            total = total + power._times_u_series(deriv)
        return total
