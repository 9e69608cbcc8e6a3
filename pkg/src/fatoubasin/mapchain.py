"""The automorphism ``F`` as a composition of shears and overshears.

The default chain is

    F = phi^-1 o o2 o o1 o s2 o s1 o f4 o f3 o f2 o f1 o phi

with ``phi(z, w) = (z, 2w)``.  Every elementary map has a closed-form inverse,
so ``F^-1`` is evaluated exactly by running the reversed chain.
"""
from __future__ import annotations

import cmath
import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import jets
from .jets import Jet2, MapJet

SHEAR, OVERSHEAR, DIAGONAL = "shear", "overshear", "diagonal"
FIRST, SECOND = "first", "second"
_KIND_CODE = {SHEAR: 0, OVERSHEAR: 1, DIAGONAL: 2}
_AXIS_CODE = {FIRST: 0, SECOND: 1}


@dataclass(frozen=True)
class ElementaryMap:
    """One shear, overshear or diagonal scaling.

    ``axis`` names the coordinate that changes.  ``data`` holds the ascending
    polynomial coefficients of the shear function ``f`` or overshear exponent
    ``g`` in the *other* coordinate, or ``(c,)`` for a diagonal scale.

    =========  ==========================  ==========================
    kind       axis="second"               axis="first"
    =========  ==========================  ==========================
    shear      (z, w + f(z))               (z + f(w), w)
    overshear  (z, w exp(g(z)))            (z exp(g(w)), w)
    diagonal   (z, c w)                    (c z, w)
    =========  ==========================  ==========================
    """

    kind: str
    axis: str
    data: tuple
    label: str = ""

    def __post_init__(self):
        if self.kind not in _KIND_CODE or self.axis not in _AXIS_CODE:
            raise ValueError(f"bad elementary map {self.kind}/{self.axis}")
        data = tuple(Fraction(d) if not isinstance(d, Fraction) else d for d in self.data)
        object.__setattr__(self, "data", data)
        if self.kind == DIAGONAL and (len(data) != 1 or data[0] == 0):
            raise ValueError("diagonal maps need one nonzero scale")
        if self.kind == SHEAR and data and data[0] != 0:
            raise ValueError("shear functions must vanish at 0 to fix the origin")

    def inverse(self) -> "ElementaryMap":
        if self.kind == DIAGONAL:
            data = (1 / self.data[0],)
        else:
            data = tuple(-d for d in self.data)
        return ElementaryMap(self.kind, self.axis, data, self.label + "^-1")

    # generic evaluation; ``exp`` selects cmath, numpy or mpmath
    def apply(self, z, w, exp=cmath.exp, conv=float):
        other = z if self.axis == SECOND else w
        if self.kind == DIAGONAL:
            c = conv(self.data[0])
            return (z, w * c) if self.axis == SECOND else (z * c, w)
        poly = 0
        for c in reversed(self.data):
            poly = poly * other + conv(c)
        if self.kind == SHEAR:
            return (z, w + poly) if self.axis == SECOND else (z + poly, w)
        factor = exp(poly)
        return (z, w * factor) if self.axis == SECOND else (z * factor, w)

    def apply_jet(self, m: MapJet) -> MapJet:
        """Jet of ``self o m``."""
        z, w = m.first, m.second
        other = z if self.axis == SECOND else w
        if self.kind == DIAGONAL:
            c = self.data[0] if m.mode == jets.RATIONAL else complex(self.data[0])
            return MapJet(z, w * c) if self.axis == SECOND else MapJet(z * c, w)
        data = self.data if m.mode == jets.RATIONAL else [complex(d) for d in self.data]
        poly = jets.univariate_compose(data, other) if data else Jet2(m.order, None, m.mode)
        if self.kind == SHEAR:
            return MapJet(z, w + poly) if self.axis == SECOND else MapJet(z + poly, w)
        if poly.coeff(0, 0) != 0:
            factor = jets.jet_exp(poly - poly.coeff(0, 0))
            const = poly.coeff(0, 0)
            if m.mode == jets.RATIONAL:
                raise jets.JetError("exp of a nonzero rational constant is irrational")
            factor = factor * cmath.exp(const)
        else:
            factor = jets.jet_exp(poly)
        return MapJet(z, w * factor) if self.axis == SECOND else MapJet(z * factor, w)


@dataclass(frozen=True)
class MapChain:
    """Ordered elementary maps; ``maps[0]`` is applied first."""

    maps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))

    def __len__(self):
        return len(self.maps)

    def inverse(self) -> "MapChain":
        return MapChain(tuple(m.inverse() for m in reversed(self.maps)))

    def apply(self, z, w, exp=cmath.exp, conv=float):
        for m in self.maps:
            z, w = m.apply(z, w, exp, conv)
        return z, w

    def encode(self):
        """Flat arrays consumed by the compiled kernels."""
        n = len(self.maps)
        width = max([len(m.data) for m in self.maps] + [1])
        kinds = np.zeros(n, dtype=np.int32)
        axes = np.zeros(n, dtype=np.int32)
        ndeg = np.zeros(n, dtype=np.int32)
        coefs = np.zeros((n, width), dtype=np.complex128)
        for k, m in enumerate(self.maps):
            kinds[k] = _KIND_CODE[m.kind]
            axes[k] = _AXIS_CODE[m.axis]
            ndeg[k] = len(m.data)
            for d, c in enumerate(m.data):
                coefs[k, d] = float(c)
        return kinds, axes, ndeg, coefs


def default_chain() -> MapChain:
    """The ten-map chain producing the automorphism studied here."""
    h = Fraction(1, 2)
    return MapChain((
        ElementaryMap(DIAGONAL, SECOND, (2,), "phi"),
        ElementaryMap(SHEAR, SECOND, (0, 1), "f1"),
        ElementaryMap(OVERSHEAR, FIRST, (0, 1), "f2"),
        ElementaryMap(SHEAR, SECOND, (0, -1), "f3"),
        ElementaryMap(OVERSHEAR, FIRST, (0, -1), "f4"),
        ElementaryMap(SHEAR, SECOND, (0, 0, 1), "s1"),
        ElementaryMap(SHEAR, SECOND, (0, 0, 0, Fraction(-3, 2)), "s2"),
        ElementaryMap(OVERSHEAR, SECOND, (0, 1), "o1"),
        ElementaryMap(OVERSHEAR, SECOND, (0, 0, h), "o2"),
        ElementaryMap(DIAGONAL, SECOND, (h,), "phi^-1"),
    ))


def germ_of_chain(chain: MapChain, N: int = jets.DEFAULT_ORDER,
                  mode: str = jets.RATIONAL) -> MapJet:
    """Jet of the chain composition at the origin; checks tangency to the identity."""
    if N < 2:
        raise ValueError("jet order must be at least 2")
    m = MapJet.identity(N, mode)
    for e in chain.maps:
        m = e.apply_jet(m)
    if not m.is_tangent_to_identity():
        raise jets.JetError("chain is not tangent to the identity at the origin")
    return m


# ---------------------------------------------------------------------------
# closed forms


def closed_form(z, w, exp=cmath.exp):
    """``F`` from its explicit nested-exponential formulas."""
    e = exp(2 * w + z)
    a = exp(z * e)
    f1 = z * a
    b = exp(2 * z * e)
    c = exp(3 * z * e)
    f2 = (w + z / 2 - z / 2 * e + z * z / 2 * b - 3 * z ** 3 / 4 * c) * exp(z * a + z * z / 2 * b)
    return f1, f2


# ---------------------------------------------------------------------------
# evaluation front end


ESCALATE_MODULUS = 10.0


def stage_moduli(chain: MapChain, zs, ws):
    """Image of the chain (numpy, binary64) and the largest intermediate modulus per point."""
    z = np.asarray(zs, np.complex128)
    w = np.asarray(ws, np.complex128)
    mx = np.maximum(np.abs(z), np.abs(w))
    with np.errstate(all="ignore"):
        for e in chain.maps:
            z, w = e.apply(z, w, np.exp, float)
            mx = np.maximum(mx, np.maximum(np.abs(z), np.abs(w)))
    mx = np.where(np.isfinite(mx), mx, np.inf)
    return z, w, mx


class FMap:
    """Numerical evaluation of ``F`` and ``F^-1`` for a chain.

    ``precision="double"`` uses the kernels (compiled when available);
    ``precision="mp"`` evaluates the same chain in mpmath at ``dps`` digits.
    """

    def __init__(self, chain: Optional[MapChain] = None):
        from . import kernels
        self.chain = chain or default_chain()
        self.inverse_chain = self.chain.inverse()
        self._fwd = self.chain.encode()
        self._inv = self.inverse_chain.encode()
        self._k = kernels

    def forward(self, z, w):
        return self._k.chain_apply(complex(z), complex(w), *self._fwd)

    def inverse(self, z, w):
        return self._k.chain_apply(complex(z), complex(w), *self._inv)

    def forward_many(self, zs, ws, n: int = 1):
        return self._k.iterate_many(np.asarray(zs, np.complex128), np.asarray(ws, np.complex128),
                                    int(n), *self._fwd)

    def inverse_many(self, zs, ws, n: int = 1):
        return self._k.iterate_many(np.asarray(zs, np.complex128), np.asarray(ws, np.complex128),
                                    int(n), *self._inv)

    def round_trip(self, zs, ws, escalate: float = ESCALATE_MODULUS, dps: int = 60):
        """``|F^-1(F(p)) - p|`` for each point, with its evaluation mode.

        Points whose intermediate values (forward or backward) exceed
        ``escalate`` in modulus are redone in mpmath at ``dps`` digits: there
        the nested exponentials overflow or cancel in binary64.  The switch
        depends only on the intermediate moduli, never on the error itself.
        Returns ``(errors, escalated_mask)``.
        """
        import mpmath
        zs = np.asarray(zs, np.complex128)
        ws = np.asarray(ws, np.complex128)
        a, b, m1 = stage_moduli(self.chain, zs, ws)
        _, _, m2 = stage_moduli(self.inverse_chain, a, b)
        esc = ~(np.maximum(m1, m2) < escalate)
        fa, fb = self.forward_many(zs, ws, 1)
        ga, gb = self.inverse_many(fa, fb, 1)
        err = np.abs(ga - zs) + np.abs(gb - ws)
        with mpmath.workdps(dps):
            for i in np.flatnonzero(esc):
                z, w = mpmath.mpc(complex(zs[i])), mpmath.mpc(complex(ws[i]))
                A, B = self.chain.apply(z, w, mpmath.exp, _mp_const)
                C, D = self.inverse_chain.apply(A, B, mpmath.exp, _mp_const)
                err[i] = float(abs(C - z) + abs(D - w))
        return err, esc

    def forward_mp(self, z, w, dps: int = 50):
        import mpmath
        with mpmath.workdps(dps):
            return self.chain.apply(mpmath.mpc(z), mpmath.mpc(w), mpmath.exp, _mp_const)


def _mp_const(c: Fraction):
    import mpmath
    return mpmath.mpf(c.numerator) / c.denominator


_DEFAULT_F: Optional[FMap] = None


def default_map() -> FMap:
    global _DEFAULT_F
    if _DEFAULT_F is None:
        _DEFAULT_F = FMap()
    return _DEFAULT_F


def eval_forward(p, fmap: Optional[FMap] = None):
    """``F(p)`` through the elementary chain; non-finite output is returned as is."""
    fmap = fmap or default_map()
    return fmap.forward(*p)


def eval_inverse(p, fmap: Optional[FMap] = None):
    fmap = fmap or default_map()
    return fmap.inverse(*p)


def newton_inverse(p, fmap: Optional[FMap] = None, guess=None, tol: float = 1e-15,
                   max_iter: int = 50):
    """Solve ``F(q) = p`` by Newton's method with a finite-difference Jacobian."""
    fmap = fmap or default_map()
    q = np.array(guess if guess is not None else p, dtype=np.complex128)
    target = np.array(p, dtype=np.complex128)
    for _ in range(max_iter):
        fq = np.array(fmap.forward(*q))
        r = fq - target
        if np.max(np.abs(r)) <= tol * max(1.0, np.max(np.abs(target))):
            break
        h = 1e-7 * max(1.0, np.max(np.abs(q)))
        J = np.empty((2, 2), dtype=np.complex128)
        for k in range(2):
            dq = q.copy()
            dq[k] += h
            J[:, k] = (np.array(fmap.forward(*dq)) - fq) / h
        q = q - np.linalg.solve(J, r)
    return complex(q[0]), complex(q[1])


# ---------------------------------------------------------------------------
# orbits


@dataclass
class OrbitTrace:
    """Forward orbit ``points[n] = F^n(seed)``."""

    seed: tuple
    z: np.ndarray
    w: np.ndarray
    u: Optional[np.ndarray] = None
    truncated: bool = False

    @property
    def length(self) -> int:
        return len(self.z)

    @property
    def points(self):
        return list(zip(self.z, self.w))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "re_z", "im_z", "re_w", "im_w", "re_u", "im_u"])
        for n in range(self.length):
            z, w = complex(self.z[n]), complex(self.w[n])
            row = [n, repr(z.real), repr(z.imag), repr(w.real), repr(w.imag)]
            if self.u is not None:
                u = complex(self.u[n])
                row += [repr(u.real), repr(u.imag)]
            else:
                row += ["", ""]
            writer.writerow(row)
        return buf.getvalue()


def orbit(p, n: int, curve=None, fmap: Optional[FMap] = None) -> OrbitTrace:
    """Iterate ``n`` times from ``p``; stops early (flagged) on non-finite values."""
    if n < 0:
        raise ValueError("n must be non-negative")
    fmap = fmap or default_map()
    zs, ws, count = fmap._k.orbit(complex(p[0]), complex(p[1]), int(n), *fmap._fwd)
    zs, ws = zs[:count], ws[:count]
    u = None
    if curve is not None:
        u = ws - curve.gamma_array(zs)
    return OrbitTrace(tuple(p), zs, ws, u, truncated=count < n + 1)
