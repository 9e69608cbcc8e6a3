"""Sector domains and the certification of their parameters.

All sets are open and centred on the negative real axis.  Arguments are
measured as ``Arg(-z)``, so the sector axis sits in the middle of the
principal branch and never on a cut.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

APERTURE = math.pi / 8
NARROW_APERTURE = math.pi / 20


class CertificationError(ValueError):
    """Raised when region parameters fail a required inequality."""


def _arg_from_axis(v):
    """Angle between ``v`` and the negative real axis, in ``[0, pi]``."""
    return np.abs(np.angle(-np.asarray(v)))


def in_sector(v, rmin: float, rmax: float, aperture: float = APERTURE):
    """``rmin < |v| < rmax`` and ``|Arg(v) - pi| < aperture`` (vectorized)."""
    v = np.asarray(v, dtype=np.complex128)
    m = np.abs(v)
    out = (m > rmin) & (m < rmax) & (_arg_from_axis(v) < aperture)
    return bool(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RegionParams:
    """Sector radius ``eps`` and inner radius ``R``; validated on construction."""

    eps: float = 0.05
    R: float = 100.0
    aperture: float = APERTURE
    narrow_aperture: float = NARROW_APERTURE
    delta: float = 1e-3
    n_max: int = 100_000
    check: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.eps <= 0 or self.R <= 0:
            raise CertificationError("eps and R must be positive")
        if self.check:
            report = certify_params(self.eps, self.R, empirical=False)
            if not report.passed:
                bad = ", ".join(c.name for c in report.checks if not c.passed)
                raise CertificationError(f"parameters fail: {bad}")


def in_V(z, params: Optional[RegionParams] = None):
    """``0 < |z| < eps`` and ``|Arg(z) - pi| < pi/8``."""
    params = params or DEFAULT_PARAMS
    return in_sector(z, 0.0, params.eps, params.aperture)


def in_U(zeta, radius: float, aperture: float = APERTURE):
    """``|zeta| > radius`` and ``|Arg(zeta) - pi| < pi/8``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return in_sector(zeta, radius, math.inf, aperture)


def in_T(zeta, b: float, a: float, aperture: float = APERTURE):
    """Truncated sector ``b < |zeta| < a`` with the given aperture."""
    return in_sector(zeta, b, a, aperture)


def in_D(p, params: Optional[RegionParams] = None, curve=None):
    """``z, u in V_eps`` and ``|z| < |u|`` where ``u = w - gamma(z)``."""
    from .curve import default_curve
    params = params or DEFAULT_PARAMS
    curve = curve or default_curve()
    z = np.asarray(p[0], dtype=np.complex128)
    w = np.asarray(p[1], dtype=np.complex128)
    u = w - curve(z)
    out = in_V(z, params) & in_V(u, params) & (np.abs(z) < np.abs(u))
    return bool(out) if np.ndim(out) == 0 else out


def in_D_xy(x, y, params: Optional[RegionParams] = None):
    """``D`` in the chart ``(x, y) = (1/z, 1/u)``: ``x, y in U_{1/eps}``, ``|y| < |x|``."""
    params = params or DEFAULT_PARAMS
    R = 1.0 / params.eps
    out = in_U(x, R, params.aperture) & in_U(y, R, params.aperture) & (np.abs(y) < np.abs(x))
    return bool(out) if np.ndim(out) == 0 else out


def in_Dprime_ty(t, y, params: Optional[RegionParams] = None):
    """``t in U_{2R}``, ``y in U_R`` and ``|y| < |t|/2``."""
    params = params or DEFAULT_PARAMS
    out = in_U(t, 2 * params.R, params.aperture) & in_U(y, params.R, params.aperture) \
        & (np.abs(y) < np.abs(t) / 2)
    return bool(out) if np.ndim(out) == 0 else out


def in_Tprime(zeta, b: float, a: float):
    """Narrow truncated sector with aperture ``pi/20``."""
    return in_sector(zeta, b, a, NARROW_APERTURE)


def sample_V(n: int, eps: float, rng, aperture: float = APERTURE, rmin: float = 0.0):
    """Uniform-in-area samples of the sector ``V_eps`` (optionally ``|v| > rmin``)."""
    rad = np.sqrt(rng.uniform((rmin / eps) ** 2, 1.0, n)) * eps
    th = rng.uniform(-aperture, aperture, n)
    return -rad * np.exp(1j * th)


def sample_D(n: int, params: Optional[RegionParams] = None, curve=None, seed: int = 0,
             boundary: float = 0.0):
    """Points ``(z, w)`` of ``D``; ``boundary > 0`` pushes a share of them to its edges.

    With ``boundary = b`` a fraction ``b`` of the samples has the argument of
    ``z`` or ``u`` within 1e-3 of the sector edge, or ``|z|/|u|`` within 1e-3 of 1.
    """
    from .curve import default_curve
    params = params or DEFAULT_PARAMS
    curve = curve or default_curve()
    rng = np.random.default_rng(seed)
    ap = params.aperture
    u = sample_V(n, params.eps, rng, ap)
    ratio = rng.uniform(0.0, 1.0, n)
    z = -np.abs(u) * ratio * np.exp(1j * rng.uniform(-ap, ap, n))
    nb = int(round(boundary * n))
    if nb:
        kind = rng.integers(0, 3, nb)
        edge = ap * (1 - rng.uniform(0, 1e-3, nb)) * rng.choice([-1, 1], nb)
        zb, ub = z[:nb].copy(), u[:nb].copy()
        zb = np.where(kind == 0, -np.abs(zb) * np.exp(1j * edge), zb)
        ub = np.where(kind == 1, -np.abs(ub) * np.exp(1j * edge), ub)
        zb = np.where(kind == 2, zb / np.abs(zb) * np.abs(ub) * (1 - rng.uniform(0, 1e-3, nb)), zb)
        z[:nb], u[:nb] = zb, ub
    w = u + curve(z)
    keep = np.asarray(in_D((z, w), params, curve))
    return z[keep], w[keep]


# ---------------------------------------------------------------------------
# certification


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    passed: bool


@dataclass
class CertificationReport:
    eps: float
    R: float
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "R": self.R,
                "checks": [{"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "pass": c.passed}
                           for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def certify_params(eps: float, R: float, empirical: bool = True, machine=None,
                   n_samples: int = 720) -> CertificationReport:
    """Check every inequality the domain arguments rely on.

    The analytic checks are ``R >= 1/eps``, ``2R - 2 log 2R > R + 2 log R`` and
    ``2R sin(pi/8) > 4 log R``.  With ``empirical=True`` the series ``g``, ``h``
    and the asymptotic ``beta`` are sampled on the circle ``|y| = R`` of the
    sector and must satisfy ``|h| < 1/4``, ``|g| < 1/8`` and a truncation
    error below ``1e-12`` relative to ``|beta|``.  The contraction margin
    ``|r|/R + C/R + sup|d eta/dx| < 1`` uses ``C = sup |y beta(y)|`` on that
    arc and the measured slope of ``eta`` on ``D'``.
    """
    checks = []
    if eps <= 0 or R <= 0:
        return CertificationReport(eps, R, [Check("positive", min(eps, R), 0.0, False)])
    checks.append(Check("R >= 1/eps", R, 1.0 / eps, R >= 1.0 / eps * (1 - 1e-12)))
    lhs = 2 * R - 2 * math.log(2 * R)
    rhs = R + 2 * math.log(R)
    checks.append(Check("2R - 2log(2R) > R + 2log(R)", lhs, rhs, lhs > rhs))
    lhs = 2 * R * math.sin(math.pi / 8)
    rhs = 4 * math.log(R)
    checks.append(Check("2R sin(pi/8) > 4log(R)", lhs, rhs, lhs > rhs))
    if empirical:
        from . import fatou
        m = machine or fatou.default_machine()
        th = np.linspace(-APERTURE, APERTURE, n_samples)
        y = -R * np.exp(1j * th)
        u = 1 / y
        hmax = float(np.max(np.abs(m.h(u))))
        gmax = float(np.max(np.abs(m.g(u))))
        checks.append(Check("|h(1/y)| < 1/4 on |y| = R", hmax, 0.25, hmax < 0.25))
        checks.append(Check("|g(1/y)| < 1/8 on |y| = R", gmax, 0.125, gmax < 0.125))
        _, err = m.beta_with_error(u)
        rel = float(np.max(err / np.maximum(np.abs(m.beta(u)), 1e-300)))
        checks.append(Check("beta series truncation error on |y| = R", rel, 1e-12, rel < 1e-12))
        # x -> t at fixed y has derivative 1 + beta + r/x + d eta/dx; keep it off zero
        C = float(np.max(np.abs(y * m.beta(u))))
        lhs = abs(complex(m.r)) / R + C / R + m.measure_eta_slope()
        checks.append(Check("|r|/R + C/R + sup|d eta/dx| < 1", lhs, 1.0, lhs < 1))
    return CertificationReport(eps, R, checks)


DEFAULT_PARAMS = RegionParams()
