"""Pure-Python/numpy kernels; same contracts as the compiled ``_ckernels``.

Chains arrive encoded as ``(kinds, axes, ndeg, coefs)`` (see
:meth:`fatoubasin.mapchain.MapChain.encode`).
"""
from __future__ import annotations

import cmath
import math

import numpy as np

CODE_UNDECIDED = 0
CODE_BASIN_DPRIME = 1
CODE_BASIN_D = 2
CODE_ON_CURVE = 3
CODE_AXIS = 4

_SECTOR = math.pi / 8


def _poly(coefs_row, n, x):
    acc = 0j
    for d in range(n - 1, -1, -1):
        acc = acc * x + coefs_row[d]
    return acc


def chain_apply(z, w, kinds, axes, ndeg, coefs):
    for k in range(len(kinds)):
        kind = kinds[k]
        second = axes[k] == 1
        if kind == 2:
            c = coefs[k, 0]
            if second:
                w = w * c
            else:
                z = z * c
            continue
        other = z if second else w
        p = _poly(coefs[k], ndeg[k], other)
        if kind == 0:
            if second:
                w = w + p
            else:
                z = z + p
        else:
            try:
                f = cmath.exp(p)
            except OverflowError:
                return complex("nan+nanj"), complex("nan+nanj")
            if second:
                w = w * f
            else:
                z = z * f
    return z, w


def _chain_apply_vec(z, w, kinds, axes, ndeg, coefs):
    for k in range(len(kinds)):
        kind = kinds[k]
        second = axes[k] == 1
        if kind == 2:
            if second:
                w = w * coefs[k, 0]
            else:
                z = z * coefs[k, 0]
            continue
        other = z if second else w
        p = np.zeros_like(other)
        for d in range(ndeg[k] - 1, -1, -1):
            p = p * other + coefs[k, d]
        if kind == 0:
            if second:
                w = w + p
            else:
                z = z + p
        else:
            f = np.exp(p)
            if second:
                w = w * f
            else:
                z = z * f
    return z, w


def iterate_many(zs, ws, n, kinds, axes, ndeg, coefs):
    z = np.array(zs, dtype=np.complex128)
    w = np.array(ws, dtype=np.complex128)
    with np.errstate(all="ignore"):
        for _ in range(n):
            alive = np.isfinite(z) & np.isfinite(w)
            if not alive.any():
                break
            nz, nw = _chain_apply_vec(z[alive], w[alive], kinds, axes, ndeg, coefs)
            z[alive] = nz
            w[alive] = nw
    return z, w


def orbit(z, w, n, kinds, axes, ndeg, coefs):
    zs = np.empty(n + 1, dtype=np.complex128)
    ws = np.empty(n + 1, dtype=np.complex128)
    zs[0], ws[0] = z, w
    count = 1
    for k in range(1, n + 1):
        z, w = chain_apply(z, w, kinds, axes, ndeg, coefs)
        if not (cmath.isfinite(z) and cmath.isfinite(w)):
            break
        zs[k], ws[k] = z, w
        count += 1
    return zs, ws, count


def _in_sector(v, lo, hi):
    """``lo < |v| < hi`` and ``|Arg(v) - pi| < pi/8``."""
    m = abs(v)
    if not (lo < m < hi):
        return False
    return abs(cmath.phase(-v)) < _SECTOR


def _log_cut(v):
    """Logarithm with the cut on the positive real axis (arg in (0, 2 pi))."""
    return cmath.log(-v) + 1j * math.pi


def mu0(x, y, r, s, beta, rho):
    """Leading Fatou-coordinate approximant ``x + r log x + s log y + x beta(y) + rho(y)``."""
    u = 1 / y
    b = _poly(beta, len(beta), u)
    q = _poly(rho, len(rho), u)
    return x + r * _log_cut(x) + s * _log_cut(y) + x * b + q


def in_dprime_certified(x, y, R, r, s, beta, rho, c_eta):
    if not _in_sector(y, R, math.inf):
        return False
    t = mu0(x, y, r, s, beta, rho)
    e = c_eta / abs(x)
    mt = abs(t)
    if mt - e <= 2 * R or e >= mt:
        return False
    if abs(cmath.phase(-t)) + math.asin(e / mt) >= _SECTOR:
        return False
    return abs(y) < (mt - e) / 2


def classify_many(zs, ws, budget, kinds, axes, ndeg, coefs,
                  gamma, eps, R, r, s, beta, rho, c_eta,
                  curve_m, curve_pow, roundoff, accept_d):
    """Classify each seed; see :func:`fatoubasin.analysis.classify`.

    Returns ``(codes, entry)`` with ``entry = -1`` when no region was entered.
    """
    n = len(zs)
    codes = np.zeros(n, dtype=np.int8)
    entry = np.full(n, -1, dtype=np.int64)
    ng = len(gamma)
    for k in range(n):
        z, w = complex(zs[k]), complex(ws[k])
        if z == 0:
            codes[k] = CODE_AXIS
            continue
        for it in range(budget + 1):
            if not (cmath.isfinite(z) and cmath.isfinite(w)):
                break
            if _in_sector(z, 0.0, eps):
                g = _poly(gamma, ng, z)
                u = w - g
                az = abs(z)
                tol = 10.0 * curve_m * az ** curve_pow + roundoff * (abs(w) + abs(g))
                if abs(u) < tol:
                    codes[k] = CODE_ON_CURVE
                    entry[k] = it
                    break
                if _in_sector(u, 0.0, eps) and az < abs(u):
                    x, y = 1 / z, 1 / u
                    if in_dprime_certified(x, y, R, r, s, beta, rho, c_eta):
                        codes[k] = CODE_BASIN_DPRIME
                        entry[k] = it
                        break
                    if accept_d:
                        codes[k] = CODE_BASIN_D
                        entry[k] = it
                        break
            if it == budget:
                break
            z, w = chain_apply(z, w, kinds, axes, ndeg, coefs)
    return codes, entry
