"""Fiber coordinate and the global map ``G = (psi, Upsilon)``.

Along an orbit the Fatou coordinate moves by exactly ``-1`` per step, so the
second chart coordinate ``y`` is the only free variable on a fiber
``psi = t``.  The fiber coordinate is the limit of

    xi_n = xi_hat(t - n, x_n, y_n),
    xi_hat(t, x, y) = y - kappa log y + log t + tau_0(1/y) + (corrections),

where the corrections are terms ``x**-i (log x)**a (log y)**b f(1/y)`` and
``c y x**-j`` that cancel the increments order by order.  Under matched
truncation ``t_N = mu(x_N, y_N)``, so ``Upsilon(F p)`` with ``N - 1`` steps
and ``Upsilon(p)`` with ``N`` steps read the same orbit point.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import regions
from .fatou import FatouMachine, NotInBasin, PsiValue, default_machine, log_cut


@dataclass
class FiberPoint:
    """A point of the fiber ``psi = t`` with its fiber coordinate."""

    t: complex
    y: complex
    upsilon: complex
    err_est: float
    z: complex = 0j
    w: complex = 0j

    def closeness_ok(self) -> bool:
        """``|Upsilon - y| < 2 log|y| + log|t|``."""
        return abs(self.upsilon - self.y) < 2 * math.log(abs(self.y)) + math.log(abs(self.t))


def _machine(machine: Optional[FatouMachine]) -> FatouMachine:
    return machine or default_machine()


def _xi_tail(m: FatouMachine, t_prev: complex, q_prev, t_last: complex, q_last) -> float:
    """Tail estimate from one high-precision increment at the end of the orbit."""
    import mpmath
    with mpmath.workdps(30):
        z, w = mpmath.mpc(complex(q_prev[0])), mpmath.mpc(complex(q_prev[1]))
        z1, w1 = m.fmap.chain.apply(z, w, mpmath.exp, _frac)
        d = m.xi_hat_mp(mpmath.mpc(t_prev) - 1, z1, w1) - m.xi_hat_mp(mpmath.mpc(t_prev), z, w)
    x = abs(1 / complex(q_last[0]))
    return float(2 * abs(d) * x / 3)


def _frac(q):
    import mpmath
    return mpmath.mpf(q.numerator) / q.denominator


def xi(t: complex, y: complex, machine: Optional[FatouMachine] = None,
       n: Optional[int] = None) -> PsiValue:
    """``xi_n(t, y)``, by default in the limit mode (``n_tail`` steps).

    The orbit is realized by pulling ``(t, y)`` back to ``D`` through ``Theta``.
    """
    m = _machine(machine)
    if not regions.in_Dprime_ty(t, y, m.params):
        raise ValueError("(t, y) lies outside D'")
    p = m.theta_inverse(t, y)
    n = m.n_tail if n is None else int(n)
    zs, ws = m.fmap.forward_many(np.array([p[0]]), np.array([p[1]]), max(n - 1, 0))
    q_prev = (complex(zs[0]), complex(ws[0]))
    if n == 0:
        x, yy = m.to_xy(q_prev)
        return PsiValue(complex(m.xi_hat(t, x, yy)), math.inf, 0, 0)
    q = m.fmap.forward(*q_prev)
    x, yy = m.to_xy(q)
    val = complex(m.xi_hat(t - n, x, yy))
    err = _xi_tail(m, t - (n - 1), q_prev, t - n, q) + 16 * np.finfo(float).eps * abs(yy)
    return PsiValue(val, err, 0, n)


def _resolve_N(m: FatouMachine, p, N, strict, budget):
    from . import kernels
    if N is not None:
        return int(N), -1
    code, entry = m.first_entry(p, budget, strict)
    if code not in (kernels.CODE_BASIN_D, kernels.CODE_BASIN_DPRIME):
        raise NotInBasin(f"no domain entry within the budget (code {code})")
    return entry + m.n_tail, entry


def global_map(p, machine: Optional[FatouMachine] = None, N: Optional[int] = None,
               strict: bool = False, budget: Optional[int] = None):
    """``(psi(p), Upsilon(p))`` from the common orbit point ``F^N(p)``."""
    m = _machine(machine)
    N, entry = _resolve_N(m, p, N, strict, budget)
    if N < 1:
        raise ValueError("N must be positive")
    zs, ws = m.fmap.forward_many(np.array([complex(p[0])]), np.array([complex(p[1])]), N - 1)
    q_prev = (complex(zs[0]), complex(ws[0]))
    q = m.fmap.forward(*q_prev)
    if not regions.in_D(q, m.params, m.curve):
        raise NotInBasin("F^N(p) is not in the coordinate domain")
    psi = m._value_after(complex(p[0]), complex(p[1]), N, entry)
    x, y = m.to_xy(q)
    tN = complex(m.mu0(x, y))
    ups = complex(m.xi_hat(tN, x, y))
    err = _xi_tail(m, tN + 1, q_prev, tN, q) + psi.err / max(abs(tN), 1.0) \
        + 16 * np.finfo(float).eps * abs(y)
    return psi, PsiValue(ups, err, entry, N)


def upsilon(p, machine: Optional[FatouMachine] = None, N: Optional[int] = None,
            strict: bool = False, budget: Optional[int] = None) -> PsiValue:
    """Fiber coordinate of ``p`` (matched truncation ``t_N = mu(F^N p)``)."""
    return global_map(p, machine, N, strict, budget)[1]


def global_map_many(zs, ws, N: int, machine: Optional[FatouMachine] = None):
    """Vectorized ``(psi, Upsilon)`` for points known to be in ``D``."""
    m = _machine(machine)
    zN, wN = m.fmap.forward_many(np.asarray(zs, np.complex128), np.asarray(ws, np.complex128), int(N))
    x, y = m.to_xy((zN, wN))
    tN = m.mu0(x, y)
    return tN + N, m.xi_hat(tN, x, y)


def xi_limit_many(t, y, machine: Optional[FatouMachine] = None, N: Optional[int] = None):
    """Limit ``xi(t, y)`` for arrays of points of ``D'`` (no error estimate)."""
    m = _machine(machine)
    N = m.n_tail if N is None else int(N)
    z, w = m.theta_inverse_many(t, y, N=N)
    return global_map_many(z, w, N, m)[1]


def trace_fiber(t: complex, ys, machine: Optional[FatouMachine] = None) -> list:
    """Points of the fiber ``psi = t`` at the given ``y`` values.

    A predictor-corrector march: each solve starts from the previous ``x``
    (the predictor) and Newton corrects ``psi - t`` in ``x``.
    """
    m = _machine(machine)
    out = []
    guess = None
    for y in ys:
        z, w = m.theta_inverse_many(t, y, guess=guess)
        guess = 1 / z[0]
        p = (complex(z[0]), complex(w[0]))
        psi_v, ups = global_map(p, m, N=m.n_tail)
        out.append(FiberPoint(complex(t), complex(y), ups.value, ups.err + psi_v.err, p[0], p[1]))
    return out


def fiber_csv(points) -> str:
    """CSV ``re_t,im_t,re_z,im_z,re_w,im_w,re_upsilon,im_upsilon``."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["re_t", "im_t", "re_z", "im_z", "re_w", "im_w", "re_upsilon", "im_upsilon"])
    for fp in points:
        wr.writerow([repr(v) for v in (fp.t.real, fp.t.imag, fp.z.real, fp.z.imag,
                                       fp.w.real, fp.w.imag, fp.upsilon.real, fp.upsilon.imag)])
    return buf.getvalue()


def invert_fiber(t: complex, eta, n: int, machine: Optional[FatouMachine] = None,
                 tol: float = 1e-9, max_iter: int = 30):
    """``y_n`` with ``xi(t - n, y_n) = eta`` (Newton in ``y``); NaN where it fails."""
    m = _machine(machine)
    eta = np.atleast_1d(np.asarray(eta, np.complex128))
    tn = np.full(eta.shape, complex(t) - n)
    y = eta - log_cut(tn)
    y = y + m.kappa * log_cut(y)
    ok = np.zeros(eta.shape, bool)
    for _ in range(max_iter):
        inside = regions.in_Dprime_ty(tn, y, m.params)
        f = np.full(eta.shape, np.nan + 0j)
        if inside.any():
            f[inside] = xi_limit_many(tn[inside], y[inside], m) - eta[inside]
        ok = inside & (np.abs(f) < tol * np.maximum(1.0, np.abs(eta)))
        if ok.all() or not inside.any():
            break
        step = np.where(inside & ~ok, f / (1 - m.kappa / y), 0)
        y = y - step
    return np.where(ok, y, np.nan)


def fiber_coverage(t: complex, n: int, machine: Optional[FatouMachine] = None, grid: int = 12):
    """Grid test of ``Upsilon_t(W_n) ⊃ T'_{2R,n} + log n``.

    ``W_n`` is the set of ``p`` with ``psi(p) = t`` and ``F^n(p)`` in ``D'``.
    Returns counts of grid points in the translated sector, of those reached
    by ``Upsilon_t(W_n)``, and of those inside the disc ``|eta - log n| <
    |t - n|/2 - 2R`` that ``D'`` can reach at all.
    """
    m = _machine(machine)
    R = m.params.R
    lo, hi = 2 * R, float(n)
    if hi <= lo:
        return {"n": n, "grid_points": 0, "covered": 0, "reachable": 0, "reachable_covered": 0}
    rad = np.linspace(lo, hi, grid + 2)[1:-1]
    ang = np.linspace(-regions.NARROW_APERTURE, regions.NARROW_APERTURE, grid + 2)[1:-1]
    rr, aa = np.meshgrid(rad, ang)
    eta = (-rr * np.exp(1j * aa)).ravel() + math.log(n)
    y = invert_fiber(t, eta, n, m)
    covered = np.isfinite(y)
    reach = np.abs(eta - math.log(n)) < abs(complex(t) - n) / 2 - 2 * R
    return {"n": n, "grid_points": int(eta.size), "covered": int(covered.sum()),
            "reachable": int(reach.sum()), "reachable_covered": int((covered & reach).sum())}


def fiber_connectivity(t: complex, grid: int = 16, machine: Optional[FatouMachine] = None) -> dict:
    """Connected components of the sampled fiber ``psi = t`` inside ``D'``.

    A polar grid in ``y`` covers ``R < |y| < |t|/2`` across the sector; a
    cell is kept when ``Theta^-1(t, y)`` converges to a point of ``D``.
    Components use 4-neighbour adjacency on that grid.
    """
    from scipy import ndimage
    m = _machine(machine)
    R = m.params.R
    hi = abs(complex(t)) / 2
    if hi <= R:
        raise ValueError("|t| must exceed 2R")
    rad = np.linspace(R, hi, grid + 2)[1:-1]
    ang = np.linspace(-m.params.aperture, m.params.aperture, grid + 2)[1:-1]
    rr, aa = np.meshgrid(rad, ang)
    y = -rr * np.exp(1j * aa)
    z, w = m.theta_inverse_many(np.full(y.shape, complex(t)).ravel(), y.ravel(), strict=False)
    ok = np.isfinite(z) & np.isfinite(w)
    ok[ok] = np.asarray(regions.in_D((z[ok], w[ok]), m.params, m.curve))
    mask = ok.reshape(y.shape)
    _, count = ndimage.label(mask)
    return {"t": complex(t), "cells": int(mask.size), "on_fiber": int(mask.sum()),
            "components": int(count)}
