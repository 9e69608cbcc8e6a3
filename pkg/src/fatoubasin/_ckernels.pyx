# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: chain evaluation, batch iteration, orbit tracing and
escape classification.  Mirrors :mod:`fatoubasin._pykernels` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite, asin, INFINITY, M_PI, pow

cnp.import_array()

cdef extern from "<complex.h>" nogil:
    double complex cexp(double complex)
    double complex clog(double complex)
    double cabs(double complex)
    double carg(double complex)
    double creal(double complex)
    double cimag(double complex)

cdef double SECTOR = M_PI / 8.0


cdef inline double complex _poly(const double complex[:] row, int n, double complex x) noexcept nogil:
    cdef double complex acc = 0
    cdef int d
    for d in range(n - 1, -1, -1):
        acc = acc * x + row[d]
    return acc


cdef inline bint _finite(double complex v) noexcept nogil:
    return isfinite(creal(v)) and isfinite(cimag(v))


cdef inline void _apply(double complex* z, double complex* w,
                        const int[:] kinds, const int[:] axes, const int[:] ndeg,
                        const double complex[:, :] coefs) noexcept nogil:
    cdef int k, nk = kinds.shape[0]
    cdef double complex p, other
    cdef bint second
    for k in range(nk):
        second = axes[k] == 1
        if kinds[k] == 2:
            if second:
                w[0] = w[0] * coefs[k, 0]
            else:
                z[0] = z[0] * coefs[k, 0]
            continue
        other = z[0] if second else w[0]
        p = _poly(coefs[k], ndeg[k], other)
        if kinds[k] == 0:
            if second:
                w[0] = w[0] + p
            else:
                z[0] = z[0] + p
        else:
            if second:
                w[0] = w[0] * cexp(p)
            else:
                z[0] = z[0] * cexp(p)


def chain_apply(double complex z, double complex w, const int[:] kinds, const int[:] axes,
                const int[:] ndeg, const double complex[:, :] coefs):
    _apply(&z, &w, kinds, axes, ndeg, coefs)
    if not _finite(z) or not _finite(w):
        return complex("nan+nanj"), complex("nan+nanj")
    return z, w


def iterate_many(zs, ws, long n, const int[:] kinds, const int[:] axes,
                 const int[:] ndeg, const double complex[:, :] coefs):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] za = np.array(zs, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] wa = np.array(ws, dtype=np.complex128)
    cdef double complex[:] zv = za
    cdef double complex[:] wv = wa
    cdef Py_ssize_t i, m = zv.shape[0]
    cdef long it
    cdef double complex z, w
    with nogil:
        for i in range(m):
            z = zv[i]
            w = wv[i]
            for it in range(n):
                if not _finite(z) or not _finite(w):
                    break
                _apply(&z, &w, kinds, axes, ndeg, coefs)
            zv[i] = z
            wv[i] = w
    return za, wa


def orbit(double complex z, double complex w, long n, const int[:] kinds, const int[:] axes,
          const int[:] ndeg, const double complex[:, :] coefs):
    za = np.empty(n + 1, dtype=np.complex128)
    wa = np.empty(n + 1, dtype=np.complex128)
    cdef double complex[:] zv = za
    cdef double complex[:] wv = wa
    cdef long k, count = 1
    zv[0] = z
    wv[0] = w
    with nogil:
        for k in range(1, n + 1):
            _apply(&z, &w, kinds, axes, ndeg, coefs)
            if not _finite(z) or not _finite(w):
                break
            zv[k] = z
            wv[k] = w
            count += 1
    return za, wa, count


cdef inline bint _in_sector(double complex v, double lo, double hi) noexcept nogil:
    cdef double m = cabs(v)
    if not (lo < m and m < hi):
        return False
    return fabs(carg(-v)) < SECTOR


cdef inline double complex _log_cut(double complex v) noexcept nogil:
    return clog(-v) + 1j * M_PI


cdef inline double complex _mu0(double complex x, double complex y, double complex r,
                                double complex s, const double complex[:] beta,
                                const double complex[:] rho) noexcept nogil:
    cdef double complex u = 1.0 / y
    return (x + r * _log_cut(x) + s * _log_cut(y)
            + x * _poly(beta, beta.shape[0], u) + _poly(rho, rho.shape[0], u))


cdef inline bint _in_dprime(double complex x, double complex y, double R, double complex r,
                            double complex s, const double complex[:] beta,
                            const double complex[:] rho, double c_eta) noexcept nogil:
    cdef double complex t
    cdef double e, mt
    if not _in_sector(y, R, INFINITY):
        return False
    t = _mu0(x, y, r, s, beta, rho)
    e = c_eta / cabs(x)
    mt = cabs(t)
    if mt - e <= 2 * R or e >= mt:
        return False
    if fabs(carg(-t)) + asin(e / mt) >= SECTOR:
        return False
    return cabs(y) < (mt - e) / 2


def in_dprime_certified(double complex x, double complex y, double R, double complex r,
                        double complex s, const double complex[:] beta,
                        const double complex[:] rho, double c_eta):
    return bool(_in_dprime(x, y, R, r, s, beta, rho, c_eta))


def mu0(double complex x, double complex y, double complex r, double complex s,
        const double complex[:] beta, const double complex[:] rho):
    return _mu0(x, y, r, s, beta, rho)


def classify_many(zs, ws, long budget, const int[:] kinds, const int[:] axes,
                  const int[:] ndeg, const double complex[:, :] coefs,
                  const double complex[:] gamma, double eps, double R,
                  double complex r, double complex s, const double complex[:] beta,
                  const double complex[:] rho, double c_eta, double curve_m,
                  double curve_pow, double roundoff, bint accept_d):
    cdef const double complex[:] zin = np.ascontiguousarray(zs, dtype=np.complex128)
    cdef const double complex[:] win = np.ascontiguousarray(ws, dtype=np.complex128)
    cdef Py_ssize_t i, m = zin.shape[0]
    codes_a = np.zeros(m, dtype=np.int8)
    entry_a = np.full(m, -1, dtype=np.int64)
    cdef signed char[:] codes = codes_a
    cdef long long[:] entry = entry_a
    cdef long it
    cdef int ng = gamma.shape[0]
    cdef double complex z, w, g, u
    cdef double az, tol
    with nogil:
        for i in range(m):
            z = zin[i]
            w = win[i]
            if z == 0:
                codes[i] = 4
                continue
            for it in range(budget + 1):
                if not _finite(z) or not _finite(w):
                    break
                if _in_sector(z, 0.0, eps):
                    g = _poly(gamma, ng, z)
                    u = w - g
                    az = cabs(z)
                    tol = 10.0 * curve_m * pow(az, curve_pow) + roundoff * (cabs(w) + cabs(g))
                    if cabs(u) < tol:
                        codes[i] = 3
                        entry[i] = it
                        break
                    if _in_sector(u, 0.0, eps) and az < cabs(u):
                        if _in_dprime(1.0 / z, 1.0 / u, R, r, s, beta, rho, c_eta):
                            codes[i] = 1
                            entry[i] = it
                            break
                        if accept_d:
                            codes[i] = 2
                            entry[i] = it
                            break
                if it == budget:
                    break
                _apply(&z, &w, kinds, axes, ndeg, coefs)
    return codes_a, entry_a
