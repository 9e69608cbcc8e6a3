"""Orbit asymptotics, basin classification and rasters.

Classification codes of the compiled kernel map to verdicts and to PGM
grey levels as follows::

    kernel  verdict     PGM
    1, 2    basin       255
    3       on_curve    128
    4       axis         64
    0       undecided     0

A basin verdict means a certified hit of ``D'`` (``strict=True``) or of
``D`` (the default).  ``D`` is forward invariant and every orbit in it
reaches ``D'``, but for ``|u|`` of order ``1e-2`` that takes far more than
any practical budget because ``y`` grows only logarithmically.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels, mapchain, regions
from .curve import CurveSeries, default_curve
from .fatou import FatouMachine, default_machine

VERDICTS = {kernels.CODE_UNDECIDED: "undecided", kernels.CODE_BASIN_DPRIME: "basin",
            kernels.CODE_BASIN_D: "basin", kernels.CODE_ON_CURVE: "on_curve",
            kernels.CODE_AXIS: "axis"}
PGM_LEVELS = {"basin": 255, "on_curve": 128, "axis": 64, "undecided": 0}
_LEVEL_OF_CODE = np.zeros(5, np.uint8)
for _code, _verdict in VERDICTS.items():
    _LEVEL_OF_CODE[_code] = PGM_LEVELS[_verdict]


# ---------------------------------------------------------------------------
# asymptotics


def _fit(ns, vals):
    """Least-squares ``a + b / log n``; returns ``(a, b, residuals)``."""
    A = np.column_stack([np.ones(len(ns)), 1 / np.log(np.asarray(ns, float))])
    coef = np.linalg.lstsq(A, np.asarray(vals, np.complex128), rcond=None)[0]
    return complex(coef[0]), complex(coef[1]), np.asarray(vals) - A @ coef


@dataclass
class AsymptoticsReport:
    """Samples ``(n, n z_n, log(n) u_n)`` and limits fitted as ``a + b/log n``.

    ``a_u`` fits ``log(n) u_n`` directly; ``a_u_reciprocal`` fits
    ``1/(log(n) u_n)``, whose limit is also ``-1`` but whose correction is
    closer to the model.
    """

    seed: tuple
    samples: list
    a_z: complex
    b_z: complex
    a_u: complex
    b_u: complex
    a_u_reciprocal: complex
    residuals: dict = field(default_factory=dict)

    @property
    def deviations(self) -> list:
        """``|n z_n + 1|`` at the checkpoints."""
        return [abs(nz + 1) for _, nz, _ in self.samples]

    @property
    def decreasing(self) -> bool:
        d = self.deviations
        return all(b < a for a, b in zip(d, d[1:]))

    def to_dict(self) -> dict:
        c = lambda v: [v.real, v.imag]
        return {"seed": [c(complex(v)) for v in self.seed],
                "samples": [{"n": n, "n_z": c(nz), "logn_u": c(lu)} for n, nz, lu in self.samples],
                "a_z": c(self.a_z), "b_z": c(self.b_z), "a_u": c(self.a_u), "b_u": c(self.b_u),
                "a_u_reciprocal": c(self.a_u_reciprocal),
                "deviations": self.deviations, "decreasing": self.decreasing}


def orbit_checkpoints(p, checkpoints: Sequence[int], fmap: Optional[mapchain.FMap] = None):
    """``F^n(p)`` at increasing checkpoints, iterating in segments."""
    fmap = fmap or mapchain.default_map()
    cps = sorted(int(n) for n in checkpoints)
    z, w = np.array([complex(p[0])]), np.array([complex(p[1])])
    out, at = [], 0
    for n in cps:
        z, w = fmap.forward_many(z, w, n - at)
        if not (np.isfinite(z[0]) and np.isfinite(w[0])):
            raise ValueError("orbit left the numerical range")
        at = n
        out.append((n, complex(z[0]), complex(w[0])))
    return out


def asymptotics(seed=(-1e-3, -1e-2), checkpoints=(10 ** 4, 10 ** 5, 10 ** 6),
                trace: Optional[mapchain.OrbitTrace] = None,
                curve: Optional[CurveSeries] = None) -> AsymptoticsReport:
    """Fit the limits of ``n z_n`` and ``log(n) u_n`` along the orbit of ``seed``."""
    curve = curve or default_curve()
    if len(checkpoints) < 3:
        raise ValueError("at least three checkpoints are needed")
    if trace is not None:
        if trace.length <= max(checkpoints):
            raise ValueError("trace is shorter than the last checkpoint")
        pts = [(n, complex(trace.z[n]), complex(trace.w[n])) for n in checkpoints]
        seed = trace.seed
    else:
        pts = orbit_checkpoints(seed, checkpoints)
    samples = []
    for n, z, w in pts:
        u = w - complex(curve(z))
        samples.append((n, n * z, math.log(n) * u))
    ns = [s[0] for s in samples]
    a_z, b_z, rz = _fit(ns, [s[1] for s in samples])
    a_u, b_u, ru = _fit(ns, [s[2] for s in samples])
    inv, _, rinv = _fit(ns, [1 / s[2] for s in samples])
    return AsymptoticsReport(tuple(seed), samples, a_z, b_z, a_u, b_u, 1 / inv,
                             {"n_z": np.abs(rz).tolist(), "logn_u": np.abs(ru).tolist(),
                              "reciprocal": np.abs(rinv).tolist()})


# ---------------------------------------------------------------------------
# classification


@dataclass
class Classification:
    verdict: str
    entry_index: int
    budget: int
    certified_dprime: bool = False


def classify_many(zs, ws, budget: int = 1000, machine: Optional[FatouMachine] = None,
                  strict: bool = False):
    """Kernel codes and entry indices for arrays of points."""
    m = machine or default_machine()
    zs = np.ascontiguousarray(np.asarray(zs, np.complex128).ravel())
    ws = np.ascontiguousarray(np.asarray(ws, np.complex128).ravel())
    return kernels.classify_many(zs, ws, int(budget), *m.fmap._fwd,
                                 *m.kernel_args(accept_d=not strict))


def classify(p, budget: int = 1000, machine: Optional[FatouMachine] = None,
             strict: bool = False) -> Classification:
    """Verdict for one point: basin, on_curve, axis or undecided."""
    codes, entry = classify_many([complex(p[0])], [complex(p[1])], budget, machine, strict)
    code = int(codes[0])
    return Classification(VERDICTS[code], int(entry[0]) if code in (1, 2) else -1,
                          int(budget), code == kernels.CODE_BASIN_DPRIME)


# ---------------------------------------------------------------------------
# rasters


@dataclass(frozen=True)
class SliceSpec:
    """Affine slice ``p(s, t) = origin + s e_s + t e_t`` with a window in ``(s, t)``."""

    origin: tuple = (0j, -0.02 + 0j)
    e_s: tuple = (1 + 0j, 0j)
    e_t: tuple = (1j, 0j)
    s_range: tuple = (-0.05, 0.01)
    t_range: tuple = (-0.03, 0.03)

    def axis_values(self, lo: float, hi: float, n: int) -> np.ndarray:
        """Grid values symmetric about the window centre (exactly, for a centred window)."""
        c, h = (lo + hi) / 2, (hi - lo) / 2
        k = np.arange(n, dtype=float)
        return c + h * ((2 * k - (n - 1)) / (n - 1))

    def points(self, n1: int, n2: int):
        """``(z, w)`` arrays of shape ``(n2, n1)``; row 0 is the largest ``t``."""
        s = self.axis_values(*self.s_range, n1)
        t = self.axis_values(*self.t_range, n2)[::-1]
        S, T = np.meshgrid(s, t)
        z = self.origin[0] + S * self.e_s[0] + T * self.e_t[0]
        w = self.origin[1] + S * self.e_s[1] + T * self.e_t[1]
        return z, w

    def to_dict(self) -> dict:
        c = lambda v: [complex(v).real, complex(v).imag]
        return {"origin": [c(v) for v in self.origin], "e_s": [c(v) for v in self.e_s],
                "e_t": [c(v) for v in self.e_t], "s_range": list(self.s_range),
                "t_range": list(self.t_range)}

    @classmethod
    def at_w(cls, w: complex, s_range=(-0.05, 0.01), t_range=(-0.03, 0.03)) -> "SliceSpec":
        """The ``z``-plane at fixed ``w``."""
        return cls((0j, complex(w)), (1 + 0j, 0j), (1j, 0j), tuple(s_range), tuple(t_range))


DEFAULT_SLICE = SliceSpec()


@dataclass
class Raster:
    codes: np.ndarray
    entry: np.ndarray
    spec: SliceSpec
    budget: int
    strict: bool
    params: regions.RegionParams

    @property
    def levels(self) -> np.ndarray:
        return _LEVEL_OF_CODE[self.codes]

    def counts(self) -> dict:
        lv = self.levels
        return {k: int((lv == v).sum()) for k, v in PGM_LEVELS.items()}

    def boundary_cells(self) -> int:
        """Cells with a 4-neighbour of a different verdict."""
        lv = self.levels
        b = np.zeros(lv.shape, bool)
        b[:, 1:] |= lv[:, 1:] != lv[:, :-1]
        b[:, :-1] |= lv[:, 1:] != lv[:, :-1]
        b[1:, :] |= lv[1:, :] != lv[:-1, :]
        b[:-1, :] |= lv[1:, :] != lv[:-1, :]
        return int(b.sum())

    def pgm_bytes(self) -> bytes:
        lv = self.levels
        h, w = lv.shape
        return f"P5\n{w} {h}\n255\n".encode("ascii") + lv.tobytes()

    def sidecar(self) -> dict:
        h, w = self.codes.shape
        return {"slice": self.spec.to_dict(), "window": {"s": list(self.spec.s_range),
                                                        "t": list(self.spec.t_range)},
                "grid": [w, h], "budget": self.budget, "strict": self.strict,
                "eps": self.params.eps, "R": self.params.R, "levels": PGM_LEVELS,
                "counts": self.counts(), "boundary_cells": self.boundary_cells()}

    def write(self, path: str) -> str:
        """Write ``path`` (PGM) and ``path.json``; returns the sidecar path."""
        with open(path, "wb") as fh:
            fh.write(self.pgm_bytes())
        side = path + ".json"
        with open(side, "w", encoding="utf-8") as fh:
            json.dump(self.sidecar(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        return side


def raster(spec: SliceSpec = DEFAULT_SLICE, grid=(256, 256), budget: int = 1000,
           machine: Optional[FatouMachine] = None, strict: bool = False,
           workers: Optional[int] = None) -> Raster:
    """Classify every grid point of a slice; rows run concurrently.

    Every row writes only its own slot, so the result does not depend on
    scheduling.
    """
    n1, n2 = int(grid[0]), int(grid[1])
    if n1 < 2 or n2 < 2:
        raise ValueError("grid must be at least 2x2")
    m = machine or default_machine()
    z, w = spec.points(n1, n2)
    codes = np.zeros((n2, n1), np.int8)
    entry = np.zeros((n2, n1), np.int64)
    m.c_eta  # measure once before threads start

    def row(i):
        c, e = classify_many(z[i], w[i], budget, m, strict)
        codes[i], entry[i] = c, e

    with ThreadPoolExecutor(max_workers=workers) as ex:
        list(ex.map(row, range(n2)))
    return Raster(codes, entry, spec, int(budget), bool(strict), m.params)


# ---------------------------------------------------------------------------
# boundary structure and coverage


def curve_never_enters(zs, budget: int = 10 ** 4, offset: complex = -1e-3,
                       machine: Optional[FatouMachine] = None):
    """For each ``z``: ``(on-curve code, off-curve code)`` in strict mode.

    The on-curve point is ``(z, gamma(z))``; the off-curve one is shifted by
    ``offset`` in ``w``.
    """
    m = machine or default_machine()
    zs = np.asarray(zs, np.complex128)
    g = m.curve(zs)
    on, _ = classify_many(zs, g, budget, m, strict=True)
    off, entry = classify_many(zs, g + offset, budget, m, strict=True)
    return on, off, entry


def psi_coverage(center: complex = -200, radius: float = 50, grid: int = 11,
                 machine: Optional[FatouMachine] = None, pull_back: int = 1000,
                 y_star: complex = -300, tol: float = 1e-6) -> dict:
    """Check that ``psi`` attains every grid value in a disc.

    For a target ``t`` the point ``Theta^-1(t - n, y_star)`` is pulled back
    ``n`` steps with ``F^-1``; ``psi`` of the result is recomputed from its
    own forward orbit and compared with ``t``.
    """
    m = machine or default_machine()
    a = np.linspace(-radius, radius, grid)
    X, Y = np.meshgrid(a, a)
    t = (center + X + 1j * Y)[(X ** 2 + Y ** 2) <= radius ** 2]
    z, w = m.theta_inverse_many(t - pull_back, np.full(t.shape, complex(y_star)))
    zb, wb = m.fmap.inverse_many(z, w, pull_back)
    errs = []
    for p, target in zip(zip(zb, wb), t):
        errs.append(abs(m.psi(p).value - target))
    errs = np.array(errs)
    return {"points": int(t.size), "max_error": float(errs.max()),
            "covered": int((errs < tol).sum()), "tol": tol}


# ---------------------------------------------------------------------------
# verification suite


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": self.passed, "details": self.details}


def _suite_germ(m, cfg):
    from fractions import Fraction as Fr
    from . import jets
    g = mapchain.germ_of_chain(mapchain.default_chain(), max(4, cfg.get("order", 4)), jets.RATIONAL)
    want = {("first", 2, 0): Fr(1), ("second", 1, 2): Fr(-1), ("second", 4, 0): Fr(-1, 3),
            ("second", 3, 1): Fr(8, 3)}
    got = {k: getattr(g, k[0]).coeff(k[1], k[2]) for k in want}
    ok = got == want and g.is_tangent_to_identity()
    return ok, {f"{k[0]}[z^{k[1]} w^{k[2]}]": str(v) for k, v in got.items()}


def _suite_axis(m, cfg):
    rng = np.random.default_rng(3)
    w = 10 * np.sqrt(rng.uniform(0, 1, 100)) * np.exp(2j * np.pi * rng.uniform(0, 1, 100))
    z1, w1 = m.fmap.forward_many(np.zeros(100, complex), w, 1)
    axis = float(np.max(np.abs(z1) + np.abs(w1 - w)) / np.max(np.abs(w)))
    z = np.sqrt(rng.uniform(0, 1, 1000)) * np.exp(2j * np.pi * rng.uniform(0, 1, 1000))
    w = np.sqrt(rng.uniform(0, 1, 1000)) * np.exp(2j * np.pi * rng.uniform(0, 1, 1000))
    err, esc = m.fmap.round_trip(z, w)
    rt = float(np.max(err))
    return axis < 1e-14 and rt < 1e-12, {"axis_rel": axis, "round_trip": rt,
                                         "extended_precision_points": int(esc.sum())}


def _suite_directions(m, cfg):
    from fractions import Fraction as Fr
    from . import jets
    g = mapchain.germ_of_chain(mapchain.default_chain(), 4, jets.RATIONAL)
    ds = jets.characteristic_directions(g)
    found = sorted((tuple(str(v) for v in d.direction), str(d.lam), d.degenerate) for d in ds)
    nd = [d for d in ds if not d.degenerate]
    a = jets.director(g, nd[0]) if len(nd) == 1 else None
    want = sorted([(("1", "0"), "1", False), (("0", "1"), "0", True)])
    return found == want and a == Fr(-1), {"directions": [list(f) for f in found],
                                            "director": str(a)}


def _suite_curve(m, cfg):
    from fractions import Fraction as Fr
    from . import curve as cv
    c = m.curve
    oracle = tuple(Fr(v) for v in cv.graph_transform_oracle(c.order)[3:])
    agree = oracle == tuple(c.exact)
    slope = cv.residual_slope(c)[0]
    ok = c.exact[0] == Fr(-1, 9) and agree and slope >= 8.5 and math.isfinite(c.C1)
    return ok, {"gamma3": str(c.exact[0]), "oracle_agrees": agree,
                "residual_slope": slope, "C1": c.C1}


def _suite_regions(m, cfg):
    rep = regions.certify_params(m.params.eps, m.params.R, machine=m)
    z, w = regions.sample_D(cfg.get("samples", 10 ** 4), m.params, m.curve, seed=11)
    z1, w1 = m.fmap.forward_many(z, w, 1)
    bad = int((~np.asarray(regions.in_D((z1, w1), m.params, m.curve))).sum())
    return rep.passed and bad == 0, {"certified": rep.passed, "samples": int(len(z)),
                                     "violations": bad}


def _suite_asymptotics(m, cfg):
    rep = asymptotics()
    n, nz, lu = rep.samples[-1]
    ok = abs(nz + 1) < 0.1 and abs(rep.a_u_reciprocal + 1) < 0.15
    return ok, {"n": n, "n_z": [nz.real, nz.imag], "a_u_reciprocal": rep.a_u_reciprocal.real,
                "a_z_fit": rep.a_z.real, "decreasing": rep.decreasing}


def _suite_fatou(m, cfg):
    from . import fatou as ft
    x, y = m.sample_dprime_xy(20, seed=5)
    z, w = m.from_xy(x, y)
    nmax = cfg.get("telescope_n", 1000)
    worst = 0.0
    for p in zip(z, w):
        zs, ws, cnt = kernels.orbit(complex(p[0]), complex(p[1]), nmax + 1, *m.fmap._fwd)
        xs, ys = m.to_xy((zs[:cnt], ws[:cnt]))
        mu = m.mu0(xs, ys) + np.arange(cnt)
        q = m.fmap.forward(*p)
        zq, wq, cq = kernels.orbit(q[0], q[1], nmax, *m.fmap._fwd)
        xq, yq = m.to_xy((zq[:cq], wq[:cq]))
        muq = m.mu0(xq, yq) + np.arange(cq)
        worst = max(worst, float(np.max(np.abs(muq - mu[1:cq + 1] + 1))))
    res = float(max(abs(m.beta_residual(yv)) for yv in (-150, -300, -300 - 80j, -1000)))
    c_direct, c_curve = ft.c_from_curve()
    yb = complex(-1e5 * m.beta(-1e-5))
    ok = worst < 1e-10 and res < 1e-10 and c_direct == c_curve and abs(yb / -2 - 1) < 0.05
    return ok, {"telescoping": worst, "beta_residual": res, "c_direct": str(c_direct),
                "c_from_curve": str(c_curve), "y_beta": [yb.real, yb.imag]}


def _suite_fibers(m, cfg):
    from . import fibers
    x, y = m.sample_dprime_xy(20, seed=9)
    z, w = m.from_xy(x, y)
    N = m.n_tail
    t0, u0 = fibers.global_map_many(z, w, N, m)
    z1, w1 = m.fmap.forward_many(z, w, 1)
    t1, u1 = fibers.global_map_many(z1, w1, N - 1, m)
    dt = float(np.max(np.abs(t1 - (t0 - 1))))
    du = float(np.max(np.abs(u1 - u0)))
    return dt < 1e-9 and du < 1e-9, {"psi_shift": dt, "upsilon_shift": du}


def _suite_boundary(m, cfg):
    from . import curve as cv
    rng = np.random.default_rng(13)
    zs = regions.sample_V(5, m.params.eps, rng, m.params.aperture, rmin=1e-3)
    on, off, _ = curve_never_enters(zs, 10 ** 4, machine=m)
    rw = rng.uniform(-1, 1, 5) + 1j * rng.uniform(-1, 1, 5)
    axis = [classify((0j, complex(v)), 10 ** 3, m).verdict for v in rw]
    p = (complex(zs[0]), complex(m.curve(zs[0])))
    phi0 = cv.phi_on_gamma(p)
    phi1 = cv.phi_on_gamma(m.fmap.forward(*p))
    shift = abs(phi1 - (phi0 + 1))
    ok = (on != kernels.CODE_BASIN_DPRIME).all() and (off == kernels.CODE_BASIN_DPRIME).all() \
        and all(a == "axis" for a in axis) and shift < 1e-6
    return bool(ok), {"curve_codes": on.tolist(), "offset_codes": off.tolist(),
                      "axis": axis, "phi_shift": shift}


SUITES = {
    "germ": _suite_germ, "axis": _suite_axis, "directions": _suite_directions,
    "curve": _suite_curve, "regions": _suite_regions, "asymptotics": _suite_asymptotics,
    "fatou": _suite_fatou, "fibers": _suite_fibers, "boundary": _suite_boundary,
}


def run_suite(machine: Optional[FatouMachine] = None, config: Optional[dict] = None,
              only: Optional[Sequence[str]] = None) -> list:
    """Run the invariant suites; an exception counts as a failure."""
    m = machine or default_machine()
    cfg = dict(config or {})
    out = []
    for name, fn in SUITES.items():
        if only and name not in only:
            continue
        try:
            ok, det = fn(m, cfg)
        except Exception as exc:  # a crash is a failed check, reported as such
            ok, det = False, {"error": f"{type(exc).__name__}: {exc}"}
        out.append(SuiteResult(name, bool(ok), det))
    return out
