import os
import subprocess
import sys

import numpy as np
import pytest

from fatoubasin import kernels

pytestmark = pytest.mark.skipif("cython" not in kernels.backends(),
                                reason="compiled kernels not built")


def _pair():
    b = kernels.backends()
    return b["python"], b["cython"]


def test_chain_apply_agrees(machine):
    py, cy = _pair()
    enc = machine.fmap._fwd
    rng = np.random.default_rng(0)
    for z, w in rng.uniform(-0.3, 0.3, (50, 2)) + 1j * rng.uniform(-0.3, 0.3, (50, 2)):
        a = py.chain_apply(complex(z), complex(w), *enc)
        b = cy.chain_apply(complex(z), complex(w), *enc)
        assert abs(a[0] - b[0]) + abs(a[1] - b[1]) <= 1e-15 * (1 + abs(a[0]) + abs(a[1]))


def test_orbit_agrees(machine):
    py, cy = _pair()
    enc = machine.fmap._fwd
    a = py.orbit(-1e-3 + 0j, -1e-2 + 0j, 2000, *enc)
    b = cy.orbit(-1e-3 + 0j, -1e-2 + 0j, 2000, *enc)
    assert a[2] == b[2]
    assert np.max(np.abs(a[0] - b[0])) < 1e-17


def test_classify_agrees(machine):
    from fatoubasin.analysis import SliceSpec
    py, cy = _pair()
    z, w = SliceSpec().points(24, 24)
    args = (500, *machine.fmap._fwd, *machine.kernel_args())
    ca, ea = py.classify_many(z.ravel(), w.ravel(), *args)
    cb, eb = cy.classify_many(z.ravel(), w.ravel(), *args)
    assert np.array_equal(ca, cb) and np.array_equal(ea, eb)


def test_mu0_agrees(machine):
    py, cy = _pair()
    beta, rho = machine.kernel_series()
    for x, y in [(-300 + 10j, -120 - 5j), (-1000.0 + 0j, -400 + 30j)]:
        a = py.mu0(complex(x), complex(y), machine.r, machine.s, beta, rho)
        b = cy.mu0(complex(x), complex(y), machine.r, machine.s, beta, rho)
        assert abs(a - b) < 1e-12 * abs(a)


def test_environment_forces_pure_backend():
    env = dict(os.environ, FATOUBASIN_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import fatoubasin.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
