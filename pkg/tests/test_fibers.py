import numpy as np
import pytest

from fatoubasin import fibers


def dprime_points(machine, n, seed):
    x, y = machine.sample_dprime_xy(n, seed=seed)
    return machine.from_xy(x, y)


def test_upsilon_invariant_under_F(machine):
    z, w = dprime_points(machine, 30, 1)
    N = machine.n_tail
    _, u0 = fibers.global_map_many(z, w, N, machine)
    z1, w1 = machine.fmap.forward_many(z, w, 1)
    _, u1 = fibers.global_map_many(z1, w1, N, machine)
    assert np.max(np.abs(u1 - u0)) < 1e-9


def test_limit_is_independent_of_N(machine):
    z, w = dprime_points(machine, 30, 2)
    _, a = fibers.global_map_many(z, w, 3000, machine)
    _, b = fibers.global_map_many(z, w, 6000, machine)
    assert np.max(np.abs(a - b)) < 1e-9


def test_upsilon_error_estimate_covers_change(machine):
    z, w = dprime_points(machine, 3, 3)
    for p in zip(z, w):
        a = fibers.upsilon(p, machine, N=3000)
        b = fibers.upsilon(p, machine, N=6000)
        assert abs(a.value - b.value) <= a.err + b.err < 1e-8


def test_closeness_to_y(machine):
    x, y = machine.sample_dprime_xy(1000, seed=4)
    z, w = machine.from_xy(x, y)
    t, ups = fibers.global_map_many(z, w, machine.n_tail, machine)
    # Theta(p) = (t, y): the fiber coordinate stays within the log bound of y
    bound = 2 * np.log(np.abs(y)) + np.log(np.abs(t))
    assert np.all(np.abs(ups - y) < bound)


def test_xi_matches_global_map(machine):
    t, y = -900 + 30j, -200 - 20j
    v = fibers.xi(t, y, machine)
    p = machine.theta_inverse(t, y)
    _, u = fibers.global_map(p, machine, N=machine.n_tail)
    assert abs(v.value - u.value) < 1e-9 and v.err < 1e-8
    with pytest.raises(ValueError):
        fibers.xi(-150 + 0j, -120 + 0j, machine)


def test_xi_increment_decays(machine):
    import mpmath
    from fatoubasin import kernels
    z, w = dprime_points(machine, 2, 5)
    ns = (100, 1000, 10000, 100000)
    conv = lambda q: mpmath.mpf(q.numerator) / q.denominator
    for p in zip(z, w):
        zs, ws, _ = kernels.orbit(complex(p[0]), complex(p[1]), max(ns), *machine.fmap._fwd)
        t0 = machine.psi(p, N=machine.n_tail).value
        inc = []
        with mpmath.workdps(40):
            for n in ns:
                a, b = mpmath.mpc(complex(zs[n])), mpmath.mpc(complex(ws[n]))
                a1, b1 = machine.fmap.chain.apply(a, b, mpmath.exp, conv)
                t = mpmath.mpc(t0 - n)
                inc.append(float(abs(machine.xi_hat_mp(t - 1, a1, b1) - machine.xi_hat_mp(t, a, b))))
        assert np.polyfit(np.log(ns), np.log(inc), 1)[0] <= -1.1


def test_fiber_is_injective_along_y(machine):
    ys = -np.linspace(150, 300, 12) + 5j
    pts = fibers.trace_fiber(-1500 + 0j, ys, machine)
    ups = np.array([fp.upsilon for fp in pts])
    d = np.abs(ups[:, None] - ups[None, :]) + 1e9 * np.eye(len(ups))
    assert d.min() > 1.0
    assert all(fp.closeness_ok() for fp in pts)
    for fp in pts:
        psi, _ = fibers.global_map((fp.z, fp.w), machine, N=machine.n_tail)
        assert abs(psi.value - fp.t) < 1e-9 * abs(fp.t)


def test_invert_fiber(machine):
    t, n = -500 + 0j, 0
    y0 = np.array([-160 + 10j, -200 - 5j])
    eta = fibers.xi_limit_many(np.full(2, t), y0, machine)
    y = fibers.invert_fiber(t, eta, n, machine)
    assert np.max(np.abs(y - y0)) < 1e-7


def test_coverage_counts(machine):
    small = fibers.fiber_coverage(-10 + 0j, 100, machine, grid=6)
    assert small["grid_points"] == 0
    rep = fibers.fiber_coverage(-1000 + 0j, 1000, machine, grid=6)
    assert rep["grid_points"] == 36
    assert rep["reachable"] > 0 and rep["reachable_covered"] == rep["reachable"]


def test_fiber_csv(machine):
    fp = fibers.FiberPoint(-500 + 0j, -150 + 0j, -140 + 1j, 1e-10, -0.002 + 0j, -0.006 + 0j)
    lines = fibers.fiber_csv([fp]).splitlines()
    assert lines[0] == "re_t,im_t,re_z,im_z,re_w,im_w,re_upsilon,im_upsilon"
    assert float(lines[1].split(",")[6]) == -140.0


def test_global_map_conjugates_F_to_translation(machine):
    z, w = dprime_points(machine, 20, 8)
    N = machine.n_tail
    t0, u0 = fibers.global_map_many(z, w, N, machine)
    zk, wk = z, w
    for k in range(1, 51):
        zk, wk = machine.fmap.forward_many(zk, wk, 1)
        if k % 10 == 0:
            tk, uk = fibers.global_map_many(zk, wk, N, machine)
            assert np.max(np.abs(tk - (t0 - k))) < 1e-9
            assert np.max(np.abs(uk - u0)) < 1e-9


@pytest.mark.parametrize("t", [-800 + 0j, -2000 + 300j])
def test_fiber_is_connected_on_grid(machine, t):
    rep = fibers.fiber_connectivity(t, 12, machine)
    assert rep["components"] == 1 and rep["on_fiber"] > rep["cells"] // 2
    with pytest.raises(ValueError):
        fibers.fiber_connectivity(-150 + 0j, 4, machine)
