import json

import numpy as np
import pytest

from fatoubasin import analysis, kernels
from fatoubasin.analysis import DEFAULT_SLICE, SliceSpec


def test_classify_examples(machine):
    assert analysis.classify((0j, 0.4 + 0.1j), 1000, machine).verdict == "axis"
    z = -0.01 + 0.001j
    g = complex(machine.curve(z))
    assert analysis.classify((z, g), 1000, machine).verdict == "on_curve"
    c = analysis.classify((z, g - 1e-3), 10 ** 4, machine, strict=True)
    assert c.verdict == "basin" and c.certified_dprime and c.entry_index > 0
    c = analysis.classify((-1e-3, -1e-2), 1000, machine, strict=True)
    assert c.verdict == "basin" and c.entry_index == 1
    assert analysis.classify((0.01 + 0j, 0.01 + 0j), 1000, machine).verdict == "undecided"


def test_grid_symmetry_is_exact():
    s = SliceSpec().axis_values(-0.03, 0.03, 256)
    assert np.array_equal(s, -s[::-1])


def test_raster_deterministic_and_symmetric(machine, tmp_path):
    a = analysis.raster(DEFAULT_SLICE, (64, 64), 500, machine)
    b = analysis.raster(DEFAULT_SLICE, (64, 64), 500, machine, workers=1)
    assert a.pgm_bytes() == b.pgm_bytes()
    assert np.array_equal(a.levels, a.levels[::-1])
    assert a.pgm_bytes().startswith(b"P5\n64 64\n255\n")
    side = a.write(str(tmp_path / "r.pgm"))
    meta = json.load(open(side))
    assert meta["grid"] == [64, 64] and meta["levels"]["basin"] == 255
    assert sum(meta["counts"].values()) == 64 * 64


def test_basin_verdict_never_flips_with_budget(machine):
    a = analysis.raster(DEFAULT_SLICE, (48, 48), 500, machine)
    b = analysis.raster(DEFAULT_SLICE, (48, 48), 4000, machine)
    basin = a.codes == kernels.CODE_BASIN_D
    assert np.all(b.codes[basin] == kernels.CODE_BASIN_D)
    assert b.counts()["undecided"] <= a.counts()["undecided"]


def test_raster_rejects_tiny_grid(machine):
    with pytest.raises(ValueError):
        analysis.raster(DEFAULT_SLICE, (1, 5), 10, machine)


def test_asymptotics_report():
    rep = analysis.asymptotics()
    n, nz, lu = rep.samples[-1]
    assert n == 10 ** 6 and abs(nz + 1) < 0.1
    assert abs(rep.a_u_reciprocal + 1) < 0.15
    d = rep.to_dict()
    assert len(d["samples"]) == 3 and len(d["deviations"]) == 3
    with pytest.raises(ValueError):
        analysis.asymptotics(checkpoints=(10, 100))


def test_asymptotics_from_trace_matches():
    from fatoubasin import mapchain
    tr = mapchain.orbit((-1e-3, -1e-2), 10 ** 4)
    a = analysis.asymptotics(checkpoints=(10 ** 2, 10 ** 3, 10 ** 4), trace=tr)
    b = analysis.asymptotics(checkpoints=(10 ** 2, 10 ** 3, 10 ** 4))
    assert abs(a.a_z - b.a_z) < 1e-9


def test_psi_coverage(machine):
    rep = analysis.psi_coverage(grid=5, machine=machine)
    assert rep["covered"] == rep["points"] > 0


def test_run_suite_all_pass(machine):
    res = analysis.run_suite(machine)
    assert {r.name for r in res} == set(analysis.SUITES)
    assert all(r.passed for r in res), [r.to_dict() for r in res if not r.passed]
