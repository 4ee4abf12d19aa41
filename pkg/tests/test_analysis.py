import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isosystolic.analysis import (
    band_angle, check_identities, edge_samples, extrapolate,
    origin_plaquettes, perimeter, report_primal, rho2_origin, riemannian_area_form,
    write_json, write_table,
)

from conftest import dual, mesh, primal


@pytest.mark.parametrize("n,N_c", [(3, 4), (3, 7), (4, 3), (6, 2)])
def test_perimeter_of_flat_metric(n, N_c):
    m = mesh(n, N_c)
    ones = np.ones(m.n_plaquettes)
    assert perimeter(ones, m) == pytest.approx(m.polygon.flat_perimeter, rel=1e-12)
    assert perimeter(ones, m, clamp=False) == pytest.approx(m.polygon.flat_perimeter, rel=1e-12)


def test_edge_samples_tile_half_edge():
    m = mesh(3, 8)
    s = edge_samples(m)
    assert sum(x[3] for x in s) == pytest.approx(m.polygon.half_edge)
    assert all(a[2] <= b[1] + 1e-12 for a, b in zip(s, s[1:]))


def test_clamp_replaces_vertex_sample():
    m = mesh(3, 4)
    s = edge_samples(m)
    rho2 = np.ones(m.n_plaquettes)
    rho2[s[-1][0]] = 100.0
    assert perimeter(rho2, m) == pytest.approx(m.polygon.flat_perimeter)
    assert perimeter(rho2, m, clamp=False) > m.polygon.flat_perimeter


@given(st.floats(0.1, 10))
def test_rho2_origin_of_constant(c):
    m = mesh(3, 4)
    assert rho2_origin(np.full(m.n_plaquettes, c), m) == pytest.approx(c)


def test_origin_plaquettes_touch_origin():
    m = mesh(4, 4)
    o = origin_plaquettes(m)
    assert len(o) >= 1
    assert np.all(np.linalg.norm(m.vertices[m.triangles[o]], axis=2).min(axis=1) < 1e-9)


def test_synthetic_power_law_recovered():
    fit = extrapolate([(N, 1 + 2 / N**2) for N in (2, 4, 8, 16, 32)], "q")
    assert fit.a == pytest.approx(2, abs=1e-6)
    assert fit.b == pytest.approx(2, abs=1e-6)
    assert fit.q_star == pytest.approx(1, abs=1e-6)


@given(q=st.floats(-2, 2), a=st.floats(0.05, 5), sign=st.sampled_from([-1, 1]), b=st.floats(0.5, 3))
def test_power_law_recovery_property(q, a, sign, b):
    a *= sign
    fit = extrapolate([(N, q + a / N**b) for N in (2, 4, 8, 16, 32, 64)])
    assert fit.q_star == pytest.approx(q, abs=1e-6 * (1 + abs(a)))


def test_loglog_method_on_reference_primal_series():
    # the classical log-log fit of the primal areas gives b near 0.9
    areas = [0.86602, 0.86297, 0.85389, 0.84819, 0.84458, 0.84249, 0.84135]
    fit = extrapolate(list(zip([2, 4, 8, 16, 32, 64, 128], areas)), "A", method="loglog")
    assert fit.q_star == pytest.approx(0.84028, abs=5e-4)
    assert fit.b == pytest.approx(0.9, abs=0.05)


def test_extrapolate_degenerate():
    fit = extrapolate([(2, 1.0), (4, 1.0), (8, 1.0), (16, 1.0)])
    assert not fit.fitted
    assert fit.q_star == 1.0
    d = fit.to_dict()
    assert d["b"] is None and d["schema_version"] == 1
    with pytest.raises(ValueError):
        extrapolate([(2, 1.0), (4, 1.0), (8, 1.0)])
    with pytest.raises(ValueError):
        extrapolate([(2, 1.0), (4, 1.0), (8, 1.0), (16, 2.0)], method="spline")


def test_band_angle_hexagon_center():
    sol = primal(3, 8)
    o = origin_plaquettes(sol.mesh)
    assert np.allclose(band_angle(sol, 1, 2)[o], np.pi / 3, atol=1e-5)


def test_band_angle_flat_metric():
    sol = primal(3, 2)
    ang = band_angle(sol, 1, 3)
    assert np.allclose(ang[~np.isnan(ang)], 2 * np.pi / 3, atol=1e-6)


def test_riemannian_area_form_at_center():
    sol = primal(3, 16)
    o = origin_plaquettes(sol.mesh)
    rt, f = riemannian_area_form(sol, 1, 2, 3)
    assert np.allclose(f[o], 0.5, atol=1e-6)
    assert np.allclose(rt[o], sol.omega[o], rtol=1e-6)
    with pytest.raises(ValueError):
        riemannian_area_form(sol, 1, 1, 2)


def test_reports_and_files(tmp_path):
    p, d = primal(3, 4), dual(3, 4)
    rp = report_primal(p)
    rd = check_identities(p, d)
    assert rd.flags["dual_below_primal"]
    assert rd.flags["A_equals_n_nu"]
    assert rd.L_e == pytest.approx(rd.P / 6)
    write_table([rp, rd], tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "kind,N_c,A,P,rho2_origin,two_nu"
    assert lines[1].startswith("primal,4,0.8629")
    write_table([rd], tmp_path / "s.csv", "2026-01-01T00:00:00+00:00")
    assert (tmp_path / "s.csv").read_text().startswith("# generated")
    write_json(rd.to_dict(), tmp_path / "r.json")
    back = json.loads((tmp_path / "r.json").read_text())
    assert back["schema_version"] == 1 and back["kind"] == "dual"


@pytest.mark.parametrize("N_c,expect", [(2, 1.0), (4, 1.04921), (8, 1.14853), (16, 1.17448)])
def test_primal_metric_at_origin(N_c, expect):
    sol = primal(3, N_c)
    assert rho2_origin(sol.omega, sol.mesh) == pytest.approx(expect, abs=1e-3)
