import logging

import numpy as np
import pytest

from isosystolic.dual import assemble_dual, dual_lift, extract_geodesics, write_geodesics_svg
from isosystolic.mesh import Tag
from isosystolic.primal import assemble_primal, length_potentials, primal_lift

from conftest import dual, mesh, primal
from oracle import conic

SMALL = [(3, 2), (3, 3), (4, 2), (5, 2)]


@pytest.mark.parametrize("n,N_c", SMALL)
def test_primal_matches_conic_oracle(n, N_c):
    ref, _ = conic(assemble_primal(mesh(n, N_c)))
    assert primal(n, N_c).objective == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("n,N_c", SMALL)
def test_dual_matches_conic_oracle(n, N_c):
    ref, _ = conic(assemble_dual(mesh(n, N_c)))
    assert dual(n, N_c).objective == pytest.approx(-ref, abs=1e-6)


def test_coarsest_hexagon_is_flat():
    # one rhombus per quadrant leaves no interior freedom: the flat metric
    sol = primal(3, 2)
    assert sol.objective == pytest.approx(np.sqrt(3) / 2, abs=1e-6)


@pytest.mark.parametrize("n,N_c", SMALL + [(3, 4)])
def test_weak_duality(n, N_c):
    assert dual(n, N_c).objective <= primal(n, N_c).objective + 1e-6


@pytest.mark.parametrize("n,N_c", SMALL + [(3, 4)])
def test_dual_area_equals_n_nu(n, N_c):
    sol = dual(n, N_c)
    assert sol.objective == pytest.approx(n * sol.nu, rel=1e-5)
    m = sol.mesh
    area = 4 * n * m.t_weight[m.t_plaquettes] @ (sol.rho[m.t_plaquettes] ** 2)
    assert sol.objective == pytest.approx(area, rel=1e-5)


def test_primal_boundary_conditions():
    m = mesh(3, 4)
    sol = primal(3, 4)
    fixed = (m.tags & (Tag.E1_TILDE | Tag.Y_AXIS)) != 0
    assert np.all(sol.phi1[fixed] == 0)
    mirror = m.mirror_of >= 0
    assert np.array_equal(sol.phi1[mirror], sol.phi1[m.mirror_of[mirror]])


def test_primal_period_is_one():
    sol = primal(3, 4)
    X = length_potentials(sol)
    v = sol.mesh.vertices
    start = np.flatnonzero(np.isclose(v[:, 0], 0.5) & np.isclose(v[:, 1], 0.0))[0]
    origin = np.flatnonzero((sol.mesh.tags & Tag.ORIGIN) != 0)[0]
    # phi^1 vanishes on e~_1 and on the y axis, so X^1 runs from 0 to 1/2 there: half the period
    assert X[0, start] - X[0, origin] == pytest.approx(0.5)


def test_dual_boundary_conditions():
    m = mesh(3, 4)
    sol = dual(3, 4)
    cut = (m.tags & Tag.X_AXIS) != 0
    own = m.mirror_of < 0
    assert np.allclose(sol.varphi1[cut & own], sol.nu / 2)
    other = ((m.tags & Tag.OTHER_EDGE) != 0) & ~cut & own
    assert np.allclose(sol.varphi1[other], 0)
    mirror = ~own
    assert np.allclose(sol.varphi1[mirror], sol.nu - sol.varphi1[m.mirror_of[mirror]])


def test_lifts_have_full_column_rank():
    for n, N_c in SMALL:
        m = mesh(n, N_c)
        for lift in (primal_lift(m)[0], dual_lift(m)[0]):
            assert np.linalg.matrix_rank(lift.toarray()) == lift.shape[1]


def test_wrong_n_rejected():
    with pytest.raises(ValueError):
        assemble_primal(mesh(3, 2), 4)
    with pytest.raises(ValueError):
        assemble_dual(mesh(3, 2), 5)


def test_geodesics_cross_the_polygon():
    sol = dual(3, 8)
    half = sol.nu / 2
    levels = np.linspace(-0.8, 0.8, 5) * half
    for alpha in (1, 2, 3):
        theta = (alpha - 1) * np.pi / 3
        d = np.array([np.cos(theta), np.sin(theta)])
        for line in extract_geodesics(sol, alpha, levels):
            assert len(line) >= 3
            assert line[0] @ d == pytest.approx(-0.5, abs=1e-9)
            assert line[-1] @ d == pytest.approx(0.5, abs=1e-9)


def test_geodesics_level_out_of_range(caplog):
    sol = dual(3, 4)
    with caplog.at_level(logging.WARNING):
        out = extract_geodesics(sol, 1, [sol.nu])
    assert out[0].shape == (0, 2)
    assert "outside" in caplog.text
    with pytest.raises(ValueError):
        extract_geodesics(sol, 4, [0.0])


def test_geodesic_svg_is_self_contained(tmp_path):
    sol = dual(3, 4)
    curves = {(1, 0.0): extract_geodesics(sol, 1, [0.0])[0]}
    write_geodesics_svg(curves, sol.mesh.polygon.vertices, tmp_path / "g.svg")
    text = (tmp_path / "g.svg").read_text()
    assert text.lstrip().startswith("<svg") or text.lstrip().startswith("<?xml")
    assert "href" not in text and "<link" not in text
    assert "<polyline" in text or "<path" in text
