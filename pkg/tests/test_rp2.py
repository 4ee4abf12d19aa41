import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from isosystolic import rp2
from isosystolic.rp2 import (
    BOUNDARY_OFFSET, ABPair, BandLabel, DiskPoint, alpha_beta, aux_forms, band_angle_coordinate,
    band_density, band_density_reparam, band_dual_coordinate, band_length_coordinate,
    calibration_residuals, conformal_integral_closed, disk_area, hemisphere_rho2, sum_rule,
)

from conftest import dual

radius = st.floats(0, 0.45)
angle = st.floats(0, 2 * np.pi)
phis = st.floats(0, np.pi)


def point(r, t):
    return (r * np.cos(t), r * np.sin(t))


def test_center_and_boundary_values():
    assert hemisphere_rho2((0.0, 0.0)) == pytest.approx(16 / np.pi**2, abs=1e-12)
    assert hemisphere_rho2((0.5, 0.0)) == pytest.approx(4 / np.pi**2)
    assert hemisphere_rho2(DiskPoint(0.0, 0.5)) == pytest.approx(4 / np.pi**2)
    assert disk_area() == pytest.approx(2 / np.pi, abs=1e-12)


def test_types_validate():
    with pytest.raises(ValueError):
        DiskPoint(0.4, 0.4)
    with pytest.raises(ValueError):
        ABPair(0.8, 0.7)
    assert BandLabel(np.pi + 0.25).phi0 == pytest.approx(0.25)


@given(radius, angle)
def test_ab_pair_lies_in_unit_disk(r, t):
    ab = ABPair.from_point(*point(r, t))
    assert ab.a**2 + ab.b**2 < 1


def test_length_coordinate_endpoints():
    assert band_length_coordinate((0.5, 0.0), 0.0) == pytest.approx(0.0)
    assert band_length_coordinate((-0.5, 0.0), 0.0) == pytest.approx(1.0)
    for phi0 in np.linspace(0, np.pi, 7):
        assert band_length_coordinate((0.0, 0.0), phi0) == pytest.approx(0.5)


def test_length_coordinate_is_arc_length_on_the_sphere():
    # along the x-axis the hemisphere geodesic through the pole has length (1/pi) * polar angle
    x = 0.3
    length = integrate.quad(lambda s: np.sqrt(hemisphere_rho2((s, 0.0))), x, 0.5)[0]
    assert band_length_coordinate((x, 0.0), 0.0) == pytest.approx(length, abs=1e-10)


def test_dual_coordinate_limits():
    nu = 0.3
    assert band_dual_coordinate((0.2, 0.0), 0.0, nu) == 0.0
    r = 0.5 - BOUNDARY_OFFSET
    assert band_dual_coordinate((0.0, r), 0.0, nu) == pytest.approx(-nu / 2, abs=1e-6)
    assert band_dual_coordinate((0.0, -r), 0.0, nu) == pytest.approx(nu / 2, abs=1e-6)
    assert band_dual_coordinate((0.0, 0.5), 0.0, nu) == pytest.approx(-nu / 2)


@given(radius, angle, phis)
def test_dual_coordinate_range(r, t, phi0):
    nu = 0.2
    assert abs(band_dual_coordinate(point(r, t), phi0, nu)) <= nu / 2


@given(radius, angle, phis)
def test_density_forms_agree(r, t, phi0):
    p = point(r, t)
    nu = 2 / (np.pi * 7)
    x = band_length_coordinate(p, phi0)
    if np.sin(np.pi * x) < 1e-6:
        return
    assert band_density(p, phi0, nu) == pytest.approx(band_density_reparam(p, phi0, nu), rel=1e-9)


def test_density_at_center_and_on_axis():
    nu = 0.25
    for phi0 in np.linspace(0, np.pi, 5):
        assert band_density((0.0, 0.0), phi0, nu) == pytest.approx(np.pi * nu / 2)
    for x in (0.1, 0.3):
        r4 = x**4
        expect = np.pi * nu / 2 * (1 - 16 * r4) / (1 - 8 * x * x + 16 * r4)
        assert band_density((x, 0.0), 0.0, nu) == pytest.approx(expect)


@given(radius, angle, phis)
def test_alpha_beta_by_finite_differences(r, t, phi0):
    x, y = point(r, t)
    if np.sin(np.pi * band_length_coordinate((x, y), phi0)) < 1e-3:
        return
    h = 1e-6
    q2 = (1 + 4 * (x * x + y * y)) ** 2

    def F(u, v):
        return np.cos(np.pi * band_length_coordinate((u, v), phi0))

    # d(cos pi x) = -pi sin(pi x) dx, so -(pi/4) sin(pi x) dx = d(cos pi x) / 4
    gx = (F(x + h, y) - F(x - h, y)) / (2 * h) / 4 * q2
    gy = (F(x, y + h) - F(x, y - h)) / (2 * h) / 4 * q2
    a, b = alpha_beta((x, y), phi0)
    assert a == pytest.approx(gx, abs=1e-6)
    assert b == pytest.approx(gy, abs=1e-6)


@given(radius, angle, phis)
def test_aux_forms(r, t, phi0):
    p = point(r, t)
    a, b = alpha_beta(p, phi0)
    forms = aux_forms(p, phi0)
    assert np.allclose(forms, a * a + b * b, atol=1e-12)


@given(st.floats(0, 0.95), st.floats(0, 2 * np.pi))
def test_conformal_integral(s, t):
    a, b = s * np.cos(t), s * np.sin(t)
    num = integrate.quad(lambda f: 1 / (1 - a * np.cos(2 * f) - b * np.sin(2 * f)), 0, np.pi,
                         epsabs=0, epsrel=1e-12, limit=400)[0]
    assert conformal_integral_closed(a, b) == pytest.approx(num, rel=1e-9)


@given(radius, angle, st.integers(3, 20))
def test_sum_rule(r, t, n):
    assert sum_rule(point(r, t), n) == pytest.approx(np.pi / n, abs=1e-8)


def test_sum_rule_rejects_boundary():
    with pytest.raises(ValueError):
        sum_rule((0.5, 0.0), 10)


@given(radius, angle, phis)
def test_calibration(r, t, phi0):
    p = point(r, t)
    if np.sin(np.pi * band_length_coordinate(p, phi0)) < 1e-2:
        return
    c1, c2 = calibration_residuals(p, phi0)
    assert abs(c1) <= 1e-6 and abs(c2) <= 1e-6


def test_angle_coordinate_is_odd_across_band_axis():
    assert band_angle_coordinate((0.2, 0.1), 0.0) == pytest.approx(-band_angle_coordinate((0.2, -0.1), 0.0))


def test_point_generators():
    rng = np.random.default_rng(0)
    pts = rp2.random_disk_points(rng, 200)
    assert np.all(np.hypot(*pts.T) <= 0.45)
    grid = rp2.interior_grid(10)
    assert 0 < len(grid) <= 100 and np.all(np.hypot(*grid.T) <= 0.45 + 1e-12)


def test_polygon_comparison(tmp_path):
    cmp = rp2.polygon_vs_hemisphere(dual(3, 4))
    assert cmp["max_inner_deviation"] >= cmp["mean_inner_deviation"] > 0
    rp2.write_comparison_csv(cmp, tmp_path / "c.csv")
    head = (tmp_path / "c.csv").read_text().splitlines()[0]
    assert head == "side,x,y,rho2_polygon,rho2_hemisphere,deviation"
