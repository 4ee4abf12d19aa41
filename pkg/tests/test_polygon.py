import numpy as np
import pytest
from hypothesis import given, strategies as st

from isosystolic.polygon import (
    PolygonSpec, band_isometry, base_one_form, map_to_fundamental, unfold_from_fundamental,
)

ns = st.integers(3, 12)


def test_hexagon_geometry():
    p = PolygonSpec(3)
    assert p.flat_area == pytest.approx(np.sqrt(3) / 2)
    assert p.flat_perimeter == pytest.approx(2 * np.sqrt(3))
    assert p.circumradius == pytest.approx(1 / np.sqrt(3))
    assert np.allclose(p.apex, [0.5, 0.5 * np.tan(np.pi / 6)])


@given(ns)
def test_vertices_on_circumcircle_and_apothem(n):
    p = PolygonSpec(n)
    assert np.allclose(np.linalg.norm(p.vertices, axis=1), p.circumradius)
    assert np.allclose(np.linalg.norm(p.edge_midpoints, axis=1), 0.5)
    # shoelace area of the vertex list
    v = p.vertices
    area = 0.5 * abs(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
    assert area == pytest.approx(p.flat_area)


def test_rejects_small_n():
    with pytest.raises(ValueError):
        PolygonSpec(2)
    with pytest.raises(ValueError):
        base_one_form(1, 2)
    with pytest.raises(ValueError):
        base_one_form(4, 3)


@given(ns, st.data())
def test_band_isometry_is_orthogonal(n, data):
    alpha = data.draw(st.integers(1, n))
    r = data.draw(st.floats(0, 0.49))
    t = data.draw(st.floats(0, 2 * np.pi))
    pt = r * np.array([np.cos(t), np.sin(t)])
    for kind in ("primal", "dual"):
        M, s = band_isometry(pt, alpha, kind, n)
        assert np.allclose(M @ M.T, np.eye(2))
        assert s in (-1, 1)
        q = M @ pt
        assert q[0] >= -1e-12 and q[1] >= -1e-12


@given(ns, st.data())
def test_fundamental_round_trip(n, data):
    alpha = data.draw(st.integers(1, n))
    r = data.draw(st.floats(0, 0.49))
    t = data.draw(st.floats(0, 2 * np.pi))
    pt = r * np.array([np.cos(t), np.sin(t)])
    q, _ = map_to_fundamental(pt, alpha, "dual", n)
    # coordinates within SECTOR_TOL of an axis are snapped onto it
    assert np.allclose(unfold_from_fundamental(q, pt, alpha, "dual", n), pt, atol=3e-12)


def test_outside_point_raises():
    with pytest.raises(ValueError):
        map_to_fundamental(np.array([0.6, 0.0]), 1, "primal", 3)


def test_one_form_pulls_back_along_band():
    # omega^alpha(p) . v equals omega^1 . (M v) up to the primal sign
    n = 4
    for alpha in range(1, n + 1):
        pt = np.array([0.1, 0.05])
        M, s = band_isometry(pt, alpha, "primal", n)
        w = base_one_form(alpha, n)
        assert np.allclose(np.abs(M @ w), np.abs(base_one_form(1, n)), atol=1e-12)
