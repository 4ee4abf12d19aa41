"""Regular 2n-gon in the apothem-1/2 presentation and its dihedral bookkeeping.

The polygon has two opposite edges on ``x = -1/2`` and ``x = +1/2``.  Edge
``e~_1`` is the one on ``x = +1/2``; the pair ``(e_a, e~_a)`` is obtained by
rotating ``(e_1, e~_1)`` by ``(a - 1) * pi / n``.

Every band function ``phi^a`` is stored through the single function ``phi^1``
on the first-quadrant piece ``Q``: rotate the point back by ``theta_{a-1}``
then fold it into the quadrant with the parity of the program kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

Kind = Literal["primal", "dual"]

# Parity of phi^1 under (x -> -x, y -> -y).
PARITY: dict[str, tuple[int, int]] = {"primal": (-1, +1), "dual": (+1, -1)}

SECTOR_TOL = 1e-12


def _check_kind(kind: str) -> None:
    if kind not in PARITY:
        raise ValueError(f"kind must be 'primal' or 'dual', got {kind!r}")


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class SymmetryMap:
    """How band ``source_band`` is pulled back to ``phi^1``."""

    source_band: int
    parity_primal: tuple[int, int]
    parity_dual: tuple[int, int]
    rotation: float

    def sign(self, kind: Kind, flip_x: bool, flip_y: bool) -> int:
        px, py = self.parity_primal if kind == "primal" else self.parity_dual
        return (px if flip_x else 1) * (py if flip_y else 1)


@dataclass(frozen=True)
class PolygonSpec:
    n: int
    apothem: float = 0.5
    systole: float = 1.0
    _maps: tuple[SymmetryMap, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"n must be an integer >= 3, got {self.n!r}")
        maps = tuple(
            SymmetryMap(a, PARITY["primal"], PARITY["dual"], a * np.pi / self.n)
            for a in range(1, self.n + 1)
        )
        object.__setattr__(self, "_maps", maps)

    @property
    def rotation_angle(self) -> float:
        return np.pi / self.n

    @property
    def half_angle(self) -> float:
        """Angle of the fundamental triangle at the origin."""
        return np.pi / (2 * self.n)

    @property
    def circumradius(self) -> float:
        return self.apothem / np.cos(self.half_angle)

    @property
    def half_edge(self) -> float:
        return self.apothem * np.tan(self.half_angle)

    @cached_property
    def vertices(self) -> np.ndarray:
        """Vertex k sits at angle (2k+1) pi / 2n; vertex 0 is the apex above x = 1/2."""
        ang = (2 * np.arange(2 * self.n) + 1) * self.half_angle
        return self.circumradius * np.column_stack([np.cos(ang), np.sin(ang)])

    @cached_property
    def edge_midpoints(self) -> np.ndarray:
        """Midpoint k at angle k pi / n; midpoint 0 bisects e~_1."""
        ang = np.arange(2 * self.n) * self.rotation_angle
        return self.apothem * np.column_stack([np.cos(ang), np.sin(ang)])

    @property
    def apex(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def flat_perimeter(self) -> float:
        return 2 * self.n * 2 * self.half_edge

    @property
    def flat_area(self) -> float:
        return 0.5 * self.apothem * self.flat_perimeter

    @property
    def triangle(self) -> np.ndarray:
        """Corners of the fundamental triangle T_{2n}."""
        return np.array([[0.0, 0.0], [self.apothem, 0.0], self.apex])

    def edge_index(self, point: np.ndarray, tol: float = 1e-10) -> list[int]:
        """Indices k of the edges (midpoint k) that contain ``point``."""
        p = np.asarray(point, dtype=float)
        ang = np.arange(2 * self.n) * self.rotation_angle
        normals = np.column_stack([np.cos(ang), np.sin(ang)])
        tang = np.column_stack([-np.sin(ang), np.cos(ang)])
        on_line = np.abs(normals @ p - self.apothem) <= tol
        within = np.abs(tang @ p) <= self.half_edge + tol
        return [int(k) for k in np.flatnonzero(on_line & within)]

    def contains(self, points: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ang = np.arange(2 * self.n) * self.rotation_angle
        normals = np.column_stack([np.cos(ang), np.sin(ang)])
        return np.all(pts @ normals.T <= self.apothem + tol, axis=1)

    def symmetry(self, alpha: int) -> SymmetryMap:
        self._check_band(alpha)
        return self._maps[alpha - 1]

    def _check_band(self, alpha: int) -> None:
        if not 1 <= alpha <= self.n:
            raise ValueError(f"band index must be in 1..{self.n}, got {alpha}")


def build_polygon(n: int) -> PolygonSpec:
    return PolygonSpec(n)


def base_one_form(alpha: int, n: int) -> np.ndarray:
    """Constant one-form omega^alpha = cos(theta) dx + sin(theta) dy, theta = (alpha-1) pi/n."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 1 <= alpha <= n:
        raise ValueError(f"band index must be in 1..{n}, got {alpha}")
    theta = (alpha - 1) * np.pi / n
    return np.array([np.cos(theta), np.sin(theta)])


def band_isometry(
    point: np.ndarray, alpha: int, kind: Kind, n: int
) -> tuple[np.ndarray, int]:
    """Orthogonal map M and sign s with phi^alpha(p) = s * phi^1(M p), M p in Q.

    Gradients pull back as grad phi^alpha(p) = s * M.T @ grad phi^1(M p).
    Points on a symmetry axis (within ``SECTOR_TOL``) are not reflected.
    """
    _check_kind(kind)
    if not 1 <= alpha <= n:
        raise ValueError(f"band index must be in 1..{n}, got {alpha}")
    rot = rotation(-(alpha - 1) * np.pi / n)
    q = rot @ np.asarray(point, dtype=float)
    flip_x = bool(q[0] < -SECTOR_TOL)
    flip_y = bool(q[1] < -SECTOR_TOL)
    refl = np.diag([-1.0 if flip_x else 1.0, -1.0 if flip_y else 1.0])
    px, py = PARITY[kind]
    sign = (px if flip_x else 1) * (py if flip_y else 1)
    return refl @ rot, sign


def map_to_fundamental(
    point: np.ndarray, alpha: int, kind: Kind, n: int
) -> tuple[np.ndarray, int]:
    """Return (p', s) with p' in the closed first quadrant and phi^alpha(p) = s phi^1(p')."""
    poly = PolygonSpec(n)
    p = np.asarray(point, dtype=float)
    if not poly.contains(p)[0]:
        raise ValueError(f"point {p.tolist()} lies outside the {2 * n}-gon")
    mat, sign = band_isometry(p, alpha, kind, n)
    q = mat @ p
    # snap tiny negatives produced by rounding on the axes
    q = np.where(np.abs(q) <= SECTOR_TOL, np.abs(q), q)
    return q, sign


def unfold_from_fundamental(
    q: np.ndarray, point_hint: np.ndarray, alpha: int, kind: Kind, n: int
) -> np.ndarray:
    """Inverse of :func:`map_to_fundamental` for the sector containing ``point_hint``."""
    mat, _ = band_isometry(point_hint, alpha, kind, n)
    return mat.T @ np.asarray(q, dtype=float)
