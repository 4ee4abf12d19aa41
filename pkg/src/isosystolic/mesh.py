"""Triangulations of the fundamental domains and the P1 gradient at centroids.

Two schemes are provided:

``general``
    T_{2n} is cut into N_c^2 triangles similar to itself; the block formed by
    T_{2n} and its mirror image across the hypotenuse is rotated to tile Q_{2n}.
``hexagon``
    Equilateral plaquettes filling the rhombus (0,0), (1/2,-1/(2 sqrt3)),
    (1/2, 1/(2 sqrt3)), (0, 1/sqrt3).  Only n = 3.  Plaquettes whose centroid is
    on the x axis are cut in half by T_6; vertices below the axis are stored as
    mirrors of vertices in Q_6.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .polygon import PolygonSpec, band_isometry, rotation

GEOM_TOL = 1e-9
MATCH_TOL = 1e-10


class Tag(enum.IntFlag):
    INTERIOR = 0
    E1_TILDE = 1
    Y_AXIS = 2
    X_AXIS = 4
    OTHER_EDGE = 8
    APEX = 16
    ORIGIN = 32
    MIRROR = 64


TAG_NAMES = {
    Tag.E1_TILDE: "edge_e1_tilde",
    Tag.Y_AXIS: "y_axis",
    Tag.X_AXIS: "x_axis",
    Tag.OTHER_EDGE: "other_polygon_edge",
    Tag.APEX: "apex",
    Tag.ORIGIN: "origin",
    Tag.MIRROR: "mirror",
}


def tag_names(tag: int) -> set[str]:
    if tag == 0:
        return {"interior"}
    return {name for bit, name in TAG_NAMES.items() if tag & bit}


@dataclass
class BandTable:
    """Pull-back of band ``alpha`` from each T-plaquette to a Q-plaquette."""

    target: np.ndarray  # (nT,) plaquette index in Q
    matrix: np.ndarray  # (nT, 2, 2) orthogonal maps M
    sign_primal: np.ndarray  # (nT,)
    sign_dual: np.ndarray  # (nT,)

    def sign(self, kind: str) -> np.ndarray:
        return self.sign_primal if kind == "primal" else self.sign_dual


@dataclass
class Mesh:
    polygon: PolygonSpec
    N_c: int
    scheme: str
    vertices: np.ndarray
    vertex_labels: np.ndarray
    triangles: np.ndarray
    centroid_labels: np.ndarray
    mirror_of: np.ndarray
    tags: np.ndarray = field(init=False)
    areas: np.ndarray = field(init=False)
    centroids: np.ndarray = field(init=False)
    t_weight: np.ndarray = field(init=False)
    bands: list[BandTable] = field(init=False)

    def __post_init__(self) -> None:
        tri = self.vertices[self.triangles]
        self.centroids = tri.mean(axis=1)
        e1 = tri[:, 1] - tri[:, 0]
        e2 = tri[:, 2] - tri[:, 0]
        self.areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        self.tags = classify_boundary(self)
        self.t_weight = np.array(
            [_clipped_area(t, self.polygon.triangle) for t in tri]
        )
        self.t_weight[self.t_weight < 1e-14 * self.areas] = 0.0
        self.bands = band_tables(self, self.t_plaquettes)

    @property
    def n(self) -> int:
        return self.polygon.n

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_plaquettes(self) -> int:
        return len(self.triangles)

    @cached_property
    def _centroid_tree(self) -> cKDTree:
        return cKDTree(self.centroids)

    @cached_property
    def t_plaquettes(self) -> np.ndarray:
        """Indices of plaquettes overlapping T_{2n} (positive weight)."""
        return np.flatnonzero(self.t_weight > 0)

    @cached_property
    def gradient_operator(self) -> sp.csr_matrix:
        """Sparse (2F, V) map; rows 2f and 2f+1 hold d/dx and d/dy on plaquette f."""
        tri = self.vertices[self.triangles]
        e = np.stack([tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]], axis=1)
        inv = np.linalg.inv(e)  # grad = inv @ (v1 - v0, v2 - v0)
        F = self.n_plaquettes
        coef = np.zeros((F, 2, 3))
        coef[:, :, 1] = inv[:, :, 0]
        coef[:, :, 2] = inv[:, :, 1]
        coef[:, :, 0] = -inv[:, :, 0] - inv[:, :, 1]
        rows = (2 * np.arange(F)[:, None, None] + np.arange(2)[None, :, None]).repeat(3, 2)
        cols = np.broadcast_to(self.triangles[:, None, :], (F, 2, 3))
        return sp.csr_matrix(
            (coef.ravel(), (rows.ravel(), cols.ravel())),
            shape=(2 * F, self.n_vertices),
        )

    def band_gradient_operator(self, kind: str, plaquettes: np.ndarray | None = None) -> sp.csr_matrix:
        """Sparse map from phi^1 vertex values to grad phi^alpha at the given plaquettes.

        Rows are ordered (plaquette, band, component); the default set is T_{2n}.
        """
        tables = self.bands if plaquettes is None else band_tables(self, plaquettes)
        nT = len(tables[0].target)
        n = self.n
        rows, cols, vals = [], [], []
        base = np.arange(nT) * (2 * n)
        for a, tab in enumerate(tables):
            sm = tab.sign(kind)[:, None, None] * np.transpose(tab.matrix, (0, 2, 1))
            for i in range(2):
                for j in range(2):
                    rows.append(base + 2 * a + i)
                    cols.append(2 * tab.target + j)
                    vals.append(sm[:, i, j])
        S = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(2 * n * nT, 2 * self.n_plaquettes),
        )
        return sp.csr_matrix(S @ self.gradient_operator)

    def vertices_with(self, tag: Tag) -> np.ndarray:
        return np.flatnonzero(self.tags & tag)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "N_c": self.N_c,
            "scheme": self.scheme,
            "vertices": self.vertices.tolist(),
            "vertex_labels": self.vertex_labels.tolist(),
            "triangles": self.triangles.tolist(),
            "centroid_labels": self.centroid_labels.tolist(),
            "t_weight": self.t_weight.tolist(),
            "tags": [sorted(tag_names(int(t))) for t in self.tags],
            "mirror_of": self.mirror_of.tolist(),
        }

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def gradient(mesh: Mesh, values: np.ndarray, attachment: str = "vertices") -> np.ndarray:
    """Per-plaquette gradient (F, 2) of the piecewise-linear interpolant."""
    values = np.asarray(values, dtype=float)
    if attachment != "vertices" or values.shape != (mesh.n_vertices,):
        raise ValueError(
            f"expected {mesh.n_vertices} vertex values, got {attachment} {values.shape}"
        )
    return (mesh.gradient_operator @ values).reshape(-1, 2)


def classify_boundary(mesh: Mesh) -> np.ndarray:
    poly = mesh.polygon
    v = mesh.vertices
    tol = GEOM_TOL
    tags = np.zeros(len(v), dtype=np.int64)
    x, y = v[:, 0], v[:, 1]
    mirror = mesh.mirror_of >= 0
    tags[mirror] |= Tag.MIRROR
    own = ~mirror
    tags[own & (np.abs(y) <= tol) & (x >= -tol) & (x <= poly.apothem + tol)] |= Tag.X_AXIS
    tags[own & (np.abs(x) <= tol)] |= Tag.Y_AXIS
    on_e1 = (np.abs(x - poly.apothem) <= tol) & (np.abs(y) <= poly.half_edge + tol)
    tags[own & on_e1] |= Tag.E1_TILDE
    for k in np.flatnonzero(own):
        if any(e != 0 for e in poly.edge_index(v[k], tol)):
            tags[k] |= Tag.OTHER_EDGE
    tags[own & (np.hypot(x - poly.apex[0], y - poly.apex[1]) <= tol)] |= Tag.APEX
    tags[own & (np.hypot(x, y) <= tol)] |= Tag.ORIGIN
    return tags


def _clip(poly: list[np.ndarray], a: np.ndarray, b: np.ndarray) -> list[np.ndarray]:
    """Keep the part of ``poly`` left of the directed line a -> b."""
    def side(p):
        return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])

    out: list[np.ndarray] = []
    for i, p in enumerate(poly):
        q = poly[(i + 1) % len(poly)]
        sp_, sq = side(p), side(q)
        if sp_ >= -1e-15:
            out.append(p)
        if (sp_ > 1e-15 and sq < -1e-15) or (sp_ < -1e-15 and sq > 1e-15):
            t = sp_ / (sp_ - sq)
            out.append(p + t * (q - p))
    return out


def _clipped_area(tri: np.ndarray, region: np.ndarray) -> float:
    reg = region
    if _signed_area(reg) < 0:
        reg = reg[::-1]
    poly = list(tri)
    for i in range(len(reg)):
        poly = _clip(poly, reg[i], reg[(i + 1) % len(reg)])
        if len(poly) < 3:
            return 0.0
    return abs(_signed_area(np.array(poly)))


def _signed_area(p: np.ndarray) -> float:
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def band_tables(mesh: Mesh, plaquettes: np.ndarray) -> list[BandTable]:
    """For each band, where and how phi^alpha at the given plaquettes is read from phi^1."""
    n = mesh.n
    tree = mesh._centroid_tree
    tidx = np.asarray(plaquettes, dtype=np.int64)
    tables = []
    for alpha in range(1, n + 1):
        target = np.empty(len(tidx), dtype=np.int64)
        mats = np.empty((len(tidx), 2, 2))
        sp_ = np.empty(len(tidx))
        sd = np.empty(len(tidx))
        for k, f in enumerate(tidx):
            c = mesh.centroids[f]
            m, s_p = band_isometry(c, alpha, "primal", n)
            _, s_d = band_isometry(c, alpha, "dual", n)
            dist, j = tree.query(m @ c)
            if dist > MATCH_TOL:
                raise RuntimeError(
                    f"band {alpha}: image of centroid {c} is not a centroid (off by {dist:.2e})"
                )
            target[k], mats[k], sp_[k], sd[k] = j, m, s_p, s_d
        tables.append(BandTable(target, mats, sp_, sd))
    return tables


def build_polygon_mesh(n: int, N_c: int) -> Mesh:
    if int(N_c) != N_c or N_c < 1:
        raise ValueError(f"N_c must be a positive integer, got {N_c!r}")
    poly = PolygonSpec(n)
    h = poly.apothem / N_c
    t = np.tan(poly.half_angle)

    # T_{2n}: vertex (i, j) = ((i-1) h, (j-1) h t), i = 1..N_c+1, j = 1..i
    tv, tl = [], []
    index = {}
    for i in range(1, N_c + 2):
        for j in range(1, i + 1):
            index[i, j] = len(tv)
            tv.append(((i - 1) * h, (j - 1) * h * t))
            tl.append((i, j))
    ttri, tcl = [], []
    for i in range(1, N_c + 1):
        for j in range(1, i + 1):
            ttri.append((index[i, j], index[i + 1, j], index[i + 1, j + 1]))
            tcl.append((i, 2 * j - 1))
            if j < i:
                ttri.append((index[i, j], index[i + 1, j + 1], index[i, j + 1]))
                tcl.append((i, 2 * j))
    tv = np.array(tv)
    tl = np.array(tl)
    ttri = np.array(ttri)
    tcl = np.array(tcl)

    beta = poly.half_angle
    reflect = np.array([[np.cos(2 * beta), np.sin(2 * beta)], [np.sin(2 * beta), -np.cos(2 * beta)]])
    verts, labels, tris, clabels = [], [], [], []
    tree_pts: list[np.ndarray] = []
    lookup: dict[tuple[int, int], int] = {}

    def key(p):
        return (int(round(p[0] / GEOM_TOL)), int(round(p[1] / GEOM_TOL)))

    for k in range(n):
        m = rotation((k // 2) * poly.rotation_angle)
        if k % 2:
            m = m @ reflect
        imgs = tv @ m.T
        local = np.empty(len(tv), dtype=np.int64)
        for a, p in enumerate(imgs):
            i, j = tl[a]
            kk = key(p)
            if kk not in lookup:
                lookup[kk] = len(verts)
                verts.append(p)
                gj = k * (i - 1) + j if k % 2 == 0 else (k + 1) * (i - 1) - j + 2
                labels.append((i, gj))
            local[a] = lookup[kk]
        for tr, (ci, cj) in zip(ttri, tcl):
            tris.append(local[tr])
            gj = k * (2 * ci - 1) + cj if k % 2 == 0 else (k + 1) * (2 * ci - 1) - cj + 1
            clabels.append((ci, gj))
    V = len(verts)
    return Mesh(
        polygon=poly,
        N_c=N_c,
        scheme="general",
        vertices=np.array(verts),
        vertex_labels=np.array(labels),
        triangles=np.array(tris),
        centroid_labels=np.array(clabels),
        mirror_of=-np.ones(V, dtype=np.int64),
    )


def build_hexagon_mesh(N_c: int) -> Mesh:
    if int(N_c) != N_c or N_c < 1:
        raise ValueError(f"N_c must be a positive integer, got {N_c!r}")
    poly = PolygonSpec(3)
    s = (1.0 / np.sqrt(3.0)) / N_c
    a = s * np.array([np.sqrt(3.0) / 2, -0.5])
    b = s * np.array([0.0, 1.0])

    def point(i, j):
        return (i - 1) * a + (j - 1) * b

    tris, clabels = [], []
    for i in range(1, N_c + 1):
        for j in range(1, N_c + 1):
            for tri, lab in (
                (((i, j), (i + 1, j), (i + 1, j + 1)), (i, 2 * j - 1)),
                (((i, j), (i + 1, j + 1), (i, j + 1)), (i, 2 * j)),
            ):
                c = np.mean([point(*v) for v in tri], axis=0)
                if c[1] >= -GEOM_TOL:
                    tris.append(tri)
                    clabels.append(lab)
    used = sorted({v for tri in tris for v in tri})
    index = {v: k for k, v in enumerate(used)}
    verts = np.array([point(*v) for v in used])
    mirror = -np.ones(len(used), dtype=np.int64)
    for k, (i, j) in enumerate(used):
        if verts[k, 1] < -GEOM_TOL:
            partner = (i, i - j + 1)
            if partner not in index:
                raise RuntimeError(f"mirror of vertex {(i, j)} missing from Q_6")
            mirror[k] = index[partner]
    return Mesh(
        polygon=poly,
        N_c=N_c,
        scheme="hexagon",
        vertices=verts,
        vertex_labels=np.array(used),
        triangles=np.array([[index[v] for v in tri] for tri in tris]),
        centroid_labels=np.array(clabels),
        mirror_of=mirror,
    )


def build_mesh(n: int, N_c: int, scheme: str = "auto") -> Mesh:
    """``auto`` uses the equilateral scheme for the hexagon, similar triangles otherwise."""
    if scheme == "auto":
        scheme = "hexagon" if n == 3 else "general"
    if scheme == "hexagon":
        if n != 3:
            raise ValueError("the equilateral scheme exists only for n = 3")
        return build_hexagon_mesh(N_c)
    if scheme == "general":
        return build_polygon_mesh(n, N_c)
    raise ValueError(f"unknown scheme {scheme!r}")
