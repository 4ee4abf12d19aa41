"""Discretized dual program, the dual metric and its saturating geodesics."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .mesh import Mesh, Tag
from .polygon import rotation
from .primal import band_fields
from .solver import ConvexProgram, SolveResult, solve

log = logging.getLogger(__name__)

NU_INIT = 0.5
LEVEL_NUDGE = 1e-12


@dataclass
class DualSolution:
    mesh: Mesh
    nu: float
    varphi1: np.ndarray  # vertex values on Q (mirror vertices hold the continuation)
    rho: np.ndarray  # sum_a |d phi^a| on every plaquette of Q
    objective: float
    result: SolveResult

    @property
    def area(self) -> float:
        return self.objective


def dual_lift(mesh: Mesh) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
    """Vertex values = lift @ (free values, nu).

    x-axis vertices (origin and (1/2, 0) included) carry nu/2; other polygon
    edges carry 0; e~_1 and the y axis are free.  A mirror vertex below the
    cut holds nu minus its partner, the continuation of phi^1 across the cut.
    """
    V = mesh.n_vertices
    own = mesh.mirror_of < 0
    on_cut = (mesh.tags & Tag.X_AXIS) != 0
    zero = ((mesh.tags & Tag.OTHER_EDGE) != 0) & ~on_cut
    free = np.flatnonzero(own & ~on_cut & ~zero)
    nu_col = len(free)
    rows, cols, vals = [], [], []
    col = -np.ones(V, dtype=np.int64)
    col[free] = np.arange(len(free))
    for k in range(V):
        src = k if own[k] else mesh.mirror_of[k]
        sgn = 1.0 if own[k] else -1.0
        if not own[k]:
            rows.append(k), cols.append(nu_col), vals.append(1.0)
        if col[src] >= 0:
            rows.append(k), cols.append(col[src]), vals.append(sgn)
        elif on_cut[src]:
            rows.append(k), cols.append(nu_col), vals.append(0.5 * sgn)
    lift = sp.csr_matrix((vals, (rows, cols)), shape=(V, nu_col + 1))
    return lift, np.zeros(V), free


def _initial_guess(mesh: Mesh, lift: sp.csr_matrix, free: np.ndarray) -> np.ndarray:
    """nu = 1/2 and free values harmonic for the graph Laplacian of Q."""
    p = lift.shape[1]
    u = np.zeros(p)
    u[-1] = NU_INIT
    if len(free) == 0:
        return u
    tri = mesh.triangles
    i = np.concatenate([tri[:, 0], tri[:, 1], tri[:, 2]])
    j = np.concatenate([tri[:, 1], tri[:, 2], tri[:, 0]])
    A = sp.coo_matrix((np.ones(len(i)), (i, j)), shape=(mesh.n_vertices,) * 2).tocsr()
    A = ((A + A.T) > 0).astype(float)
    L = sp.diags(np.asarray(A.sum(axis=1)).ravel()) - A
    # reduced Laplacian in the free coordinates (mirror rows fold back onto sources)
    Lr = sp.csr_matrix(lift.T @ L @ lift)
    rhs = -Lr[:, -1].toarray().ravel() * NU_INIT
    sol = spsolve(sp.csc_matrix(Lr[:-1, :-1]), rhs[:-1])
    u[:-1] = sol
    return u


def assemble_dual(mesh: Mesh, n: int | None = None) -> ConvexProgram:
    n = mesh.n if n is None else n
    if mesh.n != n:
        raise ValueError(f"mesh was built for n={mesh.n}, program asked for n={n}")
    lift, offset, free = dual_lift(mesh)
    K = mesh.band_gradient_operator("dual") @ lift
    p = lift.shape[1]
    c = np.zeros(p)
    c[-1] = -2.0 * n
    weights = 4 * n * mesh.t_weight[mesh.t_plaquettes]
    return ConvexProgram(
        K=K, b=np.zeros(K.shape[0]), c=c, weights=weights, n_bands=n,
        form="sum_sq", sense="max", lift=lift, lift_offset=offset,
        nu_slot=p - 1, u0=_initial_guess(mesh, lift, free),
    )


def solve_dual(
    mesh: Mesh, n: int | None = None, tol: float = 1e-7, max_iter: int = 200_000, **kw
) -> DualSolution:
    prog = assemble_dual(mesh, n)
    res = solve(prog, tol=tol, max_iter=max_iter, **kw)
    nu = float(res.x[prog.nu_slot])
    varphi1 = prog.lift @ res.x + prog.lift_offset
    grads = band_fields(mesh, varphi1, "dual", np.arange(mesh.n_plaquettes))
    rho = np.linalg.norm(grads, axis=2).sum(axis=1)
    return DualSolution(mesh, nu, varphi1, rho, res.objective, res)


def metric_from_dual(sol: DualSolution) -> np.ndarray:
    """rho^2 on the plaquettes of Q."""
    return sol.rho**2


def _segment_polylines(segments: list[tuple[np.ndarray, np.ndarray]], tol: float = 1e-9):
    """Chain unordered segments into polylines."""
    def key(p):
        return (round(p[0] / tol), round(p[1] / tol))

    ends: dict[tuple, list[int]] = {}
    for k, (a, b) in enumerate(segments):
        ends.setdefault(key(a), []).append(k)
        ends.setdefault(key(b), []).append(k)
    used = np.zeros(len(segments), dtype=bool)
    lines = []
    order = sorted(range(len(segments)), key=lambda k: min(len(ends[key(segments[k][0])]), len(ends[key(segments[k][1])])))
    for k0 in order:
        if used[k0]:
            continue
        used[k0] = True
        a, b = segments[k0]
        line = [a, b]
        for forward in (True, False):
            while True:
                tip = line[-1] if forward else line[0]
                nxt = [k for k in ends.get(key(tip), []) if not used[k]]
                if not nxt:
                    break
                k = nxt[0]
                used[k] = True
                p, q = segments[k]
                other = q if key(p) == key(tip) else p
                if forward:
                    line.append(other)
                else:
                    line.insert(0, other)
        lines.append(np.array(line))
    return lines


def _upper_pieces(mesh: Mesh, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Triangles of Q with vertex values, plaquettes cut by the x axis clipped to y >= 0."""
    tris, vals = [], []
    for f in range(mesh.n_plaquettes):
        idx = mesh.triangles[f]
        pts, v = mesh.vertices[idx], values[idx]
        if pts[:, 1].min() >= -1e-12:
            tris.append(pts)
            vals.append(v)
            continue
        poly, pv = [], []
        for i in range(3):
            j = (i + 1) % 3
            if pts[i, 1] >= -1e-12:
                poly.append(pts[i]), pv.append(v[i])
            if (pts[i, 1] > 1e-12) != (pts[j, 1] > 1e-12) and abs(pts[i, 1] - pts[j, 1]) > 1e-12:
                t = pts[i, 1] / (pts[i, 1] - pts[j, 1])
                if 1e-12 < t < 1 - 1e-12:
                    poly.append(pts[i] + t * (pts[j] - pts[i])), pv.append(v[i] + t * (v[j] - v[i]))
        for k in range(1, len(poly) - 1):
            tris.append(np.array([poly[0], poly[k], poly[k + 1]]))
            vals.append(np.array([pv[0], pv[k], pv[k + 1]]))
    return np.array(tris), np.array(vals)


def _full_polygon_field(sol: DualSolution, alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """Triangles and phi^alpha values covering the whole polygon.

    phi^1 is even in x and odd in y; phi^alpha is phi^1 rotated by theta_{alpha-1}.
    """
    mesh = sol.mesh
    tq, vq = _upper_pieces(mesh, sol.varphi1)
    rot = rotation((alpha - 1) * np.pi / mesh.n)
    tris, vals = [], []
    for sx in (1, -1):
        for sy in (1, -1):
            m = rot @ np.diag([sx, sy]).astype(float)
            tris.append(tq @ m.T)
            vals.append(sy * vq)
    return np.concatenate(tris), np.concatenate(vals)


def extract_geodesics(sol: DualSolution, alpha: int, levels) -> list[np.ndarray]:
    """Iso-lines of phi^alpha over the whole polygon, one polyline per level.

    Each polyline runs from e_alpha to e~_alpha; levels outside (-nu/2, nu/2)
    give an empty polyline.
    """
    n = sol.mesh.n
    if not 1 <= alpha <= n:
        raise ValueError(f"band index must be in 1..{n}, got {alpha}")
    tris, vals = _full_polygon_field(sol, alpha)
    half = abs(sol.nu) / 2
    theta = (alpha - 1) * np.pi / n
    direction = np.array([np.cos(theta), np.sin(theta)])
    out = []
    for level in levels:
        if not -half <= level <= half:
            log.warning("level %.6g outside [-nu/2, nu/2]; returning empty polyline", level)
            out.append(np.empty((0, 2)))
            continue
        lv = level
        if np.any(np.isclose(vals, lv, rtol=0, atol=1e-14)):
            lv = level + LEVEL_NUDGE
        segs = []
        for pts, v in zip(tris, vals):
            d = v - lv
            cross = []
            for i, j in ((0, 1), (1, 2), (2, 0)):
                if (d[i] < 0) != (d[j] < 0):
                    t = d[i] / (d[i] - d[j])
                    cross.append(pts[i] + t * (pts[j] - pts[i]))
            if len(cross) == 2:
                segs.append((cross[0], cross[1]))
        if not segs:
            out.append(np.empty((0, 2)))
            continue
        lines = _segment_polylines(segs)
        line = max(lines, key=len)
        # orient from e_alpha (negative side) to e~_alpha
        if line[0] @ direction > line[-1] @ direction:
            line = line[::-1]
        out.append(line)
    return out


def write_geodesics_csv(curves: dict[tuple[int, float], np.ndarray], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["band", "level", "point_index", "x", "y"])
        for (band, level), line in curves.items():
            for k, (x, y) in enumerate(line):
                w.writerow([band, f"{level:.10g}", k, f"{x:.10g}", f"{y:.10g}"])


def write_geodesics_svg(
    curves: dict[tuple[int, float], np.ndarray], vertices: np.ndarray, path: str | Path, size: int = 600
) -> None:
    colors = ["#c0392b", "#2471a3", "#229954", "#b9770e", "#7d3c98", "#17a589", "#566573", "#ca6f1e"]
    r = np.abs(vertices).max() * 1.05

    def tx(p):
        return (p[0] + r) / (2 * r) * size, (r - p[1]) / (2 * r) * size

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    poly = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(tx, vertices))
    parts.append(f'<polygon points="{poly}" fill="none" stroke="black" stroke-width="1.5"/>')
    for (band, _level), line in curves.items():
        if len(line) < 2:
            continue
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(tx, line))
        col = colors[(band - 1) % len(colors)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))


def dump_dual(sol: DualSolution, path: str | Path) -> None:
    mesh = sol.mesh
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["site", "x", "y", "value"])
        for (x, y), r in zip(mesh.centroids, sol.rho):
            w.writerow(["centroid", f"{x:.12g}", f"{y:.12g}", f"{r * r:.12g}"])
        for (x, y), ph in zip(mesh.vertices, sol.varphi1):
            w.writerow(["vertex", f"{x:.12g}", f"{y:.12g}", f"{ph:.12g}"])
