"""Discretized primal program: minimal area under the band calibration constraints."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, Tag
from .polygon import base_one_form
from .solver import ConvexProgram, SolveResult, solve


@dataclass
class PrimalSolution:
    mesh: Mesh
    omega: np.ndarray  # rho^2 on every plaquette of Q
    phi1: np.ndarray  # vertex values on Q
    objective: float
    result: SolveResult

    @property
    def area(self) -> float:
        return self.objective


def _check_mesh(mesh: Mesh, n: int) -> None:
    if mesh.n != n:
        raise ValueError(f"mesh was built for n={mesh.n}, program asked for n={n}")


def primal_lift(mesh: Mesh) -> tuple[sp.csr_matrix, np.ndarray]:
    """Vertex values = lift @ u; phi^1 = 0 on e~_1 and on the y axis, mirrors copy."""
    fixed = (mesh.tags & (Tag.E1_TILDE | Tag.Y_AXIS)) != 0
    own = mesh.mirror_of < 0
    free = np.flatnonzero(own & ~fixed)
    col = -np.ones(mesh.n_vertices, dtype=np.int64)
    col[free] = np.arange(len(free))
    src = np.where(own, np.arange(mesh.n_vertices), mesh.mirror_of)
    rows = np.flatnonzero(col[src] >= 0)
    lift = sp.csr_matrix(
        (np.ones(len(rows)), (rows, col[src[rows]])),
        shape=(mesh.n_vertices, len(free)),
    )
    return lift, np.zeros(mesh.n_vertices)


def assemble_primal(mesh: Mesh, n: int | None = None) -> ConvexProgram:
    n = mesh.n if n is None else n
    _check_mesh(mesh, n)
    lift, offset = primal_lift(mesh)
    K = mesh.band_gradient_operator("primal") @ lift
    nT = len(mesh.t_plaquettes)
    omega = np.stack([base_one_form(a, n) for a in range(1, n + 1)])
    b = np.tile(omega.ravel(), nT)
    weights = 4 * n * mesh.t_weight[mesh.t_plaquettes]
    return ConvexProgram(
        K=K, b=b, c=np.zeros(lift.shape[1]), weights=weights, n_bands=n,
        form="max_sq", sense="min", lift=lift, lift_offset=offset,
    )


def band_fields(mesh: Mesh, phi1: np.ndarray, kind: str, plaquettes=None) -> np.ndarray:
    """grad phi^alpha at the plaquettes, shape (len, n, 2)."""
    op = mesh.band_gradient_operator(kind, plaquettes)
    return (op @ phi1).reshape(-1, mesh.n, 2)


def solve_primal(
    mesh: Mesh, n: int | None = None, tol: float = 1e-7, max_iter: int = 200_000, **kw
) -> PrimalSolution:
    prog = assemble_primal(mesh, n)
    res = solve(prog, tol=tol, max_iter=max_iter, **kw)
    phi1 = prog.lift @ res.x + prog.lift_offset
    n = mesh.n
    calib = band_fields(mesh, phi1, "primal", np.arange(mesh.n_plaquettes))
    calib += np.stack([base_one_form(a, n) for a in range(1, n + 1)])[None]
    omega = (np.linalg.norm(calib, axis=2) ** 2).max(axis=1)
    return PrimalSolution(mesh, omega, phi1, res.objective, res)


def length_potentials(sol: PrimalSolution) -> np.ndarray:
    """X^alpha = omega^alpha . (x, y) + phi^alpha at the vertices of Q, shape (n, V)."""
    mesh = sol.mesh
    n = mesh.n
    out = np.empty((n, mesh.n_vertices))
    for a in range(1, n + 1):
        out[a - 1] = mesh.vertices @ base_one_form(a, n) + band_values(
            mesh, sol.phi1, a, "primal", mesh.vertices
        )
    return out


def band_values(mesh: Mesh, phi1: np.ndarray, alpha: int, kind: str, points: np.ndarray) -> np.ndarray:
    """phi^alpha at arbitrary points of the polygon by interpolating phi^1 on Q."""
    from .polygon import band_isometry

    pts = np.atleast_2d(points)
    out = np.empty(len(pts))
    for k, p in enumerate(pts):
        m, s = band_isometry(p, alpha, kind, mesh.n)
        out[k] = s * interpolate(mesh, phi1, m @ p)
    return out


def interpolate(mesh: Mesh, values: np.ndarray, q: np.ndarray, tol: float = 1e-9) -> float:
    """Piecewise-linear interpolant of vertex values at a point of Q."""
    tri = mesh.vertices[mesh.triangles]
    near = mesh._centroid_tree.query(q, k=min(12, mesh.n_plaquettes))[1]
    for f in np.atleast_1d(near):
        a, b_, c = tri[f]
        mat = np.column_stack([b_ - a, c - a])
        lam = np.linalg.solve(mat, q - a)
        bary = np.array([1 - lam.sum(), lam[0], lam[1]])
        if bary.min() >= -tol:
            return float(bary @ values[mesh.triangles[f]])
    raise ValueError(f"point {q} is not covered by the mesh")


def dump_primal(sol: PrimalSolution, path: str | Path) -> None:
    mesh = sol.mesh
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["site", "x", "y", "value"])
        for (x, y), om in zip(mesh.centroids, sol.omega):
            w.writerow(["centroid", f"{x:.12g}", f"{y:.12g}", f"{om:.12g}"])
        for (x, y), ph in zip(mesh.vertices, sol.phi1):
            w.writerow(["vertex", f"{x:.12g}", f"{y:.12g}", f"{ph:.12g}"])
