"""First-order primal-dual solver for the two group-norm programs.

Both discretized programs reduce, after eliminating boundary ties and the
epigraph variables, to

    minimize_u   c . u + sum_g W_g f(y_g),     y = K u + b,

where each group ``y_g`` stacks ``n`` planar vectors (one per band) and ``f`` is
either ``max_a |y_a|^2`` (primal) or ``(sum_a |y_a|)^2`` (dual).  Both have
closed-form proximal maps, so diagonally preconditioned PDHG (Chambolle-Pock)
applies directly.  The stopping test uses a rigorous duality gap: the dual
iterate is projected onto ``K^T z = -c`` and its dual objective bounds the
optimum from below.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numba
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

log = logging.getLogger(__name__)

Form = Literal["max_sq", "sum_sq"]


@dataclass
class ConvexProgram:
    """``min c.u + sum_g W_g f(K u + b)`` plus the map back to vertex values.

    ``sense = "max"`` means the reported objective is ``-(min value)``.
    Vertex values are ``lift @ u + lift_offset``.
    """

    K: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    weights: np.ndarray
    n_bands: int
    form: Form
    sense: Literal["min", "max"] = "min"
    lift: sp.csr_matrix | None = None
    lift_offset: np.ndarray | None = None
    nu_slot: int | None = None
    u0: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.K = sp.csr_matrix(self.K)
        m, p = self.K.shape
        if m != 2 * self.n_bands * len(self.weights):
            raise ValueError(
                f"K has {m} rows, expected 2 * {self.n_bands} * {len(self.weights)}"
            )
        if self.b.shape != (m,) or self.c.shape != (p,):
            raise ValueError("offset or linear term has the wrong length")
        if np.any(self.weights < 0):
            raise ValueError("group weights must be non-negative")
        if self.form not in ("max_sq", "sum_sq"):
            raise ValueError(f"unknown form {self.form!r}")
        if self.nu_slot is not None and not 0 <= self.nu_slot < p:
            raise ValueError("nu slot out of range")
        if self.u0 is None:
            self.u0 = np.zeros(p)

    @property
    def n_vars(self) -> int:
        return self.K.shape[1]

    @property
    def n_groups(self) -> int:
        return len(self.weights)

    def groups(self, u: np.ndarray) -> np.ndarray:
        return (self.K @ u + self.b).reshape(self.n_groups, self.n_bands, 2)

    def group_values(self, y: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(y, axis=2)
        if self.form == "max_sq":
            return norms.max(axis=1) ** 2
        return norms.sum(axis=1) ** 2

    def min_objective(self, u: np.ndarray) -> float:
        return float(self.c @ u + self.weights @ self.group_values(self.groups(u)))

    def objective(self, u: np.ndarray) -> float:
        val = self.min_objective(u)
        return -val if self.sense == "max" else val

    def scaled(self, factor: float) -> "ConvexProgram":
        """Same program with every objective weight multiplied by ``factor``."""
        return ConvexProgram(
            self.K, self.b, factor * self.c, factor * self.weights, self.n_bands,
            self.form, self.sense, self.lift, self.lift_offset, self.nu_slot, self.u0,
        )


@dataclass
class SolveResult:
    x: np.ndarray
    objective: float
    feasibility_residual: float
    gap: float
    iterations: int
    converged: bool
    tolerance: float
    lower_bound: float
    upper_bound: float
    trace: list[tuple[int, float, float]] = field(default_factory=list, repr=False)

    def write_trace(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "objective", "residual"])
            w.writerows(self.trace)


def prox_max_sq_reference(v: np.ndarray, gw: np.ndarray) -> np.ndarray:
    """argmin_y  gw * max_a |y_a|^2 + 1/2 |y - v|^2, groups along axis 0."""
    rho = np.linalg.norm(v, axis=2)
    srt = -np.sort(-rho, axis=1)
    k = np.arange(1, rho.shape[1] + 1)
    r = np.cumsum(srt, axis=1) / (2 * gw[:, None] + k)
    nxt = np.concatenate([srt[:, 1:], np.zeros((len(srt), 1))], axis=1)
    first = np.argmax(r >= nxt * (1 - 1e-15), axis=1)
    rad = r[np.arange(len(r)), first]
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(rho > rad[:, None], rad[:, None] / rho, 1.0)
    return v * scale[:, :, None]


def prox_sum_sq_reference(v: np.ndarray, gw: np.ndarray) -> np.ndarray:
    """argmin_y  gw * (sum_a |y_a|)^2 + 1/2 |y - v|^2."""
    rho = np.linalg.norm(v, axis=2)
    srt = -np.sort(-rho, axis=1)
    k = np.arange(1, rho.shape[1] + 1)
    g2 = 2 * gw[:, None]
    mu = g2 * np.cumsum(srt, axis=1) / (1 + g2 * k)
    nxt = np.concatenate([srt[:, 1:], np.zeros((len(srt), 1))], axis=1)
    first = np.argmax(mu >= nxt * (1 - 1e-15), axis=1)
    shift = mu[np.arange(len(mu)), first]
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(rho > shift[:, None], 1 - shift[:, None] / rho, 0.0)
    return v * scale[:, :, None]


@numba.njit(cache=True)
def _sorted_norms(v, g, rho, srt):
    nb = v.shape[1]
    for a in range(nb):
        rho[a] = np.sqrt(v[g, a, 0] ** 2 + v[g, a, 1] ** 2)
        srt[a] = rho[a]
    for a in range(1, nb):  # insertion sort, descending; nb is small
        x = srt[a]
        b = a - 1
        while b >= 0 and srt[b] < x:
            srt[b + 1] = srt[b]
            b -= 1
        srt[b + 1] = x


@numba.njit(cache=True)
def _prox_max_sq(v, gw):
    G, nb = v.shape[0], v.shape[1]
    out = np.empty_like(v)
    rho = np.empty(nb)
    srt = np.empty(nb)
    for g in range(G):
        _sorted_norms(v, g, rho, srt)
        s = 0.0
        rad = 0.0
        for k in range(nb):
            s += srt[k]
            rad = s / (2 * gw[g] + k + 1)
            nxt = srt[k + 1] if k + 1 < nb else 0.0
            if rad >= nxt * (1 - 1e-15):
                break
        for a in range(nb):
            sc = rad / rho[a] if rho[a] > rad else 1.0
            out[g, a, 0] = v[g, a, 0] * sc
            out[g, a, 1] = v[g, a, 1] * sc
    return out


@numba.njit(cache=True)
def _prox_sum_sq(v, gw):
    G, nb = v.shape[0], v.shape[1]
    out = np.empty_like(v)
    rho = np.empty(nb)
    srt = np.empty(nb)
    for g in range(G):
        _sorted_norms(v, g, rho, srt)
        g2 = 2 * gw[g]
        s = 0.0
        mu = 0.0
        for k in range(nb):
            s += srt[k]
            mu = g2 * s / (1 + g2 * (k + 1))
            nxt = srt[k + 1] if k + 1 < nb else 0.0
            if mu >= nxt * (1 - 1e-15):
                break
        for a in range(nb):
            sc = 1 - mu / rho[a] if rho[a] > mu else 0.0
            out[g, a, 0] = v[g, a, 0] * sc
            out[g, a, 1] = v[g, a, 1] * sc
    return out


def prox_max_sq(v: np.ndarray, gw: np.ndarray) -> np.ndarray:
    """Compiled :func:`prox_max_sq_reference`."""
    return _prox_max_sq(np.ascontiguousarray(v, dtype=np.float64), np.asarray(gw, dtype=np.float64))


def prox_sum_sq(v: np.ndarray, gw: np.ndarray) -> np.ndarray:
    """Compiled :func:`prox_sum_sq_reference`."""
    return _prox_sum_sq(np.ascontiguousarray(v, dtype=np.float64), np.asarray(gw, dtype=np.float64))


def _huber(r: np.ndarray, eps: float) -> np.ndarray:
    return np.where(r <= eps, r * r / (2 * eps), r - eps / 2)


def prox_sum_sq_huber(v: np.ndarray, gw: np.ndarray, eps: float) -> np.ndarray:
    """Prox of gw * (sum_a h_eps(|y_a|))^2 by bisection on the common multiplier."""
    rho = np.linalg.norm(v, axis=2)

    def shrink(t):
        t = t[:, None]
        return np.where(rho <= eps + t, rho * eps / (eps + t), rho - t)

    lo = np.zeros(len(rho))
    hi = 2 * gw * _huber(rho, eps).sum(axis=1)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        excess = mid - 2 * gw * _huber(shrink(mid), eps).sum(axis=1)
        lo = np.where(excess < 0, mid, lo)
        hi = np.where(excess < 0, hi, mid)
    new = shrink(0.5 * (lo + hi))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(rho > 0, new / rho, 0.0)
    return v * scale[:, :, None]


def conjugate(z: np.ndarray, weights: np.ndarray, form: Form) -> np.ndarray:
    """Per-group convex conjugate of W f."""
    norms = np.linalg.norm(z, axis=2)
    agg = norms.sum(axis=1) if form == "max_sq" else norms.max(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(weights > 0, agg**2 / (4 * weights), np.where(agg > 0, np.inf, 0.0))
    return out


class _Projector:
    """Euclidean projection onto the affine set K^T z = -c."""

    def __init__(self, K: sp.csr_matrix, c: np.ndarray):
        self.K = K
        self.c = c
        self.lu = splu(sp.csc_matrix(K.T @ K))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        r = self.K.T @ z + self.c
        return z - self.K @ self.lu.solve(r)


def _step_sizes(K: sp.csr_matrix, G: int, n_bands: int) -> tuple[np.ndarray, np.ndarray]:
    absK = abs(K)
    col = np.asarray(absK.sum(axis=0)).ravel()
    row = np.asarray(absK.sum(axis=1)).ravel()
    tau = np.where(col > 0, 1.0 / np.where(col > 0, col, 1.0), 0.0)
    row = row.reshape(G, 2 * n_bands)
    # sigma has to be constant on each group for the group prox to apply
    sigma = 1.0 / np.maximum(row.max(axis=1), 1e-300)
    return tau, sigma


def solve(
    program: ConvexProgram,
    tol: float = 1e-7,
    max_iter: int = 200_000,
    seed: int = 0,
    *,
    check_every: int = 100,
    huber_eps: float | None = None,
    primal_weight: float = 0.1,
    adaptive: bool = True,
    adapt_weight: bool = True,
    trace: bool = False,
) -> SolveResult:
    """Run PDHG until the relative duality gap and the relative objective
    change over one window of ``check_every`` iterations are both below ``tol``.

    With ``adaptive`` the iteration restarts from the better of the current
    and the averaged iterate whenever the duality gap has dropped enough, and
    the primal weight (tau scaled by w, sigma by 1/w) is rebalanced from the
    primal and dual movement since the previous restart.

    ``seed`` is accepted for interface stability; the iteration is deterministic.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    del seed
    K, b, c = program.K, program.b, program.c
    G, nb = program.n_groups, program.n_bands
    W = program.weights
    tau0, sigma0 = _step_sizes(K, G, nb)
    KT = sp.csr_matrix(K.T)
    project = _Projector(K, c) if huber_eps is None else None

    if huber_eps is None:
        prox = prox_max_sq if program.form == "max_sq" else prox_sum_sq
    elif program.form == "sum_sq":
        def prox(v, gw):
            return prox_sum_sq_huber(v, gw, huber_eps)
    else:
        raise ValueError("Huber smoothing applies to the sum-of-norms form only")
    if project is None:
        adaptive = False

    homogeneous = not np.any(c)

    def lower_bound(z):
        zp = project(z).reshape(G, nb, 2)
        lin = float(b @ zp.ravel())
        quad = float(conjugate(zp, W, program.form).sum())
        if homogeneous and quad > 0:
            # K^T z = 0 is a cone, so the best multiple t zp can be taken
            return max(lin, 0.0) ** 2 / (4 * quad)
        return lin - quad

    def gap_at(u, z):
        obj = program.min_objective(u)
        return obj, obj - lower_bound(z)

    w = primal_weight
    u = np.array(program.u0, dtype=float)
    z = np.zeros(K.shape[0])
    u_rst, z_rst = u.copy(), z.copy()
    u_sum, z_sum, n_avg = np.zeros_like(u), np.zeros_like(z), 0
    rst_gap = np.inf
    last_cand_gap = np.inf
    since_restart = 0
    history: list[tuple[int, float, float]] = []
    prev_obj = None
    best_lower = -np.inf
    best_u, best_obj = u.copy(), program.min_objective(u)
    gap = np.inf
    change = np.inf
    converged = False
    it = 0
    while it < max_iter:
        tau = tau0 * w
        sigma = sigma0 / w
        sig_rows = np.repeat(sigma, 2 * nb)
        sig3 = sigma[:, None, None]
        gw = W / sigma
        for _ in range(check_every):
            u_new = u - tau * (KT @ z + c)
            ubar = 2 * u_new - u
            v = (z + sig_rows * (K @ ubar + b)).reshape(G, nb, 2)
            z = (v - sig3 * prox(v / sig3, gw)).ravel()
            u = u_new
            u_sum += u
            z_sum += z
            n_avg += 1
        it += check_every
        since_restart += check_every
        obj = program.min_objective(u)
        if not np.isfinite(obj):
            break
        if project is not None:
            lo_cur = lower_bound(z)
            cand_u, cand_z, cand_obj, cand_lo = u, z, obj, lo_cur
            if adaptive:
                ua, za = u_sum / n_avg, z_sum / n_avg
                obj_a = program.min_objective(ua)
                lo_a = lower_bound(za)
                if obj_a - lo_a < obj - lo_cur:
                    cand_u, cand_z, cand_obj, cand_lo = ua, za, obj_a, lo_a
            best_lower = max(best_lower, cand_lo, lo_cur)
            if cand_obj < best_obj:
                best_u, best_obj = cand_u.copy(), cand_obj
            if obj < best_obj:
                best_u, best_obj = u.copy(), obj
            gap = best_obj - best_lower
            cand_gap = cand_obj - cand_lo
            if adaptive and (
                cand_gap <= 0.2 * rst_gap
                or (cand_gap <= 0.8 * rst_gap and cand_gap > last_cand_gap)
                or since_restart >= 0.36 * it
            ):
                du = np.sqrt(np.sum((cand_u - u_rst) ** 2 / tau0))
                dz = np.sqrt(np.sum((cand_z - z_rst) ** 2 / np.repeat(sigma0, 2 * nb)))
                if adapt_weight and du > 1e-10 and dz > 1e-10:
                    w = np.exp(0.5 * np.log(du / dz) + 0.5 * np.log(w))
                    log.debug("restart at %d: weight %.4g, candidate gap %.3e", it, w, cand_gap)
                u, z = cand_u.copy(), cand_z.copy()
                u_rst, z_rst = u.copy(), z.copy()
                u_sum[:] = 0
                z_sum[:] = 0
                n_avg = 0
                rst_gap = cand_gap
                since_restart = 0
                last_cand_gap = np.inf
            else:
                last_cand_gap = cand_gap
        else:
            best_u, best_obj = u.copy(), obj
        change = np.inf if prev_obj is None else abs(best_obj - prev_obj) / (1 + abs(best_obj))
        prev_obj = best_obj
        scale = 1 + abs(best_obj)
        history.append((it, best_obj if program.sense == "min" else -best_obj, gap / scale))
        if change <= tol and (project is None or gap <= tol * scale):
            converged = True
            break
    if not converged:
        log.warning(
            "PDHG stopped after %d iterations: gap %.3e, change %.3e", it, gap, change
        )
    if program.sense == "max":
        obj_out, lo, hi = -best_obj, -best_obj, -best_lower
    else:
        obj_out, lo, hi = best_obj, best_lower, best_obj
    return SolveResult(
        x=best_u,
        objective=float(obj_out),
        feasibility_residual=0.0,
        gap=float(gap),
        iterations=it,
        converged=converged,
        tolerance=tol,
        lower_bound=float(lo),
        upper_bound=float(hi),
        trace=history if trace else [],
    )
