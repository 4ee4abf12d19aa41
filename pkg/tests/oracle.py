"""Interior-point reference solutions via cvxpy, for tests only."""

import cvxpy as cp
import numpy as np


def conic(prog):
    """Minimum of c.u + sum_g W_g f(K u + b) by Clarabel, returned as (value, u)."""
    u = cp.Variable(prog.n_vars)
    y = prog.K @ u + prog.b
    G, nb = prog.n_groups, prog.n_bands
    norms = cp.reshape(cp.norm(cp.reshape(y, (G * nb, 2), order="C"), 2, axis=1), (G, nb), order="C")
    t = cp.max(norms, axis=1) if prog.form == "max_sq" else cp.sum(norms, axis=1)
    obj = prog.c @ u + cp.sum(cp.multiply(prog.weights, cp.square(t)))
    pr = cp.Problem(cp.Minimize(obj))
    pr.solve(solver="CLARABEL")
    return float(pr.value), np.asarray(u.value)
