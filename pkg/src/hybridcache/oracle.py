"""Independent reference solver: accelerated projected gradient.

Shares nothing with the dual search in :mod:`hybridcache.solver` except the
objective.  Projection onto the feasible set uses Dykstra's alternating
scheme between the budget boxes and the coverage half-spaces.
"""
from __future__ import annotations

import numpy as np

from .errors import InfeasibleInstance, NonConvergence
from .params import Allocation, NetworkParams
from .solver import Objective, objective_of

__all__ = ["project_box_budget", "project_feasible", "oracle_projected_gradient"]


def project_box_budget(y, cap, budget):
    """Euclidean projection of ``y`` onto ``{0 <= x <= cap, sum x <= budget}``."""
    x = np.clip(y, 0.0, cap)
    if x.sum() <= budget:
        return x
    lo, hi = 0.0, float(np.max(y))
    for _ in range(200):
        tau = 0.5 * (lo + hi)
        if np.clip(y - tau, 0.0, cap).sum() > budget:
            lo = tau
        else:
            hi = tau
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    return np.clip(y - hi, 0.0, cap)


def _project_cover(a, b):
    gap = np.maximum(0.0, 1.0 - (a + b)) / 2.0
    return a + gap, b + gap


def project_feasible(a, b, params: NetworkParams, tol=1e-13, max_iter=20000):
    """Dykstra projection onto the caching constraint set."""
    n, f = params.n, params.f_n
    N, S = params.node_budget, params.sbs_budget
    xa, xb = np.array(a, float), np.array(b, float)
    pa = np.zeros_like(xa); pb = np.zeros_like(xb)
    qa = np.zeros_like(xa); qb = np.zeros_like(xb)
    for _ in range(max_iter):
        ya = project_box_budget(xa + pa, n, N)
        yb = project_box_budget(xb + pb, f, S)
        pa, pb = xa + pa - ya, xb + pb - yb
        za, zb = _project_cover(ya + qa, yb + qb)
        qa, qb = ya + qa - za, yb + qb - zb
        change = max(np.abs(za - xa).max(), np.abs(zb - xb).max())
        xa, xb = za, zb
        if change <= tol * max(1.0, np.abs(xa).max(), np.abs(xb).max()):
            break
    # the last iterate sits in the half-spaces; clean the residual infeasibility
    xa, xb = np.clip(xa, 0.0, n), np.clip(xb, 0.0, f)
    return xa, xb


def oracle_projected_gradient(params: NetworkParams, tol: float = 1e-12,
                              max_iter: int = 20000):
    """Minimise the replica objective by FISTA with backtracking.

    Stops once the relative objective decrease over 50 iterations falls
    below ``tol``.  Returns ``(allocation, objective)``.
    """
    M = params.M
    N, S = params.node_budget, params.sbs_budget
    if N + S < M:
        raise InfeasibleInstance(f"total cache space {N + S} < library size {M}")
    p = np.asarray(params.zipf.probabilities)

    def fval(a, b):
        return float(np.sum(p / np.sqrt(a + b)))

    def grad(a, b):
        g = -0.5 * p / (a + b) ** 1.5
        return g, g

    # uniform feasible start
    xa, xb = project_feasible(np.full(M, N / M), np.full(M, S / M), params)
    fx = fval(xa, xb)
    ya, yb = xa, xb
    prev_a, prev_b = xa, xb
    theta = 1.0
    L = 1.0
    history = [fx]
    for it in range(max_iter):
        if (ya + yb).min() < 0.5:
            ya, yb, theta = xa, xb, 1.0
        fy = fval(ya, yb)
        ga, gb = grad(ya, yb)
        while True:
            na, nb = project_feasible(ya - ga / L, yb - gb / L, params)
            da, db = na - ya, nb - yb
            fn = fval(na, nb)
            if fn <= fy + ga @ da + gb @ db + 0.5 * L * (da @ da + db @ db) + 1e-15 * abs(fy):
                break
            L *= 2.0
        if fn > fx:
            if ya is xa:
                # a plain projected step from the current point cannot improve
                break
            # monotone restart
            ya, yb, theta = xa, xb, 1.0
            continue
        prev_a, prev_b = xa, xb
        xa, xb, fx = na, nb, fn
        theta_new = 0.5 * (1 + np.sqrt(1 + 4 * theta * theta))
        beta = (theta - 1) / theta_new
        ya, yb = xa + beta * (xa - prev_a), xb + beta * (xb - prev_b)
        theta = theta_new
        L = max(L / 1.5, 1e-12)
        history.append(fx)
        if len(history) > 50 and history[-51] - fx <= tol * abs(fx):
            break
    else:
        alloc = Allocation(xa, xb)
        raise NonConvergence("projected gradient hit the iteration cap",
                             best=(alloc, Objective(fx)))
    alloc = Allocation(xa, xb)
    return alloc, objective_of(alloc, params.zipf)
