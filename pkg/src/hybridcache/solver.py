"""Replica-count optimisation for nodes + SBSs via two-price dual search.

The relaxed problem is

    minimise    sum_m p_m / sqrt(A_m + B_m)
    subject to  sum A <= n K_n,   sum B <= f K_sbs,
                0 <= A_m <= n,    0 <= B_m <= f,    A_m + B_m >= 1.

For fixed prices ``lam`` (node slot) and ``mu`` (SBS slot) every content
decouples: its total ``t`` follows ``p / (2 t^1.5) = price`` on the
cheaper resource until that resource's cap, then continues on the dearer
one.  Because the objective depends only on ``t``, the optimum is found
by first trying a single common price and, if one resource cannot
absorb its share, solving the two one-dimensional price searches that
then decouple exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import nnls

from .errors import InfeasibleInstance, NonConvergence, ZeroTotal
from .params import Allocation, NetworkParams
from .zipf import ZipfModel

__all__ = [
    "DualCertificate", "Objective", "Solution",
    "solve_joint", "solve_decoupled", "solve_baseline", "baseline_combination",
    "objective_of", "kkt_residual",
]

DEFAULT_TOL = 1e-8
MAX_BISECT = 200


@dataclass(frozen=True)
class DualCertificate:
    """Lagrange multipliers certifying a returned allocation.

    ``w``/``nu`` price the per-content caps ``A_m <= n``/``B_m <= f``,
    ``rho`` the coverage constraint ``A_m + B_m >= 1`` and ``sigma_a`` /
    ``sigma_b`` the sign constraints.  ``kkt_residual`` is the worst
    stationarity / complementary-slackness / feasibility violation,
    normalised by the largest marginal gain ``max_m p_m / (2 t_m^1.5)``.
    """

    lambda_node: float
    mu_sbs: float
    w: np.ndarray
    nu: np.ndarray
    rho: np.ndarray
    sigma_a: np.ndarray
    sigma_b: np.ndarray
    kkt_residual: float
    case: str = ""


@dataclass(frozen=True)
class Objective:
    value: float


class Solution(NamedTuple):
    allocation: Allocation
    certificate: DualCertificate
    objective: Objective


def objective_of(alloc: Allocation, model: ZipfModel) -> Objective:
    """Evaluate ``sum_m p_m / sqrt(A_m + B_m)``."""
    t = alloc.t
    if len(t) != model.library_size:
        raise ValueError("allocation length does not match the library size")
    if (t <= 0).any():
        raise ZeroTotal(f"content {int(np.argmax(t <= 0)) + 1} has no replica")
    terms = model.probabilities / np.sqrt(t)
    return Objective(math.fsum(terms[::-1]))


# ---------------------------------------------------------------------------
# one-dimensional price searches

def _total_at_price(p, price):
    if price <= 0:
        return np.full_like(p, np.inf)
    return (p / (2.0 * price)) ** (2.0 / 3.0)


def _find_price(total, target):
    """Price ``x > 0`` with ``total(x) == target`` for decreasing ``total``."""
    hi = 1.0
    for _ in range(2100):
        if total(hi) <= target:
            break
        hi *= 2.0
    else:
        raise NonConvergence("could not bracket the price from above")
    lo = hi
    for _ in range(2100):
        if total(lo) >= target:
            break
        lo *= 0.5
    else:
        raise NonConvergence("could not bracket the price from below")
    for _ in range(MAX_BISECT):
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        if total(mid) >= target:
            lo = mid
        else:
            hi = mid
    return lo if abs(total(lo) - target) <= abs(total(hi) - target) else hi


def _single_resource(p, cap, budget, lower):
    """min sum p/sqrt(x)  s.t.  sum x <= budget,  lower <= x <= cap."""
    if len(p) == 0:
        return np.zeros(0), 0.0
    if lower * len(p) > budget:
        raise InfeasibleInstance(
            f"{len(p)} contents need at least {lower * len(p)} slots, budget is {budget}")
    if cap * len(p) <= budget:
        return np.full(len(p), float(cap)), 0.0

    def alloc(price):
        return np.clip(_total_at_price(p, price), lower, cap)

    price = _find_price(lambda x: alloc(x).sum(), budget)
    return alloc(price), price


# ---------------------------------------------------------------------------
# split of known totals between the two resources

def _split_bounds(t, n, f):
    lo = np.maximum(0.0, t - f)
    hi = np.minimum(float(n), t)
    return lo, np.maximum(lo, hi)


def _analytic_center_split(t, n, f, target):
    """Node share ``A`` of each total maximising the log-barrier of the box.

    Among all splits with ``sum A == target`` this picks the one maximising
    ``sum log A + log(n-A) + log B + log(f-B)``, i.e. the analytic centre of
    the (flat) optimal face, which is where interior-point iterates end up.
    """
    lo, hi = _split_bounds(t, n, f)
    free = hi - lo > 1e-12 * np.maximum(1.0, hi)
    a = lo.copy()
    if not free.any():
        return a
    tf, lof, hif = t[free], lo[free], hi[free]
    fixed_sum = a[~free].sum()

    def inner(eta):
        lo_, hi_ = lof.copy(), hif.copy()
        for _ in range(MAX_BISECT):
            x = 0.5 * (lo_ + hi_)
            with np.errstate(divide="ignore"):
                d = 1 / x - 1 / (n - x) - 1 / (tf - x) + 1 / (f - tf + x)
            up = d > eta
            lo_ = np.where(up, x, lo_)
            hi_ = np.where(up, hi_, x)
            if np.all(hi_ - lo_ <= 4e-16 * np.maximum(1.0, hi_)):
                break
        return 0.5 * (lo_ + hi_)

    want = target - fixed_sum
    # a target on the edge of the box leaves no interior to centre in
    if want <= lof.sum() * (1 + 1e-14):
        a[free] = lof
        return a
    if want >= hif.sum() * (1 - 1e-14):
        a[free] = hif
        return a
    e_lo, e_hi = -1.0, 1.0
    for _ in range(2100):
        if inner(e_lo).sum() >= want:
            break
        e_lo *= 2.0
    for _ in range(2100):
        if inner(e_hi).sum() <= want:
            break
        e_hi *= 2.0
    for _ in range(MAX_BISECT):
        mid = 0.5 * (e_lo + e_hi)
        if not e_lo < mid < e_hi:
            break
        if inner(mid).sum() > want:
            e_lo = mid
        else:
            e_hi = mid
    x = inner(0.5 * (e_lo + e_hi))
    # tiny sum drift from bisection is removed proportionally to slack
    drift = want - x.sum()
    room = np.where(drift > 0, hif - x, x - lof)
    if room.sum() > 0:
        x = x + drift * room / room.sum()
    a[free] = x
    return a


def _nodes_first_split(t, n, f, target):
    lo, hi = _split_bounds(t, n, f)
    spare = target - lo.sum()
    a = lo.copy()
    for m in range(len(t)):
        take = min(hi[m] - lo[m], spare)
        a[m] += take
        spare -= take
        if spare <= 0:
            break
    return a


_SPLITS = {"analytic_center": _analytic_center_split, "nodes_first": _nodes_first_split}


# ---------------------------------------------------------------------------
# certificates

def _multipliers(p, a, b, lam, mu, n, f, atol):
    """Non-negative multipliers of the active per-content constraints.

    Solved per content as a tiny non-negative least-squares problem over
    the constraints that are active at the primal point.
    """
    t = a + b
    g = p / (2.0 * t ** 1.5)
    M = len(p)
    w, nu, rho, sa, sb = (np.zeros(M) for _ in range(5))
    for m in range(M):
        cols, names = [], []
        if a[m] >= n - atol * n:
            cols.append((1.0, 0.0)); names.append("w")
        if b[m] >= f - atol * f:
            cols.append((0.0, 1.0)); names.append("nu")
        if t[m] <= 1 + atol:
            cols.append((-1.0, -1.0)); names.append("rho")
        if a[m] <= atol * n:
            cols.append((-1.0, 0.0)); names.append("sa")
        if b[m] <= atol * f:
            cols.append((0.0, -1.0)); names.append("sb")
        if not cols:
            continue
        rhs = np.array([g[m] - lam, g[m] - mu])
        coef, _ = nnls(np.array(cols).T, rhs)
        for name, c in zip(names, coef):
            {"w": w, "nu": nu, "rho": rho, "sa": sa, "sb": sb}[name][m] = c
    return w, nu, rho, sa, sb


def kkt_residual(alloc: Allocation, params: NetworkParams, lam, mu, w, nu, rho,
                 sigma_a, sigma_b, p=None, active_a=None, active_b=None) -> float:
    """Worst KKT violation of the joint problem at the given primal/dual pair.

    Recomputed from scratch; used both by the solvers and by tests to audit
    certificates.  ``active_a`` / ``active_b`` restrict the stationarity
    check to the variables present in a decoupled sub-problem.
    """
    p = params.zipf.probabilities if p is None else np.asarray(p)
    a, b, t = alloc.a, alloc.b, alloc.t
    n, f = params.n, params.f_n
    N, S = params.node_budget, params.sbs_budget
    ma = np.ones(len(p), bool) if active_a is None else np.asarray(active_a)
    mb = np.ones(len(p), bool) if active_b is None else np.asarray(active_b)
    g = np.where(t > 0, p / (2.0 * np.where(t > 0, t, 1.0) ** 1.5), np.inf)
    scale = max(g.max(), 1e-300)
    stat_a = np.abs(-g + lam + w - rho - sigma_a)[ma]
    stat_b = np.abs(-g + mu + nu - rho - sigma_b)[mb]
    parts = [
        stat_a.max(initial=0.0) / scale,
        stat_b.max(initial=0.0) / scale,
        lam * abs(a.sum() - N) / (scale * N),
        mu * abs(b.sum() - S) / (scale * S),
        (w * np.abs(a - n)).max(initial=0.0) / (scale * n),
        (nu * np.abs(b - f)).max(initial=0.0) / (scale * f),
        (rho * np.abs(t - 1)).max(initial=0.0) / scale,
        (sigma_a * np.abs(a)).max(initial=0.0) / (scale * n),
        (sigma_b * np.abs(b)).max(initial=0.0) / (scale * f),
        # dual feasibility
        max(0.0, -lam) / scale, max(0.0, -mu) / scale,
        max(0.0, -min(w.min(initial=0), nu.min(initial=0), rho.min(initial=0),
                      sigma_a.min(initial=0), sigma_b.min(initial=0))) / scale,
        # primal feasibility
        max(0.0, a.sum() - N) / N, max(0.0, b.sum() - S) / S,
        max(0.0, (a - n).max(initial=0.0)) / n, max(0.0, (b - f).max(initial=0.0)) / f,
        max(0.0, -a.min(initial=0.0)), max(0.0, -b.min(initial=0.0)),
    ]
    if active_a is None and active_b is None:
        parts.append(max(0.0, (1 - t).max(initial=0.0)))
    return float(max(parts))


def _certify(p, a, b, lam, mu, params, case, ma=None, mb=None, zero_rho=False):
    alloc = Allocation(a, b)
    w, nu, rho, sa, sb = _multipliers(p, a, b, lam, mu, params.n, params.f_n, 1e-12)
    if zero_rho:
        rho = np.zeros_like(rho)
    res = kkt_residual(alloc, params, lam, mu, w, nu, rho, sa, sb, p=p,
                       active_a=ma, active_b=mb)
    return DualCertificate(lam, mu, w, nu, rho, sa, sb, res, case)


def _check(sol_alloc, cert, tol, what):
    if not cert.kkt_residual <= tol:
        raise NonConvergence(f"{what}: KKT residual {cert.kkt_residual:.3g} exceeds {tol:.3g}",
                             best=sol_alloc, residual=cert.kkt_residual)


# ---------------------------------------------------------------------------
# public solvers

def solve_joint(params: NetworkParams, tol: float = DEFAULT_TOL,
                tie_split: str = "analytic_center") -> Solution:
    """Optimal real-valued ``(A_m, B_m)`` with an audited KKT certificate.

    ``tie_split`` decides how totals are divided when both resources end
    up with the same price (the objective is then blind to the split):
    ``"analytic_center"`` (default) or ``"nodes_first"``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = np.asarray(params.zipf.probabilities)
    M, n, f = params.M, params.n, params.f_n
    N, S = params.node_budget, params.sbs_budget
    if N + S < M:
        raise InfeasibleInstance(f"total cache space {N + S} < library size {M}")

    cap = n + f
    if M * cap <= N + S:
        eta = 0.0
        t = np.full(M, float(cap))
    else:
        eta = _find_price(lambda x: np.clip(_total_at_price(p, x), 1, cap).sum(), N + S)
        t = np.clip(_total_at_price(p, eta), 1, cap)
    need_nodes = np.maximum(0.0, t - f).sum()
    need_sbs = np.maximum(0.0, t - n).sum()
    slack = 1e-12 * (N + S)

    if need_nodes <= N + slack and need_sbs <= S + slack:
        case = "common_price"
        lam = mu = eta
        target = min(float(N), max(t.sum() - S, need_nodes))
        a = _SPLITS[tie_split](t, n, f, target)
        b = np.clip(t - a, 0.0, f)
    elif need_nodes > N:
        # node slots scarce: SBSs are the cheap resource and fill first
        case = "nodes_scarce"
        node_part = lambda x: np.clip(_total_at_price(p, x) - f, 0, n)
        lam = _find_price(lambda x: node_part(x).sum(), N)
        a = node_part(lam)
        b, mu = _single_resource(p, f, S, 1.0)
    else:
        case = "sbs_scarce"
        sbs_part = lambda x: np.clip(_total_at_price(p, x) - n, 0, f)
        mu = _find_price(lambda x: sbs_part(x).sum(), S)
        b = sbs_part(mu)
        a, lam = _single_resource(p, n, N, 1.0)
    if case != "common_price" and (lam < mu) == (case == "nodes_scarce"):
        raise NonConvergence(f"price ordering inconsistent in case {case}: lam={lam}, mu={mu}")

    cert = _certify(p, a, b, lam, mu, params, case)
    alloc = Allocation(a, b)
    _check(alloc, cert, tol, "solve_joint")
    return Solution(alloc, cert, objective_of(alloc, params.zipf))


def solve_decoupled(params: NetworkParams, partition, tol: float = DEFAULT_TOL):
    """Solve the node-only problem on ``M1`` and the SBS-only problem on ``M3``.

    ``partition`` is a pair of iterables of 1-based content ids.  Node
    replicas are placed only on ``M1`` and SBS replicas only on ``M3``;
    neither sub-problem has a lower bound.  Returns ``(allocation,
    certificate)``; interior entries satisfy ``A_m = (p_m / 2 lam)^(2/3)``.
    """
    m1 = sorted({int(m) for m in partition[0]})
    m3 = sorted({int(m) for m in partition[1]})
    M = params.M
    for m in m1 + m3:
        if not 1 <= m <= M:
            raise IndexError(f"content id {m} outside 1..{M}")
    p = np.asarray(params.zipf.probabilities)
    a = np.zeros(M)
    b = np.zeros(M)
    ia = np.array(m1, dtype=int) - 1
    ib = np.array(m3, dtype=int) - 1
    a_sub, lam = _single_resource(p[ia], params.n, params.node_budget, 0.0)
    b_sub, mu = _single_resource(p[ib], params.f_n, params.sbs_budget, 0.0)
    a[ia] = a_sub
    b[ib] = b_sub
    ma = np.zeros(M, bool); ma[ia] = True
    mb = np.zeros(M, bool); mb[ib] = True
    # sub-problem certificates: each resource is checked against its own total
    cert_a = _sub_certificate(p, a, ma, lam, params.n, params.node_budget)
    cert_b = _sub_certificate(p, b, mb, mu, params.f_n, params.sbs_budget)
    res = max(cert_a[1], cert_b[1])
    cert = DualCertificate(lam, mu, cert_a[0], cert_b[0], np.zeros(M), np.zeros(M),
                           np.zeros(M), res, "decoupled")
    alloc = Allocation(a, b)
    _check(alloc, cert, tol, "solve_decoupled")
    return alloc, cert


def _sub_certificate(p, x, mask, price, cap, budget, lower=0.0):
    """Cap multipliers and KKT residual of ``min sum p/sqrt(x)`` on ``mask``."""
    M = len(p)
    mult_cap = np.zeros(M)
    mult_low = np.zeros(M)
    if not mask.any():
        return mult_cap, 0.0
    xs = x[mask]
    g = p[mask] / (2.0 * xs ** 1.5)
    scale = g.max()
    gap = g - price
    at_cap = xs >= cap * (1 - 1e-12)
    at_low = xs <= lower * (1 + 1e-12) + 1e-300
    mc = np.where(at_cap, np.maximum(gap, 0.0), 0.0)
    ml = np.where(at_low, np.maximum(-gap, 0.0), 0.0)
    stat = np.abs(-g + price + mc - ml)
    mult_cap[mask] = mc
    mult_low[mask] = ml
    res = max(stat.max() / scale,
              price * abs(xs.sum() - budget) / (scale * budget),
              max(0.0, xs.sum() - budget) / budget,
              max(0.0, (xs - cap).max()) / cap)
    return mult_cap, float(res)


def solve_baseline(params: NetworkParams, which: str, tol: float = DEFAULT_TOL) -> Solution:
    """Single-resource problem: all replicas at nodes or all at SBSs.

    Each content needs at least one replica on the chosen resource, so the
    box is ``[1, n]`` (``nodes_only``) or ``[1, f]`` (``sbs_only``).
    """
    p = np.asarray(params.zipf.probabilities)
    M = params.M
    if which == "nodes_only":
        cap, budget = params.n, params.node_budget
    elif which == "sbs_only":
        cap, budget = params.f_n, params.sbs_budget
    else:
        raise ValueError(f"unknown baseline {which!r}")
    x, price = _single_resource(p, cap, budget, 1.0)
    mask = np.ones(M, bool)
    mult_cap, res = _sub_certificate(p, x, mask, price, cap, budget, lower=1.0)
    zeros = np.zeros(M)
    if which == "nodes_only":
        alloc = Allocation(x, zeros)
        cert = DualCertificate(price, 0.0, mult_cap, zeros, zeros, zeros, zeros, res, which)
    else:
        alloc = Allocation(zeros, x)
        cert = DualCertificate(0.0, price, zeros, mult_cap, zeros, zeros, zeros, res, which)
    _check(alloc, cert, tol, "solve_baseline")
    return Solution(alloc, cert, objective_of(alloc, params.zipf))


def baseline_combination(params: NetworkParams, tol: float = DEFAULT_TOL):
    """Separately optimised node-only and SBS-only replicas, used together.

    Returns ``(allocation, objective)`` where ``A`` comes from the node-only
    problem and ``B`` from the SBS-only problem.
    """
    a = solve_baseline(params, "nodes_only", tol).allocation.a
    b = solve_baseline(params, "sbs_only", tol).allocation.b
    alloc = Allocation(a, b)
    return alloc, objective_of(alloc, params.zipf)
