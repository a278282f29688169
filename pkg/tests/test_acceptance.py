"""Acceptance gate: one test and one printed verdict per criterion."""
import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from hybridcache.figures import load_reference, plateau_run
from hybridcache.oracle import oracle_projected_gradient
from hybridcache.params import Allocation, NetworkParams, reference_instance
from hybridcache.scaling import Exponents, classify_regime
from hybridcache.sim import SimConfig, distance_slope, run_experiment
from hybridcache.solver import baseline_combination, solve_joint

ROOT2 = 1 / math.sqrt(2)


def rel(x, ref):
    return abs(x - ref) / abs(ref)


def test_criterion_1_low_alpha_totals(criterion):
    want = {1: 98.21, 2: 76.14, 5: 54.43, 10: 42.22, 50: 23.41, 100: 18.16, 200: 14.08}
    m_ref, t_ref = load_reference("fig4a")
    bundled = dict(zip(m_ref.tolist(), t_ref.tolist()))
    assert all(bundled[m] == pytest.approx(v, abs=0.01) for m, v in want.items())
    t0 = time.perf_counter()
    t = solve_joint(reference_instance(0.55)).allocation.t
    elapsed = time.perf_counter() - t0
    worst = max(rel(t[m - 1], v) for m, v in want.items())
    ok = worst <= 0.03 and elapsed < 5
    criterion(1, ok, f"max rel dev {worst:.4f} (<= 0.03), solve {elapsed:.2f}s (< 5s)")
    assert ok


def test_criterion_2_high_alpha_totals(criterion):
    t = solve_joint(reference_instance(1.2)).allocation.t
    d1, d200 = rel(t[0], 301.91), rel(t[199], 7.58)
    run = plateau_run(t, 49.0, 51.0, must_contain=range(10, 15))
    ok = d1 <= 0.03 and d200 <= 0.03 and run is not None
    criterion(2, ok, f"t_1 {t[0]:.2f} ({d1:.4f}), t_200 {t[199]:.3f} ({d200:.4f}), "
                     f"[49,51] plateau m={run}")
    assert ok


def test_criterion_3_split_between_tiers(criterion):
    lo = solve_joint(reference_instance(0.55)).allocation
    hi = solve_joint(reference_instance(1.2)).allocation
    checks = {
        "a0.55 A_1": (rel(lo.a[0], 54.5), 0.05, lo.a[0]),
        "a0.55 B_1": (rel(lo.b[0], 43.71), 0.05, lo.b[0]),
        "a1.2 A_1": (rel(hi.a[0], 252.03), 0.05, hi.a[0]),
        "a1.2 B_1": (rel(hi.b[0], 49.88), 0.03, hi.b[0]),
    }
    tail_ok = bool(np.all(hi.a[19:] <= 0.1))
    bad = [k for k, (d, tol, _) in checks.items() if d > tol]
    ok = not bad and tail_ok
    detail = ", ".join(f"{k}={v:.2f} ({d:.3f})" for k, (d, _, v) in checks.items())
    detail += f", A_m<=0.1 for m>=20: {tail_ok}"
    if bad:
        detail += f"; out of tolerance: {', '.join(bad)}"
    criterion(3, ok, detail)
    assert ok


def _random_instances(k, seed, max_M):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < k:
        kw = dict(n=int(rng.integers(1, 40)), M=int(rng.integers(1, max_M + 1)),
                  f_n=int(rng.integers(1, 15)), K_n=int(rng.integers(1, 4)),
                  K_sbs=int(rng.integers(1, 10)), alpha=float(rng.uniform(0.1, 2.0)))
        if kw["n"] * kw["K_n"] + kw["f_n"] * kw["K_sbs"] >= kw["M"]:
            out.append(NetworkParams(**kw))
    return out


def test_criterion_4_certificates(criterion):
    instances = [reference_instance(0.55), reference_instance(1.2),
                 reference_instance(0.55, M=2000), reference_instance(1.2, M=2000)]
    instances += _random_instances(200, 44, 60)
    worst_kkt = worst_budget = worst_mono = 0.0
    for p in instances:
        sol = solve_joint(p)
        a, c = sol.allocation, sol.certificate
        worst_kkt = max(worst_kkt, c.kkt_residual)
        if c.lambda_node > 0:
            worst_budget = max(worst_budget, rel(a.a.sum(), p.node_budget))
        if c.mu_sbs > 0:
            worst_budget = max(worst_budget, rel(a.b.sum(), p.sbs_budget))
        for x in (a.a, a.b):
            worst_mono = max(worst_mono, np.diff(x).max(initial=0.0) / max(1.0, x.max()))
    ok = worst_kkt <= 1e-8 and worst_budget <= 1e-6 and worst_mono <= 1e-9
    criterion(4, ok, f"{len(instances)} instances: KKT {worst_kkt:.2e}, budget {worst_budget:.2e}, "
                     f"monotonicity {worst_mono:.2e}")
    assert ok


def test_criterion_5_oracle(criterion):
    worst = 0.0
    for p in _random_instances(50, 5, 20):
        f_s = solve_joint(p).objective.value
        f_o = oracle_projected_gradient(p, tol=1e-10)[1].value
        worst = max(worst, rel(f_s, f_o))
    ref = 0.0
    for alpha in (0.55, 1.2):
        p = reference_instance(alpha)
        ref = max(ref, rel(solve_joint(p).objective.value,
                           oracle_projected_gradient(p, tol=1e-10)[1].value))
    ok = worst <= 1e-6 and ref <= 1e-4
    criterion(5, ok, f"random (M<=20, 50 instances) {worst:.2e} (<= 1e-6), "
                     f"reference {ref:.2e} (<= 1e-4)")
    assert ok


def test_criterion_6_interior_slope(criterion):
    slopes = {}
    for alpha in (0.55, 1.2):
        p = reference_instance(alpha, M=2000)
        t = solve_joint(p).allocation.t
        cap = p.n + p.f_n
        m = np.arange(1, p.M + 1)
        inner = (t > 1 + 1e-9) & (t < cap - 1e-9)
        slopes[alpha] = np.polyfit(np.log(m[inner]), np.log(t[inner]), 1)[0]
    dev = {a: abs(s + 2 * a / 3) for a, s in slopes.items()}
    ok = all(d <= 0.05 for d in dev.values())
    criterion(6, ok, ", ".join(f"alpha={a}: slope {s:.4f} vs {-2 * a / 3:.4f}"
                               for a, s in slopes.items()))
    assert ok


def _hand_b(a, g, b, d):
    """Regime exponent substituted directly from the closed forms."""
    if a >= F(3, 2):
        return "I", F(0)
    if a >= 1 + (g - b) / (2 * (g + d - 1)):
        return "II", (1 - d) * (3 - 2 * a)
    return "III", 1 - d - b + min(3 - 2 * a, F(1)) * g


def _grid():
    """100 exact points: 5 exponent triples x 20 alphas, regime edges included."""
    triples = [(F(93, 100), F(69, 100), F(69, 100)), (F(9, 10), F(1, 2), F(1, 2)),
               (F(4, 5), F(3, 5), F(1, 2)), (F(99, 100), F(1, 10), F(9, 10)),
               (F(7, 10), F(2, 5), F(3, 5))]
    out = []
    for g, b, d in triples:
        edges = [1 + (g - b) / (2 * (g + d - 1)), F(3, 2), 3 * (g - b) / (2 * (d + g - 1))]
        alphas = edges + [e - F(1, 10**6) for e in edges]
        k = 1
        while len(alphas) < 20:
            if F(k, 9) not in alphas:
                alphas.append(F(k, 9))
            k += 1
        out += [(a, g, b, d) for a in alphas]
    return out


def test_criterion_7_regime_substitution(criterion):
    grid = _grid()
    assert len(grid) == 100
    mismatches = []
    for a, g, b, d in grid:
        rep = classify_regime(Exponents(a, g, b, d))
        want = _hand_b(a, g, b, d)
        if (rep.regime, rep.b_exponent) != want or not isinstance(rep.b_exponent, (F, int)):
            mismatches.append((a, g, b, d))
    regimes = {classify_regime(Exponents(*x)).regime for x in grid}
    ok = not mismatches and regimes == {"I", "II", "III"}
    criterion(7, ok, f"{len(grid)} grid points exact, {len(mismatches)} mismatches, "
                     f"regimes seen {sorted(regimes)}")
    assert ok


def test_criterion_8_closest_holder_distance(criterion):
    t0 = time.perf_counter()
    slope, means = distance_slope(replica_counts=(4, 16, 64, 256), trials=200, seed=0,
                                  lattice=100)
    elapsed = time.perf_counter() - t0
    ok = abs(slope + 0.5) <= 0.05 and elapsed < 60
    criterion(8, ok, f"slope {slope:.4f} (-0.5 +/- 0.05), {elapsed:.1f}s on a 100x100 lattice")
    assert ok


def test_criterion_9_delay_vs_replicas(criterion):
    # uniform replica counts, every copy at a node; fixed n and cell size
    p = NetworkParams(n=20000, M=20, f_n=1, K_n=1, K_sbs=1, alpha=1.0)
    cfg = SimConfig(p, horizon_slots=30, drain_slots=400, trials=2, master_seed=0)
    delay = {t: run_experiment(Allocation(np.full(p.M, float(t))), cfg).mean_delay_slots
             for t in (16, 32, 64)}
    r1, r2 = delay[32] / delay[16], delay[64] / delay[32]
    r4 = delay[64] / delay[16]
    doubling_ok = all(abs(r - ROOT2) <= 0.1 * ROOT2 for r in (r1, r2))
    quad_ok = abs(r4 - 0.5) <= 0.05 and abs(math.sqrt(r4) - ROOT2) <= 0.1 * ROOT2
    ok = doubling_ok and quad_ok
    criterion(9, ok, f"delays {', '.join(f't={t}: {d:.2f}' for t, d in delay.items())}; "
                     f"x2 ratios {r1:.3f}, {r2:.3f} (1/sqrt2 +/- 10%), x4 ratio {r4:.3f} "
                     f"(0.5 +/- 10%)")
    assert ok


def test_criterion_10_joint_beats_baseline(criterion):
    ratio = {}
    for alpha in (0.55, 1.2):
        p = reference_instance(alpha)
        joint = solve_joint(p).objective.value
        _, base = baseline_combination(p)
        ratio[alpha] = base.value / joint
    margin = ratio[1.2] - 1
    ok = margin > 2e-8 and 0.9 <= ratio[0.55] <= 1.1
    criterion(10, ok, f"baseline/joint alpha=1.2 {ratio[1.2]:.4f} (margin {margin:.3f} "
                      f">> 2e-8), alpha=0.55 {ratio[0.55]:.4f} in [0.9, 1.1]")
    assert ok
