import numpy as np
import pytest

from hybridcache.figures import load_reference
from hybridcache.params import Allocation, NetworkParams, REFERENCE_EXPONENTS, reference_instance


def test_reference_budgets():
    p = reference_instance(0.55)
    assert (p.n, p.M, p.f_n, p.K_n, p.K_sbs) == (300, 200, 50, 2, 75)
    assert p.node_budget == 600 and p.sbs_budget == 3750
    assert (p.gamma, p.beta, p.delta) == REFERENCE_EXPONENTS


def test_plotted_totals_need_75_sbs_slots():
    # With 50 SBS slots the caches hold at most 600 + 2500 replicas,
    # but the plotted totals add up to about 600 + 3750.
    _, t_low = load_reference("fig4a")
    _, b_high = load_reference("fig5b_B")
    small = reference_instance(0.55, K_sbs=50)
    assert t_low.sum() > 1.35 * (small.node_budget + small.sbs_budget)
    assert b_high.sum() == pytest.approx(3750, rel=1e-3)


@pytest.mark.parametrize("kw", [
    dict(n=0), dict(M=-1), dict(f_n=1.5), dict(K_n=0), dict(K_sbs=0), dict(alpha=0.0),
])
def test_rejects_bad_sizes(kw):
    base = dict(n=10, M=5, f_n=2, K_n=1, K_sbs=1, alpha=1.0)
    base.update(kw)
    with pytest.raises(ValueError):
        NetworkParams(**base)


@pytest.mark.parametrize("exps", [
    (0.9, None, 0.5),          # incomplete
    (0.5, 0.6, 0.5),           # beta > gamma
    (1.0, 0.5, 0.6),           # gamma not below 1
    (0.9, 0.5, 1.0),           # delta not below 1
    (0.9, 0.3, 0.5),           # delta + beta < 1
])
def test_rejects_bad_exponents(exps):
    g, b, d = exps
    with pytest.raises(ValueError):
        NetworkParams(n=10, M=5, f_n=2, K_n=1, K_sbs=1, alpha=1.0, gamma=g, beta=b, delta=d)


def test_with_replaces_fields():
    p = reference_instance(0.55).with_(alpha=1.2)
    assert p.alpha == 1.2 and p.n == 300


def test_allocation_feasibility_report():
    p = NetworkParams(n=3, M=3, f_n=2, K_n=1, K_sbs=1, alpha=1.0)
    ok = Allocation([1, 1, 1], [1, 1, 0])
    assert ok.violations(p) == []
    bad = Allocation([4, 0.5, -1], [3, 0.2, 0])
    msgs = " ".join(bad.violations(p))
    for word in ("node budget", "SBS budget", "negative", "above n", "above f", "below 1"):
        assert word in msgs


def test_allocation_defaults_and_immutability():
    a = Allocation([1.0, 2.0])
    np.testing.assert_array_equal(a.b, [0, 0])
    np.testing.assert_array_equal(a.t, [1, 2])
    assert len(a) == 2
    with pytest.raises(ValueError):
        a.a[0] = 5
    with pytest.raises(ValueError):
        Allocation([1, 2], [1])
