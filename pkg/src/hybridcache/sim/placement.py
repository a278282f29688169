"""Integer rounding of replica counts and random cache placement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CapacityOverflow
from ..params import Allocation, NetworkParams

__all__ = ["round_allocation", "PlacementRealization", "place"]


def _largest_remainder(x, cap):
    """Round ``x`` to integers in ``[0, cap]`` preserving ``round(sum(x))``."""
    x = np.clip(np.asarray(x, float), 0.0, cap)
    base = np.floor(x + 1e-9).astype(np.int64)
    target = int(round(x.sum()))
    short = target - int(base.sum())
    if short > 0:
        frac = x - base
        frac[base >= cap] = -1.0
        # stable: earlier (more popular) contents win ties
        order = np.argsort(-frac, kind="stable")[:short]
        base[order] += 1
    return base


def round_allocation(alloc: Allocation, params: NetworkParams):
    """Integer ``(A, B)`` close to ``alloc`` that honour every cache constraint.

    Largest-remainder rounding per tier, then any content left with no
    replica gets one in the tier with the larger fractional part; the extra
    copy is taken back from the least popular content of that tier that
    can spare one.  Raises :class:`CapacityOverflow` if that fails.
    """
    n, f = params.n, params.f_n
    A = _largest_remainder(alloc.a, n)
    B = _largest_remainder(alloc.b, f)
    for m in np.flatnonzero(A + B == 0):
        use_b = (alloc.b[m] - np.floor(alloc.b[m])) >= (alloc.a[m] - np.floor(alloc.a[m]))
        if use_b and f >= 1:
            B[m] += 1
        else:
            A[m] += 1
    for X, cap_total in ((A, params.node_budget), (B, params.sbs_budget)):
        other = B if X is A else A
        excess = int(X.sum()) - cap_total
        for m in range(len(X) - 1, -1, -1):
            if excess <= 0:
                break
            spare = X[m] - (1 if other[m] == 0 else 0)
            take = min(spare, excess)
            if take > 0:
                X[m] -= take
                excess -= take
        if excess > 0:
            raise CapacityOverflow("rounded replica counts exceed the cache budget")
    if (A > n).any() or (B > f).any():
        raise CapacityOverflow("a content has more replicas than caches")
    return A, B


def _round_robin(counts, holders, capacity, rng):
    """Assign ``counts[m]`` distinct holders per content, at most ``capacity`` each."""
    perm = rng.permutation(holders)
    caches = [[] for _ in range(holders)]
    owners = []
    pos = 0
    for m, k in enumerate(counts):
        idx = perm[(pos + np.arange(k)) % holders]
        pos = (pos + k) % holders
        owners.append(np.sort(idx))
        for h in idx:
            caches[h].append(m + 1)
    if any(len(c) > capacity for c in caches):
        raise CapacityOverflow("a cache holds more items than its capacity")
    return owners, tuple(frozenset(c) for c in caches)


@dataclass(frozen=True)
class PlacementRealization:
    """One random placement.

    ``node_positions`` are integer lattice sites ``(n, 2)``.  ``node_caches``
    and ``sbs_caches`` hold 1-based content ids; ``node_holders[m-1]`` and
    ``sbs_holders[m-1]`` are the sorted holder ids of content ``m``.
    """
    node_positions: np.ndarray
    node_caches: tuple
    sbs_caches: tuple
    node_holders: tuple
    sbs_holders: tuple
    A: np.ndarray
    B: np.ndarray


def place(alloc: Allocation, cfg, seed) -> PlacementRealization:
    """Random placement of the rounded allocation plus uniform initial node sites."""
    params = cfg.params
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    A, B = round_allocation(alloc, params)
    # slot-major round-robin: sort by count so large items wrap evenly
    order = np.argsort(-A, kind="stable")
    node_owners, node_caches = _round_robin(A[order], params.n, params.K_n, rng)
    node_holders = [None] * len(A)
    for k, m in enumerate(order):
        node_holders[m] = node_owners[k]
    order_b = np.argsort(-B, kind="stable")
    sbs_owners, sbs_caches = _round_robin(B[order_b], params.f_n, params.K_sbs, rng)
    sbs_holders = [None] * len(B)
    for k, m in enumerate(order_b):
        sbs_holders[m] = sbs_owners[k]
    # round-robin indexed positions in sorted order; map back to content ids
    node_caches = _relabel(node_caches, order)
    sbs_caches = _relabel(sbs_caches, order_b)
    L = cfg.geometry.lattice
    pos = rng.integers(0, L, size=(params.n, 2))
    return PlacementRealization(pos, node_caches, sbs_caches,
                                tuple(node_holders), tuple(sbs_holders), A, B)


def _relabel(caches, order):
    return tuple(frozenset(int(order[c - 1]) + 1 for c in cache) for cache in caches)
