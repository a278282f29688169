"""Self-checks of the simulator against closed-form geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..params import NetworkParams
from .config import SimConfig
from .engine import route_request
from .geometry import cell_chain
from .placement import PlacementRealization

__all__ = ["HopCheck", "frozen_hop_check"]


@dataclass(frozen=True)
class HopCheck:
    pairs: int
    max_abs_hop_deviation: int
    max_abs_delay_deviation: int
    bound_violations: int


def frozen_hop_check(lattice: int = 20, pairs: int = 40, seed: int = 0,
                     routing_cell_area: float | None = None) -> HopCheck:
    """Route single requests with mobility off and compare with the cell chain.

    One node sits on every lattice site and only one node caches the
    content.  Each phase should take as many hops as the straight segment
    between requester and holder crosses routing-cell boundaries, so the
    whole delivery needs twice that many hops and slots.  Also counts
    phases exceeding ``ceil(d sqrt(2) / s) + 1`` hops.
    """
    n = lattice * lattice
    params = NetworkParams(n=n, M=1, f_n=1, K_n=1, K_sbs=1, alpha=1.0)
    cfg = SimConfig(params, routing_cell_area=routing_cell_area, boundary="reflect",
                    mobility=False, horizon_slots=4 * lattice, drain_slots=0)
    geo = cfg.geometry
    sites = np.stack(np.divmod(np.arange(n), lattice), axis=1)
    rng = np.random.default_rng(seed)
    worst_hops = worst_delay = bound_bad = 0
    empty = (np.zeros(0, np.int64),)
    for _ in range(pairs):
        req, holder = rng.choice(n, size=2, replace=False)
        placement = PlacementRealization(
            node_positions=sites, node_caches=tuple(frozenset({1}) if i == holder else frozenset()
                                                    for i in range(n)),
            sbs_caches=(frozenset(),), node_holders=(np.array([holder]),),
            sbs_holders=empty, A=np.array([1]), B=np.array([0]))
        tr = route_request((int(req), 1), placement, sites, cfg)
        p0, p1 = geo.site_xy(sites[req]), geo.site_xy(sites[holder])
        steps = len(cell_chain(p0, p1, geo.cells)) - 1
        want_hops = 1 if steps == 0 else 2 * steps
        worst_hops = max(worst_hops, abs(tr.hops - want_hops))
        worst_delay = max(worst_delay, abs(tr.slots - (1 if steps == 0 else 2 * steps)))
        d = float(np.hypot(*(p1 - p0)))
        bound = math.ceil(d * math.sqrt(2) / geo.cell_side) + 1
        bound_bad += int(tr.phase1_hops > bound) + int(tr.phase2_hops > bound)
    return HopCheck(pairs, worst_hops, worst_delay, bound_bad)
