"""Slotted simulation of two-phase content delivery with random-walk nodes.

Every slot runs a request sub-slot, a content sub-slot and then one
mobility step.  A packet moves at most one hop per slot, so anything a node
receives in slot ``t`` is forwarded no earlier than ``t + 1``.  Within a
sub-slot routing cells transmit in colour classes that satisfy the
protocol interference model.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import NoHolder
from ..params import Allocation
from .config import SimConfig
from .geometry import axis_colors, coloring_period, pairwise_distance
from .mobility import step_mobility
from .placement import PlacementRealization, place

__all__ = ["trial_rng", "closest_holder", "DeliveryTrace", "route_request",
           "TrialResult", "SimOutcome", "run_trial", "run_experiment"]

NODE, SBS = 0, 1


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial,)))


def closest_holder(request, placement: PlacementRealization, positions, cfg: SimConfig):
    """Nearest node or SBS caching the requested content.

    ``request`` is ``(node, m)``.  Holder ids run ``0..n-1`` for nodes and
    ``n..n+f-1`` for SBSs; a requester holding the item is its own holder,
    other ties go to the lowest id.  Returns
    ``(holder_id, distance)``.
    """
    node, m = request
    geo = cfg.geometry
    hn = placement.node_holders[m - 1]
    hs = placement.sbs_holders[m - 1]
    if len(hn) + len(hs) == 0:
        raise NoHolder(f"content {m} has no replica")
    here = geo.site_xy(positions[node])
    pts = np.concatenate([geo.site_xy(positions[hn]).reshape(-1, 2),
                          geo.sbs_xy()[hs].reshape(-1, 2)])
    if node in set(hn.tolist()):
        return int(node), 0.0
    d = pairwise_distance(pts, here, geo.torus)
    k = int(np.argmin(d))
    hid = int(hn[k]) if k < len(hn) else cfg.params.n + int(hs[k - len(hn)])
    return hid, float(d[k])


@dataclass
class DeliveryTrace:
    """Path of one request: cells visited per phase, hop counts, slots used."""
    node: int
    content: int
    holder: int
    initial_distance: float
    phase1_cells: list = field(default_factory=list)
    phase2_cells: list = field(default_factory=list)
    phase1_hops: int = 0
    phase2_hops: int = 0
    slots: int = 0
    delivered: bool = False

    @property
    def hops(self) -> int:
        return self.phase1_hops + self.phase2_hops


@dataclass
class TrialResult:
    delays: np.ndarray
    hops: np.ndarray
    contents: np.ndarray
    distances: np.ndarray
    cell_load: np.ndarray
    slots_run: int
    horizon_exceeded: int
    protocol_violations: int
    range_violations: int
    transmissions_checked: int


class _Trial:
    """State of one realisation; all per-request arrays are indexed by requester."""

    def __init__(self, cfg: SimConfig, placement: PlacementRealization, rng, positions=None):
        self.cfg = cfg
        self.geo = geo = cfg.geometry
        self.pl = placement
        self.rng = rng
        p = cfg.params
        self.n = n = p.n
        self.pos = np.array(placement.node_positions if positions is None else positions,
                            dtype=np.int64)
        self.zipf_cdf = np.cumsum(p.zipf.probabilities)
        self.sbs_xy = geo.sbs_xy()
        self.sbs_cell = geo.cell_of_xy(self.sbs_xy)
        self.sbs_range = geo.sbs_cell_range(np.arange(p.f_n))
        g = geo.cells
        self.load = np.zeros(g * g, dtype=np.int64)
        col = axis_colors(g, coloring_period(cfg.protocol_delta))
        self.color = (col[:, None] * (col.max() + 1) + col[None, :]).ravel()
        self.active = np.zeros(n, bool)
        self.phase = np.zeros(n, np.int8)
        self.content = np.zeros(n, np.int64)
        self.start = np.zeros(n, np.int64)
        self.kind = np.zeros(n, np.int8)
        self.target = np.zeros(n, np.int64)
        self.carrier = np.zeros(n, np.int64)
        self.p2_start = np.zeros(n, np.int64)
        self.hops = np.zeros(n, np.int64)
        self.ready = np.zeros(n, np.int64)
        self.out_delay, self.out_hops, self.out_content, self.out_dist = [], [], [], []
        self.violations = self.range_violations = self.checked = 0
        self.dist_of = np.zeros(n)
        self.track = None
        self._txbuf = []
        self._refresh()

    # ---- geometry of the current slot -------------------------------------------------
    def _refresh(self):
        geo = self.geo
        self.xy = geo.site_xy(self.pos)
        self.cell = geo.cell_of_xy(self.xy)
        self.fcell = geo.flat(self.cell)
        first = np.full(geo.cells ** 2, self.n, dtype=np.int64)
        np.minimum.at(first, self.fcell, np.arange(self.n))
        first[first == self.n] = -1
        self.first_node = first
        self.sbs_here = geo.sbs_of_xy(self.xy)

    # ---- request issue ----------------------------------------------------------------
    def issue(self, t, who, contents):
        geo, n = self.geo, self.n
        for m in np.unique(contents):
            sel = who[contents == m]
            hn = self.pl.node_holders[m - 1]
            hs = self.pl.sbs_holders[m - 1]
            if len(hn) + len(hs) == 0:
                raise NoHolder(f"content {m} has no replica")
            pts = np.concatenate([self.xy[hn].reshape(-1, 2), self.sbs_xy[hs].reshape(-1, 2)])
            d = pairwise_distance(pts[None, :, :], self.xy[sel][:, None, :], geo.torus)
            k = np.argmin(d, axis=1)
            dist = d[np.arange(len(sel)), k]
            ids = np.concatenate([np.asarray(hn, np.int64), n + np.asarray(hs, np.int64)])
            hid = ids[k]
            # a requester caching the item serves itself, whatever shares its site
            own = np.isin(sel, hn)
            hid[own] = sel[own]
            dist[own] = 0.0
            is_sbs = hid >= n
            tgt = np.where(is_sbs, hid - n, hid)
            self.active[sel] = True
            self.phase[sel] = 1
            self.content[sel] = m
            self.start[sel] = t
            self.kind[sel] = np.where(is_sbs, SBS, NODE)
            self.target[sel] = tgt
            self.carrier[sel] = sel
            self.hops[sel] = 0
            self.dist_of[sel] = dist
            # single-hop shortcuts: self-held, same routing cell, inside SBS coverage
            self_held = (~is_sbs) & (tgt == sel)
            n_or0 = np.where(is_sbs, 0, tgt)
            same_cell = (~is_sbs) & ~self_held & (self.fcell[n_or0] == self.fcell[sel])
            s_or0 = np.where(is_sbs, tgt, 0)
            covered = is_sbs & ((self.sbs_here[sel] == s_or0) |
                                (geo.flat(self.sbs_cell[s_or0]) == self.fcell[sel]))
            if same_cell.any():
                self._record_tx(self.xy[tgt[same_cell]], self.xy[sel[same_cell]],
                                self.fcell[tgt[same_cell]], t, 2)
                np.add.at(self.load, self.fcell[tgt[same_cell]], 1)
            self.hops[sel[same_cell | covered]] = 1
            self._finish(sel[self_held | same_cell | covered], t)
            if self.track is not None and self.track in sel:
                tr = self.track_trace
                tr.holder = int(hid[sel == self.track][0])
                tr.initial_distance = float(dist[sel == self.track][0])
                tr.phase1_cells.append(tuple(self.cell[self.track]))
                if (same_cell | covered)[sel == self.track][0]:
                    tr.phase2_hops = 1

    def _finish(self, who, t):
        if len(who) == 0:
            return
        self.active[who] = False
        self.phase[who] = 0
        self.ready[who] = t + 1
        self.out_delay.append(t - self.start[who] + 1)
        self.out_hops.append(self.hops[who].copy())
        self.out_content.append(self.content[who].copy())
        self.out_dist.append(self.dist_of[who].copy())
        if self.track is not None and self.track in who:
            tr = self.track_trace
            tr.delivered = True
            tr.slots = int(t - self.start[self.track] + 1)

    # ---- protocol-model bookkeeping -------------------------------------------------
    def _record_tx(self, tx, rx, tx_cell, t, sub):
        if self.cfg.debug_protocol:
            self._txbuf.append((np.atleast_2d(tx), np.atleast_2d(rx), np.atleast_1d(tx_cell)))

    def _check_protocol(self):
        if not self.cfg.debug_protocol or not self._txbuf:
            self._txbuf = []
            return
        tx = np.concatenate([b[0] for b in self._txbuf])
        rx = np.concatenate([b[1] for b in self._txbuf])
        cells = np.concatenate([b[2] for b in self._txbuf])
        self._txbuf = []
        r = self.cfg.range
        guard = (1 + self.cfg.protocol_delta) * r
        torus = self.geo.torus
        own = pairwise_distance(tx, rx, torus)
        self.range_violations += int((own > r * (1 + 1e-9)).sum())
        colors = self.color[cells]
        for c in np.unique(colors):
            k = np.flatnonzero(colors == c)
            if len(np.unique(cells[k])) < 2:
                self.checked += len(k)
                continue
            d = pairwise_distance(tx[k][None, :, :], rx[k][:, None, :], torus)
            foreign = cells[k][None, :] != cells[k][:, None]
            self.violations += int(((d < guard * (1 - 1e-9)) & foreign).any(axis=1).sum())
            self.checked += len(k)

    # ---- one routing hop toward a routing cell ----------------------------------------
    def _advance(self, idx, dst_cells, t, sub, count_load, final=None):
        """Move packets ``idx`` one cell toward ``dst_cells``.

        A packet stepping into the cell that holds its ``final`` node is
        handed straight to that node; the indices of such packets are
        returned.  Packets whose next cell is empty wait.
        """
        if len(idx) == 0:
            return idx
        cur = self.carrier[idx]
        nxt = self.geo.step_toward(self.cell[cur], dst_cells)
        fnxt = self.geo.flat(nxt)
        recv = self.first_node[fnxt]
        reached = np.zeros(len(idx), bool)
        if final is not None:
            reached = self.fcell[final] == fnxt
            recv = np.where(reached, final, recv)
        ok = recv >= 0
        idx, cur, recv, reached = idx[ok], cur[ok], recv[ok], reached[ok]
        self._record_tx(self.xy[cur], self.xy[recv], self.fcell[cur], t, sub)
        if count_load:
            np.add.at(self.load, self.fcell[cur], 1)
        self.carrier[idx] = recv
        self.hops[idx] += 1
        self._trace_hop(idx, nxt[ok], sub)
        return idx[reached]

    def _trace_hop(self, idx, cells, sub):
        if self.track is None:
            return
        hit = np.flatnonzero(idx == self.track)
        if len(hit):
            tr = self.track_trace
            c = tuple(int(v) for v in cells[hit[0]])
            if sub == 1:
                tr.phase1_cells.append(c)
                tr.phase1_hops += 1
            else:
                tr.phase2_cells.append(c)
                tr.phase2_hops += 1

    def _trace_final(self, idx, sub):
        if self.track is not None and self.track in idx:
            tr = self.track_trace
            if sub == 1:
                tr.phase1_hops += 1
            else:
                tr.phase2_hops += 1

    def request_subslot(self, t):
        idx = np.flatnonzero(self.active & (self.phase == 1))
        if len(idx) == 0:
            return
        geo = self.geo
        to_node = self.kind[idx] == NODE
        # node targets
        i_n = idx[to_node]
        tgt = self.target[i_n]
        arrive = self.fcell[self.carrier[i_n]] == self.fcell[tgt]
        a = i_n[arrive]
        self._record_tx(self.xy[self.carrier[a]], self.xy[self.target[a]],
                        self.fcell[self.carrier[a]], t, 1)
        self._trace_final(a, 1)
        self.hops[a] += 1
        self.carrier[a] = self.target[a]
        self.phase[a] = 2
        self.p2_start[a] = t + 1
        rest = i_n[~arrive]
        got = self._advance(rest, self.cell[self.target[rest]], t, 1, False, self.target[rest])
        self.phase[got] = 2
        self.p2_start[got] = t + 1
        # SBS targets
        i_s = idx[~to_node]
        s = self.target[i_s]
        c = self.carrier[i_s]
        arrive = (self.sbs_here[c] == s) | (self.fcell[c] == geo.flat(self.sbs_cell[s]))
        a = i_s[arrive]
        self._trace_final(a, 1)
        self.hops[a] += 1
        self.carrier[a] = -1
        self.phase[a] = 2
        self.p2_start[a] = t + 1
        rest = i_s[~arrive]
        self._advance(rest, self.sbs_cell[self.target[rest]], t, 1, False)

    def content_subslot(self, t):
        idx = np.flatnonzero(self.active & (self.phase == 2) & (self.p2_start <= t))
        if len(idx) == 0:
            return
        geo = self.geo
        at_sbs = self.carrier[idx] < 0
        # content still at an SBS: deliver directly or drop to a relay in coverage
        i_s = idx[at_sbs]
        s = self.target[i_s]
        covered = (self.sbs_here[i_s] == s) | (self.fcell[i_s] == geo.flat(self.sbs_cell[s]))
        done_s = i_s[covered]
        self._trace_final(done_s, 2)
        self.hops[done_s] += 1
        rest = i_s[~covered]
        if len(rest):
            lo_i, hi_i, lo_j, hi_j = (r[self.target[rest]] for r in self.sbs_range)
            rc = self.cell[rest]
            relay = np.stack([np.clip(rc[:, 0], lo_i, hi_i), np.clip(rc[:, 1], lo_j, hi_j)], axis=1)
            frel = geo.flat(relay)
            direct = frel == self.fcell[rest]
            recv = np.where(direct, rest, self.first_node[frel])
            ok = recv >= 0
            done_s = np.concatenate([done_s, rest[direct]])
            self.carrier[rest[ok]] = recv[ok]
            self.hops[rest[ok]] += 1
            self._trace_hop(rest[ok], relay[ok], 2)
        # content at a node: chase the requester
        i_n = idx[~at_sbs]
        car = self.carrier[i_n]
        arrive = self.fcell[car] == self.fcell[i_n]
        a = i_n[arrive]
        self._record_tx(self.xy[self.carrier[a]], self.xy[a], self.fcell[self.carrier[a]], t, 2)
        np.add.at(self.load, self.fcell[self.carrier[a]], 1)
        self._trace_final(a, 2)
        self.hops[a] += 1
        rest = i_n[~arrive]
        got = self._advance(rest, self.cell[rest], t, 2, True, rest)
        self._finish(np.concatenate([done_s, a, got]), t)

    def run(self, issue=True, max_slots=None):
        cfg = self.cfg
        T = cfg.horizon_slots
        stop = T + cfg.drain if max_slots is None else max_slots
        self._txbuf = []
        t = 0
        while t < stop:
            if issue and t < T:
                who = np.flatnonzero(~self.active & (self.ready <= t))
                if len(who):
                    u = self.rng.random(len(who))
                    m = np.minimum(np.searchsorted(self.zipf_cdf, u * self.zipf_cdf[-1],
                                                   side="right"), len(self.zipf_cdf) - 1) + 1
                    self.issue(t, who, m)
            elif not self.active.any():
                break
            self.request_subslot(t)
            self._check_protocol()
            self.content_subslot(t)
            self._check_protocol()
            if cfg.mobility:
                self.pos = step_mobility(self.pos, self.rng, self.geo.lattice, cfg.boundary)
                self._refresh()
            t += 1
        return t

    def result(self, slots_run) -> TrialResult:
        cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt))
        return TrialResult(
            delays=cat(self.out_delay, np.int64), hops=cat(self.out_hops, np.int64),
            contents=cat(self.out_content, np.int64), distances=cat(self.out_dist, float),
            cell_load=self.load.copy(), slots_run=slots_run,
            horizon_exceeded=int(self.active.sum()), protocol_violations=self.violations,
            range_violations=self.range_violations, transmissions_checked=self.checked)


def route_request(request, placement: PlacementRealization, positions, cfg: SimConfig,
                  rng=None, max_slots=None) -> DeliveryTrace:
    """Deliver a single request and record its path.

    Other nodes keep moving (unless mobility is off) but issue nothing.
    ``max_slots`` defaults to horizon plus drain; an undelivered trace has
    ``delivered=False``.
    """
    node, m = request
    rng = np.random.default_rng(0) if rng is None else rng
    tr = _Trial(cfg, placement, rng, positions)
    tr.track = node
    tr.track_trace = DeliveryTrace(node=node, content=m, holder=-1, initial_distance=math.nan)
    tr.issue(0, np.array([node]), np.array([m]))
    stop = cfg.horizon_slots + cfg.drain if max_slots is None else max_slots
    tr.run(issue=False, max_slots=stop)
    return tr.track_trace


def run_trial(alloc: Allocation, cfg: SimConfig, trial: int) -> TrialResult:
    rng = trial_rng(cfg.master_seed, trial)
    placement = place(alloc, cfg, rng)
    sim = _Trial(cfg, placement, rng)
    slots = sim.run()
    return sim.result(slots)


@dataclass
class SimOutcome:
    """Aggregate over trials.  Delays in slots, distances in unit-square lengths.

    ``max_cell_load`` is the busiest routing cell's content transmissions
    per slot; ``load_per_request`` rescales it to one request per node per
    slot.  ``achieved_throughput`` divides the activation duty factor by
    that per-request load.
    """
    mean_delay_slots: float
    delay_stderr: float
    per_content_mean_initial_distance: np.ndarray
    per_content_mean_delay: np.ndarray
    per_content_mean_hops: np.ndarray
    per_content_requests: np.ndarray
    max_cell_load: float
    load_per_request: float
    achieved_throughput: float
    throughput_stderr: float
    hop_histogram: np.ndarray
    completed: int
    horizon_exceeded: int
    protocol_violations: int
    range_violations: int
    transmissions_checked: int
    trials: int


def _per_content(values, contents, M):
    cnt = np.bincount(contents - 1, minlength=M).astype(float)
    tot = np.bincount(contents - 1, weights=values, minlength=M)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, tot / np.maximum(cnt, 1), np.nan), cnt


def _stderr(x):
    x = np.asarray(x, float)
    if not np.isfinite(x).all():
        return math.nan
    return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0


def run_experiment(alloc: Allocation, cfg: SimConfig, workers: int = 1) -> SimOutcome:
    """Run ``cfg.trials`` independent trials and aggregate.

    Each trial draws from its own stream seeded by ``(master_seed, trial)``,
    so results do not depend on ``workers``.
    """
    trials = range(cfg.trials)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run_trial, [alloc] * cfg.trials, [cfg] * cfg.trials, trials))
    else:
        results = [run_trial(alloc, cfg, k) for k in trials]
    M = cfg.params.M
    n = cfg.params.n
    duty = 1.0 / cfg.activation_period
    delays = np.concatenate([r.delays for r in results])
    hops = np.concatenate([r.hops for r in results])
    contents = np.concatenate([r.contents for r in results])
    dists = np.concatenate([r.distances for r in results])
    trial_delay, trial_tput, trial_peak, trial_lpr = [], [], [], []
    for r in results:
        done = len(r.delays)
        trial_delay.append(r.delays.mean() if done else math.nan)
        peak = r.cell_load.max() if r.cell_load.size else 0
        trial_peak.append(peak / max(r.slots_run, 1))
        lpr = n * peak / done if done else math.inf
        trial_lpr.append(lpr)
        trial_tput.append(duty / lpr if lpr > 0 else math.inf)
    mean_dist, _ = _per_content(dists, contents, M)
    mean_delay_m, cnt = _per_content(delays.astype(float), contents, M)
    mean_hops_m, _ = _per_content(hops.astype(float), contents, M)
    return SimOutcome(
        mean_delay_slots=float(delays.mean()) if len(delays) else math.nan,
        delay_stderr=_stderr(trial_delay),
        per_content_mean_initial_distance=mean_dist,
        per_content_mean_delay=mean_delay_m,
        per_content_mean_hops=mean_hops_m,
        per_content_requests=cnt,
        max_cell_load=float(np.mean(trial_peak)),
        load_per_request=float(np.mean(trial_lpr)),
        achieved_throughput=float(np.mean(trial_tput)),
        throughput_stderr=_stderr(trial_tput),
        hop_histogram=np.bincount(hops) if len(hops) else np.zeros(1, np.int64),
        completed=int(len(delays)),
        horizon_exceeded=int(sum(r.horizon_exceeded for r in results)),
        protocol_violations=int(sum(r.protocol_violations for r in results)),
        range_violations=int(sum(r.range_violations for r in results)),
        transmissions_checked=int(sum(r.transmissions_checked for r in results)),
        trials=cfg.trials,
    )
