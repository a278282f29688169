"""Unit-square geometry: lattices, routing cells, SBS grid, distances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "Geometry", "sbs_grid_shape", "pairwise_distance", "cell_chain",
    "coloring_period", "axis_colors", "mean_closest_distance", "distance_slope",
]


def sbs_grid_shape(f: int) -> tuple[int, int]:
    """Closest-to-square ``rows x cols`` factorisation of ``f``."""
    r = int(math.isqrt(f))
    while f % r:
        r -= 1
    return r, f // r


def coloring_period(guard: float) -> int:
    """Per-axis reuse distance in cells for the protocol model.

    With range ``r = sqrt(5) s`` two co-coloured transmitters ``K`` cells
    apart leave at least ``(K - 2) s`` to any foreign receiver, which must
    exceed ``(1 + guard) r``.
    """
    return math.ceil(2 + (1 + guard) * math.sqrt(5))


def axis_colors(g: int, period: int) -> np.ndarray:
    """Colour of each of ``g`` rows so equal colours are ``>= period`` apart on a ring.

    Full blocks reuse ``0..period-1``; leftover rows get private colours.
    """
    if g <= period:
        return np.arange(g)
    q = g // period
    col = np.arange(g) % period
    extra = np.arange(q * period, g)
    col[extra] = period + (extra - q * period)
    return col


def pairwise_distance(p, q, torus: bool):
    """Euclidean distance between broadcastable point arrays ``(..., 2)``."""
    d = np.abs(np.asarray(p, float) - np.asarray(q, float))
    if torus:
        d = np.minimum(d, 1.0 - d)
    return np.sqrt((d * d).sum(axis=-1))


@dataclass(frozen=True)
class Geometry:
    """Discretisation of the unit square used by one simulation.

    ``L x L`` mobility lattice, ``g x g`` routing cells and an
    ``rows x cols`` grid of SBS coverage rectangles with one SBS at each
    centre.
    """
    lattice: int
    cells: int
    sbs_rows: int
    sbs_cols: int
    torus: bool = True

    @classmethod
    def build(cls, n: int, f: int, routing_cell_area: float, torus: bool = True):
        L = max(1, math.isqrt(n))
        if L * L < n:
            L += 1
        g = max(1, int(math.floor(1.0 / math.sqrt(routing_cell_area) + 1e-9)))
        r, c = sbs_grid_shape(f)
        return cls(L, g, r, c, torus)

    @property
    def cell_side(self) -> float:
        return 1.0 / self.cells

    def site_xy(self, sites) -> np.ndarray:
        """Centres of lattice sites given as integer ``(…, 2)`` arrays."""
        return (np.asarray(sites, float) + 0.5) / self.lattice

    def cell_of_xy(self, xy) -> np.ndarray:
        return np.minimum((np.asarray(xy) * self.cells).astype(np.int64), self.cells - 1)

    def cell_of_site(self, sites) -> np.ndarray:
        return (np.asarray(sites, np.int64) * self.cells) // self.lattice

    def flat(self, cells) -> np.ndarray:
        cells = np.asarray(cells)
        return cells[..., 0] * self.cells + cells[..., 1]

    def sbs_xy(self) -> np.ndarray:
        i, j = np.divmod(np.arange(self.sbs_rows * self.sbs_cols), self.sbs_cols)
        return np.stack([(i + 0.5) / self.sbs_rows, (j + 0.5) / self.sbs_cols], axis=1)

    def sbs_of_xy(self, xy) -> np.ndarray:
        xy = np.asarray(xy)
        i = np.minimum((xy[..., 0] * self.sbs_rows).astype(np.int64), self.sbs_rows - 1)
        j = np.minimum((xy[..., 1] * self.sbs_cols).astype(np.int64), self.sbs_cols - 1)
        return i * self.sbs_cols + j

    def sbs_cell_range(self, s):
        """Inclusive routing-cell index ranges whose centres lie in SBS ``s``'s area."""
        s = np.asarray(s)
        i, j = np.divmod(s, self.sbs_cols)
        g = self.cells
        # cell k has centre (k + .5)/g; inside [i/R, (i+1)/R) iff k in [ceil(g i/R - .5), ...]
        lo_i = np.ceil(g * i / self.sbs_rows - 0.5).astype(np.int64)
        hi_i = np.ceil(g * (i + 1) / self.sbs_rows - 0.5).astype(np.int64) - 1
        lo_j = np.ceil(g * j / self.sbs_cols - 0.5).astype(np.int64)
        hi_j = np.ceil(g * (j + 1) / self.sbs_cols - 0.5).astype(np.int64) - 1
        # a coverage area thinner than a routing cell still owns the cell at its centre
        ci = self.cell_of_xy((i + 0.5) / self.sbs_rows)
        cj = self.cell_of_xy((j + 0.5) / self.sbs_cols)
        lo_i, hi_i = np.minimum(lo_i, ci), np.maximum(hi_i, ci)
        lo_j, hi_j = np.minimum(lo_j, cj), np.maximum(hi_j, cj)
        return lo_i, hi_i, lo_j, hi_j

    def step_toward(self, cur, dst) -> np.ndarray:
        """One routing-cell step from ``cur`` toward ``dst`` (``(k, 2)`` int arrays).

        Moves along the axis with the larger remaining offset (first axis on
        ties); shortest wrap direction on the torus.
        """
        g = self.cells
        d = np.asarray(dst) - np.asarray(cur)
        if self.torus:
            d = (d + g // 2) % g - g // 2
        ax0 = np.abs(d[:, 0]) >= np.abs(d[:, 1])
        nxt = np.array(cur, copy=True)
        nxt[ax0, 0] += np.sign(d[ax0, 0])
        nxt[~ax0, 1] += np.sign(d[~ax0, 1])
        if self.torus:
            nxt %= g
        return nxt

    def cell_distance(self, a, b) -> np.ndarray:
        """Manhattan routing-cell distance."""
        d = np.abs(np.asarray(a) - np.asarray(b))
        if self.torus:
            d = np.minimum(d, self.cells - d)
        return d.sum(axis=-1)


def cell_chain(p0, p1, cells: int) -> list[tuple[int, int]]:
    """Grid cells pierced by the segment ``p0 -> p1`` (Amanatides-Woo traversal).

    Works in the plain unit square with ``cells x cells`` squares.  When the
    segment passes exactly through a cell corner the first axis is crossed
    first, so consecutive cells always share an edge.
    """
    x0, y0 = p0[0] * cells, p0[1] * cells
    x1, y1 = p1[0] * cells, p1[1] * cells
    i, j = min(int(x0), cells - 1), min(int(y0), cells - 1)
    ie, je = min(int(x1), cells - 1), min(int(y1), cells - 1)
    dx, dy = x1 - x0, y1 - y0
    si = 1 if dx > 0 else -1
    sj = 1 if dy > 0 else -1
    inf = math.inf
    t_max_x = ((i + (si > 0)) - x0) / dx if dx else inf
    t_max_y = ((j + (sj > 0)) - y0) / dy if dy else inf
    t_dx = abs(1 / dx) if dx else inf
    t_dy = abs(1 / dy) if dy else inf
    out = [(i, j)]
    while (i, j) != (ie, je):
        if t_max_x <= t_max_y:
            i += si
            t_max_x += t_dx
        else:
            j += sj
            t_max_y += t_dy
        out.append((i, j))
        if len(out) > 4 * cells + 4:
            break
    return out


def mean_closest_distance(replicas: int, trials: int, rng: np.random.Generator,
                          lattice: int = 100, requesters: int = 256,
                          torus: bool = True) -> float:
    """Monte Carlo mean distance from a uniform requester to its closest of
    ``replicas`` holders placed uniformly on distinct lattice sites."""
    total = 0.0
    sites = lattice * lattice
    for _ in range(trials):
        h = rng.choice(sites, size=replicas, replace=False)
        hxy = (np.stack(np.divmod(h, lattice), axis=1) + 0.5) / lattice
        r = rng.integers(0, sites, size=requesters)
        rxy = (np.stack(np.divmod(r, lattice), axis=1) + 0.5) / lattice
        tree = cKDTree(hxy, boxsize=1.0 if torus else None)
        d, _ = tree.query(rxy)
        total += d.mean()
    return total / trials


def distance_slope(replica_counts=(4, 16, 64, 256), trials=200, seed=0,
                   lattice=100, torus=True):
    """Log-log slope of mean closest-holder distance vs replica count.

    Returns ``(slope, means)``; the square-root law predicts ``-1/2``.
    """
    rng = np.random.default_rng(seed)
    means = np.array([mean_closest_distance(R, trials, rng, lattice, torus=torus)
                      for R in replica_counts])
    slope = np.polyfit(np.log(replica_counts), np.log(means), 1)[0]
    return float(slope), means
