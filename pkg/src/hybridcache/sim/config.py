"""Simulation configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..params import NetworkParams
from .geometry import Geometry, axis_colors, coloring_period

__all__ = ["SimConfig"]


@dataclass(frozen=True)
class SimConfig:
    """Knobs of the slotted network simulation.

    ``routing_cell_area`` defaults to ``c_a log(n) / n`` with ``c_a = 2``
    and ``sbs_cell_area`` to ``1 / f``.  ``protocol_delta`` is the guard
    factor of the protocol interference model; the activation period and
    the transmission range ``sqrt(5 a)`` follow from it and the cell grid.

    Requests are issued during ``horizon_slots`` slots; outstanding ones
    then get ``drain_slots`` (default: same as the horizon) to finish
    before being counted as horizon overruns.
    """
    params: NetworkParams
    routing_cell_area: float | None = None
    area_constant: float = 2.0
    sbs_cell_area: float | None = None
    protocol_delta: float = 1.0
    tx_range: float | None = None
    horizon_slots: int = 200
    drain_slots: int | None = None
    trials: int = 4
    master_seed: int = 0
    boundary: str = "torus"
    mobility: bool = True
    debug_protocol: bool = False

    def __post_init__(self):
        if self.boundary not in ("torus", "reflect"):
            raise ValueError("boundary must be 'torus' or 'reflect'")
        if self.horizon_slots < 1 or self.trials < 1:
            raise ValueError("horizon_slots and trials must be positive")
        if not self.protocol_delta > 0:
            raise ValueError("protocol_delta must be positive")
        a = self.cell_area
        if not 0 < a <= 1:
            raise ValueError(f"routing cell area must lie in (0, 1], got {a}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def cell_area(self) -> float:
        if self.routing_cell_area is not None:
            return float(self.routing_cell_area)
        n = self.params.n
        return min(1.0, self.area_constant * math.log(max(n, 2)) / n)

    @property
    def sbs_area(self) -> float:
        return self.sbs_cell_area if self.sbs_cell_area is not None else 1.0 / self.params.f_n

    @property
    def geometry(self) -> Geometry:
        return Geometry.build(self.params.n, self.params.f_n, self.cell_area,
                              torus=self.boundary == "torus")

    @property
    def range(self) -> float:
        if self.tx_range is not None:
            return self.tx_range
        return math.sqrt(5.0) * self.geometry.cell_side

    @property
    def colors_per_axis(self) -> int:
        col = axis_colors(self.geometry.cells, coloring_period(self.protocol_delta))
        return int(col.max()) + 1

    @property
    def activation_period(self) -> int:
        """Number of colour classes, i.e. ``1 + c`` in the activation schedule."""
        return self.colors_per_axis ** 2

    @property
    def drain(self) -> int:
        return self.horizon_slots if self.drain_slots is None else self.drain_slots

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)
