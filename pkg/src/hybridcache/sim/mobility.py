"""Random-walk mobility on the ``L x L`` lattice."""
from __future__ import annotations

import numpy as np

__all__ = ["MOVES", "step_mobility"]

MOVES = np.array([(1, 0), (-1, 0), (0, 1), (0, -1)], dtype=np.int64)


def step_mobility(positions, rng: np.random.Generator, lattice: int,
                  boundary: str = "torus") -> np.ndarray:
    """Move every node to one of its four neighbouring sites with probability 1/4.

    On the torus moves wrap around.  With ``boundary="reflect"`` a move that
    would leave the square is cancelled and the node stays put, which keeps
    the chain symmetric and its stationary law uniform.
    """
    pos = np.asarray(positions, dtype=np.int64)
    new = pos + MOVES[rng.integers(0, 4, size=len(pos))]
    if boundary == "torus":
        return new % lattice
    if boundary == "reflect":
        out = (new < 0) | (new >= lattice)
        blocked = out.any(axis=1)
        new[blocked] = pos[blocked]
        return new
    raise ValueError(f"unknown boundary rule {boundary!r}")
