"""Bundled reference curves and the figure-regression comparison."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .params import Allocation

__all__ = ["REFERENCE_SETS", "load_reference", "FigureCheck", "compare_to_reference",
           "plateau_run"]

#: dataset name -> (alpha, quantity) with quantity in {"t", "A", "B"}
REFERENCE_SETS = {
    "fig4a": (0.55, "t"),
    "fig4b": (1.2, "t"),
    "fig5a_A": (0.55, "A"),
    "fig5a_B": (0.55, "B"),
    "fig5b_A": (1.2, "A"),
    "fig5b_B": (1.2, "B"),
}


def load_reference(name: str):
    """``(m, values)`` arrays of a bundled curve; ``m`` is 1-based."""
    if name not in REFERENCE_SETS:
        raise KeyError(f"unknown reference set {name!r}")
    text = resources.files("hybridcache").joinpath(f"data/{name}.csv").read_text("utf-8")
    rows = list(csv.reader(io.StringIO("".join(
        line for line in text.splitlines(True) if not line.startswith("#")))))
    body = rows[1:]
    m = np.array([int(r[0]) for r in body])
    v = np.array([float(r[1]) for r in body])
    return m, v


def _quantity(alloc: Allocation, q: str) -> np.ndarray:
    return {"t": alloc.t, "A": alloc.a, "B": alloc.b}[q]


@dataclass(frozen=True)
class FigureCheck:
    dataset: str
    alpha: float
    points: int
    max_rel_dev: float
    worst_m: int
    failing_points: int
    passed: bool


def compare_to_reference(name: str, alloc: Allocation, tolerance: float) -> FigureCheck:
    """Relative deviation of ``alloc`` from curve ``name`` at every bundled point."""
    alpha, q = REFERENCE_SETS[name]
    m, ref = load_reference(name)
    got = _quantity(alloc, q)[m - 1]
    rel = np.abs(got - ref) / np.maximum(np.abs(ref), 1e-12)
    k = int(np.argmax(rel))
    bad = int((rel > tolerance).sum())
    return FigureCheck(name, alpha, len(m), float(rel[k]), int(m[k]), bad, bad == 0)


def plateau_run(values, lo: float, hi: float, must_contain=()):
    """Longest contiguous 1-based index range with ``lo <= v <= hi``.

    If ``must_contain`` is given, the run has to include all of those
    indices; returns ``None`` when no such run exists.
    """
    inside = (np.asarray(values) >= lo) & (np.asarray(values) <= hi)
    best = None
    start = None
    for i, ok in enumerate(np.append(inside, False)):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            run = (start + 1, i)
            if all(run[0] <= m <= run[1] for m in must_contain):
                if best is None or run[1] - run[0] > best[1] - best[0]:
                    best = run
            start = None
    return best
