"""Zipf request popularity over a finite content library."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["ZipfModel", "harmonic_constant", "pmf", "harmonic_asymptotic_class"]


@dataclass(frozen=True)
class ZipfModel:
    """Truncated Zipf law ``p_m = m**-alpha / H_alpha(M)`` for ``m = 1..M``.

    ``alpha`` must be strictly positive; near-uniform popularity is
    obtained with a tiny exponent such as ``1e-9``.
    """

    alpha: float
    library_size: int

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"Zipf exponent must be positive, got {self.alpha!r}")
        if int(self.library_size) != self.library_size or self.library_size < 1:
            raise ValueError(f"library size must be a positive integer, got {self.library_size!r}")

    @cached_property
    def harmonic(self) -> float:
        return harmonic_constant(self)

    @cached_property
    def probabilities(self) -> np.ndarray:
        """Request probabilities as a read-only array indexed ``m - 1``."""
        m = np.arange(1, self.library_size + 1, dtype=float)
        p = m ** -self.alpha / self.harmonic
        p.setflags(write=False)
        return p

    def pmf(self, m: int) -> float:
        return pmf(self, m)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """Draw 1-based content ids."""
        cdf = np.cumsum(self.probabilities)
        u = rng.random(size)
        idx = np.searchsorted(cdf, u * cdf[-1], side="right")
        return np.minimum(idx, self.library_size - 1) + 1


def harmonic_constant(model: ZipfModel) -> float:
    """Generalized harmonic number ``sum_{i=1}^{M} i**-alpha``.

    Terms are accumulated from ``i = M`` down to ``1`` with exactly
    rounded summation, so the result does not depend on the platform's
    reduction order.
    """
    i = np.arange(model.library_size, 0, -1, dtype=float)
    return math.fsum(i ** -model.alpha)


def pmf(model: ZipfModel, m: int) -> float:
    if not 1 <= m <= model.library_size:
        raise IndexError(f"content index {m} outside 1..{model.library_size}")
    return float(m) ** -model.alpha / model.harmonic


def harmonic_asymptotic_class(alpha: float) -> tuple[str, float | None]:
    """Growth class of ``H_alpha(M)`` as ``M`` grows.

    Returns ``("constant", None)`` for ``alpha > 1``, ``("log", None)`` for
    ``alpha == 1`` and ``("polynomial", 1 - alpha)`` below one.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha > 1:
        return "constant", None
    if alpha == 1:
        return "log", None
    return "polynomial", 1 - alpha
