"""Network size / scaling parameters and the allocation containers."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .zipf import ZipfModel

__all__ = ["NetworkParams", "Allocation", "reference_instance", "REFERENCE_EXPONENTS"]

#: (gamma, beta, delta) used with the desk-scale reference instance.
REFERENCE_EXPONENTS = (0.93, 0.69, 0.69)


def _positive_int(name, value):
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class NetworkParams:
    """Concrete network sizes plus the optional scaling exponents.

    ``n`` mobile nodes with ``K_n`` cache slots each, ``f_n`` small base
    stations with ``K_sbs`` slots each, and a library of ``M`` contents
    requested with Zipf exponent ``alpha``.  ``gamma``, ``beta`` and
    ``delta`` describe how ``M``, ``K_sbs`` and ``f_n`` grow with ``n``;
    only the asymptotic routines need them.
    """

    n: int
    M: int
    f_n: int
    K_n: int
    K_sbs: int
    alpha: float
    gamma: float | None = None
    beta: float | None = None
    delta: float | None = None

    def __post_init__(self):
        for name in ("n", "M", "f_n", "K_n", "K_sbs"):
            object.__setattr__(self, name, _positive_int(name, getattr(self, name)))
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        exps = (self.gamma, self.beta, self.delta)
        if any(e is not None for e in exps):
            if any(e is None for e in exps):
                raise ValueError("gamma, beta and delta must be given together")
            g, b, d = exps
            if not 0 < b < g < 1:
                raise ValueError(f"need 0 < beta < gamma < 1, got beta={b}, gamma={g}")
            if not 0 <= d < 1:
                raise ValueError(f"need 0 <= delta < 1, got {d}")
            if d + b < 1:
                raise ValueError("need delta + beta >= 1 (SBS storage no smaller than node storage)")

    @property
    def has_exponents(self) -> bool:
        return self.gamma is not None

    @property
    def node_budget(self) -> int:
        return self.n * self.K_n

    @property
    def sbs_budget(self) -> int:
        return self.f_n * self.K_sbs

    @property
    def zipf(self) -> ZipfModel:
        return ZipfModel(self.alpha, self.M)

    def with_(self, **changes) -> "NetworkParams":
        return replace(self, **changes)


def reference_instance(alpha: float, K_sbs: int = 75, M: int = 200) -> NetworkParams:
    """The desk-scale instance behind the reference figure datasets.

    300 nodes with 2 slots, 50 SBSs, a 200-item library.  The bundled
    reference curves add up to 600 node and 3750 SBS replicas, so each SBS
    gets 75 slots by default.
    """
    g, b, d = REFERENCE_EXPONENTS
    return NetworkParams(n=300, M=M, f_n=50, K_n=2, K_sbs=K_sbs, alpha=alpha,
                         gamma=g, beta=b, delta=d)


@dataclass(frozen=True)
class Allocation:
    """Real-valued replica counts: ``a[m-1]`` at nodes, ``b[m-1]`` at SBSs."""

    a: np.ndarray
    b: np.ndarray = field(default=None)

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.zeros_like(a) if self.b is None else np.array(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be 1-D arrays of equal length")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def t(self) -> np.ndarray:
        return self.a + self.b

    def __len__(self):
        return len(self.a)

    def violations(self, params: NetworkParams, tol: float = 1e-9) -> list[str]:
        """Human-readable list of violated caching constraints (empty if feasible)."""
        out = []
        n, f = params.n, params.f_n
        if self.a.sum() > params.node_budget * (1 + tol):
            out.append(f"node budget: {self.a.sum():.6g} > {params.node_budget}")
        if self.b.sum() > params.sbs_budget * (1 + tol):
            out.append(f"SBS budget: {self.b.sum():.6g} > {params.sbs_budget}")
        if (self.a < -tol).any() or (self.b < -tol).any():
            out.append("negative replica count")
        if (self.a > n * (1 + tol)).any():
            out.append("A_m above n")
        if (self.b > f * (1 + tol)).any():
            out.append("B_m above f(n)")
        if (self.t < 1 - tol).any():
            out.append("A_m + B_m below 1")
        return out
