"""Closed-form scaling exponents: allocation laws, regimes, trade-off orders.

Everything here works on exponents of ``n``.  Content indices are written
as ``m = n**x`` with ``x`` in ``[0, gamma]``, so an allocation law is a
piecewise-linear function ``e(x)`` giving ``A_m + B_m = Theta(n**e(x))``.

All routines are written with plain arithmetic, so passing
:class:`fractions.Fraction` exponents gives exact rational results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import MissingExponents, NotApplicable

__all__ = [
    "Exponents", "RegimeReport", "Piece", "AsymptoticAllocation", "TradeoffExponents",
    "case_boundary", "regime_boundary", "comparison_threshold",
    "classify_regime", "joint_asymptotic_allocation", "individual_asymptotic_split",
    "baseline_asymptotic_allocation", "compare_strategies", "tradeoff_exponents",
    "fit_scale",
]

THREE_HALVES = Fraction(3, 2)


class Exponents(NamedTuple):
    alpha: float
    gamma: float
    beta: float
    delta: float


def _exps(params) -> Exponents:
    g = getattr(params, "gamma", None)
    b = getattr(params, "beta", None)
    d = getattr(params, "delta", None)
    if g is None or b is None or d is None:
        raise MissingExponents("gamma, beta and delta are required")
    return Exponents(params.alpha, g, b, d)


def _require_below_three_halves(e):
    if e.alpha >= THREE_HALVES:
        raise NotApplicable("allocation laws are stated only for alpha < 3/2")


def case_boundary(params):
    """``3(gamma-beta) / (2(delta+gamma-1))``: single-law vs plateau allocation."""
    e = _exps(params)
    return 3 * (e.gamma - e.beta) / (2 * (e.delta + e.gamma - 1))


def regime_boundary(params):
    """``1 + (gamma-beta) / (2(gamma+delta-1))``: lower edge of Regime II."""
    e = _exps(params)
    return 1 + (e.gamma - e.beta) / (2 * (e.gamma + e.delta - 1))


def comparison_threshold(params):
    """``3(gamma+delta-1) / (3(gamma+delta-1) - (gamma-beta))``.

    Below it the separately optimised baseline has the same order as the
    joint optimum; from it up to 3/2 the joint allocation is strictly better.
    """
    e = _exps(params)
    s = e.gamma + e.delta - 1
    return 3 * s / (3 * s - (e.gamma - e.beta))


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    b_exponent: float
    alpha_boundary_case1: float
    alpha_boundary_regime: float
    m1_exponent: float
    m2_exponent: float
    m4_exponent: float
    epsilon_note: str = "throughput bound holds up to an arbitrarily small eps > 0 in the exponent"


def _b_of(e, regime):
    if regime == "I":
        return 0
    if regime == "II":
        return (1 - e.delta) * (3 - 2 * e.alpha)
    return 1 - e.delta - e.beta + min(3 - 2 * e.alpha, 1) * e.gamma


def classify_regime(params) -> RegimeReport:
    e = _exps(params)
    lower = regime_boundary(e)
    if e.alpha >= THREE_HALVES:
        regime = "I"
    elif e.alpha >= lower:
        regime = "II"
    else:
        regime = "III"
    k = 3 / (2 * e.alpha)
    return RegimeReport(
        regime=regime,
        b_exponent=_b_of(e, regime),
        alpha_boundary_case1=case_boundary(e),
        alpha_boundary_regime=lower,
        m1_exponent=1 - e.delta,
        m2_exponent=e.gamma - (e.gamma - e.beta) * k,
        m4_exponent=e.gamma - (e.gamma + e.delta - 1) * k,
    )


@dataclass(frozen=True)
class Piece:
    """``e(x) = n_offset + m_slope * x`` for ``x`` below ``upper``."""
    upper: float
    m_slope: float
    n_offset: float

    def at(self, x):
        if self.n_offset == -math.inf:
            return -math.inf
        return self.n_offset + self.m_slope * x


@dataclass(frozen=True)
class AsymptoticAllocation:
    """Piecewise power law ``Theta(m**slope * n**offset)`` in ``x = log_n m``.

    Pieces are ordered; the last one has ``upper = inf``.  Boundaries may
    fall outside ``[0, gamma]``, in which case that piece is empty.
    ``scale`` is an optional constant fitted at finite ``n`` by
    :func:`fit_scale`.  An offset of ``-inf`` marks a piece where the
    replica count is zero.
    """
    pieces: tuple
    boundaries: dict
    scale: float | None = None

    def piece_for(self, x) -> Piece:
        for p in self.pieces:
            if x < p.upper:
                return p
        return self.pieces[-1]

    def exponent_at(self, x):
        return self.piece_for(x).at(x)

    def predict(self, m, n):
        """Fitted replica counts at finite ``n`` (requires ``scale``)."""
        if self.scale is None:
            raise ValueError("call fit_scale first")
        m = np.asarray(m, dtype=float)
        x = np.log(m) / math.log(n)
        e = np.array([float(self.exponent_at(v)) for v in np.atleast_1d(x)])
        return self.scale * np.power(float(n), e)


def _tail(e):
    """Exponent offset of the SBS-served tail law."""
    return e.beta + e.delta - e.gamma * (1 - 2 * e.alpha / 3)


def _slope(e):
    return -2 * e.alpha / 3


def joint_asymptotic_allocation(params) -> AsymptoticAllocation:
    """Order of ``A*_m + B*_m`` for the joint optimum (alpha < 3/2)."""
    e = _exps(params)
    _require_below_three_halves(e)
    rep = classify_regime(e)
    s = _slope(e)
    tail = _tail(e)
    if e.alpha <= case_boundary(e):
        pieces = (Piece(math.inf, s, tail),)
        bounds = {"m2": rep.m2_exponent}
    else:
        head = e.delta - (1 - e.delta) * s
        pieces = (Piece(rep.m1_exponent, s, head),
                  Piece(rep.m2_exponent, 0, e.delta),
                  Piece(math.inf, s, tail))
        bounds = {"m1": rep.m1_exponent, "m2": rep.m2_exponent}
    return AsymptoticAllocation(pieces, bounds)


def individual_asymptotic_split(params):
    """Orders of ``A*_m`` and ``B*_m`` separately.

    Node replicas live on ``M1 & M2``: all of ``M2`` when alpha is at or
    below the case boundary, only ``M1`` above it.  Beyond that prefix
    ``A*_m = 0`` (offset ``-inf``).  Returns ``(a_law, b_law)``.
    """
    e = _exps(params)
    _require_below_three_halves(e)
    rep = classify_regime(e)
    s = _slope(e)
    tail = _tail(e)
    head = e.delta - (1 - e.delta) * s
    if e.alpha <= case_boundary(e):
        a_end, support = rep.m2_exponent, "M2"
    else:
        a_end, support = rep.m1_exponent, "M1"
    a_law = AsymptoticAllocation(
        (Piece(a_end, s, min(tail, head)), Piece(math.inf, 0, -math.inf)),
        {"support": support, "end": a_end})
    b_law = AsymptoticAllocation(
        (Piece(rep.m2_exponent, 0, e.delta), Piece(math.inf, s, tail)),
        {"m2": rep.m2_exponent})
    return a_law, b_law


def baseline_asymptotic_allocation(params) -> AsymptoticAllocation:
    """Order of ``A*_m + B*_m`` when node and SBS replicas are optimised apart."""
    e = _exps(params)
    _require_below_three_halves(e)
    rep = classify_regime(e)
    s = _slope(e)
    node_law = 1 - e.gamma * (1 + s)
    pieces = (Piece(rep.m4_exponent, s, node_law),
              Piece(rep.m2_exponent, 0, e.delta),
              Piece(math.inf, s, _tail(e)))
    return AsymptoticAllocation(pieces, {"m4": rep.m4_exponent, "m2": rep.m2_exponent})


def compare_strategies(params) -> str:
    """``"equal_order"`` or ``"joint_wins"`` for joint vs. separate optimisation."""
    e = _exps(params)
    _require_below_three_halves(e)
    return "equal_order" if e.alpha < comparison_threshold(e) else "joint_wins"


@dataclass(frozen=True)
class TradeoffExponents:
    """``lambda(n) = Theta(D(n) / n**b)`` and ``lambda(n) = O(n**throughput_upper_exponent)``.

    The upper-bound exponent carries an extra ``-eps/2`` for arbitrarily
    small ``eps > 0``; it is kept symbolic in ``note``.
    """
    b: float
    throughput_upper_exponent: float
    regime: str
    note: str = "-(b + eps)/2 with eps > 0 arbitrarily small"


def tradeoff_exponents(params) -> TradeoffExponents:
    rep = classify_regime(params)
    return TradeoffExponents(rep.b_exponent, -rep.b_exponent / 2, rep.regime)


def fit_scale(law: AsymptoticAllocation, values, n, m_index) -> AsymptoticAllocation:
    """Fit the single multiplicative constant of ``law`` to finite-``n`` data.

    Least squares in log space over the given 1-based indices.
    """
    m = np.asarray(m_index, dtype=float)
    v = np.asarray(values, dtype=float)
    x = np.log(m) / math.log(n)
    e = np.array([float(law.exponent_at(xi)) for xi in x])
    ok = np.isfinite(e) & (v > 0)
    if not ok.any():
        raise ValueError("no positive samples on a non-zero piece")
    log_c = np.mean(np.log(v[ok]) - e[ok] * math.log(n))
    return replace(law, scale=float(math.exp(log_c)))
