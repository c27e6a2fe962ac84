"""The Euler function (q)_inf and the coupling constants built from it."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache


@dataclass(frozen=True)
class QSeriesValue:
    q: float
    value: float
    truncation_k: int
    tail_bound: float


def q_pochhammer_inf(q: float, tol: float = 1e-12) -> QSeriesValue:
    """prod_{k>=1} (1 - q^k), truncated at K with a certified relative tail.

    The discarded factors satisfy -log prod_{k>K}(1-q^k) <= sum_{k>K} q^k/(1-q^k)
    <= q^{K+1} / ((1-q)(1-q^{K+1})), and we stop once that is at most ``tol``.
    """
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if q == 0:
        return QSeriesValue(q, 1.0, 0, 0.0)
    value = 1.0
    qk = 1.0
    k = 0
    while True:
        nxt = qk * q
        tail = nxt / ((1 - q) * (1 - nxt))
        if tail <= tol:
            return QSeriesValue(q, value, k, tail)
        k += 1
        qk = nxt
        value *= 1.0 - qk


@lru_cache(maxsize=256)
def euler_phi(q: float) -> float:
    return q_pochhammer_inf(q, 1e-15).value


def hardy_ramanujan(q: float) -> float:
    """sqrt(2 pi (1-q)) exp(-pi^2 / (6 (1-q))), the q -> 1 asymptotic of (q)_inf."""
    e = 1.0 - q
    return math.sqrt(2 * math.pi * e) * math.exp(-math.pi**2 / (6 * e))


def hardy_ramanujan_standard(q: float) -> float:
    """sqrt(2 pi / t) exp(-pi^2 / (6 t)) with t = -log q.

    This is the form whose ratio to (q)_inf actually tends to 1 as q -> 1;
    the version above is off by a factor of order e^{pi^2/12} / (1-q).
    """
    t = -math.log(q)
    return math.sqrt(2 * math.pi / t) * math.exp(-math.pi**2 / (6 * t))


def coupling_constant(q: float) -> float:
    """c(q) = 1 - (1-q)(q)_inf^2, the per-step failure bound of the mutual-cut coupling."""
    if q == 0:
        return 0.0
    phi = q_pochhammer_inf(q, 1e-12).value
    return 1.0 - (1.0 - q) * phi * phi


def coupling_tail_bound(q: float, n: int) -> float:
    """[1 - (1-q)(q)_inf^2]^n: bound on P(the coupled matchings still differ beyond n)."""
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1.0
    return coupling_constant(q) ** n


def bernoulli_cut_rate(q: float) -> float:
    """(1-q)(q)_inf: density of the i.i.d. process that the cut indicators dominate."""
    return (1.0 - q) * q_pochhammer_inf(q, 1e-12).value
