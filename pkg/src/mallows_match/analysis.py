"""Checks run against sampler output: stability, the Mallows law, the shift ladder."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import UNMATCHED, FinitePermutation, WindowMatching, inversion_number
from .oracle import DEFAULT_SCAN_CAP, GraphOracle, ScanCapExceeded
from .qseries import (  # noqa: F401  (re-exported)
    QSeriesValue,
    bernoulli_cut_rate,
    coupling_constant,
    coupling_tail_bound,
    euler_phi,
    hardy_ramanujan,
    hardy_ramanujan_standard,
    q_pochhammer_inf,
)
from .samplers import stable_match_finite


class FlowMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# stability
# ---------------------------------------------------------------------------


def _status_array(m: dict, idx) -> tuple[np.ndarray, np.ndarray]:
    """(indices with a known status, their partner as float with -inf = unmatched)."""
    keep, vals = [], []
    for x in idx:
        s = m.get(x)
        if s is None:
            continue
        keep.append(x)
        vals.append(-math.inf if s is UNMATCHED else float(s))
    return np.asarray(keep, dtype=np.int64), np.asarray(vals, dtype=float)


def verify_stable_on(matching: WindowMatching, oracle, males, females) -> list[tuple[int, int]]:
    """Blocking pairs among the given males and females.

    Individuals whose partner is unknown are skipped.
    """
    mi, ms = _status_array(matching.forward, sorted(set(males)))
    fj, fs = _status_array(matching.backward, sorted(set(females)))
    if mi.size == 0 or fj.size == 0:
        return []
    cand = (ms[:, None] < fj[None, :]) & (fs[None, :] < mi[:, None])
    a, b = np.nonzero(cand)
    if a.size == 0:
        return []
    bits = oracle.compatible_pairs(mi[a], fj[b])
    return [(int(i), int(j)) for i, j in zip(mi[a][bits], fj[b][bits])]


def verify_stable(matching: WindowMatching, oracle, window=None) -> list[tuple[int, int]]:
    """Every compatible (i, j) in window x window with sigma(i) < j and sigma^-1(j) < i."""
    lo, hi = window if window is not None else matching.window
    r = range(lo, hi + 1)
    return verify_stable_on(matching, oracle, r, r)


# ---------------------------------------------------------------------------
# the Mallows law
# ---------------------------------------------------------------------------


def _one(q):
    return Fraction(1) if isinstance(q, Fraction) else 1.0


def mallows_normaliser(n: int, q):
    """sum over S_n of q^inv = prod_{i=1}^n (1 - q^i) / (1 - q)^n."""
    one = _one(q)
    if q == 1:
        return math.factorial(n) * one
    num = one
    for i in range(1, n + 1):
        num *= one - q**i
    return num / (one - q) ** n


def mallows_pmf(perm, q):
    """q^inv(perm) / sum_tau q^inv(tau); exact when ``q`` is a Fraction."""
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    values = perm.values if isinstance(perm, FinitePermutation) else tuple(perm)
    inv = inversion_number(values)
    return q**inv / mallows_normaliser(len(values), q)


@dataclass
class ExactLaw:
    n: int
    perfect_prob: object
    conditional: dict = field(default_factory=dict)  # permutation tuple -> probability


def exact_conditional_law(n: int, q) -> ExactLaw:
    """Law of the stable matching of K_{[0,n),[0,n)}(1-q) given that it is perfect.

    Every one of the 2^(n^2) edge sets is enumerated, weighted by
    p^#edges q^(n^2 - #edges).  Pass ``q`` as a Fraction for exact arithmetic.
    """
    one = _one(q)
    p = one - q
    cells = [(i, j) for i in range(n) for j in range(n)]
    tot = len(cells)
    pw = [p**e * q ** (tot - e) for e in range(tot + 1)]
    law: dict[tuple, object] = {}
    perfect = 0 * one
    nodes = list(range(n))
    for mask in range(1 << tot):
        edges = [cells[k] for k in range(tot) if mask >> k & 1]
        res = stable_match_finite(nodes, nodes, GraphOracle(edges))
        vals = tuple(res.forward[i] for i in nodes)
        if any(v is UNMATCHED for v in vals):
            continue
        w = pw[len(edges)]
        perfect += w
        law[vals] = law.get(vals, 0 * one) + w
    for k in law:
        law[k] = law[k] / perfect
    return ExactLaw(n, perfect, law)


def all_permutations(n: int):
    return [tuple(t) for t in itertools.permutations(range(n))]


# ---------------------------------------------------------------------------
# tame structure
# ---------------------------------------------------------------------------


@dataclass
class LadderReport:
    flow: int
    window: tuple[int, int]
    exceptions: list[int]
    violations: list[str]
    checked_pairs: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def shift_ladder_check(sigma_n: WindowMatching, sigma_n1: WindowMatching) -> LadderReport:
    """Compare tame matchings of flows n and n+1 on their common window.

    Checked: sigma_n(i) <= sigma_{n+1}(i) for every male, sigma_n^-1(j) >=
    sigma_{n+1}^-1(j) for every female, and for consecutive exceptions
    e_t < e_{t+1} (males where the two differ) sigma_n(e_{t+1}) = sigma_{n+1}(e_t).
    """
    if sigma_n.flow is None or sigma_n1.flow is None or sigma_n1.flow != sigma_n.flow + 1:
        raise FlowMismatch(f"expected flows n and n+1, got {sigma_n.flow} and {sigma_n1.flow}")
    lo, hi = max(sigma_n.lo, sigma_n1.lo), min(sigma_n.hi, sigma_n1.hi)
    violations: list[str] = []
    exceptions: list[int] = []
    for i in range(lo, hi + 1):
        a, b = sigma_n.forward.get(i), sigma_n1.forward.get(i)
        if not isinstance(a, int) or not isinstance(b, int):
            violations.append(f"male {i} is not matched in both ({a!r}, {b!r})")
            continue
        if a > b:
            violations.append(f"sigma_n({i})={a} > sigma_n+1({i})={b}")
        if a != b:
            exceptions.append(i)
        fa, fb = sigma_n.backward.get(i), sigma_n1.backward.get(i)
        if isinstance(fa, int) and isinstance(fb, int) and fa < fb:
            violations.append(f"female {i}: sigma_n^-1={fa} < sigma_n+1^-1={fb}")
    checked = 0
    for e0, e1 in zip(exceptions, exceptions[1:]):
        checked += 1
        if sigma_n.forward[e1] != sigma_n1.forward[e0]:
            violations.append(
                f"ladder broken at exceptions {e0} < {e1}: "
                f"sigma_n({e1})={sigma_n.forward[e1]} != sigma_n+1({e0})={sigma_n1.forward[e0]}"
            )
    return LadderReport(sigma_n.flow, (lo, hi), exceptions, violations, checked)


# ---------------------------------------------------------------------------
# nearest compatible female
# ---------------------------------------------------------------------------


def min_compatible_distance(oracle, i: int, scan_cap: int = DEFAULT_SCAN_CAP) -> int:
    """min |i - j| over females j compatible with male i."""
    if oracle.is_compatible(i, i):
        return 0
    examined = 1
    d = 1
    while examined < scan_cap:
        if oracle.is_compatible(i, i - d) or oracle.is_compatible(i, i + d):
            return d
        examined += 2
        d += 1
    raise ScanCapExceeded(f"no compatible female within distance {d - 1} of {i}", scanned=examined)


def min_compatible_distance_batch(p: float, seeds, i: int = 0, max_d: int = 64) -> np.ndarray:
    """Vectorised over seeds; -1 where nothing is found within ``max_d``."""
    from .oracle import edge_bits

    seeds = np.asarray(seeds, dtype=np.uint64)
    d = np.arange(max_d + 1)
    up = edge_bits(seeds[:, None], i, i + d[None, :], p)
    down = edge_bits(seeds[:, None], i, i - d[None, :], p)
    hit = up | down
    out = np.argmax(hit, axis=1)
    out[~hit.any(axis=1)] = -1
    return out
