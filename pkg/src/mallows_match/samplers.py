"""Stable matchings of K_{A,B}(p) when A and B are bounded above.

Every sampler here rests on one fact: with a common attractiveness order the
stable matching is unique, and it is found by letting males pick in
decreasing order of attractiveness, each taking the most attractive
compatible female who is still free.  Infinite sets are handled lazily; the
matching is grown top-down only as far as the requested window needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core import (
    UNMATCHED,
    FiniteSet,
    LowSet,
    WindowMatching,
    is_balanced,
)
from .oracle import DEFAULT_SCAN_CAP, ScanCapExceeded, edge_bits
from .qseries import coupling_constant

DEFAULT_MAX_MALES = 10**5


class MaxMExceeded(RuntimeError):
    def __init__(self, message, partial=None, m=None):
        super().__init__(message)
        self.partial = partial
        self.m = m


class StepBudgetExceeded(RuntimeError):
    pass


def _as_index_set(s):
    if isinstance(s, (FiniteSet, LowSet)):
        return s
    return FiniteSet(s)


class _FreeFemales:
    """Free females of B, scanned in decreasing order of attractiveness.

    ``holes`` (ascending) are free females that some male has already passed
    over; everything of B at or below ``tail`` is untouched and free.
    """

    def __init__(self, b):
        if isinstance(b, FiniteSet):
            self.holes = list(b.items)
            self.tail = None
        else:
            self.holes = list(b.above)
            self.tail = b.r

    def take(self, oracle, male: int, scan_cap: int) -> int | None:
        holes = self.holes
        for k in range(len(holes) - 1, -1, -1):
            j = holes[k]
            if oracle.is_compatible(male, j):
                del holes[k]
                return j
        if self.tail is None:
            return None
        j = oracle.max_compatible_at_most(male, self.tail, scan_cap=scan_cap)
        # the females strictly between j and the old tail were rejected but stay free
        self.holes = list(range(j + 1, self.tail + 1)) + holes
        self.tail = j - 1
        return j


class TopDown:
    """Incremental top-down computation of the stable matching of K_{A,B}."""

    def __init__(self, a, b, oracle, scan_cap: int = DEFAULT_SCAN_CAP):
        self.a = _as_index_set(a)
        self.b = _as_index_set(b)
        self.oracle = oracle
        self.scan_cap = scan_cap
        self.forward: dict[int, object] = {}
        self.backward: dict[int, int] = {}
        self.order: list[int] = []  # males in processing order
        self._males: Iterator[int] = self.a.descending()
        self._free = _FreeFemales(self.b)
        self.exhausted = False

    def step(self) -> tuple[int, object] | None:
        """Process the next male; returns (male, partner) or None when A is used up."""
        try:
            i = next(self._males)
        except StopIteration:
            self.exhausted = True
            return None
        j = self._free.take(self.oracle, i, self.scan_cap)
        if j is None:
            self.forward[i] = UNMATCHED
            self.order.append(i)
            return i, UNMATCHED
        self.forward[i] = j
        self.backward[j] = i
        self.order.append(i)
        return i, j

    @property
    def last_male(self) -> int | None:
        return self.order[-1] if self.order else None

    def males_done(self, lo: int) -> bool:
        """True once every male of A at or above ``lo`` has been processed."""
        if self.exhausted:
            return True
        if self.order:
            return self.order[-1] <= lo
        a = self.a
        if isinstance(a, FiniteSet):
            return not a.items or a.max < lo
        return a.max < lo

    def run_until_window(self, lo: int, max_males: int = DEFAULT_MAX_MALES):
        """Process males until every male of A at or above ``lo`` is done and
        every female of B at or above ``lo`` is matched.

        Afterwards any male still unprocessed is matched below ``lo``, so the
        maps contain every edge crossing a half-integer above ``lo``.
        """
        if isinstance(self.b, LowSet):
            need = self.b.count_at_least(lo)
        else:
            need = sum(1 for x in self.b if x >= lo)
        have = sum(1 for j in self.backward if j >= lo)
        done = 0
        while not (self.males_done(lo) and have >= need):
            if done >= max_males:
                raise StepBudgetExceeded(
                    f"processed {max_males} males without covering the window from {lo}"
                )
            res = self.step()
            done += 1
            if res is None:
                return
            j = res[1]
            if j is not UNMATCHED and j >= lo:
                have += 1

    def matching(self, lo: int, hi: int, flow=None, certified=True) -> WindowMatching:
        bwd = dict(self.backward)
        return WindowMatching(lo, hi, dict(self.forward), bwd, flow, certified)


# ---------------------------------------------------------------------------
# finite sets
# ---------------------------------------------------------------------------


def stable_match_finite(a, b, oracle) -> WindowMatching:
    """The unique stable matching of K_{A,B} for finite A and B."""
    a, b = FiniteSet(a), FiniteSet(b)
    td = TopDown(a, b, oracle)
    while td.step() is not None:
        pass
    bwd: dict[int, object] = dict(td.backward)
    for j in b:
        bwd.setdefault(j, UNMATCHED)
    both = a.items + b.items
    if not both:
        return WindowMatching(0, 0, {}, {}, None, certified=False)
    lo, hi = min(both), max(both)
    return WindowMatching(lo, hi, dict(td.forward), bwd, None, certified=(a.items == b.items))


def perfect_match_probability(n: int, q: float) -> float:
    """prod_{k=1}^{n} (1 - q^k)."""
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    out = 1.0
    qk = 1.0
    for _ in range(n):
        qk *= q
        out *= 1.0 - qk
    return out


def finite_batch(a, b, p: float, seeds) -> np.ndarray:
    """Vectorised stable matchings of K_{A,B}(p), one per seed.

    Returns an int64 array of shape (len(seeds), |A|) holding the partner of
    each male of A (A in increasing order) or ``np.iinfo(int64).min`` for
    unmatched.  Bits are the same as :class:`EdgeOracle` with each seed.
    """
    a = np.asarray(sorted(set(int(x) for x in a)), dtype=np.int64)
    b = np.asarray(sorted(set(int(x) for x in b)), dtype=np.int64)
    seeds = np.asarray(seeds, dtype=np.uint64)
    t = seeds.size
    bits = edge_bits(seeds[:, None, None], a[None, :, None], b[None, None, :], p)
    free = np.ones((t, b.size), dtype=bool)
    out = np.full((t, a.size), np.iinfo(np.int64).min, dtype=np.int64)
    rows = np.arange(t)
    for k in range(a.size - 1, -1, -1):
        cand = bits[:, k, :] & free
        hit = cand.any(axis=1)
        top = b.size - 1 - np.argmax(cand[:, ::-1], axis=1)
        out[hit, k] = b[top[hit]]
        free[rows[hit], top[hit]] = False
    return out


def finite_perfect_batch(a, b, p: float, seeds) -> np.ndarray:
    res = finite_batch(a, b, p, seeds)
    return (res != np.iinfo(np.int64).min).all(axis=1) & (len(set(a)) == len(set(b)))


# ---------------------------------------------------------------------------
# semi-infinite and low sets
# ---------------------------------------------------------------------------


def sample_semiinfinite(
    m: int,
    window: tuple[int, int],
    oracle,
    scan_cap: int = DEFAULT_SCAN_CAP,
    max_males: int = DEFAULT_MAX_MALES,
) -> WindowMatching:
    """The stable matching of K_{(-inf,m],(-inf,m]}(p), certified on ``window``."""
    lo, hi = window
    if hi > m:
        raise ValueError("window must lie inside (-inf, m]")
    td = TopDown(LowSet(m), LowSet(m), oracle, scan_cap)
    td.run_until_window(lo, max_males)
    return td.matching(lo, hi, flow=0)


def _flow_on_window(a: LowSet, b: LowSet, lo: int, hi: int):
    vals = {b.count_at_least(x) - a.count_at_least(x) for x in range(lo + 1, hi + 1)}
    return vals.pop() if len(vals) == 1 else None


def stable_match_low_pair(
    a: LowSet,
    b: LowSet,
    window: tuple[int, int],
    oracle,
    scan_cap: int = DEFAULT_SCAN_CAP,
    max_males: int = DEFAULT_MAX_MALES,
    require_balanced: bool = True,
) -> WindowMatching:
    """The stable matching sigma_{A,B} of a pair of low sets, certified on ``window``."""
    if require_balanced and not is_balanced(a, b):
        raise ValueError("pair of low sets is not balanced")
    lo, hi = window
    td = TopDown(a, b, oracle, scan_cap)
    td.run_until_window(lo, max_males)
    return td.matching(lo, hi, flow=_flow_on_window(a, b, lo, hi))


# ---------------------------------------------------------------------------
# tame limits sigma_n
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TameSampleConfig:
    flow_n: int = 0
    window: tuple[int, int] = (-10, 10)
    error_tol: float = 1e-6
    initial_m: int | None = None
    max_m: int = 1 << 20
    scan_cap: int = DEFAULT_SCAN_CAP

    def __post_init__(self):
        lo, hi = self.window
        if lo > hi:
            raise ValueError("empty window")
        if not 0 < self.error_tol < 1:
            raise ValueError("error_tol must lie in (0, 1)")
        if self.initial_m is not None and self.initial_m < hi - lo:
            raise ValueError("initial_m must be at least the window span")

    @property
    def start_m(self) -> int:
        lo, hi = self.window
        m = self.initial_m if self.initial_m is not None else max(hi - lo, 1)
        return max(m, hi, hi - self.flow_n, 1)


@dataclass(frozen=True)
class TameSample:
    matching: WindowMatching
    m: int
    error_bound: float


def _straddlers(mt: WindowMatching, lo: int, hi: int) -> set[tuple[int, int]]:
    out = set()
    for i, j in mt.forward.items():
        if isinstance(j, int) and ((i < lo and j > hi) or (i > hi and j < lo)):
            out.add((i, j))
    return out


def _finite_m_matching(n: int, m: int, window, oracle, scan_cap, max_males) -> WindowMatching:
    lo, hi = window
    td = TopDown(LowSet(m), LowSet(m + n), oracle, scan_cap)
    td.run_until_window(lo, max_males)
    return td.matching(lo, hi, flow=n)


def _agree(s1: WindowMatching, s2: WindowMatching, lo: int, hi: int):
    """Whether two certified matchings agree on every edge visible from the window."""
    strad = _straddlers(s1, lo, hi) | _straddlers(s2, lo, hi)
    males = set(range(lo, hi + 1)) | {i for i, _ in strad}
    females = set(range(lo, hi + 1)) | {j for _, j in strad}
    for i in males:
        if s1.forward.get(i, None) != s2.forward.get(i, None) or i not in s1.forward:
            return False, males, females
    for j in females:
        if s1.backward.get(j, None) != s2.backward.get(j, None) or j not in s1.backward:
            return False, males, females
    return True, males, females


def tame_limit(config: TameSampleConfig, oracle, max_males: int | None = None) -> TameSample:
    """sigma_n on the window, with a bound on the chance it differs from the limit.

    sigma_{n,m} is the stable matching of K_{(-inf,m],(-inf,m+n]}(p).  After
    shifting the females by n this is a pair of semi-infinite sets with
    r = m, so by the coupling bound sigma_{n,m} and every sigma_{n,m'} (m' > m)
    agree on all indices up to k with probability at least 1 - c^(m-k),
    c = 1 - (1-q)(q)_inf^2.  The sampler doubles m until that bound is below
    ``error_tol`` and sigma_{n,m}, sigma_{n,2m} agree on the window.
    """
    n = config.flow_n
    lo, hi = config.window
    c = coupling_constant(oracle.q) if oracle.p < 1 else 0.0
    m = config.start_m
    if config.initial_m is None and 0 < c < 1:
        # skip the sizes at which the residual bound cannot yet be met
        need = math.ceil(math.log(config.error_tol) / math.log(c))
        # (+32: straddling edges usually push k a little past the window)
        m = max(m, max(hi, hi - n) + need + 32)
    budget = max_males if max_males is not None else 4 * config.max_m + 4 * (hi - lo) + DEFAULT_MAX_MALES
    prev = _finite_m_matching(n, m, config.window, oracle, config.scan_cap, budget)
    while True:
        if 2 * m > config.max_m:
            raise MaxMExceeded(f"no agreement on window {config.window} before m={config.max_m}",
                               partial=prev, m=m)
        nxt = _finite_m_matching(n, 2 * m, config.window, oracle, config.scan_cap, budget)
        ok, males, females = _agree(prev, nxt, lo, hi)
        k = max(max(males), max(f - n for f in females))
        bound = c ** (m - k) if m > k else 1.0
        if ok and bound <= config.error_tol:
            keep = _straddlers(nxt, lo, hi)
            out = nxt.restrict(lo, hi, keep=sorted(keep))
            return TameSample(out, m, bound)
        prev, m = nxt, 2 * m


def sample_tame(config: TameSampleConfig, oracle) -> WindowMatching:
    """The tame stable matching of flow ``config.flow_n`` restricted to the window."""
    return tame_limit(config, oracle).matching


# ---------------------------------------------------------------------------
# the alpha-male cut chain on (-inf, -1]
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutChainState:
    """Position n and the unmatched individuals of the partial matching sigma_n.

    ``unmatched_males`` is in decreasing attractiveness, so its head is the
    alpha male.  The distributional backend only tracks ``unmatched_count``.
    """

    position: int = 0
    unmatched_count: int = 0
    unmatched_males: tuple[int, ...] = ()
    unmatched_females: tuple[int, ...] = ()

    @property
    def alpha(self) -> int | None:
        return self.unmatched_males[0] if self.unmatched_males else None


def _graph_step(state: CutChainState, oracle):
    new = -(state.position + 1)
    males = state.unmatched_males + (new,)
    alpha = males[0]
    if not oracle.is_compatible(alpha, new):
        females = state.unmatched_females + (new,)
        return CutChainState(state.position + 1, len(males), males, females), False, []
    pairs = [(alpha, new)]
    free = list(state.unmatched_females)  # decreasing attractiveness
    rest = males[1:]
    for k, man in enumerate(rest):
        for idx, f in enumerate(free):
            if oracle.is_compatible(man, f):
                pairs.append((man, f))
                del free[idx]
                break
        else:
            left = rest[k:]
            return CutChainState(state.position + 1, len(left), left, tuple(free)), False, pairs
    return CutChainState(state.position + 1), True, pairs


def _dist_step(state: CutChainState, rng: np.random.Generator, q: float):
    u = state.unmatched_count
    if rng.random() < q:
        return CutChainState(state.position + 1, u + 1), False
    for t in range(u):
        if rng.random() < q ** (u - t):
            return CutChainState(state.position + 1, u - t), False
    return CutChainState(state.position + 1, 0), True


def cut_chain_step(state: CutChainState, source, q: float | None = None):
    """Advance the alpha-male procedure by one position.

    ``source`` is an oracle (graph-coupled backend: returns the new state, the
    cut flag and the pairs matched during the step) or a numpy Generator
    (distributional backend, needs ``q``: returns the new state and the flag).
    The cut flag is for the half-integer just below the newly revealed pair.
    """
    if isinstance(source, np.random.Generator):
        if q is None:
            raise ValueError("the distributional backend needs q")
        return _dist_step(state, source, q)
    return _graph_step(state, source)


@dataclass
class ChainRun:
    cuts: np.ndarray  # cut flag after each step
    u_before: np.ndarray  # U_n before each step
    pairs: list[tuple[int, int]] = field(default_factory=list)


def run_cut_chain(steps: int, source, q: float | None = None, record_pairs: bool = False) -> ChainRun:
    cuts = np.zeros(steps, dtype=bool)
    u_before = np.zeros(steps, dtype=np.int64)
    state = CutChainState()
    pairs: list = []
    if isinstance(source, np.random.Generator):
        # U-only chain, unrolled for speed; same law as _dist_step
        if q is None:
            raise ValueError("the distributional backend needs q")
        u = 0
        for s in range(steps):
            u_before[s] = u
            if source.random() < q:
                u += 1
                continue
            new = 0
            for t in range(u):
                if source.random() < q ** (u - t):
                    new = u - t
                    break
            u = new
            cuts[s] = u == 0
        return ChainRun(cuts, u_before)
    for s in range(steps):
        u_before[s] = state.unmatched_count
        state, flag, got = _graph_step(state, source)
        cuts[s] = flag
        if record_pairs:
            pairs.extend(got)
    return ChainRun(cuts, u_before, pairs)


# ---------------------------------------------------------------------------
# coupling of two low pairs
# ---------------------------------------------------------------------------


def last_disagreement(
    pair1: tuple[LowSet, LowSet],
    pair2: tuple[LowSet, LowSet],
    oracle,
    scan_cap: int = DEFAULT_SCAN_CAP,
    max_males: int = DEFAULT_MAX_MALES,
) -> int:
    """Largest i >= 1 with sigma_1(-i) != sigma_2(-i), or 0 if they agree on all i >= 1.

    The two matchings are grown top-down in lockstep until a half-integer
    -k + 1/2 (k >= 1) is a cut of both; below a mutual cut they coincide.
    """
    a1, b1 = pair1
    a2, b2 = pair2
    if min(a1.r, b1.r, a2.r, b2.r) < 0:
        raise ValueError("every set must contain (-inf, 0]")
    tds = [TopDown(a1, b1, oracle, scan_cap), TopDown(a2, b2, oracle, scan_cap)]
    stats = [{"v": math.inf, "unmatched": 0} for _ in tds]

    def advance_to(td: TopDown, st: dict, idx: int):
        # process every male of A at or above idx
        while True:
            last = td.last_male
            if last is not None and last <= idx:
                return
            res = td.step()
            if res is None:
                return
            i, j = res
            if j is UNMATCHED:
                st["unmatched"] += 1
            else:
                st["v"] = min(st["v"], j)

    worst = 0
    k = 0
    while True:
        if k > max_males:
            raise StepBudgetExceeded("no mutual cut found")
        for td, st in zip(tds, stats):
            advance_to(td, st, -k)
        if k >= 1 and tds[0].forward.get(-k) != tds[1].forward.get(-k):
            worst = k
        # -k - 1/2 is a cut of sigma_l iff every male of A_l at or above -k is
        # matched at or above -k and both sides hold equally many individuals there
        if all(
            st["unmatched"] == 0
            and st["v"] >= -k
            and td.a.count_at_least(-k) == td.b.count_at_least(-k)
            for td, st in zip(tds, stats)
        ):
            return worst
        k += 1


def both_perfect_correlation(a, b, a2, b2, trials: int, p: float, seed: int = 0):
    """Monte Carlo P(sigma_{A,B} and sigma_{A',B'} both perfect) against the product bound."""
    from .oracle import trial_seeds
    from .report import Check, ExperimentReport

    seeds = trial_seeds(seed, trials)
    q = 1.0 - p
    both = finite_perfect_batch(a, b, p, seeds) & finite_perfect_batch(a2, b2, p, seeds)
    est = float(both.mean())
    se = math.sqrt(max(est * (1 - est), 1e-300) / trials)
    bound = perfect_match_probability(len(set(a)), q) * perfect_match_probability(len(set(a2)), q)
    check = Check("both-perfect", est, se, bound, "at-least")
    return ExperimentReport.from_checks(
        "correlation",
        {"A": sorted(a), "B": sorted(b), "A2": sorted(a2), "B2": sorted(b2), "p": p, "trials": trials},
        [check],
        trials=trials,
    )
