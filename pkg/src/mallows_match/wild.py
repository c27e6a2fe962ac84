"""Greedy constructions of stable matchings that are not tame.

Individuals are enumerated in some order.  Each one that is still single is
given a partner far up the opposite side: compatible with it, more
attractive than everyone already matched on that side, and incompatible with
everyone already matched on its own side.  That last clause keeps the
partial matching stable at every stage.  Every choice is made through oracle
scans, so a run can be replayed and audited from the seed alone.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import verify_stable_on
from .core import UNMATCHED, WindowMatching
from .oracle import Predicate, ScanCapExceeded
from .samplers import sample_semiinfinite

WILD_SCAN_CAP = 10**7
MALE, FEMALE = "M", "F"


class InvalidP(ValueError):
    pass


class Variant(str, enum.Enum):
    NOT_PERFECT = "NotPerfect"
    NOT_LOCALLY_FINITE = "NotLocallyFinite"
    LOCALLY_FINITE_WILD = "LocallyFiniteWild"


@dataclass(frozen=True)
class WildConfig:
    """``a_seq`` shorter than ``steps`` is padded with ones."""

    variant: Variant = Variant.LOCALLY_FINITE_WILD
    a_seq: tuple[int, ...] = ()
    steps: int = 12
    scan_cap: int = WILD_SCAN_CAP
    negative_window: int = 10  # how much of the negative side to complete or mark

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "a_seq", tuple(int(a) for a in self.a_seq))
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if any(a < 1 for a in self.a_seq):
            raise ValueError("a_seq entries must be positive")
        if self.scan_cap < 1:
            raise ValueError("scan_cap must be >= 1")

    def a(self, j: int) -> int:
        """a_j for j >= 1."""
        return self.a_seq[j - 1] if j <= len(self.a_seq) else 1


@dataclass(frozen=True)
class WildStep:
    n: int
    index: int
    gender: str
    partner: int | None  # None: already matched, nothing done
    start: int = 0
    rank: int = 1
    forbid: tuple[int, ...] = ()
    scan_length: int = 0

    @property
    def edge(self):
        if self.partner is None:
            return None
        return (self.index, self.partner) if self.gender == MALE else (self.partner, self.index)

    @property
    def edge_length(self) -> int:
        return 0 if self.partner is None else abs(self.partner - self.index)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "individual": [self.index, self.gender],
            "edge": list(self.edge) if self.edge else None,
            "edge_length": self.edge_length,
            "scan_length": self.scan_length,
            "rank": self.rank,
        }


@dataclass
class WildResult:
    matching: WindowMatching
    steps: list[WildStep]
    variant: str
    h_trace: list[int] = field(default_factory=list)
    n_same: list[int] = field(default_factory=list)
    completion: WindowMatching | None = None

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "matching": self.matching.to_dict(),
            "steps": [s.to_dict() for s in self.steps],
            "h_trace": list(self.h_trace),
        }


def enumeration(variant: Variant):
    """The order (index, gender) in which a variant visits individuals."""
    variant = Variant(variant)
    k = 0
    while True:
        z = k // 2 if k % 2 == 0 else -(k + 1) // 2  # 0, -1, 1, -2, 2, ...
        if variant is Variant.NOT_PERFECT:
            yield (z, MALE)
            yield (k, FEMALE)
        elif variant is Variant.NOT_LOCALLY_FINITE:
            yield (z, MALE)
            yield (z, FEMALE)
        else:
            yield (k, MALE)
            yield (k, FEMALE)
        k += 1


class _Partial:
    def __init__(self):
        self.fwd: dict[int, object] = {}
        self.bwd: dict[int, object] = {}

    def matched(self, gender: str) -> dict:
        return self.fwd if gender == MALE else self.bwd

    def is_matched(self, idx: int, gender: str) -> bool:
        return isinstance(self.matched(gender).get(idx), int)

    def add(self, male: int, female: int):
        self.fwd[male] = female
        self.bwd[female] = male

    def edges(self) -> int:
        return sum(isinstance(v, int) for v in self.fwd.values())

    def top(self, gender: str) -> int | None:
        m = [k for k, v in self.matched(gender).items() if isinstance(v, int)]
        return max(m) if m else None


def _pick(oracle, x: int, gender: str, forbid, start: int, rank: int, scan_cap: int):
    role = FEMALE if gender == MALE else MALE
    pred = Predicate("female" if role == FEMALE else "male", require=(x,), forbid=tuple(forbid))
    return oracle.scan_upward_filtered(pred, start, rank, scan_cap)


def build_wild(config: WildConfig, oracle) -> WildResult:
    """Run ``config.steps`` steps of the greedy construction for one variant.

    On a scan cap-out the exception carries the partial WildResult.
    """
    if oracle.p >= 1.0 and config.steps > 1:
        raise InvalidP("p = 1 leaves no incompatible candidates after the first step")
    part = _Partial()
    steps: list[WildStep] = []
    order = enumeration(config.variant)
    for n in range(1, config.steps + 1):
        idx, g = next(order)
        if part.is_matched(idx, g):
            steps.append(WildStep(n, idx, g, None))
            continue
        other = FEMALE if g == MALE else MALE
        top = part.top(other)
        start = 0 if top is None else max(0, top + 1)
        forbid = tuple(sorted(k for k, v in part.matched(g).items() if isinstance(v, int)))
        rank = config.a(part.edges() + 1)
        try:
            k = _pick(oracle, idx, g, forbid, start, rank, config.scan_cap)
        except ScanCapExceeded as e:
            e.partial = _finish(config, oracle, part, steps)
            raise
        if g == MALE:
            part.add(idx, k)
        else:
            part.add(k, idx)
        steps.append(WildStep(n, idx, g, k, start, rank, forbid, k - start + 1))
    return _finish(config, oracle, part, steps)


def _finish(config: WildConfig, oracle, part: _Partial, steps) -> WildResult:
    fwd, bwd = dict(part.fwd), dict(part.bwd)
    w = config.negative_window
    completion = None
    if config.variant is Variant.NOT_PERFECT:
        # no female of negative index is ever chosen
        for j in range(-w, 0):
            bwd[j] = UNMATCHED
    elif config.variant is Variant.LOCALLY_FINITE_WILD:
        completion = sample_semiinfinite(-1, (-w, -1), oracle)
        for i, j in completion.forward.items():
            fwd[i] = j
        for j, i in completion.backward.items():
            bwd[j] = i
    idx = list(fwd) + list(bwd) or [0]
    lo, hi = min(idx), max(idx)
    m = WindowMatching(lo, hi, fwd, bwd, None, certified=False)
    return WildResult(m, list(steps), config.variant.value, completion=completion)


def audit(result: WildResult, oracle) -> list[str]:
    """Replay every step against the oracle and check stability of what was built.

    Returns a list of problems; empty means the run is consistent.
    """
    problems: list[str] = []
    for s in result.steps:
        if s.partner is None:
            continue
        male, female = s.edge
        if not oracle.is_compatible(male, female):
            problems.append(f"step {s.n}: edge {s.edge} is not compatible")
        role = "female" if s.gender == MALE else "male"
        pred = Predicate(role, require=(s.index,), forbid=s.forbid)
        cand = np.arange(s.start, s.partner + 1, dtype=np.int64)
        hits = cand[pred.evaluate(oracle, cand)]
        if hits.size != s.rank or hits[-1] != s.partner:
            problems.append(f"step {s.n}: partner {s.partner} is not hit number {s.rank} from {s.start}")
    m = result.matching
    males = [i for i, v in m.forward.items() if v is not None]
    females = [j for j, v in m.backward.items() if v is not None]
    for i, j in verify_stable_on(m, oracle, males, females):
        problems.append(f"blocking pair ({i}, {j})")
    return problems


# ---------------------------------------------------------------------------
# the sharp construction
# ---------------------------------------------------------------------------


def build_wild_sharp(steps: int, oracle, scan_cap: int = WILD_SCAN_CAP, negative_window: int = 10) -> WildResult:
    """Interleaved construction on top of the stable matching of the non-positive half-line.

    x_{2i-1} = (i, male), x_{2i} = (i, female).  A single x gets the least
    attractive partner that beats everyone matched so far (index > H_n), is
    compatible with x, and is incompatible with every positive-index
    individual of x's gender already matched.  ``h_trace`` holds H_0..H_steps.
    """
    if not 0 < oracle.p < 1:
        raise InvalidP("the sharp construction needs 0 < p < 1")
    base = sample_semiinfinite(0, (-negative_window, 0), oracle)
    part = _Partial()
    part.fwd.update(base.forward)
    part.bwd.update(base.backward)
    h = 0
    trace = [h]
    n_same = []
    rec: list[WildStep] = []
    for n in range(1, steps + 1):
        idx, g = (n + 1) // 2, MALE if n % 2 else FEMALE
        forbid = tuple(sorted(k for k, v in part.matched(g).items() if k > 0 and isinstance(v, int)))
        n_same.append(len(forbid))
        if part.is_matched(idx, g):
            rec.append(WildStep(n, idx, g, None))
            trace.append(h)
            continue
        try:
            k = _pick(oracle, idx, g, forbid, h + 1, 1, scan_cap)
        except ScanCapExceeded as e:
            e.partial = WildResult(
                WindowMatching(-negative_window, h, dict(part.fwd), dict(part.bwd), None, certified=False),
                rec, "Sharp", trace, n_same, base)
            raise
        if g == MALE:
            part.add(idx, k)
        else:
            part.add(k, idx)
        rec.append(WildStep(n, idx, g, k, h + 1, 1, forbid, k - h))
        h = max(h, k, idx)
        trace.append(h)
    m = WindowMatching(-negative_window, h, dict(part.fwd), dict(part.bwd), None, certified=False)
    return WildResult(m, rec, "Sharp", trace, n_same, base)


def fitted_slope(h_trace) -> float:
    """Least-squares slope of log H_n against n over the entries with H_n >= 1."""
    n = np.arange(len(h_trace), dtype=float)
    h = np.asarray(h_trace, dtype=float)
    ok = h >= 1
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(n[ok], np.log(h[ok]), 1)[0])


# ---------------------------------------------------------------------------
# growth diagnostics
# ---------------------------------------------------------------------------


@dataclass
class GrowthReport:
    positions: list[float]
    m_values: list[int]
    tame_ratio: list[float]  # M / log|i|
    wild_ratio: list[float]  # log M / i
    classification: str

    @property
    def tame_max(self) -> float:
        return max(self.tame_ratio, default=0.0)

    @property
    def tame_min(self) -> float:
        return min(self.tame_ratio, default=0.0)


def longest_crossing(matching: WindowMatching, at: float) -> int:
    """M at ``at`` over the known edges; the caller vouches that none is missing."""
    best = 0
    for j, s in matching.forward.items():
        if isinstance(s, int) and min(j, s) < at < max(j, s):
            best = max(best, abs(s - j))
    return best


def growth_diagnostics(matching: WindowMatching, positions=None,
                       tame_ceiling: float = 20.0, wild_floor: float = 0.1) -> GrowthReport:
    """M(i + 1/2) / log|i| and log M(i + 1/2) / i along a ladder of positions.

    Tame-consistent means the first ratio never exceeds ``tame_ceiling``;
    wild-consistent means the second stays at or above ``wild_floor`` over
    the upper half of the ladder.  This is a heuristic reading of finite data.
    """
    if positions is None:
        positions = [i + 0.5 for i in range(max(matching.lo, 2), matching.hi)]
    positions = [float(x) for x in positions]
    ms, tr, wr = [], [], []
    for at in positions:
        i = at - 0.5
        m = longest_crossing(matching, at)
        ms.append(m)
        tr.append(m / math.log(abs(i)) if abs(i) > 1 else math.nan)
        wr.append(math.log(m) / i if m > 0 and i > 0 else -math.inf)
    finite_tr = [x for x in tr if not math.isnan(x)]
    tame = max(finite_tr, default=0.0) <= tame_ceiling
    upper = [x for at, x in zip(positions, wr) if at > 0][len([a for a in positions if a > 0]) // 2:]
    wild = bool(upper) and min(upper) >= wild_floor
    if tame and not wild:
        cls = "tame-consistent"
    elif wild and not tame:
        cls = "wild-consistent"
    else:
        cls = "inconclusive"
    return GrowthReport(positions, ms, tr, wr, cls)
