"""Index sets, window-restricted matchings and crossing statistics."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from itertools import count
from typing import Iterator, Mapping, Sequence

import numpy as np


class Status(enum.Enum):
    UNMATCHED = "unmatched"
    UNKNOWN = "unknown"

    def __repr__(self):
        return self.name


# sigma(i) = -infinity in the matching-as-function convention
UNMATCHED = Status.UNMATCHED
UNKNOWN = Status.UNKNOWN


class InsufficientWindow(ValueError):
    """A crossing statistic was requested where edges may be invisible."""


# ---------------------------------------------------------------------------
# index sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteSet:
    items: tuple[int, ...]

    def __init__(self, items):
        items = tuple(sorted(set(int(x) for x in items)))
        object.__setattr__(self, "items", items)

    def __len__(self):
        return len(self.items)

    def __contains__(self, x):
        return x in set(self.items)

    def __iter__(self):
        return iter(self.items)

    def descending(self) -> Iterator[int]:
        return reversed(self.items)

    @property
    def max(self) -> int:
        return self.items[-1]

    @property
    def min(self) -> int:
        return self.items[0]


@dataclass(frozen=True)
class LowSet:
    """``(-inf, r] U above`` where every element of ``above`` exceeds ``r + 1``.

    ``r`` is r(A): the largest integer with (-inf, r] contained in A.
    """

    r: int
    above: tuple[int, ...] = ()

    def __init__(self, r: int, above=()):
        above = tuple(sorted(set(int(x) for x in above)))
        if above and above[0] <= r + 1:
            raise ValueError(f"elements of `above` must exceed r + 1 = {r + 1}: {above}")
        object.__setattr__(self, "r", int(r))
        object.__setattr__(self, "above", above)

    @classmethod
    def semi_infinite(cls, m: int) -> "LowSet":
        return cls(m)

    @classmethod
    def from_difference(cls, added=(), removed=()) -> "LowSet":
        """The low set ``((-inf, 0] minus removed) U added``."""
        removed = {int(x) for x in removed}
        added = {int(x) for x in added}
        if any(x > 0 for x in removed) or any(x <= 0 for x in added):
            raise ValueError("removed must be <= 0 and added must be > 0")
        r = min(removed) - 1 if removed else 0
        members = {x for x in range(r + 1, 1) if x not in removed} | added
        while r + 1 in members:
            r += 1
            members.discard(r)
        return cls(r, members)

    def __contains__(self, x):
        return x <= self.r or x in self.above

    @property
    def max(self) -> int:
        return self.above[-1] if self.above else self.r

    def descending(self) -> Iterator[int]:
        yield from reversed(self.above)
        yield from count(self.r, -1)

    def count_at_least(self, t: int) -> int:
        return sum(1 for x in self.above if x >= t) + max(0, self.r - t + 1)

    def symmetric_difference(self) -> tuple[list[int], list[int]]:
        """(elements above 0, non-members at or below 0) relative to (-inf, 0]."""
        added = [x for x in range(1, self.max + 1) if x in self]
        removed = [x for x in range(min(self.r + 1, 1), 1) if x not in self]
        return added, removed


# ``SemiInfinite(m)`` is the low set (-inf, m].
SemiInfinite = LowSet.semi_infinite


def is_balanced(a: LowSet, b: LowSet) -> bool:
    t = min(a.r, b.r)
    return a.count_at_least(t) == b.count_at_least(t)


# ---------------------------------------------------------------------------
# matchings
# ---------------------------------------------------------------------------


def _as_key(v):
    return -math.inf if v is UNMATCHED else v


@dataclass(frozen=True)
class WindowMatching:
    """A matching known on (at least) the integer window ``[lo, hi]``.

    ``forward`` maps males to a female index or UNMATCHED, ``backward`` maps
    females to a male index or UNMATCHED.  Indices outside the maps are
    UNKNOWN.  The maps may hold known pairs outside the window.

    ``certified`` is set by the producer: when true, every matching edge that
    crosses a half-integer strictly inside the window appears in the maps.
    """

    lo: int
    hi: int
    forward: Mapping[int, object]
    backward: Mapping[int, object]
    flow: int | None = None
    certified: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty window")
        for i, j in self.forward.items():
            if j is UNMATCHED or j is UNKNOWN:
                continue
            if self.backward.get(j) != i:
                raise ValueError(f"forward({i})={j} but backward({j})={self.backward.get(j)}")
        for j, i in self.backward.items():
            if i is UNMATCHED or i is UNKNOWN:
                continue
            if self.forward.get(i) != j:
                raise ValueError(f"backward({j})={i} but forward({i})={self.forward.get(i)}")

    @property
    def window(self) -> tuple[int, int]:
        return self.lo, self.hi

    def partner(self, i: int):
        return self.forward.get(i, UNKNOWN)

    def partner_of_female(self, j: int):
        return self.backward.get(j, UNKNOWN)

    __call__ = partner

    def pairs(self) -> list[tuple[int, int]]:
        return sorted((i, j) for i, j in self.forward.items() if isinstance(j, int))

    def window_males(self) -> range:
        return range(self.lo, self.hi + 1)

    def unknown(self) -> list[int]:
        """Window indices whose partner (as a male or as a female) is unknown."""
        out = set()
        for x in self.window_males():
            if x not in self.forward or x not in self.backward:
                out.add(x)
        return sorted(out)

    def is_perfect_on_window(self) -> bool:
        for x in self.window_males():
            if not isinstance(self.forward.get(x), int) or not isinstance(self.backward.get(x), int):
                return False
        return True

    def restrict(self, lo: int, hi: int, keep: Sequence[tuple[int, int]] = ()) -> "WindowMatching":
        """Keep only pairs touching ``[lo, hi]`` (plus any pairs in ``keep``)."""
        fwd, bwd = {}, {}
        for i, j in self.forward.items():
            if lo <= i <= hi or (isinstance(j, int) and lo <= j <= hi):
                fwd[i] = j
                if isinstance(j, int):
                    bwd[j] = i
        for j, i in self.backward.items():
            if lo <= j <= hi:
                bwd[j] = i
                if isinstance(i, int):
                    fwd[i] = j
        for i, j in keep:
            fwd[i], bwd[j] = j, i
        return WindowMatching(lo, hi, fwd, bwd, self.flow, self.certified)

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "window": [self.lo, self.hi],
            "pairs": [list(p) for p in self.pairs()],
            "unmatched_males": sorted(i for i, j in self.forward.items() if j is UNMATCHED),
            "unmatched_females": sorted(j for j, i in self.backward.items() if i is UNMATCHED),
            "unknown": self.unknown(),
            "flow": self.flow,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: Mapping, certified: bool = True) -> "WindowMatching":
        lo, hi = d["window"]
        fwd, bwd = {}, {}
        for i, j in d["pairs"]:
            fwd[int(i)], bwd[int(j)] = int(j), int(i)
        for i in d.get("unmatched_males", ()):
            fwd[int(i)] = UNMATCHED
        for j in d.get("unmatched_females", ()):
            bwd[int(j)] = UNMATCHED
        return cls(int(lo), int(hi), fwd, bwd, d.get("flow"), certified)

    @classmethod
    def from_json(cls, s: str) -> "WindowMatching":
        return cls.from_dict(json.loads(s))

    @classmethod
    def from_function(cls, f, lo: int, hi: int, flow=None) -> "WindowMatching":
        """Matching ``i -> f(i)`` for males in ``[lo, hi]``; partners may leave the window."""
        fwd, bwd = {}, {}
        for i in range(lo, hi + 1):
            j = f(i)
            fwd[i] = j
            if isinstance(j, int):
                bwd[j] = i
        return cls(lo, hi, fwd, bwd, flow)


@dataclass(frozen=True)
class FinitePermutation:
    """A bijection of ``[start, start + n)`` given by its values."""

    values: tuple[int, ...]
    start: int = 0

    def __init__(self, values, start: int = 0):
        values = tuple(int(v) for v in values)
        if sorted(values) != list(range(start, start + len(values))):
            raise ValueError(f"{values} is not a permutation of [{start}, {start + len(values)})")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start", int(start))

    def __len__(self):
        return len(self.values)

    def __call__(self, i: int) -> int:
        return self.values[i - self.start]

    def inverse(self) -> "FinitePermutation":
        inv = [0] * len(self.values)
        for k, v in enumerate(self.values):
            inv[v - self.start] = k + self.start
        return FinitePermutation(inv, self.start)

    @classmethod
    def from_matching(cls, m: WindowMatching, start: int, n: int) -> "FinitePermutation":
        return cls([m.partner(i) for i in range(start, start + n)], start)


def inversion_number(perm) -> int:
    """Number of pairs i < j with perm(i) > perm(j), by merge sort."""
    values = list(perm.values if isinstance(perm, FinitePermutation) else perm)

    def sort_count(a):
        if len(a) <= 1:
            return a, 0
        mid = len(a) // 2
        left, x = sort_count(a[:mid])
        right, y = sort_count(a[mid:])
        merged, inv, i, j = [], x + y, 0, 0
        while i < len(left) and j < len(right):
            if left[i] <= right[j]:
                merged.append(left[i])
                i += 1
            else:
                merged.append(right[j])
                inv += len(left) - i
                j += 1
        merged.extend(left[i:])
        merged.extend(right[j:])
        return merged, inv

    return sort_count(values)[1]


# ---------------------------------------------------------------------------
# crossings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrossingProfile:
    at: float
    l_plus: int
    l_minus: int
    m_max: int


def _check_half_integer(at) -> float:
    at = float(at)
    if not (2 * at).is_integer() or (2 * at) % 2 == 0:
        raise ValueError(f"{at} is not a half-integer")
    return at


def _require_visible(matching: WindowMatching, at: float):
    if not matching.certified:
        raise InsufficientWindow("matching carries no crossing certificate")
    if not (matching.lo < at < matching.hi):
        raise InsufficientWindow(f"{at} is not strictly inside window [{matching.lo}, {matching.hi}]")
    if matching.unknown():
        raise InsufficientWindow("window contains individuals with unknown partners")


def crossing_profile(matching: WindowMatching, at) -> CrossingProfile:
    """L+, L- and M at the half-integer ``at``.

    An unmatched male above ``at`` counts towards L- (sigma = -inf lies below
    every position) but never towards M, which only sees finite partners.
    """
    at = _check_half_integer(at)
    _require_visible(matching, at)
    lp = lm = mx = 0
    for j, s in matching.forward.items():
        if s is UNMATCHED:
            if j > at:
                lm += 1
            continue
        if j < at < s:
            lp += 1
            mx = max(mx, s - j)
        elif s < at < j:
            lm += 1
            mx = max(mx, j - s)
    return CrossingProfile(at, lp, lm, mx)


def flow_of(matching: WindowMatching, at) -> int:
    at = _check_half_integer(at)
    _require_visible(matching, at)
    if not matching.is_perfect_on_window():
        raise ValueError("flow is only defined for perfect matchings")
    prof = crossing_profile(matching, at)
    return prof.l_plus - prof.l_minus


def crossing_positions(matching: WindowMatching) -> list[float]:
    return [i + 0.5 for i in range(matching.lo, matching.hi)]


def cut_positions(matching: WindowMatching) -> tuple[list[float], list[float]]:
    """(cuts, uncertified) over the half-integers strictly inside the window."""
    positions = crossing_positions(matching)
    if not matching.certified or matching.unknown():
        return [], positions
    pos, lp, lm, _ = crossing_arrays(matching)
    return [float(x) for x in pos[(lp == 0) & (lm == 0)]], []


def identity_matching(lo: int, hi: int, shift: int = 0) -> WindowMatching:
    """The shift ``i -> i + shift`` known on a window, certified for crossings."""
    fwd = {i: i + shift for i in range(lo - abs(shift), hi + abs(shift) + 1)}
    bwd = {j: i for i, j in fwd.items()}
    return WindowMatching(lo, hi, fwd, bwd, flow=shift)


def crossing_arrays(matching: WindowMatching):
    """L+, L- and M at every half-integer strictly inside the window.

    Returns ``(positions, l_plus, l_minus, m_max)`` as numpy arrays, where
    ``positions[k] = lo + k + 1/2``.
    """
    lo, hi = matching.lo, matching.hi
    if not matching.certified or matching.unknown():
        raise InsufficientWindow("window is not certified for crossings")
    size = hi - lo
    lp = np.zeros(size + 1, dtype=np.int64)
    lm = np.zeros(size + 1, dtype=np.int64)
    mx = np.zeros(size, dtype=np.int64)
    for j, s in matching.forward.items():
        if s is UNMATCHED:
            # crosses every position below j
            b = min(j - lo, size)
            if b > 0:
                lm[0] += 1
                lm[b] -= 1
            continue
        if s == j:
            continue
        a, b = (j, s) if j < s else (s, j)
        # positions x = lo + k + 1/2 with a < x < b  <=>  a - lo <= k <= b - lo - 1
        k0, k1 = max(a - lo, 0), min(b - lo - 1, size - 1)
        if k0 > k1:
            continue
        arr = lp if j < s else lm
        arr[k0] += 1
        arr[k1 + 1] -= 1
        np.maximum(mx[k0:k1 + 1], b - a, out=mx[k0:k1 + 1])
    positions = lo + 0.5 + np.arange(size)
    return positions, np.cumsum(lp)[:size], np.cumsum(lm)[:size], mx
