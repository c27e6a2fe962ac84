"""Lazy Bernoulli(p) percolation of the complete bipartite graph on Z x Z.

Edge bits come from a counter-mode hash keyed by the seed and evaluated at
the pair (male, female).  Nothing is cached: a point query and a long scan
over the same pairs always see the same graph.

The hash (fixed, platform independent):

    zigzag(i)  = 2i if i >= 0 else -2i - 1          (Z -> N, injective)
    fmix(z)    = splitmix64 finalizer
    key        = fmix(seed + GOLDEN)
    h          = fmix(fmix(key ^ zigzag(i)) ^ zigzag(j))
    h          = fmix(h + key)
    compatible = (h >> 11) < round(p * 2**53)

All arithmetic is mod 2**64.  The scalar path (Python ints) and the vectorised
path (numpy uint64) compute the same bits; the test-suite checks this.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

DEFAULT_SCAN_CAP = 10**6


class ScanCapExceeded(RuntimeError):
    """A scan examined ``scan_cap`` candidates without finding a hit."""

    def __init__(self, message: str, scanned: int = 0, partial=None):
        super().__init__(message)
        self.scanned = scanned
        self.partial = partial


def fmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def zigzag(i: int) -> int:
    return 2 * i if i >= 0 else -2 * i - 1


def _fmix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def _zigzag_np(i) -> np.ndarray:
    i = np.asarray(i, dtype=np.int64)
    return ((i << np.int64(1)) ^ (i >> np.int64(63))).astype(np.uint64)


def threshold_for(p: float) -> int:
    return int(round(p * (1 << 53)))


def edge_key(seed: int) -> int:
    return fmix64(seed + GOLDEN)


def edge_hash(seed: int, i: int, j: int) -> int:
    key = edge_key(seed)
    h = fmix64(fmix64(key ^ zigzag(i)) ^ zigzag(j))
    return fmix64(h + key)


def edge_bits(seed, i, j, p: float) -> np.ndarray:
    """Vectorised compatibility bits; ``seed``, ``i`` and ``j`` broadcast."""
    seed = np.asarray(seed, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _fmix64_np(seed + np.uint64(GOLDEN))
        h = _fmix64_np(_fmix64_np(key ^ _zigzag_np(i)) ^ _zigzag_np(j))
        h = _fmix64_np(h + key)
    if p >= 1.0:
        return np.ones(h.shape, dtype=bool)
    return (h >> np.uint64(11)) < np.uint64(threshold_for(p))


@dataclass(frozen=True)
class OracleParams:
    p: float
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if not (0 <= self.seed <= MASK64):
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def q(self) -> float:
        return 1.0 - self.p


class _ScanMixin:
    """Scans shared by every oracle; subclasses provide the bit queries."""

    p: float
    queries: int

    def is_compatible(self, i: int, j: int) -> bool:  # pragma: no cover
        raise NotImplementedError

    def compatible_pairs(self, i, j) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def max_compatible_at_most(
        self,
        i: int,
        bound: int,
        excluded: Iterable[int] = (),
        scan_cap: int = DEFAULT_SCAN_CAP,
        floor: int | None = None,
    ) -> int | None:
        """Largest ``j <= bound`` outside ``excluded`` compatible with male ``i``.

        Returns ``None`` when the finite range ``[floor, bound]`` holds no such
        ``j``.  An unbounded scan (``floor=None``) that examines ``scan_cap``
        non-excluded candidates without a hit raises :class:`ScanCapExceeded`.
        """
        if scan_cap < 1:
            raise ValueError("scan_cap must be >= 1")
        excluded = excluded if isinstance(excluded, (set, frozenset)) else set(excluded)
        examined = 0
        j = bound
        while floor is None or j >= floor:
            if j not in excluded:
                if examined >= scan_cap:
                    raise ScanCapExceeded(
                        f"no compatible female for male {i} in {scan_cap} candidates below {bound}",
                        scanned=examined,
                    )
                examined += 1
                if self.is_compatible(i, j):
                    return j
            j -= 1
        return None

    def scan_upward_filtered(
        self,
        predicate: "Predicate",
        start: int,
        count: int = 1,
        scan_cap: int = DEFAULT_SCAN_CAP,
    ) -> int:
        """The ``count``-th smallest integer ``>= start`` satisfying ``predicate``."""
        if count < 1:
            raise ValueError("count must be >= 1")
        found = 0
        pos = start
        chunk = 64
        while pos - start < scan_cap:
            n = min(chunk, scan_cap - (pos - start))
            cand = np.arange(pos, pos + n, dtype=np.int64)
            ok = predicate.evaluate(self, cand)
            hits = cand[ok]
            if found + hits.size >= count:
                return int(hits[count - found - 1])
            found += hits.size
            pos += n
            chunk = min(chunk * 2, 1 << 16)
        raise ScanCapExceeded(
            f"{predicate} found {found}/{count} hits in {scan_cap} candidates from {start}",
            scanned=scan_cap,
        )


@dataclass(frozen=True)
class Predicate:
    """Conjunction of compatibility constraints on a candidate index.

    ``role`` is the gender of the candidate.  Every index in ``require`` must
    be compatible with the candidate and every index in ``forbid`` must be
    incompatible with it; those indices have the opposite gender.
    """

    role: str
    require: tuple[int, ...] = ()
    forbid: tuple[int, ...] = ()

    def __post_init__(self):
        if self.role not in ("male", "female"):
            raise ValueError("role must be 'male' or 'female'")

    def _bits(self, oracle, other: int, cand: np.ndarray) -> np.ndarray:
        if self.role == "female":
            return oracle.compatible_pairs(other, cand)
        return oracle.compatible_pairs(cand, other)

    def evaluate(self, oracle, cand: np.ndarray) -> np.ndarray:
        """Boolean mask over ``cand``; filters progressively so later
        constraints are only queried on surviving candidates."""
        alive = np.ones(cand.shape, dtype=bool)
        for other in self.require:
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            alive[idx] = self._bits(oracle, other, cand[idx])
        for other in self.forbid:
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            alive[idx] = ~self._bits(oracle, other, cand[idx])
        return alive


class EdgeOracle(_ScanMixin):
    """Seeded compatibility relation of K_{Z,Z}(p).

    The first argument of every query is the male index.  ``queries`` is a
    diagnostics counter and is not synchronised across threads.
    """

    def __init__(self, p: float, seed: int = 0):
        self.params = OracleParams(p, seed)
        self.p = self.params.p
        self.q = self.params.q
        self.seed = self.params.seed
        self._key = edge_key(self.seed)
        self._thr = threshold_for(self.p)
        self.queries = 0

    def __repr__(self):
        return f"EdgeOracle(p={self.p}, seed={self.seed})"

    def is_compatible(self, i: int, j: int) -> bool:
        self.queries += 1
        if self.p >= 1.0:
            return True
        key = self._key
        zi = 2 * i if i >= 0 else -2 * i - 1
        zj = 2 * j if j >= 0 else -2 * j - 1
        h = fmix64(fmix64(key ^ zi) ^ zj)
        return (fmix64(h + key) >> 11) < self._thr

    def compatible_pairs(self, i, j) -> np.ndarray:
        bits = edge_bits(self.seed, i, j, self.p)
        self.queries += bits.size
        return bits


class GraphOracle(_ScanMixin):
    """An explicit finite edge set, for exhaustive enumeration and hand-built cases."""

    def __init__(self, edges: Iterable[tuple[int, int]], p: float = 0.5):
        self.edges = frozenset((int(a), int(b)) for a, b in edges)
        self.p = p
        self.q = 1.0 - p
        self.queries = 0

    def is_compatible(self, i: int, j: int) -> bool:
        self.queries += 1
        return (i, j) in self.edges

    def compatible_pairs(self, i, j) -> np.ndarray:
        ii, jj = np.broadcast_arrays(np.asarray(i), np.asarray(j))
        out = np.fromiter(
            ((int(a), int(b)) in self.edges for a, b in zip(ii.ravel(), jj.ravel())),
            dtype=bool,
            count=ii.size,
        )
        self.queries += ii.size
        return out.reshape(ii.shape)


def is_compatible(oracle, i: int, j: int) -> bool:
    return oracle.is_compatible(i, j)


def max_compatible_at_most(oracle, i, bound, excluded=(), scan_cap=DEFAULT_SCAN_CAP, floor=None):
    return oracle.max_compatible_at_most(i, bound, excluded, scan_cap, floor)


def scan_upward_filtered(oracle, predicate: Predicate, start: int, count: int = 1,
                         scan_cap: int = DEFAULT_SCAN_CAP) -> int:
    return oracle.scan_upward_filtered(predicate, start, count, scan_cap)


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial seed: ``seed XOR trial`` (the oracle key mixes it further)."""
    return (seed ^ trial) & MASK64


def trial_seeds(seed: int, trials: int) -> np.ndarray:
    return np.uint64(seed & MASK64) ^ np.arange(trials, dtype=np.uint64)


def derive_seed(seed: int, label: str | Sequence[int]) -> int:
    """Mix a base seed with a label into an independent-looking 64-bit seed."""
    h = fmix64(seed ^ GOLDEN)
    data = label.encode() if isinstance(label, str) else bytes(label)
    for b in data:
        h = fmix64(h ^ b)
    return h
