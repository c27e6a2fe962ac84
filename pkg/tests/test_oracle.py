import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mallows_match.oracle import (
    GOLDEN,
    EdgeOracle,
    GraphOracle,
    OracleParams,
    Predicate,
    ScanCapExceeded,
    derive_seed,
    edge_bits,
    edge_hash,
    edge_key,
    fmix64,
    max_compatible_at_most,
    scan_upward_filtered,
    trial_seeds,
    zigzag,
)

ints64 = st.integers(min_value=-(2**40), max_value=2**40)


def test_splitmix_reference_value():
    # first output of the reference splitmix64 generator seeded with 0
    assert fmix64(0 + GOLDEN) == 0xE220A8397B1DCDAF
    assert edge_key(0) == 0xE220A8397B1DCDAF


def test_frozen_edge_hashes():
    assert edge_hash(42, -3, 7) == 0xC210C3FB44B9FD6C
    assert edge_hash(0, 0, 0) == 0xA5B3E9497875994F
    o = EdgeOracle(0.5, 42)
    bits = [int(o.is_compatible(i, j)) for i in range(-2, 2) for j in range(-2, 2)]
    assert bits == [0, 1, 0, 1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 1, 1]


def test_zigzag_is_injective_on_a_range():
    vals = [zigzag(i) for i in range(-500, 500)]
    assert sorted(vals) == list(range(1000))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**64 - 1), ints64, ints64, st.floats(0.01, 0.99))
def test_scalar_and_vector_paths_agree(seed, i, j, p):
    o = EdgeOracle(p, seed)
    assert bool(edge_bits(seed, i, j, p)) == o.is_compatible(i, j)


def test_params_validation():
    with pytest.raises(ValueError):
        OracleParams(0.0)
    with pytest.raises(ValueError):
        OracleParams(1.5)
    with pytest.raises(ValueError):
        OracleParams(0.5, -1)
    assert OracleParams(0.25).q == 0.75


def test_p_one_is_complete():
    o = EdgeOracle(1.0, 3)
    assert all(o.is_compatible(i, j) for i in range(-5, 5) for j in range(-5, 5))
    assert o.compatible_pairs(np.arange(10), 0).all()


def test_determinism_and_counter():
    o = EdgeOracle(0.4, 11)
    first = [o.is_compatible(i, -i + 3) for i in range(50)]
    assert first == [o.is_compatible(i, -i + 3) for i in range(50)]
    assert o.queries == 100


def test_marginal_rate_and_neighbour_correlation():
    n = 10**6
    p = 0.6
    i = np.repeat(np.arange(-500, 500), 1000)
    j = np.tile(np.arange(0, 2000, 2), 1000)
    a = edge_bits(7, i, j, p)
    b = edge_bits(7, i, j + 1, p)
    assert abs(a.mean() - p) <= 4 * np.sqrt(p * (1 - p) / n)
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) <= 4 / np.sqrt(n)


def test_max_compatible_basics():
    full = EdgeOracle(1.0)
    assert max_compatible_at_most(full, 0, 5, {5}) == 4
    empty = GraphOracle([])
    assert empty.max_compatible_at_most(0, 5, floor=-5) is None
    with pytest.raises(ScanCapExceeded) as err:
        empty.max_compatible_at_most(0, 5, scan_cap=20)
    assert err.value.scanned == 20
    with pytest.raises(ValueError):
        full.max_compatible_at_most(0, 0, scan_cap=0)


def test_max_compatible_offset_is_geometric():
    p = 0.3
    rng = np.random.default_rng(1)
    n = 10**5
    offs = np.empty(n, dtype=int)
    for t, (seed, i) in enumerate(zip(rng.integers(0, 2**62, n), rng.integers(-1000, 1000, n))):
        o = EdgeOracle(p, int(seed))
        offs[t] = 10 - o.max_compatible_at_most(int(i), 10)
    kmax = 15
    obs = np.bincount(np.minimum(offs, kmax), minlength=kmax + 1)
    pk = p * (1 - p) ** np.arange(kmax)
    exp = np.append(pk, (1 - p) ** kmax) * n
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_scan_upward_always_true():
    o = GraphOracle([(0, j) for j in range(100)])
    pred = Predicate("female", require=(0,))
    assert scan_upward_filtered(o, pred, 0, 3) == 2


def test_scan_upward_geometric_offset():
    p = 0.5
    pred = Predicate("female", require=(0,))
    offs = np.array([EdgeOracle(p, s).scan_upward_filtered(pred, 0) for s in range(20000)])
    assert abs(offs.mean() - (1 - p) / p) < 4 * np.sqrt((1 - p) / p**2 / offs.size)


def test_scan_upward_joint_predicate_rate():
    # compatible with male 0 and incompatible with ten matched males at p = q = 1/2
    pred = Predicate("female", require=(0,), forbid=tuple(range(1, 11)))
    cand = np.arange(0, 2**21)
    hit = pred.evaluate(EdgeOracle(0.5, 9), cand)
    rate = 0.5**11
    assert abs(hit.mean() - rate) < 4 * np.sqrt(rate * (1 - rate) / cand.size)


def test_scan_upward_cap_and_male_role():
    o = EdgeOracle(0.5, 2)
    pred = Predicate("male", require=(4,), forbid=tuple(range(40)))
    with pytest.raises(ScanCapExceeded):
        o.scan_upward_filtered(pred, 0, scan_cap=100)
    k = o.scan_upward_filtered(Predicate("male", require=(4,)), 0)
    assert o.is_compatible(k, 4)
    assert not any(o.is_compatible(m, 4) for m in range(k))
    with pytest.raises(ValueError):
        Predicate("other")


def test_seed_helpers():
    s = trial_seeds(5, 4)
    assert s.dtype == np.uint64 and list(s) == [5, 4, 7, 6]
    assert derive_seed(42, "x") == 9921272891432156657
    assert derive_seed(42, "x") != derive_seed(42, "y")
