import itertools
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mallows_match.core import (
    UNKNOWN,
    UNMATCHED,
    FinitePermutation,
    FiniteSet,
    InsufficientWindow,
    LowSet,
    SemiInfinite,
    WindowMatching,
    crossing_arrays,
    crossing_profile,
    cut_positions,
    flow_of,
    identity_matching,
    inversion_number,
    is_balanced,
)


def swap01(lo=-5, hi=5):
    f = {i: i for i in range(lo, hi + 1)}
    f[0], f[1] = 1, 0
    return WindowMatching(lo, hi, f, {j: i for i, j in f.items()})


def brute_inv(v):
    return sum(1 for a, b in itertools.combinations(range(len(v)), 2) if v[a] > v[b])


# -- index sets ---------------------------------------------------------------


def test_finite_set_sorted_unique():
    s = FiniteSet([3, 1, 3, -2])
    assert s.items == (-2, 1, 3)
    assert list(s.descending()) == [3, 1, -2]
    assert (s.min, s.max) == (-2, 3)


def test_low_set_basics():
    a = LowSet(2, [5, 4])
    assert a.above == (4, 5) and a.max == 5
    assert 2 in a and 3 not in a and 4 in a and -100 in a
    assert list(itertools.islice(a.descending(), 5)) == [5, 4, 2, 1, 0]
    assert a.count_at_least(0) == 5
    with pytest.raises(ValueError):
        LowSet(2, [3])
    assert SemiInfinite(0) == LowSet(0)


def test_low_set_from_difference_round_trip():
    a = LowSet.from_difference(added=[1, 3], removed=[-1])
    assert a.r == -2 and a.above == (0, 1, 3)
    assert a.symmetric_difference() == ([1, 3], [-1])
    assert LowSet.from_difference(added=[1, 2]) == LowSet(2)


def test_balanced():
    assert is_balanced(LowSet(0), LowSet(-1, [1]))
    assert is_balanced(LowSet(2, [4]), LowSet(1, [3, 6]))
    assert not is_balanced(LowSet(0), LowSet(1))


# -- matchings ----------------------------------------------------------------


def test_window_matching_consistency_is_enforced():
    with pytest.raises(ValueError):
        WindowMatching(0, 1, {0: 1}, {1: 0, 0: 1})
    with pytest.raises(ValueError):
        WindowMatching(0, 1, {0: 1}, {1: 5})
    m = WindowMatching(0, 1, {0: 1, 1: UNMATCHED}, {1: 0, 0: UNMATCHED})
    assert m.partner(0) == 1 and m.partner(1) is UNMATCHED and m.partner(7) is UNKNOWN
    assert m(0) == 1 and m.partner_of_female(0) is UNMATCHED
    assert not m.is_perfect_on_window()


def test_json_round_trip():
    m = WindowMatching(-2, 2, {-2: -1, -1: -2, 0: UNMATCHED, 2: 2},
                       {-1: -2, -2: -1, 1: UNMATCHED, 2: 2}, flow=0)
    d = json.loads(m.to_json())
    assert set(d) == {"window", "pairs", "unmatched_males", "unmatched_females", "unknown", "flow"}
    assert d["pairs"] == [[-2, -1], [-1, -2], [2, 2]]
    assert d["unknown"] == [0, 1]
    back = WindowMatching.from_json(m.to_json())
    assert back.forward == m.forward and back.backward == m.backward and back.flow == 0


def test_restrict_keeps_touching_pairs():
    m = identity_matching(-10, 10, shift=3)
    r = m.restrict(0, 2)
    assert set(r.forward) == {-3, -2, -1, 0, 1, 2}
    assert r.window == (0, 2)


# -- permutations -------------------------------------------------------------


def test_inversion_examples():
    assert inversion_number(FinitePermutation([1, 2, 3, 4], 1)) == 0
    assert inversion_number([2, 1, 0]) == 3
    assert inversion_number(FinitePermutation([2, 1, 4, 3], 1)) == 2


@settings(max_examples=300, deadline=None)
@given(st.permutations(list(range(9))))
def test_inversion_matches_brute_force(v):
    assert inversion_number(v) == brute_inv(v)


def test_inversion_of_inverse_exhaustive_and_random():
    for n in range(1, 7):
        for v in itertools.permutations(range(n)):
            p = FinitePermutation(v)
            assert inversion_number(p) == inversion_number(p.inverse())
    rng = random.Random(3)
    for n in (7, 8):
        for _ in range(500):
            v = list(range(n))
            rng.shuffle(v)
            p = FinitePermutation(v)
            assert inversion_number(p) == inversion_number(p.inverse())


def test_finite_permutation_validation():
    with pytest.raises(ValueError):
        FinitePermutation([0, 0, 1])
    p = FinitePermutation([5, 4, 6], start=4)
    assert p(4) == 5 and p.inverse()(5) == 4
    m = identity_matching(0, 3, 0)
    assert FinitePermutation.from_matching(m, 0, 4).values == (0, 1, 2, 3)


# -- crossings ----------------------------------------------------------------


def test_identity_crossings():
    m = identity_matching(-5, 5)
    assert flow_of(m, 0.5) == 0
    assert crossing_profile(m, -2.5) == crossing_profile(m, -2.5).__class__(-2.5, 0, 0, 0)
    cuts, unc = cut_positions(m)
    assert cuts == [i + 0.5 for i in range(-5, 5)] and unc == []


def test_shift_crossings():
    one = identity_matching(-5, 5, shift=1)
    assert all(flow_of(one, i + 0.5) == 1 for i in range(-5, 5))
    assert cut_positions(one)[0] == []
    two = identity_matching(-5, 5, shift=2)
    prof = crossing_profile(two, 0.5)
    assert (prof.l_plus, prof.l_minus, prof.m_max) == (2, 0, 2)


def test_swap_crossings():
    m = swap01()
    prof = crossing_profile(m, 0.5)
    assert (prof.l_plus, prof.l_minus, prof.m_max) == (1, 1, 1)
    assert flow_of(m, 0.5) == 0
    cuts, _ = cut_positions(m)
    assert 0.5 not in cuts and len(cuts) == 9


def test_unmatched_male_counts_in_l_minus_only():
    f = {i: i for i in range(-3, 4)}
    f[2] = UNMATCHED
    b = {j: i for i, j in f.items() if j is not UNMATCHED}
    b[2] = UNMATCHED
    m = WindowMatching(-3, 3, f, b)
    prof = crossing_profile(m, 0.5)
    assert (prof.l_plus, prof.l_minus, prof.m_max) == (0, 1, 0)
    assert crossing_profile(m, 2.5).l_minus == 0
    with pytest.raises(ValueError):
        flow_of(m, 0.5)


def test_crossing_preconditions():
    m = identity_matching(-3, 3)
    with pytest.raises(ValueError):
        crossing_profile(m, 1)
    with pytest.raises(InsufficientWindow):
        crossing_profile(m, 3.5)
    partial = WindowMatching(0, 3, {0: 0}, {0: 0})
    with pytest.raises(InsufficientWindow):
        crossing_profile(partial, 1.5)
    assert cut_positions(partial) == ([], [0.5, 1.5, 2.5])
    uncert = WindowMatching(0, 1, {0: 0, 1: 1}, {0: 0, 1: 1}, certified=False)
    with pytest.raises(InsufficientWindow):
        flow_of(uncert, 0.5)


@settings(max_examples=100, deadline=None)
@given(st.permutations(list(range(12))), st.integers(-5, 5))
def test_crossing_arrays_agree_with_profile(perm, offset):
    # a permutation of [0, 12) embedded in the identity on [-6, 18)
    f = {i: i for i in range(-6, 18)}
    for k, v in enumerate(perm):
        f[k] = v
    m = WindowMatching(-6 + 0, 17, f, {j: i for i, j in f.items()})
    pos, lp, lm, mx = crossing_arrays(m)
    for k, at in enumerate(pos):
        prof = crossing_profile(m, at)
        assert (lp[k], lm[k], mx[k]) == (prof.l_plus, prof.l_minus, prof.m_max)
        assert (prof.m_max == 0) == (prof.l_plus == prof.l_minus == 0)
        assert prof.l_plus == prof.l_minus  # flow of a finite permutation is 0
