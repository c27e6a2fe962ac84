"""Brute-force oracles shared by the tests."""
import itertools

from mallows_match.core import UNMATCHED


def all_partial_matchings(males, females):
    """Every matching between two finite lists, as dicts male -> female or UNMATCHED."""
    males, females = list(males), list(females)
    out = []

    def rec(k, used, cur):
        if k == len(males):
            out.append(dict(cur))
            return
        i = males[k]
        cur[i] = UNMATCHED
        rec(k + 1, used, cur)
        for j in females:
            if j not in used:
                cur[i] = j
                rec(k + 1, used | {j}, cur)
        del cur[i]

    rec(0, frozenset(), {})
    return out


def is_stable(fwd, edges, males, females):
    inv = {j: i for i, j in fwd.items() if j is not UNMATCHED}
    for i, j in itertools.product(males, females):
        if (i, j) not in edges:
            continue
        si = fwd[i]
        sj = inv.get(j, UNMATCHED)
        if (si is UNMATCHED or si < j) and (sj is UNMATCHED or sj < i):
            return False
    return True
