from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from jointarray.crb import crb_closed_form
from jointarray.diophantine import (canonical_form, equal_variance_search, find_class,
                                    variance_key)
from jointarray.geometry import BudgetExceededError, SensorArray, spatial_variance


def A(*p):
    return SensorArray(p)


@pytest.mark.parametrize("d, key", [
    (A(0, 1, 2, 12, 13, 14), 1320),
    (A(0), 0),
    (A(0, 7, 9, 11, 13, 20), 1320),
])
def test_variance_key(d, key):
    assert variance_key(d) == key


def test_paper_style_identity():
    # 1^2 + 8^2 = 4^2 + 7^2 read as two symmetric arrays
    d1, d2 = A(-8, -1, 1, 8), A(-7, -4, 4, 7)
    assert spatial_variance(d1) == spatial_variance(d2)
    assert canonical_form(d1) == A(0, 7, 9, 16)
    assert canonical_form(d2) == A(0, 3, 11, 14)


arrays = st.lists(st.integers(-30, 30), min_size=1, max_size=8, unique=True).map(
    lambda xs: SensorArray(sorted(xs)))


@given(arrays, st.integers(-40, 40), st.integers(1, 4))
def test_key_invariances(d, c, s):
    assert variance_key(d.shift(c)) == variance_key(d)
    assert variance_key(d.scale(s)) == s * s * variance_key(d)


@given(arrays)
def test_canonical_form(d):
    c = canonical_form(d)
    assert c.positions[0] == 0
    assert c == canonical_form(d.reflect()) == canonical_form(d.shift(7))


def test_search_n4():
    classes = equal_variance_search(4, 16)
    cls = find_class(classes, A(0, 7, 9, 16))
    assert cls is not None
    assert A(0, 3, 11, 14) in cls.members


def test_search_n6_contains_both_fig_arrays():
    classes = equal_variance_search(6, 20)
    cls = find_class(classes, A(0, 1, 2, 12, 13, 14))
    assert cls.variance_key == 1320
    assert A(0, 7, 9, 11, 13, 20) in cls.members
    assert cls.to_text().startswith("key=1320: [0,1,2,12,13,14] ")


def test_two_sensors_have_no_classes():
    for l in range(1, 15):
        assert equal_variance_search(2, l) == []


def brute_force_classes(n, l_max):
    # independent oracle: enumerate every subset, reduce by translation and
    # reflection via explicit sets, compare exact rational variance
    seen = {}
    for c in combinations(range(l_max + 1), n):
        lo, hi = c[0], c[-1]
        forms = {tuple(p - lo for p in c), tuple(sorted(hi - p for p in c))}
        seen.setdefault(min(forms), spatial_variance(SensorArray(c)))
    groups = {}
    for form, v in seen.items():
        groups.setdefault(v, set()).add(form)
    return {v: g for v, g in groups.items() if len(g) >= 2}


@pytest.mark.parametrize("n, l_max", [(3, 12), (4, 12), (5, 11)])
def test_search_matches_brute_force(n, l_max):
    expected = brute_force_classes(n, l_max)
    got = equal_variance_search(n, l_max)
    assert len(got) == len(expected)
    for cls in got:
        v = spatial_variance(cls.members[0])
        assert {m.positions for m in cls.members} == expected[v]
    assert [c.variance_key for c in got] == sorted(c.variance_key for c in got)


def test_class_members_have_equal_crb():
    for cls in equal_variance_search(5, 14):
        crbs = {crb_closed_form(3, 5, spatial_variance(m)).value for m in cls.members}
        assert len(crbs) == 1
        keys = {variance_key(m) for m in cls.members}
        assert keys == {cls.variance_key}


def test_budget_error_names_count():
    with pytest.raises(BudgetExceededError, match="54264"):
        equal_variance_search(6, 20, budget=100)
