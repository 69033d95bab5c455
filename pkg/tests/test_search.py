import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avoidance import groups
from avoidance.construction import ConfigurationFamily, straus_build
from avoidance.density import PredicateSet, ResidueClassUnion
from avoidance.groups import parse_group
from avoidance.polynomial import parse_poly
from avoidance.search import (SearchError, SearchProblem, check_witness, coset_prune, max_config_subset,
                              relaxation_bound, verify_against_bounds)

from oracles import group_naive_max, naive_max, naive_pair_max

IP = ConfigurationFamily("ip")
PAIRS = ConfigurationFamily("sumset", 2)
TRIPLES = ConfigurationFamily("sumset", 3)
SQUARES = ConfigurationFamily("poly-sum", poly=parse_poly("x^2"))
PRODUCT_SUM = ConfigurationFamily("product-sum")


def finite_set(members):
    members = frozenset(members)
    return PredicateSet(lambda x: x in members)


def solve(a, family, t, window, **kw):
    return max_config_subset(SearchProblem(a, family, t, window, **kw))


# -- examples -----------------------------------------------------------------------


def test_multiples_of_four():
    r = solve(ResidueClassUnion(4, [0]), PAIRS, 0, range(1, 33))
    assert r.size == 8 and r.exhaustive and r.upper_bound == 8
    assert {x % 4 for x in r.witness} in ({0}, {2})


def test_powers_of_two_have_no_finite_sums_of_length_two():
    powers = finite_set(2**e for e in range(20))
    r = solve(powers, IP, 0, range(1, 65))
    assert r.size == 1 and r.exhaustive


def test_everything_admits_the_whole_window():
    everything = PredicateSet(lambda x: True)
    for fam in (IP, PAIRS, SQUARES, PRODUCT_SUM):
        r = solve(everything, fam, 3, range(1, 13))
        assert r.size == 12 and r.upper_bound == 12


def test_empty_window_and_validation():
    r = solve(ResidueClassUnion(2, [0]), PAIRS, 0, [])
    assert r.size == 0 and r.witness == () and r.exhaustive
    with pytest.raises(SearchError):
        SearchProblem(ResidueClassUnion(2, [0]), PAIRS, 0, [1, 2], mode="sideways")
    with pytest.raises(SearchError):
        SearchProblem(ResidueClassUnion(2, [0]), PAIRS, 0, [1, 2], mode="pruned")
    with pytest.raises(SearchError):
        SearchProblem(PredicateSet(lambda x: True), ConfigurationFamily("product", 2), 1, [0, 2])


def test_coset_prune_example():
    subs = coset_prune(SearchProblem(ResidueClassUnion(4, [0]), PAIRS, 0, range(1, 101)), 4)
    assert [len(s.window) for s in subs] == [25, 25, 25, 25]
    assert all(s.coset_closed is False for s in subs)
    assert coset_prune(SearchProblem(ResidueClassUnion(4, [0]), PAIRS, 0, range(1, 101)), 1)[0].coset_closed


def test_pruned_equals_unpruned_when_closed():
    a = ResidueClassUnion(4, [0])
    full = solve(a, PAIRS, 0, range(1, 41))
    # pairs from different classes mod 2 give odd sums, so mod 2 classes are closed
    pruned = solve(a, PAIRS, 0, range(1, 41), mode="pruned", partition=2)
    assert pruned.exhaustive and pruned.size == full.size == 10


def test_report_serialises():
    d = solve(ResidueClassUnion(4, [0]), PAIRS, 0, range(1, 9)).as_dict()
    assert d["size"] == 2 and all(isinstance(x, int) for x in d["witness"])


# -- ground truth --------------------------------------------------------------------


def _random_set(rng, lo, hi, p):
    return {v for v in range(lo, hi + 1) if rng.random() < p}


def test_pair_family_against_bitmask_oracle():
    rng = random.Random(5)
    W = list(range(1, 21))
    for _ in range(200):
        members = _random_set(rng, -10, 60, rng.choice([0.5, 0.7, 0.85]))
        t = rng.randint(-5, 5)
        bad = [(i, j) for i, j in itertools.combinations(range(20), 2) if W[i] + W[j] + t not in members]
        r = solve(finite_set(members), PAIRS, t, W)
        assert r.exhaustive and r.size == naive_pair_max(20, bad)
        assert check_witness(finite_set(members), PAIRS, t, r.witness)


@pytest.mark.parametrize("family", [IP, TRIPLES, SQUARES, PRODUCT_SUM], ids=lambda f: f.kind + str(f.k))
def test_families_against_subset_oracle(family):
    rng = random.Random(hash(family.kind) % 1000 + family.k)
    for _ in range(25):
        members = _random_set(rng, -10, 400, 0.75)
        a = finite_set(members)
        t = rng.randint(-3, 3)
        W = sorted(rng.sample(range(1, 15), 9))
        r = solve(a, family, t, W)
        expected = naive_max(lambda v: v in members, family.kind, t, W, family.k, family.poly)
        assert r.exhaustive and r.size == expected == r.upper_bound
        assert check_witness(a, family, t, r.witness)


def test_product_family_against_subset_oracle():
    rng = random.Random(17)
    fam = ConfigurationFamily("product", 2)
    for _ in range(20):
        members = _random_set(rng, 1, 300, 0.6)
        t = Fraction(rng.choice([1, 2, 3]), rng.choice([1, 2]))
        W = sorted(rng.sample(range(1, 16), 9))
        a = finite_set(members)
        r = solve(a, fam, t, W)
        assert r.size == naive_max(lambda v: v in members, "product", t, W, 2)
        assert check_witness(a, fam, t, r.witness)


def test_group_sumset_against_subset_oracle():
    g = parse_group("sum(Z/2)")
    rng = random.Random(3)
    pool = list(itertools.islice(groups.enumerate_group(g), 16))
    for _ in range(15):
        members = {x for x in pool if rng.random() < 0.7}
        t = rng.choice(pool)
        W = rng.sample(pool, 9)
        a = PredicateSet(members.__contains__, ambient=g)
        r = solve(a, PAIRS, t, W, group=g)
        assert r.size == group_naive_max(members.__contains__, lambda x, y: groups.add(x, y, g), W, t, 2)


# -- properties ------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(members=st.sets(st.integers(0, 60), min_size=5), t=st.integers(-4, 4), cut=st.integers(3, 18))
def test_monotone_in_the_window(members, t, cut):
    a = finite_set(members)
    small = solve(a, PAIRS, t, range(1, cut + 1)).size
    large = solve(a, PAIRS, t, range(1, 19)).size
    assert small <= large


@settings(max_examples=40, deadline=None)
@given(members=st.sets(st.integers(-5, 80), min_size=3), t=st.integers(-3, 3))
def test_relaxation_bound_is_an_upper_bound(members, t):
    a = finite_set(members)
    p = SearchProblem(a, IP, t, range(1, 11))
    bound, _ = relaxation_bound(p)
    assert bound >= solve(a, IP, t, range(1, 11)).size


def test_budget_exhaustion_still_reports_a_sound_bound():
    rng = random.Random(1)
    a = finite_set(v for v in range(900) if rng.random() < 0.9)
    r = solve(a, IP, 0, range(1, 40), work_budget=50)
    assert not r.exhaustive and r.upper_bound >= r.size
    assert check_witness(a, IP, 0, r.witness)


def test_verification_of_an_empty_shift_range():
    ce = straus_build(Fraction(1, 2))
    table = verify_against_bounds(ce, [], range(1, 50))
    assert table.rows == [] and table.passed and not table.failed


def test_verification_rows_on_a_small_window():
    ce = straus_build(Fraction(1, 2))
    table = verify_against_bounds(ce, range(-2, 3), range(1, 60))
    assert table.passed
    for row in table.rows:
        assert row.size <= row.upper_bound <= row.bound
    forced = verify_against_bounds(ce, [0], range(1, 60), bounds={(0, None): 0})
    assert forced.failed and forced.rows[0].status == "fail"
