import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avoidance import groups
from avoidance.groups import (BoxSubgroup, GroupElement, add, coset_of, enumerate_group, lambda_j, parse_group,
                              scalar_multiply, subgroup_index, subtract)

Z2 = parse_group("sum(Z/2)")
SZ = parse_group("sum(Z)")
Z = parse_group("Z")
MIXED = parse_group("sum(Z/2,Z/4 periodic)")
Z6 = parse_group("Z/6")


def el(d, g):
    return GroupElement.from_mapping(d, g)


def elements(g, max_coord=6, bound=9):
    rank = g.rank if g.rank is not None else max_coord
    return st.dictionaries(st.integers(0, rank - 1), st.integers(-bound, bound), max_size=4).map(
        lambda d: el(d, g))


# -- spec examples ----------------------------------------------------------------


def test_add_examples():
    assert add(el({}, Z2), el({}, Z2), Z2) == el({}, Z2)
    assert add(el({0: 1}, Z2), el({0: 1}, Z2), Z2) == el({}, Z2)
    assert add(el({0: 2, 1: 1}, SZ), el({0: -1}, SZ), SZ) == el({0: 1, 1: 1}, SZ)


def test_scalar_multiply_examples():
    assert scalar_multiply(2, el({0: 1}, Z2), Z2) == el({}, Z2)
    assert scalar_multiply(3, el({0: 1}, SZ), SZ) == el({0: 3}, SZ)
    assert scalar_multiply(0, el({0: 5, 3: 2}, SZ), SZ) == el({}, SZ)


def test_subgroup_index_examples():
    assert subgroup_index(lambda_j(3, 2, Z2), Z2) == 8
    assert subgroup_index(BoxSubgroup(), Z2) == 1
    assert subgroup_index(BoxSubgroup.build({0: 2, 1: 3}, SZ), SZ) == 6
    assert subgroup_index(BoxSubgroup.build({0: 0}, SZ), SZ) == groups.INFINITE


def test_lambda_j_examples():
    assert lambda_j(0, 2, Z2) == BoxSubgroup()
    assert subgroup_index(lambda_j(4, 2, Z2), Z2) == 16
    s = lambda_j(2, 3, SZ)
    assert s.as_dict() == {0: 3, 1: 3}
    labels = {coset_of(el({0: a, 1: b}, SZ), s, SZ) for a in range(-6, 7) for b in range(-6, 7)}
    assert len(labels) == 9 == subgroup_index(s, SZ)


def test_lambda_j_relaxes_to_gcd_on_mixed_orders():
    # k = 2 on Z/6: the image of 2*Gamma is the index-2 subgroup
    assert lambda_j(1, 2, Z6).as_dict() == {0: 2}
    assert groups.max_lambda_index(2, Z6) == 2
    assert groups.max_lambda_index(2, Z) == 2
    assert groups.max_lambda_index(2, Z2) == groups.INFINITE
    assert groups.max_lambda_index(3, Z2) == 1


def test_enumeration_examples():
    zs = list(itertools.islice(enumerate_group(Z), 5))
    assert [x.get(0) for x in zs] == [0, 1, -1, 2, -2]
    first = list(itertools.islice(enumerate_group(Z2), 3))
    assert first == [el({}, Z2), el({0: 1}, Z2), el({1: 1}, Z2)]
    for g in (Z, Z2, SZ, MIXED):
        assert next(enumerate_group(g)) == groups.IDENTITY


def test_enumeration_is_repetition_free_and_covers_boxes():
    seen = list(itertools.islice(enumerate_group(SZ), 2000))
    assert len(set(seen)) == len(seen)
    box = set(groups.box_elements(SZ, 3))
    assert box <= set(seen)


def test_finite_group_enumeration_terminates():
    assert sorted(x.get(0) for x in enumerate_group(Z6)) == list(range(6))


def test_coset_examples():
    assert coset_of(groups.IDENTITY, lambda_j(3, 2, Z2), Z2) == (0, 0, 0)
    assert coset_of(el({0: 7}, Z), BoxSubgroup.build({0: 4}, Z), Z) == (3,)
    assert coset_of(el({0: 1, 5: 1}, Z2), lambda_j(2, 2, Z2), Z2) == (1, 0)
    with pytest.raises(groups.GroupError):
        coset_of(el({0: 1}, SZ), BoxSubgroup.build({0: 0}, SZ), SZ)


def test_descriptor_validation_and_format():
    with pytest.raises(groups.GroupError):
        parse_group("Z/1")
    with pytest.raises(groups.GroupError):
        BoxSubgroup.build({0: 3}, Z2)
    for text in ("Z", "Z/6", "sum(Z/2)", "sum(Z)", "sum(Z/2,Z/4 periodic)"):
        assert groups.format_group(parse_group(text)) == text


def test_element_canonical_form():
    x = el({0: 5, 1: 4, 2: -1}, MIXED)
    assert x.support == ((0, 1), (2, 1))
    assert all(v != 0 for _, v in x.support)


# -- properties ---------------------------------------------------------------------


@pytest.mark.parametrize("g", [Z2, SZ, MIXED, Z6], ids=str)
@settings(max_examples=300, deadline=None)
@given(data=st.data())
def test_group_laws(g, data):
    a, b, c = (data.draw(elements(g)) for _ in range(3))
    assert add(add(a, b, g), c, g) == add(a, add(b, c, g), g)
    assert add(a, b, g) == add(b, a, g)
    assert add(a, groups.IDENTITY, g) == a
    assert add(a, groups.negate(a, g), g) == groups.IDENTITY


@pytest.mark.parametrize("g", [Z2, SZ, MIXED], ids=str)
def test_group_laws_bulk(g):
    import random
    rng = random.Random(7)
    rank = 6

    def rand():
        return el({rng.randrange(rank): rng.randint(-9, 9) for _ in range(rng.randint(0, 4))}, g)

    for _ in range(10_000):
        a, b, c = rand(), rand(), rand()
        assert add(add(a, b, g), c, g) == add(a, add(b, c, g), g)
        assert add(a, b, g) == add(b, a, g)
        assert subtract(add(a, b, g), b, g) == a


@pytest.mark.parametrize("g", [Z2, SZ, MIXED], ids=str)
@settings(max_examples=100, deadline=None)
@given(data=st.data(), k=st.integers(0, 16))
def test_scalar_multiply_is_folded_add(g, data, k):
    a = data.draw(elements(g))
    acc = groups.IDENTITY
    for _ in range(k):
        acc = add(acc, a, g)
    assert scalar_multiply(k, a, g) == acc


@pytest.mark.parametrize("g,k", [(Z2, 2), (SZ, 3), (MIXED, 2), (MIXED, 4)], ids=str)
@settings(max_examples=200, deadline=None)
@given(data=st.data(), j=st.integers(0, 4))
def test_coset_labels_match_subgroup_membership(g, k, data, j):
    s = lambda_j(j, k, g)
    x, y = data.draw(elements(g)), data.draw(elements(g))
    assert (coset_of(x, s, g) == coset_of(y, s, g)) == s.contains(subtract(x, y, g))


@pytest.mark.parametrize("g,k", [(Z2, 2), (SZ, 2), (SZ, 3), (MIXED, 2), (MIXED, 4)], ids=str)
@pytest.mark.parametrize("j", [0, 1, 2, 3])
def test_index_equals_label_count(g, k, j):
    s = lambda_j(j, k, g)
    index = subgroup_index(s, g)
    labels = {coset_of(x, s, g) for x in itertools.islice(enumerate_group(g), 10 * index)}
    assert len(labels) == index
