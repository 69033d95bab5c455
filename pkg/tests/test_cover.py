from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avoidance.cover import CoverError, CoverInput, CoverSet, SubadditiveCover, inverse_linear_error, subadditive_cover
from avoidance.density import IntervalFolner, ResidueClassUnion, density_along


def residue_input(modulus, residues=(0,), coefficient=None):
    a = ResidueClassUnion(modulus, residues)
    c = Fraction(coefficient if coefficient is not None else modulus)
    return CoverInput(contains=a.contains, density=a.exact_density, error=inverse_linear_error(c), mask=a.mask,
                      error_coefficient=c, payload=a)


def powers_of_two(count):
    return [residue_input(2**n) for n in range(1, count + 1)]


def test_single_input_has_first_cutoff_one():
    cover = subadditive_cover([residue_input(2)], IntervalFolner())
    assert cover.cutoffs == [1]
    assert all(cover.contains(n) == (n % 2 == 0) for n in range(1, 200))


def test_dyadic_family_density_and_finite_remainders():
    inputs = powers_of_two(3)
    cover = subadditive_cover(inputs, IntervalFolner())
    S = CoverSet(cover)
    assert density_along(S, IntervalFolner(), 10_000).limsup <= Fraction(7, 8)
    values = np.arange(1, 10_001)
    in_s = S.mask(values)
    for n, item in enumerate(inputs, start=1):
        missed = values[item.mask(values) & ~in_s]
        # A_n minus S sits inside Phi_{k_n - 1} = [1, k_n - 1]
        assert missed.size == 0 or int(missed.max()) < cover.cutoff(n)


def test_trivial_cover_when_densities_reach_one():
    inputs = [residue_input(2, (0,)), residue_input(2, (1,))]
    cover = SubadditiveCover(inputs, IntervalFolner())
    assert cover.trivial
    assert all(cover.contains(n) for n in range(-5, 50))
    assert cover.mask(np.arange(10)).all()


def test_cutoffs_increase_and_meet_inequality():
    cover = subadditive_cover(powers_of_two(8), IntervalFolner())
    assert cover.cutoffs == sorted(set(cover.cutoffs))
    for n in range(1, 9):
        total, bound = cover.inequality_at_cutoff(n)
        assert total <= bound
        if n > 1:
            k = cover.cutoff(n)
            # minimality: one step earlier either breaks the bound or collides with k_{n-1}
            assert k - 1 == cover.cutoff(n - 1) or cover._error_sum(n, k - 1) > bound


def test_error_that_never_drops_is_reported():
    stuck = CoverInput(contains=lambda x: False, density=Fraction(0), error=lambda K: Fraction(1))
    cover = SubadditiveCover([stuck, stuck], IntervalFolner(), search_limit=10**6)
    with pytest.raises(CoverError) as info:
        cover.materialize(2)
    assert info.value.n == 2


def test_lazy_source_of_an_infinite_family():
    cover = SubadditiveCover(lambda i: residue_input(2 ** (i + 2)), IntervalFolner(), density_total=Fraction(1, 2))
    assert cover.count_through(10**6) >= 3
    assert cover.contains(4) and not cover.contains(3)
    assert cover.density_bound(10**6) <= cover.loose_density_bound(10**6)


@settings(max_examples=60, deadline=None)
@given(coeffs=st.lists(st.integers(1, 500), min_size=1, max_size=7),
       probes=st.lists(st.integers(0, 10**6), min_size=1, max_size=10))
def test_cutoff_inequality_holds_beyond_each_cutoff(coeffs, probes):
    inputs = [CoverInput(contains=lambda x: False, density=Fraction(0), error=inverse_linear_error(c),
                         error_coefficient=Fraction(c)) for c in coeffs]
    naive = [CoverInput(contains=lambda x: False, density=Fraction(0), error=inverse_linear_error(c)) for c in coeffs]
    fast = subadditive_cover(inputs, IntervalFolner())
    slow = subadditive_cover(naive, IntervalFolner())
    assert fast.cutoffs == slow.cutoffs
    for n in range(1, len(coeffs) + 1):
        k = fast.cutoff(n)
        for extra in probes:
            K = k + extra
            assert sum(inverse_linear_error(c)(K) for c in coeffs[:n]) <= Fraction(1, n)


@settings(max_examples=40, deadline=None)
@given(moduli=st.lists(st.integers(2, 40), min_size=1, max_size=5))
def test_cover_catches_everything_past_cutoffs(moduli):
    inputs = [residue_input(m, (1,)) for m in moduli]
    cover = SubadditiveCover(inputs, IntervalFolner())
    values = np.arange(1, 3000)
    got = cover.mask(values)
    assert list(got) == [cover.contains(int(v)) for v in values]
    for n, item in enumerate(inputs, start=1):
        late = values[values >= cover.cutoff(n)]
        assert got[late - 1][item.mask(late)].all()
