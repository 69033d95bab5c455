"""Primes, residue images of polynomials, CRT composition and prime factorisation."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import sympy

from .groups import GroupElement
from .polynomial import IntValuedPoly, PolynomialError


class ScheduleExhausted(ValueError):
    def __init__(self, message, achieved: Fraction, modulus: int):
        super().__init__(message)
        self.achieved = achieved
        self.modulus = modulus


# -- primes --------------------------------------------------------------------

_sieve_limit = 1
_primes: list[int] = []
_prime_index: dict[int, int] = {}


def primes_up_to(bound: int) -> list[int]:
    global _sieve_limit, _primes, _prime_index
    if bound > _sieve_limit:
        limit = max(bound, 2 * _sieve_limit, 1 << 16)
        is_p = np.ones(limit + 1, dtype=bool)
        is_p[:2] = False
        for p in range(2, math.isqrt(limit) + 1):
            if is_p[p]:
                is_p[p * p::p] = False
        _primes = np.flatnonzero(is_p).tolist()
        _prime_index = {p: i for i, p in enumerate(_primes)}
        _sieve_limit = limit
    return _primes[:bisect.bisect_right(_primes, bound)]


def nth_prime_list(count: int) -> list[int]:
    """The first ``count`` primes."""
    bound = 16
    while len(primes_up_to(bound)) < count:
        bound *= 2
    return primes_up_to(bound)[:count]


def prime_index(p: int) -> int:
    """0-based position of ``p`` in the increasing list of primes."""
    if p <= _sieve_limit or p < 10**7:
        if p > _sieve_limit:
            primes_up_to(p)
        return _prime_index[p]
    return int(sympy.primepi(p)) - 1


def factor_exponents(n: int) -> dict[int, int]:
    """``{prime index: exponent}`` for a positive integer."""
    if n < 1:
        raise ValueError("factor_exponents needs a positive integer")
    out = {}
    for p, e in sympy.factorint(n).items():
        out[prime_index(p)] = e
    return out


# -- CRT -----------------------------------------------------------------------


def crt_pair(a: int, m: int, b: int, n: int) -> int:
    """The residue mod ``m*n`` congruent to ``a`` mod ``m`` and ``b`` mod ``n``."""
    if m == 1:
        return b % n
    return (a + m * ((b - a) * pow(m, -1, n) % n)) % (m * n)


def crt_image_compose(images: Sequence[tuple[int, Iterable[int]]]) -> int:
    """``|R_k|`` for squarefree ``k = prod p_i`` from the per-prime images.

    By CRT, ``n mod k`` ranges over all tuples ``(n mod p_i)`` independently,
    so the image mod ``k`` is exactly the product of the images.
    """
    seen = set()
    size = 1
    for p, R in images:
        if p in seen:
            raise ValueError(f"repeated prime {p}")
        seen.add(p)
        size *= len(set(R))
    return size


# -- residue images ------------------------------------------------------------


def residue_image(q: IntValuedPoly, k: int) -> frozenset[int]:
    """``{Q(n) mod k : n in Z}``; needs ``gcd(k, D) == 1``."""
    if k < 1:
        raise ValueError("modulus must be positive")
    if math.gcd(k, q.denominator) != 1:
        raise PolynomialError(f"modulus {k} shares a factor with denominator {q.denominator}")
    return frozenset(np.unique(q.values_mod(k)).tolist())


def is_permutation_mod_p(q: IntValuedPoly, p: int) -> bool:
    if q.denominator % p == 0:
        raise PolynomialError(f"prime {p} divides the denominator {q.denominator}")
    return len(residue_image(q, p)) == p


@dataclass
class PrimeClassification:
    poly: IntValuedPoly
    bound: int
    permutation: list[int]
    non_permutation: list[int]
    divides_denominator: list[int]
    images: dict[int, frozenset[int]] = field(repr=False, default_factory=dict)

    @property
    def reciprocal_sum(self) -> float:
        """Partial sum of ``1/p`` over non-permutation primes."""
        return math.fsum(1.0 / p for p in self.non_permutation)

    @property
    def survival_product(self) -> float:
        """Partial product of ``1 - 1/p`` over non-permutation primes."""
        return math.prod(1.0 - 1.0 / p for p in self.non_permutation)

    def as_dict(self) -> dict:
        return {
            "poly": str(self.poly),
            "bound": self.bound,
            "permutation_primes": self.permutation,
            "non_permutation_primes": self.non_permutation,
            "primes_dividing_denominator": self.divides_denominator,
            "reciprocal_sum": self.reciprocal_sum,
            "survival_product": self.survival_product,
        }


def non_permutation_primes(q: IntValuedPoly, bound: int) -> PrimeClassification:
    perm, nonperm, bad = [], [], []
    images = {}
    D = q.denominator
    for p in primes_up_to(bound):
        if D % p == 0:
            bad.append(p)
            continue
        image = residue_image(q, p)
        images[p] = image
        (perm if len(image) == p else nonperm).append(p)
    return PrimeClassification(q, bound, perm, nonperm, bad, images)


@dataclass(frozen=True)
class ModulusSchedule:
    """Squarefree modulus with the per-prime images of ``Q``."""

    modulus: int
    images: tuple[tuple[int, frozenset[int]], ...]
    image_size: int

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.images]

    @property
    def density(self) -> Fraction:
        return Fraction(self.image_size, self.modulus)


def modulus_schedule(q: IntValuedPoly, target: Fraction, prime_bound: int = 100_000) -> ModulusSchedule:
    """Greedy product of the smallest non-permutation primes not dividing ``D``
    until ``|R_k| / k <= target``."""
    target = Fraction(target)
    if not 0 < target <= 1:
        raise ValueError("target density must lie in (0, 1]")
    D = q.denominator
    images, k, size = [], 1, 1
    if Fraction(size, k) <= target:
        return ModulusSchedule(1, (), 1)
    for p in primes_up_to(prime_bound):
        if D % p == 0:
            continue
        image = residue_image(q, p)
        if len(image) == p:
            continue
        images.append((p, image))
        k *= p
        size *= len(image)
        if Fraction(size, k) <= target:
            return ModulusSchedule(k, tuple(images), crt_image_compose(images))
    raise ScheduleExhausted(f"primes up to {prime_bound} only reach density {Fraction(size, k)}",
                            Fraction(size, k), k)


# -- the prime factorisation isomorphism ---------------------------------------


def phi_factorize(q) -> GroupElement:
    """Exponent vector of a positive rational over the primes ``2, 3, 5, ...``."""
    if isinstance(q, float) or isinstance(q, bool):
        raise TypeError("phi_factorize needs an exact rational")
    q = Fraction(q)
    if q <= 0:
        raise ValueError("phi_factorize needs a positive rational")
    acc = dict(factor_exponents(q.numerator))
    for i, e in factor_exponents(q.denominator).items():
        acc[i] = acc.get(i, 0) - e
    return GroupElement(tuple(sorted((i, e) for i, e in acc.items() if e)))


def phi_unfactorize(v: GroupElement) -> Fraction:
    if not v.support:
        return Fraction(1)
    primes = nth_prime_list(v.max_coordinate + 1)
    num, den = 1, 1
    for i, e in v.support:
        if e > 0:
            num *= primes[i] ** e
        else:
            den *= primes[i] ** (-e)
    return Fraction(num, den)
