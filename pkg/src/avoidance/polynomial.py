"""Integer-valued polynomials with rational coefficients, and Dickson polynomials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np


class PolynomialError(ValueError):
    pass


def _trim(coeffs: Sequence) -> tuple:
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs) if coeffs else (0,)


@dataclass(frozen=True)
class IntValuedPoly:
    """``P(x) = sum c_i x^i`` with rational ``c_i`` and ``P(Z) <= Z``.

    ``coeffs`` run from the constant term upward.  ``denominator`` is the least
    ``D`` with ``D*P`` in ``Z[x]`` and ``numerators`` are the coefficients of
    ``D*P``.
    """

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        coeffs = _trim(Fraction(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        # integer-valued iff integral on 0..deg (binomial basis)
        for n in range(self.degree + 1):
            if self.exact(n).denominator != 1:
                raise PolynomialError(f"{self} is not integer-valued: P({n}) = {self.exact(n)}")

    @classmethod
    def from_ints(cls, coeffs: Sequence[int]) -> "IntValuedPoly":
        return cls(tuple(Fraction(c) for c in coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def denominator(self) -> int:
        return math.lcm(*(c.denominator for c in self.coeffs))

    @property
    def numerators(self) -> tuple[int, ...]:
        D = self.denominator
        return tuple(int(c * D) for c in self.coeffs)

    def exact(self, n) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * n + c
        return acc

    def __call__(self, n: int) -> int:
        acc = 0
        for c in reversed(self.numerators):
            acc = acc * n + c
        return acc // self.denominator

    def values(self, ns: np.ndarray) -> np.ndarray:
        """Vectorised evaluation; caller keeps values inside int64."""
        ns = np.asarray(ns, dtype=np.int64)
        acc = np.zeros(ns.shape, dtype=np.int64)
        for c in reversed(self.numerators):
            acc = acc * ns + c
        return acc // self.denominator

    def values_mod(self, k: int) -> np.ndarray:
        """``[P(n) mod k for n in range(k)]``; requires ``gcd(k, D) == 1``."""
        D = self.denominator
        if math.gcd(k, D) != 1:
            raise PolynomialError(f"modulus {k} shares a factor with denominator {D}")
        if k == 1:
            return np.zeros(1, dtype=np.int64)
        inv = pow(D, -1, k)
        ns = np.arange(k, dtype=np.int64)
        acc = np.zeros(k, dtype=np.int64)
        if k <= 2**31:
            for c in reversed(self.numerators):
                acc = (acc * ns + c % k) % k
            return (acc * inv) % k
        raise PolynomialError("modulus too large for vectorised evaluation")

    def __add__(self, other: "IntValuedPoly") -> "IntValuedPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return IntValuedPoly(tuple(x + y for x, y in zip(a, b)))

    def __str__(self) -> str:
        return format_poly(self.coeffs)


X = IntValuedPoly.from_ints([0, 1])


def format_poly(coeffs: Sequence) -> str:
    terms = []
    for i in range(len(coeffs) - 1, -1, -1):
        c = Fraction(coeffs[i])
        if c == 0:
            continue
        mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
        if c.denominator != 1:
            coef = f"({c})"
        elif mono and abs(c) == 1:
            coef = "-" if c < 0 else ""
        else:
            coef = str(c)
        terms.append(f"{coef}{mono}" if mono else str(c))
    if not terms:
        return "0"
    out = terms[0]
    for t in terms[1:]:
        out += t if t.startswith("-") else "+" + t
    return out


def parse_poly(text: str) -> IntValuedPoly:
    """Parse ``x^2``, ``(1/2)x^2+(1/2)x``, ``x(x+1)/2`` and similar."""
    import sympy
    from sympy.parsing.sympy_parser import (convert_xor, implicit_multiplication_application,
                                            parse_expr, standard_transformations)

    x = sympy.Symbol("x")
    transformations = standard_transformations + (implicit_multiplication_application, convert_xor)
    try:
        expr = parse_expr(text, local_dict={"x": x}, transformations=transformations)
        poly = sympy.Poly(sympy.expand(expr), x, domain="QQ")
    except Exception as exc:  # sympy raises a zoo of exception types
        raise PolynomialError(f"cannot parse polynomial {text!r}: {exc}") from exc
    coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(poly.all_coeffs())]
    return IntValuedPoly(tuple(coeffs))


# -- Dickson polynomials -------------------------------------------------------


@dataclass(frozen=True)
class DicksonPoly:
    order: int
    a: int
    coeffs: tuple[int, ...]

    def as_poly(self) -> IntValuedPoly:
        return IntValuedPoly.from_ints(self.coeffs)


@lru_cache(maxsize=None)
def _dickson_coeffs(n: int, a: int) -> tuple[int, ...]:
    if n == 0:
        return (2,)
    if n == 1:
        return (0, 1)
    prev = _dickson_coeffs(n - 1, a)
    prev2 = _dickson_coeffs(n - 2, a)
    out = [0] * (n + 1)
    for i, c in enumerate(prev):
        out[i + 1] += c
    for i, c in enumerate(prev2):
        out[i] -= a * c
    return _trim(out)


def dickson(n: int, a: int) -> DicksonPoly:
    """``D_0 = 2``, ``D_1 = x``, ``D_n = x D_{n-1} - a D_{n-2}``."""
    if n < 0:
        raise PolynomialError("Dickson order must be non-negative")
    return DicksonPoly(n, a, _dickson_coeffs(n, a))


def dickson_permutation_criterion(n: int, a: int, p: int) -> bool:
    if n < 1:
        raise PolynomialError("criterion needs n >= 1")
    if a % p == 0:
        return math.gcd(n, p - 1) == 1
    return math.gcd(n, p * p - 1) == 1
