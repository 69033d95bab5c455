"""Total-membership sets, Folner sequences and exact density counts.

Every density in this package is taken along a named Folner sequence; there
is no attempt to compute Banach densities abstractly.
"""

from __future__ import annotations

import bisect
import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np

from . import groups
from .groups import GroupDescriptor, GroupElement
from .numtheory import crt_pair, factor_exponents, nth_prime_list

NATURALS = "N"
MULTIPLICATIVE = "N*"
CONE = "cone"

# residue sets larger than this are never materialised
ENUMERATION_LIMIT = 2_000_000


class AmbientMismatch(ValueError):
    pass


class FolnerCapExceeded(ValueError):
    pass


# -- Folner sequences --------------------------------------------------------


class FolnerSequence:
    """Increasing finite sets ``Phi_1 <= Phi_2 <= ...`` over an ambient."""

    name: str
    ambient: Any

    def size(self, N: int) -> int:
        raise NotImplementedError

    def level(self, x) -> int | None:
        """Least ``N`` with ``x`` in ``Phi_N``; ``None`` if ``x`` is in no ``Phi_N``."""
        raise NotImplementedError

    def contains(self, x, N: int) -> bool:
        lvl = self.level(x)
        return lvl is not None and lvl <= N

    def elements(self, N: int) -> Iterator:
        raise NotImplementedError

    def coordinate_ratio_bound(self, modulus: int, N: int) -> Fraction:
        """Upper bound, non-increasing in ``N``, on the fraction of one box
        coordinate's range lying in a fixed class mod ``modulus``."""
        raise NotImplementedError


class IntervalFolner(FolnerSequence):
    """``Phi_N = [1, N]`` in the naturals."""

    name = "interval"
    ambient = NATURALS

    def size(self, N):
        return N

    def level(self, x):
        return x if x >= 1 else None

    def elements(self, N):
        return iter(range(1, N + 1))

    def __eq__(self, other):
        return isinstance(other, IntervalFolner)

    def __hash__(self):
        return hash(self.name)


class BoxFolner(FolnerSequence):
    """Boxes ``{support in [0, N), |x_i| <= N}`` in a direct sum.

    For the rank-1 group Z this is ``[-N, N]``.
    """

    name = "box"

    def __init__(self, g: GroupDescriptor):
        self.ambient = g
        self.group = g

    def size(self, N):
        return groups.box_size(self.group, N)

    def level(self, x):
        return groups.box_level(x, self.group)

    def elements(self, N):
        return groups.box_elements(self.group, N)

    def coordinate_ratio_bound(self, modulus, N, order=0):
        if order:
            return Fraction(1, modulus)
        width = 2 * N + 1
        return Fraction(1, modulus) + Fraction(modulus - 1, modulus * width)

    def __eq__(self, other):
        return isinstance(other, BoxFolner) and other.group == self.group

    def __hash__(self):
        return hash((self.name, self.group))


SUM_Z = GroupDescriptor((0,))


class ConeFolner(FolnerSequence):
    """Exponent boxes ``{support in [0, N), 0 <= x_i <= N}`` in the sum of copies of Z.

    This is the image of the multiplicative Folner sequence under prime
    factorisation; elements with a negative coordinate lie in no box.
    """

    name = "cone-box"
    ambient = CONE
    group = SUM_Z

    def size(self, N):
        return (N + 1) ** N

    def level(self, x: GroupElement):
        level = max(1, x.max_coordinate + 1)
        for _, v in x.support:
            if v < 0:
                return None
            level = max(level, v)
        return level

    def elements(self, N):
        for values in itertools.product(range(N + 1), repeat=N):
            yield GroupElement(tuple((i, v) for i, v in enumerate(values) if v))

    def coordinate_ratio_bound(self, modulus, N, order=0):
        return Fraction(1, modulus) + Fraction(modulus - 1, modulus * (N + 1))

    def __eq__(self, other):
        return isinstance(other, ConeFolner)

    def __hash__(self):
        return hash(self.name)


class MultiplicativeFolner(FolnerSequence):
    """``Phi_N = {prod_{i<N} p_i^e_i : 0 <= e_i <= N}`` in ``(N, *)``."""

    name = "multiplicative-box"
    ambient = MULTIPLICATIVE

    def __init__(self, cap: int = 10**6):
        self.cap = cap

    def size(self, N):
        return (N + 1) ** N

    def level(self, n: int):
        if n < 1:
            return None
        return ConeFolner().level(exponent_element(n))

    def elements(self, N):
        return iter(multiplicative_folner(N, cap=None))

    def __eq__(self, other):
        return isinstance(other, MultiplicativeFolner)

    def __hash__(self):
        return hash(self.name)


def exponent_element(n: int) -> GroupElement:
    return GroupElement(tuple(sorted(factor_exponents(n).items())))


def multiplicative_folner(N: int, cap: int | None = 10**6) -> list[int]:
    """Sorted elements of the multiplicative box of index ``N``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    size = (N + 1) ** N
    if cap is not None and size > cap:
        raise FolnerCapExceeded(f"multiplicative box N={N} has {size} elements (cap {cap})")
    primes = nth_prime_list(N)
    values = [1]
    for p in primes:
        powers = [p**e for e in range(N + 1)]
        values = [v * q for v in values for q in powers]
    return sorted(values)


def folner_defect(phi: FolnerSequence, x, N: int) -> Fraction:
    """``|(Phi_N + x) symmetric-difference Phi_N| / |Phi_N|`` for box sequences.

    Boxes are products of per-coordinate ranges and translation acts
    coordinatewise, so the overlap is a product of 1-d overlaps.
    """
    size = phi.size(N)
    values = x.as_dict()
    if isinstance(phi, BoxFolner):
        g = phi.group
        if any(i >= N or (g.rank is not None and i >= g.rank) for i in values):
            return Fraction(2)
        overlap = 1
        for i in g.coordinates(N):
            n = g.modulus(i)
            if n:
                overlap *= n
            else:
                overlap *= max(0, 2 * N + 1 - abs(values.get(i, 0)))
    elif isinstance(phi, ConeFolner):
        if any(i >= N for i in values):
            return Fraction(2)
        overlap = 1
        for i in range(N):
            overlap *= max(0, N + 1 - abs(values.get(i, 0)))
    else:
        raise TypeError(f"no closed-form defect for {phi.name}")
    return Fraction(2 * (size - overlap), size)


# -- lazy sets -----------------------------------------------------------------


class LazySet:
    """A set given by a total membership predicate.

    ``exact_density`` is the uniform density when known in closed form.
    """

    ambient: Any = NATURALS
    exact_density: Fraction | None = None
    name: str = ""

    def contains(self, x) -> bool:
        raise NotImplementedError

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def mask(self, values: np.ndarray) -> np.ndarray:
        return np.fromiter((self.contains(int(v)) for v in values), dtype=bool, count=len(values))

    def __repr__(self):
        return f"<{type(self).__name__} {self.name or '?'}>"


class PredicateSet(LazySet):
    def __init__(self, predicate: Callable[[Any], bool], ambient=NATURALS,
                 exact_density: Fraction | None = None, name: str = "",
                 vector: Callable[[np.ndarray], np.ndarray] | None = None):
        self.predicate = predicate
        self.ambient = ambient
        self.exact_density = exact_density
        self.name = name
        self._vector = vector

    def contains(self, x):
        return bool(self.predicate(x))

    def mask(self, values):
        if self._vector is not None:
            return self._vector(values)
        return super().mask(values)


class ResidueClassUnion(LazySet):
    """``{n : n mod k in R}``, stored as a list of CRT factors.

    ``factors`` holds ``(m_j, R_j)`` with pairwise coprime ``m_j`` whose product
    is ``k``; membership requires ``n mod m_j in R_j`` for every ``j``.  A plain
    union of classes has a single factor.  The factored form lets moduli far
    beyond enumeration range be tested and counted exactly.
    """

    def __init__(self, modulus: int, residues: Iterable[int] | None = None, *,
                 factors: Sequence[tuple[int, Iterable[int]]] | None = None,
                 ambient=NATURALS, name: str = ""):
        if modulus < 1:
            raise ValueError("modulus must be positive")
        if factors is None:
            if residues is None:
                raise ValueError("need residues or factors")
            factors = [(modulus, residues)]
        fs = tuple((m, frozenset(r % m for r in R)) for m, R in factors)
        if math.prod(m for m, _ in fs) != modulus:
            raise ValueError("factor moduli must multiply to the modulus")
        for (a, _), (b, _) in itertools.combinations(fs, 2):
            if math.gcd(a, b) != 1:
                raise ValueError("factor moduli must be pairwise coprime")
        self.modulus = modulus
        self.factors = fs
        self.ambient = ambient
        self.name = name or f"mod {modulus}"

    @property
    def size(self) -> int:
        return math.prod(len(R) for _, R in self.factors)

    @property
    def exact_density(self) -> Fraction:
        return Fraction(self.size, self.modulus)

    def contains(self, n) -> bool:
        return all(n % m in R for m, R in self.factors)

    def mask(self, values):
        values = np.asarray(values, dtype=np.int64)
        out = np.ones(values.shape, dtype=bool)
        for m, R in self.factors:
            if not R:
                return np.zeros(values.shape, dtype=bool)
            if m < 2**62:
                out &= np.isin(values % m, np.fromiter(R, dtype=np.int64))
                continue
            # int64 values v satisfy v mod m == v (v >= 0) or v + m (v < 0)
            reps = [r for r in R if r < 2**62] + [r - m for r in R if r > m - 2**62]
            out &= np.isin(values, np.array(reps, dtype=np.int64))
        return out

    @property
    def residues(self) -> list[int]:
        """Sorted residues mod ``k`` (CRT-combined)."""
        if self.size > ENUMERATION_LIMIT:
            raise OverflowError(f"{self.size} residues exceed the enumeration limit")
        acc, mod = [0], 1
        for m, R in self.factors:
            acc = [crt_pair(a, mod, r, m) for a in acc for r in sorted(R)]
            mod *= m
        return sorted(acc)

    def shift(self, t: int) -> "ResidueClassUnion":
        return ResidueClassUnion(self.modulus, factors=[(m, {(r + t) % m for r in R}) for m, R in self.factors],
                                 ambient=self.ambient)

    def count_in(self, lo: int, hi: int) -> int | None:
        """Exact number of members in ``[lo, hi]``, or ``None`` if the residue
        set is too large to enumerate."""
        if hi < lo:
            return 0
        k = self.modulus
        periods, rest = divmod(hi - lo + 1, k)
        total = periods * self.size
        if rest == 0:
            return total
        if len(self.factors) == 1 and self.size > ENUMERATION_LIMIT:
            return None
        try:
            res = self.residues
        except OverflowError:
            return None
        a = lo % k
        b = a + rest - 1
        if b < k:
            return total + bisect.bisect_right(res, b) - bisect.bisect_left(res, a)
        return total + (len(res) - bisect.bisect_left(res, a)) + bisect.bisect_right(res, b - k)

    def count_bound(self, lo: int, hi: int) -> int:
        """Upper bound on the number of members in ``[lo, hi]``."""
        if hi < lo:
            return 0
        length = hi - lo + 1
        return min(length, self.size * -(-length // self.modulus))

    def describe(self) -> str:
        if len(self.factors) == 1:
            return f"mod {self.modulus}: {{{','.join(map(str, sorted(self.factors[0][1])))}}}"
        return " & ".join(f"mod {m}: {{{','.join(map(str, sorted(R)))}}}" for m, R in self.factors)


# -- set algebra ---------------------------------------------------------------

_LCM_LIMIT = 10**6


def _flatten(a: ResidueClassUnion, modulus: int) -> set[int]:
    res = a.residues
    return {r + j * a.modulus for r in res for j in range(modulus // a.modulus)}


def _check_ambient(*sets):
    ambients = {repr(s.ambient) for s in sets}
    if len(ambients) > 1:
        raise AmbientMismatch(f"incompatible ambients {sorted(ambients)}")


def complement(a: LazySet) -> LazySet:
    if isinstance(a, ResidueClassUnion) and a.size <= ENUMERATION_LIMIT:
        res = set(a.residues)
        return ResidueClassUnion(a.modulus, [r for r in range(a.modulus) if r not in res],
                                 ambient=a.ambient, name=f"!{a.name}")
    d = None if a.exact_density is None else 1 - a.exact_density
    return PredicateSet(lambda x: not a.contains(x), a.ambient, d, f"!{a.name}",
                        vector=lambda v: ~a.mask(v))


def _combine(a: LazySet, b: LazySet, op: str) -> LazySet:
    _check_ambient(a, b)
    both = isinstance(a, ResidueClassUnion) and isinstance(b, ResidueClassUnion)
    if both:
        k = math.lcm(a.modulus, b.modulus)
        if k <= _LCM_LIMIT:
            ra, rb = _flatten(a, k), _flatten(b, k)
            res = ra | rb if op == "|" else ra & rb
            return ResidueClassUnion(k, res, ambient=a.ambient, name=f"({a.name}{op}{b.name})")
    if op == "|":
        pred, vec = (lambda x: a.contains(x) or b.contains(x)), (lambda v: a.mask(v) | b.mask(v))
    else:
        pred, vec = (lambda x: a.contains(x) and b.contains(x)), (lambda v: a.mask(v) & b.mask(v))
    return PredicateSet(pred, a.ambient, None, f"({a.name}{op}{b.name})", vector=vec)


def union(a: LazySet, b: LazySet) -> LazySet:
    return _combine(a, b, "|")


def intersection(a: LazySet, b: LazySet) -> LazySet:
    return _combine(a, b, "&")


def shift(a: LazySet, t) -> LazySet:
    """``a + t``."""
    if isinstance(a, ResidueClassUnion):
        return a.shift(t)
    if isinstance(a.ambient, GroupDescriptor):
        g = a.ambient
        return PredicateSet(lambda x: a.contains(groups.subtract(x, t, g)), g, a.exact_density,
                            f"{a.name}+{t!r}")
    return PredicateSet(lambda x: a.contains(x - t), a.ambient, a.exact_density, f"{a.name}+{t}",
                        vector=lambda v: a.mask(np.asarray(v) - t))


def set_algebra(op: str, *args) -> LazySet:
    ops = {"complement": complement, "union": union, "intersection": intersection, "shift": shift}
    if op not in ops:
        raise ValueError(f"unknown set operation {op!r}")
    return ops[op](*args)


def _is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


BUILTINS: dict[str, Callable[[], LazySet]] = {
    "all": lambda: ResidueClassUnion(1, [0], name="all"),
    "empty": lambda: ResidueClassUnion(1, [], name="empty"),
    "evens": lambda: ResidueClassUnion(2, [0], name="evens"),
    "odds": lambda: ResidueClassUnion(2, [1], name="odds"),
    "squares": lambda: PredicateSet(_is_square, NATURALS, Fraction(0), "squares"),
}


_TOKEN = re.compile(r"\s*(mod|-?\d+|[A-Za-z_]+|[!|&+\-(){}:,])")


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"unexpected input at {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def parse_set(text: str) -> LazySet:
    """Parse the set grammar: ``mod k: {r,...}``, ``!S``, ``S|T``, ``S&T``,
    ``S+t`` / ``S-t``, parentheses and the names in ``BUILTINS``."""
    tokens = _tokenize(text)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ValueError(f"expected {expected or 'token'} in {text!r}, got {tok!r}")
        pos += 1
        return tok

    def expr():
        left = term()
        while peek() in ("|", "&"):
            op = take()
            right = term()
            left = union(left, right) if op == "|" else intersection(left, right)
        return left

    def term():
        if peek() == "!":
            take()
            return complement(term())
        s = atom()
        while peek() in ("+", "-") or (peek() or "").startswith("-"):
            tok = take()
            if tok in ("+", "-"):
                value = int(take())
                s = shift(s, value if tok == "+" else -value)
            else:
                s = shift(s, int(tok))
        return s

    def atom():
        tok = peek()
        if tok == "(":
            take()
            s = expr()
            take(")")
            return s
        if tok == "mod":
            take()
            k = int(take())
            take(":")
            take("{")
            res = []
            while peek() != "}":
                res.append(int(take()))
                if peek() == ",":
                    take()
            take("}")
            return ResidueClassUnion(k, res)
        if tok in BUILTINS:
            take()
            return BUILTINS[tok]()
        raise ValueError(f"unknown set atom {tok!r} in {text!r}")

    result = expr()
    if pos != len(tokens):
        raise ValueError(f"trailing input in {text!r}")
    return result


# -- density along a Folner sequence -----------------------------------------


@dataclass
class DensityEstimate:
    """Exact counts ``|A cap Phi_N|`` for ``N_min <= N <= N_max``."""

    N_min: int
    counts: list[int]
    sizes: list[int]
    folner: str = ""

    @property
    def N_max(self) -> int:
        return self.N_min + len(self.counts) - 1

    @property
    def count(self) -> int:
        return self.counts[-1]

    @property
    def size(self) -> int:
        return self.sizes[-1]

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.count, self.size)

    def ratio_at(self, N: int) -> Fraction:
        i = N - self.N_min
        return Fraction(self.counts[i], self.sizes[i])

    def ratios(self) -> list[Fraction]:
        return [Fraction(c, s) for c, s in zip(self.counts, self.sizes)]

    @property
    def limsup(self) -> Fraction:
        return max(self.ratios())

    @property
    def liminf(self) -> Fraction:
        return min(self.ratios())

    def first_index_staying_at_least(self, floor: Fraction) -> int | None:
        """Least ``N0`` in range with ratio ``>= floor`` for all ``N0 <= N <= N_max``."""
        ratios = self.ratios()
        if ratios[-1] < floor:
            return None
        i = len(ratios) - 1
        while i > 0 and ratios[i - 1] >= floor:
            i -= 1
        return self.N_min + i


def density_along(a: LazySet, phi: FolnerSequence, N_max: int, N_min: int = 1) -> DensityEstimate:
    if repr(a.ambient) != repr(phi.ambient):
        raise AmbientMismatch(f"set over {a.ambient} measured along {phi.name} over {phi.ambient}")
    if N_max < N_min or N_min < 1:
        raise ValueError("need 1 <= N_min <= N_max")
    if isinstance(phi, IntervalFolner):
        values = np.arange(1, N_max + 1, dtype=np.int64)
        cum = np.cumsum(a.mask(values))
        counts = [int(c) for c in cum[N_min - 1:]]
        sizes = list(range(N_min, N_max + 1))
        return DensityEstimate(N_min, counts, sizes, phi.name)
    per_level = [0] * (N_max + 1)
    for x in phi.elements(N_max):
        if a.contains(x):
            per_level[phi.level(x)] += 1
    cum = list(itertools.accumulate(per_level))
    counts = cum[N_min:]
    sizes = [phi.size(N) for N in range(N_min, N_max + 1)]
    return DensityEstimate(N_min, counts, sizes, phi.name)


FOLNER_ALIASES = {"N": "interval", "Z": "interval", "multiplicative": "multiplicative-box", "cone": "cone-box"}


def folner_from_name(name: str, ambient=None) -> FolnerSequence:
    name = FOLNER_ALIASES.get(name, name)
    if name == "interval":
        return IntervalFolner()
    if name == "box":
        if not isinstance(ambient, GroupDescriptor):
            raise ValueError("box Folner sequences need a group ambient")
        return BoxFolner(ambient)
    if name == "cone-box":
        return ConeFolner()
    if name == "multiplicative-box":
        return MultiplicativeFolner()
    raise ValueError(f"unknown Folner sequence {name!r}")
