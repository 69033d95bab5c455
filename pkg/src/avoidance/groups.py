"""Countable abelian groups presented as restricted direct sums of cyclic groups.

A group is described by a rule assigning an order ``n_i`` to every coordinate
``i``; ``n_i == 0`` marks a copy of Z.  Elements are finitely supported and
stored as sorted ``(coordinate, value)`` pairs with values reduced into
``[0, n_i)`` on finite coordinates.

Enumeration convention (used to order shifts everywhere in the package):
elements are listed block by block, block ``N`` being ``Phi_N minus Phi_{N-1}``
where ``Phi_N`` is the box ``{support in [0, N), |x_i| <= N on Z coordinates}``
(finite coordinates range over the whole cyclic factor).  Inside a block the
order is lexicographic on the zig-zag codes of ``(x_{N-1}, ..., x_0)``, where
the zig-zag code of an integer is ``0, 1, -1, 2, -2, ... -> 0, 1, 2, 3, 4, ...``.
For Z this gives ``0, 1, -1, 2, -2, ...``; for the sum of copies of Z/2 it is
binary counting order.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Iterator, Mapping

INFINITE = math.inf


class GroupError(ValueError):
    pass


@dataclass(frozen=True)
class GroupDescriptor:
    """Coordinate-modulus rule ``i -> pattern[i % len(pattern)]``.

    ``rank`` is the number of coordinates, ``None`` for an infinite direct sum.
    """

    pattern: tuple[int, ...]
    rank: int | None = None

    def __post_init__(self):
        if not self.pattern:
            raise GroupError("empty modulus pattern")
        for n in self.pattern:
            if n < 0 or n == 1:
                raise GroupError(f"invalid cyclic order {n}")
        if self.rank is not None and self.rank < 1:
            raise GroupError("rank must be positive")

    def modulus(self, i: int) -> int:
        if i < 0 or (self.rank is not None and i >= self.rank):
            raise GroupError(f"coordinate {i} outside group of rank {self.rank}")
        return self.pattern[i % len(self.pattern)]

    def coordinates(self, count: int) -> range:
        """The first ``count`` coordinates, truncated to the rank."""
        if self.rank is not None:
            count = min(count, self.rank)
        return range(max(count, 0))

    @property
    def is_torsion(self) -> bool:
        return 0 not in self.pattern

    def __str__(self) -> str:
        return format_group(self)


def _parse_factor(text: str) -> int:
    text = text.strip()
    if text == "Z":
        return 0
    m = re.fullmatch(r"Z/(\d+)", text)
    if not m:
        raise GroupError(f"cannot parse cyclic factor {text!r}")
    return int(m.group(1))


def parse_group(text: str) -> GroupDescriptor:
    """Parse ``Z``, ``Z/n``, ``sum(Z/2)``, ``sum(Z)`` or ``sum(Z/2,Z/4 periodic)``."""
    text = text.strip()
    m = re.fullmatch(r"sum\((.*)\)", text)
    if not m:
        return GroupDescriptor((_parse_factor(text),), rank=1)
    body = m.group(1).strip()
    periodic = body.endswith("periodic")
    if periodic:
        body = body[: -len("periodic")].strip()
    factors = tuple(_parse_factor(f) for f in body.split(","))
    if len(factors) > 1 and not periodic:
        raise GroupError("a multi-factor sum needs the 'periodic' rule")
    return GroupDescriptor(factors)


def format_group(g: GroupDescriptor) -> str:
    names = ["Z" if n == 0 else f"Z/{n}" for n in g.pattern]
    if g.rank == 1:
        return names[0]
    if g.rank is not None:
        raise GroupError("only rank-1 and infinite descriptors have a textual form")
    if len(names) == 1:
        return f"sum({names[0]})"
    return f"sum({','.join(names)} periodic)"


@dataclass(frozen=True, order=True)
class GroupElement:
    """Finitely supported element; ``support`` holds sorted nonzero ``(i, x_i)``."""

    support: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_mapping(cls, values: Mapping[int, int], g: GroupDescriptor) -> "GroupElement":
        items = []
        for i, v in values.items():
            if not isinstance(v, int) or isinstance(v, bool):
                raise GroupError(f"coordinate {i} value {v!r} is not an integer")
            n = g.modulus(i)
            if n:
                v %= n
            if v:
                items.append((i, v))
        return cls(tuple(sorted(items)))

    def get(self, i: int) -> int:
        for j, v in self.support:
            if j == i:
                return v
        return 0

    def as_dict(self) -> dict[int, int]:
        return dict(self.support)

    @property
    def max_coordinate(self) -> int:
        return self.support[-1][0] if self.support else -1

    def __bool__(self) -> bool:
        return bool(self.support)

    def __repr__(self) -> str:
        return "{" + ", ".join(f"{i}:{v}" for i, v in self.support) + "}"


IDENTITY = GroupElement()


def element(values: Mapping[int, int], g: GroupDescriptor) -> GroupElement:
    return GroupElement.from_mapping(values, g)


def add(a: GroupElement, b: GroupElement, g: GroupDescriptor) -> GroupElement:
    if not b.support:
        return a
    if not a.support:
        return b
    acc = dict(a.support)
    for i, v in b.support:
        acc[i] = acc.get(i, 0) + v
    return GroupElement.from_mapping(acc, g)


def negate(a: GroupElement, g: GroupDescriptor) -> GroupElement:
    return GroupElement.from_mapping({i: -v for i, v in a.support}, g)


def subtract(a: GroupElement, b: GroupElement, g: GroupDescriptor) -> GroupElement:
    return add(a, negate(b, g), g)


def scalar_multiply(k: int, a: GroupElement, g: GroupDescriptor) -> GroupElement:
    if k < 0:
        raise GroupError("scalar must be non-negative")
    return GroupElement.from_mapping({i: k * v for i, v in a.support}, g)


def signed_value(v: int, n: int) -> int:
    """Representative of ``v`` in ``(-n/2, n/2]`` for finite ``n``; ``v`` itself on Z."""
    if n and v > n // 2:
        return v - n
    return v


# -- subgroups ---------------------------------------------------------------


@dataclass(frozen=True)
class BoxSubgroup:
    """``{x : x_i == 0 mod m_i for every constrained coordinate i}``.

    On a finite coordinate ``m_i`` divides ``n_i`` (``m_i == n_i`` forces
    ``x_i = 0``); on a Z coordinate ``m_i == 0`` forces ``x_i = 0``.
    """

    constraints: tuple[tuple[int, int], ...] = ()

    @classmethod
    def build(cls, constraints: Mapping[int, int], g: GroupDescriptor) -> "BoxSubgroup":
        for i, m in constraints.items():
            n = g.modulus(i)
            if m < 0:
                raise GroupError("negative constraint modulus")
            if n and (m == 0 or n % m):
                raise GroupError(f"constraint mod {m} does not divide order {n} at coordinate {i}")
        return cls(tuple(sorted(constraints.items())))

    def contains(self, x: GroupElement, g: GroupDescriptor | None = None) -> bool:
        for i, m in self.constraints:
            v = x.get(i)
            if m == 0:
                if v:
                    return False
            elif v % m:
                return False
        return True

    def as_dict(self) -> dict[int, int]:
        return dict(self.constraints)


def subgroup_index(s: BoxSubgroup, g: GroupDescriptor) -> int | float:
    index = 1
    for i, m in s.constraints:
        if m == 0:
            if g.modulus(i) == 0:
                return INFINITE
            m = g.modulus(i)
        index *= m
    return index


def lambda_j(j: int, k: int, g: GroupDescriptor) -> BoxSubgroup:
    """Box subgroup containing ``k*Gamma`` cut out by the first ``j`` coordinates.

    Coordinate ``i < j`` is constrained mod ``gcd(k, n_i)`` (``k`` on Z factors),
    which is exactly the image of ``k*Gamma`` there; ``k == 0`` gives the pure
    box ``x_0 = ... = x_{j-1} = 0``.
    """
    if j < 0:
        raise GroupError("j must be non-negative")
    if g.rank is not None and j > g.rank:
        raise GroupError(f"j={j} exceeds rank {g.rank}")
    constraints = {}
    for i in range(j):
        n = g.modulus(i)
        constraints[i] = math.gcd(k, n) if n else k
    return BoxSubgroup.build(constraints, g)


def coset_of(x: GroupElement, s: BoxSubgroup, g: GroupDescriptor) -> tuple[int, ...]:
    label = []
    for i, m in s.constraints:
        if m == 0:
            if g.modulus(i) == 0:
                raise GroupError("coset label of an infinite-index subgroup")
            m = g.modulus(i)
        label.append(x.get(i) % m)
    return tuple(label)


def max_lambda_index(k: int, g: GroupDescriptor) -> int | float:
    """Supremum over j of the index of ``lambda_j(j, k, g)``."""
    if g.rank is None:
        grows = any((math.gcd(k, n) if n else k) > 1 for n in g.pattern)
        return INFINITE if grows else 1
    return subgroup_index(lambda_j(g.rank, k, g), g)


# -- box Folner levels and enumeration --------------------------------------


def zigzag(v: int) -> int:
    return 2 * v - 1 if v > 0 else -2 * v


def box_level(x: GroupElement, g: GroupDescriptor) -> int:
    """Least ``N >= 1`` with ``x`` in the box ``Phi_N``."""
    level = max(1, x.max_coordinate + 1)
    for i, v in x.support:
        if g.modulus(i) == 0:
            level = max(level, abs(v))
    return level


def _coordinate_values(n: int, N: int) -> range | list[int]:
    if n:
        return range(n)
    return range(-N, N + 1)


def box_elements(g: GroupDescriptor, N: int) -> Iterator[GroupElement]:
    """All elements of ``Phi_N`` (no particular order)."""
    coords = g.coordinates(N)
    ranges = [_coordinate_values(g.modulus(i), N) for i in coords]
    for values in itertools.product(*ranges):
        yield GroupElement(tuple((i, v) for i, v in zip(coords, values) if v))


def box_size(g: GroupDescriptor, N: int) -> int:
    size = 1
    for i in g.coordinates(N):
        n = g.modulus(i)
        size *= n if n else 2 * N + 1
    return size


def enumeration_key(x: GroupElement, N: int) -> tuple[int, ...]:
    values = x.as_dict()
    return tuple(zigzag(values.get(i, 0)) for i in range(N - 1, -1, -1))


def enumerate_group(g: GroupDescriptor) -> Iterator[GroupElement]:
    """Deterministic repetition-free enumeration; the identity comes first."""
    N = 1
    while True:
        block = [x for x in box_elements(g, N) if box_level(x, g) == N]
        block.sort(key=lambda x: enumeration_key(x, N))
        yield from block
        if g.rank is not None and g.is_torsion and N >= g.rank:
            return
        N += 1
