"""Counterexample builders.

Every builder follows one recipe.  Enumerate the shifts ``t_0, t_1, ...``;
give shift ``t_i`` the budget ``eps * 2^-(i+1)`` and a divisor set ``D_i`` of
exact density at most that budget, chosen so that any configuration living in
a set also lives, after passing to a sub-configuration, inside ``D_i``.  Feed
the translates ``D_i + t_i`` to the subadditive cover and take ``A`` to be the
complement of the cover.  Then ``(A - t_i) cap D_i`` is confined to the finite
region the cover leaves untouched, which bounds every configuration in
``A - t_i`` by ``M_i = I_i * (E_i + c)`` where ``I_i`` is the number of classes
in the pigeonhole partition behind ``D_i``, ``E_i`` is the number of elements
of ``D_i + t_i`` left in ``A`` and ``c`` is the per-family slack:

* finite sums, divisor ``kN``: partition a sequence into blocks of ``k``; every
  block has a nonempty sub-sum divisible by ``k`` and the running totals of
  these sub-sums are distinct, so at most ``E`` blocks fit (``c = 1``);
* k-sumsets / k-products, divisor a box subgroup containing ``k*Gamma``: inside
  one coset, fixing ``k-1`` elements and varying the last gives ``s-k+1``
  distinct sums (``c = k-1``);
* polynomial sums: inside one class mod ``Dk``, fixing the least element gives
  ``s-1`` distinct values (``c = 1``);
* product-sums: fixing the two least elements gives ``s-2`` values (``c = 2``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterator, Sequence

import numpy as np

from . import groups
from .cover import CoverInput, CoverSet, SubadditiveCover
from .density import (CONE, MULTIPLICATIVE, NATURALS, BoxFolner, ConeFolner, DensityEstimate,
                      FolnerSequence, IntervalFolner, LazySet, MultiplicativeFolner,
                      ResidueClassUnion, density_along, exponent_element)
from .groups import BoxSubgroup, GroupDescriptor, GroupElement
from .numtheory import ModulusSchedule, modulus_schedule, phi_factorize, phi_unfactorize
from .polynomial import X, IntValuedPoly, PolynomialError, format_poly

FAMILY_KINDS = ("ip", "sumset", "product", "poly-sum", "product-sum")
SQUARE = IntValuedPoly.from_ints([0, 0, 1])
SUM_Z = GroupDescriptor((0,))
EXACT_SCAN_LIMIT = 10**8


class ConstructionError(ValueError):
    pass


class DivisorUnreachable(ConstructionError):
    def __init__(self, message, infimum: Fraction):
        super().__init__(message)
        self.infimum = infimum


class UncertifiedShift(ConstructionError):
    pass


@dataclass(frozen=True)
class ConfigurationFamily:
    kind: str
    k: int = 2
    poly: IntValuedPoly | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ConstructionError(f"unknown family {self.kind!r}")
        if self.k < 1:
            raise ConstructionError("k must be at least 1")
        if self.kind == "product" and self.k < 2:
            raise ConstructionError("product sets need k >= 2")
        if self.kind == "poly-sum":
            if self.poly is None or self.poly.degree < 2:
                raise ConstructionError("poly-sum needs an integer-valued polynomial of degree >= 2")
        if self.kind == "product-sum" and self.poly is None:
            object.__setattr__(self, "poly", SQUARE)

    @property
    def arity(self) -> int | None:
        """Size of the tuples a configuration value depends on (``None`` for all subsets)."""
        return {"ip": None, "sumset": self.k, "product": self.k, "poly-sum": 2, "product-sum": 3}[self.kind]

    @property
    def key_poly(self) -> IntValuedPoly | None:
        """``n -> P(n) + n``, whose residues cut out the divisor sets."""
        if self.kind in ("poly-sum", "product-sum"):
            return self.poly + X
        return None

    @property
    def slack(self) -> int:
        return {"ip": 1, "sumset": self.k - 1, "product": self.k - 1, "poly-sum": 1, "product-sum": 2}[self.kind]

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("sumset", "product"):
            out["k"] = self.k
        if self.kind == "poly-sum":
            out["poly"] = format_poly(self.poly.coeffs)
        return out


def ip_divisor(target: Fraction) -> ResidueClassUnion:
    """``2^e N`` with the least ``e`` such that ``2^-e <= target``."""
    target = Fraction(target)
    e = 0
    while Fraction(1, 2**e) > target:
        e += 1
    return ResidueClassUnion(2**e, [0], ambient=NATURALS)


def sumset_divisor(k: int, target: Fraction, g: GroupDescriptor) -> BoxSubgroup:
    target = Fraction(target)
    sup = groups.max_lambda_index(k, g)
    if sup != groups.INFINITE and Fraction(1, sup) > target:
        raise DivisorUnreachable(
            f"infimum {Fraction(1, sup)} unreachable: divisor densities in {g} cannot drop below "
            f"1/[Gamma : {k}Gamma] = {Fraction(1, sup)}, budget {target}", Fraction(1, sup))
    j = 0
    while True:
        s = groups.lambda_j(j, k, g)
        if Fraction(1, groups.subgroup_index(s, g)) <= target:
            return s
        j += 1


def poly_divisor(q: IntValuedPoly, target: Fraction, prime_bound: int = 100_000) -> tuple[ResidueClassUnion, ModulusSchedule]:
    schedule = modulus_schedule(q, target, prime_bound)
    if schedule.modulus == 1:
        d = ResidueClassUnion(1, [0])
    else:
        d = ResidueClassUnion(schedule.modulus, factors=[(p, R) for p, R in schedule.images])
    return d, schedule


def divisor_supplier(family: ConfigurationFamily, target: Fraction, group: GroupDescriptor | None = None):
    """Divisor set of density ``<= target`` for ``family``."""
    target = Fraction(target)
    if not 0 < target <= 1:
        raise ConstructionError("target density must lie in (0, 1]")
    if family.kind == "ip":
        return ip_divisor(target)
    if family.kind in ("sumset", "product"):
        return sumset_divisor(family.k, target, group if group is not None else SUM_Z)
    return poly_divisor(family.key_poly, target)[0]


# -- counting cosets of box subgroups inside boxes ---------------------------


def _count_congruent(lo: int, hi: int, r: int, m: int) -> int:
    if hi < lo:
        return 0
    if m == 0:
        return 1 if lo <= r <= hi else 0
    return (hi - r) // m - (lo - 1 - r) // m


def coset_box_count(s: BoxSubgroup, t: GroupElement, g: GroupDescriptor, K: int, cone: bool = False) -> int:
    """``|(s + t) cap Phi_K|`` for the box (or cone-box) sequence; ``Phi_0`` is empty."""
    if K <= 0:
        return 0
    cons = s.as_dict()
    coords = g.coordinates(K)
    count = 1
    for i in coords:
        n = g.modulus(i)
        m = cons.get(i)
        if n:
            count *= n // m if m else n
            continue
        lo, hi = (0, K) if cone else (-K, K)
        count *= _count_congruent(lo, hi, t.get(i), m) if m is not None else hi - lo + 1
    for i, m in cons.items():
        if i in coords:
            continue
        v = (-t.get(i)) % g.modulus(i) if g.modulus(i) else -t.get(i)
        if (m == 0 and v != 0) or (m and v % m):
            return 0
    return count


def box_error_function(s: BoxSubgroup, g: GroupDescriptor, folner: FolnerSequence, density: Fraction):
    """Non-increasing bound on ``|(s + t) cap Phi_K|/|Phi_K| - density``."""
    cons = sorted(s.as_dict().items())

    def error(K: int) -> Fraction:
        bound = Fraction(1)
        for i, m in cons:
            if i >= K:
                break
            n = g.modulus(i)
            if n:
                bound *= Fraction(1, m)
            elif m == 0:
                bound *= Fraction(1, K + 1 if isinstance(folner, ConeFolner) else 2 * K + 1)
            else:
                bound *= folner.coordinate_ratio_bound(m, K)
        return min(Fraction(1), max(Fraction(0), bound - density))

    return error


def bound_formula(partition_index: int, exceptional: int, slack: int) -> int:
    """``M = I * (E + c)``."""
    return partition_index * (exceptional + slack)


# -- entries and counterexamples -------------------------------------------


@dataclass(frozen=True)
class CoverEntry:
    """Certificate data for one shift."""

    position: int
    shift: Any
    divisor: Any
    density: Fraction
    budget: Fraction
    partition_index: int
    slack: int
    schedule: ModulusSchedule | None = None


def zigzag_int(i: int) -> int:
    return (i + 1) // 2 if i % 2 else -(i // 2)


def zigzag_position(t: int) -> int:
    return 2 * t - 1 if t > 0 else -2 * t


class Counterexample(LazySet):
    """``A = ambient minus S`` for one configuration family.

    Ambient is the naturals (``ip``, ``poly-sum``, ``product-sum``; shifts in Z)
    or a direct-sum group (``sumset``; shifts in the group).
    """

    def __init__(self, family: ConfigurationFamily, epsilon: Fraction, *, group: GroupDescriptor | None = None,
                 shift_budget: int = 21, folner: FolnerSequence | None = None, cone: bool = False):
        epsilon = Fraction(epsilon)
        if not 0 < epsilon < 1:
            raise ConstructionError("epsilon must lie in (0, 1)")
        self.family = family
        self.epsilon = epsilon
        self.shift_budget = shift_budget
        if family.kind in ("sumset", "product"):
            self.group = group if group is not None else SUM_Z
            self.cone = cone
            self.folner = folner or (ConeFolner() if cone else BoxFolner(self.group))
            self.ambient = self.folner.ambient
            # fail early when the divisor densities cannot reach the budgets
            sumset_divisor(family.k, epsilon / 2, self.group)
            self._group_shifts: list[GroupElement] = []
            self._shift_iter = groups.enumerate_group(SUM_Z if cone else self.group)
        else:
            self.group = None
            self.cone = False
            self.folner = folner or IntervalFolner()
            self.ambient = NATURALS
        self.name = f"A[{family.kind}]"
        self._entries: list[CoverEntry] = []
        self.cover = SubadditiveCover(self._input, self.folner)
        self.covered = CoverSet(self.cover)

    # -- shifts ---------------------------------------------------------------

    def shift(self, i: int):
        if self.group is None:
            return zigzag_int(i)
        while len(self._group_shifts) <= i:
            try:
                self._group_shifts.append(next(self._shift_iter))
            except StopIteration:
                raise IndexError("finite group has no more shifts") from None
        return self._group_shifts[i]

    def position_of(self, t) -> int:
        if self.group is None:
            return zigzag_position(int(t))
        i = 0
        while True:
            if self.shift(i) == t:
                return i
            i += 1
            if i > 10**6:
                raise ConstructionError(f"shift {t!r} not found in the first 10^6 positions")

    def budget(self, i: int) -> Fraction:
        return self.epsilon / 2 ** (i + 1)

    # -- entries --------------------------------------------------------------

    def entry(self, i: int) -> CoverEntry:
        self.cover.cutoff(i + 1)
        return self._entries[i]

    def _make_entry(self, i: int) -> CoverEntry:
        t = self.shift(i)
        budget = self.budget(i)
        fam = self.family
        if fam.kind == "ip":
            d = ip_divisor(budget)
            return CoverEntry(i, t, d, d.exact_density, budget, d.modulus, fam.slack)
        if fam.kind in ("sumset", "product"):
            s = sumset_divisor(fam.k, budget, self.group)
            index = groups.subgroup_index(s, self.group)
            return CoverEntry(i, t, s, Fraction(1, index), budget, index, fam.slack)
        d, schedule = poly_divisor(fam.key_poly, budget)
        return CoverEntry(i, t, d, d.exact_density, budget, fam.key_poly.denominator * d.modulus, fam.slack,
                          schedule)

    def _input(self, i: int) -> CoverInput:
        entry = self._make_entry(i)
        self._entries.append(entry)
        t, d = entry.shift, entry.divisor
        if self.group is None:
            return CoverInput(
                contains=lambda x: x >= 1 and d.contains(x - t),
                density=entry.density,
                error=lambda K: min(Fraction(1), (d.size - entry.density) / K),
                mask=lambda v: d.mask(np.asarray(v, dtype=np.int64) - t),
                error_coefficient=d.size - entry.density,
                payload=entry,
            )
        g = self.group
        return CoverInput(
            contains=lambda x: d.contains(groups.subtract(x, t, g)),
            density=entry.density,
            error=box_error_function(d, g, self.folner, entry.density),
            payload=entry,
        )

    # -- membership -----------------------------------------------------------

    def in_ambient(self, x) -> bool:
        if self.group is None:
            return isinstance(x, (int, np.integer)) and x >= 1
        if self.cone:
            return self.folner.level(x) is not None
        return True

    def contains(self, x) -> bool:
        return self.in_ambient(x) and not self.cover.contains(x)

    def mask(self, values):
        if self.group is not None:
            return super().mask(values)
        values = np.asarray(values, dtype=np.int64)
        return (values >= 1) & ~self.cover.mask(values)

    # -- certificate quantities -----------------------------------------------

    def cutoff(self, i: int) -> int:
        return self.cover.cutoff(i + 1)

    def exceptional(self, i: int) -> tuple[int, bool]:
        """``(E_i, exact)``: elements of ``D_i + t_i`` left in ``A``.

        For residue sets too large to enumerate an upper bound is returned
        with ``exact = False``; ``M_i`` stays sound either way.
        """
        return self.exceptional_through(i, self.cutoff(i) - 1)

    def exceptional_through(self, i: int, K: int) -> tuple[int, bool]:
        """``(E, exact)`` for ``D_i + t_i`` counted over ``Phi_K``."""
        entry = self.entry(i)
        if self.group is None:
            shifted = entry.divisor.shift(entry.shift)
            exact = shifted.count_in(1, K)
            if exact is not None:
                return exact, True
            if K <= EXACT_SCAN_LIMIT:
                total = 0
                for lo in range(1, K + 1, 1 << 20):
                    total += int(shifted.mask(np.arange(lo, min(K, lo + (1 << 20) - 1) + 1)).sum())
                return total, True
            return shifted.count_bound(1, K), False
        return coset_box_count(entry.divisor, entry.shift, self.group, K, cone=self.cone), True

    def finitary_bound(self, i: int) -> int:
        if i >= self.shift_budget:
            raise UncertifiedShift(f"shift position {i} is beyond the certified budget {self.shift_budget}")
        entry = self.entry(i)
        E, _ = self.exceptional(i)
        return bound_formula(entry.partition_index, E, entry.slack)

    def exceptional_region(self, i: int) -> int:
        """``K`` such that the untouched region for shift ``i`` is ``Phi_K``."""
        return self.cutoff(i) - 1

    def density_total_bound(self, materialized: int) -> Fraction:
        """Upper bound on the sum of all exact densities (tail bounded by budgets)."""
        self.cover.materialize(materialized)
        return sum((e.density for e in self._entries[:materialized]), Fraction(0)) + self.epsilon / 2**materialized

    def analytic_floor(self, materialized: int = 40, max_entries: int = 5000) -> int | None:
        """Least ``N0`` with ``|A cap Phi_N|/|Phi_N| > 1 - eps`` proved for all ``N >= N0``.

        Uses ``|S cap Phi_N|/|Phi_N| <= sum_all delta + 1/n_N``; ``None`` when the
        exact densities leave no slack below ``eps``.
        """
        total = self.density_total_bound(materialized)
        if total >= self.epsilon:
            return None
        n = math.floor(1 / (self.epsilon - total)) + 1
        if n > max_entries:
            return None
        return self.cover.cutoff(n)

    def density(self, N_max: int, N_min: int = 1) -> DensityEstimate:
        return density_along(self, self.folner, N_max, N_min)


class ProductCounterexample(LazySet):
    """``A`` in ``(N, *)`` avoiding ``t B^(.k)`` for every ``2 <= k <= k_max``.

    Under prime factorisation each order ``k`` is a k-sumset problem in the sum
    of copies of Z, measured along exponent boxes.  The per-order covers
    ``N_k`` (budget ``2^-k eps``) are merged by a second cover, and ``A`` is the
    pull-back of its complement.
    """

    def __init__(self, epsilon: Fraction, k_max: int = 2, shift_budget: int = 24, cap: int = 10**6):
        epsilon = Fraction(epsilon)
        if not 0 < epsilon < 1:
            raise ConstructionError("epsilon must lie in (0, 1)")
        if k_max < 2:
            raise ConstructionError("k_max must be at least 2")
        self.epsilon = epsilon
        self.k_max = k_max
        self.shift_budget = shift_budget
        self.cap = cap
        self.family = ConfigurationFamily("product", 2)
        self.folner = MultiplicativeFolner(cap)
        self.cone_folner = ConeFolner()
        self.ambient = MULTIPLICATIVE
        self.name = "A[product]"
        self.orders = {
            k: Counterexample(ConfigurationFamily("product", k), epsilon / 2**k, group=SUM_Z,
                              shift_budget=shift_budget, cone=True)
            for k in range(2, k_max + 1)
        }
        inputs = []
        for k, ce in self.orders.items():
            inputs.append(CoverInput(
                contains=ce.cover.contains,
                density=epsilon / 2**k,
                error=(lambda c: lambda K: min(Fraction(1), Fraction(1, max(1, c.cover.count_through(K)))))(ce),
                payload=k,
            ))
        self.outer = SubadditiveCover(inputs, self.cone_folner)
        self.outer.materialize(len(inputs))

    def outer_cutoff(self, k: int) -> int:
        return self.outer.cutoff(k - 1)

    def shift(self, i: int) -> Fraction:
        return phi_unfactorize(self.orders[2].shift(i))

    def position_of(self, t) -> int:
        return self.orders[2].position_of(phi_factorize(t))

    def contains_exponents(self, x: GroupElement) -> bool:
        return self.cone_folner.level(x) is not None and not self.outer.contains(x)

    def contains(self, n) -> bool:
        if isinstance(n, Fraction):
            if n.denominator != 1:
                return False
            n = n.numerator
        if not isinstance(n, (int, np.integer)) or n < 1:
            return False
        return self.contains_exponents(exponent_element(int(n)))

    def exceptional(self, k: int, i: int) -> tuple[int, bool]:
        ce = self.orders[k]
        entry = ce.entry(i)
        K = max(ce.cutoff(i), self.outer_cutoff(k)) - 1
        return coset_box_count(entry.divisor, entry.shift, SUM_Z, K, cone=True), True

    def exceptional_region(self, k: int, i: int) -> int:
        return max(self.orders[k].cutoff(i), self.outer_cutoff(k)) - 1

    def finitary_bound(self, k: int, i: int) -> int:
        if i >= self.shift_budget:
            raise UncertifiedShift(f"shift position {i} is beyond the certified budget {self.shift_budget}")
        entry = self.orders[k].entry(i)
        E, _ = self.exceptional(k, i)
        return bound_formula(entry.partition_index, E, entry.slack)

    def density(self, N_max: int, N_min: int = 1) -> DensityEstimate:
        """Exact counts along the multiplicative boxes, enumerated as exponent vectors."""
        if self.cap is not None and self.folner.size(N_max) > self.cap:
            from .density import FolnerCapExceeded
            raise FolnerCapExceeded(f"multiplicative box N={N_max} exceeds cap {self.cap}")
        per_level = [0] * (N_max + 1)
        for x in self.cone_folner.elements(N_max):
            if self.contains_exponents(x):
                per_level[self.cone_folner.level(x)] += 1
        cum = list(itertools.accumulate(per_level))
        return DensityEstimate(N_min, cum[N_min:], [self.folner.size(N) for N in range(N_min, N_max + 1)],
                               self.folner.name)


class MergedCounterexample(LazySet):
    """One ``A`` in the naturals serving several integer families at once.

    Component ``j`` is built with budget ``eps * 2^-(j+1)`` (the geometric
    split), and the component covers are merged by a second cover along
    ``[1, N]``, as for the product orders.  Passing every polynomial of a
    family list gives a single set avoiding all of their configurations.
    """

    def __init__(self, families: Sequence[ConfigurationFamily], epsilon: Fraction, shift_budget: int = 21):
        epsilon = Fraction(epsilon)
        if not 0 < epsilon < 1:
            raise ConstructionError("epsilon must lie in (0, 1)")
        if not families:
            raise ConstructionError("merging needs at least one family")
        if any(f.kind in ("sumset", "product") for f in families):
            raise ConstructionError("only families on the naturals can be merged")
        self.epsilon = epsilon
        self.shift_budget = shift_budget
        self.folner = IntervalFolner()
        self.ambient = NATURALS
        self.name = "A[merged]"
        self.components = [Counterexample(f, epsilon / 2 ** (j + 1), shift_budget=shift_budget)
                           for j, f in enumerate(families)]
        inputs = [
            CoverInput(
                contains=ce.cover.contains,
                density=ce.epsilon,
                error=(lambda c: lambda K: min(Fraction(1), Fraction(1, max(1, c.cover.count_through(K)))))(ce),
                mask=ce.cover.mask,
                payload=j,
            )
            for j, ce in enumerate(self.components)
        ]
        self.outer = SubadditiveCover(inputs, self.folner)
        self.outer.materialize(len(inputs))

    def outer_cutoff(self, j: int) -> int:
        return self.outer.cutoff(j + 1)

    def contains(self, x) -> bool:
        return isinstance(x, (int, np.integer)) and x >= 1 and not self.outer.contains(x)

    def mask(self, values):
        values = np.asarray(values, dtype=np.int64)
        return (values >= 1) & ~self.outer.mask(values)

    def exceptional_region(self, j: int, i: int) -> int:
        return max(self.components[j].cutoff(i), self.outer_cutoff(j)) - 1

    def exceptional(self, j: int, i: int) -> tuple[int, bool]:
        return self.components[j].exceptional_through(i, self.exceptional_region(j, i))

    def finitary_bound(self, j: int, i: int) -> int:
        if i >= self.shift_budget:
            raise UncertifiedShift(f"shift position {i} is beyond the certified budget {self.shift_budget}")
        entry = self.components[j].entry(i)
        return bound_formula(entry.partition_index, self.exceptional(j, i)[0], entry.slack)

    def density(self, N_max: int, N_min: int = 1) -> DensityEstimate:
        return density_along(self, self.folner, N_max, N_min)


# -- builders -----------------------------------------------------------------


def build_counterexample(family: ConfigurationFamily, epsilon: Fraction, *, group: GroupDescriptor | None = None,
                         shift_budget: int = 21, k_max: int = 2):
    if family.kind == "product":
        return ProductCounterexample(epsilon, k_max=max(k_max, family.k), shift_budget=shift_budget)
    ce = Counterexample(family, epsilon, group=group, shift_budget=shift_budget)
    ce.cover.materialize(shift_budget)
    return ce


def straus_build(epsilon, shift_budget: int = 21) -> Counterexample:
    return build_counterexample(ConfigurationFamily("ip"), epsilon, shift_budget=shift_budget)


def sumset_build(k: int, group: GroupDescriptor, epsilon, shift_budget: int = 8) -> Counterexample:
    return build_counterexample(ConfigurationFamily("sumset", k), epsilon, group=group, shift_budget=shift_budget)


def sarkozy_build(poly: IntValuedPoly, epsilon, shift_budget: int = 21) -> Counterexample:
    return build_counterexample(ConfigurationFamily("poly-sum", poly=poly), epsilon, shift_budget=shift_budget)


def product_sum_build(epsilon, shift_budget: int = 11) -> Counterexample:
    return build_counterexample(ConfigurationFamily("product-sum"), epsilon, shift_budget=shift_budget)


def product_build(epsilon, k_max: int = 2, shift_budget: int = 24) -> ProductCounterexample:
    ce = ProductCounterexample(epsilon, k_max=k_max, shift_budget=shift_budget)
    for sub in ce.orders.values():
        sub.cover.materialize(shift_budget)
    return ce


def merged_build(families: Sequence[ConfigurationFamily], epsilon, shift_budget: int = 21) -> MergedCounterexample:
    ce = MergedCounterexample(families, epsilon, shift_budget=shift_budget)
    for sub in ce.components:
        sub.cover.materialize(shift_budget)
    return ce


def finitary_bounds(ce, t, order: int | None = None) -> int:
    """``M_t`` for a certified shift ``t``."""
    i = ce.position_of(t)
    if isinstance(ce, ProductCounterexample):
        return ce.finitary_bound(order or 2, i)
    return ce.finitary_bound(i)
