"""Approximate countable subadditivity of upper density.

Given sets ``A_1, A_2, ...`` with densities ``delta_n`` and error functions
``eps(n, K) >= |A_n cap Phi_K|/|Phi_K| - delta_n`` (non-increasing in ``K``),
choose cutoffs ``k_1 = 1 < k_2 < ...`` with

    sum_{j <= n} eps(j, K) <= 1/n   for every K >= k_n,

and set ``S = union_n (A_n minus Phi_{k_n - 1})``.  Then every ``A_n minus S``
lies inside ``Phi_{k_n - 1}`` and the upper density of ``S`` is at most
``sum delta_n``.  Since the cutoffs increase strictly, an element of level
``L`` (least ``N`` with ``x`` in ``Phi_N``) can only be caught by the finitely
many ``A_n`` with ``k_n <= L``, which makes membership in ``S`` decidable.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .density import FolnerSequence, IntervalFolner, LazySet


class CoverError(RuntimeError):
    def __init__(self, message, n: int):
        super().__init__(message)
        self.n = n


@dataclass
class CoverInput:
    """One set ``A_n`` with its certified density data.

    ``error_coefficient`` marks the common shape ``eps(K) = min(1, c/K)``,
    which lets cutoffs be found from prefix sums.
    """

    contains: Callable[[Any], bool]
    density: Fraction
    error: Callable[[int], Fraction]
    mask: Callable[[np.ndarray], np.ndarray] | None = None
    error_coefficient: Fraction | None = None
    payload: Any = None


def inverse_linear_error(c: Fraction) -> Callable[[int], Fraction]:
    c = Fraction(c)
    return lambda K: min(Fraction(1), c / K)


class SubadditiveCover:
    """Lazily materialised cover ``S`` of a (possibly infinite) input sequence.

    ``source(i)`` returns the ``i``-th input (0-based) or ``None`` past the end
    of a finite family.
    """

    def __init__(self, source: Callable[[int], CoverInput | None] | Sequence[CoverInput],
                 folner: FolnerSequence, *, density_total: Fraction | None = None,
                 search_limit: int = 10**400):
        if not callable(source):
            items = list(source)
            source = lambda i: items[i] if i < len(items) else None  # noqa: E731
            if density_total is None:
                density_total = sum((x.density for x in items), Fraction(0))
        self._source = source
        self.folner = folner
        self.search_limit = search_limit
        self.trivial = density_total is not None and density_total >= 1
        self.inputs: list[CoverInput] = []
        self.cutoffs: list[int] = []
        self._coef_prefix: list[Fraction] = []
        self._coef_max: list[Fraction] = []
        self._exhausted = False

    # -- construction ---------------------------------------------------------

    def _error_sum(self, n: int, K: int) -> Fraction:
        """``sum_{j <= n} eps(j, K)`` over the first ``n`` inputs."""
        if all(x.error_coefficient is not None for x in self.inputs[:n]) and K >= self._coef_max[n - 1]:
            return self._coef_prefix[n - 1] / K
        return sum((x.error(K) for x in self.inputs[:n]), Fraction(0))

    def _next_cutoff(self, n: int) -> int:
        if n == 1:
            return 1
        bound = Fraction(1, n)
        lo = self.cutoffs[-1]
        K = lo + 1
        if self._error_sum(n, K) <= bound:
            return K
        step = max(K, 2)
        hi = K + step
        while self._error_sum(n, hi) > bound:
            lo = hi
            step *= 2
            hi = K + step
            if hi > self.search_limit:
                raise CoverError(f"error functions of the first {n} inputs never drop below 1/{n}", n)
        # first K in (lo, hi] meeting the bound
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._error_sum(n, mid) <= bound:
                hi = mid
            else:
                lo = mid
        return hi

    def _extend(self) -> bool:
        if self._exhausted:
            return False
        item = self._source(len(self.inputs))
        if item is None:
            self._exhausted = True
            return False
        self.inputs.append(item)
        c = item.error_coefficient
        prev_sum = self._coef_prefix[-1] if self._coef_prefix else Fraction(0)
        prev_max = self._coef_max[-1] if self._coef_max else Fraction(0)
        if c is not None:
            self._coef_prefix.append(prev_sum + c)
            self._coef_max.append(max(prev_max, c))
        else:
            self._coef_prefix.append(prev_sum)
            self._coef_max.append(prev_max)
        self.cutoffs.append(self._next_cutoff(len(self.inputs)))
        return True

    def materialize(self, count: int) -> int:
        """Make sure the first ``count`` inputs have cutoffs; returns how many exist."""
        while len(self.inputs) < count and self._extend():
            pass
        return len(self.inputs)

    def cutoff(self, n: int) -> int:
        """``k_n`` (1-based ``n``)."""
        if self.materialize(n) < n:
            raise IndexError(f"cover has only {len(self.inputs)} inputs")
        return self.cutoffs[n - 1]

    def input(self, n: int) -> CoverInput:
        self.cutoff(n)
        return self.inputs[n - 1]

    def count_through(self, K: int) -> int:
        """``n_K = max{n : k_n <= K}``."""
        while (not self._exhausted) and (not self.cutoffs or self.cutoffs[-1] <= K):
            self._extend()
        return bisect.bisect_right(self.cutoffs, K)

    # -- queries --------------------------------------------------------------

    def contains(self, x) -> bool:
        if self.trivial:
            return True
        level = self.folner.level(x)
        if level is None:
            return False
        for item in self.inputs[: self.count_through(level)]:
            if item.contains(x):
                return True
        return False

    def mask(self, values: np.ndarray) -> np.ndarray:
        """Vectorised membership for integer ambients with ``level(x) = x``."""
        values = np.asarray(values, dtype=np.int64)
        if self.trivial:
            return np.ones(values.shape, dtype=bool)
        out = np.zeros(values.shape, dtype=bool)
        if values.size == 0:
            return out
        top = int(values.max())
        for item, k in zip(self.inputs[: self.count_through(top)], self.cutoffs):
            live = values >= k
            if not live.any():
                continue
            if item.mask is not None:
                out |= live & item.mask(values)
            else:
                out |= live & np.fromiter((item.contains(int(v)) for v in values), bool, len(values))
        return out

    # -- certificate checks ---------------------------------------------------

    def inequality_at_cutoff(self, n: int) -> tuple[Fraction, Fraction]:
        """``(sum_{j<=n} eps(j, k_n), 1/n)``."""
        return self._error_sum(n, self.cutoff(n)), Fraction(1, n)

    def density_bound(self, K: int) -> Fraction:
        """Certified bound ``sum_{j <= n_K} (delta_j + eps(j, K))`` on ``|S cap Phi_K|/|Phi_K|``."""
        n = self.count_through(K)
        if n == 0:
            return Fraction(0)
        return sum((x.density for x in self.inputs[:n]), Fraction(0)) + self._error_sum(n, K)

    def loose_density_bound(self, K: int) -> Fraction:
        """``sum_{j <= n_K} delta_j + 1/n_K``."""
        n = self.count_through(K)
        if n == 0:
            return Fraction(0)
        return sum((x.density for x in self.inputs[:n]), Fraction(0)) + Fraction(1, n)


class CoverSet(LazySet):
    """The cover ``S`` as a lazy set."""

    def __init__(self, cover: SubadditiveCover, name: str = "S"):
        self.cover = cover
        self.ambient = cover.folner.ambient
        self.name = name

    def contains(self, x):
        return self.cover.contains(x)

    def mask(self, values):
        if isinstance(self.cover.folner, IntervalFolner):
            return self.cover.mask(values)
        return super().mask(values)


def subadditive_cover(sets: Sequence[CoverInput], folner: FolnerSequence) -> SubadditiveCover:
    """Cover of a finite family; the lazy constructor handles infinite ones."""
    cover = SubadditiveCover(list(sets), folner)
    cover.materialize(len(sets))
    return cover
