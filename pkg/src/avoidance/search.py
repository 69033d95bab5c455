"""Largest finite ``B`` inside a window whose configuration lands in ``A - t``.

Two engines do the work.  Families whose constraints are pairwise (2-sums,
2-products, polynomial sums) become a maximum-clique problem on a
compatibility graph, solved with a bitset branch and bound that colours
greedily for its bound.  Everything else (finite sums, k >= 3, product-sums)
runs a depth-first extension in increasing order that keeps the set ``V`` of
partial values: a candidate ``y`` can join ``B`` iff ``v + y + t`` lies in
``A`` for every ``v`` in ``V``.

Independent of the engines, ``relaxation_bound`` turns any partition of the
window into an admissible upper bound: inside a class ``C`` the injection
argument behind the finitary bounds shows ``|B cap C| <= c_C + slack`` where
``c_C`` counts the configuration values reachable inside ``C`` that land in
``A - t``.  This is what certifies windows far too large for exhaustive
search.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import groups
from .construction import SUM_Z, ConfigurationFamily, ProductCounterexample, UncertifiedShift
from .density import exponent_element
from .groups import BoxSubgroup, GroupDescriptor, GroupElement
from .numtheory import phi_factorize, phi_unfactorize

DEFAULT_WORK_BUDGET = 1_000_000
TABLE_LIMIT = 60_000_000
PAIR_LIMIT = 4_000_000
PRIMORIALS = (2, 6, 30, 210, 2310)


class SearchError(ValueError):
    pass


class _BudgetExceeded(Exception):
    pass


@dataclass
class SearchProblem:
    """``a`` is the ambient set, ``window`` the candidate pool for ``B``.

    ``group`` is ``None`` for integer ambients.  Product families take
    natural-number windows and rational shifts.
    """

    a: Any
    family: ConfigurationFamily
    t: Any
    window: Sequence
    group: GroupDescriptor | None = None
    mode: str = "exhaustive"
    partition: Any = None
    work_budget: int = DEFAULT_WORK_BUDGET
    coset_closed: bool | None = None

    def __post_init__(self):
        if self.mode not in ("exhaustive", "pruned"):
            raise SearchError(f"unknown search mode {self.mode!r}")
        if self.mode == "pruned" and self.partition is None:
            raise SearchError("pruned mode needs a partition")
        self.window = normalize_window(self.window, self.family, self.group)


@dataclass
class SearchReport:
    size: int
    witness: tuple
    upper_bound: int
    exhaustive: bool
    nodes: int
    bound_source: str

    def as_dict(self) -> dict:
        return {
            "size": self.size,
            "witness": [_jsonable(x) for x in self.witness],
            "upper_bound": self.upper_bound,
            "exhaustive": self.exhaustive,
            "nodes": self.nodes,
            "bound_source": self.bound_source,
        }


def _jsonable(x):
    if isinstance(x, GroupElement):
        return {str(i): v for i, v in x.support}
    if isinstance(x, Fraction):
        return str(x)
    return int(x)


def normalize_window(window, family: ConfigurationFamily, group: GroupDescriptor | None) -> tuple:
    items = list(dict.fromkeys(window))
    if group is None:
        if family.kind == "product" and any(int(x) < 1 for x in items):
            raise SearchError("product windows hold positive integers")
        return tuple(sorted(int(x) for x in items))
    return tuple(sorted(items, key=lambda x: (groups.box_level(x, group),
                                              groups.enumeration_key(x, groups.box_level(x, group)))))


# -- direct evaluation ----------------------------------------------------------


def configuration_values(family: ConfigurationFamily, B: Sequence, t, group: GroupDescriptor | None = None):
    """Every required value, shift included, by direct evaluation."""
    B = list(B)
    kind = family.kind
    if kind == "product":
        for combo in itertools.combinations(B, family.k):
            yield Fraction(t) * math.prod(combo)
        return
    if group is not None:
        r = 1 if kind == "ip" else family.k
        sizes = range(1, len(B) + 1) if kind == "ip" else [r]
        for size in sizes:
            for combo in itertools.combinations(B, size):
                acc = t
                for x in combo:
                    acc = groups.add(acc, x, group)
                yield acc
        return
    B = sorted(B)
    if kind == "ip":
        for size in range(1, len(B) + 1):
            for combo in itertools.combinations(B, size):
                yield sum(combo) + t
    elif kind == "sumset":
        for combo in itertools.combinations(B, family.k):
            yield sum(combo) + t
    elif kind == "poly-sum":
        for b1, b2 in itertools.combinations(B, 2):
            yield family.poly(b1) + b2 + t
    else:
        for b1, b2, b3 in itertools.combinations(B, 3):
            yield b1 * b2 + b3 + t


def check_witness(a, family: ConfigurationFamily, t, B: Sequence, group: GroupDescriptor | None = None) -> bool:
    return all(a.contains(v) for v in configuration_values(family, B, t, group))


# -- membership ---------------------------------------------------------------


class _IntOracle:
    """``v -> (v + t in A)`` on integers, tabulated over a value range."""

    def __init__(self, a, t: int, lo: int, hi: int):
        self.a, self.t = a, int(t)
        self.lo, self.hi = lo, hi
        self.table = None
        if hi - lo < TABLE_LIMIT:
            self.table = np.asarray(a.mask(np.arange(lo + self.t, hi + self.t + 1, dtype=np.int64)), dtype=bool)
        self._cache: dict[int, bool] = {}

    def __call__(self, v: int) -> bool:
        if self.table is not None and self.lo <= v <= self.hi:
            return bool(self.table[v - self.lo])
        r = self._cache.get(v)
        if r is None:
            r = self._cache[v] = bool(self.a.contains(v + self.t))
        return r

    def many(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.int64)
        if self.table is not None and values.size and values.min() >= self.lo and values.max() <= self.hi:
            return self.table[values - self.lo]
        return np.fromiter((self(int(v)) for v in values.ravel()), bool, values.size).reshape(values.shape)


class _GroupOracle:
    def __init__(self, contains: Callable[[GroupElement], bool], t: GroupElement, g: GroupDescriptor):
        self.contains, self.t, self.g = contains, t, g
        self._cache: dict[GroupElement, bool] = {}

    def __call__(self, v: GroupElement) -> bool:
        r = self._cache.get(v)
        if r is None:
            r = self._cache[v] = bool(self.contains(groups.add(v, self.t, self.g)))
        return r


@dataclass
class _Instance:
    """A problem in additive form: integers or group elements, shift folded into ``member``."""

    family: ConfigurationFamily
    elements: list
    member: Any
    group: GroupDescriptor | None
    to_original: Callable[[Any], Any] = lambda x: x

    @property
    def is_int(self) -> bool:
        return self.group is None

    def add(self, x, y):
        return x + y if self.group is None else groups.add(x, y, self.group)

    @property
    def zero(self):
        return 0 if self.group is None else groups.IDENTITY


def _value_range(family: ConfigurationFamily, W: Sequence[int]) -> tuple[int, int]:
    if not W:
        return 0, 0
    lo, hi = min(W), max(W)
    kind = family.kind
    if kind == "ip":
        return min(0, sum(x for x in W if x < 0)) + min(0, lo), sum(x for x in W if x > 0) + max(0, hi)
    if kind == "sumset":
        k = family.k
        return sum(sorted(W)[:k]) if len(W) >= k else lo * k, sum(sorted(W)[-k:]) if len(W) >= k else hi * k
    if kind == "poly-sum":
        pv = family.poly.values(np.asarray(W))
        return int(pv.min()) + lo, int(pv.max()) + hi
    prods = [lo * lo, lo * hi, hi * hi]
    return min(prods) + lo, max(prods) + hi


def _instance(p: SearchProblem) -> _Instance:
    fam = p.family
    if fam.kind == "product":
        a = p.a
        if p.group is not None:
            raise SearchError("product families live on the positive integers")
        if hasattr(a, "contains_exponents"):
            contains = a.contains_exponents
        else:
            def contains(v):
                q = phi_unfactorize(v)
                return q.denominator == 1 and a.contains(q.numerator)
        elems = [exponent_element(int(n)) for n in p.window]
        back = {e: n for e, n in zip(elems, p.window)}
        sumfam = ConfigurationFamily("sumset", fam.k)
        return _Instance(sumfam, elems, _GroupOracle(contains, phi_factorize(p.t), SUM_Z), SUM_Z, back.__getitem__)
    if p.group is not None:
        if fam.kind not in ("ip", "sumset"):
            raise SearchError(f"family {fam.kind} needs an integer ambient")
        return _Instance(fam, list(p.window), _GroupOracle(p.a.contains, p.t, p.group), p.group)
    lo, hi = _value_range(fam, p.window)
    return _Instance(fam, list(p.window), _IntOracle(p.a, p.t, lo, hi), None)


def _is_pair_family(fam: ConfigurationFamily) -> bool:
    return fam.kind == "poly-sum" or (fam.kind == "sumset" and fam.k == 2)


# -- pair families: value matrices and cliques -----------------------------------


def _pair_value_ids(inst: _Instance) -> tuple[np.ndarray, np.ndarray]:
    """``(ids, ok)``: ``ids[i, j]`` names the value of pair ``i < j`` (``-1`` on the diagonal),
    ``ok[id]`` says whether that value lands in ``A - t``."""
    W = inst.elements
    n = len(W)
    if inst.is_int:
        w = np.asarray(W, dtype=np.int64)
        base = inst.family.poly.values(w) if inst.family.kind == "poly-sum" else w
        vals = base[:, None] + w[None, :]
        vals = np.where(np.triu(np.ones((n, n), bool), 1), vals, vals.T)
        uniq, inverse = np.unique(vals, return_inverse=True)
        ids = inverse.reshape(n, n)
        ok = inst.member.many(uniq)
    else:
        index: dict = {}
        ids = np.full((n, n), -1, dtype=np.int64)
        for i in range(n):
            for j in range(i + 1, n):
                v = inst.add(W[i], W[j])
                ids[i, j] = ids[j, i] = index.setdefault(v, len(index))
        ok = np.zeros(len(index), dtype=bool)
        for v, k in index.items():
            ok[k] = inst.member(v)
    np.fill_diagonal(ids, -1)
    return ids, ok


def _bitsets(adj: np.ndarray) -> list[int]:
    out = []
    for row in adj:
        out.append(int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little"))
    return out


def _color_sort(P: int, adj: list[int]) -> tuple[list[int], list[int]]:
    order, colors = [], []
    color = 0
    U = P
    while U:
        color += 1
        Q = U
        while Q:
            low = Q & -Q
            v = low.bit_length() - 1
            Q &= ~adj[v] & ~low
            U &= ~low
            order.append(v)
            colors.append(color)
    return order, colors


def _max_clique(adj: list[int], n: int, budget: int) -> tuple[list[int], int, bool, int]:
    """``(clique, nodes, exhaustive, root colour bound)``."""
    full = (1 << n) - 1
    best: list[int] = []
    # greedy seed
    P = full
    while P:
        v = max(_bits(P), key=lambda u: bin(adj[u] & P).count("1"))
        best.append(v)
        P &= adj[v]
    best.sort()
    nodes = 0
    _, root_colors = _color_sort(full, adj)
    root_bound = root_colors[-1] if root_colors else 0

    def expand(R: list[int], P: int):
        nonlocal nodes, best
        nodes += 1
        if nodes > budget:
            raise _BudgetExceeded
        order, colors = _color_sort(P, adj)
        for idx in range(len(order) - 1, -1, -1):
            if len(R) + colors[idx] <= len(best):
                return
            v = order[idx]
            R.append(v)
            newP = P & adj[v]
            if newP:
                expand(R, newP)
            elif len(R) > len(best):
                best = sorted(R)
            R.pop()
            P &= ~(1 << v)

    try:
        if n:
            expand([], full)
        return best, nodes, True, root_bound
    except _BudgetExceeded:
        return best, nodes, False, root_bound


def _bits(P: int) -> Iterable[int]:
    while P:
        low = P & -P
        yield low.bit_length() - 1
        P ^= low


# -- general families: depth-first extension ----------------------------------------


class _ValueState:
    """Partial values ``V(B)`` for one family, updated when ``x`` joins ``B``."""

    def __init__(self, inst: _Instance):
        self.inst = inst
        kind = inst.family.kind
        self.kind = kind
        if kind == "ip":
            self.levels = None
            self.values = {inst.zero}
        elif kind == "sumset":
            k = inst.family.k
            self.levels = [{inst.zero}] + [set() for _ in range(k - 1)]
            self.values = self.levels[k - 1]
        else:
            self.B: list = []
            self.values = set()

    def extend(self, x):
        """New state after adding ``x`` and the values it created."""
        new = _ValueState.__new__(_ValueState)
        new.inst, new.kind = self.inst, self.kind
        inst = self.inst
        if self.kind == "ip":
            fresh = {inst.add(v, x) for v in self.values} - self.values
            new.levels = None
            new.values = self.values | fresh
        elif self.kind == "sumset":
            k = inst.family.k
            levels = [set(level) for level in self.levels]
            for j in range(k - 1, 0, -1):
                levels[j] |= {inst.add(s, x) for s in self.levels[j - 1]}
            fresh = levels[k - 1] - self.values
            new.levels = levels
            new.values = levels[k - 1]
        elif self.kind == "poly-sum":
            fresh = {inst.family.poly(x)} - self.values
            new.B = self.B + [x]
            new.values = self.values | fresh
        else:
            fresh = {b * x for b in self.B} - self.values
            new.B = self.B + [x]
            new.values = self.values | fresh
        return new, fresh

    def pair_ok(self, y, z) -> bool:
        """Necessary condition for ``y < z`` to join ``B`` together."""
        inst = self.inst
        if self.kind == "ip":
            return inst.member(inst.add(y, z))
        if self.kind == "sumset":
            k = inst.family.k
            return all(inst.member(inst.add(inst.add(s, y), z)) for s in self.levels[k - 2])
        if self.kind == "poly-sum":
            return inst.member(inst.family.poly(y) + z)
        return all(inst.member(b * y + z) for b in self.B)


def _filter(inst: _Instance, cands: list, fresh) -> list:
    if not fresh:
        return cands
    if inst.is_int and cands:
        c = np.asarray(cands, dtype=np.int64)
        f = np.fromiter(fresh, dtype=np.int64, count=len(fresh))
        keep = np.ones(len(c), dtype=bool)
        for chunk in range(0, len(f), 256):
            keep &= inst.member.many(f[chunk:chunk + 256, None] + c[None, :]).all(axis=0)
        return [x for x, k in zip(cands, keep) if k]
    return [y for y in cands if all(inst.member(inst.add(v, y)) for v in fresh)]


def _colour_bound(state: _ValueState, cands: list) -> int:
    if len(cands) > 48:
        return len(cands)
    n = len(cands)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if state.pair_ok(cands[i], cands[j]):
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    _, colors = _color_sort((1 << n) - 1, adj)
    return colors[-1] if colors else 0


def _dfs(inst: _Instance, budget: int) -> tuple[list, int, bool]:
    best: list = []
    nodes = 0
    root = _ValueState(inst)

    def expand(B: list, state: _ValueState, cands: list):
        nonlocal nodes, best
        nodes += 1
        if nodes > budget:
            raise _BudgetExceeded
        if len(B) > len(best):
            best = list(B)
        if len(B) + len(cands) <= len(best):
            return
        if len(B) + _colour_bound(state, cands) <= len(best):
            return
        for idx, x in enumerate(cands):
            if len(B) + len(cands) - idx <= len(best):
                return
            new_state, fresh = state.extend(x)
            rest = _filter(inst, cands[idx + 1:], fresh)
            B.append(x)
            expand(B, new_state, rest)
            B.pop()

    initial = _filter(inst, list(inst.elements), root.values) if inst.family.kind == "ip" else list(inst.elements)
    try:
        expand([], root, initial)
        return best, nodes, True
    except _BudgetExceeded:
        return best, nodes, False


# -- relaxation bounds ----------------------------------------------------------


def _int_partitions(W: Sequence[int]) -> list[int]:
    qs = set(range(1, 65)) | set(PRIMORIALS) | {2**e for e in range(13)}
    return sorted(q for q in qs if q <= max(2, len(W)))


def _ip_bound(inst: _Instance) -> tuple[int, str]:
    """``|B| <= q(c+1) - 1`` with ``c`` the multiples of ``q`` up to ``sum W`` in ``A - t``.

    Split ``B`` into ``c + 1`` blocks of ``q``; each block has a nonempty sub-sum
    divisible by ``q`` and the partial unions of these sub-sums are ``c + 1``
    distinct positive multiples of ``q``, all in ``FS(B)``.
    """
    W = inst.elements
    n = len(W)
    best, source = n, "window"
    if not inst.is_int or min(W) < 1:
        return best, source
    total = sum(W)
    qs = sorted(set(range(1, 65)) | {2**e for e in range(13)})
    for q in qs:
        if q > n:
            break
        multiples = np.arange(q, total + 1, q, dtype=np.int64)
        c = int(inst.member.many(multiples).sum()) if multiples.size else 0
        bound = q * (c + 1) - 1
        if bound < best:
            best, source = bound, f"block-pigeonhole q={q}"
    return best, source


def _class_bound(sizes: Sequence[int], counts: Sequence[int], slack: int) -> int:
    return sum(min(s, c + slack) for s, c in zip(sizes, counts))


def relaxation_bound(p: SearchProblem, inst: _Instance | None = None, pair_data=None) -> tuple[int, str]:
    """Admissible upper bound on the answer from pigeonhole over partitions of the window."""
    inst = inst or _instance(p)
    W = inst.elements
    n = len(W)
    fam = inst.family
    best, source = n, "window"
    if n == 0:
        return 0, "window"
    if fam.kind == "ip":
        return _ip_bound(inst)
    slack = {"sumset": fam.k - 1, "poly-sum": 1, "product-sum": 2}[fam.kind]
    if _is_pair_family(fam) and n * n <= PAIR_LIMIT:
        ids, ok = pair_data if pair_data is not None else _pair_value_ids(inst)
        for label, classes in _partitions(inst):
            counts = []
            for idx in classes:
                sub = ids[np.ix_(idx, idx)]
                vals = np.unique(sub[sub >= 0])
                counts.append(int(ok[vals].sum()))
            bound = _class_bound([len(c) for c in classes], counts, slack)
            if bound < best:
                best, source = bound, f"partition {label}"
        return best, source
    if inst.is_int:
        w = np.asarray(W, dtype=np.int64)
        for q in _int_partitions(W):
            sizes, counts = [], []
            for r in range(q):
                cls = w[w % q == r]
                if not len(cls):
                    continue
                sizes.append(len(cls))
                counts.append(_residue_count(inst, cls, q, r))
            bound = _class_bound(sizes, counts, slack)
            if bound < best:
                best, source = bound, f"partition mod {q}"
        return best, source
    for label, classes in _partitions(inst):
        counts = []
        for idx in classes:
            counts.append(_group_sum_count(inst, [W[i] for i in idx]))
        bound = _class_bound([len(c) for c in classes], counts, slack)
        if bound < best:
            best, source = bound, f"partition {label}"
    return best, source


def _residue_count(inst: _Instance, cls: np.ndarray, q: int, r: int) -> int:
    """Members of ``A - t`` among a superset of the class's configuration values."""
    fam = inst.family
    cls = np.sort(cls)
    if fam.kind == "sumset":
        k = fam.k
        if len(cls) < k:
            return 0
        lo, hi, res = int(cls[:k].sum()), int(cls[-k:].sum()), (k * r) % q
    elif fam.kind == "product-sum":
        if len(cls) < 3:
            return 0
        a, b = int(cls[0]), int(cls[-1])
        prods = [a * a, a * b, b * b]
        lo, hi, res = min(prods) + a, max(prods) + b, (r * r + r) % q
    else:
        if len(cls) < 2:
            return 0
        pv = fam.poly.values(cls)
        lo, hi = int(pv.min()) + int(cls[0]), int(pv.max()) + int(cls[-1])
        start = lo
        return int(inst.member.many(np.arange(start, hi + 1, dtype=np.int64)).sum())
    start = lo + ((res - lo) % q)
    values = np.arange(start, hi + 1, q, dtype=np.int64)
    return int(inst.member.many(values).sum()) if values.size else 0


def _group_sum_count(inst: _Instance, cls: list) -> int:
    """Members of ``A - t`` among sums (with repetition) of ``k`` elements of the class."""
    k = inst.family.k
    if len(cls) < k:
        return 0
    level = set(cls)
    for _ in range(k - 1):
        level = {inst.add(s, x) for s in level for x in cls}
    return sum(1 for v in level if inst.member(v))


def _partitions(inst: _Instance):
    W = inst.elements
    n = len(W)
    if inst.is_int:
        w = np.asarray(W, dtype=np.int64)
        for q in _int_partitions(W):
            labels = w % q
            yield f"mod {q}", [np.flatnonzero(labels == r) for r in np.unique(labels)]
        return
    g = inst.group
    k = inst.family.k
    top = max((x.max_coordinate for x in W), default=-1) + 1
    if g.rank is not None:
        top = min(top, g.rank)
    for j in range(top + 1):
        s = groups.lambda_j(j, k, g)
        buckets: dict = {}
        for i, x in enumerate(W):
            buckets.setdefault(groups.coset_of(x, s, g), []).append(i)
        yield f"lambda_{j}", [np.asarray(v, dtype=np.int64) for _, v in sorted(buckets.items())]


# -- entry points ------------------------------------------------------------------


def _search(p: SearchProblem) -> SearchReport:
    inst = _instance(p)
    W = inst.elements
    n = len(W)
    if n == 0:
        return SearchReport(0, (), 0, True, 0, "window")
    fam = inst.family
    if _is_pair_family(fam) and n * n <= PAIR_LIMIT:
        pair_data = _pair_value_ids(inst)
        ids, ok = pair_data
        adj = ok[np.maximum(ids, 0)] & (ids >= 0)
        clique, nodes, exhaustive, colour = _max_clique(_bitsets(adj), n, p.work_budget)
        witness = [W[i] for i in clique]
        bound, source = (len(witness), "exhaustive") if exhaustive else min(
            (colour, "colouring"), relaxation_bound(p, inst, pair_data))
    else:
        witness, nodes, exhaustive = _dfs(inst, p.work_budget)
        bound, source = (len(witness), "exhaustive") if exhaustive else relaxation_bound(p, inst)
    witness = tuple(inst.to_original(x) for x in witness)
    return SearchReport(len(witness), witness, max(bound, len(witness)), exhaustive, nodes, source)


def max_config_subset(p: SearchProblem) -> SearchReport:
    if p.mode == "exhaustive":
        return _search(p)
    subs = coset_prune(p, p.partition)
    reports = [_search(s) for s in subs]
    closed = all(s.coset_closed for s in subs)
    best = max(reports, key=lambda r: (r.size, [-_order_key(x) for x in r.witness]), default=None)
    nodes = sum(r.nodes for r in reports)
    if best is None:
        return SearchReport(0, (), 0, True, nodes, "window")
    exhaustive = closed and all(r.exhaustive for r in reports)
    if exhaustive:
        return SearchReport(best.size, best.witness, best.size, True, nodes, "exhaustive (coset-closed)")
    bound, source = relaxation_bound(SearchProblem(p.a, p.family, p.t, p.window, p.group, work_budget=p.work_budget))
    return SearchReport(best.size, best.witness, max(bound, best.size), False, nodes, source)


def _order_key(x):
    return x if isinstance(x, int) else 0


def coset_prune(p: SearchProblem, partition) -> list[SearchProblem]:
    """Split the window by coset of ``partition`` (a modulus or a box subgroup).

    Each subproblem records whether the split keeps exhaustiveness: true for a
    single class, or when every pair across classes is already incompatible.
    """
    W = list(p.window)
    if p.group is None and p.family.kind != "product":
        q = int(partition)
        if q < 1:
            raise SearchError("partition modulus must be positive")
        key = lambda x: x % q  # noqa: E731
    else:
        g = p.group if p.group is not None else SUM_Z
        if not isinstance(partition, BoxSubgroup):
            raise SearchError("group windows need a box subgroup partition")
        if p.family.kind == "product":
            key = lambda x: groups.coset_of(exponent_element(x), partition, g)  # noqa: E731
        else:
            key = lambda x: groups.coset_of(x, partition, g)  # noqa: E731
    buckets: dict = {}
    for x in W:
        buckets.setdefault(key(x), []).append(x)
    classes = [buckets[c] for c in sorted(buckets)]
    closed = len(classes) <= 1 or _cross_incompatible(p, classes)
    return [SearchProblem(p.a, p.family, p.t, cls, p.group, work_budget=p.work_budget, coset_closed=closed)
            for cls in classes]


def _cross_incompatible(p: SearchProblem, classes: list[list]) -> bool:
    fam = p.family
    if fam.kind not in ("ip", "poly-sum") and not (fam.kind in ("sumset", "product") and fam.k == 2):
        return False
    for c1, c2 in itertools.combinations(classes, 2):
        for x in c1:
            for y in c2:
                pair = sorted((x, y)) if p.group is None else [x, y]
                if fam.kind == "ip":
                    if all(p.a.contains(v) for v in configuration_values(fam, pair, p.t, p.group)):
                        return False
                elif check_witness(p.a, fam, p.t, pair, p.group):
                    return False
    return True


# -- verification against finitary bounds ------------------------------------------


@dataclass
class VerificationRow:
    shift: Any
    position: int
    order: int | None
    bound: int
    size: int
    upper_bound: int
    exhaustive: bool
    bound_source: str
    status: str

    def as_dict(self) -> dict:
        return {
            "shift": _jsonable(self.shift),
            "position": self.position,
            "order": self.order,
            "M": self.bound,
            "size": self.size,
            "upper_bound": self.upper_bound,
            "exhaustive": self.exhaustive,
            "bound_source": self.bound_source,
            "status": self.status,
        }


@dataclass
class VerificationTable:
    rows: list[VerificationRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.rows)

    @property
    def failed(self) -> bool:
        return any(r.status == "fail" for r in self.rows)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "rows": [r.as_dict() for r in self.rows]}


def _status(size: int, upper: int, M: int) -> str:
    if size > M:
        return "fail"
    if upper <= M:
        return "pass"
    return "inconclusive"


def verify_shift(ce, t, window, *, order: int | None = None, bound: int | None = None,
                 work_budget: int = DEFAULT_WORK_BUDGET) -> VerificationRow:
    """Compare the oracle on one shift with ``M_t`` (``bound`` overrides the computed value)."""
    position = ce.position_of(t)
    if isinstance(ce, ProductCounterexample):
        order = order or 2
        M = ce.finitary_bound(order, position) if bound is None else bound
        fam = ConfigurationFamily("product", order)
        group = None
    else:
        M = ce.finitary_bound(position) if bound is None else bound
        fam = ce.family
        group = ce.group
    window = list(window)
    if len(window) <= M:
        # B lies in the window, so a short search for the reported size is enough
        report = max_config_subset(SearchProblem(ce, fam, t, window, group, work_budget=min(work_budget, 5000)))
        upper = min(report.upper_bound, len(window))
        source = report.bound_source if report.exhaustive else "window"
        return VerificationRow(t, position, order, M, report.size, upper, report.exhaustive, source,
                               _status(report.size, upper, M))
    report = max_config_subset(SearchProblem(ce, fam, t, window, group, work_budget=work_budget))
    return VerificationRow(t, position, order, M, report.size, report.upper_bound, report.exhaustive,
                           report.bound_source, _status(report.size, report.upper_bound, M))


def verify_against_bounds(ce, shifts: Iterable, window: Sequence | Callable[[Any], Sequence], *,
                          orders: Sequence[int] | None = None, bounds: dict | None = None,
                          work_budget: int = DEFAULT_WORK_BUDGET) -> VerificationTable:
    """Run the oracle on every shift; ``window`` is a fixed pool or a rule ``t -> pool``.

    ``bounds`` maps ``(position, order)`` to a stated ``M_t`` (e.g. from a
    certificate) that replaces the recomputed one.
    """
    table = VerificationTable()
    is_product = isinstance(ce, ProductCounterexample)
    for t in shifts:
        W = window(t) if callable(window) else window
        for order in (orders or (range(2, ce.k_max + 1) if is_product else [None])):
            position = ce.position_of(t)
            if position >= ce.shift_budget:
                raise UncertifiedShift(f"shift {t} (position {position}) is outside the certified range")
            stated = None if bounds is None else bounds.get((position, order))
            table.rows.append(verify_shift(ce, t, W, order=order, bound=stated, work_budget=work_budget))
    return table
