"""Reducts of the generic n-order structure as triples (V_l, V_c, G).

V_l lists the orders kept as linear orders, V_c those kept as circular
orders, and G is a subgroup of the signed wreath product acting on the
points ``+s`` (= 2s) and ``-s`` (= 2s+1) of the kept slots: linear slots
come first, then circular ones, and G never mixes the two blocks.  An
element sending ``+s`` to ``-t`` moves slot s onto slot t reversed.

A reduct is fingerprinted on a finite approximation by the partition of
all ordered 4-tuples into G-orbits of their kept order patterns.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .fraisse import GenericApprox
from .structures import FinStruct, RelSym, Signature, _circular_from_strict, order_ranks

ORDER_GUARD = 4
SUBGROUP_GUARD = 10_000
REDUCT_GUARD = 3

Perm = tuple[int, ...]


class ReductError(ValueError):
    pass


def _compose(p: Perm, q: Perm) -> Perm:
    """p after q."""
    return tuple(p[i] for i in q)


def _closure(gens: Iterable[Perm], degree: int) -> frozenset[Perm]:
    ident = tuple(range(degree))
    elems = {ident}
    frontier = [ident]
    gens = [tuple(g) for g in gens]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = _compose(g, x)
                if y not in elems:
                    elems.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(elems)


@dataclass(frozen=True)
class PermGroup:
    degree: int
    generators: tuple[Perm, ...]
    elements: frozenset[Perm] = field(compare=False, repr=False, default=frozenset())

    def __post_init__(self):
        if not self.elements:
            object.__setattr__(self, "elements", _closure(self.generators, self.degree))

    @property
    def order(self) -> int:
        return len(self.elements)

    def __eq__(self, other):
        return isinstance(other, PermGroup) and self.degree == other.degree and self.elements == other.elements

    def __hash__(self):
        return hash((self.degree, self.elements))

    def __le__(self, other: "PermGroup") -> bool:
        return self.elements <= other.elements

    def is_abelian(self) -> bool:
        return all(_compose(a, b) == _compose(b, a) for a, b in itertools.combinations(self.generators, 2))

    def element_orders(self) -> list[int]:
        ident = tuple(range(self.degree))
        out = []
        for g in self.elements:
            n, x = 1, g
            while x != ident:
                x = _compose(g, x)
                n += 1
            out.append(n)
        return sorted(out)

    def cycles(self) -> list[list[list[int]]]:
        """Generators in cycle notation (fixed points omitted)."""
        out = []
        for g in self.generators:
            seen, cyc = set(), []
            for x in range(self.degree):
                if x in seen or g[x] == x:
                    continue
                c, y = [], x
                while y not in seen:
                    seen.add(y)
                    c.append(y)
                    y = g[y]
                cyc.append(c)
            out.append(cyc)
        return out


def wreath_product(m_l: int, m_c: int) -> PermGroup:
    """Signed permutations of m_l linear and m_c circular slots, blocks kept apart."""
    m = m_l + m_c
    if m_l < 0 or m_c < 0 or m > ORDER_GUARD:
        raise ReductError(f"wreath product limited to m_l + m_c <= {ORDER_GUARD}")
    deg = 2 * m
    gens = []
    for s in range(m):
        g = list(range(deg))
        g[2 * s], g[2 * s + 1] = 2 * s + 1, 2 * s
        gens.append(tuple(g))
    for lo, hi in ((0, m_l), (m_l, m)):
        for s in range(lo, hi - 1):
            g = list(range(deg))
            g[2 * s], g[2 * s + 2] = 2 * s + 2, 2 * s
            g[2 * s + 1], g[2 * s + 3] = 2 * s + 3, 2 * s + 1
            gens.append(tuple(g))
    return PermGroup(deg, tuple(gens))


def enumerate_subgroups(g: PermGroup) -> list[PermGroup]:
    """Every subgroup of g, as joins of cyclic subgroups, sorted by order then elements."""
    if g.order > SUBGROUP_GUARD:
        raise ReductError(f"group of order {g.order} is above the subgroup guard")
    cyclic: dict[frozenset, Perm] = {}
    for x in sorted(g.elements):
        cyclic.setdefault(_closure([x], g.degree), x)
    found: dict[frozenset, tuple[Perm, ...]] = {C: (x,) for C, x in cyclic.items()}
    frontier = list(found)
    while frontier:
        nxt = []
        for H in frontier:
            for C, x in cyclic.items():
                if x in H:
                    continue
                J = _closure(found[H] + (x,), g.degree)
                if J not in found:
                    found[J] = found[H] + (x,)
                    nxt.append(J)
        frontier = nxt
    groups = [PermGroup(g.degree, gens, e) for e, gens in found.items()]
    return sorted(groups, key=lambda h: (h.order, sorted(h.elements)))


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class ReductDescriptor:
    n: int
    V_l: tuple[int, ...]  # 1-based order indices
    V_c: tuple[int, ...]
    G: PermGroup

    @property
    def slots(self) -> tuple[int, ...]:
        return self.V_l + self.V_c

    def signed_action(self, g: Perm) -> list[tuple[int, int]]:
        """Per slot s: (image slot, 1 if reversed)."""
        return [(g[2 * s] // 2, g[2 * s] % 2) for s in range(len(self.slots))]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "V_l": list(self.V_l),
            "V_c": list(self.V_c),
            "order": self.G.order,
            "generators": self.G.cycles(),
        }


def enumerate_reducts(n: int) -> tuple[list[ReductDescriptor], int]:
    """All triples over ordered disjoint pairs of subsets of {1..n}."""
    if n < 0 or n > REDUCT_GUARD:
        raise ReductError(f"reduct enumeration limited to n <= {REDUCT_GUARD}")
    idx = list(range(1, n + 1))
    subgroup_cache: dict[tuple[int, int], list[PermGroup]] = {}
    out = []
    for labels in itertools.product((0, 1, 2), repeat=n):  # 0 dropped, 1 linear, 2 circular
        V_l = tuple(i for i, lab in zip(idx, labels) if lab == 1)
        V_c = tuple(i for i, lab in zip(idx, labels) if lab == 2)
        key = (len(V_l), len(V_c))
        if key not in subgroup_cache:
            subgroup_cache[key] = enumerate_subgroups(wreath_product(*key))
        out.extend(ReductDescriptor(n, V_l, V_c, H) for H in subgroup_cache[key])
    out.sort(key=lambda d: (len(d.V_l) + len(d.V_c), d.V_l, d.V_c, d.G.order, sorted(d.G.elements)))
    return out, len(out)


def trivial_group(m: int) -> PermGroup:
    return PermGroup(2 * m, ())


# ---------------------------------------------------------------------------
# realization on a finite approximation

_PAIR_BASE = 3


def _pairs(arity):
    return list(itertools.combinations(range(arity), 2))


def _tuple_grid(N: int, arity: int) -> np.ndarray:
    return np.stack(np.unravel_index(np.arange(N ** arity), (N,) * arity), axis=1)


def _linear_code(r: np.ndarray, arity: int) -> np.ndarray:
    """Base-3 code of the pairwise comparisons of the rank tuples ``r`` (shape (T, arity))."""
    code = np.zeros(r.shape[0], dtype=np.int64)
    for p, q in _pairs(arity):
        code = code * _PAIR_BASE + (np.sign(r[:, p] - r[:, q]) + 1)
    return code


def _circular_code(r: np.ndarray, N: int, arity: int) -> np.ndarray:
    """Linear code minimized over cutting the circle at each entry of the tuple."""
    return np.min(np.stack([_linear_code((r - r[:, [c]]) % N, arity) for c in range(arity)]), axis=0)


def _equality_code(tuples: np.ndarray, arity: int) -> np.ndarray:
    code = np.zeros(tuples.shape[0], dtype=np.int64)
    for p, q in _pairs(arity):
        code = code * 2 + (tuples[:, p] == tuples[:, q])
    return code


def _slot_codes(d: ReductDescriptor, s: FinStruct, tuples: np.ndarray, arity: int) -> list[tuple[np.ndarray, np.ndarray]]:
    N = s.size
    out = []
    for pos, i in enumerate(d.slots):
        rank = order_ranks(s.tables[f"le{i - 1}"]).astype(np.int64)
        r = rank[tuples]
        if pos < len(d.V_l):
            out.append((_linear_code(r, arity), _linear_code(-r, arity)))
        else:
            out.append((_circular_code(r, N, arity), _circular_code((N - 1 - r), N, arity)))
    return out


def _orbit_keys(d: ReductDescriptor, s: FinStruct, arity: int) -> tuple[np.ndarray, np.ndarray]:
    tuples = _tuple_grid(s.size, arity)
    codes = _slot_codes(d, s, tuples, arity)
    base = _PAIR_BASE ** len(_pairs(arity))
    eq = _equality_code(tuples, arity)
    best = None
    for g in sorted(d.G.elements):
        key = eq.copy()
        placed = [None] * len(codes)
        for slot, (img, flip) in enumerate(d.signed_action(g)):
            placed[img] = codes[slot][flip]
        for c in placed:
            key = key * base + c
        best = key if best is None else np.minimum(best, key)
    return tuples, best


def _first_occurrence_labels(keys: np.ndarray) -> np.ndarray:
    _, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    return rank[inv.reshape(-1)]


@dataclass
class RealizedReduct:
    descriptor: ReductDescriptor
    structure: FinStruct  # orbit relations on triples
    labels: np.ndarray  # class of every ordered 4-tuple, numbered by first occurrence
    census: int
    digest: str

    def same_reduct(self, other: "RealizedReduct") -> bool:
        return np.array_equal(self.labels, other.labels)

    def coarsens(self, other: "RealizedReduct") -> bool:
        """Every class of self is a union of classes of other."""
        joint = np.unique(other.labels * (self.census + 1) + self.labels)
        return len(joint) == other.census

    def to_json(self) -> dict:
        return {"descriptor": self.descriptor.to_json(), "census": self.census, "hash": self.digest}


def realize_reduct(d: ReductDescriptor, approx: GenericApprox | FinStruct, arity: int = 4) -> RealizedReduct:
    """Orbit partition of ``arity``-tuples plus the structure of triple-orbit relations."""
    s = approx.struct if isinstance(approx, GenericApprox) else approx
    have = sum(1 for r in s.sig.relations if r.kind == "linear-order")
    if have != d.n or any(f"le{i}" not in s.tables for i in range(d.n)):
        raise ReductError(f"descriptor needs {d.n} orders le0..le{d.n - 1}, structure has {have}")
    _, keys = _orbit_keys(d, s, arity)
    labels = _first_occurrence_labels(keys)
    census = int(labels.max()) + 1 if labels.size else 0
    digest = hashlib.sha256(labels.astype(np.int64).tobytes()).hexdigest()[:16]
    return RealizedReduct(d, orbit_structure(d, s), labels, census, digest)


def orbit_structure(d: ReductDescriptor, s: FinStruct) -> FinStruct:
    """One ternary relation per orbit of triples of distinct points: the G-invariant relations they generate."""
    N = s.size
    tuples, keys = _orbit_keys(d, s, 3)
    distinct = (tuples[:, 0] != tuples[:, 1]) & (tuples[:, 1] != tuples[:, 2]) & (tuples[:, 0] != tuples[:, 2])
    tables = {}
    rels = []
    for j, k in enumerate(np.unique(keys[distinct])):
        t = np.zeros(N ** 3, dtype=bool)
        t[distinct & (keys == k)] = True
        name = f"O{j}"
        rels.append(RelSym(name, 3, "generic"))
        tables[name] = t.reshape(N, N, N)
    return FinStruct(Signature(tuple(rels)), N, tables)


def kept_structure(d: ReductDescriptor, s: FinStruct) -> FinStruct:
    """The kept orders without the group: le_i for linear slots, C_i for circular ones."""
    rels, tables = [], {}
    for i in d.V_l:
        rels.append(RelSym(f"le{i - 1}", 2, "linear-order"))
        tables[f"le{i - 1}"] = s.tables[f"le{i - 1}"]
    for i in d.V_c:
        rels.append(RelSym(f"C{i - 1}", 3, "circular-order"))
        tables[f"C{i - 1}"] = _circular_from_strict(s.tables[f"le{i - 1}"])
    return FinStruct(Signature(tuple(rels)), s.size, tables)


def distinguish(descriptors: Sequence[ReductDescriptor], approx, arity: int = 4) -> dict:
    """Realize every descriptor and report whether all fingerprints differ."""
    real = [realize_reduct(d, approx, arity) for d in descriptors]
    groups: dict[bytes, list[int]] = {}
    for i, r in enumerate(real):
        groups.setdefault(r.labels.tobytes(), []).append(i)
    clashes = [g for g in groups.values() if len(g) > 1]
    return {"count": len(real), "distinct": len(groups), "all-distinct": not clashes, "clashes": clashes, "realized": real}


def group_counts(n: int) -> dict[tuple[int, int], int]:
    """Number of subgroups for each (m_l, m_c) with m_l + m_c <= n."""
    return {(a, b): len(enumerate_subgroups(wreath_product(a, b))) for a in range(n + 1) for b in range(n + 1 - a)}


def expected_total(n: int) -> int:
    """Sum over labelings of {1..n} by dropped/linear/circular of the subgroup counts."""
    counts = group_counts(n)
    total = 0
    for a in range(n + 1):
        for b in range(n + 1 - a):
            total += math.comb(n, a) * math.comb(n - a, b) * counts[a, b]
    return total
