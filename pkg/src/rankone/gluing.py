"""Glue finite order fragments along end/initial-segment identifications.

Fragments are finite chains ``0 < 1 < ... < size-1``.  An overlap
``{a, b, aFrom, bTo, len}`` identifies ``a[aFrom + t]`` with
``b[bTo - len + 1 + t]`` for ``t < len``; it must identify the last ``len``
elements of ``a`` with the first ``len`` elements of ``b``.

After union-find over the identifications, ``X <| Y`` holds when the shared
classes of X and Y form a proper end segment of X and a proper initial
segment of Y.  Paths are ``<|``-chains of fragments; a path runs from the
first class of its first fragment to the last class of its last fragment.
A closed path additionally has its last fragment ``<|`` its first one, and a
component is circular exactly when it carries a closed simple path.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .structures import _circular_from_strict, is_circular_order, order_from_sequence


class GluingError(ValueError):
    pass


@dataclass(frozen=True)
class Overlap:
    a: int
    b: int
    a_from: int
    b_to: int
    length: int


@dataclass
class IntertwiningSpec:
    sizes: list[int]
    overlaps: list[Overlap] = field(default_factory=list)
    ids: list[Any] | None = None

    def __post_init__(self):
        if self.ids is None:
            self.ids = list(range(len(self.sizes)))
        for s in self.sizes:
            if s < 1:
                raise GluingError("fragments must be non-empty")

    @classmethod
    def simple(cls, sizes: Sequence[int], links: Sequence[tuple[int, int, int]]) -> "IntertwiningSpec":
        """Spec from ``(a, b, len)`` triples gluing the end of a to the start of b."""
        ovs = [Overlap(a, b, sizes[a] - L, L - 1, L) for a, b, L in links]
        return cls(list(sizes), ovs)

    @classmethod
    def from_json(cls, d) -> "IntertwiningSpec":
        frags = d.get("fragments", [])
        ids = [f.get("id", i) for i, f in enumerate(frags)]
        pos = {fid: i for i, fid in enumerate(ids)}
        if len(pos) != len(ids):
            raise GluingError("duplicate fragment ids")
        try:
            ovs = [Overlap(pos[o["a"]], pos[o["b"]], int(o["aFrom"]), int(o["bTo"]), int(o["len"])) for o in d.get("overlaps", [])]
        except KeyError as e:
            raise GluingError(f"overlap refers to unknown fragment or lacks a field: {e}") from None
        return cls([int(f["size"]) for f in frags], ovs, ids)

    def to_json(self) -> dict:
        return {
            "fragments": [{"id": self.ids[i], "size": s} for i, s in enumerate(self.sizes)],
            "overlaps": [
                {"a": self.ids[o.a], "b": self.ids[o.b], "aFrom": o.a_from, "bTo": o.b_to, "len": o.length} for o in self.overlaps
            ],
        }


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[max(rx, ry)] = min(rx, ry)


@dataclass
class _Glued:
    spec: IntertwiningSpec
    offsets: list[int]
    cls: list[list[int]]  # per fragment, class id of each position
    nclasses: int
    members: list[list[tuple[int, int]]]  # class id -> elements

    def classes_of(self, f) -> list[int]:
        return self.cls[f]


def _union(spec: IntertwiningSpec) -> _Glued:
    offsets = list(itertools.accumulate([0] + spec.sizes[:-1]))
    uf = _UnionFind(sum(spec.sizes))
    for o in spec.overlaps:
        if not (0 <= o.a < len(spec.sizes) and 0 <= o.b < len(spec.sizes)):
            raise GluingError("overlap refers to a missing fragment")
        start_b = o.b_to - o.length + 1
        if o.length < 1 or o.a_from < 0 or o.a_from + o.length > spec.sizes[o.a] or start_b < 0 or o.b_to >= spec.sizes[o.b]:
            raise GluingError(f"overlap {o} leaves the fragments")
        for t in range(o.length):
            uf.union(offsets[o.a] + o.a_from + t, offsets[o.b] + start_b + t)
    roots: dict[int, int] = {}
    cls = []
    members: list[list[tuple[int, int]]] = []
    for f, size in enumerate(spec.sizes):
        row = []
        for p in range(size):
            r = uf.find(offsets[f] + p)
            if r not in roots:
                roots[r] = len(roots)
                members.append([])
            row.append(roots[r])
            members[roots[r]].append((f, p))
        cls.append(row)
    return _Glued(spec, offsets, cls, len(roots), members)


def _relation(g: _Glued, x: int, y: int) -> str:
    """How fragments x and y meet: 'none', 'before' (x <| y), 'after', 'both', 'contained', 'contains', 'equal' or 'irregular'."""
    cx, cy = g.cls[x], g.cls[y]
    shared = set(cx) & set(cy)
    if not shared:
        return "none"
    k = len(shared)
    before = k < len(cx) and k < len(cy) and cx[-k:] == cy[:k]
    after = k < len(cx) and k < len(cy) and cy[-k:] == cx[:k]
    if before and after:
        return "both"
    if before:
        return "before"
    if after:
        return "after"
    if k == len(cx) == len(cy):
        return "equal"
    if k == len(cx):
        return "contained"
    if k == len(cy):
        return "contains"
    return "irregular"


def _precedes(g: _Glued) -> dict[int, set[int]]:
    n = len(g.spec.sizes)
    succ: dict[int, set[int]] = {i: set() for i in range(n)}
    for x, y in itertools.permutations(range(n), 2):
        rel = _relation(g, x, y)
        if rel in ("before", "both"):
            succ[x].add(y)
    return succ


def _contained(g: _Glued, x: int, y: int) -> bool:
    return set(g.cls[x]) <= set(g.cls[y])


# ---------------------------------------------------------------------------
# validation


def validate_spec(spec: IntertwiningSpec) -> list[dict]:
    """Violations of the overlap system; an empty list means it passes.

    Checks that every overlap identifies a proper end segment with a proper
    initial segment of another fragment, that identifications compose
    without merging two points of one fragment, and that each fragment has
    at most one left and one right end-point.
    """
    out = []
    n = len(spec.sizes)
    for i, o in enumerate(spec.overlaps):
        if not (0 <= o.a < n and 0 <= o.b < n):
            out.append({"kind": "unknown-fragment", "overlap": i})
            continue
        if o.a == o.b:
            out.append({"kind": "self-overlap", "overlap": i, "fragment": spec.ids[o.a]})
            continue
        if o.a_from + o.length != spec.sizes[o.a] or o.b_to != o.length - 1 or o.length < 1:
            out.append({"kind": "not-end-to-initial", "overlap": i})
            continue
        if o.length >= spec.sizes[o.a] or o.length >= spec.sizes[o.b]:
            out.append({"kind": "containment", "overlap": i})
    if out:
        return out
    g = _union(spec)
    for f in range(n):
        row = g.cls[f]
        if len(set(row)) != len(row):
            dup = sorted({c for c in row if row.count(c) > 1})
            out.append({"kind": "composition", "fragment": spec.ids[f], "merged-positions": [[p for p, c in enumerate(row) if c == d] for d in dup]})
    if out:
        return out
    for x, y in itertools.permutations(range(n), 2):
        if _relation(g, x, y) == "irregular":
            out.append({"kind": "irregular-intersection", "fragments": [spec.ids[x], spec.ids[y]]})
    succ = _precedes(g)
    for f in range(n):
        lefts = {g.cls[y][len(g.cls[y]) - _shared(g, y, f) - 1] for y in range(n) if f in succ[y]}
        rights = {g.cls[z][_shared(g, f, z)] for z in succ[f]}
        if len(lefts) > 1:
            out.append({"kind": "multiple-left-end-points", "fragment": spec.ids[f], "classes": sorted(lefts)})
        if len(rights) > 1:
            out.append({"kind": "multiple-right-end-points", "fragment": spec.ids[f], "classes": sorted(rights)})
    return out


def _shared(g, x, y):
    return len(set(g.cls[x]) & set(g.cls[y]))


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class Path:
    start: int  # class id
    end: int
    fragments: tuple[int, ...]
    closed: bool = False


def _is_simple(g: _Glued, succ, frags: Sequence[int], closed: bool) -> bool:
    n = len(frags)
    for i, j in itertools.permutations(range(n), 2):
        if _contained(g, frags[i], frags[j]):
            return False
    for i, j in itertools.combinations(range(n), 2):
        if frags[i] in succ[frags[j]] and not (closed and i == 0 and j == n - 1):
            return False
    return True


def find_simple_paths(spec: IntertwiningSpec, s: int, t: int) -> list[Path]:
    """All simple paths from class s to class t, by depth-first search over <|-chains.

    For ``s == t`` these are the closed simple paths starting with a
    fragment whose first class is s.
    """
    g = _union(spec)
    succ = _precedes(g)
    n = len(spec.sizes)
    out = []

    def dfs(chain):
        last = chain[-1]
        if s == t:
            if len(chain) >= 2 and chain[0] in succ[last] and _is_simple(g, succ, chain, True):
                out.append(Path(s, t, tuple(chain), True))
        elif g.cls[last][-1] == t and _is_simple(g, succ, chain, False):
            out.append(Path(s, t, tuple(chain)))
        for y in sorted(succ[last]):
            if y not in chain and _is_simple(g, succ, chain + [y], s == t):
                dfs(chain + [y])

    for f in range(n):
        if g.cls[f][0] == s:
            dfs([f])
    return out


def path_order(spec: IntertwiningSpec, path: Path) -> list[int]:
    """Classes of the path's union listed by the path order.

    Uses the three cases: within one fragment by its order; a class of an
    earlier fragment missing from a later one precedes the later one's
    classes; a class of an earlier fragment precedes the later fragment's
    classes missing from the earlier one.
    """
    g = _union(spec)
    return _three_case_order(g, [g.cls[f] for f in path.fragments])


def _three_case_order(g: _Glued, rows: list[list[int]]) -> list[int]:
    classes = sorted({c for r in rows for c in r})
    idx = {c: i for i, c in enumerate(classes)}
    m = len(classes)
    lt = np.zeros((m, m), dtype=bool)
    sets = [set(r) for r in rows]
    for r in rows:
        for i, j in itertools.combinations(range(len(r)), 2):
            lt[idx[r[i]], idx[r[j]]] = True
    for i, j in itertools.combinations(range(len(rows)), 2):
        for t in rows[i]:
            for u in rows[j]:
                if t != u and (t not in sets[j] or u not in sets[i]):
                    lt[idx[t], idx[u]] = True
    if np.any(lt & lt.T) or np.any(np.diag(lt)):
        raise GluingError("path order is not antisymmetric")
    ranks = lt.sum(axis=0)
    if sorted(ranks.tolist()) != list(range(m)):
        raise GluingError("path order is not a linear order")
    return [classes[i] for i in np.argsort(ranks)]


# ---------------------------------------------------------------------------
# components


@dataclass
class GluedComponent:
    kind: str  # "linear" or "circular"
    members: list[int]  # fragment indices
    classes: list[list[tuple[int, int]]]  # element classes in the induced (cyclic) order

    @property
    def size(self) -> int:
        return len(self.classes)

    def to_json(self, ids=None) -> dict:
        ids = ids or {}
        name = lambda f: ids[f] if ids else f  # noqa: E731
        return {
            "kind": self.kind,
            "members": [name(f) for f in self.members],
            "classes": [[[name(f), p] for f, p in c] for c in self.classes],
        }

    def order_table(self) -> np.ndarray:
        lt = order_from_sequence(list(range(self.size)))
        return _circular_from_strict(lt) if self.kind == "circular" else lt


def _components(g: _Glued) -> list[list[int]]:
    n = len(g.spec.sizes)
    uf = _UnionFind(n)
    owner: dict[int, int] = {}
    for f in range(n):
        for c in g.cls[f]:
            if c in owner:
                uf.union(owner[c], f)
            else:
                owner[c] = f
    groups: dict[int, list[int]] = {}
    for f in range(n):
        groups.setdefault(uf.find(f), []).append(f)
    return sorted(groups.values())


def _find_cycle(frags: list[int], succ) -> list[int] | None:
    """A shortest directed <|-cycle among ``frags`` (shortest cycles have no chords)."""
    fs = set(frags)
    best = None
    for start in frags:
        prev = {start: None}
        queue = [start]
        found = None
        while queue and found is None:
            nxt = []
            for x in queue:
                for y in sorted(succ[x] & fs):
                    if y == start:
                        found = x
                        break
                    if y not in prev:
                        prev[y] = x
                        nxt.append(y)
                if found is not None:
                    break
            queue = nxt
        if found is not None:
            cyc = [found]
            while prev[cyc[-1]] is not None:
                cyc.append(prev[cyc[-1]])
            cyc.reverse()
            if best is None or len(cyc) < len(best):
                best = cyc
    return best


def _maximal_paths(frags, succ, g):
    fs = set(frags)
    preds = {f: {x for x in frags if f in succ[x]} for f in frags}
    sources = [f for f in frags if not preds[f]]
    out = []

    def dfs(chain):
        nxt = [y for y in sorted(succ[chain[-1]] & fs) if y not in chain and _is_simple(g, succ, chain + [y], False)]
        if not nxt:
            out.append(chain)
        for y in nxt:
            dfs(chain + [y])

    for s in sources:
        dfs([s])
    return out


def glue(spec: IntertwiningSpec) -> list[GluedComponent]:
    """Maximal components with their induced linear or circular orders.

    Raises :class:`GluingError` when the spec has violations or an induced
    order fails its axioms.
    """
    bad = validate_spec(spec)
    if bad:
        raise GluingError(f"invalid spec: {bad[0]['kind']}")
    if not spec.sizes:
        return []
    g = _union(spec)
    succ = _precedes(g)
    comps = []
    for frags in _components(g):
        all_classes = sorted({c for f in frags for c in g.cls[f]})
        cycle = _find_cycle(frags, succ)
        if cycle is not None:
            seq: list[int] = []
            for f in cycle:
                seq.extend(c for c in g.cls[f] if c not in seq)
            if sorted(seq) != all_classes:
                raise GluingError("closed path does not cover its component")
            pos = {c: i for i, c in enumerate(seq)}
            C = _circular_from_strict(order_from_sequence(list(range(len(seq)))))
            for f in frags:
                row = [pos[c] for c in g.cls[f]]
                for i, j, k in itertools.combinations(range(len(row)), 3):
                    if not C[row[i], row[j], row[k]]:
                        raise GluingError("fragment order is not compatible with the circular order")
            members = cycle + [f for f in frags if f not in cycle]
            comps.append(GluedComponent("circular", members, [g.members[c] for c in seq]))
            continue
        m = len(all_classes)
        idx = {c: i for i, c in enumerate(all_classes)}
        lt = np.zeros((m, m), dtype=bool)
        for path in _maximal_paths(frags, succ, g):
            order = _three_case_order(g, [g.cls[f] for f in path])
            for i, j in itertools.combinations(range(len(order)), 2):
                lt[idx[order[i]], idx[order[j]]] = True
        ranks = lt.sum(axis=0)
        if np.any(lt & lt.T) or sorted(ranks.tolist()) != list(range(m)):
            raise GluingError("induced order on a linear component is not a linear order")
        seq = [all_classes[i] for i in np.argsort(ranks)]
        members = sorted(frags, key=lambda f: seq.index(g.cls[f][0]))
        comps.append(GluedComponent("linear", members, [g.members[c] for c in seq]))
    comps.sort(key=lambda c: c.members[0])
    return comps


def cut_component(comp: GluedComponent, at: int) -> list[int]:
    """Linear order obtained by cutting a circular component at class index ``at``."""
    C = comp.order_table()
    if comp.kind != "circular" or not is_circular_order(C):
        raise GluingError("only circular components can be cut")
    rest = [i for i in range(comp.size) if i != at]
    return sorted(rest, key=lambda x: sum(C[at, y, x] for y in rest if y != x))


def refine_halves(spec: IntertwiningSpec) -> IntertwiningSpec:
    """Replace each fragment by two overlapping halves, keeping the glued result."""
    sizes, links = [], []
    halves = []
    for f, size in enumerate(spec.sizes):
        if size < 4:
            raise GluingError("refinement needs fragments of size >= 4")
        h = size // 2
        lo = (0, h + 1)  # positions 0..h
        hi = (h - 1, size)  # positions h-1..size-1
        i = len(sizes)
        sizes.extend([lo[1] - lo[0], hi[1] - hi[0]])
        links.append(Overlap(i, i + 1, h - 1, 1, 2))
        halves.append((i, i + 1, hi[0]))
    for o in spec.overlaps:
        a_lo, a_hi, a_start = halves[o.a]
        b_lo, b_hi, _ = halves[o.b]
        if o.length > sizes[a_hi] - 1 or o.length > sizes[b_lo] - 1:
            raise GluingError("overlap too long for the halves")
        links.append(Overlap(a_hi, b_lo, sizes[a_hi] - o.length, o.length - 1, o.length))
    return IntertwiningSpec(sizes, links)


def loads(text: str) -> IntertwiningSpec:
    return IntertwiningSpec.from_json(json.loads(text))
