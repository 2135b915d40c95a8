"""Finite covers of circular orders, their local equivalence relations and monodromy.

A k-fold cover of the circular order Z_N is modelled by the circular order
Z_{kN} projecting onto Z_N; the point of sheet j above v is ``v + N*j``, so
walking once around the base advances the sheet by one.  A section picks one
sheet per base point.  Base points may carry labels, each label class being
covered separately with its own degree.

Cells of a complex are products of open intervals between three cut points
per cover, the class set of a cell being the product of the local classes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class CoverError(ValueError):
    pass


@dataclass(frozen=True)
class CoverStruct:
    N: int
    section: tuple[int, ...]
    labels: tuple[int, ...]
    degrees: tuple[int, ...]

    def __post_init__(self):
        if self.N < 1 or len(self.section) != self.N or len(self.labels) != self.N:
            raise CoverError("section and labels must have one entry per base point")
        for v in range(self.N):
            lab = self.labels[v]
            if not 0 <= lab < len(self.degrees):
                raise CoverError(f"label {lab} has no degree")
            if not 0 <= self.section[v] < self.degrees[lab]:
                raise CoverError(f"sheet {self.section[v]} out of range at base point {v}")

    @property
    def k(self) -> int:
        """Degree of an unlabelled cover (the largest degree otherwise)."""
        return max(self.degrees)

    def sheet_advance(self, a: int, b: int) -> int:
        """Sheets gained by the lift of the forward arc from a to b."""
        lab = self.labels[a]
        wrap = 1 if b < a else 0
        return (self.section[b] - self.section[a] - wrap) % self.degrees[lab]

    def related(self, a: int, b: int) -> bool:
        return a != b and self.labels[a] == self.labels[b] and self.sheet_advance(a, b) == 0

    @property
    def R(self) -> np.ndarray:
        out = np.zeros((self.N, self.N), dtype=bool)
        for a, b in itertools.permutations(range(self.N), 2):
            out[a, b] = self.related(a, b)
        return out

    def to_json(self) -> dict:
        d = {"N": self.N, "k": self.k, "section": list(self.section)}
        if len(self.degrees) > 1:
            d["labels"] = list(self.labels)
            d["degrees"] = list(self.degrees)
        return d

    @classmethod
    def from_json(cls, d) -> "CoverStruct":
        N = int(d["N"])
        labels = tuple(d.get("labels", [0] * N))
        degrees = tuple(d.get("degrees", [int(d["k"])]))
        return cls(N, tuple(int(x) for x in d["section"]), labels, degrees)


def cover_from_section(section: Sequence[int], k: int) -> CoverStruct:
    return CoverStruct(len(section), tuple(int(s) for s in section), (0,) * len(section), (k,))


def generic_window(N: int, k: int) -> int:
    """Window width within which a generic section meets every sheet."""
    return 2 * k - 1 + N % k


def effective_sheets(section: Sequence[int], k: int, start: int, width: int) -> list[int]:
    """Sheets met by the lift of ``width`` consecutive base points from ``start``."""
    N = len(section)
    return [(section[(start + i) % N] + (start + i) // N) % k for i in range(width)]


def _window_ok(sec, k, w):
    return all(len(set(effective_sheets(sec, k, v, w))) == k for v in range(len(sec)))


def _generic_section(N, k, rng):
    # blocks of random permutations: any window of the stated width contains a whole block,
    # also across the base point 0 where the lift moves to the next sheet
    if k == 1:
        return [0] * N
    sec = []
    while len(sec) + k <= N:
        sec.extend(int(x) for x in rng.permutation(k))
    sec.extend(int(x) for x in rng.integers(0, k, N - len(sec)))
    assert _window_ok(sec, k, generic_window(N, k))
    return sec


def build_cover(N: int, k: int, seed: int = 0, generic: bool = True) -> CoverStruct:
    """A connected k-fold cover of Z_N with a seeded section.

    A generic section is a run of random permutation blocks, so the lift
    of every window of :func:`generic_window` points meets all k sheets;
    otherwise sheets are drawn uniformly.
    """
    if k < 1 or N < 1:
        raise CoverError("N and k must be positive")
    rng = np.random.default_rng(seed)
    if generic:
        if N < 3 * k:
            raise CoverError("a generic section needs N >= 3k")
        sec = _generic_section(N, k, rng)
    else:
        sec = [int(x) for x in rng.integers(0, k, N)]
    return cover_from_section(sec, k)


def build_labeled_cover(N: int, degrees: Sequence[int], seed: int = 0) -> CoverStruct:
    """Base points labelled round-robin, each label class carrying its own generic cover."""
    m = len(degrees)
    labels = [v % m for v in range(N)]
    rng = np.random.default_rng(seed)
    section = [0] * N
    for lab, k in enumerate(degrees):
        pts = [v for v in range(N) if labels[v] == lab]
        if len(pts) < 3 * k:
            raise CoverError(f"label {lab} has too few points for degree {k}")
        for v, s in zip(pts, _generic_section(len(pts), k, rng)):
            section[v] = s
    return CoverStruct(N, tuple(section), tuple(labels), tuple(int(k) for k in degrees))


# ---------------------------------------------------------------------------
# local equivalence


@dataclass(frozen=True)
class LocalEqRel:
    domain: tuple[int, ...]  # interval points in circular order
    classes: tuple[tuple[int, ...], ...]  # sorted by first appearance in the interval

    def class_of(self, x: int) -> int:
        for i, c in enumerate(self.classes):
            if x in c:
                return i
        raise KeyError(x)


def interval(N: int, s: int, t: int) -> list[int]:
    """Points strictly between s and t going forward around Z_N."""
    return [(s + i) % N for i in range(1, (t - s) % N or N)]


def local_eq(cover: CoverStruct, s: int, t: int) -> LocalEqRel:
    """Classes of E(s,t;x,y) on the open interval (s,t)."""
    if s == t:
        raise CoverError("interval endpoints must differ")
    dom = interval(cover.N, s, t)
    if not dom:
        raise CoverError(f"interval ({s},{t}) is empty")
    pos = {x: i for i, x in enumerate(dom)}

    def E(x, y):
        if x == y:
            return True
        if pos[x] < pos[y]:
            return cover.related(x, y)
        return cover.related(y, x)

    classes: list[list[int]] = []
    for x in dom:
        for c in classes:
            if E(c[0], x):
                c.append(x)
                break
        else:
            classes.append([x])
    for c in classes:
        if not all(E(x, y) for x, y in itertools.combinations(c, 2)):
            raise CoverError("local relation is not transitive")
    for c, d in itertools.combinations(classes, 2):
        if E(c[0], d[0]):
            raise CoverError("local relation is not transitive")
    return LocalEqRel(tuple(dom), tuple(tuple(c) for c in classes))


# ---------------------------------------------------------------------------
# cell complexes


Cell = tuple[int, ...]


@dataclass
class CellComplex:
    covers: list[CoverStruct]
    cuts: list[tuple[int, int, int]]
    cells: dict[Cell, list[LocalEqRel]]
    transitions: dict[tuple[Cell, Cell], np.ndarray] = field(default_factory=dict)

    @property
    def dims(self) -> list[int]:
        return [len(r.classes) for r in self.cells[(0,) * len(self.covers)]]

    @property
    def fiber_size(self) -> int:
        return math.prod(self.dims)

    def index(self, classes: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(classes), self.dims))

    def unindex(self, i: int) -> tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(i, self.dims))

    def to_json(self) -> dict:
        return {
            "covers": [c.to_json() for c in self.covers],
            "cuts": [list(c) for c in self.cuts],
            "fiber": self.fiber_size,
            "cells": {",".join(map(str, t)): [list(map(list, r.classes)) for r in rels] for t, rels in sorted(self.cells.items())},
            "transitions": [
                {"from": list(t), "to": list(s), "map": f.tolist()} for (t, s), f in sorted(self.transitions.items())
            ],
        }


def _arc(cut, j):
    """Endpoints of the j-th open interval between the cut points."""
    a, b, c = cut
    return [(a, b), (b, c), (c, a)][j]


def _merged_arc(cut, j, j2):
    """The interval joining arcs j and j2 through their shared cut point."""
    a, b, c = cut
    pts = [a, b, c]
    if (j2 - j) % 3 == 1:
        return pts[j], pts[(j2 + 1) % 3]
    return pts[j2], pts[(j + 1) % 3]


def default_cuts(N: int) -> tuple[int, int, int]:
    return (0, N // 3, (2 * N) // 3)


def spread_cuts(N: int, seed: int) -> tuple[int, int, int]:
    """Seeded cut points leaving as much room as possible in each interval."""
    rng = np.random.default_rng(seed)
    a = int(rng.integers(0, N))
    return (a, (a + N // 3) % N, (a + (2 * N) // 3) % N)


def _circular(a, b, c):
    return (a < b < c) or (b < c < a) or (c < a < b)


def build_complex(covers: Sequence[CoverStruct], cuts: Sequence[tuple[int, int, int]] | None = None) -> CellComplex:
    """Grid of 3^m cells over m covers with the adjacent-cell transition bijections."""
    covers = list(covers)
    if cuts is None:
        cuts = [default_cuts(c.N) for c in covers]
    cuts = [tuple(int(x) for x in c) for c in cuts]
    if len(cuts) != len(covers):
        raise CoverError("one cut triple per cover")
    for cov, (a, b, c) in zip(covers, cuts):
        if len({a, b, c}) < 3 or not _circular(a, b, c) or max(a, b, c) >= cov.N or min(a, b, c) < 0:
            raise CoverError(f"cut points {a, b, c} must be distinct and in circular order")
    local = []
    for cov, cut in zip(covers, cuts):
        rels = [local_eq(cov, *_arc(cut, j)) for j in range(3)]
        if len({len(r.classes) for r in rels}) != 1:
            raise CoverError("cells must all carry the same number of classes; spread the cut points out")
        local.append(rels)
    m = len(covers)
    cells = {t: [local[i][t[i]] for i in range(m)] for t in itertools.product(range(3), repeat=m)}
    cx = CellComplex(covers, cuts, cells)
    # transitions per coordinate, then lifted to product indices
    step = {}
    for i, (cov, cut) in enumerate(zip(covers, cuts)):
        for j in range(3):
            for j2 in ((j + 1) % 3, (j + 2) % 3):
                D = local_eq(cov, *_merged_arc(cut, j, j2))
                src, dst = local[i][j], local[i][j2]
                mp = []
                for c in src.classes:
                    d = D.class_of(c[0])
                    hits = [q for q, e in enumerate(dst.classes) if D.class_of(e[0]) == d]
                    if len(hits) != 1:
                        raise CoverError("transition is not a bijection")
                    mp.append(hits[0])
                step[i, j, j2] = mp
    n = cx.fiber_size
    for t in cells:
        for i in range(m):
            for d in (1, 2):
                s = t[:i] + ((t[i] + d) % 3,) + t[i + 1 :]
                mp = step[i, t[i], s[i]]
                f = np.empty(n, dtype=np.int64)
                for x in range(n):
                    cl = list(cx.unindex(x))
                    cl[i] = mp[cl[i]]
                    f[x] = cx.index(cl)
                cx.transitions[t, s] = f
    return cx


def perturb_transition(cx: CellComplex, t: Cell, s: Cell, swap: tuple[int, int]) -> CellComplex:
    """Copy of ``cx`` with f_{t,s} post-composed by a transposition (and f_{s,t} kept its inverse)."""
    trans = {key: f.copy() for key, f in cx.transitions.items()}
    f = trans[t, s]
    a, b = swap
    g = f.copy()
    g[f == a], g[f == b] = b, a
    trans[t, s] = g
    inv = np.empty_like(g)
    inv[g] = np.arange(len(g))
    trans[s, t] = inv
    return CellComplex(cx.covers, cx.cuts, cx.cells, trans)


def _adjacent(t: Cell, s: Cell) -> bool:
    return sum(a != b for a, b in zip(t, s)) == 1


def check_square(cx: CellComplex) -> dict | None:
    """None if every elementary square commutes, else the first offending square."""
    m = len(cx.covers)
    for t in sorted(cx.cells):
        for i, j in itertools.permutations(range(m), 2):
            for di, dj in itertools.product((1, 2), repeat=2):
                e0 = tuple(di if q == i else 0 for q in range(m))
                e1 = tuple(dj if q == j else 0 for q in range(m))
                a = _add(t, e0)
                b = _add(t, e1)
                c = _add(a, e1)
                left = cx.transitions[a, c][cx.transitions[t, a]]
                right = cx.transitions[b, c][cx.transitions[t, b]]
                if not np.array_equal(left, right):
                    return {"cell": list(t), "e0": list(e0), "e1": list(e1)}
    return None


def _add(t, e):
    return tuple((a + b) % 3 for a, b in zip(t, e))


def path_map(cx: CellComplex, path: Sequence[Cell]) -> np.ndarray:
    """Composition of transitions along a path of cells (repeats count as staying put)."""
    path = [tuple(p) for p in path]
    if not path:
        raise CoverError("empty path")
    f = np.arange(cx.fiber_size)
    for t, s in zip(path, path[1:]):
        if t == s:
            continue
        if not _adjacent(t, s):
            raise CoverError(f"cells {t} and {s} are not adjacent")
        f = cx.transitions[t, s][f]
    return f


# ---------------------------------------------------------------------------
# monodromy


@dataclass
class MonodromyAction:
    fiber: int
    generators: list[np.ndarray]

    def orbits(self) -> list[list[int]]:
        seen = [False] * self.fiber
        out = []
        for x in range(self.fiber):
            if seen[x]:
                continue
            orb, stack = [], [x]
            seen[x] = True
            while stack:
                y = stack.pop()
                orb.append(y)
                for h in self.generators:
                    for z in (int(h[y]), int(np.flatnonzero(h == y)[0])):
                        if not seen[z]:
                            seen[z] = True
                            stack.append(z)
            out.append(sorted(orb))
        return out

    def commute(self) -> bool:
        return all(np.array_equal(g[h], h[g]) for g, h in itertools.combinations(self.generators, 2))

    def cycle_type(self, i: int) -> list[int]:
        h = self.generators[i]
        seen = set()
        lens = []
        for x in range(self.fiber):
            if x in seen:
                continue
            n, y = 0, x
            while y not in seen:
                seen.add(y)
                y = int(h[y])
                n += 1
            lens.append(n)
        return sorted(lens)

    def relabel(self, perm: Sequence[int]) -> "MonodromyAction":
        """Conjugate by ``perm``: x is renamed perm[x]."""
        p = np.asarray(perm)
        gens = []
        for h in self.generators:
            g = np.empty_like(h)
            g[p] = p[h]
            gens.append(g)
        return MonodromyAction(self.fiber, gens)

    def to_json(self) -> dict:
        return {"fiber": self.fiber, "generators": [h.tolist() for h in self.generators], "orbits": self.orbits()}


def monodromy(cx: CellComplex) -> MonodromyAction:
    """h_i: cross coordinate i from cell 0 to cell 2 through alpha, then return via 1 without wrapping."""
    if check_square(cx) is not None:
        raise CoverError("complex fails the square law")
    m = len(cx.covers)
    zero = (0,) * m
    gens = []
    for i in range(m):
        e1 = tuple(1 if q == i else 0 for q in range(m))
        e2 = tuple(2 if q == i else 0 for q in range(m))
        gens.append(path_map(cx, [zero, e2, e1, zero]))
    act = MonodromyAction(cx.fiber_size, gens)
    if not act.commute():
        raise CoverError("monodromy generators do not commute")
    return act


@dataclass(frozen=True)
class OrbitType:
    size: int
    axis: tuple[int, ...]  # least l_i with h_i^{l_i} fixing the orbit
    extra: tuple[tuple[int, ...], ...]  # further stabilizer residues inside the box prod [0, l_i)

    def __str__(self):
        body = ",".join(map(str, self.axis))
        if self.extra:
            body += "+" + ";".join(",".join(map(str, e)) for e in self.extra)
        return f"({self.size},({body}))"


def _power(h, n):
    f = np.arange(len(h))
    for _ in range(n):
        f = h[f]
    return f


def classify_monodromy(act: MonodromyAction) -> tuple[OrbitType, ...]:
    """Sorted orbit types; equal for two actions iff they are conjugate.

    The stabilizer of a point of an orbit is a lattice L in Z^m containing
    prod l_i Z; it is recorded by the l_i together with the nonzero residues
    of L inside the box prod [0, l_i).
    """
    if not act.commute():
        raise CoverError("generators do not commute")
    out = []
    for orb in act.orbits():
        x = orb[0]
        axis = []
        for h in act.generators:
            n, y = 1, int(h[x])
            while y != x:
                y = int(h[y])
                n += 1
            axis.append(n)
        pows = [[_power(h, e) for e in range(l)] for h, l in zip(act.generators, axis)]
        extra = []
        for exps in itertools.product(*[range(l) for l in axis]):
            if not any(exps):
                continue
            y = x
            for i, e in enumerate(exps):
                y = int(pows[i][e][y])
            if y == x:
                extra.append(tuple(exps))
        out.append(OrbitType(len(orb), tuple(axis), tuple(extra)))
    return tuple(sorted(out, key=lambda o: (o.size, o.axis, o.extra)))


def format_invariant(inv: Sequence[OrbitType]) -> str:
    return "{" + ",".join(str(o) for o in inv) + "}"
