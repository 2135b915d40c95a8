"""Intertwined orders: the finite T_n class and the stacked-order structures built from it.

A T_n structure has one linear order, predicates P0..P_{n-1} partitioning
the universe, and maps f1..f_{n-1} that are the identity off P0 and send a
P0 point x into P_i with x < f1(x) < ... < f_{n-1}(x).  Every point we create
is part of a block (x, f1 x, ..., f_{n-1} x).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .structures import FinStruct, RelSym, Signature, order_from_sequence, qf_type


def tn_signature(n: int) -> Signature:
    return Signature(
        (RelSym("le", 2, "linear-order"),),
        tuple(f"P{i}" for i in range(n)),
        tuple(f"f{i}" for i in range(1, n)),
    )


@dataclass
class TnApprox:
    n: int
    struct: FinStruct
    seed: int
    core: tuple[int, ...]
    ep_level: int


class _Blocks:
    """Mutable working form: a left-to-right sequence of (block, level) slots."""

    def __init__(self, n):
        self.n = n
        self.seq: list[tuple[int, int]] = []
        self.nblocks = 0

    def element(self, b, lvl):
        return b * self.n + lvl

    def insert(self, positions):
        """Insert a new block; ``positions`` are non-decreasing slot indices in the current sequence."""
        b = self.nblocks
        self.nblocks += 1
        for lvl, pos in sorted(enumerate(positions), key=lambda t: (t[1], t[0]), reverse=True):
            self.seq.insert(pos, (b, lvl))
        return b

    def ranks(self):
        r = np.empty(self.nblocks * self.n, dtype=np.int64)
        for i, (b, lvl) in enumerate(self.seq):
            r[self.element(b, lvl)] = i
        return r

    def to_struct(self):
        n, size = self.n, self.nblocks * self.n
        order = [self.element(b, lvl) for b, lvl in self.seq]
        preds = {f"P{i}": np.arange(size) % n == i for i in range(n)}
        fns = {}
        for i in range(1, n):
            f = np.arange(size)
            base = np.arange(0, size, n)
            f[base] = base + i
            fns[f"f{i}"] = f
        return FinStruct(tn_signature(n), size, {"le": order_from_sequence(order)}, preds, fns)


def closure(n: int, elems) -> list[int]:
    """Elements generated by ``elems`` under the maps (P0 points bring their block)."""
    out = set()
    for e in elems:
        out.add(int(e))
        if e % n == 0:
            out.update(range(e, e + n))
    return sorted(out)


def _descriptor(n, ranks, cl_ranks, cl_elems, x):
    """Position of x (and of its images when x is in P0) relative to a closed set."""
    lvl = x % n
    members = [x] if lvl else list(range(x, x + n))
    pos = []
    for y in members:
        if y in cl_elems:
            pos.append(("e", cl_elems.index(y)))
        else:
            pos.append(("g", int(np.searchsorted(cl_ranks, ranks[y]))))
    return lvl, tuple(pos)


def _required(n, c):
    """Extension types over a closed set of size c that a limit must realize."""
    req = set()
    for gaps in itertools.combinations_with_replacement(range(c + 1), n):
        req.add((0, tuple(("g", g) for g in gaps)))
    for lvl in range(1, n):
        for g in range(c + 1):
            req.add((lvl, (("g", g),)))
    return req


def _missing(work: _Blocks, core, m):
    n = work.n
    ranks = work.ranks()
    out = []
    for size in range(min(m, len(core) + 1)):
        for A in itertools.combinations(core, size):
            cl = closure(n, A)
            cl_ranks = np.sort(ranks[cl])
            cl_by_rank = [cl[i] for i in np.argsort(ranks[cl])]
            have = {
                _descriptor(n, ranks, cl_ranks, cl_by_rank, x)
                for x in range(work.nblocks * n)
                if x not in cl
            }
            for d in sorted(_required(n, len(cl)) - have):
                out.append((cl_by_rank, d))
    return out


def _realize(work: _Blocks, cl_by_rank, desc, rng):
    n = work.n
    ranks = work.ranks()
    total = len(work.seq)
    bounds = [int(ranks[e]) for e in cl_by_rank]

    def interval(g):
        lo = bounds[g - 1] + 1 if g > 0 else 0
        hi = bounds[g] if g < len(bounds) else total
        return lo, hi

    lvl, pos = desc
    if lvl == 0:
        gaps = [g for _, g in pos]
    else:
        gaps = [pos[0][1]] * n
    slots = []
    for g in gaps:
        lo, hi = interval(g)
        slots.append(int(rng.integers(lo, hi + 1)))
    # block elements sharing a gap keep their order; across gaps slots are already ordered
    work.insert(sorted(slots))


def build_Tn(n: int, target_size: int, seed: int, m: int = 2) -> TnApprox:
    """Grow a member of the finite T_n class toward the density axiom.

    Extension types are placements of a new point (with its images) relative
    to the closure of a subset of the core of size < m.  Missing placements
    are realized first-in first-out at seeded positions; the core grows while
    the result stays within ``target_size`` elements, and random blocks fill
    the rest.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    limit = max(target_size // n, 1)
    work = _Blocks(n)
    work.insert([0] * n)
    core_blocks: list[int] = []
    rejected: set[int] = set()
    while True:
        cand = next((b for b in range(work.nblocks) if b not in core_blocks and b not in rejected), None)
        if cand is None:
            break
        trial = _Blocks(n)
        trial.seq, trial.nblocks = list(work.seq), work.nblocks
        state = rng.bit_generator.state
        core = [e for b in core_blocks + [cand] for e in range(b * n, b * n + n)]
        ok = True
        while True:
            miss = _missing(trial, core, m)
            if not miss:
                break
            for cl, d in miss:
                if trial.nblocks >= limit:
                    ok = False
                    break
                _realize(trial, cl, d, rng)
            if not ok:
                break
        if ok:
            work, core_blocks = trial, core_blocks + [cand]
        else:
            rng.bit_generator.state = state
            rejected.add(cand)
    while work.nblocks < limit:
        total = len(work.seq)
        work.insert(sorted(int(rng.integers(0, total + 1)) for _ in range(n)))
    core = tuple(e for b in core_blocks for e in range(b * n, b * n + n))
    return TnApprox(n, work.to_struct(), seed, core, m)


def audit_tn(s: FinStruct, n: int) -> dict[str, bool]:
    """The three bullets of the finite T_n class."""
    from .structures import is_strict_total_order

    preds = np.array([s.pred_tables[f"P{i}"] for i in range(n)])
    partition = bool(np.all(preds.sum(axis=0) == 1))
    lt = s.tables["le"]
    funcs = True
    p0 = np.flatnonzero(preds[0])
    for i in range(1, n):
        f = s.fn_tables[f"f{i}"]
        off = np.flatnonzero(~preds[0])
        if np.any(f[off] != off) or not np.all(preds[i][f[p0]]):
            funcs = False
    for x in p0:
        chain = [int(x)] + [int(s.fn_tables[f"f{i}"][x]) for i in range(1, n)]
        if any(not lt[a, b] for a, b in zip(chain, chain[1:])):
            funcs = False
    return {"linear-order": is_strict_total_order(lt), "partition": partition, "functions": funcs}


def stacked_orders(t: FinStruct, n: int, sigma) -> FinStruct:
    """Orders on P0 read through the maps, stacked according to ``sigma``.

    Order i compares f_{sigma(i)} images (f0 is the identity).  The binary
    relations ``tw_i_j`` (i < j) record f_{sigma(i)}(x) < f_{sigma(j)}(y), the
    intertwining between orders i and j.
    """
    p0 = np.flatnonzero(t.pred_tables["P0"])
    lt = t.tables["le"]
    maps = [p0] + [t.fn_tables[f"f{i}"][p0] for i in range(1, n)]
    rels, tabs = [], {}
    for i in range(n):
        img = maps[sigma[i]]
        rels.append(RelSym(f"le{i}", 2, "linear-order"))
        tabs[f"le{i}"] = lt[np.ix_(img, img)]
    for i, j in itertools.combinations(range(n), 2):
        rels.append(RelSym(f"tw_{i}_{j}", 2))
        tabs[f"tw_{i}_{j}"] = lt[np.ix_(maps[sigma[i]], maps[sigma[j]])]
    return FinStruct(Signature(tuple(rels)), len(p0), tabs)


def pair_census(s: FinStruct) -> Counter:
    return Counter(qf_type(s, (a, b)) for a in range(s.size) for b in range(s.size))


def enumerate_intertwined(n: int, size: int, seed: int = 0):
    """The n! stacked-order structures from one T_n instance with ``size`` P0 points.

    Returns ``(structures, distinct)`` where ``structures`` is a list of
    ``(sigma, FinStruct)`` and ``distinct`` says whether the 2-type censuses
    are pairwise different, which certifies pairwise non-isomorphism.
    """
    if not 1 <= n <= 4:
        raise ValueError("n must be between 1 and 4")
    t = build_Tn(n, size * n, seed).struct
    out = [(sigma, stacked_orders(t, n, sigma)) for sigma in itertools.permutations(range(n))]
    keys = [frozenset(pair_census(s).items()) for _, s in out]
    return out, len(set(keys)) == len(keys)
