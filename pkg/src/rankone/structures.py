"""Finite relational structures with order-flavoured relation kinds.

A :class:`FinStruct` lives on the universe ``0..N-1`` and stores every
relation as a dense boolean numpy array of shape ``(N,) * arity``.  Linear
orders are stored strictly (the pairs ``x < y``); the non-strict ``<=`` used
by the derived relations is ``x < y or x == y``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

KINDS = {
    "linear-order": 2,
    "circular-order": 3,
    "betweenness": 3,
    "separation": 4,
    "equivalence": 2,
    "generic": None,
}


class StructureError(ValueError):
    """Raised for malformed structures, symbols or tuples."""


@dataclass(frozen=True)
class RelSym:
    name: str
    arity: int
    kind: str = "generic"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StructureError(f"unknown relation kind {self.kind!r}")
        if self.arity < 1:
            raise StructureError(f"arity of {self.name!r} must be positive")
        want = KINDS[self.kind]
        if want is not None and want != self.arity:
            raise StructureError(f"{self.kind} {self.name!r} must have arity {want}")


@dataclass(frozen=True)
class Signature:
    relations: tuple[RelSym, ...] = ()
    preds: tuple[str, ...] = ()
    fns: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "preds", tuple(self.preds))
        object.__setattr__(self, "fns", tuple(self.fns))
        names = [r.name for r in self.relations] + list(self.preds) + list(self.fns)
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate symbol names in {names}")

    def rel(self, name: str) -> RelSym:
        for r in self.relations:
            if r.name == name:
                return r
        raise StructureError(f"unknown relation symbol {name!r}")

    @property
    def max_arity(self) -> int:
        return max((r.arity for r in self.relations), default=0)

    def is_binary(self) -> bool:
        """True when every relation has arity at most 2 and there are no functions."""
        return not self.fns and all(r.arity <= 2 for r in self.relations)

    def to_json(self) -> dict:
        return {
            "relations": [{"name": r.name, "arity": r.arity, "kind": r.kind} for r in self.relations],
            "preds": list(self.preds),
            "fns": list(self.fns),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "Signature":
        rels = tuple(RelSym(r["name"], int(r["arity"]), r.get("kind", "generic")) for r in d.get("relations", []))
        return cls(rels, tuple(d.get("preds", [])), tuple(d.get("fns", [])))


def orders_signature(k: int, prefix: str = "le") -> Signature:
    return Signature(tuple(RelSym(f"{prefix}{i}", 2, "linear-order") for i in range(k)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FinStruct:
    sig: Signature
    size: int
    tables: Mapping[str, np.ndarray] = field(default_factory=dict)
    pred_tables: Mapping[str, np.ndarray] = field(default_factory=dict)
    fn_tables: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.size)
        if n < 0:
            raise StructureError("size must be non-negative")
        tabs = {}
        for r in self.sig.relations:
            t = self.tables.get(r.name)
            t = np.zeros((n,) * r.arity, dtype=bool) if t is None else np.asarray(t, dtype=bool)
            if t.shape != (n,) * r.arity:
                raise StructureError(f"table {r.name!r} has shape {t.shape}, expected {(n,) * r.arity}")
            tabs[r.name] = _frozen(t)
        preds = {}
        for p in self.sig.preds:
            t = self.pred_tables.get(p)
            t = np.zeros(n, dtype=bool) if t is None else np.asarray(t, dtype=bool)
            if t.shape != (n,):
                raise StructureError(f"predicate {p!r} has wrong shape")
            preds[p] = _frozen(t)
        fns = {}
        for f in self.sig.fns:
            t = self.fn_tables.get(f)
            t = np.arange(n) if t is None else np.asarray(t, dtype=np.int64)
            if t.shape != (n,) or (n and (t.min() < 0 or t.max() >= n)):
                raise StructureError(f"function {f!r} is not a total map on the universe")
            fns[f] = _frozen(t.astype(np.int64))
        extra = set(self.tables) - set(tabs)
        if extra:
            raise StructureError(f"tables for undeclared relations {sorted(extra)}")
        object.__setattr__(self, "size", n)
        object.__setattr__(self, "tables", tabs)
        object.__setattr__(self, "pred_tables", preds)
        object.__setattr__(self, "fn_tables", fns)

    # -- construction -------------------------------------------------
    @classmethod
    def from_tuples(cls, sig, size, rel=None, pred=None, fn=None) -> "FinStruct":
        rel, pred, fn = rel or {}, pred or {}, fn or {}
        tabs = {}
        for name, tuples in rel.items():
            r = sig.rel(name)
            t = np.zeros((size,) * r.arity, dtype=bool)
            for tup in tuples:
                tup = tuple(int(x) for x in tup)
                if len(tup) != r.arity or any(not 0 <= x < size for x in tup):
                    raise StructureError(f"bad tuple {tup} for {name!r}")
                t[tup] = True
            tabs[name] = t
        preds = {}
        for name, members in pred.items():
            t = np.zeros(size, dtype=bool)
            t[list(members)] = True
            preds[name] = t
        return cls(sig, size, tabs, preds, {k: np.asarray(v) for k, v in fn.items()})

    def tuples(self, name: str) -> list[tuple[int, ...]]:
        return [tuple(int(x) for x in t) for t in np.argwhere(self.tables[name])]

    def relabel(self, perm: Sequence[int]) -> "FinStruct":
        """Image of ``self`` under the bijection ``x -> perm[x]``."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        return self.pullback(inv)

    def pullback(self, idx: Sequence[int]) -> "FinStruct":
        """Induced structure on the list ``idx`` (new element i is old ``idx[i]``).

        ``idx`` must be injective; the result is the substructure relabelled
        in the given order.  Functions must map ``idx`` into itself.
        """
        idx = np.asarray(idx, dtype=np.int64)
        m = len(idx)
        tabs = {r.name: self.tables[r.name][np.ix_(*([idx] * r.arity))] for r in self.sig.relations}
        preds = {p: self.pred_tables[p][idx] for p in self.sig.preds}
        fns = {}
        if self.sig.fns:
            pos = {int(x): i for i, x in enumerate(idx)}
            for f in self.sig.fns:
                img = self.fn_tables[f][idx]
                try:
                    fns[f] = np.array([pos[int(y)] for y in img], dtype=np.int64)
                except KeyError:
                    raise StructureError("index set is not closed under the unary functions") from None
        return FinStruct(self.sig, m, tabs, preds, fns)

    def substructure(self, idx: Iterable[int]) -> "FinStruct":
        return self.pullback(sorted(set(int(i) for i in idx)))

    def with_relations(self, extra: Mapping[str, tuple[RelSym, np.ndarray]], keep: Iterable[str] | None = None) -> "FinStruct":
        keep = [r.name for r in self.sig.relations] if keep is None else list(keep)
        rels = [self.sig.rel(n) for n in keep] + [sym for sym, _ in extra.values()]
        sig = Signature(tuple(rels), self.sig.preds, self.sig.fns)
        tabs = {n: self.tables[n] for n in keep}
        tabs.update({sym.name: t for sym, t in extra.values()})
        return FinStruct(sig, self.size, tabs, self.pred_tables, self.fn_tables)

    # -- comparison ---------------------------------------------------
    def encoding(self) -> bytes:
        parts = [np.int64(self.size).tobytes()]
        for r in self.sig.relations:
            parts.append(np.packbits(self.tables[r.name].ravel()).tobytes())
        for p in self.sig.preds:
            parts.append(np.packbits(self.pred_tables[p]).tobytes())
        for f in self.sig.fns:
            parts.append(self.fn_tables[f].astype(np.int64).tobytes())
        return b"|".join(parts)

    def __eq__(self, other):
        return isinstance(other, FinStruct) and self.sig == other.sig and self.encoding() == other.encoding()

    def __hash__(self):
        return hash((self.sig, self.encoding()))

    def __repr__(self):
        return f"FinStruct(size={self.size}, rels={[r.name for r in self.sig.relations]})"

    # -- json ---------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "sig": self.sig.to_json(),
            "size": self.size,
            "rel": {r.name: [list(t) for t in self.tuples(r.name)] for r in self.sig.relations},
            "pred": {p: [int(x) for x in np.flatnonzero(self.pred_tables[p])] for p in self.sig.preds},
            "fn": {f: [int(x) for x in self.fn_tables[f]] for f in self.sig.fns},
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "FinStruct":
        for key in ("sig", "size"):
            if key not in d:
                raise StructureError(f"structure JSON is missing {key!r}")
        sig = Signature.from_json(d["sig"])
        return cls.from_tuples(sig, int(d["size"]), d.get("rel", {}), d.get("pred", {}), d.get("fn", {}))


def dumps(s: FinStruct, **extra) -> str:
    d = s.to_json()
    d.update(extra)
    return json.dumps(d, sort_keys=True)


def loads(text: str) -> FinStruct:
    return FinStruct.from_json(json.loads(text))


# ---------------------------------------------------------------------------
# order helpers


def order_from_sequence(seq: Sequence[int]) -> np.ndarray:
    """Strict order table in which ``seq[0] < seq[1] < ...``."""
    n = len(seq)
    rank = np.empty(n, dtype=np.int64)
    rank[np.asarray(seq, dtype=np.int64)] = np.arange(n)
    return rank[:, None] < rank[None, :]


def order_ranks(table: np.ndarray) -> np.ndarray:
    """Rank of each element in a strict total order (number of predecessors)."""
    return table.sum(axis=0).astype(np.int64)


def orders_structure(seqs: Sequence[Sequence[int]], names: Sequence[str] | None = None) -> FinStruct:
    """Multi-order structure; ``seqs[i]`` lists the universe in increasing ``<=_i`` order."""
    names = list(names) if names is not None else [f"le{i}" for i in range(len(seqs))]
    n = len(seqs[0]) if seqs else 0
    sig = Signature(tuple(RelSym(nm, 2, "linear-order") for nm in names))
    return FinStruct(sig, n, {nm: order_from_sequence(sq) for nm, sq in zip(names, seqs)})


def circular_structure(seq: Sequence[int], name: str = "C") -> FinStruct:
    lin = order_from_sequence(seq)
    sig = Signature((RelSym(name, 3, "circular-order"),))
    return FinStruct(sig, len(seq), {name: _circular_from_strict(lin)})


def _nonstrict(lt: np.ndarray) -> np.ndarray:
    return lt | np.eye(lt.shape[0], dtype=bool)


def _kind_check(s: FinStruct, name: str, kind: str):
    r = s.sig.rel(name)
    if r.kind != kind:
        raise StructureError(f"{name!r} has kind {r.kind}, expected {kind}")


def derive_betweenness(s: FinStruct, name: str) -> np.ndarray:
    """B(x,y,z) <-> (x<=y<=z) or (z<=y<=x)."""
    _kind_check(s, name, "linear-order")
    return _betweenness_from_strict(s.tables[name])


def _betweenness_from_strict(lt: np.ndarray) -> np.ndarray:
    le = _nonstrict(lt)
    x_y = le[:, :, None]
    y_z = le[None, :, :]
    z_y = le.T[None, :, :]
    y_x = le.T[:, :, None]
    return (x_y & y_z) | (z_y & y_x)


def _circular_from_strict(lt: np.ndarray) -> np.ndarray:
    le = _nonstrict(lt)
    xy = le[:, :, None]
    yz = le[None, :, :]
    zx = le.T[:, None, :]
    # (x<=y<=z) or (z<=x<=y) or (y<=z<=x)
    return (xy & yz) | (zx & xy) | (yz & zx)


def derive_circular(s: FinStruct, name: str) -> np.ndarray:
    """C(x,y,z) <-> (x<=y<=z) or (z<=x<=y) or (y<=z<=x)."""
    _kind_check(s, name, "linear-order")
    return _circular_from_strict(s.tables[name])


def separation_from_circular(c: np.ndarray) -> np.ndarray:
    x, y, z, t = np.ix_(*([np.arange(c.shape[0])] * 4))
    first = c[x, y, z] & c[y, z, t] & c[z, t, x] & c[t, x, y]
    second = c[t, z, y] & c[z, y, x] & c[y, x, t] & c[x, t, z]
    return first | second


def derive_separation(s: FinStruct, name: str) -> np.ndarray:
    """S(x,y,z,t) from the circular order ``name``."""
    _kind_check(s, name, "circular-order")
    return separation_from_circular(s.tables[name])


def reverse_order(lt: np.ndarray) -> np.ndarray:
    return lt.T.copy()


def reverse_circular(c: np.ndarray) -> np.ndarray:
    return np.transpose(c, (0, 2, 1)).copy()


def cut_circular(c: np.ndarray, a: int) -> tuple[np.ndarray, list[int]]:
    """Linear order on the universe minus ``a``: x < y iff C(a, x, y).

    Returns the strict order table on the remaining points together with the
    index map (new index -> old element).
    """
    n = c.shape[0]
    rest = [i for i in range(n) if i != a]
    idx = np.array(rest, dtype=np.int64)
    lt = c[a][np.ix_(idx, idx)] & ~np.eye(len(rest), dtype=bool)
    return lt, rest


# ---------------------------------------------------------------------------
# axiom checks


def is_strict_total_order(lt: np.ndarray) -> bool:
    n = lt.shape[0]
    if np.any(np.diag(lt)):
        return False
    off = ~np.eye(n, dtype=bool)
    if np.any((lt | lt.T) != off):
        return False
    comp = (lt.astype(np.int64) @ lt.astype(np.int64)) > 0
    return not np.any(comp & ~lt)


def is_circular_order(c: np.ndarray) -> bool:
    n = c.shape[0]
    for x, y, z in itertools.permutations(range(n), 3):
        if c[x, y, z] == c[x, z, y]:
            return False
        if c[x, y, z] != c[y, z, x]:
            return False
    for x, y, z, t in itertools.permutations(range(n), 4):
        if c[x, y, z] and c[x, z, t] and not c[x, y, t]:
            return False
    return True


def is_equivalence(e: np.ndarray) -> bool:
    ei = e.astype(np.int64)
    return bool(np.all(np.diag(e)) and np.array_equal(e, e.T) and not np.any(((ei @ ei) > 0) & ~e))


def validate(s: FinStruct) -> list[str]:
    """Names of relations whose tables violate their declared kind."""
    bad = []
    for r in s.sig.relations:
        t = s.tables[r.name]
        if r.kind == "linear-order" and not is_strict_total_order(t):
            bad.append(r.name)
        elif r.kind == "circular-order" and not is_circular_order(t):
            bad.append(r.name)
        elif r.kind == "equivalence" and not is_equivalence(t):
            bad.append(r.name)
        elif r.kind == "betweenness" and not _is_derived(t, betweenness=True):
            bad.append(r.name)
        elif r.kind == "separation" and not _is_derived(t, betweenness=False):
            bad.append(r.name)
    return bad


def _is_derived(t: np.ndarray, betweenness: bool) -> bool:
    """Search for a generating order and compare (brute force, small sizes)."""
    n = t.shape[0]
    for perm in itertools.permutations(range(n)):
        if n and perm[0] != 0:
            break
        lt = order_from_sequence(perm)
        ref = _betweenness_from_strict(lt) if betweenness else separation_from_circular(_circular_from_strict(lt))
        if np.array_equal(ref, t):
            return True
    return False


# ---------------------------------------------------------------------------
# partial isomorphisms and types


@dataclass(frozen=True)
class PartialIso:
    source: FinStruct
    target: FinStruct
    mapping: Mapping[int, int]

    def is_valid(self) -> bool:
        return is_partial_iso(self.source, self.target, self.mapping)


def is_partial_iso(s: FinStruct, t: FinStruct, mapping: Mapping[int, int]) -> bool:
    if s.sig != t.sig:
        raise StructureError("signature mismatch")
    dom = [int(x) for x in mapping]
    img = [int(mapping[x]) for x in dom]
    if len(set(img)) != len(img):
        return False
    if any(not 0 <= x < s.size for x in dom) or any(not 0 <= y < t.size for y in img):
        return False
    d, m = np.array(dom, dtype=np.int64), np.array(img, dtype=np.int64)
    for r in s.sig.relations:
        if not np.array_equal(s.tables[r.name][np.ix_(*([d] * r.arity))], t.tables[r.name][np.ix_(*([m] * r.arity))]):
            return False
    for p in s.sig.preds:
        if not np.array_equal(s.pred_tables[p][d], t.pred_tables[p][m]):
            return False
    fwd = dict(zip(dom, img))
    back = dict(zip(img, dom))
    for f in s.sig.fns:
        fs, ft = s.fn_tables[f], t.fn_tables[f]
        for x, y in fwd.items():
            fx, fy = int(fs[x]), int(ft[y])
            if (fx in fwd) != (fy in back):
                return False
            if fx in fwd and fwd[fx] != fy:
                return False
    return True


@dataclass(frozen=True)
class TypeFingerprint:
    """Canonical encoding of the quantifier-free type of a tuple over parameters."""

    key: bytes

    def __repr__(self):
        return f"TypeFingerprint({self.key[:12].hex()}...)"


def _term_closure(s: FinStruct, elems: list[int]) -> list[int]:
    """Values of all unary terms over ``elems`` in shortlex order, stopping at
    the first level that adds no new value."""
    vals = list(elems)
    if not s.sig.fns:
        return vals
    seen = set(vals)
    level = list(elems)
    while True:
        nxt = [int(s.fn_tables[f][v]) for v in level for f in s.sig.fns]
        vals.extend(nxt)
        if all(v in seen for v in nxt):
            return vals
        seen.update(nxt)
        level = nxt


def qf_type(s: FinStruct, tup: Sequence[int], params: Sequence[int] = ()) -> TypeFingerprint:
    """Fingerprint of the quantifier-free type of ``tup`` over the ordered ``params``.

    Two tuples get equal fingerprints iff the map sending one to the other and
    fixing ``params`` pointwise is a partial isomorphism (of the generated
    substructures when the signature has unary functions).
    """
    elems = [int(x) for x in tup] + [int(x) for x in params]
    for x in elems:
        if not 0 <= x < s.size:
            raise StructureError(f"element {x} out of range for size {s.size}")
    vals = _term_closure(s, elems)
    first: dict[int, int] = {}
    pattern = []
    distinct = []
    for i, v in enumerate(vals):
        if v not in first:
            first[v] = i
            distinct.append(v)
        pattern.append(first[v])
    d = np.array(distinct, dtype=np.int64)
    parts = [np.array([len(tup), len(params)], dtype=np.int64).tobytes(), np.array(pattern, dtype=np.int64).tobytes()]
    for r in s.sig.relations:
        parts.append(np.packbits(s.tables[r.name][np.ix_(*([d] * r.arity))].ravel()).tobytes())
    for p in s.sig.preds:
        parts.append(np.packbits(s.pred_tables[p][d]).tobytes())
    if s.sig.fns:
        pos = {v: i for i, v in enumerate(distinct)}
        for f in s.sig.fns:
            parts.append(np.array([pos.get(int(s.fn_tables[f][v]), -1) for v in distinct], dtype=np.int64).tobytes())
    return TypeFingerprint(b"|".join(parts))


# ---------------------------------------------------------------------------
# canonical form


@dataclass(frozen=True)
class Canon:
    struct: FinStruct
    labeling: tuple[int, ...]  # old element -> new index
    certificate: bytes


def _relation_incidences(s: FinStruct):
    inc = []
    for ri, r in enumerate(s.sig.relations):
        tups = np.argwhere(s.tables[r.name])
        inc.append((ri, tups))
    return inc


def _refine(s: FinStruct, colors: np.ndarray, inc) -> np.ndarray:
    """Colour refinement to a stable ordered partition; colours are ranks."""
    n = s.size
    while True:
        sigs = [[int(colors[x])] for x in range(n)]
        for ri, tups in inc:
            if len(tups) == 0:
                continue
            ctup = colors[tups]
            for pos in range(tups.shape[1]):
                buckets: dict[int, list] = {}
                for row, crow in zip(tups[:, pos], map(tuple, ctup)):
                    buckets.setdefault(int(row), []).append(crow)
                for x in range(n):
                    sigs[x].append((ri, pos, tuple(sorted(buckets.get(x, ())))))
        for fi, f in enumerate(s.sig.fns):
            img = s.fn_tables[f]
            pre: dict[int, list] = {}
            for x in range(n):
                pre.setdefault(int(img[x]), []).append(int(colors[x]))
            for x in range(n):
                sigs[x].append(("f", fi, int(colors[img[x]]), int(img[x]) == x, tuple(sorted(pre.get(x, ())))))
        keys = sorted(set(map(_freeze, sigs)))
        rank = {k: i for i, k in enumerate(keys)}
        new = np.array([rank[_freeze(sg)] for sg in sigs], dtype=np.int64)
        if len(keys) == len(set(colors.tolist())):
            return new
        colors = new


def _freeze(x):
    if isinstance(x, list):
        return tuple(_freeze(v) for v in x)
    return x


def _initial_colors(s: FinStruct) -> np.ndarray:
    n = s.size
    feats = []
    for x in range(n):
        f = [bool(s.pred_tables[p][x]) for p in s.sig.preds]
        for r in s.sig.relations:
            f.append(bool(s.tables[r.name][(x,) * r.arity]))
        feats.append(tuple(f))
    keys = sorted(set(feats))
    rank = {k: i for i, k in enumerate(keys)}
    return np.array([rank[f] for f in feats], dtype=np.int64)


def _is_automorphism_swap(s: FinStruct, x: int, y: int) -> bool:
    perm = list(range(s.size))
    perm[x], perm[y] = y, x
    return s.relabel(perm) == s


def canonical_form(s: FinStruct) -> Canon:
    """Isomorphism-invariant relabelling by individualisation-refinement.

    Among the leaves of the search tree the lexicographically least encoding
    is kept.  Twins (elements whose transposition is an automorphism) are
    only individualised once per cell.
    """
    n = s.size
    if n == 0:
        return Canon(s, (), s.encoding())
    inc = _relation_incidences(s)
    best: list = [None, None]

    def leaf(colors):
        labeling = tuple(int(c) for c in colors)
        cs = s.relabel(labeling)
        enc = cs.encoding()
        if best[0] is None or enc < best[0]:
            best[0], best[1] = enc, (cs, labeling)

    def search(colors):
        colors = _refine(s, colors, inc)
        counts = np.bincount(colors, minlength=n)
        if np.all(counts <= 1):
            leaf(colors)
            return
        target = int(np.flatnonzero(counts > 1)[0])
        cell = [int(x) for x in np.flatnonzero(colors == target)]
        tried: list[int] = []
        for x in cell:
            if any(_is_automorphism_swap(s, x, y) and _swap_respects(colors, x, y) for y in tried):
                continue
            tried.append(x)
            c = np.where(colors > target, 2 * colors + 1, 2 * colors)
            c[x] = 2 * target - 1 if target > 0 else -1
            # re-rank to 0..n-1 preserving order
            _, ranks = np.unique(c, return_inverse=True)
            search(ranks.astype(np.int64))

    search(_initial_colors(s))
    cs, labeling = best[1]
    return Canon(cs, labeling, best[0])


def _swap_respects(colors: np.ndarray, x: int, y: int) -> bool:
    return colors[x] == colors[y]


def is_isomorphic(a: FinStruct, b: FinStruct) -> bool:
    if a.sig != b.sig:
        raise StructureError("signature mismatch")
    return a.size == b.size and canonical_form(a).certificate == canonical_form(b).certificate


def find_isomorphism(a: FinStruct, b: FinStruct) -> dict[int, int] | None:
    if not is_isomorphic(a, b):
        return None
    la, lb = canonical_form(a).labeling, canonical_form(b).labeling
    inv_b = {v: k for k, v in enumerate(lb)}
    return {x: inv_b[la[x]] for x in range(a.size)}


def automorphisms(s: FinStruct) -> list[tuple[int, ...]]:
    """All automorphisms by brute force (small structures only)."""
    out = []
    for perm in itertools.permutations(range(s.size)):
        if s.relabel(perm) == s:
            out.append(perm)
    return out
