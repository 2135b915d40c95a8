"""Amalgamation classes at desk scale.

Class rules describe a hereditary class of finite structures through
membership and one-point extensions.  On top of them this module enumerates
catalogs, audits HP/JEP/AP, grows finite approximations of the Fraisse limit
by realizing missing one-point extensions, and compares structures with an
Ehrenfeucht-Fraisse game on quantifier-free types.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .intertwined import audit_tn, build_Tn, tn_signature
from .structures import (
    FinStruct,
    RelSym,
    Signature,
    StructureError,
    automorphisms,
    canonical_form,
    find_isomorphism,
    is_strict_total_order,
    order_ranks,
    orders_signature,
    qf_type,
)

HOLDS, FAILS, UNKNOWN = "HOLDS", "FAILS", "UNKNOWN"
CATALOG_SIZE_GUARD = 8


class FraisseError(ValueError):
    pass


def _strict_from_ranks(ranks: np.ndarray) -> np.ndarray:
    return ranks[:, None] < ranks[None, :]


def _insert_rank(ranks: np.ndarray, pos: int) -> np.ndarray:
    """Ranks after inserting a new element at rank ``pos`` (new element last)."""
    shifted = ranks + (ranks >= pos)
    return np.append(shifted, pos)


def _grow(s: FinStruct, tables: dict) -> FinStruct:
    return FinStruct(s.sig, s.size + 1, tables)


# ---------------------------------------------------------------------------
# class rules


class ClassRule:
    """A hereditary class of finite structures in a fixed signature."""

    name = "rule"
    sig: Signature
    hereditary = True
    size_cap: int | None = None

    def contains(self, s: FinStruct) -> bool:
        raise NotImplementedError

    def one_point_extensions(self, s: FinStruct) -> list[FinStruct]:
        """All members of size ``|s|+1`` whose first ``|s|`` points induce ``s``."""
        raise NotImplementedError

    def extend(self, s: FinStruct, A: Sequence[int], ext: FinStruct, rng) -> FinStruct:
        """A member ``s'`` of size ``|s|+1`` extending ``s`` whose new point realizes ``ext`` over ``A``."""
        raise FraisseError(f"class {self.name} has no extension closure")

    def uniform_extension_count(self, n: int) -> int | None:
        """Number of one-point extension types over any n-element member, when that is uniform."""
        return None

    def empty(self) -> FinStruct:
        return FinStruct(self.sig, 0)


class OrdersRule(ClassRule):
    """Finite sets carrying ``k`` independent linear orders."""

    def __init__(self, k: int):
        if k < 1:
            raise FraisseError("need at least one order")
        self.k = k
        self.name = f"orders:{k}"
        self.sig = orders_signature(k)

    def contains(self, s):
        return s.sig == self.sig and all(is_strict_total_order(s.tables[r.name]) for r in self.sig.relations)

    def _at(self, s, positions):
        tabs = {}
        for r, pos in zip(self.sig.relations, positions):
            tabs[r.name] = _strict_from_ranks(_insert_rank(order_ranks(s.tables[r.name]), pos))
        return _grow(s, tabs)

    def one_point_extensions(self, s):
        return [self._at(s, cut) for cut in itertools.product(range(s.size + 1), repeat=self.k)]

    def extend(self, s, A, ext, rng):
        A = list(A)
        positions = []
        for r in self.sig.relations:
            ranks = order_ranks(s.tables[r.name])
            below = int(ext.tables[r.name][: len(A), len(A)].sum())
            a_ranks = np.sort(ranks[A]) if A else np.array([], dtype=np.int64)
            lo = int(a_ranks[below - 1]) + 1 if below > 0 else 0
            hi = int(a_ranks[below]) if below < len(A) else s.size
            positions.append(int(rng.integers(lo, hi + 1)))
        return self._at(s, positions)

    def uniform_extension_count(self, n):
        return (n + 1) ** self.k


class GraphRule(ClassRule):
    """Finite simple graphs, optionally with at most ``cap`` vertices."""

    def __init__(self, cap: int | None = None):
        self.size_cap = cap
        self.name = "graph" if cap is None else f"graph-bounded:{cap}"
        self.sig = Signature((RelSym("E", 2),))

    def contains(self, s):
        e = s.tables["E"]
        if self.size_cap is not None and s.size > self.size_cap:
            return False
        return not np.any(np.diag(e)) and np.array_equal(e, e.T)

    def _at(self, s, nbrs):
        n = s.size
        e = np.zeros((n + 1, n + 1), dtype=bool)
        e[:n, :n] = s.tables["E"]
        e[n, :n] = nbrs
        e[:n, n] = nbrs
        return _grow(s, {"E": e})

    def one_point_extensions(self, s):
        if self.size_cap is not None and s.size >= self.size_cap:
            return []
        return [self._at(s, np.array(bits, dtype=bool)) for bits in itertools.product((False, True), repeat=s.size)]

    def extend(self, s, A, ext, rng):
        if self.size_cap is not None and s.size >= self.size_cap:
            raise FraisseError("size cap reached")
        nbrs = rng.random(s.size) < 0.5
        A = list(A)
        if A:
            nbrs[A] = ext.tables["E"][len(A), : len(A)]
        return self._at(s, nbrs)

    def uniform_extension_count(self, n):
        if self.size_cap is not None:
            return None
        return 2 ** n


class RMonotoneRule(ClassRule):
    """Two linear orders and a binary R with a'<=0 a R b <=1 b' => a' R b' and no a R a.

    Equivalently every row of R is an up-set of the second order, and rows
    shrink as one moves up the first order.
    """

    name = "rmono"

    def __init__(self):
        self.sig = Signature((RelSym("le0", 2, "linear-order"), RelSym("le1", 2, "linear-order"), RelSym("R", 2)))

    def contains(self, s):
        if s.sig != self.sig:
            return False
        l0, l1, R = s.tables["le0"], s.tables["le1"], s.tables["R"]
        if not (is_strict_total_order(l0) and is_strict_total_order(l1)):
            return False
        if np.any(np.diag(R)):
            return False
        eye = np.eye(s.size, dtype=bool)
        le0 = (l0 | eye).astype(np.int64)
        le1 = (l1 | eye).astype(np.int64)
        closure = (le0 @ R.astype(np.int64) @ le1) > 0
        return not np.any(closure & ~R)

    def _options_at(self, s, c0, c1):
        n = s.size
        r0 = _insert_rank(order_ranks(s.tables["le0"]), c0)
        r1 = _insert_rank(order_ranks(s.tables["le1"]), c1)
        R = s.tables["R"]
        # whether p may / must join each old row, keeping it an up-set of le1
        choices = []
        for a in range(n):
            members = r1[:n][R[a]]
            outs = r1[:n][~R[a]]
            can_in = not np.any(outs > c1)
            can_out = not np.any(members < c1)
            choices.append([v for v, ok in ((False, can_out), (True, can_in)) if ok])
        l0 = _strict_from_ranks(r0)
        l1 = _strict_from_ranks(r1)
        out = []
        for col in itertools.product(*choices):
            for thr in range(c1 + 1, n + 2):
                big = np.zeros((n + 1, n + 1), dtype=bool)
                big[:n, :n] = R
                big[:n, n] = col
                big[n] = r1 >= thr
                t = FinStruct(self.sig, n + 1, {"le0": l0, "le1": l1, "R": big})
                if self.contains(t):
                    out.append(t)
        return out

    def one_point_extensions(self, s):
        out = []
        for c0, c1 in itertools.product(range(s.size + 1), repeat=2):
            out.extend(self._options_at(s, c0, c1))
        return out

    def extend(self, s, A, ext, rng):
        A = list(A)
        target = ext.encoding()
        intervals = []
        for name in ("le0", "le1"):
            ranks = order_ranks(s.tables[name])
            below = int(ext.tables[name][: len(A), len(A)].sum())
            a_ranks = np.sort(ranks[A]) if A else np.array([], dtype=np.int64)
            lo = int(a_ranks[below - 1]) + 1 if below > 0 else 0
            hi = int(a_ranks[below]) if below < len(A) else s.size
            intervals.append(range(lo, hi + 1))
        cuts = list(itertools.product(*intervals))
        for i in rng.permutation(len(cuts)):
            c0, c1 = cuts[i]
            good = [t for t in self._options_at(s, c0, c1) if t.pullback(A + [s.size]).encoding() == target]
            if good:
                return good[int(rng.integers(len(good)))]
        raise FraisseError("no consistent placement for the requested extension")


class TableRule(ClassRule):
    """A user-supplied finite list of structures, closed under isomorphism."""

    def __init__(self, members: Iterable[FinStruct], name: str = "table"):
        members = list(members)
        if not members:
            raise FraisseError("empty table")
        self.sig = members[0].sig
        self.name = name
        self._certs = {}
        for m in members:
            if m.sig != self.sig:
                raise FraisseError("table members disagree on signature")
            self._certs.setdefault(canonical_form(m).certificate, m)
        self.members = list(self._certs.values())
        self.size_cap = max(m.size for m in self.members)
        self.hereditary = all(
            self.contains(m.substructure([x for x in range(m.size) if x != p])) for m in self.members for p in range(m.size)
        )

    def contains(self, s):
        return s.sig == self.sig and canonical_form(s).certificate in self._certs

    def one_point_extensions(self, s):
        seen, out = set(), []
        for m in self.members:
            if m.size != s.size + 1:
                continue
            for p in range(m.size):
                rest = [x for x in range(m.size) if x != p]
                iso = find_isomorphism(s, m.pullback(rest))
                if iso is None:
                    continue
                order = [rest[iso[x]] for x in range(s.size)] + [p]
                t = m.pullback(order)
                if t.pullback(list(range(s.size))) != s:
                    continue
                key = t.encoding()
                if key not in seen:
                    seen.add(key)
                    out.append(t)
        return out


class TnRule(ClassRule):
    """The finite T_n class; its members are grown block by block, see :mod:`intertwined`."""

    def __init__(self, n: int):
        self.n = n
        self.name = f"tn:{n}"
        self.sig = tn_signature(n)

    def contains(self, s):
        return s.sig == self.sig and all(audit_tn(s, self.n).values())

    def one_point_extensions(self, s):
        raise FraisseError("T_n members grow by whole blocks; use build_Tn")


def parse_rule(text: str) -> ClassRule:
    """Rule from a short name: ``orders:k``, ``graph``, ``graph-bounded:K``, ``rmono``, ``tn:n``."""
    head, _, arg = text.partition(":")
    if head == "orders":
        return OrdersRule(int(arg or 1))
    if head == "graph":
        return GraphRule()
    if head == "graph-bounded":
        return GraphRule(int(arg))
    if head == "rmono":
        return RMonotoneRule()
    if head == "tn":
        return TnRule(int(arg or 1))
    raise FraisseError(f"unknown class rule {text!r}")


# ---------------------------------------------------------------------------
# catalogs


@dataclass
class Catalog:
    rule: ClassRule
    max_size: int
    members: dict[int, list[FinStruct]]

    @property
    def sig(self):
        return self.rule.sig

    def counts(self) -> list[int]:
        return [len(self.members.get(n, [])) for n in range(self.max_size + 1)]

    def all_members(self) -> list[FinStruct]:
        return [m for n in range(self.max_size + 1) for m in self.members.get(n, [])]

    def contains(self, s: FinStruct) -> bool:
        if s.size > self.max_size:
            return self.rule.contains(s)
        cert = canonical_form(s).certificate
        return any(canonical_form(m).certificate == cert for m in self.members.get(s.size, []))


def _dedupe(structs: Iterable[FinStruct]) -> list[FinStruct]:
    seen: dict[bytes, FinStruct] = {}
    for s in structs:
        cf = canonical_form(s)
        seen.setdefault(cf.certificate, cf.struct)
    return [seen[k] for k in sorted(seen)]


def enumerate_catalog(rule: ClassRule, max_size: int) -> Catalog:
    """All members up to ``max_size``, one canonical copy per isomorphism type."""
    if max_size > CATALOG_SIZE_GUARD:
        raise FraisseError(f"max-size {max_size} exceeds the guard {CATALOG_SIZE_GUARD}")
    members: dict[int, list[FinStruct]] = {}
    if isinstance(rule, TableRule):
        for n in range(max_size + 1):
            members[n] = _dedupe(m for m in rule.members if m.size == n)
        return Catalog(rule, max_size, members)
    members[0] = [rule.empty()]
    for n in range(1, max_size + 1):
        members[n] = _dedupe(t for m in members[n - 1] for t in rule.one_point_extensions(m))
    return Catalog(rule, max_size, members)


# ---------------------------------------------------------------------------
# HP / JEP / AP


@dataclass
class AmalgamationReport:
    hp: str
    jep: str
    ap: str
    counterexample: dict | None = None
    spans_checked: int = 0

    def as_dict(self):
        d = {"HP": self.hp, "JEP": self.jep, "AP": self.ap, "spans-checked": self.spans_checked}
        if self.counterexample:
            d["counterexample"] = {k: (v.to_json() if isinstance(v, FinStruct) else v) for k, v in self.counterexample.items()}
        return d


def _extensions_over(rule: ClassRule, A: FinStruct, d: int) -> list[FinStruct]:
    layer = [A]
    for _ in range(d):
        nxt: dict[bytes, FinStruct] = {}
        for s in layer:
            for t in rule.one_point_extensions(s):
                nxt.setdefault(t.encoding(), t)
        layer = list(nxt.values())
    return layer


def find_amalgam(rule: ClassRule, a: int, B: FinStruct, C: FinStruct, max_size: int):
    """Search an amalgam of B and C over their common first ``a`` points.

    Returns ``(D, image)`` where D extends B and ``image[j]`` is the point of
    D receiving point j of C, ``"bound"`` if the search was cut by
    ``max_size``, or ``None`` when no amalgam exists (within the size cap).
    """
    hit_bound = [False]

    def search(D, image):
        j = len(image)
        if j == C.size:
            return D, image
        prefix = C.pullback(list(range(j + 1))).encoding()
        used = set(image)
        for y in range(a, D.size):
            if y in used:
                continue
            if D.pullback(image + [y]).encoding() == prefix:
                r = search(D, image + [y])
                if r is not None:
                    return r
        if D.size >= max_size:
            hit_bound[0] = True
            return None
        for E in rule.one_point_extensions(D):
            if E.pullback(image + [D.size]).encoding() == prefix:
                r = search(E, image + [D.size])
                if r is not None:
                    return r
        return None

    res = search(B, list(range(a)))
    if res is None and hit_bound[0] and (rule.size_cap is None or rule.size_cap > max_size):
        return "bound"
    return res


def check_amalgamation(cat: Catalog) -> AmalgamationReport:
    """HP, JEP and AP over the catalog.

    AP is checked for spans A <= B, A <= C with |B|+|C|-|A| <= max-size, so
    that every possible amalgam lies within the bound; when the class has a
    size cap the search is exact for all spans with |B|,|C| <= max-size.
    JEP is AP over the empty structure.
    """
    rule, N = cat.rule, cat.max_size
    hp = HOLDS
    cex = None
    for m in cat.all_members():
        for p in range(m.size):
            sub = m.substructure([x for x in range(m.size) if x != p])
            if not cat.contains(sub):
                hp = FAILS
                cex = cex or {"kind": "HP", "member": m, "removed": p}
    verdict = {"JEP": HOLDS, "AP": HOLDS}
    spans = 0
    capped = rule.size_cap is not None and rule.size_cap <= N
    for a in range(N):
        for A in cat.members.get(a, []):
            for db in range(1, N - a + 1):
                for dc in range(db, N - a + 1):
                    if a + db + dc > N and not capped:
                        continue
                    Bs = _extensions_over(rule, A, db)
                    Cs = Bs if dc == db else _extensions_over(rule, A, dc)
                    for B in Bs:
                        for C in Cs:
                            spans += 1
                            res = find_amalgam(rule, a, B, C, N)
                            key = "JEP" if a == 0 else "AP"
                            if res is None:
                                if verdict[key] != FAILS:
                                    verdict[key] = FAILS
                                    if cex is None or (key == "AP" and cex["kind"] != "AP"):
                                        cex = {"kind": key, "A": A, "B": B, "C": C}
                            elif isinstance(res, str) and verdict[key] == HOLDS:
                                verdict[key] = UNKNOWN
    if verdict["JEP"] == FAILS and verdict["AP"] == HOLDS:
        verdict["AP"] = FAILS
    return AmalgamationReport(hp, verdict["JEP"], verdict["AP"], cex, spans)


# ---------------------------------------------------------------------------
# generic approximations


@dataclass
class GenericApprox:
    struct: FinStruct
    ep_level: int
    rule: ClassRule
    seed: int
    core: tuple[int, ...] = ()
    extra: dict = field(default_factory=dict)

    def sidecar(self) -> dict:
        return {"ep-level": self.ep_level, "seed": self.seed, "class": self.rule.name, "core": list(self.core)}


@dataclass(frozen=True)
class MissingExtension:
    A: tuple[int, ...]
    ext: FinStruct

    def describe(self) -> dict:
        return {"A": list(self.A), "extension": self.ext.to_json()}


def _realized(s: FinStruct, A: list[int]) -> set[bytes]:
    Aset = set(A)
    return {s.pullback(A + [x]).encoding() for x in range(s.size) if x not in Aset}


def check_extension_property(s: FinStruct, rule: ClassRule, m: int, core: Sequence[int] | None = None) -> list[MissingExtension]:
    """Unrealized one-point extensions over subsets of ``core`` of size < m.

    ``core`` defaults to the whole universe.  A realizer may be any element
    of ``s`` outside A.  An empty result means the audit passed.
    """
    if m > 4:
        raise FraisseError("exhaustive audit supports m <= 4")
    core = list(range(s.size)) if core is None else sorted(int(c) for c in core)
    missing = []
    for size in range(min(m, len(core) + 1)):
        for A in itertools.combinations(core, size):
            A = list(A)
            have = _realized(s, A)
            for ext in rule.one_point_extensions(s.pullback(A)):
                if ext.encoding() not in have:
                    missing.append(MissingExtension(tuple(A), ext))
    return missing


def _fill(s, rule, m, core, rng, limit):
    """Realize every missing extension over the core; None if ``limit`` is exceeded."""
    while True:
        missing = check_extension_property(s, rule, m, core)
        if not missing:
            return s
        for miss in missing:
            A = list(miss.A)
            if miss.ext.encoding() in _realized(s, A):
                continue
            if s.size >= limit:
                return None
            s = rule.extend(s, A, miss.ext, rng)


def build_generic(rule: ClassRule, target_size: int, m: int, seed: int, max_iter: int = 10_000) -> GenericApprox:
    """Finite approximation of the Fraisse limit with level-m extensions over a core.

    Missing extensions are realized first-in first-out with seeded insertion
    positions; the core then grows by the oldest non-core point as long as
    restoring the extension property stays within ``target_size``; points
    that do not fit are skipped and later ones are tried.  Remaining
    room is filled with random points.
    """
    if isinstance(rule, TnRule):
        t = build_Tn(rule.n, target_size, seed, m)
        return GenericApprox(t.struct, m, rule, seed, t.core)
    rng = np.random.default_rng(seed)
    s = _fill(rule.empty(), rule, m, [], rng, target_size)
    if s is None:
        s = rule.empty()
    core: list[int] = []
    rejected: set[int] = set()
    steps = 0
    while True:
        steps += 1
        if steps > max_iter:
            raise FraisseError("iteration cap exceeded")
        cand = next((x for x in range(s.size) if x not in core and x not in rejected), None)
        if cand is None:
            if s.size >= target_size or rejected:
                break
            s = _random_point(rule, s, rng)
            continue
        state = rng.bit_generator.state
        t = _fill(s, rule, m, core + [cand], rng, target_size)
        if t is None:
            rng.bit_generator.state = state
            rejected.add(cand)
            continue
        s, core = t, core + [cand]
    while s.size < target_size:
        s = _random_point(rule, s, rng)
    return GenericApprox(s, m, rule, seed, tuple(core))


def _random_point(rule, s, rng):
    exts = rule.one_point_extensions(rule.empty())
    return rule.extend(s, [], exts[int(rng.integers(len(exts)))], rng)


# ---------------------------------------------------------------------------
# isomorphism and homogeneity


@dataclass(frozen=True)
class IsoVerdict:
    kind: str  # "ISO", "NONE" or "PARTIAL-ISO"
    depth: int | None = None
    positive: bool = False
    mapping: dict | None = None

    def __str__(self):
        if self.kind == "PARTIAL-ISO":
            return f"PARTIAL-ISO({self.depth}) {'positive' if self.positive else 'negative'}"
        return self.kind


def back_and_forth_iso(s1: FinStruct, s2: FinStruct, depth: int = 3, core1=None, core2=None, exact_limit: int = 10) -> IsoVerdict:
    """Exact isomorphism for small structures, else a depth-bounded game.

    In the game the spoiler picks points from the cores (default: everything)
    and the duplicator may answer anywhere; positions are compared by
    quantifier-free type.
    """
    if s1.sig != s2.sig:
        raise StructureError("signature mismatch")
    if max(s1.size, s2.size) <= exact_limit:
        iso = find_isomorphism(s1, s2) if s1.size == s2.size else None
        return IsoVerdict("ISO", mapping=iso, positive=True) if iso is not None else IsoVerdict("NONE")
    c1 = list(range(s1.size)) if core1 is None else list(core1)
    c2 = list(range(s2.size)) if core2 is None else list(core2)
    memo: dict = {}

    def types_over(s, tup):
        out: dict = {}
        for x in range(s.size):
            out.setdefault(qf_type(s, list(tup) + [x]), []).append(x)
        return out

    def win(t1, t2, d):
        if d == 0:
            return True
        key = (t1, t2, d)
        if key in memo:
            return memo[key]
        ty1, ty2 = types_over(s1, t1), types_over(s2, t2)
        inv1 = {x: k for k, xs in ty1.items() for x in xs}
        inv2 = {x: k for k, xs in ty2.items() for x in xs}
        ok = True
        for side, core, inv, other in ((0, c1, inv1, ty2), (1, c2, inv2, ty1)):
            for x in core:
                answers = other.get(inv[x], [])
                if side == 0:
                    good = any(win(t1 + (x,), t2 + (y,), d - 1) for y in _prefer(answers, c2))
                else:
                    good = any(win(t1 + (y,), t2 + (x,), d - 1) for y in _prefer(answers, c1))
                if not good:
                    ok = False
                    break
            if not ok:
                break
        memo[key] = ok
        return ok

    return IsoVerdict("PARTIAL-ISO", depth, win((), (), depth))


def _prefer(answers, core):
    cs = set(core)
    return [y for y in answers if y in cs] + [y for y in answers if y not in cs]


HOMOGENEITY_SIZE_GUARD = 7


def is_homogeneous(s: FinStruct) -> bool:
    """Whether every isomorphism between substructures extends to an automorphism.

    Checked by comparing, for every tuple length, the partition of tuples of
    distinct elements by quantifier-free type with the partition into
    automorphism orbits.
    """
    if s.size > HOMOGENEITY_SIZE_GUARD:
        raise FraisseError(f"size {s.size} exceeds the guard {HOMOGENEITY_SIZE_GUARD}")
    auts = automorphisms(s)
    for k in range(1, s.size + 1):
        groups: dict = {}
        for t in itertools.permutations(range(s.size), k):
            groups.setdefault(qf_type(s, t), []).append(t)
        for members in groups.values():
            orbit = {tuple(g[x] for x in members[0]) for g in auts}
            if len(orbit) != len(members):
                return False
    return True


# ---------------------------------------------------------------------------
# property checks on approximations of the multi-order class


def _gap_tuples(s: FinStruct, F: Sequence[int]) -> np.ndarray:
    """Per element, the gap of F containing it in each order (-1 for members of F)."""
    F = list(F)
    out = np.empty((s.size, len(s.sig.relations)), dtype=np.int64)
    for i, r in enumerate(s.sig.relations):
        lt = s.tables[r.name]
        out[:, i] = lt[F].sum(axis=0) if F else 0
    if F:
        out[F] = -1
    return out


def check_density_of_types(approx: GenericApprox, k_max: int = 2) -> list[dict]:
    """Realize every k-point type placed in pairwise disjoint boxes cut by a frame.

    Frames are subsets of the core of size at most m-1; a box is one gap of
    the frame in each order, and the boxes of distinct points differ in
    every order.  Returns the failures (empty when the check passes).
    """
    s = approx.struct
    k = len(s.sig.relations)
    fails = []
    core = list(approx.core)
    for fsize in range(approx.ep_level):
        for F in itertools.combinations(core, fsize):
            gaps = _gap_tuples(s, F)
            elems = [x for x in range(s.size) if x not in F]
            boxes = list(itertools.product(range(fsize + 1), repeat=k))
            by_box: dict = {}
            for x in elems:
                by_box.setdefault(tuple(int(v) for v in gaps[x]), []).append(x)
            for npts in range(1, k_max + 1):
                for combo in itertools.product(boxes, repeat=npts):
                    if any(len({b[i] for b in combo}) < npts for i in range(k)):
                        continue
                    if _search_realizer(by_box, combo) is None:
                        fails.append({"frame": list(F), "boxes": [list(b) for b in combo]})
    return fails


def _search_realizer(by_box, combo):
    def rec(i, used):
        if i == len(combo):
            return list(used)
        for x in by_box.get(combo[i], []):
            if x not in used:
                r = rec(i + 1, used + [x])
                if r is not None:
                    return r
        return None

    return rec(0, [])


def check_product_factorization(approx: GenericApprox) -> list[dict]:
    """Realized cut configurations equal the product of their per-order projections.

    Over every frame from the core of size at most m-1 the realized 1-types
    (one gap per order) must form a full product; over the empty set, the
    realized pair sign patterns must too.
    """
    s = approx.struct
    k = len(s.sig.relations)
    fails = []
    for fsize in range(1, approx.ep_level):
        for F in itertools.combinations(approx.core, fsize):
            gaps = _gap_tuples(s, F)
            real = {tuple(int(v) for v in g) for x, g in enumerate(gaps) if x not in F}
            proj = [sorted({t[i] for t in real}) for i in range(k)]
            if real != set(itertools.product(*proj)):
                fails.append({"frame": list(F), "missing": sorted(set(itertools.product(*proj)) - real)})
    signs = set()
    tabs = [s.tables[r.name] for r in s.sig.relations]
    for x, y in itertools.permutations(range(s.size), 2):
        signs.add(tuple(bool(t[x, y]) for t in tabs))
    proj = [sorted({p[i] for p in signs}) for i in range(k)]
    if signs != set(itertools.product(*proj)):
        fails.append({"frame": "pairs", "missing": sorted(set(itertools.product(*proj)) - signs)})
    return fails


def type_census(s: FinStruct, arity: int = 2) -> Counter:
    """Multiset of quantifier-free types of all ``arity``-tuples (repetitions allowed)."""
    return Counter(qf_type(s, t) for t in itertools.product(range(s.size), repeat=arity))
