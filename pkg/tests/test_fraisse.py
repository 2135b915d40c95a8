import itertools

import numpy as np
import pytest

from rankone.fraisse import (
    FAILS,
    HOLDS,
    FraisseError,
    GraphRule,
    TableRule,
    back_and_forth_iso,
    build_generic,
    check_amalgamation,
    check_density_of_types,
    check_extension_property,
    check_product_factorization,
    enumerate_catalog,
    find_amalgam,
    is_homogeneous,
    parse_rule,
)
from rankone.structures import (
    FinStruct,
    RelSym,
    Signature,
    circular_structure,
    is_partial_iso,
    orders_structure,
)


def _brute_iso(a, b):
    return a.size == b.size and any(a.relabel(p) == b for p in itertools.permutations(range(a.size)))


def _brute_classes(structs):
    reps = []
    for s in structs:
        if not any(_brute_iso(s, r) for r in reps):
            reps.append(s)
    return reps


def test_catalog_counts_orders():
    assert enumerate_catalog(parse_rule("orders:1"), 4).counts() == [1, 1, 1, 1, 1]
    cat = enumerate_catalog(parse_rule("orders:2"), 3)
    labeled = [orders_structure([list(p), list(q)]) for p in itertools.permutations(range(3)) for q in itertools.permutations(range(3))]
    assert len(cat.members[3]) == len(_brute_classes(labeled)) == 6


def test_catalog_rmono_size_two():
    rule = parse_rule("rmono")
    sig = rule.sig
    cands = []
    for p, q in itertools.product(itertools.permutations(range(2)), repeat=2):
        for bits in itertools.product((False, True), repeat=4):
            R = np.array(bits).reshape(2, 2)
            l0 = orders_structure([list(p)]).tables["le0"]
            l1 = orders_structure([list(q)]).tables["le0"]
            le0, le1 = l0 | np.eye(2, dtype=bool), l1 | np.eye(2, dtype=bool)
            ok = not R[0, 0] and not R[1, 1]
            for a2, a, b, b2 in itertools.product(range(2), repeat=4):
                if le0[a2, a] and R[a, b] and le1[b, b2] and not R[a2, b2]:
                    ok = False
            if ok:
                cands.append(FinStruct(sig, 2, {"le0": l0, "le1": l1, "R": R}))
    want = len(_brute_classes(cands))
    assert enumerate_catalog(rule, 2).counts()[2] == want == 3


def test_catalog_size_guard():
    with pytest.raises(FraisseError):
        enumerate_catalog(parse_rule("orders:1"), 9)


def test_amalgamation_orders():
    rep = check_amalgamation(enumerate_catalog(parse_rule("orders:1"), 5))
    assert (rep.hp, rep.jep, rep.ap) == (HOLDS, HOLDS, HOLDS)


def test_amalgamation_two_orders():
    rep = check_amalgamation(enumerate_catalog(parse_rule("orders:2"), 5))
    assert (rep.hp, rep.jep, rep.ap) == (HOLDS, HOLDS, HOLDS)
    assert rep.spans_checked > 0


def _all_graphs(n):
    pairs = list(itertools.combinations(range(n), 2))
    sig = Signature((RelSym("E", 2),))
    for bits in itertools.product((False, True), repeat=len(pairs)):
        e = np.zeros((n, n), dtype=bool)
        for (i, j), b in zip(pairs, bits):
            e[i, j] = e[j, i] = b
        yield FinStruct(sig, n, {"E": e})


def test_bounded_graphs_fail_amalgamation():
    rule = GraphRule(cap=2)
    cat = enumerate_catalog(rule, 2)
    rep = check_amalgamation(cat)
    assert rep.ap == FAILS
    cex = rep.counterexample
    A, B, C = cex["A"], cex["B"], cex["C"]
    a = A.size
    # brute force: no graph on <= 2 vertices hosts both B and C over A
    found = False
    for n in range(1, 3):
        for D in _all_graphs(n):
            for fb in itertools.permutations(range(n), B.size):
                if not is_partial_iso(B, D, dict(enumerate(fb))):
                    continue
                for fc in itertools.permutations(range(n), C.size):
                    if list(fc[:a]) == list(fb[:a]) and is_partial_iso(C, D, dict(enumerate(fc))):
                        found = True
    assert not found
    # the counterexample persists with a larger bound
    assert check_amalgamation(enumerate_catalog(rule, 3)).ap == FAILS


def test_find_amalgam_identifies_points():
    rule = parse_rule("orders:1")
    B = orders_structure([[0, 1]])
    D, image = find_amalgam(rule, 1, B, B, 3)
    assert D.size == 2 and image == [0, 1]


def test_table_rule_matches_builtin():
    cat = enumerate_catalog(parse_rule("orders:2"), 3)
    table = TableRule(cat.all_members())
    assert table.hereditary
    tcat = enumerate_catalog(table, 3)
    assert tcat.counts() == cat.counts()
    # the table stops at size 3, so spans of two 3-point structures over a point cannot amalgamate
    assert check_amalgamation(tcat).ap == FAILS
    assert check_amalgamation(cat).ap == HOLDS


def test_extension_property_finite_chain():
    chain = orders_structure([list(range(5))])
    assert len(check_extension_property(chain, parse_rule("orders:1"), 2)) == 2


def _brute_missing_cut_pairs(s, m):
    n = s.size
    ranks = [s.tables[f"le{i}"].sum(axis=0) for i in range(2)]
    out = set()
    for size in range(m):
        for A in itertools.combinations(range(n), size):
            rest = [x for x in range(n) if x not in A]
            have = set()
            for x in rest:
                have.add(tuple(sum(ranks[i][a] < ranks[i][x] for a in A) for i in range(2)))
            for cut in itertools.product(range(size + 1), repeat=2):
                if cut not in have:
                    out.add((A, cut))
    return out


def test_extension_property_random_two_orders():
    rng = np.random.default_rng(11)
    s = orders_structure([list(rng.permutation(6)), list(rng.permutation(6))])
    got = check_extension_property(s, parse_rule("orders:2"), 3)
    got_set = set()
    for miss in got:
        k = len(miss.A)
        cut = tuple(int(miss.ext.tables[f"le{i}"][:k, k].sum()) for i in range(2))
        got_set.add((miss.A, cut))
    assert got_set == _brute_missing_cut_pairs(s, 3)
    assert len(got) == len(got_set)


def test_generic_dlo_and_two_orders():
    g = build_generic(parse_rule("orders:1"), 15, 3, seed=0)
    assert g.struct.size >= 7
    assert not check_extension_property(g.struct, g.rule, 3, g.core)
    g2 = build_generic(parse_rule("orders:2"), 40, 3, seed=1)
    assert g2.struct.size == 40 and len(g2.core) >= 2
    assert not check_extension_property(g2.struct, g2.rule, 3, g2.core)


@pytest.mark.parametrize("seed", range(20))
def test_generic_passes_audit_across_seeds(seed):
    rule = parse_rule("orders:2")
    g = build_generic(rule, 15, 3, seed)
    assert g.rule.contains(g.struct)
    assert not check_extension_property(g.struct, rule, 3, g.core)


def test_generic_graph_and_rmono():
    g = build_generic(parse_rule("graph"), 16, 3, seed=2)
    assert not check_extension_property(g.struct, g.rule, 3, g.core)
    r = build_generic(parse_rule("rmono"), 14, 2, seed=2)
    assert r.rule.contains(r.struct)
    assert not check_extension_property(r.struct, r.rule, 2, r.core)


def test_generic_is_deterministic():
    a = build_generic(parse_rule("orders:2"), 20, 3, seed=5)
    b = build_generic(parse_rule("orders:2"), 20, 3, seed=5)
    assert a.struct == b.struct and a.core == b.core


def test_back_and_forth_examples():
    s = orders_structure([[0, 1, 2, 3], [2, 0, 3, 1]])
    v = back_and_forth_iso(s, s.relabel([3, 1, 0, 2]))
    assert v.kind == "ISO" and v.mapping is not None
    same = orders_structure([[0, 1, 2], [0, 1, 2]])
    rev = orders_structure([[0, 1, 2], [2, 1, 0]])
    assert back_and_forth_iso(same, rev).kind == "NONE"


def test_back_and_forth_generics():
    rule = parse_rule("orders:2")
    g1 = build_generic(rule, 40, 3, seed=1)
    g2 = build_generic(rule, 40, 3, seed=2)
    v = back_and_forth_iso(g1.struct, g2.struct, 3, g1.core, g2.core)
    assert v.kind == "PARTIAL-ISO" and v.depth == 3 and v.positive
    # a structure whose orders agree loses quickly
    flat = orders_structure([list(range(40)), list(range(40))])
    assert not back_and_forth_iso(g1.struct, flat, 2, g1.core).positive


def _brute_homogeneous(s):
    auts = [p for p in itertools.permutations(range(s.size)) if s.relabel(p) == s]
    for k in range(1, s.size + 1):
        for dom in itertools.combinations(range(s.size), k):
            for img in itertools.permutations(range(s.size), k):
                m = dict(zip(dom, img))
                if is_partial_iso(s, s, m) and not any(all(g[x] == y for x, y in m.items()) for g in auts):
                    return False
    return True


def _cycle(n):
    e = np.zeros((n, n), dtype=bool)
    for i in range(n):
        e[i, (i + 1) % n] = e[(i + 1) % n, i] = True
    return FinStruct(Signature((RelSym("E", 2),)), n, {"E": e})


def test_homogeneity_matches_brute_force():
    sig = Signature((RelSym("le", 2, "linear-order"),), ("P",))
    marked = FinStruct.from_tuples(sig, 4, {"le": [(i, j) for i in range(4) for j in range(i + 1, 4)]}, {"P": [1]})
    path = FinStruct.from_tuples(Signature((RelSym("E", 2),)), 3, {"E": [(0, 1), (1, 0), (1, 2), (2, 1)]})
    cases = [
        orders_structure([[0]]),
        orders_structure([[0, 1, 2]]),
        circular_structure([0, 1, 2]),
        marked,
        path,
        _cycle(5),
        FinStruct(Signature((RelSym("E", 2),)), 4),
    ]
    for s in cases:
        assert is_homogeneous(s) == _brute_homogeneous(s)
    assert is_homogeneous(_cycle(5))
    assert not is_homogeneous(marked)
    assert not is_homogeneous(path)
    assert is_homogeneous(orders_structure([[0]]))
    # a finite chain has no non-trivial automorphism, so {0 -> 1} cannot extend
    assert not is_homogeneous(orders_structure([[0, 1, 2]]))
    with pytest.raises(FraisseError):
        is_homogeneous(orders_structure([list(range(8))]))


@pytest.mark.parametrize("n", [1, 2])
def test_density_of_types(n):
    g = build_generic(parse_rule(f"orders:{n}"), 40, 3, seed=3)
    assert len(g.core) >= 2
    assert check_density_of_types(g, 2) == []


def test_density_detects_gap():
    g = build_generic(parse_rule("orders:1"), 12, 3, seed=3)
    g.struct = orders_structure([list(range(12))])
    g.core = (0, 11)
    assert check_density_of_types(g, 1)


@pytest.mark.parametrize("n,m", [(1, 3), (2, 3), (3, 2)])
def test_product_factorization(n, m):
    g = build_generic(parse_rule(f"orders:{n}"), 25, m, seed=4)
    assert g.core
    assert check_product_factorization(g) == []


def test_product_factorization_detects_correlation():
    g = build_generic(parse_rule("orders:2"), 10, 2, seed=0)
    g.struct = orders_structure([list(range(10)), list(range(10))])
    g.core = (4,)
    assert check_product_factorization(g)
