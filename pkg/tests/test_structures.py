import itertools

import numpy as np
import pytest

from rankone.structures import (
    FinStruct,
    RelSym,
    Signature,
    StructureError,
    automorphisms,
    canonical_form,
    circular_structure,
    cut_circular,
    derive_betweenness,
    derive_circular,
    derive_separation,
    dumps,
    is_circular_order,
    is_isomorphic,
    is_partial_iso,
    is_strict_total_order,
    loads,
    order_from_sequence,
    orders_structure,
    qf_type,
    reverse_circular,
    reverse_order,
    validate,
)


def _random_order(rng, n):
    return list(rng.permutation(n))


def _brute_le(seq):
    rank = {x: i for i, x in enumerate(seq)}
    return lambda a, b: rank[a] <= rank[b]


def test_signature_rejects_kind_arity_mismatch():
    with pytest.raises(StructureError):
        RelSym("x", 3, "linear-order")
    with pytest.raises(StructureError):
        Signature((RelSym("a", 2), RelSym("a", 3)))


def test_betweenness_small():
    s = orders_structure([[0, 1, 2]])
    b = derive_betweenness(s, "le0")
    assert b[0, 1, 2] and b[2, 1, 0] and not b[1, 0, 2]
    s2 = orders_structure([[0, 1]])
    assert derive_betweenness(s2, "le0")[0, 0, 1]


def test_betweenness_brute_force():
    rng = np.random.default_rng(3)
    seq = _random_order(rng, 5)
    le = _brute_le(seq)
    b = derive_betweenness(orders_structure([seq]), "le0")
    for x, y, z in itertools.product(range(5), repeat=3):
        assert b[x, y, z] == ((le(x, y) and le(y, z)) or (le(z, y) and le(y, x)))


def test_circular_small_and_wraparound():
    c = derive_circular(orders_structure([[0, 1, 2]]), "le0")
    assert c[0, 1, 2] and c[1, 2, 0] and c[2, 0, 1] and not c[0, 2, 1]
    c4 = derive_circular(orders_structure([[0, 1, 2, 3]]), "le0")
    assert c4[3, 0, 2]


def test_circular_brute_force():
    rng = np.random.default_rng(4)
    seq = _random_order(rng, 6)
    le = _brute_le(seq)
    c = derive_circular(orders_structure([seq]), "le0")
    for x, y, z in itertools.product(range(6), repeat=3):
        want = (le(x, y) and le(y, z)) or (le(z, x) and le(x, y)) or (le(y, z) and le(z, x))
        assert c[x, y, z] == want
    assert is_circular_order(c)


def test_separation_examples_and_brute_force():
    s = circular_structure([0, 1, 2, 3])
    sep = derive_separation(s, "C")
    assert sep[0, 1, 2, 3]
    assert not sep[0, 2, 1, 3]
    rng = np.random.default_rng(5)
    cs = circular_structure(_random_order(rng, 5))
    C = cs.tables["C"]
    sep = derive_separation(cs, "C")
    for x, y, z, t in itertools.product(range(5), repeat=4):
        a = C[x, y, z] and C[y, z, t] and C[z, t, x] and C[t, x, y]
        b = C[t, z, y] and C[z, y, x] and C[y, x, t] and C[x, t, z]
        assert sep[x, y, z, t] == (a or b)


def test_derive_errors():
    s = orders_structure([[0, 1, 2]])
    with pytest.raises(StructureError):
        derive_betweenness(s, "missing")
    with pytest.raises(StructureError):
        derive_separation(s, "le0")


def test_reversal_invariance():
    rng = np.random.default_rng(6)
    seq = _random_order(rng, 6)
    s = orders_structure([seq])
    r = orders_structure([seq[::-1]])
    assert np.array_equal(derive_betweenness(s, "le0"), derive_betweenness(r, "le0"))
    c = circular_structure(seq)
    sep1 = derive_separation(c, "C")
    rc = FinStruct(c.sig, c.size, {"C": reverse_circular(c.tables["C"])})
    assert np.array_equal(sep1, derive_separation(rc, "C"))
    assert np.array_equal(reverse_order(s.tables["le0"]), r.tables["le0"])


def test_cut_recovers_order_minus_point():
    rng = np.random.default_rng(7)
    for _ in range(5):
        seq = _random_order(rng, 7)
        c = derive_circular(orders_structure([seq]), "le0")
        a = int(seq[2])
        lt, rest = cut_circular(c, a)
        assert is_strict_total_order(lt)
        # starting just after a and wrapping around
        i = seq.index(a)
        want = [int(x) for x in seq[i + 1:] + seq[:i]]
        got = sorted(rest, key=lambda x: int(lt[rest.index(x)].sum() * -1))
        assert got == want


def test_canonical_form_examples():
    s = orders_structure([[0, 1, 2], [2, 0, 1]])
    t = s.relabel([1, 2, 0])
    assert canonical_form(s).struct == canonical_form(t).struct
    a = orders_structure([[0, 1]])
    b = orders_structure([[1, 0]])
    assert canonical_form(a).struct == canonical_form(b).struct
    certs = {canonical_form(orders_structure([[0, 1, 2], list(p)])).certificate for p in itertools.permutations(range(3))}
    assert len(certs) == 6


def _brute_iso(a, b):
    return any(a.relabel(p) == b for p in itertools.permutations(range(a.size)))


def test_canonical_form_agrees_with_brute_force_on_graphs():
    rng = np.random.default_rng(8)
    sig = Signature((RelSym("E", 2),))
    graphs = []
    for _ in range(12):
        m = rng.random((5, 5)) < 0.4
        m = np.triu(m, 1)
        graphs.append(FinStruct(sig, 5, {"E": m | m.T}))
    for g in graphs:
        cf = canonical_form(g)
        assert is_isomorphic(cf.struct, g)
        assert canonical_form(cf.struct).struct == cf.struct
    for g, h in itertools.combinations(graphs, 2):
        assert is_isomorphic(g, h) == _brute_iso(g, h)


def test_qf_type_cuts():
    s = orders_structure([list(range(6))])
    A = [2, 3]
    assert qf_type(s, [0], A) == qf_type(s, [1], A)
    assert qf_type(s, [0], A) != qf_type(s, [5], A)
    with pytest.raises(StructureError):
        qf_type(s, [9], A)


def test_qf_type_agrees_with_partial_iso_check():
    rng = np.random.default_rng(9)
    s = orders_structure([list(rng.permutation(10)), list(rng.permutation(10))])
    for A in itertools.combinations(range(10), 3):
        for x, y in itertools.combinations([v for v in range(10) if v not in A], 2):
            m = {a: a for a in A}
            m[x] = y
            assert (qf_type(s, [x], A) == qf_type(s, [y], A)) == is_partial_iso(s, s, m)


def test_qf_type_refines_automorphism_orbits():
    # equal orbits imply equal types for every size <= 7 test structure
    structs = [circular_structure(list(range(n))) for n in range(1, 7)]
    sig = Signature((RelSym("E", 2),))
    c6 = np.zeros((6, 6), dtype=bool)
    for i in range(6):
        c6[i, (i + 1) % 6] = c6[(i + 1) % 6, i] = True
    structs.append(FinStruct(sig, 6, {"E": c6}))
    for s in structs:
        auts = automorphisms(s)
        for x, y in itertools.product(range(s.size), repeat=2):
            for g in auts:
                assert qf_type(s, [x, y]) == qf_type(s, [g[x], g[y]])


def test_json_round_trip_and_validation():
    s = orders_structure([[2, 0, 1], [0, 1, 2]])
    assert loads(dumps(s)) == s
    assert validate(s) == []
    bad = FinStruct(s.sig, 3, {"le0": np.zeros((3, 3), dtype=bool), "le1": s.tables["le1"]})
    assert validate(bad) == ["le0"]
    with pytest.raises(StructureError):
        FinStruct.from_json({"size": 3})


def test_degenerate_sizes():
    for n in (0, 1):
        s = orders_structure([list(range(n))])
        assert canonical_form(s).struct == s
        assert validate(s) == []
    assert is_circular_order(np.zeros((2, 2, 2), dtype=bool))


def test_order_from_sequence():
    t = order_from_sequence([2, 0, 1])
    assert t[2, 0] and t[0, 1] and t[2, 1] and not t[1, 0]
