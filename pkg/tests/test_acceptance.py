"""Acceptance criteria, one test per criterion, each under its time limit.

A pass/fail line per criterion is printed at the end of the pytest run
(see conftest.py) and when this file is run as a script.
"""

import itertools
import json
import math
import random
import time

import pytest

from rankone import covers, gluing
from rankone.cli import main
from rankone.fraisse import OrdersRule, GraphRule, build_generic, check_density_of_types, check_product_factorization, enumerate_catalog, parse_rule
from rankone.intertwined import enumerate_intertwined, pair_census
from rankone.profiles import class_f_profile, classify_growth, distality_width, dlo_generic, f_profile, profile_pi, random_graph_fixture
from rankone.reducts import distinguish, enumerate_reducts, enumerate_subgroups, wreath_product

RESULTS: dict[int, tuple[bool, str]] = {}


def _cli_json(tmp, *argv):
    out = tmp / "out.json"
    code = main([*argv, "--out", str(out)])
    return code, json.loads(out.read_text())


# --- oracles ---------------------------------------------------------------


def _brute_class_count(spec):
    """Number of points after gluing, by repeated relabelling until stable."""
    label = {(f, p): (f, p) for f, s in enumerate(spec.sizes) for p in range(s)}
    pairs = [((o.a, o.a_from + t), (o.b, o.b_to - o.length + 1 + t)) for o in spec.overlaps for t in range(o.length)]
    changed = True
    while changed:
        changed = False
        for x, y in pairs:
            lo = min(label[x], label[y])
            for e in list(label):
                if label[e] in (label[x], label[y]) and label[e] != lo:
                    label[e] = lo
                    changed = True
    return len(set(label.values()))


def _permutation_patterns(k):
    """Distinct relative orders of the second order along the first, over all k-point sets."""
    return len({tuple(sorted(range(k), key=p.__getitem__)) for p in itertools.permutations(range(k))})


def _brute_square_audit(cx):
    m = len(cx.covers)
    units = [tuple(d if q == i else 0 for q in range(m)) for i in range(m) for d in (1, 2)]
    add = lambda a, b: tuple((x + y) % 3 for x, y in zip(a, b))  # noqa: E731
    bad = []
    for t in cx.cells:
        for e0, e1 in itertools.product(units, repeat=2):
            if e0 == e1 or add(e0, e1) == (0,) * m:
                continue
            a, b, c = add(t, e0), add(t, e1), add(add(t, e0), e1)
            if any(cx.transitions[a, c][cx.transitions[t, a][x]] != cx.transitions[b, c][cx.transitions[t, b][x]] for x in range(cx.fiber_size)):
                bad.append((t, e0, e1))
    return bad


def _contractible_paths(start, end, m, max_len):
    """Simple cell paths that never step between cells 0 and 2 in any coordinate."""
    out = []

    def dfs(path):
        if path[-1] == end:
            out.append(list(path))
        if len(path) >= max_len:
            return
        t = path[-1]
        for i in range(m):
            for d in (1, -1):
                v = t[i] + d
                if 0 <= v <= 2:
                    s = t[:i] + (v,) + t[i + 1 :]
                    if s not in path:
                        dfs(path + [s])

    dfs([start])
    return out


# --- criteria --------------------------------------------------------------


def c1(tmp):
    code, d = _cli_json(tmp, "reducts", "enumerate", "--n", "2")
    return code == 0 and d["count"] == len(d["descriptors"]) == 39, f"count={d['count']}"


def c2(tmp):
    ds, total = enumerate_reducts(1)
    return total == len(ds) == 5, f"count={total}"


def c3(tmp):
    got = [len(enumerate_subgroups(wreath_product(a, b))) for a, b in ((2, 0), (1, 1), (1, 0))]
    return got == [10, 5, 2], f"subgroups={got}"


def c4(tmp):
    ds, _ = enumerate_reducts(2)
    out = distinguish(ds, build_generic(OrdersRule(2), 20, 3, seed=0))
    return out["count"] == 39 and out["all-distinct"], f"distinct={out['distinct']}/39"


def c5(tmp):
    dlo = f_profile(dlo_generic(40, 3, seed=0), 6)
    graph = f_profile(random_graph_fixture(24, 4, seed=0), 4)
    ok = dlo.counts() == [2 * n + 1 for n in range(1, 7)] and all(dlo.exact)
    ok = ok and graph.counts() == [2 ** n + n for n in range(1, 5)] and all(graph.exact)
    return ok, f"dlo={dlo.counts()} graph={graph.counts()}"


def c6(tmp):
    verdicts = {}
    for name, rule in (("orders:1", OrdersRule(1)), ("orders:2", OrdersRule(2)), ("orders:3", OrdersRule(3)), ("graph", GraphRule())):
        runs = {str(classify_growth(class_f_profile(rule, 6))) for _ in range(2)}
        verdicts[name] = runs.pop() if len(runs) == 1 else "nondeterministic"
    ok = all(verdicts[f"orders:{k}"].startswith("polynomial") for k in (1, 2, 3)) and verdicts["graph"] == "exponential"
    return ok, " ".join(f"{k}={v}" for k, v in verdicts.items())


def c7(tmp):
    dlo = profile_pi(dlo_generic(40, 3, seed=0), 5).counts()
    two = profile_pi(enumerate_catalog(parse_rule("orders:2"), 5), 5).counts()
    want = [_permutation_patterns(k) for k in range(1, 6)]
    ok = dlo == [1] * 5 and two == want == [math.factorial(k) for k in range(1, 6)]
    return ok, f"dlo={dlo} orders:2={two}"


def c8(tmp):
    d = str(distality_width(dlo_generic(40, 3, seed=0), 5))
    g = str(distality_width(random_graph_fixture(24, 4, seed=0), 5))
    return d == "2" and g == "NONE(5)", f"dlo={d} graph={g}"


def c9(tmp):
    got = {}
    ok = True
    for n in (2, 3):
        out, distinct = enumerate_intertwined(n, 8, seed=0)
        keys = {frozenset(pair_census(s).items()) for _, s in out}
        got[n] = len(out)
        ok = ok and distinct and len(out) == len(keys) == math.factorial(n)
    return ok, f"T2={got[2]} T3={got[3]}"


def c10(tmp):
    cyc = gluing.IntertwiningSpec.simple([6, 6, 6], [(0, 1, 2), (1, 2, 2), (2, 0, 2)])
    chain = gluing.IntertwiningSpec.simple([5, 5, 5], [(0, 1, 2), (1, 2, 2)])
    bad = gluing.IntertwiningSpec.simple([4, 4, 4], [(0, 1, 3), (1, 2, 3), (0, 2, 1)])
    cc = gluing.glue(cyc)
    lc = gluing.glue(chain)
    kinds = [v["kind"] for v in gluing.validate_spec(bad)]
    ok = len(cc) == 1 and cc[0].kind == "circular" and cc[0].size == _brute_class_count(cyc)
    ok = ok and len(lc) == 1 and lc[0].kind == "linear" and lc[0].size == _brute_class_count(chain)
    ok = ok and "composition" in kinds
    return ok, f"cycle={cc[0].kind}/{cc[0].size} chain={lc[0].kind}/{lc[0].size} perturbed={kinds}"


def c11(tmp):
    s2 = covers.cover_from_section([0, 1] * 6, 2)
    s3 = covers.cover_from_section([0, 1, 2] * 4, 3)
    single = covers.format_invariant(covers.classify_monodromy(covers.monodromy(covers.build_complex([s3], [(0, 4, 8)]))))
    act = covers.monodromy(covers.build_complex([s2, s3]))
    inv = covers.classify_monodromy(act)
    ok = single == "{(3,(3))}" and covers.format_invariant(inv) == "{(6,(2,3))}" and len(act.orbits()) == 1
    honest = [covers.build_complex([covers.build_cover(12, 2, s), covers.build_cover(18, 3, s + 7)]) for s in range(3)]
    honest.append(covers.build_complex([s2, s3]))
    ok = ok and all(covers.check_square(cx) is None and _brute_square_audit(cx) == [] for cx in honest)
    bad = covers.perturb_transition(honest[-1], (0, 0), (1, 0), (0, 1))
    cex = covers.check_square(bad)
    ok = ok and cex is not None and (tuple(cex["cell"]), tuple(cex["e0"]), tuple(cex["e1"])) in _brute_square_audit(bad)
    rng = random.Random(0)
    for _ in range(20):
        perm = list(range(act.fiber))
        rng.shuffle(perm)
        ok = ok and covers.classify_monodromy(act.relabel(perm)) == inv
    return ok, f"S(3)={single} S(2)xS(3)={covers.format_invariant(inv)} perturbation={'found' if cex else 'missed'}"


def c12(tmp):
    notes = []
    ok = True
    for n in (1, 2, 3):
        bad = check_density_of_types(build_generic(parse_rule(f"orders:{n}"), 40, 3, seed=3), 2)
        ok = ok and bad == []
    notes.append(f"density={'ok' if ok else 'fail'}")
    for n, m in ((1, 3), (2, 3), (3, 2)):
        ok = ok and check_product_factorization(build_generic(parse_rule(f"orders:{n}"), 25, m, seed=4)) == []
    notes.append(f"product={'ok' if ok else 'fail'}")
    base = [covers.build_cover(12, 2, 1), covers.build_cover(18, 3, 2), covers.build_cover(12, 2, 3)]
    npaths = 0
    for m in (1, 2, 3):
        cx = covers.build_complex(base[:m])
        for end in itertools.product(range(3), repeat=m):
            maps = set()
            for p in _contractible_paths((0,) * m, end, m, 2 * m + 3):
                maps.add(tuple(covers.path_map(cx, p)))
                npaths += 1
            ok = ok and len(maps) == 1
        ok = ok and covers.check_square(cx) is None
        for t in cx.cells:
            for s in cx.cells:
                if sum(a != b for a, b in zip(t, s)) == 1:
                    ok = ok and covers.path_map(cx, [t, s, t]).tolist() == list(range(cx.fiber_size))
    notes.append(f"path-maps={npaths}")
    return ok, " ".join(notes)


def c13(tmp):
    invocations = [
        ("profile", "--class", "orders:2", "--f", "--nmax", "4", "--size", "40", "--seed", "7", "--format", "csv"),
        ("reducts", "enumerate", "--n", "2"),
        ("monodromy", "--covers", "s2,s3", "--seed", "1", "classify"),
        ("fraisse", "generic", "--class", "orders:2", "--size", "20", "--seed", "5"),
        ("fraisse", "tn", "--n", "3", "--size", "6", "--seed", "2"),
        ("profile", "distality", "--class", "graph", "--size", "24", "--ep-level", "4", "--nmax", "3"),
    ]
    same = 0
    for argv in invocations:
        a, b = tmp / "a", tmp / "b"
        if main([*argv, "--out", str(a)]) == main([*argv, "--out", str(b)]) and a.read_bytes() == b.read_bytes():
            same += 1
    return same == len(invocations), f"identical={same}/{len(invocations)}"


CRITERIA = [
    (1, "reduct count n=2", c1, 5),
    (2, "reduct count n=1", c2, 1),
    (3, "subgroup censuses", c3, 5),
    (4, "reduct distinctness", c4, 60),
    (5, "type counting f(n)", c5, 30),
    (6, "growth dichotomy", c6, 60),
    (7, "profile pi", c7, 30),
    (8, "distality width", c8, 120),
    (9, "intertwined orders", c9, 30),
    (10, "gluing", c10, 1),
    (11, "monodromy", c11, 30),
    (12, "property suites", c12, 300),
    (13, "determinism", c13, 120),
]


def run_criterion(num, fn, limit, tmp):
    t0 = time.perf_counter()
    try:
        ok, detail = fn(tmp)
    except Exception as e:  # a crash is a failed criterion, reported like any other
        ok, detail = False, f"{type(e).__name__}: {e}"
    dt = time.perf_counter() - t0
    if dt > limit:
        ok, detail = False, f"{detail} (over the {limit} s limit)"
    RESULTS[num] = (ok, f"{detail} [{dt:.2f} s / {limit} s]")
    return ok, RESULTS[num][1]


@pytest.mark.parametrize("num,name,fn,limit", CRITERIA, ids=[f"criterion{c[0]:02d}" for c in CRITERIA])
def test_criterion(num, name, fn, limit, tmp_path):
    ok, detail = run_criterion(num, fn, limit, tmp_path)
    assert ok, f"criterion {num} ({name}): {detail}"


def summary_lines():
    names = {c[0]: c[1] for c in CRITERIA}
    return [f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {names[n]}: {d}" for n, (ok, d) in sorted(RESULTS.items())]


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        for num, _, fn, limit in CRITERIA:
            ok, detail = run_criterion(num, fn, limit, Path(d))
            print(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
