"""Command-line front end.

Every random draw comes from ``numpy.random.default_rng(--seed)`` (PCG64),
so equal arguments give byte-identical output.  Exit status is 0 on a
passing verdict, 1 on a failing one and 2 on usage, input or guard errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import covers, fraisse, gluing, intertwined, profiles, reducts, structures

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CSV_COLUMNS = ("class", "kind", "n", "count", "exact")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output


def _to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): _to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, bytes):
        return x.hex()
    return x


def _emit(args, payload=None, rows=None):
    if args.format == "csv":
        if rows is None:
            raise UsageError("this command has no CSV output; use --format json")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(["" if v is None else v for v in r])
        text = buf.getvalue()
    else:
        text = json.dumps(_to_jsonable(payload), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _read_json(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None


def _read_struct(path: str) -> structures.FinStruct:
    d = _read_json(path)
    try:
        return structures.FinStruct.from_json(d.get("structure", d))
    except (KeyError, TypeError) as e:
        raise UsageError(f"{path}: not a structure ({e})") from None


def _rule(text):
    try:
        return fraisse.parse_rule(text)
    except fraisse.FraisseError as e:
        raise UsageError(str(e)) from None


def _approx(args):
    rule = _rule(args.cls)
    if isinstance(rule, fraisse.GraphRule):
        return profiles.random_graph_fixture(args.size, args.ep_level, args.seed)
    return fraisse.build_generic(rule, args.size, args.ep_level, args.seed)


# ---------------------------------------------------------------------------
# structures


def cmd_structures(args):
    if args.selftest:
        chain = structures.orders_structure([[0, 1, 2]])
        B = structures.derive_betweenness(chain, "le0")
        ok = bool(B[0, 1, 2] and B[2, 1, 0] and not B[1, 0, 2])
        a = structures.orders_structure([[2, 0, 1]])
        b = structures.orders_structure([[1, 2, 0]])
        ok = ok and structures.is_isomorphic(a, b)
        return _selftest(args, ok)
    s = _read_struct(args.input) if args.input else structures.orders_structure([[int(x) for x in args.sequence.split(",")]])
    if args.action == "derive":
        name = args.relation or s.sig.relations[0].name
        kind = s.sig.rel(name).kind
        if args.to == "betweenness":
            tab, rk = structures.derive_betweenness(s, name), "betweenness"
        elif args.to == "circular":
            tab, rk = structures.derive_circular(s, name), "circular-order"
        else:
            c = structures.derive_circular(s, name) if kind == "linear-order" else s.tables[name]
            tab, rk = structures.separation_from_circular(c), "separation"
        out = structures.FinStruct(
            structures.Signature((structures.RelSym(args.to[0].upper(), tab.ndim, rk),)), s.size, {args.to[0].upper(): tab}
        )
        _emit(args, {"structure": out.to_json()})
    else:
        cf = structures.canonical_form(s)
        _emit(args, {"certificate": cf.certificate, "labeling": list(cf.labeling), "structure": cf.struct.to_json()})
    return EXIT_OK


# ---------------------------------------------------------------------------
# fraisse


def cmd_fraisse(args):
    if args.selftest:
        cat = fraisse.enumerate_catalog(fraisse.OrdersRule(1), 4)
        ok = cat.counts() == [1, 1, 1, 1, 1]
        ok = ok and fraisse.check_amalgamation(fraisse.enumerate_catalog(fraisse.OrdersRule(1), 3)).ap == fraisse.HOLDS
        return _selftest(args, ok)
    a = args.action
    if a == "catalog":
        cat = fraisse.enumerate_catalog(_rule(args.cls), args.max_size)
        rows = [(args.cls, "catalog", n, c, True) for n, c in enumerate(cat.counts())]
        _emit(args, {"class": args.cls, "counts": cat.counts(), "members": [m.to_json() for m in cat.all_members()]} if args.members else {"class": args.cls, "counts": cat.counts()}, rows)
        return EXIT_OK
    if a == "ap":
        rep = fraisse.check_amalgamation(fraisse.enumerate_catalog(_rule(args.cls), args.max_size))
        _emit(args, {"class": args.cls, **rep.as_dict()})
        return EXIT_FAIL if fraisse.FAILS in (rep.hp, rep.jep, rep.ap) else EXIT_OK
    if a == "generic":
        g = _approx(args)
        _emit(args, {"structure": g.struct.to_json(), "sidecar": g.sidecar()})
        return EXIT_OK
    if a == "ep":
        if args.input:
            s = _read_struct(args.input)
            core = _read_json(args.input).get("sidecar", {}).get("core")
        else:
            g = _approx(args)
            s, core = g.struct, list(g.core)
        miss = fraisse.check_extension_property(s, _rule(args.cls), args.ep_level, core)
        _emit(args, {"class": args.cls, "level": args.ep_level, "missing": [{"A": list(m.A), "extension": m.ext.to_json()} for m in miss[:20]], "missing-count": len(miss)})
        return EXIT_FAIL if miss else EXIT_OK
    if a == "iso":
        v = fraisse.back_and_forth_iso(_read_struct(args.a), _read_struct(args.b), args.depth)
        _emit(args, {"verdict": str(v), "kind": v.kind, "positive": v.positive, "mapping": v.mapping})
        return EXIT_OK if (v.kind == "ISO" or v.positive) else EXIT_FAIL
    if a == "tn":
        out, distinct = intertwined.enumerate_intertwined(args.n, args.size, args.seed)
        _emit(args, {"n": args.n, "count": len(out), "distinct": distinct, "permutations": [list(s) for s, _ in out]})
        return EXIT_OK if distinct else EXIT_FAIL
    raise UsageError("fraisse needs an action")


# ---------------------------------------------------------------------------
# profile


def cmd_profile(args):
    if args.selftest:
        ok = profiles.axiomatization_bound(2, 2) == 9
        ok = ok and profiles.profile_pi(fraisse.enumerate_catalog(fraisse.OrdersRule(2), 3), 3).counts() == [1, 2, 6]
        return _selftest(args, ok)
    flags = [w for w in ("pi", "f", "growth", "distality", "n0") if getattr(args, f"flag_{w}")]
    what = [args.action] if args.action else flags
    if len(what) != 1:
        raise UsageError("choose exactly one of pi, f, growth, distality, n0")
    what = what[0]
    if what == "n0":
        n0 = profiles.axiomatization_bound(args.k, args.r)
        _emit(args, {"k": args.k, "r": args.r, "n0": n0}, [("", "n0", None, n0, True)])
        return EXIT_OK
    if what == "growth" and args.level == "class":
        p = profiles.class_f_profile(_rule(args.cls), args.nmax)
    else:
        g = _approx(args)
        if what == "pi":
            p = profiles.profile_pi(g, args.kmax)
        elif what == "distality":
            r = profiles.distality_width(g, args.nmax)
            _emit(args, {"class": args.cls, "width": str(r), "bound": r.bound}, [(args.cls, "distality", args.nmax, str(r), True)])
            return EXIT_OK
        else:
            p = profiles.f_profile(g, args.nmax, args.mode, seed=args.seed) if args.mode == "sampled" else profiles.f_profile(g, args.nmax)
    rows = [(args.cls, *r[1:]) for r in p.rows()]
    payload = {"class": args.cls, "kind": p.kind, "values": [list(v) for v in p.values], "exact": p.exact}
    if p.within_ep_level is not None:
        payload["within-ep-level"] = p.within_ep_level
    if what == "growth":
        v = profiles.classify_growth(p)
        payload["verdict"] = str(v)
        payload["classification"] = v.classification
        payload["residuals"] = {"polynomial": round(v.poly_residual, 6), "exponential": round(v.exp_residual, 6)}
        rows.append((args.cls, "growth", None, str(v), True))
    _emit(args, payload, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# glue


def cmd_glue(args):
    if args.selftest:
        spec = gluing.IntertwiningSpec.simple([6, 6, 6], [(0, 1, 2), (1, 2, 2), (2, 0, 2)])
        (c,) = gluing.glue(spec)
        return _selftest(args, c.kind == "circular" and c.size == 12 and gluing.glue(gluing.IntertwiningSpec([4]))[0].kind == "linear")
    if not args.input:
        raise UsageError("glue needs --input")
    try:
        spec = gluing.IntertwiningSpec.from_json(_read_json(args.input))
    except gluing.GluingError as e:
        raise UsageError(f"{args.input}: {e}") from None
    bad = gluing.validate_spec(spec)
    if args.action == "validate":
        _emit(args, {"pass": not bad, "violations": bad})
        return EXIT_FAIL if bad else EXIT_OK
    if bad:
        _emit(args, {"pass": False, "violations": bad})
        return EXIT_FAIL
    try:
        comps = gluing.glue(spec)
    except gluing.GluingError as e:
        _emit(args, {"pass": False, "error": str(e)})
        return EXIT_FAIL
    _emit(args, {"pass": True, "components": [c.to_json(spec.ids) for c in comps]})
    return EXIT_OK


# ---------------------------------------------------------------------------
# monodromy


def _parse_covers(text: str, seed: int) -> list[covers.CoverStruct]:
    """Tokens ``s<k>[:N]`` (connected k-fold cover) or ``m<k1>.<k2>...[:N]`` (labelled)."""
    out = []
    for i, tok in enumerate(t for t in text.split(",") if t):
        head, _, n = tok.partition(":")
        try:
            if head.startswith("s"):
                k = int(head[1:])
                out.append(covers.build_cover(int(n) if n else 6 * k, k, seed + i))
            elif head.startswith("m"):
                ks = [int(x) for x in head[1:].split(".")]
                N = int(n) if n else 6 * len(ks) * max(ks)
                out.append(covers.build_labeled_cover(N, ks, seed + i))
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"bad cover token {tok!r}") from None
    if not out:
        raise UsageError("--covers is empty")
    return out


def cmd_monodromy(args):
    if args.selftest:
        act = covers.monodromy(covers.build_complex([covers.build_cover(6, 1)]))
        return _selftest(args, act.fiber == 1 and covers.check_square(covers.build_complex([covers.build_cover(12, 2)])) is None)
    action = args.action or "action"
    if args.cover_file:
        covs = []
        for p in args.cover_file:
            d = _read_json(p)
            covs.extend(covers.CoverStruct.from_json(c) for c in (d["covers"] if "covers" in d else [d]))
    else:
        covs = _parse_covers(args.covers, args.seed)
    if action == "cover":
        _emit(args, {"covers": [c.to_json() for c in covs]})
        return EXIT_OK
    cx = covers.build_complex(covs)
    if action == "complex":
        _emit(args, cx.to_json())
        return EXIT_OK
    cex = covers.check_square(cx)
    if action == "square":
        _emit(args, {"pass": cex is None, "counterexample": cex})
        return EXIT_OK if cex is None else EXIT_FAIL
    if cex is not None:
        _emit(args, {"pass": False, "counterexample": cex})
        return EXIT_FAIL
    act = covers.monodromy(cx)
    inv = covers.classify_monodromy(act)
    payload = {"invariant": covers.format_invariant(inv), "orbits": [{"size": o.size, "stabilizer": list(o.axis), "extra": [list(e) for e in o.extra]} for o in inv]}
    if action == "action":
        payload.update(act.to_json())
        payload["cycle-types"] = [act.cycle_type(i) for i in range(len(act.generators))]
    _emit(args, payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# reducts


def cmd_reducts(args):
    if args.selftest:
        ok = reducts.wreath_product(0, 0).order == 1 and len(reducts.enumerate_subgroups(reducts.wreath_product(1, 0))) == 2
        return _selftest(args, ok and reducts.enumerate_reducts(1)[1] == 5)
    a = args.action
    if a == "groups":
        g = reducts.wreath_product(args.ml, args.mc)
        _emit(args, {"m_l": args.ml, "m_c": args.mc, "order": g.order, "degree": g.degree, "generators": g.cycles()})
    elif a == "subgroups":
        subs = reducts.enumerate_subgroups(reducts.wreath_product(args.ml, args.mc))
        _emit(args, {"m_l": args.ml, "m_c": args.mc, "count": len(subs), "subgroups": [{"order": h.order, "generators": h.cycles()} for h in subs]})
    elif a == "enumerate":
        ds, total = reducts.enumerate_reducts(args.n)
        _emit(args, {"n": args.n, "count": total, "descriptors": [d.to_json() for d in ds]})
    elif a == "distinguish":
        ds, _ = reducts.enumerate_reducts(args.n)
        g = fraisse.build_generic(fraisse.OrdersRule(args.n), args.size, args.ep_level, args.seed)
        out = reducts.distinguish(ds, g)
        _emit(args, {"n": args.n, "count": out["count"], "distinct": out["distinct"], "all-distinct": out["all-distinct"], "clashes": out["clashes"], "reducts": [r.to_json() for r in out["realized"]]})
        return EXIT_OK if out["all-distinct"] else EXIT_FAIL
    else:
        raise UsageError("reducts needs an action")
    return EXIT_OK


def _selftest(args, ok: bool) -> int:
    _emit(args, {"selftest": "pass" if ok else "fail"})
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="seed for every random draw")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--selftest", action="store_true", help="run the built-in examples of this command group")
    return p


def _approx_args(p, size=40, ep=3):
    p.add_argument("--class", dest="cls", default="orders:1", help="orders:k, graph, graph-bounded:K, rmono or tn:n")
    p.add_argument("--size", type=int, default=size)
    p.add_argument("--ep-level", type=int, default=ep)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    top = argparse.ArgumentParser(prog="rankone", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="group", required=True)

    s = sub.add_parser("structures", parents=[common], help="derived relations and canonical forms")
    s.add_argument("action", nargs="?", choices=("derive", "canon"))
    s.add_argument("--input", help="structure JSON")
    s.add_argument("--sequence", default="0,1,2", help="comma-separated linear order when no --input is given")
    s.add_argument("--relation")
    s.add_argument("--to", choices=("betweenness", "circular", "separation"), default="betweenness")
    s.set_defaults(func=cmd_structures)

    f = sub.add_parser("fraisse", parents=[common], help="catalogs, amalgamation, generic approximations")
    f.add_argument("action", nargs="?", choices=("catalog", "ap", "generic", "ep", "iso", "tn"))
    _approx_args(f, size=20)
    f.add_argument("--max-size", type=int, default=4)
    f.add_argument("--members", action="store_true", help="list catalog members")
    f.add_argument("--input", help="structure JSON for ep")
    f.add_argument("--a")
    f.add_argument("--b")
    f.add_argument("--depth", type=int, default=3)
    f.add_argument("--n", type=int, default=2)
    f.set_defaults(func=cmd_fraisse)

    p = sub.add_parser("profile", parents=[common], help="pi, f, growth verdicts, distality, n0")
    p.add_argument("action", nargs="?", choices=("pi", "f", "growth", "distality", "n0"))
    for w in ("pi", "f", "growth", "distality", "n0"):
        p.add_argument(f"--{w}", dest=f"flag_{w}", action="store_true")
    _approx_args(p)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--nmax", type=int, default=4)
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    p.add_argument("--level", choices=("approx", "class"), default="approx", help="growth from an approximation or from the class")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--r", type=int, default=2)
    p.set_defaults(func=cmd_profile)

    g = sub.add_parser("glue", parents=[common], help="validate and glue order fragments")
    g.add_argument("action", nargs="?", choices=("validate", "run"), default="run")
    g.add_argument("--input", help="intertwining spec JSON")
    g.set_defaults(func=cmd_glue)

    m = sub.add_parser("monodromy", parents=[common], help="finite covers, cell complexes and monodromy")
    m.add_argument("action", nargs="?", choices=("cover", "complex", "square", "action", "classify"))
    m.add_argument("--covers", default="s2,s3", help="comma list of s<k>[:N] or m<k1>.<k2>[:N]")
    m.add_argument("--cover-file", action="append", help="cover JSON (repeatable)")
    m.set_defaults(func=cmd_monodromy)

    r = sub.add_parser("reducts", parents=[common], help="wreath products, subgroups and reducts")
    r.add_argument("action", nargs="?", choices=("groups", "subgroups", "enumerate", "distinguish"))
    r.add_argument("--n", type=int, default=2)
    r.add_argument("--ml", type=int, default=2)
    r.add_argument("--mc", type=int, default=0)
    r.add_argument("--size", type=int, default=20)
    r.add_argument("--ep-level", type=int, default=3)
    r.set_defaults(func=cmd_reducts)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    if not args.selftest and args.group not in ("glue", "monodromy", "profile") and args.action is None:
        sys.stderr.write(f"rankone {args.group}: an action is required\n")
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        sys.stderr.write(f"rankone: {e}\n")
        return EXIT_USAGE
    except (ValueError, KeyError) as e:
        # module guards and malformed inputs
        sys.stderr.write(f"rankone: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
