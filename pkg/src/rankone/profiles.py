"""Growth profiles: substructure counts, type counts, growth verdicts and distality width."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .fraisse import Catalog, ClassRule, GenericApprox, GraphRule, build_generic
from .structures import FinStruct, order_ranks

EXHAUSTIVE_LIMIT = 5_000_000
RESIDUAL_THRESHOLD = 0.1
MIN_RATIO = 1.2
MIN_WINDOW = 4


class ProfileError(ValueError):
    pass


@dataclass
class GrowthProfile:
    kind: str  # "pi" or "f"
    values: list[tuple[int, int]]
    source: str
    exact: list[bool]
    witnesses: dict = field(default_factory=dict)
    # whether n + 1 is below the approximation's ep-level, the range in which
    # a finite count is guaranteed to match the limit
    within_ep_level: list[bool] | None = None

    def counts(self) -> list[int]:
        return [c for _, c in self.values]

    def rows(self) -> list[tuple]:
        return [(self.source, self.kind, n, c, e) for (n, c), e in zip(self.values, self.exact)]


@dataclass(frozen=True)
class GrowthVerdict:
    classification: str  # "polynomial", "exponential" or "inconclusive"
    degree: float | None
    residual: float
    poly_residual: float
    exp_residual: float

    def __str__(self):
        if self.classification == "polynomial":
            return f"polynomial({self.degree:.2f})"
        return self.classification


# ---------------------------------------------------------------------------
# pi


def _first_linear_order(s: FinStruct):
    for r in s.sig.relations:
        if r.kind == "linear-order":
            return r.name
    return None


def _source(x) -> tuple[FinStruct | None, str]:
    if isinstance(x, GenericApprox):
        return x.struct, x.rule.name
    if isinstance(x, FinStruct):
        return x, "structure"
    return None, ""


def substructure_count(s: FinStruct, k: int, backend: str | None = None) -> int:
    """Number of isomorphism types of k-element induced substructures."""
    if k == 0:
        return 1
    if k > s.size:
        return 0
    if math.comb(s.size, k) > EXHAUSTIVE_LIMIT:
        raise ProfileError(f"C({s.size},{k}) subsets exceeds the exhaustive limit")
    pc, uc = kernels.encode_binary(s)
    order = _first_linear_order(s)
    if order is not None:
        # a linear order rigidifies every subset: list it in increasing order
        rank = order_ranks(s.tables[order])
        perms = np.arange(k)[None, :]
    else:
        rank = None
        perms = np.array(list(itertools.permutations(range(k))), dtype=np.int64)
    seen = []
    for chunk in kernels._combos(s.size, k):
        if rank is not None:
            chunk = np.take_along_axis(chunk, np.argsort(rank[chunk], axis=1), axis=1)
        seen.append(np.unique(kernels.subset_codes(pc, uc, chunk, perms, backend), axis=0))
    return len(np.unique(np.concatenate(seen), axis=0))


def profile_pi(source, k_max: int, backend: str | None = None) -> GrowthProfile:
    """pi(k) for k = 1..k_max, counted in a catalog or in a finite structure."""
    if isinstance(source, Catalog):
        if k_max > source.max_size:
            raise ProfileError("k-max exceeds the catalog size")
        vals = [(k, len(source.members[k])) for k in range(1, k_max + 1)]
        return GrowthProfile("pi", vals, source.rule.name, [True] * len(vals))
    s, name = _source(source)
    if s is None:
        raise ProfileError("profile_pi needs a catalog, generic approximation or structure")
    if k_max > 6:
        raise ProfileError("k-max above 6 is outside the exhaustive range")
    vals = [(k, substructure_count(s, k, backend)) for k in range(1, k_max + 1)]
    return GrowthProfile("pi", vals, name, [True] * len(vals))


# ---------------------------------------------------------------------------
# f


def type_count_f(source, n: int, mode: str = "exhaustive", trials: int = 2000, seed: int = 0, backend: str | None = None) -> GrowthProfile:
    """Maximum number of 1-types over an n-element parameter set.

    ``exhaustive`` scans every n-subset; ``sampled`` scans ``trials`` random
    subsets and reports a lower bound flagged as not exact.
    """
    s, name = _source(source)
    if s is None:
        raise ProfileError("type_count_f needs a generic approximation or structure")
    pc, uc = kernels.encode_binary(s)
    if mode == "exhaustive":
        if math.comb(s.size, n) > EXHAUSTIVE_LIMIT:
            raise ProfileError(f"C({s.size},{n}) subsets exceeds the exhaustive limit")
        best, idx = kernels.max_type_count(pc, uc, n, backend)
        return GrowthProfile("f", [(n, best)], name, [True], {n: [int(i) for i in idx]}, _within(source, n))
    if mode != "sampled":
        raise ProfileError(f"unknown mode {mode!r}")
    if n > s.size:
        raise ProfileError("n exceeds the structure size")
    rng = np.random.default_rng(seed)
    best, arg = 0, None
    for _ in range(trials):
        A = np.sort(rng.choice(s.size, size=n, replace=False))
        keys = {(int(uc[x]),) + tuple(int(v) for v in pc[x, A]) for x in range(s.size)}
        if len(keys) > best:
            best, arg = len(keys), [int(a) for a in A]
    return GrowthProfile("f", [(n, best)], name, [False], {n: arg}, _within(source, n))


def _within(source, n):
    if isinstance(source, GenericApprox):
        return [n + 1 < source.ep_level]
    return None


def f_profile(source, nmax: int, mode: str = "exhaustive", **kw) -> GrowthProfile:
    parts = [type_count_f(source, n, mode, **kw) for n in range(1, nmax + 1)]
    return GrowthProfile(
        "f",
        [p.values[0] for p in parts],
        parts[0].source,
        [p.exact[0] for p in parts],
        {k: v for p in parts for k, v in p.witnesses.items()},
        None if parts[0].within_ep_level is None else [p.within_ep_level[0] for p in parts],
    )


def class_f_profile(rule: ClassRule, nmax: int) -> GrowthProfile:
    """f(n) of the class limit: n parameters plus the one-point extension types over them.

    Only for rules whose extension count does not depend on the parameter
    set (multi-order classes and unrestricted graphs).
    """
    vals = []
    for n in range(1, nmax + 1):
        ext = rule.uniform_extension_count(n)
        if ext is None:
            raise ProfileError(f"class {rule.name} has no uniform extension count")
        vals.append((n, n + ext))
    return GrowthProfile("f", vals, rule.name, [True] * len(vals))


# ---------------------------------------------------------------------------
# growth verdict


def _rms_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def classify_growth(p: GrowthProfile) -> GrowthVerdict:
    """Polynomial vs exponential by comparing two least-squares fits of log-count.

    The polynomial fit regresses log(count) on log(n+1), the exponential fit
    on n.  The better fit wins (ties go to polynomial) if its RMS residual is
    below 0.1; an exponential verdict further needs every successive ratio of
    counts to be at least 1.2.
    """
    pts = [(n, c) for (n, c), e in zip(p.values, p.exact) if e]
    if len(pts) < MIN_WINDOW:
        raise ProfileError(f"need at least {MIN_WINDOW} exact entries")
    n = np.array([a for a, _ in pts], dtype=float)
    c = np.array([b for _, b in pts], dtype=float)
    if np.any(c <= 0):
        raise ProfileError("counts must be positive")
    y = np.log(c)
    deg, r_poly = _rms_fit(np.log(n + 1), y)
    _, r_exp = _rms_fit(n, y)
    ratios = c[1:] / c[:-1]
    if r_poly <= r_exp and r_poly < RESIDUAL_THRESHOLD:
        return GrowthVerdict("polynomial", max(deg, 0.0), r_poly, r_poly, r_exp)
    if r_exp < r_poly and r_exp < RESIDUAL_THRESHOLD and ratios.min() >= MIN_RATIO:
        return GrowthVerdict("exponential", None, r_exp, r_poly, r_exp)
    return GrowthVerdict("inconclusive", None, min(r_poly, r_exp), r_poly, r_exp)


# ---------------------------------------------------------------------------
# distality


@dataclass(frozen=True)
class DistalityResult:
    width: int | None
    bound: int

    def __str__(self):
        return str(self.width) if self.width is not None else f"NONE({self.bound})"


def distality_width(source, nmax: int, backend: str | None = None) -> DistalityResult:
    """Least k isolating every 1-type over every set of size <= nmax by k of its points."""
    s, _ = _source(source)
    if s is None:
        raise ProfileError("distality_width needs a generic approximation or structure")
    if nmax > 6 or s.size > 40:
        raise ProfileError("distality audit is limited to nmax <= 6 and size <= 40")
    pc, uc = kernels.encode_binary(s)
    w = kernels.distality_width_raw(pc, uc, nmax, backend)
    return DistalityResult(None if w >= nmax else w, nmax)


def axiomatization_bound(k: int, r: int) -> int:
    """Size bound kr + k + r + 1 for a finite axiomatization from distality width k and arity r."""
    if k < 1 or r < 1:
        raise ProfileError("k and r must be positive")
    return k * r + k + r + 1


# ---------------------------------------------------------------------------
# fixtures


def dlo_generic(size: int = 40, m: int = 3, seed: int = 0) -> GenericApprox:
    from .fraisse import OrdersRule

    return build_generic(OrdersRule(1), size, m, seed)


def random_graph_fixture(size: int = 24, ep_level: int = 4, seed: int = 0, clique: int = 6) -> GenericApprox:
    """Random-graph stand-in with a core whose subsets of size < ep_level see every adjacency pattern.

    The first ``ep_level`` vertices form the core; the next ``2**ep_level``
    vertices realize every adjacency pattern over the whole core, and a
    clique of size ``clique`` is planted among them.  All other edges are
    random.
    """
    need = ep_level + 2 ** ep_level
    if size < need or clique > 2 ** ep_level:
        raise ProfileError("fixture too small for the requested ep-level")
    rng = np.random.default_rng(seed)
    e = np.triu(rng.random((size, size)) < 0.5, 1)
    e = e | e.T
    for j, pattern in enumerate(itertools.product((False, True), repeat=ep_level)):
        v = ep_level + j
        e[v, :ep_level] = pattern
        e[:ep_level, v] = pattern
    members = ep_level + np.arange(clique)
    e[np.ix_(members, members)] = True
    np.fill_diagonal(e, False)
    rule = GraphRule()
    s = FinStruct(rule.sig, size, {"E": e})
    return GenericApprox(s, ep_level, rule, seed, tuple(range(ep_level)), {"clique": [int(x) for x in members]})
