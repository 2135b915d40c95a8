"""Hot loops over parameter subsets.

Structures enter as two integer arrays: ``pc[x, y]`` codes every binary fact
between x and y (including whether x == y) and ``uc[x]`` codes the unary
facts of x.  Two elements then have the same quantifier-free type over a
tuple A iff their rows ``pc[x, A]`` and ``uc[x]`` agree.

Each kernel has a numba implementation and a vectorized numpy fallback;
:data:`rankone._accel.USE_NUMBA` picks one at import time.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit
from .structures import FinStruct, StructureError

BATCH = 1 << 15


def encode_binary(s: FinStruct, skip: tuple[str, ...] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Dense pair and unary codes for a structure with relations of arity <= 2."""
    if s.sig.fns or any(r.arity > 2 for r in s.sig.relations):
        raise StructureError("kernels need a signature of unary and binary relations without functions")
    n = s.size
    pair = np.eye(n, dtype=np.int64)
    unary = np.zeros(n, dtype=np.int64)
    bit = 1
    ubit = 1
    for r in s.sig.relations:
        if r.name in skip:
            continue
        t = s.tables[r.name]
        if r.arity == 1:
            unary += ubit * t
            ubit <<= 1
            continue
        pair += (bit << 1) * t + (bit << 2) * t.T
        bit <<= 2
        unary += ubit * np.diag(t)
        ubit <<= 1
    for p in s.sig.preds:
        unary += ubit * s.pred_tables[p]
        ubit <<= 1
    _, dense = np.unique(pair, return_inverse=True)
    _, udense = np.unique(unary, return_inverse=True)
    return dense.reshape(n, n).astype(np.int64), udense.astype(np.int64)


def _combos(n: int, k: int):
    it = itertools.combinations(range(n), k)
    while True:
        chunk = np.fromiter(itertools.chain.from_iterable(itertools.islice(it, BATCH)), dtype=np.int64)
        if chunk.size == 0:
            return
        yield chunk.reshape(-1, k)


# ---------------------------------------------------------------------------
# maximum number of 1-types over an n-subset


@njit
def _distinct(keys, buf):
    buf[:] = keys
    buf.sort()
    c = 1 if buf.shape[0] > 0 else 0
    for i in range(1, buf.shape[0]):
        if buf[i] != buf[i - 1]:
            c += 1
    return c


@njit
def _max_types_numba(pc, uc, k, base):
    n = pc.shape[0]
    best_idx = np.arange(k)
    buf = np.empty(n, dtype=np.int64)
    if k == 0 or k > n:
        return (_distinct(uc.copy(), buf) if k == 0 else 0), best_idx
    # partial[i] holds the keys over the first i chosen parameters
    partial = np.empty((k + 1, n), dtype=np.int64)
    partial[0, :] = uc
    idx = np.arange(k)
    for i in range(k):
        for x in range(n):
            partial[i + 1, x] = partial[i, x] * base + pc[x, idx[i]]
    best = 0
    while True:
        c = _distinct(partial[k], buf)
        if c > best:
            best = c
            best_idx[:] = idx
        i = k - 1
        while i >= 0 and idx[i] == n - k + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, k):
            idx[j] = idx[j - 1] + 1
        for j in range(i, k):
            for x in range(n):
                partial[j + 1, x] = partial[j, x] * base + pc[x, idx[j]]
    return best, best_idx


def _max_types_numpy(pc, uc, k, base):
    n = pc.shape[0]
    if k == 0:
        return len(np.unique(uc)), np.arange(0)
    best, best_idx = 0, np.arange(k)
    for chunk in _combos(n, k):
        keys = np.broadcast_to(uc[None, :], (len(chunk), n)).copy()
        for i in range(k):
            keys = keys * base + pc[:, chunk[:, i]].T
        ks = np.sort(keys, axis=1)
        counts = 1 + np.count_nonzero(np.diff(ks, axis=1), axis=1)
        j = int(np.argmax(counts))
        if counts[j] > best:
            best, best_idx = int(counts[j]), chunk[j].copy()
    return best, best_idx


def max_type_count(pc: np.ndarray, uc: np.ndarray, k: int, backend: str | None = None) -> tuple[int, np.ndarray]:
    """Maximum over k-subsets A of the number of distinct 1-types over A, with a maximizing A."""
    base = int(max(pc.max(initial=0), 0)) + 1
    ubase = int(uc.max(initial=0)) + 1
    if math.log2(ubase) + k * math.log2(base) > 62:
        raise StructureError("type keys would overflow 64 bits")
    use = _pick(backend)
    f = _max_types_numba if use == "numba" else _max_types_numpy
    best, idx = f(np.ascontiguousarray(pc), np.ascontiguousarray(uc), int(k), base)
    return int(best), np.asarray(idx)


# ---------------------------------------------------------------------------
# distality width


@njit
def _width_for_subset(pc, uc, A, w):
    """Smallest width needed for the tuple A, but never below ``w``."""
    n = pc.shape[0]
    k = A.shape[0]
    full = (1 << k) - 1
    agree = np.empty(n, dtype=np.int64)
    for a in range(n):
        cnt = 0
        for x in range(n):
            if uc[x] != uc[a]:
                continue
            m = 0
            for i in range(k):
                if pc[x, A[i]] == pc[a, A[i]]:
                    m |= 1 << i
            if m != full:
                agree[cnt] = m
                cnt += 1
        if cnt == 0:
            continue
        while w < k:
            found = False
            for M in range(full + 1):
                pop = 0
                t = M
                while t:
                    pop += t & 1
                    t >>= 1
                if pop > w:
                    continue
                ok = True
                for j in range(cnt):
                    if (agree[j] & M) == M:
                        ok = False
                        break
                if ok:
                    found = True
                    break
            if found:
                break
            w += 1
    return w


@njit
def _distality_numba(pc, uc, nmax):
    n = pc.shape[0]
    w = 0
    for k in range(1, nmax + 1):
        if k > n:
            break
        idx = np.arange(k)
        while True:
            w = _width_for_subset(pc, uc, idx, w)
            if w >= nmax:
                return w
            i = k - 1
            while i >= 0 and idx[i] == n - k + i:
                i -= 1
            if i < 0:
                break
            idx[i] += 1
            for j in range(i + 1, k):
                idx[j] = idx[j - 1] + 1
    return w


def _distality_numpy(pc, uc, nmax):
    n = pc.shape[0]
    w = 0
    same_u = uc[:, None] == uc[None, :]
    for k in range(1, min(nmax, n) + 1):
        full = (1 << k) - 1
        masks = np.arange(full + 1)
        pops = np.array([bin(int(m)).count("1") for m in masks])
        weights = (1 << np.arange(k)).astype(np.int64)
        for chunk in _combos(n, k):
            for A in chunk:
                cols = pc[:, A]  # (n, k)
                agree = ((cols[None, :, :] == cols[:, None, :]) * weights).sum(axis=2)  # agree[a, x]
                confusable = same_u & (agree != full)
                for a in np.flatnonzero(confusable.any(axis=1)):
                    ag = agree[a][confusable[a]]
                    while w < k:
                        cand = masks[pops <= w]
                        # a mask works when no confusable element agrees on all of it
                        blocked = ((ag[None, :] & cand[:, None]) == cand[:, None]).any(axis=1)
                        if not blocked.all():
                            break
                        w += 1
                if w >= nmax:
                    return w
    return w


def distality_width_raw(pc: np.ndarray, uc: np.ndarray, nmax: int, backend: str | None = None) -> int:
    """Least k such that every 1-type over a set of size <= nmax is isolated by k of its points.

    Values >= nmax mean no width below nmax was found.
    """
    use = _pick(backend)
    f = _distality_numba if use == "numba" else _distality_numpy
    return int(f(np.ascontiguousarray(pc), np.ascontiguousarray(uc), int(nmax)))


# ---------------------------------------------------------------------------
# isomorphism codes of k-subsets


@njit
def _subset_codes_numba(pc, uc, combos, perms):
    m, k = combos.shape
    L = k + k * k
    out = np.empty((m, L), dtype=np.int64)
    cur = np.empty(L, dtype=np.int64)
    for r in range(m):
        first = True
        for p in range(perms.shape[0]):
            pos = 0
            for i in range(k):
                cur[pos] = uc[combos[r, perms[p, i]]]
                pos += 1
            for i in range(k):
                for j in range(k):
                    cur[pos] = pc[combos[r, perms[p, i]], combos[r, perms[p, j]]]
                    pos += 1
            better = first
            if not first:
                for t in range(L):
                    if cur[t] != out[r, t]:
                        better = cur[t] < out[r, t]
                        break
            if better:
                out[r, :] = cur
                first = False
    return out


def _subset_codes_numpy(pc, uc, combos, perms):
    m, k = combos.shape
    best = None
    for perm in perms:
        c = combos[:, perm]
        code = np.concatenate([uc[c], pc[c[:, :, None], c[:, None, :]].reshape(m, k * k)], axis=1)
        if best is None:
            best = code
        else:
            # keep the lexicographically smaller row
            diff = code != best
            first = np.argmax(diff, axis=1)
            rows = np.arange(m)
            smaller = diff.any(axis=1) & (code[rows, first] < best[rows, first])
            best[smaller] = code[smaller]
    return best


def subset_codes(pc, uc, combos, perms, backend: str | None = None) -> np.ndarray:
    """Per subset row, the lexicographically least code over the listed orderings."""
    use = _pick(backend)
    f = _subset_codes_numba if use == "numba" else _subset_codes_numpy
    return f(np.ascontiguousarray(pc), np.ascontiguousarray(uc), np.ascontiguousarray(combos, dtype=np.int64), np.ascontiguousarray(perms, dtype=np.int64))


def _pick(backend):
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        return "numpy"
    return backend
