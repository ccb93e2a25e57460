"""Similarity graph over a dataset.

Two points are similar when their categories agree and either one of them
is corrupted or both are uncorrupted and strictly closer than ``r_n``.
Geometric edges are found with a uniform grid of cell side ``r_n`` and kept
in CSR form. Corrupted points are never expanded into edges: a corrupted
point is adjacent to its whole category, which is answered from
per-category index lists.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

_MAX_KEY = 1 << 62


def is_similar(ds: Dataset, i: int, j: int, r_n: float) -> bool:
    if i == j:
        raise ValueError("a point is not compared with itself")
    if ds.y[i] != ds.y[j]:
        return False
    if ds.corrupted[i] or ds.corrupted[j]:
        return True
    diff = ds.x[i] - ds.x[j]
    return bool(diff @ diff < r_n * r_n)


def similarity_matrix(ds: Dataset, r_n: float) -> np.ndarray:
    """Dense boolean adjacency by direct pairwise evaluation (O(n^2) memory)."""
    n = ds.n
    adj = np.zeros((n, n), dtype=bool)
    x = np.where(ds.corrupted[:, None], 0.0, ds.x)
    r2 = r_n * r_n
    for i in range(n):
        same = ds.y == ds.y[i]
        if ds.corrupted[i]:
            row = same
        else:
            d2 = np.sum((x - x[i]) ** 2, axis=1)
            row = same & (ds.corrupted | (d2 < r2))
        row[i] = False
        adj[i] = row
    return adj


@dataclass(frozen=True)
class DegreeStats:
    max_degree: int
    argmax: int
    histogram: tuple
    mean_degree: float


class SimilarityGraph:
    """Read-only similarity structure.

    ``geo_indptr``/``geo_indices`` hold edges between uncorrupted points only.
    """

    def __init__(self, ds: Dataset, r_n: float, geo_indptr: np.ndarray, geo_indices: np.ndarray):
        self.n = ds.n
        self.r_n = float(r_n)
        self.y = ds.y
        self.corrupted = ds.corrupted
        self.cat_size = ds.cat_size
        self.geo_indptr = geo_indptr
        self.geo_indices = geo_indices

        order = np.argsort(ds.y, kind="stable")
        counts = np.bincount(ds.y, minlength=ds.cat_size)
        ptr = np.concatenate([[0], np.cumsum(counts)])
        self._cat_members = [order[ptr[c] : ptr[c + 1]] for c in range(ds.cat_size)]
        self._cat_corrupted = [m[ds.corrupted[m]] for m in self._cat_members]
        self.cat_total = counts
        self.cat_corrupted_count = np.array([len(m) for m in self._cat_corrupted], dtype=np.int64)

        geo_deg = np.diff(geo_indptr)
        self.degrees = np.where(
            ds.corrupted,
            self.cat_total[ds.y] - 1,
            geo_deg + self.cat_corrupted_count[ds.y],
        ).astype(np.int64)
        self.degrees.setflags(write=False)

    # -- queries
    def geo_neighbors(self, v: int) -> np.ndarray:
        return self.geo_indices[self.geo_indptr[v] : self.geo_indptr[v + 1]]

    def category_members(self, c: int) -> np.ndarray:
        return self._cat_members[c]

    def category_corrupted(self, c: int) -> np.ndarray:
        return self._cat_corrupted[c]

    def neighbors(self, v: int) -> np.ndarray:
        c = self.y[v]
        if self.corrupted[v]:
            members = self._cat_members[c]
            return members[members != v]
        corr = self._cat_corrupted[c]
        geo = self.geo_neighbors(v)
        if not len(corr):
            return geo
        return np.sort(np.concatenate([geo, corr]))

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    def has_edge(self, u: int, v: int) -> bool:
        if u == v or self.y[u] != self.y[v]:
            return False
        if self.corrupted[u] or self.corrupted[v]:
            return True
        row = self.geo_neighbors(u)
        pos = np.searchsorted(row, v)
        return bool(pos < len(row) and row[pos] == v)

    def degree_stats(self) -> DegreeStats:
        deg = self.degrees
        return DegreeStats(
            max_degree=int(deg.max()),
            argmax=int(np.argmax(deg)),
            histogram=tuple(int(h) for h in np.bincount(deg)),
            mean_degree=float(deg.mean()),
        )

    def edges(self):
        """Yield every edge once as ``(u, v)`` with ``u < v``. Quadratic for cliques."""
        for u in range(self.n):
            nb = self.neighbors(u)
            for v in nb[nb > u]:
                yield u, int(v)

    def to_dense(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=bool)
        for v in range(self.n):
            adj[v, self.neighbors(v)] = True
        return adj

    def save_edges(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("u,v\n")
            for u, v in self.edges():
                fh.write(f"{u},{v}\n")


def _csr(n: int, src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(src):
        key = src.astype(np.int64) * n + dst
        key.sort()
        src, dst = np.divmod(key, n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst.astype(np.int64)


def _group_lookup(rows: np.ndarray):
    """Map (category, cell) rows to group ids; returns lookup(offset) -> target ids."""
    lo = rows.min(axis=0) - 1
    span = rows.max(axis=0) - lo + 2
    total = 1
    for s in span.tolist():
        total *= int(s)
    if total < _MAX_KEY:
        strides = np.ones(len(span), dtype=np.int64)
        for j in range(len(span) - 2, -1, -1):
            strides[j] = strides[j + 1] * span[j + 1]
        keys = (rows - lo) @ strides
        order = np.argsort(keys, kind="stable")
        sk = keys[order]
        gkeys, starts, counts = np.unique(sk, return_index=True, return_counts=True)

        def lookup(offset):
            tk = gkeys + int(np.dot(offset, strides))
            pos = np.searchsorted(gkeys, tk)
            pos[pos == len(gkeys)] = 0
            return np.where(gkeys[pos] == tk, pos, -1)

        return order, starts, counts, lookup

    # cell coordinates too spread for one int64 key: hash on tuples instead
    order = np.lexsort(rows.T[::-1])
    srows = rows[order]
    change = np.any(srows[1:] != srows[:-1], axis=1)
    starts = np.concatenate([[0], np.flatnonzero(change) + 1])
    counts = np.diff(np.concatenate([starts, [len(rows)]]))
    grows = srows[starts]
    table = {tuple(r): g for g, r in enumerate(grows.tolist())}

    def lookup(offset):
        off = np.asarray(offset)
        return np.array([table.get(tuple(r), -1) for r in (grows + off).tolist()], dtype=np.int64)

    return order, starts, counts, lookup


def _geo_edges(x: np.ndarray, y: np.ndarray, r_n: float) -> tuple[np.ndarray, np.ndarray]:
    """Unordered pairs (i < j within the local numbering) of same-category points closer than r_n."""
    m, d = x.shape
    empty = np.empty(0, dtype=np.int64)
    if m < 2 or r_n <= 0:
        return empty, empty
    cells = np.floor(x / r_n).astype(np.int64)
    rows = np.column_stack([y.astype(np.int64), cells])
    order, starts, counts, lookup = _group_lookup(rows)
    r2 = r_n * r_n
    src, dst = [], []
    for off in itertools.product((-1, 0, 1), repeat=d):
        # visit each unordered cell pair once: the zero offset and the
        # lexicographically positive half
        if any(off) and next(o for o in off if o) < 0:
            continue
        offset = np.concatenate([[0], off])
        tgt = lookup(offset)
        g = np.flatnonzero(tgt >= 0)
        if not len(g):
            continue
        h = tgt[g]
        a = counts[g]
        b = counts[h]
        ab = a * b
        total = int(ab.sum())
        if total == 0:
            continue
        pair = np.repeat(np.arange(len(g)), ab)
        local = np.arange(total) - np.repeat(np.cumsum(ab) - ab, ab)
        bl = b[pair]
        ii = local // bl
        jj = local - ii * bl
        if not any(off):
            keep = ii < jj
            pair, ii, jj = pair[keep], ii[keep], jj[keep]
        pi = order[starts[g][pair] + ii]
        pj = order[starts[h][pair] + jj]
        diff = x[pi] - x[pj]
        close = np.einsum("ij,ij->i", diff, diff) < r2
        src.append(pi[close])
        dst.append(pj[close])
    if not src:
        return empty, empty
    return np.concatenate(src), np.concatenate(dst)


def build(ds: Dataset, r_n: float) -> SimilarityGraph:
    if r_n < 0:
        raise ValueError("r_n must be non-negative")
    unc = np.flatnonzero(~ds.corrupted)
    i, j = _geo_edges(ds.x[unc], ds.y[unc], r_n)
    gi, gj = unc[i], unc[j]
    indptr, indices = _csr(ds.n, np.concatenate([gi, gj]), np.concatenate([gj, gi]))
    return SimilarityGraph(ds, r_n, indptr, indices)


def build_bruteforce(ds: Dataset, r_n: float) -> SimilarityGraph:
    """Reference graph from :func:`similarity_matrix`; O(n^2)."""
    adj = similarity_matrix(ds, r_n)
    unc = ~ds.corrupted
    geo = adj & unc[:, None] & unc[None, :]
    src, dst = np.nonzero(geo)
    indptr, indices = _csr(ds.n, src, dst)
    return SimilarityGraph(ds, r_n, indptr, indices)
