"""Largest subsets whose points each have at most k - 1 similar points inside the subset."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._packing import Packing, induced_degrees
from .dataset import Dataset
from .decomposition import certificate_cells
from .similarity import SimilarityGraph

METHODS = ("greedy-direct", "greedy-kway", "exact", "grid-upper")


@dataclass
class SubsetResult:
    k: int
    indices: np.ndarray
    method: str

    @property
    def size(self) -> int:
        return len(self.indices)

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# method={self.method},k={self.k},size={self.size}\n")
            fh.write("idx\n")
            for i in self.indices.tolist():
                fh.write(f"{i}\n")

    @classmethod
    def load_csv(cls, path) -> "SubsetResult":
        meta = {"method": "unknown", "k": "1"}
        idx = []
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line == "idx":
                    continue
                if line.startswith("#"):
                    for part in line[1:].split(","):
                        key, _, val = part.strip().partition("=")
                        meta[key] = val
                    continue
                try:
                    idx.append(int(line))
                except ValueError:
                    raise ValueError(f"row {line_no}: not an index: {line!r}") from None
        return cls(int(meta["k"]), np.unique(np.asarray(idx, dtype=np.int64)), meta["method"])


def check_similarity_budget(g: SimilarityGraph, indices, k: int) -> tuple[bool, int]:
    idx = np.asarray(indices, dtype=np.int64)
    if not len(idx):
        return True, 0
    if len(np.unique(idx)) != len(idx):
        raise ValueError("indices must be distinct")
    observed = int(induced_degrees(g, idx)[idx].max())
    return observed <= k - 1, observed


def _greedy_pass(g: SimilarityGraph, k: int, order) -> np.ndarray:
    pack = Packing(g, k)
    for v in order:
        if pack.admissible(v, 0):
            pack.add(v, 0)
    return np.flatnonzero(pack.label == 0)


def nsim_greedy_direct(g: SimilarityGraph, k: int, order: str = "natural", seed: Optional[int] = None) -> SubsetResult:
    """One pass; a point is admitted when neither it nor any admitted neighbor goes over budget."""
    if order == "natural":
        seq = range(g.n)
    elif order == "random":
        seq = np.random.default_rng(seed).permutation(g.n).tolist()
    elif order == "degree-asc":
        seq = np.lexsort((np.arange(g.n), g.degrees)).tolist()
    else:
        raise ValueError("order must be natural, random or degree-asc")
    return SubsetResult(k, _greedy_pass(g, k, seq), "greedy-direct")


def _prune_to_budget(g: SimilarityGraph, chosen: np.ndarray, k: int) -> np.ndarray:
    """Drop the worst offender (most inside neighbors, lowest index) until the budget holds."""
    inside = np.zeros(g.n, dtype=bool)
    inside[chosen] = True
    deg = induced_degrees(g, chosen)
    deg[~inside] = -1
    while True:
        v = int(np.argmax(deg))
        if deg[v] <= k - 1:
            break
        inside[v] = False
        deg[v] = -1
        nb = g.neighbors(v)
        nb = nb[inside[nb]]
        deg[nb] -= 1
    return np.flatnonzero(inside)


def nsim_greedy_kway(g: SimilarityGraph, k: int, seed: int = 0) -> SubsetResult:
    """Union of similarity-free sets grown inside k random near-equal groups.

    A point may be similar to several pairwise dissimilar picks of another
    group, so the union is pruned back to the budget before returning.
    """
    if not (1 <= k <= g.n):
        raise ValueError("need 1 <= k <= n")
    if k == 1:
        groups = [np.arange(g.n)]
    else:
        groups = np.array_split(np.random.default_rng(seed).permutation(g.n), k)
    picks = [_greedy_pass(g, 1, np.sort(grp).tolist()) for grp in groups]
    union = np.sort(np.concatenate(picks))
    return SubsetResult(k, _prune_to_budget(g, union, k), "greedy-kway")


def nsim_upper_grid(ds: Dataset, k: int, r_n: float) -> int:
    """Upper bound on the largest admissible subset.

    Corrupted points of one category are pairwise similar, as are the
    uncorrupted points of one category inside one cell of side
    r_n / sqrt(4d); an admissible subset takes at most k from each such set.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if r_n < 0:
        raise ValueError("r_n must be non-negative")
    corr_counts = np.bincount(ds.y[ds.corrupted], minlength=ds.cat_size)
    bound = int(np.minimum(corr_counts, k).sum())
    unc = np.flatnonzero(~ds.corrupted)
    if not len(unc):
        return bound
    if r_n == 0:
        return bound + len(unc)
    rows = np.column_stack([ds.y[unc], certificate_cells(ds.x[unc], r_n)])
    _, counts = np.unique(rows, axis=0, return_counts=True)
    return bound + int(np.minimum(counts, k).sum())


def nsim_exact(g: SimilarityGraph, k: int, n_cap: int = 14) -> SubsetResult:
    """Maximum admissible subset by include/exclude branch and bound."""
    n = g.n
    if n > n_cap:
        raise ValueError(f"exact search limited to n <= {n_cap}")
    if k < 1:
        raise ValueError("k must be >= 1")
    # low-degree points first: good incumbents early
    order = np.lexsort((np.arange(n), g.degrees)).tolist()
    adj = [0] * n
    for v in range(n):
        for u in g.neighbors(v).tolist():
            adj[v] |= 1 << u

    seed = nsim_greedy_direct(g, k).indices
    best = [len(seed), int(sum(1 << int(i) for i in seed))]
    cnt = [0] * n

    def rec(pos: int, chosen: int, size: int, full: int) -> None:
        if size + (n - pos) <= best[0]:
            return
        if pos == n:
            best[0], best[1] = size, chosen
            return
        v = order[pos]
        nb = adj[v] & chosen
        c = nb.bit_count()
        if c <= k - 1 and not (nb & full):
            new_full = full
            m = nb
            while m:
                low = m & -m
                u = low.bit_length() - 1
                cnt[u] += 1
                if cnt[u] == k - 1:
                    new_full |= low
                m ^= low
            if c == k - 1:
                new_full |= 1 << v
            cnt[v] = c
            rec(pos + 1, chosen | (1 << v), size + 1, new_full)
            cnt[v] = 0
            m = nb
            while m:
                low = m & -m
                cnt[low.bit_length() - 1] -= 1
                m ^= low
        rec(pos + 1, chosen, size, full)

    rec(0, 0, 0, 0)
    mask = best[1]
    idx = np.array([v for v in range(n) if mask >> v & 1], dtype=np.int64)
    return SubsetResult(k, idx, "exact")


def nsim_scale(k: int, cat_size: int, r_n: float, d: int) -> float:
    """The natural order of magnitude k * #Y / r_n^d."""
    return k * cat_size / r_n**d if r_n > 0 else math.inf
