"""Within-group similarity counting shared by decompositions and subsets."""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from .similarity import SimilarityGraph


def _row_ids(g: SimilarityGraph) -> np.ndarray:
    return np.repeat(np.arange(g.n), np.diff(g.geo_indptr))


def within_label_degrees(g: SimilarityGraph, labels: np.ndarray) -> np.ndarray:
    """For each v, the number of neighbors carrying the same label as v.

    Vertices with a negative label are treated as absent and get 0.
    """
    labels = np.asarray(labels, dtype=np.int64)
    present = labels >= 0
    out = np.zeros(g.n, dtype=np.int64)
    if not present.any():
        return out
    # (label, category) counts of all and of corrupted members
    key = labels * g.cat_size + g.y
    uniq, inv = np.unique(key[present], return_inverse=True)
    all_cnt = np.bincount(inv, minlength=len(uniq))
    corr_cnt = np.bincount(inv, weights=g.corrupted[present], minlength=len(uniq)).astype(np.int64)
    idx = np.flatnonzero(present)
    corr = g.corrupted[idx]
    out[idx] = np.where(corr, all_cnt[inv] - 1, corr_cnt[inv])
    rows = _row_ids(g)
    same = (labels[rows] == labels[g.geo_indices]) & (labels[rows] >= 0)
    out += np.bincount(rows[same], minlength=g.n)
    return out


def induced_degrees(g: SimilarityGraph, indices) -> np.ndarray:
    """Degrees inside the induced subgraph on ``indices`` (0 for outsiders)."""
    labels = np.full(g.n, -1, dtype=np.int64)
    labels[np.asarray(indices, dtype=np.int64)] = 0
    return within_label_degrees(g, labels)


class Packing:
    """Incremental assignment of vertices to labels under a similarity budget.

    Invariant: every assigned vertex has at most ``k - 1`` neighbors with
    its own label.
    """

    def __init__(self, g: SimilarityGraph, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.g = g
        self.k = k
        self.label = np.full(g.n, -1, dtype=np.int64)
        self.cnt = np.zeros(g.n, dtype=np.int64)
        self.n_labels = 0
        self._members = defaultdict(list)  # (label, cat) -> all members
        self._corr_members = defaultdict(list)  # (label, cat) -> corrupted members
        self._cat_labels = defaultdict(set)  # cat -> labels holding that category
        self._cat_corr_labels = defaultdict(set)
        self.has_uncorrupted = []

    def _neighbors_by_label(self, v: int) -> dict:
        g = self.g
        c = int(g.y[v])
        out = {}
        if g.corrupted[v]:
            for b in self._cat_labels[c]:
                out[b] = self._members[(b, c)]
            return out
        geo = g.geo_neighbors(v)
        lab = self.label[geo]
        hit = lab >= 0
        for u, b in zip(geo[hit].tolist(), lab[hit].tolist()):
            out.setdefault(b, []).append(u)
        for b in self._cat_corr_labels[c]:
            out[b] = out.get(b, []) + self._corr_members[(b, c)]
        return out

    def _fits(self, nb) -> bool:
        if len(nb) > self.k - 1:
            return False
        return not nb or int(self.cnt[nb].max()) <= self.k - 2

    def admissible(self, v: int, b: int) -> bool:
        return self._fits(self._neighbors_by_label(v).get(b, []))

    def first_admissible(self, v: int) -> int:
        """Lowest existing label that admits v, or ``n_labels`` if none does."""
        by_label = self._neighbors_by_label(v)
        for b in range(self.n_labels):
            nb = by_label.get(b)
            if nb is None or self._fits(nb):
                return b
        return self.n_labels

    def add(self, v: int, b: int) -> None:
        if self.label[v] >= 0:
            raise ValueError(f"vertex {v} already assigned")
        g = self.g
        nb = self._neighbors_by_label(v).get(b, [])
        if not self._fits(nb):
            raise ValueError(f"vertex {v} does not fit label {b}")
        if nb:
            self.cnt[nb] += 1
        self.cnt[v] = len(nb)
        self.label[v] = b
        if b >= self.n_labels:
            self.has_uncorrupted.extend([False] * (b + 1 - self.n_labels))
            self.n_labels = b + 1
        c = int(g.y[v])
        self._members[(b, c)].append(v)
        self._cat_labels[c].add(b)
        if g.corrupted[v]:
            self._corr_members[(b, c)].append(v)
            self._cat_corr_labels[c].add(b)
        else:
            self.has_uncorrupted[b] = True

    def remove(self, v: int) -> None:
        b = int(self.label[v])
        if b < 0:
            raise ValueError(f"vertex {v} is not assigned")
        g = self.g
        c = int(g.y[v])
        nb = [u for u in self._neighbors_by_label(v).get(b, []) if u != v]
        if nb:
            self.cnt[nb] -= 1
        self.cnt[v] = 0
        self.label[v] = -1
        self._members[(b, c)].remove(v)
        if not self._members[(b, c)]:
            self._cat_labels[c].discard(b)
        if g.corrupted[v]:
            self._corr_members[(b, c)].remove(v)
            if not self._corr_members[(b, c)]:
                self._cat_corr_labels[c].discard(b)
        else:
            self.has_uncorrupted[b] = self.uncorrupted_count(b) > 0

    def uncorrupted_count(self, b: int) -> int:
        return int(np.count_nonzero((self.label == b) & ~self.g.corrupted))
