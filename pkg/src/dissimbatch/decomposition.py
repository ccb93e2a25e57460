"""k-good batch decompositions: construction, verification, exact minimum and lower bounds.

A decomposition is k-good when every batch holds an uncorrupted point and
every point has at most ``k - 1`` similar points inside its own batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._packing import Packing, within_label_degrees
from .dataset import Dataset
from .similarity import SimilarityGraph

ORDERS = ("natural", "random", "degree-desc")
DEFAULT_THETA = 8 * math.e


class InfeasibleError(Exception):
    """No k-good decomposition (or subset) could be produced; ``witness`` names a culprit vertex."""

    def __init__(self, message: str, witness: Optional[int] = None):
        super().__init__(message)
        self.witness = witness


class BudgetExhausted(Exception):
    def __init__(self, message: str, rounds: int):
        super().__init__(message)
        self.rounds = rounds


class StructureError(ValueError):
    """Batches that do not form a partition of the index set into non-empty parts."""


@dataclass
class BatchDecomposition:
    k: int
    batches: list  # list of sorted int64 arrays
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.batches)

    def __len__(self) -> int:
        return len(self.batches)

    @classmethod
    def from_labels(cls, labels, k: int, meta: Optional[dict] = None) -> "BatchDecomposition":
        """Group indices by label; empty labels vanish, label order is kept."""
        labels = np.asarray(labels, dtype=np.int64)
        order = np.argsort(labels, kind="stable")
        uniq, starts = np.unique(labels[order], return_index=True)
        bounds = list(starts) + [len(labels)]
        batches = [order[bounds[i] : bounds[i + 1]] for i in range(len(uniq))]
        return cls(k, batches, meta or {})

    def labels(self, n: int) -> np.ndarray:
        lab = np.full(n, -1, dtype=np.int64)
        for b, idx in enumerate(self.batches):
            lab[idx] = b
        return lab

    def save_csv(self, path) -> None:
        n = sum(len(b) for b in self.batches)
        lab = self.labels(n)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("idx,batch\n")
            for i, b in enumerate(lab.tolist()):
                fh.write(f"{i},{b}\n")

    @classmethod
    def load_csv(cls, path, k: int) -> "BatchDecomposition":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0].strip() != "idx,batch":
            raise StructureError("decomposition file must start with header idx,batch")
        idx, lab = [], []
        for line_no, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            try:
                i, b = int(parts[0]), int(parts[1])
            except (ValueError, IndexError):
                raise StructureError(f"row {line_no}: malformed") from None
            if len(parts) != 2 or b < 0:
                raise StructureError(f"row {line_no}: malformed")
            idx.append(i)
            lab.append(b)
        order = np.argsort(idx, kind="stable")
        idx = np.asarray(idx)[order]
        if not np.array_equal(idx, np.arange(len(idx))):
            raise StructureError("indices must be 0..n-1, each exactly once")
        return cls.from_labels(np.asarray(lab)[order], k)


@dataclass(frozen=True)
class Violation:
    kind: str  # "no-uncorrupted" or "similarity-budget"
    batch: int
    vertex: Optional[int]
    count: int


@dataclass
class ValidityReport:
    valid: bool
    violations: list

    def to_text(self) -> str:
        lines = [f"valid: {'true' if self.valid else 'false'}"]
        for v in self.violations:
            vertex = "-" if v.vertex is None else v.vertex
            lines.append(f"{v.kind} batch={v.batch} vertex={vertex} count={v.count}")
        return "\n".join(lines) + "\n"


def check_structure(n: int, dec: BatchDecomposition) -> None:
    seen = np.zeros(n, dtype=np.int64)
    for b, idx in enumerate(dec.batches):
        idx = np.asarray(idx)
        if len(idx) == 0:
            raise StructureError(f"batch {b} is empty")
        if idx.min() < 0 or idx.max() >= n:
            raise StructureError(f"batch {b} holds an out-of-range index")
        np.add.at(seen, idx, 1)
    if (seen > 1).any():
        raise StructureError(f"index {int(np.argmax(seen > 1))} appears in more than one batch")
    if (seen == 0).any():
        raise StructureError(f"index {int(np.argmax(seen == 0))} is not covered")


def check_k_good(g: SimilarityGraph, dec: BatchDecomposition) -> ValidityReport:
    check_structure(g.n, dec)
    labels = dec.labels(g.n)
    within = within_label_degrees(g, labels)
    violations = []
    for b, idx in enumerate(dec.batches):
        if g.corrupted[idx].all():
            violations.append(Violation("no-uncorrupted", b, None, 0))
        over = idx[within[idx] > dec.k - 1]
        for v in over.tolist():
            violations.append(Violation("similarity-budget", b, v, int(within[v])))
    return ValidityReport(not violations, violations)


def _processing_order(g: SimilarityGraph, order: str, seed: Optional[int]) -> np.ndarray:
    unc = np.flatnonzero(~g.corrupted)
    cor = np.flatnonzero(g.corrupted)
    if order == "natural":
        pass
    elif order == "random":
        gen = np.random.default_rng(seed)
        unc, cor = gen.permutation(unc), gen.permutation(cor)
    elif order == "degree-desc":
        deg = g.degrees
        unc = unc[np.lexsort((unc, -deg[unc]))]
        cor = cor[np.lexsort((cor, -deg[cor]))]
    else:
        raise ValueError(f"order must be one of {ORDERS}")
    # uncorrupted first, so every batch is opened by an uncorrupted point
    return np.concatenate([unc, cor])


def decompose_greedy(g: SimilarityGraph, k: int, order: str = "natural", seed: Optional[int] = None) -> BatchDecomposition:
    """First-fit: each point joins the lowest-indexed batch that stays within budget."""
    if g.corrupted.all():
        raise InfeasibleError("no uncorrupted point: every batch would lack one")
    pack = Packing(g, k)
    moved = 0
    for v in _processing_order(g, order, seed).tolist():
        b = pack.first_admissible(v)
        if b == pack.n_labels and g.corrupted[v]:
            if not _reanchor(pack, v):
                raise InfeasibleError(f"corrupted point {v} fits no batch opened by an uncorrupted point", witness=v)
            moved += 1
            continue
        pack.add(v, b)
    meta = {"algo": "greedy", "order": order, "reanchored": moved}
    return BatchDecomposition.from_labels(pack.label, k, meta)


def _reanchor(pack: Packing, v: int) -> bool:
    """Place corrupted ``v`` by moving a spare uncorrupted point into a new batch.

    A point is spare when its batch keeps another uncorrupted member. Taking
    it out only lowers counts, so the old batch stays within budget.
    """
    g = pack.g
    fresh = pack.n_labels
    for u in np.flatnonzero(~g.corrupted).tolist():
        old = int(pack.label[u])
        if old < 0 or pack.uncorrupted_count(old) < 2:
            continue
        pack.remove(u)
        pack.add(u, fresh)
        b = pack.first_admissible(v)
        if b <= fresh:
            pack.add(v, b)
            return True
        pack.remove(u)
        pack.n_labels = fresh
        pack.has_uncorrupted.pop()
        pack.add(u, old)
    return False


def lll_batch_count(max_degree: int, k: int, theta: float) -> int:
    return max(1, math.ceil(theta * max_degree / k))


def decompose_lll(
    g: SimilarityGraph,
    k: int,
    theta: float = DEFAULT_THETA,
    seed: int = 0,
    max_rounds: Optional[int] = None,
    q: Optional[int] = None,
) -> BatchDecomposition:
    """Random batch assignment repaired by Moser-Tardos resampling.

    Each round fixes the first violated event in index order. A point with
    ``k`` or more similar batch mates has itself and its ``k`` lowest
    indexed mates redrawn. If no such point exists but some batch lacks an
    uncorrupted point, an uncorrupted point is moved there, drawn uniformly
    among those whose move breaks nothing; when there is none, the members
    of the lacking batch are redrawn instead.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    unc = np.flatnonzero(~g.corrupted)
    if not len(unc):
        raise InfeasibleError("no uncorrupted point: every batch would lack one")
    if q is None:
        q = lll_batch_count(int(g.degrees.max()), k, theta)
    if max_rounds is None:
        max_rounds = 50 * g.n
    gen = np.random.default_rng(seed)
    z = gen.integers(0, q, size=g.n)
    resamples = repairs = 0
    while True:
        within = within_label_degrees(g, z)
        bad = np.flatnonzero(within >= k)
        if len(bad):
            if resamples + repairs >= max_rounds:
                raise BudgetExhausted(f"no valid assignment after {max_rounds} rounds", resamples + repairs)
            v = int(bad[0])
            nb = g.neighbors(v)
            mates = nb[z[nb] == z[v]][:k]
            event = np.concatenate([[v], mates])
            z[event] = gen.integers(0, q, size=len(event))
            resamples += 1
            continue
        has_unc = np.zeros(q, dtype=bool)
        has_unc[z[unc]] = True
        used = np.zeros(q, dtype=bool)
        used[z] = True
        lacking = np.flatnonzero(used & ~has_unc)
        if not len(lacking):
            break
        if resamples + repairs >= max_rounds:
            raise BudgetExhausted(f"no valid assignment after {max_rounds} rounds", resamples + repairs)
        target = int(lacking[0])
        pool = _spare_anchors(g, z, within, unc, target, k)
        if len(pool):
            z[int(pool[gen.integers(0, len(pool))])] = target
            repairs += 1
        else:
            # the event "batch lacks an uncorrupted point" depends on its members
            members = np.flatnonzero(z == target)
            z[members] = gen.integers(0, q, size=len(members))
            resamples += 1
    meta = {"algo": "lll", "q": int(q), "theta": float(theta), "resample_rounds": resamples, "repair_steps": repairs}
    return BatchDecomposition.from_labels(z, k, meta)


def _spare_anchors(g: SimilarityGraph, z, within, unc, target: int, k: int) -> np.ndarray:
    """Uncorrupted points that can move to ``target`` without new violations.

    A candidate's batch must keep another uncorrupted point and the move must
    respect the budget.
    """
    per_batch = np.bincount(z[unc])
    ok = []
    for u in unc[per_batch[z[unc]] >= 2].tolist():
        nb = g.neighbors(u)
        inside = nb[z[nb] == target]
        if len(inside) <= k - 1 and (not len(inside) or within[inside].max() <= k - 2):
            ok.append(u)
    return np.asarray(ok, dtype=np.int64)


def _bitmasks(g: SimilarityGraph) -> list:
    masks = []
    for v in range(g.n):
        m = 0
        for u in g.neighbors(v).tolist():
            m |= 1 << u
        masks.append(m)
    return masks


def tau_exact(g: SimilarityGraph, k: int, n_cap: int = 14) -> tuple[int, BatchDecomposition]:
    """Minimum number of batches by exhaustive search over set partitions.

    Point 0 opens batch 0 and every new batch is opened by the lowest
    unassigned index, so each partition is visited once.
    """
    n = g.n
    if n > n_cap:
        raise ValueError(f"exact search limited to n <= {n_cap}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if g.corrupted.all():
        raise InfeasibleError("no uncorrupted point: every batch would lack one")
    adj = _bitmasks(g)
    unc = [not c for c in g.corrupted.tolist()]
    unc_after = [0] * (n + 1)
    for v in range(n - 1, -1, -1):
        unc_after[v] = unc_after[v + 1] + unc[v]

    best_t = n + 1
    best_labels = None
    try:
        greedy = decompose_greedy(g, k)
        best_t = greedy.size + 1  # the search re-finds a partition of the greedy size
    except InfeasibleError:
        pass

    batches: list = []  # member masks
    anchored: list = []  # batch holds an uncorrupted point
    cnt = [0] * n
    labels = [-1] * n
    full = 0  # vertices already at k - 1 batch mates

    def rec(v: int) -> None:
        nonlocal best_t, best_labels, full
        t = len(batches)
        if t >= best_t:
            return
        if anchored.count(False) > unc_after[v]:
            return
        if v == n:
            best_t = t
            best_labels = list(labels)
            return
        for b in range(t + 1):
            if b == t:
                if t + 1 >= best_t:
                    break
                batches.append(0)
                anchored.append(False)
            nb = adj[v] & batches[b]
            c = nb.bit_count()
            if c <= k - 1 and not (nb & full):
                saved_full = full
                m = nb
                while m:
                    low = m & -m
                    u = low.bit_length() - 1
                    cnt[u] += 1
                    if cnt[u] == k - 1:
                        full |= low
                    m ^= low
                cnt[v] = c
                if c == k - 1:
                    full |= 1 << v
                was = anchored[b]
                batches[b] |= 1 << v
                anchored[b] = was or unc[v]
                labels[v] = b
                rec(v + 1)
                labels[v] = -1
                batches[b] &= ~(1 << v)
                anchored[b] = was
                m = nb
                while m:
                    low = m & -m
                    cnt[low.bit_length() - 1] -= 1
                    m ^= low
                cnt[v] = 0
                full = saved_full
            if b == t:
                batches.pop()
                anchored.pop()

    rec(0)
    if best_labels is None:
        raise InfeasibleError("no k-good decomposition exists")
    return best_t, BatchDecomposition.from_labels(best_labels, k, {"algo": "exact"})


def certificate_cells(x: np.ndarray, r_n: float) -> np.ndarray:
    """Cell ids on a grid of side r_n / sqrt(4d); same-cell points are closer than r_n / 2."""
    d = x.shape[1]
    side = r_n / math.sqrt(4 * d)
    return np.floor(x / side).astype(np.int64)


def pairwise_similar_groups(g: SimilarityGraph, ds: Dataset) -> list:
    """Sets of indices known to be pairwise similar without any distance check.

    One set per (certificate cell, category) of uncorrupted points, merged
    with that category's corrupted points, plus each category's corrupted set.
    """
    groups = []
    for c in range(g.cat_size):
        corr = g.category_corrupted(c)
        if len(corr):
            groups.append(corr)
    if g.r_n > 0:
        unc = np.flatnonzero(~ds.corrupted)
        if len(unc):
            rows = np.column_stack([ds.y[unc], certificate_cells(ds.x[unc], g.r_n)])
            _, inv = np.unique(rows, axis=0, return_inverse=True)
            inv = inv.ravel()
            order = np.argsort(inv, kind="stable")
            splits = np.flatnonzero(np.diff(inv[order])) + 1
            for part in np.split(unc[order], splits):
                corr = g.category_corrupted(int(ds.y[part[0]]))
                groups.append(np.sort(np.concatenate([part, corr])))
    return groups


def tau_lower_bound(g: SimilarityGraph, ds: Dataset, k: int) -> int:
    """A batch holds at most k points of any pairwise-similar set."""
    best = 1
    for grp in pairwise_similar_groups(g, ds):
        best = max(best, -(-len(grp) // k))
    return best
