"""Instance builders and brute-force oracles shared by the test modules."""

import numpy as np

from dissimbatch import dataset as D
from dissimbatch import similarity as S


def clique(n, d=2, spread=0.01):
    """n same-category uncorrupted points pairwise closer than r=1."""
    x = np.random.default_rng(n).uniform(0, spread, size=(n, d))
    return D.Dataset(x, np.zeros(n, dtype=int), np.zeros(n, dtype=bool))


def two_cliques(a, b, d=2):
    x = np.zeros((a + b, d))
    x[a:, 0] = 10.0
    return D.Dataset(x, np.zeros(a + b, dtype=int), np.zeros(a + b, dtype=bool))


def random_instance(seed, n_max=8, n_min=1):
    r = np.random.default_rng(seed)
    n = int(r.integers(n_min, n_max + 1))
    cfg = D.GeneratorConfig(
        n=n,
        d=int(r.integers(1, 4)),
        r_n=float(r.uniform(0.0, 0.9)),
        p0=float(r.choice([0.0, 0.2, 0.5])),
        categorical=D.CategoricalSpec("uniform", int(r.integers(1, 4))),
        seed=seed,
    )
    ds = D.generate(cfg)
    return ds, cfg.r_n, S.build(ds, cfg.r_n)


def _partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in _partitions(rest):
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]
        yield [[first]] + p


def brute_tau(adj, corrupted, k):
    """Minimum k-good partition size by enumerating all set partitions."""
    best = None
    for p in _partitions(list(range(len(corrupted)))):
        if best is not None and len(p) >= best:
            continue
        if all(any(not corrupted[v] for v in b) for b in p) and all(
            adj[v, b].sum() <= k - 1 for b in p for v in b
        ):
            best = len(p)
    return best


def brute_nsim(adj, k):
    n = len(adj)
    best = 0
    for m in range(1 << n):
        s = [v for v in range(n) if m >> v & 1]
        if len(s) > best and all(adj[v, s].sum() <= k - 1 for v in s):
            best = len(s)
    return best
