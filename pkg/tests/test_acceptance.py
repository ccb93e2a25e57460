"""Exit criteria, one test each, at the stated tolerances and runtime limits.

Each test prints a single ``PASS``/``FAIL`` line (also repeated in the pytest
terminal summary). Run alone with ``pytest tests/test_acceptance.py -s``.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from dissimbatch import dataset as D
from dissimbatch import decomposition as Dc
from dissimbatch import harness as H
from dissimbatch import similarity as S
from dissimbatch import subsets as Su
from dissimbatch.harness import checks
from helpers import clique

pytestmark = pytest.mark.acceptance


def verdict(num, name, ok, detail, elapsed, limit=None):
    within = limit is None or elapsed < limit
    line = f"[{'PASS' if ok and within else 'FAIL'}] {num:>2}. {name}: {detail}; {elapsed:.1f}s"
    if limit is not None:
        line += f" (limit {limit:.0f}s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line
    assert within, line


def random_config(rng, n_max, n_min=1, d=(1, 2, 3), p0=(0.0, 0.1, 0.5), cats=(1, 4, 16), seed=0):
    return D.GeneratorConfig(
        n=int(rng.integers(n_min, n_max + 1)),
        d=int(rng.choice(d)),
        r_n=float(rng.uniform(0.0, 0.6)),
        p0=float(rng.choice(p0)),
        categorical=D.CategoricalSpec("uniform", int(rng.choice(cats))),
        seed=seed,
    )


def test_01_oracle_graph_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    mismatches = 0
    for i in range(100):
        cfg = random_config(rng, 512, seed=i)
        ds = D.generate(cfg)
        fast = S.build(ds, cfg.r_n)
        slow = S.build_bruteforce(ds, cfg.r_n)
        same = np.array_equal(fast.to_dense(), slow.to_dense()) and np.array_equal(fast.degrees, slow.degrees)
        mismatches += not same
    verdict(1, "oracle graph equivalence", mismatches == 0, f"{mismatches}/100 mismatches", time.perf_counter() - t0, 60)


def test_02_soundness_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    violations = outputs = infeasible = exhausted = 0
    for i in range(1000):
        cfg = random_config(rng, 200, n_min=2, p0=(0.0, 0.05, 0.2), cats=(1, 2, 4, 8), seed=i)
        ds = D.generate(cfg)
        g = S.build(ds, cfg.r_n)
        k = int(rng.integers(1, 6))
        try:
            dec = Dc.decompose_greedy(g, k, order=Dc.ORDERS[i % len(Dc.ORDERS)], seed=i)
            outputs += 1
            violations += not Dc.check_k_good(g, dec).valid
        except Dc.InfeasibleError:
            infeasible += 1
        if not ds.corrupted.all():
            try:
                dec = Dc.decompose_lll(g, k, seed=i)
                outputs += 1
                violations += not Dc.check_k_good(g, dec).valid
            except Dc.BudgetExhausted:
                exhausted += 1
        kk = min(k, ds.n)
        for res in (Su.nsim_greedy_direct(g, kk, order="random", seed=i), Su.nsim_greedy_kway(g, kk, seed=i)):
            outputs += 1
            violations += not Su.check_similarity_budget(g, res.indices, kk)[0]
    detail = f"{violations} violations over {outputs} outputs (infeasible {infeasible}, lll budget exhausted {exhausted})"
    verdict(2, "soundness suite", violations == 0, detail, time.perf_counter() - t0, 120)


def test_03_exact_oracle_sandwiches():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    bad = []
    checked = 0
    for i in range(500):
        cfg = random_config(rng, 12, n_min=1, seed=i)
        ds = D.generate(cfg)
        g = S.build(ds, cfg.r_n)
        taus, nsims = {}, {}
        for k in (1, 2, 3, 4):
            try:
                t, _ = Dc.tau_exact(g, k)
            except Dc.InfeasibleError:
                t = None
            if t is not None:
                taus[k] = t
                lo = Dc.tau_lower_bound(g, ds, k)
                try:
                    hi = Dc.decompose_greedy(g, k).size
                except Dc.InfeasibleError:
                    hi = None
                if hi is None or not (lo <= t <= hi):
                    bad.append((i, k, "tau", lo, t, hi))
            ne = Su.nsim_exact(g, k).size
            nsims[k] = ne
            up = Su.nsim_upper_grid(ds, k, cfg.r_n)
            greedy = [Su.nsim_greedy_direct(g, k).size]
            if k <= ds.n:
                greedy.append(Su.nsim_greedy_kway(g, k, seed=i).size)
            if not (max(greedy) <= ne <= up):
                bad.append((i, k, "nsim", greedy, ne, up))
        for k in (1, 2, 3):
            if k in taus and k + 1 in taus and taus[k + 1] > taus[k]:
                bad.append((i, k, "tau-monotone"))
            if nsims[k + 1] < nsims[k]:
                bad.append((i, k, "nsim-monotone"))
        checked += 1
    detail = f"{len(bad)} violations over {checked} instances, k=1..4" + (f", first {bad[0]}" if bad else "")
    verdict(3, "exact-oracle sandwiches", not bad, detail, time.perf_counter() - t0, 300)


def test_04_clique_closed_forms():
    t0 = time.perf_counter()
    g = S.build(clique(10), 1.0)
    tau = Dc.tau_exact(g, 3)[0]
    nsim = [Su.nsim_exact(g, k).size for k in range(1, 11)]
    ok = tau == 4 and nsim == [min(10, k) for k in range(1, 11)]
    verdict(4, "clique closed forms", ok, f"tau_3={tau}, nsim(1..10)={nsim}", time.perf_counter() - t0)


def _preset_check(num, name, preset, limit, **overrides):
    t0 = time.perf_counter()
    recs = H.run(H.preset(preset, **overrides))
    errors = [r.error for r in recs if r.error]
    results = checks.evaluate(recs)
    ok = not errors and results and all(c.passed for c in results)
    detail = "; ".join(f"{c.name} value={c.value:.4g} threshold={c.threshold:.4g}" for c in results)
    if errors:
        detail += f"; {len(errors)} trial errors, first: {errors[0]}"
    verdict(num, name, ok, detail, time.perf_counter() - t0, limit)


def test_05_degree_scaling():
    _preset_check(5, "degree scaling band", "degree-scaling", 180)


def test_06_tau_k_tradeoff():
    _preset_check(6, "tau-k tradeoff", "tau-tradeoff", 180)


def test_07_nsim_bracket():
    _preset_check(7, "N_sim bracket", "nsim-bracket", 180)


def test_08_variance_laws():
    t0 = time.perf_counter()
    nsim_recs, tau_recs = H.run(H.preset("variance-nsim")), H.run(H.preset("variance-tau"))
    errors = [r.error for r in nsim_recs + tau_recs if r.error]
    results = checks.evaluate(nsim_recs) + checks.evaluate(tau_recs)
    ok = not errors and len(results) == 3 and all(c.passed for c in results)
    detail = "; ".join(f"{c.name} value={c.value:.4g} threshold={c.threshold:.4g}" for c in results)
    verdict(8, "variance laws", ok, detail, time.perf_counter() - t0, 240)


def test_09_lll_termination():
    _preset_check(9, "LLL resampler termination", "lll-termination", 180)


def test_10_admit_probability():
    _preset_check(10, "greedy admit probability", "admit-probability", None)


def test_11_determinism(tmp_path):
    t0 = time.perf_counter()
    differing = []
    for name in H.PRESETS:
        plan = H.preset(name, trials=2, base_seed=11)
        a, b = tmp_path / f"{name}-a.jsonl", tmp_path / f"{name}-b.jsonl"
        H.run(plan, a)
        H.run(plan, b, jobs=2)
        if a.read_bytes() != b.read_bytes():
            differing.append(name)
    detail = f"{len(H.PRESETS) - len(differing)}/{len(H.PRESETS)} presets byte-identical across reruns"
    verdict(11, "determinism", not differing, detail, time.perf_counter() - t0)
