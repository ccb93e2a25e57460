"""Pass/fail verdicts over experiment records. Thresholds are fixed here."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..theory import admit_probability_bound
from .fit import ratio_groups

DEGREE_SPREAD_MAX = 2.0
TAU_K_SPREAD_MAX = 3.0
NSIM_RATIO_MAX = 8.0
NSIM_K_SPREAD_MAX = 2.0
N_SE = 3.0
LLL_MIN_RATE = 0.95


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: value={self.value:.6g} threshold={self.threshold:.6g} {self.detail}".rstrip()


def _ok(records):
    return [r for r in records if r.error is None]


def _spread(values) -> float:
    values = list(values)
    if not values or min(values) <= 0:
        return math.inf
    return max(values) / min(values)


def degree_stability(records) -> CheckResult:
    groups = ratio_groups(records, "max_degree", "n", lambda r: 1.0 / r.theory["delta"])
    meds = {n: float(np.median(v)) for n, v in groups.items()}
    s = _spread(meds.values())
    detail = " ".join(f"n={n}:{m:.3f}" for n, m in meds.items())
    return CheckResult("degree max/Delta median spread", s < DEGREE_SPREAD_MAX, s, DEGREE_SPREAD_MAX, detail)


def tau_k_stability(records) -> CheckResult:
    groups = ratio_groups(records, "tau_greedy", "k", lambda r: r.config["k"])
    meds = {k: float(np.median(v)) for k, v in groups.items()}
    s = _spread(meds.values())
    detail = " ".join(f"k={k}:{m:g}" for k, m in meds.items())
    return CheckResult("k*tau median spread", s < TAU_K_SPREAD_MAX, s, TAU_K_SPREAD_MAX, detail)


def nsim_bracket(records) -> list:
    recs = [r for r in _ok(records) if "nsim_greedy" in r.measured]
    worst = 0.0
    by_n = defaultdict(list)
    for r in recs:
        ratio = r.measured["nsim_upper"] / max(r.measured["nsim_greedy"], 1)
        worst = max(worst, ratio)
        by_n[r.config["n"]].append(r)
    out = [CheckResult("grid upper / k-way greedy (max over records)", worst < NSIM_RATIO_MAX, worst, NSIM_RATIO_MAX)]
    for stat in ("nsim_greedy", "nsim_upper"):
        spreads = []
        for n, rs in sorted(by_n.items()):
            per_k = defaultdict(list)
            for r in rs:
                per_k[r.config["k"]].append(r.measured[stat] / r.config["k"])
            spreads.append(_spread(float(np.median(v)) for v in per_k.values()))
        s = max(spreads) if spreads else math.inf
        out.append(CheckResult(f"{stat}/k spread over k (worst n)", s < NSIM_K_SPREAD_MAX, s, NSIM_K_SPREAD_MAX))
    return out


def variance_vs_mean(x: np.ndarray, factor: float = 4.0) -> tuple[float, float, float]:
    """Sample variance, ``factor * mean`` and the standard error of their difference."""
    x = np.asarray(x, dtype=float)
    m = x.mean()
    var = x.var(ddof=1)
    # var - factor*mean is asymptotically the mean of (x - m)^2 - factor*x
    infl = (x - m) ** 2 - factor * x
    se = infl.std(ddof=1) / math.sqrt(len(x))
    return var, factor * m, se


def variance_law(records) -> list:
    out = []
    per_k = defaultdict(list)
    for r in _ok(records):
        if "nsim_exact" in r.measured:
            per_k[r.config["k"]].append(r.measured["nsim_exact"])
    for k, xs in sorted(per_k.items()):
        var, bound, se = variance_vs_mean(np.array(xs))
        thr = bound + N_SE * se
        out.append(
            CheckResult(
                f"var(N_sim) <= 4 E N_sim + 3 SE (k={k}, trials={len(xs)})", var <= thr, var, thr, f"mean={np.mean(xs):.4g}"
            )
        )
    return out


def tau_relative_variance(records) -> CheckResult:
    per_r = defaultdict(list)
    delta = {}
    for r in _ok(records):
        if "tau_exact" in r.measured:
            per_r[r.config["r_n"]].append(r.measured["tau_exact"])
            delta[r.config["r_n"]] = r.measured["delta_analog"]
    rel = []
    for rn in sorted(per_r, key=lambda v: delta[v]):
        x = np.array(per_r[rn], dtype=float)
        rel.append((delta[rn], x.var(ddof=1) / x.mean() ** 2))
    detail = " ".join(f"Delta={d:.3g}:relvar={v:.4g}" for d, v in rel)
    ok = len(rel) >= 2 and all(b[1] < a[1] for a, b in zip(rel, rel[1:]))
    last = rel[-1][1] if rel else math.nan
    first = rel[0][1] if rel else math.nan
    return CheckResult("tau relative variance decreases with Delta", ok, last, first, detail)


def lll_termination(records) -> list:
    recs = [r for r in _ok(records) if "terminated" in r.measured]
    rate = float(np.mean([r.measured["terminated"] for r in recs])) if recs else 0.0
    done = [r for r in recs if r.measured["terminated"]]
    all_valid = all(r.measured["valid"] for r in done)
    cert = all(r.measured["certificate"] for r in recs)
    return [
        CheckResult(f"LLL termination rate ({len(recs)} trials)", rate >= LLL_MIN_RATE, rate, LLL_MIN_RATE),
        CheckResult("LLL outputs valid", all_valid and bool(done), float(all_valid), 1.0),
        CheckResult("LLL instances inside certificate region", cert and bool(recs), float(cert), 1.0),
    ]


def admit_probability(records) -> CheckResult:
    recs = [r for r in _ok(records) if "admitted" in r.measured]
    x = np.array([r.measured["admitted"] for r in recs], dtype=float)
    p_hat = float(x.mean()) if len(x) else math.nan
    se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.inf
    c = recs[0].config if recs else {"n": 1, "d": 1, "r_n": 0.0}
    probs = recs[0].theory["cat_probs"] if recs else [1.0]
    bound = admit_probability_bound(c["n"], c["d"], c["r_n"], 1.0, probs)
    thr = bound - N_SE * se
    return CheckResult(f"P(A_n) >= bound - 3 SE ({len(x)} trials)", p_hat >= thr, p_hat, thr, f"bound={bound:.5g}")


_CHECKS = {
    "degree-scaling": lambda r: [degree_stability(r)],
    "tau-tradeoff": lambda r: [tau_k_stability(r)],
    "nsim-bracket": nsim_bracket,
    "variance-nsim": variance_law,
    "variance-tau": lambda r: [tau_relative_variance(r)],
    "lll-termination": lll_termination,
    "admit-probability": lambda r: [admit_probability(r)],
}


def evaluate(records) -> list:
    """Run the checks of every preset present in ``records``, in first-seen order."""
    by_preset = defaultdict(list)
    for r in _ok(records):
        by_preset[r.preset].append(r)
    out = []
    for preset, recs in by_preset.items():
        out.extend(_CHECKS.get(preset, lambda r: [])(recs))
    return out
