"""Empirical constants for the order-of-magnitude bounds."""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from ..theory import BoundReport


class InsufficientDataError(ValueError):
    pass


def _ok(records):
    return [r for r in records if r.error is None]


def _median_spread(groups: dict) -> float:
    meds = [float(np.median(v)) for v in groups.values() if len(v)]
    if not meds or min(meds) <= 0:
        return float("inf")
    return max(meds) / min(meds)


def ratio_groups(records, stat: str, key: str, scale) -> dict:
    """``scale(record) * measured[stat]`` grouped by config[key]."""
    out = defaultdict(list)
    for r in _ok(records):
        if stat in r.measured:
            out[r.config[key]].append(scale(r) * r.measured[stat])
    return dict(sorted(out.items()))


def _nsim_scale(r) -> float:
    return r.config["r_n"] ** r.config["d"] / (r.config["k"] * r.theory["cat_size"])


def fit_constants(records) -> BoundReport:
    recs = _ok(records)
    ns = {r.config["n"] for r in recs}
    ks = {r.config["k"] for r in recs}
    if len(ns) < 2 and len(ks) < 2:
        raise InsufficientDataError("need records from at least two distinct n (or k) values")
    top = max(recs, key=lambda r: (r.config["n"], r.config["k"]))
    report = BoundReport(delta=top.theory["delta"], lambda_=top.theory["lambda"], zeta=top.theory["zeta"])
    diag = {}

    deg = ratio_groups(recs, "max_degree", "n", lambda r: 1.0 / r.theory["delta"])
    if deg:
        allv = [v for vs in deg.values() for v in vs]
        report.gamma_hat = (min(allv), max(allv))
        diag["degree_stability"] = _median_spread(deg)
        diag["degree_degenerate"] = math.isclose(report.gamma_hat[0], report.gamma_hat[1], rel_tol=1e-9)

    tau = ratio_groups(recs, "tau_greedy", "k", lambda r: r.config["k"] / r.theory["delta"])
    if tau:
        allv = [v for vs in tau.values() for v in vs]
        report.lambda_hat = (min(allv), max(allv))
        diag["tau_k_stability"] = _median_spread(tau)
        low = ratio_groups(recs, "tau_lower", "k", lambda r: r.config["k"] / r.theory["delta"])
        if low:
            diag["tau_lower_min"] = min(v for vs in low.values() for v in vs)

    lo = ratio_groups(recs, "nsim_greedy", "n", _nsim_scale)
    hi = ratio_groups(recs, "nsim_upper", "n", _nsim_scale)
    if lo and hi:
        report.beta_hat = min(v for vs in lo.values() for v in vs)
        report.c_hat = max(v for vs in hi.values() for v in vs)
        diag["nsim_lower_stability"] = _median_spread(lo)
        diag["nsim_upper_stability"] = _median_spread(hi)

    adm = [r for r in recs if "admitted" in r.measured]
    if adm:
        p_hat = float(np.mean([r.measured["admitted"] for r in adm]))
        diag["admit_rate"] = p_hat
        diag["admit_miss_rate"] = 1.0 - p_hat
    report.diagnostics = diag
    return report
