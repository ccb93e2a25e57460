"""Monte Carlo trial execution with deterministic, schedule-independent output."""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .. import decomposition as dec
from .. import subsets, theory
from ..dataset import generate
from ..rng import derive_seed
from ..similarity import build
from .plan import ExperimentPlan, check_regime


@dataclass
class ExperimentRecord:
    preset: str
    cell: int
    trial: int
    seed: int
    config: dict
    measured: dict
    theory: dict
    error: Optional[str] = None

    def to_json(self) -> str:
        payload = {
            "preset": self.preset,
            "cell": self.cell,
            "trial": self.trial,
            "seed": self.seed,
            "config": self.config,
            "measured": self.measured,
            "theory": self.theory,
        }
        if self.error is not None:
            payload["error"] = self.error
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "ExperimentRecord":
        p = json.loads(line)
        return cls(p["preset"], p["cell"], p["trial"], p["seed"], p["config"], p["measured"], p["theory"], p.get("error"))


def trial_seed(base_seed: int, cell: int, trial: int) -> int:
    return derive_seed(base_seed, cell, trial)


def _theory(plan: ExperimentPlan, cell: dict) -> dict:
    tp = plan.theory_params(cell)
    delta, lam = theory.delta_lambda(tp)
    cat = plan.categorical(cell["n"])
    z = theory.zeta(tp, cell["k"], 1.0, cat.probs())
    return {
        "delta": delta,
        "lambda": lam,
        "zeta": z,
        "p_up": tp.p_up,
        "p_low": tp.p_low,
        "cat_size": tp.cat_size,
        "cat_probs": cat.probs().tolist(),
    }


def _trial(plan: ExperimentPlan, cell: dict, seed: int) -> dict:
    cfg = plan.model(cell, seed)
    ds = generate(cfg)
    k = cell["k"]
    preset = plan.preset
    if preset == "admit-probability":
        # is the last point free of similar predecessors?
        last = ds.n - 1
        same = ds.y[:last] == ds.y[last]
        if ds.corrupted[last]:
            similar = same
        else:
            d2 = np.sum((ds.x[:last] - ds.x[last]) ** 2, axis=1)
            similar = same & (ds.corrupted[:last] | (d2 < cfg.r_n**2))
        return {"admitted": int(not similar.any())}
    g = build(ds, cfg.r_n)
    max_deg = int(g.degrees.max())
    if preset == "degree-scaling":
        return {"max_degree": max_deg, "mean_degree": float(g.degrees.mean())}
    if preset == "tau-tradeoff":
        d = dec.decompose_greedy(g, k)
        return {"tau_greedy": d.size, "tau_lower": dec.tau_lower_bound(g, ds, k), "max_degree": max_deg}
    if preset == "nsim-bracket":
        return {
            "nsim_greedy": subsets.nsim_greedy_kway(g, k, seed=seed).size,
            "nsim_direct": subsets.nsim_greedy_direct(g, k).size,
            "nsim_upper": subsets.nsim_upper_grid(ds, k, cfg.r_n),
        }
    if preset == "variance-nsim":
        return {"nsim_exact": subsets.nsim_exact(g, k).size}
    if preset == "variance-tau":
        t, _ = dec.tau_exact(g, k)
        return {"tau_exact": t, "delta_analog": cfg.n * cfg.categorical.p_up * cfg.r_n**cfg.d}
    if preset == "lll-termination":
        if cell["theta"] is not None:
            q = dec.lll_batch_count(max_deg, k, cell["theta"])
        elif max_deg >= k:
            q = theory.min_feasible_q(max_deg, k)
        else:
            q = 1
        feasible = q >= 2 and max_deg >= k and theory.lll_certificate(max_deg, k, q).feasible
        out = {"q": q, "max_degree": max_deg, "certificate": int(feasible or max_deg < k)}
        try:
            d = dec.decompose_lll(g, k, seed=seed, max_rounds=plan.max_rounds_factor * cfg.n, q=q)
        except dec.BudgetExhausted as exc:
            out.update(terminated=0, rounds=exc.rounds, valid=0)
            return out
        out.update(
            terminated=1,
            rounds=d.meta["resample_rounds"] + d.meta["repair_steps"],
            resample_rounds=d.meta["resample_rounds"],
            repair_steps=d.meta["repair_steps"],
            batches=d.size,
            valid=int(dec.check_k_good(g, d).valid),
        )
        return out
    raise ValueError(f"unknown preset {preset!r}")


def _task(args) -> tuple:
    plan, cell_idx, cell, trial = args
    seed = trial_seed(plan.base_seed, cell_idx, trial)
    t0 = time.perf_counter()
    try:
        measured, error = _trial(plan, cell, seed), None
    except Exception as exc:  # a failing trial is recorded, never fatal
        measured, error = {}, f"{type(exc).__name__}: {exc}"
    elapsed = (time.perf_counter() - t0) * 1000.0
    config = dict(cell, preset=plan.preset, d=plan.d, p0=plan.p0)
    rec = ExperimentRecord(plan.preset, cell_idx, trial, seed, config, measured, _theory(plan, cell), error)
    return rec, elapsed


def tasks(plan: ExperimentPlan) -> list:
    return [(plan, ci, cell, t) for ci, cell in enumerate(plan.cells()) for t in range(plan.trials)]


def run(plan: ExperimentPlan, out: Optional[Path] = None, jobs: int = 1, timings: Optional[Path] = None) -> list:
    """Execute every (cell, trial); records come back ordered by cell then trial.

    Wall-clock timings are kept out of the records so that reruns are
    byte-identical; pass ``timings`` to save them separately.
    """
    check_regime(plan)
    work = tasks(plan)
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_task, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_task(w) for w in work]
    records = [r for r, _ in results]
    if out is not None:
        write_records(records, out)
    if timings is not None:
        with open(timings, "w", encoding="utf-8") as fh:
            fh.write("cell,trial,runtime_ms\n")
            for r, ms in results:
                fh.write(f"{r.cell},{r.trial},{ms:.3f}\n")
    return records


def write_records(records: Iterable[ExperimentRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_records(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [ExperimentRecord.from_json(line) for line in fh if line.strip()]
