"""Aggregated tables (CSV + plain text) from experiment records."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .checks import evaluate
from .fit import InsufficientDataError, fit_constants

# exact statistics; everything else is a greedy or certificate surrogate
EXACT = {"max_degree", "mean_degree", "nsim_exact", "tau_exact", "admitted", "delta_analog"}
SKIP = {"certificate", "terminated", "valid", "q"}


def _cells(records):
    cells = defaultdict(list)
    for r in records:
        if r.error is None:
            cells[r.cell].append(r)
    return dict(sorted(cells.items()))


def aggregate(records) -> list:
    rows = []
    for cell, recs in _cells(records).items():
        c = recs[0].config
        stats = sorted({s for r in recs for s in r.measured})
        for s in stats:
            x = np.array([r.measured[s] for r in recs if s in r.measured], dtype=float)
            q1, med, q3 = np.percentile(x, [25, 50, 75])
            rows.append(
                {
                    "preset": recs[0].preset,
                    "cell": cell,
                    "n": c["n"],
                    "k": c["k"],
                    "r_n": c["r_n"],
                    "stat": s,
                    "kind": "exact" if s in EXACT else "surrogate",
                    "count": len(x),
                    "median": float(med),
                    "q1": float(q1),
                    "q3": float(q3),
                    "mean": float(x.mean()),
                }
            )
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _special_tables(records) -> list:
    cells = _cells(records)
    if not cells:
        return []
    preset = next(iter(cells.values()))[0].preset
    lines = []
    if preset == "tau-tradeoff":
        lines.append("k  median_tau  k*median_tau  median_tau_lower")
        for recs in cells.values():
            k = recs[0].config["k"]
            t = float(np.median([r.measured["tau_greedy"] for r in recs]))
            lo = float(np.median([r.measured["tau_lower"] for r in recs]))
            lines.append(f"{k}  {t:g}  {k * t:g}  {lo:g}")
    elif preset == "nsim-bracket":
        lines.append("n  k  greedy_kway  grid_upper  ratio")
        for recs in cells.values():
            c = recs[0].config
            lo = float(np.median([r.measured["nsim_greedy"] for r in recs]))
            hi = float(np.median([r.measured["nsim_upper"] for r in recs]))
            lines.append(f"{c['n']}  {c['k']}  {lo:g}  {hi:g}  {hi / max(lo, 1):.4g}")
    return lines


def report(records, out_dir) -> str:
    """Write ``summary.csv`` and ``summary.txt`` into ``out_dir``; return the text."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = aggregate(records)
    header = ["preset", "cell", "n", "k", "r_n", "stat", "kind", "count", "median", "q1", "q3", "mean"]
    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])

    lines = [f"records: {len(records)} ({sum(r.error is not None for r in records)} failed)"]
    for row in rows:
        lines.append(
            f"cell {row['cell']} n={row['n']} k={row['k']} r_n={row['r_n']:.5g} {row['stat']} [{row['kind']}]: "
            f"median={row['median']:.6g} iqr=[{row['q1']:.6g}, {row['q3']:.6g}] count={row['count']}"
        )
    lines.extend(_special_tables(records))
    try:
        fit = fit_constants(records)
    except (InsufficientDataError, ValueError):
        fit = None
    if fit is not None:
        lines.append("fitted constants:")
        for name in ("gamma_hat", "lambda_hat", "beta_hat", "c_hat"):
            val = getattr(fit, name)
            if val is not None:
                lines.append(f"  {name} = {val}")
        for key, val in sorted((fit.diagnostics or {}).items()):
            lines.append(f"  {key} = {val}")
    lines.append("regime guards are finite-n stand-ins for asymptotic conditions")
    for chk in evaluate(records):
        lines.append(chk.line())
    text = "\n".join(lines) + "\n"
    (out_dir / "summary.txt").write_text(text, encoding="utf-8")
    return text
