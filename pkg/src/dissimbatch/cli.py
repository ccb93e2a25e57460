"""Command line interface.

Exit codes: 0 success, 1 infeasible (or a file that fails verification),
2 invalid input, 3 round budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import dataset as dsmod
from . import decomposition as dec
from . import similarity, subsets
from .harness import PRESETS, RegimeError, plan_from_config, read_records, report, run

EXIT_OK, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3


def _load(args):
    ds = dsmod.load_csv(args.data, cat_size=getattr(args, "cat_size", None))
    return ds, similarity.build(ds, args.r)


def cmd_gen(args) -> int:
    if args.config:
        cfg = dsmod.load_config(args.config)
    else:
        cfg = dsmod.GeneratorConfig(
            n=args.n,
            d=args.d,
            r_n=args.r,
            p0=args.p0,
            p0_means=args.p0_means,
            categorical=dsmod.CategoricalSpec(args.cat_kind, args.cat_size, p_top=args.p_top),
            seed=args.seed,
        )
    ds = dsmod.generate(cfg)
    dsmod.save_csv(ds, args.out)
    print(json.dumps(asdict(dsmod.summary(ds))))
    return EXIT_OK


def cmd_graph(args) -> int:
    _, g = _load(args)
    stats = g.degree_stats()
    out = asdict(stats)
    out["histogram"] = list(stats.histogram)
    print(json.dumps(out))
    if args.edges:
        g.save_edges(args.edges)
    return EXIT_OK


def cmd_decompose(args) -> int:
    ds, g = _load(args)
    if args.algo == "greedy":
        d = dec.decompose_greedy(g, args.k, order=args.order, seed=args.seed)
    elif args.algo == "lll":
        d = dec.decompose_lll(g, args.k, theta=args.theta, seed=args.seed or 0, max_rounds=args.max_rounds)
    else:
        _, d = dec.tau_exact(g, args.k)
    if args.out:
        d.save_csv(args.out)
    print(json.dumps({"k": args.k, "algo": args.algo, "size": d.size, **{k: v for k, v in d.meta.items() if k != "algo"}}))
    return EXIT_OK


def cmd_subset(args) -> int:
    ds, g = _load(args)
    if args.algo == "upper":
        print(json.dumps({"k": args.k, "method": "grid-upper", "bound": subsets.nsim_upper_grid(ds, args.k, args.r)}))
        return EXIT_OK
    if args.algo == "direct":
        res = subsets.nsim_greedy_direct(g, args.k, order=args.order, seed=args.seed)
    elif args.algo == "kway":
        res = subsets.nsim_greedy_kway(g, args.k, seed=args.seed or 0)
    else:
        res = subsets.nsim_exact(g, args.k)
    if args.out:
        res.save_csv(args.out)
    print(json.dumps({"k": args.k, "method": res.method, "size": res.size}))
    return EXIT_OK


def cmd_verify(args) -> int:
    ds, g = _load(args)
    if args.decomposition:
        d = dec.BatchDecomposition.load_csv(args.decomposition, args.k)
        rep = dec.check_k_good(g, d)
        sys.stdout.write(rep.to_text())
        return EXIT_OK if rep.valid else EXIT_INFEASIBLE
    res = subsets.SubsetResult.load_csv(args.subset)
    if len(res.indices) and (res.indices.min() < 0 or res.indices.max() >= ds.n):
        raise ValueError("subset index out of range")
    ok, observed = subsets.check_similarity_budget(g, res.indices, args.k)
    print(f"valid: {'true' if ok else 'false'}\nmax_within_degree: {observed}")
    return EXIT_OK if ok else EXIT_INFEASIBLE


def cmd_experiment(args) -> int:
    plan = plan_from_config(args.preset, args.config, trials=args.trials, base_seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = run(plan, out / "records.jsonl", jobs=args.jobs, timings=out / "timings.csv")
    failed = sum(r.error is not None for r in records)
    print(json.dumps({"preset": plan.preset, "records": len(records), "failed": failed, "out": str(out)}))
    return EXIT_OK


def cmd_report(args) -> int:
    src = Path(args.input)
    path = src / "records.jsonl" if src.is_dir() else src
    records = read_records(path)
    text = report(records, src if src.is_dir() else src.parent)
    sys.stdout.write(text)
    return EXIT_OK


def _graph_args(p, k=True):
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--r", type=float, required=True, help="similarity radius r_n")
    p.add_argument("--cat-size", type=int, default=None)
    if k:
        p.add_argument("--k", type=int, required=True, help="similarity budget")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dissimbatch", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random dataset")
    p.add_argument("--config", help="INI file with [model] [density] [categorical] [rng]")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--r", type=float, default=0.1)
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--p0-means", choices=dsmod.P0_MEANS, default="prob_corrupted")
    p.add_argument("--cat-size", type=int, default=1)
    p.add_argument("--cat-kind", choices=("uniform", "two-level", "power-law"), default="uniform")
    p.add_argument("--p-top", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("graph", help="build the similarity graph and print degree statistics")
    _graph_args(p, k=False)
    p.add_argument("--edges", help="write the edge list u,v (small n only)")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("decompose", help="k-good batch decomposition")
    _graph_args(p)
    p.add_argument("--algo", choices=("greedy", "lll", "exact"), default="greedy")
    p.add_argument("--order", choices=dec.ORDERS, default="natural")
    p.add_argument("--theta", type=float, default=dec.DEFAULT_THETA)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-rounds", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("subset", help="large subset with similarity at most k-1")
    _graph_args(p)
    p.add_argument("--algo", choices=("direct", "kway", "exact", "upper"), default="direct")
    p.add_argument("--order", choices=("natural", "random", "degree-asc"), default="natural")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_subset)

    p = sub.add_parser("verify", help="check a decomposition or subset file")
    _graph_args(p)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--decomposition")
    grp.add_argument("--subset")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="run a Monte Carlo preset")
    p.add_argument("--preset", choices=PRESETS, required=True)
    p.add_argument("--config", help="INI file with an [experiment] section")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="base seed")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="summarise experiment records")
    p.add_argument("--in", dest="input", required=True, help="experiment directory or JSONL file")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except dec.InfeasibleError as exc:
        print(f"infeasible: {exc}" + (f" (witness {exc.witness})" if exc.witness is not None else ""), file=sys.stderr)
        return EXIT_INFEASIBLE
    except dec.BudgetExhausted as exc:
        print(f"budget exhausted after {exc.rounds} rounds: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, RegimeError, FileNotFoundError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
