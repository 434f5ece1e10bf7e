"""Experiment harness: generate instances, run the distributed solver, run
the exact oracle, compare, and emit machine-readable reports.

Exit codes: 0 success, 2 validation/parameter error, 3 budget violation,
4 round limit exceeded, 5 no cut found.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict

from .congest import BudgetViolation, NetworkConfig, RoundLimitExceeded, default_bits
from .driver import (
    EpsilonSchedule,
    NoCutFoundError,
    PackingCountTooLarge,
    PackingPolicy,
    approx_min_cut,
)
from .generators import clique_path, planted_cut, random_connected
from .graph import (
    GraphFormatError,
    GraphValidationError,
    diameter,
    load_graph,
    save_graph,
)
from .mst import distributed_mst
from .oracle import kruskal_with_order, stoer_wagner
from .tree_primitives import compute_low_high, compute_preorder, decompose
from .graph import sample_subgraph

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_ROUND_LIMIT = 4
EXIT_NO_CUT = 5


def _side_digest(members) -> str:
    ids = ",".join(str(x) for x in sorted(members))
    return hashlib.sha256(ids.encode()).hexdigest()[:16]


def _emit(report: dict, json_path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def cmd_gen(args) -> int:
    if args.model == "planted":
        g = planted_cut(
            args.na, args.nb, args.c, seed=args.seed, internal_p=args.internal_p
        )
    elif args.model == "cliquepath":
        g = clique_path(args.k, args.len)
    elif args.model == "random":
        g = random_connected(
            args.n, extra_edges=args.extra_edges, seed=args.seed, max_weight=args.max_weight
        )
    else:
        raise GraphValidationError(f"unknown model {args.model!r}")
    save_graph(g, args.out)
    print(f"wrote {args.out}: n={g.n} m={g.m} m_multi={g.m_multi}")
    return EXIT_OK


def cmd_solve(args) -> int:
    g = load_graph(args.graph)
    policy = PackingPolicy(
        mode=args.policy,
        fixed_count=args.fixed_count,
        c_pack=args.c_pack,
        lambda_max=args.lambda_max,
        paper_cap=args.paper_cap,
    )
    config = NetworkConfig(bits=args.bits, round_limit=args.round_limit, seed=args.seed)
    sched = EpsilonSchedule.for_graph(args.epsilon, g.n, args.trials_cap)
    lam_bounds = None
    if args.lambda_lo is not None or args.lambda_hi is not None:
        lam_bounds = (args.lambda_lo or 1.0, args.lambda_hi or float(g.n * g.W))
    t0 = time.perf_counter()
    result, stats, trace = approx_min_cut(
        g,
        args.epsilon,
        policy,
        seed=args.seed,
        config=config,
        trial_cap=args.trials_cap,
        exhaustive=args.exhaustive,
        lambda_bounds=lam_bounds,
        packing_cache={},
    )
    wall = time.perf_counter() - t0
    report = {
        "schema_version": SCHEMA_VERSION,
        "input": {
            "path": args.graph,
            "n": g.n,
            "m": g.m,
            "m_multi": g.m_multi,
            "W": g.W,
            "D": diameter(g) if g.n <= 2048 else None,
        },
        "config": {
            "epsilon": args.epsilon,
            "epsilon_prime": sched.epsilon_prime,
            "k": sched.k,
            "theta": sched.theta,
            "policy": {
                "mode": policy.mode,
                "fixed_count": policy.fixed_count,
                "c_pack": policy.c_pack,
                "lambda_max": policy.lambda_max,
            },
            "bits": config.bits if config.bits is not None else default_bits(g.n),
            "round_limit": config.round_limit,
            "seed": args.seed,
            "trials_cap": args.trials_cap,
        },
        "result": {
            "weight": result.weight,
            "side_size": len(result.side),
            "side_digest": _side_digest(result.side.members),
            "side": sorted(result.side.members) if len(result.side) <= 128 else None,
            "source": {
                "iteration": result.source.iteration,
                "tree_index": result.source.tree_index,
                "edge": list(result.source.edge),
                "gamma": result.source.gamma,
            },
        },
        "rounds": {
            "total": stats.rounds_elapsed,
            "max_bits_per_edge_round": stats.max_bits_per_edge_round,
            "total_messages": stats.total_messages,
            "phases": stats.phases,
        },
        "wall_time_s": wall,
    }
    if args.oracle:
        exact = stoer_wagner(g)
        report["oracle"] = {
            "lambda": exact.weight,
            "ratio": result.weight / exact.weight if exact.weight else None,
        }
    if args.trace:
        report["trace"] = [asdict(t) for t in trace]
    _emit(report, args.json)
    if args.check and args.oracle:
        lam = report["oracle"]["lambda"]
        if result.weight > (1.0 + args.epsilon) * lam:
            print(
                f"check failed: weight {result.weight} > (1+eps)*lambda = "
                f"{(1.0 + args.epsilon) * lam:.3f}",
                file=sys.stderr,
            )
            return EXIT_VALIDATION
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = load_graph(args.graph)
    exact = stoer_wagner(g)
    report = {
        "schema_version": SCHEMA_VERSION,
        "input": {"path": args.graph, "n": g.n, "m_multi": g.m_multi},
        "lambda": exact.weight,
        "side_size": len(exact.side),
        "side_digest": _side_digest(exact.side.members),
        "side": sorted(exact.side.members) if len(exact.side) <= 128 else None,
    }
    _emit(report, args.json)
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if not sizes:
        raise GraphValidationError("empty size list")
    rows = []
    for n in sizes:
        length = max(1, n // args.k)
        g = clique_path(args.k, length)
        config = NetworkConfig(seed=0)
        tree, _ = distributed_mst(g, None, config)
        for s in range(args.seeds):
            cfg = NetworkConfig(seed=s)
            frags, s1 = decompose(g, tree, cfg)
            pre, size, s2 = compute_preorder(g, tree, frags, cfg)
            samp = sample_subgraph(g, 0.5, seed=s)
            low, high, s3 = compute_low_high(g, tree, frags, pre, samp, cfg)
            rows.append(
                {
                    "n": g.n,
                    "D": diameter(g),
                    "sqrt_n": math.sqrt(g.n),
                    "seed": s,
                    "rounds": {
                        "decompose": s1.rounds_elapsed,
                        "preorder": s2.rounds_elapsed,
                        "lowhigh": s3.rounds_elapsed,
                    },
                    "total": s1.rounds_elapsed + s2.rounds_elapsed + s3.rounds_elapsed,
                }
            )
    report = {"schema_version": SCHEMA_VERSION, "family": "cliquepath", "rows": rows}
    _emit(report, args.json)
    for r in rows:
        ref = r["D"] + r["sqrt_n"]
        print(
            f"n={r['n']:5d} seed={r['seed']} D={r['D']:4d} total={r['total']:5d} "
            f"rounds/(D+sqrt n)={r['total'] / ref:.2f}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distmincut")
    sub = ap.add_subparsers(dest="cmd", required=True)

    gen = sub.add_parser("gen", help="generate a benchmark instance")
    gen.add_argument("model", choices=["planted", "cliquepath", "random"])
    gen.add_argument("--na", type=int, default=10)
    gen.add_argument("--nb", type=int, default=10)
    gen.add_argument("--c", type=int, default=3)
    gen.add_argument("--internal-p", type=float, default=None, dest="internal_p")
    gen.add_argument("--k", type=int, default=4)
    gen.add_argument("--len", type=int, default=5)
    gen.add_argument("--n", type=int, default=16)
    gen.add_argument("--extra-edges", type=int, default=0)
    gen.add_argument("--max-weight", type=int, default=1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(fn=cmd_gen)

    solve = sub.add_parser("solve", help="run the distributed approximation")
    solve.add_argument("graph")
    solve.add_argument("--epsilon", type=float, default=0.5)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--policy", choices=["paper", "karger", "fixed"], default="karger")
    solve.add_argument("--fixed-count", type=int, default=None, dest="fixed_count")
    solve.add_argument("--c-pack", type=float, default=2.0, dest="c_pack")
    solve.add_argument("--lambda-max", type=float, default=2.0, dest="lambda_max")
    solve.add_argument("--paper-cap", type=int, default=10_000, dest="paper_cap")
    solve.add_argument("--bits", type=int, default=None)
    solve.add_argument("--round-limit", type=int, default=10**6, dest="round_limit")
    solve.add_argument("--trials-cap", type=int, default=1024, dest="trials_cap")
    solve.add_argument("--no-trials-cap", action="store_const", const=None, dest="trials_cap")
    solve.add_argument("--lambda-lo", type=float, default=None, dest="lambda_lo")
    solve.add_argument("--lambda-hi", type=float, default=None, dest="lambda_hi")
    solve.add_argument("--oracle", action="store_true")
    solve.add_argument("--check", action="store_true")
    solve.add_argument("--exhaustive", action="store_true")
    solve.add_argument("--trace", action="store_true")
    solve.add_argument("--json", default=None)
    solve.set_defaults(fn=cmd_solve)

    orc = sub.add_parser("oracle", help="exact minimum cut (centralized)")
    orc.add_argument("graph")
    orc.add_argument("--json", default=None)
    orc.set_defaults(fn=cmd_oracle)

    bench = sub.add_parser("bench", help="tree-primitive round scaling sweep")
    bench.add_argument("--family", choices=["cliquepath"], default="cliquepath")
    bench.add_argument("--k", type=int, default=4)
    bench.add_argument("--sizes", default="64,144,256")
    bench.add_argument("--seeds", type=int, default=1)
    bench.add_argument("--json", default=None)
    bench.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (GraphFormatError, GraphValidationError, PackingCountTooLarge, ValueError) as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION
    except BudgetViolation as exc:
        print(
            json.dumps(
                {
                    "error": "budget-violation",
                    "message": str(exc),
                    "node": exc.node,
                    "round": exc.round,
                    "edge": list(exc.edge),
                }
            ),
            file=sys.stderr,
        )
        return EXIT_BUDGET
    except RoundLimitExceeded as exc:
        print(json.dumps({"error": "round-limit", "message": str(exc)}), file=sys.stderr)
        return EXIT_ROUND_LIMIT
    except NoCutFoundError as exc:
        print(json.dumps({"error": "no-cut-found", "message": str(exc)}), file=sys.stderr)
        return EXIT_NO_CUT


if __name__ == "__main__":
    sys.exit(main())
