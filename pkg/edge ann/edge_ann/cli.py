"""Command-line entry point: `edge-ann <command> [options]`.

Commands: gen, build, query, oracle, bench, sweep-leaf, scale, stats.
Usage errors exit with status 2, library and IO failures with status 1.
"""
import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import pandas as pd

from . import config
from .anchor_opt import OptimizerConfig
from .baseline_tree import build_baseline_forest
from .bench import leaf_sweep, run_bench, scale_study
from .edge_tree import BuildConfig, build_forest, tree_stats
from .errors import ConfigError, EdgeAnnError
from .logger import get_logger
from .persist import KIND_NAMES, deserialize, measure_size, predict_size, read_header, serialize
from .search import SearchParams, brute_force_knn, traverse
from .vecstore import DataGenSpec, gen_synthetic, load_vectors, write_csv, write_fvecs

logger = get_logger(__name__)


def _int_list(text: str):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list is empty")
    return values


def _print_json(payload, stream=None) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True), file=stream or sys.stdout)


def _build_config(args) -> BuildConfig:
    opt = OptimizerConfig(k_candidates=args.candidates, seed=args.seed)
    return BuildConfig(
        leaf_threshold=args.leaf, num_trees=args.trees, optimizer=opt, seed=args.seed, n_jobs=args.jobs
    )


def _neighbors_frame(results) -> pd.DataFrame:
    rows = [
        {"query_idx": qi, "rank": rank, "id": nb.id, "dist": nb.dist}
        for qi, res in enumerate(results)
        for rank, nb in enumerate(res.neighbors)
    ]
    return pd.DataFrame(rows, columns=config.QUERY_COLUMNS)


def _write_table(frame: pd.DataFrame, out) -> None:
    if out is None:
        frame.to_csv(sys.stdout, index=False)
    else:
        frame.to_csv(out, index=False)
        logger.debug(f"Wrote {len(frame)} rows to {out}")


def cmd_gen(args) -> int:
    store = gen_synthetic(DataGenSpec(args.n, args.dim, args.clusters, args.stddev, seed=args.seed))
    out = Path(args.out)
    if out.suffix.lower() in (".csv", ".txt"):
        write_csv(out, store)
    else:
        write_fvecs(out, store)
    return 0


def cmd_build(args) -> int:
    store = load_vectors(args.input)
    cfg = _build_config(args)
    builder = build_baseline_forest if args.kind == "baseline" else build_forest
    forest = builder(store, cfg)
    report = serialize(forest, store, args.out, embed_vectors=not args.no_embed_vectors)
    _print_json(report.to_dict())
    return 0


def _load_index(index, data):
    forest, store = deserialize(index)
    if data is not None:
        store = load_vectors(data)
    if store is None:
        raise ConfigError(f"{index} has no embedded vectors; pass --data")
    return forest, store


def cmd_query(args) -> int:
    forest, store = _load_index(args.index, args.data)
    queries = load_vectors(args.queries).data
    params = SearchParams(k=args.k, budget=args.budget, budget_unit=args.budget_unit)
    results = [traverse(forest, store, q, params) for q in queries]
    _write_table(_neighbors_frame(results), args.out)
    return 0


def cmd_oracle(args) -> int:
    if args.data is None and args.index is None:
        raise ConfigError("oracle needs --data or --index")
    if args.data is not None:
        store = load_vectors(args.data)
    else:
        _, store = _load_index(args.index, None)
    queries = load_vectors(args.queries).data
    k = min(args.k, store.n)
    results = [brute_force_knn(store, q, k) for q in queries]
    _write_table(_neighbors_frame(results), args.out)
    return 0


def cmd_bench(args) -> int:
    store = load_vectors(args.data)
    run = run_bench(store, args.budgets, args.holdout, args.k, _build_config(args), threads=args.threads)
    _write_table(run.table, args.out)
    summary = run.comparison.to_dict()
    if args.threads > 1:
        summary["threads"] = args.threads
        summary["qps_edge"] = run.throughput_edge
        summary["qps_base"] = run.throughput_base
    _print_json(summary, None if args.out is not None else sys.stderr)
    return 0


def cmd_sweep_leaf(args) -> int:
    store = load_vectors(args.data)
    frame = leaf_sweep(store, args.leaves, args.budgets, args.holdout, args.k, _build_config(args))
    _write_table(frame, args.out)
    return 0


def cmd_scale(args) -> int:
    run = scale_study(args.sizes, args.dim, _build_config(args), args.clusters, args.stddev)
    _write_table(run.table, args.out)
    _print_json({"slope": run.slope, "r2": run.r2}, None if args.out is not None else sys.stderr)
    return 0


def cmd_stats(args) -> int:
    header = read_header(args.index)
    forest, _ = deserialize(args.index)
    size = measure_size(forest, header.vectors_embedded)
    predicted = predict_size(
        header.n, header.dim, header.leaf_threshold, header.num_trees,
        KIND_NAMES[header.kind], header.vectors_embedded,
    )
    head = asdict(header)
    head["magic"] = header.magic.decode("ascii")
    head["kind"] = KIND_NAMES[header.kind]
    _print_json(
        {
            "header": head,
            "file_bytes": Path(args.index).stat().st_size,
            "size": size.to_dict(),
            "predicted_total_bytes": predicted,
            "predicted_internal_delta": (
                abs(size.internal_node_bytes - size.predicted_internal_bytes) / size.predicted_internal_bytes
                if size.predicted_internal_bytes
                else 0.0
            ),
            "stats": tree_stats(forest).to_dict(),
        }
    )
    return 0


def _add_build_options(p, trees=config.DEFAULT_NUM_TREES):
    p.add_argument("--trees", type=int, default=trees, help="number of trees t_n")
    p.add_argument("--leaf", type=int, default=config.DEFAULT_LEAF_THRESHOLD, help="leaf threshold T")
    p.add_argument("--candidates", type=int, default=config.DEFAULT_CANDIDATES, help="anchor candidates K")
    p.add_argument("--seed", type=int, default=config.default_seed())
    p.add_argument("--jobs", type=int, default=1, help="threads used to build trees")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edge-ann", description="Anchor-pair tree ANN index and benchmarks")
    parser.add_argument("--debug", action="store_true", help=f"also log to {config.DEBUG_LOG_PATH}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic Gaussian-mixture dataset")
    p.add_argument("--out", required=True, help=".fvecs or .csv path")
    p.add_argument("--n", type=int, default=config.DEFAULT_SYNTH_N)
    p.add_argument("--dim", type=int, default=config.DEFAULT_SYNTH_DIM)
    p.add_argument("--clusters", type=int, default=config.DEFAULT_SYNTH_CLUSTERS)
    p.add_argument("--stddev", type=float, default=config.DEFAULT_SYNTH_STDDEV)
    p.add_argument("--seed", type=int, default=config.default_seed())
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="build and write an index")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("edge", "baseline"), default="edge")
    p.add_argument("--no-embed-vectors", action="store_true")
    _add_build_options(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="approximate top-k for every query vector")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--data", help="vector file for indexes written without vectors")
    p.add_argument("--k", type=int, default=config.DEFAULT_K)
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--budget-unit", choices=("items", "leaves"), default="items")
    p.add_argument("--out")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("oracle", help="exact top-k by brute force, same CSV as query")
    p.add_argument("--queries", required=True)
    p.add_argument("--data")
    p.add_argument("--index")
    p.add_argument("--k", type=int, default=config.DEFAULT_K)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="recall/latency of anchor vs baseline forests over budgets")
    p.add_argument("--data", required=True)
    p.add_argument("--holdout", type=int, default=config.DEFAULT_HOLDOUT)
    p.add_argument("--k", type=int, default=config.DEFAULT_K)
    p.add_argument("--budgets", type=_int_list, default=config.DEFAULT_BUDGETS)
    p.add_argument("--threads", type=int, default=1, help="extra concurrent throughput run when > 1")
    p.add_argument("--out")
    _add_build_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep-leaf", help="build time and recall over leaf thresholds")
    p.add_argument("--data", required=True)
    p.add_argument("--leaves", type=_int_list, default=config.LEAF_SWEEP)
    p.add_argument("--holdout", type=int, default=config.DEFAULT_HOLDOUT)
    p.add_argument("--k", type=int, default=config.DEFAULT_K)
    p.add_argument("--budgets", type=_int_list, default=config.DEFAULT_BUDGETS)
    p.add_argument("--out")
    _add_build_options(p)
    p.set_defaults(func=cmd_sweep_leaf)

    p = sub.add_parser("scale", help="build time over an N ladder with a log-log fit")
    p.add_argument("--sizes", type=_int_list, default=config.SCALE_LADDER)
    p.add_argument("--dim", type=int, default=config.DEFAULT_SYNTH_DIM)
    p.add_argument("--clusters", type=int, default=config.DEFAULT_SYNTH_CLUSTERS)
    p.add_argument("--stddev", type=float, default=config.DEFAULT_SYNTH_STDDEV)
    p.add_argument("--out")
    _add_build_options(p, trees=4)
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("stats", help="tree statistics and size accounting of an index file")
    p.add_argument("--index", required=True)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    get_logger(debug=args.debug or None)
    logger.debug(f"=== {args.command} START ===")
    try:
        status = args.func(args)
    except (EdgeAnnError, OSError) as exc:
        print(f"edge-ann {args.command}: {exc}", file=sys.stderr)
        return 1
    logger.debug(f"=== {args.command} DONE ===")
    return status


if __name__ == "__main__":
    sys.exit(main())
