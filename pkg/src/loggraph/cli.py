"""Command-line harness: convert, run, compare, stats.

Reports are JSON with sorted keys so a run with the same config, seed and
dataset reproduces byte-identically; per-superstep series can also be dumped
as CSV for plotting. Wall-clock timings stay out of the JSON report for that
reason and live in the CSV only.
"""

from __future__ import annotations

import argparse
import csv as csvmod
import json
import os
import sys
import tempfile

import numpy as np

from .apps import APPS, make_program
from .csr import GraphDir
from .engine import EngineConfig, run_app
from .errors import ConfigError
from . import ingest, shards


def _fail(exc: Exception) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    return 2


def _engine_config(args, meta) -> EngineConfig:
    return EngineConfig(
        memory_budget=args.memory_budget,
        page_size=meta.page_size,
        sort_frac=args.sort_frac,
        multilog_frac=args.multilog_frac,
        edgelog_frac=args.edgelog_frac,
        max_supersteps=args.max_supersteps,
        edge_log=args.edge_log,
        presort=args.presort,
        parallel=args.parallel,
        seed=args.seed,
        merge_threshold=args.merge_threshold,
        record_trace=args.trace is not None,
    )


def _app_kwargs(args) -> dict:
    name = args.app
    kw = {}
    if name == "bfs":
        kw["source"] = args.source
    elif name == "pagerank":
        kw["alpha"] = args.alpha
        kw["threshold"] = args.threshold
        kw["use_combine"] = not args.no_combine
    elif name == "kcore":
        kw["k"] = args.k
    elif name == "mis":
        kw["seed"] = args.seed
    elif name == "randomwalk":
        kw["steps"] = args.steps
        kw["stride"] = args.stride
        kw["seed"] = args.seed
    return kw


def build_report(result, cfg: EngineConfig, app_name: str, app_kwargs: dict, meta) -> dict:
    reads_total: dict = {}
    writes_total: dict = {}
    for st in result.stats:
        for c, v in st.reads.items():
            reads_total[c] = reads_total.get(c, 0) + v
        for c, v in st.writes.items():
            writes_total[c] = writes_total.get(c, 0) + v
    return {
        "app": app_name,
        "app_args": dict(sorted(app_kwargs.items())),
        "engine": cfg.to_dict(),
        "dataset_hash": meta.dataset_hash,
        "graph": {
            "num_vertices": meta.num_vertices,
            "num_edges": meta.num_edges,
            "num_intervals": meta.num_intervals,
        },
        "supersteps": [st.to_dict() for st in result.stats],
        "totals": {
            "supersteps": len(result.stats),
            "messages_sent": sum(st.messages_sent for st in result.stats),
            "reads": dict(sorted(reads_total.items())),
            "writes": dict(sorted(writes_total.items())),
        },
        "converged": len(result.stats) < cfg.max_supersteps,
        "structural_warnings": result.structural_warnings,
        "summary": result.summary(),
    }


def cmd_convert(args) -> int:
    graph = ingest.convert(
        args.input,
        args.out,
        sort_budget=args.budget,
        page_size=args.page_size,
        record_size=args.record_size,
        undirected=args.undirected,
    )
    meta = graph.meta
    print(json.dumps({"out": args.out, **meta.to_dict()}, sort_keys=True, indent=2))
    return 0


def cmd_run(args) -> int:
    graph = GraphDir(args.graph)
    cfg = _engine_config(args, graph.meta)
    kwargs = _app_kwargs(args)
    program = make_program(args.app, **kwargs)
    tmp = None
    workdir = args.workdir
    if workdir is None:
        tmp = tempfile.TemporaryDirectory(prefix="loggraph_run_")
        workdir = tmp.name
    try:
        result = run_app(graph, program, cfg, workdir)
    finally:
        if tmp is not None:
            tmp.cleanup()
    report = build_report(result, cfg, args.app, kwargs, graph.meta)
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.report:
        with open(args.report, "w") as f:
            f.write(text + "\n")
    else:
        print(text)
    if args.csv:
        _write_csv(args.csv, result.stats)
    if args.trace:
        arrays = {f"s{i}": a for i, a in enumerate(result.trace)}
        np.savez(args.trace, **arrays)
    return 0


def _write_csv(path: str, stats) -> None:
    classes = ("csr", "log", "edgelog", "state")
    with open(path, "w", newline="") as f:
        w = csvmod.writer(f)
        w.writerow(
            ["superstep", "active_vertices", "messages_sent"]
            + [f"reads_{c}" for c in classes]
            + [f"writes_{c}" for c in classes]
            + ["runtime_s"]
        )
        for st in stats:
            w.writerow(
                [st.superstep, st.active_vertices, st.messages_sent]
                + [st.reads.get(c, 0) for c in classes]
                + [st.writes.get(c, 0) for c in classes]
                + [f"{st.runtime:.6f}"]
            )


ENGINE_READ_CLASSES = ("csr", "log", "edgelog")


def cmd_compare(args) -> int:
    graph = GraphDir(args.graph)
    with open(args.report) as f:
        report = json.load(f)
    if report.get("dataset_hash") != graph.meta.dataset_hash:
        raise ConfigError("report was produced from a different dataset (hash mismatch)")
    trace = np.load(args.trace)
    src, dst = graph.all_edges()
    tmp = tempfile.TemporaryDirectory(prefix="loggraph_shards_")
    shard_set = shards.build_shards(
        src, dst, graph.meta.num_vertices, args.num_shards, graph.registry, tmp.name
    )
    n = graph.meta.num_vertices
    rows = []
    for st in report["supersteps"]:
        s = st["superstep"]
        key = f"s{s}"
        if key not in trace:
            continue
        active = trace[key]
        engine_pages = sum(st["reads"].get(c, 0) for c in ENGINE_READ_CLASSES)
        if len(active) == 0 or engine_pages == 0:
            continue  # 0/0 row: nothing moved on either side
        shard_pages = shards.superstep_page_cost(shard_set, active)
        rows.append(
            {
                "superstep": s,
                "active_vertices": int(len(active)),
                "active_fraction": len(active) / n,
                "shard_pages": int(shard_pages),
                "engine_pages": int(engine_pages),
                "ratio": shard_pages / engine_pages,
            }
        )
    out = {
        "num_shards": shard_set.num_shards,
        "pages_per_shard": shard_set.page_counts,
        "rows": rows,
    }
    tmp.cleanup()
    text = json.dumps(out, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_stats(args) -> int:
    graph = GraphDir(args.graph)
    indeg = graph.in_degrees()
    pages = {"rowptr": 0, "colidx": 0, "val": 0}
    outdeg = np.zeros(graph.meta.num_vertices, np.int64)
    for part in graph.partitions:
        pages["rowptr"] += part.rowptr.num_pages
        pages["colidx"] += part.colidx.num_pages
        if part.val is not None:
            pages["val"] += part.val.num_pages
        rp = part.full_rowptr()
        outdeg[part.lo : part.hi] = np.diff(rp)
    info = {
        "meta": graph.meta.to_dict(),
        "pages": pages,
        "out_degree": {
            "min": int(outdeg.min()) if len(outdeg) else 0,
            "max": int(outdeg.max()) if len(outdeg) else 0,
            "mean": float(outdeg.mean()) if len(outdeg) else 0.0,
        },
        "in_degree": {
            "min": int(indeg.min()) if len(indeg) else 0,
            "max": int(indeg.max()) if len(indeg) else 0,
            "mean": float(indeg.mean()) if len(indeg) else 0.0,
        },
    }
    print(json.dumps(info, sort_keys=True, indent=2))
    return 0


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--memory-budget", dest="memory_budget", type=int, default=1 << 30)
    p.add_argument("--sort-frac", dest="sort_frac", type=float, default=0.75)
    p.add_argument("--multilog-frac", dest="multilog_frac", type=float, default=0.05)
    p.add_argument("--edgelog-frac", dest="edgelog_frac", type=float, default=0.05)
    p.add_argument("--max-supersteps", dest="max_supersteps", type=int, default=15)
    p.add_argument("--edge-log", dest="edge_log", action="store_true")
    p.add_argument("--presort", action="store_true")
    p.add_argument("--parallel", type=int, default=0, help="worker threads (0 = deterministic)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--merge-threshold", dest="merge_threshold", type=int, default=4096)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loggraph")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("convert", help="edge-list text -> partitioned CSR directory")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--budget", type=int, default=1 << 30, help="sort budget for interval sizing")
    p.add_argument("--page-size", dest="page_size", type=int, default=16384)
    p.add_argument("--record-size", dest="record_size", type=int, default=16)
    p.add_argument("--undirected", action="store_true", help="materialize both edge directions")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("run", help="run a vertex program")
    p.add_argument("--graph", required=True)
    p.add_argument("--app", required=True, choices=sorted(APPS))
    p.add_argument("--source", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.85)
    p.add_argument("--threshold", type=float, default=0.4)
    p.add_argument("--no-combine", dest="no_combine", action="store_true")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--report", default=None, help="write the JSON report here (default stdout)")
    p.add_argument("--csv", default=None, help="per-superstep stats CSV")
    p.add_argument("--trace", default=None, help="save per-superstep active sets (.npz)")
    p.add_argument("--workdir", default=None, help="run scratch dir (default: temporary)")
    _add_engine_flags(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("compare", help="replay a run's active sets against the shard baseline")
    p.add_argument("--graph", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--num-shards", dest="num_shards", type=int, default=8)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("stats", help="describe a converted graph directory")
    p.add_argument("--graph", required=True)
    p.set_defaults(fn=cmd_stats)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # structured errors, nonzero exit
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
