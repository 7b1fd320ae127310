"""Edge-list ingestion: SNAP-style text to a converted graph directory."""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from . import csr
from .errors import IngestError
from .pager import StoreRegistry


def parse_edge_list(path: str):
    """Parse whitespace-separated `src dst [weight]` lines, `#` comments.

    Returns (src, dst, weights-or-None) as numpy arrays of the original ids.
    """
    srcs, dsts, ws = [], [], []
    saw_weight = False
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise IngestError(f"expected 2 or 3 columns, got {len(parts)}", lineno)
            try:
                srcs.append(int(parts[0]))
                dsts.append(int(parts[1]))
            except ValueError:
                raise IngestError(f"non-numeric vertex id in {parts[:2]}", lineno) from None
            if len(parts) == 3:
                try:
                    ws.append(float(parts[2]))
                except ValueError:
                    raise IngestError(f"non-numeric weight {parts[2]!r}", lineno) from None
                saw_weight = True
            elif saw_weight:
                raise IngestError("missing weight column", lineno)
    src = np.array(srcs, np.int64)
    dst = np.array(dsts, np.int64)
    w = np.array(ws, np.float32) if saw_weight else None
    return src, dst, w


def relabel_dense(src: np.ndarray, dst: np.ndarray):
    """Map arbitrary ids to dense 0..n-1 (ascending by original id)."""
    ids = np.unique(np.concatenate([src, dst])) if len(src) else np.zeros(0, np.int64)
    return np.searchsorted(ids, src), np.searchsorted(ids, dst), ids


def convert(
    input_path: str,
    out_dir: str,
    sort_budget: int,
    page_size: int,
    record_size: int = 16,
    undirected: bool = False,
    registry: StoreRegistry | None = None,
) -> csr.GraphDir:
    """Build a partitioned CSR graph directory from an edge-list file.

    Writes part files, meta.json, indeg.bin and mapping.tsv (dense id ->
    original id). With undirected=True every edge is materialized in both
    directions (self-loops stay single).
    """
    src, dst, w = parse_edge_list(input_path)
    src, dst, original_ids = relabel_dense(src, dst)
    if undirected:
        src, dst, w = _both_directions(src, dst, w)
    n = len(original_ids)
    in_deg = np.bincount(dst, minlength=n).astype(np.int64) if len(dst) else np.zeros(n, np.int64)
    bounds, indeg_sums = csr.partition_vertices(in_deg, record_size, sort_budget)

    with open(input_path, "rb") as f:
        digest = hashlib.sha256(f.read()).hexdigest()
    value_width = 4 if w is not None else 0
    meta = csr.GraphMeta(
        num_vertices=n,
        num_edges=len(src),
        interval_bounds=bounds,
        interval_indeg=indeg_sums,
        page_size=page_size,
        value_width=value_width,
        record_size=record_size,
        dataset_hash=digest,
    )
    os.makedirs(out_dir, exist_ok=True)
    registry = registry or StoreRegistry(page_size)
    values = w.view(np.dtype("V4")) if w is not None else None
    csr.build_partitions(src, dst, values, meta, registry, out_dir)
    with open(os.path.join(out_dir, "meta.json"), "w") as f:
        json.dump(meta.to_dict(), f, sort_keys=True, indent=1)
    in_deg.astype(np.uint32).tofile(os.path.join(out_dir, "indeg.bin"))
    with open(os.path.join(out_dir, "mapping.tsv"), "w") as f:
        for dense, orig in enumerate(original_ids):
            f.write(f"{dense}\t{int(orig)}\n")
    return csr.GraphDir(out_dir, registry)


def _both_directions(src, dst, w):
    keep = src != dst
    s2 = np.concatenate([src, dst[keep]])
    d2 = np.concatenate([dst, src[keep]])
    w2 = np.concatenate([w, w[keep]]) if w is not None else None
    return s2, d2, w2


def convert_arrays(
    src: np.ndarray,
    dst: np.ndarray,
    num_vertices: int,
    out_dir: str,
    sort_budget: int,
    page_size: int,
    record_size: int = 16,
    registry: StoreRegistry | None = None,
    dataset_hash: str = "",
) -> csr.GraphDir:
    """Convert in-memory dense-id edge arrays (test and library entry point)."""
    src = np.asarray(src, np.int64)
    dst = np.asarray(dst, np.int64)
    in_deg = np.bincount(dst, minlength=num_vertices).astype(np.int64)
    bounds, indeg_sums = csr.partition_vertices(in_deg, record_size, sort_budget)
    meta = csr.GraphMeta(
        num_vertices=num_vertices,
        num_edges=len(src),
        interval_bounds=bounds,
        interval_indeg=indeg_sums,
        page_size=page_size,
        value_width=0,
        record_size=record_size,
        dataset_hash=dataset_hash or f"inline-{len(src)}-{num_vertices}",
    )
    os.makedirs(out_dir, exist_ok=True)
    registry = registry or StoreRegistry(page_size)
    csr.build_partitions(src, dst, None, meta, registry, out_dir)
    with open(os.path.join(out_dir, "meta.json"), "w") as f:
        json.dump(meta.to_dict(), f, sort_keys=True, indent=1)
    in_deg.astype(np.uint32).tofile(os.path.join(out_dir, "indeg.bin"))
    return csr.GraphDir(out_dir, registry)
