"""Out-of-core vertex-centric graph engine with per-interval update logs."""

from .csr import GraphDir, GraphMeta, AdjacencyView, load_adjacency, partition_vertices
from .engine import Engine, EngineConfig, RunResult, VertexProgram, run_app
from .ingest import convert, convert_arrays
from .multilog import MultiLog, RecordFormat
from .pager import Page, PageStore, StoreRegistry
from .sortgroup import CombineOp, SortedLog, plan_fusion

__all__ = [
    "AdjacencyView",
    "CombineOp",
    "Engine",
    "EngineConfig",
    "GraphDir",
    "GraphMeta",
    "MultiLog",
    "Page",
    "PageStore",
    "RecordFormat",
    "RunResult",
    "SortedLog",
    "StoreRegistry",
    "VertexProgram",
    "convert",
    "convert_arrays",
    "load_adjacency",
    "partition_vertices",
    "plan_fusion",
    "run_app",
]

__version__ = "0.1.0"
