"""Superstep driver.

One superstep: plan log fusion from the sealed per-interval message counts,
load and sort each fused log, extract the active vertices, fetch their state
and adjacency (from the edge log when possible), run the vertex program,
route its sends through the multi-log, then seal the next superstep's logs,
merge batched structural updates past the threshold and record the activity
bit vector. Execution is deterministic single-threaded by default; an
optional thread pool processes vertices of one batch concurrently.
"""

from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import csr as csrmod
from . import sortgroup
from .csr import AdjacencyView, GraphDir
from .edgelog import ActivityHistory, EdgeLog, classify_inefficient
from .errors import ConfigError
from .multilog import MultiLog, RecordFormat
from .pager import DEFAULT_PAGE_SIZE
from .sortgroup import CombineOp
from .state import VertexStateStore


@dataclass
class EngineConfig:
    memory_budget: int = 1 << 30
    page_size: int = DEFAULT_PAGE_SIZE
    sort_frac: float = 0.75
    multilog_frac: float = 0.05
    edgelog_frac: float = 0.05
    max_supersteps: int = 15
    edge_log: bool = False
    presort: bool = False
    parallel: int = 0
    seed: int = 0
    merge_threshold: int = 4096
    history_depth: int = 1
    inefficiency_threshold: float = 0.10
    record_trace: bool = False

    @property
    def sort_budget(self) -> int:
        return int(self.memory_budget * self.sort_frac)

    @property
    def multilog_budget(self) -> int:
        return int(self.memory_budget * self.multilog_frac)

    @property
    def edgelog_budget(self) -> int:
        return int(self.memory_budget * self.edgelog_frac)

    def to_dict(self) -> dict:
        return {
            "memory_budget": self.memory_budget,
            "page_size": self.page_size,
            "sort_frac": self.sort_frac,
            "multilog_frac": self.multilog_frac,
            "edgelog_frac": self.edgelog_frac,
            "max_supersteps": self.max_supersteps,
            "edge_log": self.edge_log,
            "presort": self.presort,
            "parallel": self.parallel,
            "seed": self.seed,
            "merge_threshold": self.merge_threshold,
            "history_depth": self.history_depth,
            "inefficiency_threshold": self.inefficiency_threshold,
        }


class VertexProgram:
    """Contract for application vertex programs.

    Subclasses define the wire payload, the state record, an optional
    combine operator and optional per-in-neighbor table entries, plus:

      init_all(num_vertices, in_degrees) -> (states, active_bits, init_msgs)
      process(ctx, v, state, adj, inbox)

    process must not keep ctx beyond the call. Messages are the only way a
    vertex runs again next superstep; deactivation is the default.
    """

    name = "program"
    payload_fields: list[tuple[str, str]] | None = None
    state_dtype: np.dtype = np.dtype([("value", "<u4")])
    aux_entry_dtype: np.dtype | None = None
    combine: CombineOp | None = None
    needs_values = False

    def init_all(self, num_vertices: int, in_degrees: np.ndarray):
        raise NotImplementedError

    def process(self, ctx, v: int, state, adj: AdjacencyView, inbox: np.ndarray) -> None:
        raise NotImplementedError

    def summary(self, states: np.ndarray) -> dict:
        return {}


@dataclass
class SuperstepStats:
    superstep: int
    active_vertices: int
    messages_sent: int
    reads: dict
    writes: dict
    runtime: float
    prediction_accuracy: float | None = None
    sort_resident_peak: int = 0
    multilog_resident_peak: int = 0
    edgelog_bytes: int = 0
    edgelog_served: int = 0
    edgelog_logged: int = 0
    edgelog_read_peak: int = 0
    csr_pages_accessed: int = 0
    csr_pages_inefficient: int = 0

    def to_dict(self) -> dict:
        return {
            "superstep": self.superstep,
            "active_vertices": self.active_vertices,
            "messages_sent": self.messages_sent,
            "reads": dict(sorted(self.reads.items())),
            "writes": dict(sorted(self.writes.items())),
            "prediction_accuracy": self.prediction_accuracy,
            "sort_resident_peak": self.sort_resident_peak,
            "multilog_resident_peak": self.multilog_resident_peak,
            "edgelog_bytes": self.edgelog_bytes,
            "edgelog_served": self.edgelog_served,
            "edgelog_logged": self.edgelog_logged,
            "edgelog_read_peak": self.edgelog_read_peak,
            "csr_pages_accessed": self.csr_pages_accessed,
            "csr_pages_inefficient": self.csr_pages_inefficient,
        }


@dataclass
class RunResult:
    states: np.ndarray
    stats: list[SuperstepStats]
    trace: list[np.ndarray] | None
    structural_warnings: int
    deleted: np.ndarray
    program: VertexProgram

    @property
    def num_supersteps(self) -> int:
        return len(self.stats)

    def summary(self) -> dict:
        return self.program.summary(self.states)


class Context:
    """Per-vertex API handed to process(); valid only during the call."""

    __slots__ = ("_engine", "superstep", "vertex", "table")

    def __init__(self, engine: "Engine"):
        self._engine = engine
        self.superstep = 0
        self.vertex = -1
        self.table = None

    def send(self, dest: int, *payload) -> None:
        self._engine._mlog.send(dest, self.vertex, *payload)

    def deactivate(self) -> None:
        """Accepted for program-model symmetry; deactivation is the default
        and an incoming message always reactivates."""

    def add_edge(self, src: int, dst: int, value=None) -> None:
        self._engine._buffer_op(("add_edge", src, dst) if value is None else ("add_edge", src, dst, value))

    def delete_edge(self, src: int, dst: int) -> None:
        self._engine._buffer_op(("del_edge", src, dst))

    def delete_vertex(self) -> None:
        self._engine._buffer_op(("del_vertex", self.vertex))
        self._engine.deleted[self.vertex] = True


class Engine:
    def __init__(self, graph: GraphDir, program: VertexProgram, config: EngineConfig, workdir: str):
        self.graph = graph
        self.meta = graph.meta
        self.program = program
        self.cfg = config
        self.workdir = workdir
        os.makedirs(workdir, exist_ok=True)
        if config.page_size != self.meta.page_size:
            raise ConfigError(
                f"engine page size {config.page_size} != converted graph page size {self.meta.page_size}"
            )
        self.fmt = RecordFormat(program.payload_fields)
        self.registry = graph.registry
        n = self.meta.num_vertices
        self.in_degrees = graph.in_degrees()
        self.deleted = np.zeros(n, bool)
        self.history = ActivityHistory(n, config.history_depth)
        self._pending: list[list[tuple]] = [[] for _ in range(self.meta.num_intervals)]
        self._pending_by_src: list[dict] = [{} for _ in range(self.meta.num_intervals)]
        self._ops_lock = threading.Lock()
        self._el_dirty = np.zeros(n, bool)
        self.structural_warnings = 0
        self._mlog: MultiLog | None = None
        self._edgelog: EdgeLog | None = None
        self._states: VertexStateStore | None = None

    # -- structural update buffering ----------------------------------------

    def _buffer_op(self, op: tuple) -> None:
        kind, u = op[0], op[1]
        if self.deleted[u] and kind != "del_vertex":
            self.structural_warnings += 1
            return
        k = self.meta.interval_of(u)
        with self._ops_lock:
            self._pending[k].append(op)
            ent = self._pending_by_src[k].setdefault(u, {"adds": [], "dels": [], "delv": False})
            if kind == "add_edge":
                ent["adds"].append(op[2])
            elif kind == "del_edge":
                ent["dels"].append(op[2])
            else:
                ent["delv"] = True
            self._el_dirty[u] = True

    def _overlay(self, view: AdjacencyView) -> AdjacencyView:
        """Most-current adjacency: base CSR plus pending batch semantics
        (insertions first, then one-copy deletions; vertex removal wins)."""
        k = self.meta.interval_of(view.vertex_id)
        ent = self._pending_by_src[k].get(view.vertex_id)
        if ent is None:
            return view
        if ent["delv"]:
            return AdjacencyView(view.vertex_id, view.neighbors[:0], None, view.colidx_pages, "overlay")
        nbrs = list(map(int, view.neighbors)) + list(ent["adds"])
        for d in ent["dels"]:
            try:
                nbrs.remove(d)
            except ValueError:
                pass
        nbrs.sort()
        return AdjacencyView(
            view.vertex_id, np.array(nbrs, csrmod.VID_DT), None, view.colidx_pages, "overlay"
        )

    def _merge_interval(self, k: int) -> None:
        ops = self._pending[k]
        if not ops:
            return
        self.structural_warnings += csrmod.merge_structural_updates(self.graph, k, ops)
        self._pending[k] = []
        self._pending_by_src[k] = {}

    # -- run loop -------------------------------------------------------------

    def run(self, on_superstep=None) -> RunResult:
        """Execute supersteps until quiescence or the cap.

        on_superstep(engine, stats) fires after each superstep; tests use it
        to snapshot state trajectories.
        """
        cfg = self.cfg
        n = self.meta.num_vertices
        states, active_bits, init_msgs = self.program.init_all(n, self.in_degrees)
        aux_caps = self.in_degrees if self.program.aux_entry_dtype is not None else None
        self._states = VertexStateStore.create(
            self.registry,
            os.path.join(self.workdir, "state"),
            self.meta.interval_bounds,
            states,
            self.program.aux_entry_dtype,
            aux_caps,
        )
        self._mlog = MultiLog(
            self.meta.interval_bounds,
            self.fmt,
            self.registry,
            os.path.join(self.workdir, "logs"),
            cfg.multilog_budget,
            presort=cfg.presort,
        )
        if cfg.edge_log:
            self._edgelog = EdgeLog(
                self.registry,
                os.path.join(self.workdir, "edgelog"),
                cfg.edgelog_budget,
                value_width=0,
            )
        for v, payload in init_msgs:
            self._mlog.send(int(v), int(v), *payload)
        manifest = self._mlog.seal()
        self._mlog.open_superstep(1)

        forced = np.nonzero(active_bits)[0].astype(np.int64)
        stats_list: list[SuperstepStats] = []
        trace: list[np.ndarray] | None = [] if cfg.record_trace else None
        step = 0
        while step < cfg.max_supersteps:
            if manifest.total == 0 and len(forced) == 0:
                break
            st, manifest = self._run_superstep(step, manifest, forced)
            forced = forced[:0]
            stats_list.append(st)
            if trace is not None:
                trace.append(self._last_active)
            if on_superstep is not None:
                on_superstep(self, st)
            step += 1
        for k in range(self.meta.num_intervals):
            self._merge_interval(k)
        final = self._states.read_all()
        return RunResult(final, stats_list, trace, self.structural_warnings, self.deleted.copy(), self.program)

    def _run_superstep(self, S: int, manifest, forced: np.ndarray):
        cfg = self.cfg
        t0 = time.perf_counter()
        base = self.registry.totals()
        base_sends = self._mlog.total_appends
        self._mlog.reset_peaks()
        self._sort_peak = 0
        if self._edgelog is not None:
            self._edgelog.begin_superstep(S)
        predicted = self.history.predicted_bits()
        self._ineff: set = set()
        self._page_usage: dict = {}

        plans = sortgroup.plan_fusion(manifest.counts, self.fmt.width, cfg.sort_budget)
        covered = {k for p in plans for k in p.intervals}
        if len(forced):
            for k in sorted(set(self.meta.interval_of(int(v)) for v in forced) - covered):
                plans.append(sortgroup.FusePlan([k], 0))
            plans.sort(key=lambda p: p.intervals[0])

        n = self.meta.num_vertices
        active_bits = np.zeros(n, bool)
        active_count = 0
        served_from_log = 0

        def track(nbytes):
            self._sort_peak = max(self._sort_peak, nbytes)

        for plan in plans:
            lo = self.meta.interval_bounds[plan.intervals[0]]
            hi = self.meta.interval_bounds[plan.intervals[-1] + 1]
            forced_here = forced[(forced >= lo) & (forced < hi)] if len(forced) else forced
            first_pass = True
            for slog in sortgroup.iter_plan_sorted(
                plan, manifest, self.fmt, self.meta.interval_bounds, self.in_degrees, track
            ):
                if self.program.combine is not None:
                    slog = sortgroup.apply_combine(slog, self.program.combine, self.fmt)
                act = sortgroup.extract_active(slog)
                if first_pass and len(forced_here):
                    act = np.union1d(act, forced_here)
                first_pass = False
                if len(act):
                    act = act[~self.deleted[act]]
                if len(act) == 0:
                    continue
                served_from_log += self._process_batch(S, act, slog, predicted)
                active_bits[act] = True
                active_count += len(act)
            if first_pass and len(forced_here):
                # plan had no records at all (forced-only interval)
                act = forced_here[~self.deleted[forced_here]]
                if len(act):
                    empty = sortgroup.sort_n_group(np.zeros(0, self.fmt.dtype))
                    served_from_log += self._process_batch(S, act, empty, predicted)
                    active_bits[act] = True
                    active_count += len(act)

        manifest_next = self._mlog.seal()
        self._mlog.open_superstep(S + 2)
        for handle in manifest.handles:
            if handle.store is not None:
                self.registry.drop(handle.store, "log", unlink=True)
        for k in range(self.meta.num_intervals):
            if len(self._pending[k]) >= cfg.merge_threshold:
                self._merge_interval(k)
        self.history.record(active_bits)
        self._last_active = np.nonzero(active_bits)[0]

        delta = self.registry.totals()
        reads = {c: delta[c][0] - base[c][0] for c in delta}
        writes = {c: delta[c][1] - base[c][1] for c in delta}
        if S > 0 and active_count:
            hits = int(np.count_nonzero(predicted & active_bits))
            accuracy = hits / active_count
        else:
            accuracy = None
        st = SuperstepStats(
            superstep=S,
            active_vertices=active_count,
            messages_sent=self._mlog.total_appends - base_sends,
            reads=reads,
            writes=writes,
            runtime=time.perf_counter() - t0,
            prediction_accuracy=accuracy,
            sort_resident_peak=self._sort_peak,
            multilog_resident_peak=self._mlog.post_evict_peak,
            edgelog_bytes=self._edgelog.bytes_logged if self._edgelog else 0,
            edgelog_served=served_from_log,
            edgelog_logged=self._edgelog.logged_vertices if self._edgelog else 0,
            edgelog_read_peak=self._edgelog.read_cache_peak if self._edgelog else 0,
            csr_pages_accessed=len(self._page_usage),
            csr_pages_inefficient=len(self._ineff),
        )
        return st, manifest_next

    # -- batch processing -----------------------------------------------------

    def _fetch_adjacency(self, act: np.ndarray):
        el = self._edgelog
        log_ids = []
        csr_ids = []
        if el is not None:
            for v in act:
                v = int(v)
                if not self._el_dirty[v] and el.indexed(v):
                    log_ids.append(v)
                else:
                    csr_ids.append(v)
        else:
            csr_ids = [int(v) for v in act]
        views, pstats = csrmod.load_adjacency(
            self.graph, np.array(csr_ids, np.int64), with_values=self.program.needs_values
        )
        for key, useful in pstats.items():
            self._page_usage[key] = self._page_usage.get(key, 0) + useful
            if classify_inefficient(self._page_usage[key], self.cfg.page_size, self.cfg.inefficiency_threshold):
                self._ineff.add(key)
            else:
                self._ineff.discard(key)
        for v in list(views):
            views[v] = self._overlay(views[v])
        if log_ids:
            views.update(el.fetch_batch(log_ids))
        return views, len(log_ids)

    def _process_batch(self, S: int, act: np.ndarray, slog, predicted: np.ndarray) -> int:
        views, served = self._fetch_adjacency(act)
        sl = self._states.checkout(act)
        aux = self._states.checkout_aux(act) if self.program.aux_entry_dtype is not None else None
        el = self._edgelog

        def work(span):
            ctx = Context(self)
            ctx.superstep = S
            for i in span:
                v = int(act[i])
                ctx.vertex = v
                ctx.table = aux.tables[i] if aux is not None else None
                inbox = slog.inbox(v)
                self.program.process(ctx, v, sl.rows[i], views[v], inbox)
                if el is not None:
                    with self._ops_lock:
                        el.maybe_log(views[v], bool(predicted[v]), self._ineff, bool(self._el_dirty[v]))

        if self.cfg.parallel > 1 and len(act) > 1:
            chunks = np.array_split(np.arange(len(act)), self.cfg.parallel)
            with ThreadPoolExecutor(max_workers=self.cfg.parallel) as pool:
                list(pool.map(work, [c for c in chunks if len(c)]))
        else:
            work(range(len(act)))
        sl.commit()
        if aux is not None:
            aux.commit()
        return served


def run_app(graph: GraphDir, program: VertexProgram, config: EngineConfig, workdir: str) -> RunResult:
    return Engine(graph, program, config, workdir).run()
