"""Breadth-first search: levels are hop counts from the source."""

from __future__ import annotations

import numpy as np

from ..engine import VertexProgram
from ..sortgroup import CombineOp

INF_LEVEL = 0xFFFFFFFF


def _fold(acc, rec):
    if rec["level"] < acc["level"]:
        acc["level"] = rec["level"]


def _reduce(records, starts, out):
    out["level"] = np.minimum.reduceat(records["level"], starts)


class Bfs(VertexProgram):
    name = "bfs"
    payload_fields = [("level", "<u4")]
    state_dtype = np.dtype([("level", "<u4")])
    combine = CombineOp(_fold, _reduce)

    def __init__(self, source: int = 0):
        self.source = source

    def init_all(self, num_vertices, in_degrees):
        if not (0 <= self.source < num_vertices):
            raise ValueError(f"source {self.source} outside [0, {num_vertices})")
        states = np.full(num_vertices, INF_LEVEL, self.state_dtype)
        active = np.zeros(num_vertices, bool)
        # the source levels itself through an initial self-message
        return states, active, [(self.source, (0,))]

    def process(self, ctx, v, state, adj, inbox):
        if len(inbox) == 0:
            return
        new = int(inbox["level"].min())
        if new < int(state["level"]):
            state["level"] = new
            for w in adj.neighbors:
                ctx.send(int(w), new + 1)

    def summary(self, states):
        levels = states["level"]
        reached = levels[levels != INF_LEVEL]
        hist = {}
        for lvl, cnt in zip(*np.unique(reached, return_counts=True)):
            hist[str(int(lvl))] = int(cnt)
        return {"levels": hist, "unreached": int((levels == INF_LEVEL).sum())}
