"""Seeded random walks from strided source vertices.

Walker messages carry the remaining step budget; a visited vertex bumps its
counter, picks a uniform neighbor from a deterministic hash of
(seed, superstep, vertex, walker index) and forwards the walker.
"""

from __future__ import annotations

import numpy as np

from ..engine import VertexProgram
from ..seeds import pick_index


def default_stride(num_vertices: int) -> int:
    return max(1, num_vertices // 100)


class RandomWalk(VertexProgram):
    name = "randomwalk"
    payload_fields = [("remaining", "<u4")]
    state_dtype = np.dtype([("visits", "<u8")])

    def __init__(self, steps: int = 10, stride: int | None = None, seed: int = 0):
        self.steps = steps
        self.stride = stride
        self.seed = seed

    def init_all(self, num_vertices, in_degrees):
        stride = self.stride or default_stride(num_vertices)
        self._stride = stride
        states = np.zeros(num_vertices, self.state_dtype)
        active = np.zeros(num_vertices, bool)
        active[::stride] = True
        return states, active, []

    def _hop(self, ctx, v, adj, j, remaining):
        if remaining <= 0 or len(adj) == 0:
            return
        w = int(adj.neighbors[pick_index(self.seed, len(adj), ctx.superstep, v, j)])
        ctx.send(w, remaining - 1)

    def process(self, ctx, v, state, adj, inbox):
        if ctx.superstep == 0 and len(inbox) == 0:
            state["visits"] = int(state["visits"]) + 1
            self._hop(ctx, v, adj, 0, self.steps)
            return
        for j in range(len(inbox)):
            state["visits"] = int(state["visits"]) + 1
            self._hop(ctx, v, adj, j, int(inbox["remaining"][j]))

    def summary(self, states):
        return {
            "total_visits": int(states["visits"].sum()),
            "max_visits": int(states["visits"].max()),
        }
