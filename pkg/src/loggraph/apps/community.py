"""Community detection by most-frequent label propagation.

Every vertex remembers the latest label heard from each in-neighbor and
adopts the most frequent one (smallest label id on ties). Labels are
broadcast only when they change, after the seeding broadcast in the first
superstep. Messages must stay individual: merging them would destroy the
per-neighbor table.
"""

from __future__ import annotations

import numpy as np

from ..engine import VertexProgram


def upsert(table: np.ndarray, used: int, src: int, value: int) -> int:
    """Latest-wins (src -> value) update into a fixed-capacity table."""
    for i in range(used):
        if table["src"][i] == src:
            table[i] = (src, value)
            return used
    if used < len(table):
        table[used] = (src, value)
        used += 1
    return used


class Community(VertexProgram):
    name = "community"
    payload_fields = [("label", "<u4")]
    state_dtype = np.dtype([("label", "<u4"), ("used", "<u4")])
    aux_entry_dtype = np.dtype([("src", "<u4"), ("label", "<u4")])

    def init_all(self, num_vertices, in_degrees):
        states = np.zeros(num_vertices, self.state_dtype)
        states["label"] = np.arange(num_vertices, dtype=np.uint32)
        return states, np.ones(num_vertices, bool), []

    def process(self, ctx, v, state, adj, inbox):
        table = ctx.table
        used = int(state["used"])
        for i in range(len(inbox)):
            used = upsert(table, used, int(inbox["src"][i]), int(inbox["label"][i]))
        state["used"] = used
        old = int(state["label"])
        if ctx.superstep == 0:
            for w in adj.neighbors:
                ctx.send(int(w), old)
            return
        if used == 0:
            return
        labels, counts = np.unique(table["label"][:used], return_counts=True)
        new = int(labels[int(counts.argmax())])  # unique is ascending: ties pick smallest
        if new != old:
            state["label"] = new
            for w in adj.neighbors:
                ctx.send(int(w), new)

    def summary(self, states):
        return {"communities": int(len(np.unique(states["label"])))}
