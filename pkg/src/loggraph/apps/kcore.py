"""K-core pruning by structural deletion.

A vertex whose live degree drops below K removes itself and its out-edges,
then notifies every remaining neighbor; notified vertices delete their side
of the edge and re-check. Deletions are buffered structural updates, so the
adjacency views already reflect earlier rounds.
"""

from __future__ import annotations

import numpy as np

from ..engine import VertexProgram


class KCore(VertexProgram):
    name = "kcore"
    payload_fields = []  # a notification carries only its src
    state_dtype = np.dtype([("alive", "u1")])

    def __init__(self, k: int = 2):
        self.k = k

    def init_all(self, num_vertices, in_degrees):
        states = np.ones(num_vertices, self.state_dtype)
        return states, np.ones(num_vertices, bool), []

    def process(self, ctx, v, state, adj, inbox):
        if int(state["alive"]) == 0:
            return
        dead = set()
        removed = 0
        for i in range(len(inbox)):
            src = int(inbox["src"][i])
            ctx.delete_edge(v, src)  # one copy per notification
            dead.add(src)
            removed += 1
        live = len(adj) - removed
        if live < self.k:
            state["alive"] = 0
            ctx.delete_vertex()
            for w in adj.neighbors:
                w = int(w)
                if w not in dead:
                    ctx.send(w)

    def summary(self, states):
        return {"survivors": int((states["alive"] == 1).sum())}
