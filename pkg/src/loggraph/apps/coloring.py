"""Greedy graph coloring with randomized conflict resolution.

A vertex tracks neighbor colors as they arrive. On a conflict it flips a
seeded per-superstep coin: heads, it moves to a seeded pick from the colors
in [0, degree] not known to be taken and announces the change to everyone;
tails, it re-sends its color to the conflicting neighbors so the conflict
stays live. Simultaneous adjacent moves rarely re-collide, so activity
collapses geometrically and the fixpoint is a proper coloring.
"""

from __future__ import annotations

import numpy as np

from ..engine import VertexProgram
from ..seeds import pick_index, unit_float
from .community import upsert


class Coloring(VertexProgram):
    name = "coloring"
    payload_fields = [("color", "<u4")]
    state_dtype = np.dtype([("color", "<u4"), ("used", "<u4")])
    aux_entry_dtype = np.dtype([("src", "<u4"), ("color", "<u4")])

    def __init__(self, seed: int = 0, move_probability: float = 0.5):
        self.seed = seed
        self.move_probability = move_probability

    def init_all(self, num_vertices, in_degrees):
        states = np.zeros(num_vertices, self.state_dtype)
        return states, np.ones(num_vertices, bool), []

    def process(self, ctx, v, state, adj, inbox):
        table = ctx.table
        used = int(state["used"])
        for i in range(len(inbox)):
            used = upsert(table, used, int(inbox["src"][i]), int(inbox["color"][i]))
        state["used"] = used
        mine = int(state["color"])
        if ctx.superstep == 0:
            for w in adj.neighbors:
                ctx.send(int(w), mine)
            return
        conflicted = [
            int(table["src"][i])
            for i in range(used)
            if int(table["color"][i]) == mine and int(table["src"][i]) != v
        ]
        if not conflicted:
            return
        if unit_float(self.seed, ctx.superstep, v) < self.move_probability:
            taken = {int(table["color"][i]) for i in range(used)}
            avail = [c for c in range(len(adj) + 1) if c not in taken]
            new = avail[pick_index(self.seed, len(avail), ctx.superstep, v, 1)]
            state["color"] = new
            for w in adj.neighbors:
                ctx.send(int(w), new)
        else:
            for u in conflicted:
                ctx.send(u, mine)

    def summary(self, states):
        return {"colors": int(len(np.unique(states["color"])))}
