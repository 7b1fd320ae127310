"""Maximal independent set, Luby style.

Undecided vertices exchange per-round hashed priorities; a vertex whose
(priority, id) beats everything it heard joins the set and announces it,
neighbors of a member drop out and announce that, and a vertex with no
undecided neighbors left joins by default. Announcements must be delivered
individually, so there is no combine.
"""

from __future__ import annotations

import numpy as np

from ..engine import VertexProgram
from ..seeds import unit_float

UNDECIDED, IN_SET, OUT = 0, 1, 2
PRIO, IN_NOTE, OUT_NOTE = 0, 1, 2


class Mis(VertexProgram):
    name = "mis"
    payload_fields = [("kind", "u1"), ("prio", "<f8")]
    state_dtype = np.dtype([("status", "u1"), ("undecided", "<i8")])

    def __init__(self, seed: int = 0):
        self.seed = seed

    def init_all(self, num_vertices, in_degrees):
        states = np.zeros(num_vertices, self.state_dtype)
        states["undecided"] = -1  # degree unknown until the first run
        return states, np.ones(num_vertices, bool), []

    def _broadcast(self, ctx, adj, kind, prio=0.0):
        for w in adj.neighbors:
            ctx.send(int(w), kind, prio)

    def process(self, ctx, v, state, adj, inbox):
        if int(state["status"]) != UNDECIDED:
            return
        if int(state["undecided"]) < 0:
            state["undecided"] = len(adj)
        in_note = False
        decided = 0
        best = None
        for i in range(len(inbox)):
            kind = int(inbox["kind"][i])
            if kind == PRIO:
                cand = (float(inbox["prio"][i]), int(inbox["src"][i]))
                if best is None or cand > best:
                    best = cand
            else:
                decided += 1
                if kind == IN_NOTE:
                    in_note = True
        state["undecided"] = int(state["undecided"]) - decided
        if in_note:
            state["status"] = OUT
            self._broadcast(ctx, adj, OUT_NOTE)
            return
        if int(state["undecided"]) <= 0:
            state["status"] = IN_SET
            return
        s = ctx.superstep
        if s > 0 and best is not None:
            mine = (unit_float(self.seed, s - 1, v), v)
            if mine > best:
                state["status"] = IN_SET
                self._broadcast(ctx, adj, IN_NOTE)
                return
        self._broadcast(ctx, adj, PRIO, unit_float(self.seed, s, v))

    def summary(self, states):
        return {"set_size": int((states["status"] == IN_SET).sum())}
