"""Vertex programs shipping with the engine, keyed by CLI name."""

from .bfs import Bfs
from .coloring import Coloring
from .community import Community
from .kcore import KCore
from .mis import Mis
from .pagerank import PageRank
from .randomwalk import RandomWalk

APPS = {
    "bfs": Bfs,
    "pagerank": PageRank,
    "community": Community,
    "coloring": Coloring,
    "mis": Mis,
    "randomwalk": RandomWalk,
    "kcore": KCore,
}


def make_program(name: str, **kwargs):
    if name not in APPS:
        raise KeyError(f"unknown app {name!r}; choose from {sorted(APPS)}")
    return APPS[name](**kwargs)

__all__ = ["APPS", "make_program", "Bfs", "PageRank", "Community", "Coloring", "Mis", "RandomWalk", "KCore"]
