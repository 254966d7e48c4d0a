"""Denoising masks over AMR graphs.

Two strategies, both driven only by an explicit seed (see :mod:`amrgec.rng`):

``node_edge``
    For each node in node order, then each edge in edge order, draw
    ``u = rng.random()``; the concept or role becomes ``MASK`` when
    ``u < rate``.
``subgraph``
    Draw ``rng.randbelow(k)`` over the ``k`` non-root nodes in node order to
    pick a start node. Collect it and its descendants breadth-first along
    edge direction (children in edge order, the root never included) up to
    ``max_subgraph_size`` nodes, replace them with one ``MASK`` node, and
    re-attach every edge that crossed the boundary to that node.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .amr import AmrGraph
from .rng import SplitMix64

MASK = "MASK"
STRATEGIES = ("node_edge", "subgraph")


class InvalidRate(ValueError):
    pass


class GraphTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class MaskSpec:
    strategy: str = "node_edge"
    rate: float = 0.15
    max_subgraph_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown mask strategy {self.strategy!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise InvalidRate(f"mask rate {self.rate} outside [0, 1]")
        if self.max_subgraph_size < 1:
            raise ValueError("max_subgraph_size must be at least 1")

    def apply(self, g: AmrGraph, seed: int | None = None) -> AmrGraph:
        seed = self.seed if seed is None else seed
        if self.strategy == "node_edge":
            return mask_node_edge(g, self.rate, seed)
        return mask_subgraph(g, self.max_subgraph_size, seed)


def mask_node_edge(g: AmrGraph, rate: float, seed: int) -> AmrGraph:
    if not 0.0 <= rate <= 1.0:
        raise InvalidRate(f"mask rate {rate} outside [0, 1]")
    rng = SplitMix64(seed)
    nodes = [(v, MASK if rng.random() < rate else c) for v, c in g.nodes]
    edges = [(s, MASK if rng.random() < rate else r, t) for s, r, t in g.edges]
    return g.replace(nodes=nodes, edges=edges)


def _fresh_variable(taken: set[str]) -> str:
    if "m" not in taken:
        return "m"
    i = 2
    while f"m{i}" in taken:
        i += 1
    return f"m{i}"


def select_subgraph(g: AmrGraph, max_subgraph_size: int, rng: SplitMix64) -> list[str]:
    candidates = [v for v in g.variables if v != g.root]
    start = candidates[rng.randbelow(len(candidates))]
    children = {v: [] for v in g.variables}
    for s, _, t in g.edges:
        children[s].append(t)
    chosen = [start]
    seen = {start}
    queue = deque([start])
    while queue and len(chosen) < max_subgraph_size:
        v = queue.popleft()
        for u in children[v]:
            if u in seen or u == g.root:
                continue
            seen.add(u)
            chosen.append(u)
            queue.append(u)
            if len(chosen) == max_subgraph_size:
                break
    return chosen


def mask_subgraph(g: AmrGraph, max_subgraph_size: int, seed: int) -> AmrGraph:
    if len(g.nodes) < 2:
        raise GraphTooSmall("subgraph masking needs at least two nodes")
    if max_subgraph_size < 1:
        raise ValueError("max_subgraph_size must be at least 1")
    removed = set(select_subgraph(g, max_subgraph_size, SplitMix64(seed)))
    mask_var = _fresh_variable(set(g.variables) | {c for _, _, c in g.attributes})

    nodes = [(v, c) for v, c in g.nodes if v not in removed]
    nodes.append((mask_var, MASK))
    edges = []
    for s, r, t in g.edges:
        s_in, t_in = s in removed, t in removed
        if s_in and t_in:
            continue
        edge = (mask_var if s_in else s, r, mask_var if t_in else t)
        if (s_in or t_in) and edge in edges:
            continue
        edges.append(edge)
    attributes = [a for a in g.attributes if a[0] not in removed]
    return g.replace(nodes=nodes, edges=edges, attributes=attributes)
