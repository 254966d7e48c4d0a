"""In-memory AMR graph.

Roles are stored without the leading colon (``ARG0``, ``polarity``).
Constants keep their surface form, so a quoted constant is stored with its
quotes (``"New York"``) and a bare one without (``-``, ``Sunday``).
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterator

Node = tuple[str, str]  # (variable, concept)
Edge = tuple[str, str, str]  # (source variable, role, target variable)
Attribute = tuple[str, str, str]  # (source variable, role, constant)

INSTANCE = "instance"


class InvalidGraph(ValueError):
    pass


@dataclass(frozen=True)
class AmrGraph:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    attributes: tuple[Attribute, ...]
    root: str
    metadata: dict[str, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(tuple(n) for n in self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        object.__setattr__(self, "attributes", tuple(tuple(a) for a in self.attributes))
        object.__setattr__(self, "metadata", dict(self.metadata))
        self.validate()

    def validate(self) -> None:
        variables = [v for v, _ in self.nodes]
        seen = set()
        for v in variables:
            if not v:
                raise InvalidGraph("empty variable name")
            if v in seen:
                raise InvalidGraph(f"variable {v!r} defined twice")
            seen.add(v)
        for v, concept in self.nodes:
            if not concept:
                raise InvalidGraph(f"node {v!r} has an empty concept")
        if self.root not in seen:
            raise InvalidGraph(f"root {self.root!r} is not a node")
        for s, role, t in self.edges:
            if not role:
                raise InvalidGraph(f"empty role on edge {s} -> {t}")
            if s not in seen or t not in seen:
                raise InvalidGraph(f"edge ({s}, {role}, {t}) references an unknown variable")
        for s, role, const in self.attributes:
            if not role:
                raise InvalidGraph(f"empty role on attribute of {s}")
            if s not in seen:
                raise InvalidGraph(f"attribute ({s}, {role}, {const}) on unknown variable")
            if not const:
                raise InvalidGraph(f"empty constant on attribute of {s}")
            if const in seen:
                raise InvalidGraph(f"constant {const!r} collides with a variable name")
        reached = self._reachable_undirected()
        if len(reached) != len(seen):
            missing = sorted(seen - reached)
            raise InvalidGraph(f"graph is disconnected; unreachable from root: {missing}")

    def _reachable_undirected(self) -> set[str]:
        adj = defaultdict(list)
        for s, _, t in self.edges:
            adj[s].append(t)
            adj[t].append(s)
        reached = {self.root}
        queue = deque([self.root])
        while queue:
            v = queue.popleft()
            for u in adj[v]:
                if u not in reached:
                    reached.add(u)
                    queue.append(u)
        return reached

    @property
    def variables(self) -> list[str]:
        return [v for v, _ in self.nodes]

    @property
    def concepts(self) -> dict[str, str]:
        return dict(self.nodes)

    @property
    def tokens(self) -> list[str] | None:
        tok = self.metadata.get("tok")
        return tok.split() if tok is not None else None

    def triples(self) -> Iterator[tuple[str, str, str]]:
        """Instance, relation and attribute triples with the graph's own variable names."""
        for v, c in self.nodes:
            yield (v, INSTANCE, c)
        yield from self.edges
        yield from self.attributes

    def replace(self, **changes) -> AmrGraph:
        kwargs = dict(
            nodes=self.nodes,
            edges=self.edges,
            attributes=self.attributes,
            root=self.root,
            metadata=self.metadata,
        )
        kwargs.update(changes)
        return AmrGraph(**kwargs)

    def rename(self, mapping: dict[str, str]) -> AmrGraph:
        """Apply a bijective variable renaming; unmapped variables keep their names."""
        m = lambda v: mapping.get(v, v)
        renamed = [m(v) for v in self.variables]
        if len(set(renamed)) != len(renamed):
            raise InvalidGraph("variable renaming is not injective")
        return self.replace(
            nodes=[(m(v), c) for v, c in self.nodes],
            edges=[(m(s), r, m(t)) for s, r, t in self.edges],
            attributes=[(m(s), r, c) for s, r, c in self.attributes],
            root=m(self.root),
        )
