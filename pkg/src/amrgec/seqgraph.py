"""Sequence-AMR graph construction.

Nodes are token positions. Neighbouring tokens are linked in both
directions, then every AMR edge is projected onto the tokens its endpoints
are aligned to.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .align import Alignment, EmptyTokenList
from .amr import AmrGraph

FORWARD = "label-forward"
BACKWARD = "label-backward"
SEQUENCE_LABELS = (FORWARD, BACKWARD)

SeqEdge = tuple[int, int, str]


class IndexOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class SequenceAmrGraph:
    """Token-position graph; edges are kept sorted by (source, target, label)."""

    tokens: tuple[str, ...]
    edges: tuple[SeqEdge, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        edges = sorted((int(s), int(t), str(l)) for s, t, l in self.edges)
        object.__setattr__(self, "edges", tuple(edges))
        n = len(self.tokens)
        for s, t, label in self.edges:
            if not (0 <= s < n and 0 <= t < n):
                raise IndexOutOfRange(f"edge ({s}, {t}, {label}) outside [0, {n})")

    @property
    def n(self) -> int:
        return len(self.tokens)

    def sequence_edges(self) -> list[SeqEdge]:
        return [e for e in self.edges if e[2] in SEQUENCE_LABELS]

    def amr_edges(self) -> list[SeqEdge]:
        return [e for e in self.edges if e[2] not in SEQUENCE_LABELS]

    def labels(self) -> set[str]:
        return {label for _, _, label in self.edges}

    def permute(self, perm: list[int]) -> SequenceAmrGraph:
        """Relabel nodes so that old node ``i`` becomes node ``perm[i]``."""
        tokens = [None] * self.n
        for i, tok in enumerate(self.tokens):
            tokens[perm[i]] = tok
        return SequenceAmrGraph(tokens, [(perm[s], perm[t], l) for s, t, l in self.edges])


def build_sequence_amr_graph(tokens: list[str], g: AmrGraph, a: Alignment) -> SequenceAmrGraph:
    if not tokens:
        raise EmptyTokenList("cannot build a graph over an empty token list")
    n = len(tokens)
    edges = []
    seen = set()

    def add(s, t, label):
        if not (0 <= s < n and 0 <= t < n):
            raise IndexOutOfRange(f"alignment points outside the sentence: ({s}, {t}, {label})")
        if (s, t, label) not in seen:
            seen.add((s, t, label))
            edges.append((s, t, label))

    for i in range(n - 1):
        add(i, i + 1, FORWARD)
        add(i + 1, i, BACKWARD)
    for s, role, t in g.edges:
        si, ti = a.get(s), a.get(t)
        if si is None or ti is None or si == ti:
            continue
        add(si, ti, role)
    return SequenceAmrGraph(tokens, edges)


def export_graph_json(sg: SequenceAmrGraph) -> str:
    doc = {"tokens": list(sg.tokens), "edges": [list(e) for e in sorted(sg.edges)]}
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":"))


def import_graph_json(text: str) -> SequenceAmrGraph:
    doc = json.loads(text)
    return SequenceAmrGraph(doc["tokens"], [tuple(e) for e in doc["edges"]])

