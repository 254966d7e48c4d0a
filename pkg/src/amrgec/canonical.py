"""Canonical triple form of an AMR graph.

Variables are renamed ``v0, v1, ...`` in depth-first discovery order from
the root, walking edges in both directions. At each node the incident edges
are visited in order of (direction, role, neighbour concept, neighbour
structural colour), where the colour comes from Weisfeiler-Lehman refinement.
Whenever that order still ties, every arrangement of the tied group is
explored and the lexicographically smallest sorted triple list wins. Two
graphs therefore get equal triple sets exactly when they are alpha-equivalent.
Among namings that give the same triples, the one listing the original
variable names in the smallest order is kept, so the naming does not depend
on the order edges were written in.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .amr import INSTANCE, AmrGraph

Triple = tuple[str, str, str]


@dataclass(frozen=True)
class TripleSet:
    instances: tuple[Triple, ...]
    relations: tuple[Triple, ...]
    attributes: tuple[Triple, ...]

    def __len__(self):
        return len(self.instances) + len(self.relations) + len(self.attributes)

    def __iter__(self):
        return iter(self.all())

    def all(self) -> tuple[Triple, ...]:
        return tuple(sorted(self.instances + self.relations + self.attributes))


def wl_colors(g: AmrGraph) -> dict[str, int]:
    """Stable structural colour classes; invariant under variable renaming."""
    attrs = {v: [] for v in g.variables}
    for s, role, const in g.attributes:
        attrs[s].append((role, const))
    sig = {
        v: (c, v == g.root, tuple(sorted(attrs[v])))
        for v, c in g.nodes
    }
    colors = _rank(sig)
    n_classes = len(set(colors.values()))
    while True:
        out = {v: [] for v in g.variables}
        for s, role, t in g.edges:
            out[s].append((0, role, colors[t]))
            out[t].append((1, role, colors[s]))
        refined = _rank({v: (colors[v], tuple(sorted(out[v]))) for v in g.variables})
        k = len(set(refined.values()))
        colors = refined
        if k == n_classes:
            return colors
        n_classes = k


def _rank(signatures: dict) -> dict[str, int]:
    order = {s: i for i, s in enumerate(sorted(set(signatures.values())))}
    return {v: order[s] for v, s in signatures.items()}


def _neighbour_options(v, incident, colors, degree, concepts):
    """All admissible visiting orders of v's neighbours (usually exactly one)."""
    keyed = {}
    for direction, role, u in incident[v]:
        if u == v:
            continue
        key = (direction, role, concepts[u], colors[u])
        keyed.setdefault(key, [])
        if u not in keyed[key]:
            keyed[key].append(u)
    groups = []
    for key in sorted(keyed):
        members = sorted(keyed[key])
        if len(members) > 1 and degree[members[0]] == 1:
            # interchangeable leaves: any order yields the same triples
            groups.append([tuple(members)])
        else:
            groups.append(list(itertools.permutations(members)))
    for combo in itertools.product(*groups):
        seq = []
        for part in combo:
            seq.extend(part)
        yield seq


def canonical_order(g: AmrGraph) -> list[str]:
    """Variables of ``g`` in canonical naming order (``result[i]`` becomes ``v{i}``)."""
    colors = wl_colors(g)
    concepts = g.concepts
    incident = {v: [] for v in concepts}
    degree = dict.fromkeys(concepts, 0)  # edge degree only
    for s, role, t in g.edges:
        incident[s].append((0, role, t))
        incident[t].append((1, role, s))
        degree[s] += 1
        degree[t] += 1

    best = None

    def finish(order):
        nonlocal best
        name = {v: f"v{i}" for i, v in enumerate(order)}
        key = (_renamed(g, name).all(), tuple(order))
        if best is None or key < best:
            best = key

    def search(order, named, stack):
        # stack: neighbour sequences still to walk, innermost last
        stack = [list(frame) for frame in stack]
        while stack:
            if not stack[-1]:
                stack.pop()
                continue
            u = stack[-1].pop(0)
            if u in named:
                continue
            for option in _neighbour_options(u, incident, colors, degree, concepts):
                search(order + [u], named | {u}, stack + [option])
            return
        finish(order)

    root = g.root
    for option in _neighbour_options(root, incident, colors, degree, concepts):
        search([root], frozenset([root]), [option])
    return list(best[1])


def _renamed(g: AmrGraph, name: dict[str, str]) -> TripleSet:
    return TripleSet(
        instances=tuple(sorted((name[v], INSTANCE, c) for v, c in g.nodes)),
        relations=tuple(sorted((name[s], r, name[t]) for s, r, t in g.edges)),
        attributes=tuple(sorted((name[s], r, c) for s, r, c in g.attributes)),
    )


def canonicalize(g: AmrGraph) -> TripleSet:
    g.validate()
    order = canonical_order(g)
    return _renamed(g, {v: f"v{i}" for i, v in enumerate(order)})
