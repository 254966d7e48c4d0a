"""Graph identity, Smatch similarity and the corpus reliability rate."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .amr import AmrGraph
from .canonical import canonicalize
from .rng import SplitMix64

DEFAULT_RESTARTS = 4


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True)
class SmatchResult:
    precision: float
    recall: float
    f1: float
    matched: int
    total1: int
    total2: int
    mapping: dict[str, str | None] = field(default_factory=dict)


def graphs_identical(g1: AmrGraph, g2: AmrGraph) -> bool:
    return canonicalize(g1) == canonicalize(g2)


def f_score(matched: int, total1: int, total2: int) -> tuple[float, float, float]:
    p = matched / total1 if total1 else 0.0
    r = matched / total2 if total2 else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


class _Problem:
    """Triples of two graphs indexed for fast scoring of a variable mapping."""

    def __init__(self, g1: AmrGraph, g2: AmrGraph):
        self.vars1 = g1.variables
        self.vars2 = g2.variables
        idx1 = {v: i for i, v in enumerate(self.vars1)}
        idx2 = {v: i for i, v in enumerate(self.vars2)}
        attrs1 = [Counter() for _ in self.vars1]
        attrs2 = [Counter() for _ in self.vars2]
        for s, r, c in g1.attributes:
            attrs1[idx1[s]][(r, c)] += 1
        for s, r, c in g2.attributes:
            attrs2[idx2[s]][(r, c)] += 1
        c1 = [c for _, c in g1.nodes]
        c2 = [c for _, c in g2.nodes]
        # matches contributed by a single pair (instance + attributes)
        self.node_score = [
            [int(c1[i] == c2[k]) + sum((attrs1[i] & attrs2[k]).values()) for k in range(len(c2))]
            for i in range(len(c1))
        ]
        self.rel1 = [(idx1[s], r, idx1[t]) for s, r, t in g1.edges]
        self.rel2 = Counter((idx2[s], r, idx2[t]) for s, r, t in g2.edges)
        self.total1 = len(g1.nodes) + len(g1.edges) + len(g1.attributes)
        self.total2 = len(g2.nodes) + len(g2.edges) + len(g2.attributes)

    def score(self, m: list[int | None]) -> int:
        total = sum(self.node_score[i][k] for i, k in enumerate(m) if k is not None)
        mapped = Counter(
            (m[s], r, m[t]) for s, r, t in self.rel1 if m[s] is not None and m[t] is not None
        )
        total += sum((mapped & self.rel2).values())
        return total

    def random_mapping(self, rng: SplitMix64) -> list[int | None]:
        n1, n2 = len(self.vars1), len(self.vars2)
        order1 = list(range(n1))
        order2 = list(range(n2))
        rng.shuffle(order1)
        rng.shuffle(order2)
        m = [None] * n1
        for i, k in zip(order1, order2):
            m[i] = k
        return m

    def _moves(self, m: list[int | None]):
        """Neighbouring mappings: single reassignments (swapping with the
        current holder of the target) and, for each pair of relations sharing
        a role, the joint move sending both endpoints across at once."""
        n2 = len(self.vars2)
        for i in range(len(m)):
            for k in list(range(n2)) + [None]:
                if k != m[i]:
                    yield _assign(m, [(i, k)])
        for s1, r1, t1 in self.rel1:
            if s1 == t1:
                continue
            for (s2, r2, t2) in self.rel2:
                if r1 == r2 and s2 != t2 and (m[s1], m[t1]) != (s2, t2):
                    yield _assign(m, [(s1, s2), (t1, t2)])

    def climb(self, m: list[int | None]) -> tuple[int, list[int | None]]:
        """Best-improvement local search; stops at the first local optimum."""
        current = self.score(m)
        while True:
            best_gain, best_move = 0, None
            for trial in self._moves(m):
                gain = self.score(trial) - current
                if gain > best_gain:
                    best_gain, best_move = gain, trial
            if best_move is None:
                return current, m
            m = best_move
            current += best_gain


def _assign(m: list[int | None], pairs) -> list[int | None]:
    """Set ``m[i] = k`` for each pair; a displaced holder of ``k`` takes ``m[i]``'s old value."""
    m = list(m)
    for i, k in pairs:
        if k is not None and k in m:
            m[m.index(k)] = m[i]
        m[i] = k
    return m

def smatch(g1: AmrGraph, g2: AmrGraph, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> SmatchResult:
    """Smatch P/R/F1: the best triple overlap found by seeded hill-climbing.

    Each restart begins from a random partial injection of g1's variables
    into g2's. The first restart reaching the highest count wins.
    """
    if restarts < 1:
        raise ValueError("restarts must be positive")
    prob = _Problem(g1, g2)
    rng = SplitMix64(seed)
    best_score, best_map = -1, None
    for _ in range(restarts):
        score, m = prob.climb(prob.random_mapping(rng))
        if score > best_score:
            best_score, best_map = score, m
    p, r, f = f_score(best_score, prob.total1, prob.total2)
    mapping = {
        v: (prob.vars2[k] if k is not None else None) for v, k in zip(prob.vars1, best_map)
    }
    return SmatchResult(p, r, f, best_score, prob.total1, prob.total2, mapping)


def reliability_rate(pairs) -> float:
    """Share of (errorful, corrected) pairs whose graphs are alpha-equivalent."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyCorpus("reliability needs at least one graph pair")
    return sum(graphs_identical(a, b) for a, b in pairs) / len(pairs)
