"""Rule-based node-to-token alignment.

A lexical stand-in for JAMR: each node, taken in canonical order, runs a
cascade of matchers and takes the first hit.

1. the concept without its sense suffix equals the lowercased token;
2. concept and token share a prefix of at least ``MIN_PREFIX`` characters;
3. one of the node's attribute constants equals the lowercased token.

The whole cascade is first tried over unconsumed tokens, leftmost first;
only when it finds nothing are already-consumed tokens considered again.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .amr import AmrGraph
from .canonical import canonical_order

MIN_PREFIX = 4
_SENSE = re.compile(r"-\d+$")


class EmptyTokenList(ValueError):
    pass


@dataclass(frozen=True)
class Alignment:
    mapping: dict[str, int]
    unaligned: frozenset[str] = field(default_factory=frozenset)

    def __getitem__(self, var: str) -> int:
        return self.mapping[var]

    def get(self, var: str, default=None):
        return self.mapping.get(var, default)

    def to_json(self) -> str:
        doc = dict(sorted(self.mapping.items()))
        doc["unaligned"] = sorted(self.unaligned)
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> Alignment:
        doc = json.loads(text)
        unaligned = frozenset(doc.pop("unaligned", []))
        return cls({k: int(v) for k, v in doc.items()}, unaligned)


def strip_sense(concept: str) -> str:
    return _SENSE.sub("", concept)


def _unquote(const: str) -> str:
    if len(const) >= 2 and const[0] == const[-1] == '"':
        return const[1:-1]
    return const


def _common_prefix(a: str, b: str) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def _rules(concept: str, constants: list[str]):
    lemma = strip_sense(concept).lower()
    yield lambda tok: tok == lemma
    yield lambda tok: _common_prefix(lemma, tok) >= MIN_PREFIX
    yield lambda tok: tok in constants


def align(g: AmrGraph, tokens: list[str]) -> Alignment:
    if not tokens:
        raise EmptyTokenList("cannot align against an empty token list")
    lowered = [t.lower() for t in tokens]
    constants = {v: [] for v in g.variables}
    for s, _, const in g.attributes:
        constants[s].append(_unquote(const).lower())
    concepts = g.concepts

    consumed = set()
    mapping = {}
    for var in canonical_order(g):
        rules = list(_rules(concepts[var], constants[var]))
        hit = None
        for allow_reuse in (False, True):
            for rule in rules:
                for i, tok in enumerate(lowered):
                    if (i in consumed) != allow_reuse:
                        continue
                    if rule(tok):
                        hit = i
                        break
                if hit is not None:
                    break
            if hit is not None:
                break
        if hit is not None:
            mapping[var] = hit
            consumed.add(hit)
    unaligned = frozenset(v for v in g.variables if v not in mapping)
    return Alignment(mapping, unaligned)


def alignment_coverage(a: Alignment, g: AmrGraph) -> float:
    if not g.nodes:
        return 0.0
    return sum(1 for v in g.variables if v in a.mapping) / len(g.nodes)
