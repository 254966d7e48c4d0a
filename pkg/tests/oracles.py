"""Independent reference implementations used by the tests."""

from collections import Counter
from itertools import permutations


def _triples(g):
    out = [("instance", v, c) for v, c in g.nodes]
    out += [(r, s, t) for s, r, t in g.edges]
    out += [(r, s, ":" + c) for s, r, c in g.attributes]  # constants can't collide with variables
    return Counter(out)


def exhaustive_smatch(g1, g2):
    """Best triple overlap over every injection of the smaller graph's
    variables into the larger's. Extending a partial mapping never loses a
    match, so full injections are enough."""
    swap = len(g1.nodes) > len(g2.nodes)
    a, b = (g2, g1) if swap else (g1, g2)
    ta, tb = _triples(a), _triples(b)
    va, vb = a.variables, b.variables
    best = 0
    for image in permutations(vb, len(va)):
        m = dict(zip(va, image))
        renamed = Counter()
        for (r, s, t), k in ta.items():
            renamed[(r, m.get(s, s), m.get(t, t))] += k
        best = max(best, sum((renamed & tb).values()))
    n1 = sum(_triples(g1).values())
    n2 = sum(_triples(g2).values())
    p, r = best / n1, best / n2
    return best, (2 * p * r / (p + r) if best else 0.0)


SMALL_CONCEPTS = ["want-01", "boy", "girl", "go-02", "thing"]
SMALL_ROLES = ["ARG0", "ARG1", "mod", "op1"]


def smatch_pair(rng, gen):
    """A pair of small graphs, sometimes one a perturbation of the other."""
    kw = dict(max_nodes=6, concepts=SMALL_CONCEPTS, roles=SMALL_ROLES)
    g1 = gen(rng, **kw)
    if rng.random() < 0.5:
        return g1, gen(rng, **kw)
    nodes = [(v, rng.choice(SMALL_CONCEPTS) if rng.random() < 0.3 else c) for v, c in g1.nodes]
    edges = [(s, rng.choice(SMALL_ROLES) if rng.random() < 0.3 else r, t) for s, r, t in g1.edges]
    return g1, g1.replace(nodes=nodes, edges=edges)
