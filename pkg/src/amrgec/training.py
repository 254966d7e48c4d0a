"""Gradient checking and toy training for the fused encoder."""

from __future__ import annotations

import math
import random

import numpy as np

from .align import align
from .amr import AmrGraph
from .encoder import (
    EncoderParams,
    NonFiniteLoss,
    default_labels,
    encode,
    init_params,
    loss,
    loss_and_grads,
)
from .seqgraph import build_sequence_amr_graph


DEFAULT_LR = 0.3
DEFAULT_CLIP = 5.0


class DivergedLoss(FloatingPointError):
    pass


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def gradient_report(params: EncoderParams, batch, epsilon: float = 1e-5, names=None) -> dict[str, float]:
    """Max relative error per tensor between backprop and central differences."""
    if not 0 < epsilon <= 1e-2:
        raise ValueError("epsilon must lie in (0, 1e-2]")
    value, grads = loss_and_grads(params, batch)
    if not math.isfinite(value):
        raise NonFiniteLoss(f"loss is {value}")
    names = list(params.tensors) if names is None else list(names)
    report = {}
    for name in names:
        theta = params.tensors[name]
        worst = 0.0
        for idx in np.ndindex(theta.shape):
            orig = theta[idx]
            theta[idx] = orig + epsilon
            up = loss(params, batch)
            theta[idx] = orig - epsilon
            down = loss(params, batch)
            theta[idx] = orig
            if not (math.isfinite(up) and math.isfinite(down)):
                raise NonFiniteLoss(f"loss became non-finite perturbing {name}{list(idx)}")
            numeric = (up - down) / (2 * epsilon)
            worst = max(worst, relative_error(grads[name][idx], numeric))
        report[name] = worst
    return report


def gradient_check(params: EncoderParams, batch, epsilon: float = 1e-5, names=None) -> float:
    report = gradient_report(params, batch, epsilon, names)
    return max(report.values(), default=0.0)


def overfit_toy(params: EncoderParams, corpus, steps: int, lr: float, clip: float | None = DEFAULT_CLIP) -> list[float]:
    """Full-batch gradient descent on the mean MSE.

    ``params`` is updated in place. Returns ``steps + 1`` losses: the
    initial one, then the loss after every update. Gradients whose global
    L2 norm exceeds ``clip`` are rescaled to that norm (``None`` disables it).
    """
    curve = []
    for step in range(steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            value, grads = loss_and_grads(params, corpus)
        if not math.isfinite(value):
            raise DivergedLoss(f"loss became {value} at step {step}")
        curve.append(value)
        if step == steps:
            break
        factor = lr
        if clip is not None:
            norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
            if norm > clip:
                factor *= clip / norm
        for name, g in grads.items():
            params.tensors[name] -= factor * g
    return curve


# ---------------------------------------------------------------------------
# synthetic data

TOY_WORDS = ["the", "boy", "girl", "want", "go", "school", "not", "sunday", "see", "tree", "big", "run"]
TOY_ROLES = ["ARG0", "ARG1", "ARG2", "mod", "time", "polarity"]


def toy_graph(tokens, rng: random.Random) -> AmrGraph:
    """A random tree AMR whose concepts are drawn from the sentence itself."""
    k = rng.randint(1, min(4, len(tokens)))
    words = rng.sample(tokens, k)
    nodes = [(f"n{i}", w) for i, w in enumerate(words)]
    edges = [(f"n{rng.randrange(i)}", rng.choice(TOY_ROLES), f"n{i}") for i in range(1, k)]
    return AmrGraph(nodes, edges, [], "n0")


def toy_sentences(n_pairs: int, seed: int, min_len=3, max_len=7):
    rng = random.Random(seed)
    out = []
    for _ in range(n_pairs):
        tokens = [rng.choice(TOY_WORDS) for _ in range(rng.randint(min_len, max_len))]
        g = toy_graph(tokens, rng)
        out.append((tokens, build_sequence_amr_graph(tokens, g, align(g, tokens))))
    return out


def make_toy_corpus(n_pairs=20, d=8, variant="GCN", seed=0, layers=None, teacher_scale=1.0):
    """Sentences with targets produced by a frozen random teacher.

    Returns (corpus, teacher) with corpus items (tokens, graph, target).
    """
    labels = default_labels(TOY_ROLES)
    teacher = init_params(TOY_WORDS, labels, d=d, layers=layers, variant=variant, seed=seed + 1_000_003,
                          scale=teacher_scale)
    corpus = []
    for tokens, sg in toy_sentences(n_pairs, seed):
        corpus.append((tokens, sg, encode(tokens, sg, teacher)[2]))
    return corpus, teacher


def toy_student(d=8, variant="GCN", seed=0, layers=None, scale=1.0) -> EncoderParams:
    return init_params(TOY_WORDS, default_labels(TOY_ROLES), d=d, layers=layers, variant=variant,
                       seed=seed, scale=scale)
