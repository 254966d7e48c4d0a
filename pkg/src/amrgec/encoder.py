"""Semantic aggregated encoder at desk scale.

Three stages, all in float64 numpy with hand-written backward passes:

* sequence states ``h``: token embeddings plus sinusoidal positions, one
  softmax self-attention layer with a residual connection;
* graph states ``yhat``: ``layers`` rounds of message passing over the
  sequence-AMR graph (GCN, GAT or DeepGCN), each message carrying its edge
  label embedding; every node also receives a label-free self-loop;
* fused states ``y' = h + yhat``.

The activation throughout is ``tanh``; GAT scores use a LeakyReLU with
slope ``LEAKY_SLOPE``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .seqgraph import SEQUENCE_LABELS, SequenceAmrGraph

VARIANTS = ("GCN", "GAT", "DeepGCN")
UNK = "<unk>"
LEAKY_SLOPE = 0.2
FORMAT = "amrgec-encoder"


class EmptyInput(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


class NonFiniteLoss(FloatingPointError):
    pass


def default_layers(variant: str) -> int:
    return 4 if variant == "DeepGCN" else 2


@dataclass
class EncoderParams:
    vocab: list[str]
    labels: list[str]
    d: int = 8
    layers: int = 2
    variant: str = "GCN"
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown GNN variant {self.variant!r}")
        if self.variant == "DeepGCN" and self.layers < 4:
            raise ValueError("DeepGCN needs at least 4 layers")
        if not self.vocab or self.vocab[0] != UNK:
            self.vocab = [UNK] + [w for w in self.vocab if w != UNK]
        if not self.labels or self.labels[0] != UNK:
            self.labels = [UNK] + [l for l in self.labels if l != UNK]
        self._token_index = {w: i for i, w in enumerate(self.vocab)}
        self._label_index = {l: i for i, l in enumerate(self.labels)}

    def token_ids(self, tokens) -> np.ndarray:
        return np.array([self._token_index.get(t, 0) for t in tokens], dtype=np.int64)

    def label_ids(self, labels) -> np.ndarray:
        return np.array([self._label_index.get(l, 0) for l in labels], dtype=np.int64)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        d = self.d
        shapes = {"embedding": (len(self.vocab), d)}
        for name in ("query", "key", "value", "output"):
            shapes[f"attn.{name}"] = (d, d)
        for l in range(self.layers):
            shapes[f"gnn.{l}.weight"] = (d, d)
            shapes[f"gnn.{l}.bias"] = (d,)
            shapes[f"gnn.{l}.label"] = (len(self.labels), d)
            if self.variant == "GAT":
                shapes[f"gnn.{l}.attention"] = (2 * d,)
        return shapes

    def check(self) -> None:
        expected = self.shapes()
        if set(expected) != set(self.tensors):
            raise ShapeMismatch(f"tensor names {sorted(self.tensors)} != {sorted(expected)}")
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ShapeMismatch(f"{name}: shape {self.tensors[name].shape} != {shape}")
            if not np.all(np.isfinite(self.tensors[name])):
                raise ValueError(f"{name} holds non-finite values")

    def gnn_names(self) -> list[str]:
        return [k for k in self.tensors if k.startswith("gnn.")]

    def copy(self) -> EncoderParams:
        return EncoderParams(
            list(self.vocab), list(self.labels), self.d, self.layers, self.variant,
            {k: v.copy() for k, v in self.tensors.items()},
        )

    # serialization ---------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "version": 1,
            "config": {
                "d": self.d,
                "layers": self.layers,
                "variant": self.variant,
                "vocab": self.vocab,
                "labels": self.labels,
            },
            "tensors": {
                name: {"shape": list(t.shape), "data": t.ravel().tolist()}
                for name, t in self.tensors.items()
            },
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> EncoderParams:
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise ValueError(f"not an {FORMAT} document")
        cfg = doc["config"]
        tensors = {
            name: np.array(t["data"], dtype=np.float64).reshape(t["shape"])
            for name, t in doc["tensors"].items()
        }
        params = cls(cfg["vocab"], cfg["labels"], cfg["d"], cfg["layers"], cfg["variant"], tensors)
        params.check()
        return params


def init_params(vocab, labels, d=8, layers=None, variant="GCN", seed=0, scale=1.0) -> EncoderParams:
    """Gaussian init: embeddings ~ N(0, scale^2), matrices ~ N(0, scale^2 / d)."""
    if layers is None:
        layers = default_layers(variant)
    params = EncoderParams(list(vocab), list(labels), d, layers, variant)
    rng = np.random.default_rng(seed)
    for name, shape in params.shapes().items():
        if name.endswith(".bias"):
            params.tensors[name] = np.zeros(shape)
        elif name == "embedding" or name.endswith(".label"):
            params.tensors[name] = rng.normal(0.0, scale, shape)
        else:
            params.tensors[name] = rng.normal(0.0, scale / np.sqrt(d), shape)
    return params


def default_labels(roles=()) -> list[str]:
    return [UNK, *SEQUENCE_LABELS, *sorted(set(roles) - set(SEQUENCE_LABELS))]


def sinusoidal_positions(n: int, d: int) -> np.ndarray:
    pos = np.arange(n, dtype=np.float64)[:, None]
    i = np.arange(d)[None, :]
    rates = 1.0 / np.power(10000.0, (2 * (i // 2)) / max(d, 1))
    angles = pos * rates
    return np.where(i % 2 == 0, np.sin(angles), np.cos(angles))


def _softmax_rows(s: np.ndarray) -> np.ndarray:
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# sequence encoder


def _seq_forward(ids: np.ndarray, params: EncoderParams):
    T = params.tensors
    n, d = len(ids), params.d
    X = T["embedding"][ids] + sinusoidal_positions(n, d)
    Q = X @ T["attn.query"]
    K = X @ T["attn.key"]
    V = X @ T["attn.value"]
    A = _softmax_rows(Q @ K.T / np.sqrt(d))
    C = A @ V
    h = X + C @ T["attn.output"]
    return h, (ids, X, Q, K, V, A, C)


def _seq_backward(dh: np.ndarray, cache, params: EncoderParams, grads: dict) -> None:
    T = params.tensors
    ids, X, Q, K, V, A, C = cache
    scale = 1.0 / np.sqrt(params.d)
    dX = dh.copy()
    grads["attn.output"] += C.T @ dh
    dC = dh @ T["attn.output"].T
    dA = dC @ V.T
    dV = A.T @ dC
    dS = A * (dA - (dA * A).sum(axis=1, keepdims=True))
    dQ = dS @ K * scale
    dK = dS.T @ Q * scale
    grads["attn.query"] += X.T @ dQ
    grads["attn.key"] += X.T @ dK
    grads["attn.value"] += X.T @ dV
    dX += dQ @ T["attn.query"].T + dK @ T["attn.key"].T + dV @ T["attn.value"].T
    np.add.at(grads["embedding"], ids, dX)


def attention_weights(tokens, params: EncoderParams) -> np.ndarray:
    """Row-stochastic self-attention matrix of the sequence layer."""
    if not tokens:
        raise EmptyInput("no tokens")
    return _seq_forward(params.token_ids(tokens), params)[1][5]


def sequence_encode(tokens, params: EncoderParams) -> np.ndarray:
    if not tokens:
        raise EmptyInput("no tokens")
    return _seq_forward(params.token_ids(tokens), params)[0]


# ---------------------------------------------------------------------------
# graph encoder


@dataclass
class _GraphArrays:
    """Edge lists with one self-loop per node appended (label index -1)."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    lab: np.ndarray
    norm: np.ndarray  # GCN coefficient per edge

    @property
    def labelled(self) -> np.ndarray:
        return self.lab >= 0


def _graph_arrays(sg: SequenceAmrGraph, params: EncoderParams) -> _GraphArrays:
    n = sg.n
    loops = np.arange(n)
    src = np.concatenate([np.array([e[0] for e in sg.edges], dtype=np.int64), loops])
    dst = np.concatenate([np.array([e[1] for e in sg.edges], dtype=np.int64), loops])
    lab = np.concatenate([params.label_ids([e[2] for e in sg.edges]), -np.ones(n, dtype=np.int64)])
    deg = np.bincount(dst, minlength=n).astype(np.float64)  # in-degree incl. self-loop
    norm = 1.0 / np.sqrt(deg[src] * deg[dst])
    return _GraphArrays(n, src, dst, lab, norm)


def _messages(H, ga: _GraphArrays, R):
    U = H[ga.src].copy()
    U[ga.labelled] += R[ga.lab[ga.labelled]]
    return U


def _scatter_messages_back(dU, ga: _GraphArrays, dH, dR) -> None:
    np.add.at(dH, ga.src, dU)
    np.add.at(dR, ga.lab[ga.labelled], dU[ga.labelled])


def _gcn_layer(H, ga, T, l, residual):
    W, b, R = T[f"gnn.{l}.weight"], T[f"gnn.{l}.bias"], T[f"gnn.{l}.label"]
    U = _messages(H, ga, R)
    M = np.zeros_like(H)
    np.add.at(M, ga.dst, ga.norm[:, None] * U)
    act = np.tanh(M @ W + b)
    out = H + act if residual else act
    return out, (M, act, residual)


def _gcn_layer_backward(dout, H, ga, T, l, cache, grads):
    M, act, residual = cache
    dP = dout * (1.0 - act**2)
    grads[f"gnn.{l}.weight"] += M.T @ dP
    grads[f"gnn.{l}.bias"] += dP.sum(axis=0)
    dM = dP @ T[f"gnn.{l}.weight"].T
    dU = ga.norm[:, None] * dM[ga.dst]
    dH = dout.copy() if residual else np.zeros_like(H)
    _scatter_messages_back(dU, ga, dH, grads[f"gnn.{l}.label"])
    return dH


def _leaky(x):
    return np.where(x > 0, x, LEAKY_SLOPE * x)


def _gat_scores(H, ga, T, l):
    W, R, a = T[f"gnn.{l}.weight"], T[f"gnn.{l}.label"], T[f"gnn.{l}.attention"]
    d = W.shape[0]
    U = _messages(H, ga, R)
    Z = U @ W
    Qn = H @ W
    raw = Qn[ga.dst] @ a[:d] + Z @ a[d:]
    s = _leaky(raw)
    peak = np.full(ga.n, -np.inf)
    np.maximum.at(peak, ga.dst, s)
    ex = np.exp(s - peak[ga.dst])
    den = np.zeros(ga.n)
    np.add.at(den, ga.dst, ex)
    alpha = ex / den[ga.dst]
    return U, Z, Qn, raw, alpha


def _gat_layer(H, ga, T, l):
    U, Z, Qn, raw, alpha = _gat_scores(H, ga, T, l)
    M = np.zeros_like(H)
    np.add.at(M, ga.dst, alpha[:, None] * Z)
    act = np.tanh(M + T[f"gnn.{l}.bias"])
    return act, (U, Z, Qn, raw, alpha, act)


def _gat_layer_backward(dout, H, ga, T, l, cache, grads):
    U, Z, Qn, raw, alpha, act = cache
    W, a = T[f"gnn.{l}.weight"], T[f"gnn.{l}.attention"]
    d = W.shape[0]
    dM = dout * (1.0 - act**2)
    grads[f"gnn.{l}.bias"] += dM.sum(axis=0)
    dMe = dM[ga.dst]
    dZ = alpha[:, None] * dMe
    dalpha = (dMe * Z).sum(axis=1)
    weighted = np.zeros(ga.n)
    np.add.at(weighted, ga.dst, alpha * dalpha)
    ds = alpha * (dalpha - weighted[ga.dst])
    draw = ds * np.where(raw > 0, 1.0, LEAKY_SLOPE)
    ga_grad = grads[f"gnn.{l}.attention"]
    ga_grad[:d] += draw @ Qn[ga.dst]
    ga_grad[d:] += draw @ Z
    dQn = np.zeros_like(H)
    np.add.at(dQn, ga.dst, draw[:, None] * a[None, :d])
    dZ += draw[:, None] * a[None, d:]
    grads[f"gnn.{l}.weight"] += U.T @ dZ + H.T @ dQn
    dH = dQn @ W.T
    _scatter_messages_back(dZ @ W.T, ga, dH, grads[f"gnn.{l}.label"])
    return dH


def _gnn_forward(ga: _GraphArrays, h: np.ndarray, params: EncoderParams):
    T = params.tensors
    H = h
    caches = []
    for l in range(params.layers):
        if params.variant == "GAT":
            out, cache = _gat_layer(H, ga, T, l)
        else:
            residual = params.variant == "DeepGCN" and l > 0
            out, cache = _gcn_layer(H, ga, T, l, residual)
        caches.append((H, cache))
        H = out
    return H, caches


def _gnn_backward(dy, ga, caches, params: EncoderParams, grads) -> np.ndarray:
    T = params.tensors
    dH = dy
    for l in reversed(range(params.layers)):
        H, cache = caches[l]
        if params.variant == "GAT":
            dH = _gat_layer_backward(dH, H, ga, T, l, cache, grads)
        else:
            dH = _gcn_layer_backward(dH, H, ga, T, l, cache, grads)
    return dH


def gnn_forward(sg: SequenceAmrGraph, h: np.ndarray, params: EncoderParams) -> np.ndarray:
    if h.ndim != 2 or h.shape != (sg.n, params.d):
        raise ShapeMismatch(f"states of shape {h.shape} for a {sg.n}-node graph of width {params.d}")
    return _gnn_forward(_graph_arrays(sg, params), h, params)[0]


def gat_attention(sg: SequenceAmrGraph, h: np.ndarray, params: EncoderParams, layer: int = 0):
    """First-layer GAT weights as (src, dst, alpha) arrays, self-loops included."""
    if params.variant != "GAT":
        raise ValueError("attention weights exist only for the GAT variant")
    ga = _graph_arrays(sg, params)
    H = h
    for l in range(layer):
        H, _ = _gat_layer(H, ga, params.tensors, l)
    alpha = _gat_scores(H, ga, params.tensors, layer)[4]
    return ga.src, ga.dst, alpha


def fuse(h: np.ndarray, yhat: np.ndarray) -> np.ndarray:
    if h.shape != yhat.shape:
        raise ShapeMismatch(f"cannot fuse {h.shape} with {yhat.shape}")
    return h + yhat


def encode(tokens, sg: SequenceAmrGraph, params: EncoderParams):
    """Return (h, yhat, y') for one sentence."""
    if not tokens:
        raise EmptyInput("no tokens")
    h = sequence_encode(tokens, params)
    yhat = gnn_forward(sg, h, params)
    return h, yhat, fuse(h, yhat)


# ---------------------------------------------------------------------------
# loss


def _mse(y, target):
    if y.shape != target.shape:
        raise ShapeMismatch(f"output {y.shape} vs target {target.shape}")
    diff = y - target
    return float((diff**2).sum() / max(diff.size, 1)), 2.0 * diff / max(diff.size, 1)


def loss(params: EncoderParams, batch) -> float:
    """Mean over examples of the elementwise MSE between y' and the target."""
    total = 0.0
    for tokens, sg, target in batch:
        total += _mse(encode(tokens, sg, params)[2], target)[0]
    return total / len(batch)


def loss_and_grads(params: EncoderParams, batch):
    grads = {k: np.zeros_like(v) for k, v in params.tensors.items()}
    total = 0.0
    for tokens, sg, target in batch:
        ids = params.token_ids(tokens)
        if len(ids) == 0:
            raise EmptyInput("no tokens")
        h, seq_cache = _seq_forward(ids, params)
        ga = _graph_arrays(sg, params)
        yhat, gnn_caches = _gnn_forward(ga, h, params)
        value, dy = _mse(h + yhat, target)
        total += value
        dh = dy + _gnn_backward(dy, ga, gnn_caches, params, grads)
        _seq_backward(dh, seq_cache, params, grads)
    k = len(batch)
    for g in grads.values():
        g /= k
    return total / k, grads
