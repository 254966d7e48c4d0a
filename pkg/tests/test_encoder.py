import math

import numpy as np
import pytest

from amrgec.encoder import (
    VARIANTS,
    EmptyInput,
    EncoderParams,
    ShapeMismatch,
    attention_weights,
    encode,
    fuse,
    gat_attention,
    gnn_forward,
    init_params,
    sequence_encode,
)
from amrgec.seqgraph import BACKWARD, FORWARD, SequenceAmrGraph
from amrgec.training import gradient_check
from amrgec.cli import _check_fixture

VOCAB = ["a", "b", "c", "d", "e", "f", "g"]  # plus <unk>: 8 rows
LABELS = [FORWARD, BACKWARD, "ARG0"]


def _path(n, extra=()):
    edges = []
    for i in range(n - 1):
        edges += [(i, i + 1, FORWARD), (i + 1, i, BACKWARD)]
    return SequenceAmrGraph([f"t{i}" for i in range(n)], edges + list(extra))


def test_single_token_attention():
    p = init_params(VOCAB, LABELS, d=4, seed=1)
    A = attention_weights(["a"], p)
    assert A.shape == (1, 1) and A[0, 0] == 1.0


def test_single_token_output():
    p = init_params(VOCAB, LABELS, d=4, seed=1)
    T = p.tensors
    x = T["embedding"][VOCAB.index("c") + 1] + np.array([0.0, 1.0, 0.0, 1.0])
    expected = x + x @ T["attn.value"] @ T["attn.output"]
    np.testing.assert_allclose(sequence_encode(["c"], p)[0], expected, atol=1e-14)


def test_attention_rows_sum_to_one():
    for seed in range(20):
        p = init_params(VOCAB, LABELS, d=4, seed=seed, scale=3.0)
        A = attention_weights(["a", "b", "zzz", "c", "a"], p)
        assert np.all(np.abs(A.sum(axis=1) - 1.0) <= 1e-12)
        assert np.all(A >= 0)


def test_sequence_layer_by_loops():
    p = init_params(VOCAB, LABELS, d=4, seed=3)
    T = p.tensors
    tokens = ["b", "d", "g"]
    d, n = 4, 3
    X = [[0.0] * d for _ in range(n)]
    for i, tok in enumerate(tokens):
        row = VOCAB.index(tok) + 1
        for j in range(d):
            angle = i / 10000 ** (2 * (j // 2) / d)
            X[i][j] = T["embedding"][row, j] + (math.sin(angle) if j % 2 == 0 else math.cos(angle))

    def mat(Xs, W):
        return [[sum(x[k] * W[k, j] for k in range(d)) for j in range(d)] for x in Xs]

    Q, K, V = mat(X, T["attn.query"]), mat(X, T["attn.key"]), mat(X, T["attn.value"])
    expected = []
    for i in range(n):
        scores = [sum(Q[i][k] * K[j][k] for k in range(d)) / math.sqrt(d) for j in range(n)]
        top = max(scores)
        w = [math.exp(s - top) for s in scores]
        w = [x / sum(w) for x in w]
        ctx = [sum(w[j] * V[j][k] for j in range(n)) for k in range(d)]
        out = mat([ctx], T["attn.output"])[0]
        expected.append([X[i][k] + out[k] for k in range(d)])
    np.testing.assert_allclose(sequence_encode(tokens, p), expected, rtol=0, atol=1e-12)


def test_single_node_gcn_identity():
    p = init_params(VOCAB, LABELS, d=4, layers=1, seed=0)
    p.tensors["gnn.0.weight"] = np.eye(4)
    h = np.array([[0.5, -1.0, 2.0, 0.0]])
    sg = SequenceAmrGraph(["a"], [])
    np.testing.assert_array_equal(gnn_forward(sg, h, p), np.tanh(h))


def _dense_gcn(h, sg, p, l):
    n, d = h.shape
    T = p.tensors
    A = np.eye(n)
    for s, t, _ in sg.edges:
        A[t, s] += 1  # row = receiver
    deg = A.sum(axis=1)
    N = A / np.sqrt(np.outer(deg, deg))
    lab = np.zeros((n, d))
    for s, t, r in sg.edges:
        lab[t] += T[f"gnn.{l}.label"][p.labels.index(r)] / np.sqrt(deg[s] * deg[t])
    return np.tanh((N @ h + lab) @ T[f"gnn.{l}.weight"] + T[f"gnn.{l}.bias"])


def test_gcn_dense_oracle():
    sg = _path(3, [(0, 2, "ARG0")])
    for seed in range(5):
        p = init_params(VOCAB, LABELS, d=2, layers=2, variant="GCN", seed=seed)
        p.tensors["gnn.1.bias"] += 0.1
        h = np.random.default_rng(seed).normal(size=(3, 2))
        expected = _dense_gcn(_dense_gcn(h, sg, p, 0), sg, p, 1)
        np.testing.assert_allclose(gnn_forward(sg, h, p), expected, atol=1e-12)


def test_deepgcn_residual():
    sg = _path(3)
    p = init_params(VOCAB, LABELS, d=2, variant="DeepGCN", seed=2)
    h = np.random.default_rng(0).normal(size=(3, 2))
    H = _dense_gcn(h, sg, p, 0)
    for l in range(1, 4):
        H = H + _dense_gcn(H, sg, p, l)
    np.testing.assert_allclose(gnn_forward(sg, h, p), H, atol=1e-12)


def test_gat_dense_oracle():
    sg = _path(3, [(0, 2, "ARG0")])
    p = init_params(VOCAB, LABELS, d=2, layers=1, variant="GAT", seed=4)
    T = p.tensors
    W, a, R = T["gnn.0.weight"], T["gnn.0.attention"], T["gnn.0.label"]
    h = np.random.default_rng(1).normal(size=(3, 2))
    incoming = {t: [(t, None)] for t in range(3)}
    for s, t, r in sg.edges:
        incoming[t].append((s, r))
    expected = []
    for t in range(3):
        zs, scores = [], []
        for s, r in incoming[t]:
            z = (h[s] + (R[p.labels.index(r)] if r else 0)) @ W
            e = a[:2] @ (h[t] @ W) + a[2:] @ z
            scores.append(e if e > 0 else 0.2 * e)
            zs.append(z)
        w = np.exp(scores) / np.exp(scores).sum()
        expected.append(np.tanh(sum(wi * z for wi, z in zip(w, zs)) + T["gnn.0.bias"]))
    np.testing.assert_allclose(gnn_forward(sg, h, p), expected, atol=1e-12)


def test_gat_single_in_edge():
    sg = SequenceAmrGraph(["a", "b"], [(0, 1, "ARG0")])
    p = init_params(VOCAB, LABELS, d=4, layers=1, variant="GAT", seed=6, scale=2.0)
    src, dst, alpha = gat_attention(sg, sequence_encode(["a", "b"], p), p)
    into_b = alpha[dst == 1]
    assert len(into_b) == 2 and 0 < into_b[0] < 1
    assert abs(into_b.sum() - 1.0) <= 1e-12
    assert alpha[dst == 0].tolist() == [1.0]


def test_gat_weights_normalised():
    sg = _path(5, [(0, 3, "ARG0"), (4, 1, "ARG0")])
    p = init_params(VOCAB, LABELS, d=4, variant="GAT", seed=5, scale=2.0)
    h = sequence_encode(list("abcde"), p)
    for layer in range(2):
        src, dst, alpha = gat_attention(sg, h, p, layer)
        sums = np.bincount(dst, weights=alpha)
        assert np.all(np.abs(sums - 1.0) <= 1e-12)


def test_fuse():
    h = np.array([[1.0, 2.0]])
    assert fuse(h, np.zeros_like(h)).tolist() == [[1.0, 2.0]]
    assert fuse(h, np.array([[0.5, -2.0]])).tolist() == [[1.5, 0.0]]
    assert fuse(np.zeros_like(h), h).tolist() == [[1.0, 2.0]]
    assert np.all(fuse(np.ones((3, 4)), np.ones((3, 4))) == 2.0)
    with pytest.raises(ShapeMismatch):
        fuse(h, np.zeros((2, 2)))


@pytest.mark.parametrize("variant", VARIANTS)
def test_zero_gnn_weights_recover_sequence_states(variant):
    p = init_params(VOCAB, LABELS, d=4, variant=variant, seed=8)
    for name in p.gnn_names():
        p.tensors[name][...] = 0.0
    tokens = ["a", "c", "e", "b"]
    h, yhat, y = encode(tokens, _path(4), p)
    assert np.array_equal(y, h)
    assert np.array_equal(h, sequence_encode(tokens, p))


@pytest.mark.parametrize("variant", VARIANTS)
def test_gnn_permutation_equivariance(variant):
    sg = _path(4, [(0, 3, "ARG0"), (2, 0, "ARG0")])
    p = init_params(VOCAB, LABELS, d=4, variant=variant, seed=9)
    h = np.random.default_rng(2).normal(size=(4, 4))
    perm = [2, 0, 3, 1]  # old i -> new perm[i]
    hp = np.zeros_like(h)
    hp[perm] = h
    out = gnn_forward(sg, h, p)
    np.testing.assert_allclose(gnn_forward(sg.permute(perm), hp, p)[perm], out, atol=1e-12)


@pytest.mark.parametrize("variant", VARIANTS)
def test_gradient_check(variant):
    params, batch = _check_fixture(variant, 4, 3, seed=0)
    assert gradient_check(params, batch) < 1e-4


def test_params_json_round_trip(tmp_path):
    p = init_params(VOCAB, LABELS, d=4, variant="GAT", seed=1)
    q = EncoderParams.from_json(p.to_json())
    assert q.vocab == p.vocab and q.labels == p.labels and q.variant == "GAT"
    for name in p.tensors:
        assert np.array_equal(p.tensors[name], q.tensors[name])
    bad = p.copy()
    bad.tensors["gnn.0.weight"] = np.zeros((3, 3))
    with pytest.raises(ShapeMismatch):
        EncoderParams.from_json(bad.to_json())


def test_errors():
    p = init_params(VOCAB, LABELS, d=4)
    with pytest.raises(EmptyInput):
        sequence_encode([], p)
    with pytest.raises(ShapeMismatch):
        gnn_forward(_path(3), np.zeros((2, 4)), p)
    with pytest.raises(ValueError):
        init_params(VOCAB, LABELS, variant="DeepGCN", layers=2)
