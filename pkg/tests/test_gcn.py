import numpy as np
import pytest

from invgraph import gcn
from invgraph.supply_net import adjacency, builtin_network

from gradcheck import check, rel_error


def test_normalize_single_node():
    assert gcn.normalize_adjacency(np.zeros((1, 1))).tolist() == [[1.0]]


def test_normalize_pair():
    assert np.allclose(gcn.normalize_adjacency(np.array([[0, 1], [1, 0]])), 0.5)


def test_normalize_net6_against_loops(net6):
    A = adjacency(net6).symmetric
    a_hat = gcn.normalize_adjacency(A)
    n = len(A)
    deg = [1 + sum(A[i][j] for j in range(n)) for i in range(n)]
    for i in range(n):
        for j in range(n):
            link = 1.0 if (i == j or A[i][j]) else 0.0
            assert a_hat[i, j] == pytest.approx(link / (deg[i] ** 0.5 * deg[j] ** 0.5))
    assert np.allclose(a_hat, a_hat.T) and np.all(a_hat >= 0)


@pytest.mark.parametrize("bad", [np.array([[0, 1], [0, 0]]), np.array([[1, 0], [0, 0]]), np.zeros((2, 3))])
def test_normalize_rejects(bad):
    with pytest.raises(ValueError):
        gcn.normalize_adjacency(bad)


def _stack(n, d, rng, a=None):
    if a is None:
        A = (rng.random((n, n)) < 0.3).astype(float)
        A = np.triu(A, 1)
        A = A + A.T
        a = gcn.normalize_adjacency(A)
    return gcn.GcnStack(a, d, rng=rng)


def test_zero_features(rng):
    s = _stack(5, 9, rng)
    assert np.all(gcn.gcn_forward(np.zeros((5, 9)), s)[0] == 0)


def test_single_node_is_mlp(rng):
    s = _stack(1, 9, rng, a=np.ones((1, 1)))
    x = rng.normal(size=(1, 9))
    h = x
    for w in s.params:
        h = np.maximum(h @ w, 0)
    assert np.allclose(gcn.gcn_forward(x, s)[0], h)


def test_shapes_and_errors(rng):
    s = _stack(6, 9, rng)
    assert [w.shape for w in s.params] == [(9, 64), (64, 64), (64, 32)]
    with pytest.raises(ValueError):
        gcn.gcn_forward(np.zeros((5, 9)), s)
    with pytest.raises(ValueError):
        gcn.global_mean_pool(np.zeros((0, 4)))


def test_pool_examples():
    assert gcn.global_mean_pool(np.array([[1.0, 2.0], [3.0, 4.0]])).tolist() == [2.0, 3.0]
    assert gcn.global_mean_pool(np.tile([5.0, 7.0], (4, 1))).tolist() == [5.0, 7.0]


def test_permutation_equivariance(rng):
    A = adjacency(builtin_network("net18")).symmetric
    a_hat = gcn.normalize_adjacency(A)
    s = gcn.GcnStack(a_hat, 9, rng=rng)
    for _ in range(10):
        P = np.eye(18)[rng.permutation(18)]
        X = rng.normal(size=(18, 9))
        H = gcn.gcn_forward(X, s)[0]
        Hp = gcn.gcn_forward(P @ X, s.with_adjacency(gcn.normalize_adjacency(P @ A @ P.T)))[0]
        assert np.allclose(Hp, P @ H)
        assert np.allclose(gcn.global_mean_pool(Hp), gcn.global_mean_pool(H))


def test_batched_forward(rng):
    s = _stack(6, 9, rng)
    X = rng.normal(size=(4, 6, 9))
    H = gcn.gcn_forward(X, s)[0]
    for b in range(4):
        assert np.allclose(H[b], gcn.gcn_forward(X[b], s)[0])


def test_pooled_gradients(rng):
    s = _stack(6, 9, rng)
    for _ in range(5):
        X = rng.normal(size=(3, 6, 9))
        w = rng.normal(size=(3, 32))

        def loss():
            return float(np.sum(w * gcn.global_mean_pool(gcn.gcn_forward(X, s)[0])))

        H, tape = gcn.gcn_forward(X, s)
        g_w, g_x = gcn.gcn_backward(s, tape, gcn.global_mean_pool_backward(w, 6))
        assert check(loss, s.params, g_w, rng, per_param=8) < 1e-4
        h = 1e-6
        idx = [tuple(rng.integers(0, d) for d in X.shape) for _ in range(10)]
        fd = []
        for i in idx:
            old = X[i]
            X[i] = old + h
            up = loss()
            X[i] = old - h
            down = loss()
            X[i] = old
            fd.append((up - down) / (2 * h))
        assert rel_error([g_x[i] for i in idx], fd) < 1e-4
