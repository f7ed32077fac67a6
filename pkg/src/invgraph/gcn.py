"""Three-layer graph convolution stack and global mean pooling.

Each layer computes ``relu(A_hat @ H @ W)`` with the renormalised operator
``A_hat = D^-1/2 (A + I) D^-1/2``; there are no biases. Node features may
carry leading batch axes: ``X`` of shape ``(..., N, D)``.
"""
from __future__ import annotations

import numpy as np


def normalize_adjacency(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.array_equal(A, A.T):
        raise ValueError("adjacency must be symmetric; symmetrise the directed graph first")
    if np.any(np.diag(A) != 0):
        raise ValueError("adjacency must have a zero diagonal; self-loops are added here")
    a_tilde = A + np.eye(len(A))
    d_inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return d_inv_sqrt[:, None] * a_tilde * d_inv_sqrt[None, :]


class GcnStack:
    def __init__(self, a_hat, in_dim, hidden=(64, 64), out_dim=32, rng=None):
        rng = np.random.default_rng(rng)
        self.a_hat = np.asarray(a_hat, dtype=float)
        self.sizes = (int(in_dim), *map(int, hidden), int(out_dim))
        self.params = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            self.params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def with_adjacency(self, a_hat) -> "GcnStack":
        """Same weights, different graph."""
        other = self.copy()
        other.a_hat = np.asarray(a_hat, dtype=float)
        return other

    def copy(self) -> "GcnStack":
        other = GcnStack.__new__(GcnStack)
        other.a_hat = self.a_hat
        other.sizes = self.sizes
        other.params = [w.copy() for w in self.params]
        return other


def gcn_forward(X, stack: GcnStack):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != stack.sizes[0] or X.shape[-2] != stack.a_hat.shape[0]:
        raise ValueError(
            f"features {X.shape} do not match graph of {stack.a_hat.shape[0]} nodes "
            f"with input width {stack.sizes[0]}"
        )
    tape = []
    h = X
    for w in stack.params:
        m = stack.a_hat @ h
        z = m @ w
        h = np.maximum(z, 0.0)
        tape.append((m, z))
    return h, tape


def gcn_backward(stack: GcnStack, tape, g_out):
    """Returns (weight gradients, gradient w.r.t. X)."""
    grads = [None] * len(stack.params)
    g = np.asarray(g_out, dtype=float)
    a_t = stack.a_hat.T
    for k in reversed(range(len(stack.params))):
        m, z = tape[k]
        gz = g * (z > 0)
        w = stack.params[k]
        grads[k] = m.reshape(-1, m.shape[-1]).T @ gz.reshape(-1, gz.shape[-1])
        g = a_t @ (gz @ w.T)
    return grads, g


def global_mean_pool(H) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim < 2 or H.shape[-2] == 0:
        raise ValueError("cannot pool an empty node set")
    return H.mean(axis=-2)


def global_mean_pool_backward(g_pooled, n_nodes: int) -> np.ndarray:
    g = np.asarray(g_pooled, dtype=float)
    return np.repeat(g[..., None, :] / n_nodes, n_nodes, axis=-2)
