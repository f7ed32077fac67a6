"""Small dense networks with hand-written reverse mode and Adam.

Everything is float64. ``forward`` returns the output together with a tape
(the per-layer inputs and pre-activations) that ``backward`` consumes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ACTIVATIONS = ("relu", "tanh", "identity")
CHECKPOINT_VERSION = 1
HALF_LOG_2PI_E = 0.5 * np.log(2 * np.pi * np.e)
LOG_STD_BOUNDS = (-5.0, 1.0)


def _act(tag, z):
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "tanh":
        return np.tanh(z)
    return z


def _act_grad(tag, z, y, gy):
    if tag == "relu":
        return gy * (z > 0)
    if tag == "tanh":
        return gy * (1.0 - y * y)
    return gy


class DenseNet:
    """Stack of affine layers, each followed by an activation."""

    def __init__(self, sizes, activations, rng=None, out_scale=1.0):
        if len(activations) != len(sizes) - 1:
            raise ValueError("need one activation per layer")
        for a in activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        rng = np.random.default_rng(rng)
        self.sizes = tuple(int(s) for s in sizes)
        self.activations = tuple(activations)
        self.params: list[np.ndarray] = []
        for k, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            b = rng.uniform(-bound, bound, size=fan_out)
            if k == len(self.sizes) - 2:
                w *= out_scale
                b *= out_scale
            self.params += [w, b]

    @property
    def layers(self):
        return [
            (self.params[2 * k], self.params[2 * k + 1], self.activations[k])
            for k in range(len(self.activations))
        ]

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0]:
            raise ValueError(f"expected input width {self.sizes[0]}, got {x.shape[-1]}")
        if not np.all(np.isfinite(x)):
            raise FloatingPointError("non-finite network input")
        tape = []
        h = x
        for w, b, tag in self.layers:
            z = h @ w + b
            y = _act(tag, z)
            tape.append((h, z, y))
            h = y
        return h, tape

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, tape, gy):
        """Gradients of ``sum(gy * y)`` w.r.t. every parameter, plus the input gradient."""
        if len(tape) != len(self.activations):
            raise ValueError("tape does not belong to this network")
        gy = np.asarray(gy, dtype=float)
        if gy.shape != tape[-1][2].shape:
            raise ValueError(f"upstream gradient shape {gy.shape} != output {tape[-1][2].shape}")
        grads: list[np.ndarray] = [None] * len(self.params)
        g = gy
        for k in reversed(range(len(self.activations))):
            h, z, y = tape[k]
            gz = _act_grad(self.activations[k], z, y, g)
            w = self.params[2 * k]
            if h.ndim == 1:
                grads[2 * k] = np.outer(h, gz)
                grads[2 * k + 1] = gz.copy()
            else:
                h2 = h.reshape(-1, h.shape[-1])
                gz2 = gz.reshape(-1, gz.shape[-1])
                grads[2 * k] = h2.T @ gz2
                grads[2 * k + 1] = gz2.sum(axis=0)
            g = gz @ w.T
        return grads, g

    def copy(self) -> "DenseNet":
        other = DenseNet.__new__(DenseNet)
        other.sizes = self.sizes
        other.activations = self.activations
        other.params = [p.copy() for p in self.params]
        return other


class StackedDenseNet:
    """``K`` independent DenseNets of identical shape evaluated as one batch.

    Parameters carry a leading member axis: weights ``(K, in, out)`` and
    biases ``(K, out)``. Inputs are ``(K, in)`` or ``(K, B, in)``.
    """

    def __init__(self, sizes, activations, params):
        self.sizes = tuple(sizes)
        self.activations = tuple(activations)
        self.params = params

    @classmethod
    def stack(cls, nets) -> "StackedDenseNet":
        nets = list(nets)
        if not nets:
            raise ValueError("need at least one network")
        for n in nets[1:]:
            if n.sizes != nets[0].sizes or n.activations != nets[0].activations:
                raise ValueError("stacked networks must share an architecture")
        params = [np.stack([n.params[j] for n in nets]) for j in range(len(nets[0].params))]
        return cls(nets[0].sizes, nets[0].activations, params)

    def member(self, k: int) -> list[np.ndarray]:
        """Views of member ``k``'s parameters."""
        return [p[k] for p in self.params]

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 2
        if squeeze:
            x = x[:, None, :]
        if x.shape[0] != self.params[0].shape[0] or x.shape[-1] != self.sizes[0]:
            raise ValueError(f"input {x.shape} does not match stack of {self.params[0].shape[0]} x {self.sizes[0]}")
        tape = []
        h = x
        for k, tag in enumerate(self.activations):
            z = h @ self.params[2 * k] + self.params[2 * k + 1][:, None, :]
            y = _act(tag, z)
            tape.append((h, z, y))
            h = y
        return (h[:, 0] if squeeze else h), (tape, squeeze)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, tape, gy):
        tape, squeeze = tape
        g = np.asarray(gy, dtype=float)
        if squeeze:
            g = g[:, None, :]
        grads: list[np.ndarray] = [None] * len(self.params)
        for k in reversed(range(len(self.activations))):
            h, z, y = tape[k]
            gz = _act_grad(self.activations[k], z, y, g)
            grads[2 * k] = np.swapaxes(h, 1, 2) @ gz
            grads[2 * k + 1] = gz.sum(axis=1)
            g = gz @ np.swapaxes(self.params[2 * k], 1, 2)
        return grads, (g[:, 0] if squeeze else g)


@dataclass
class GaussianHead:
    """Diagonal Gaussian: tanh-bounded mean, state-independent log-std."""

    mean: np.ndarray
    log_std: np.ndarray

    @property
    def std(self):
        return np.exp(np.clip(self.log_std, *LOG_STD_BOUNDS))


def clamp_log_std(log_std):
    return np.clip(log_std, *LOG_STD_BOUNDS)


def gaussian_logprob(mean, log_std, action):
    """Log-density summed over the last axis."""
    ls = clamp_log_std(log_std)
    z = (np.asarray(action) - mean) * np.exp(-ls)
    return np.sum(-0.5 * z * z - ls - 0.5 * np.log(2 * np.pi), axis=-1)


def gaussian_entropy(log_std):
    return float(np.sum(HALF_LOG_2PI_E + clamp_log_std(log_std)))


def gaussian_logprob_entropy(head: GaussianHead, action):
    return gaussian_logprob(head.mean, head.log_std, action), gaussian_entropy(head.log_std)


def gaussian_logprob_grads(mean, log_std, action):
    """d logp / d mean and d logp / d log_std (per sample, before summing over dims)."""
    ls = clamp_log_std(log_std)
    inv_var = np.exp(-2 * ls)
    diff = np.asarray(action) - mean
    g_mean = diff * inv_var
    g_ls = diff * diff * inv_var - 1.0
    inside = (log_std > LOG_STD_BOUNDS[0]) & (log_std < LOG_STD_BOUNDS[1])
    return g_mean, g_ls * inside


def gaussian_kl(mean_old, log_std_old, mean_new, log_std_new):
    """KL(old || new) for diagonal Gaussians, summed over the last axis."""
    lo, ln = clamp_log_std(log_std_old), clamp_log_std(log_std_new)
    var_ratio = np.exp(2 * (lo - ln))
    t = (mean_old - mean_new) ** 2 * np.exp(-2 * ln)
    return np.sum(ln - lo + 0.5 * (var_ratio + t) - 0.5, axis=-1)


def gaussian_kl_grads(mean_old, log_std_old, mean_new, log_std_new):
    """Gradients of the per-sample KL(old || new) w.r.t. the new mean and log-std."""
    lo, ln = clamp_log_std(log_std_old), clamp_log_std(log_std_new)
    inv_var = np.exp(-2 * ln)
    diff = mean_new - mean_old
    g_mean = diff * inv_var
    g_ls = 1.0 - (np.exp(2 * lo) + diff * diff) * inv_var
    inside = (log_std_new > LOG_STD_BOUNDS[0]) & (log_std_new < LOG_STD_BOUNDS[1])
    return g_mean, g_ls * inside


@dataclass
class AdamState:
    """Moments are stored as flat vectors in parameter order."""

    lr: float = 1e-3
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rejected: int = 0
    _buf: np.ndarray | None = field(default=None, repr=False, compare=False)  # scratch, not saved

    @classmethod
    def for_params(cls, params, **kw) -> "AdamState":
        size = sum(p.size for p in params)
        return cls(m=np.zeros(size), v=np.zeros(size), **kw)


def adam_step(params, grads, state: AdamState):
    """In-place Adam update with decoupled weight decay.

    A gradient containing NaN or inf is rejected: parameters and moments stay
    untouched and ``state.rejected`` is incremented. Returns ``params``.
    """
    if len(params) != len(grads):
        raise ValueError("params and grads must align")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
    n = state.m.size
    if sum(g.size for g in grads) != n:
        raise ValueError("optimizer state does not match the parameter count")
    if state._buf is None or state._buf.shape != (2, n):
        state._buf = np.empty((2, n))
    g, tmp = state._buf
    np.concatenate([np.ravel(x) for x in grads], out=g)
    if not np.isfinite(g).all():
        state.rejected += 1
        return params
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    m, v = state.m, state.v
    m *= b1
    np.multiply(g, 1 - b1, out=tmp)
    m += tmp
    np.multiply(g, g, out=tmp)
    tmp *= 1 - b2
    v *= b2
    v += tmp
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    np.sqrt(v, out=tmp)
    tmp *= 1.0 / np.sqrt(c2)
    tmp += state.eps
    np.divide(m, tmp, out=tmp)
    tmp *= state.lr / c1
    decay = 1.0 - state.lr * state.weight_decay
    offset = 0
    for p in params:
        k = p.size
        if decay != 1.0:
            p *= decay
        p -= tmp[offset : offset + k].reshape(p.shape)
        offset += k
    return params


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write arrays plus JSON metadata to one ``.npz`` file."""
    meta = dict(meta or {})
    meta["checkpoint_version"] = CHECKPOINT_VERSION
    payload = {k: np.asarray(v) for k, v in arrays.items()}
    payload["__meta__"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(path, allow_pickle=False) as data:
        arrays = {k: data[k].copy() for k in data.files if k != "__meta__"}
        meta = json.loads(bytes(data["__meta__"]).decode())
    if meta.get("checkpoint_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {meta.get('checkpoint_version')}")
    return arrays, meta


def adam_arrays(prefix: str, state: AdamState) -> dict[str, np.ndarray]:
    return {
        f"{prefix}.adam.step": np.array(state.step),
        f"{prefix}.adam.rejected": np.array(state.rejected),
        f"{prefix}.adam.m": state.m,
        f"{prefix}.adam.v": state.v,
    }


def restore_adam(prefix: str, arrays: dict, state: AdamState) -> None:
    state.step = int(arrays[f"{prefix}.adam.step"])
    state.rejected = int(arrays[f"{prefix}.adam.rejected"])
    state.m[...] = arrays[f"{prefix}.adam.m"]
    state.v[...] = arrays[f"{prefix}.adam.v"]
