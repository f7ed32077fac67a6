"""Per-agent actors that emit a dynamic (s, S) pair and turn it into an order."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import DenseNet, GaussianHead, StackedDenseNet, clamp_log_std, gaussian_logprob

ACTOR_HIDDEN = (128, 128, 128)


@dataclass(frozen=True)
class ActionBounds:
    s_min: float
    s_max: float
    S_min: float
    S_max: float

    def __post_init__(self):
        if not (0 <= self.s_min < self.s_max and 0 <= self.S_min < self.S_max):
            raise ValueError(f"invalid action bounds {self}")

    @classmethod
    def for_node(cls, node) -> "ActionBounds":
        return cls(0.0, float(node.max_inventory), 0.0, float(node.max_inventory))


@dataclass
class RawAction:
    sample: np.ndarray  # unclipped Gaussian draw, (..., 2)
    clipped: np.ndarray  # sample clipped to [-1, 1]
    logp: np.ndarray  # log-density of the unclipped draw


class Actor:
    """MLP with a tanh-bounded 2-d mean and a learned, state-independent log-std."""

    def __init__(self, obs_dim: int, hidden=ACTOR_HIDDEN, init_log_std=-0.5, rng=None):
        sizes = (obs_dim, *hidden, 2)
        acts = ("relu",) * len(hidden) + ("tanh",)
        self.net = DenseNet(sizes, acts, rng=rng, out_scale=0.01)
        self.log_std = np.full(2, float(init_log_std))

    @property
    def params(self) -> list[np.ndarray]:
        return self.net.params + [self.log_std]

    def head(self, obs) -> GaussianHead:
        mean = self.net(obs)
        if not np.all(np.isfinite(mean)):
            raise FloatingPointError("actor produced a non-finite mean")
        return GaussianHead(mean=mean, log_std=self.log_std.copy())

    def copy(self) -> "Actor":
        other = Actor.__new__(Actor)
        other.net = self.net.copy()
        other.log_std = self.log_std.copy()
        return other


class ActorGroup:
    """All agents' actors packed into stacked arrays.

    Each member ``Actor`` is rebound to views of the stacked parameters, so
    in-place updates to the group are visible through the individual actors
    and the other way round.
    """

    def __init__(self, actors: list[Actor]):
        self.actors = list(actors)
        self.net = StackedDenseNet.stack([a.net for a in self.actors])
        self.log_std = np.stack([a.log_std for a in self.actors])
        for i, a in enumerate(self.actors):
            a.net.params = self.net.member(i)
            a.log_std = self.log_std[i]

    @property
    def params(self) -> list[np.ndarray]:
        return self.net.params + [self.log_std]

    def __len__(self):
        return len(self.actors)


def stacked_means(actors, obs) -> np.ndarray:
    """Actor means for per-agent inputs ``obs`` of shape (N, ..., D)."""
    net = actors.net if isinstance(actors, ActorGroup) else StackedDenseNet.stack([a.net for a in actors])
    return net(obs)


def act(actor: Actor, obs, rng: np.random.Generator) -> RawAction:
    head = actor.head(obs)
    std = np.exp(clamp_log_std(head.log_std))
    sample = head.mean + std * rng.standard_normal(head.mean.shape)
    return RawAction(
        sample=sample,
        clipped=np.clip(sample, -1.0, 1.0),
        logp=gaussian_logprob(head.mean, head.log_std, sample),
    )


def act_deterministic(actor: Actor, obs) -> np.ndarray:
    """Mode of the action density (the tanh mean)."""
    return actor.head(obs).mean


def scale(x_raw, lo, hi):
    """Min-max map from [-1, 1] onto [lo, hi]."""
    if np.any(np.asarray(lo) >= np.asarray(hi)):
        raise ValueError("scale needs lo < hi")
    return (np.asarray(x_raw) + 1.0) / 2.0 * (np.asarray(hi) - np.asarray(lo)) + lo


def order_from_ss(s_level, S_level, v, max_order):
    """Order up to S when on-hand stock is at or below s; vectorised over nodes."""
    s_level, S_level, v = np.broadcast_arrays(
        np.asarray(s_level, float), np.asarray(S_level, float), np.asarray(v, float)
    )
    qty = np.clip(np.rint(S_level - v), 0, max_order)
    out = np.where(v <= s_level, qty, 0).astype(np.int64)
    return out if out.ndim else int(out)


def orders_from_actions(raw: np.ndarray, v, bounds, max_order) -> np.ndarray:
    """Joint orders from raw actions of shape (N, 2), clipped to [-1, 1] first.

    ``bounds`` is a list of :class:`ActionBounds` or the ``(lo, hi)`` pair
    returned by :func:`bounds_arrays`.
    """
    raw = np.clip(np.asarray(raw, float), -1.0, 1.0)
    lo, hi = bounds if isinstance(bounds, tuple) else bounds_arrays(bounds)
    levels = (raw + 1.0) / 2.0 * (hi - lo) + lo
    s, S = levels[..., 0], levels[..., 1]
    v = np.asarray(v, float)
    qty = np.clip(np.rint(S - v), 0, max_order)
    return np.where(v <= s, qty, 0).astype(np.int64)


def bounds_arrays(bounds: list[ActionBounds]) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper scaling limits as (N, 2) arrays, columns (s, S)."""
    lo = np.array([[b.s_min, b.S_min] for b in bounds])
    hi = np.array([[b.s_max, b.S_max] for b in bounds])
    return lo, hi


def probe(actor: Actor, obs_normalized, bounds: ActionBounds, v: float, max_order: int) -> dict:
    """(s, S) readout and the resulting order for one observation, at the density mode."""
    mean = act_deterministic(actor, obs_normalized)
    s = float(scale(mean[0], bounds.s_min, bounds.s_max))
    S = float(scale(mean[1], bounds.S_min, bounds.S_max))
    return {
        "s_raw": float(mean[0]),
        "S_raw": float(mean[1]),
        "s": s,
        "S": S,
        "std": np.exp(clamp_log_std(actor.log_std)).tolist(),
        "order": int(order_from_ss(s, S, v, max_order)),
    }
