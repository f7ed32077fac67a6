"""Static (s, S) benchmark tuned by multi-start coordinate search.

Each node keeps a constant reorder point ``s`` and order-up-to level ``S``.
The search objective is the mean profit over a fixed set of seeds, so every
candidate sees the same demand and lead-time draws.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import env as envmod
from .policy import order_from_ss
from .supply_net import SupplyNetwork

STEP_SIZES = (16, 8, 4, 2, 1)


@dataclass(frozen=True)
class StaticPolicy:
    s: tuple[int, ...]
    S: tuple[int, ...]

    def __post_init__(self):
        if len(self.s) != len(self.S):
            raise ValueError("s and S must have one entry per node")

    @property
    def N(self) -> int:
        return len(self.s)

    def check(self, net: SupplyNetwork) -> None:
        if self.N != net.N:
            raise ValueError(f"policy has {self.N} nodes, network has {net.N}")
        for i, node in enumerate(net.nodes):
            if not 0 <= self.s[i] <= self.S[i] <= node.max_inventory:
                raise ValueError(f"node {i}: need 0 <= s <= S <= {node.max_inventory}, got ({self.s[i]}, {self.S[i]})")

    def as_vector(self) -> tuple[int, ...]:
        return tuple(x for pair in zip(self.s, self.S) for x in pair)

    @classmethod
    def from_vector(cls, vec) -> "StaticPolicy":
        vec = [int(x) for x in vec]
        return cls(tuple(vec[0::2]), tuple(vec[1::2]))


@dataclass
class SearchResult:
    policy: StaticPolicy
    profit: float
    evaluations: int
    truncated: bool
    trace: list[float] = field(default_factory=list)  # objective after each accepted move
    start_traces: list[list[float]] = field(default_factory=list)


def episode_seeds(seed: int, episodes: int) -> list[int]:
    return [int(seed) + k for k in range(episodes)]


def simulate_static(policy: StaticPolicy, net: SupplyNetwork, episodes: int = 20, horizon=None, seed: int = 0) -> float:
    """Mean cumulative profit of a constant (s, S) policy over ``episodes`` seeds ``seed + k``."""
    policy.check(net)
    if horizon is not None and horizon != net.horizon:
        net = net.replace(horizon=int(horizon))
    order_fn = static_order_fn(policy, net)
    profits = [envmod.run_episode(net, order_fn, sd).profit for sd in episode_seeds(seed, episodes)]
    return float(np.mean(profits))


class _Budget:
    def __init__(self, total):
        self.left = int(total)
        self.used = 0

    def take(self) -> bool:
        if self.left <= 0:
            return False
        self.left -= 1
        self.used += 1
        return True


def _feasible(vec, vmax) -> bool:
    s, S = vec[0::2], vec[1::2]
    return all(0 <= a <= b <= m for a, b, m in zip(s, S, vmax))


def _local_search(x0, objective, vmax, budget: _Budget):
    """Coordinate descent with shrinking steps; only strict improvements are accepted."""
    x = list(x0)
    if not budget.take():
        return tuple(x), -np.inf, [], True
    fx = objective(x)
    trace = [fx]
    for step in STEP_SIZES:
        improved = True
        while improved:
            improved = False
            for c in range(len(x)):
                for delta in (step, -step):
                    cand = list(x)
                    cand[c] += delta
                    if not _feasible(cand, vmax):
                        continue
                    if not budget.take():
                        return tuple(x), fx, trace, True
                    fc = objective(cand)
                    if fc > fx:
                        x, fx = cand, fc
                        trace.append(fx)
                        improved = True
                        break
    return tuple(x), fx, trace, False


def _random_start(rng, vmax) -> list[int]:
    vec = []
    for m in vmax:
        a, b = sorted(int(v) for v in rng.integers(0, m + 1, size=2))
        vec += [a, b]
    return vec


def optimize_static(
    net: SupplyNetwork,
    n_starts: int = 20,
    budget: int = 5000,
    seed: int = 0,
    episodes: int = 20,
    eval_seed: int | None = None,
) -> SearchResult:
    """Best static policy over ``n_starts`` random starts sharing one evaluation budget.

    The budget is split evenly across starts. If any start runs out before its
    search converges the result carries ``truncated=True``. Ties between starts
    go to the lexicographically smallest policy vector.
    """
    if n_starts < 1:
        raise ValueError("need at least one start")
    if budget < n_starts:
        raise ValueError("budget must allow at least one evaluation per start")
    vmax = [n.max_inventory for n in net.nodes]
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 6]))
    eval_seed = int(seed) if eval_seed is None else int(eval_seed)
    cache: dict[tuple, float] = {}

    def objective(vec):
        key = tuple(vec)
        if key not in cache:
            cache[key] = simulate_static(StaticPolicy.from_vector(key), net, episodes, seed=eval_seed)
        return cache[key]

    shares = [budget // n_starts + (1 if k < budget % n_starts else 0) for k in range(n_starts)]
    best = None
    truncated = False
    used = 0
    traces = []
    for k in range(n_starts):
        b = _Budget(shares[k])
        x, fx, trace, cut = _local_search(_random_start(rng, vmax), objective, vmax, b)
        used += b.used
        truncated |= cut
        traces.append(trace)
        if best is None or fx > best[1] or (fx == best[1] and x < best[0]):
            best = (x, fx, trace)
    return SearchResult(
        policy=StaticPolicy.from_vector(best[0]),
        profit=float(best[1]),
        evaluations=used,
        truncated=truncated,
        trace=best[2],
        start_traces=traces,
    )


def static_order_fn(policy: StaticPolicy, net: SupplyNetwork):
    s = np.array(policy.s, dtype=float)
    S = np.array(policy.S, dtype=float)
    o_max = np.array([n.max_order for n in net.nodes])
    return lambda state, obs: order_from_ss(s, S, state.v, o_max)


def evaluate_static(policy: StaticPolicy, net: SupplyNetwork, seeds, record_traces=False) -> dict:
    """Same statistics as the learned-policy evaluation, for a static policy."""
    from .marl import episode_stats

    policy.check(net)
    runs = [envmod.run_episode(net, static_order_fn(policy, net), sd, record_trace=record_traces) for sd in seeds]
    stats = episode_stats(
        [r.profit for r in runs],
        [r.backlog.sum(axis=1) for r in runs],
        [r.inventory.sum(axis=1) for r in runs],
    )
    stats["profits"] = [r.profit for r in runs]
    if record_traces:
        stats["traces"] = [r.trace for r in runs]
    return stats


def save_policy(path, policy: StaticPolicy, **extra) -> None:
    payload = {"kind": "static_ss", "s": list(policy.s), "S": list(policy.S), **extra}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def load_policy(path) -> StaticPolicy:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("kind") != "static_ss":
        raise ValueError(f"{path} is not a static (s, S) policy file")
    return StaticPolicy(tuple(payload["s"]), tuple(payload["S"]))
