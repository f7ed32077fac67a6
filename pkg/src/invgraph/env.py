"""Periodic-review multi-echelon inventory simulator.

One call to :func:`step` advances every node by one period. Within a period
the events happen in a fixed order:

1. arrivals: shipments whose ``arrive_at`` equals the current step are added
   to on-hand stock;
2. demand: retail nodes draw Poisson customer demand, every other edge sees
   the downstream node's replenishment order as demand;
3. shipping: each node ships at most ``backlog + demand`` per edge and at most
   ``on-hand + arrivals`` in total; shortfalls are split proportionally
   (largest remainder, ties to the lower index);
4. ledger: inventory and backlog are updated and shipped goods enter the
   pipeline with a Poisson lead time of at least one period;
5. capacity: stock above ``max_inventory`` is discarded and logged;
6. reward: ``sum(price * shipped - order_cost * ordered - stock_cost * v - backlog_cost * b)``.

Random draws per period are action independent: ``rng.poisson(demand_rate,
size=len(retail_set))`` followed by ``rng.poisson(lead_rate, size=N)`` (one
lead time per destination node). Two policies run on the same seed therefore
face identical demand and lead-time sequences.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .supply_net import SupplyNetwork

LEDGER_KEYS = ("revenue", "order_cost", "holding_cost", "backlog_cost", "fulfilled", "lost")
TRACE_COLUMNS = (
    "t", "node", "v", "b", "q", "g", "o_r", "demand", "lost",
    "revenue", "order_cost", "holding_cost", "backlog_cost", "reward",
)


class EpisodeDone(RuntimeError):
    pass


@dataclass
class Shipment:
    dest: int
    qty: int
    arrive_at: int


@dataclass
class EnvState:
    t: int
    v: np.ndarray  # (N,) on-hand units
    backlog: np.ndarray  # (N, N + 1); column N is the external customer
    pipeline: list[Shipment]
    demand_hist: np.ndarray  # (N, M), most recent first
    order_hist: np.ndarray  # (N, M), most recent first
    rng: np.random.Generator
    done: bool = False

    @property
    def total_backlog(self) -> np.ndarray:
        return self.backlog.sum(axis=1)


@dataclass
class StepResult:
    observations: np.ndarray  # (N, 3 + 2M) raw units
    team_reward: float
    done: bool
    info: dict = field(default_factory=dict)


def sample_poisson(rng: np.random.Generator, lam, size=None):
    """Standard Poisson draw, pmf ``exp(-lam) lam**k / k!``."""
    if np.any(np.asarray(lam) < 0):
        raise ValueError(f"Poisson rate must be non-negative, got {lam}")
    return rng.poisson(lam, size=size)


def poisson_pmf(k, lam: float) -> np.ndarray:
    from scipy.special import gammaln

    k = np.asarray(k, dtype=float)
    if lam == 0:
        return (k == 0).astype(float)
    return np.exp(k * np.log(lam) - lam - gammaln(k + 1))


def obs_dim(history: int) -> int:
    return 3 + 2 * history


def reset(net: SupplyNetwork, seed) -> tuple[EnvState, np.ndarray]:
    n, m = net.N, net.history
    state = EnvState(
        t=0,
        v=np.array([node.initial_inventory for node in net.nodes], dtype=np.int64),
        backlog=np.zeros((n, n + 1), dtype=np.int64),
        pipeline=[],
        demand_hist=np.zeros((n, m), dtype=np.int64),
        order_hist=np.zeros((n, m), dtype=np.int64),
        rng=np.random.default_rng(seed),
    )
    return state, observe_all(state, net)


def pipeline_inventory(state: EnvState, net: SupplyNetwork) -> np.ndarray:
    """In-transit units per destination plus upstream backlog still owed to it."""
    p = state.backlog[:, : net.N].sum(axis=0)
    for s in state.pipeline:
        p[s.dest] += s.qty
    return p


def observe(state: EnvState, net: SupplyNetwork, i: int) -> np.ndarray:
    return observe_all(state, net)[i]


def observe_all(state: EnvState, net: SupplyNetwork) -> np.ndarray:
    n, m = net.N, net.history
    out = np.empty((n, 3 + 2 * m))
    out[:, 0] = state.v
    out[:, 1] = state.backlog.sum(axis=1)
    out[:, 2] = pipeline_inventory(state, net)
    out[:, 3 : 3 + m] = state.demand_hist
    out[:, 3 + m :] = state.order_hist
    return out


def global_state(observations: np.ndarray) -> np.ndarray:
    """Concatenate per-agent observations in node order; works on leading batch axes."""
    obs = np.asarray(observations)
    return obs.reshape(obs.shape[:-2] + (obs.shape[-2] * obs.shape[-1],))


def obs_scale(net: SupplyNetwork) -> np.ndarray:
    """Per-node divisor mapping raw observations to network inputs, shape (N, D)."""
    m = net.history
    vmax = np.maximum(net.array("max_inventory"), 1.0)[:, None]
    dscale = 2.0 * net.demand_rate if net.demand_rate > 0 else 1.0
    inv_like = np.repeat(vmax, 3, axis=1)
    return np.concatenate(
        [inv_like, np.full((net.N, m), dscale), np.repeat(vmax, m, axis=1)], axis=1
    )


def normalize(observations: np.ndarray, net: SupplyNetwork) -> np.ndarray:
    return observations / obs_scale(net)


def allocate(available: int, need: np.ndarray) -> np.ndarray:
    """Split ``available`` units over edges with requirement ``need``.

    Everything is shipped when stock suffices. Otherwise each edge gets the
    floor of its proportional share and leftover units go to the largest
    fractional remainders, ties to the lower index. Exact integer arithmetic.
    """
    need = np.asarray(need, dtype=np.int64)
    total = int(need.sum())
    if total <= available:
        return need.copy()
    if available <= 0:
        return np.zeros_like(need)
    scaled = available * need
    ship = scaled // total
    rem = scaled - ship * total
    left = available - int(ship.sum())
    # stable sort keeps lower index first among equal remainders
    order = np.argsort(-rem, kind="stable")
    ship[order[:left]] += 1
    return ship


def step(state: EnvState, net: SupplyNetwork, joint_orders) -> StepResult:
    if state.done:
        raise EpisodeDone("step() called on a finished episode; call reset()")
    n = net.N
    t = state.t
    A = net.arrays
    orders = np.clip(np.rint(np.asarray(joint_orders, dtype=float)), 0, A.omax).astype(np.int64)

    if net.deterministic:
        customer = np.full(len(A.retail), int(round(net.demand_rate)), dtype=np.int64)
        lead = np.full(n, max(1, int(round(net.lead_rate))), dtype=np.int64)
    else:
        customer = state.rng.poisson(net.demand_rate, size=len(A.retail))
        lead = np.maximum(1, state.rng.poisson(net.lead_rate, size=n))

    # 1. arrivals
    q = np.zeros(n, dtype=np.int64)
    in_transit = []
    for s in state.pipeline:
        if s.arrive_at == t:
            q[s.dest] += s.qty
        else:
            in_transit.append(s)

    # 2. demand per edge
    d = np.zeros((n, n + 1), dtype=np.int64)
    d[A.src, A.dst] = orders[A.dst]
    d[A.retail, n] = customer

    # 3. shipping
    available = state.v + q
    need = state.backlog + d
    g = need.copy()
    for i in np.nonzero(need.sum(axis=1) > available)[0]:
        g[i] = allocate(int(available[i]), need[i])
    shipped = g.sum(axis=1)

    # 4. ledger
    v = available - shipped
    backlog = need - g
    g_edge = g[A.src, A.dst]
    for k in np.nonzero(g_edge)[0]:
        j = int(A.dst[k])
        in_transit.append(Shipment(j, int(g_edge[k]), t + int(lead[j])))
    for i in A.source:
        if orders[i] > 0:
            in_transit.append(Shipment(int(i), int(orders[i]), t + int(lead[i])))

    # 5. capacity
    lost = np.maximum(v - A.vmax, 0)
    v = v - lost

    # 6. reward
    b_tot = backlog.sum(axis=1)
    revenue = A.price * shipped
    order_cost = A.order_cost * orders
    holding = A.stock_cost * v
    backlog_cost = A.backlog_cost * b_tot
    node_reward = revenue - order_cost - holding - backlog_cost

    state.v = v
    state.backlog = backlog
    state.pipeline = in_transit
    dh = state.demand_hist
    dh[:, 1:] = dh[:, :-1].copy()
    dh[:, 0] = d.sum(axis=1)
    oh = state.order_hist
    oh[:, 1:] = oh[:, :-1].copy()
    oh[:, 0] = orders
    state.t = t + 1
    state.done = state.t >= net.horizon

    info = {
        "revenue": revenue,
        "order_cost": order_cost,
        "holding_cost": holding,
        "backlog_cost": backlog_cost,
        "fulfilled": shipped,
        "lost": lost,
        "arrivals": q,
        "orders": orders,
        "demand": d.sum(axis=1),
        "customer_demand": customer,
        "lead_times": lead,
        "node_reward": node_reward,
    }
    return StepResult(
        observations=observe_all(state, net),
        team_reward=float(node_reward.sum()),
        done=state.done,
        info=info,
    )


def trace_rows(t: int, state: EnvState, result: StepResult) -> list[dict]:
    """One row per node for the period just simulated (``t`` is its index)."""
    info = result.info
    rows = []
    for i in range(len(state.v)):
        rows.append(
            {
                "t": t,
                "node": i,
                "v": int(state.v[i]),
                "b": int(state.total_backlog[i]),
                "q": int(info["arrivals"][i]),
                "g": int(info["fulfilled"][i]),
                "o_r": int(info["orders"][i]),
                "demand": int(info["demand"][i]),
                "lost": int(info["lost"][i]),
                "revenue": float(info["revenue"][i]),
                "order_cost": float(info["order_cost"][i]),
                "holding_cost": float(info["holding_cost"][i]),
                "backlog_cost": float(info["backlog_cost"][i]),
                "reward": float(info["node_reward"][i]),
            }
        )
    return rows


def write_trace(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def read_trace(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {k: (float(v) if k in LEDGER_KEYS[:4] or k == "reward" else int(v)) for k, v in r.items()}
            for r in csv.DictReader(fh)
        ]


@dataclass
class EpisodeSummary:
    profit: float
    rewards: np.ndarray  # (T,)
    backlog: np.ndarray  # (T, N) end-of-period totals
    inventory: np.ndarray  # (T, N)
    trace: list[dict] | None = None


def run_episode(
    net: SupplyNetwork,
    order_fn: Callable[[EnvState, np.ndarray], np.ndarray],
    seed,
    record_trace: bool = False,
) -> EpisodeSummary:
    """Roll one full-horizon episode; ``order_fn(state, obs)`` returns per-node orders."""
    state, obs = reset(net, seed)
    rewards, backlog, inventory, trace = [], [], [], []
    while not state.done:
        t = state.t
        res = step(state, net, order_fn(state, obs))
        obs = res.observations
        rewards.append(res.team_reward)
        backlog.append(state.total_backlog.copy())
        inventory.append(state.v.copy())
        if record_trace:
            trace.extend(trace_rows(t, state, res))
    rewards = np.array(rewards)
    return EpisodeSummary(
        profit=float(rewards.sum()),
        rewards=rewards,
        backlog=np.array(backlog),
        inventory=np.array(inventory),
        trace=trace if record_trace else None,
    )
