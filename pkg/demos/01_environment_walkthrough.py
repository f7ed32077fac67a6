"""Walk through a few periods of the six-node network by hand.

Every node follows a fixed (s, S) rule here (one found by ``invgraph
baseline``), so the printout shows the raw mechanics: arrivals, shipments,
backlog and the per-node reward.
"""
import numpy as np

from invgraph import env
from invgraph.baseline import StaticPolicy, static_order_fn
from invgraph.supply_net import adjacency, builtin_network

net = builtin_network("net6")
print(f"{net.name}: {net.N} nodes, retail nodes {net.arrays.retail.tolist()}, sources {net.arrays.source.tolist()}")
print("adjacency (upstream -> downstream):")
print(adjacency(net).directed.astype(int))

policy = StaticPolicy(s=(95, 46, 33, 7, 85, 45), S=(100, 49, 36, 27, 98, 51))
order_fn = static_order_fn(policy, net)

state, obs = env.reset(net, seed=0)
print("\nobservation columns: v, b, p, demand history (3), order history (3)")
print(obs)

for _ in range(5):
    t = state.t
    res = env.step(state, net, order_fn(state, obs))
    obs = res.observations
    info = res.info
    print(f"\nperiod {t}: customer demand {info['customer_demand'].tolist()}, lead times {info['lead_times'].tolist()}")
    for i in range(net.N):
        print(
            f"  node {i}: ordered {info['orders'][i]:3d}  arrived {info['arrivals'][i]:3d}  "
            f"shipped {info['fulfilled'][i]:3d}  on hand {state.v[i]:3d}  backlog {state.total_backlog[i]:3d}  "
            f"reward {info['node_reward'][i]:8.2f}"
        )
    print(f"  team reward {res.team_reward:.2f}")

# a full episode under the same rule
run = env.run_episode(net, order_fn, seed=0)
print(f"\n50-period profit {run.profit:.1f}, mean total backlog {run.backlog.sum(axis=1).mean():.1f}")
print(f"mean on-hand stock per node {np.round(run.inventory.mean(axis=0), 1).tolist()}")
