import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invgraph import supply_net as sn

HEADER = "node | order_cost | price | max_inventory | max_order | initial_inventory | target_inventory | stock_cost | backlog_cost | downstream\n"


def row(i, down="None", cost="1.0", price="5.0"):
    return f"{i} | {cost} | {price} | 100 | 100 | 100 | 10 | 0.5 | 2.5 | {down}\n"


def test_net6_values(net6):
    n0 = net6.nodes[0]
    assert (n0.order_cost, n0.price, n0.max_inventory, n0.max_order) == (0.5, 4.0, 100, 100)
    assert (n0.initial_inventory, n0.stock_cost, n0.backlog_cost, n0.downstream) == (100, 0.5, 2.5, (1, 2))
    assert net6.N == 6
    assert net6.retail_set == (3, 4, 5)
    assert [n.price for n in net6.nodes] == [4.0, 6.0, 6.0, 8.0, 8.0, 8.0]
    assert [n.order_cost for n in net6.nodes] == [0.5, 1.0, 1.0, 1.5, 1.5, 1.5]


def test_net6_edges(net6):
    assert set(net6.edges) == {(0, 1), (0, 2), (1, 3), (1, 4), (2, 4), (2, 5)}


def test_net12_edge_count(net12):
    # rows of the 12-node table list 2+2+2+2+1+2+0+0+0+1+1+0 links
    assert len(net12.edges) == 13
    assert net12.upstream[11] == (5, 9, 10)


@pytest.mark.parametrize("name,n", [("net6", 6), ("net12", 12), ("net18", 18), ("net24", 24)])
def test_shipped_sizes(name, n):
    net = sn.builtin_network(name)
    assert net.N == n
    assert net.demand_rate == 5 and net.lead_rate == 2 and net.horizon == 50 and net.history == 3
    for i in net.retail_set:
        assert net.nodes[i].downstream == ()
    adj = sn.adjacency(net)
    for i, node in enumerate(net.nodes):
        assert adj.directed[i].sum() == len(node.downstream)
    assert np.array_equal(adj.symmetric, np.maximum(adj.directed, adj.directed.T))
    assert np.all(np.diag(adj.symmetric) == 0)


def test_single_node():
    net = sn.load_network(HEADER + row(0))
    assert net.N == 1 and net.retail_set == (0,)
    adj = sn.adjacency(net)
    assert adj.directed.shape == (1, 1) and adj.directed.sum() == 0


def test_dangling_index():
    text = HEADER + row(0, "1, 2") + row(1, "9") + row(2) + row(3) + row(4) + row(5)
    with pytest.raises(sn.DanglingEdgeError):
        sn.load_network(text)


def test_self_loop():
    with pytest.raises(sn.DanglingEdgeError):
        sn.load_network(HEADER + row(0, "0"))


def test_cycle():
    with pytest.raises(sn.CycleError):
        sn.load_network(HEADER + row(0, "1") + row(1, "2") + row(2, "0"))


def test_negative_cost():
    with pytest.raises(sn.NegativeCostError):
        sn.load_network(HEADER + row(0, cost="-1"))


@pytest.mark.parametrize(
    "text",
    [
        "",
        "demand_rate = 5\n",
        "node | price\n0 | 1\n",
        HEADER + "0 | 1 | 2\n",
        HEADER + row(0).replace("1.0", "abc", 1),
        "bogus = 1\n" + HEADER + row(0),
        HEADER + row(1),
    ],
)
def test_parse_errors(text):
    with pytest.raises(sn.NetworkParseError):
        sn.load_network(text)


def test_errors_are_distinct():
    kinds = {sn.NetworkParseError, sn.DanglingEdgeError, sn.CycleError, sn.NegativeCostError}
    assert len(kinds) == 4
    assert all(issubclass(k, sn.NetworkError) for k in kinds)


def test_header_overrides():
    text = "demand_rate = 3\nlead_rate = 1.5\nhorizon = 7\nhistory = 2\ndeterministic = yes\n" + HEADER + row(0)
    net = sn.load_network(text)
    assert (net.demand_rate, net.lead_rate, net.horizon, net.history, net.deterministic) == (3.0, 1.5, 7, 2, True)


@pytest.mark.parametrize("name", sn.SHIPPED)
def test_roundtrip_shipped(name):
    net = sn.builtin_network(name)
    back = sn.load_network(sn.serialize(net), name=name)
    assert back.nodes == net.nodes and back.edges == net.edges
    assert back.demand_rate == net.demand_rate and back.lead_rate == net.lead_rate


@st.composite
def dags(draw):
    n = draw(st.integers(1, 8))
    nodes = []
    for i in range(n):
        down = draw(st.lists(st.integers(i + 1, n - 1), unique=True, max_size=3)) if i < n - 1 else []
        nodes.append(
            sn.NodeParams(
                id=i,
                order_cost=draw(st.floats(0, 10)),
                price=draw(st.floats(0, 20)),
                max_inventory=100,
                max_order=draw(st.integers(0, 100)),
                initial_inventory=draw(st.integers(0, 100)),
                target_inventory=10,
                stock_cost=draw(st.floats(0, 3)),
                backlog_cost=draw(st.floats(0, 3)),
                downstream=tuple(sorted(down)),
            )
        )
    return sn.SupplyNetwork(nodes=tuple(nodes), demand_rate=draw(st.floats(0, 9)))


@settings(max_examples=50)
@given(dags())
def test_roundtrip_random(net):
    back = sn.load_network(sn.serialize(net))
    assert back.nodes == net.nodes
    assert back.edges == net.edges
    assert back.demand_rate == net.demand_rate


def test_resolve_network(tmp_path, net6):
    p = tmp_path / "mine.txt"
    p.write_text(sn.serialize(net6))
    assert sn.resolve_network(p).nodes == net6.nodes
    assert sn.resolve_network("net6").nodes == net6.nodes
    with pytest.raises(KeyError):
        sn.builtin_network("net7")


def test_replace_keeps_nodes(net6):
    other = net6.replace(demand_rate=3.0)
    assert other.demand_rate == 3.0 and other.nodes == net6.nodes
    assert other.upstream == net6.upstream
