import numpy as np
import pytest

from invgraph.supply_net import NodeParams, SupplyNetwork, builtin_network


def make_node(i, downstream=(), **kw):
    base = dict(
        id=i, order_cost=1.0, price=5.0, max_inventory=100, max_order=100,
        initial_inventory=10, target_inventory=10, stock_cost=0.5, backlog_cost=2.5,
        downstream=tuple(downstream),
    )
    base.update(kw)
    return NodeParams(**base)


def toy_network(**kw):
    """One node buying from the unlimited source and selling to customers."""
    node = make_node(0, price=4.0, order_cost=1.0, stock_cost=0.5, backlog_cost=2.5,
                     max_inventory=20, max_order=20, initial_inventory=10)
    opts = dict(demand_rate=5.0, lead_rate=1.0, horizon=5, history=3, deterministic=True, name="toy")
    opts.update(kw)
    return SupplyNetwork(nodes=(node,), **opts)


def chain_network(**kw):
    nodes = (make_node(0, (1,)), make_node(1))
    opts = dict(demand_rate=5.0, lead_rate=2.0, horizon=10, history=3)
    opts.update(kw)
    return SupplyNetwork(nodes=nodes, **opts)


@pytest.fixture(scope="session")
def net6():
    return builtin_network("net6")


@pytest.fixture(scope="session")
def net12():
    return builtin_network("net12")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# criterion number -> PASS/FAIL line, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
