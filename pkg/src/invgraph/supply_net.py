"""Supply-chain graph: node economics, downstream links and adjacency.

Network files are plain text. A header block of ``key = value`` lines sets
the scenario (``demand_rate``, ``lead_rate``, ``horizon``, ``history`` and the
optional ``deterministic`` flag), followed by a ``|``-separated table with one
row per node::

    node | order_cost | price | max_inventory | max_order | initial_inventory | target_inventory | stock_cost | backlog_cost | downstream
    0    | 0.5        | 4.0   | 100           | 100       | 100               | 10               | 0.5        | 2.5          | 1, 2
    3    | 1.5        | 8.0   | 100           | 100       | 100               | 10               | 0.5        | 2.5          | None

Lines starting with ``#`` are comments.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import SimpleNamespace
from importlib import resources
from pathlib import Path

import numpy as np

COLUMNS = (
    "node",
    "order_cost",
    "price",
    "max_inventory",
    "max_order",
    "initial_inventory",
    "target_inventory",
    "stock_cost",
    "backlog_cost",
    "downstream",
)
HEADER_KEYS = ("demand_rate", "lead_rate", "horizon", "history", "deterministic")
SHIPPED = ("net6", "net12", "net18", "net24")


class NetworkError(ValueError):
    """Base class for invalid network definitions."""


class NetworkParseError(NetworkError):
    pass


class DanglingEdgeError(NetworkError):
    pass


class CycleError(NetworkError):
    pass


class NegativeCostError(NetworkError):
    pass


@dataclass(frozen=True)
class NodeParams:
    id: int
    order_cost: float
    price: float
    max_inventory: int
    max_order: int
    initial_inventory: int
    target_inventory: int  # parsed and kept; no dynamics use it
    stock_cost: float
    backlog_cost: float
    downstream: tuple[int, ...] = ()


@dataclass(frozen=True)
class AdjacencyMatrix:
    directed: np.ndarray
    symmetric: np.ndarray


@dataclass(frozen=True)
class SupplyNetwork:
    nodes: tuple[NodeParams, ...]
    demand_rate: float = 5.0
    lead_rate: float = 2.0
    horizon: int = 50
    history: int = 3
    deterministic: bool = False
    name: str = ""
    upstream: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        ups: list[list[int]] = [[] for _ in self.nodes]
        for node in self.nodes:
            for j in node.downstream:
                if 0 <= j < len(self.nodes):
                    ups[j].append(node.id)
        object.__setattr__(self, "upstream", tuple(tuple(u) for u in ups))

    @property
    def N(self) -> int:
        return len(self.nodes)

    @property
    def retail_set(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if not n.downstream)

    @property
    def source_set(self) -> tuple[int, ...]:
        """Nodes without suppliers; their orders are filled by an unlimited source."""
        return tuple(i for i, u in enumerate(self.upstream) if not u)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(n.id, j) for n in self.nodes for j in n.downstream]

    def array(self, attr: str) -> np.ndarray:
        return np.array([getattr(n, attr) for n in self.nodes], dtype=float)

    @cached_property
    def arrays(self) -> SimpleNamespace:
        """Per-node parameter vectors and edge index arrays used by the simulator."""
        edges = self.edges
        return SimpleNamespace(
            price=self.array("price"),
            order_cost=self.array("order_cost"),
            stock_cost=self.array("stock_cost"),
            backlog_cost=self.array("backlog_cost"),
            vmax=np.array([n.max_inventory for n in self.nodes], dtype=np.int64),
            omax=np.array([n.max_order for n in self.nodes], dtype=np.int64),
            src=np.array([e[0] for e in edges], dtype=np.int64),
            dst=np.array([e[1] for e in edges], dtype=np.int64),
            retail=np.array(self.retail_set, dtype=np.int64),
            source=np.array(self.source_set, dtype=np.int64),
        )

    def replace(self, **changes) -> "SupplyNetwork":
        kw = dict(
            nodes=self.nodes,
            demand_rate=self.demand_rate,
            lead_rate=self.lead_rate,
            horizon=self.horizon,
            history=self.history,
            deterministic=self.deterministic,
            name=self.name,
        )
        kw.update(changes)
        return SupplyNetwork(**kw)


def _number(text: str, col: str, lineno: int, integer: bool):
    try:
        value = float(text)
    except ValueError:
        raise NetworkParseError(f"line {lineno}: {col} is not a number: {text!r}") from None
    if integer:
        if value != int(value):
            raise NetworkParseError(f"line {lineno}: {col} must be an integer, got {text!r}")
        return int(value)
    return value


def _parse_downstream(text: str, lineno: int) -> tuple[int, ...]:
    text = text.strip()
    if text.lower() in ("", "none", "-"):
        return ()
    try:
        return tuple(int(tok) for tok in text.replace(",", " ").split())
    except ValueError:
        raise NetworkParseError(f"line {lineno}: bad downstream list {text!r}") from None


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise NetworkParseError(f"not a boolean: {text!r}")


def load_network(config_text: str, name: str = "") -> SupplyNetwork:
    """Parse and validate a network definition.

    Raises a ``NetworkParseError`` for malformed text, ``DanglingEdgeError``
    for downstream indices outside the node range or self-loops,
    ``CycleError`` if the flow graph is not acyclic and ``NegativeCostError``
    for negative prices or costs.
    """
    header: dict[str, str] = {}
    columns: list[str] | None = None
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(config_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if columns is None and "|" not in line:
            if "=" not in line:
                raise NetworkParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in HEADER_KEYS:
                raise NetworkParseError(f"line {lineno}: unknown header key {key!r}")
            header[key] = value
            continue
        cells = [c.strip() for c in line.split("|")]
        if columns is None:
            columns = [c.lower() for c in cells]
            missing = [c for c in COLUMNS if c not in columns]
            if missing:
                raise NetworkParseError(f"line {lineno}: missing columns {missing}")
            continue
        if len(cells) != len(columns):
            raise NetworkParseError(
                f"line {lineno}: expected {len(columns)} cells, got {len(cells)}"
            )
        rows.append((lineno, cells))
    if columns is None or not rows:
        raise NetworkParseError("no node table found")

    nodes = []
    for k, (lineno, cells) in enumerate(rows):
        rec = dict(zip(columns, cells))
        node_id = _number(rec["node"], "node", lineno, integer=True)
        if node_id != k:
            raise NetworkParseError(f"line {lineno}: nodes must be numbered 0..N-1 in order")
        nodes.append(
            NodeParams(
                id=node_id,
                order_cost=_number(rec["order_cost"], "order_cost", lineno, False),
                price=_number(rec["price"], "price", lineno, False),
                max_inventory=_number(rec["max_inventory"], "max_inventory", lineno, True),
                max_order=_number(rec["max_order"], "max_order", lineno, True),
                initial_inventory=_number(rec["initial_inventory"], "initial_inventory", lineno, True),
                target_inventory=_number(rec["target_inventory"], "target_inventory", lineno, True),
                stock_cost=_number(rec["stock_cost"], "stock_cost", lineno, False),
                backlog_cost=_number(rec["backlog_cost"], "backlog_cost", lineno, False),
                downstream=_parse_downstream(rec["downstream"], lineno),
            )
        )

    try:
        scenario = dict(
            demand_rate=float(header.get("demand_rate", 5.0)),
            lead_rate=float(header.get("lead_rate", 2.0)),
            horizon=int(header.get("horizon", 50)),
            history=int(header.get("history", 3)),
            deterministic=_parse_bool(header.get("deterministic", "false")),
        )
    except ValueError as exc:
        raise NetworkParseError(f"bad header value: {exc}") from None
    net = SupplyNetwork(nodes=tuple(nodes), name=name, **scenario)
    validate(net)
    return net


def validate(net: SupplyNetwork) -> None:
    n = net.N
    if net.demand_rate < 0 or net.lead_rate < 0:
        raise NetworkParseError("demand_rate and lead_rate must be non-negative")
    if net.horizon < 1 or net.history < 1:
        raise NetworkParseError("horizon and history must be positive")
    for node in net.nodes:
        for attr in ("order_cost", "price", "stock_cost", "backlog_cost"):
            if getattr(node, attr) < 0:
                raise NegativeCostError(f"node {node.id}: {attr} is negative")
        if node.max_inventory < 0 or node.max_order < 0:
            raise NetworkParseError(f"node {node.id}: capacities must be non-negative")
        if not 0 <= node.initial_inventory <= node.max_inventory:
            raise NetworkParseError(f"node {node.id}: initial inventory outside [0, max_inventory]")
        for j in node.downstream:
            if not 0 <= j < n:
                raise DanglingEdgeError(f"node {node.id}: downstream index {j} does not exist")
            if j == node.id:
                raise DanglingEdgeError(f"node {node.id}: self-loop")
        if len(set(node.downstream)) != len(node.downstream):
            raise NetworkParseError(f"node {node.id}: duplicate downstream entries")
    # Kahn's algorithm
    indeg = [len(u) for u in net.upstream]
    queue = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while queue:
        i = queue.pop()
        seen += 1
        for j in net.nodes[i].downstream:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    if seen != n:
        raise CycleError("downstream links contain a cycle")


def serialize(net: SupplyNetwork) -> str:
    def fmt(x):
        return repr(float(x)) if isinstance(x, float) else str(x)

    lines = [f"# {net.name}" if net.name else "# supply network"]
    lines += [
        f"demand_rate = {fmt(net.demand_rate)}",
        f"lead_rate = {fmt(net.lead_rate)}",
        f"horizon = {net.horizon}",
        f"history = {net.history}",
    ]
    if net.deterministic:
        lines.append("deterministic = true")
    lines += ["", " | ".join(COLUMNS)]
    for n in net.nodes:
        down = ", ".join(map(str, n.downstream)) if n.downstream else "None"
        cells = [n.id] + [getattr(n, c) for c in COLUMNS[1:-1]]
        lines.append(" | ".join(fmt(c) for c in cells) + f" | {down}")
    return "\n".join(lines) + "\n"


def adjacency(net: SupplyNetwork) -> AdjacencyMatrix:
    directed = np.zeros((net.N, net.N), dtype=np.int64)
    for i, j in net.edges:
        directed[i, j] = 1
    return AdjacencyMatrix(directed=directed, symmetric=np.maximum(directed, directed.T))


def read_network(path: str | Path) -> SupplyNetwork:
    path = Path(path)
    return load_network(path.read_text(), name=path.stem)


def builtin_network(name: str) -> SupplyNetwork:
    """One of the shipped configurations: net6, net12, net18 or net24."""
    if name not in SHIPPED:
        raise KeyError(f"unknown network {name!r}; shipped: {', '.join(SHIPPED)}")
    text = resources.files("invgraph.networks").joinpath(f"{name}.txt").read_text()
    return load_network(text, name=name)


def resolve_network(spec: str | Path) -> SupplyNetwork:
    """Accept either a shipped network name or a path to a network file."""
    if str(spec) in SHIPPED:
        return builtin_network(str(spec))
    return read_network(spec)
