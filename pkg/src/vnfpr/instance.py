"""Problem data for joint VNF placement and routing.

An :class:`Instance` bundles a capacitated bidirected network, a catalog of
virtual network functions, the commodities to route (each carrying a possibly
partially ordered service chain) and a global set of anti-affinity pairs.

All types are frozen and hashable-by-content so instances can be shared
between workers and compared after a JSON round trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping

import jsonschema


class InstanceError(ValueError):
    """Raised when a document or object violates the instance schema or invariants."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Node:
    id: str
    cores: int


@dataclass(frozen=True)
class Arc:
    tail: str
    head: str
    bandwidth: float
    latency: float
    unit_cost: float

    @property
    def key(self) -> tuple[str, str]:
        return (self.tail, self.head)


@dataclass(frozen=True)
class NetworkGraph:
    nodes: tuple[Node, ...]
    arcs: tuple[Arc, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        self.validate()

    def validate(self, path: str = "graph") -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise InstanceError("node ids not unique", f"{path}.nodes")
        for i, n in enumerate(self.nodes):
            if n.cores < 0:
                raise InstanceError("cores must be >= 0", f"{path}.nodes[{i}]")
        known = set(ids)
        seen: set[tuple[str, str]] = set()
        for i, a in enumerate(self.arcs):
            where = f"{path}.arcs[{i}]"
            if a.tail not in known or a.head not in known:
                raise InstanceError("arc endpoint is not a node", where)
            if a.tail == a.head:
                raise InstanceError("self-loop arc", where)
            if a.key in seen:
                raise InstanceError("duplicate arc", where)
            if not a.bandwidth > 0:
                raise InstanceError("bandwidth must be > 0", where)
            if a.latency < 0 or a.unit_cost < 0:
                raise InstanceError("latency and unit_cost must be >= 0", where)
            seen.add(a.key)
        for i, a in enumerate(self.arcs):
            if (a.head, a.tail) not in seen:
                raise InstanceError("graph not bidirected", f"{path}.arcs[{i}]")

    @cached_property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    @cached_property
    def cores(self) -> dict[str, int]:
        return {n.id: n.cores for n in self.nodes}

    @cached_property
    def arc_map(self) -> dict[tuple[str, str], Arc]:
        return {a.key: a for a in self.arcs}

    @cached_property
    def out_arcs(self) -> dict[str, tuple[Arc, ...]]:
        out: dict[str, list[Arc]] = {n: [] for n in self.node_ids}
        for a in self.arcs:
            out[a.tail].append(a)
        return {n: tuple(sorted(v, key=lambda a: a.key)) for n, v in out.items()}

    @cached_property
    def in_arcs(self) -> dict[str, tuple[Arc, ...]]:
        inc: dict[str, list[Arc]] = {n: [] for n in self.node_ids}
        for a in self.arcs:
            inc[a.head].append(a)
        return {n: tuple(sorted(v, key=lambda a: a.key)) for n, v in inc.items()}

    def with_arc_costs(self, costs: Mapping[tuple[str, str], float]) -> "NetworkGraph":
        arcs = tuple(
            Arc(a.tail, a.head, a.bandwidth, a.latency, float(costs.get(a.key, a.unit_cost)))
            for a in self.arcs
        )
        return NetworkGraph(self.nodes, arcs)


@dataclass(frozen=True)
class VnfType:
    id: str
    max_rate: float
    run_cost: float
    cores_required: int = 1

    def __post_init__(self) -> None:
        if not self.max_rate > 0:
            raise InstanceError("max_rate must be > 0", f"vnf {self.id}")
        if self.run_cost < 0:
            raise InstanceError("run_cost must be >= 0", f"vnf {self.id}")
        if self.cores_required < 1:
            raise InstanceError("cores_required must be >= 1", f"vnf {self.id}")


@dataclass(frozen=True)
class ChainSpec:
    """Functions a commodity must traverse plus precedence pairs ``(f, g)``: f before g."""

    functions: tuple[str, ...]
    order: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "order", frozenset(tuple(p) for p in self.order))
        if len(set(self.functions)) != len(self.functions):
            raise InstanceError("chain functions not distinct")
        members = set(self.functions)
        for f, g in self.order:
            if f == g:
                raise InstanceError(f"order pair ({f},{g}) is reflexive")
            if f not in members or g not in members:
                raise InstanceError(f"order pair ({f},{g}) outside chain functions")
        if _has_cycle(self.functions, self.order):
            raise InstanceError("order not acyclic")

    def precedence(self, f: str, g: str) -> int:
        """Return +1 if f must precede g, -1 if g must precede f, else 0."""
        if (f, g) in self.order:
            return 1
        if (g, f) in self.order:
            return -1
        return 0

    @cached_property
    def ordered_pairs(self) -> tuple[tuple[str, str], ...]:
        """Precedence pairs with p(f, g) = 1, one per unordered couple, sorted."""
        return tuple(sorted(self.order))


def _has_cycle(functions: Iterable[str], order: Iterable[tuple[str, str]]) -> bool:
    succ: dict[str, list[str]] = {f: [] for f in functions}
    for f, g in order:
        succ.setdefault(f, []).append(g)
        succ.setdefault(g, [])
    state: dict[str, int] = {}

    def visit(v: str) -> bool:
        state[v] = 1
        for w in succ[v]:
            s = state.get(w, 0)
            if s == 1 or (s == 0 and visit(w)):
                return True
        state[v] = 2
        return False

    return any(state.get(v, 0) == 0 and visit(v) for v in list(succ))


@dataclass(frozen=True)
class Commodity:
    id: str
    source: str
    sink: str
    demand: float
    latency_bound: float
    chain: ChainSpec

    def __post_init__(self) -> None:
        where = f"commodity {self.id}"
        if self.source == self.sink:
            raise InstanceError("source equals sink", where)
        if not self.demand > 0:
            raise InstanceError("demand must be > 0", where)
        if not self.latency_bound > 0:
            raise InstanceError("latency_bound must be > 0", where)


def theta_of(chain: ChainSpec) -> float:
    """Density of the precedence relation relative to a total order.

    Chains with fewer than two functions have no couples; 0.0 is returned.
    """
    n = len(chain.functions)
    if n < 2:
        return 0.0
    return 2.0 * len(chain.order) / (n * (n - 1))


@dataclass(frozen=True)
class Instance:
    graph: NetworkGraph
    vnfs: tuple[VnfType, ...]
    commodities: tuple[Commodity, ...]
    anti_affinity: frozenset[frozenset[str]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vnfs", tuple(self.vnfs))
        object.__setattr__(self, "commodities", tuple(self.commodities))
        object.__setattr__(
            self, "anti_affinity", frozenset(frozenset(p) for p in self.anti_affinity)
        )
        self.validate()

    def validate(self) -> None:
        vids = [f.id for f in self.vnfs]
        if len(set(vids)) != len(vids):
            raise InstanceError("vnf ids not unique", "vnfs")
        catalog = set(vids)
        nodes = set(self.graph.node_ids)
        cids = [k.id for k in self.commodities]
        if len(set(cids)) != len(cids):
            raise InstanceError("commodity ids not unique", "commodities")
        for i, k in enumerate(self.commodities):
            where = f"commodities[{i}]"
            if k.source not in nodes or k.sink not in nodes:
                raise InstanceError("source/sink is not a graph node", where)
            for f in k.chain.functions:
                if f not in catalog:
                    raise InstanceError(f"chain function {f!r} not in catalog", where)
        for i, pair in enumerate(self.anti_affinity):
            if len(pair) != 2:
                raise InstanceError("anti-affinity pair must hold two distinct functions", f"anti_affinity[{i}]")
            for f in pair:
                if f not in catalog:
                    raise InstanceError(f"anti-affinity function {f!r} not in catalog", f"anti_affinity[{i}]")

    @cached_property
    def vnf_map(self) -> dict[str, VnfType]:
        return {f.id: f for f in self.vnfs}

    @cached_property
    def vnf_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.vnfs)

    @cached_property
    def commodity_map(self) -> dict[str, Commodity]:
        return {k.id: k for k in self.commodities}

    def anti_affine_pairs(self, commodity: Commodity | None = None) -> list[tuple[str, str]]:
        """Sorted anti-affinity pairs, restricted to the chain of ``commodity`` if given."""
        pairs = sorted(tuple(sorted(p)) for p in self.anti_affinity)
        if commodity is None:
            return pairs
        members = set(commodity.chain.functions)
        return [p for p in pairs if p[0] in members and p[1] in members]

    def replace(self, **changes: Any) -> "Instance":
        data = {
            "graph": self.graph,
            "vnfs": self.vnfs,
            "commodities": self.commodities,
            "anti_affinity": self.anti_affinity,
        }
        data.update(changes)
        return Instance(**data)


INSTANCE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["graph", "vnfs", "commodities"],
    "properties": {
        "graph": {
            "type": "object",
            "required": ["nodes", "arcs"],
            "properties": {
                "nodes": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["id", "cores"],
                        "properties": {"id": {"type": "string"}, "cores": {"type": "integer"}},
                    },
                },
                "arcs": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["tail", "head", "bandwidth_mbps", "latency_ms", "unit_cost"],
                        "properties": {
                            "tail": {"type": "string"},
                            "head": {"type": "string"},
                            "bandwidth_mbps": {"type": "number"},
                            "latency_ms": {"type": "number"},
                            "unit_cost": {"type": "number"},
                        },
                    },
                },
            },
        },
        "vnfs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "max_rate_mbps", "run_cost"],
                "properties": {
                    "id": {"type": "string"},
                    "max_rate_mbps": {"type": "number"},
                    "run_cost": {"type": "number"},
                    "cores_required": {"type": "integer"},
                },
            },
        },
        "commodities": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "source", "sink", "demand_mbps", "latency_bound_ms", "chain"],
                "properties": {
                    "id": {"type": "string"},
                    "source": {"type": "string"},
                    "sink": {"type": "string"},
                    "demand_mbps": {"type": "number"},
                    "latency_bound_ms": {"type": "number"},
                    "chain": {
                        "type": "object",
                        "required": ["functions"],
                        "properties": {
                            "functions": {"type": "array", "items": {"type": "string"}},
                            "order": {
                                "type": "array",
                                "items": {
                                    "type": "array",
                                    "items": {"type": "string"},
                                    "minItems": 2,
                                    "maxItems": 2,
                                },
                            },
                        },
                    },
                },
            },
        },
        "anti_affinity": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
        },
    },
}


def instance_from_dict(doc: Mapping[str, Any]) -> Instance:
    try:
        jsonschema.validate(doc, INSTANCE_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise InstanceError(f"schema violation: {exc.message}", path) from None

    g = doc["graph"]
    nodes = [Node(n["id"], int(n["cores"])) for n in g["nodes"]]
    arcs = [
        Arc(a["tail"], a["head"], float(a["bandwidth_mbps"]), float(a["latency_ms"]), float(a["unit_cost"]))
        for a in g["arcs"]
    ]
    graph = NetworkGraph(tuple(nodes), tuple(arcs))
    vnfs = tuple(
        VnfType(v["id"], float(v["max_rate_mbps"]), float(v["run_cost"]), int(v.get("cores_required", 1)))
        for v in doc["vnfs"]
    )
    commodities = []
    for i, c in enumerate(doc["commodities"]):
        try:
            chain = ChainSpec(
                tuple(c["chain"]["functions"]),
                frozenset(tuple(p) for p in c["chain"].get("order", [])),
            )
        except InstanceError as exc:
            raise InstanceError(str(exc), f"commodities[{i}].chain") from None
        commodities.append(
            Commodity(
                c["id"], c["source"], c["sink"], float(c["demand_mbps"]), float(c["latency_bound_ms"]), chain
            )
        )
    pairs = []
    for i, (f, g_) in enumerate(doc.get("anti_affinity", [])):
        if f == g_:
            raise InstanceError("anti-affinity pair repeats a function", f"anti_affinity[{i}]")
        pairs.append(frozenset((f, g_)))
    return Instance(graph, vnfs, tuple(commodities), frozenset(pairs))


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    return {
        "graph": {
            "nodes": [{"id": n.id, "cores": n.cores} for n in inst.graph.nodes],
            "arcs": [
                {
                    "tail": a.tail,
                    "head": a.head,
                    "bandwidth_mbps": a.bandwidth,
                    "latency_ms": a.latency,
                    "unit_cost": a.unit_cost,
                }
                for a in inst.graph.arcs
            ],
        },
        "vnfs": [
            {"id": f.id, "max_rate_mbps": f.max_rate, "run_cost": f.run_cost, "cores_required": f.cores_required}
            for f in inst.vnfs
        ],
        "commodities": [
            {
                "id": k.id,
                "source": k.source,
                "sink": k.sink,
                "demand_mbps": k.demand,
                "latency_bound_ms": k.latency_bound,
                "chain": {
                    "functions": list(k.chain.functions),
                    "order": [list(p) for p in k.chain.ordered_pairs],
                },
            }
            for k in inst.commodities
        ],
        "anti_affinity": [list(p) for p in inst.anti_affine_pairs()],
    }


def load_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from None
    return instance_from_dict(doc)


def save_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"
