"""Built-in topologies and seeded random instance generation."""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .instance import Arc, ChainSpec, Commodity, Instance, InstanceError, NetworkGraph, Node, VnfType

DEFAULT_CORES = 20
DEFAULT_BANDWIDTH = 40000.0  # Mb/s
DEFAULT_LATENCY = 1.0  # ms
DEFAULT_ARC_COST = 10.0  # $/Mb/month

_NAMED = re.compile(r"^(ring|line)[(\-:_]?(\d+)\)?$")


def _undirected(ids: list[str], edges: list[tuple[int, int]], latency: float = DEFAULT_LATENCY) -> NetworkGraph:
    arcs = []
    for i, j in edges:
        for u, v in ((i, j), (j, i)):
            arcs.append(Arc(ids[u], ids[v], DEFAULT_BANDWIDTH, latency, DEFAULT_ARC_COST))
    return NetworkGraph(tuple(Node(x, DEFAULT_CORES) for x in ids), tuple(arcs))


def builtin_topology(name: str) -> NetworkGraph:
    """Return a named topology: ``geant22``, ``diamond``, ``ring(n)`` or ``line(n)``.

    ``geant22`` is a fixed synthetic stand-in with the GEANT node and edge
    counts (22 nodes, 36 bidirected edges); its edges and latencies are not
    the real network's.
    """
    key = name.strip().lower()
    if key == "geant22":
        doc = json.loads(resources.files("vnfpr.data").joinpath("geant22.json").read_text())
        return NetworkGraph(
            tuple(Node(n["id"], int(n["cores"])) for n in doc["nodes"]),
            tuple(
                Arc(a["tail"], a["head"], float(a["bandwidth_mbps"]), float(a["latency_ms"]), float(a["unit_cost"]))
                for a in doc["arcs"]
            ),
        )
    if key == "diamond":
        return _undirected(["s", "a", "b", "d"], [(0, 1), (0, 2), (1, 3), (2, 3)])
    m = _NAMED.match(key)
    if m:
        shape, n = m.group(1), int(m.group(2))
        ids = [f"n{i}" for i in range(n)]
        if shape == "ring":
            if n < 3:
                raise ValueError("ring needs at least 3 nodes")
            return _undirected(ids, [(i, (i + 1) % n) for i in range(n)])
        if n < 2:
            raise ValueError("line needs at least 2 nodes")
        return _undirected(ids, [(i, i + 1) for i in range(n - 1)])
    raise ValueError(f"unknown topology {name!r}")


@dataclass(frozen=True)
class GeneratorConfig:
    topology: str = "geant22"
    n_commodities: int = 10
    chain_len_range: tuple[int, int] = (4, 8)
    vnf_pool_size: int = 10
    demand_range: tuple[int, int] = (100, 500)
    theta: float = 0.5
    n_anti_affinity: int = 0
    cost_ratio_s: float = 0.05
    price_jitter: float = 0.2
    seed: int = 0
    vnf_max_rate: float = 5000.0
    latency_bound: float = 1000.0
    arc_cost_mean: float = DEFAULT_ARC_COST

    def check(self) -> None:
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        lo, hi = self.chain_len_range
        if not 0 <= lo <= hi:
            raise ValueError("chain_len_range is empty")
        dlo, dhi = self.demand_range
        if not 0 < dlo <= dhi:
            raise ValueError("demand_range is empty or non-positive")
        if self.vnf_pool_size < hi:
            raise ValueError("vnf_pool_size must be >= the longest chain")
        if self.n_commodities < 0:
            raise ValueError("n_commodities must be >= 0")
        if not self.cost_ratio_s > 0:
            raise ValueError("cost_ratio_s must be > 0")
        if not 0 <= self.price_jitter < 1:
            raise ValueError("price_jitter must lie in [0, 1)")
        n_pairs = self.vnf_pool_size * (self.vnf_pool_size - 1) // 2
        if not 0 <= self.n_anti_affinity <= n_pairs:
            raise ValueError(f"n_anti_affinity={self.n_anti_affinity} exceeds the {n_pairs} available pairs")


def _jittered(rng: np.random.Generator, mean: float, jitter: float) -> float:
    return round(float(rng.uniform(mean * (1 - jitter), mean * (1 + jitter))), 2)


def order_pair_count(n_functions: int, theta: float) -> int:
    couples = n_functions * (n_functions - 1) / 2
    return int(math.floor(theta * couples + 0.5))


def generate_instance(cfg: GeneratorConfig) -> Instance:
    """Draw a random instance; the result depends only on ``cfg``.

    Independent random streams are used for prices, VNF costs, commodities and
    anti-affinity pairs. Order pairs and anti-affinity pairs are prefixes of
    shuffles that do not depend on ``theta`` or ``n_anti_affinity``, so for a
    fixed seed, raising either parameter only adds constraints.
    """
    cfg.check()
    graph = builtin_topology(cfg.topology)
    price_rng, vnf_rng, com_rng, aa_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(4)
    )

    costs = {a.key: _jittered(price_rng, cfg.arc_cost_mean, cfg.price_jitter) for a in graph.arcs}
    graph = graph.with_arc_costs(costs)

    vnf_mean = cfg.arc_cost_mean / cfg.cost_ratio_s
    vnfs = tuple(
        VnfType(f"f{i}", cfg.vnf_max_rate, _jittered(vnf_rng, vnf_mean, cfg.price_jitter))
        for i in range(cfg.vnf_pool_size)
    )
    pool = [f.id for f in vnfs]
    nodes = list(graph.node_ids)

    commodities = []
    for i in range(cfg.n_commodities):
        src, dst = (nodes[j] for j in com_rng.choice(len(nodes), size=2, replace=False))
        demand = float(com_rng.integers(cfg.demand_range[0], cfg.demand_range[1], endpoint=True))
        length = int(com_rng.integers(cfg.chain_len_range[0], cfg.chain_len_range[1], endpoint=True))
        functions = [pool[j] for j in com_rng.choice(len(pool), size=length, replace=False)]
        hidden = [functions[j] for j in com_rng.permutation(length)]
        pairs = list(itertools.combinations(hidden, 2))
        shuffled = [pairs[j] for j in com_rng.permutation(len(pairs))]
        order = frozenset(shuffled[: order_pair_count(length, cfg.theta)])
        commodities.append(
            Commodity(f"k{i}", src, dst, demand, cfg.latency_bound, ChainSpec(tuple(functions), order))
        )

    all_pairs = list(itertools.combinations(pool, 2))
    chosen = [all_pairs[j] for j in aa_rng.permutation(len(all_pairs))[: cfg.n_anti_affinity]]
    try:
        return Instance(graph, vnfs, tuple(commodities), frozenset(frozenset(p) for p in chosen))
    except InstanceError as exc:  # pragma: no cover - generator invariants
        raise RuntimeError(f"generator produced an invalid instance: {exc}") from exc
