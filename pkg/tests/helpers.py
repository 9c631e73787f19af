"""Small hand-built instances shared by several test modules."""

from vnfpr.instance import Arc, ChainSpec, Commodity, Instance, NetworkGraph, Node, VnfType


def graph_from_edges(edges, cores=4, bandwidth=10_000, latency=1.0, cost=10.0, node_cores=None) -> NetworkGraph:
    ids = sorted({u for e in edges for u in e[:2]})
    node_cores = node_cores or {}
    nodes = tuple(Node(u, node_cores.get(u, cores)) for u in ids)
    arcs = []
    for e in edges:
        u, v = e[:2]
        bw = e[2] if len(e) > 2 else bandwidth
        arcs += [Arc(u, v, bw, latency, cost), Arc(v, u, bw, latency, cost)]
    return NetworkGraph(nodes, tuple(arcs))


def ring_pathology_instance() -> Instance:
    """Six-node ring, one commodity two hops from source to sink, chain of four
    totally ordered, pairwise anti-affine functions: only the four-hop way
    around the ring enters enough distinct nodes."""
    ids = [f"n{i}" for i in range(6)]
    g = graph_from_edges([(ids[i], ids[(i + 1) % 6]) for i in range(6)], cores=4)
    fs = ("v1", "v2", "v3", "v4")
    vnfs = tuple(VnfType(f, 5000, 200) for f in fs)
    order = frozenset((fs[i], fs[j]) for i in range(4) for j in range(i + 1, 4))
    k = Commodity("k", "n0", "n2", 100, 1000, ChainSpec(fs, order))
    aa = frozenset(frozenset((fs[i], fs[j])) for i in range(4) for j in range(i + 1, 4))
    return Instance(g, vnfs, (k,), aa)


def mutualization_instance() -> Instance:
    """Two commodities crossing at a middle node m, chains [v1;v2;v3] and [v2;v1;v4]."""
    g = graph_from_edges([("a", "m"), ("m", "b"), ("c", "m"), ("m", "e")], cores=2, node_cores={"m": 3})
    vnfs = (
        VnfType("v1", 1000, 300),
        VnfType("v2", 1000, 800),  # one instance covers both demands
        VnfType("v3", 1000, 300),
        VnfType("v4", 1000, 300),
    )
    k1 = Commodity("k1", "a", "b", 400, 100, ChainSpec(("v1", "v2", "v3"), frozenset({("v1", "v2"), ("v2", "v3"), ("v1", "v3")})))
    k2 = Commodity("k2", "c", "e", 400, 100, ChainSpec(("v2", "v1", "v4"), frozenset({("v2", "v1"), ("v1", "v4"), ("v2", "v4")})))
    return Instance(g, vnfs, (k1, k2), frozenset())
