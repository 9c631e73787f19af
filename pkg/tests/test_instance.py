import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vnfpr.generator import GeneratorConfig, builtin_topology, generate_instance, order_pair_count
from vnfpr.instance import ChainSpec, InstanceError, load_instance, save_instance, theta_of


def minimal_doc():
    return {
        "graph": {
            "nodes": [{"id": "a", "cores": 2}, {"id": "b", "cores": 2}],
            "arcs": [
                {"tail": "a", "head": "b", "bandwidth_mbps": 100, "latency_ms": 1, "unit_cost": 10},
                {"tail": "b", "head": "a", "bandwidth_mbps": 100, "latency_ms": 1, "unit_cost": 10},
            ],
        },
        "vnfs": [{"id": "f", "max_rate_mbps": 500, "run_cost": 200, "cores_required": 1}],
        "commodities": [
            {
                "id": "k0",
                "source": "a",
                "sink": "b",
                "demand_mbps": 50,
                "latency_bound_ms": 10,
                "chain": {"functions": [], "order": []},
            }
        ],
        "anti_affinity": [],
    }


def test_minimal_document_loads():
    inst = load_instance(json.dumps(minimal_doc()))
    assert len(inst.commodities) == 1
    assert len(inst.anti_affinity) == 0


def test_cyclic_order_rejected():
    doc = minimal_doc()
    doc["vnfs"].append({"id": "g", "max_rate_mbps": 500, "run_cost": 200})
    doc["commodities"][0]["chain"] = {"functions": ["f", "g"], "order": [["f", "g"], ["g", "f"]]}
    with pytest.raises(InstanceError, match="order not acyclic"):
        load_instance(json.dumps(doc))


def test_missing_reverse_arc_rejected():
    doc = minimal_doc()
    doc["graph"]["arcs"].pop()
    with pytest.raises(InstanceError, match="graph not bidirected"):
        load_instance(json.dumps(doc))


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d["graph"]["arcs"][0].update(bandwidth_mbps=0), "bandwidth"),
        (lambda d: d["commodities"][0].update(sink="a"), "source equals sink"),
        (lambda d: d["commodities"][0]["chain"].update(functions=["zz"]), "not in catalog"),
        (lambda d: d.update(anti_affinity=[["f", "f"]]), "repeats"),
        (lambda d: d["graph"]["nodes"].append({"id": "a", "cores": 1}), "not unique"),
        (lambda d: d.pop("vnfs"), "schema violation"),
    ],
)
def test_invariant_violations(mutate, message):
    doc = minimal_doc()
    mutate(doc)
    with pytest.raises(InstanceError, match=message):
        load_instance(json.dumps(doc))


def test_error_reports_path():
    doc = minimal_doc()
    doc["commodities"][0]["demand_mbps"] = "lots"
    with pytest.raises(InstanceError) as err:
        load_instance(json.dumps(doc))
    assert "commodities/0/demand_mbps" in str(err.value)


def test_geant22_counts():
    g = builtin_topology("geant22")
    assert len(g.nodes) == 22
    assert len(g.arcs) == 72
    assert all(n.cores == 20 for n in g.nodes)
    assert all(a.bandwidth == 40000 for a in g.arcs)
    assert all(1 <= a.latency <= 10 for a in g.arcs)


@pytest.mark.parametrize("name, nodes, arcs", [("ring(4)", 4, 8), ("line(2)", 2, 2), ("diamond", 4, 8), ("ring8", 8, 16)])
def test_small_topologies(name, nodes, arcs):
    g = builtin_topology(name)
    assert (len(g.nodes), len(g.arcs)) == (nodes, arcs)


def test_unknown_topology():
    with pytest.raises(ValueError):
        builtin_topology("torus(3)")


@pytest.mark.parametrize("pairs, expected", [(6, 1.0), (0, 0.0), (3, 0.5)])
def test_theta_of(pairs, expected):
    fs = ("a", "b", "c", "d")
    total = [(fs[i], fs[j]) for i in range(4) for j in range(i + 1, 4)]
    assert theta_of(ChainSpec(fs, frozenset(total[:pairs]))) == expected


def test_theta_of_short_chain_is_zero():
    assert theta_of(ChainSpec(("a",))) == 0.0
    assert theta_of(ChainSpec(())) == 0.0


def test_precedence_is_antisymmetric():
    chain = ChainSpec(("a", "b", "c"), frozenset({("a", "b")}))
    assert chain.precedence("a", "b") == 1
    assert chain.precedence("b", "a") == -1
    assert chain.precedence("a", "c") == 0


def test_generate_theta_zero_has_no_order():
    inst = generate_instance(GeneratorConfig(topology="ring(6)", n_commodities=8, theta=0.0, seed=3))
    assert all(not k.chain.order for k in inst.commodities)


def test_generate_theta_one_total_order():
    inst = generate_instance(GeneratorConfig(topology="ring(6)", n_commodities=8, theta=1.0, chain_len_range=(4, 4), seed=3))
    for k in inst.commodities:
        assert len(k.chain.order) == 6
        # a total order: every couple is comparable
        fs = k.chain.functions
        assert all(k.chain.precedence(f, g) != 0 for f in fs for g in fs if f != g)


def test_generate_deterministic():
    cfg = GeneratorConfig(topology="geant22", n_commodities=20, theta=0.5, n_anti_affinity=6, seed=7)
    assert save_instance(generate_instance(cfg)) == save_instance(generate_instance(cfg))


def test_generate_parameters():
    inst = generate_instance(GeneratorConfig(topology="geant22", n_commodities=30, n_anti_affinity=6, seed=1))
    assert len(inst.anti_affinity) == 6
    for k in inst.commodities:
        assert 4 <= len(k.chain.functions) <= 8
        assert 100 <= k.demand <= 500 and k.demand == int(k.demand)
        assert k.source != k.sink
    assert all(8 <= a.unit_cost <= 12 for a in inst.graph.arcs)
    assert all(160 <= f.run_cost <= 240 for f in inst.vnfs)


def test_cost_ratio_one_percent():
    inst = generate_instance(GeneratorConfig(topology="ring(5)", n_commodities=1, cost_ratio_s=0.01, seed=2))
    assert all(800 <= f.run_cost <= 1200 for f in inst.vnfs)


@pytest.mark.parametrize(
    "changes",
    [{"theta": 1.5}, {"theta": -0.1}, {"n_anti_affinity": 46}, {"vnf_pool_size": 5}, {"chain_len_range": (5, 4)}],
)
def test_generator_rejects_bad_config(changes):
    with pytest.raises(ValueError):
        generate_instance(GeneratorConfig(topology="ring(5)", **changes))


def test_constraints_nested_across_theta_and_rules():
    base = dict(topology="ring(6)", n_commodities=4, seed=11)
    orders = [
        [k.chain.order for k in generate_instance(GeneratorConfig(theta=t, **base)).commodities]
        for t in (0.0, 0.25, 0.5, 0.75, 1.0)
    ]
    for lo, hi in zip(orders, orders[1:]):
        assert all(a <= b for a, b in zip(lo, hi))
    rules = [generate_instance(GeneratorConfig(n_anti_affinity=n, **base)).anti_affinity for n in (0, 2, 4, 8)]
    for lo, hi in zip(rules, rules[1:]):
        assert lo <= hi


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    theta=st.floats(0, 1),
    lo=st.integers(0, 6),
    span=st.integers(0, 3),
    aa=st.integers(0, 20),
)
def test_generated_instances_roundtrip_and_theta(seed, theta, lo, span, aa):
    cfg = GeneratorConfig(
        topology="ring(5)", n_commodities=3, chain_len_range=(lo, lo + span), theta=theta, n_anti_affinity=aa, seed=seed
    )
    inst = generate_instance(cfg)
    assert load_instance(save_instance(inst)) == inst
    for k in inst.commodities:
        n = len(k.chain.functions)
        assert len(k.chain.order) == order_pair_count(n, theta)
        if n >= 2:
            assert abs(theta_of(k.chain) - theta) <= 1.0 / (n * (n - 1) / 2) + 1e-12
        for f, g in k.chain.order:
            assert k.chain.precedence(f, g) == -k.chain.precedence(g, f) == 1
