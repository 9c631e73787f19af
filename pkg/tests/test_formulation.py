import pytest
from oracles import brute_force, random_tiny_instance

from vnfpr.algorithms import validate
from vnfpr.formulation import (
    REJECT,
    ExtractionError,
    FormulationOptions,
    build_full_model,
    build_restricted_model,
    default_r,
    extract_solution,
    solution_values,
)
from vnfpr.generator import builtin_topology
from vnfpr.instance import Arc, ChainSpec, Commodity, Instance, NetworkGraph, Node, VnfType
from vnfpr.milp import MipSolution, Status, solve_lp, solve_mip

NO_CUTS = FormulationOptions(strengthening_cuts=False)


def two_node_instance() -> Instance:
    g = NetworkGraph((Node("s", 2), Node("d", 2)), (Arc("s", "d", 1000, 1, 10), Arc("d", "s", 1000, 1, 10)))
    vnfs = (VnfType("f", 500, 100), VnfType("g", 500, 100))
    k = Commodity("k", "s", "d", 100, 10, ChainSpec(("f", "g"), frozenset({("f", "g")})))
    return Instance(g, vnfs, (k,), frozenset())


def line3_instance(chain=("f",), demand=100) -> Instance:
    g = builtin_topology("line(3)")
    vnfs = tuple(VnfType(f, 1000, 50) for f in ("f", "g", "h"))
    k = Commodity("k", "n0", "n2", demand, 100, ChainSpec(tuple(chain)))
    return Instance(g, vnfs, (k,), frozenset())


def test_variable_count_two_nodes():
    model, idx = build_full_model(two_node_instance())
    assert len(model.variables) == 15
    assert len(idx) == 15
    counts = {kind: len(idx.roles(kind)) for kind in ("q", "y", "Y", "x", "qbar")}
    assert counts == {"q": 2, "y": 4, "Y": 4, "x": 4, "qbar": 1}
    assert {v.kind.value for v in model.variables} == {"binary", "integer"}


def test_variable_names_are_stable():
    model, idx = build_full_model(two_node_instance())
    names = {v.name for v in model.variables}
    assert {"q_k_s_d", "y_k_f_d", "Y_k_g_s", "x_f_d", "qbar_k"} <= names
    assert idx.role("y_k_f_d") == ("y", "k", "f", "d")


def test_order_rows_once_per_pair_and_node():
    model, _ = build_full_model(two_node_instance())
    rows = [c for c in model.constraints if c.name.startswith("ord_")]
    assert len(rows) == 2
    for row in rows:
        assert row.sense.value == ">=" and sorted(row.terms.values()) == [-1.0, 1.0]


def test_no_rejection_variant_has_no_qbar():
    model, idx = build_full_model(two_node_instance(), FormulationOptions(rejection_enabled=False))
    assert not idx.roles("qbar") and len(model.variables) == 14


def test_default_r_formula_example():
    nodes = tuple(Node(f"n{i}", 20 if i == 0 else 1) for i in range(22))
    arcs = []
    for i in range(36):
        u, v = f"n{i % 22}", f"n{(i + 1 + i // 22) % 22}"
        arcs += [Arc(u, v, 1, 1, 12 if i == 0 else 5), Arc(v, u, 1, 1, 5)]
    g = NetworkGraph(nodes, tuple(arcs))
    vnfs = tuple(VnfType(f"f{i}", 1, 1200 if i == 0 else 3) for i in range(10))
    coms = tuple(Commodity(f"k{i}", "n0", "n1", 500 if i == 0 else 100, 1, ChainSpec(())) for i in range(100))
    inst = Instance(g, vnfs, coms, frozenset())
    assert len(g.arcs) == 72
    assert default_r(inst) == pytest.approx(1.01 * 484800)


def test_default_r_unit_instance():
    g = builtin_topology("line(2)")
    inst = Instance(g, (VnfType("f", 1, 7),), (Commodity("k", "n0", "n1", 1, 1, ChainSpec(())),), frozenset())
    # |A| = 2 here, so the routing term is 1*2*1*10
    assert default_r(inst) == pytest.approx(1.01 * (1 * 2 * 1 * 10 + 1 * 2 * 20 * 7))


def test_all_rejected_extraction():
    inst = random_tiny_instance(5)
    model, idx = build_full_model(inst)
    values = {idx.name(("qbar", k.id)): 1.0 for k in inst.commodities}
    sol = extract_solution(inst, idx, MipSolution(Status.OPTIMAL, values={v.name: values.get(v.name, 0.0) for v in model.variables}))
    assert sol.rejected == [k.id for k in inst.commodities]
    assert sol.cost.total == pytest.approx(idx.penalty_rate * sum(k.demand for k in inst.commodities))


def test_line3_extraction():
    inst = line3_instance(("f",))
    model, idx = build_full_model(inst)
    sol = extract_solution(inst, idx, solve_mip(model))
    res = sol.commodities["k"]
    assert res.route == (("n0", "n1"), ("n1", "n2"))
    assert res.assignment["f"] in ("n1", "n2")
    assert sol.instances == {(res.assignment["f"], "f"): 1}


def test_broken_path_raises_structured_error():
    inst = line3_instance(())
    model, idx = build_full_model(inst)
    values = {v.name: 0.0 for v in model.variables}
    values["q_k_n0_n1"] = 1.0  # path stops at n1
    with pytest.raises(ExtractionError) as err:
        extract_solution(inst, idx, MipSolution(Status.OPTIMAL, values=values))
    assert err.value.commodity == "k" and err.value.family == "flow"


@pytest.mark.parametrize("seed", range(25))
def test_oracle_solution_is_model_feasible_and_matches_optimum(seed):
    inst = random_tiny_instance(seed)
    ref = brute_force(inst)
    model, idx = build_full_model(inst)
    sol = solve_mip(model)
    assert sol.objective == pytest.approx(ref.cost, rel=1e-9)
    extracted = extract_solution(inst, idx, sol)
    assert extracted.cost.total == pytest.approx(sol.objective, rel=1e-9, abs=1e-6)
    assert validate(inst, extracted).ok
    # the same point, re-encoded from the Solution, satisfies every row
    values = solution_values(inst, idx, extracted)
    full = {v.name: values.get(v.name, 0.0) for v in model.variables}
    assert model.violations(full) == []
    assert model.evaluate(full) == pytest.approx(sol.objective, rel=1e-9)


@pytest.mark.parametrize("seed", range(25))
def test_state_variables_jump_once_along_route(seed):
    inst = random_tiny_instance(seed)
    model, idx = build_full_model(inst)
    mip = solve_mip(model)
    sol = extract_solution(inst, idx, mip)
    for k in inst.commodities:
        res = sol.commodities[k.id]
        if not res.accepted:
            continue
        nodes = res.nodes
        assert len(set(nodes)) == len(nodes)
        for f in k.chain.functions:
            states = [round(mip.values[idx.name(("Y", k.id, f, u))]) for u in nodes]
            assert states == sorted(states) and states[0] == 0 and states[-1] == 1
            jump = nodes[states.index(1)]
            assert round(mip.values[idx.name(("y", k.id, f, jump))]) == 1


@pytest.mark.parametrize("seed", range(20))
def test_cuts_keep_integer_optimum_and_tighten_lp(seed):
    inst = random_tiny_instance(seed)
    with_cuts, _ = build_full_model(inst)
    without, _ = build_full_model(inst, NO_CUTS)
    assert solve_mip(with_cuts).objective == pytest.approx(solve_mip(without).objective, rel=1e-9)
    assert solve_lp(with_cuts).objective >= solve_lp(without).objective - 1e-6 * max(1.0, abs(solve_lp(without).objective))


def with_slack(inst: Instance) -> Instance:
    g = inst.graph
    graph = NetworkGraph(
        tuple(Node(n.id, 50) for n in g.nodes),
        tuple(Arc(a.tail, a.head, 1e5, a.latency, a.unit_cost) for a in g.arcs),
    )
    return inst.replace(graph=graph)


@pytest.mark.parametrize("seed", range(30))
def test_default_r_never_rejects_serviceable_commodity(seed):
    inst = with_slack(random_tiny_instance(seed))
    model, idx = build_full_model(inst)
    sol = extract_solution(inst, idx, solve_mip(model))
    for k in inst.commodities:
        alone = brute_force(inst.replace(commodities=(k,)))
        assert sol.commodities[k.id].accepted == (alone.choice[k.id] is not None)


def test_restricted_single_function_route_of_three():
    g = builtin_topology("line(4)")
    vnfs = (VnfType("f", 1000, 50),)
    k = Commodity("k", "n0", "n3", 100, 100, ChainSpec(("f",)))
    inst = Instance(g, vnfs, (k,), frozenset())
    route = (("n0", "n1"), ("n1", "n2"), ("n2", "n3"))
    model, idx = build_restricted_model(inst, {"k": route})
    mip = solve_mip(model)
    sol = extract_solution(inst, idx, mip)
    assert sol.commodities["k"].accepted
    assert sol.commodities["k"].assignment["f"] in {"n1", "n2", "n3"}
    assert sum(sol.instances.values()) == 1
    assert mip.objective == pytest.approx(50)


def test_restricted_reject_marker_forces_rejection():
    inst = line3_instance(("f", "g"))
    model, idx = build_restricted_model(inst, {"k": REJECT})
    mip = solve_mip(model)
    sol = extract_solution(inst, idx, mip)
    assert sol.rejected == ["k"]
    assert sol.commodities["k"].assignment == {}
    assert mip.objective == pytest.approx(idx.penalty_rate * 100)


def test_restricted_rejects_undeployable_route():
    # three anti-affine functions cannot share the two nodes entered by the route
    inst = line3_instance(("f", "g", "h"))
    inst = inst.replace(anti_affinity=frozenset({frozenset(p) for p in (("f", "g"), ("g", "h"), ("f", "h"))}))
    model, idx = build_restricted_model(inst, {"k": (("n0", "n1"), ("n1", "n2"))})
    sol = extract_solution(inst, idx, solve_mip(model))
    assert sol.rejected == ["k"]


@pytest.mark.parametrize(
    "route",
    [
        (("n0", "n1"),),  # does not reach the sink
        (("n0", "n2"),),  # arc not in graph
        (("n0", "n1"), ("n1", "n0"), ("n0", "n1"), ("n1", "n2")),  # revisits
    ],
)
def test_restricted_rejects_bad_routes(route):
    with pytest.raises(ValueError):
        build_restricted_model(line3_instance(), {"k": route})


def test_restricted_rejects_joint_overload():
    inst = line3_instance(demand=600)
    inst = inst.replace(commodities=inst.commodities + (Commodity("k2", "n0", "n2", 600, 100, ChainSpec(())),))
    inst = inst.replace(graph=NetworkGraph(inst.graph.nodes, tuple(Arc(a.tail, a.head, 1000, 1, 10) for a in inst.graph.arcs)))
    route = (("n0", "n1"), ("n1", "n2"))
    with pytest.raises(ValueError, match="bandwidth"):
        build_restricted_model(inst, {"k": route, "k2": route})
