import copy

import pytest
from helpers import graph_from_edges
from oracles import random_tiny_instance

from vnfpr.algorithms import FAMILIES, cost_of, solve_exact, validate
from vnfpr.generator import builtin_topology
from vnfpr.instance import ChainSpec, Commodity, Instance, VnfType
from vnfpr.solution import CommodityResult, Solution, empty_solution


def base_case():
    g = graph_from_edges(
        [("s", "a"), ("a", "d"), ("s", "b"), ("b", "d", 150), ("d", "w"), ("a", "w")], cores=2
    )
    vnfs = (VnfType("f", 1000, 100), VnfType("g", 1000, 100))
    coms = (
        Commodity("k1", "s", "d", 100, 10, ChainSpec(("f", "g"), frozenset({("f", "g")}))),
        Commodity("k2", "s", "d", 100, 2, ChainSpec(())),
        Commodity("k3", "a", "w", 100, 10, ChainSpec(("f",))),
    )
    inst = Instance(g, vnfs, coms, frozenset({frozenset(("f", "g"))}))
    sol = Solution(
        {
            "k1": CommodityResult("k1", True, (("s", "a"), ("a", "d")), {"f": "a", "g": "d"}),
            "k2": CommodityResult("k2", True, (("s", "b"), ("b", "d")), {}),
            "k3": CommodityResult("k3", True, (("a", "w"),), {"f": "w"}),
        },
        {("a", "f"): 1, ("d", "g"): 1, ("w", "f"): 1},
        1000.0,
    )
    return inst, sol


def _flow(sol):
    sol.commodities["k1"].route = (("s", "a"), ("a", "s"), ("s", "a"), ("a", "d"))


def _link_cap(sol):
    sol.commodities["k1"].route = (("s", "b"), ("b", "d"))
    sol.commodities["k1"].assignment["f"] = "b"
    del sol.instances[("a", "f")]
    sol.instances[("b", "f")] = 1


def _latency(sol):
    sol.commodities["k2"].route = (("s", "a"), ("a", "w"), ("w", "d"))


def _cores(sol):
    sol.instances[("a", "f")] = 3


def _vnf_cap(sol):
    sol.instances[("d", "g")] = 0


def _anti_affinity(sol):
    sol.commodities["k1"].assignment["g"] = "a"
    sol.instances[("a", "g")] = 1


def _order(sol):
    sol.commodities["k1"].assignment.update(f="d", g="a")
    sol.instances.update({("d", "f"): 1, ("a", "g"): 1})
    del sol.instances[("a", "f")], sol.instances[("d", "g")]


def _assignment_count(sol):
    del sol.commodities["k1"].assignment["g"]


def _on_path(sol):
    sol.commodities["k1"].assignment["f"] = "w"  # w already runs f with spare rate


MUTATIONS = {
    "flow": _flow,
    "link_cap": _link_cap,
    "latency": _latency,
    "cores": _cores,
    "vnf_cap": _vnf_cap,
    "anti_affinity": _anti_affinity,
    "order": _order,
    "assignment_count": _assignment_count,
    "on_path": _on_path,
}


def test_base_solution_is_valid():
    inst, sol = base_case()
    assert validate(inst, sol).ok


def test_mutations_cover_all_families():
    assert set(MUTATIONS) == set(FAMILIES)


@pytest.mark.parametrize("family", FAMILIES)
def test_mutation_triggers_exactly_its_family(family):
    inst, sol = base_case()
    sol = copy.deepcopy(sol)
    MUTATIONS[family](sol)
    report = validate(inst, sol)
    assert report.families() == {family}, [str(v) for v in report.violations]


def test_colocated_order_pair_is_legal():
    inst, sol = base_case()
    inst = inst.replace(anti_affinity=frozenset())
    sol.commodities["k1"].assignment["g"] = "a"
    sol.instances[("a", "g")] = 1
    assert validate(inst, sol).ok


def test_source_is_not_a_host():
    inst, sol = base_case()
    sol.commodities["k3"].assignment["f"] = "a"  # k3 starts at a
    assert validate(inst, sol).families() == {"on_path"}


def test_unknown_commodity_and_arc_reported():
    inst, sol = base_case()
    sol.commodities["zz"] = CommodityResult("zz", True, (("s", "a"),), {})
    sol.commodities["k2"].route = (("s", "q"), ("q", "d"))
    assert validate(inst, sol).families() == {"flow"}


def test_empty_solution_rejects_everything():
    inst, _ = base_case()
    report = validate(inst, empty_solution(inst, 1.0))
    assert report.ok and report.rejected == ["k1", "k2", "k3"]


@pytest.mark.parametrize("seed", range(15))
def test_exact_solutions_validate(seed):
    inst = random_tiny_instance(seed)
    sol, _ = solve_exact(inst)
    assert validate(inst, sol).ok


def test_cost_arithmetic():
    g = builtin_topology("line(3)")
    inst = Instance(g, (VnfType("f", 5000, 200),), (Commodity("k", "n0", "n2", 100, 100, ChainSpec(("f",))),), frozenset())
    sol = Solution({"k": CommodityResult("k", True, (("n0", "n1"), ("n1", "n2")), {"f": "n1"})}, {("n1", "f"): 1}, 7.0)
    cost = cost_of(inst, sol)
    assert (cost.routing, cost.vnf, cost.rejection_penalty) == (2000, 200, 0)
    empty = cost_of(inst, empty_solution(inst, 7.0))
    assert (empty.routing, empty.vnf, empty.rejection_penalty) == (0, 0, 700)
    assert cost_of(inst, sol, penalty_rate=1.0).total == 2200
