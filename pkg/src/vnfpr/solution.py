from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from .instance import Instance

Arc = tuple[str, str]


@dataclass
class CommodityResult:
    id: str
    accepted: bool
    route: tuple[Arc, ...] = ()
    assignment: dict[str, str] = field(default_factory=dict)

    @property
    def nodes(self) -> list[str]:
        """Node sequence of the route (empty when rejected)."""
        if not self.route:
            return []
        return [self.route[0][0]] + [v for _, v in self.route]


@dataclass(frozen=True)
class CostBreakdown:
    routing: float
    vnf: float
    rejection_penalty: float

    @property
    def total(self) -> float:
        return self.routing + self.vnf + self.rejection_penalty

    def as_dict(self) -> dict[str, float]:
        return {
            "routing": self.routing,
            "vnf": self.vnf,
            "rejection_penalty": self.rejection_penalty,
            "total": self.total,
        }


@dataclass
class Solution:
    """Routes, function assignments and instance counts for every commodity."""

    commodities: dict[str, CommodityResult]
    instances: dict[tuple[str, str], int]
    penalty_rate: float
    cost: CostBreakdown | None = None

    @property
    def rejected(self) -> list[str]:
        return [k for k, c in self.commodities.items() if not c.accepted]

    @property
    def accepted(self) -> list[str]:
        return [k for k, c in self.commodities.items() if c.accepted]

    def with_cost(self, inst: Instance) -> "Solution":
        self.cost = compute_cost(inst, self)
        return self


def compute_cost(inst: Instance, sol: Solution, penalty_rate: float | None = None) -> CostBreakdown:
    r = sol.penalty_rate if penalty_rate is None else penalty_rate
    arcs = inst.graph.arc_map
    routing = 0.0
    penalty = 0.0
    for k in inst.commodities:
        res = sol.commodities.get(k.id)
        if res is None or not res.accepted:
            penalty += r * k.demand
            continue
        routing += sum(k.demand * arcs[a].unit_cost for a in res.route if a in arcs)
    vnfs = inst.vnf_map
    vnf = sum(count * vnfs[f].run_cost for (_, f), count in sol.instances.items() if f in vnfs)
    return CostBreakdown(routing, vnf, penalty)


def empty_solution(inst: Instance, penalty_rate: float) -> Solution:
    sol = Solution({k.id: CommodityResult(k.id, False) for k in inst.commodities}, {}, penalty_rate)
    return sol.with_cost(inst)


def solution_to_dict(sol: Solution) -> dict[str, Any]:
    out: dict[str, Any] = {
        "penalty_rate": sol.penalty_rate,
        "commodities": [
            {
                "id": c.id,
                "accepted": c.accepted,
                "route": [list(a) for a in c.route],
                "assignment": dict(sorted(c.assignment.items())),
            }
            for c in sol.commodities.values()
        ],
        "instances": [
            {"node": u, "vnf": f, "count": n} for (u, f), n in sorted(sol.instances.items()) if n
        ],
    }
    if sol.cost is not None:
        out["cost"] = sol.cost.as_dict()
    return out


def solution_from_dict(doc: Mapping[str, Any]) -> Solution:
    try:
        commodities = {
            c["id"]: CommodityResult(
                str(c["id"]),
                bool(c["accepted"]),
                tuple((str(a[0]), str(a[1])) for a in c.get("route", [])),
                {str(f): str(u) for f, u in c.get("assignment", {}).items()},
            )
            for c in doc["commodities"]
        }
        instances = {(str(e["node"]), str(e["vnf"])): int(e["count"]) for e in doc.get("instances", [])}
        rate = float(doc["penalty_rate"])
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ValueError(f"malformed solution document: {exc}") from None
    cost = None
    if "cost" in doc:
        c = doc["cost"]
        cost = CostBreakdown(float(c["routing"]), float(c["vnf"]), float(c["rejection_penalty"]))
    return Solution(commodities, instances, rate, cost)
