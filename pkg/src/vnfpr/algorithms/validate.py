"""Independent feasibility check of a :class:`Solution`, without MILP variables."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..instance import Instance
from ..solution import CostBreakdown, Solution, compute_cost

FAMILIES = (
    "flow",
    "link_cap",
    "latency",
    "cores",
    "vnf_cap",
    "anti_affinity",
    "order",
    "assignment_count",
    "on_path",
)
TOL = 1e-6


@dataclass(frozen=True)
class Violation:
    family: str
    commodity: str | None = None
    node: str | None = None
    arc: tuple[str, str] | None = None
    functions: tuple[str, ...] | None = None
    detail: str = ""

    def __str__(self) -> str:
        where = ", ".join(
            f"{k}={v}"
            for k, v in (("commodity", self.commodity), ("node", self.node), ("arc", self.arc), ("functions", self.functions))
            if v is not None
        )
        return f"[{self.family}] {where}: {self.detail}" if where else f"[{self.family}] {self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    accepted: list[str] = field(default_factory=list)
    rejected: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def families(self) -> set[str]:
        return {v.family for v in self.violations}

    def by_family(self) -> dict[str, list[Violation]]:
        out: dict[str, list[Violation]] = {}
        for v in self.violations:
            out.setdefault(v.family, []).append(v)
        return out


def _cap_exceeded(used: float, cap: float) -> bool:
    return used > cap + TOL * max(1.0, abs(cap))


def validate(inst: Instance, sol: Solution) -> ValidationReport:
    """Check routes, capacities, latency, anti-affinity, order and assignments.

    Functions may be hosted on any route node after the source (where the
    flow enters the node). Co-locating two order-related functions satisfies
    the precedence; only anti-affinity forbids co-location.
    """
    rep = ValidationReport()
    add = rep.violations.append
    arcs = inst.graph.arc_map
    vnfs = inst.vnf_map
    load: dict[tuple[str, str], float] = {}
    served: dict[tuple[str, str], float] = {}

    for kid in sol.commodities:
        if kid not in inst.commodity_map:
            add(Violation("flow", kid, detail="unknown commodity"))

    for k in inst.commodities:
        res = sol.commodities.get(k.id)
        if res is None or not res.accepted:
            rep.rejected.append(k.id)
            if res is not None and res.route:
                add(Violation("flow", k.id, detail="rejected commodity has a route"))
            if res is not None and res.assignment:
                add(Violation("assignment_count", k.id, detail="rejected commodity has assignments"))
            continue
        rep.accepted.append(k.id)
        route = [tuple(a) for a in res.route]

        path_ok = bool(route) and route[0][0] == k.source and route[-1][1] == k.sink
        seen = {k.source}
        for i, a in enumerate(route):
            if a not in arcs:
                path_ok = False
                add(Violation("flow", k.id, arc=a, detail="arc not in graph"))
                continue
            if i and route[i - 1][1] != a[0]:
                path_ok = False
            if a[1] in seen:
                path_ok = False
            seen.add(a[1])
        if not path_ok:
            add(Violation("flow", k.id, detail="route is not a simple source-to-sink path"))
        for a in route:
            if a in arcs:
                load[a] = load.get(a, 0.0) + k.demand
        latency = sum(arcs[a].latency for a in route if a in arcs)
        if path_ok and _cap_exceeded(latency, k.latency_bound):
            add(Violation("latency", k.id, detail=f"latency {latency:g} > bound {k.latency_bound:g}"))

        members = set(k.chain.functions)
        missing = members - set(res.assignment)
        extra = set(res.assignment) - members
        if missing or extra:
            add(
                Violation(
                    "assignment_count",
                    k.id,
                    functions=tuple(sorted(missing | extra)),
                    detail=f"missing {sorted(missing)}, unexpected {sorted(extra)}",
                )
            )
        hosts = [a[1] for a in route]
        position = {v: i + 1 for i, v in enumerate(hosts)}
        for f, u in sorted(res.assignment.items()):
            if f in members:
                served[(u, f)] = served.get((u, f), 0.0) + k.demand
            if u not in position:
                add(Violation("on_path", k.id, node=u, functions=(f,), detail="assigned node not on route"))
        for f, g in inst.anti_affine_pairs(k):
            uf, ug = res.assignment.get(f), res.assignment.get(g)
            if uf is not None and uf == ug:
                add(Violation("anti_affinity", k.id, node=uf, functions=(f, g), detail="anti-affine functions co-located"))
        for f, g in k.chain.ordered_pairs:
            uf, ug = res.assignment.get(f), res.assignment.get(g)
            if uf in position and ug in position and position[uf] > position[ug]:
                add(Violation("order", k.id, functions=(f, g), detail=f"{f} must precede {g}"))

    for a, used in sorted(load.items()):
        if _cap_exceeded(used, arcs[a].bandwidth):
            add(Violation("link_cap", arc=a, detail=f"load {used:g} > bandwidth {arcs[a].bandwidth:g}"))

    cores_used: dict[str, int] = {}
    for (u, f), n in sol.instances.items():
        if f in vnfs:
            cores_used[u] = cores_used.get(u, 0) + n * vnfs[f].cores_required
    for u, used in sorted(cores_used.items()):
        cap = inst.graph.cores.get(u, 0)
        if used > cap:
            add(Violation("cores", node=u, detail=f"{used} cores used > {cap}"))

    for (u, f), rate in sorted(served.items()):
        cap = vnfs[f].max_rate * sol.instances.get((u, f), 0) if f in vnfs else 0.0
        if _cap_exceeded(rate, cap):
            add(Violation("vnf_cap", node=u, functions=(f,), detail=f"rate {rate:g} > capacity {cap:g}"))
    return rep


def cost_of(inst: Instance, sol: Solution, penalty_rate: float | None = None) -> CostBreakdown:
    """Routing, VNF and rejection costs of ``sol`` (rejection at ``sol.penalty_rate`` by default)."""
    return compute_cost(inst, sol, penalty_rate)
