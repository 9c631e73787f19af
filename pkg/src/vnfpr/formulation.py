"""MILP formulations of joint VNF placement and routing.

Variables (stable names, used by the LP-file backend)::

    q_k_u_v   binary   commodity k routed on arc (u, v)
    y_k_f_u   binary   function f serves commodity k on node u
    Y_k_f_u   binary   k has already met f when it reaches u (or at u)
    x_f_u     integer  instances of f on node u
    qbar_k    binary   commodity k rejected

The same builder serves the sequential allocator: given a residual state,
``x`` counts only *new* instances and capacities/rates are residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from .instance import Commodity, Instance
from .milp import MilpModel, MipSolution, Sense, VarKind
from .solution import CommodityResult, Solution

Role = tuple
Arc = tuple[str, str]

REJECT: tuple = ()
"""Marker route for :func:`build_restricted_model`: the commodity is rejected up front."""

R_SAFETY = 1.01
ROUND_TOL = 1e-6


class ExtractionError(ValueError):
    """Solver values that do not describe a consistent solution."""

    def __init__(self, commodity: str, family: str, detail: str):
        self.commodity, self.family = commodity, family
        super().__init__(f"commodity {commodity}: {family}: {detail}")


class Residual(Protocol):
    bandwidth: Mapping[Arc, float]
    cores: Mapping[str, int]
    installed: Mapping[tuple[str, str], int]
    used_rate: Mapping[tuple[str, str], float]


@dataclass(frozen=True)
class FormulationOptions:
    rejection_enabled: bool = True
    strengthening_cuts: bool = True
    rejection_penalty_r: float | None = None

    def __post_init__(self) -> None:
        if self.rejection_penalty_r is not None and not self.rejection_penalty_r > 0:
            raise ValueError("rejection penalty must be > 0")


def var_name(role: Role) -> str:
    return "_".join(str(p) for p in role)


@dataclass
class VarIndex:
    """Two-way map between variable roles such as ``("y", k, f, u)`` and model names."""

    commodities: tuple[str, ...] = ()
    penalty_rate: float = 0.0
    fixed_routes: dict[str, tuple[Arc, ...]] | None = None
    residual: Residual | None = None
    _col: dict[Role, int] = field(default_factory=dict)
    _name: dict[Role, str] = field(default_factory=dict)
    _role: dict[str, Role] = field(default_factory=dict)

    def add(self, model: MilpModel, role: Role, kind: VarKind, lower: float = 0.0, upper: float = 1.0) -> int:
        name = var_name(role)
        j = model.add_var(name, kind, lower, upper)
        self._col[role], self._name[role], self._role[name] = j, name, role
        return j

    def __getitem__(self, role: Role) -> int:
        return self._col[role]

    def __contains__(self, role: Role) -> bool:
        return role in self._col

    def __len__(self) -> int:
        return len(self._col)

    def name(self, role: Role) -> str:
        return self._name[role]

    def role(self, name: str) -> Role:
        return self._role[name]

    def roles(self, kind: str | None = None) -> list[Role]:
        return [r for r in self._col if kind is None or r[0] == kind]


def default_r(inst: Instance) -> float:
    """Per-Mb rejection penalty exceeding any allocation cost, times a 1.01 safety factor."""
    if not inst.commodities:
        raise ValueError("default_r needs at least one commodity")
    demands = [k.demand for k in inst.commodities]
    max_arc_cost = max((a.unit_cost for a in inst.graph.arcs), default=0.0)
    max_cores = max((n.cores for n in inst.graph.nodes), default=0)
    max_vnf_cost = max((f.run_cost for f in inst.vnfs), default=0.0)
    top = (
        max(demands) * len(inst.graph.arcs) * len(inst.commodities) * max_arc_cost
        + len(inst.vnfs) * len(inst.graph.nodes) * max_cores * max_vnf_cost
    )
    return R_SAFETY * top / min(demands)


def _penalty(inst: Instance, opts: FormulationOptions) -> float:
    if opts.rejection_penalty_r is not None:
        return opts.rejection_penalty_r
    return default_r(inst) if inst.commodities else 1.0


def _select(inst: Instance, commodities: Sequence[str] | None) -> list[Commodity]:
    if commodities is None:
        return list(inst.commodities)
    return [inst.commodity_map[k] for k in commodities]


def _placement_block(
    inst: Instance,
    model: MilpModel,
    idx: VarIndex,
    coms: list[Commodity],
    opts: FormulationOptions,
    residual: Residual | None,
    inflow: Mapping[str, Mapping[str, object]],
) -> None:
    """Rows shared by the full and restricted models: capacities, assignment, order and cuts.

    ``inflow[k][u]`` is either a dict of q-columns entering u or a constant 0/1.
    """
    nodes = inst.graph.node_ids
    vnfs = inst.vnfs
    rejection = opts.rejection_enabled

    for u in nodes:
        cores = residual.cores[u] if residual else inst.graph.cores[u]
        terms = {idx[("x", f.id, u)]: f.cores_required for f in vnfs}
        model.add_constraint(terms, Sense.LE, cores, f"cores_{u}")
        for f in vnfs:
            installed = residual.installed.get((u, f.id), 0) if residual else 0
            used = residual.used_rate.get((u, f.id), 0.0) if residual else 0.0
            terms = {idx[("y", k.id, f.id, u)]: k.demand for k in coms}
            terms[idx[("x", f.id, u)]] = -f.max_rate
            model.add_constraint(terms, Sense.LE, f.max_rate * installed - used, f"vcap_{f.id}_{u}")

    for k in coms:
        members = set(k.chain.functions)
        for f, g in inst.anti_affine_pairs(k):
            for u in nodes:
                model.add_constraint(
                    {idx[("y", k.id, f, u)]: 1, idx[("y", k.id, g, u)]: 1}, Sense.LE, 1, f"aa_{k.id}_{f}_{g}_{u}"
                )
        for f in vnfs:
            model.add_constraint({idx[("Y", k.id, f.id, k.source)]: 1}, Sense.EQ, 0, f"ysrc_{k.id}_{f.id}")
        for f in k.chain.functions:
            terms = {idx[("Y", k.id, f, k.sink)]: 1}
            if rejection:
                terms[idx[("qbar", k.id)]] = 1
            model.add_constraint(terms, Sense.EQ, 1, f"ydst_{k.id}_{f}")
        for f, g in k.chain.ordered_pairs:
            for u in nodes:
                model.add_constraint(
                    {idx[("Y", k.id, f, u)]: 1, idx[("Y", k.id, g, u)]: -1}, Sense.GE, 0, f"ord_{k.id}_{f}_{g}_{u}"
                )

        if opts.strengthening_cuts:
            for f, g in inst.anti_affine_pairs():
                for u in nodes:
                    terms = {idx[("y", k.id, f, u)]: 1, idx[("y", k.id, g, u)]: 1}
                    rhs = _sub_inflow(terms, inflow[k.id][u])
                    model.add_constraint(terms, Sense.LE, rhs, f"aacut_{k.id}_{f}_{g}_{u}")
            for f in vnfs:
                for u in nodes:
                    terms = {idx[("y", k.id, f.id, u)]: 1}
                    rhs = _sub_inflow(terms, inflow[k.id][u])
                    model.add_constraint(terms, Sense.LE, rhs, f"onpath_{k.id}_{f.id}_{u}")
            for f in vnfs:
                terms = {idx[("y", k.id, f.id, u)]: 1 for u in nodes}
                rhs = 1 if f.id in members else 0
                if rejection and f.id in members:
                    terms[idx[("qbar", k.id)]] = 1
                model.add_constraint(terms, Sense.EQ, rhs, f"assign_{k.id}_{f.id}")
            for f in vnfs:
                for u in nodes:
                    installed = residual.installed.get((u, f.id), 0) if residual else 0
                    model.add_constraint(
                        {idx[("y", k.id, f.id, u)]: 1, idx[("x", f.id, u)]: -1},
                        Sense.LE,
                        installed,
                        f"inst_{k.id}_{f.id}_{u}",
                    )

        if rejection:
            qb = idx[("qbar", k.id)]
            for f in vnfs:
                for u in nodes:
                    model.add_constraint({idx[("y", k.id, f.id, u)]: 1, qb: 1}, Sense.LE, 1, f"rejy_{k.id}_{f.id}_{u}")
                    model.add_constraint({idx[("Y", k.id, f.id, u)]: 1, qb: 1}, Sense.LE, 1, f"rejY_{k.id}_{f.id}_{u}")


def _sub_inflow(terms: dict[int, float], inflow: object) -> float:
    """Move the entering-flow expression to the left-hand side; return the rhs."""
    if isinstance(inflow, dict):
        for j in inflow.values():
            terms[j] = terms.get(j, 0.0) - 1.0
        return 0.0
    return float(inflow)


def _declare_placement_vars(inst: Instance, model: MilpModel, idx: VarIndex, coms: list[Commodity], residual: Residual | None) -> None:
    nodes = inst.graph.node_ids
    for k in coms:
        for f in inst.vnfs:
            for u in nodes:
                idx.add(model, ("y", k.id, f.id, u), VarKind.BINARY)
    for k in coms:
        for f in inst.vnfs:
            for u in nodes:
                idx.add(model, ("Y", k.id, f.id, u), VarKind.BINARY)
    for f in inst.vnfs:
        for u in nodes:
            cores = residual.cores[u] if residual else inst.graph.cores[u]
            idx.add(model, ("x", f.id, u), VarKind.INTEGER, 0, max(0, cores // f.cores_required))


def build_full_model(
    inst: Instance,
    opts: FormulationOptions = FormulationOptions(),
    *,
    commodities: Sequence[str] | None = None,
    residual: Residual | None = None,
) -> tuple[MilpModel, VarIndex]:
    """Joint routing + placement model, optionally over a subset of commodities
    and against a residual network state."""
    coms = _select(inst, commodities)
    r = _penalty(inst, opts)
    model = MilpModel("vnfpr_full")
    idx = VarIndex(tuple(k.id for k in coms), r, None, residual)
    g = inst.graph

    for k in coms:
        for a in g.arcs:
            idx.add(model, ("q", k.id, a.tail, a.head), VarKind.BINARY)
    _declare_placement_vars(inst, model, idx, coms, residual)
    if opts.rejection_enabled:
        for k in coms:
            idx.add(model, ("qbar", k.id), VarKind.BINARY)

    for k in coms:
        for u in g.node_ids:
            terms = {idx[("q", k.id, a.tail, a.head)]: 1.0 for a in g.out_arcs[u]}
            for a in g.in_arcs[u]:
                terms[idx[("q", k.id, a.tail, a.head)]] = -1.0
            rhs = 1.0 if u == k.source else -1.0 if u == k.sink else 0.0
            if opts.rejection_enabled and u in (k.source, k.sink):
                terms[idx[("qbar", k.id)]] = rhs
            model.add_constraint(terms, Sense.EQ, rhs, f"flow_{k.id}_{u}")

    for a in g.arcs:
        cap = residual.bandwidth[a.key] if residual else a.bandwidth
        terms = {idx[("q", k.id, a.tail, a.head)]: k.demand for k in coms}
        model.add_constraint(terms, Sense.LE, cap, f"cap_{a.tail}_{a.head}")
    for k in coms:
        terms = {idx[("q", k.id, a.tail, a.head)]: a.latency for a in g.arcs}
        model.add_constraint(terms, Sense.LE, k.latency_bound, f"lat_{k.id}")

    inflow = {
        k.id: {u: {a.key: idx[("q", k.id, a.tail, a.head)] for a in g.in_arcs[u]} for u in g.node_ids}
        for k in coms
    }
    _placement_block(inst, model, idx, coms, opts, residual, inflow)

    for k in coms:
        members = k.chain.functions
        for a in g.arcs:
            q = idx[("q", k.id, a.tail, a.head)]
            for f in members:
                model.add_constraint(
                    {
                        q: 1,
                        idx[("Y", k.id, f, a.head)]: 1,
                        idx[("Y", k.id, f, a.tail)]: -1,
                        idx[("y", k.id, f, a.head)]: -1,
                    },
                    Sense.LE,
                    1,
                    f"act_{k.id}_{f}_{a.tail}_{a.head}",
                )

    obj: dict[int, float] = {}
    for k in coms:
        for a in g.arcs:
            obj[idx[("q", k.id, a.tail, a.head)]] = k.demand * a.unit_cost
    for f in inst.vnfs:
        for u in g.node_ids:
            obj[idx[("x", f.id, u)]] = f.run_cost
    if opts.rejection_enabled:
        for k in coms:
            obj[idx[("qbar", k.id)]] = r * k.demand
    model.set_objective(obj)
    return model, idx


def check_routes(
    inst: Instance,
    routes: Mapping[str, Sequence[Arc]],
    residual_bandwidth: Mapping[Arc, float] | None = None,
) -> None:
    """Raise ValueError unless every non-empty route is a simple s-d path and
    the routes jointly fit the (residual) arc bandwidths."""
    arcs = inst.graph.arc_map
    load: dict[Arc, float] = {}
    for kid, route in routes.items():
        k = inst.commodity_map.get(kid)
        if k is None:
            raise ValueError(f"route given for unknown commodity {kid!r}")
        if not route:
            continue
        route = [tuple(a) for a in route]
        if route[0][0] != k.source or route[-1][1] != k.sink:
            raise ValueError(f"route of {kid} does not join its source to its sink")
        seen = {k.source}
        for i, a in enumerate(route):
            if a not in arcs:
                raise ValueError(f"route of {kid} uses unknown arc {a}")
            if i and route[i - 1][1] != a[0]:
                raise ValueError(f"route of {kid} is not contiguous at {a}")
            if a[1] in seen:
                raise ValueError(f"route of {kid} revisits node {a[1]}")
            seen.add(a[1])
            load[a] = load.get(a, 0.0) + k.demand
    for a, used in load.items():
        cap = residual_bandwidth[a] if residual_bandwidth is not None else arcs[a].bandwidth
        if used > cap + 1e-9:
            raise ValueError(f"routes exceed bandwidth of arc {a}: {used} > {cap}")


def build_restricted_model(
    inst: Instance,
    fixed_routes: Mapping[str, Sequence[Arc]],
    opts: FormulationOptions = FormulationOptions(),
    *,
    residual: Residual | None = None,
) -> tuple[MilpModel, VarIndex]:
    """VNF deployment on pre-computed routes; routes are constants, not variables.

    Commodities whose chain cannot be deployed on their route end up rejected.
    A route equal to :data:`REJECT` forces rejection.
    """
    check_routes(inst, fixed_routes, residual.bandwidth if residual else None)
    opts = FormulationOptions(True, opts.strengthening_cuts, opts.rejection_penalty_r)
    coms = [k for k in inst.commodities if k.id in fixed_routes]
    r = _penalty(inst, opts)
    model = MilpModel("vnfpr_restricted")
    routes = {k.id: tuple(tuple(a) for a in fixed_routes[k.id]) for k in coms}
    idx = VarIndex(tuple(k.id for k in coms), r, routes, residual)
    g = inst.graph

    _declare_placement_vars(inst, model, idx, coms, residual)
    for k in coms:
        forced = not routes[k.id]
        idx.add(model, ("qbar", k.id), VarKind.BINARY, 1.0 if forced else 0.0, 1.0)

    inflow = {}
    for k in coms:
        heads = {v for _, v in routes[k.id]}
        inflow[k.id] = {u: 1.0 if u in heads else 0.0 for u in g.node_ids}
    _placement_block(inst, model, idx, coms, opts, residual, inflow)

    for k in coms:
        qb = idx[("qbar", k.id)]
        for u, v in routes[k.id]:
            for f in k.chain.functions:
                model.add_constraint(
                    {idx[("Y", k.id, f, v)]: 1, idx[("Y", k.id, f, u)]: -1, idx[("y", k.id, f, v)]: -1, qb: -1},
                    Sense.LE,
                    0,
                    f"act_{k.id}_{f}_{u}_{v}",
                )

    obj: dict[int, float] = {}
    for f in inst.vnfs:
        for u in g.node_ids:
            obj[idx[("x", f.id, u)]] = f.run_cost
    for k in coms:
        obj[idx[("qbar", k.id)]] = r * k.demand
    model.set_objective(obj)
    return model, idx


def _is_one(v: float) -> bool:
    return v > 0.5


def _follow_route(inst: Instance, idx: VarIndex, k: Commodity, values: Mapping[str, float]) -> tuple[Arc, ...]:
    g = inst.graph
    route: list[Arc] = []
    u, seen = k.source, {k.source}
    while u != k.sink:
        nxt = [a for a in g.out_arcs[u] if _is_one(values[idx.name(("q", k.id, a.tail, a.head))])]
        if len(nxt) != 1:
            raise ExtractionError(k.id, "flow", f"{len(nxt)} used arcs leave node {u}")
        a = nxt[0]
        if a.head in seen:
            raise ExtractionError(k.id, "flow", f"route revisits node {a.head}")
        route.append(a.key)
        seen.add(a.head)
        u = a.head
    return tuple(route)


def extract_solution(inst: Instance, idx: VarIndex, mip: MipSolution) -> Solution:
    """Turn solver values into a :class:`Solution`.

    Each function is assigned where its state variable first turns on along
    the route. Instance counts are the model's ``x`` values, i.e. new
    instances only when the model was built against a residual state.
    """
    if not mip.values:
        raise ValueError(f"no solution values to extract (status {mip.status})")
    values = mip.values
    results: dict[str, CommodityResult] = {}
    for kid in idx.commodities:
        k = inst.commodity_map[kid]
        if ("qbar", kid) in idx and _is_one(values[idx.name(("qbar", kid))]):
            results[kid] = CommodityResult(kid, False)
            continue
        route = idx.fixed_routes[kid] if idx.fixed_routes is not None else _follow_route(inst, idx, k, values)
        heads = [v for _, v in route]
        assignment = {}
        for f in k.chain.functions:
            node = next((v for v in heads if _is_one(values[idx.name(("Y", kid, f, v))])), None)
            if node is None:
                raise ExtractionError(kid, "assignment_count", f"function {f} never met along the route")
            if not _is_one(values[idx.name(("y", kid, f, node))]):
                raise ExtractionError(kid, "on_path", f"function {f} state turns on at {node} without assignment")
            assignment[f] = node
        results[kid] = CommodityResult(kid, True, route, assignment)
    counts = {}
    for role in idx.roles("x"):
        n = int(round(values[idx.name(role)]))
        if n:
            counts[(role[2], role[1])] = n
    sol = Solution(results, counts, idx.penalty_rate)
    return sol.with_cost(inst)


def solution_values(inst: Instance, idx: VarIndex, sol: Solution) -> dict[str, float]:
    """Model values encoding ``sol`` in a full model built without a residual state.

    Used to hand a known feasible solution to the solver as its first incumbent.
    """
    if idx.fixed_routes is not None or idx.residual is not None:
        raise ValueError("solution_values needs a full model over the whole network")
    values: dict[str, float] = {}
    for kid in idx.commodities:
        res = sol.commodities.get(kid)
        if res is None or not res.accepted:
            if ("qbar", kid) not in idx:
                raise ValueError(f"commodity {kid} is rejected but the model forbids rejection")
            values[idx.name(("qbar", kid))] = 1.0
            continue
        k = inst.commodity_map[kid]
        position = {v: i for i, (_, v) in enumerate(res.route)}
        for a in res.route:
            values[idx.name(("q", kid, *a))] = 1.0
        for f, node in res.assignment.items():
            values[idx.name(("y", kid, f, node))] = 1.0
            for v, i in position.items():
                if i >= position[node]:
                    values[idx.name(("Y", kid, f, v))] = 1.0
        if set(res.assignment) != set(k.chain.functions):
            raise ValueError(f"commodity {kid} has an incomplete assignment")
    for (u, f), n in sol.instances.items():
        values[idx.name(("x", f, u))] = float(n)
    return values
