"""LP-relaxation rounding heuristic with a greedy fallback for rejected commodities."""

from __future__ import annotations

import logging
from typing import Mapping, Sequence

from ..formulation import (
    REJECT,
    FormulationOptions,
    build_full_model,
    build_restricted_model,
    extract_solution,
)
from ..instance import Commodity, Instance
from ..milp import SolverLimits, get_backend
from ..solution import Solution
from .greedy import ResidualState, greedy_pass
from .validate import validate

log = logging.getLogger(__name__)

FLOW_EPS = 1e-6
TIE_EPS = 1e-9
STUCK = None


def select_path(
    inst: Instance,
    k: Commodity,
    q: Mapping[tuple[str, str], float],
    qbar: float = 0.0,
    residual_bandwidth: Mapping[tuple[str, str], float] | None = None,
) -> tuple[tuple[str, str], ...] | None:
    """Walk from the source along the unvisited arc carrying the most LP flow.

    Ties (within 1e-9) go to the lexicographically smallest arc. Returns
    ``STUCK`` (None) when the LP rejected the commodity (qbar > 0.5), no
    eligible arc leaves the current node, or the finished path violates
    the residual bandwidth or the latency bound.
    """
    if qbar > 0.5:
        return STUCK
    g = inst.graph
    u, visited, path = k.source, {k.source}, []
    while u != k.sink:
        if len(path) >= len(g.nodes):
            return STUCK
        cands = [a for a in g.out_arcs[u] if a.head not in visited and q.get(a.key, 0.0) > FLOW_EPS]
        if not cands:
            return STUCK
        top = max(q[a.key] for a in cands)
        a = min((a for a in cands if q[a.key] >= top - TIE_EPS), key=lambda a: a.key)
        path.append(a.key)
        visited.add(a.head)
        u = a.head
    if residual_bandwidth is not None and any(residual_bandwidth[a] < k.demand - 1e-9 for a in path):
        return STUCK
    if sum(g.arc_map[a].latency for a in path) > k.latency_bound + 1e-9:
        return STUCK
    return tuple(path)


def chain_fits_route(inst: Instance, k: Commodity, route: Sequence[tuple[str, str]]) -> bool:
    """Whether the chain of ``k`` can be placed on the nodes entered by ``route``
    respecting order and anti-affinity, ignoring every capacity except the
    node core counts. A necessary condition for deploying ``k`` on ``route``."""
    heads = [v for _, v in route]
    cores = inst.graph.cores
    need = {f: inst.vnf_map[f].cores_required for f in k.chain.functions}
    clash = {f: set() for f in k.chain.functions}
    for f, g in inst.anti_affine_pairs(k):
        clash[f].add(g)
        clash[g].add(f)
    preds = {f: [g for g, h in k.chain.order if h == f] for f in k.chain.functions}
    succs = {f: [h for g, h in k.chain.order if g == f] for f in k.chain.functions}
    pos: dict[str, int] = {}
    funcs = sorted(k.chain.functions, key=lambda f: (-len(clash[f]), f))

    def place(i: int) -> bool:
        if i == len(funcs):
            return True
        f = funcs[i]
        lo = max((pos[g] for g in preds[f] if g in pos), default=0)
        hi = min((pos[h] for h in succs[f] if h in pos), default=len(heads) - 1)
        for p in range(lo, hi + 1):
            if cores[heads[p]] < need[f] or any(pos.get(g) == p for g in clash[f]):
                continue
            pos[f] = p
            if place(i + 1):
                return True
            del pos[f]
        return False

    return place(0)


def lp_heuristic(
    inst: Instance,
    opts: FormulationOptions = FormulationOptions(),
    *,
    backend=None,
    limits: SolverLimits | None = None,
) -> tuple[Solution, list[str]]:
    backend = backend or get_backend()
    model, idx = build_full_model(inst, opts)
    lp = backend.solve_lp(model)
    if not lp.values:
        raise RuntimeError(f"LP relaxation not solved: {lp.status}")
    vals = lp.values

    bandwidth = {a.key: a.bandwidth for a in inst.graph.arcs}
    routes: dict[str, tuple] = {}
    for k in sorted(inst.commodities, key=lambda k: (-k.demand, k.id)):
        q = {a.key: vals[idx.name(("q", k.id, a.tail, a.head))] for a in inst.graph.arcs}
        qbar = vals[idx.name(("qbar", k.id))] if ("qbar", k.id) in idx else 0.0
        path = select_path(inst, k, q, qbar, bandwidth)
        if path is not STUCK and not chain_fits_route(inst, k, path):
            log.debug("chain of %s does not fit its rounded route", k.id)
            path = STUCK
        if path is STUCK:
            log.debug("select_path stuck for %s", k.id)
            routes[k.id] = REJECT
            continue
        for a in path:
            bandwidth[a] -= k.demand
        routes[k.id] = path

    rmodel, ridx = build_restricted_model(inst, routes, opts)
    all_reject = {ridx.name(("qbar", k.id)): 1.0 for k in inst.commodities}
    rmip = backend.solve_mip(rmodel, limits, incumbent=all_reject)
    restricted = extract_solution(inst, ridx, rmip)

    state = ResidualState.fresh(inst)
    for k in inst.commodities:
        res = restricted.commodities[k.id]
        if res.accepted:
            state.allocate(inst, k, res.route, res.assignment, {})
    for (u, f), n in restricted.instances.items():
        state.installed[(u, f)] = n
        state.cores[u] -= n * inst.vnf_map[f].cores_required
    rejected = [k.id for k in inst.commodities if not restricted.commodities[k.id].accepted]

    fallback = greedy_pass(
        inst, rejected, state, backend=backend, limits=limits, strengthening_cuts=opts.strengthening_cuts
    )
    results = {k.id: fallback.get(k.id, restricted.commodities[k.id]) for k in inst.commodities}
    sol = Solution(results, {key: n for key, n in state.installed.items() if n}, idx.penalty_rate).with_cost(inst)
    report = validate(inst, sol)
    if not report.ok:
        raise RuntimeError(f"heuristic produced an infeasible solution: {report.violations[:3]}")
    return sol, sol.rejected


def lp_bound(inst: Instance, opts: FormulationOptions = FormulationOptions(), *, backend=None) -> float:
    """Optimal value of the LP relaxation of the full model."""
    backend = backend or get_backend()
    model, _ = build_full_model(inst, opts)
    lp = backend.solve_lp(model)
    if not lp.values:
        raise RuntimeError(f"LP relaxation not solved: {lp.status}")
    return lp.objective
