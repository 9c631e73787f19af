"""Sequential allocator: commodities are placed one at a time on the residual network."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from ..formulation import FormulationOptions, build_full_model, default_r, extract_solution
from ..instance import Commodity, Instance
from ..milp import SolverLimits, get_backend
from ..solution import CommodityResult, Solution
from .validate import validate

log = logging.getLogger(__name__)


@dataclass
class ResidualState:
    """Residual arc bandwidth and cores, installed instances and their used rates."""

    bandwidth: dict[tuple[str, str], float]
    cores: dict[str, int]
    installed: dict[tuple[str, str], int] = field(default_factory=dict)
    used_rate: dict[tuple[str, str], float] = field(default_factory=dict)

    @classmethod
    def fresh(cls, inst: Instance) -> "ResidualState":
        return cls(
            {a.key: a.bandwidth for a in inst.graph.arcs},
            dict(inst.graph.cores),
        )

    def allocate(
        self,
        inst: Instance,
        k: Commodity,
        route: Sequence[tuple[str, str]],
        assignment: dict[str, str],
        new_instances: dict[tuple[str, str], int],
    ) -> None:
        for a in route:
            self.bandwidth[a] -= k.demand
        for (u, f), n in new_instances.items():
            if n:
                self.installed[(u, f)] = self.installed.get((u, f), 0) + n
                self.cores[u] -= n * inst.vnf_map[f].cores_required
        for f, u in assignment.items():
            self.used_rate[(u, f)] = self.used_rate.get((u, f), 0.0) + k.demand

    def check(self, inst: Instance, tol: float = 1e-6) -> None:
        for key, rate in self.used_rate.items():
            cap = inst.vnf_map[key[1]].max_rate * self.installed.get(key, 0)
            if rate < -tol or rate > cap + tol:
                raise AssertionError(f"used rate {rate} outside [0, {cap}] at {key}")
        for a, bw in self.bandwidth.items():
            if bw < -tol:
                raise AssertionError(f"negative residual bandwidth on {a}")
        for u, free in self.cores.items():
            used = sum(n * inst.vnf_map[f].cores_required for (v, f), n in self.installed.items() if v == u)
            if free < 0 or free + used != inst.graph.cores[u]:
                raise AssertionError(f"core accounting broken at {u}")


def greedy_pass(
    inst: Instance,
    commodity_ids: Sequence[str],
    state: ResidualState,
    *,
    backend=None,
    limits: SolverLimits | None = None,
    strengthening_cuts: bool = True,
) -> dict[str, CommodityResult]:
    """Allocate ``commodity_ids`` in order on ``state`` (mutated in place)."""
    backend = backend or get_backend()
    opts = FormulationOptions(rejection_enabled=False, strengthening_cuts=strengthening_cuts)
    results: dict[str, CommodityResult] = {}
    for kid in commodity_ids:
        k = inst.commodity_map[kid]
        model, idx = build_full_model(inst, opts, commodities=[kid], residual=state)
        mip = backend.solve_mip(model, limits)
        if not mip.values:
            log.debug("greedy rejects %s (%s)", kid, mip.status.value)
            results[kid] = CommodityResult(kid, False)
            continue
        part = extract_solution(inst, idx, mip)
        res = part.commodities[kid]
        state.allocate(inst, k, res.route, res.assignment, part.instances)
        results[kid] = res
    return results


def greedy(
    inst: Instance,
    *,
    backend=None,
    limits: SolverLimits | None = None,
    strengthening_cuts: bool = True,
) -> tuple[Solution, list[str]]:
    """Allocate commodities in input order; each step solves the single-commodity
    model exactly against the residual network. Infeasible commodities are rejected."""
    state = ResidualState.fresh(inst)
    results = greedy_pass(
        inst, [k.id for k in inst.commodities], state, backend=backend, limits=limits,
        strengthening_cuts=strengthening_cuts,
    )
    rate = default_r(inst) if inst.commodities else 1.0
    sol = Solution(results, {key: n for key, n in state.installed.items() if n}, rate).with_cost(inst)
    report = validate(inst, sol)
    if not report.ok:
        raise RuntimeError(f"greedy produced an infeasible solution: {report.violations[:3]}")
    return sol, sol.rejected
