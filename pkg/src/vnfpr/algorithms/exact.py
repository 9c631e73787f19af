"""Exact solution of the full model by branch-and-bound."""

from __future__ import annotations

from ..formulation import FormulationOptions, build_full_model, extract_solution, solution_values
from ..instance import Instance
from ..milp import MipSolution, SolverLimits, get_backend
from ..solution import Solution
from .greedy import greedy


def solve_exact(
    inst: Instance,
    opts: FormulationOptions = FormulationOptions(),
    *,
    backend=None,
    limits: SolverLimits | None = None,
    warm_start: bool = True,
) -> tuple[Solution | None, MipSolution]:
    """Solve the full model; the Solution is None when no incumbent was found.

    With rejection enabled the search starts from the all-rejected point or,
    when ``warm_start`` is set and cheaper, from the greedy allocation.
    """
    backend = backend or get_backend()
    model, idx = build_full_model(inst, opts)
    seed = None
    if opts.rejection_enabled:
        seed = {idx.name(("qbar", k.id)): 1.0 for k in inst.commodities}
        if warm_start and inst.commodities:
            start, _ = greedy(inst, backend=backend, limits=limits, strengthening_cuts=opts.strengthening_cuts)
            if model.evaluate(solution_values(inst, idx, start)) < model.evaluate(seed):
                seed = solution_values(inst, idx, start)
    mip = backend.solve_mip(model, limits, incumbent=seed)
    if not mip.values:
        return None, mip
    return extract_solution(inst, idx, mip), mip
