"""LP solving and best-bound branch-and-bound over LP relaxations."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from typing import Mapping

import numpy as np
import highspy
import scipy.sparse as sp

from .model import FEAS_TOL, INT_TOL, CompiledModel, MilpModel, MipSolution, SolverLimits, Status
from .simplex import simplex_solve

log = logging.getLogger(__name__)

LP_METHODS = ("highs", "simplex")


class LpFailure(RuntimeError):
    """The LP engine returned neither an optimum nor a certificate."""


class _LpEngine:
    """Solves the compiled LP under varying column bounds.

    ``highs`` keeps one HiGHS instance alive so each solve starts from the
    previous basis; ``simplex`` runs the embedded dense simplex from scratch.
    """

    def __init__(self, cm: CompiledModel, method: str):
        if method not in LP_METHODS:
            raise ValueError(f"unknown LP method {method!r}")
        self.cm, self.method = cm, method
        if method == "highs":
            self._h = self._highs_model(cm)

    @staticmethod
    def _highs_model(cm: CompiledModel):
        A = sp.vstack([sp.csr_matrix(cm.A_ub), sp.csr_matrix(cm.A_eq)]).tocsc()
        lp = highspy.HighsLp()
        lp.num_col_, lp.num_row_ = A.shape[1], A.shape[0]
        lp.col_cost_ = cm.c
        lp.col_lower_ = np.where(np.isinf(cm.lb), -highspy.kHighsInf, cm.lb)
        lp.col_upper_ = np.where(np.isinf(cm.ub), highspy.kHighsInf, cm.ub)
        lp.row_lower_ = np.concatenate([np.full(cm.A_ub.shape[0], -highspy.kHighsInf), cm.b_eq])
        lp.row_upper_ = np.concatenate([cm.b_ub, cm.b_eq])
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr
        lp.a_matrix_.index_ = A.indices
        lp.a_matrix_.value_ = A.data
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.passModel(lp)
        return h

    def solve(self, lb: np.ndarray, ub: np.ndarray) -> tuple[Status, np.ndarray | None, float]:
        cm = self.cm
        if np.any(lb > ub + 1e-12):
            return Status.INFEASIBLE, None, math.inf
        if self.method == "simplex":
            res = simplex_solve(cm.c, cm.A_ub, cm.b_ub, cm.A_eq, cm.b_eq, lb, ub)
            if res.status == "optimal":
                return Status.OPTIMAL, res.x, res.objective + cm.constant
            return Status(res.status), None, math.inf if res.status == "infeasible" else -math.inf
        h = self._h
        n = len(lb)
        h.changeColsBounds(
            n,
            np.arange(n, dtype=np.int32),
            np.where(np.isinf(lb), -highspy.kHighsInf, lb),
            np.where(np.isinf(ub), highspy.kHighsInf, ub),
        )
        h.run()
        st = h.getModelStatus()
        if st == highspy.HighsModelStatus.kOptimal:
            x = np.clip(np.asarray(h.getSolution().col_value), lb, ub)
            return Status.OPTIMAL, x, float(cm.c @ x) + cm.constant
        if st == highspy.HighsModelStatus.kInfeasible:
            return Status.INFEASIBLE, None, math.inf
        if st in (highspy.HighsModelStatus.kUnbounded, highspy.HighsModelStatus.kUnboundedOrInfeasible):
            # HiGHS may not separate the two cases; a cold solve without presolve does
            h.clearSolver()
            h.setOptionValue("presolve", "off")
            h.run()
            h.setOptionValue("presolve", "choose")
            if h.getModelStatus() == highspy.HighsModelStatus.kInfeasible:
                return Status.INFEASIBLE, None, math.inf
            return Status.UNBOUNDED, None, -math.inf
        raise LpFailure(f"LP engine failed: {h.modelStatusToString(st)}")


def solve_lp(model: MilpModel, method: str = "highs") -> MipSolution:
    """Solve the continuous relaxation of ``model`` (integrality ignored)."""
    model.validate()
    start = time.perf_counter()
    cm = model.compile()
    status, x, obj = _LpEngine(cm, method).solve(cm.lb.copy(), cm.ub.copy())
    sol = MipSolution(status, wall_time=time.perf_counter() - start, node_count=1)
    if x is not None:
        sol.vector = x
        sol.values = {v.name: float(x[j]) for j, v in enumerate(model.variables)}
        sol.objective = sol.bound = obj
    return sol


def _feasible(cm: CompiledModel, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
    if np.any(x < cm.lb - tol) or np.any(x > cm.ub + tol):
        return False
    if cm.A_ub.shape[0] and np.any(cm.A_ub @ x > cm.b_ub + tol):
        return False
    if cm.A_eq.shape[0] and np.any(np.abs(cm.A_eq @ x - cm.b_eq) > tol):
        return False
    return True


def solve_mip(
    model: MilpModel,
    limits: SolverLimits | None = None,
    *,
    lp_method: str = "highs",
    incumbent: Mapping[str, float] | None = None,
) -> MipSolution:
    """Best-bound branch-and-bound.

    Branches on the most fractional integer variable (lowest index on ties),
    floor/ceil bound splits for general integers. Children are solved when
    created, so every queued node carries its own LP bound. A rounded copy of
    each node's LP point is tried as a cheap incumbent. An optional
    ``incumbent`` (name -> value) seeds pruning if it is feasible.
    """
    limits = limits or SolverLimits()
    model.validate()
    start = time.perf_counter()
    cm = model.compile()
    int_idx = np.flatnonzero(cm.integer)

    best_x: np.ndarray | None = None
    best_obj = math.inf

    def offer(x: np.ndarray) -> None:
        nonlocal best_x, best_obj
        x = x.copy()
        x[int_idx] = np.round(x[int_idx])
        if not _feasible(cm, x):
            return
        obj = float(cm.c @ x) + cm.constant
        if obj < best_obj - 1e-12:
            best_x, best_obj = x, obj

    if incumbent is not None:
        offer(model._as_vector(incumbent))

    def finish(status: Status, bound: float, nodes: int, history: list[float]) -> MipSolution:
        sol = MipSolution(
            status,
            bound=bound,
            node_count=nodes,
            wall_time=time.perf_counter() - start,
            bound_history=history,
        )
        if best_x is not None:
            sol.vector = best_x
            sol.values = {v.name: float(best_x[j]) for j, v in enumerate(model.variables)}
            sol.objective = best_obj
        return sol

    if int_idx.size == 0:
        sol = solve_lp(model, lp_method)
        sol.bound_history = [sol.bound] if sol.has_solution else []
        return sol

    engine = _LpEngine(cm, lp_method)
    status, x, obj = engine.solve(cm.lb.copy(), cm.ub.copy())
    if status is Status.INFEASIBLE:
        return finish(Status.INFEASIBLE, math.inf, 1, [])
    if status is Status.UNBOUNDED:
        return finish(Status.UNBOUNDED, -math.inf, 1, [])

    counter = itertools.count()
    # heap entries: (bound, -depth, tiebreak, lb, ub, x)
    heap: list = [(obj, 0, next(counter), cm.lb.copy(), cm.ub.copy(), x)]
    nodes = 1
    history: list[float] = []
    global_bound = obj

    def fractional_index(x: np.ndarray) -> int | None:
        if int_idx.size == 0:
            return None
        frac = np.abs(x[int_idx] - np.round(x[int_idx]))
        if frac.max() <= INT_TOL:
            return None
        dist = np.abs((x[int_idx] - np.floor(x[int_idx])) - 0.5)
        dist[frac <= INT_TOL] = math.inf
        return int(int_idx[int(np.argmin(dist))])

    def tolerance(incumbent_obj: float) -> float:
        return max(limits.relative_gap * abs(incumbent_obj), 1e-9)

    final_bound = math.inf
    while heap:
        bound = heap[0][0]
        global_bound = max(global_bound, min(bound, best_obj))
        history.append(global_bound)
        if best_x is not None and bound >= best_obj - tolerance(best_obj):
            final_bound = bound
            heap.clear()
            break
        if limits.max_seconds is not None and time.perf_counter() - start > limits.max_seconds:
            return finish(Status.TIME_LIMIT, global_bound, nodes, history)
        if limits.max_nodes is not None and nodes >= limits.max_nodes:
            return finish(Status.NODE_LIMIT, global_bound, nodes, history)

        bound, neg_depth, _, lb, ub, x = heapq.heappop(heap)
        offer(x)
        j = fractional_index(x)
        if j is None:
            continue
        for lo_j, hi_j in ((lb[j], math.floor(x[j])), (math.ceil(x[j]), ub[j])):
            clb, cub = lb.copy(), ub.copy()
            clb[j], cub[j] = lo_j, hi_j
            st, cx, cobj = engine.solve(clb, cub)
            nodes += 1
            if st is not Status.OPTIMAL:
                continue
            if best_x is not None and cobj >= best_obj - tolerance(best_obj):
                offer(cx)
                continue
            heapq.heappush(heap, (max(cobj, bound), neg_depth - 1, next(counter), clb, cub, cx))

    if best_x is None:
        return finish(Status.INFEASIBLE, math.inf, nodes, history)
    final_bound = max(global_bound, min(final_bound, best_obj))
    history.append(final_bound)
    return finish(Status.OPTIMAL, final_bound, nodes, history)
