"""Dense bounded-variable revised primal simplex.

Every row gets a slack so the system reads ``A x + s = b`` with ``s >= 0`` on
inequality rows and ``s = 0`` on equalities. Phase 1 drives artificial
columns to zero from a slack/artificial starting basis; phase 2 then
minimizes the true cost with the artificials fixed at zero.

Pricing is most-negative reduced cost; after ``bland_after`` consecutive
degenerate pivots it switches to Bland's smallest-index rule until the
objective moves again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 64


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int


class SimplexError(RuntimeError):
    pass


def _dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)


class _Tableau:
    def __init__(self, M: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray, x: np.ndarray, basis: list[int]):
        self.M, self.b, self.lo, self.hi, self.x = M, b, lo, hi, x
        self.basis = np.array(basis, dtype=np.int64)
        self.basic = np.zeros(M.shape[1], dtype=bool)
        self.basic[self.basis] = True
        self.refactor()

    def refactor(self) -> None:
        B = self.M[:, self.basis]
        try:
            self.B_inv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis") from exc
        self.recompute_basic()

    def recompute_basic(self) -> None:
        xn = np.where(self.basic, 0.0, self.x)
        self.x[self.basis] = self.B_inv @ (self.b - self.M @ xn)

    def run(self, cost: np.ndarray, max_iter: int, bland_after: int) -> tuple[str, int]:
        it = 0
        stall = 0
        since_refactor = 0
        while True:
            if it >= max_iter:
                raise SimplexError(f"iteration limit {max_iter} reached")
            y = cost[self.basis] @ self.B_inv
            d = cost - y @ self.M
            d[self.basis] = 0.0
            nonbasic = ~self.basic
            can_inc = nonbasic & (self.x < self.hi - PRIMAL_TOL) & (d < -DUAL_TOL)
            can_dec = nonbasic & (self.x > self.lo + PRIMAL_TOL) & (d > DUAL_TOL)
            eligible = np.flatnonzero(can_inc | can_dec)
            if eligible.size == 0:
                return "optimal", it
            bland = stall >= bland_after
            j = int(eligible[0]) if bland else int(eligible[np.argmax(np.abs(d[eligible]))])
            direction = 1.0 if d[j] < 0 else -1.0

            alpha = self.B_inv @ self.M[:, j]
            step = direction * alpha
            xb = self.x[self.basis]
            lob, hib = self.lo[self.basis], self.hi[self.basis]
            ratios = np.full(step.shape, math.inf)
            dec = step > PIVOT_TOL
            inc = step < -PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                ratios[dec] = (xb[dec] - lob[dec]) / step[dec]
                ratios[inc] = (hib[inc] - xb[inc]) / -step[inc]
            ratios = np.where(np.isnan(ratios), math.inf, np.maximum(ratios, 0.0))
            t_row = ratios.min() if ratios.size else math.inf
            t_flip = self.hi[j] - self.lo[j]

            if not math.isfinite(t_row) and not math.isfinite(t_flip):
                return "unbounded", it

            if t_flip <= t_row:
                t = t_flip
                self.x[j] += direction * t
                self.x[self.basis] = xb - t * step
            else:
                t = t_row
                ties = np.flatnonzero(ratios <= t + 1e-12)
                if bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(alpha[ties]))])
                leaving = int(self.basis[r])
                self.x[self.basis] = xb - t * step
                self.x[j] += direction * t
                self.x[leaving] = lob[r] if step[r] > 0 else hib[r]
                self.basis[r] = j
                self.basic[leaving] = False
                self.basic[j] = True
                piv = alpha[r]
                row_r = self.B_inv[r] / piv
                self.B_inv -= np.outer(alpha, row_r)
                self.B_inv[r] = row_r
                since_refactor += 1
                if since_refactor >= REFACTOR_EVERY:
                    self.refactor()
                    since_refactor = 0
            stall = stall + 1 if t * abs(d[j]) <= 1e-12 else 0
            it += 1


def simplex_solve(
    c: np.ndarray,
    A_ub,
    b_ub: np.ndarray,
    A_eq,
    b_eq: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    *,
    max_iter: int | None = None,
    bland_after: int = 50,
) -> LpResult:
    """Minimize ``c.x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``lb <= x <= ub``."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = _dense(A_ub).reshape(-1, n)
    A_eq = _dense(A_eq).reshape(-1, n)
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub):
        return LpResult("infeasible", None, math.nan, 0)
    if m == 0:
        if np.any((c < 0) & np.isinf(ub)) or np.any((c > 0) & np.isinf(lb)):
            return LpResult("unbounded", None, math.nan, 0)
        x = np.where(c < 0, ub, np.where(c > 0, lb, np.clip(0.0, lb, ub)))
        return LpResult("optimal", x, float(c @ x), 0)

    A = np.vstack([A_ub, A_eq])
    b = np.concatenate([np.asarray(b_ub, dtype=float), np.asarray(b_eq, dtype=float)])
    lo = np.concatenate([lb, np.zeros(m)])
    hi = np.concatenate([ub, np.full(m_ub, math.inf), np.zeros(m_eq)])

    x = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    resid = b - A @ x
    slack_val = np.clip(resid, lo[n:], hi[n:])
    gap = resid - slack_val
    need = np.flatnonzero(np.abs(gap) > PRIMAL_TOL)

    art = np.zeros((m, need.size))
    art[need, np.arange(need.size)] = np.sign(gap[need])
    M = np.hstack([A, np.eye(m), art])
    lo = np.concatenate([lo, np.zeros(need.size)])
    hi = np.concatenate([hi, np.full(need.size, math.inf)])
    xs = np.concatenate([x, slack_val, np.abs(gap[need])])
    basis = [n + i for i in range(m)]
    for col, i in enumerate(need):
        basis[i] = n + m + col

    total = M.shape[1]
    limit = max_iter if max_iter is not None else 50 * (m + total) + 1000
    tab = _Tableau(M, b, lo, hi, xs, basis)
    iters = 0
    if need.size:
        phase1 = np.zeros(total)
        phase1[n + m :] = 1.0
        _, iters = tab.run(phase1, limit, bland_after)
        infeas = float(tab.x[n + m :].sum())
        if infeas > 1e-7 * max(1.0, float(np.abs(b).max())):
            return LpResult("infeasible", None, math.nan, iters)
        tab.hi[n + m :] = 0.0
    cost = np.concatenate([c, np.zeros(total - n)])
    status, it2 = tab.run(cost, limit, bland_after)
    iters += it2
    if status == "unbounded":
        return LpResult("unbounded", None, math.nan, iters)
    tab.refactor()
    xo = np.clip(tab.x[:n], lb, ub)
    return LpResult("optimal", xo, float(c @ xo), iters)
