from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

FEAS_TOL = 1e-6
INT_TOL = 1e-6
ZERO_COEF = 1e-12


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"
    INTEGER = "integer"


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NODE_LIMIT = "node_limit"
    TIME_LIMIT = "time_limit"


class ModelError(ValueError):
    pass


@dataclass
class Variable:
    name: str
    kind: VarKind = VarKind.CONTINUOUS
    lower: float = 0.0
    upper: float = math.inf

    @property
    def is_integer(self) -> bool:
        return self.kind is not VarKind.CONTINUOUS


@dataclass
class Constraint:
    name: str
    terms: dict[int, float]
    sense: Sense
    rhs: float


@dataclass
class SolverLimits:
    max_nodes: int | None = None
    max_seconds: float | None = None
    relative_gap: float = 1e-6

    def __post_init__(self) -> None:
        if self.max_nodes is not None and self.max_nodes <= 0:
            raise ValueError("max_nodes must be positive")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ValueError("max_seconds must be positive")
        if self.relative_gap < 0:
            raise ValueError("relative_gap must be >= 0")


@dataclass
class MipSolution:
    status: Status
    values: dict[str, float] = field(default_factory=dict)
    objective: float = math.nan
    bound: float = math.nan
    node_count: int = 0
    wall_time: float = 0.0
    bound_history: list[float] = field(default_factory=list, repr=False)
    vector: np.ndarray | None = field(default=None, repr=False)

    @property
    def has_solution(self) -> bool:
        return self.vector is not None


@dataclass
class CompiledModel:
    """Matrix form: min c.x + constant, A_ub x <= b_ub, A_eq x = b_eq, lb <= x <= ub."""

    c: np.ndarray
    constant: float
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray


class MilpModel:
    """A minimization MILP built incrementally from named variables and rows."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.constant = 0.0
        self._index: dict[str, int] = {}
        self._row_names: set[str] = set()

    def __len__(self) -> int:
        return len(self.variables)

    def add_var(
        self, name: str, kind: VarKind | str = VarKind.CONTINUOUS, lower: float = 0.0, upper: float = math.inf
    ) -> int:
        kind = VarKind(kind)
        if name in self._index:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind is VarKind.BINARY:
            lower, upper = max(0.0, lower), min(1.0, upper)
        if lower > upper:
            raise ModelError(f"variable {name!r} has empty bounds [{lower}, {upper}]")
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, kind, float(lower), float(upper)))
        return self._index[name]

    def var_index(self, name: str) -> int:
        return self._index[name]

    def has_var(self, name: str) -> bool:
        return name in self._index

    def _clean(self, terms: Mapping[int, float] | Iterable[tuple[int, float]]) -> dict[int, float]:
        items = terms.items() if isinstance(terms, Mapping) else terms
        out: dict[int, float] = {}
        n = len(self.variables)
        for j, a in items:
            if not 0 <= j < n:
                raise ModelError(f"term references undeclared variable index {j}")
            if not math.isfinite(a):
                raise ModelError("non-finite coefficient")
            out[j] = out.get(j, 0.0) + float(a)
        return {j: a for j, a in out.items() if abs(a) > ZERO_COEF}

    def add_constraint(
        self,
        terms: Mapping[int, float] | Iterable[tuple[int, float]],
        sense: Sense | str,
        rhs: float,
        name: str | None = None,
    ) -> int:
        if name is None:
            name = f"c{len(self.constraints)}"
        if name in self._row_names:
            raise ModelError(f"duplicate constraint name {name!r}")
        if not math.isfinite(rhs):
            raise ModelError(f"constraint {name!r} has non-finite rhs")
        self._row_names.add(name)
        self.constraints.append(Constraint(name, self._clean(terms), Sense(sense), float(rhs)))
        return len(self.constraints) - 1

    def set_objective(self, terms: Mapping[int, float] | Iterable[tuple[int, float]], constant: float = 0.0) -> None:
        self.objective = self._clean(terms)
        self.constant = float(constant)

    @property
    def integer_indices(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.is_integer]

    def validate(self) -> None:
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ModelError("variable names not unique")
        for v in self.variables:
            if v.kind is VarKind.BINARY and (v.lower < 0 or v.upper > 1):
                raise ModelError(f"binary variable {v.name!r} has bounds outside [0, 1]")
            if v.lower > v.upper:
                raise ModelError(f"variable {v.name!r} has empty bounds")
        n = len(self.variables)
        for row in self.constraints:
            for j, a in row.terms.items():
                if not 0 <= j < n or not math.isfinite(a):
                    raise ModelError(f"constraint {row.name!r} is malformed")
        for j, a in self.objective.items():
            if not 0 <= j < n or not math.isfinite(a):
                raise ModelError("objective is malformed")

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name)
        m.variables = [Variable(v.name, v.kind, v.lower, v.upper) for v in self.variables]
        m.constraints = [Constraint(c.name, dict(c.terms), c.sense, c.rhs) for c in self.constraints]
        m.objective = dict(self.objective)
        m.constant = self.constant
        m._index = dict(self._index)
        m._row_names = set(self._row_names)
        return m

    def compile(self) -> CompiledModel:
        n = len(self.variables)
        c = np.zeros(n)
        for j, a in self.objective.items():
            c[j] = a
        ub_rows, eq_rows = [], []
        for row in self.constraints:
            if row.sense is Sense.EQ:
                eq_rows.append((row.terms, row.rhs))
            elif row.sense is Sense.LE:
                ub_rows.append((row.terms, row.rhs))
            else:
                ub_rows.append(({j: -a for j, a in row.terms.items()}, -row.rhs))

        def to_csr(rows: list[tuple[dict[int, float], float]]) -> tuple[sp.csr_matrix, np.ndarray]:
            data, indices, indptr = [], [], [0]
            for terms, _ in rows:
                for j in sorted(terms):
                    indices.append(j)
                    data.append(terms[j])
                indptr.append(len(indices))
            mat = sp.csr_matrix((np.array(data, dtype=float), np.array(indices, dtype=np.int64), indptr), shape=(len(rows), n))
            return mat, np.array([r for _, r in rows], dtype=float)

        A_ub, b_ub = to_csr(ub_rows)
        A_eq, b_eq = to_csr(eq_rows)
        lb = np.array([v.lower for v in self.variables], dtype=float)
        ub = np.array([v.upper for v in self.variables], dtype=float)
        integer = np.array([v.is_integer for v in self.variables], dtype=bool)
        return CompiledModel(c, self.constant, A_ub, b_ub, A_eq, b_eq, lb, ub, integer)

    def evaluate(self, values: Mapping[str, float] | np.ndarray) -> float:
        x = self._as_vector(values)
        return self.constant + sum(a * x[j] for j, a in self.objective.items())

    def _as_vector(self, values: Mapping[str, float] | np.ndarray) -> np.ndarray:
        if isinstance(values, np.ndarray):
            return values
        x = np.zeros(len(self.variables))
        for name, val in values.items():
            x[self._index[name]] = val
        return x

    def violations(
        self, values: Mapping[str, float] | np.ndarray, tol: float = FEAS_TOL, int_tol: float = INT_TOL
    ) -> list[str]:
        """Names of violated rows, bounds and integrality requirements at ``values``."""
        x = self._as_vector(values)
        bad = []
        for j, v in enumerate(self.variables):
            if x[j] < v.lower - tol or x[j] > v.upper + tol:
                bad.append(f"bound:{v.name}")
            if v.is_integer and abs(x[j] - round(x[j])) > int_tol:
                bad.append(f"integrality:{v.name}")
        for row in self.constraints:
            lhs = sum(a * x[j] for j, a in row.terms.items())
            if row.sense is Sense.LE and lhs > row.rhs + tol:
                bad.append(row.name)
            elif row.sense is Sense.GE and lhs < row.rhs - tol:
                bad.append(row.name)
            elif row.sense is Sense.EQ and abs(lhs - row.rhs) > tol:
                bad.append(row.name)
        return bad


def relax(model: MilpModel) -> MilpModel:
    """Copy of ``model`` with every integer or binary variable made continuous."""
    m = model.copy()
    for v in m.variables:
        v.kind = VarKind.CONTINUOUS
    return m
