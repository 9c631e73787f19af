"""Benchmark harness: parameter sweeps over generated instances, CSV output.

A sweep point is one value of the swept parameter; each point is replicated
with seeds ``base.seed, base.seed + 1, ...`` so that, for a given
replication, every point shares the same random draws.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from scipy import stats

from .algorithms import greedy, lp_bound, lp_heuristic, solve_exact, validate
from .formulation import FormulationOptions
from .generator import GeneratorConfig, generate_instance
from .instance import Instance
from .milp import SolverLimits, Status, get_backend
from .solution import Solution

log = logging.getLogger(__name__)

CSV_HEADER = (
    "instance,seed,algo,status,objective,routing_cost,vnf_cost,n_rejected,gap_vs_exact,gap_vs_lp,"
    "wall_time_ms,theta,n_anti_affinity,n_commodities,cost_ratio_s"
).split(",")
SUMMARY_HEADER = [
    "experiment", "value", "algo", "n", "objective_mean", "objective_ci95",
    "gap_vs_exact_mean", "gap_vs_exact_ci95", "wall_time_ms_mean", "wall_time_ms_ci95",
    "n_rejected_mean", "exact_monotone",
]
ALGORITHMS = ("exact", "greedy", "heuristic")
EXPERIMENTS = {
    "scale_commodities": "n_commodities",
    "sweep_theta": "theta",
    "sweep_anti_affinity": "n_anti_affinity",
}


@dataclass
class RunRecord:
    instance: str
    seed: int | None
    algo: str
    status: str
    objective: float | None = None
    routing_cost: float | None = None
    vnf_cost: float | None = None
    n_rejected: int | None = None
    gap_vs_exact: float | None = None
    gap_vs_lp: float | None = None
    wall_time_ms: float = 0.0
    theta: float = 0.0
    n_anti_affinity: int = 0
    n_commodities: int = 0
    cost_ratio_s: float = 0.0

    def row(self) -> list[str]:
        return [_fmt(getattr(self, name)) for name in CSV_HEADER]


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def write_records(records: Iterable[RunRecord], stream: io.TextIOBase, header: bool = True) -> None:
    w = csv.writer(stream, lineterminator="\n")
    if header:
        w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())


def read_records(stream: io.TextIOBase) -> list[RunRecord]:
    types = {f.name: f.type for f in fields(RunRecord)}
    out = []
    for row in csv.DictReader(stream):
        kw: dict[str, Any] = {}
        for name, text in row.items():
            t = str(types[name])
            if text == "":
                kw[name] = None
            elif "int" in t:
                kw[name] = int(text)
            elif "float" in t:
                kw[name] = float(text)
            else:
                kw[name] = text
        out.append(RunRecord(**kw))
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    values: tuple
    replications: int = 15
    base: GeneratorConfig = field(default_factory=GeneratorConfig)
    limits: SolverLimits = field(default_factory=lambda: SolverLimits(max_seconds=60.0))
    algorithms: tuple[str, ...] = ALGORITHMS

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {sorted(EXPERIMENTS)}")
        if not self.values:
            raise ValueError("swept values must be nonempty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ValueError(f"unknown algorithms {sorted(bad)}")

    @property
    def parameter(self) -> str:
        return EXPERIMENTS[self.experiment]

    def config(self, value: Any, replication: int) -> GeneratorConfig:
        if self.parameter == "theta":
            value = float(value)
        else:
            value = int(value)
        return replace(self.base, **{self.parameter: value, "seed": self.base.seed + replication})

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ExperimentSpec":
        known = {"experiment", "values", "replications", "base", "limits", "algorithms"}
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown keys in experiment spec: {sorted(extra)}")
        base = dict(doc.get("base", {}))
        for key in ("chain_len_range", "demand_range"):
            if key in base:
                base[key] = tuple(base[key])
        try:
            cfg = GeneratorConfig(**base)
        except TypeError as exc:
            raise ValueError(f"bad base config: {exc}") from None
        cfg.check()
        limits = SolverLimits(**doc["limits"]) if "limits" in doc else SolverLimits(max_seconds=60.0)
        return cls(
            experiment=doc["experiment"],
            values=tuple(doc["values"]),
            replications=int(doc.get("replications", 15)),
            base=cfg,
            limits=limits,
            algorithms=tuple(doc.get("algorithms", ALGORITHMS)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "values": list(self.values),
            "replications": self.replications,
            "base": asdict(self.base),
            "limits": asdict(self.limits),
            "algorithms": list(self.algorithms),
        }


def load_spec(path: str | Path) -> ExperimentSpec:
    with open(path) as fh:
        return ExperimentSpec.from_dict(json.load(fh))


def _gap(value: float | None, reference: float | None) -> float | None:
    if value is None or reference is None or not math.isfinite(reference) or not math.isfinite(value):
        return None
    return round((value - reference) / max(abs(reference), 1e-9), 9)


def _timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, (time.perf_counter() - start) * 1000.0


def _record(inst_id: str, cfg: GeneratorConfig, algo: str, status: str, sol: Solution | None, ms: float) -> RunRecord:
    rec = RunRecord(
        inst_id, cfg.seed, algo, status, wall_time_ms=round(ms, 3), theta=cfg.theta,
        n_anti_affinity=cfg.n_anti_affinity, n_commodities=cfg.n_commodities, cost_ratio_s=cfg.cost_ratio_s,
    )
    if sol is not None and sol.cost is not None:
        rec.objective = round(sol.cost.total, 6)
        rec.routing_cost = round(sol.cost.routing, 6)
        rec.vnf_cost = round(sol.cost.vnf, 6)
        rec.n_rejected = len(sol.rejected)
    return rec


def run_instance(
    inst_id: str,
    cfg: GeneratorConfig,
    inst: Instance,
    algorithms: Sequence[str] = ALGORITHMS,
    limits: SolverLimits | None = None,
    backend_name: str = "embedded",
) -> list[RunRecord]:
    """Rows for every requested algorithm plus an ``lp_bound`` row; gaps are
    filled once all runs are known. A failing algorithm yields an ``error`` row."""
    backend = get_backend(backend_name)
    opts = FormulationOptions()
    records: list[RunRecord] = []
    reference = None

    for algo in algorithms:
        try:
            if algo == "exact":
                (sol, mip), ms = _timed(solve_exact, inst, opts, backend=backend, limits=limits)
                rec = _record(inst_id, cfg, algo, Status(mip.status).value, sol, ms)
                if mip.status is Status.OPTIMAL:
                    reference = rec.objective
                elif math.isfinite(mip.bound):
                    reference = mip.bound  # best bound: the gap stays an upper estimate
            elif algo == "greedy":
                (sol, _), ms = _timed(greedy, inst, backend=backend, limits=limits)
                rec = _record(inst_id, cfg, algo, "ok", sol, ms)
            else:
                (sol, _), ms = _timed(lp_heuristic, inst, opts, backend=backend, limits=limits)
                rec = _record(inst_id, cfg, algo, "ok", sol, ms)
            if sol is not None and not validate(inst, sol).ok:
                rec.status = "invalid"
        except Exception as exc:  # a failed row must not stop the sweep
            log.error("%s on %s failed: %s", algo, inst_id, exc)
            rec = _record(inst_id, cfg, algo, "error", None, 0.0)
        records.append(rec)

    try:
        bound, ms = _timed(lp_bound, inst, opts, backend=backend)
        lp = RunRecord(
            inst_id, cfg.seed, "lp_bound", "optimal", objective=round(bound, 6), wall_time_ms=round(ms, 3), theta=cfg.theta,
            n_anti_affinity=cfg.n_anti_affinity, n_commodities=cfg.n_commodities, cost_ratio_s=cfg.cost_ratio_s,
        )
    except Exception as exc:
        log.error("LP bound on %s failed: %s", inst_id, exc)
        lp = _record(inst_id, cfg, "lp_bound", "error", None, 0.0)
    records.append(lp)

    for rec in records:
        rec.gap_vs_exact = _gap(rec.objective, reference)
        rec.gap_vs_lp = _gap(rec.objective, lp.objective)
    return records


def _task(args: tuple) -> list[RunRecord]:
    spec_doc, value, rep, backend_name = args
    spec = ExperimentSpec.from_dict(spec_doc)
    cfg = spec.config(value, rep)
    inst_id = f"{spec.experiment}-{spec.parameter}={value}-r{rep}"
    return run_instance(inst_id, cfg, generate_instance(cfg), spec.algorithms, spec.limits, backend_name)


def run_bench(spec: ExperimentSpec, *, workers: int = 1, backend_name: str = "embedded") -> list[RunRecord]:
    """All rows in (value, replication, algorithm) order, whatever the worker count."""
    tasks = [(spec.to_dict(), v, rep, backend_name) for v in spec.values for rep in range(spec.replications)]
    if workers <= 1:
        chunks = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_task, tasks))
    return [rec for chunk in chunks for rec in chunk]


def _mean_ci(xs: Sequence[float]) -> tuple[float | None, float | None]:
    """Mean and half-width of the 95% t-interval (0 for a single sample)."""
    if not xs:
        return None, None
    mean = statistics.fmean(xs)
    if len(xs) == 1:
        return mean, 0.0
    half = float(stats.t.ppf(0.975, len(xs) - 1)) * statistics.stdev(xs) / math.sqrt(len(xs))
    return mean, half


def exact_monotone(spec: ExperimentSpec, records: Sequence[RunRecord]) -> dict[Any, bool | None]:
    """Per swept value: whether every seed's exact optimum is >= its value at the
    previous swept point. None when no comparison is possible."""
    column = spec.parameter
    by_seed: dict[int, dict[Any, float]] = {}
    for r in records:
        if r.algo == "exact" and r.status == Status.OPTIMAL.value and r.objective is not None:
            by_seed.setdefault(r.seed, {})[getattr(r, column)] = r.objective
    ordered = sorted(spec.values, key=float)
    out: dict[Any, bool | None] = {ordered[0]: None}
    for prev, cur in zip(ordered, ordered[1:]):
        checks = [
            objs[cur] >= objs[prev] - 1e-6 * max(1.0, abs(objs[prev]))
            for objs in by_seed.values()
            if cur in objs and prev in objs
        ]
        out[cur] = all(checks) if checks else None
    return out


def summarize(spec: ExperimentSpec, records: Sequence[RunRecord]) -> list[dict[str, Any]]:
    column = spec.parameter
    mono = exact_monotone(spec, records)
    rows = []
    for value in spec.values:
        for algo in (*spec.algorithms, "lp_bound"):
            sel = [r for r in records if r.algo == algo and getattr(r, column) == value]
            ok = [r for r in sel if r.objective is not None]
            obj = _mean_ci([r.objective for r in ok])
            gap = _mean_ci([r.gap_vs_exact for r in ok if r.gap_vs_exact is not None])
            ms = _mean_ci([r.wall_time_ms for r in sel])
            rej = [r.n_rejected for r in ok if r.n_rejected is not None]
            rows.append(
                {
                    "experiment": spec.experiment,
                    "value": value,
                    "algo": algo,
                    "n": len(ok),
                    "objective_mean": obj[0],
                    "objective_ci95": obj[1],
                    "gap_vs_exact_mean": gap[0],
                    "gap_vs_exact_ci95": gap[1],
                    "wall_time_ms_mean": ms[0],
                    "wall_time_ms_ci95": ms[1],
                    "n_rejected_mean": statistics.fmean(rej) if rej else None,
                    "exact_monotone": mono.get(value) if algo == "exact" else None,
                }
            )
    return rows


def write_summary(rows: Sequence[Mapping[str, Any]], stream: io.TextIOBase) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for row in rows:
        w.writerow([_fmt(row[h]) for h in SUMMARY_HEADER])
