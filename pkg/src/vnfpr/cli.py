"""Command-line entry point: ``vnfpr {generate,solve,bench,validate}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import bench
from .algorithms import greedy, lp_bound, lp_heuristic, solve_exact, validate
from .formulation import FormulationOptions, default_r
from .generator import GeneratorConfig, generate_instance
from .instance import InstanceError, load_instance, save_instance, theta_of
from .milp import SolverLimits, Status, get_backend
from .solution import empty_solution, solution_from_dict, solution_to_dict

log = logging.getLogger("vnfpr")

EXIT_OK, EXIT_INVALID, EXIT_INPUT = 0, 1, 2


def _pair(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("-")
    try:
        return (int(lo), int(hi)) if sep else (int(lo), int(lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO-HI, got {text!r}") from None


def _limits(args: argparse.Namespace) -> SolverLimits:
    return SolverLimits(max_nodes=args.max_nodes, max_seconds=args.max_seconds)


def _backend(args: argparse.Namespace):
    return get_backend(args.lp_backend)


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = GeneratorConfig(
        topology=args.topology,
        n_commodities=args.commodities,
        chain_len_range=args.chain_len,
        vnf_pool_size=args.vnfs,
        theta=args.theta,
        n_anti_affinity=args.anti_affinity,
        cost_ratio_s=args.cost_ratio,
        seed=args.seed,
    )
    try:
        inst = generate_instance(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = save_instance(inst)
    report = sys.stderr if args.out is None else sys.stdout
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    for k in inst.commodities:
        print(f"{k.id}: {len(k.chain.functions)} functions, theta={theta_of(k.chain):.3f}", file=report)
    return EXIT_OK


def _cost_ratio(inst) -> float | None:
    """Realized ratio of mean arc unit cost to mean VNF running cost."""
    if not inst.vnfs or not inst.graph.arcs:
        return None
    arc = sum(a.unit_cost for a in inst.graph.arcs) / len(inst.graph.arcs)
    vnf = sum(f.run_cost for f in inst.vnfs) / len(inst.vnfs)
    return round(arc / vnf, 6) if vnf > 0 else None


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        inst = load_instance(Path(args.instance).read_text())
    except (OSError, InstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    backend = _backend(args)
    limits = _limits(args)
    opts = FormulationOptions(strengthening_cuts=not args.no_cuts)
    start = time.perf_counter()
    if args.algo == "exact":
        sol, mip = solve_exact(inst, opts, backend=backend, limits=limits)
        status = Status(mip.status).value
        if sol is None:
            sol = empty_solution(inst, default_r(inst) if inst.commodities else 1.0)
    elif args.algo == "greedy":
        sol, _ = greedy(inst, backend=backend, limits=limits, strengthening_cuts=opts.strengthening_cuts)
        status = "ok"
    else:
        sol, _ = lp_heuristic(inst, opts, backend=backend, limits=limits)
        status = "ok"
    ms = (time.perf_counter() - start) * 1000.0

    report = validate(inst, sol)
    out = Path(args.out) if args.out else Path(f"{Path(args.instance).stem}.{args.algo}.solution.json")
    out.write_text(json.dumps(solution_to_dict(sol), indent=2) + "\n")

    rec = bench.RunRecord(
        Path(args.instance).stem, None, args.algo, status if report.ok else "invalid",
        round(sol.cost.total, 6), round(sol.cost.routing, 6), round(sol.cost.vnf, 6), len(sol.rejected),
        wall_time_ms=round(ms, 3), n_commodities=len(inst.commodities), n_anti_affinity=len(inst.anti_affinity),
        cost_ratio_s=_cost_ratio(inst),
    )
    if inst.commodities:
        rec.theta = sum(theta_of(k.chain) for k in inst.commodities) / len(inst.commodities)
        if args.lp_gap:
            rec.gap_vs_lp = bench._gap(rec.objective, lp_bound(inst, opts, backend=backend))
    bench.write_records([rec], sys.stdout)
    if not report.ok:
        for v in report.violations:
            print(v, file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        inst = load_instance(Path(args.instance).read_text())
        sol = solution_from_dict(json.loads(Path(args.solution).read_text()))
    except (OSError, InstanceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = validate(inst, sol)
    for family, items in report.by_family().items():
        print(f"{family}: {len(items)} violation(s)")
        for v in items:
            print(f"  {v}")
    print(f"accepted: {len(report.accepted)}, rejected: {len(report.rejected)}" + (
        f" ({', '.join(report.rejected)})" if report.rejected else ""
    ))
    print("ok" if report.ok else "INVALID")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        spec = bench.load_spec(args.spec)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: bad experiment spec: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.max_nodes is not None or args.max_seconds is not None:
        spec = bench.ExperimentSpec(
            spec.experiment, spec.values, spec.replications, spec.base, _limits(args), spec.algorithms
        )
    records = bench.run_bench(spec, workers=args.workers, backend_name=args.lp_backend)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "runs.csv", "w", newline="") as fh:
        bench.write_records(records, fh)
    with open(out / "summary.csv", "w", newline="") as fh:
        bench.write_summary(bench.summarize(spec, records), fh)
    failed = sum(r.status in ("error", "invalid") for r in records)
    print(f"{len(records)} rows written to {out / 'runs.csv'}; summary in {out / 'summary.csv'}")
    if failed:
        print(f"{failed} row(s) failed; see the log", file=sys.stderr)
    return EXIT_OK


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-seconds", type=float, default=None, help="branch-and-bound time budget")
    p.add_argument("--max-nodes", type=int, default=None, help="branch-and-bound node budget")
    p.add_argument("--lp-backend", choices=("embedded", "external"), default="embedded",
                   help="external runs the command in $VNFPR_EXTERNAL_SOLVER")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vnfpr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random instance as JSON")
    g.add_argument("--topology", default="geant22", help="geant22, diamond, ring(N) or line(N)")
    g.add_argument("--commodities", type=int, default=10)
    g.add_argument("--theta", type=float, default=0.5, help="order density in [0, 1]")
    g.add_argument("--anti-affinity", type=int, default=0, help="number of anti-affinity rules")
    g.add_argument("--cost-ratio", type=float, default=0.05, help="arc to VNF cost ratio s")
    g.add_argument("--chain-len", type=_pair, default=(4, 8), help="chain length N or LO-HI")
    g.add_argument("--vnfs", type=int, default=10, help="catalog size")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output file (default: stdout)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("instance")
    s.add_argument("--algo", choices=("exact", "greedy", "heuristic"), default="heuristic")
    _add_solver_flags(s)
    s.add_argument("--no-cuts", action="store_true", help="omit the strengthening cuts")
    s.add_argument("--lp-gap", action="store_true", help="also solve the LP relaxation to fill gap_vs_lp")
    s.add_argument("--out", help="solution JSON (default: <instance>.<algo>.solution.json)")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run an experiment spec and write CSV files")
    b.add_argument("spec", help="experiment spec (JSON)")
    _add_solver_flags(b)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", default="bench-out", help="output directory")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("validate", help="check a solution file against an instance")
    v.add_argument("instance")
    v.add_argument("solution")
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
