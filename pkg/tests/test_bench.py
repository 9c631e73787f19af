import io

import pytest

from vnfpr import bench
from vnfpr.bench import ExperimentSpec, RunRecord, read_records, run_bench, summarize, write_records
from vnfpr.generator import GeneratorConfig
from vnfpr.milp import SolverLimits


def theta_spec(**changes) -> ExperimentSpec:
    base = GeneratorConfig(topology="ring(8)", n_commodities=10, chain_len_range=(2, 3), seed=4)
    kw = dict(experiment="sweep_theta", values=(0.0, 0.5, 1.0), replications=3, base=base, limits=SolverLimits(max_nodes=300))
    kw.update(changes)
    return ExperimentSpec(**kw)


@pytest.fixture(scope="module")
def theta_run():
    spec = theta_spec()
    return spec, run_bench(spec)


def test_row_counts(theta_run):
    _, records = theta_run
    algos = [r.algo for r in records]
    assert sum(a != "lp_bound" for a in algos) == 3 * 3 * 3
    assert algos.count("lp_bound") == 3 * 3


def test_rows_are_ordered_and_tagged(theta_run):
    spec, records = theta_run
    first = records[0]
    assert first.instance == "sweep_theta-theta=0.0-r0" and first.seed == 4
    assert [r.algo for r in records[:4]] == ["exact", "greedy", "heuristic", "lp_bound"]
    assert {r.theta for r in records} == set(spec.values)
    assert all(r.status not in ("error", "invalid") for r in records)


def test_gap_and_bound_invariants(theta_run):
    _, records = theta_run
    by_inst = {}
    for r in records:
        by_inst.setdefault(r.instance, {})[r.algo] = r
    for rows in by_inst.values():
        exact, lp = rows["exact"], rows["lp_bound"]
        assert lp.objective <= exact.objective + 1e-6 * max(1.0, abs(exact.objective))
        for r in rows.values():
            if r.algo != "lp_bound":
                assert r.gap_vs_lp >= -1e-6
        if exact.status == "optimal":
            assert exact.gap_vs_exact == 0
            assert rows["greedy"].gap_vs_exact >= -1e-6
            assert rows["heuristic"].gap_vs_exact >= -1e-6


def test_exact_monotone_in_theta(theta_run):
    spec, records = theta_run
    mono = bench.exact_monotone(spec, records)
    assert mono[0.0] is None
    assert all(v is not False for v in mono.values())


def test_summary_rows(theta_run):
    spec, records = theta_run
    rows = summarize(spec, records)
    assert len(rows) == 3 * 4
    for row in rows:
        assert row["n"] == 3
        assert row["objective_ci95"] >= 0
    out = io.StringIO()
    bench.write_summary(rows, out)
    assert out.getvalue().splitlines()[0] == ",".join(bench.SUMMARY_HEADER)


def test_csv_roundtrip(theta_run):
    _, records = theta_run
    buf = io.StringIO()
    write_records(records, buf)
    assert buf.getvalue().splitlines()[0] == ",".join(bench.CSV_HEADER)
    buf.seek(0)
    assert read_records(buf) == records


def test_workers_do_not_change_results():
    spec = theta_spec(values=(0.0, 1.0), replications=2, base=GeneratorConfig(topology="ring(5)", n_commodities=3, seed=1))

    def strip(records):
        return [r.row()[:10] + r.row()[11:] for r in records]

    assert strip(run_bench(spec, workers=1)) == strip(run_bench(spec, workers=2))


def test_mean_ci():
    mean, half = bench._mean_ci([1.0, 2.0, 3.0])
    assert mean == 2.0
    assert half == pytest.approx(4.302652729911275 * 1.0 / 3**0.5)
    assert bench._mean_ci([5.0]) == (5.0, 0.0)
    assert bench._mean_ci([]) == (None, None)


def test_failed_algorithm_gives_error_row(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(bench, "greedy", boom)
    spec = theta_spec(values=(0.5,), replications=1, base=GeneratorConfig(topology="ring(5)", n_commodities=2, seed=2))
    records = run_bench(spec)
    statuses = {r.algo: r.status for r in records}
    assert statuses["greedy"] == "error" and statuses["exact"] == "optimal"


@pytest.mark.parametrize(
    "changes",
    [{"experiment": "sweep_colour"}, {"values": ()}, {"replications": 0}, {"algorithms": ("exact", "magic")}],
)
def test_spec_validation(changes):
    with pytest.raises(ValueError):
        theta_spec(**changes)


def test_spec_dict_roundtrip():
    spec = theta_spec()
    assert ExperimentSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({**spec.to_dict(), "colour": "red"})


def test_config_uses_replication_seed():
    spec = ExperimentSpec("sweep_anti_affinity", (0, 3), base=GeneratorConfig(seed=10))
    cfg = spec.config(3, 2)
    assert (cfg.n_anti_affinity, cfg.seed) == (3, 12)


def test_record_blank_fields():
    rec = RunRecord("i", None, "greedy", "error")
    assert rec.row()[1] == "" and rec.row()[4] == ""
