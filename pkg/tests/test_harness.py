import csv
import io
import json
import os
import statistics

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spgpnav import harness
from spgpnav.harness import (
    CSV_HEADER,
    METRICS,
    HarnessError,
    emit_results,
    experiment,
    mean_std,
    read_sweep_curve,
    results_csv,
    results_json,
    run_experiment,
    sweep,
    trials_csv,
)
from spgpnav.scenarios import build_scenario, with_params
from spgpnav.simulator import run


@pytest.fixture(scope="module")
def doorway():
    return build_scenario("doorway", 2)


@pytest.fixture(scope="module")
def summary(doorway):
    return experiment(doorway, "spgp", 3, 7)


class TestAggregate:
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30))
    def test_population_std(self, xs):
        m, s = mean_std(xs)
        assert m == pytest.approx(statistics.fmean(xs), rel=1e-9, abs=1e-6)
        assert s == pytest.approx(statistics.pstdev(xs), rel=1e-9, abs=1e-6)
        assert s >= 0

    def test_empty(self):
        with pytest.raises(ValueError):
            mean_std([])

    def test_one_trial_zero_std(self, doorway):
        s = experiment(doorway, "spgp", 1, 0)
        assert all(s.stats[m][1] == 0.0 for m in METRICS)

    def test_counts_and_seeds(self, summary):
        assert summary.trials == 3 == len(summary.records)
        assert [r.seed for r in summary.records] == [7, 8, 9]
        assert summary.success_rate == 100.0

    def test_summary_matches_trials_file(self, summary):
        rows = list(csv.DictReader(io.StringIO(trials_csv(summary))))
        assert len(rows) == 3
        for metric in ("makespan", "avg_delta_v", "path_deviation", "min_pair_h"):
            column = [float(r[metric]) for r in rows]
            assert summary.stats[metric][0] == pytest.approx(np.mean(column), rel=1e-15)
            assert summary.stats[metric][1] == pytest.approx(np.std(column), abs=1e-12)

    def test_sbc_doorway_fails(self):
        s = run_experiment("doorway", 2, "sbc", 2, 0)
        assert s.stats["success_rate"] == (0.0, 0.0)
        assert all(r.result.deadlock_count >= 1 for r in s.records)

    @pytest.mark.parametrize("kw", [dict(method="orca"), dict(trials=0)])
    def test_bad_requests(self, doorway, kw):
        args = dict(method="spgp", trials=1) | kw
        with pytest.raises(HarnessError):
            experiment(doorway, args["method"], args["trials"], 0)


class TestCsv:
    def test_header(self, summary):
        text = results_csv(summary)
        assert text.splitlines()[0] == "scenario,method,metric,mean,std,trials,seed"
        assert ",".join(CSV_HEADER) == text.splitlines()[0]
        assert [r["metric"] for r in csv.DictReader(io.StringIO(text))] == list(METRICS)

    def test_rows_carry_request(self, summary):
        for r in csv.DictReader(io.StringIO(results_csv(summary))):
            assert (r["scenario"], r["method"], r["trials"], r["seed"]) == \
                ("doorway", "spgp", "3", "7")

    def test_numbers_round_trip(self, summary):
        for r in csv.DictReader(io.StringIO(results_csv(summary))):
            assert float(r["mean"]) == summary.stats[r["metric"]][0]

    def test_byte_stable(self, doorway, summary):
        again = experiment(doorway, "spgp", 3, 7)
        assert results_csv(again) == results_csv(summary)
        assert trials_csv(again) == trials_csv(summary)
        assert results_json(again) == results_json(summary)

    def test_workers_match_serial(self, doorway, summary):
        parallel = experiment(doorway, "spgp", 3, 7, workers=2)
        assert results_csv(parallel) == results_csv(summary)

    def test_emit_writes_both_files(self, summary, tmp_path):
        path = str(tmp_path / "out.csv")
        written = emit_results(summary, path)
        assert written == [path, str(tmp_path / "out_trials.csv")]
        with open(path, encoding="utf-8") as fh:
            assert fh.read() == results_csv(summary)

    def test_emit_json(self, summary, tmp_path):
        path = str(tmp_path / "out.json")
        emit_results(summary, path, "json")
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        assert doc["experiments"][0]["stats"]["makespan"]["mean"] == summary.mean_makespan

    def test_unwritable_path_named(self, summary, tmp_path):
        path = str(tmp_path / "missing" / "out.csv")
        with pytest.raises(HarnessError, match="missing"):
            emit_results(summary, path)

    def test_unknown_format(self, summary, tmp_path):
        with pytest.raises(HarnessError):
            emit_results(summary, str(tmp_path / "x"), "xml")


@pytest.fixture(scope="module")
def forward(doorway):
    return sweep(doorway, [0.5, 1.0], 2, 0)


class TestSweep:
    def test_single_delta(self, doorway):
        s = sweep(doorway, [1.0], 1, 0)
        assert len(s.curve()) == 1

    def test_order_independent(self, doorway, forward):
        backward = sweep(doorway, [1.0, 0.5], 2, 0)
        a = dict(zip(forward.deltas, forward.summaries))
        b = dict(zip(backward.deltas, backward.summaries))
        for d in (0.5, 1.0):
            assert a[d].stats == b[d].stats

    def test_metric_names(self, forward):
        metrics = [r["metric"] for r in csv.DictReader(io.StringIO(results_csv(forward)))]
        assert "makespan@delta=0.5" in metrics and "makespan@delta=1.0" in metrics

    def test_curve_file_round_trip(self, forward, tmp_path):
        for fmt in ("csv", "json"):
            path = str(tmp_path / f"sweep.{fmt}")
            emit_results(forward, path, fmt)
            assert read_sweep_curve(path) == forward.curve()

    def test_curve_needs_sweep_rows(self, summary, tmp_path):
        path = str(tmp_path / "plain.csv")
        emit_results(summary, path)
        with pytest.raises(HarnessError, match="no makespan"):
            read_sweep_curve(path)

    def test_curve_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(HarnessError, match="header"):
            read_sweep_curve(str(path))

    @pytest.mark.parametrize("deltas", [[], [0.5, 0.0], [-1.0]])
    def test_bad_deltas(self, doorway, deltas):
        with pytest.raises(HarnessError):
            sweep(doorway, deltas, 1, 0)


class TestLogs:
    def test_round_trip(self, doorway, tmp_path):
        log, _ = run(with_params(doorway, t_max=400), 0)
        path = str(tmp_path / "trial.npz")
        harness.save_log(log, doorway, path)
        back, config = harness.load_log(path)
        assert config == doorway
        assert np.array_equal(back.positions, log.positions)
        assert back.events == [(s, k, a, tuple(p) if isinstance(p, tuple) else p)
                               for s, k, a, p in log.events]

    def test_bad_file(self, tmp_path):
        path = tmp_path / "junk.npz"
        path.write_bytes(b"not a zip")
        with pytest.raises(HarnessError):
            harness.load_log(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(HarnessError):
            harness.load_log(os.path.join(str(tmp_path), "nope.npz"))
