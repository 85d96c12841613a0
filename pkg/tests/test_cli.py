import csv
import io
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from spgpnav.cli import main, resolve, build_parser, RUN_KEYS
from spgpnav.scenarios import load_scenario


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestRun:
    def test_stdout_csv(self, capsys):
        assert main(["run", "--scenario", "doorway", "--trials", "1", "--seed", "3"]) == 0
        out = rows(capsys.readouterr().out)
        assert out[0]["scenario"] == "doorway" and out[0]["seed"] == "3"
        assert {r["metric"] for r in out} >= {"success_rate", "makespan"}

    def test_files_and_plot(self, tmp_path):
        out = tmp_path / "r.csv"
        svg = tmp_path / "t.svg"
        logs = tmp_path / "logs"
        code = main(["run", "--scenario", "hallway", "--trials", "2", "--out", str(out),
                     "--plot", str(svg), "--log-dir", str(logs)])
        assert code == 0
        assert out.read_text().startswith("scenario,method,metric,mean,std,trials,seed\n")
        assert (tmp_path / "r_trials.csv").exists()
        assert len(list(logs.iterdir())) == 2
        ET.parse(svg)

    def test_byte_identical_reruns(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            assert main(["run", "--trials", "2", "--seed", "5", "--out", str(p)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_json_format(self, capsys):
        assert main(["run", "--trials", "1", "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["experiments"][0]["method"] == "spgp"

    def test_sbc_method(self, capsys):
        assert main(["run", "--method", "sbc", "--trials", "1", "--t-max", "200"]) == 0
        out = {r["metric"]: r for r in rows(capsys.readouterr().out)}
        assert out["success_rate"]["method"] == "sbc"
        assert float(out["success_rate"]["mean"]) == 0.0

    @pytest.mark.parametrize("argv", [
        ["run", "--scenario", "maze"],
        ["run", "--agents", "99"],
        ["run", "--trials", "0"],
        ["run", "--delta", "-1"],
        ["run", "--out", "/nonexistent/dir/out.csv", "--trials", "1", "--t-max", "5"],
    ])
    def test_errors_exit_nonzero(self, argv, capsys):
        assert main(argv) != 0
        assert "error" in capsys.readouterr().err

    def test_bad_choice_exits(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--method", "orca"])
        assert exc.value.code != 0


class TestConfig:
    def test_file_fills_and_flags_override(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"scenario": "hallway", "trials": 4, "t-max": 50}))
        args = build_parser().parse_args(["run", "--config", str(cfg), "--trials", "2"])
        s = resolve(args, RUN_KEYS)
        assert (s["scenario"], s["trials"], s["t_max"], s["seed"]) == ("hallway", 2, 50, 0)

    def test_config_run(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"scenario": "lcorner", "trials": 1, "seed": 9}))
        assert main(["run", "--config", str(cfg)]) == 0
        out = rows(capsys.readouterr().out)
        assert out[0]["scenario"] == "lcorner" and out[0]["seed"] == "9"

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"colour": "red"}))
        assert main(["run", "--config", str(cfg)]) == 1
        assert "colour" in capsys.readouterr().err

    def test_malformed(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text("{")
        assert main(["run", "--config", str(cfg)]) == 1


class TestSweepAndRender:
    def test_sweep_then_render(self, tmp_path):
        out = tmp_path / "s.csv"
        plot = tmp_path / "s.svg"
        assert main(["sweep", "--deltas", "0.5,1.0", "--trials", "1", "--out", str(out),
                     "--plot", str(plot)]) == 0
        metrics = [r["metric"] for r in rows(out.read_text())]
        assert "makespan@delta=0.5" in metrics
        again = tmp_path / "again.svg"
        assert main(["render", str(out), "--out", str(again)]) == 0
        root = ET.parse(again).getroot()
        assert len([e for e in root.iter() if e.get("class") == "marker"]) == 2

    def test_render_log(self, tmp_path):
        logs = tmp_path / "logs"
        assert main(["run", "--trials", "1", "--log-dir", str(logs), "--out",
                     str(tmp_path / "r.csv")]) == 0
        (log,) = logs.iterdir()
        svg = tmp_path / "t.svg"
        assert main(["render", str(log), "--out", str(svg)]) == 0
        ET.parse(svg)

    def test_bad_deltas(self, capsys):
        assert main(["sweep", "--deltas", "a,b"]) == 1

    def test_render_missing(self, tmp_path):
        assert main(["render", str(tmp_path / "x.csv"), "--out", str(tmp_path / "o.svg")]) == 1


class TestScenarioCommand:
    def test_save_load_validate(self, tmp_path, capsys):
        path = tmp_path / "h.json"
        assert main(["scenario", "save", "--scenario", "hallway", "--agents", "4",
                     "--delta", "1.5", "--out", str(path)]) == 0
        config = load_scenario(path.read_text())
        assert config.n_agents == 4 and config.spgp.delta == 1.5
        assert main(["scenario", "validate", str(path)]) == 0
        assert main(["scenario", "load", str(path)]) == 0
        assert "hallway: 4 agents" in capsys.readouterr().out

    def test_run_from_file(self, tmp_path, capsys):
        path = tmp_path / "d.json"
        assert main(["scenario", "save", "--out", str(path)]) == 0
        assert main(["run", "--scenario", str(path), "--trials", "1"]) == 0
        assert rows(capsys.readouterr().out)[0]["scenario"] == "doorway"

    def test_validate_rejects(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        doc = json.loads(subprocess.run(
            [sys.executable, "-m", "spgpnav.cli", "scenario", "save"],
            capture_output=True, text=True, check=True).stdout)
        del doc["spgp"]["delta"]
        path.write_text(json.dumps(doc))
        assert main(["scenario", "validate", str(path)]) == 1
        assert "delta" in capsys.readouterr().err

    def test_save_needs_builtin(self, tmp_path):
        assert main(["scenario", "save", "--scenario", str(tmp_path / "x.json")]) == 1


def test_module_entry_point_exit_codes():
    ok = subprocess.run([sys.executable, "-m", "spgpnav.cli", "scenario", "save",
                         "--scenario", "lcorner"], capture_output=True, text=True)
    assert ok.returncode == 0 and '"name": "lcorner"' in ok.stdout
    bad = subprocess.run([sys.executable, "-m", "spgpnav.cli", "run", "--scenario", "maze"],
                         capture_output=True, text=True)
    assert bad.returncode != 0 and "maze" in bad.stderr
