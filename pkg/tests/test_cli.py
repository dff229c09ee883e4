import json

import pytest
from click.testing import CliRunner

from drp.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _local(tmp_path, *args):
    return ["--local", "--home", str(tmp_path / "home"), *args]


class TestScenarioCommands:
    def test_gen_writes_directory(self, runner, tmp_path):
        out = tmp_path / "scn"
        result = runner.invoke(
            main,
            ["scenario", "gen", "--id", "SERVICE_ERRORS", "--seed", "3", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        for name in ["points.jsonl", "events.jsonl", "alerts.jsonl", "rules.json",
                     "ground_truth.json", "spec.json"]:
            assert (out / name).exists()

    def test_demo_closed_loop(self, runner, tmp_path):
        result = runner.invoke(
            main,
            _local(tmp_path, "scenario", "demo", "--id", "SERVICE_ERRORS", "--seed", "7"),
        )
        assert result.exit_code == 0, result.output
        assert "alert fired" in result.output
        assert "annotation: " in result.output
        assert "manual playbook steps" in result.output


class TestRunCommands:
    def test_run_demo_analyzer_local(self, runner, tmp_path):
        scn = tmp_path / "scn"
        gen = runner.invoke(
            main, ["scenario", "gen", "--id", "SERVICE_ERRORS", "--seed", "5",
                   "--out", str(scn)],
        )
        assert gen.exit_code == 0
        # load the scenario into the local home, then run against it
        home = tmp_path / "home"
        from drp.backend import DrpService
        from drp.config import DrpConfig
        from drp.telemetry import load_scenario_dir

        service = DrpService(DrpConfig(home=home))
        service.load_scenario(load_scenario_dir(scn))
        service.close()

        result = runner.invoke(
            main,
            _local(tmp_path, "run", "service_errors", "--input", "service=checkout"),
        )
        assert result.exit_code == 0, result.output
        assert "ISSUE_FOUND" in result.output

    def test_run_async_prints_id(self, runner, tmp_path):
        result = runner.invoke(
            main, _local(tmp_path, "run", "service_errors",
                         "--input", "service=checkout", "--async"),
        )
        assert result.exit_code == 0, result.output
        assert result.output.strip().startswith("req-")

    def test_unknown_status_exit_1(self, runner, tmp_path):
        result = runner.invoke(main, _local(tmp_path, "status", "req-missing"))
        assert result.exit_code == 1

    def test_list_analyzers(self, runner, tmp_path):
        result = runner.invoke(main, _local(tmp_path, "list"))
        assert result.exit_code == 0
        assert "service_errors@" in result.output
        assert "ml_features@" in result.output

    def test_inconclusive_exit_2(self, runner, tmp_path):
        # no scenario data loaded: the analyzer cannot find enough points
        result = runner.invoke(
            main, _local(tmp_path, "run", "service_errors", "--input", "service=ghost"),
        )
        assert result.exit_code == 2, result.output


class TestBootstrapCommand:
    def test_bootstrap_and_refuse_overwrite(self, runner, tmp_path):
        out = tmp_path / "gen"
        result = runner.invoke(
            main,
            ["bootstrap", "disk_full", "--param", "service:STRING:required",
             "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert (out / "disk_full_analyzer.py").exists()
        again = runner.invoke(
            main,
            ["bootstrap", "disk_full", "--param", "service:STRING:required",
             "--out", str(out)],
        )
        assert again.exit_code == 1


class TestBacktestCommand:
    def test_backtest_gate_over_cli(self, runner, tmp_path):
        home = tmp_path / "home"
        # seed history by running the demo scenario once
        demo = runner.invoke(
            main, ["--local", "--home", str(home), "scenario", "demo",
                   "--id", "SERVICE_ERRORS", "--seed", "9"],
        )
        assert demo.exit_code == 0
        # the demo uses a throwaway home; seed real history instead
        from drp.backend import DrpService
        from drp.config import DrpConfig
        from drp.demo import register_demo
        from drp.telemetry import ScenarioId, ScenarioSpec, generate_scenario

        service = DrpService(DrpConfig(home=home))
        register_demo(service)
        bundle = generate_scenario(ScenarioSpec(ScenarioId.SERVICE_ERRORS, seed=9))
        service.load_scenario(bundle)
        service.start(worker_count=2)
        truth = bundle.ground_truth
        for _ in range(3):
            service.diagnose_sync(
                "service_errors",
                {"service": truth.target_service, "alert_id": truth.alert_id},
                timeout_ms=60_000,
            )
        service.close()

        ok = runner.invoke(
            main,
            ["--home", str(home), "backtest", "--analyzer", "service_errors",
             "--candidate", "drp.demo.analyzers:ServiceErrorsAnalyzer",
             "--json", str(tmp_path / "report.json")],
        )
        assert ok.exit_code == 0, ok.output
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["gate"] == "PASS"
        assert len(report["cases"]) == 3

        bad = runner.invoke(
            main,
            ["--home", str(home), "backtest", "--analyzer", "service_errors",
             "--candidate", "tests.support_candidates:BrokenCandidate"],
        )
        assert bad.exit_code == 1
        assert "LOGIC_FAIL" in bad.output
