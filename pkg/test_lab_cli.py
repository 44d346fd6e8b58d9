"""
Tests for instance generation, configuration loading, experiment runs
and the lipext command line
"""

import csv
import json

import numpy as np
import pytest

from lipext.config import ExperimentConfig, load_config, resolve_threads, save_config
from lipext.exceptions import ConfigError
from lipext.experiments import CSV_HEADER, TRIALS, run_experiment, sweep_summary
from lipext.instances import generate_instance, load_instance, save_instance, trial_seed
from lipext.lab_cli import EXIT_ERROR, EXIT_FAILED, EXIT_OK, main
from lipext.metric_core import lip_constant


def small_config(experiment="kirszbraun", **overrides):
    params = dict(trials=4, seed=9)
    params.update(overrides)
    return ExperimentConfig.for_experiment(experiment, **params)


class TestInstanceGeneration:
    def test_same_seed_gives_identical_files(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["--quiet", "gen", "euclidean", "--seed", "42", "--out", str(first)]) == EXIT_OK
        assert main(["--quiet", "gen", "euclidean", "--seed", "42", "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_other_trial_differs(self):
        config = small_config()
        assert generate_instance(config, "euclidean", 0).digest != generate_instance(config, "euclidean", 1).digest

    def test_full_domain_gives_total_map(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"n_points": 6, "n_domain": 6}))
        out = tmp_path / "total.json"
        assert main(["--quiet", "gen", "supnorm", "--config", str(path), "--out", str(out)]) == EXIT_OK
        assert load_instance(str(out)).f.is_total

    @pytest.mark.parametrize("kind", ["euclidean", "supnorm", "tree"])
    def test_generated_instances_respect_lip_target(self, kind):
        config = small_config(n_points=6, n_domain=4)
        for trial in range(1000 if kind != "tree" else 200):
            inst = generate_instance(config, kind, trial)
            assert lip_constant(inst.f) <= config.lip_target * (1 + 1e-9)

    def test_saved_instance_reloads_with_same_digest(self, tmp_path):
        inst = generate_instance(small_config(), "tree", 3)
        path = save_instance(inst, str(tmp_path / "tree.json"))
        assert load_instance(path).digest == inst.digest

    def test_trial_seeds_are_decorrelated(self):
        assert trial_seed(0, 0) != trial_seed(0, 1)
        assert trial_seed(0, 0, "perturbation") != trial_seed(0, 0)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            generate_instance(small_config(), "hyperbolic")


class TestConfiguration:
    def test_zero_trials(self):
        with pytest.raises(ConfigError):
            small_config(trials=0)

    def test_domain_larger_than_space(self):
        with pytest.raises(ConfigError):
            small_config(n_points=3, n_domain=4)

    def test_eps_out_of_range(self):
        with pytest.raises(ConfigError):
            small_config("phi_lsc", eps=[0.0])

    def test_unknown_tolerance(self):
        with pytest.raises(ConfigError):
            small_config(tolerances={"bogus": 1.0})

    def test_tolerance_lookup(self):
        config = small_config("alpha_c", tolerances={"audit": 1e-3})
        assert config.tolerance("audit") == 1e-3
        assert config.tolerance("chain") == 1e-6
        assert config.tolerance("box_slack") == 1e-13

    def test_save_and_load(self, tmp_path):
        config = small_config(eps=[0.2])
        path = str(tmp_path / "cfg" / "run.json")
        save_config(config, path)
        assert load_config(path) == config

    def test_load_fills_experiment_defaults(self, tmp_path):
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({"trials": 3}))
        config = load_config(str(path), "tree_extension")
        assert config.trials == 3
        assert config.n_points == 8

    @pytest.mark.parametrize(
        "content",
        ["{not json", "[1, 2]", json.dumps({"colour": "blue"})],
    )
    def test_invalid_files(self, tmp_path, content):
        path = tmp_path / "bad.json"
        path.write_text(content)
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.json"))

    def test_resolve_threads(self, monkeypatch):
        monkeypatch.delenv("LIPEXT_THREADS", raising=False)
        assert resolve_threads() == -1
        monkeypatch.setenv("LIPEXT_THREADS", "3")
        assert resolve_threads() == 3
        for raw in ("many", "-2"):
            monkeypatch.setenv("LIPEXT_THREADS", raw)
            with pytest.raises(ConfigError):
                resolve_threads()


class TestRunExperiment:
    def test_every_experiment_has_a_trial(self):
        from lipext.config import EXPERIMENTS

        assert set(TRIALS) == set(EXPERIMENTS)

    def test_csv_layout(self, tmp_path):
        out = tmp_path / "kirszbraun.csv"
        config = small_config(output=str(out))
        report = run_experiment(config, n_jobs=1, quiet=True)
        assert report.passed

        with open(out, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows[0] == CSV_HEADER
        summary = [row for row in rows[1:] if row[1] == "summary"]
        assert [row[3] for row in summary] == ["min_slack", "max_violation", "pass_rate"]
        assert float(summary[2][4]) == 1.0
        trials = {int(row[1]) for row in rows[1:] if row[1] != "summary"}
        assert trials == set(range(4))

    def test_parallelism_does_not_change_results(self):
        config = small_config("midpoint_nonexp", trials=8)
        serial = run_experiment(config, n_jobs=1, quiet=True)
        parallel = run_experiment(config, n_jobs=2, quiet=True)

        def flatten(report):
            return [(r.trial, r.digest, [(m.name, m.value) for m in r.measurements]) for r in report.records]

        assert flatten(serial) == flatten(parallel)

    @pytest.mark.parametrize("experiment", ["psi_lsc", "transport_tree", "midpoint_nonexp"])
    def test_csv_bytes_do_not_depend_on_workers(self, tmp_path, experiment):
        serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
        run_experiment(small_config(experiment, trials=16, output=str(serial)), n_jobs=1, quiet=True)
        run_experiment(small_config(experiment, trials=16, output=str(parallel)), n_jobs=8, quiet=True)
        assert serial.read_bytes() == parallel.read_bytes()

    def test_default_midpoint_campaign_passes(self):
        report = run_experiment(ExperimentConfig.for_experiment("midpoint_nonexp"), n_jobs=1, quiet=True)
        assert report.pass_rate == 1.0

    def test_psi_c_campaign_passes(self):
        report = run_experiment(small_config("psi_c_lsc", trials=6), n_jobs=1, quiet=True)
        assert report.passed
        names = {m.name for r in report.records for m in r.measurements}
        assert "hull_distance@0.4" in names

    def test_reshetnyak_blocks_match_single_trials(self):
        from lipext.experiments import block_reshetnyak, trial_reshetnyak

        config = small_config("reshetnyak", trials=1500)
        block = block_reshetnyak(config, 990, 1010)
        assert [r.trial for r in block] == list(range(990, 1010))
        for record in block[::7]:
            single = trial_reshetnyak(config, record.trial)
            assert single.digest == record.digest
            assert [m.value for m in single.measurements] == [m.value for m in record.measurements]

    def test_full_reshetnyak_campaign_is_fast(self):
        import time

        config = ExperimentConfig.for_experiment("reshetnyak", trials=100_000)
        start = time.perf_counter()
        report = run_experiment(config, n_jobs=1, quiet=True)
        assert time.perf_counter() - start < 10.0
        assert report.pass_rate == 1.0

    def test_slack_reports_name_worst_trial(self):
        from lipext.experiments import ExperimentReport, TrialRecord

        records = []
        for trial, value in enumerate([0.2, -0.5, -1e-13, 0.1]):
            record = TrialRecord("kirszbraun", trial, "")
            record.add("lip_slack", value, 1e-12)
            record.add("lip_achieved", 1.0 - value)
            records.append(record)
        reports = ExperimentReport(small_config(), records).slack_reports()
        assert set(reports) == {"lip_slack"}
        assert not reports["lip_slack"].passed
        assert reports["lip_slack"].witness == (1, 1)

    def test_informational_means(self):
        report = run_experiment(small_config("continuity_sweep", trials=3), n_jobs=1, quiet=True)
        summary = sweep_summary(report)
        assert summary
        assert all(np.isfinite(v) for v in summary.values())


class TestCommandLine:
    def test_run_writes_csv(self, tmp_path):
        out = tmp_path / "results" / "reshetnyak.csv"
        code = main(["--quiet", "run", "reshetnyak", "--trials", "50", "--out", str(out)])
        assert code == EXIT_OK
        assert out.read_text().startswith(",".join(CSV_HEADER))

    def test_quiet_after_subcommand(self, tmp_path, capsys):
        out = tmp_path / "kirszbraun.csv"
        code = main(["run", "kirszbraun", "--trials", "3", "--out", str(out), "--quiet"])
        assert code == EXIT_OK
        assert capsys.readouterr().out == ""

    def test_experiment_alias(self, tmp_path):
        out = tmp_path / "lemma_41.csv"
        assert main(["--quiet", "run", "lemma_41", "--trials", "20", "--out", str(out)]) == EXIT_OK
        assert out.read_text().splitlines()[1].startswith("reshetnyak,0,")
        assert ExperimentConfig.for_experiment("lemma_41").experiment == "reshetnyak"

    def test_zero_trials_is_an_error(self):
        assert main(["--quiet", "run", "kirszbraun", "--trials", "0"]) == EXIT_ERROR

    def test_unknown_experiment(self):
        assert main(["--quiet", "run", "no_such_tag"]) == EXIT_ERROR

    def test_check_valid_instance(self, tmp_path, capsys):
        path = str(tmp_path / "inst.json")
        save_instance(generate_instance(small_config(), "supnorm", 0), path)
        assert main(["check", path]) == EXIT_OK
        assert "métrique valide" in capsys.readouterr().out

    def test_check_non_metric_table(self, tmp_path):
        path = tmp_path / "bad.json"
        doc = json.loads(generate_instance(small_config(n_points=3, n_domain=2), "euclidean", 0).to_text())
        doc["dist"] = [[0, 3, 1], [3, 0, 1], [1, 1, 0]]
        path.write_text(json.dumps(doc))
        assert main(["--quiet", "check", str(path)]) == EXIT_FAILED

    def test_check_lip_too_large(self, tmp_path):
        path = tmp_path / "steep.json"
        doc = json.loads(generate_instance(small_config(), "euclidean", 0).to_text())
        doc["lip_target"] = 1e-3
        path.write_text(json.dumps(doc))
        assert main(["--quiet", "check", str(path)]) == EXIT_FAILED

    def test_check_missing_file(self, tmp_path):
        assert main(["--quiet", "check", str(tmp_path / "absent.json")]) == EXIT_ERROR

    def test_list(self, capsys):
        assert main(["list"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "kirszbraun" in out and "transport_tree" in out
        assert "psi_c_lsc" in out and "lemma_41" in out
