"""Command-line surface: exit codes, config discovery, record/replay
wiring, and the make -> build-dataset -> eval chain."""

from __future__ import annotations

import json

import pytest

import test_pipeline
import test_study
from flawfic.cli import main, parse_detector_spec
from flawfic.dataset import export_jsonl, import_jsonl
from flawfic.evaluation import DetectorConfig, DetectorMode
from flawfic.gateway import FixtureStore, Gateway, RecordingProvider
from flawfic.pipeline import PipelineConfig, run_batch
from flawfic.study import StudyTask, run_study


def write_stories(path, stories):
    with open(path, "w", encoding="utf-8") as f:
        for story in stories:
            f.write(
                json.dumps(
                    {"id": story.id, "title": story.title, "text": story.text},
                    ensure_ascii=False,
                )
                + "\n"
            )
    return path


@pytest.fixture()
def pipeline_fixtures(tmp_path):
    """Record the scripted pipeline run as replayable fixtures."""
    fixture_dir = tmp_path / "fixtures"
    scripted = test_pipeline.make_full_gateway()
    recording = Gateway(
        RecordingProvider(scripted.provider, FixtureStore(fixture_dir))
    )
    reference_dir = tmp_path / "reference-run"
    run_batch(
        [test_pipeline.STORY_A],
        recording,
        PipelineConfig(),
        reference_dir,
        deterministic_provenance=True,
    )
    stories_path = write_stories(
        tmp_path / "stories.jsonl", [test_pipeline.STORY_A]
    )
    return fixture_dir, stories_path, reference_dir


def make_dataset_file(tmp_path):
    from test_evaluation import MANIFEST

    path = tmp_path / "dataset.jsonl"
    export_jsonl(MANIFEST, path, created_at=None)
    return path


class TestExitCodes:
    def test_help_is_success(self, capsys):
        assert main(["--help"]) == 0
        assert "build-dataset" in capsys.readouterr().out

    def test_subcommand_help(self, capsys):
        for sub in ("make", "build-dataset", "eval", "genstudy", "stats", "annotate-serve"):
            assert main([sub, "--help"]) == 0
            out = capsys.readouterr().out
            assert "--record" in out
            assert "--replay" in out
            assert "--seed" in out

    def test_unknown_option_is_usage_error(self, capsys):
        assert main(["stats", "--bogus"]) == 2

    def test_missing_required_option_is_usage_error(self, capsys):
        assert main(["stats"]) == 2

    def test_missing_input_file_is_usage_error(self, capsys):
        assert main(["stats", "--dataset", "/nonexistent/data.jsonl"]) == 2

    def test_record_and_replay_conflict(self, tmp_path, capsys):
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "no-error",
                "--record",
                "a",
                "--replay",
                "b",
            ]
        )
        assert code == 2

    def test_domain_error_is_exit_1(self, tmp_path, capsys):
        stories = write_stories(tmp_path / "stories.jsonl", [test_pipeline.STORY_A])
        code = main(
            ["make", "--stories", str(stories), "--out", str(tmp_path / "run")]
        )
        assert code == 1
        assert "no model traffic source" in capsys.readouterr().err


class TestDetectorSpec:
    def test_baseline_aliases(self):
        assert parse_detector_spec("no-error") == "no_error"
        assert parse_detector_spec("no_error") == "no_error"
        assert parse_detector_spec("random") == "random"

    def test_plain_model(self):
        config = parse_detector_spec("gpt-4o")
        assert config == DetectorConfig(mode=DetectorMode.VANILLA, model="gpt-4o")

    def test_model_with_mode(self):
        config = parse_detector_spec("claude-3-5-sonnet:cot")
        assert config.mode is DetectorMode.COT
        assert config.model == "claude-3-5-sonnet"
        assert config.use_verifier is False

    def test_model_mode_verifier(self):
        config = parse_detector_spec("gpt-4o:fewshot+verifier")
        assert config.mode is DetectorMode.FEWSHOT
        assert config.use_verifier is True

    def test_colon_in_model_name_without_mode(self):
        config = parse_detector_spec("ft:gpt-4o:org")
        assert config.model == "ft:gpt-4o:org"
        assert config.mode is DetectorMode.VANILLA


class TestStats:
    def test_plain_output(self, tmp_path, capsys):
        dataset = make_dataset_file(tmp_path)
        assert main(["stats", "--dataset", str(dataset)]) == 0
        out = capsys.readouterr().out
        assert "count 4" in out
        assert "positives 2" in out
        assert "mean " in out

    def test_json_output(self, tmp_path, capsys):
        dataset = make_dataset_file(tmp_path)
        assert main(["stats", "--dataset", str(dataset), "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["count"] == 4
        assert payload["positives"] == 2
        assert payload["negatives"] == 2
        assert set(payload) >= {"mean", "std", "min", "p25", "median", "p75", "max"}


class TestEval:
    def test_no_error_baseline_accuracy_half(self, tmp_path, capsys):
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "no-error",
            ]
        )
        assert code == 0
        captured = capsys.readouterr()
        assert "accuracy 0.5000" in captured.out
        assert (tmp_path / "out" / "report.csv").exists()
        assert (tmp_path / "out" / "records.jsonl").exists()

    def test_json_output(self, tmp_path, capsys):
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "no-error",
                "--json",
            ]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["accuracy"] == 0.5
        assert payload["n"] == 4

    def test_random_baseline_runs_without_gateway(self, tmp_path, capsys):
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "random",
                "--seed",
                "3",
            ]
        )
        assert code == 0

    def test_entailment_baseline_refused(self, tmp_path, capsys):
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "entailment",
            ]
        )
        assert code == 1
        assert "scorer" in capsys.readouterr().err

    def test_detector_flag_accepts_baseline_without_gateway(
        self, tmp_path, capsys
    ):
        # baseline names routed through --detector must not demand a
        # model traffic source
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--detector",
                "no_error",
            ]
        )
        assert code == 0
        assert "accuracy" in capsys.readouterr().out

    def test_detector_flag_refuses_entailment(self, tmp_path, capsys):
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--detector",
                "entailment",
            ]
        )
        assert code == 1
        assert "scorer" in capsys.readouterr().err

    def test_baseline_and_detector_conflict(self, tmp_path):
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "no-error",
                "--detector",
                "gpt-4o",
            ]
        )
        assert code == 2

    def test_detector_without_traffic_source_is_domain_error(self, tmp_path, capsys):
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--detector",
                "gpt-4o",
            ]
        )
        assert code == 1


class TestConfigDiscovery:
    def test_explicit_config_missing_is_usage_error(self, tmp_path, capsys):
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "no-error",
                "--config",
                str(tmp_path / "missing.toml"),
            ]
        )
        assert code == 2

    def test_env_config_missing_is_usage_error(self, tmp_path, monkeypatch, capsys):
        dataset = make_dataset_file(tmp_path)
        monkeypatch.setenv("FLAWFIC_CONFIG", str(tmp_path / "missing.toml"))
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "no-error",
            ]
        )
        assert code == 2

    def test_invalid_toml_is_domain_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("providers = [unclosed", encoding="utf-8")
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "no-error",
                "--config",
                str(bad),
            ]
        )
        assert code == 1
        assert "TOML" in capsys.readouterr().err

    def test_default_file_in_cwd_is_picked_up(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        (tmp_path / "flawfic.toml").write_text("junk = [", encoding="utf-8")
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "no-error",
            ]
        )
        assert code == 1  # proves ./flawfic.toml was read

    def test_no_config_anywhere_is_fine_for_baselines(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        dataset = make_dataset_file(tmp_path)
        code = main(
            [
                "eval",
                "--dataset",
                str(dataset),
                "--out",
                str(tmp_path / "out"),
                "--baseline",
                "no-error",
            ]
        )
        assert code == 0


class TestMakeChain:
    """make -> build-dataset -> eval, all through the CLI in replay mode."""

    def test_make_replay_matches_reference_run(self, tmp_path, pipeline_fixtures, capsys):
        fixture_dir, stories_path, reference_dir = pipeline_fixtures
        run_dir = tmp_path / "cli-run"
        code = main(
            [
                "make",
                "--stories",
                str(stories_path),
                "--out",
                str(run_dir),
                "--replay",
                str(fixture_dir),
                "--deterministic",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "processed 1 stories" in out
        for name in ("candidates.jsonl", "rejects.jsonl", "provenance.json"):
            assert (run_dir / name).read_bytes() == (reference_dir / name).read_bytes()

    def test_full_chain_reaches_expected_accuracy(self, tmp_path, pipeline_fixtures, capsys):
        fixture_dir, stories_path, _ = pipeline_fixtures
        run_dir = tmp_path / "cli-run"
        dataset_path = tmp_path / "data.jsonl"
        assert (
            main(
                [
                    "make",
                    "--stories",
                    str(stories_path),
                    "--out",
                    str(run_dir),
                    "--replay",
                    str(fixture_dir),
                    "--deterministic",
                ]
            )
            == 0
        )
        assert (
            main(
                [
                    "build-dataset",
                    "--candidates",
                    str(run_dir / "candidates.jsonl"),
                    "--stories",
                    str(stories_path),
                    "--strategy",
                    "original",
                    "--out",
                    str(dataset_path),
                    "--deterministic",
                ]
            )
            == 0
        )
        capsys.readouterr()
        assert (
            main(
                [
                    "eval",
                    "--dataset",
                    str(dataset_path),
                    "--out",
                    str(tmp_path / "eval"),
                    "--baseline",
                    "no-error",
                ]
            )
            == 0
        )
        out = capsys.readouterr().out
        assert "accuracy 0.5000" in out
        manifest = import_jsonl(dataset_path)
        assert len(manifest.positives) == 1
        assert len(manifest.negatives) == 1

    def test_build_dataset_deterministic_rerun(self, tmp_path, pipeline_fixtures, capsys):
        fixture_dir, stories_path, reference_dir = pipeline_fixtures
        outputs = []
        for name in ("a.jsonl", "b.jsonl"):
            path = tmp_path / name
            assert (
                main(
                    [
                        "build-dataset",
                        "--candidates",
                        str(reference_dir / "candidates.jsonl"),
                        "--stories",
                        str(stories_path),
                        "--out",
                        str(path),
                        "--deterministic",
                    ]
                )
                == 0
            )
            outputs.append(path.read_bytes())
        assert outputs[0] == outputs[1]


class TestGenstudy:
    @pytest.fixture()
    def study_fixtures(self, tmp_path):
        fixture_dir = tmp_path / "fixtures"
        scripted = test_study.mapped_gateway(test_study.study_prompt_map())
        recording = Gateway(
            RecordingProvider(scripted.provider, FixtureStore(fixture_dir))
        )
        run_study(
            test_study.STORIES,
            StudyTask.ADAPT_MODERN,
            recording,
            detector=DetectorConfig(),
        )
        stories_path = write_stories(tmp_path / "stories.jsonl", test_study.STORIES)
        return fixture_dir, stories_path

    def test_replay_run(self, tmp_path, study_fixtures, capsys):
        fixture_dir, stories_path = study_fixtures
        out_dir = tmp_path / "study-out"
        code = main(
            [
                "genstudy",
                "--task",
                "adapt",
                "--stories",
                str(stories_path),
                "--generator",
                "gpt-4o",
                "--detector",
                "gpt-4o",
                "--out",
                str(out_dir),
                "--replay",
                str(fixture_dir),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "original rate 0.3333" in out
        assert "generated rate 0.6667" in out
        assert "ratio 2.0000" in out
        assert (out_dir / "pairs.csv").exists()
        assert (out_dir / "summary.json").exists()

    def test_missing_fixture_is_domain_error(self, tmp_path, study_fixtures, capsys):
        _, stories_path = study_fixtures
        empty_fixtures = tmp_path / "empty-fixtures"
        empty_fixtures.mkdir()
        code = main(
            [
                "genstudy",
                "--task",
                "adapt",
                "--stories",
                str(stories_path),
                "--generator",
                "gpt-4o",
                "--detector",
                "gpt-4o",
                "--out",
                str(tmp_path / "study-out"),
                "--replay",
                str(empty_fixtures),
            ]
        )
        assert code == 1


class TestAnnotateServe:
    def test_wires_arguments_through(self, tmp_path, monkeypatch, capsys):
        import flawfic.server as server_module

        calls = {}

        def fake_serve(tasks_path, log_path, host, port, token, static_dir):
            calls.update(
                tasks=tasks_path,
                log=log_path,
                host=host,
                port=port,
                token=token,
                static_dir=static_dir,
            )

        monkeypatch.setattr(server_module, "serve", fake_serve)
        tasks = tmp_path / "tasks.jsonl"
        tasks.write_text("", encoding="utf-8")
        code = main(
            [
                "annotate-serve",
                "--tasks",
                str(tasks),
                "--log",
                str(tmp_path / "votes.log"),
                "--port",
                "9999",
                "--token",
                "sekrit",
            ]
        )
        assert code == 0
        assert calls["tasks"] == str(tasks)
        assert calls["port"] == 9999
        assert calls["host"] == "127.0.0.1"
        assert calls["token"] == "sekrit"
