"""Command-line entry points.

Exit codes: 0 success, 1 domain error (bad data, missing fixtures,
provider trouble), 2 usage error (unknown flags, bad flag values,
missing files named on the command line).

Config discovery order: --config flag, then the FLAWFIC_CONFIG
environment variable, then ./flawfic.toml if present. The config names
providers (endpoint, protocol, credential_env — the credential itself
always comes from that environment variable at call time and is never
written anywhere).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path
from typing import Optional

import click

try:  # 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from flawfic.core import FlawficError, NegativeStrategy
from flawfic.dataset import (
    build_dataset,
    candidate_from_dict,
    dataset_stats,
    export_jsonl,
    import_jsonl,
    load_stories,
)
from flawfic.evaluation import DetectorConfig, DetectorMode, run_eval
from flawfic.gateway import (
    FixtureStore,
    Gateway,
    HttpProvider,
    Provider,
    ProviderConfig,
    RecordingProvider,
    ReplayProvider,
    Router,
)
from flawfic.pipeline import PipelineConfig, run_batch
from flawfic.prompts import Stage
from flawfic.study import StudyTask, run_study

_BASELINE_ALIASES = {
    "no-error": "no_error",
    "no_error": "no_error",
    "random": "random",
    "entailment": "entailment",
}


def load_config(explicit: Optional[str]) -> dict:
    """Resolve and parse the TOML config; {} when nothing is configured."""
    path: Optional[Path] = None
    if explicit:
        path = Path(explicit)
        if not path.is_file():
            raise click.UsageError(f"config file not found: {path}")
    elif os.environ.get("FLAWFIC_CONFIG"):
        path = Path(os.environ["FLAWFIC_CONFIG"])
        if not path.is_file():
            raise click.UsageError(
                f"FLAWFIC_CONFIG points at a missing file: {path}"
            )
    elif Path("flawfic.toml").is_file():
        path = Path("flawfic.toml")
    if path is None:
        return {}
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise FlawficError(f"config {path} is not valid TOML: {exc}") from exc


def build_gateway(
    config: dict, record: Optional[str], replay: Optional[str]
) -> Optional[Gateway]:
    """Gateway per the record/replay flags; None when no traffic source
    is configured (baseline-only commands are fine with that)."""
    if record and replay:
        raise click.UsageError("--record and --replay are mutually exclusive")
    defaults = config.get("defaults", {})
    provider: Provider
    if replay:
        provider = ReplayProvider(FixtureStore(replay))
    else:
        entries = config.get("providers", [])
        if not entries:
            return None
        routes = []
        for entry in entries:
            pc = ProviderConfig(
                name=entry["name"],
                endpoint=entry["endpoint"],
                protocol=entry["protocol"],
                credential_env=entry["credential_env"],
                models=tuple(entry.get("models", ())),
                supports_n_samples=entry.get("supports_n_samples", False),
                supports_reasoning_effort=entry.get("supports_reasoning_effort", False),
                supports_extended_thinking=entry.get("supports_extended_thinking", False),
                timeout_s=entry.get("timeout_s", 120.0),
            )
            routes.append((pc.models, HttpProvider(pc)))
        provider = Router(routes)
        if record:
            provider = RecordingProvider(provider, FixtureStore(record))
    return Gateway(provider, max_in_flight=int(defaults.get("max_in_flight", 4)))


def require_gateway(gateway: Optional[Gateway]) -> Gateway:
    if gateway is None:
        raise FlawficError(
            "no model traffic source: pass --replay DIR, or configure "
            "providers in flawfic.toml (or the file named by --config / "
            "FLAWFIC_CONFIG)"
        )
    return gateway


def parse_detector_spec(spec: str) -> DetectorConfig | str:
    """Baseline name, or "model[:mode][+verifier]" for a live detector."""
    if spec in _BASELINE_ALIASES:
        return _BASELINE_ALIASES[spec]
    use_verifier = spec.endswith("+verifier")
    if use_verifier:
        spec = spec[: -len("+verifier")]
    model, _, mode_part = spec.rpartition(":")
    if model and mode_part in tuple(m.value for m in DetectorMode):
        mode = DetectorMode(mode_part)
    else:
        model = spec
        mode = DetectorMode.VANILLA
    if not model:
        raise click.UsageError(f"cannot parse detector spec {spec!r}")
    return DetectorConfig(mode=mode, model=model, use_verifier=use_verifier)


def common_options(fn):
    for option in (
        click.option(
            "--config",
            "config_path",
            default=None,
            metavar="PATH",
            help="TOML config (overrides FLAWFIC_CONFIG and ./flawfic.toml).",
        ),
        click.option(
            "--record",
            "record_dir",
            default=None,
            metavar="DIR",
            help="Record every model exchange as a fixture in DIR.",
        ),
        click.option(
            "--replay",
            "replay_dir",
            default=None,
            metavar="DIR",
            help="Serve model responses from fixtures in DIR; no network.",
        ),
        click.option("--seed", type=int, default=0, show_default=True),
    ):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(package_name="flawfic")
def cli():
    """Synthesize, curate, and evaluate continuity errors in short fiction."""


@cli.command()
@click.option("--stories", "stories_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--model", default=None, help="Model for every stage (default gpt-4o).")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option(
    "--deterministic",
    is_flag=True,
    help="Omit wall-clock fields so rerunning writes identical bytes.",
)
@common_options
def make(stories_path, out_dir, model, workers, deterministic, config_path, record_dir, replay_dir, seed):
    """Run the synthesis pipeline over stories; write a run directory."""
    config = load_config(config_path)
    gateway = require_gateway(build_gateway(config, record_dir, replay_dir))
    stories = load_stories(stories_path)
    if not stories:
        raise FlawficError(f"no stories in {stories_path}")
    stage_models = {}
    if model:
        stage_models = {stage.value: model for stage in Stage}
    pipeline_config = PipelineConfig(stage_models=stage_models)
    report = run_batch(
        stories,
        gateway,
        pipeline_config,
        out_dir,
        deterministic_provenance=deterministic,
        workers=workers,
    )
    click.echo(
        f"processed {len(report.outcomes)} stories: "
        f"{len(report.candidates)} candidates, {report.failures} failures"
    )
    click.echo(f"run directory: {out_dir}")


@cli.command("build-dataset")
@click.option("--candidates", "candidates_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--stories", "stories_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--strategy",
    type=click.Choice(["original", "counterfactual", "resolved"]),
    default="original",
    show_default=True,
)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--name", default="dataset", show_default=True)
@click.option("--resolve-model", default="gpt-4o", show_default=True)
@click.option(
    "--deterministic",
    is_flag=True,
    help="Omit the creation timestamp so rerunning writes identical bytes.",
)
@common_options
def build_dataset_cmd(
    candidates_path,
    stories_path,
    strategy,
    out_path,
    name,
    resolve_model,
    deterministic,
    config_path,
    record_dir,
    replay_dir,
    seed,
):
    """Pair accepted candidates with negatives into a labeled dataset."""
    config = load_config(config_path)
    gateway = build_gateway(config, record_dir, replay_dir)
    candidates = []
    with open(candidates_path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                candidates.append(candidate_from_dict(json.loads(line)))
    stories = load_stories(stories_path)
    negative_strategy = NegativeStrategy(strategy)
    if negative_strategy is NegativeStrategy.RESOLVED:
        gateway = require_gateway(gateway)
    manifest = build_dataset(
        candidates,
        stories,
        negative_strategy,
        gateway=gateway,
        seed=seed,
        name=name,
        resolve_model=resolve_model,
    )
    export_jsonl(manifest, out_path, created_at=None if deterministic else "")
    click.echo(
        f"wrote {len(manifest.examples)} examples "
        f"({len(manifest.positives)} positive, {len(manifest.negatives)} negative) "
        f"to {out_path}"
    )


@cli.command("eval")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--baseline", type=click.Choice(sorted(set(_BASELINE_ALIASES))), default=None)
@click.option("--detector", "detector_spec", default=None, metavar="SPEC",
              help='Detector spec "model[:mode][+verifier]", e.g. gpt-4o:cot+verifier.')
@click.option("--json", "as_json", is_flag=True, help="Print the summary as JSON.")
@click.option("--no-resume", is_flag=True, help="Ignore a previous run's journal.")
@common_options
def eval_cmd(
    dataset_path,
    out_dir,
    baseline,
    detector_spec,
    as_json,
    no_resume,
    config_path,
    record_dir,
    replay_dir,
    seed,
):
    """Score a detector (or reference baseline) over a dataset."""
    if baseline and detector_spec:
        raise click.UsageError("--baseline and --detector are mutually exclusive")
    config = load_config(config_path)
    gateway = build_gateway(config, record_dir, replay_dir)
    manifest = import_jsonl(dataset_path)
    detector: DetectorConfig | str
    if baseline:
        detector = _BASELINE_ALIASES[baseline]
    else:
        detector = parse_detector_spec(detector_spec or "gpt-4o")
    if detector == "entailment":
        raise FlawficError(
            "the entailment baseline needs an in-process scorer and has "
            "no command-line form; use the library API"
        )
    if isinstance(detector, DetectorConfig):
        gateway = require_gateway(gateway)
    report = run_eval(
        manifest,
        detector,
        out_dir,
        gateway=gateway,
        seed=seed,
        resume=not no_resume,
    )
    if as_json:
        click.echo(json.dumps(report.summary, ensure_ascii=False, sort_keys=True))
    else:
        for key in ("n", "accuracy", "precision", "recall", "f1", "ceeval_pos", "ceeval_full"):
            value = report.summary.get(key)
            if isinstance(value, float):
                click.echo(f"{key} {value:.4f}")
            elif value is not None:
                click.echo(f"{key} {value}")
        if report.resumed:
            click.echo(f"resumed {report.resumed} records from a previous run")
    click.echo(f"report: {Path(out_dir) / 'report.csv'}", err=True)


@cli.command()
@click.option(
    "--task",
    "task_name",
    type=click.Choice(["summarize", "adapt"]),
    required=True,
)
@click.option("--stories", "stories_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--generator", "generator_model", required=True, metavar="MODEL")
@click.option("--detector", "detector_spec", required=True, metavar="SPEC")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--word-budget", type=int, default=None, help="Summary word budget (default 1000).")
@common_options
def genstudy(
    task_name,
    stories_path,
    generator_model,
    detector_spec,
    out_dir,
    word_budget,
    config_path,
    record_dir,
    replay_dir,
    seed,
):
    """Compare detector flag rates on original vs regenerated stories."""
    config = load_config(config_path)
    gateway = build_gateway(config, record_dir, replay_dir)
    detector = parse_detector_spec(detector_spec)
    if detector == "entailment":
        raise FlawficError(
            "the entailment baseline needs an in-process scorer and has no "
            "command-line form; use the library API"
        )
    gateway = require_gateway(gateway)  # generation always needs traffic
    stories = load_stories(stories_path)
    task = StudyTask.SUMMARIZE if task_name == "summarize" else StudyTask.ADAPT_MODERN
    run = run_study(
        stories,
        task,
        gateway,
        generator_model=generator_model,
        detector=detector,
        word_budget=word_budget,
        out_dir=out_dir,
        seed=seed,
    )
    click.echo(f"original rate {run.original_rate:.4f}")
    click.echo(f"generated rate {run.generated_rate:.4f}")
    if run.ratio is not None:
        click.echo(f"ratio {run.ratio:.4f}")
    else:
        click.echo("ratio undefined (no originals flagged)")
    if run.warnings:
        click.echo(f"warnings: {run.warnings} detection failures excluded", err=True)
    click.echo(f"outputs: {Path(out_dir) / 'pairs.csv'}", err=True)


@cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Print statistics as JSON.")
@common_options
def stats(dataset_path, as_json, config_path, record_dir, replay_dir, seed):
    """Word-count statistics of a dataset."""
    manifest = import_jsonl(dataset_path)
    values = dataset_stats(manifest)
    values["positives"] = len(manifest.positives)
    values["negatives"] = len(manifest.negatives)
    if as_json:
        click.echo(json.dumps(values, ensure_ascii=False, sort_keys=True))
    else:
        for key in ("count", "positives", "negatives", "mean", "std", "min", "p25", "median", "p75", "max"):
            value = values[key]
            if isinstance(value, float):
                click.echo(f"{key} {value:.2f}")
            else:
                click.echo(f"{key} {value}")


@cli.command("annotate-serve")
@click.option("--tasks", "tasks_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--token", default=None, help="Require ?token=... on API calls.")
@click.option("--static-dir", default=None, type=click.Path(file_okay=False))
@common_options
def annotate_serve(tasks_path, log_path, host, port, token, static_dir, config_path, record_dir, replay_dir, seed):
    """Serve the annotation UI and vote API (loopback by default)."""
    from flawfic.server import serve

    click.echo(f"serving annotation tasks from {tasks_path} on http://{host}:{port}/")
    serve(
        tasks_path,
        log_path,
        host=host,
        port=port,
        token=token,
        static_dir=static_dir,
    )


def main(argv: Optional[list[str]] = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 130
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except FlawficError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
