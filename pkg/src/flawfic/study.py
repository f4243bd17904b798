"""Generation-consistency study: rewrite stories (summaries or modern
retellings), run one detector over originals and rewrites, and compare
continuity-error flag rates.

Detector failures (exceptions or unparseable responses) drop out of
that column's denominator and are tallied as warnings, so rates stay
comparable while the loss is visible.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from flawfic.core import FlawficError, Story, word_count
from flawfic.evaluation import (
    DetectorConfig,
    EntailmentScorer,
    detect,
    detect_with_verifier,
    entailment_baseline,
    no_error_baseline,
    random_baseline,
)
from flawfic.gateway import ChatRequest, Gateway
from flawfic.parsing import GenerationKind, Verdict, parse_generation
from flawfic.prompts import Stage, load_template, render

__all__ = [
    "StudyTask",
    "StudyPair",
    "StudyRun",
    "DEFAULT_SUMMARY_WORD_BUDGET",
    "generate",
    "detect_flags",
    "rate_from_flags",
    "detection_rate",
    "run_study",
]

logger = logging.getLogger(__name__)

DEFAULT_SUMMARY_WORD_BUDGET = 1000


class StudyTask(str, Enum):
    SUMMARIZE = "summarize"
    ADAPT_MODERN = "adapt_modern"


def generate(
    story: Story,
    task: StudyTask,
    gateway: Gateway,
    word_budget: Optional[int] = None,
    model: str = "gpt-4o",
) -> str:
    """One generation sample for the story under the given task.

    Summaries carry a word budget (default 1000); the prompt only asks
    the model to try, so overruns are logged, never rejected.
    """
    if task is StudyTask.SUMMARIZE:
        budget = word_budget if word_budget is not None else DEFAULT_SUMMARY_WORD_BUDGET
        prompt = render(
            load_template(Stage.SUMMARIZE), story=story.text, num_words=budget
        )
        kind = GenerationKind.SUMMARY
    else:
        prompt = render(
            load_template(Stage.ADAPT_MODERN), original_fairytale=story.text
        )
        kind = GenerationKind.RETELLING
        budget = None
    response = gateway.complete(ChatRequest.user(model, prompt))
    text = parse_generation(response.completions[0], kind)
    generated_words = word_count(text)
    if budget is not None and generated_words > budget:
        logger.warning(
            "summary of %s runs %d words over the %d-word budget",
            story.id,
            generated_words - budget,
            budget,
        )
    return text


_BASELINES = ("no_error", "random", "entailment")


def _validate_detector(
    detector: DetectorConfig | str,
    gateway: Optional[Gateway],
    scorer: Optional[EntailmentScorer],
) -> None:
    """Misconfiguration fails loudly up front; only per-text detection
    trouble is later downgraded to an excluded-with-warning flag."""
    if isinstance(detector, str):
        if detector not in _BASELINES:
            raise FlawficError(f"unknown baseline {detector!r}")
        if detector == "entailment" and scorer is None:
            raise FlawficError("entailment baseline needs a scorer")
    elif gateway is None:
        raise FlawficError("model detectors need a gateway")


def _flag_one(
    text: str,
    detector: DetectorConfig | str,
    gateway: Optional[Gateway],
    text_id: str,
    seed: int,
    scorer: Optional[EntailmentScorer],
) -> Optional[bool]:
    """True/False = detector verdict; None = detector failure."""
    try:
        if detector == "no_error":
            prediction = no_error_baseline()
        elif detector == "random":
            prediction = random_baseline(text_id, seed=seed)
        elif detector == "entailment":
            assert scorer is not None  # _validate_detector ran first
            prediction = entailment_baseline(text, scorer)
        else:
            assert isinstance(detector, DetectorConfig) and gateway is not None
            if detector.use_verifier:
                prediction = detect_with_verifier(text, gateway, detector)
            else:
                prediction = detect(text, gateway, detector)
        if prediction.parse_failed:
            logger.warning("detector failed to parse a response for %s", text_id)
            return None
        return prediction.verdict is Verdict.ERROR_FOUND
    except FlawficError as exc:
        logger.warning("detector failed on %s: %s", text_id, exc)
        return None


def detect_flags(
    texts: Sequence[str],
    detector: DetectorConfig | str,
    gateway: Optional[Gateway] = None,
    seed: int = 0,
    scorer: Optional[EntailmentScorer] = None,
    ids: Optional[Sequence[str]] = None,
) -> list[Optional[bool]]:
    _validate_detector(detector, gateway, scorer)
    if ids is None:
        ids = [f"text-{i}" for i in range(len(texts))]
    return [
        _flag_one(text, detector, gateway, text_id, seed, scorer)
        for text, text_id in zip(texts, ids)
    ]


def rate_from_flags(flags: Sequence[Optional[bool]]) -> float:
    valid = [f for f in flags if f is not None]
    if not valid:
        raise FlawficError("every detection failed; no denominator left")
    return sum(1 for f in valid if f) / len(valid)


def detection_rate(
    texts: Sequence[str],
    detector: DetectorConfig | str,
    gateway: Optional[Gateway] = None,
    seed: int = 0,
    scorer: Optional[EntailmentScorer] = None,
) -> float:
    """Fraction of texts the detector flags, failures excluded."""
    if not texts:
        raise FlawficError("detection rate over an empty list")
    return rate_from_flags(detect_flags(texts, detector, gateway, seed=seed, scorer=scorer))


@dataclass(frozen=True)
class StudyPair:
    story_id: str
    generated_text: str
    generated_word_count: int
    original_flagged: Optional[bool]
    generated_flagged: Optional[bool]


@dataclass(frozen=True)
class StudyRun:
    task: StudyTask
    generator_model: str
    detector_label: str
    pairs: tuple[StudyPair, ...]
    original_rate: float
    generated_rate: float
    ratio: Optional[float]  # generated/original; None when original rate is 0
    warnings: int

    def __post_init__(self) -> None:
        ids = [p.story_id for p in self.pairs]
        if len(set(ids)) != len(ids):
            raise FlawficError("study pairs must reference distinct stories")


def _flag_str(flag: Optional[bool]) -> str:
    if flag is None:
        return "error"
    return "true" if flag else "false"


def run_study(
    stories: Sequence[Story],
    task: StudyTask,
    gateway: Gateway,
    generator_model: str = "gpt-4o",
    detector: DetectorConfig | str = DetectorConfig(),
    word_budget: Optional[int] = None,
    out_dir: Optional[str | Path] = None,
    seed: int = 0,
    scorer: Optional[EntailmentScorer] = None,
    workers: int = 1,
) -> StudyRun:
    """Generate one rewrite per story, flag both texts, and aggregate.

    With out_dir set, writes pairs.csv (one row per story) and
    summary.json (rates, ratio, warning count).
    """
    if not stories:
        raise FlawficError("study needs at least one story")
    _validate_detector(detector, gateway, scorer)

    def one(story: Story) -> StudyPair:
        generated = generate(
            story, task, gateway, word_budget=word_budget, model=generator_model
        )
        original_flag = _flag_one(
            story.text, detector, gateway, f"{story.id}:original", seed, scorer
        )
        generated_flag = _flag_one(
            generated, detector, gateway, f"{story.id}:generated", seed, scorer
        )
        return StudyPair(
            story_id=story.id,
            generated_text=generated,
            generated_word_count=word_count(generated),
            original_flagged=original_flag,
            generated_flagged=generated_flag,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = tuple(pool.map(one, stories))
    else:
        pairs = tuple(one(s) for s in stories)

    original_rate = rate_from_flags([p.original_flagged for p in pairs])
    generated_rate = rate_from_flags([p.generated_flagged for p in pairs])
    warnings = sum(
        (p.original_flagged is None) + (p.generated_flagged is None) for p in pairs
    )
    ratio = generated_rate / original_rate if original_rate > 0 else None
    detector_label = detector if isinstance(detector, str) else detector.label
    run = StudyRun(
        task=task,
        generator_model=generator_model,
        detector_label=detector_label,
        pairs=pairs,
        original_rate=original_rate,
        generated_rate=generated_rate,
        ratio=ratio,
        warnings=warnings,
    )
    if out_dir is not None:
        write_study_outputs(run, out_dir)
    return run


def write_study_outputs(run: StudyRun, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "pairs.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["story_id", "original_flagged", "generated_flagged"])
        for pair in run.pairs:
            writer.writerow(
                [
                    pair.story_id,
                    _flag_str(pair.original_flagged),
                    _flag_str(pair.generated_flagged),
                ]
            )
    summary = {
        "task": run.task.value,
        "generator_model": run.generator_model,
        "detector": run.detector_label,
        "n_stories": len(run.pairs),
        "original_rate": round(run.original_rate, 6),
        "generated_rate": round(run.generated_rate, 6),
        "ratio": round(run.ratio, 6) if run.ratio is not None else None,
        "warnings": run.warnings,
        "original_denominator": sum(
            1 for p in run.pairs if p.original_flagged is not None
        ),
        "generated_denominator": sum(
            1 for p in run.pairs if p.generated_flagged is not None
        ),
    }
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as f:
        json.dump(summary, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
