"""Detectors, the verification loop, scoring metrics, reference
baselines, and the resumable evaluation runner.

Two metric families:

* classification — accuracy / precision / recall / F1 over the
  error-found verdict (zero denominators score 0.0);
* location-aware — an example scores 1 only when the verdict matches
  and, on positives, at least one predicted error line matches the gold
  error set AND at least one predicted contradicted line matches the
  gold contradicted set (sentence matching, not string equality). The
  positives-only mean and the all-examples mean are reported separately.
"""

from __future__ import annotations

import csv
import hashlib
import importlib.resources
import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

from flawfic.core import Example, FlawficError, Label, match_sentence, segment_sentences
from flawfic.dataset import DatasetManifest, example_from_dict
from flawfic.gateway import ChatRequest, Gateway
from flawfic.parsing import (
    DetectionResponse,
    Verdict,
    VerifierVerdict,
    parse_detection,
    parse_verifier,
)
from flawfic.prompts import Stage, load_template, render

__all__ = [
    "DetectorMode",
    "DetectorConfig",
    "EvalRecord",
    "EvalReport",
    "EntailmentScorer",
    "REPORT_COLUMNS",
    "load_exemplars",
    "render_exemplars",
    "detect",
    "verify_detection",
    "detect_with_verifier",
    "no_error_baseline",
    "random_baseline",
    "entailment_baseline",
    "ceeval_full",
    "ceeval_pos",
    "aggregate_records",
    "write_report_csv",
    "run_eval",
]


class DetectorMode(str, Enum):
    VANILLA = "vanilla"
    COT = "cot"
    FEWSHOT = "fewshot"


_MODE_STAGE = {
    DetectorMode.VANILLA: Stage.DETECT_VANILLA,
    DetectorMode.COT: Stage.DETECT_COT,
    DetectorMode.FEWSHOT: Stage.DETECT_FEWSHOT,
}


@dataclass(frozen=True)
class DetectorConfig:
    mode: DetectorMode = DetectorMode.VANILLA
    model: str = "gpt-4o"
    use_verifier: bool = False
    verifier_model: str = ""  # empty means: same model as the generator
    max_generator_samples: int = 5
    lenient: bool = True  # unparseable responses become no-error + parse_failed
    reasoning_effort: Optional[str] = None
    extended_thinking: bool = False

    def __post_init__(self) -> None:
        if self.max_generator_samples < 1:
            raise FlawficError("max_generator_samples must be >= 1")

    @property
    def verifier_model_name(self) -> str:
        return self.verifier_model or self.model

    @property
    def label(self) -> str:
        suffix = "+verifier" if self.use_verifier else ""
        return f"{self.model}:{self.mode.value}{suffix}"


# ---------------------------------------------------------------------------
# few-shot exemplars (bundled)


def load_exemplars() -> tuple[Example, Example]:
    """The bundled (positive, negative) few-shot pair."""
    payload = (
        importlib.resources.files("flawfic")
        .joinpath("exemplars/exemplars.json")
        .read_text(encoding="utf-8")
    )
    data = json.loads(payload)
    return example_from_dict(data["positive"]), example_from_dict(data["negative"])


def _exemplar_answer(example: Example) -> str:
    if example.gold is None:
        return (
            "<response>\n<explanation>\nThe story stays consistent: every later "
            "event agrees with what the opening establishes.\n</explanation>\n\n"
            "<error_lines>\nNA\n</error_lines>\n\n<contradicted_lines>\nNA\n"
            "</contradicted_lines>\n\n<decision>\nNo continuity error found\n"
            "</decision>\n</response>"
        )
    error_lines = "\n".join(example.gold.error_lines)
    contradicted = "\n".join(example.gold.contradicted_lines)
    return (
        f"<response>\n<explanation>\n{example.gold.explanation}\n</explanation>\n\n"
        f"<error_lines>\n{error_lines}\n</error_lines>\n\n"
        f"<contradicted_lines>\n{contradicted}\n</contradicted_lines>\n\n"
        f"<decision>\nContinuity error found\n</decision>\n</response>"
    )


def render_exemplars(exemplars: Sequence[Example]) -> str:
    blocks = []
    for example in exemplars:
        blocks.append(
            f"<example>\n<story>\n{example.text}\n</story>\n\n"
            f"{_exemplar_answer(example)}\n</example>"
        )
    return "\n\n".join(blocks)


# ---------------------------------------------------------------------------
# detectors


def detect(
    story_text: str,
    gateway: Gateway,
    config: DetectorConfig,
    exemplars: Optional[Sequence[Example]] = None,
) -> DetectionResponse:
    stage = _MODE_STAGE[config.mode]
    if config.mode is DetectorMode.FEWSHOT:
        pair = tuple(exemplars) if exemplars is not None else load_exemplars()
        prompt = render(load_template(stage), examples=render_exemplars(pair), story=story_text)
    else:
        prompt = render(load_template(stage), story=story_text)
    request = ChatRequest.user(
        config.model,
        prompt,
        reasoning_effort=config.reasoning_effort,
        extended_thinking=config.extended_thinking,
    )
    response = gateway.complete(request)
    return parse_detection(response.completions[0], lenient=config.lenient)


def verify_detection(
    story_text: str,
    detection: DetectionResponse,
    gateway: Gateway,
    config: DetectorConfig,
) -> VerifierVerdict:
    prompt = render(
        load_template(Stage.VERIFIER),
        story=story_text,
        cont_error_expl=detection.explanation or "NA",
        cont_error_lines="\n".join(detection.error_lines) or "NA",
        contradicted_lines="\n".join(detection.contradicted_lines) or "NA",
    )
    response = gateway.complete(ChatRequest.user(config.verifier_model_name, prompt))
    return parse_verifier(response.completions[0], strict=False)


def detect_with_verifier(
    story_text: str,
    gateway: Gateway,
    config: DetectorConfig,
    exemplars: Optional[Sequence[Example]] = None,
) -> DetectionResponse:
    """Generate detections until the verifier endorses one.

    No-error verdicts pass through unverified. After
    max_generator_samples rejected proposals the detector concedes with
    a no-error verdict flagged ``verifier_exhausted``.
    """
    for attempt in range(1, config.max_generator_samples + 1):
        detection = detect(story_text, gateway, config, exemplars=exemplars)
        if detection.verdict is Verdict.NO_ERROR:
            return replace(detection, generator_calls=attempt)
        verdict = verify_detection(story_text, detection, gateway, config)
        if verdict.answer:
            return replace(detection, generator_calls=attempt)
    return DetectionResponse(
        verdict=Verdict.NO_ERROR,
        decision_raw="No continuity error found",
        verifier_exhausted=True,
        generator_calls=config.max_generator_samples,
    )


# ---------------------------------------------------------------------------
# baselines (no model traffic)


def no_error_baseline() -> DetectionResponse:
    return DetectionResponse(
        verdict=Verdict.NO_ERROR, decision_raw="No continuity error found"
    )


def random_baseline(example_id: str, seed: int = 0) -> DetectionResponse:
    """Coin flip derived from sha256 of ``{seed}:{example_id}``: odd
    digests flag an error (with no line predictions), even say clean."""
    digest = hashlib.sha256(f"{seed}:{example_id}".encode("utf-8")).hexdigest()
    if int(digest, 16) % 2 == 1:
        return DetectionResponse(
            verdict=Verdict.ERROR_FOUND, decision_raw="Continuity error found"
        )
    return no_error_baseline()


EntailmentScorer = Callable[[str, str], float]
"""Maps (earlier sentence, later sentence) to a contradiction
probability in [0, 1]."""


def entailment_baseline(
    story_text: str, scorer: EntailmentScorer, threshold: float = 0.5
) -> DetectionResponse:
    """Score every ordered sentence pair (i earlier than j), exactly
    n(n-1)/2 queries, and flag the highest-scoring pair when it clears
    the threshold; ties keep the earliest (i, j) in document order."""
    sentences = segment_sentences(story_text)
    best_score = -1.0
    best_pair: Optional[tuple[int, int]] = None
    for i in range(len(sentences)):
        for j in range(i + 1, len(sentences)):
            score = scorer(sentences[i].text, sentences[j].text)
            if score > best_score:
                best_score = score
                best_pair = (i, j)
    if best_pair is None or best_score <= threshold:
        return no_error_baseline()
    i, j = best_pair
    return DetectionResponse(
        verdict=Verdict.ERROR_FOUND,
        error_lines=(sentences[j].text,),
        contradicted_lines=(sentences[i].text,),
        explanation=(
            f"Sentence {j + 1} contradicts sentence {i + 1} "
            f"(contradiction score {best_score:.3f})."
        ),
        decision_raw="Continuity error found",
    )


# ---------------------------------------------------------------------------
# metrics


def ceeval_full(prediction: DetectionResponse, example: Example) -> int:
    """Location-aware score for any example: verdicts must match, and on
    positives at least one line from each predicted list must match the
    corresponding gold set."""
    gold_positive = example.label is Label.POSITIVE
    predicted_positive = prediction.verdict is Verdict.ERROR_FOUND
    if gold_positive != predicted_positive:
        return 0
    if not gold_positive:
        return 1
    gold = example.gold
    assert gold is not None  # enforced by the Example invariant
    error_hit = any(
        match_sentence(line, list(gold.error_lines)) for line in prediction.error_lines
    )
    contradicted_hit = any(
        match_sentence(line, list(gold.contradicted_lines))
        for line in prediction.contradicted_lines
    )
    return 1 if (error_hit and contradicted_hit) else 0


def ceeval_pos(prediction: DetectionResponse, example: Example) -> Optional[int]:
    """Location-aware score restricted to positives; None on negatives."""
    if example.label is not Label.POSITIVE:
        return None
    return ceeval_full(prediction, example)


@dataclass(frozen=True)
class EvalRecord:
    example_id: str
    gold_label: str  # positive | negative
    verdict: str  # error_found | no_error
    ceeval_full: int
    ceeval_pos: Optional[int]
    error_lines: tuple[str, ...] = ()
    contradicted_lines: tuple[str, ...] = ()
    explanation: str = ""
    parse_failed: bool = False
    verifier_exhausted: bool = False
    generator_calls: int = 1
    completion_tokens: int = 0

    @property
    def correct(self) -> bool:
        return (self.gold_label == "positive") == (self.verdict == "error_found")


def record_to_dict(record: EvalRecord) -> dict:
    return {
        "example_id": record.example_id,
        "gold_label": record.gold_label,
        "verdict": record.verdict,
        "ceeval_full": record.ceeval_full,
        "ceeval_pos": record.ceeval_pos,
        "error_lines": list(record.error_lines),
        "contradicted_lines": list(record.contradicted_lines),
        "explanation": record.explanation,
        "parse_failed": record.parse_failed,
        "verifier_exhausted": record.verifier_exhausted,
        "generator_calls": record.generator_calls,
        "completion_tokens": record.completion_tokens,
    }


def record_from_dict(d: dict) -> EvalRecord:
    return EvalRecord(
        example_id=d["example_id"],
        gold_label=d["gold_label"],
        verdict=d["verdict"],
        ceeval_full=d["ceeval_full"],
        ceeval_pos=d.get("ceeval_pos"),
        error_lines=tuple(d.get("error_lines", ())),
        contradicted_lines=tuple(d.get("contradicted_lines", ())),
        explanation=d.get("explanation", ""),
        parse_failed=d.get("parse_failed", False),
        verifier_exhausted=d.get("verifier_exhausted", False),
        generator_calls=d.get("generator_calls", 1),
        completion_tokens=d.get("completion_tokens", 0),
    )


def make_record(
    example: Example, prediction: DetectionResponse, completion_tokens: int = 0
) -> EvalRecord:
    return EvalRecord(
        example_id=example.example_id,
        gold_label=example.label.value,
        verdict=prediction.verdict.value,
        ceeval_full=ceeval_full(prediction, example),
        ceeval_pos=ceeval_pos(prediction, example),
        error_lines=prediction.error_lines,
        contradicted_lines=prediction.contradicted_lines,
        explanation=prediction.explanation,
        parse_failed=prediction.parse_failed,
        verifier_exhausted=prediction.verifier_exhausted,
        generator_calls=prediction.generator_calls,
        completion_tokens=completion_tokens,
    )


def aggregate_records(records: Sequence[EvalRecord]) -> dict:
    """Classification and location-aware aggregates; every ratio with a
    zero denominator is 0.0."""
    n = len(records)
    if n == 0:
        raise FlawficError("cannot aggregate zero records")
    tp = sum(1 for r in records if r.gold_label == "positive" and r.verdict == "error_found")
    fp = sum(1 for r in records if r.gold_label == "negative" and r.verdict == "error_found")
    fn = sum(1 for r in records if r.gold_label == "positive" and r.verdict == "no_error")
    correct = sum(1 for r in records if r.correct)
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    positives = [r for r in records if r.ceeval_pos is not None]
    return {
        "n": n,
        "accuracy": correct / n,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "ceeval_full": sum(r.ceeval_full for r in records) / n,
        "ceeval_pos": (
            sum(r.ceeval_pos for r in positives) / len(positives) if positives else 0.0
        ),
        "mean_completion_tokens": sum(r.completion_tokens for r in records) / n,
        "parse_failures": sum(1 for r in records if r.parse_failed),
        "verifier_exhausted": sum(1 for r in records if r.verifier_exhausted),
    }


REPORT_COLUMNS = (
    "model",
    "strategy",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "ceeval_pos",
    "ceeval_full",
    "mean_completion_tokens",
    "n",
)


def write_report_csv(rows: Sequence[dict], path: str | Path) -> None:
    """Fixed column order and float formatting so identical results
    produce identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row["model"],
                    row["strategy"],
                    f"{row['accuracy']:.4f}",
                    f"{row['precision']:.4f}",
                    f"{row['recall']:.4f}",
                    f"{row['f1']:.4f}",
                    f"{row['ceeval_pos']:.4f}",
                    f"{row['ceeval_full']:.4f}",
                    f"{row['mean_completion_tokens']:.2f}",
                    row["n"],
                ]
            )


BASELINES = ("no_error", "random", "entailment")


@dataclass(frozen=True)
class EvalReport:
    records: tuple[EvalRecord, ...]
    summary: dict
    resumed: int = 0  # records reused from a previous run


def _predict(
    example: Example,
    detector: DetectorConfig | str,
    gateway: Optional[Gateway],
    seed: int,
    scorer: Optional[EntailmentScorer],
    exemplars: Optional[Sequence[Example]],
) -> tuple[DetectionResponse, int]:
    if isinstance(detector, str):
        if detector == "no_error":
            return no_error_baseline(), 0
        if detector == "random":
            return random_baseline(example.example_id, seed=seed), 0
        if detector == "entailment":
            if scorer is None:
                raise FlawficError("entailment baseline needs a scorer")
            return entailment_baseline(example.text, scorer), 0
        raise FlawficError(f"unknown baseline {detector!r}; expected one of {BASELINES}")
    if gateway is None:
        raise FlawficError("model detectors need a gateway")
    before = gateway.total_usage.completion_tokens
    if detector.use_verifier:
        prediction = detect_with_verifier(example.text, gateway, detector, exemplars=exemplars)
    else:
        prediction = detect(example.text, gateway, detector, exemplars=exemplars)
    return prediction, gateway.total_usage.completion_tokens - before


def run_eval(
    manifest: DatasetManifest,
    detector: DetectorConfig | str,
    out_dir: str | Path,
    gateway: Optional[Gateway] = None,
    seed: int = 0,
    scorer: Optional[EntailmentScorer] = None,
    exemplars: Optional[Sequence[Example]] = None,
    resume: bool = True,
    model_label: Optional[str] = None,
) -> EvalReport:
    """Evaluate each example, journaling one record line per example to
    records.jsonl before moving on, then write report.csv.

    A rerun over the same out_dir skips examples already journaled, so
    an interrupted evaluation resumes without repeating model calls.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wal = out / "records.jsonl"

    done: dict[str, EvalRecord] = {}
    if resume and wal.exists():
        with open(wal, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    record = record_from_dict(json.loads(line))
                    done[record.example_id] = record

    records: list[EvalRecord] = []
    resumed = 0
    with open(wal, "a", encoding="utf-8", newline="\n") as journal:
        for example in manifest.examples:
            if example.example_id in done:
                records.append(done[example.example_id])
                resumed += 1
                continue
            prediction, tokens = _predict(
                example, detector, gateway, seed, scorer, exemplars
            )
            record = make_record(example, prediction, completion_tokens=tokens)
            journal.write(json.dumps(record_to_dict(record), ensure_ascii=False, sort_keys=True))
            journal.write("\n")
            journal.flush()
            records.append(record)

    summary = aggregate_records(records)
    if model_label is not None:
        label = model_label
    elif isinstance(detector, str):
        label = detector
    else:
        label = detector.label
    row = dict(summary)
    row["model"] = label
    row["strategy"] = manifest.negative_strategy.value
    write_report_csv([row], out / "report.csv")
    return EvalReport(records=tuple(records), summary=summary, resumed=resumed)
