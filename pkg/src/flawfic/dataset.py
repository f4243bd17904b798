"""Dataset assembly: candidate/example serialization, annotation-vote
resolution, negative-example strategies, JSONL round-trip, statistics.

A dataset manifest is written as one JSON object per example line plus a
``<stem>.meta.json`` sidecar holding name, strategy, provenance, and
stats. The example file itself contains no clocks, so byte-identical
rebuilds need only the same inputs and seed.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from flawfic.core import (
    CandidateStatus,
    Example,
    FlawficError,
    GoldAnnotation,
    Label,
    NegativeStrategy,
    PatchedCandidate,
    Proposition,
    PropositionCategory,
    Story,
    word_count,
)
from flawfic.gateway import ChatRequest, Gateway
from flawfic.parsing import GenerationKind, parse_generation
from flawfic.prompts import Stage, load_template, render, template_digests

__all__ = [
    "VoteVerdict",
    "Vote",
    "AnnotationTask",
    "Resolution",
    "DuplicateAnnotatorError",
    "UnknownTaskIdError",
    "InsufficientNegativesError",
    "SchemaViolationError",
    "DatasetManifest",
    "resolve_annotations",
    "build_dataset",
    "dataset_stats",
    "export_jsonl",
    "import_jsonl",
    "export_annotation_tasks",
    "import_annotation_tasks",
    "ingest_votes",
    "apply_resolutions",
    "candidate_to_dict",
    "candidate_from_dict",
    "example_to_dict",
    "example_from_dict",
    "load_stories",
]


class VoteVerdict(str, Enum):
    LEGITIMATE = "legitimate"
    NOT_LEGITIMATE = "not_legitimate"
    UNSURE = "unsure"


@dataclass(frozen=True)
class Vote:
    annotator_id: str
    verdict: VoteVerdict
    timestamp: str = ""


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    story_text: str
    error_lines: tuple[str, ...]
    contradicted_lines: tuple[str, ...]
    explanation: str
    votes: tuple[Vote, ...] = ()

    def with_vote(self, vote: Vote) -> "AnnotationTask":
        return replace(self, votes=self.votes + (vote,))


class Resolution(str, Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    PENDING = "pending"


class DuplicateAnnotatorError(FlawficError):
    pass


class UnknownTaskIdError(FlawficError):
    pass


class InsufficientNegativesError(FlawficError):
    pass


class SchemaViolationError(FlawficError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def resolve_annotations(task: AnnotationTask) -> Resolution:
    """Majority rule: pending under 3 votes; rejected when unsure votes
    are a strict majority; otherwise accepted iff legitimate votes are a
    strict majority of the non-unsure votes (ties reject)."""
    ids = [v.annotator_id for v in task.votes]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise DuplicateAnnotatorError(
            f"task {task.task_id}: conflicting votes from annotator(s) {dupes}"
        )
    if len(task.votes) < 3:
        return Resolution.PENDING
    unsure = sum(1 for v in task.votes if v.verdict is VoteVerdict.UNSURE)
    if 2 * unsure > len(task.votes):
        return Resolution.REJECTED
    legit = sum(1 for v in task.votes if v.verdict is VoteVerdict.LEGITIMATE)
    non_unsure = len(task.votes) - unsure
    return Resolution.ACCEPTED if 2 * legit > non_unsure else Resolution.REJECTED


# ---------------------------------------------------------------------------
# candidate / example serialization


def candidate_to_dict(c: PatchedCandidate) -> dict:
    return {
        "candidate_id": c.candidate_id,
        "story_id": c.story_id,
        "proposition": {
            "statement": c.proposition.statement,
            "counterfactual": c.proposition.counterfactual,
            "category": c.proposition.category.value,
            "score": c.proposition.score,
            "score_rationale": c.proposition.score_rationale,
        },
        "patched_text": c.patched_text,
        "error_lines": list(c.error_lines),
        "contradicted_lines": list(c.contradicted_lines),
        "explanation": c.explanation,
        "filter_votes": {"yes": c.filter_votes[0], "total": c.filter_votes[1]},
        "status": c.status.value,
        "counterfactual_text": c.counterfactual_text,
    }


def candidate_from_dict(d: dict) -> PatchedCandidate:
    p = d["proposition"]
    return PatchedCandidate(
        candidate_id=d["candidate_id"],
        story_id=d["story_id"],
        proposition=Proposition(
            statement=p["statement"],
            counterfactual=p["counterfactual"],
            category=PropositionCategory(p["category"]),
            score=p.get("score"),
            score_rationale=p.get("score_rationale", ""),
        ),
        patched_text=d["patched_text"],
        error_lines=tuple(d["error_lines"]),
        contradicted_lines=tuple(d["contradicted_lines"]),
        explanation=d["explanation"],
        filter_votes=(d["filter_votes"]["yes"], d["filter_votes"]["total"]),
        status=CandidateStatus(d["status"]),
        counterfactual_text=d.get("counterfactual_text", ""),
    )


_EXAMPLE_FIELDS = (
    "example_id",
    "text",
    "label",
    "negative_strategy",
    "gold",
    "source_story_id",
    "word_count",
)


def example_to_dict(e: Example) -> dict:
    d = dict(e.extra)  # unknown fields first; known fields win
    d.update(
        {
            "example_id": e.example_id,
            "text": e.text,
            "label": e.label.value,
            "negative_strategy": e.negative_strategy.value,
            "source_story_id": e.source_story_id,
            "word_count": e.word_count,
        }
    )
    if e.gold is not None:
        d["gold"] = {
            "error_lines": list(e.gold.error_lines),
            "contradicted_lines": list(e.gold.contradicted_lines),
            "explanation": e.gold.explanation,
        }
    return d


def example_from_dict(d: dict, line_number: int = 0) -> Example:
    for key in ("example_id", "text", "label"):
        if key not in d:
            raise SchemaViolationError(line_number, f"example missing {key!r}")
    gold = None
    if d.get("gold") is not None:
        g = d["gold"]
        if not isinstance(g, dict) or "error_lines" not in g:
            raise SchemaViolationError(line_number, "malformed gold annotation")
        gold = GoldAnnotation(
            error_lines=tuple(g["error_lines"]),
            contradicted_lines=tuple(g.get("contradicted_lines", ())),
            explanation=g.get("explanation", ""),
        )
    try:
        label = Label(d["label"])
        strategy = NegativeStrategy(d.get("negative_strategy", "not_applicable"))
    except ValueError as exc:
        raise SchemaViolationError(line_number, str(exc)) from exc
    extra = {k: v for k, v in d.items() if k not in _EXAMPLE_FIELDS}
    try:
        return Example(
            example_id=d["example_id"],
            text=d["text"],
            label=label,
            negative_strategy=strategy,
            gold=gold,
            source_story_id=d.get("source_story_id", ""),
            word_count=d.get("word_count", -1),
            extra=extra,
        )
    except FlawficError as exc:
        raise SchemaViolationError(line_number, str(exc)) from exc


# ---------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    examples: tuple[Example, ...]
    negative_strategy: NegativeStrategy = NegativeStrategy.NOT_APPLICABLE
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        ids = [e.example_id for e in self.examples]
        if len(set(ids)) != len(ids):
            raise FlawficError("duplicate example ids in manifest")

    @property
    def positives(self) -> tuple[Example, ...]:
        return tuple(e for e in self.examples if e.label is Label.POSITIVE)

    @property
    def negatives(self) -> tuple[Example, ...]:
        return tuple(e for e in self.examples if e.label is Label.NEGATIVE)


def dataset_stats(manifest: DatasetManifest | Sequence[int]) -> dict:
    """Descriptive statistics of example word counts.

    std uses the (n-1) denominator; percentiles interpolate linearly
    between order statistics.
    """
    if isinstance(manifest, DatasetManifest):
        lengths = [e.word_count for e in manifest.examples]
    else:
        lengths = list(manifest)
    if not lengths:
        raise FlawficError("cannot compute statistics of an empty manifest")
    arr = np.asarray(lengths, dtype=float)
    return {
        "count": int(arr.size),
        "mean": float(arr.mean()),
        "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
        "min": float(arr.min()),
        "p25": float(np.percentile(arr, 25)),
        "median": float(np.percentile(arr, 50)),
        "p75": float(np.percentile(arr, 75)),
        "max": float(arr.max()),
    }


def _usable(c: PatchedCandidate) -> bool:
    return c.status in (CandidateStatus.ACCEPTED, CandidateStatus.PENDING_ANNOTATION)


def build_dataset(
    accepted: Sequence[PatchedCandidate],
    originals: Sequence[Story],
    strategy: NegativeStrategy,
    gateway: Optional[Gateway] = None,
    seed: int = 0,
    name: str = "dataset",
    resolve_model: str = "gpt-4o",
) -> DatasetManifest:
    """One positive per usable candidate plus an equal number of
    negatives drawn per strategy, shuffled with the recorded seed."""
    usable = [c for c in accepted if _usable(c)]
    if not usable:
        raise FlawficError("no accepted candidates to build from")

    positives = [
        Example(
            example_id=f"{c.candidate_id}-pos",
            text=c.patched_text,
            label=Label.POSITIVE,
            negative_strategy=NegativeStrategy.NOT_APPLICABLE,
            gold=GoldAnnotation(
                error_lines=c.error_lines,
                contradicted_lines=c.contradicted_lines,
                explanation=c.explanation,
            ),
            source_story_id=c.story_id,
        )
        for c in usable
    ]

    negatives: list[Example] = []
    if strategy is NegativeStrategy.ORIGINAL:
        by_id = {s.id: s for s in originals}
        chosen: list[Story] = []
        seen: set[str] = set()
        for c in usable:  # the stories that seeded positives, in order
            if c.story_id in by_id and c.story_id not in seen:
                chosen.append(by_id[c.story_id])
                seen.add(c.story_id)
        for s in originals:  # fill from remaining originals
            if len(chosen) >= len(positives):
                break
            if s.id not in seen:
                chosen.append(s)
                seen.add(s.id)
        if len(chosen) < len(positives):
            raise InsufficientNegativesError(
                f"{len(positives)} positives but only {len(chosen)} original stories"
            )
        negatives = [
            Example(
                example_id=f"{s.id}-orig",
                text=s.text,
                label=Label.NEGATIVE,
                negative_strategy=NegativeStrategy.ORIGINAL,
                source_story_id=s.id,
            )
            for s in chosen[: len(positives)]
        ]
    elif strategy is NegativeStrategy.COUNTERFACTUAL:
        for c in usable:
            if not c.counterfactual_text:
                raise InsufficientNegativesError(
                    f"candidate {c.candidate_id} has no counterfactual text"
                )
            negatives.append(
                Example(
                    example_id=f"{c.candidate_id}-cf",
                    text=c.counterfactual_text,
                    label=Label.NEGATIVE,
                    negative_strategy=NegativeStrategy.COUNTERFACTUAL,
                    source_story_id=c.story_id,
                    extra={"validated": False},
                )
            )
    elif strategy is NegativeStrategy.RESOLVED:
        if gateway is None:
            raise FlawficError("resolved-negative strategy requires a gateway")
        template = load_template(Stage.RESOLVE_NEGATIVE)
        for c in usable:
            prompt = render(template, story=c.patched_text, explanation=c.explanation)
            response = gateway.complete(ChatRequest.user(resolve_model, prompt))
            resolved = parse_generation(response.completions[0], GenerationKind.RESOLVED)
            negatives.append(
                Example(
                    example_id=f"{c.candidate_id}-res",
                    text=resolved,
                    label=Label.NEGATIVE,
                    negative_strategy=NegativeStrategy.RESOLVED,
                    source_story_id=c.story_id,
                    extra={"validated": False},
                )
            )
    else:
        raise FlawficError(f"unsupported negative strategy {strategy}")

    examples = positives + negatives
    random.Random(seed).shuffle(examples)
    return DatasetManifest(
        name=name,
        examples=tuple(examples),
        negative_strategy=strategy,
        provenance={
            "seed": seed,
            "negative_strategy": strategy.value,
            "positives": len(positives),
            "negatives": len(negatives),
            "template_digests": template_digests(),
            "resolve_model": resolve_model if strategy is NegativeStrategy.RESOLVED else None,
        },
    )


# ---------------------------------------------------------------------------
# JSONL I/O


def _meta_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def export_jsonl(manifest: DatasetManifest, path: str | Path, created_at: Optional[str] = "") -> None:
    """Write example lines (UTF-8, LF) plus a ``.meta.json`` sidecar.

    created_at: explicit ISO string, or "" to stamp with the wall clock,
    or None to omit the clock for reproducible output.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e in manifest.examples:
            f.write(json.dumps(example_to_dict(e), ensure_ascii=False, sort_keys=True))
            f.write("\n")
    if created_at == "":
        created_at = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    meta = {
        "name": manifest.name,
        "negative_strategy": manifest.negative_strategy.value,
        "provenance": manifest.provenance,
        "created_at": created_at,
        "stats": dataset_stats(manifest),
    }
    with open(_meta_path(path), "w", encoding="utf-8", newline="\n") as f:
        json.dump(meta, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def import_jsonl(path: str | Path) -> DatasetManifest:
    path = Path(path)
    examples: list[Example] = []
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolationError(line_number, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise SchemaViolationError(line_number, "line is not a JSON object")
            examples.append(example_from_dict(obj, line_number))
    name = path.stem
    strategy = NegativeStrategy.NOT_APPLICABLE
    provenance: dict = {}
    meta_file = _meta_path(path)
    if meta_file.exists():
        meta = json.loads(meta_file.read_text(encoding="utf-8"))
        name = meta.get("name", name)
        strategy = NegativeStrategy(meta.get("negative_strategy", strategy.value))
        provenance = meta.get("provenance", {})
    return DatasetManifest(
        name=name,
        examples=tuple(examples),
        negative_strategy=strategy,
        provenance=provenance,
    )


def load_stories(path: str | Path) -> list[Story]:
    """Read a JSONL story file: {id, title, text, source?}."""
    stories: list[Story] = []
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                stories.append(
                    Story(
                        id=obj["id"],
                        title=obj.get("title", obj["id"]),
                        text=obj["text"],
                        source=obj.get("source", "other"),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise SchemaViolationError(line_number, f"bad story record: {exc}") from exc
    return stories


# ---------------------------------------------------------------------------
# annotation tasks and votes


def export_annotation_tasks(
    candidates: Sequence[PatchedCandidate], path: str | Path
) -> list[AnnotationTask]:
    tasks = [
        AnnotationTask(
            task_id=c.candidate_id,
            story_text=c.patched_text,
            error_lines=c.error_lines,
            contradicted_lines=c.contradicted_lines,
            explanation=c.explanation,
        )
        for c in candidates
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for t in tasks:
            f.write(
                json.dumps(
                    {
                        "task_id": t.task_id,
                        "story_text": t.story_text,
                        "error_lines": list(t.error_lines),
                        "contradicted_lines": list(t.contradicted_lines),
                        "explanation": t.explanation,
                        "votes": [],
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )
            f.write("\n")
    return tasks


def import_annotation_tasks(path: str | Path) -> list[AnnotationTask]:
    tasks: list[AnnotationTask] = []
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                tasks.append(
                    AnnotationTask(
                        task_id=obj["task_id"],
                        story_text=obj["story_text"],
                        error_lines=tuple(obj.get("error_lines", ())),
                        contradicted_lines=tuple(obj.get("contradicted_lines", ())),
                        explanation=obj.get("explanation", ""),
                        votes=tuple(
                            Vote(v["annotator_id"], VoteVerdict(v["verdict"]), v.get("timestamp", ""))
                            for v in obj.get("votes", ())
                        ),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise SchemaViolationError(line_number, f"bad task record: {exc}") from exc
    return tasks


def ingest_votes(
    tasks: Sequence[AnnotationTask], votes_path: str | Path
) -> list[AnnotationTask]:
    """Merge a JSONL vote log into tasks, idempotently.

    A vote is identified by (task_id, annotator_id, verdict); replaying
    the same log twice changes nothing. The same annotator voting two
    different verdicts is preserved here and rejected at resolution.
    """
    by_id = {t.task_id: t for t in tasks}
    with open(votes_path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                task_id = obj["task_id"]
                vote = Vote(
                    annotator_id=obj["annotator_id"],
                    verdict=VoteVerdict(obj["verdict"]),
                    timestamp=obj.get("timestamp", ""),
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise SchemaViolationError(line_number, f"bad vote record: {exc}") from exc
            if task_id not in by_id:
                raise UnknownTaskIdError(f"vote for unknown task {task_id!r}")
            task = by_id[task_id]
            if any(
                v.annotator_id == vote.annotator_id and v.verdict == vote.verdict
                for v in task.votes
            ):
                continue
            by_id[task_id] = task.with_vote(vote)
    return [by_id[t.task_id] for t in tasks]


def apply_resolutions(
    candidates: Sequence[PatchedCandidate], tasks: Sequence[AnnotationTask]
) -> list[PatchedCandidate]:
    """Move pending candidates to accepted / rejected_by_annotators per
    their task's resolution; unreferenced candidates pass through."""
    resolution_by_id = {t.task_id: resolve_annotations(t) for t in tasks}
    out: list[PatchedCandidate] = []
    for c in candidates:
        res = resolution_by_id.get(c.candidate_id)
        if res is None or c.status is not CandidateStatus.PENDING_ANNOTATION:
            out.append(c)
        elif res is Resolution.ACCEPTED:
            out.append(replace(c, status=CandidateStatus.ACCEPTED))
        elif res is Resolution.REJECTED:
            out.append(replace(c, status=CandidateStatus.REJECTED_BY_ANNOTATORS))
        else:
            out.append(c)
    return out
