"""Story-editing pipeline: split, extract, score, counterfact, patch,
prefilter, and self-consistency filter, per story.

One candidate is produced for every retained proposition; its status
records where it stopped (prefiltered_out, filter_rejected) or that it
awaits human review (pending_annotation). Candidate ids are
``{story_id}-p{k}`` with k the 1-based retained-proposition index, so
replayed runs name candidates identically.

Stages within a story are strictly sequential; a batch run isolates
per-story failures and never aborts the whole batch.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from flawfic.core import (
    ActSplit,
    CandidateStatus,
    CounterfactualStory,
    FlawficError,
    PatchedCandidate,
    Proposition,
    Story,
    match_sentence,
)
from flawfic.gateway import ChatRequest, Gateway
from flawfic.parsing import (
    FilterJudgment,
    LineNotFoundError,
    NoPropositionsError,
    ParseError,
    Verdict,
    parse_counterfactual,
    parse_filter_judgment,
    parse_propositions,
    parse_scores,
    parse_three_act,
)
from flawfic.prompts import Stage, load_template, render, template_digests

__all__ = [
    "MIN_STORY_WORDS",
    "StoryTooShortError",
    "PipelineConfig",
    "PrefilterResult",
    "FilterOutcome",
    "StoryOutcome",
    "BatchReport",
    "extract_acts",
    "select_propositions",
    "generate_counterfactual",
    "patch",
    "prefilter",
    "mark_patched_text",
    "consistency_filter",
    "run_pipeline",
    "run_batch",
]

MIN_STORY_WORDS = 100


class StoryTooShortError(FlawficError):
    pass


_DEFAULT_MODEL = "gpt-4o"
_DEFAULT_COUNTERFACT_MODEL = "gpt-4-turbo"


@dataclass(frozen=True)
class PipelineConfig:
    retain_scores: frozenset[int] = frozenset({2, 3})
    max_changes: int = 5
    filter_samples: int = 5
    filter_threshold: int = 4
    max_propositions_per_story: int = 3
    stage_models: dict = field(default_factory=dict)  # stage value -> model name
    lenient_parse: bool = False  # filter samples that fail to parse count as no-votes

    def __post_init__(self) -> None:
        if not set(self.retain_scores) <= {1, 2, 3, 4}:
            raise FlawficError(f"retain_scores {set(self.retain_scores)} outside 1..4")
        if self.filter_threshold > self.filter_samples:
            raise FlawficError("filter_threshold must be <= filter_samples")
        if self.filter_threshold < 1 or self.filter_samples < 1:
            raise FlawficError("filter sampling parameters must be positive")
        if self.max_propositions_per_story < 0 or self.max_changes < 0:
            raise FlawficError("caps must be non-negative")
        object.__setattr__(self, "retain_scores", frozenset(self.retain_scores))

    def model_for(self, stage: Stage) -> str:
        if stage.value in self.stage_models:
            return self.stage_models[stage.value]
        if stage is Stage.COUNTERFACT:
            return _DEFAULT_COUNTERFACT_MODEL
        return _DEFAULT_MODEL


def _stage_request(
    config: PipelineConfig, stage: Stage, prompt: str, n_samples: int = 1
) -> ChatRequest:
    return ChatRequest.user(config.model_for(stage), prompt, n_samples=n_samples)


def extract_acts(
    story: Story,
    gateway: Gateway,
    config: PipelineConfig,
    stats: Optional[dict] = None,
) -> ActSplit:
    """Split the story via the three-act prompt.

    A line-not-found parse failure earns exactly one retry with a fresh
    sample before the story fails.
    """
    if story.word_count < MIN_STORY_WORDS:
        raise StoryTooShortError(
            f"story {story.id!r} has {story.word_count} words, "
            f"minimum is {MIN_STORY_WORDS}"
        )
    prompt = render(load_template(Stage.THREE_ACT), story_text=story.text)
    request = _stage_request(config, Stage.THREE_ACT, prompt)
    response = gateway.complete(request)
    try:
        return parse_three_act(response.completions[0], story)
    except LineNotFoundError:
        if stats is not None:
            stats["retries"] = stats.get("retries", 0) + 1
        response = gateway.complete(request)
        return parse_three_act(response.completions[0], story)


def _format_pairs(props: list[Proposition] | tuple[Proposition, ...]) -> str:
    return "\n".join(
        f"F{i}. Fact: {p.statement}; Counterfactual: {p.counterfactual}"
        for i, p in enumerate(props, start=1)
    )


def select_propositions(
    act_split: ActSplit, gateway: Gateway, config: PipelineConfig
) -> list[Proposition]:
    """Extract Act-1 propositions, score them, and keep the retained band.

    Returns at most max_propositions_per_story propositions in document
    order; zero retained is a normal empty result.
    """
    prompt = render(load_template(Stage.PROP_EXTRACT), act1=act_split.act1.text)
    response = gateway.complete(_stage_request(config, Stage.PROP_EXTRACT, prompt))
    try:
        extracted = parse_propositions(response.completions[0]).propositions
    except NoPropositionsError:
        return []

    prompt = render(
        load_template(Stage.PROP_SCORE),
        act1=act_split.act1.text,
        act2=act_split.act2.text,
        act3=act_split.act3.text,
        list_of_fact_counterfactual_pairs=_format_pairs(extracted),
    )
    response = gateway.complete(_stage_request(config, Stage.PROP_SCORE, prompt))
    scored = parse_scores(response.completions[0], extracted)
    retained = [p for p in scored if p.score in config.retain_scores]
    return retained[: config.max_propositions_per_story]


def generate_counterfactual(
    act_split: ActSplit,
    proposition: Proposition,
    gateway: Gateway,
    config: PipelineConfig,
) -> CounterfactualStory:
    prompt = render(
        load_template(Stage.COUNTERFACT),
        act1=act_split.act1.text,
        act2=act_split.act2.text,
        act3=act_split.act3.text,
        fact=proposition.statement,
        counterfactual=proposition.counterfactual,
    )
    response = gateway.complete(_stage_request(config, Stage.COUNTERFACT, prompt))
    return parse_counterfactual(response.completions[0])


def _join_with_boundary(a: str, b: str) -> str:
    if not a:
        return b
    if not b:
        return a
    if a[-1].isspace() or b[0].isspace():
        return a + b
    return a + "\n" + b


def patch(original: ActSplit, cf: CounterfactualStory) -> str:
    """Original act 1 followed by counterfactual acts 2 and 3.

    A single newline joins segments only when neither side already
    supplies boundary whitespace, so an identity counterfactual patches
    back to the original text byte for byte.
    """
    out = _join_with_boundary(original.act1.text, cf.act2)
    return _join_with_boundary(out, cf.act3)


@dataclass(frozen=True)
class PrefilterResult:
    passed: bool
    reason: Optional[str] = None  # act2_unchanged | act3_unchanged | too_many_changes


def _ws_normalized(text: str) -> str:
    return " ".join(text.split())


def prefilter(
    original: ActSplit, cf: CounterfactualStory, config: PipelineConfig
) -> PrefilterResult:
    """Reject rewrites that changed nothing or changed too much."""
    if _ws_normalized(cf.act2) == _ws_normalized(original.act2.text):
        return PrefilterResult(False, "act2_unchanged")
    if _ws_normalized(cf.act3) == _ws_normalized(original.act3.text):
        return PrefilterResult(False, "act3_unchanged")
    changes = sum(1 for m in cf.marked_lines if m.act_index in (2, 3))
    if changes > config.max_changes:
        return PrefilterResult(False, "too_many_changes")
    return PrefilterResult(True)


def mark_patched_text(patched_text: str, marked_texts: list[str] | tuple[str, ...]) -> str:
    """Re-wrap each marked line in <m></m> at its first occurrence,
    scanning forward so repeated lines wrap in order."""
    out = patched_text
    cursor = 0
    for text in marked_texts:
        idx = out.find(text, cursor)
        if idx == -1:
            idx = out.find(text)
            if idx == -1:
                continue
        out = out[:idx] + "<m>" + text + "</m>" + out[idx + len(text) :]
        cursor = idx + len(text) + len("<m></m>")
    return out


@dataclass(frozen=True)
class FilterOutcome:
    accepted: bool
    yes_votes: int
    total: int
    explanation: str = ""
    error_lines: tuple[str, ...] = ()
    contradicted_lines: tuple[str, ...] = ()


def consistency_filter(
    patched_text: str,
    marked_lines: list[str] | tuple[str, ...],
    gateway: Gateway,
    config: PipelineConfig,
) -> FilterOutcome:
    """Draw k filter samples over the marked patched text; accept on
    yes-votes >= threshold. Explanation and line sets come from the
    first yes-voting sample (preferring one that filled both lists)."""
    if not marked_lines:
        raise FlawficError("consistency filter needs at least one marked line")
    prompt = render(
        load_template(Stage.FILTER),
        patched_story=mark_patched_text(patched_text, marked_lines),
    )
    request = _stage_request(
        config, Stage.FILTER, prompt, n_samples=config.filter_samples
    )
    response = gateway.complete(request)

    judgments: list[Optional[FilterJudgment]] = []
    for completion in response.completions:
        try:
            judgments.append(parse_filter_judgment(completion))
        except ParseError:
            if not config.lenient_parse:
                raise
            judgments.append(None)  # lenient: unparseable sample is a no-vote

    yes = [j for j in judgments if j is not None and j.verdict is Verdict.ERROR_FOUND]
    yes_votes = len(yes)
    first_yes = next(
        (j for j in yes if j.error_lines and j.contradicted_lines),
        yes[0] if yes else None,
    )
    return FilterOutcome(
        accepted=yes_votes >= config.filter_threshold,
        yes_votes=yes_votes,
        total=len(judgments),
        explanation=first_yes.explanation if first_yes else "",
        error_lines=first_yes.error_lines if first_yes else (),
        contradicted_lines=first_yes.contradicted_lines if first_yes else (),
    )


def _gold_error_lines(
    judgment_lines: tuple[str, ...], marked_texts: list[str]
) -> tuple[str, ...]:
    # the filter's reported error lines, kept only where they land on a
    # marked line; the marked lines themselves are the fallback locus
    hits = tuple(l for l in judgment_lines if match_sentence(l, marked_texts))
    return hits if hits else tuple(marked_texts)


def run_pipeline(
    story: Story, gateway: Gateway, config: PipelineConfig
) -> list[PatchedCandidate]:
    """All stages for one story; one candidate per retained proposition."""
    split = extract_acts(story, gateway, config)
    retained = select_propositions(split, gateway, config)
    candidates: list[PatchedCandidate] = []
    for k, proposition in enumerate(retained, start=1):
        candidate_id = f"{story.id}-p{k}"
        cf = generate_counterfactual(split, proposition, gateway, config)
        patched = patch(split, cf)
        counterfactual_full = "\n".join((cf.act1, cf.act2, cf.act3))
        pre = prefilter(split, cf, config)
        marked_texts = [m.text for m in cf.marked_lines if m.act_index in (2, 3)]
        if not pre.passed:
            candidates.append(
                PatchedCandidate(
                    candidate_id=candidate_id,
                    story_id=story.id,
                    proposition=proposition,
                    patched_text=patched,
                    error_lines=(),
                    contradicted_lines=(),
                    explanation=pre.reason or "",
                    filter_votes=(0, 0),
                    status=CandidateStatus.PREFILTERED_OUT,
                    counterfactual_text=counterfactual_full,
                )
            )
            continue
        outcome = consistency_filter(patched, marked_texts, gateway, config)
        if outcome.accepted:
            candidates.append(
                PatchedCandidate(
                    candidate_id=candidate_id,
                    story_id=story.id,
                    proposition=proposition,
                    patched_text=patched,
                    error_lines=_gold_error_lines(outcome.error_lines, marked_texts),
                    contradicted_lines=outcome.contradicted_lines,
                    explanation=outcome.explanation,
                    filter_votes=(outcome.yes_votes, outcome.total),
                    status=CandidateStatus.PENDING_ANNOTATION,
                    counterfactual_text=counterfactual_full,
                )
            )
        else:
            candidates.append(
                PatchedCandidate(
                    candidate_id=candidate_id,
                    story_id=story.id,
                    proposition=proposition,
                    patched_text=patched,
                    error_lines=outcome.error_lines,
                    contradicted_lines=outcome.contradicted_lines,
                    explanation=outcome.explanation,
                    filter_votes=(outcome.yes_votes, outcome.total),
                    status=CandidateStatus.FILTER_REJECTED,
                    counterfactual_text=counterfactual_full,
                )
            )
    return candidates


@dataclass(frozen=True)
class StoryOutcome:
    story_id: str
    ok: bool
    candidates: int = 0
    emitted: int = 0  # pending_annotation
    note: str = ""


@dataclass(frozen=True)
class BatchReport:
    outcomes: tuple[StoryOutcome, ...]
    candidates: tuple[PatchedCandidate, ...]

    @property
    def failures(self) -> int:
        return sum(1 for o in self.outcomes if not o.ok)


def _is_emitted(candidate: PatchedCandidate) -> bool:
    return candidate.status in (
        CandidateStatus.PENDING_ANNOTATION,
        CandidateStatus.ACCEPTED,
    )


def run_batch(
    stories: list[Story],
    gateway: Gateway,
    config: PipelineConfig,
    out_dir: str | Path,
    deterministic_provenance: bool = False,
    workers: int = 1,
) -> BatchReport:
    """Run every story, isolating failures, and write the run directory:
    candidates.jsonl (emitted), rejects.jsonl, provenance.json."""
    from flawfic.dataset import candidate_to_dict  # serialization lives there

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def one(story: Story) -> tuple[StoryOutcome, list[PatchedCandidate]]:
        try:
            cands = run_pipeline(story, gateway, config)
        except FlawficError as exc:
            return StoryOutcome(story.id, ok=False, note=str(exc)), []
        note = "no_propositions" if not cands else ""
        emitted = sum(1 for c in cands if _is_emitted(c))
        return (
            StoryOutcome(story.id, ok=True, candidates=len(cands), emitted=emitted, note=note),
            cands,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, stories))
    else:
        results = [one(s) for s in stories]

    outcomes = tuple(r[0] for r in results)
    candidates = tuple(c for r in results for c in r[1])

    with open(out / "candidates.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for c in candidates:
            if _is_emitted(c):
                f.write(json.dumps(candidate_to_dict(c), ensure_ascii=False, sort_keys=True))
                f.write("\n")
    with open(out / "rejects.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for c in candidates:
            if not _is_emitted(c):
                f.write(json.dumps(candidate_to_dict(c), ensure_ascii=False, sort_keys=True))
                f.write("\n")

    digests = sorted(call.digest for call in gateway.calls)
    provenance = {
        "stage_models": {s.value: config.model_for(s) for s in (
            Stage.THREE_ACT, Stage.PROP_EXTRACT, Stage.PROP_SCORE,
            Stage.COUNTERFACT, Stage.FILTER,
        )},
        "template_digests": template_digests(),
        "request_digests": digests,
        "config": {
            "retain_scores": sorted(config.retain_scores),
            "max_changes": config.max_changes,
            "filter_samples": config.filter_samples,
            "filter_threshold": config.filter_threshold,
            "max_propositions_per_story": config.max_propositions_per_story,
        },
        "stories": [o.story_id for o in outcomes],
        "outcomes": [
            {
                "story_id": o.story_id,
                "ok": o.ok,
                "candidates": o.candidates,
                "emitted": o.emitted,
                "note": o.note,
            }
            for o in outcomes
        ],
    }
    if deterministic_provenance:
        # replay runs must be byte-identical, so derive the timestamp
        # field from the call digests instead of the clock
        provenance["created_at"] = None
        provenance["run_digest"] = hashlib.sha256(
            "\n".join(digests).encode("utf-8")
        ).hexdigest()
        provenance["clock"] = "derived"
    else:
        provenance["created_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        provenance["clock"] = "wall"
    with open(out / "provenance.json", "w", encoding="utf-8", newline="\n") as f:
        json.dump(provenance, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    return BatchReport(outcomes=outcomes, candidates=candidates)
