"""Parsers for every stage's structured model response.

Strict by default: anything that does not satisfy a stage's grammar
raises a typed ParseError subclass. The only sanctioned leniency is
``parse_detection(..., lenient=True)`` and ``parse_verifier(...,
strict=False)``, which map failures to conservative values instead of
raising; callers opt in explicitly.

All parsers are pure functions over the response text (plus the story,
where offsets must be located), so they are trivially thread-safe.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from flawfic.core import (
    ActSplit,
    CounterfactualStory,
    FlawficError,
    MarkedLine,
    Proposition,
    PropositionCategory,
    Span,
    Story,
    ValidationError,
    segment_sentences,
)

__all__ = [
    "ParseError",
    "MissingSectionError",
    "LineNotFoundError",
    "OrderViolationError",
    "NoPropositionsError",
    "MalformedBulletError",
    "CountMismatchError",
    "MissingScoreError",
    "OutOfRangeScoreError",
    "MissingActError",
    "UnbalancedTagError",
    "EmptyActError",
    "MissingJudgementError",
    "InconsistentNAError",
    "MissingDecisionError",
    "MissingAnswerError",
    "NonYesNoError",
    "OutOfRangeConfidenceError",
    "MissingBlockError",
    "Verdict",
    "NO_ERROR_PHRASE",
    "PropositionParse",
    "FilterJudgment",
    "DetectionResponse",
    "VerifierVerdict",
    "GenerationKind",
    "parse_three_act",
    "parse_propositions",
    "parse_scores",
    "parse_counterfactual",
    "parse_filter_judgment",
    "parse_detection",
    "parse_verifier",
    "parse_generation",
]


class ParseError(FlawficError):
    pass


class MissingSectionError(ParseError):
    pass


class LineNotFoundError(ParseError):
    pass


class OrderViolationError(ParseError):
    pass


class NoPropositionsError(ParseError):
    pass


class MalformedBulletError(ParseError):
    pass


class CountMismatchError(ParseError):
    pass


class MissingScoreError(ParseError):
    pass


class OutOfRangeScoreError(ParseError):
    pass


class MissingActError(ParseError):
    pass


class UnbalancedTagError(ParseError):
    pass


class EmptyActError(ParseError):
    pass


class MissingJudgementError(ParseError):
    pass


class InconsistentNAError(ParseError):
    pass


class MissingDecisionError(ParseError):
    pass


class MissingAnswerError(ParseError):
    pass


class NonYesNoError(ParseError):
    pass


class OutOfRangeConfidenceError(ParseError):
    pass


class MissingBlockError(ParseError):
    pass


# The exact decision phrase; comparisons are case-insensitive.
NO_ERROR_PHRASE = "no continuity error found"


class Verdict(str, Enum):
    ERROR_FOUND = "error_found"
    NO_ERROR = "no_error"


# ---------------------------------------------------------------------------
# three-act extraction


_FIRST_LINE = re.compile(
    r"^[ \t]*(?:\*\*)?First Line\s*:?(?:\*\*)?\s*:?[ \t]*(.+?)[ \t]*$",
    re.MULTILINE,
)


def _nearest_sentence(declared: str, story: Story) -> str:
    best, best_ratio = "", -1.0
    for sent in segment_sentences(story.text):
        ratio = difflib.SequenceMatcher(None, declared, sent.text).ratio()
        if ratio > best_ratio:
            best, best_ratio = sent.text, ratio
    return best


def parse_three_act(response: str, story: Story) -> ActSplit:
    """Locate the three declared first lines in the story and split it.

    Declared lines must occur verbatim (after trailing-whitespace trim)
    at strictly increasing offsets, the first at offset 0.
    """
    declared = [m.rstrip() for m in _FIRST_LINE.findall(response)]
    if len(declared) < 3:
        raise MissingSectionError(
            f"found {len(declared)} 'First Line' declarations, need 3"
        )
    declared = declared[:3]
    text = story.text

    idx = text.find(declared[0])
    if idx == -1:
        raise LineNotFoundError(
            f"act 1 first line not found in story {story.id!r}: "
            f"{declared[0]!r}; nearest sentence: {_nearest_sentence(declared[0], story)!r}"
        )
    if idx != 0:
        raise OrderViolationError(
            f"act 1 first line occurs at offset {idx}, must start the story"
        )

    offsets = [0]
    for act_no, decl in ((2, declared[1]), (3, declared[2])):
        pos = text.find(decl, offsets[-1] + 1)
        if pos == -1:
            if text.find(decl) != -1:
                raise OrderViolationError(
                    f"act {act_no} first line occurs before act {act_no - 1}'s: {decl!r}"
                )
            raise LineNotFoundError(
                f"act {act_no} first line not found in story {story.id!r}: {decl!r}; "
                f"nearest sentence: {_nearest_sentence(decl, story)!r}"
            )
        offsets.append(pos)

    o2, o3 = offsets[1], offsets[2]
    return ActSplit(
        story_id=story.id,
        act1=Span(0, o2, text[:o2]),
        act2=Span(o2, o3, text[o2:o3]),
        act3=Span(o3, len(text), text[o3:]),
    )


# ---------------------------------------------------------------------------
# proposition extraction


@dataclass(frozen=True)
class PropositionParse:
    propositions: tuple[Proposition, ...]
    malformed_count: int = 0


_PROP_SECTION = re.compile(
    r"^[ \t]*(?:\*\*|#+[ \t]*)?(Characters?|Settings?)\s*:?(?:\*\*)?[ \t]*$",
    re.IGNORECASE | re.MULTILINE,
)
_BULLET = re.compile(r"^[ \t]*[-*•][ \t]*(.+?)[ \t]*$")
_FACT_CF = re.compile(
    r"(?:\*\*)?Fact(?:\*\*)?\s*:\s*(.+?)\s*;\s*(?:\*\*)?Counterfactual(?:\*\*)?\s*:\s*(.+)",
    re.IGNORECASE,
)


def parse_propositions(response: str) -> PropositionParse:
    """Read "Fact: ...; Counterfactual: ..." bullets under their sections.

    Malformed bullets are skipped and counted; an error is raised only
    when no section exists or every bullet is malformed.
    """
    sections = list(_PROP_SECTION.finditer(response))
    if not sections:
        raise NoPropositionsError("no Characters/Setting section found")

    props: list[Proposition] = []
    malformed = 0
    saw_bullet = False
    for k, sec in enumerate(sections):
        name = sec.group(1).lower()
        category = (
            PropositionCategory.CHARACTER
            if name.startswith("character")
            else PropositionCategory.SETTING
        )
        end = sections[k + 1].start() if k + 1 < len(sections) else len(response)
        for line in response[sec.end() : end].splitlines():
            mb = _BULLET.match(line)
            content = mb.group(1) if mb else line.strip()
            if not content or content in ("...", "…"):
                continue
            if not mb and not _FACT_CF.match(content):
                continue  # prose between sections, not a bullet
            saw_bullet = True
            mf = _FACT_CF.match(content)
            if not mf:
                malformed += 1
                continue
            statement, counterfactual = mf.group(1).strip(), mf.group(2).strip()
            try:
                props.append(
                    Proposition(
                        statement=statement,
                        counterfactual=counterfactual,
                        category=category,
                    )
                )
            except ValidationError:
                malformed += 1
    if not saw_bullet:
        raise NoPropositionsError("sections present but no bullets found")
    if not props:
        raise MalformedBulletError(f"all {malformed} bullets malformed")
    return PropositionParse(propositions=tuple(props), malformed_count=malformed)


# ---------------------------------------------------------------------------
# proposition scoring


_SCORE_BLOCK = re.compile(r"^[ \t]*##[ \t]*F(\d+)\b.*$", re.MULTILINE)
_SCORE_VALUE = re.compile(r"Importance Score(?:\*\*)?\s*:?(?:\*\*)?\s*(\d+)")
_RATIONALE = re.compile(r"###[ \t]*Reasoning\s*:?[ \t]*(.*?)(?=^[ \t]*###|\Z)", re.S | re.M)


def parse_scores(
    response: str, props: list[Proposition] | tuple[Proposition, ...]
) -> list[Proposition]:
    """Assign block i's score and rationale to proposition i (by order)."""
    heads = list(_SCORE_BLOCK.finditer(response))
    if len(heads) != len(props):
        raise CountMismatchError(
            f"{len(heads)} score blocks for {len(props)} propositions"
        )
    scored: list[Proposition] = []
    for i, head in enumerate(heads):
        end = heads[i + 1].start() if i + 1 < len(heads) else len(response)
        block = response[head.start() : end]
        mv = _SCORE_VALUE.search(block)
        if not mv:
            raise MissingScoreError(f"block F{head.group(1)} has no importance score")
        score = int(mv.group(1))
        if not 1 <= score <= 4:
            raise OutOfRangeScoreError(
                f"block F{head.group(1)} score {score} outside 1..4"
            )
        mr = _RATIONALE.search(block)
        rationale = mr.group(1).strip() if mr else ""
        scored.append(props[i].with_score(score, rationale))
    return scored


# ---------------------------------------------------------------------------
# counterfactual story


_CF_HEADING = re.compile(r"^[ \t]*##[ \t]*Counterfactual Story\b.*$", re.MULTILINE)
_BRAINSTORM = re.compile(r"^[ \t]*##[ \t]*Brainstorming\b.*$", re.MULTILINE)
_ACT_HEADING = re.compile(r"^[ \t]*###[ \t]*Act[ \t]*([123])\b[^\n]*$", re.MULTILINE)
_DASH_LINE = re.compile(r"^[ \t]*-{3,}[ \t]*$", re.MULTILINE)


def _strip_dividers(text: str) -> str:
    return _DASH_LINE.sub("", text)


def _extract_marked(act_text: str, act_index: int) -> tuple[str, list[MarkedLine]]:
    parts = re.split(r"(<m>|</m>)", act_text)
    clean: list[str] = []
    marked: list[MarkedLine] = []
    buf: list[str] = []
    open_ = False
    for part in parts:
        if part == "<m>":
            if open_:
                raise UnbalancedTagError(f"nested <m> in act {act_index}")
            open_, buf = True, []
        elif part == "</m>":
            if not open_:
                raise UnbalancedTagError(f"</m> without <m> in act {act_index}")
            open_ = False
            inner = "".join(buf)
            clean.append(inner)
            if inner.strip():
                marked.append(MarkedLine(act_index=act_index, text=inner.strip()))
        else:
            (buf if open_ else clean).append(part)
    if open_:
        raise UnbalancedTagError(f"unclosed <m> in act {act_index}")
    return "".join(clean), marked


def parse_counterfactual(response: str) -> CounterfactualStory:
    mcf = _CF_HEADING.search(response)
    if not mcf:
        raise MissingActError("'## Counterfactual Story' heading not found")

    brainstorm = ""
    mb = _BRAINSTORM.search(response)
    if mb and mb.end() < mcf.start():
        brainstorm = _strip_dividers(response[mb.end() : mcf.start()]).strip()

    section = response[mcf.end() :]
    heads = {}
    positions = list(_ACT_HEADING.finditer(section))
    for i, h in enumerate(positions):
        idx = int(h.group(1))
        if idx not in heads:
            end = positions[i + 1].start() if i + 1 < len(positions) else len(section)
            heads[idx] = section[h.end() : end]
    for k in (1, 2, 3):
        if k not in heads:
            raise MissingActError(f"act {k} heading not found")

    acts: dict[int, str] = {}
    all_marked: list[MarkedLine] = []
    for k in (1, 2, 3):
        clean, marked = _extract_marked(heads[k], k)
        clean = _strip_dividers(clean).strip()
        if not clean:
            raise EmptyActError(f"act {k} is empty")
        acts[k] = clean
        all_marked.extend(marked)

    return CounterfactualStory(
        act1=acts[1],
        act2=acts[2],
        act3=acts[3],
        marked_lines=tuple(all_marked),
        brainstorm=brainstorm,
    )


# ---------------------------------------------------------------------------
# shared line-list cleanup


_NA_MARKER = re.compile(r"(?i)^(?:na|n/a|none)\.?$")
_BULLET_PREFIX = re.compile(r"^[-*•]+[ \t]*|^\d+[.)][ \t]*")


def _clean_list_items(block: str) -> tuple[str, ...]:
    items: list[str] = []
    for raw in block.splitlines():
        s = raw.strip()
        if not s or s in ("...", "…"):
            continue
        s = _BULLET_PREFIX.sub("", s).strip()
        if s.startswith("[") and s.endswith("]"):
            s = s[1:-1].strip()
        if not s or _NA_MARKER.match(s):
            continue
        if "if applicable" in s.lower() and len(s) < 120:
            continue  # unreplaced placeholder instruction
        if s.lower().startswith("or na if"):
            continue  # echoed template scaffolding
        s = s.strip('"').strip("“”").strip()
        s = s.replace("<m>", "").replace("</m>", "").strip()
        if s and not _NA_MARKER.match(s):
            items.append(s)
    return tuple(items)


# ---------------------------------------------------------------------------
# filter judgment


@dataclass(frozen=True)
class FilterJudgment:
    verdict: Verdict
    error_lines: tuple[str, ...]
    contradicted_lines: tuple[str, ...]
    explanation: str
    decision_raw: str = ""


_JUDGEMENT = re.compile(r"^[ \t]*##[ \t]*Final Judge?ment\b.*$", re.MULTILINE)
_SUBSECTION = re.compile(r"^[ \t]*###[ \t]*(.+?)[ \t]*$", re.MULTILINE)


def _split_subsections(section: str) -> dict[str, str]:
    out: dict[str, str] = {}
    heads = list(_SUBSECTION.finditer(section))
    for i, h in enumerate(heads):
        end = heads[i + 1].start() if i + 1 < len(heads) else len(section)
        out[h.group(1).lower()] = section[h.end() : end]
    return out


def parse_filter_judgment(response: str) -> FilterJudgment:
    mj = _JUDGEMENT.search(response)
    if not mj:
        raise MissingJudgementError("'## Final Judgement' section not found")
    subs = _split_subsections(response[mj.end() :])

    def find(prefix: str) -> Optional[str]:
        for title, body in subs.items():
            if title.startswith(prefix):
                return body
        return None

    error_block = find("lines that introduce")
    contr_block = find("lines earlier in the story contradicted")
    explanation_block = find("explanation")
    decision_block = find("decision")
    if decision_block is None:
        raise MissingJudgementError("'### Decision' subsection not found")

    decision_raw = decision_block.strip()
    verdict = (
        Verdict.NO_ERROR
        if NO_ERROR_PHRASE in decision_raw.lower()
        else Verdict.ERROR_FOUND
    )
    error_lines = _clean_list_items(error_block or "")
    contradicted_lines = _clean_list_items(contr_block or "")
    explanation = (explanation_block or "").strip()
    if _NA_MARKER.match(explanation):
        explanation = ""

    if verdict is Verdict.ERROR_FOUND and not error_lines and not contradicted_lines:
        raise InconsistentNAError(
            "decision reports an error but both line lists are NA/empty"
        )
    return FilterJudgment(
        verdict=verdict,
        error_lines=error_lines,
        contradicted_lines=contradicted_lines,
        explanation=explanation,
        decision_raw=decision_raw,
    )


# ---------------------------------------------------------------------------
# detection responses (vanilla / CoT / few-shot share one grammar)


@dataclass(frozen=True)
class DetectionResponse:
    verdict: Verdict
    error_lines: tuple[str, ...] = ()
    contradicted_lines: tuple[str, ...] = ()
    explanation: str = ""
    decision_raw: str = ""
    scratchpad: Optional[str] = None
    parse_failed: bool = False
    verifier_exhausted: bool = False
    generator_calls: int = 1


def _tag_block(text: str, tag: str) -> Optional[str]:
    m = re.search(rf"<{tag}>(.*?)</{tag}>", text, re.S)
    if m:
        return m.group(1)
    m = re.search(rf"<{tag}>(.*)\Z", text, re.S)
    if m:
        return m.group(1)
    return None


def parse_detection(response: str, lenient: bool = False) -> DetectionResponse:
    """Parse the tag-block detector grammar.

    Strict mode raises on a missing decision block and on an error
    verdict whose line lists are both empty; lenient mode returns a
    no-error verdict flagged ``parse_failed`` instead.
    """
    decision_block = _tag_block(response, "decision")
    scratchpad = _tag_block(response, "scratchpad")
    explanation = (_tag_block(response, "explanation") or "").strip()
    error_lines = _clean_list_items(_tag_block(response, "error_lines") or "")
    contradicted_lines = _clean_list_items(_tag_block(response, "contradicted_lines") or "")

    if decision_block is None:
        if lenient:
            return DetectionResponse(
                verdict=Verdict.NO_ERROR,
                explanation=explanation,
                scratchpad=scratchpad.strip() if scratchpad else None,
                parse_failed=True,
            )
        raise MissingDecisionError("<decision> block not found")

    decision_raw = decision_block.strip()
    verdict = (
        Verdict.NO_ERROR
        if NO_ERROR_PHRASE in decision_raw.lower()
        else Verdict.ERROR_FOUND
    )
    if verdict is Verdict.ERROR_FOUND and not error_lines and not contradicted_lines:
        if lenient:
            return DetectionResponse(
                verdict=Verdict.NO_ERROR,
                explanation=explanation,
                decision_raw=decision_raw,
                scratchpad=scratchpad.strip() if scratchpad else None,
                parse_failed=True,
            )
        raise InconsistentNAError(
            "decision reports an error but both line lists are empty"
        )
    return DetectionResponse(
        verdict=verdict,
        error_lines=error_lines,
        contradicted_lines=contradicted_lines,
        explanation=explanation,
        decision_raw=decision_raw,
        scratchpad=scratchpad.strip() if scratchpad else None,
    )


# ---------------------------------------------------------------------------
# verifier


@dataclass(frozen=True)
class VerifierVerdict:
    answer: bool
    confidence: Optional[int] = None
    explanation: str = ""


def parse_verifier(response: str, strict: bool = True) -> VerifierVerdict:
    answer_block = _tag_block(response, "answer")
    if answer_block is None:
        raise MissingAnswerError("<answer> block not found")
    token = answer_block.strip().lower()
    if token == "yes":
        answer = True
    elif token == "no":
        answer = False
    else:
        raise NonYesNoError(f"answer is {answer_block.strip()!r}, not Yes/No")

    confidence: Optional[int] = None
    conf_block = _tag_block(response, "confidence")
    if conf_block is not None and conf_block.strip():
        m = re.fullmatch(r"(\d+)\s*%?", conf_block.strip())
        if not m:
            if strict:
                raise OutOfRangeConfidenceError(
                    f"confidence {conf_block.strip()!r} is not an integer"
                )
        else:
            value = int(m.group(1))
            if 0 <= value <= 100:
                confidence = value
            elif strict:
                raise OutOfRangeConfidenceError(f"confidence {value} outside 0..100")
            else:
                confidence = max(0, min(100, value))

    explanation = (_tag_block(response, "explanation") or "").strip()
    return VerifierVerdict(answer=answer, confidence=confidence, explanation=explanation)


# ---------------------------------------------------------------------------
# free-text generation (summaries, retellings, resolved rewrites)


class GenerationKind(str, Enum):
    SUMMARY = "summary"
    RETELLING = "retelling"
    RESOLVED = "resolved"


_GENERATION_TAG = {
    GenerationKind.SUMMARY: "summary",
    GenerationKind.RETELLING: "modern_retelling",
    GenerationKind.RESOLVED: "resolved_story",
}


def parse_generation(response: str, kind: GenerationKind) -> str:
    """Extract the tagged block for *kind*.

    The retelling prompt ends with an already-open tag, so a response
    may carry only the closing tag (or neither boundary marker when the
    model also omits that); a closing tag alone delimits from the start
    of the response.
    """
    tag = _GENERATION_TAG[GenerationKind(kind)]
    inner = _tag_block(response, tag)
    if inner is None:
        m = re.search(rf"\A(.*?)</{tag}>", response, re.S)
        if m:
            inner = m.group(1)
    if inner is None:
        raise MissingBlockError(f"<{tag}> block not found")
    inner = inner.strip()
    if not inner:
        raise MissingBlockError(f"<{tag}> block is empty")
    return inner
