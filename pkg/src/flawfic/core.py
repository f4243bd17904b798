"""Domain types and sentence primitives shared by every other module.

Stories, act splits, propositions, counterfactual rewrites, patched
candidates, and benchmark examples are immutable value objects; the
sentence operations (segmentation, normalization, fuzzy matching) are
pure functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

__all__ = [
    "FlawficError",
    "ValidationError",
    "EmptyTextError",
    "StorySource",
    "Story",
    "Span",
    "ActSplit",
    "PropositionCategory",
    "Proposition",
    "MarkedLine",
    "CounterfactualStory",
    "CandidateStatus",
    "PatchedCandidate",
    "Label",
    "NegativeStrategy",
    "GoldAnnotation",
    "Example",
    "Sentence",
    "segment_sentences",
    "normalize_sentence",
    "match_sentence",
    "token_jaccard",
    "word_count",
]


class FlawficError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(FlawficError):
    """A domain object was constructed with inconsistent fields."""


class EmptyTextError(FlawficError):
    """An operation that needs narrative text received a blank string."""


def word_count(text: str) -> int:
    """Whitespace-token count; the only word counting used anywhere."""
    return len(text.split())


class StorySource(str, Enum):
    GUTENBERG = "gutenberg"
    FAIRYTALE_QA = "fairytale_qa"
    GENERATED = "generated"
    OTHER = "other"


@dataclass(frozen=True)
class Story:
    id: str
    title: str
    text: str
    word_count: int = -1
    source: StorySource = StorySource.OTHER

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError(f"story {self.id!r} has empty text")
        expected = word_count(self.text)
        if self.word_count < 0:
            object.__setattr__(self, "word_count", expected)
        elif self.word_count != expected:
            raise ValidationError(
                f"story {self.id!r}: word_count {self.word_count} != "
                f"whitespace-token count {expected}"
            )


@dataclass(frozen=True)
class Span:
    """A contiguous slice of a story: text == story.text[start:end]."""

    start_offset: int
    end_offset: int
    text: str

    def __post_init__(self) -> None:
        if self.start_offset < 0 or self.end_offset < self.start_offset:
            raise ValidationError("span offsets out of order")
        if len(self.text) != self.end_offset - self.start_offset:
            raise ValidationError("span text length disagrees with offsets")


@dataclass(frozen=True)
class ActSplit:
    story_id: str
    act1: Span
    act2: Span
    act3: Span

    def __post_init__(self) -> None:
        spans = (self.act1, self.act2, self.act3)
        if any(not s.text for s in spans):
            raise ValidationError(f"act split for {self.story_id!r} has an empty act")
        if self.act1.start_offset != 0:
            raise ValidationError("act 1 must start at offset 0")
        for a, b in ((self.act1, self.act2), (self.act2, self.act3)):
            if a.end_offset != b.start_offset:
                raise ValidationError("acts must be contiguous and in order")

    @property
    def text(self) -> str:
        return self.act1.text + self.act2.text + self.act3.text


class PropositionCategory(str, Enum):
    CHARACTER = "character"
    SETTING = "setting"


@dataclass(frozen=True)
class Proposition:
    statement: str
    counterfactual: str
    category: PropositionCategory
    score: Optional[int] = None
    score_rationale: str = ""

    def __post_init__(self) -> None:
        if not self.statement.strip() or not self.counterfactual.strip():
            raise ValidationError("proposition fields must be non-empty")
        if self.statement == self.counterfactual:
            raise ValidationError("statement and counterfactual must be distinct")
        if self.score is not None and not 1 <= self.score <= 4:
            raise ValidationError(f"score {self.score} outside 1..4")

    def with_score(self, score: int, rationale: str) -> "Proposition":
        return replace(self, score=score, score_rationale=rationale)


@dataclass(frozen=True)
class MarkedLine:
    act_index: int  # 1, 2 or 3
    text: str

    def __post_init__(self) -> None:
        if self.act_index not in (1, 2, 3):
            raise ValidationError(f"act_index {self.act_index} outside 1..3")
        if not self.text.strip():
            raise ValidationError("marked line is blank")


@dataclass(frozen=True)
class CounterfactualStory:
    act1: str
    act2: str
    act3: str
    marked_lines: tuple[MarkedLine, ...] = ()
    brainstorm: str = ""

    def __post_init__(self) -> None:
        acts = {1: self.act1, 2: self.act2, 3: self.act3}
        for idx, act in acts.items():
            if "<m>" in act or "</m>" in act:
                raise ValidationError(f"act {idx} still contains markup tags")
        for line in self.marked_lines:
            if line.text not in acts[line.act_index]:
                raise ValidationError(
                    f"marked line not found verbatim in act {line.act_index}: "
                    f"{line.text[:60]!r}"
                )

    @property
    def text(self) -> str:
        return "\n".join((self.act1, self.act2, self.act3))


class CandidateStatus(str, Enum):
    PREFILTERED_OUT = "prefiltered_out"
    FILTER_REJECTED = "filter_rejected"
    PENDING_ANNOTATION = "pending_annotation"
    ACCEPTED = "accepted"
    REJECTED_BY_ANNOTATORS = "rejected_by_annotators"


@dataclass(frozen=True)
class PatchedCandidate:
    candidate_id: str
    story_id: str
    proposition: Proposition
    patched_text: str
    error_lines: tuple[str, ...]
    contradicted_lines: tuple[str, ...]
    explanation: str
    filter_votes: tuple[int, int]  # (yes, total)
    status: CandidateStatus
    counterfactual_text: str = ""

    def __post_init__(self) -> None:
        yes, total = self.filter_votes
        if not 0 <= yes <= total:
            raise ValidationError(f"filter votes {self.filter_votes} inconsistent")
        if self.status is CandidateStatus.ACCEPTED and (
            not self.error_lines or not self.contradicted_lines
        ):
            raise ValidationError("accepted candidate must carry both gold line sets")


class Label(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class NegativeStrategy(str, Enum):
    ORIGINAL = "original"
    COUNTERFACTUAL = "counterfactual"
    RESOLVED = "resolved"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class GoldAnnotation:
    error_lines: tuple[str, ...]
    contradicted_lines: tuple[str, ...]
    explanation: str


@dataclass(frozen=True)
class Example:
    example_id: str
    text: str
    label: Label
    negative_strategy: NegativeStrategy = NegativeStrategy.NOT_APPLICABLE
    gold: Optional[GoldAnnotation] = None
    source_story_id: str = ""
    word_count: int = -1
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError(f"example {self.example_id!r} has empty text")
        if (self.label is Label.POSITIVE) != (self.gold is not None):
            raise ValidationError(
                f"example {self.example_id!r}: gold must be present exactly "
                f"on positive examples"
            )
        if self.word_count < 0:
            object.__setattr__(self, "word_count", word_count(self.text))


@dataclass(frozen=True)
class Sentence:
    text: str
    index: int
    normalized: str = ""

    def __post_init__(self) -> None:
        if not self.normalized:
            object.__setattr__(self, "normalized", normalize_sentence(self.text))


# Unicode folding applied before any comparison: curly quotes and dashes
# to ASCII, ellipsis expanded, non-breaking space to plain space.
_FOLD = str.maketrans(
    {
        "‘": "'",
        "’": "'",
        "‚": "'",
        "“": '"',
        "”": '"',
        "„": '"',
        "–": "-",
        "—": "-",
        "−": "-",
        " ": " ",
    }
)

_QUOTE_CHARS = "\"'"
_TERMINAL_PUNCT = ".!?,;:"
_WS = re.compile(r"\s+")


def normalize_sentence(text: str) -> str:
    """Canonical form used for all sentence comparison.

    Lowercase, whitespace collapsed, curly quotes/dashes folded to ASCII,
    surrounding quotation marks and terminal punctuation stripped. May
    return an empty string for punctuation-only input; callers that need
    non-empty output must check.
    """
    folded = text.translate(_FOLD).replace("…", "...")
    out = _WS.sub(" ", folded).strip().lower()
    while out:
        trimmed = out.strip()
        trimmed = trimmed.strip(_QUOTE_CHARS)
        trimmed = trimmed.rstrip(_TERMINAL_PUNCT)
        if trimmed == out:
            break
        out = trimmed
    return out.strip()


def token_jaccard(a: str, b: str) -> float:
    """Jaccard similarity over whitespace tokens of two normalized strings."""
    ta, tb = set(a.split()), set(b.split())
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)


def match_sentence(predicted: str, gold: list[str] | tuple[str, ...]) -> bool:
    """True when the predicted sentence hits any gold sentence.

    A hit is bidirectional containment of the normalized forms, or token
    Jaccard >= 0.8. Detector models quote lines with minor punctuation
    drift, so exact comparison would under-credit.
    """
    np_ = normalize_sentence(predicted)
    if not np_:
        return False
    for g in gold:
        ng = normalize_sentence(g)
        if not ng:
            continue
        if ng in np_ or np_ in ng:
            return True
        if token_jaccard(np_, ng) >= 0.8:
            return True
    return False


_ABBREVIATIONS = ("Mr.", "Mrs.", "Dr.", "St.", "e.g.", "i.e.", "vs.")
_OPEN_QUOTES = '"“'
_CLOSE_FOR = {'"': '"', "“": "”"}
_MAX_QUOTE_SPAN = 300


def _quoted_intervals(text: str) -> list[tuple[int, int]]:
    """Inclusive [open, close] index pairs of double-quoted spans < 300 chars."""
    intervals: list[tuple[int, int]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _OPEN_QUOTES:
            close = text.find(_CLOSE_FOR[ch], i + 1)
            if close != -1 and close - i < _MAX_QUOTE_SPAN:
                intervals.append((i, close))
                i = close + 1
                continue
        i += 1
    return intervals


def _ends_with_abbreviation(text: str, dot_index: int) -> bool:
    head = text[: dot_index + 1]
    for abbr in _ABBREVIATIONS:
        if head.endswith(abbr):
            before = dot_index - len(abbr)
            if before < 0 or text[before].isspace() or text[before] in "(\"'":
                return True
    return False


def segment_sentences(text: str) -> list[Sentence]:
    """Split narrative text into sentences, in document order.

    Boundary rule: a sentence ends at `.`, `!` or `?` when followed by
    whitespace and then an uppercase letter or an opening quote, except
    after a stop-listed abbreviation and except inside a double-quoted
    span shorter than 300 characters. Deterministic by construction.
    """
    if not text.strip():
        raise EmptyTextError("cannot segment blank text")

    quoted = _quoted_intervals(text)

    def inside_quotes(i: int) -> bool:
        return any(a < i < b for a, b in quoted)

    boundaries: list[int] = []  # index one past the terminal punctuation
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in ".!?":
            continue
        if inside_quotes(i):
            continue
        if ch == "." and _ends_with_abbreviation(text, i):
            continue
        j = i + 1
        if j >= n or not text[j].isspace():
            continue
        while j < n and text[j].isspace():
            j += 1
        if j < n and (text[j].isupper() or text[j] in _OPEN_QUOTES or text[j] == "'"):
            boundaries.append(i + 1)

    pieces: list[str] = []
    start = 0
    for b in boundaries:
        pieces.append(text[start:b])
        start = b
    pieces.append(text[start:])

    sentences: list[Sentence] = []
    carry = ""
    for piece in pieces:
        raw = (carry + piece).strip()
        carry = ""
        if not raw:
            continue
        if not normalize_sentence(raw):
            # punctuation-only fragment: glue onto a neighbour so the
            # join-and-renormalize postcondition still holds
            if sentences:
                prev = sentences.pop()
                sentences.append(
                    Sentence(text=prev.text + " " + raw, index=prev.index)
                )
            else:
                carry = raw + " "
            continue
        sentences.append(Sentence(text=raw, index=len(sentences)))
    if carry.strip():
        if sentences:
            prev = sentences.pop()
            sentences.append(Sentence(text=prev.text + " " + carry.strip(), index=prev.index))
        else:
            raise EmptyTextError("text contains no sentence content")
    if not sentences:
        raise EmptyTextError("text contains no sentence content")
    return sentences
