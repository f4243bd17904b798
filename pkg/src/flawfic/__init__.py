"""flawfic: synthesize, curate, and evaluate continuity errors in short fiction."""

from flawfic.core import (
    ActSplit,
    CandidateStatus,
    CounterfactualStory,
    EmptyTextError,
    Example,
    FlawficError,
    GoldAnnotation,
    Label,
    MarkedLine,
    NegativeStrategy,
    PatchedCandidate,
    Proposition,
    PropositionCategory,
    Sentence,
    Span,
    Story,
    StorySource,
    ValidationError,
    match_sentence,
    normalize_sentence,
    segment_sentences,
    token_jaccard,
    word_count,
)

__version__ = "0.1.0"

__all__ = [
    "ActSplit",
    "CandidateStatus",
    "CounterfactualStory",
    "EmptyTextError",
    "Example",
    "FlawficError",
    "GoldAnnotation",
    "Label",
    "MarkedLine",
    "NegativeStrategy",
    "PatchedCandidate",
    "Proposition",
    "PropositionCategory",
    "Sentence",
    "Span",
    "Story",
    "StorySource",
    "ValidationError",
    "match_sentence",
    "normalize_sentence",
    "segment_sentences",
    "token_jaccard",
    "word_count",
    "__version__",
]
