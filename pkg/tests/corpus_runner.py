"""Shared checker for the committed parser fixture corpus.

Each JSON case under tests/data/corpus/<family>/ carries a raw response,
any side inputs, and either the expected parse (constructed by hand in
the authoring tool, independent of the parsers) or the name of the
typed error the parser must raise. Used by tests and by the authoring
tool's self-check.
"""

from __future__ import annotations

import json
from pathlib import Path

from flawfic import parsing
from flawfic.core import Proposition, PropositionCategory, Story
from flawfic.parsing import (
    GenerationKind,
    parse_counterfactual,
    parse_detection,
    parse_filter_judgment,
    parse_generation,
    parse_propositions,
    parse_scores,
    parse_three_act,
    parse_verifier,
)

FAMILIES = (
    "three_act",
    "propositions",
    "scores",
    "counterfactual",
    "filter_judgment",
    "detection",
    "verifier",
    "generation",
)


def load_cases(corpus_root: Path, family: str) -> list[dict]:
    directory = corpus_root / family
    cases = []
    for path in sorted(directory.glob("*.json")):
        case = json.loads(path.read_text(encoding="utf-8"))
        case["_path"] = str(path)
        cases.append(case)
    return cases


def _props_from(input_block: dict) -> list[Proposition]:
    return [
        Proposition(
            statement=p["statement"],
            counterfactual=p["counterfactual"],
            category=PropositionCategory(p["category"]),
        )
        for p in input_block["props"]
    ]


def _run_three_act(inp: dict):
    story = Story(id=inp["story_id"], title=inp["story_id"], text=inp["story_text"])
    return parse_three_act(inp["response"], story)


def _check_three_act(inp: dict, expected: dict) -> list[str]:
    split = _run_three_act(inp)
    problems = []
    text = inp["story_text"]
    got = {
        "o2": split.act2.start_offset,
        "o3": split.act3.start_offset,
    }
    for key in ("o2", "o3"):
        if got[key] != expected[key]:
            problems.append(f"{key}: got {got[key]}, want {expected[key]}")
    if split.act1.start_offset != 0:
        problems.append("act1 does not start at 0")
    if split.act3.end_offset != len(text):
        problems.append("act3 does not end at len(text)")
    if split.text != text:
        problems.append("concatenated spans do not reproduce the story text")
    return problems


def _check_propositions(inp: dict, expected: dict) -> list[str]:
    parsed = parse_propositions(inp["response"])
    problems = []
    if parsed.malformed_count != expected["malformed_count"]:
        problems.append(
            f"malformed_count: got {parsed.malformed_count}, "
            f"want {expected['malformed_count']}"
        )
    got = [
        {
            "statement": p.statement,
            "counterfactual": p.counterfactual,
            "category": p.category.value,
        }
        for p in parsed.propositions
    ]
    if got != expected["propositions"]:
        problems.append(f"propositions: got {got!r}, want {expected['propositions']!r}")
    return problems


def _check_scores(inp: dict, expected: dict) -> list[str]:
    scored = parse_scores(inp["response"], _props_from(inp))
    problems = []
    got_scores = [p.score for p in scored]
    got_rationales = [p.score_rationale for p in scored]
    if got_scores != expected["scores"]:
        problems.append(f"scores: got {got_scores}, want {expected['scores']}")
    if got_rationales != expected["rationales"]:
        problems.append(
            f"rationales: got {got_rationales!r}, want {expected['rationales']!r}"
        )
    return problems


def _check_counterfactual(inp: dict, expected: dict) -> list[str]:
    cf = parse_counterfactual(inp["response"])
    problems = []
    for key in ("act1", "act2", "act3", "brainstorm"):
        got = getattr(cf, key)
        if got != expected[key]:
            problems.append(f"{key}: got {got!r}, want {expected[key]!r}")
    got_marked = [{"act_index": m.act_index, "text": m.text} for m in cf.marked_lines]
    if got_marked != expected["marked"]:
        problems.append(f"marked: got {got_marked!r}, want {expected['marked']!r}")
    return problems


def _check_filter_judgment(inp: dict, expected: dict) -> list[str]:
    judgment = parse_filter_judgment(inp["response"])
    problems = []
    if judgment.verdict.value != expected["verdict"]:
        problems.append(f"verdict: got {judgment.verdict.value}, want {expected['verdict']}")
    if list(judgment.error_lines) != expected["error_lines"]:
        problems.append(f"error_lines: got {list(judgment.error_lines)!r}")
    if list(judgment.contradicted_lines) != expected["contradicted_lines"]:
        problems.append(f"contradicted_lines: got {list(judgment.contradicted_lines)!r}")
    if judgment.explanation != expected["explanation"]:
        problems.append(f"explanation: got {judgment.explanation!r}")
    return problems


def _check_detection(inp: dict, expected: dict) -> list[str]:
    detection = parse_detection(inp["response"], lenient=False)
    problems = []
    if detection.parse_failed:
        problems.append("parse_failed set on a strict parse")
    if detection.verdict.value != expected["verdict"]:
        problems.append(f"verdict: got {detection.verdict.value}")
    if list(detection.error_lines) != expected["error_lines"]:
        problems.append(f"error_lines: got {list(detection.error_lines)!r}")
    if list(detection.contradicted_lines) != expected["contradicted_lines"]:
        problems.append(f"contradicted_lines: got {list(detection.contradicted_lines)!r}")
    if detection.explanation != expected["explanation"]:
        problems.append(f"explanation: got {detection.explanation!r}")
    if detection.scratchpad != expected["scratchpad"]:
        problems.append(f"scratchpad: got {detection.scratchpad!r}")
    return problems


def _check_verifier(inp: dict, expected: dict) -> list[str]:
    verdict = parse_verifier(inp["response"], strict=True)
    problems = []
    if verdict.answer is not expected["answer"]:
        problems.append(f"answer: got {verdict.answer}")
    if verdict.confidence != expected["confidence"]:
        problems.append(f"confidence: got {verdict.confidence}")
    if verdict.explanation != expected["explanation"]:
        problems.append(f"explanation: got {verdict.explanation!r}")
    return problems


def _check_generation(inp: dict, expected: dict) -> list[str]:
    text = parse_generation(inp["response"], GenerationKind(inp["kind"]))
    if text != expected["text"]:
        return [f"text: got {text!r}, want {expected['text']!r}"]
    return []


_CHECKERS = {
    "three_act": _check_three_act,
    "propositions": _check_propositions,
    "scores": _check_scores,
    "counterfactual": _check_counterfactual,
    "filter_judgment": _check_filter_judgment,
    "detection": _check_detection,
    "verifier": _check_verifier,
    "generation": _check_generation,
}

_RUNNERS = {
    "three_act": _run_three_act,
    "propositions": lambda inp: parse_propositions(inp["response"]),
    "scores": lambda inp: parse_scores(inp["response"], _props_from(inp)),
    "counterfactual": lambda inp: parse_counterfactual(inp["response"]),
    "filter_judgment": lambda inp: parse_filter_judgment(inp["response"]),
    "detection": lambda inp: parse_detection(inp["response"], lenient=False),
    "verifier": lambda inp: parse_verifier(inp["response"], strict=True),
    "generation": lambda inp: parse_generation(
        inp["response"], GenerationKind(inp["kind"])
    ),
}


def check_case(case: dict) -> list[str]:
    """Return a list of problems for one case; empty means it passed."""
    family = case["family"]
    inp = case["input"]
    expected = case["expected"]
    label = f"{family}/{case['name']}"
    if "error" in expected:
        error_cls = getattr(parsing, expected["error"])
        try:
            _RUNNERS[family](inp)
        except error_cls:
            return []
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            return [f"{label}: raised {type(exc).__name__}, want {expected['error']}"]
        return [f"{label}: parsed without error, want {expected['error']}"]
    try:
        problems = _CHECKERS[family](inp, expected)
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        return [f"{label}: raised {type(exc).__name__}: {exc}"]
    return [f"{label}: {p}" for p in problems]


def check_corpus(corpus_root: Path) -> list[str]:
    failures: list[str] = []
    for family in FAMILIES:
        for case in load_cases(corpus_root, family):
            failures.extend(check_case(case))
    return failures
