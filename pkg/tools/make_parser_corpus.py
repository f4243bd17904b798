#!/usr/bin/env python3
"""Author the committed parser fixture corpus.

Writes one JSON case file per response under tests/data/corpus/<family>/.
Each case carries the raw response text, any side inputs the parser
needs, and the expected outcome. Expected values are assembled while
the case is being constructed — never by running the parser — so the
corpus stays an independent oracle. After writing, the script parses
every case once and exits nonzero on any mismatch, which catches
authoring slips without weakening the oracle.

Regenerate with:  python3 tools/make_parser_corpus.py
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "tests" / "data" / "corpus"

# ---------------------------------------------------------------------------
# shared narrative material (all invented here)

STORIES = {
    "mill": (
        [
            "Agnes ground rye at the river mill her father left her.",
            "The wheel's oak teeth were carved in one hard winter.",
            "She oiled the axle every Friday before dusk.",
        ],
        [
            "A flood in May jammed the sluice with willow branches.",
            "Agnes waded in with a boat hook and cleared them one by one.",
            "The wheel turned again before the grain could sour.",
        ],
        [
            "By harvest the millpond ran clear and the queue of carts returned.",
            "Agnes carved a new tooth for the wheel from the willow that had jammed it.",
            "She oiled the axle that Friday as always.",
        ],
    ),
    "beacon": (
        [
            "Old Tomas tended the cliff beacon with his granddaughter Lea.",
            "The lamp burned fish oil from the autumn catch.",
            "Lea could trim the wick blindfolded by her tenth year.",
        ],
        [
            "A winter gale cracked the lantern glass at midnight.",
            "Tomas held canvas against the wind while Lea fitted the spare pane.",
            "No ship struck the rocks that night.",
        ],
        [
            "The harbor board sent a brass plaque in spring.",
            "Tomas hung it in the oil room where nobody would see it.",
            "Lea trimmed the wick and laughed at him kindly.",
        ],
    ),
    "orchard": (
        [
            "Brother Anselm kept the abbey orchard of forty apple trees.",
            "He grafted each new scion on Saint Crispin's day.",
            "The oldest tree bore fruit too bitter for anything but cider.",
        ],
        [
            "One August a blight spotted the leaves of the western rows.",
            "Anselm burned the fallen leaves and washed the trunks with lime.",
            "He slept in the orchard under a tarred sail until frost.",
        ],
        [
            "Next spring the western rows blossomed latest but fullest.",
            "The abbot praised the cider made from the bitter tree.",
            "Anselm grafted two scions that autumn in thanks.",
        ],
    ),
    "ledger": (
        [
            "Mireille balanced the shipping ledgers for the quay office.",
            "Her ink was always violet, mixed by the chemist on Rue Basse.",
            "Captains trusted her sums over their own mates' tallies.",
        ],
        [
            "An audit in October found a gap of ninety francs.",
            "Mireille traced it to a smudged seven in a rival clerk's hand.",
            "She proved the correction with the chemist's violet ink.",
        ],
        [
            "The office posted her correction beside the door for a month.",
            "The rival clerk took to checking his sevens twice.",
            "Mireille bought a second bottle of violet ink to celebrate.",
        ],
    ),
    "kiln": (
        [
            "Petra fired her pots in a kiln of river clay behind the forge.",
            "Her glaze recipe used ash from the blacksmith's chestnut coals.",
            "The kiln had never once cracked in twenty winters.",
        ],
        [
            "A careless apprentice stacked green pots too close one night.",
            "The firing warped a whole shelf into slumped grey shells.",
            "Petra raked out the wreck and said nothing until morning.",
        ],
        [
            "She set the apprentice to wedging clay for a month.",
            "The next firing came out ringing like bells.",
            "The blacksmith got the warped shells to hold his nails.",
        ],
    ),
}


def acts_text(key: str) -> tuple[str, str, str]:
    a1, a2, a3 = STORIES[key]
    return " ".join(a1), " ".join(a2), " ".join(a3)


CASES: dict[str, list[dict]] = {}


def add(family: str, name: str, case: dict) -> None:
    case["family"] = family
    case["name"] = name
    CASES.setdefault(family, []).append(case)


# ---------------------------------------------------------------------------
# family: three_act


def three_act_cases() -> None:
    def story(key: str, sep: str = "\n\n") -> tuple[str, str, str, str]:
        a1, a2, a3 = acts_text(key)
        return a1 + sep + a2 + sep + a3, a1, a2, a3

    def expected(a1: str, a2: str, sep_len: int = 2) -> dict:
        o2 = len(a1) + sep_len
        o3 = o2 + len(a2) + sep_len
        return {"o2": o2, "o3": o3}

    def first(act: str) -> str:
        return act.split(". ")[0] + "."

    formats = {
        "plain": lambda l1, l2, l3: (
            f"## Act 1\nFirst Line: {l1}\n\n## Act 2\nFirst Line: {l2}\n\n"
            f"## Act 3\nFirst Line: {l3}\n"
        ),
        "preamble": lambda l1, l2, l3: (
            "The narrative breaks at the setback and at the recovery.\n\n"
            f"## Act 1\nFirst Line: {l1}\n\n## Act 2\nFirst Line: {l2}\n\n"
            f"## Act 3\nFirst Line: {l3}\n"
        ),
        "bold": lambda l1, l2, l3: (
            f"## Act 1\n**First Line:** {l1}\n\n## Act 2\n**First Line:** {l2}\n\n"
            f"## Act 3\n**First Line:** {l3}\n"
        ),
        "nocolon": lambda l1, l2, l3: (
            f"## Act 1 — Setup\nFirst Line {l1}\n\n## Act 2 — Confrontation\n"
            f"First Line {l2}\n\n## Act 3 — Resolution\nFirst Line {l3}\n"
        ),
        "trailing_ws": lambda l1, l2, l3: (
            f"## Act 1\nFirst Line: {l1}   \n\n## Act 2\nFirst Line: {l2}\t\n\n"
            f"## Act 3\nFirst Line: {l3}  \n"
        ),
    }
    for key in STORIES:
        text, a1, a2, a3 = story(key)
        for fmt_name, fmt in formats.items():
            if (key, fmt_name) in {
                ("mill", "trailing_ws"),
                ("beacon", "nocolon"),
                ("orchard", "bold"),
                ("ledger", "preamble"),
                ("kiln", "plain"),
            }:
                continue  # keep exactly 20 valid cases
            add(
                "three_act",
                f"{key}_{fmt_name}",
                {
                    "input": {
                        "response": fmt(first(a1), first(a2), first(a3)),
                        "story_id": key,
                        "story_text": text,
                    },
                    "expected": expected(a1, a2),
                },
            )

    # malformed ------------------------------------------------------
    text, a1, a2, a3 = story("mill")
    two_only = f"## Act 1\nFirst Line: {first(a1)}\n\n## Act 2\nFirst Line: {first(a2)}\n"
    add(
        "three_act",
        "malformed_two_declarations",
        {
            "input": {"response": two_only, "story_id": "mill", "story_text": text},
            "expected": {"error": "MissingSectionError"},
        },
    )
    ghost = formats["plain"](
        first(a1), "A sentence that appears nowhere in the story.", first(a3)
    )
    add(
        "three_act",
        "malformed_line_not_in_story",
        {
            "input": {"response": ghost, "story_id": "mill", "story_text": text},
            "expected": {"error": "LineNotFoundError"},
        },
    )
    not_at_start = formats["plain"](first(a2), first(a1), first(a3))
    add(
        "three_act",
        "malformed_act1_not_at_start",
        {
            "input": {"response": not_at_start, "story_id": "mill", "story_text": text},
            "expected": {"error": "OrderViolationError"},
        },
    )
    swapped = formats["plain"](first(a1), first(a3), first(a2))
    add(
        "three_act",
        "malformed_act3_before_act2",
        {
            "input": {"response": swapped, "story_id": "mill", "story_text": text},
            "expected": {"error": "OrderViolationError"},
        },
    )


# ---------------------------------------------------------------------------
# family: propositions


def propositions_cases() -> None:
    P = [
        ("Agnes inherited the river mill from her father.", "Agnes bought the mill at auction from a stranger."),
        ("The mill wheel's teeth were oak.", "The mill wheel's teeth were cast iron."),
        ("Agnes oiled the axle every Friday.", "Agnes never maintained the axle herself."),
        ("The beacon burned fish oil.", "The beacon burned imported kerosene."),
        ("Lea could trim the wick blindfolded.", "Lea was never allowed near the lamp."),
        ("The orchard held forty apple trees.", "The orchard held a dozen pear trees."),
        ("The oldest tree bore bitter fruit.", "The oldest tree bore the sweetest apples."),
        ("Mireille's ink was always violet.", "Mireille wrote only in common black ink."),
        ("Captains trusted Mireille's sums.", "Captains double-checked every sum she made."),
        ("The kiln had never cracked in twenty winters.", "The kiln cracked nearly every firing."),
    ]

    def bullet(style: str, fact: str, cf: str) -> str:
        if style == "dash":
            return f"- Fact: {fact}; Counterfactual: {cf}"
        if style == "star":
            return f"* Fact: {fact}; Counterfactual: {cf}"
        if style == "dot":
            return f"• Fact: {fact}; Counterfactual: {cf}"
        if style == "bold":
            return f"- **Fact**: {fact}; **Counterfactual**: {cf}"
        if style == "lower":
            return f"- fact: {fact}; counterfactual: {cf}"
        raise AssertionError(style)

    def prop(fact_cf, category):
        return {
            "statement": fact_cf[0],
            "counterfactual": fact_cf[1],
            "category": category,
        }

    styles = ["dash", "star", "dot", "bold", "lower"]
    heading_styles = [
        ("## Characters", "## Setting"),
        ("**Characters**", "**Setting**"),
        ("Characters:", "Setting:"),
        ("### Character", "### Settings"),
    ]
    n = 0
    for chars, settings in [
        (P[0:2], P[5:6]),
        (P[2:4], P[6:8]),
        (P[4:5], P[8:10]),
        (P[1:4], P[9:10]),
        (P[7:9], P[3:5]),
    ]:
        for hc, hs in heading_styles:
            style = styles[n % len(styles)]
            lines = ["Here are the stable facts I can extract.", "", hc]
            lines += [bullet(style, f, c) for f, c in chars]
            lines += ["", hs]
            lines += [bullet(style, f, c) for f, c in settings]
            lines.append("")
            expected = [prop(p, "character") for p in chars] + [
                prop(p, "setting") for p in settings
            ]
            add(
                "propositions",
                f"case_{n:02d}_{style}",
                {
                    "input": {"response": "\n".join(lines)},
                    "expected": {"malformed_count": 0, "propositions": expected},
                },
            )
            n += 1

    # one valid case with a malformed bullet counted but skipped
    lines = [
        "## Characters",
        bullet("dash", *P[0]),
        "- Fact without the second half of the pair",
        "",
        "## Setting",
        bullet("dash", *P[5]),
        "...",
    ]
    add(
        "propositions",
        "case_20_mixed_malformed",
        {
            "input": {"response": "\n".join(lines)},
            "expected": {
                "malformed_count": 1,
                "propositions": [prop(P[0], "character"), prop(P[5], "setting")],
            },
        },
    )

    # malformed ------------------------------------------------------
    add(
        "propositions",
        "malformed_no_sections",
        {
            "input": {"response": "I read the act but found nothing stable to list.\n"},
            "expected": {"error": "NoPropositionsError"},
        },
    )
    add(
        "propositions",
        "malformed_sections_without_bullets",
        {
            "input": {"response": "## Characters\n\n## Setting\n\nNothing concrete.\n"},
            "expected": {"error": "NoPropositionsError"},
        },
    )
    add(
        "propositions",
        "malformed_every_bullet_broken",
        {
            "input": {
                "response": "## Characters\n- Fact: only a fact and no flip\n- Counterfactual only, no fact\n"
            },
            "expected": {"error": "MalformedBulletError"},
        },
    )


# ---------------------------------------------------------------------------
# family: scores


def scores_cases() -> None:
    base_props = [
        {
            "statement": "Agnes inherited the river mill.",
            "counterfactual": "Agnes leased the mill from the town.",
            "category": "character",
        },
        {
            "statement": "The beacon burned fish oil.",
            "counterfactual": "The beacon burned kerosene.",
            "category": "setting",
        },
        {
            "statement": "Mireille's ink was violet.",
            "counterfactual": "Mireille's ink was black.",
            "category": "character",
        },
        {
            "statement": "The kiln had never cracked.",
            "counterfactual": "The kiln cracked every winter.",
            "category": "setting",
        },
    ]
    rationales = [
        "Ownership of the mill motivates every repair she makes.",
        "The fuel source fixes what the keepers must stock and carry.",
        "The ink colour is how her corrections are recognised later.",
        "The kiln's record is why the warped firing lands so hard.",
    ]

    def block(i: int, score: int, rationale: str | None, fmt: str) -> str:
        head = {
            "plain": f"## F{i}",
            "titled": f"## F{i} — weight of the fact",
            "bold": f"## F{i}",
        }[fmt]
        score_line = {
            "plain": f"Importance Score: {score}",
            "titled": f"Importance Score {score}",
            "bold": f"**Importance Score:** {score}",
        }[fmt]
        lines = [head, score_line]
        if rationale is not None:
            lines.append(f"### Reasoning: {rationale}")
        return "\n".join(lines)

    n = 0
    for count in (1, 2, 3, 4):
        for fmt in ("plain", "titled", "bold"):
            for score_base in (1, 2):
                if n >= 20:
                    break
                props = base_props[:count]
                scores = [((score_base + j) % 4) + 1 for j in range(count)]
                rats = [
                    rationales[j] if (n + j) % 3 else None for j in range(count)
                ]
                response = "\n\n".join(
                    block(j + 1, scores[j], rats[j], fmt) for j in range(count)
                ) + "\n"
                add(
                    "scores",
                    f"case_{n:02d}_{count}x_{fmt}",
                    {
                        "input": {"response": response, "props": props},
                        "expected": {
                            "scores": scores,
                            "rationales": [r or "" for r in rats],
                        },
                    },
                )
                n += 1

    props2 = base_props[:2]
    add(
        "scores",
        "malformed_count_mismatch",
        {
            "input": {
                "response": "## F1\nImportance Score: 2\n",
                "props": props2,
            },
            "expected": {"error": "CountMismatchError"},
        },
    )
    add(
        "scores",
        "malformed_missing_score",
        {
            "input": {
                "response": "## F1\nImportance Score: 2\n\n## F2\n### Reasoning: no score given\n",
                "props": props2,
            },
            "expected": {"error": "MissingScoreError"},
        },
    )
    add(
        "scores",
        "malformed_score_zero",
        {
            "input": {
                "response": "## F1\nImportance Score: 0\n\n## F2\nImportance Score: 3\n",
                "props": props2,
            },
            "expected": {"error": "OutOfRangeScoreError"},
        },
    )
    add(
        "scores",
        "malformed_score_five",
        {
            "input": {
                "response": "## F1\nImportance Score: 5\n\n## F2\nImportance Score: 3\n",
                "props": props2,
            },
            "expected": {"error": "OutOfRangeScoreError"},
        },
    )


# ---------------------------------------------------------------------------
# family: counterfactual


def counterfactual_cases() -> None:
    def compose(
        key: str,
        mark2: int | None,
        mark3: int | None,
        brainstorm: str | None,
        divider: bool = False,
        heading_suffix: str = "",
        extra_mark2: int | None = None,
    ) -> dict:
        a1s, a2s, a3s = (list(s) for s in STORIES[key])
        marked = []

        def wrap(sentences: list[str], idx: int | None, act_index: int, extra: int | None = None):
            chosen = [i for i in (idx, extra) if i is not None]
            out = []
            for i, s in enumerate(sentences):
                if i in chosen:
                    flipped = s.replace("never", "often").replace("always", "rarely")
                    if flipped == s:
                        flipped = "Yet " + s[0].lower() + s[1:]
                    out.append(f"<m>{flipped}</m>")
                    marked.append({"act_index": act_index, "text": flipped})
                else:
                    out.append(s)
            return " ".join(out)

        act1 = " ".join(a1s)
        act2_marked = wrap(a2s, mark2, 2, extra_mark2)
        act3_marked = wrap(a3s, mark3, 3)
        parts = []
        if brainstorm is not None:
            parts.append(f"## Brainstorming\n{brainstorm}\n")
        parts.append(f"## Counterfactual Story{heading_suffix}")
        if divider:
            parts.append("---")
        parts.append(f"### Act 1\n{act1}\n")
        parts.append(f"### Act 2\n{act2_marked}\n")
        parts.append(f"### Act 3\n{act3_marked}\n")
        response = "\n".join(parts)
        clean2 = act2_marked.replace("<m>", "").replace("</m>", "")
        clean3 = act3_marked.replace("<m>", "").replace("</m>", "")
        return {
            "input": {"response": response},
            "expected": {
                "act1": act1,
                "act2": clean2,
                "act3": clean3,
                "brainstorm": (brainstorm or "").strip(),
                "marked": marked,
            },
        }

    ideas = [
        "If the fact flips, her later routine has to change with it.",
        "The reversal ripples into every scene that leaned on the original fact.",
        "With the premise negated, the helpers react differently in the middle act.",
        None,
    ]
    n = 0
    for key in STORIES:
        for mark2, mark3 in ((1, 2), (0, None), (None, 1), (2, 0)):
            brainstorm = ideas[n % len(ideas)]
            divider = n % 5 == 0
            suffix = " (full rewrite)" if n % 7 == 0 else ""
            case = compose(key, mark2, mark3, brainstorm, divider, suffix)
            add("counterfactual", f"case_{n:02d}_{key}", case)
            n += 1
            if n >= 20:
                break
        if n >= 20:
            break

    a1, a2, a3 = acts_text("mill")
    add(
        "counterfactual",
        "malformed_no_heading",
        {
            "input": {"response": f"### Act 1\n{a1}\n### Act 2\n{a2}\n### Act 3\n{a3}\n"},
            "expected": {"error": "MissingActError"},
        },
    )
    add(
        "counterfactual",
        "malformed_missing_act3",
        {
            "input": {
                "response": f"## Counterfactual Story\n### Act 1\n{a1}\n### Act 2\n{a2}\n"
            },
            "expected": {"error": "MissingActError"},
        },
    )
    add(
        "counterfactual",
        "malformed_unclosed_tag",
        {
            "input": {
                "response": (
                    f"## Counterfactual Story\n### Act 1\n{a1}\n"
                    f"### Act 2\n<m>{a2}\n### Act 3\n{a3}\n"
                )
            },
            "expected": {"error": "UnbalancedTagError"},
        },
    )
    add(
        "counterfactual",
        "malformed_stray_close",
        {
            "input": {
                "response": (
                    f"## Counterfactual Story\n### Act 1\n{a1}\n"
                    f"### Act 2\n{a2}</m>\n### Act 3\n{a3}\n"
                )
            },
            "expected": {"error": "UnbalancedTagError"},
        },
    )
    add(
        "counterfactual",
        "malformed_empty_act",
        {
            "input": {
                "response": (
                    f"## Counterfactual Story\n### Act 1\n{a1}\n"
                    f"### Act 2\n\n### Act 3\n{a3}\n"
                )
            },
            "expected": {"error": "EmptyActError"},
        },
    )


# ---------------------------------------------------------------------------
# family: filter_judgment


def filter_judgment_cases() -> None:
    pairs = [
        (
            "Agnes skipped the axle for a month and let it squeal.",
            "She oiled the axle every Friday before dusk.",
            "The routine maintenance established early is abandoned without cause.",
        ),
        (
            "Lea fumbled with the wick until Tomas took over.",
            "Lea could trim the wick blindfolded by her tenth year.",
            "Her practiced skill vanishes in the later scene.",
        ),
        (
            "The abbot spat out the cider and ordered the barrel emptied.",
            "The abbot praised the cider made from the bitter tree.",
            "The abbot's judgement of the cider reverses between acts.",
        ),
        (
            "Mireille signed the audit in plain black ink.",
            "Her ink was always violet, mixed by the chemist on Rue Basse.",
            "The signature ink contradicts her established habit.",
        ),
        (
            "The kiln split along an old crack everyone knew.",
            "The kiln had never once cracked in twenty winters.",
            "A known old crack cannot exist in a kiln that never cracked.",
        ),
    ]

    def yes_case(
        err: str,
        contr: str,
        expl: str,
        bullets: str = "-",
        quoted: bool = False,
        spelling: str = "Judgement",
        decision: str = "Continuity error found.",
        preamble: str = "",
    ) -> dict:
        def fmt(line: str) -> str:
            body = f'"{line}"' if quoted else line
            if bullets == "none":
                return body
            if bullets == "num":
                return f"1. {body}"
            return f"{bullets} {body}"

        response = (
            f"{preamble}## Final {spelling}\n"
            f"### Lines that introduce the continuity error\n{fmt(err)}\n"
            f"### Lines earlier in the story contradicted by the continuity error\n{fmt(contr)}\n"
            f"### Explanation\n{expl}\n"
            f"### Decision\n{decision}\n"
        )
        return {
            "input": {"response": response},
            "expected": {
                "verdict": "error_found",
                "error_lines": [err],
                "contradicted_lines": [contr],
                "explanation": expl,
            },
        }

    def no_case(na: str = "NA", spelling: str = "Judgement", decision: str = "No continuity error found.") -> dict:
        response = (
            f"## Final {spelling}\n"
            f"### Lines that introduce the continuity error\n{na}\n"
            f"### Lines earlier in the story contradicted by the continuity error\n{na}\n"
            f"### Explanation\n{na}\n"
            f"### Decision\n{decision}\n"
        )
        return {
            "input": {"response": response},
            "expected": {
                "verdict": "no_error",
                "error_lines": [],
                "contradicted_lines": [],
                "explanation": "",
            },
        }

    n = 0
    variants = [
        dict(),
        dict(bullets="none"),
        dict(bullets="num"),
        dict(quoted=True),
        dict(spelling="Judgment"),
        dict(decision="Continuity error found"),
        dict(preamble="The marked lines cut against the opening act.\n\n"),
        dict(bullets="*", quoted=True),
    ]
    for err, contr, expl in pairs:
        for variant in variants[: 3 if n < 12 else 2]:
            add("filter_judgment", f"case_{n:02d}_yes", yes_case(err, contr, expl, **variant))
            n += 1
            if n >= 14:
                break
        if n >= 14:
            break
    for i, na in enumerate(["NA", "N/A", "none", "None.", "NA", "N/A"]):
        spelling = "Judgment" if i % 2 else "Judgement"
        decision = (
            "No continuity error found."
            if i % 3
            else "I conclude that there is no continuity error found here."
        )
        add("filter_judgment", f"case_{14 + i:02d}_no", no_case(na, spelling, decision))

    add(
        "filter_judgment",
        "malformed_missing_judgement",
        {
            "input": {"response": "The story seems fine to me overall.\n"},
            "expected": {"error": "MissingJudgementError"},
        },
    )
    add(
        "filter_judgment",
        "malformed_missing_decision",
        {
            "input": {
                "response": (
                    "## Final Judgement\n"
                    "### Lines that introduce the continuity error\nNA\n"
                    "### Explanation\nNA\n"
                )
            },
            "expected": {"error": "MissingJudgementError"},
        },
    )
    add(
        "filter_judgment",
        "malformed_yes_with_na_lists",
        {
            "input": {
                "response": (
                    "## Final Judgement\n"
                    "### Lines that introduce the continuity error\nNA\n"
                    "### Lines earlier in the story contradicted by the continuity error\nNA\n"
                    "### Explanation\nSomething feels off but I cannot point at it.\n"
                    "### Decision\nContinuity error found.\n"
                )
            },
            "expected": {"error": "InconsistentNAError"},
        },
    )


# ---------------------------------------------------------------------------
# family: detection


def detection_cases() -> None:
    pairs = [
        (
            "Agnes let the axle squeal for a month.",
            "She oiled the axle every Friday before dusk.",
            "The maintenance habit is dropped with no explanation.",
        ),
        (
            "Tomas lit the beacon with driftwood.",
            "The lamp burned fish oil from the autumn catch.",
            "The stated fuel changes between scenes.",
        ),
        (
            "The orchard counted sixty trees at harvest.",
            "Brother Anselm kept the abbey orchard of forty apple trees.",
            "The tree count grows without planting.",
        ),
        (
            "Mireille's sums were rechecked by every captain.",
            "Captains trusted her sums over their own mates' tallies.",
            "Trust in her arithmetic reverses silently.",
        ),
        (
            "The kiln's famous crack let the heat bleed out.",
            "The kiln had never once cracked in twenty winters.",
            "A famous crack contradicts the unbroken record.",
        ),
    ]

    def yes(err, contr, expl, wrapper=True, scratch=None, bullets=False, unclosed=False):
        def lst(line):
            return f"- {line}" if bullets else line

        inner = (
            f"<explanation>\n{expl}\n</explanation>\n\n"
            f"<error_lines>\n{lst(err)}\n</error_lines>\n\n"
            f"<contradicted_lines>\n{lst(contr)}\n</contradicted_lines>\n\n"
            f"<decision>\nContinuity error found"
        )
        inner += "\n</decision>" if not unclosed else ""
        if scratch:
            inner = f"<scratchpad>\n{scratch}\n</scratchpad>\n\n" + inner
        body = f"<response>\n{inner}\n</response>" if wrapper and not unclosed else inner
        return {
            "input": {"response": body},
            "expected": {
                "verdict": "error_found",
                "error_lines": [err],
                "contradicted_lines": [contr],
                "explanation": expl,
                "scratchpad": scratch,
            },
        }

    def no(wrapper=True, na="NA", decision="No continuity error found", scratch=None):
        inner = (
            f"<explanation>\nEvery later event squares with the opening act.\n</explanation>\n\n"
            f"<error_lines>\n{na}\n</error_lines>\n\n"
            f"<contradicted_lines>\n{na}\n</contradicted_lines>\n\n"
            f"<decision>\n{decision}\n</decision>"
        )
        if scratch:
            inner = f"<scratchpad>\n{scratch}\n</scratchpad>\n\n" + inner
        body = f"<response>\n{inner}\n</response>" if wrapper else inner
        return {
            "input": {"response": body},
            "expected": {
                "verdict": "no_error",
                "error_lines": [],
                "contradicted_lines": [],
                "explanation": "Every later event squares with the opening act.",
                "scratchpad": scratch,
            },
        }

    n = 0
    for err, contr, expl in pairs:
        add("detection", f"case_{n:02d}_yes_plain", yes(err, contr, expl))
        n += 1
        add(
            "detection",
            f"case_{n:02d}_yes_scratch",
            yes(err, contr, expl, scratch="Checking each act against the first."),
        )
        n += 1
        add("detection", f"case_{n:02d}_yes_bullets", yes(err, contr, expl, wrapper=False, bullets=True))
        n += 1
    add("detection", f"case_{n:02d}_yes_unclosed_final", yes(*pairs[0], unclosed=True))
    n += 1
    for i, (na, decision) in enumerate(
        [
            ("NA", "No continuity error found"),
            ("N/A", "No continuity error found."),
            ("none", "NO CONTINUITY ERROR FOUND"),
            ("NA", "After review: no continuity error found in this story."),
        ]
    ):
        add(
            "detection",
            f"case_{n:02d}_no_{i}",
            no(wrapper=bool(i % 2), na=na, decision=decision),
        )
        n += 1
    add(
        "detection",
        f"case_{n:02d}_no_scratch",
        no(scratch="Walked the timeline twice; nothing breaks."),
    )

    add(
        "detection",
        "malformed_missing_decision",
        {
            "input": {
                "response": "<explanation>\nSomething about the kiln.\n</explanation>\n"
            },
            "expected": {"error": "MissingDecisionError"},
        },
    )
    add(
        "detection",
        "malformed_error_without_lines",
        {
            "input": {
                "response": (
                    "<response>\n<explanation>\nIt reads wrong somewhere.\n</explanation>\n\n"
                    "<error_lines>\nNA\n</error_lines>\n\n"
                    "<contradicted_lines>\nNA\n</contradicted_lines>\n\n"
                    "<decision>\nContinuity error found\n</decision>\n</response>"
                )
            },
            "expected": {"error": "InconsistentNAError"},
        },
    )


# ---------------------------------------------------------------------------
# family: verifier


def verifier_cases() -> None:
    def case(answer: str, confidence=None, explanation=None, unclosed=False, pct=False):
        parts = []
        if explanation:
            parts.append(f"<explanation>\n{explanation}\n</explanation>")
        if unclosed:
            parts.append(f"<answer>{answer}")
        else:
            parts.append(f"<answer>{answer}</answer>")
        if confidence is not None:
            rendered = f"{confidence}%" if pct else str(confidence)
            parts.append(f"<confidence>{rendered}</confidence>")
        expected_answer = answer.strip().lower() == "yes"
        return {
            "input": {"response": "\n".join(parts)},
            "expected": {
                "answer": expected_answer,
                "confidence": confidence,
                "explanation": (explanation or "").strip(),
            },
        }

    rows = [
        ("Yes", 90, "The quoted lines genuinely clash."),
        ("No", 75, "The two lines describe different objects."),
        ("yes", None, None),
        ("NO", 5, None),
        ("Yes", 0, "Agreeing only grammatically; the clash is real but trivial."),
        (" Yes ", 100, None),
        ("no", 50, "Could be read either way; leaning no."),
        ("Yes", 66, None),
        ("No", None, "The earlier line is about the spare pane, not the lamp."),
        ("yes", 81, None),
    ]
    for i, (answer, conf, expl) in enumerate(rows):
        add("verifier", f"case_{i:02d}", case(answer, conf, expl))
    for i, (answer, conf) in enumerate(
        [("Yes", 70), ("No", 30), ("Yes", 55), ("no", 45), ("YES", 95)]
    ):
        add("verifier", f"case_{10 + i:02d}_pct", case(answer, conf, None, pct=True))
    add("verifier", "case_15_unclosed", case("Yes", None, None, unclosed=True))
    for i, (answer, conf, expl) in enumerate(
        [
            ("No", 10, "The contradiction dissolves on a second read."),
            ("Yes", 88, "The fact and its negation are both asserted."),
            ("no", None, "Not enough context to call it an error."),
            ("YES", 100, "Plain reversal of an established fact."),
        ]
    ):
        add("verifier", f"case_{16 + i:02d}", case(answer, conf, expl))

    add(
        "verifier",
        "malformed_missing_answer",
        {
            "input": {"response": "<confidence>80</confidence>\n"},
            "expected": {"error": "MissingAnswerError"},
        },
    )
    add(
        "verifier",
        "malformed_maybe",
        {
            "input": {"response": "<answer>Maybe</answer>\n<confidence>40</confidence>"},
            "expected": {"error": "NonYesNoError"},
        },
    )
    add(
        "verifier",
        "malformed_confidence_not_integer",
        {
            "input": {"response": "<answer>Yes</answer>\n<confidence>very high</confidence>"},
            "expected": {"error": "OutOfRangeConfidenceError"},
        },
    )
    add(
        "verifier",
        "malformed_confidence_150",
        {
            "input": {"response": "<answer>Yes</answer>\n<confidence>150</confidence>"},
            "expected": {"error": "OutOfRangeConfidenceError"},
        },
    )


# ---------------------------------------------------------------------------
# family: generation


def generation_cases() -> None:
    bodies = {
        "mill": "Agnes keeps her late father's mill running through flood and doubt, and earns back the village carts.",
        "beacon": "A keeper and his granddaughter hold the cliff light through a glass-cracking gale and shrug off the honors.",
        "orchard": "A patient monk nurses a blighted orchard back until even the bitter tree wins praise.",
        "ledger": "A quay clerk's violet ink proves a ninety-franc correction and teaches a rival care.",
        "kiln": "A potter turns an apprentice's ruinous firing into a lesson, and the next kiln load rings true.",
        "ferry": "A ferryman's tide chart, nearly lost overboard, is rewritten from memory and proves truer than before.",
        "bellfound": "A town recasts its cracked bell from donated spoons, and the new peal carries two valleys further.",
    }
    tags = {"summary": "summary", "retelling": "modern_retelling", "resolved": "resolved_story"}
    n = 0
    for key, body in bodies.items():
        for kind in ("summary", "retelling", "resolved"):
            tag = tags[kind]
            if n % 4 == 0:
                response = f"<{tag}>\n{body}\n</{tag}>"
            elif n % 4 == 1:
                response = f"Here is the requested text.\n\n<{tag}>\n{body}\n</{tag}>\n\nLet me know if it needs trimming."
            elif n % 4 == 2:
                response = f"{body}\n</{tag}>"  # opening tag sat in the prompt
            else:
                response = f"<{tag}>\n{body}"  # model stopped before closing
            add(
                "generation",
                f"case_{n:02d}_{kind}",
                {
                    "input": {"response": response, "kind": kind},
                    "expected": {"text": body},
                },
            )
            n += 1
            if n >= 20:
                break
        if n >= 20:
            break

    add(
        "generation",
        "malformed_missing_block",
        {
            "input": {"response": "I decline to produce the text.", "kind": "summary"},
            "expected": {"error": "MissingBlockError"},
        },
    )
    add(
        "generation",
        "malformed_empty_block",
        {
            "input": {"response": "<summary>\n\n</summary>", "kind": "summary"},
            "expected": {"error": "MissingBlockError"},
        },
    )


# ---------------------------------------------------------------------------
# write + self-check


def write_corpus() -> None:
    three_act_cases()
    propositions_cases()
    scores_cases()
    counterfactual_cases()
    filter_judgment_cases()
    detection_cases()
    verifier_cases()
    generation_cases()

    if CORPUS.exists():
        shutil.rmtree(CORPUS)
    for family, cases in CASES.items():
        directory = CORPUS / family
        directory.mkdir(parents=True, exist_ok=True)
        names = set()
        for case in cases:
            name = case["name"]
            assert name not in names, f"duplicate case name {family}/{name}"
            names.add(name)
            path = directory / f"{name}.json"
            path.write_text(
                json.dumps(case, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
        valid = sum(1 for c in cases if "error" not in c["expected"])
        malformed = len(cases) - valid
        print(f"{family}: {valid} valid, {malformed} malformed")


if __name__ == "__main__":
    write_corpus()
    # Self-check: parse every case with the shipped parsers and compare.
    sys.path.insert(0, str(ROOT / "tests"))
    from corpus_runner import check_corpus

    failures = check_corpus(CORPUS)
    if failures:
        for f in failures:
            print(f"MISMATCH: {f}", file=sys.stderr)
        sys.exit(1)
    print("self-check: all cases parse to their expected values")
