#!/usr/bin/env python3
"""Author the bundled five-story pipeline replay fixtures.

Writes:
  tests/data/stories/pipeline_stories.jsonl   the five input stories
  tests/data/replay/pipeline/                 one fixture per model call
  tests/data/golden/pipeline/                 byte-exact expected outputs
                                              for make / build-dataset /
                                              eval --baseline no-error

The five stories are designed to exercise every pipeline outcome:

  lanternfish  two retained propositions; the first passes the
               self-consistency filter 4/5, the second fails it 3/5
  saltcellar   one retained proposition whose rewrite leaves act 2
               untouched (prefilter: act2_unchanged)
  weircross    propositions extracted but all scored outside the
               retained band (zero candidates)
  chalkline    one retained proposition accepted unanimously 5/5
  tidebook     one retained proposition whose rewrite marks six spans
               (prefilter: too_many_changes)

Scripted responses are keyed by the exact rendered prompt, so any
drift in templates or stage plumbing fails the recording run loudly.
After recording, the tool replays the full command-line chain and
asserts the designed outcomes before committing goldens.

Regenerate with:  python3 tools/make_pipeline_fixtures.py
"""

from __future__ import annotations

import filecmp
import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from flawfic.cli import main as cli_main  # noqa: E402
from flawfic.core import CandidateStatus, Story  # noqa: E402
from flawfic.gateway import (  # noqa: E402
    FixtureStore,
    Gateway,
    RecordingProvider,
    ScriptedProvider,
)
from flawfic.pipeline import PipelineConfig, run_batch  # noqa: E402
from flawfic.prompts import Stage, load_template, render  # noqa: E402

STORIES_PATH = ROOT / "tests" / "data" / "stories" / "pipeline_stories.jsonl"
REPLAY_DIR = ROOT / "tests" / "data" / "replay" / "pipeline"
GOLDEN_DIR = ROOT / "tests" / "data" / "golden" / "pipeline"

# ---------------------------------------------------------------------------
# story material


def _acts(*paragraphs: list[str]) -> tuple[str, ...]:
    return tuple(" ".join(p) for p in paragraphs)


LANTERNFISH = _acts(
    [
        "Captain Ode fished the night banks with a crew of three.",
        "Her lantern rig used green glass floats from her grandmother's dowry.",
        "The crew never sailed on the first Sunday of the month.",
        "Every float was wrapped in net cord that Ode spliced herself.",
    ],
    [
        "One October the herring shoals moved beyond the usual banks.",
        "Ode followed them past the chart's edge and set the rig in deep water.",
        "The green floats glowed faintly under a thin moon.",
        "Her three crewmen worked the lines in shifts until dawn.",
    ],
    [
        "They came home low in the water with the best catch of the year.",
        "Ode gave each crewman a float to hang in his window.",
        "The village counted the glows that winter like small harbors.",
        "Nobody asked the price of the dowry glass again.",
    ],
)

SALTCELLAR = _acts(
    [
        "Widow Imke ran the salt cellar under the church steps.",
        "She measured every scoop with a worn copper cup.",
        "The cellar key hung from her belt on a braided cord.",
        "Children traded riddles for a pinch of coarse grey salt.",
    ],
    [
        "A wet spring crept into the cellar and caked the lower bins.",
        "Imke hauled the damp salt up to the bell tower to dry.",
        "The sexton grumbled about the crates on his stairs.",
        "She paid him in riddles the children had left her.",
    ],
    [
        "By midsummer the bins were dry and the scoops ran free again.",
        "Imke had the mason cut a drain under the church steps.",
        "The copper cup measured true through the next ten winters.",
        "The braided cord never left her belt.",
    ],
)

WEIRCROSS = _acts(
    [
        "The village of Crossmere kept an eel weir older than its church.",
        "Tollman Berrick logged every basket raised from the weir gate.",
        "His slate hung on an iron hook by the sluice.",
        "The eels ran hardest on the first fog of autumn.",
    ],
    [
        "One autumn the fog came early and the baskets overflowed.",
        "Berrick chalked tallies until his slate ran out of room.",
        "He borrowed the schoolmaster's blackboard to keep the count honest.",
        "Carts queued along the weir road by lantern light.",
    ],
    [
        "The count stood at nine hundred baskets when the run thinned.",
        "Berrick returned the blackboard with a fair copy of the tally.",
        "The schoolmaster framed the copy beside his maps.",
        "Crossmere ate eel pie well into Lent.",
    ],
)

CHALKLINE = _acts(
    [
        "Mason Pell snapped his chalk lines with a blue powder he mixed himself.",
        "His apprentice Rafe carried the line reel on a leather strap.",
        "Pell checked every course of stone twice before mortar.",
        "The guild had never once returned his work for correction.",
    ],
    [
        "The new granary wall ran forty feet along a sloping yard.",
        "Rafe snapped the lines at dawn while Pell set the corner stones.",
        "A cart horse kicked the water trough across the fresh blue marks.",
        "They snapped every line again before the first course went up.",
    ],
    [
        "The granary wall rose straight and took its roof before the rains.",
        "The guild master walked the wall and found nothing to correct.",
        "Pell gave Rafe a reel of his own and a pouch of blue powder.",
        "The cart horse kept its distance from then on.",
    ],
)

TIDEBOOK = _acts(
    [
        "Pilot Nessa kept the harbor tide book in oilcloth wraps.",
        "Her entries ran back eleven years without a missing day.",
        "Skippers paid her in coffee beans and candle stubs.",
        "The book never left the watch hut on the mole.",
    ],
    [
        "A February storm swallowed the mole in spray for three days.",
        "Nessa logged the surges by lamplight between gusts.",
        "A freighter waited out the storm beyond the bar on her word.",
        "Her pencil wore down to a stub she could barely pinch.",
    ],
    [
        "The freighter docked on the first calm tide without a scrape.",
        "Its master sent Nessa a tin of pencils and a pound of coffee.",
        "The tide book gained three pages of storm readings.",
        "The oilcloth wraps went back on before the ink dried.",
    ],
)

STORY_ACTS = {
    "lanternfish": ("The Lanternfish Crew", LANTERNFISH),
    "saltcellar": ("The Salt Cellar", SALTCELLAR),
    "weircross": ("The Weir at Crossmere", WEIRCROSS),
    "chalkline": ("The Chalk Line", CHALKLINE),
    "tidebook": ("The Tide Book", TIDEBOOK),
}


def story_text(acts: tuple[str, ...]) -> str:
    return "\n\n".join(acts)


def first_sentence(act: str) -> str:
    return act.split(". ")[0] + "."


# ---------------------------------------------------------------------------
# scripted responses


def three_act_response(acts: tuple[str, ...]) -> str:
    a1, a2, a3 = (first_sentence(a) for a in acts)
    return (
        f"## Act 1\nFirst Line: {a1}\n\n"
        f"## Act 2\nFirst Line: {a2}\n\n"
        f"## Act 3\nFirst Line: {a3}\n"
    )


def extract_response(characters: list[tuple[str, str]], settings: list[tuple[str, str]]) -> str:
    lines = []
    if characters:
        lines.append("## Characters")
        lines += [f"- Fact: {f}; Counterfactual: {c}" for f, c in characters]
        lines.append("")
    if settings:
        lines.append("## Setting")
        lines += [f"- Fact: {f}; Counterfactual: {c}" for f, c in settings]
        lines.append("")
    return "\n".join(lines)


def scores_response(scores: list[tuple[int, str]]) -> str:
    blocks = [
        f"## F{i}\nImportance Score: {score}\n### Reasoning: {why}"
        for i, (score, why) in enumerate(scores, start=1)
    ]
    return "\n\n".join(blocks) + "\n"


def cf_response(idea: str, act1: str, act2: str, act3: str) -> str:
    return (
        f"## Brainstorming\n{idea}\n\n"
        "## Counterfactual Story\n"
        f"### Act 1\n{act1}\n\n"
        f"### Act 2\n{act2}\n\n"
        f"### Act 3\n{act3}\n"
    )


FILTER_NO = (
    "## Final Judgement\n"
    "### Lines that introduce the continuity error\nNA\n"
    "### Lines earlier in the story contradicted by the continuity error\nNA\n"
    "### Explanation\nNA\n"
    "### Decision\nNo continuity error found.\n"
)


def filter_yes(error_line: str, contradicted_line: str, explanation: str) -> str:
    return (
        "## Final Judgement\n"
        f"### Lines that introduce the continuity error\n- {error_line}\n"
        f"### Lines earlier in the story contradicted by the continuity error\n- {contradicted_line}\n"
        f"### Explanation\n{explanation}\n"
        "### Decision\nContinuity error found.\n"
    )


# ---------------------------------------------------------------------------
# per-story scripts


class Script:
    """Prompt-keyed responses; filter prompts pop one response per sample."""

    def __init__(self) -> None:
        self.single: dict[str, str] = {}
        self.queues: dict[str, list[str]] = {}

    def one(self, prompt: str, response: str) -> None:
        assert prompt not in self.single, "duplicate scripted prompt"
        self.single[prompt] = response

    def many(self, prompt: str, responses: list[str]) -> None:
        assert prompt not in self.queues, "duplicate scripted filter prompt"
        self.queues[prompt] = list(responses)

    def __call__(self, request) -> str:
        prompt = request.messages[-1].content
        if prompt in self.single:
            return self.single[prompt]
        if prompt in self.queues:
            queue = self.queues[prompt]
            assert queue, "filter prompt drawn more often than scripted"
            return queue.pop(0)
        raise AssertionError(f"unscripted prompt:\n{prompt[:400]}")


def spans(acts: tuple[str, ...]) -> tuple[str, str, str]:
    """Act span texts as the three-act split produces them: acts 1 and 2
    carry their trailing blank-line separator."""
    a1, a2, a3 = acts
    return a1 + "\n\n", a2 + "\n\n", a3


def patched(acts: tuple[str, ...], cf_act2: str, cf_act3: str) -> str:
    s1, _, _ = spans(acts)
    return s1 + cf_act2 + "\n" + cf_act3


def marked(patched_text: str, marks: list[str]) -> str:
    out = patched_text
    cursor = 0
    for text in marks:
        idx = out.find(text, cursor)
        assert idx != -1, f"marked line not in patched text: {text!r}"
        out = out[:idx] + "<m>" + text + "</m>" + out[idx + len(text):]
        cursor = idx + len(text) + len("<m></m>")
    return out


def strip_marks(text: str) -> str:
    return text.replace("<m>", "").replace("</m>", "")


def build_script() -> tuple[Script, dict]:
    script = Script()
    expected: dict[str, dict] = {}

    def stage_prompt(stage: Stage, **params) -> str:
        return render(load_template(stage), **params)

    def wire_base(story_id: str, characters, settings, scores) -> None:
        _, acts = STORY_ACTS[story_id]
        s1, s2, s3 = spans(acts)
        script.one(
            stage_prompt(Stage.THREE_ACT, story_text=story_text(acts)),
            three_act_response(acts),
        )
        script.one(
            stage_prompt(Stage.PROP_EXTRACT, act1=s1),
            extract_response(characters, settings),
        )
        props = characters + settings
        pairs = "\n".join(
            f"F{i}. Fact: {f}; Counterfactual: {c}"
            for i, (f, c) in enumerate(props, start=1)
        )
        script.one(
            stage_prompt(
                Stage.PROP_SCORE,
                act1=s1,
                act2=s2,
                act3=s3,
                list_of_fact_counterfactual_pairs=pairs,
            ),
            scores_response(scores),
        )

    def wire_cf(story_id: str, fact: str, counterfactual: str, idea: str,
                cf2_marked: str, cf3_marked: str) -> tuple[str, list[str]]:
        _, acts = STORY_ACTS[story_id]
        s1, s2, s3 = spans(acts)
        script.one(
            stage_prompt(
                Stage.COUNTERFACT,
                act1=s1, act2=s2, act3=s3,
                fact=fact, counterfactual=counterfactual,
            ),
            cf_response(idea, acts[0], cf2_marked, cf3_marked),
        )
        marks = []
        for chunk, _act in ((cf2_marked, 2), (cf3_marked, 3)):
            rest = chunk
            while "<m>" in rest:
                _, _, rest = rest.partition("<m>")
                inner, _, rest = rest.partition("</m>")
                marks.append(inner.strip())
        patched_text = patched(acts, strip_marks(cf2_marked), strip_marks(cf3_marked))
        return patched_text, marks

    def wire_filter(patched_text: str, marks: list[str], votes: list[str]) -> None:
        prompt = stage_prompt(Stage.FILTER, patched_story=marked(patched_text, marks))
        script.many(prompt, votes)

    # --- lanternfish: accept 4/5 then reject 3/5 ----------------------
    lf_chars = [
        (
            "Captain Ode worked the night banks with a crew of three",
            "Captain Ode worked the night banks entirely alone",
        ),
        (
            "The crew never sailed on the first Sunday of the month",
            "The crew sailed every day of the month without fail",
        ),
    ]
    lf_settings = [
        (
            "The lantern rig used green glass floats from a dowry",
            "The lantern rig used tin lamps bought from a chandler",
        ),
    ]
    wire_base(
        "lanternfish",
        lf_chars,
        lf_settings,
        scores=[
            (3, "The crew size drives who hauls the lines in every later scene."),
            (1, "The Sunday custom never surfaces again after the opening."),
            (2, "The glass floats are the visible token the ending hangs on."),
        ],
    )
    lf1_act2 = (
        "One October the herring shoals moved beyond the usual banks. "
        "<m>Ode followed them past the chart's edge alone, with no one to spell her at the tiller.</m> "
        "The green floats glowed faintly under a thin moon. "
        "<m>She worked every line herself until dawn.</m>"
    )
    lf1_act3 = (
        "<m>She came home low in the water with the best catch of the year.</m> "
        "<m>Ode hung every float in her own window.</m> "
        "The village counted the glows that winter like small harbors. "
        "Nobody asked the price of the dowry glass again."
    )
    lf1_patched, lf1_marks = wire_cf(
        "lanternfish", lf_chars[0][0], lf_chars[0][1],
        "Without a crew, the deep-water set and the homecoming both change hands.",
        lf1_act2, lf1_act3,
    )
    lf1_yes = filter_yes(
        "Ode followed them past the chart's edge alone, with no one to spell her at the tiller.",
        "Captain Ode fished the night banks with a crew of three.",
        "The rewrite strands Ode alone at the tiller while the opening act gave her a crew of three.",
    )
    wire_filter(lf1_patched, lf1_marks, [lf1_yes, FILTER_NO, lf1_yes, lf1_yes, lf1_yes])

    lf2_act2 = (
        "One October the herring shoals moved beyond the usual banks. "
        "Ode followed them past the chart's edge and set the rig in deep water. "
        "<m>The tin lamps rattled on their chains and threw a hard yellow light.</m> "
        "Her three crewmen worked the lines in shifts until dawn."
    )
    lf2_act3 = (
        "They came home low in the water with the best catch of the year. "
        "<m>Ode gave each crewman a tin lamp to hang in his window.</m> "
        "The village counted the yellow lights that winter like small harbors. "
        "Nobody asked the price of the chandler's tin again."
    )
    lf2_patched, lf2_marks = wire_cf(
        "lanternfish", lf_settings[0][0], lf_settings[0][1],
        "Swapping the dowry glass for bought tin changes what the village sees in the windows.",
        lf2_act2, lf2_act3,
    )
    lf2_yes = filter_yes(
        "Ode gave each crewman a tin lamp to hang in his window.",
        "Her lantern rig used green glass floats from her grandmother's dowry.",
        "Dowry glass floats become chandler's tin lamps between acts with no purchase in the story.",
    )
    wire_filter(lf2_patched, lf2_marks, [FILTER_NO, lf2_yes, lf2_yes, FILTER_NO, lf2_yes])

    expected["lanternfish-p1"] = {
        "status": CandidateStatus.PENDING_ANNOTATION,
        "votes": (4, 5),
        "error_lines": (
            "Ode followed them past the chart's edge alone, with no one to spell her at the tiller.",
        ),
        "contradicted_lines": (
            "Captain Ode fished the night banks with a crew of three.",
        ),
    }
    expected["lanternfish-p2"] = {
        "status": CandidateStatus.FILTER_REJECTED,
        "votes": (3, 5),
    }

    # --- saltcellar: act 2 untouched -> prefiltered out ----------------
    sc_chars = [
        (
            "Imke measured every scoop with a worn copper cup",
            "Imke measured by bare handfuls and guesswork",
        ),
    ]
    sc_settings = [
        (
            "The salt cellar sat under the church steps",
            "The salt cellar sat behind the harbor master's office",
        ),
    ]
    wire_base(
        "saltcellar",
        sc_chars,
        sc_settings,
        scores=[
            (2, "The copper cup is the measure every later purchase relies on."),
            (4, "Moving the cellar would rewrite nearly every scene outright."),
        ],
    )
    sc_act2 = (
        "A wet spring crept into the cellar and caked the lower bins. "
        "Imke hauled the damp salt up to the bell tower to dry. "
        "The sexton grumbled about the crates on his stairs. "
        "She paid him in riddles the children had left her."
    )
    sc_act3 = (
        "By midsummer the bins were dry and the scoops ran free again. "
        "Imke had the mason cut a drain under the church steps. "
        "<m>She guessed each measure by handful and eye through the next ten winters.</m> "
        "The braided cord never left her belt."
    )
    wire_cf(
        "saltcellar", sc_chars[0][0], sc_chars[0][1],
        "Losing the cup only shows once the salt moves again in the last act.",
        sc_act2, sc_act3,
    )
    expected["saltcellar-p1"] = {
        "status": CandidateStatus.PREFILTERED_OUT,
        "votes": (0, 0),
        "explanation": "act2_unchanged",
    }

    # --- weircross: nothing retained ----------------------------------
    wc_chars = [
        (
            "Berrick logged every basket on a slate by the sluice",
            "Berrick kept no count of the baskets at all",
        ),
    ]
    wc_settings = [
        (
            "The eel weir was older than the church",
            "The eel weir was built within living memory",
        ),
    ]
    wire_base(
        "weircross",
        wc_chars,
        wc_settings,
        scores=[
            (4, "Removing the count removes the entire final act."),
            (1, "The weir's age is scenery; no later line leans on it."),
        ],
    )

    # --- chalkline: unanimous accept -----------------------------------
    ck_chars = [
        (
            "Pell checked every course of stone twice before mortar",
            "Pell trusted his first measurement and never rechecked",
        ),
    ]
    wire_base(
        "chalkline",
        ck_chars,
        [],
        scores=[(3, "The double check is why the guild never returns his work.")],
    )
    ck_act2 = (
        "The new granary wall ran forty feet along a sloping yard. "
        "Rafe snapped the lines at dawn while Pell set the corner stones. "
        "A cart horse kicked the water trough across the fresh blue marks. "
        "<m>Pell shrugged at the smeared marks and laid the first course by eye.</m>"
    )
    ck_act3 = (
        "<m>The granary wall rose with a lean that caught the guild master's plumb line at once.</m> "
        "The guild master walked the wall and found nothing to correct. "
        "Pell gave Rafe a reel of his own and a pouch of blue powder. "
        "The cart horse kept its distance from then on."
    )
    ck_patched, ck_marks = wire_cf(
        "chalkline", ck_chars[0][0], ck_chars[0][1],
        "An unchecked first course turns the straight wall into a leaning one.",
        ck_act2, ck_act3,
    )
    ck_yes = filter_yes(
        "The granary wall rose with a lean that caught the guild master's plumb line at once.",
        "The guild master walked the wall and found nothing to correct.",
        "The wall both leans badly and passes the guild master's inspection in the same act.",
    )
    wire_filter(ck_patched, ck_marks, [ck_yes] * 5)
    expected["chalkline-p1"] = {
        "status": CandidateStatus.PENDING_ANNOTATION,
        "votes": (5, 5),
        "error_lines": (
            "The granary wall rose with a lean that caught the guild master's plumb line at once.",
        ),
        "contradicted_lines": (
            "The guild master walked the wall and found nothing to correct.",
        ),
    }

    # --- tidebook: six marked spans -> prefiltered out ------------------
    tb_settings = [
        (
            "The tide book never left the watch hut on the mole",
            "Nessa carried the tide book home every night",
        ),
    ]
    wire_base(
        "tidebook",
        [],
        tb_settings,
        scores=[(2, "Where the book lives decides who can read it in the storm.")],
    )
    tb_act2 = (
        "<m>A February storm caught Nessa at home with the tide book on her kitchen table.</m> "
        "<m>She logged what surges she could guess from her window.</m> "
        "<m>A freighter waited beyond the bar on a reading she could not check.</m> "
        "Her pencil wore down to a stub she could barely pinch."
    )
    tb_act3 = (
        "<m>The freighter touched the bar on a short tide and lost paint.</m> "
        "<m>Its master sent a curt note asking where the pilot had been.</m> "
        "<m>The tide book gained three pages copied from memory.</m> "
        "The oilcloth wraps went back on before the ink dried."
    )
    wire_cf(
        "tidebook", tb_settings[0][0], tb_settings[0][1],
        "If the book sleeps at home, the storm splits the pilot from her record.",
        tb_act2, tb_act3,
    )
    expected["tidebook-p1"] = {
        "status": CandidateStatus.PREFILTERED_OUT,
        "votes": (0, 0),
        "explanation": "too_many_changes",
    }

    return script, expected


# ---------------------------------------------------------------------------
# record, verify, emit goldens


def write_stories() -> list[Story]:
    STORIES_PATH.parent.mkdir(parents=True, exist_ok=True)
    stories = []
    with open(STORIES_PATH, "w", encoding="utf-8", newline="\n") as f:
        for story_id, (title, acts) in STORY_ACTS.items():
            text = story_text(acts)
            story = Story(id=story_id, title=title, text=text)
            assert story.word_count >= 100, f"{story_id} has {story.word_count} words"
            f.write(json.dumps(
                {"id": story_id, "title": title, "text": text, "source": "generated"},
                ensure_ascii=False, sort_keys=True,
            ))
            f.write("\n")
            stories.append(story)
    return stories


def record(stories: list[Story], script: Script, run_dir: Path) -> None:
    if REPLAY_DIR.exists():
        shutil.rmtree(REPLAY_DIR)
    provider = RecordingProvider(ScriptedProvider(script), FixtureStore(REPLAY_DIR))
    gateway = Gateway(provider)
    report = run_batch(
        stories, gateway, PipelineConfig(), run_dir, deterministic_provenance=True
    )
    assert report.failures == 0, [o for o in report.outcomes if not o.ok]


def verify_candidates(run_dir: Path, expected: dict) -> None:
    rows = {}
    for name in ("candidates.jsonl", "rejects.jsonl"):
        for line in (run_dir / name).read_text(encoding="utf-8").splitlines():
            obj = json.loads(line)
            rows[obj["candidate_id"]] = obj
    assert set(rows) == set(expected), (set(rows), set(expected))
    for cid, want in expected.items():
        got = rows[cid]
        assert got["status"] == want["status"].value, (cid, got["status"])
        yes, total = want["votes"]
        assert got["filter_votes"] == {"yes": yes, "total": total}, (
            cid, got["filter_votes"],
        )
        if "error_lines" in want:
            assert tuple(got["error_lines"]) == want["error_lines"], cid
            assert tuple(got["contradicted_lines"]) == want["contradicted_lines"], cid
        if "explanation" in want:
            assert got["explanation"] == want["explanation"], cid
    fixture_count = len(list(REPLAY_DIR.glob("*.json")))
    assert fixture_count == 23, f"expected 23 fixtures, recorded {fixture_count}"


def run_cli_chain(work: Path) -> dict[str, Path]:
    make_dir = work / "run"
    rc = cli_main([
        "make",
        "--stories", str(STORIES_PATH),
        "--out", str(make_dir),
        "--deterministic",
        "--replay", str(REPLAY_DIR),
    ])
    assert rc == 0, f"make exited {rc}"
    dataset = work / "dataset.jsonl"
    rc = cli_main([
        "build-dataset",
        "--candidates", str(make_dir / "candidates.jsonl"),
        "--stories", str(STORIES_PATH),
        "--strategy", "original",
        "--out", str(dataset),
        "--name", "pipeline-fixture",
        "--deterministic",
    ])
    assert rc == 0, f"build-dataset exited {rc}"
    eval_dir = work / "eval"
    rc = cli_main([
        "eval",
        "--dataset", str(dataset),
        "--out", str(eval_dir),
        "--baseline", "no-error",
    ])
    assert rc == 0, f"eval exited {rc}"
    return {
        "candidates.jsonl": make_dir / "candidates.jsonl",
        "rejects.jsonl": make_dir / "rejects.jsonl",
        "provenance.json": make_dir / "provenance.json",
        "dataset.jsonl": dataset,
        "report.csv": eval_dir / "report.csv",
        "records.jsonl": eval_dir / "records.jsonl",
    }


def main() -> None:
    script, expected = build_script()
    stories = write_stories()
    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)
        record(stories, script, work / "recorded")
        verify_candidates(work / "recorded", expected)

        outputs = run_cli_chain(work / "a")
        verify_candidates(outputs["candidates.jsonl"].parent, expected)
        rerun = run_cli_chain(work / "b")
        for name in outputs:
            assert filecmp.cmp(outputs[name], rerun[name], shallow=False), (
                f"{name} differs between replay runs"
            )
        # the recorded run and the replayed run must write identical bytes
        for name in ("candidates.jsonl", "rejects.jsonl", "provenance.json"):
            assert filecmp.cmp(
                work / "recorded" / name, outputs[name], shallow=False
            ), f"{name} differs between recording and replay"

        report = outputs["report.csv"].read_text(encoding="utf-8")
        assert "0.5" in report, f"balanced no-error run should score 0.5:\n{report}"

        if GOLDEN_DIR.exists():
            shutil.rmtree(GOLDEN_DIR)
        GOLDEN_DIR.mkdir(parents=True)
        for name, path in outputs.items():
            shutil.copyfile(path, GOLDEN_DIR / name)

    dataset_lines = (GOLDEN_DIR / "dataset.jsonl").read_text(encoding="utf-8")
    positives = dataset_lines.count('"positive"')
    negatives = dataset_lines.count('"negative"')
    print(f"stories: {len(stories)}")
    print(f"fixtures: {len(list(REPLAY_DIR.glob('*.json')))}")
    print(f"dataset: {positives} positive, {negatives} negative")
    print(f"goldens: {sorted(p.name for p in GOLDEN_DIR.iterdir())}")


if __name__ == "__main__":
    main()
