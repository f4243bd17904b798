#!/usr/bin/env python3
"""Author the bundled 100-story generation-study replay fixtures.

Writes:
  tests/data/stories/study_stories.jsonl   100 short original stories
  tests/data/replay/study/                 300 fixtures: one summary and
                                           two detection calls per story
  tests/data/golden/study/                 byte-exact pairs.csv and
                                           summary.json

The scripted detector flags the first 31 originals and the first 45
summaries (story file order), so the study reproduces flag rates of
exactly 0.31 on originals and 0.45 on summaries with zero failures.
After recording, the tool replays the command-line run twice and
asserts both the printed rates and the output bytes.

Regenerate with:  python3 tools/make_study_fixtures.py
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
from flawfic.core import Story  # noqa: E402
from flawfic.evaluation import DetectorConfig  # noqa: E402
from flawfic.gateway import (  # noqa: E402
    FixtureStore,
    Gateway,
    RecordingProvider,
    ScriptedProvider,
)
from flawfic.prompts import Stage, load_template, render  # noqa: E402
from flawfic.study import StudyTask, run_study  # noqa: E402

STORIES_PATH = ROOT / "tests" / "data" / "stories" / "study_stories.jsonl"
REPLAY_DIR = ROOT / "tests" / "data" / "replay" / "study"
GOLDEN_DIR = ROOT / "tests" / "data" / "golden" / "study"

N_STORIES = 100
ORIGINALS_FLAGGED = 31
SUMMARIES_FLAGGED = 45

NAMES = [
    ("Berta", "the cooper", "her barrel staves"),
    ("Joss", "the thatcher", "his bundled reed"),
    ("Mina", "the glazier", "her diamond cutter"),
    ("Aldo", "the chandler", "his wax ledger"),
    ("Petra", "the wheelwright", "her seasoned felloes"),
    ("Ruen", "the netmaker", "his shuttle and twine"),
    ("Ilsa", "the dyer", "her woad vats"),
    ("Cobb", "the farrier", "his box of nails"),
    ("Vera", "the printer", "her case of type"),
    ("Odo", "the clockmaker", "his brass pendulums"),
]

TROUBLES = [
    ("a late frost", "split half the stock in the yard"),
    ("a river flood", "soaked the workshop to the sills"),
    ("a market slump", "left the shelves full and the till empty"),
    ("a chimney fire", "smoked out the loft and the stores"),
    ("a broken axle", "stranded the delivery cart at the ford"),
    ("a rival's opening", "drew the town across the square"),
    ("a guild inspection", "arrived a season early and unannounced"),
    ("a lost apprentice", "ran off to sea with the tool roll"),
    ("a tax reckoning", "claimed a quarter of the year's take"),
    ("a storm-torn roof", "let the rain at the best materials"),
]

FIXES = [
    "Patience and a borrowed hand put the loss right by the next fair.",
    "A careful reckoning turned the bad season into a lean but honest one.",
    "Neighbors repaid old favors and the work went on unbroken.",
    "A night of quiet repair saved what the day had spoiled.",
    "The setback taught a cheaper method that held ever after.",
    "An old debt called in covered the worst of the damage.",
    "The town's need outlasted the trouble and custom returned.",
    "A second try with better timing recovered the season.",
    "What survived proved finer than what was lost.",
    "The year closed thin but the craft kept its good name.",
]


def build_stories() -> list[Story]:
    stories = []
    for i in range(N_STORIES):
        name, craft, possession = NAMES[i // 10]
        trouble, harm = TROUBLES[i % 10]
        fix = FIXES[(i // 10 + i) % 10]
        text = (
            f"{name} {craft} kept {possession} in steady order. "
            f"One year {trouble} {harm}. "
            f"{fix}"
        )
        stories.append(
            Story(id=f"study{i:03d}", title=f"{name} and {trouble}", text=text)
        )
    return stories


def summary_for(story: Story, i: int) -> str:
    name, craft, _ = NAMES[i // 10]
    trouble, _ = TROUBLES[i % 10]
    return f"{name} {craft} weathers {trouble} and keeps the trade whole."


def yes_detection(text: str) -> str:
    sentences = text.split(". ")
    error_line = sentences[1] + "." if len(sentences) > 1 else sentences[0]
    contradicted = sentences[0] + "."
    return (
        "<response>\n<explanation>\nThe later line cuts against the opening fact.\n"
        "</explanation>\n\n"
        f"<error_lines>\n- {error_line}\n</error_lines>\n\n"
        f"<contradicted_lines>\n- {contradicted}\n</contradicted_lines>\n\n"
        "<decision>\nContinuity error found\n</decision>\n</response>"
    )


NO_DETECTION = (
    "<response>\n<explanation>\nEvery line squares with the opening facts.\n"
    "</explanation>\n\n"
    "<error_lines>\nNA\n</error_lines>\n\n"
    "<contradicted_lines>\nNA\n</contradicted_lines>\n\n"
    "<decision>\nNo continuity error found\n</decision>\n</response>"
)


def build_prompt_map(stories: list[Story]) -> dict[str, str]:
    summarize_template = load_template(Stage.SUMMARIZE)
    detect_template = load_template(Stage.DETECT_VANILLA)
    prompt_map: dict[str, str] = {}
    for i, story in enumerate(stories):
        summary = summary_for(story, i)
        prompt_map[render(summarize_template, story=story.text, num_words=1000)] = (
            f"<summary>\n{summary}\n</summary>"
        )
        prompt_map[render(detect_template, story=story.text)] = (
            yes_detection(story.text) if i < ORIGINALS_FLAGGED else NO_DETECTION
        )
        prompt_map[render(detect_template, story=summary)] = (
            yes_detection(summary) if i < SUMMARIES_FLAGGED else NO_DETECTION
        )
    assert len(prompt_map) == 3 * len(stories), "prompt collision across stories"
    return prompt_map


def write_stories(stories: list[Story]) -> None:
    STORIES_PATH.parent.mkdir(parents=True, exist_ok=True)
    with open(STORIES_PATH, "w", encoding="utf-8", newline="\n") as f:
        for story in stories:
            f.write(json.dumps(
                {
                    "id": story.id,
                    "title": story.title,
                    "text": story.text,
                    "source": "generated",
                },
                ensure_ascii=False, sort_keys=True,
            ))
            f.write("\n")


def record(stories: list[Story], prompt_map: dict[str, str], out_dir: Path) -> None:
    if REPLAY_DIR.exists():
        shutil.rmtree(REPLAY_DIR)

    def respond(request) -> str:
        prompt = request.messages[-1].content
        if prompt not in prompt_map:
            raise AssertionError(f"unscripted prompt:\n{prompt[:300]}")
        return prompt_map[prompt]

    provider = RecordingProvider(ScriptedProvider(respond), FixtureStore(REPLAY_DIR))
    run = run_study(
        stories,
        StudyTask.SUMMARIZE,
        Gateway(provider),
        generator_model="gpt-4o",
        detector=DetectorConfig(),
        out_dir=out_dir,
    )
    assert run.original_rate == ORIGINALS_FLAGGED / N_STORIES, run.original_rate
    assert run.generated_rate == SUMMARIES_FLAGGED / N_STORIES, run.generated_rate
    assert run.warnings == 0, run.warnings


def replay_cli(out_dir: Path) -> None:
    rc = cli_main([
        "genstudy",
        "--task", "summarize",
        "--stories", str(STORIES_PATH),
        "--generator", "gpt-4o",
        "--detector", "gpt-4o",
        "--out", str(out_dir),
        "--replay", str(REPLAY_DIR),
    ])
    assert rc == 0, f"genstudy exited {rc}"


def main() -> None:
    stories = build_stories()
    assert len({s.text for s in stories}) == N_STORIES, "story texts collide"
    write_stories(stories)
    prompt_map = build_prompt_map(stories)

    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)
        record(stories, prompt_map, work / "recorded")
        replay_cli(work / "a")
        replay_cli(work / "b")
        for name in ("pairs.csv", "summary.json"):
            assert filecmp.cmp(work / "a" / name, work / "b" / name, shallow=False), (
                f"{name} differs between replay runs"
            )
            assert filecmp.cmp(work / "recorded" / name, work / "a" / name, shallow=False), (
                f"{name} differs between recording and replay"
            )
        summary = json.loads((work / "a" / "summary.json").read_text(encoding="utf-8"))
        assert summary["original_rate"] == 0.31, summary
        assert summary["generated_rate"] == 0.45, summary

        if GOLDEN_DIR.exists():
            shutil.rmtree(GOLDEN_DIR)
        GOLDEN_DIR.mkdir(parents=True)
        for name in ("pairs.csv", "summary.json"):
            shutil.copyfile(work / "a" / name, GOLDEN_DIR / name)

    print(f"stories: {len(stories)}")
    print(f"fixtures: {len(list(REPLAY_DIR.glob('*.json')))}")
    print(f"rates: {ORIGINALS_FLAGGED / N_STORIES} originals, "
          f"{SUMMARIES_FLAGGED / N_STORIES} summaries")


if __name__ == "__main__":
    main()
