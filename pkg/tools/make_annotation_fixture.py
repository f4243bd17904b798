#!/usr/bin/env python3
"""Author the bundled three-task annotation fixture.

Writes tests/data/annotation/tasks.jsonl in the annotation-task export
schema. Each story is a handful of plain declarative sentences whose
error and contradicted lines match sentences exactly, so the review
server's sentence indexing resolves every line.

Regenerate with:  python3 tools/make_annotation_fixture.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from flawfic.core import match_sentence, segment_sentences  # noqa: E402
from flawfic.dataset import import_annotation_tasks  # noqa: E402

OUT_PATH = ROOT / "tests" / "data" / "annotation" / "tasks.jsonl"

TASKS = [
    {
        "task_id": "rowan-gate-p1",
        "sentences": [
            "Rowan latched the orchard gate every night before supper.",
            "The latch was a carved oak peg his mother had whittled.",
            "One evening the gate stood open and the peg lay snapped in the grass.",
            "Rowan swore he had never once touched the latch in his life.",
            "The deer ate the windfall apples until frost.",
        ],
        "error": "Rowan swore he had never once touched the latch in his life.",
        "contradicted": "Rowan latched the orchard gate every night before supper.",
        "explanation": "A nightly habit cannot coexist with never having touched the latch.",
    },
    {
        "task_id": "harriet-skiff-p1",
        "sentences": [
            "Harriet rowed the green skiff to the oyster beds at first light.",
            "Her oars were ash, worn pale where her hands rode them.",
            "A squall came up fast and she ran for the lee of the breakwater.",
            "She tied up the blue dinghy she had rowed out that morning.",
            "The oyster baskets stayed lashed and nothing was lost.",
        ],
        "error": "She tied up the blue dinghy she had rowed out that morning.",
        "contradicted": "Harriet rowed the green skiff to the oyster beds at first light.",
        "explanation": "The boat changes from a green skiff to a blue dinghy mid-story.",
    },
    {
        "task_id": "tobias-ledger-p1",
        "sentences": [
            "Tobias kept the granary ledger in iron gall ink.",
            "He ruled each page with a brass straightedge before writing.",
            "An auditor praised the ledger's pencil entries for their neatness.",
            "Tobias thanked him and said nothing of it.",
            "The harvest counts balanced to the last bushel.",
        ],
        "error": "An auditor praised the ledger's pencil entries for their neatness.",
        "contradicted": "Tobias kept the granary ledger in iron gall ink.",
        "explanation": "Entries written in ink are praised as pencil work two lines later.",
    },
]


def main() -> None:
    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT_PATH, "w", encoding="utf-8", newline="\n") as f:
        for task in TASKS:
            story = " ".join(task["sentences"])
            record = {
                "task_id": task["task_id"],
                "story_text": story,
                "error_lines": [task["error"]],
                "contradicted_lines": [task["contradicted"]],
                "explanation": task["explanation"],
                "votes": [],
            }
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            f.write("\n")

    # self-check: tasks import cleanly and both line sets resolve to
    # distinct sentence indices
    tasks = import_annotation_tasks(OUT_PATH)
    assert len(tasks) == 3
    for task in tasks:
        sentences = [s.text for s in segment_sentences(task.story_text)]
        error_idx = [
            i for i, s in enumerate(sentences)
            if match_sentence(s, list(task.error_lines))
        ]
        contr_idx = [
            i for i, s in enumerate(sentences)
            if match_sentence(s, list(task.contradicted_lines))
        ]
        assert len(error_idx) == 1, (task.task_id, error_idx)
        assert len(contr_idx) == 1, (task.task_id, contr_idx)
        assert error_idx != contr_idx, task.task_id
    print(f"tasks: {len(tasks)} -> {OUT_PATH.relative_to(ROOT)}")


if __name__ == "__main__":
    main()
