#!/usr/bin/env python3
"""Author the bundled 414-example balanced evaluation manifest.

Writes:
  tests/data/synthetic_eval/synthetic.jsonl   207 positive + 207 negative
                                              examples with varied lengths
  tests/data/synthetic_eval/stats_oracle.json word-count statistics
                                              computed here with plain
                                              Python arithmetic, never
                                              with the library under test

Example texts are built from closed sentence pools with arithmetic
index mixing only (no RNG), so regeneration is reproducible on any
interpreter. The oracle implements mean, sample standard deviation,
and linearly interpolated percentiles directly from their definitions.

Regenerate with:  python3 tools/make_synthetic_eval.py
"""

from __future__ import annotations

import json
import math
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from flawfic.core import (  # noqa: E402
    Example,
    GoldAnnotation,
    Label,
    NegativeStrategy,
)
from flawfic.dataset import (  # noqa: E402
    DatasetManifest,
    dataset_stats,
    export_jsonl,
    import_jsonl,
)
from flawfic.evaluation import run_eval  # noqa: E402

OUT_DIR = ROOT / "tests" / "data" / "synthetic_eval"
MANIFEST_PATH = OUT_DIR / "synthetic.jsonl"
ORACLE_PATH = OUT_DIR / "stats_oracle.json"

N_PER_LABEL = 207

OPENERS = [
    "The ferry crossed the narrows twice a day in every season.",
    "A tinker's cart made the same five villages in the same order.",
    "The lighthouse dory carried mail when the packet could not sail.",
    "A stone bridge took the market traffic over the winter flood.",
    "The mountain inn kept one lamp lit for late travellers.",
    "A canal barge moved bricks from the kiln to the new quarter.",
    "The island school rang its bell by the tide and not the clock.",
    "A drover's road ran dry and white above the hay meadows.",
    "The city archive lent its ladders but never its registers.",
]

MIDDLES = [
    "Its keeper balanced the accounts each quarter without fail.",
    "The work went on through frost and through festival alike.",
    "Regulars knew the timetable better than the posted board.",
    "Nothing about the routine had changed in living memory.",
    "Apprentices learned the route before they learned their letters.",
    "The toll was paid in coin, in kind, or in carried news.",
    "Every crossing was logged in a canvas-bound book.",
]

FILLERS = [
    "Weather settled most arguments before the magistrate could.",
    "Trade moved with the seasons and the seasons kept their word.",
    "A good year left margins wide and tempers even.",
    "The road dust told who had passed and how laden.",
    "Old hands taught the knack with few words and fewer repetitions.",
    "Accounts were squared at Michaelmas over small beer.",
    "The bell, the tide, and the ledger rarely disagreed.",
    "Rumor ran faster than the cart but arrived emptier.",
    "Nobody remembered the last time the routine had broken.",
    "The younger hands grumbled and learned and stayed.",
    "Visitors mistook the quiet for idleness exactly once.",
]

ERROR_LINES = [
    "The keeper swore the route had never been walked before that morning.",
    "By evening the ledger was said to have always been kept in chalk.",
    "The new hand claimed the toll had never been collected in coin.",
    "That afternoon the crossing ran hourly, as it supposedly always had.",
    "The bell was declared broken these ten years though it rang at noon.",
]

CONTRADICTED = [
    "The route had been walked daily for a generation.",
    "The ledger was a canvas-bound book of ink entries.",
    "Coin was the commonest payment at the toll.",
    "The crossing kept to its twice-daily timetable.",
    "The bell rang every working day.",
]

CLOSERS = [
    "The season ended as it had begun, in small reliable motions.",
    "What the year took in repairs it returned in custom.",
    "The accounts closed true to the copper.",
]


def build_text(i: int, positive: bool) -> tuple[str, str, str]:
    """Deterministic text of varied length; returns (text, error, contradicted)."""
    parts = [OPENERS[i % len(OPENERS)]]
    parts.append(CONTRADICTED[i % len(CONTRADICTED)])
    parts.append(MIDDLES[i % len(MIDDLES)])
    n_fillers = (i * 7 + (3 if positive else 0)) % 17
    for j in range(n_fillers):
        parts.append(FILLERS[(i + j * 5) % len(FILLERS)])
    error = ERROR_LINES[i % len(ERROR_LINES)]
    if positive:
        parts.append(error)
    parts.append(CLOSERS[i % len(CLOSERS)])
    return " ".join(parts), error, CONTRADICTED[i % len(CONTRADICTED)]


def build_manifest() -> DatasetManifest:
    examples = []
    for i in range(N_PER_LABEL):
        text, error, contradicted = build_text(i, positive=True)
        examples.append(
            Example(
                example_id=f"synth-p{i:03d}",
                text=text,
                label=Label.POSITIVE,
                negative_strategy=NegativeStrategy.NOT_APPLICABLE,
                gold=GoldAnnotation(
                    error_lines=(error,),
                    contradicted_lines=(contradicted,),
                    explanation="The late claim reverses the routine the opening establishes.",
                ),
                source_story_id=f"synthsrc{i:03d}",
            )
        )
        text_n, _, _ = build_text(i, positive=False)
        examples.append(
            Example(
                example_id=f"synth-n{i:03d}",
                text=text_n,
                label=Label.NEGATIVE,
                negative_strategy=NegativeStrategy.ORIGINAL,
                source_story_id=f"synthsrc{i:03d}",
            )
        )
    return DatasetManifest(
        name="synthetic-balanced-414",
        examples=tuple(examples),
        negative_strategy=NegativeStrategy.ORIGINAL,
    )


# ---------------------------------------------------------------------------
# independent statistics (plain arithmetic only)


def percentile_linear(sorted_values: list[float], q: float) -> float:
    """Linear interpolation between order statistics (the common
    'exclusive of neither end' definition: rank h = (n-1)*q/100)."""
    n = len(sorted_values)
    h = (n - 1) * (q / 100.0)
    lo = math.floor(h)
    hi = min(lo + 1, n - 1)
    frac = h - lo
    return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo])


def oracle_stats(lengths: list[int]) -> dict:
    n = len(lengths)
    values = sorted(float(x) for x in lengths)
    mean = math.fsum(values) / n
    var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    return {
        "count": n,
        "mean": mean,
        "std": math.sqrt(var),
        "min": values[0],
        "p25": percentile_linear(values, 25),
        "median": percentile_linear(values, 50),
        "p75": percentile_linear(values, 75),
        "max": values[-1],
    }


def main() -> None:
    manifest = build_manifest()
    assert len(manifest.examples) == 2 * N_PER_LABEL
    assert len(manifest.positives) == len(manifest.negatives) == N_PER_LABEL
    assert len({e.example_id for e in manifest.examples}) == 2 * N_PER_LABEL

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    export_jsonl(manifest, MANIFEST_PATH, created_at=None)

    lengths = [e.word_count for e in manifest.examples]
    oracle = oracle_stats(lengths)
    ORACLE_PATH.write_text(
        json.dumps(oracle, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    # self-checks ------------------------------------------------------
    reloaded = import_jsonl(MANIFEST_PATH)
    got = dataset_stats(reloaded)
    for key, want in oracle.items():
        assert abs(got[key] - want) <= 1e-9, (key, got[key], want)

    with tempfile.TemporaryDirectory() as tmp:
        report = run_eval(reloaded, "no_error", tmp)
    assert report.summary["accuracy"] == 0.5, report.summary
    assert report.summary["ceeval_full"] == 0.5, report.summary
    assert report.summary["precision"] == 0.0, report.summary
    assert report.summary["recall"] == 0.0, report.summary
    assert report.summary["f1"] == 0.0, report.summary

    with tempfile.TemporaryDirectory() as tmp:
        random_report = run_eval(reloaded, "random", tmp, seed=0)
    n = len(reloaded.examples)
    sigma = math.sqrt(0.25 / n)
    deviation = abs(random_report.summary["accuracy"] - 0.5)
    assert deviation <= 3 * sigma, (random_report.summary["accuracy"], 3 * sigma)

    print(f"examples: {len(manifest.examples)} "
          f"({len(manifest.positives)}/{len(manifest.negatives)})")
    print(f"word counts: min {oracle['min']:.0f}, mean {oracle['mean']:.2f}, "
          f"max {oracle['max']:.0f}")
    print(f"random baseline accuracy (seed 0): "
          f"{random_report.summary['accuracy']:.4f} "
          f"(band half-width {3 * sigma:.4f})")


if __name__ == "__main__":
    main()
