"""Dataset assembly: vote resolution, negative strategies, JSONL
round-trip, and statistics against a hand-rolled oracle."""

from __future__ import annotations

import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flawfic.core import (
    CandidateStatus,
    Example,
    FlawficError,
    GoldAnnotation,
    Label,
    NegativeStrategy,
    PatchedCandidate,
    Proposition,
    PropositionCategory,
    Story,
)
from flawfic.dataset import (
    AnnotationTask,
    DatasetManifest,
    DuplicateAnnotatorError,
    InsufficientNegativesError,
    Resolution,
    SchemaViolationError,
    UnknownTaskIdError,
    Vote,
    VoteVerdict,
    apply_resolutions,
    build_dataset,
    candidate_from_dict,
    candidate_to_dict,
    dataset_stats,
    example_from_dict,
    example_to_dict,
    export_annotation_tasks,
    export_jsonl,
    import_annotation_tasks,
    import_jsonl,
    ingest_votes,
    load_stories,
    resolve_annotations,
)
from flawfic.gateway import Gateway, ScriptedProvider


def make_candidate(
    cid="story-a-p1",
    story_id="story-a",
    status=CandidateStatus.PENDING_ANNOTATION,
    text="The king rode north. He reached the sea.\nThe waves were calm.",
    cf_text="The king rode south. He reached the sea.\nThe waves were calm.",
):
    return PatchedCandidate(
        candidate_id=cid,
        story_id=story_id,
        proposition=Proposition(
            statement="The king rode north.",
            counterfactual="The king rode south.",
            category=PropositionCategory.CHARACTER,
            score=3,
        ),
        patched_text=text,
        error_lines=("He reached the sea.",),
        contradicted_lines=("The king rode north.",),
        explanation="Direction of travel flips between acts.",
        filter_votes=(4, 5),
        status=status,
        counterfactual_text=cf_text,
    )


def make_story(sid="story-a", text="The king rode north. He reached the sea."):
    return Story(id=sid, title=sid, text=text)


L, N, U = VoteVerdict.LEGITIMATE, VoteVerdict.NOT_LEGITIMATE, VoteVerdict.UNSURE


def task_with(verdicts) -> AnnotationTask:
    return AnnotationTask(
        task_id="t1",
        story_text="s",
        error_lines=("a",),
        contradicted_lines=("b",),
        explanation="e",
        votes=tuple(Vote(f"ann{i}", v) for i, v in enumerate(verdicts)),
    )


class TestResolveAnnotations:
    # Hand-computed outcomes for every 3-vote multiset: unsure strict
    # majority rejects; otherwise legitimate must hold a strict majority
    # of the non-unsure votes.
    TABLE = [
        ([L, L, L], Resolution.ACCEPTED),
        ([L, L, N], Resolution.ACCEPTED),
        ([L, N, N], Resolution.REJECTED),
        ([N, N, N], Resolution.REJECTED),
        ([L, L, U], Resolution.ACCEPTED),
        ([L, N, U], Resolution.REJECTED),
        ([N, N, U], Resolution.REJECTED),
        ([L, U, U], Resolution.REJECTED),
        ([N, U, U], Resolution.REJECTED),
        ([U, U, U], Resolution.REJECTED),
    ]

    @pytest.mark.parametrize("verdicts,expected", TABLE)
    def test_three_vote_table(self, verdicts, expected):
        assert resolve_annotations(task_with(verdicts)) is expected

    def test_under_three_votes_pending(self):
        assert resolve_annotations(task_with([])) is Resolution.PENDING
        assert resolve_annotations(task_with([L])) is Resolution.PENDING
        assert resolve_annotations(task_with([L, L])) is Resolution.PENDING

    def test_tie_of_four_rejects(self):
        assert resolve_annotations(task_with([L, L, N, N])) is Resolution.REJECTED

    def test_five_votes_majority(self):
        assert resolve_annotations(task_with([L, L, L, N, U])) is Resolution.ACCEPTED
        assert resolve_annotations(task_with([L, L, N, N, U])) is Resolution.REJECTED

    def test_conflicting_duplicate_annotator_raises(self):
        task = AnnotationTask(
            task_id="t1",
            story_text="s",
            error_lines=("a",),
            contradicted_lines=("b",),
            explanation="e",
            votes=(Vote("ann0", L), Vote("ann0", N), Vote("ann1", L)),
        )
        with pytest.raises(DuplicateAnnotatorError):
            resolve_annotations(task)

    @given(
        st.lists(st.sampled_from([L, N, U]), min_size=0, max_size=9),
        st.randoms(use_true_random=False),
    )
    @settings(max_examples=200)
    def test_permutation_invariant(self, verdicts, rng):
        shuffled = list(verdicts)
        rng.shuffle(shuffled)
        assert resolve_annotations(task_with(verdicts)) == resolve_annotations(
            task_with(shuffled)
        )

    @given(st.lists(st.sampled_from([L, N, U]), min_size=3, max_size=9))
    @settings(max_examples=200)
    def test_resolution_matches_counting_oracle(self, verdicts):
        legit = verdicts.count(L)
        unsure = verdicts.count(U)
        if unsure > len(verdicts) / 2:
            expected = Resolution.REJECTED
        elif legit > (len(verdicts) - unsure) / 2:
            expected = Resolution.ACCEPTED
        else:
            expected = Resolution.REJECTED
        assert resolve_annotations(task_with(verdicts)) is expected


class TestBuildDataset:
    def test_original_strategy_balanced(self):
        candidates = [make_candidate("story-a-p1", "story-a")]
        stories = [make_story("story-a"), make_story("story-b", "Once there was a cat.")]
        manifest = build_dataset(candidates, stories, NegativeStrategy.ORIGINAL, seed=7)
        assert len(manifest.positives) == 1 and len(manifest.negatives) == 1
        (pos,) = manifest.positives
        (neg,) = manifest.negatives
        assert pos.example_id == "story-a-p1-pos"
        assert pos.gold is not None and pos.gold.error_lines == ("He reached the sea.",)
        assert neg.example_id == "story-a-orig"
        assert neg.text == stories[0].text
        assert neg.gold is None

    def test_original_strategy_fills_from_unused(self):
        candidates = [
            make_candidate("story-a-p1", "story-a"),
            make_candidate("story-a-p2", "story-a"),
        ]
        stories = [make_story("story-a"), make_story("story-b", "Once there was a cat.")]
        manifest = build_dataset(candidates, stories, NegativeStrategy.ORIGINAL)
        ids = sorted(e.example_id for e in manifest.negatives)
        assert ids == ["story-a-orig", "story-b-orig"]

    def test_original_strategy_insufficient(self):
        candidates = [
            make_candidate("story-a-p1", "story-a"),
            make_candidate("story-a-p2", "story-a"),
        ]
        with pytest.raises(InsufficientNegativesError):
            build_dataset(candidates, [make_story("story-a")], NegativeStrategy.ORIGINAL)

    def test_counterfactual_strategy(self):
        manifest = build_dataset(
            [make_candidate()], [make_story()], NegativeStrategy.COUNTERFACTUAL
        )
        (neg,) = manifest.negatives
        assert neg.example_id == "story-a-p1-cf"
        assert neg.text.startswith("The king rode south.")
        assert neg.extra == {"validated": False}

    def test_counterfactual_strategy_missing_text(self):
        candidate = make_candidate(cf_text="")
        with pytest.raises(InsufficientNegativesError):
            build_dataset([candidate], [], NegativeStrategy.COUNTERFACTUAL)

    def test_resolved_strategy_requires_gateway(self):
        with pytest.raises(FlawficError, match="gateway"):
            build_dataset([make_candidate()], [], NegativeStrategy.RESOLVED)

    def test_resolved_strategy_calls_model(self):
        provider = ScriptedProvider(
            lambda req: "<resolved_story>The king rode north after all; the tale "
            "now explains the detour.</resolved_story>"
        )
        gateway = Gateway(provider)
        manifest = build_dataset(
            [make_candidate()], [], NegativeStrategy.RESOLVED, gateway=gateway
        )
        (neg,) = manifest.negatives
        assert neg.example_id == "story-a-p1-res"
        assert "detour" in neg.text
        assert neg.extra == {"validated": False}
        prompt = provider.requests[0].messages[0].content
        assert "The king rode north. He reached the sea." in prompt
        assert "Direction of travel flips" in prompt

    def test_shuffle_is_seeded(self):
        candidates = [make_candidate(f"story-{c}-p1", f"story-{c}") for c in "abcdef"]
        stories = [make_story(f"story-{c}", f"Story {c} text here.") for c in "abcdef"]
        one = build_dataset(candidates, stories, NegativeStrategy.ORIGINAL, seed=42)
        two = build_dataset(candidates, stories, NegativeStrategy.ORIGINAL, seed=42)
        other = build_dataset(candidates, stories, NegativeStrategy.ORIGINAL, seed=43)
        assert [e.example_id for e in one.examples] == [e.example_id for e in two.examples]
        assert [e.example_id for e in one.examples] != [e.example_id for e in other.examples]
        assert one.provenance["seed"] == 42

    def test_skips_rejected_candidates(self):
        candidates = [
            make_candidate("story-a-p1", "story-a"),
            make_candidate(
                "story-a-p2", "story-a", status=CandidateStatus.FILTER_REJECTED
            ),
        ]
        manifest = build_dataset(
            candidates, [make_story("story-a")], NegativeStrategy.ORIGINAL
        )
        assert len(manifest.positives) == 1

    def test_no_usable_candidates(self):
        rejected = make_candidate(status=CandidateStatus.FILTER_REJECTED)
        with pytest.raises(FlawficError, match="no accepted"):
            build_dataset([rejected], [], NegativeStrategy.ORIGINAL)

    def test_duplicate_example_ids_rejected(self):
        e = Example("dup", "text here", Label.NEGATIVE)
        with pytest.raises(FlawficError, match="duplicate"):
            DatasetManifest(name="d", examples=(e, e))


def _oracle_percentile(values, q):
    s = sorted(values)
    if len(s) == 1:
        return float(s[0])
    h = (len(s) - 1) * q / 100.0
    lo = math.floor(h)
    hi = math.ceil(h)
    return float(s[lo] + (h - lo) * (s[hi] - s[lo]))


def _oracle_stats(values):
    n = len(values)
    mean = sum(values) / n
    if n > 1:
        var = sum((v - mean) ** 2 for v in values) / (n - 1)
    else:
        var = 0.0
    return {
        "count": n,
        "mean": mean,
        "std": math.sqrt(var),
        "min": float(min(values)),
        "p25": _oracle_percentile(values, 25),
        "median": _oracle_percentile(values, 50),
        "p75": _oracle_percentile(values, 75),
        "max": float(max(values)),
    }


class TestDatasetStats:
    def test_hand_computed_example(self):
        stats = dataset_stats([1, 2, 3, 4])
        assert stats["count"] == 4
        assert stats["mean"] == pytest.approx(2.5, abs=1e-12)
        assert stats["std"] == pytest.approx(math.sqrt(5 / 3), abs=1e-12)
        assert stats["p25"] == pytest.approx(1.75, abs=1e-12)
        assert stats["median"] == pytest.approx(2.5, abs=1e-12)
        assert stats["p75"] == pytest.approx(3.25, abs=1e-12)
        assert stats["min"] == 1.0 and stats["max"] == 4.0

    def test_against_oracle_random_vectors(self):
        rng = random.Random(20240818)
        for _ in range(1000):
            n = rng.randint(1, 60)
            values = [rng.randint(1, 3000) for _ in range(n)]
            got = dataset_stats(values)
            want = _oracle_stats(values)
            for key, expected in want.items():
                assert got[key] == pytest.approx(expected, abs=1e-9), (key, values)

    def test_empty_raises(self):
        with pytest.raises(FlawficError):
            dataset_stats([])

    def test_manifest_uses_word_counts(self):
        examples = (
            Example("a", "one two three", Label.NEGATIVE),
            Example("b", "one two three four five", Label.NEGATIVE),
        )
        stats = dataset_stats(DatasetManifest(name="d", examples=examples))
        assert stats["count"] == 2
        assert stats["mean"] == pytest.approx(4.0)


class TestJsonlRoundTrip:
    def test_round_trip_identity(self, tmp_path):
        manifest = build_dataset(
            [make_candidate()],
            [make_story()],
            NegativeStrategy.COUNTERFACTUAL,
            seed=3,
            name="tiny",
        )
        path = tmp_path / "tiny.jsonl"
        export_jsonl(manifest, path)
        loaded = import_jsonl(path)
        assert loaded.name == "tiny"
        assert loaded.negative_strategy is NegativeStrategy.COUNTERFACTUAL
        assert loaded.examples == manifest.examples
        assert loaded.provenance == manifest.provenance

    def test_unknown_fields_preserved(self, tmp_path):
        path = tmp_path / "d.jsonl"
        record = {
            "example_id": "x1",
            "text": "Some text here.",
            "label": "negative",
            "negative_strategy": "original",
            "custom_field": {"nested": [1, 2]},
            "another": "keep me",
        }
        path.write_text(json.dumps(record) + "\n", encoding="utf-8")
        manifest = import_jsonl(path)
        (example,) = manifest.examples
        assert example.extra == {"custom_field": {"nested": [1, 2]}, "another": "keep me"}
        out = tmp_path / "out.jsonl"
        export_jsonl(manifest, out, created_at=None)
        reloaded = json.loads(out.read_text(encoding="utf-8").splitlines()[0])
        assert reloaded["custom_field"] == {"nested": [1, 2]}
        assert reloaded["another"] == "keep me"

    def test_missing_label_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = {"example_id": "x1", "text": "t", "label": "negative"}
        bad = {"example_id": "x2", "text": "t"}
        path.write_text(
            json.dumps(good) + "\n" + json.dumps(bad) + "\n", encoding="utf-8"
        )
        with pytest.raises(SchemaViolationError, match="line 2") as err:
            import_jsonl(path)
        assert err.value.line_number == 2
        assert "label" in str(err.value)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"example_id": "x1"\n', encoding="utf-8")
        with pytest.raises(SchemaViolationError, match="line 1"):
            import_jsonl(path)

    def test_bad_label_value(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            json.dumps({"example_id": "x", "text": "t", "label": "maybe"}) + "\n",
            encoding="utf-8",
        )
        with pytest.raises(SchemaViolationError, match="line 1"):
            import_jsonl(path)

    def test_deterministic_bytes(self, tmp_path):
        manifest = build_dataset(
            [make_candidate()], [make_story()], NegativeStrategy.ORIGINAL, seed=11
        )
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        export_jsonl(manifest, a, created_at=None)
        export_jsonl(manifest, b, created_at=None)
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.meta.json").read_bytes() == (
            tmp_path / "b.meta.json"
        ).read_bytes()

    def test_gold_round_trip(self):
        example = Example(
            "p1",
            "text here",
            Label.POSITIVE,
            gold=GoldAnnotation(("err line",), ("contr line",), "why"),
        )
        again = example_from_dict(example_to_dict(example))
        assert again == example
        assert again.gold == example.gold

    def test_candidate_round_trip(self):
        candidate = make_candidate()
        again = candidate_from_dict(candidate_to_dict(candidate))
        assert again == candidate
        payload = json.dumps(candidate_to_dict(candidate), sort_keys=True)
        assert candidate_from_dict(json.loads(payload)) == candidate

    def test_load_stories(self, tmp_path):
        path = tmp_path / "stories.jsonl"
        path.write_text(
            json.dumps({"id": "s1", "title": "One", "text": "A tale of one."})
            + "\n"
            + json.dumps({"id": "s2", "text": "A tale of two."})
            + "\n",
            encoding="utf-8",
        )
        stories = load_stories(path)
        assert [s.id for s in stories] == ["s1", "s2"]
        assert stories[1].title == "s2"
        bad = tmp_path / "bad.jsonl"
        bad.write_text(json.dumps({"id": "s3"}) + "\n", encoding="utf-8")
        with pytest.raises(SchemaViolationError, match="line 1"):
            load_stories(bad)


class TestAnnotationTasks:
    def test_export_import_round_trip(self, tmp_path):
        candidates = [make_candidate("c1", "story-a"), make_candidate("c2", "story-b")]
        path = tmp_path / "tasks.jsonl"
        tasks = export_annotation_tasks(candidates, path)
        loaded = import_annotation_tasks(path)
        assert loaded == tasks
        assert loaded[0].task_id == "c1"
        assert loaded[0].error_lines == ("He reached the sea.",)

    def test_ingest_votes_idempotent(self, tmp_path):
        tasks = export_annotation_tasks([make_candidate("c1")], tmp_path / "t.jsonl")
        votes = tmp_path / "votes.jsonl"
        lines = [
            {"task_id": "c1", "annotator_id": "a1", "verdict": "legitimate"},
            {"task_id": "c1", "annotator_id": "a2", "verdict": "legitimate"},
            {"task_id": "c1", "annotator_id": "a1", "verdict": "legitimate"},
        ]
        votes.write_text("".join(json.dumps(v) + "\n" for v in lines), encoding="utf-8")
        once = ingest_votes(tasks, votes)
        assert len(once[0].votes) == 2
        twice = ingest_votes(once, votes)
        assert twice == once

    def test_ingest_unknown_task(self, tmp_path):
        tasks = export_annotation_tasks([make_candidate("c1")], tmp_path / "t.jsonl")
        votes = tmp_path / "votes.jsonl"
        votes.write_text(
            json.dumps({"task_id": "ghost", "annotator_id": "a", "verdict": "unsure"})
            + "\n",
            encoding="utf-8",
        )
        with pytest.raises(UnknownTaskIdError, match="ghost"):
            ingest_votes(tasks, votes)

    def test_conflicting_votes_surface_at_resolution(self, tmp_path):
        tasks = export_annotation_tasks([make_candidate("c1")], tmp_path / "t.jsonl")
        votes = tmp_path / "votes.jsonl"
        lines = [
            {"task_id": "c1", "annotator_id": "a1", "verdict": "legitimate"},
            {"task_id": "c1", "annotator_id": "a1", "verdict": "not_legitimate"},
            {"task_id": "c1", "annotator_id": "a2", "verdict": "legitimate"},
        ]
        votes.write_text("".join(json.dumps(v) + "\n" for v in lines), encoding="utf-8")
        merged = ingest_votes(tasks, votes)
        with pytest.raises(DuplicateAnnotatorError):
            resolve_annotations(merged[0])

    def test_apply_resolutions(self):
        accepted_votes = tuple(Vote(f"a{i}", L) for i in range(3))
        rejected_votes = (Vote("a0", N), Vote("a1", N), Vote("a2", L))
        candidates = [
            make_candidate("c1"),
            make_candidate("c2"),
            make_candidate("c3"),
        ]
        tasks = [
            AnnotationTask("c1", "s", ("a",), ("b",), "e", votes=accepted_votes),
            AnnotationTask("c2", "s", ("a",), ("b",), "e", votes=rejected_votes),
            AnnotationTask("c3", "s", ("a",), ("b",), "e", votes=(Vote("a0", L),)),
        ]
        updated = apply_resolutions(candidates, tasks)
        assert updated[0].status is CandidateStatus.ACCEPTED
        assert updated[1].status is CandidateStatus.REJECTED_BY_ANNOTATORS
        assert updated[2].status is CandidateStatus.PENDING_ANNOTATION
