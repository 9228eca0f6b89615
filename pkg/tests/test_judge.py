import math

import pytest

from failscope import prompts
from failscope.discovery import FailurePattern
from failscope.judge import (
    AgreementStats,
    GroundTruthPattern,
    JudgeError,
    MatchRating,
    agreement,
    build_rating_request,
    load_references,
    rate_match,
    recall,
)
from failscope.llm_gateway import ChatRequest, LlmGateway, MockBackend
from failscope.stats import StatsError


def pattern(text: str, rank: int = 0) -> FailurePattern:
    return FailurePattern(text=text, method="direct", rank=rank)


class JudgeScript:
    """Mock table addressing the exact rubric requests the judge sends."""

    def __init__(self, domain: str = "mathcamps", model_id: str = "o3-mini-2025-01-31"):
        self.domain = domain
        self.model_id = model_id
        self.table: dict[str, str] = {}

    def add(self, generated: FailurePattern, reference: GroundTruthPattern,
            reply: str, run_index: int = 0) -> "JudgeScript":
        req = build_rating_request(generated, reference, self.domain, run_index, self.model_id)
        self.table[req.request_hash()] = reply
        return self

    def add_rating(self, generated, reference, rating: int, run_index: int = 0,
                   comments: str = "close enough") -> "JudgeScript":
        reply = f'{{"Additional Comments": ["{comments}"], "Final Rating": {rating}}}'
        return self.add(generated, reference, reply, run_index)

    def gateway(self) -> LlmGateway:
        return LlmGateway(MockBackend(self.table))


REF_FRACTIONS = GroundTruthPattern(
    label="7.NS.A.2",
    detailed="Apply and extend previous understandings of multiplication and division to multiply and divide fractions.",
    gist="Mult/div with fractions",
)


class TestRateMatch:
    def test_scripted_perfect_match(self):
        gen = pattern("Mult/div with fractions")
        script = JudgeScript().add_rating(gen, REF_FRACTIONS, 5)
        rating = rate_match(gen, REF_FRACTIONS, "mathcamps", script.gateway())
        assert rating.rating == 5
        assert rating.reference_label == "7.NS.A.2"
        assert rating.run_index == 0

    def test_prompt_carries_both_reference_versions_for_mathcamps(self):
        gen = pattern("requires addition of fractions")
        req = build_rating_request(gen, REF_FRACTIONS, "mathcamps")
        text = req.messages[0][1]
        assert REF_FRACTIONS.detailed in text
        assert REF_FRACTIONS.gist in text
        assert gen.text in text
        assert "'Final Rating': [verdict]" in text

    def test_mmlu_prompts_use_topic(self):
        gen = pattern("abstract algebra topics")
        ref = GroundTruthPattern(label="abstract_algebra", detailed="Abstract Algebra")
        for domain in ("mmlu_math", "mmlu_health"):
            text = build_rating_request(gen, ref, domain).messages[0][1]
            assert "Reference topic: Abstract Algebra" in text

    def test_unknown_domain(self):
        with pytest.raises(JudgeError, match="unknown domain"):
            build_rating_request(pattern("x"), REF_FRACTIONS, "poetry")

    def test_out_of_range_verdict_repaired_then_error(self):
        gen = pattern("something")
        bad = '{"Additional Comments": [], "Final Rating": 7}'
        script = JudgeScript().add(gen, REF_FRACTIONS, bad)
        base = build_rating_request(gen, REF_FRACTIONS, "mathcamps")
        repair = ChatRequest(
            model_id=base.model_id,
            messages=base.messages + (("assistant", bad), ("user", prompts.JSON_REPAIR)),
            temperature=0.0,
            cache_tag=base.cache_tag,
        )
        script.table[repair.request_hash()] = bad
        with pytest.raises(JudgeError, match="unusable after repair"):
            rate_match(gen, REF_FRACTIONS, "mathcamps", script.gateway())

    def test_fractional_verdict_rejected_then_repaired(self):
        gen = pattern("something")
        bad = '{"Additional Comments": [], "Final Rating": 3.5}'
        good = '{"Additional Comments": [], "Final Rating": 4}'
        script = JudgeScript().add(gen, REF_FRACTIONS, bad)
        base = build_rating_request(gen, REF_FRACTIONS, "mathcamps")
        repair = ChatRequest(
            model_id=base.model_id,
            messages=base.messages + (("assistant", bad), ("user", prompts.JSON_REPAIR)),
            temperature=0.0,
            cache_tag=base.cache_tag,
        )
        script.table[repair.request_hash()] = good
        assert rate_match(gen, REF_FRACTIONS, "mathcamps", script.gateway()).rating == 4

    def test_single_quoted_output_parses(self):
        gen = pattern("quoted")
        reply = "{'Additional Comments': ['ok'], 'Final Rating': 2}"
        script = JudgeScript().add(gen, REF_FRACTIONS, reply)
        assert rate_match(gen, REF_FRACTIONS, "mathcamps", script.gateway()).rating == 2

    def test_run_index_distinguishes_cache_keys(self):
        gen = pattern("per-run")
        script = JudgeScript()
        script.add_rating(gen, REF_FRACTIONS, 3, run_index=0)
        script.add_rating(gen, REF_FRACTIONS, 5, run_index=1)
        gateway = script.gateway()
        assert rate_match(gen, REF_FRACTIONS, "mathcamps", gateway, run_index=0).rating == 3
        assert rate_match(gen, REF_FRACTIONS, "mathcamps", gateway, run_index=1).rating == 5

    def test_rating_validation(self):
        with pytest.raises(JudgeError):
            MatchRating(0, "x", 6, "", 0)


class TestRecall:
    def test_single_pair_constant_runs(self):
        gen = [pattern("only one")]
        refs = [REF_FRACTIONS]
        script = JudgeScript()
        for run in range(3):
            script.add_rating(gen[0], refs[0], 4, run_index=run)
        report = recall(gen, refs, "mathcamps", script.gateway(), n_runs=3)
        assert report.recall_mean == pytest.approx(4.0)
        assert report.recall_sd == pytest.approx(0.0)
        assert report.per_reference_best == {"7.NS.A.2": 4.0}

    def test_two_references_mean(self):
        gen = [pattern("g0", 0), pattern("g1", 1)]
        refs = [
            GroundTruthPattern(label="r1", detailed="first reference"),
            GroundTruthPattern(label="r2", detailed="second reference"),
        ]
        # per-run bests: run0 {5,3}, run1 {4,4}, run2 {5,3}
        plan = {
            (0, "r1"): (5, 2), (0, "r2"): (3, 1),
            (1, "r1"): (4, 4), (1, "r2"): (2, 4),
            (2, "r1"): (5, 1), (2, "r2"): (3, 3),
        }
        script = JudgeScript(domain="mmlu_math")
        for (run, label), (rating_g0, rating_g1) in plan.items():
            ref = refs[0] if label == "r1" else refs[1]
            script.add_rating(gen[0], ref, rating_g0, run_index=run)
            script.add_rating(gen[1], ref, rating_g1, run_index=run)
        report = recall(gen, refs, "mmlu_math", script.gateway(), n_runs=3)
        assert report.recall_mean == pytest.approx(4.0)
        assert report.recall_sd == pytest.approx(0.0)
        assert report.per_reference_best["r1"] == pytest.approx((5 + 4 + 5) / 3)
        assert report.per_reference_best["r2"] == pytest.approx((3 + 4 + 3) / 3)

    def test_order_invariance(self):
        gen = [pattern("a", 0), pattern("b", 1)]
        refs = [
            GroundTruthPattern(label="r1", detailed="ref one"),
            GroundTruthPattern(label="r2", detailed="ref two"),
        ]
        script = JudgeScript(domain="mmlu_math")
        ratings = {("a", "r1"): 2, ("a", "r2"): 5, ("b", "r1"): 4, ("b", "r2"): 1}
        for g in gen:
            for ref in refs:
                script.add_rating(g, ref, ratings[(g.text, ref.label)])
        fwd = recall(gen, refs, "mmlu_math", script.gateway(), n_runs=1)
        rev = recall(list(reversed(gen)), list(reversed(refs)), "mmlu_math", script.gateway(), n_runs=1)
        assert fwd.recall_mean == rev.recall_mean
        assert fwd.per_reference_best == rev.per_reference_best

    def test_adding_generated_never_decreases_best(self):
        gen1 = [pattern("a", 0)]
        gen2 = [pattern("a", 0), pattern("b", 1)]
        refs = [GroundTruthPattern(label="r1", detailed="ref one")]
        script = JudgeScript(domain="mmlu_math")
        script.add_rating(gen2[0], refs[0], 2)
        script.add_rating(gen2[1], refs[0], 4)
        small = recall(gen1, refs, "mmlu_math", script.gateway(), n_runs=1)
        big = recall(gen2, refs, "mmlu_math", script.gateway(), n_runs=1)
        assert big.per_reference_best["r1"] >= small.per_reference_best["r1"]

    def test_empty_inputs_rejected(self):
        with pytest.raises(JudgeError):
            recall([], [REF_FRACTIONS], "mathcamps", JudgeScript().gateway())
        with pytest.raises(JudgeError):
            recall([pattern("x")], [], "mathcamps", JudgeScript().gateway())

    def test_nonzero_sd(self):
        gen = [pattern("g")]
        refs = [GroundTruthPattern(label="r", detailed="ref")]
        script = JudgeScript(domain="mmlu_math")
        for run, rating in enumerate((3, 4, 5)):
            script.add_rating(gen[0], refs[0], rating, run_index=run)
        report = recall(gen, refs, "mmlu_math", script.gateway(), n_runs=3)
        assert report.recall_mean == pytest.approx(4.0)
        assert report.recall_sd == pytest.approx(1.0)


class TestTraceFixture:
    """One generated hypothesis rated against four reference standards.

    Mirrors a recorded judge trace: ratings 3, 2, 3, 3 and a best of 3.
    """

    REFS = [
        GroundTruthPattern(
            label="7.NS.A.2-rational",
            detailed="Solve real-world and mathematical problems involving the four operations with rational numbers.",
            gist="Add/sub/mult/div with fractions",
        ),
        GroundTruthPattern(
            label="4.MD.A.2-fraction",
            detailed="Use the four operations to solve word problems involving distances, intervals of time, liquid volumes, masses of objects, and money, including problems involving simple fractions or decimals, and problems that require expressing measurements given in a larger unit in terms of a smaller unit.",
            gist="Word problems with fractions",
        ),
        GroundTruthPattern(
            label="5.NF.A.1",
            detailed="Add and subtract fractions with unlike denominators (including mixed numbers) by replacing given fractions with equivalent fractions in such a way as to produce an equivalent sum or difference of fractions with like denominators.",
            gist="Add/sub fractions",
        ),
        GroundTruthPattern(
            label="7.NS.A.1-fraction",
            detailed="Apply and extend previous understandings of addition and subtraction to add and subtract rational numbers; represent addition and subtraction on a horizontal or vertical number line diagram.",
            gist="Add/sub with fractions",
        ),
    ]
    RATINGS = [3, 2, 3, 3]

    def test_max_rating_is_three(self):
        gen = pattern("requires addition of fractions")
        script = JudgeScript()
        for ref, rating in zip(self.REFS, self.RATINGS):
            script.add_rating(gen, ref, rating)
        report = recall([gen], self.REFS, "mathcamps", script.gateway(), n_runs=1)
        per_ref = [report.per_reference_best[r.label] for r in self.REFS]
        assert per_ref == [3.0, 2.0, 3.0, 3.0]
        assert max(per_ref) == 3


class TestAgreement:
    def test_identical_vectors(self):
        stats = agreement([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])
        assert stats == AgreementStats(0.0, 1.0, 1.0)

    def test_hand_computed_example(self):
        stats = agreement([1, 1, 5, 5], [1, 2, 5, 4])
        assert stats.mad == pytest.approx(0.5)
        assert stats.kappa_linear == pytest.approx(0.75)
        assert stats.kappa_quadratic == pytest.approx(12 / 13)

    def test_constant_rater_flagged(self, caplog):
        with caplog.at_level("WARNING"):
            stats = agreement([1, 2, 5, 4], [3, 3, 3, 3])
        assert "constant" in caplog.text
        assert math.isfinite(stats.kappa_linear)

    def test_identical_constant_vectors_degenerate(self):
        with pytest.raises(StatsError, match="degenerate"):
            agreement([3, 3, 3], [3, 3, 3])

    def test_length_mismatch(self):
        with pytest.raises(JudgeError):
            agreement([1, 2], [1])


class TestReferencesFile:
    def test_load(self, tmp_path):
        path = tmp_path / "refs.json"
        path.write_text(
            '[{"label": "8.EE.C.7", "detailed": "Solve linear equations in one variable.", "gist": "Linear equations"}]',
            encoding="utf-8",
        )
        refs = load_references(path)
        assert refs[0].label == "8.EE.C.7"
        assert refs[0].gist == "Linear equations"

    def test_missing_detailed_rejected(self):
        with pytest.raises(JudgeError):
            GroundTruthPattern(label="x", detailed="")
