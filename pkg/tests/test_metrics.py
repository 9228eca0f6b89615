import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from failscope.corpus import Group
from failscope.metrics import (
    UNBOUNDED,
    MetricsError,
    compute_metrics,
    coverage,
    error_ratio,
    error_score,
    flag_groups,
)
from conftest import make_dataset, group_of


class TestCoverage:
    def test_full_cover(self):
        ds = make_dataset([("a", 4, 0)])
        assert coverage(Group("g", ds.wrong_ids), ds) == 1.0

    def test_half_cover(self):
        ds = make_dataset([("a", 4, 0)])
        two = frozenset(sorted(ds.wrong_ids)[:2])
        assert coverage(Group("g", two), ds) == 0.5

    def test_no_errors_is_error(self):
        ds = make_dataset([("a", 0, 3)])
        with pytest.raises(MetricsError, match="no errors to cover"):
            coverage(Group("g", frozenset()), ds)

    def test_member_outside_dataset_rejected(self):
        ds = make_dataset([("a", 1, 1)])
        with pytest.raises(MetricsError, match="outside the dataset"):
            coverage(Group("g", frozenset({"nope"})), ds)


class TestErrorRatio:
    def test_two_wrong_four_correct(self):
        ds = make_dataset([("a", 2, 4)])
        assert error_ratio(group_of(ds, "a"), ds) == 0.5

    def test_zero_wrong_gives_zero(self):
        ds = make_dataset([("a", 0, 5), ("b", 1, 0)])
        assert error_ratio(group_of(ds, "a"), ds) == 0.0

    def test_all_wrong_group_is_unbounded(self):
        ds = make_dataset([("a", 3, 0), ("b", 1, 1)])
        assert error_ratio(group_of(ds, "a"), ds) is UNBOUNDED

    def test_empty_group_is_zero_by_convention(self):
        ds = make_dataset([("a", 1, 1)])
        assert error_ratio(Group("empty", frozenset()), ds) == 0.0


class TestErrorScore:
    def test_product(self):
        # er = 0.5 (2w/4c), cov = 0.5 (2 of 4 total wrong)
        ds = make_dataset([("a", 2, 4), ("b", 2, 0)])
        assert error_score(group_of(ds, "a"), ds) == 0.25

    def test_zero_ratio_gives_zero(self):
        ds = make_dataset([("a", 0, 5), ("b", 2, 0)])
        assert error_score(group_of(ds, "a"), ds) == 0.0

    def test_unbounded_with_positive_coverage(self):
        ds = make_dataset([("a", 1, 0), ("b", 3, 1)])
        assert error_score(group_of(ds, "a"), ds) is UNBOUNDED

    def test_er_one_quarter_coverage(self):
        # 4-error fixture: group holds 1 wrong, 1 correct -> er=1.0, cov=0.25
        ds = make_dataset([("a", 1, 1), ("b", 3, 5)])
        assert error_score(group_of(ds, "a"), ds) == 0.25


class TestFlagGroups:
    def test_no_group_meets_threshold(self):
        ds = make_dataset([("a", 1, 9), ("b", 1, 8)])
        report = flag_groups([group_of(ds, "a"), group_of(ds, "b")], ds)
        assert report.flagged == ()
        assert report.total_error_covered == 0.0

    def test_planted_group_flagged(self):
        # planted at er=1.0, others at er=0.1
        ds = make_dataset([("hot", 5, 5), ("cold1", 1, 10), ("cold2", 2, 20)])
        groups = [group_of(ds, label) for label in ("hot", "cold1", "cold2")]
        report = flag_groups(groups, ds)
        assert [m.group_label for m in report.flagged] == ["hot"]
        assert report.flagged[0].error_ratio == 1.0
        assert report.total_error_covered == 5 / 8

    def test_all_flagged_covers_everything(self):
        ds = make_dataset([("a", 3, 3), ("b", 4, 2)])
        report = flag_groups([group_of(ds, "a"), group_of(ds, "b")], ds)
        assert len(report.flagged) == 2
        assert report.total_error_covered == 1.0

    def test_sorted_descending_by_error_ratio(self):
        ds = make_dataset([("a", 2, 2), ("b", 3, 1), ("c", 4, 0)])
        report = flag_groups([group_of(ds, l) for l in "abc"], ds)
        assert [m.group_label for m in report.flagged] == ["c", "b", "a"]
        assert report.flagged[0].error_ratio is UNBOUNDED

    def test_exclude_unbounded(self):
        ds = make_dataset([("a", 2, 2), ("c", 4, 0)])
        report = flag_groups(
            [group_of(ds, "a"), group_of(ds, "c")], ds, include_unbounded=False
        )
        assert [m.group_label for m in report.flagged] == ["a"]

    def test_threshold_semantics_one_in_three(self):
        # 1 wrong per 2 correct <=> er 0.5 -> flagged; 1 per 3 -> not
        ds = make_dataset([("half", 2, 4), ("third", 2, 6)])
        report = flag_groups([group_of(ds, "half"), group_of(ds, "third")], ds, 0.5)
        assert [m.group_label for m in report.flagged] == ["half"]


class TestProperties:
    @given(st.integers(1, 50), st.integers(0, 50), st.data())
    @settings(max_examples=60, deadline=None)
    def test_random_subsets_match_brute_force(self, n_wrong, n_correct, data):
        ds = make_dataset([("x", n_wrong, n_correct)])
        ids = sorted(ds.ids)
        members = frozenset(data.draw(st.sets(st.sampled_from(ids))))
        group = Group("s", members)
        bf_wrong = sum(1 for i in members if i in ds.wrong_ids)
        bf_correct = sum(1 for i in members if i in ds.correct_ids)
        assert coverage(group, ds) <= 1.0
        assert coverage(group, ds) == bf_wrong / len(ds.wrong_ids)
        er = error_ratio(group, ds)
        if bf_correct > 0:
            assert er == bf_wrong / bf_correct
        elif bf_wrong > 0:
            assert er is UNBOUNDED
        else:
            assert er == 0.0

    def test_monotonicity_adding_wrong_instance(self):
        ds = make_dataset([("x", 10, 10)])
        wrong = sorted(ds.wrong_ids)
        base = frozenset(wrong[:3] + sorted(ds.correct_ids)[:3])
        bigger = base | {wrong[4]}
        assert coverage(Group("b", bigger), ds) >= coverage(Group("a", base), ds)
        assert error_ratio(Group("b", bigger), ds) >= error_ratio(Group("a", base), ds)

    def test_union_bound(self):
        ds = make_dataset([("a", 3, 1), ("b", 4, 1)])
        ga, gb = group_of(ds, "a"), group_of(ds, "b")
        report = flag_groups([ga, gb], ds, 0.0)
        assert report.total_error_covered <= coverage(ga, ds) + coverage(gb, ds)
        # the groups cover disjoint wrong instances, so equality holds
        assert report.total_error_covered == coverage(ga, ds) + coverage(gb, ds)

    def test_exact_arithmetic_against_fraction_oracle(self):
        rng = random.Random(42)
        ds = make_dataset([("a", 37, 63), ("b", 11, 89)])
        ids = sorted(ds.ids)
        total_wrong = len(ds.wrong_ids)
        for _ in range(300):
            members = frozenset(rng.sample(ids, rng.randint(0, len(ids))))
            group = Group("r", members)
            nw = len(members & ds.wrong_ids)
            nc = len(members & ds.correct_ids)
            m = compute_metrics(group, ds)
            assert m.coverage == nw / total_wrong
            if nc:
                assert m.error_ratio == nw / nc
                assert m.error_score == float(Fraction(nw * nw, nc * total_wrong))
            elif nw:
                assert m.error_ratio is UNBOUNDED and m.error_score is UNBOUNDED
            else:
                assert m.error_ratio == 0.0 and m.error_score == 0.0


class TestUnboundedSentinel:
    def test_ordering(self):
        assert UNBOUNDED > 1e18
        assert not (UNBOUNDED < 5)
        assert UNBOUNDED >= UNBOUNDED and UNBOUNDED <= UNBOUNDED
        assert UNBOUNDED == UNBOUNDED and UNBOUNDED != 3.0

    def test_json_encoding(self):
        ds = make_dataset([("a", 2, 0)])
        m = compute_metrics(group_of(ds, "a"), ds)
        assert m.to_json_dict()["error_ratio"] == "Unbounded"
