"""Coverage, error-ratio, and error-score for instance groups.

coverage    = group wrong count / dataset wrong count
error_ratio = group wrong count / group correct count (Unbounded at zero correct)
error_score = error_ratio * coverage

All three are derived from integer counts; comparisons and the error-score
product are done with exact rational arithmetic so merge decisions and
threshold checks never depend on float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from .corpus import EvalDataset, Group


class MetricsError(ValueError):
    pass


class _UnboundedType:
    """Sentinel for ratios with a zero denominator and nonzero numerator.

    Compares above every finite number so flagged groups sort naturally.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Unbounded"

    def __gt__(self, other):
        return not isinstance(other, _UnboundedType)

    def __lt__(self, other):
        return False

    def __ge__(self, other):
        return True

    def __le__(self, other):
        return isinstance(other, _UnboundedType)

    def __eq__(self, other):
        return isinstance(other, _UnboundedType)

    def __hash__(self):
        return hash("Unbounded")


UNBOUNDED = _UnboundedType()

Ratio = Union[float, _UnboundedType]


@dataclass(frozen=True)
class GroupMetrics:
    group_label: str
    n_wrong: int
    n_correct: int
    coverage: float
    error_ratio: Ratio
    error_score: Ratio

    @property
    def size(self) -> int:
        return self.n_wrong + self.n_correct

    def to_json_dict(self) -> dict:
        def enc(v):
            return "Unbounded" if v is UNBOUNDED else v

        return {
            "label": self.group_label,
            "n_wrong": self.n_wrong,
            "n_correct": self.n_correct,
            "coverage": self.coverage,
            "error_ratio": enc(self.error_ratio),
            "error_score": enc(self.error_score),
        }


def _counts(group: Group, dataset: EvalDataset) -> tuple[int, int]:
    unknown = group.member_ids - dataset.ids
    if unknown:
        raise MetricsError(
            f"group {group.label!r} has members outside the dataset: {sorted(unknown)[:5]}"
        )
    n_wrong = len(group.member_ids & dataset.wrong_ids)
    n_correct = len(group.member_ids & dataset.correct_ids)
    return n_wrong, n_correct


def coverage(group: Group, dataset: EvalDataset) -> float:
    """Share of the model's total errors that fall inside the group."""
    if not dataset.wrong_ids:
        raise MetricsError("no errors to cover: dataset has an empty wrong partition")
    n_wrong, _ = _counts(group, dataset)
    return n_wrong / len(dataset.wrong_ids)


def error_ratio(group: Group, dataset: EvalDataset) -> Ratio:
    """Wrong-to-correct count ratio within the group.

    Returns UNBOUNDED for all-wrong nonempty groups and 0.0 for groups
    empty of both, so scoring stays total over degenerate inputs.
    """
    n_wrong, n_correct = _counts(group, dataset)
    if n_correct > 0:
        return n_wrong / n_correct
    return UNBOUNDED if n_wrong > 0 else 0.0


def error_score(group: Group, dataset: EvalDataset) -> Ratio:
    """error_ratio * coverage, computed as one exact rational then floated."""
    if not dataset.wrong_ids:
        raise MetricsError("no errors to cover: dataset has an empty wrong partition")
    n_wrong, n_correct = _counts(group, dataset)
    return _score_from_counts(n_wrong, n_correct, len(dataset.wrong_ids))


def _score_from_counts(n_wrong: int, n_correct: int, total_wrong: int) -> Ratio:
    if n_correct == 0:
        return UNBOUNDED if n_wrong > 0 else 0.0
    return float(Fraction(n_wrong * n_wrong, n_correct * total_wrong))


def score_key(n_wrong: int, n_correct: int, total_wrong: int) -> tuple:
    """Exact sort key for error scores: Unbounded first by n_wrong, then rationals.

    Used by the mapper merge loop so ranking never hits float ties.
    """
    if n_correct == 0 and n_wrong > 0:
        return (1, n_wrong)
    if n_wrong == 0:
        return (0, Fraction(0))
    return (0, Fraction(n_wrong * n_wrong, n_correct * total_wrong))


def compute_metrics(group: Group, dataset: EvalDataset) -> GroupMetrics:
    if not dataset.wrong_ids:
        raise MetricsError("no errors to cover: dataset has an empty wrong partition")
    n_wrong, n_correct = _counts(group, dataset)
    total_wrong = len(dataset.wrong_ids)
    if n_correct > 0:
        ratio: Ratio = n_wrong / n_correct
    else:
        ratio = UNBOUNDED if n_wrong > 0 else 0.0
    return GroupMetrics(
        group_label=group.label,
        n_wrong=n_wrong,
        n_correct=n_correct,
        coverage=n_wrong / total_wrong,
        error_ratio=ratio,
        error_score=_score_from_counts(n_wrong, n_correct, total_wrong),
    )


@dataclass(frozen=True)
class FlagReport:
    """Groups meeting the error-ratio threshold plus their union coverage."""

    flagged: tuple[GroupMetrics, ...]
    total_error_covered: float


def flag_groups(
    groups: Iterable[Group],
    dataset: EvalDataset,
    min_error_ratio: float = 0.5,
    include_unbounded: bool = True,
) -> FlagReport:
    """Flag groups whose error ratio meets the threshold.

    Flagged groups are sorted descending by error ratio (Unbounded above all
    finite values, then by n_wrong, then label) and the report carries the
    share of total error covered by their union.
    """
    if not dataset.wrong_ids:
        raise MetricsError("no errors to cover: dataset has an empty wrong partition")
    threshold = Fraction(min_error_ratio).limit_denominator(10**9)
    flagged: list[tuple[tuple, GroupMetrics, Group]] = []
    for group in groups:
        n_wrong, n_correct = _counts(group, dataset)
        if n_correct == 0:
            if n_wrong == 0 or not include_unbounded:
                continue
            key = (1, n_wrong)
        else:
            ratio = Fraction(n_wrong, n_correct)
            if ratio < threshold:
                continue
            key = (0, ratio)
        flagged.append((key, compute_metrics(group, dataset), group))
    flagged.sort(key=lambda item: (-item[0][0], -item[0][1], item[1].group_label))
    covered: set[str] = set()
    for _, _, group in flagged:
        covered |= group.member_ids & dataset.wrong_ids
    return FlagReport(
        flagged=tuple(m for _, m, _ in flagged),
        total_error_covered=len(covered) / len(dataset.wrong_ids),
    )
