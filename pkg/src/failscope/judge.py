"""Rate generated failure patterns against reference patterns and compute recall.

A judge model rates each (generated, reference) pair on the ordinal 1-5
match scale through a domain-specific rubric prompt. Recall is the mean,
over references, of the best rating any generated pattern achieves, and is
averaged across judge runs (each run gets its own cache key so reruns stay
replayable call for call).
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Sequence

from . import prompts, stats
from ._parsing import parse_json_object
from .discovery import FailurePattern
from .llm_gateway import ChatRequest, LlmGateway

log = logging.getLogger(__name__)

DOMAINS = ("mathcamps", "mmlu_math", "mmlu_health")
DEFAULT_JUDGE_MODEL = "o3-mini-2025-01-31"


class JudgeError(RuntimeError):
    pass


@dataclass(frozen=True)
class GroundTruthPattern:
    label: str
    detailed: str
    gist: str = ""

    def __post_init__(self):
        if not self.detailed:
            raise JudgeError(f"reference {self.label!r} needs a detailed description")


@dataclass(frozen=True)
class MatchRating:
    generated_rank: int
    reference_label: str
    rating: int
    comments: str
    run_index: int

    def __post_init__(self):
        if self.rating not in (1, 2, 3, 4, 5):
            raise JudgeError(f"rating must be in 1..5, got {self.rating}")


@dataclass(frozen=True)
class RecallReport:
    per_reference_best: dict[str, float]
    recall_mean: float
    recall_sd: float
    n_runs: int

    def to_json_dict(self) -> dict:
        return {
            "per_reference_best": dict(sorted(self.per_reference_best.items())),
            "recall_mean": self.recall_mean,
            "recall_sd": self.recall_sd,
            "n_runs": self.n_runs,
        }


def load_references(path: str | Path) -> list[GroundTruthPattern]:
    """Read refs.json: a list of {label, detailed, gist}."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        GroundTruthPattern(label=rec["label"], detailed=rec["detailed"], gist=rec.get("gist", ""))
        for rec in payload
    ]


def build_rating_request(
    generated: FailurePattern,
    reference: GroundTruthPattern,
    domain: str,
    run_index: int = 0,
    model_id: str = DEFAULT_JUDGE_MODEL,
) -> ChatRequest:
    """Render the domain rubric for one (generated, reference) pair."""
    if domain == "mathcamps":
        prompt = prompts.JUDGE_MATHCAMPS.format(
            output_spec=prompts.JUDGE_OUTPUT_SPEC,
            submission=generated.text,
            reference_detailed=reference.detailed,
            reference_gist=reference.gist or reference.label,
        )
    elif domain == "mmlu_math":
        prompt = prompts.JUDGE_MMLU_MATH.format(
            output_spec=prompts.JUDGE_OUTPUT_SPEC,
            submission=generated.text,
            reference_detailed=reference.detailed,
        )
    elif domain == "mmlu_health":
        prompt = prompts.JUDGE_MMLU_HEALTH.format(
            output_spec=prompts.JUDGE_OUTPUT_SPEC,
            submission=generated.text,
            reference_detailed=reference.detailed,
        )
    else:
        raise JudgeError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    return ChatRequest(
        model_id=model_id,
        messages=(("user", prompt),),
        temperature=0.0,
        cache_tag=f"run{run_index}",
    )


def _extract_verdict(obj: dict) -> int | None:
    verdict = obj.get("Final Rating")
    if isinstance(verdict, list) and len(verdict) == 1:
        verdict = verdict[0]
    if isinstance(verdict, bool):
        return None
    if isinstance(verdict, int):
        return verdict if verdict in (1, 2, 3, 4, 5) else None
    if isinstance(verdict, str) and verdict.strip() in ("1", "2", "3", "4", "5"):
        return int(verdict.strip())
    # fractional or otherwise malformed verdicts are rejected: the scale is ordinal
    return None


def _extract_comments(obj: dict) -> str:
    comments = obj.get("Additional Comments", "")
    if isinstance(comments, list):
        return " ".join(str(c) for c in comments)
    return str(comments)


def rate_match(
    generated: FailurePattern,
    reference: GroundTruthPattern,
    domain: str,
    gateway: LlmGateway,
    run_index: int = 0,
    model_id: str = DEFAULT_JUDGE_MODEL,
) -> MatchRating:
    """Judge one pair; one repair re-prompt on malformed output, then error."""
    request = build_rating_request(generated, reference, domain, run_index, model_id)
    reply = gateway.complete(request).content
    obj = parse_json_object(reply)
    verdict = _extract_verdict(obj) if obj is not None else None
    if verdict is None:
        repair = replace(
            request,
            messages=request.messages + (("assistant", reply), ("user", prompts.JSON_REPAIR)),
        )
        reply = gateway.complete(repair).content
        obj = parse_json_object(reply)
        verdict = _extract_verdict(obj) if obj is not None else None
        if verdict is None:
            raise JudgeError(f"judge verdict unusable after repair: {reply[:200]!r}")
    return MatchRating(
        generated_rank=generated.rank,
        reference_label=reference.label,
        rating=verdict,
        comments=_extract_comments(obj),
        run_index=run_index,
    )


def recall(
    generated: Sequence[FailurePattern],
    references: Sequence[GroundTruthPattern],
    domain: str,
    gateway: LlmGateway,
    n_runs: int = 3,
    model_id: str = DEFAULT_JUDGE_MODEL,
) -> RecallReport:
    """Best-match recall of the references, averaged over judge runs."""
    if not generated or not references:
        raise JudgeError("recall needs at least one generated and one reference pattern")
    if n_runs < 1:
        raise JudgeError("n_runs must be >= 1")

    triples = [
        (run, gen, ref)
        for run in range(n_runs)
        for ref in references
        for gen in generated
    ]
    with ThreadPoolExecutor(max_workers=gateway.config.max_in_flight) as pool:
        ratings = list(
            pool.map(
                lambda item: rate_match(item[1], item[2], domain, gateway, run_index=item[0], model_id=model_id),
                triples,
            )
        )

    best: dict[tuple[int, str], int] = {}
    for rating in ratings:
        key = (rating.run_index, rating.reference_label)
        if key not in best or rating.rating > best[key]:
            best[key] = rating.rating
        elif rating.rating == best[key]:
            log.debug(
                "run %d, reference %r: generated #%d ties the best rating %d",
                rating.run_index, rating.reference_label, rating.generated_rank, rating.rating,
            )

    per_run = [
        sum(best[(run, ref.label)] for ref in references) / len(references)
        for run in range(n_runs)
    ]
    per_reference = {
        ref.label: sum(best[(run, ref.label)] for run in range(n_runs)) / n_runs
        for ref in references
    }
    mean = sum(per_run) / n_runs
    if n_runs > 1:
        sd = math.sqrt(sum((r - mean) ** 2 for r in per_run) / (n_runs - 1))
    else:
        sd = 0.0
    return RecallReport(
        per_reference_best=per_reference,
        recall_mean=mean,
        recall_sd=sd,
        n_runs=n_runs,
    )


class AgreementStats(NamedTuple):
    mad: float
    kappa_linear: float
    kappa_quadratic: float


def agreement(human: Sequence[int], machine: Sequence[int]) -> AgreementStats:
    """Mean absolute difference plus weighted kappas between two raters."""
    if len(human) != len(machine) or not human:
        raise JudgeError("agreement needs two equally sized nonempty rating vectors")
    if len(set(human)) == 1 or len(set(machine)) == 1:
        log.warning("a rater is constant; weighted kappa is not meaningful for these ratings")
    mad = sum(abs(h - m) for h, m in zip(human, machine)) / len(human)
    return AgreementStats(
        mad=mad,
        kappa_linear=stats.weighted_kappa(list(human), list(machine), "linear"),
        kappa_quadratic=stats.weighted_kappa(list(human), list(machine), "quadratic"),
    )
