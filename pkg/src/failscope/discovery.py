"""Failure-pattern generation.

Four methods produce natural-language failure patterns from an evaluation
dataset:

  direct       one prompt over the wrong instances
  contrastive  candidate hypotheses from wrong-vs-correct samples, each
               validated per instance and scored by applicability gap
  regions      greedy embedding-ball regions biased toward errors, each
               described and then refined against nearby counterexamples
  mapper       descriptions of the top merged error regions of a mapper
               graph (see failscope.mapper)

All methods are deterministic given a seed and a scripted gateway.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import prompts
from ._parsing import parse_bullets, parse_json_object
from .corpus import EvalDataset, Instance
from .embedding_space import EmbeddingStore
from .llm_gateway import ChatRequest, LlmGateway
from .mapper import ErrorRegion, build_cover, build_graph, greedy_merge, top_k_regions

log = logging.getLogger(__name__)

METHODS = ("direct", "contrastive", "regions", "mapper")

REGION_MIN_SIZE_FRACTION = 0.03
REGION_MAX_SIZE_FRACTION = 0.2
REGION_MIN_WRONG_FRACTION = 0.33

DEFAULT_GENERATION_MODEL = "gpt-4o-2024-08-06"


class DiscoveryError(RuntimeError):
    pass


@dataclass(frozen=True)
class FailurePattern:
    text: str
    method: str
    source_group: str | None = None
    rank: int = 0

    def __post_init__(self):
        if not self.text:
            raise DiscoveryError("failure pattern text must be non-empty")
        if self.method not in METHODS:
            raise DiscoveryError(f"unknown method {self.method!r}")

    def to_json_dict(self) -> dict:
        return {
            "text": self.text,
            "method": self.method,
            "source_group": self.source_group,
            "rank": self.rank,
        }


@dataclass(frozen=True)
class DiscoveryConfig:
    num_patterns: int | None = None
    use_cot: bool = False
    max_candidates: int = 20
    max_instances_per_prompt: int = 50
    contrast_sample_size: int = 25
    validation_sample_size: int = 10
    counterexample_count: int = 5
    refine_rounds: int = 2
    score_floor: float = 0.5
    seed: int = 0
    model_id: str = DEFAULT_GENERATION_MODEL
    domain_description: str = prompts.DEFAULT_DOMAIN_DESCRIPTION

    def __post_init__(self):
        if self.num_patterns is not None and self.num_patterns < 1:
            raise DiscoveryError("num_patterns must be >= 1 when set")
        if self.max_candidates < 1:
            raise DiscoveryError("max_candidates must be >= 1")


def _render_instance(inst: Instance, use_cot: bool) -> str:
    if use_cot and inst.cot:
        return f"{inst.text}\nModel reasoning: {inst.cot}"
    return inst.text


def _instance_block(instances: Sequence[Instance], use_cot: bool) -> str:
    return "\n\n".join(_render_instance(inst, use_cot) for inst in instances)


def _sample(instances: list[Instance], limit: int, rng: random.Random, what: str) -> list[Instance]:
    if len(instances) <= limit:
        return instances
    position = {inst.id: i for i, inst in enumerate(instances)}
    sampled = sorted(rng.sample(instances, limit), key=lambda inst: position[inst.id])
    log.info("sampled %d/%d %s instances: %s", limit, len(instances), what,
             ",".join(inst.id for inst in sampled))
    return sampled


def _wrong_instances(dataset: EvalDataset) -> list[Instance]:
    return [inst for inst in dataset.instances if inst.id in dataset.wrong_ids]


def _correct_instances(dataset: EvalDataset) -> list[Instance]:
    return [inst for inst in dataset.instances if inst.id in dataset.correct_ids]


def _request(config: DiscoveryConfig, prompt: str, cache_tag: str = "") -> ChatRequest:
    return ChatRequest(
        model_id=config.model_id,
        messages=(("user", prompt),),
        temperature=0.0,
        cache_tag=cache_tag,
    )


def _complete_json(gateway: LlmGateway, request: ChatRequest) -> dict:
    """One completion with a single repair re-prompt on unparseable JSON."""
    reply = gateway.complete(request).content
    obj = parse_json_object(reply)
    if obj is not None:
        return obj
    repair = replace(
        request,
        messages=request.messages + (("assistant", reply), ("user", prompts.JSON_REPAIR)),
    )
    reply = gateway.complete(repair).content
    obj = parse_json_object(reply)
    if obj is None:
        raise DiscoveryError(f"model reply is not valid JSON after repair: {reply[:200]!r}")
    return obj


def _hypotheses_from_json(obj: dict) -> list[str]:
    keyed = []
    for key, value in obj.items():
        if not key.startswith("hypothesis"):
            continue
        suffix = key[len("hypothesis"):]
        try:
            index = int(suffix)
        except ValueError:
            continue
        keyed.append((index, value))
    keyed.sort()
    out = []
    for _, value in keyed:
        if not isinstance(value, str):
            continue
        if value.strip().lower() == "none":
            continue
        out.append(value.strip())
    return out


def direct_patterns(
    dataset: EvalDataset,
    config: DiscoveryConfig,
    gateway: LlmGateway,
) -> list[FailurePattern]:
    """Prompt over the wrong instances and collect the returned hypotheses."""
    wrong = _wrong_instances(dataset)
    if not wrong:
        raise DiscoveryError("dataset has no wrong instances to describe")
    rng = random.Random(config.seed)
    wrong = _sample(wrong, config.max_instances_per_prompt, rng, "wrong")
    block = _instance_block(wrong, config.use_cot)
    if config.num_patterns is not None:
        prompt = prompts.DIRECT_COUNTED.format(num_hyps=config.num_patterns, error_instances=block)
    else:
        prompt = prompts.DIRECT_UNSPECIFIED.format(error_instances=block)
    obj = _complete_json(gateway, _request(config, prompt))
    hypotheses = _hypotheses_from_json(obj)
    return [
        FailurePattern(text=text, method="direct", source_group=None, rank=i)
        for i, text in enumerate(hypotheses)
    ]


def _validate_candidate(
    candidate: str,
    instances: Sequence[Instance],
    config: DiscoveryConfig,
    gateway: LlmGateway,
) -> float:
    """Fraction of instances the model says the hypothesis applies to."""
    if not instances:
        return 0.0
    applies = 0
    for inst in instances:
        prompt = prompts.VALIDATOR.format(
            hypothesis=candidate, instance=_render_instance(inst, config.use_cot)
        )
        reply = gateway.complete(_request(config, prompt)).content.strip().lower()
        word = reply.split()[0].strip(".,!\"'") if reply else ""
        if word == "yes":
            applies += 1
        elif word != "no":
            log.warning("validator reply %r is not yes/no; counting as does-not-apply", reply[:40])
    return applies / len(instances)


def contrastive_patterns(
    dataset: EvalDataset,
    config: DiscoveryConfig,
    gateway: LlmGateway,
) -> list[FailurePattern]:
    """Generate candidates from contrasted samples, validate, keep the top scorers.

    Each candidate's score is mean applicability over the wrong sample minus
    mean applicability over the correct sample, so it lives in [-1, 1].
    Validation stops early once num_patterns candidates clear the score floor.
    """
    wrong = _wrong_instances(dataset)
    correct = _correct_instances(dataset)
    if not wrong or not correct:
        raise DiscoveryError("contrastive generation needs both wrong and correct instances")
    rng = random.Random(config.seed)
    wrong_sample = _sample(wrong, config.contrast_sample_size, rng, "wrong")
    correct_sample = _sample(correct, config.contrast_sample_size, rng, "correct")

    prompt = prompts.CONTRASTIVE.format(
        error_instances=_instance_block(wrong_sample, config.use_cot),
        correct_instances=_instance_block(correct_sample, config.use_cot),
        domain_description=config.domain_description,
    )
    reply = gateway.complete(_request(config, prompt)).content
    candidates = parse_bullets(reply)[: config.max_candidates]
    if not candidates:
        raise DiscoveryError(f"no candidate hypotheses parsed from reply: {reply[:200]!r}")

    val_wrong = _sample(wrong, config.validation_sample_size, rng, "wrong-validation")
    val_correct = _sample(correct, config.validation_sample_size, rng, "correct-validation")

    scored: list[tuple[float, int, str]] = []
    clearing_floor = 0
    for index, candidate in enumerate(candidates):
        score = _validate_candidate(candidate, val_wrong, config, gateway) - _validate_candidate(
            candidate, val_correct, config, gateway
        )
        scored.append((score, index, candidate))
        if score > config.score_floor:
            clearing_floor += 1
        if config.num_patterns is not None and clearing_floor >= config.num_patterns:
            log.info("early stop after %d candidates: %d cleared the score floor", index + 1, clearing_floor)
            break

    scored.sort(key=lambda item: (-item[0], item[1]))
    keep = scored if config.num_patterns is None else scored[: config.num_patterns]
    return [
        FailurePattern(text=text, method="contrastive", source_group=None, rank=i)
        for i, (_, _, text) in enumerate(keep)
    ]


def _greedy_ball_regions(
    dataset: EvalDataset,
    store: EmbeddingStore,
    num_regions: int,
) -> list[list[str]]:
    """Pick embedding balls that maximize newly covered wrong instances.

    Every instance is a candidate center; for each center the admissible
    balls are the nearest-neighbor prefixes with size in [0.03, 0.2] of the dataset and
    wrong fraction >= 0.33. Selection is greedy on uncovered wrong counts,
    with ties broken toward smaller balls and earlier centers.
    """
    ids = [inst.id for inst in dataset.instances]
    n = len(ids)
    min_size = max(1, int(np.ceil(REGION_MIN_SIZE_FRACTION * n)))
    max_size = int(np.floor(REGION_MAX_SIZE_FRACTION * n))
    if min_size > max_size:
        log.warning("dataset too small for region constraints (|D|=%d)", n)
        return []
    wrong_mask = np.array([i in dataset.wrong_ids for i in ids], dtype=bool)
    dists = store.pairwise_distances(ids)
    # stable order: distance, then position, so ties never depend on memory layout
    order = np.argsort(dists, axis=1, kind="stable")

    covered = np.zeros(n, dtype=bool)
    regions: list[list[str]] = []
    for _ in range(num_regions):
        best = None  # (new_wrong, -size, center_index, member_indices)
        for center in range(n):
            neighbor_order = order[center]
            wrong_prefix = np.cumsum(wrong_mask[neighbor_order])
            new_prefix = np.cumsum(wrong_mask[neighbor_order] & ~covered[neighbor_order])
            for size in range(min_size, max_size + 1):
                if wrong_prefix[size - 1] / size < REGION_MIN_WRONG_FRACTION:
                    continue
                new_wrong = int(new_prefix[size - 1])
                key = (new_wrong, -size, -center)
                if best is None or key > best[0]:
                    best = (key, neighbor_order[:size])
        if best is None or best[0][0] == 0:
            break
        member_indices = best[1]
        covered[member_indices[wrong_mask[member_indices]]] = True
        regions.append([ids[i] for i in member_indices])
    if len(regions) < num_regions:
        log.warning(
            "found %d/%d regions satisfying size in [%.2f, %.2f] of the dataset and wrong fraction >= %.2f",
            len(regions), num_regions,
            REGION_MIN_SIZE_FRACTION, REGION_MAX_SIZE_FRACTION, REGION_MIN_WRONG_FRACTION,
        )
    return regions


def _describe_and_refine(
    member_ids: list[str],
    dataset: EvalDataset,
    store: EmbeddingStore,
    config: DiscoveryConfig,
    gateway: LlmGateway,
    cache_tag: str,
) -> str:
    members = [dataset.instance(i) for i in member_ids]
    block = _instance_block(members, config.use_cot)
    obj = _complete_json(gateway, _request(config, prompts.REGION_DESCRIBE.format(region_instances=block), cache_tag))
    description = str(obj.get("description", "")).strip()
    if not description:
        raise DiscoveryError("region description reply lacked a 'description' field")

    member_set = set(member_ids)
    outside = [i for i in (inst.id for inst in dataset.instances) if i not in member_set]
    if not outside or config.refine_rounds < 1 or config.counterexample_count < 1:
        return description
    centroid = np.mean([store.vector(i) for i in member_ids], axis=0)
    by_distance = sorted(outside, key=lambda i: (float(np.linalg.norm(store.vector(i) - centroid)), i))
    counterexamples = [dataset.instance(i) for i in by_distance[: config.counterexample_count]]
    counter_block = _instance_block(counterexamples, config.use_cot)
    for round_index in range(config.refine_rounds):
        prompt = prompts.REGION_REFINE.format(description=description, counterexamples=counter_block)
        obj = _complete_json(gateway, _request(config, prompt, f"{cache_tag}-refine{round_index}"))
        refined = str(obj.get("description", "")).strip()
        if not refined:
            raise DiscoveryError("region refinement reply lacked a 'description' field")
        description = refined
    return description


def region_patterns(
    dataset: EvalDataset,
    store: EmbeddingStore,
    config: DiscoveryConfig,
    gateway: LlmGateway,
) -> list[FailurePattern]:
    """Embedding-ball region discovery with description refinement."""
    if config.num_patterns is None:
        raise DiscoveryError("region discovery requires num_patterns")
    missing = store.missing(inst.id for inst in dataset.instances)
    if missing:
        raise DiscoveryError(f"instances without embeddings: {missing[:10]}")
    regions = _greedy_ball_regions(dataset, store, config.num_patterns)
    out = []
    for i, member_ids in enumerate(regions):
        text = _describe_and_refine(member_ids, dataset, store, config, gateway, cache_tag=f"ball-{i}")
        out.append(FailurePattern(text=text, method="regions", source_group=f"ball-{i}", rank=i))
    return out


def describe_region(
    region_member_texts: Sequence[str],
    gateway: LlmGateway,
    config: DiscoveryConfig | None = None,
    source_group: str | None = None,
) -> FailurePattern:
    """Single-hypothesis description of one mapper error region."""
    if not region_member_texts:
        raise DiscoveryError("cannot describe an empty region")
    config = config or DiscoveryConfig()
    block = "\n\n".join(region_member_texts)
    prompt = prompts.DIRECT_COUNTED.format(num_hyps=1, error_instances=block)
    obj = _complete_json(gateway, _request(config, prompt))
    hypotheses = _hypotheses_from_json(obj)
    if not hypotheses:
        raise DiscoveryError("region description reply contained no hypothesis")
    return FailurePattern(text=hypotheses[0], method="mapper", source_group=source_group, rank=0)


def mapper_patterns(
    dataset: EvalDataset,
    store: EmbeddingStore,
    config: DiscoveryConfig,
    gateway: LlmGateway,
    n_intervals: int = 100,
    overlap: float = 0.5,
    min_samples: int = 3,
) -> tuple[list[FailurePattern], list[ErrorRegion]]:
    """Build the mapper graph, merge error regions, and describe the top k."""
    if config.num_patterns is None:
        raise DiscoveryError("mapper discovery requires num_patterns")
    norms = [store.l2_norm(inst.id) for inst in dataset.instances]
    cover = build_cover(norms, n_intervals=n_intervals, overlap=overlap)
    graph = build_graph(store, dataset, cover, min_samples=min_samples)
    regions = top_k_regions(greedy_merge(graph, dataset), config.num_patterns)
    patterns = []
    for i, region in enumerate(regions):
        wrong_texts = [
            _render_instance(dataset.instance(mid), config.use_cot)
            for mid in sorted(region.member_ids & dataset.wrong_ids)
        ]
        pattern = describe_region(
            wrong_texts, gateway, config=config, source_group=f"region-{region.region_id}"
        )
        patterns.append(replace(pattern, rank=i))
    return patterns, regions


def write_patterns_json(patterns: Sequence[FailurePattern], path: str | Path) -> None:
    payload = [p.to_json_dict() for p in patterns]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_patterns_json(path: str | Path) -> list[FailurePattern]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        FailurePattern(
            text=rec["text"],
            method=rec["method"],
            source_group=rec.get("source_group"),
            rank=rec.get("rank", i),
        )
        for i, rec in enumerate(payload)
    ]
