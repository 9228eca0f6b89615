"""Shared synthetic fixtures: datasets with planted groups, embedding stores
with planted clusters, and scripted gateways."""

from __future__ import annotations

import random

import numpy as np
import pytest

from failscope.corpus import EvalDataset, Group, Instance
from failscope.embedding_space import EmbeddingStore
from failscope.llm_gateway import LlmGateway, MockBackend


def make_dataset(
    spec: list[tuple[str, int, int]],
    model_id: str = "test-model",
    key: str = "standard",
) -> EvalDataset:
    """Dataset from (label, n_wrong, n_correct) triples; ids are f"{label}-{i}"."""
    instances = []
    wrong: set[str] = set()
    correct: set[str] = set()
    for label, n_wrong, n_correct in spec:
        for i in range(n_wrong + n_correct):
            inst_id = f"{label}-{i}"
            instances.append(
                Instance(
                    id=inst_id,
                    text=f"question {inst_id} about {label}",
                    meta_labels={key: label},
                )
            )
            (wrong if i < n_wrong else correct).add(inst_id)
    return EvalDataset(
        model_id=model_id,
        instances=tuple(instances),
        correct_ids=frozenset(correct),
        wrong_ids=frozenset(wrong),
    )


def group_of(dataset: EvalDataset, label: str) -> Group:
    members = frozenset(
        inst.id for inst in dataset.instances if label in inst.meta_labels.values()
    )
    return Group(label=label, member_ids=members)


def make_planted_embeddings(
    n_total: int = 1000,
    planted_fraction: float = 0.1,
    planted_wrong_rate: float = 0.9,
    background_wrong_rate: float = 0.05,
    dim: int = 3,
    seed: int = 7,
) -> tuple[EvalDataset, EmbeddingStore, set[str]]:
    """Uniform background shell plus one tight off-center cluster of errors.

    Background points have norms spread over [1, 10]; the planted cluster is
    a tight ball whose norms sit near 5.5. Its norm spread is wider than one
    cover stride, so it straddles interval boundaries and must be merged
    back together. The cluster's correct-labeled points are evenly spaced by
    norm rank (both extremes included): every norm-contiguous slice of the
    ball keeps the planted wrong fraction, so no all-wrong fragment node can
    form and merging adjacent fragments strictly raises the error score.
    """
    rng = np.random.default_rng(seed)
    decision_rng = random.Random(seed)
    n_planted = int(n_total * planted_fraction)
    n_background = n_total - n_planted

    vectors: dict[str, np.ndarray] = {}
    planted_ids: set[str] = set()
    wrong: set[str] = set()
    instances = []

    center = np.zeros(dim)
    center[0] = 5.5
    for i in range(n_planted):
        inst_id = f"p{i:04d}"
        planted_ids.add(inst_id)
        vectors[inst_id] = center + rng.normal(scale=0.05, size=dim)
        instances.append(Instance(id=inst_id, text=f"planted question {i}"))
    n_planted_correct = max(2, round(n_planted * (1 - planted_wrong_rate)))
    by_norm = sorted(planted_ids, key=lambda i: float(np.linalg.norm(vectors[i])))
    correct_ranks = {
        round(i * (n_planted - 1) / (n_planted_correct - 1)) for i in range(n_planted_correct)
    }
    planted_correct = {by_norm[r] for r in correct_ranks}
    wrong |= planted_ids - planted_correct

    for i in range(n_background):
        inst_id = f"b{i:04d}"
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        vectors[inst_id] = direction * rng.uniform(1.0, 10.0)
        if decision_rng.random() < background_wrong_rate:
            wrong.add(inst_id)
        instances.append(Instance(id=inst_id, text=f"background question {i}"))

    all_ids = {inst.id for inst in instances}
    dataset = EvalDataset(
        model_id="test-model",
        instances=tuple(instances),
        correct_ids=frozenset(all_ids - wrong),
        wrong_ids=frozenset(wrong),
    )
    return dataset, EmbeddingStore(vectors), planted_ids


def scripted_gateway(table: dict[str, str] | None = None, cache_dir=None) -> LlmGateway:
    return LlmGateway(MockBackend(table or {}), cache_dir=cache_dir)


@pytest.fixture
def small_dataset() -> EvalDataset:
    return make_dataset([("algebra", 4, 2), ("geometry", 1, 5), ("fractions", 3, 3)])
