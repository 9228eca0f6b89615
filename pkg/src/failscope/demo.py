"""Demo bundle builder: synthetic corpus + scripted gateway fixtures.

Writes everything needed to run the whole pipeline offline:

  instances.jsonl, predictions.jsonl, embeddings.jsonl   the corpus
  dataset.json                                           joined dataset
  references.json                                        judge references
  study_config.json                                      a small study
  mock_gateway.jsonl                                     request-hash -> reply

The gateway fixtures are produced by replaying the real discovery and judge
code against a deterministic rule-driven backend and recording every
request/response pair, so offline CLI runs replay the exact same calls.
"""

from __future__ import annotations

import hashlib
import json
import random
from pathlib import Path

import numpy as np

from .corpus import EvalDataset, Instance, join, PredictionRecord, save_dataset
from .discovery import (
    DiscoveryConfig,
    contrastive_patterns,
    direct_patterns,
    mapper_patterns,
    region_patterns,
    write_patterns_json,
)
from .judge import DEFAULT_JUDGE_MODEL, GroundTruthPattern, recall
from .llm_gateway import ChatRequest, LlmGateway

DEMO_MODEL = "demo-llm"
DEMO_SEED = 0
DEMO_NUM_PATTERNS = 2
DEMO_JUDGE_RUNS = 3

STANDARDS = {
    "3.NF.A.1": ("Understand a fraction 1/b as the quantity formed by 1 part when a whole "
                 "is partitioned into b equal parts.", "Unit fractions"),
    "8.EE.C.7": ("Solve linear equations in one variable.", "Linear equations"),
    "4.OA.A.3": ("Solve multistep word problems posed with whole numbers and having "
                 "whole-number answers using the four operations.", "Multistep word problems"),
    "6.G.A.1": ("Find the area of right triangles, other triangles, special quadrilaterals, "
                "and polygons by composing into rectangles.", "Area of polygons"),
}

# (standard, n_wrong, n_correct); the first one is the planted hot cluster
COMPOSITION = [
    ("3.NF.A.1", 18, 2),
    ("8.EE.C.7", 5, 20),
    ("4.OA.A.3", 6, 24),
    ("6.G.A.1", 4, 21),
]


def _digest(text: str, n: int = 6) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:n]


class RecordingRuleBackend:
    """Deterministic canned replies derived from each prompt, all recorded."""

    name = "mock"

    def __init__(self):
        self.recorded: dict[str, str] = {}

    def complete(self, request: ChatRequest) -> str:
        reply = self._reply(request)
        self.recorded[request.request_hash()] = reply
        return reply

    def _reply(self, request: ChatRequest) -> str:
        prompt = request.messages[0][1]
        tag = _digest(prompt + request.cache_tag)
        if prompt.startswith("I am a user of an AI system"):
            count = 1
            marker = "generate the "
            if marker in prompt and " most salient" in prompt:
                try:
                    count = int(prompt.split(marker, 1)[1].split(" ", 1)[0])
                except ValueError:
                    count = 2
            hypotheses = {
                f"hypothesis{i}": f"involves computation pattern {tag}-{i}" for i in range(count)
            }
            return json.dumps(hypotheses)
        if prompt.startswith("Group A:"):
            return "\n".join(f'- "mentions dataset feature {tag}-{i}"' for i in range(3))
        if prompt.startswith("A hypothesis about a group of questions"):
            return "yes" if int(tag, 16) % 3 else "no"
        if prompt.startswith("The following questions were grouped together"):
            return json.dumps({"description": f"questions sharing trait {tag}"})
        if prompt.startswith("A group of questions was described as"):
            return json.dumps({"description": f"questions sharing trait {tag}, narrowed"})
        if prompt.startswith("# Instructions for Evaluating"):
            rating = int(tag, 16) % 5 + 1
            return json.dumps({"Additional Comments": [f"auto verdict {tag}"], "Final Rating": rating})
        return json.dumps({"note": f"unmatched prompt {tag}"})


def make_demo_corpus(seed: int = DEMO_SEED):
    """Instances, predictions, and embeddings with one hot error cluster."""
    rng = random.Random(seed)
    np_rng = np.random.default_rng(seed)
    instances: list[Instance] = []
    predictions: list[PredictionRecord] = []
    vectors: dict[str, np.ndarray] = {}

    hot_center = np.array([5.5, 0.0, 0.0])
    hot_ids: list[str] = []
    for standard, n_wrong, n_correct in COMPOSITION:
        for i in range(n_wrong + n_correct):
            inst_id = f"{standard}-{i:03d}"
            a, b = rng.randint(2, 19), rng.randint(2, 9)
            if standard == "3.NF.A.1":
                text = (f"A pizza is cut into {b} equal slices and {a % b + 1} are eaten. "
                        f"What fraction of the pizza is left?")
            elif standard == "8.EE.C.7":
                text = f"Solve for x: {b}x + {a} = {b * rng.randint(2, 9) + a}."
            elif standard == "4.OA.A.3":
                text = (f"A worker packs {a} boxes each holding {b} jars, then removes "
                        f"{rng.randint(1, a)} jars. How many jars remain?")
            else:
                text = (f"A triangle has base {a} cm and height {b} cm. "
                        f"What is its area in square centimeters?")
            cot = f"First consider the numbers {a} and {b}, then apply the operation step by step."
            instances.append(Instance(
                id=inst_id, text=text, meta_labels={"standard": standard}, cot=cot,
            ))
            predictions.append(PredictionRecord(
                instance_id=inst_id, model_id=DEMO_MODEL, correct=False,
            ))
            if standard == "3.NF.A.1":
                hot_ids.append(inst_id)
                vectors[inst_id] = hot_center + np_rng.normal(scale=0.05, size=3)
            else:
                direction = np_rng.normal(size=3)
                direction /= np.linalg.norm(direction)
                vectors[inst_id] = direction * np_rng.uniform(1.0, 10.0)

    # correctness: per standard, the first n_wrong are wrong, except the hot
    # cluster where correct points are spread evenly by embedding norm so no
    # mapper slice of it is all-wrong
    correct_flags: dict[str, bool] = {}
    for standard, n_wrong, n_correct in COMPOSITION:
        ids = [i.id for i in instances if i.meta_labels["standard"] == standard]
        if standard == "3.NF.A.1":
            by_norm = sorted(ids, key=lambda i: float(np.linalg.norm(vectors[i])))
            ranks = {round(k * (len(ids) - 1) / (n_correct - 1)) for k in range(n_correct)}
            correct_set = {by_norm[r] for r in ranks}
        else:
            correct_set = set(ids[n_wrong:])
        for inst_id in ids:
            correct_flags[inst_id] = inst_id in correct_set

    predictions = [
        PredictionRecord(instance_id=p.instance_id, model_id=p.model_id,
                         correct=correct_flags[p.instance_id])
        for p in predictions
    ]
    return instances, predictions, vectors


def make_demo_study_config() -> dict:
    questions = []
    rng = random.Random(4)
    for i in range(8):
        questions.append({
            "id": f"sq{i:02d}",
            "text": f"Study question {i}: would the assistant solve this correctly?",
            "choices": ["Use AI", "Don't use AI", "Uncertain"],
            "subject": ["fractions", "equations", "word-problems"][i % 3],
            "llm_correct": i % 2 == 0,
            "matches_taught_pattern": True,
            "guideline_index": i % 2,
        })
    for i in range(2):
        questions.append({
            "id": f"sn{i:02d}",
            "text": f"No-match study question {i}.",
            "choices": ["Use AI", "Don't use AI", "Uncertain"],
            "subject": "nomatch",
            "llm_correct": True,
            "matches_taught_pattern": False,
            "guideline_index": None,
        })
    practice = [
        {
            "id": f"sp{i:02d}",
            "text": f"Practice question {i}.",
            "choices": ["Use AI", "Don't use AI", "Uncertain"],
            "subject": "fractions",
            "llm_correct": i % 2 == 0,
            "matches_taught_pattern": True,
            "guideline_index": 0,
        }
        for i in range(2)
    ]
    return {
        "study_id": "demo-study",
        "questions": questions,
        "guidelines": [
            "Do not use the LLM for fraction arithmetic.",
            "The LLM is reliable for one-variable linear equations.",
        ],
        "practice_questions": practice,
        "randomize_order": True,
        "require_reasoning": True,
    }


def build_demo_bundle(out_dir: str | Path, seed: int = DEMO_SEED) -> dict[str, Path]:
    """Write the full offline bundle; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    instances, predictions, vectors = make_demo_corpus(seed)

    paths = {
        "instances": out / "instances.jsonl",
        "predictions": out / "predictions.jsonl",
        "embeddings": out / "embeddings.jsonl",
        "dataset": out / "dataset.json",
        "references": out / "references.json",
        "study_config": out / "study_config.json",
        "mock_gateway": out / "mock_gateway.jsonl",
    }

    with open(paths["instances"], "w", encoding="utf-8") as fh:
        for inst in instances:
            rec = {"id": inst.id, "text": inst.text, "meta_labels": inst.meta_labels, "cot": inst.cot}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    with open(paths["predictions"], "w", encoding="utf-8") as fh:
        for p in predictions:
            rec = {"instance_id": p.instance_id, "model": p.model_id, "correct": p.correct}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    with open(paths["embeddings"], "w", encoding="utf-8") as fh:
        for inst_id, vec in vectors.items():
            fh.write(json.dumps({"instance_id": inst_id, "vector": [round(float(v), 9) for v in vec]}) + "\n")

    dataset = join(instances, predictions, DEMO_MODEL)
    save_dataset(dataset, paths["dataset"])

    references = [
        {"label": label, "detailed": detailed, "gist": gist}
        for label, (detailed, gist) in STANDARDS.items()
    ]
    paths["references"].write_text(json.dumps(references, indent=2) + "\n", encoding="utf-8")
    paths["study_config"].write_text(
        json.dumps(make_demo_study_config(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    # replay the real pipeline against the rule backend, recording every call
    backend = RecordingRuleBackend()
    gateway = LlmGateway(backend)
    from .embedding_space import EmbeddingStore

    store = EmbeddingStore(vectors)
    config = DiscoveryConfig(num_patterns=DEMO_NUM_PATTERNS, seed=seed)
    cot_config = DiscoveryConfig(num_patterns=DEMO_NUM_PATTERNS, seed=seed, use_cot=True)
    direct = direct_patterns(dataset, config, gateway)
    direct_patterns(dataset, cot_config, gateway)
    contrastive_patterns(dataset, config, gateway)
    region_patterns(dataset, store, config, gateway)
    mapper_patterns(dataset, store, config, gateway)
    write_patterns_json(direct, out / "patterns_direct.json")
    paths["patterns_direct"] = out / "patterns_direct.json"

    refs = [GroundTruthPattern(label=r["label"], detailed=r["detailed"], gist=r["gist"])
            for r in references]
    recall(direct, refs, "mathcamps", gateway, n_runs=DEMO_JUDGE_RUNS, model_id=DEFAULT_JUDGE_MODEL)

    with open(paths["mock_gateway"], "w", encoding="utf-8") as fh:
        for request_hash in sorted(backend.recorded):
            fh.write(json.dumps(
                {"request_hash": request_hash, "content": backend.recorded[request_hash]},
                sort_keys=True,
            ) + "\n")
    return paths
