"""Instance ingestion, prediction joining, and meta-label grouping.

File formats (one JSON object per line):
  instances.jsonl    {"id": str, "text": str, "meta_labels": {str: str}, "cot": str?}
  predictions.jsonl  {"instance_id": str, "model": str, "correct": bool}

Adapters map MMLU-style exports (question/choices/subject) and
MathCAMPS-style exports (problem/standard) onto the generic schema.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

log = logging.getLogger(__name__)

FORMATS = ("generic-jsonl", "mmlu", "mathcamps")

_CHOICE_LETTERS = "ABCDEFGHIJ"


class CorpusError(ValueError):
    """Malformed input files or broken dataset invariants."""


@dataclass(frozen=True)
class Instance:
    id: str
    text: str
    meta_labels: dict[str, str] = field(default_factory=dict)
    cot: str | None = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("instance id must be non-empty")
        if not self.text:
            raise CorpusError(f"instance {self.id!r} has empty text")


@dataclass(frozen=True)
class PredictionRecord:
    instance_id: str
    model_id: str
    correct: bool


@dataclass(frozen=True)
class Group:
    """A named subset of instance ids (meta-label group or discovered region)."""

    label: str
    member_ids: frozenset[str]

    def __post_init__(self):
        if not self.label:
            raise CorpusError("group label must be non-empty")


@dataclass(frozen=True)
class EvalDataset:
    """Instances joined with one model's correctness labels.

    `correct_ids` and `wrong_ids` partition the instance ids: they are
    disjoint and together cover every instance.
    """

    model_id: str
    instances: tuple[Instance, ...]
    correct_ids: frozenset[str]
    wrong_ids: frozenset[str]

    def __post_init__(self):
        ids = {inst.id for inst in self.instances}
        if len(ids) != len(self.instances):
            raise CorpusError("duplicate instance ids in dataset")
        overlap = self.correct_ids & self.wrong_ids
        if overlap:
            raise CorpusError(f"ids marked both correct and wrong: {sorted(overlap)[:5]}")
        if self.correct_ids | self.wrong_ids != ids:
            raise CorpusError("correct_ids and wrong_ids do not cover the instance ids")

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def ids(self) -> frozenset[str]:
        return self.correct_ids | self.wrong_ids

    def instance(self, instance_id: str) -> Instance:
        try:
            return self._by_id[instance_id]
        except KeyError:
            raise CorpusError(f"unknown instance id {instance_id!r}") from None

    @property
    def _by_id(self) -> dict[str, Instance]:
        cached = self.__dict__.get("_by_id_cache")
        if cached is None:
            cached = {inst.id: inst for inst in self.instances}
            self.__dict__["_by_id_cache"] = cached
        return cached

    def to_json_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "instances": [
                {
                    "id": i.id,
                    "text": i.text,
                    "meta_labels": dict(sorted(i.meta_labels.items())),
                    **({"cot": i.cot} if i.cot is not None else {}),
                }
                for i in self.instances
            ],
            "correct_ids": sorted(self.correct_ids),
            "wrong_ids": sorted(self.wrong_ids),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "EvalDataset":
        instances = tuple(
            Instance(
                id=rec["id"],
                text=rec["text"],
                meta_labels=dict(rec.get("meta_labels") or {}),
                cot=rec.get("cot"),
            )
            for rec in obj["instances"]
        )
        return cls(
            model_id=obj["model_id"],
            instances=instances,
            correct_ids=frozenset(obj["correct_ids"]),
            wrong_ids=frozenset(obj["wrong_ids"]),
        )


def _read_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: malformed JSON on line {line_no}: {exc}") from exc
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}: line {line_no} is not a JSON object")
            yield line_no, obj


def _require(obj: dict, key: str, path: Path, line_no: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise CorpusError(f"{path}: line {line_no} missing or empty {key!r}")
    return value


def _format_choices(choices: list) -> str:
    lines = []
    for letter, choice in zip(_CHOICE_LETTERS, choices):
        lines.append(f"{letter}: {choice}")
    return "\n".join(lines)


def _parse_generic(obj: dict, path: Path, line_no: int) -> Instance:
    labels = obj.get("meta_labels") or {}
    if not isinstance(labels, dict):
        raise CorpusError(f"{path}: line {line_no} meta_labels must be an object")
    return Instance(
        id=_require(obj, "id", path, line_no),
        text=_require(obj, "text", path, line_no),
        meta_labels={str(k): str(v) for k, v in labels.items()},
        cot=obj.get("cot"),
    )


def _parse_mmlu(obj: dict, path: Path, line_no: int) -> Instance:
    subject = _require(obj, "subject", path, line_no)
    question = _require(obj, "question", path, line_no)
    choices = obj.get("choices") or []
    text = question if not choices else question + "\n" + _format_choices(choices)
    inst_id = obj.get("id") or f"{subject}-{line_no}"
    return Instance(id=inst_id, text=text, meta_labels={"subject": subject}, cot=obj.get("cot"))


def _parse_mathcamps(obj: dict, path: Path, line_no: int) -> Instance:
    standard = _require(obj, "standard", path, line_no)
    problem = _require(obj, "problem", path, line_no)
    inst_id = obj.get("id") or f"{standard}-{line_no}"
    return Instance(id=inst_id, text=problem, meta_labels={"standard": standard}, cot=obj.get("cot"))


_PARSERS = {
    "generic-jsonl": _parse_generic,
    "mmlu": _parse_mmlu,
    "mathcamps": _parse_mathcamps,
}


def load_instances(path: str | Path, format: str = "generic-jsonl") -> list[Instance]:
    """Load instances from a JSONL file in one of the supported formats.

    Raises CorpusError on malformed lines (naming the line number) and on
    duplicate ids.
    """
    if format not in _PARSERS:
        raise CorpusError(f"unknown format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    parser = _PARSERS[format]
    instances: list[Instance] = []
    seen: set[str] = set()
    for line_no, obj in _read_jsonl(path):
        inst = parser(obj, path, line_no)
        if inst.id in seen:
            raise CorpusError(f"{path}: duplicate instance id {inst.id!r} on line {line_no}")
        seen.add(inst.id)
        instances.append(inst)
    return instances


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    """Load prediction records; (instance_id, model) pairs must be unique."""
    path = Path(path)
    records: list[PredictionRecord] = []
    seen: set[tuple[str, str]] = set()
    for line_no, obj in _read_jsonl(path):
        instance_id = _require(obj, "instance_id", path, line_no)
        model_id = _require(obj, "model", path, line_no)
        correct = obj.get("correct")
        if not isinstance(correct, bool):
            raise CorpusError(f"{path}: line {line_no} 'correct' must be a boolean")
        key = (instance_id, model_id)
        if key in seen:
            raise CorpusError(
                f"{path}: duplicate prediction for instance {instance_id!r}, "
                f"model {model_id!r} on line {line_no}"
            )
        seen.add(key)
        records.append(PredictionRecord(instance_id=instance_id, model_id=model_id, correct=correct))
    return records


def join(
    instances: list[Instance],
    predictions: list[PredictionRecord],
    model_id: str,
) -> EvalDataset:
    """Join instances with one model's predictions into an EvalDataset.

    Every instance needs exactly one prediction for `model_id`; duplicates
    are a hard error (a silent overwrite would corrupt error ratios), and
    predictions for unknown instances are ignored with a logged count.
    """
    ids = {inst.id for inst in instances}
    if len(ids) != len(instances):
        raise CorpusError("duplicate instance ids passed to join")
    by_instance: dict[str, bool] = {}
    extra = 0
    for rec in predictions:
        if rec.model_id != model_id:
            continue
        if rec.instance_id not in ids:
            extra += 1
            continue
        if rec.instance_id in by_instance:
            raise CorpusError(
                f"duplicate prediction for instance {rec.instance_id!r}, model {model_id!r}"
            )
        by_instance[rec.instance_id] = rec.correct
    missing = sorted(ids - by_instance.keys())
    if missing:
        shown = ", ".join(missing[:10])
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise CorpusError(f"no prediction for model {model_id!r} on instances: {shown}{more}")
    if extra:
        log.warning("ignored %d prediction(s) for instances not in the dataset", extra)
    correct_ids = frozenset(i for i, ok in by_instance.items() if ok)
    wrong_ids = frozenset(i for i, ok in by_instance.items() if not ok)
    return EvalDataset(
        model_id=model_id,
        instances=tuple(instances),
        correct_ids=correct_ids,
        wrong_ids=wrong_ids,
    )


def group_by_meta_label(dataset: EvalDataset, key: str) -> list[Group]:
    """One Group per distinct value of `key`, sorted by label.

    Instances lacking the key are excluded from grouping (and counted in a
    log message) but remain part of the dataset.
    """
    buckets: dict[str, set[str]] = {}
    missing = 0
    for inst in dataset.instances:
        value = inst.meta_labels.get(key)
        if value is None:
            missing += 1
            continue
        buckets.setdefault(value, set()).add(inst.id)
    if not buckets:
        raise CorpusError(f"meta-label key {key!r} is absent from every instance")
    if missing:
        log.info("%d instance(s) lack meta-label %r and were left ungrouped", missing, key)
    return [Group(label=value, member_ids=frozenset(members)) for value, members in sorted(buckets.items())]


def save_dataset(dataset: EvalDataset, path: str | Path) -> None:
    path = Path(path)
    path.write_text(json.dumps(dataset.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_dataset(path: str | Path) -> EvalDataset:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: not valid JSON: {exc}") from exc
    return EvalDataset.from_json_dict(obj)
