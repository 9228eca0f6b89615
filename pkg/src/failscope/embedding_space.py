"""Embedding storage, neighborhood queries, elbow epsilon, and DBSCAN.

Distances are Euclidean throughout. Exact O(n^2) neighbor search: the
datasets here are desk-scale, so no ANN index is warranted.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np


class EmbeddingError(ValueError):
    pass


class ElbowResult(NamedTuple):
    eps: float
    degenerate: bool


class EmbeddingStore:
    """Immutable map of instance id -> float64 vector, all the same dimension."""

    def __init__(self, vectors: Mapping[str, Sequence[float]], model_id: str | None = None):
        if not vectors:
            raise EmbeddingError("embedding store needs at least one vector")
        self.model_id = model_id
        self._vectors: dict[str, np.ndarray] = {}
        dim = None
        for instance_id, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise EmbeddingError(f"vector for {instance_id!r} is not one-dimensional")
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise EmbeddingError(
                    f"vector for {instance_id!r} has dim {arr.shape[0]}, expected {dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise EmbeddingError(f"vector for {instance_id!r} has NaN/Inf components")
            self._vectors[instance_id] = arr
        self.dim = int(dim)  # type: ignore[arg-type]

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, instance_id: str) -> bool:
        return instance_id in self._vectors

    @property
    def ids(self) -> list[str]:
        return list(self._vectors.keys())

    def vector(self, instance_id: str) -> np.ndarray:
        try:
            return self._vectors[instance_id]
        except KeyError:
            raise EmbeddingError(f"no embedding for instance {instance_id!r}") from None

    def l2_norm(self, instance_id: str) -> float:
        return float(np.linalg.norm(self.vector(instance_id)))

    def missing(self, ids: Iterable[str]) -> list[str]:
        return sorted(i for i in ids if i not in self._vectors)

    def _matrix(self, ids: Sequence[str]) -> np.ndarray:
        return np.stack([self.vector(i) for i in ids])

    def pairwise_distances(self, ids: Sequence[str]) -> np.ndarray:
        pts = self._matrix(ids)
        sq = np.sum(pts**2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
        np.maximum(d2, 0.0, out=d2)
        return np.sqrt(d2)

    def kth_neighbor_distances(self, ids: Sequence[str], k: int) -> list[float]:
        """Distance from each id to its k-th nearest other point, sorted descending."""
        if k < 1:
            raise EmbeddingError(f"k must be >= 1, got {k}")
        if k >= len(ids):
            raise EmbeddingError(f"k={k} must be smaller than the number of points ({len(ids)})")
        dists = self.pairwise_distances(ids)
        # column 0 is the self-distance (0); column k is the k-th nearest other
        part = np.sort(dists, axis=1)[:, k]
        return sorted((float(v) for v in part), reverse=True)

    def dbscan(
        self,
        ids: Sequence[str],
        eps: float,
        min_samples: int,
    ) -> tuple[list[set[str]], set[str]]:
        """Density clustering over the given ids.

        A core point has >= min_samples neighbors within eps, counting
        itself. Clusters are connected components of core points plus the
        border points they reach; everything else is noise. Border points
        reachable from several clusters go to the cluster of the earliest
        core (in the given id ordering), which makes the output a
        deterministic function of the id ordering.
        """
        if eps <= 0:
            raise EmbeddingError(f"eps must be positive, got {eps}")
        if min_samples < 1:
            raise EmbeddingError(f"min_samples must be >= 1, got {min_samples}")
        ids = list(ids)
        n = len(ids)
        if n == 0:
            return [], set()
        dists = self.pairwise_distances(ids)
        within = dists <= eps
        neighbor_counts = within.sum(axis=1)  # includes self
        is_core = neighbor_counts >= min_samples

        labels = np.full(n, -1, dtype=np.int64)
        cluster = 0
        for start in range(n):
            if not is_core[start] or labels[start] != -1:
                continue
            # BFS over the core graph, in index order
            queue = [start]
            labels[start] = cluster
            while queue:
                node = queue.pop(0)
                for other in np.nonzero(within[node])[0]:
                    if is_core[other] and labels[other] == -1:
                        labels[other] = cluster
                        queue.append(other)
            cluster += 1

        # border point assignment: earliest core within eps decides the cluster
        for i in range(n):
            if is_core[i] or labels[i] != -1:
                continue
            for j in range(n):
                if is_core[j] and within[i, j]:
                    labels[i] = labels[j]
                    break

        clusters: list[set[str]] = [set() for _ in range(cluster)]
        noise: set[str] = set()
        for i, label in enumerate(labels):
            if label == -1:
                noise.add(ids[i])
            else:
                clusters[label].add(ids[i])
        return clusters, noise

    @classmethod
    def from_jsonl(cls, path: str | Path, model_id: str | None = None) -> "EmbeddingStore":
        """Read {"instance_id": str, "vector": [float, ...]} lines."""
        path = Path(path)
        vectors: dict[str, list[float]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise EmbeddingError(f"{path}: malformed JSON on line {line_no}: {exc}") from exc
                instance_id = obj.get("instance_id")
                vec = obj.get("vector")
                if not instance_id or not isinstance(vec, list):
                    raise EmbeddingError(f"{path}: line {line_no} needs instance_id and vector")
                if instance_id in vectors:
                    raise EmbeddingError(f"{path}: duplicate embedding for {instance_id!r} on line {line_no}")
                vectors[instance_id] = vec
        return cls(vectors, model_id=model_id)


def fetch_store(
    gateway,
    model_id: str,
    id_text_pairs: Sequence[tuple[str, str]],
    batch_size: int = 64,
) -> EmbeddingStore:
    """Build a store by embedding instance texts over an HTTP gateway."""
    if batch_size < 1:
        raise EmbeddingError(f"batch_size must be >= 1, got {batch_size}")
    vectors: dict[str, list[float]] = {}
    pairs = list(id_text_pairs)
    for start in range(0, len(pairs), batch_size):
        batch = pairs[start : start + batch_size]
        embedded = gateway.embed(model_id, [text for _, text in batch])
        for (instance_id, _), vec in zip(batch, embedded):
            vectors[instance_id] = vec
    return EmbeddingStore(vectors, model_id=model_id)


def elbow_eps(sorted_kdistances: Sequence[float]) -> ElbowResult:
    """Knee of a descending k-distance curve, Kneedle-style.

    Picks the point with maximum perpendicular distance from the chord
    joining the curve's endpoints. A flat or perfectly linear curve has no
    knee; then the last value is returned with the degenerate flag set.
    """
    ys = np.asarray(sorted_kdistances, dtype=np.float64)
    if ys.size < 3:
        raise EmbeddingError(f"need at least 3 k-distances, got {ys.size}")
    if np.any(np.diff(ys) > 1e-12):
        raise EmbeddingError("k-distances must be sorted in descending order")
    n = ys.size
    x0, y0 = 0.0, ys[0]
    x1, y1 = float(n - 1), ys[-1]
    dx, dy = x1 - x0, y1 - y0
    chord_len = float(np.hypot(dx, dy))
    xs = np.arange(n, dtype=np.float64)
    # |cross product| of (point - start) with the chord direction
    dist = np.abs(dy * (xs - x0) - dx * (ys - y0)) / chord_len
    best = int(np.argmax(dist))
    scale = max(abs(y0), abs(y1), 1.0)
    if dist[best] <= 1e-12 * scale:
        return ElbowResult(eps=float(ys[-1]), degenerate=True)
    return ElbowResult(eps=float(ys[best]), degenerate=False)
