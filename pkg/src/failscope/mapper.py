"""Mapper graph over an embedding space and greedy error-region extraction.

The filter function is the L2 norm. Its range is covered by overlapping
intervals; each interval's instances are clustered with DBSCAN (per-slice
epsilon from the k-distance elbow); every cluster becomes a node and nodes
sharing members are joined by an edge. Erroneous nodes are then merged
greedily while the merge strictly increases the error score, and the top-k
merged regions are reported.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .corpus import EvalDataset
from .embedding_space import EmbeddingStore, elbow_eps
from .metrics import GroupMetrics, UNBOUNDED, score_key, _score_from_counts

log = logging.getLogger(__name__)

# DBSCAN with eps=0 is illegal but co-located points still must cluster;
# any positive eps below real inter-point distances behaves identically.
_MIN_EPS = 1e-12


class MapperError(ValueError):
    pass


@dataclass(frozen=True)
class IntervalCover:
    n_intervals: int
    overlap: float
    intervals: tuple[tuple[float, float], ...]

    def containing(self, value: float) -> list[int]:
        return [i for i, (lo, hi) in enumerate(self.intervals) if lo <= value <= hi]


@dataclass(frozen=True)
class MapperNode:
    node_id: int
    interval_index: int
    member_ids: frozenset[str]


@dataclass(frozen=True)
class MapperGraph:
    nodes: tuple[MapperNode, ...]
    edges: frozenset[tuple[int, int]]

    def node(self, node_id: int) -> MapperNode:
        return self.nodes[node_id]

    def neighbors(self, node_id: int) -> set[int]:
        out: set[int] = set()
        for u, v in self.edges:
            if u == node_id:
                out.add(v)
            elif v == node_id:
                out.add(u)
        return out

    def to_node_link_dict(self) -> dict:
        return {
            "nodes": [
                {
                    "id": n.node_id,
                    "interval": n.interval_index,
                    "members": sorted(n.member_ids),
                }
                for n in self.nodes
            ],
            "links": [{"source": u, "target": v} for u, v in sorted(self.edges)],
        }


@dataclass(frozen=True)
class ErrorRegion:
    region_id: int
    member_ids: frozenset[str]
    constituent_nodes: frozenset[int]
    metrics: GroupMetrics

    def to_json_dict(self) -> dict:
        return {
            "region_id": self.region_id,
            "member_ids": sorted(self.member_ids),
            "constituent_nodes": sorted(self.constituent_nodes),
            "metrics": self.metrics.to_json_dict(),
        }


def build_cover(
    norms: Sequence[float],
    n_intervals: int = 100,
    overlap: float = 0.5,
) -> IntervalCover:
    """Overlapping interval cover of [min(norms), max(norms)].

    With interval length l and overlap fraction p, consecutive intervals
    share p*l, so n*(1-p)*l + p*l spans the range exactly:
    l = range / (n*(1-p) + p), stride = (1-p)*l.
    """
    if not norms:
        raise MapperError("need at least one norm to build a cover")
    if not 0 <= overlap < 1:
        raise MapperError(f"overlap must be in [0, 1), got {overlap}")
    if n_intervals < 1:
        raise MapperError(f"n_intervals must be >= 1, got {n_intervals}")
    lo, hi = min(norms), max(norms)
    span = hi - lo
    if span == 0:
        return IntervalCover(n_intervals=1, overlap=overlap, intervals=((lo, hi),))
    length = span / (n_intervals * (1 - overlap) + overlap)
    stride = (1 - overlap) * length
    intervals = []
    for i in range(n_intervals):
        start = lo + i * stride
        intervals.append((start, start + length))
    # guard the right edge against accumulated float error
    last_lo, _ = intervals[-1]
    intervals[-1] = (last_lo, max(intervals[-1][1], hi))
    return IntervalCover(n_intervals=n_intervals, overlap=overlap, intervals=tuple(intervals))


def build_graph(
    store: EmbeddingStore,
    dataset: EvalDataset,
    cover: IntervalCover,
    min_samples: int = 3,
) -> MapperGraph:
    """Cluster each interval slice with DBSCAN and connect overlapping clusters.

    Per-slice epsilon comes from the elbow of that slice's k-distance curve
    (k = min_samples - 1, matching the self-inclusive core rule). DBSCAN
    noise points form no node. Node ids follow (interval, cluster) order,
    so identical inputs give identical graphs.
    """
    ids_in_order = [inst.id for inst in dataset.instances]
    missing = store.missing(ids_in_order)
    if missing:
        shown = ", ".join(missing[:10])
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise MapperError(f"instances without embeddings: {shown}{more}")

    norms = {i: store.l2_norm(i) for i in ids_in_order}
    nodes: list[MapperNode] = []
    for interval_index, (lo, hi) in enumerate(cover.intervals):
        slice_ids = [i for i in ids_in_order if lo <= norms[i] <= hi]
        if len(slice_ids) < min_samples:
            continue  # nothing can be core
        clusters = _cluster_slice(store, slice_ids, min_samples)
        for members in clusters:
            nodes.append(
                MapperNode(
                    node_id=len(nodes),
                    interval_index=interval_index,
                    member_ids=frozenset(members),
                )
            )

    edges: set[tuple[int, int]] = set()
    by_member: dict[str, list[int]] = {}
    for node in nodes:
        for member in node.member_ids:
            by_member.setdefault(member, []).append(node.node_id)
    for node_ids in by_member.values():
        for a in range(len(node_ids)):
            for b in range(a + 1, len(node_ids)):
                u, v = node_ids[a], node_ids[b]
                edges.add((u, v) if u < v else (v, u))
    return MapperGraph(nodes=tuple(nodes), edges=frozenset(edges))


def _cluster_slice(store: EmbeddingStore, slice_ids: list[str], min_samples: int) -> list[set[str]]:
    k = max(1, min_samples - 1)
    if len(slice_ids) <= k:
        return []
    kdists = store.kth_neighbor_distances(slice_ids, k)
    if len(kdists) >= 3:
        eps = elbow_eps(kdists).eps
    else:
        eps = kdists[0]
    clusters, _noise = store.dbscan(slice_ids, max(eps, _MIN_EPS), min_samples)
    return clusters


def _region_metrics(member_ids: frozenset[str], dataset: EvalDataset, label: str) -> GroupMetrics:
    n_wrong = len(member_ids & dataset.wrong_ids)
    n_correct = len(member_ids & dataset.correct_ids)
    total_wrong = len(dataset.wrong_ids)
    if n_correct > 0:
        ratio = n_wrong / n_correct
    else:
        ratio = UNBOUNDED if n_wrong > 0 else 0.0
    return GroupMetrics(
        group_label=label,
        n_wrong=n_wrong,
        n_correct=n_correct,
        coverage=n_wrong / total_wrong,
        error_ratio=ratio,
        error_score=_score_from_counts(n_wrong, n_correct, total_wrong),
    )


@dataclass
class _Region:
    nodes: frozenset[int]
    members: frozenset[str]

    @property
    def region_id(self) -> int:
        return min(self.nodes)


def greedy_merge(graph: MapperGraph, dataset: EvalDataset) -> list[ErrorRegion]:
    """Merge edge-connected erroneous nodes while the error score improves.

    Every node containing at least one wrong instance starts as a region.
    Each round, among all adjacent region pairs whose merged score strictly
    exceeds both parts' scores, the pair with the largest merged score is
    merged (ties: smallest region-id pair). Stops when no merge improves.
    """
    if not dataset.wrong_ids:
        return []
    total_wrong = len(dataset.wrong_ids)

    regions: dict[int, _Region] = {}
    for node in graph.nodes:
        if node.member_ids & dataset.wrong_ids:
            regions[node.node_id] = _Region(nodes=frozenset([node.node_id]), members=node.member_ids)
    if not regions:
        return []

    node_to_region = {nid: rid for rid, region in regions.items() for nid in region.nodes}

    def counts(members: frozenset[str]) -> tuple[int, int]:
        return len(members & dataset.wrong_ids), len(members & dataset.correct_ids)

    def key_of(members: frozenset[str]) -> tuple:
        n_wrong, n_correct = counts(members)
        return score_key(n_wrong, n_correct, total_wrong)

    while True:
        # candidate pairs: regions joined by at least one graph edge
        pair_ids: set[tuple[int, int]] = set()
        for u, v in graph.edges:
            ru = node_to_region.get(u)
            rv = node_to_region.get(v)
            if ru is None or rv is None or ru == rv:
                continue
            pair_ids.add((min(ru, rv), max(ru, rv)))

        best_pair = None
        best_key = None
        for ra, rb in sorted(pair_ids):
            merged_members = regions[ra].members | regions[rb].members
            merged_key = key_of(merged_members)
            if merged_key <= max(key_of(regions[ra].members), key_of(regions[rb].members)):
                continue
            if best_key is None or merged_key > best_key:
                best_key = merged_key
                best_pair = (ra, rb)
        if best_pair is None:
            break
        ra, rb = best_pair
        merged = _Region(
            nodes=regions[ra].nodes | regions[rb].nodes,
            members=regions[ra].members | regions[rb].members,
        )
        del regions[ra], regions[rb]
        regions[merged.region_id] = merged
        for nid in merged.nodes:
            node_to_region[nid] = merged.region_id

    out = []
    for rid in sorted(regions):
        region = regions[rid]
        out.append(
            ErrorRegion(
                region_id=rid,
                member_ids=region.members,
                constituent_nodes=region.nodes,
                metrics=_region_metrics(region.members, dataset, label=f"region-{rid}"),
            )
        )
    return out


def top_k_regions(regions: Sequence[ErrorRegion], k: int) -> list[ErrorRegion]:
    """Top k regions by error score; all of them when fewer exist.

    Unbounded scores rank above every finite score and among themselves by
    n_wrong descending; remaining ties go to the smaller region id.
    """
    if k < 1:
        raise MapperError(f"k must be >= 1, got {k}")

    def sort_key(region: ErrorRegion):
        m = region.metrics
        if m.error_score is UNBOUNDED:
            return (0, -m.n_wrong, region.region_id)
        # total_wrong is constant across one dataset's regions, so this
        # rational is rank-equivalent to the exact error score
        exact = Fraction(m.n_wrong * m.n_wrong, m.n_correct) if m.n_correct else Fraction(0)
        return (1, -exact, region.region_id)

    ranked = sorted(regions, key=sort_key)
    return ranked[:k]


def write_regions_json(regions: Sequence[ErrorRegion], path: str | Path) -> None:
    payload = {"regions": [r.to_json_dict() for r in regions]}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_graph_json(graph: MapperGraph, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(graph.to_node_link_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
