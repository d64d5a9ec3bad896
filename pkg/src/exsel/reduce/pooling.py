"""Cluster-indexed example pools and round-robin candidate selection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from exsel.corpus import Example

NOISE = -1


@dataclass(frozen=True)
class ClusteredPool:
    """Examples with per-example cluster assignment (noise = -1).

    `cluster_members[c]` lists member indices into `examples`, ascending.
    Cluster ids must be dense 0..n_clusters-1.
    """

    examples: tuple[Example, ...]
    assignment: tuple[int, ...]
    cluster_members: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self) -> None:
        examples = tuple(self.examples)
        assignment = tuple(int(a) for a in self.assignment)
        object.__setattr__(self, "examples", examples)
        object.__setattr__(self, "assignment", assignment)
        if len(examples) != len(assignment):
            raise ValueError(f"{len(examples)} examples but {len(assignment)} assignments")
        ids = sorted({a for a in assignment if a != NOISE})
        if any(a < NOISE for a in assignment):
            raise ValueError("cluster ids must be >= -1")
        if ids and ids != list(range(len(ids))):
            raise ValueError(f"cluster ids must be dense 0..{len(ids) - 1}, got {ids}")
        members: list[list[int]] = [[] for _ in ids]
        for index, cid in enumerate(assignment):
            if cid != NOISE:
                members[cid].append(index)
        object.__setattr__(self, "cluster_members", tuple(tuple(m) for m in members))

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_members)

    @property
    def n_noise(self) -> int:
        return sum(1 for a in self.assignment if a == NOISE)

    def cluster_size(self, cluster_id: int) -> int:
        return len(self.cluster_members[cluster_id])


@dataclass(frozen=True)
class CandidatePool:
    """A size-k working subset of a ClusteredPool, cluster structure retained.

    `selected` holds indices into `source.examples`. `cluster_members`
    re-densifies over the clusters that still have at least one
    selected member (ascending source cluster id); its inner indices
    also point into `source.examples`.
    """

    source: ClusteredPool
    selected: tuple[int, ...]
    k: int
    cluster_members: tuple[tuple[int, ...], ...] = field(init=False)
    source_cluster_ids: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        selected = tuple(int(i) for i in self.selected)
        object.__setattr__(self, "selected", selected)
        if len(set(selected)) != len(selected):
            raise ValueError("selected indices contain duplicates")
        non_noise = sum(len(m) for m in self.source.cluster_members)
        if len(selected) != min(self.k, non_noise):
            raise ValueError(f"selected {len(selected)} examples, expected min(k={self.k}, {non_noise})")
        chosen = set(selected)
        members: list[tuple[int, ...]] = []
        ids: list[int] = []
        for cid, member_list in enumerate(self.source.cluster_members):
            kept = tuple(i for i in member_list if i in chosen)
            if kept:
                members.append(kept)
                ids.append(cid)
        object.__setattr__(self, "cluster_members", tuple(members))
        object.__setattr__(self, "source_cluster_ids", tuple(ids))

    @property
    def examples(self) -> tuple[Example, ...]:
        return self.source.examples

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_members)

    def cluster_size(self, cluster_id: int) -> int:
        return len(self.cluster_members[cluster_id])


def filter_noise(examples: Sequence[Example], assignment: Sequence[int]) -> ClusteredPool:
    """Keep only non-noise examples, re-densify cluster ids, preserve order."""
    if len(examples) != len(assignment):
        raise ValueError("assignment must cover all examples")
    kept_ids = sorted({int(a) for a in assignment if int(a) != NOISE})
    remap = {old: new for new, old in enumerate(kept_ids)}
    survivors: list[Example] = []
    labels: list[int] = []
    for example, raw in zip(examples, assignment):
        cid = int(raw)
        if cid == NOISE:
            continue
        survivors.append(example)
        labels.append(remap[cid])
    return ClusteredPool(examples=tuple(survivors), assignment=tuple(labels))


def build_pool(pool: ClusteredPool, k: int) -> CandidatePool:
    """Round-robin over clusters, one example per visit, largest cluster first.

    Size ties between clusters break by ascending cluster id; within a
    cluster, examples are taken in member-list order. Stops after k
    selections or when every cluster is exhausted.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    order = sorted(range(pool.n_clusters), key=lambda c: (-pool.cluster_size(c), c))
    taken = [0] * pool.n_clusters
    selected: list[int] = []
    while len(selected) < k:
        progressed = False
        for cid in order:
            if len(selected) >= k:
                break
            members = pool.cluster_members[cid]
            if taken[cid] < len(members):
                selected.append(members[taken[cid]])
                taken[cid] += 1
                progressed = True
        if not progressed:
            break
    return CandidatePool(source=pool, selected=tuple(selected), k=k)
