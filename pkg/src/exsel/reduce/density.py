"""Density-based clustering with noise, in the HDBSCAN family.

Pipeline: core distances -> mutual reachability -> minimum spanning tree
-> single-linkage hierarchy -> condensed tree (clusters below the
minimum size dissolve into point fall-outs) -> leaf cluster selection
with an epsilon merge threshold -> labels with noise as -1.

Conventions, fixed for determinism:
  - Euclidean metric.
  - Core distance of a point is its distance to the min_samples-th
    nearest neighbor counting the point itself, so min_samples=1 makes
    mutual reachability collapse to the raw metric.
  - Leaf selection only; the hierarchy root is never a cluster, so an
    all-noise result is possible and valid.
  - Cluster labels are dense ints assigned by ascending hierarchy node
    id; noise is -1.

Memory stays O(n): mutual-reachability rows are produced on demand
inside Prim's algorithm instead of materializing the n x n matrix.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

NOISE = -1

_CORE_CHUNK_FLOATS = 4_000_000  # ~32 MB of pairwise distances per block


class _UnionFind:
    def __init__(self, size: int) -> None:
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        self.parent[self.find(a)] = self.find(b)


@dataclass(frozen=True)
class ClusteringParams:
    min_cluster_size: int = 9
    min_samples: int = 1
    cluster_selection_epsilon: float = 0.18

    def __post_init__(self) -> None:
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if self.cluster_selection_epsilon < 0:
            raise ValueError("cluster_selection_epsilon must be >= 0")


def core_distances(points: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance from each point to its min_samples-th neighbor, self included."""
    n = points.shape[0]
    k = min(min_samples, n) - 1
    if k <= 0:
        return np.zeros(n)
    core = np.empty(n)
    rows_per_block = max(1, _CORE_CHUNK_FLOATS // n)
    for start in range(0, n, rows_per_block):
        block = cdist(points[start : start + rows_per_block], points)
        core[start : start + rows_per_block] = np.partition(block, k, axis=1)[:, k]
    return core


def mutual_reachability_mst(points: np.ndarray, core: np.ndarray) -> list[tuple[int, int, float]]:
    """Prim's MST over mutual-reachability distances, one distance row at a time.

    Returns n-1 edges (a, b, weight). Ties resolve to the lowest point
    index, so output is deterministic for a fixed input order.
    """
    n = points.shape[0]
    if n == 1:
        return []
    in_tree = np.zeros(n, dtype=bool)
    best_dist = np.full(n, np.inf)
    best_from = np.zeros(n, dtype=np.int64)
    current = 0
    in_tree[0] = True
    edges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        delta = points - points[current]
        row = np.sqrt(np.einsum("ij,ij->i", delta, delta))
        reach = np.maximum(np.maximum(row, core), core[current])
        reach[in_tree] = np.inf
        closer = reach < best_dist
        best_dist[closer] = reach[closer]
        best_from[closer] = current
        best_dist[in_tree] = np.inf
        nxt = int(np.argmin(best_dist))
        edges.append((int(best_from[nxt]), nxt, float(best_dist[nxt])))
        in_tree[nxt] = True
        current = nxt
    return edges


def single_linkage(edges: list[tuple[int, int, float]], n: int) -> list[tuple[int, int, float, int]]:
    """Merge MST edges ascending by weight into a dendrogram.

    Row i merges two current roots into new node n+i and records
    (left_root, right_root, weight, member_count).
    """
    order = sorted(range(len(edges)), key=lambda i: edges[i][2])
    uf = _UnionFind(n + len(edges))
    node_for_root = list(range(n))
    sizes = [1] * (n + len(edges))
    rows: list[tuple[int, int, float, int]] = []
    for new_index, edge_index in enumerate(order):
        a, b, weight = edges[edge_index]
        ra, rb = uf.find(a), uf.find(b)
        left, right = node_for_root[ra], node_for_root[rb]
        new_node = n + new_index
        size = sizes[left] + sizes[right]
        sizes[new_node] = size
        rows.append((left, right, weight, size))
        uf.union(ra, rb)
        node_for_root[uf.find(ra)] = new_node
    return rows


def _subtree_points(linkage: list[tuple[int, int, float, int]], n: int, node: int) -> list[int]:
    points: list[int] = []
    stack = [node]
    while stack:
        cur = stack.pop()
        if cur < n:
            points.append(cur)
        else:
            left, right, _, _ = linkage[cur - n]
            stack.append(left)
            stack.append(right)
    return points


def condense_tree(
    linkage: list[tuple[int, int, float, int]], n: int, min_cluster_size: int
) -> list[tuple[int, int, float, int]]:
    """Rewrite the dendrogram top-down into (parent, child, lambda, child_size) rows.

    lambda = 1/merge-distance. A split keeps both sides as clusters only
    when both have at least min_cluster_size points; smaller sides
    dissolve into per-point fall-out rows; a one-sided split continues
    the parent cluster through the large side. Cluster node ids start at
    n (the root) and grow in traversal order.
    """
    if not linkage:
        return []
    root = n + len(linkage) - 1
    relabel: dict[int, int] = {root: n}
    next_label = n + 1
    ignore: set[int] = set()
    rows: list[tuple[int, int, float, int]] = []
    queue: deque[int] = deque([root])
    while queue:
        node = queue.popleft()
        if node in ignore or node < n:
            continue
        left, right, distance, _ = linkage[node - n]
        lam = 1.0 / distance if distance > 0.0 else math.inf
        left_count = 1 if left < n else linkage[left - n][3]
        right_count = 1 if right < n else linkage[right - n][3]
        label = relabel[node]

        if left_count >= min_cluster_size and right_count >= min_cluster_size:
            relabel[left] = next_label
            next_label += 1
            rows.append((label, relabel[left], lam, left_count))
            relabel[right] = next_label
            next_label += 1
            rows.append((label, relabel[right], lam, right_count))
            queue.append(left)
            queue.append(right)
        elif left_count < min_cluster_size and right_count < min_cluster_size:
            for point in _subtree_points(linkage, n, left):
                rows.append((label, point, lam, 1))
            for point in _subtree_points(linkage, n, right):
                rows.append((label, point, lam, 1))
            ignore.add(left)
            ignore.add(right)
        elif left_count < min_cluster_size:
            relabel[right] = label
            for point in _subtree_points(linkage, n, left):
                rows.append((label, point, lam, 1))
            ignore.add(left)
            queue.append(right)
        else:
            relabel[left] = label
            for point in _subtree_points(linkage, n, right):
                rows.append((label, point, lam, 1))
            ignore.add(right)
            queue.append(left)
    return rows


def _cluster_rows(condensed: list[tuple[int, int, float, int]]) -> list[tuple[int, int, float, int]]:
    return [row for row in condensed if row[3] > 1]


def _birth_eps(cluster_rows: list[tuple[int, int, float, int]], node: int) -> float:
    for parent, child, lam, _ in cluster_rows:
        if child == node:
            return 1.0 / lam if lam > 0 and not math.isinf(lam) else 0.0
    return math.inf  # the root has no birth row


def _select_leaves_with_epsilon(
    condensed: list[tuple[int, int, float, int]], n: int, epsilon: float
) -> set[int]:
    """Leaf clusters, except leaves born below the epsilon scale, which are
    replaced by their first ancestor whose own birth scale clears it."""
    clusters = _cluster_rows(condensed)
    if not clusters:
        return set()
    parents = {row[0] for row in clusters}
    children = {row[1] for row in clusters}
    leaves = sorted(children - parents)
    if epsilon <= 0.0:
        return set(leaves)
    parent_of = {row[1]: row[0] for row in clusters}
    root = n
    selected: set[int] = set()
    absorbed: set[int] = set()
    for leaf in leaves:
        if leaf in absorbed:
            continue
        if _birth_eps(clusters, leaf) >= epsilon:
            selected.add(leaf)
            continue
        node = leaf
        while True:
            parent = parent_of[node]
            if parent == root:
                # merging all the way up would make one cluster of everything;
                # keep the deepest node reached instead
                break
            node = parent
            if _birth_eps(clusters, node) >= epsilon:
                break
        selected.add(node)
        stack = [node]
        while stack:
            cur = stack.pop()
            for parent, child, _, _ in clusters:
                if parent == cur:
                    absorbed.add(child)
                    stack.append(child)
    return selected


def _label_points(
    condensed: list[tuple[int, int, float, int]], n: int, selected: set[int]
) -> np.ndarray:
    labels = np.full(n, NOISE, dtype=np.int64)
    if not condensed or not selected:
        return labels
    max_node = max(max(row[0], row[1]) for row in condensed)
    uf = _UnionFind(max_node + 1)
    for parent, child, _, _ in condensed:
        if child not in selected:
            uf.union(child, parent)
    dense = {node: i for i, node in enumerate(sorted(selected))}
    for point in range(n):
        root = uf.find(point)
        if root in dense:
            labels[point] = dense[root]
    return labels


def cluster(points: np.ndarray, params: ClusteringParams) -> np.ndarray:
    """Cluster rows of `points`; returns per-row labels with noise as -1.

    Deterministic for a fixed row order. All-noise output is valid.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-d array")
    n = points.shape[0]
    if n < params.min_cluster_size:
        return np.full(n, NOISE, dtype=np.int64)
    core = core_distances(points, params.min_samples)
    edges = mutual_reachability_mst(points, core)
    linkage = single_linkage(edges, n)
    condensed = condense_tree(linkage, n, params.min_cluster_size)
    selected = _select_leaves_with_epsilon(condensed, n, params.cluster_selection_epsilon)
    labels = _label_points(condensed, n, selected)

    # guard the minimum-size invariant (construction already implies it)
    counts = np.bincount(labels[labels >= 0], minlength=0)
    small = {cid for cid, count in enumerate(counts) if 0 < count < params.min_cluster_size}
    if small:
        labels = np.array([NOISE if lab in small else lab for lab in labels], dtype=np.int64)
    # re-densify in case the guard removed ids
    kept = sorted({int(lab) for lab in labels if lab >= 0})
    remap = {old: new for new, old in enumerate(kept)}
    return np.array([remap.get(int(lab), NOISE) for lab in labels], dtype=np.int64)
