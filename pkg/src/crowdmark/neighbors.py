"""Exact k-nearest-neighbor search over head points.

Two interchangeable routes: a brute-force reference and a k-d tree. Both
use squared Euclidean distance internally and break distance ties toward
the smaller original point index, so their results are identical down to
the ordering. The tree exists for speed on large annotation sets; the
brute force is the ground truth the tree is checked against.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientPointsError, ParameterError


@dataclass(frozen=True)
class NeighborResult:
    """Neighbors of one query point, nearest first.

    Ties in distance are ordered by ascending point index, which makes the
    result deterministic and lets two search routes be compared with ==.
    """

    query_index: int
    neighbor_indices: tuple[int, ...]
    distances: tuple[float, ...]


def _check_query(points, query_index, k):
    n = len(points)
    if n < 2:
        raise InsufficientPointsError(
            f"need at least 2 points for neighbor search, got {n}"
        )
    if not 0 <= query_index < n:
        raise ParameterError(f"query index {query_index} out of range for {n} points")
    if not 1 <= k <= n - 1:
        raise ParameterError(f"k must be in [1, {n - 1}], got {k}")


def brute_force_knn(points, query_index, k) -> NeighborResult:
    """k nearest neighbors of points[query_index] by exhaustive scan."""
    pts = np.asarray(points, dtype=np.float64)
    _check_query(pts, query_index, k)
    n = len(pts)
    diff = pts - pts[query_index]
    d2 = diff[:, 0] ** 2 + diff[:, 1] ** 2
    # Stable order: squared distance first, original index second.
    order = np.lexsort((np.arange(n), d2))
    order = order[order != query_index][:k]
    return NeighborResult(
        query_index=int(query_index),
        neighbor_indices=tuple(int(i) for i in order),
        distances=tuple(float(np.sqrt(d2[i])) for i in order),
    )


def brute_force_all_nn(points, k=1, chunk=512):
    """Distances to the k nearest neighbors for every point at once.

    Returns (indices, distances) arrays of shape (n, k). Chunked so the
    n x n distance matrix never materializes in full.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n < 2:
        raise InsufficientPointsError(
            f"need at least 2 points for neighbor search, got {n}"
        )
    if not 1 <= k <= n - 1:
        raise ParameterError(f"k must be in [1, {n - 1}], got {k}")
    idx_out = np.empty((n, k), dtype=np.int64)
    d_out = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, chunk):
        block = pts[start:start + chunk]
        d2 = (
            (block[:, 0:1] - pts[None, :, 0]) ** 2
            + (block[:, 1:2] - pts[None, :, 1]) ** 2
        )
        rows = np.arange(start, start + len(block))
        d2[np.arange(len(block)), rows] = np.inf
        if k == 1:
            # argmin returns the first occurrence, i.e. the smallest index
            # among equidistant points.
            nearest = np.argmin(d2, axis=1)
            idx_out[rows, 0] = nearest
            d_out[rows, 0] = np.sqrt(d2[np.arange(len(block)), nearest])
        else:
            order = np.argsort(d2, axis=1, kind="stable")[:, :k]
            idx_out[rows] = order
            d_out[rows] = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return idx_out, d_out


@dataclass
class _Node:
    point_index: int
    axis: int
    left: _Node | None = None
    right: _Node | None = None


class KdTree:
    """2-d tree over a fixed point set, built once, queried many times.

    Construction is deterministic: the splitting axis alternates x, y, x,
    ... with depth, each node takes the lower median of its subset under
    the ordering (split coordinate, other coordinate, original index), and
    points equal to the median on the split axis may land on either side
    of it depending on that full ordering.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if len(pts) == 0:
            raise InsufficientPointsError("cannot build a tree over zero points")
        if not np.isfinite(pts).all():
            raise ParameterError("tree points must be finite")
        self.points = pts
        # Plain float lists: the query inner loop stays off numpy scalars.
        self._xs = [float(v) for v in pts[:, 0]]
        self._ys = [float(v) for v in pts[:, 1]]
        self.root = self._build(np.arange(len(pts)), depth=0)

    def _build(self, indices, depth):
        if len(indices) == 0:
            return None
        axis = depth % 2
        other = 1 - axis
        order = np.lexsort(
            (indices, self.points[indices, other], self.points[indices, axis])
        )
        indices = indices[order]
        m = (len(indices) - 1) // 2
        node = _Node(point_index=int(indices[m]), axis=axis)
        node.left = self._build(indices[:m], depth + 1)
        node.right = self._build(indices[m + 1:], depth + 1)
        return node

    def depth(self):
        """Longest root-to-leaf node count."""
        def walk(node):
            if node is None:
                return 0
            return 1 + max(walk(node.left), walk(node.right))
        return walk(self.root)

    def size(self):
        def walk(node):
            if node is None:
                return 0
            return 1 + walk(node.left) + walk(node.right)
        return walk(self.root)

    def query(self, query_index, k) -> NeighborResult:
        """k nearest neighbors of an indexed point, excluding itself."""
        _check_query(self.points, query_index, k)
        qx = self._xs[query_index]
        qy = self._ys[query_index]
        xs, ys = self._xs, self._ys
        # Max-heap of the best k so far via negated keys; heap[0] is the
        # current worst (largest distance, then largest index).
        heap = []

        def visit(node):
            if node is None:
                return
            i = node.point_index
            if i != query_index:
                dx = xs[i] - qx
                dy = ys[i] - qy
                d2 = dx * dx + dy * dy
                if len(heap) < k:
                    heapq.heappush(heap, (-d2, -i))
                elif (d2, i) < (-heap[0][0], -heap[0][1]):
                    heapq.heapreplace(heap, (-d2, -i))
            delta = (qx - xs[i]) if node.axis == 0 else (qy - ys[i])
            near, far = (node.left, node.right) if delta < 0 else (node.right, node.left)
            # Near side first, so the bound is tight before the far side
            # is tested. The far half-plane can still hold a qualifying
            # point when the plane distance ties the current worst, so
            # prune only on strict inequality.
            visit(near)
            if far is not None and (len(heap) < k or delta * delta <= -heap[0][0]):
                visit(far)

        visit(self.root)
        best = sorted((-nd2, -ni) for nd2, ni in heap)
        return NeighborResult(
            query_index=int(query_index),
            neighbor_indices=tuple(i for _, i in best),
            distances=tuple(float(np.sqrt(d2)) for d2, _ in best),
        )


@dataclass
class PointIndex:
    """Neighbor-search facade choosing brute force or the tree."""

    points: np.ndarray
    use_tree: bool = True
    _tree: KdTree | None = field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if self.use_tree and len(self.points):
            self._tree = KdTree(self.points)

    def query(self, query_index, k) -> NeighborResult:
        if self._tree is not None:
            return self._tree.query(query_index, k)
        return brute_force_knn(self.points, query_index, k)
