"""Axis-aligned bounding-box hierarchy for radius queries over obstacles."""

from __future__ import annotations

import numpy as np


class AabbTree:
    """Median-split binary tree over obstacle bounding boxes.

    ``query(point, radius)`` returns the indices of every box within
    ``radius`` of ``point`` plus the number of tree nodes visited.
    """

    def __init__(self, boxes, leaf_size: int = 4):
        self.leaf_size = leaf_size
        if boxes:
            self.lo = np.array([b[0] for b in boxes], dtype=float)
            self.hi = np.array([b[1] for b in boxes], dtype=float)
        else:
            self.lo = self.hi = np.zeros((0, 2))
        # node: (lo, hi, left, right, indices)
        self.nodes: list = []
        if len(boxes):
            self._build(np.arange(len(boxes)))

    def _build(self, idx: np.ndarray) -> int:
        lo = self.lo[idx].min(axis=0)
        hi = self.hi[idx].max(axis=0)
        node_id = len(self.nodes)
        self.nodes.append(None)
        if len(idx) <= self.leaf_size:
            self.nodes[node_id] = (lo, hi, -1, -1, idx)
            return node_id
        centers = 0.5 * (self.lo[idx] + self.hi[idx])
        axis = int(np.argmax(hi - lo))
        order = idx[np.argsort(centers[:, axis], kind="stable")]
        mid = len(order) // 2
        left = self._build(order[:mid])
        right = self._build(order[mid:])
        self.nodes[node_id] = (lo, hi, left, right, None)
        return node_id

    @staticmethod
    def _box_distance(p, lo, hi) -> float:
        d = np.maximum(np.maximum(lo - p, p - hi), 0.0)
        return float(np.sqrt(np.dot(d, d)))

    def query(self, point, radius: float):
        if not self.nodes:
            return [], 0
        p = np.asarray(point, dtype=float)
        found: list[int] = []
        visited = 0
        stack = [0]
        while stack:
            lo, hi, left, right, idx = self.nodes[stack.pop()]
            visited += 1
            if self._box_distance(p, lo, hi) > radius:
                continue
            if idx is not None:
                for k in idx:
                    if self._box_distance(p, self.lo[k], self.hi[k]) <= radius:
                        found.append(int(k))
            else:
                stack.extend((right, left))
        return found, visited
