"""Hierarchical binary ball decomposition of spatially distributed vertices.

The tree recursively bisects the vertex set at the median of the axis of
maximum coordinate spread, so leaves hold exactly one vertex and the depth is
ceil(log2 n).  Each node is a metric ball: its center is the member centroid
and its radius is the exact maximum kernel distance from the center to any
member.  Great-circle data is split in a 3-D unit-sphere embedding while all
stored distances use the true great-circle metric.

Per-node aggregates over the core scores (sums of e^{t*theta} for the series
orders in use, the member maximum, and the member count) back both the fast
likelihood evaluation and the hierarchical sampler; they are refreshed in
O(n) whenever theta changes, without rebuilding the tree.

Sibling pairs (the two children of each internal node) tile the set of all
unordered vertex pairs exactly once, which is what makes the dual-tree
likelihood sweep and the pair-based sampler exhaustive and duplicate-free.
"""

from __future__ import annotations

import numpy as np

from .errors import DataFormatError, UnsupportedKernelError
from .kernels import KernelSpec


def _latlon_to_xyz(latlon):
    lat = np.radians(latlon[:, 0])
    lon = np.radians(latlon[:, 1])
    cl = np.cos(lat)
    return np.column_stack([cl * np.cos(lon), cl * np.sin(lon), np.sin(lat)])


def _xyz_to_latlon(xyz):
    x, y, z = xyz
    return np.degrees(np.arcsin(np.clip(z, -1.0, 1.0))), np.degrees(np.arctan2(y, x))


class MetricTree:
    """Flat-array binary ball tree over ``coords`` under a geometric kernel.

    Nodes are numbered in preorder (root 0, children after their parent).
    Node i owns the contiguous member slice ``perm[start[i]:end[i]]`` of
    original vertex indices.  Leaves have ``left[i] == -1``.
    """

    def __init__(self, coords, kernel: KernelSpec):
        if not kernel.is_geometric:
            raise UnsupportedKernelError(
                "metric tree requires a geometric kernel (euclidean or great_circle)"
            )
        coords = np.asarray(coords, dtype=np.float64)
        n = coords.shape[0]
        if n < 1:
            raise DataFormatError("cannot build a tree over zero vertices")
        self.coords = coords
        self.kernel = kernel
        self.n = n

        split_space = coords
        if kernel.kind == "great_circle":
            split_space = _latlon_to_xyz(coords)

        n_nodes = 2 * n - 1
        self.left = np.full(n_nodes, -1, dtype=np.int64)
        self.right = np.full(n_nodes, -1, dtype=np.int64)
        self.start = np.zeros(n_nodes, dtype=np.int64)
        self.end = np.zeros(n_nodes, dtype=np.int64)
        self.level = np.zeros(n_nodes, dtype=np.int64)
        self.radius = np.zeros(n_nodes, dtype=np.float64)
        self.center = np.zeros((n_nodes, coords.shape[1]), dtype=np.float64)
        self.perm = np.arange(n, dtype=np.int64)

        # iterative preorder DFS; children are allocated right after the
        # parent so child ids always exceed the parent id
        next_id = 0
        stack = [(0, n, 0, -1, False)]  # start, end, level, parent, is_right
        while stack:
            s, e, lvl, parent, is_right = stack.pop()
            node = next_id
            next_id += 1
            if parent >= 0:
                if is_right:
                    self.right[parent] = node
                else:
                    self.left[parent] = node
            self.start[node] = s
            self.end[node] = e
            self.level[node] = lvl

            members = self.perm[s:e]
            pts = split_space[members]
            centroid = pts.mean(axis=0)
            if kernel.kind == "great_circle":
                norm = np.linalg.norm(centroid)
                if norm < 1e-12:  # antipodally balanced ball; any member works
                    centroid = pts[0]
                    norm = 1.0
                lat, lon = _xyz_to_latlon(centroid / norm)
                self.center[node] = (lat, lon)
            else:
                self.center[node] = centroid
            member_xy = coords[members]
            self.radius[node] = float(
                kernel.point_distances(
                    np.broadcast_to(self.center[node], member_xy.shape), member_xy
                ).max()
            )

            size = e - s
            if size > 1:
                axis = int(np.argmax(pts.max(axis=0) - pts.min(axis=0)))
                # ceil-half on the left keeps the depth at ceil(log2 n)
                k = (size + 1) // 2
                part = np.argpartition(pts[:, axis], k - 1)
                self.perm[s:e] = members[part]
                # push right child first so the left child is processed next
                stack.append((s + k, e, lvl + 1, node, True))
                stack.append((s, s + k, lvl + 1, node, False))

        assert next_id == n_nodes
        self.count = self.end - self.start
        self.depth = int(self.level.max())
        self._levels = [np.flatnonzero(self.level == l) for l in range(self.depth + 1)]

        # aggregate slots, filled by refresh_aggregates
        self.theta_perm = None
        self.exp_theta_perm = None
        self.sum_exp_theta = None  # (order, n_nodes): sums of e^{t*theta}
        self.max_theta = None
        self.aggregate_order = 0

    @property
    def n_nodes(self) -> int:
        return self.left.shape[0]

    def is_leaf(self, i) -> np.ndarray:
        return self.left[i] < 0

    def members(self, i: int) -> np.ndarray:
        """Original vertex indices contained in node i."""
        return self.perm[self.start[i]:self.end[i]]

    def refresh_aggregates(self, theta, order: int = 4) -> None:
        """Recompute all per-node aggregates for the given core scores.

        Runs in O(n * order) using prefix sums over the member permutation;
        the tree structure is untouched.
        """
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n,):
            raise DataFormatError(
                f"theta has length {theta.shape[0]}, expected {self.n}"
            )
        if order < 1:
            raise DataFormatError("aggregate order must be >= 1")
        tp = theta[self.perm]
        self.theta_perm = tp
        self.exp_theta_perm = np.exp(tp)
        S = np.empty((order, self.n_nodes), dtype=np.float64)
        prefix = np.empty(self.n + 1, dtype=np.float64)
        for t in range(1, order + 1):
            prefix[0] = 0.0
            np.cumsum(np.exp(t * tp), out=prefix[1:])
            S[t - 1] = prefix[self.end] - prefix[self.start]
        self.sum_exp_theta = S
        self.aggregate_order = order

        mx = np.empty(self.n_nodes, dtype=np.float64)
        for nodes in reversed(self._levels):
            leaves = nodes[self.left[nodes] < 0]
            mx[leaves] = tp[self.start[leaves]]
            internal = nodes[self.left[nodes] >= 0]
            if internal.size:
                mx[internal] = np.maximum(mx[self.left[internal]], mx[self.right[internal]])
        self.max_theta = mx

    def sibling_pairs(self):
        """Yield (i, j, level) for the two children of every internal node.

        The cross products of member sets over all yielded pairs cover every
        unordered vertex pair exactly once.
        """
        for node in range(self.n_nodes):
            if self.left[node] >= 0:
                yield int(self.left[node]), int(self.right[node]), int(self.level[node]) + 1

    def center_distance(self, i, j) -> np.ndarray:
        """Kernel distance between node centers (vectorized over node ids)."""
        return self.kernel.point_distances(self.center[i], self.center[j])


def build(coords, kernel: KernelSpec) -> MetricTree:
    """Build the ball tree for ``coords`` under a geometric kernel."""
    return MetricTree(coords, kernel)


def refresh_aggregates(tree: MetricTree, theta, order: int = 4) -> None:
    tree.refresh_aggregates(theta, order=order)


def sibling_pairs(tree: MetricTree):
    return tree.sibling_pairs()
