"""Point sets, metric views (lp / graph / explicit matrix), nets, shared numerics.

All distances are 64-bit floats.  Verifiers elsewhere compare lp distances with
relative tolerance 1e-9; graph and ultrametric distances are compared exactly.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

REL_TOL = 1e-9


class PointSet:
    """Finite set of d-dimensional real vectors with contiguous 0-based ids."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("point set needs at least one point of fixed dimension")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        self.points = pts
        self.n = pts.shape[0]
        self.dim = pts.shape[1]

    def __len__(self):
        return self.n


def lp_distance(x, y, p):
    """lp norm of x - y; p may be any real >= 1 or math.inf.

    p = inf is a distinct branch (max coordinate gap), never a large finite p.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if p != math.inf and p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    diff = np.abs(x - y)
    if p == math.inf:
        return float(diff.max()) if diff.size else 0.0
    if p == 2:
        return float(np.sqrt(np.sum(diff * diff)))
    if p == 1:
        return float(np.sum(diff))
    return float(np.sum(diff**p) ** (1.0 / p))


class Metric:
    """Distance view over ids 0..n-1.  Subclasses fill in dist()/matrix()."""

    n = 0

    def dist(self, i, j):
        raise NotImplementedError

    def matrix(self):
        """Full pairwise distance matrix (cached); fine at desk scale."""
        raise NotImplementedError


class LpMetric(Metric):
    def __init__(self, pointset, p=2):
        if p != math.inf and p < 1:
            raise ValueError(f"p must be >= 1 or inf, got {p}")
        self.ps = pointset if isinstance(pointset, PointSet) else PointSet(pointset)
        self.p = p
        self.n = self.ps.n
        self._mat = None

    def dist(self, i, j):
        return lp_distance(self.ps.points[i], self.ps.points[j], self.p)

    def matrix(self):
        if self._mat is None:
            pts = self.ps.points
            diff = np.abs(pts[:, None, :] - pts[None, :, :])
            if self.p == math.inf:
                self._mat = diff.max(axis=2)
            elif self.p == 2:
                self._mat = np.sqrt((diff * diff).sum(axis=2))
            elif self.p == 1:
                self._mat = diff.sum(axis=2)
            else:
                self._mat = (diff**self.p).sum(axis=2) ** (1.0 / self.p)
        return self._mat


class MatrixMetric(Metric):
    def __init__(self, mat):
        mat = np.asarray(mat, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.allclose(mat, mat.T):
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.diag(mat) != 0):
            raise ValueError("diagonal must be zero")
        if np.any(mat < 0):
            raise ValueError("distances must be nonnegative")
        self._mat = mat
        self.n = mat.shape[0]

    def dist(self, i, j):
        return float(self._mat[i, j])

    def matrix(self):
        return self._mat


@dataclass
class WeightedGraph:
    """Undirected graph with positive edge weights over vertices 0..n-1."""

    n: int
    edges: list = field(default_factory=list)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        for u, v, w in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n}")
            if w <= 0:
                raise ValueError(f"edge ({u},{v}) has nonpositive weight {w}")

    def adjacency(self):
        adj = [[] for _ in range(self.n)]
        for u, v, w in self.edges:
            adj[u].append((v, float(w)))
            adj[v].append((u, float(w)))
        return adj

    def is_tree(self):
        if len(self.edges) != self.n - 1:
            return False
        try:
            graph_distances(self, [0])
        except ValueError:
            return False
        return True


def _dijkstra(adj, source):
    n = len(adj)
    dist = [math.inf] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def graph_distances(g, sources=None):
    """Exact shortest-path distances from each source (default: all vertices).

    Raises on disconnected input, naming an unreachable vertex.
    """
    adj = g.adjacency()
    sources = list(range(g.n)) if sources is None else list(sources)
    out = np.empty((len(sources), g.n))
    for row, s in enumerate(sources):
        dist = _dijkstra(adj, s)
        for v, dv in enumerate(dist):
            if math.isinf(dv):
                raise ValueError(f"graph is disconnected: vertex {v} unreachable from {s}")
        out[row] = dist
    return out


def shortest_path_metric(g):
    """Metric view of a connected weighted graph (full closure).

    Per-source relaxations can round differently along the two directions of
    one path, so the closure is symmetrized by taking the smaller sum.
    """
    mat = graph_distances(g)
    mat = np.minimum(mat, mat.T)
    return MatrixMetric(mat)


@dataclass
class EpsilonNet:
    base: PointSet
    radius: float
    net: list


def build_epsilon_net(ps, metric, r):
    """Greedy net in ascending id order: packing >= r, covering <= r."""
    if r <= 0:
        raise ValueError("net radius must be positive")
    net = []
    for i in range(metric.n):
        if all(metric.dist(i, j) >= r for j in net):
            net.append(i)
    return EpsilonNet(base=ps, radius=float(r), net=net)


def aspect_ratio(metric, ps=None):
    """Max pairwise distance over min positive pairwise distance."""
    mat = metric.matrix()
    n = metric.n
    if n < 2:
        raise ValueError("aspect ratio needs at least 2 points")
    iu = np.triu_indices(n, k=1)
    vals = mat[iu]
    pos = vals[vals > 0]
    if pos.size == 0:
        raise ValueError("all points identical: aspect ratio undefined")
    return float(vals.max() / pos.min())


def min_max_pairwise(metric):
    """(min positive distance, max distance) over all pairs."""
    mat = metric.matrix()
    iu = np.triu_indices(metric.n, k=1)
    vals = mat[iu]
    pos = vals[vals > 0]
    if pos.size == 0:
        raise ValueError("all points identical")
    return float(pos.min()), float(vals.max())
