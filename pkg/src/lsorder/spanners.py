"""Path-reporting low-hop spanners, fault-tolerant variants, and spanner
oracles built from ordering families; plus the Thorup-Zwick and sparse-cover
constructions for general metrics and the SPD/landmark spanner for graphs.

Every spanner stores true metric edge weights and answers queries with an
explicit path whose edges are present in the edge set.  The all-pairs checks
used by tests run vectorized over orderings.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import seeds
from .hopsets import (
    FourHopPathSpanner,
    FtTwoHopPathSpanner,
    ThreeHopPathSpanner,
    TwoHopPathSpanner,
)
from .metrics import WeightedGraph, graph_distances, min_max_pairwise
from .orderings import CLASSIC, ROOTED, TRIANGLE, build_rooted_lso_tree


class PathReportingSpanner:
    """Weighted edge set plus a per-construction query structure."""

    def __init__(self, n, stretch, hops):
        self.n = n
        self.stretch = float(stretch)
        self.hops = int(hops)
        self.edges = {}

    def add_edge(self, u, v, w):
        if u == v:
            return
        key = (u, v) if u < v else (v, u)
        if key not in self.edges:
            self.edges[key] = float(w)

    def has_edge(self, u, v):
        return (min(u, v), max(u, v)) in self.edges

    def num_edges(self):
        return len(self.edges)

    def total_weight(self):
        return float(sum(self.edges.values()))

    def check_path(self, path):
        for a, b in zip(path, path[1:]):
            if not self.has_edge(a, b):
                raise AssertionError(f"reported edge ({a},{b}) missing from the spanner")
        return True


class OrderingHopSpanner(PathReportingSpanner):
    """2-hop spanner from a classic or triangle family: one hop structure per
    ordering, query scans every ordering and returns the lightest path."""

    def __init__(self, fam, metric, stretch):
        super().__init__(metric.n, stretch, 2)
        self.fam = fam
        self.mat = metric.matrix()
        self.hop = TwoHopPathSpanner(metric.n)
        self.perms = [np.asarray(o.perm, dtype=np.int64) for o in fam.orderings]
        self.poss = [o.pos for o in fam.orderings]
        for perm in self.perms:
            for pos in range(1, self.n + 1):
                pid = perm[pos - 1]
                for l in self.hop.edges_of(pos):
                    self.add_edge(int(pid), int(perm[l - 1]), self.mat[pid, perm[l - 1]])

    def query(self, u, v):
        if u == v:
            return [u], 0.0
        best = None
        for perm, pos in zip(self.perms, self.poss):
            pu, pv = pos[u] + 1, pos[v] + 1
            l = self.hop.query(min(pu, pv), max(pu, pv))
            z = int(perm[l - 1])
            path = [u] + ([z] if z not in (u, v) else []) + [v]
            w = sum(self.mat[a, b] for a, b in zip(path, path[1:]))
            if best is None or w < best[1]:
                best = (path, w)
        return best

    def all_pairs_weights(self):
        """Vectorized min-over-orderings 2-hop weights for every pair."""
        n = self.n
        iu = np.triu_indices(n, k=1)
        best = np.full(iu[0].shape, np.inf)
        for perm, _ in zip(self.perms, self.poss):
            inv = np.empty(n, dtype=np.int64)
            inv[perm] = np.arange(1, n + 1)
            pu = inv[iu[0]]
            pv = inv[iu[1]]
            lo, hi = np.minimum(pu, pv), np.maximum(pu, pv)
            l = self.hop.query_batch(lo, hi)
            z = perm[l - 1]
            w = self.mat[iu[0], z] + self.mat[z, iu[1]]
            best = np.minimum(best, w)
        out = np.zeros((n, n))
        out[iu] = best
        return out + out.T


def pr_spanner_from_classic(fam, metric):
    if fam.kind != CLASSIC:
        raise ValueError("classic family required")
    return OrderingHopSpanner(fam, metric, stretch=1 + 2 * fam.rho)


def pr_spanner_from_triangle(fam, metric):
    if fam.kind != TRIANGLE:
        raise ValueError("triangle family required")
    return OrderingHopSpanner(fam, metric, stretch=2 * fam.rho)


class RootedHopSpanner(PathReportingSpanner):
    """2-hop spanner from a rooted family: every member connects to its
    ordering's root; queries go through the best shared root."""

    def __init__(self, fam, metric):
        if fam.kind != ROOTED:
            raise ValueError("rooted family required")
        super().__init__(metric.n, fam.rho, 2)
        self.fam = fam
        self.mat = metric.matrix()
        self.membership = fam.membership()
        for o in fam.orderings:
            for pid in o.perm:
                self.add_edge(pid, o.root, self.mat[pid, o.root])

    def query(self, u, v):
        if u == v:
            return [u], 0.0
        best = None
        for k in self.membership.get(u, []):
            o = self.fam.orderings[k]
            if v not in o.pos:
                continue
            r = o.root
            path = [u] + ([r] if r not in (u, v) else []) + [v]
            w = sum(self.mat[a, b] for a, b in zip(path, path[1:]))
            if best is None or w < best[1]:
                best = (path, w)
        if best is None:
            raise LookupError(f"pair ({u},{v}) shares no ordering")
        return best

    def all_pairs_weights(self):
        n = self.n
        best = np.full((n, n), np.inf)
        for o in self.fam.orderings:
            members = np.asarray(o.perm, dtype=np.int64)
            via = self.mat[members[:, None], o.root] + self.mat[o.root, members[None, :]]
            cur = best[np.ix_(members, members)]
            best[np.ix_(members, members)] = np.minimum(cur, via)
        np.fill_diagonal(best, 0.0)
        return best


def pr_spanner_from_rooted(fam, metric):
    return RootedHopSpanner(fam, metric)


# ---------------------------------------------------------------------------
# SPD / landmark spanner


@dataclass
class SpdNode:
    component: list
    path: list
    children: list = field(default_factory=list)


@dataclass
class SpdDecomposition:
    graph: WeightedGraph
    root: SpdNode

    def depth(self):
        def rec(node):
            return 1 + max((rec(c) for c in node.children), default=0)

        return rec(self.root)

    def validate(self):
        """Path is a shortest path of its component; children are exactly the
        components left after removing it."""
        adj = self.graph.adjacency()

        def rec(node, level):
            comp = set(node.component)
            if not set(node.path) <= comp:
                raise ValueError(f"SPD level {level}: path leaves its component")
            weights = {}
            for u, v, w in self.graph.edges:
                if u in comp and v in comp:
                    weights[(u, v)] = float(w)
                    weights[(v, u)] = float(w)
            total = 0.0
            for a, b in zip(node.path, node.path[1:]):
                if (a, b) not in weights:
                    raise ValueError(f"SPD level {level}: path edge ({a},{b}) missing")
                total += weights[(a, b)]
            if len(node.path) > 1:
                dist = _component_dijkstra(adj, comp, node.path[0])
                if not math.isclose(dist[node.path[-1]], total, rel_tol=1e-9):
                    raise ValueError(
                        f"SPD level {level}: removed path is not a shortest path"
                    )
            remaining = comp - set(node.path)
            comps = _connected_components(adj, remaining)
            declared = [frozenset(c.component) for c in node.children]
            if sorted(map(sorted, comps)) != sorted(map(sorted, declared)):
                raise ValueError(f"SPD level {level}: children do not match components")
            for child in node.children:
                rec(child, level + 1)

        rec(self.root, 0)


def _component_dijkstra(adj, comp, source):
    dist = {v: math.inf for v in comp}
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            if v in dist and d + w < dist[v]:
                dist[v] = d + w
                heapq.heappush(heap, (d + w, v))
    return dist


def _nearest_cum_index(cum, target):
    lo, hi = 0, len(cum)
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] < target:
            lo = mid + 1
        else:
            hi = mid
    if lo == 0:
        return 0
    if lo >= len(cum):
        return len(cum) - 1
    return lo if cum[lo] - target < target - cum[lo - 1] else lo - 1


def _connected_components(adj, vertices):
    seen = set()
    out = []
    for v in sorted(vertices):
        if v in seen:
            continue
        comp = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for wv, _ in adj[u]:
                if wv in vertices and wv not in comp:
                    comp.add(wv)
                    stack.append(wv)
        seen |= comp
        out.append(sorted(comp))
    return out


def tree_heavy_path_spd(g):
    """SPD of a tree: heavy path from the centroid; light components halve."""
    if not g.is_tree():
        raise ValueError("heavy-path SPD needs a tree")
    adj = g.adjacency()

    def build(comp):
        comp = set(comp)
        if len(comp) == 1:
            return SpdNode(component=sorted(comp), path=sorted(comp))
        sizes = {}
        order = []
        root = min(comp)
        parent = {root: None}
        stack = [root]
        seen = {root}
        while stack:
            u = stack.pop()
            order.append(u)
            for v, _ in adj[u]:
                if v in comp and v not in seen:
                    seen.add(v)
                    parent[v] = u
                    stack.append(v)
        for u in reversed(order):
            sizes[u] = 1 + sum(
                sizes[v] for v, _ in adj[u] if v in comp and parent.get(v) == u
            )
        total = len(comp)
        centroid, best = None, None
        for u in order:
            worst = total - sizes[u]
            for v, _ in adj[u]:
                if v in comp and parent.get(v) == u:
                    worst = max(worst, sizes[v])
            if best is None or worst < best or (worst == best and u < centroid):
                centroid, best = u, worst

        # heavy walk through the centroid in its two largest directions,
        # so hanging components keep the <= n/2 size guarantee
        def walk(start, prev):
            out = []
            cur, last = start, prev
            while True:
                out.append(cur)
                nxt, nxt_size = None, -1
                for v, _ in adj[cur]:
                    if v in comp and v != last:
                        s = _subtree_size(adj, comp, v, cur)
                        if s > nxt_size or (s == nxt_size and v < nxt):
                            nxt, nxt_size = v, s
                if nxt is None:
                    return out
                last, cur = cur, nxt

        nbrs = [
            (v, _subtree_size(adj, comp, v, centroid))
            for v, _ in adj[centroid]
            if v in comp
        ]
        nbrs.sort(key=lambda t: (-t[1], t[0]))
        if not nbrs:
            path = [centroid]
        elif len(nbrs) == 1:
            path = [centroid] + walk(nbrs[0][0], centroid)
        else:
            path = list(reversed(walk(nbrs[0][0], centroid))) + [centroid] + walk(
                nbrs[1][0], centroid
            )
        node = SpdNode(component=sorted(comp), path=path)
        remaining = comp - set(path)
        for sub in _connected_components(adj, remaining):
            node.children.append(build(sub))
        return node

    return SpdDecomposition(graph=g, root=build(range(g.n)))


def _subtree_size(adj, comp, root, block):
    size = 0
    stack = [root]
    seen = {root, block}
    while stack:
        u = stack.pop()
        size += 1
        for v, _ in adj[u]:
            if v in comp and v not in seen:
                seen.add(v)
                stack.append(v)
    return size


def treewidth_bag_spd(g, decomp):
    """SPD with singleton paths: balanced-bag vertices removed one at a time,
    recursing into the true graph components after every removal."""
    decomp.validate(g)
    adj_g = g.adjacency()
    adj_b = decomp.bag_adjacency()
    bagsets = [set(b) for b in decomp.bags]
    from .orderings import _balanced_bag

    def build(comp, pending):
        comp_set = set(comp)
        pending = [v for v in pending if v in comp_set]
        if not pending:
            if len(comp_set) == 1:
                only = sorted(comp_set)
                return SpdNode(component=only, path=only)
            touching = frozenset(
                b for b in range(decomp.num_bags) if bagsets[b] & comp_set
            )
            sep = _balanced_bag(touching, adj_b)
            pending = sorted(bagsets[sep] & comp_set) or [min(comp_set)]
        x = pending[0]
        node = SpdNode(component=sorted(comp_set), path=[x])
        for child in _connected_components(adj_g, comp_set - {x}):
            node.children.append(build(child, pending[1:]))
        return node

    return SpdDecomposition(graph=g, root=build(range(g.n), []))


class SpdSpanner(PathReportingSpanner):
    """Per level: landmarks on the removed path, an auxiliary tree with leaf
    copies, and a 2-hop tree spanner via centroid orderings."""

    def __init__(self, spd, eps):
        g = spd.graph
        super().__init__(g.n, 1 + eps, 2)
        if not (0 < eps < 1):
            raise ValueError("eps must be in (0,1)")
        spd.validate()
        self.eps = eps
        self.spd = spd
        self.mat = graph_distances(g)
        self.levels = []  # per node: dict with landmarks and tree structures
        self._build_node(spd.root)

    def _build_node(self, node):
        comp = node.component
        sub = {v: i for i, v in enumerate(comp)}
        adjg = self.spd.graph.adjacency()
        # distances within the component
        dmat = {}
        for v in comp:
            dmat[v] = _component_dijkstra(adjg, set(comp), v)
        path = node.path
        cum = [0.0]
        for a, b in zip(path, path[1:]):
            cum.append(cum[-1] + dmat[a][b])
        landmarks = {}
        cap = max(1, int(math.ceil(2.0 / self.eps))) + 2
        for v in comp:
            proj_idx = min(range(len(path)), key=lambda i: (dmat[v][path[i]], i))
            dvp = dmat[v][path[proj_idx]]
            picks = {0, len(path) - 1, proj_idx}
            if dvp > 0:
                for direction in (-1, 1):
                    step = self.eps / 4.0 * dvp
                    j = 0
                    while j < cap:
                        offset = step * (1 + self.eps / 2.0) ** j
                        target = cum[proj_idx] + direction * offset
                        if target < 0 or target > cum[-1]:
                            break
                        idx = _nearest_cum_index(cum, target)
                        picks.add(idx)
                        j += 1
            landmarks[v] = sorted(picks)
        # auxiliary tree: path spine + one leaf copy per (v, landmark)
        tree_edges = []
        vid = {}
        for i, x in enumerate(path):
            vid[("path", i)] = i
        next_id = len(path)
        for a in range(len(path) - 1):
            w = cum[a + 1] - cum[a]
            if w > 0:
                tree_edges.append((a, a + 1, w))
            else:
                tree_edges.append((a, a + 1, 1e-12))
        copies = {}
        for v in comp:
            for i in landmarks[v]:
                cid = next_id
                next_id += 1
                copies[(v, i)] = cid
                w = dmat[v][path[i]]
                tree_edges.append((cid, i, w if w > 0 else 1e-12))
        tp = WeightedGraph(next_id, tree_edges)
        fam = build_rooted_lso_tree(tp) if next_id > 1 else None
        tp_dist = graph_distances(tp) if next_id > 1 else np.zeros((1, 1))
        orig = {}
        for i in range(len(path)):
            orig[i] = path[i]
        for (v, _i), cid in copies.items():
            orig[cid] = v
        if fam is not None:
            for o in fam.orderings:
                r = orig[o.root]
                for member in o.perm:
                    mv = orig[member]
                    if mv != r:
                        self.add_edge(mv, r, self.mat[mv, r])
        membership = fam.membership() if fam is not None else {}
        self.levels.append(
            {
                "node": node,
                "comp": set(comp),
                "path": path,
                "cum": cum,
                "landmarks": landmarks,
                "copies": copies,
                "fam": fam,
                "orig": orig,
                "membership": membership,
                "tp_dist": tp_dist,
            }
        )
        for child in node.children:
            self._build_node(child)

    def query(self, u, v):
        """Lightest 2-hop path over all levels containing both endpoints."""
        if u == v:
            return [u], 0.0
        best = None
        candidates = 0
        for level in self.levels:
            if u not in level["comp"] or v not in level["comp"]:
                continue
            lu = level["landmarks"][u]
            lv = level["landmarks"][v]
            merged = sorted(
                [(i, "u") for i in lu] + [(i, "v") for i in lv], key=lambda t: t[0]
            )
            pairs = set()
            for (ia, sa), (ib, sb) in zip(merged, merged[1:]):
                if sa != sb:
                    pairs.add((ia, ib) if sa == "u" else (ib, ia))
            for iu_, iv_ in pairs:
                candidates += 1
                cu = level["copies"][(u, iu_)]
                cv = level["copies"][(v, iv_)]
                cand = self._tree_two_hop(level, cu, cv, u, v)
                if cand is not None and (best is None or cand[1] < best[1]):
                    best = cand
        if best is None:
            raise LookupError(f"no level serves pair ({u},{v})")
        self.last_candidates = candidates
        return best

    def _tree_two_hop(self, level, cu, cv, u, v):
        fam = level["fam"]
        if fam is None:
            return None
        best = None
        for k in level["membership"].get(cu, []):
            o = fam.orderings[k]
            if cv not in o.pos:
                continue
            z = level["orig"][o.root]
            path = [u] + ([z] if z not in (u, v) else []) + [v]
            w = sum(self.mat[a, b] for a, b in zip(path, path[1:]))
            if best is None or w < best[1]:
                best = (path, w)
        return best


def spd_spanner(spd, eps):
    return SpdSpanner(spd, eps)


# ---------------------------------------------------------------------------
# Thorup-Zwick


@dataclass
class TzOracle:
    levels: list
    pivots: dict  # (i, v) -> (pivot, distance)
    bunches: dict  # v -> {w: distance}
    k: int


class TzSpanner(PathReportingSpanner):
    def __init__(self, metric, k, seed=0, max_attempts=64):
        super().__init__(metric.n, 2 * k - 1, 2)
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.mat = metric.matrix()
        n = metric.n
        budget = 4.0 * k * n ** (1.0 + 1.0 / k)
        oracle = None
        for attempt in range(max_attempts):
            rng = seeds.rng_for(seed, "tz", attempt)
            levels = [list(range(n))]
            ok = True
            for i in range(1, k):
                prev = levels[-1]
                keep = [v for v in prev if rng.random() < n ** (-1.0 / k)]
                if not keep:
                    ok = False
                    break
                levels.append(keep)
            if not ok:
                continue
            levels.append([])  # A_k = empty
            pivots = {}
            bunches = {v: {} for v in range(n)}
            total = 0
            for v in range(n):
                d_next = np.inf
                for i in range(k - 1, -1, -1):
                    arr = levels[i]
                    dists = self.mat[v, arr]
                    best = int(np.argmin(dists))
                    pivots[(i, v)] = (arr[best], float(dists[best]))
                    members = [
                        (int(w), float(dw))
                        for w, dw in zip(arr, dists)
                        if dw < d_next
                    ]
                    for w, dw in members:
                        bunches[v][w] = dw
                    total += len(members)
                    d_next = pivots[(i, v)][1]
            if total <= budget:
                oracle = TzOracle(levels=levels, pivots=pivots, bunches=bunches, k=k)
                self.attempts = attempt + 1
                break
        if oracle is None:
            raise RuntimeError("TZ sampling failed to meet the bunch-size budget")
        self.oracle = oracle
        self.total_bunch = sum(len(b) for b in oracle.bunches.values())
        for v in range(n):
            for w, dw in oracle.bunches[v].items():
                self.add_edge(v, w, dw)
            for i in range(k):
                p, dp = oracle.pivots[(i, v)]
                self.add_edge(v, p, dp)

    def query(self, u, v):
        """The classic alternating pivot walk; returns the 2-hop path."""
        if u == v:
            return [u], 0.0, 0
        w = u
        i = 0
        a, b = u, v
        iters = 0
        while w not in self.oracle.bunches[b]:
            iters += 1
            i += 1
            a, b = b, a
            w = self.oracle.pivots[(i, a)][0]
        path = [u] + ([w] if w not in (u, v) else []) + [v]
        weight = sum(self.mat[x, y] for x, y in zip(path, path[1:]))
        return path, weight, iters


def tz_spanner(metric, k, seed=0):
    return TzSpanner(metric, k, seed)


# ---------------------------------------------------------------------------
# sparse cover spanner (region growing over distance scales)


@dataclass
class SparseCoverScale:
    delta: float
    clusters: list  # list of (center, member list)
    home: dict  # point -> cluster index whose kernel claimed it


def build_sparse_cover_scale(mat, delta, k):
    """Region growing: kernels expand by 2*delta until the ball stops growing
    by the n^(1/k) factor; cluster radius stays below (2k-1)*delta."""
    n = mat.shape[0]
    factor = n ** (1.0 / k)
    unprocessed = set(range(n))
    clusters = []
    home = {}
    while unprocessed:
        x0 = min(unprocessed)
        row = mat[x0]
        j = 0
        while j < k - 1:
            inner = int(np.sum(row <= (2 * j + 1) * delta))
            outer = int(np.sum(row <= (2 * j + 3) * delta))
            if outer <= factor * max(inner, 1):
                break
            j += 1
        radius = (2 * j + 1) * delta
        members = np.nonzero(row <= radius)[0]
        kernel_radius = (2 * j - 1) * delta if j >= 1 else 0.0
        kernel = np.nonzero(row <= kernel_radius)[0] if j >= 1 else np.asarray([x0])
        idx = len(clusters)
        clusters.append((x0, members.tolist()))
        for p in kernel:
            p = int(p)
            if p in unprocessed:
                home[p] = idx
                unprocessed.discard(p)
    return SparseCoverScale(delta=float(delta), clusters=clusters, home=home)


class SparseCoverSpanner(PathReportingSpanner):
    """Per-scale sparse covers; queries scan the estimator's scale window."""

    MAX_SCALES = 64

    def __init__(self, metric, k, eps, estimator, seed=0):
        super().__init__(metric.n, (1 + eps) * (4 * k - 2), 2)
        if k < 1:
            raise ValueError("k must be >= 1")
        if not (0 < eps < 1):
            raise ValueError("eps must be in (0,1)")
        self.k = k
        self.eps = eps
        self.estimator = estimator
        self.mat = metric.matrix()
        dmin, dmax = min_max_pairwise(metric)
        self.scale0 = dmin
        num_scales = int(math.ceil(math.log(dmax / dmin) / math.log(1 + eps))) + 2
        if num_scales > self.MAX_SCALES * 1_000_000:
            raise ValueError("aspect ratio too large: scale ladder over the guard")
        self.scales = []
        for i in range(num_scales):
            delta = dmin * (1 + eps) ** i
            scale = build_sparse_cover_scale(self.mat, delta, k)
            self.scales.append(scale)
            for center, members in scale.clusters:
                for p in members:
                    self.add_edge(p, center, self.mat[p, center])
        self.memberships = self._memberships()

    def _memberships(self):
        counts = np.zeros(self.n, dtype=np.int64)
        for scale in self.scales:
            for _, members in scale.clusters:
                counts[members] += 1
        return counts

    def _scale_index(self, value):
        if value <= self.scale0:
            return 0
        return int(math.floor(math.log(value / self.scale0) / math.log(1 + self.eps)))

    def query(self, u, v):
        if u == v:
            return [u], 0.0, 0
        est = self.estimator(u, v)
        lo = self._scale_index(est / (2 * self.k - 1))
        hi = self._scale_index(est) + 2
        best = None
        scanned = 0
        for i in range(max(0, lo), min(hi, len(self.scales) - 1) + 1):
            scanned += 1
            scale = self.scales[i]
            cidx = scale.home.get(u)
            if cidx is None:
                continue
            center, members = scale.clusters[cidx]
            if v in members or v == center:
                path = [u] + ([center] if center not in (u, v) else []) + [v]
                w = sum(self.mat[a, b] for a, b in zip(path, path[1:]))
                if best is None or w < best[1]:
                    best = (path, w)
        if best is None:
            raise RuntimeError(
                f"estimator fault: no scanned scale serves pair ({u},{v})"
            )
        return best[0], best[1], scanned

    def verify_padding(self):
        """Cover padding: every Delta-ball around a point sits in its home
        cluster; radius bound (2k-1)*Delta per cluster."""
        for scale in self.scales:
            for center, members in scale.clusters:
                row = self.mat[center, members]
                if np.any(row > (2 * self.k - 1) * scale.delta * (1 + 1e-9)):
                    return False
            for p in range(self.n):
                cidx = scale.home.get(p)
                if cidx is None:
                    return False
                members = set(scale.clusters[cidx][1])
                ball = np.nonzero(self.mat[p] <= scale.delta)[0]
                if not set(ball.tolist()) <= members:
                    return False
        return True


def sparse_cover_spanner(metric, k, eps, estimator, seed=0):
    return SparseCoverSpanner(metric, k, eps, estimator, seed)


# ---------------------------------------------------------------------------
# fault-tolerant spanners from families


class FtOrderingSpanner(PathReportingSpanner):
    """Classic/triangle: per-ordering FT hop structures; rooted: edges from
    the first f+1 points of each ordering."""

    def __init__(self, fam, metric, f):
        stretch = {
            CLASSIC: 1 + 2 * fam.rho,
            TRIANGLE: 2 * fam.rho,
            ROOTED: 2 * fam.rho,
        }[fam.kind]
        super().__init__(metric.n, stretch, 2)
        if f < 0:
            raise ValueError("fault budget must be >= 0")
        self.fam = fam
        self.kind = fam.kind
        self.mat = metric.matrix()
        self.f_requested = f
        self.membership = fam.membership()
        if fam.kind == ROOTED:
            self.f = f
            for o in fam.orderings:
                heads = o.perm[: f + 1]
                for z in heads:
                    for pid in o.perm:
                        if pid != z:
                            self.add_edge(pid, z, self.mat[pid, z])
        else:
            self.ft = FtTwoHopPathSpanner(metric.n, f)
            self.f = self.ft.f
            self.perms = [np.asarray(o.perm, dtype=np.int64) for o in fam.orderings]
            self.poss = [o.pos for o in fam.orderings]
            for perm in self.perms:
                for a, b in self.ft.edges:
                    self.add_edge(int(perm[a - 1]), int(perm[b - 1]), self.mat[perm[a - 1], perm[b - 1]])

    def query(self, u, v, faults=()):
        F = set(faults)
        if len(F) > self.f:
            raise ValueError(f"fault set exceeds budget {self.f}")
        if u in F or v in F:
            raise ValueError("query endpoints must survive")
        if u == v:
            return [u], 0.0
        best = None
        if self.kind == ROOTED:
            for k in self.membership.get(u, []):
                o = self.fam.orderings[k]
                if v not in o.pos:
                    continue
                z = next((p for p in o.perm[: self.f + 1] if p not in F), None)
                if z is None:
                    continue
                path = [u] + ([z] if z not in (u, v) else []) + [v]
                w = sum(self.mat[a, b] for a, b in zip(path, path[1:]))
                if best is None or w < best[1]:
                    best = (path, w)
            if best is None:
                raise LookupError(f"no surviving root serves ({u},{v})")
            return best
        for perm, pos in zip(self.perms, self.poss):
            fpos = {pos[x] + 1 for x in F}
            pu, pv = pos[u] + 1, pos[v] + 1
            l = self.ft.query(min(pu, pv), max(pu, pv), fpos)
            z = int(perm[l - 1])
            path = [u] + ([z] if z not in (u, v) else []) + [v]
            w = sum(self.mat[a, b] for a, b in zip(path, path[1:]))
            if best is None or w < best[1]:
                best = (path, w)
        return best

    def residual_all_pairs_weights(self, faults):
        """Vectorized min-over-orderings weights among surviving pairs."""
        F = set(faults)
        alive = np.asarray([p for p in range(self.n) if p not in F], dtype=np.int64)
        iu, iv = np.triu_indices(alive.size, k=1)
        a, b = alive[iu], alive[iv]
        best = np.full(a.shape, np.inf)
        if self.kind == ROOTED:
            for o in self.fam.orderings:
                member_mask = np.zeros(self.n, dtype=bool)
                member_mask[o.perm] = True
                z = next((p for p in o.perm[: self.f + 1] if p not in F), None)
                if z is None:
                    continue
                inside = member_mask[a] & member_mask[b]
                w = self.mat[a, z] + self.mat[z, b]
                best = np.where(inside, np.minimum(best, w), best)
            return alive, best
        for perm, pos in zip(self.perms, self.poss):
            inv = np.empty(self.n, dtype=np.int64)
            inv[perm] = np.arange(1, self.n + 1)
            mask = np.zeros(self.n + 2, dtype=bool)
            for x in F:
                mask[pos[x] + 1] = True
            pu, pv = inv[a], inv[b]
            lo, hi = np.minimum(pu, pv), np.maximum(pu, pv)
            l = self.ft.query_batch(lo, hi, mask)
            z = perm[l - 1]
            w = self.mat[a, z] + self.mat[z, b]
            best = np.minimum(best, w)
        return alive, best


def ft_spanner_from_family(fam, metric, f):
    return FtOrderingSpanner(fam, metric, f)


# ---------------------------------------------------------------------------
# spanner oracles


class SpannerOracle:
    """Callable (terminals, L) -> weighted edge list, tracking weak sparsity."""

    def __init__(self, fam, metric, stretch, builder):
        self.fam = fam
        self.mat = metric.matrix()
        self.stretch = stretch
        self._builder = builder
        self.weak_sparsity = 0.0
        self.invocations = 0

    def __call__(self, terminals, L):
        terminals = sorted(set(terminals))
        if L <= 0:
            raise ValueError("L must be positive")
        edges = self._builder(terminals, L)
        weight = sum(w for _, _, w in edges)
        self.invocations += 1
        if terminals:
            self.weak_sparsity = max(self.weak_sparsity, weight / (len(terminals) * L))
        return edges


def spanner_oracle_classic(fam, metric):
    """Connect sigma-close terminal pairs of distance <= 2L; stretch 1+8*rho."""
    if fam.kind != CLASSIC:
        raise ValueError("classic family required")
    if fam.rho >= 0.25:
        raise ValueError("classic oracle needs rho < 1/4")
    mat = metric.matrix()

    def builder(terminals, L):
        tset = set(terminals)
        edges = {}
        for o in fam.orderings:
            chain = [p for p in o.perm if p in tset]
            for a, b in zip(chain, chain[1:]):
                d = mat[a, b]
                if d <= 2 * L:
                    key = (a, b) if a < b else (b, a)
                    edges[key] = float(d)
        return [(a, b, w) for (a, b), w in edges.items()]

    return SpannerOracle(fam, metric, 1 + 8 * fam.rho, builder)


def spanner_oracle_triangle(fam, metric, hops=2):
    """Per-ordering hop structures over the terminal sub-path, truncated at
    edge weight 2*rho*L; stretch hops*rho."""
    if fam.kind != TRIANGLE:
        raise ValueError("triangle family required")
    if hops not in (2, 3, 4):
        raise ValueError("hops must be 2, 3 or 4")
    mat = metric.matrix()
    hop_cls = {2: TwoHopPathSpanner, 3: ThreeHopPathSpanner, 4: FourHopPathSpanner}[hops]

    def builder(terminals, L):
        cap = 2 * fam.rho * L
        edges = {}
        m = len(terminals)
        if m < 2:
            return []
        for o in fam.orderings:
            chain = sorted(terminals, key=lambda p: o.pos[p])
            hop = hop_cls(m)
            if hops == 2:
                pair_iter = (
                    (i, l)
                    for i in range(1, m + 1)
                    for l in hop.edges_of(i)
                    if l != i
                )
            else:
                pair_iter = ((a, b) for a, b in hop.edges)
            for a, b in pair_iter:
                u, v = chain[a - 1], chain[b - 1]
                d = mat[u, v]
                if d <= cap:
                    key = (u, v) if u < v else (v, u)
                    edges[key] = float(d)
        return [(a, b, w) for (a, b), w in edges.items()]

    return SpannerOracle(fam, metric, hops * fam.rho, builder)


def shortest_paths_on_edges(n, edges, sources):
    """Dijkstra over an explicit edge list (for oracle stretch checks)."""
    adj = [[] for _ in range(n)]
    for u, v, w in edges:
        adj[u].append((v, w))
        adj[v].append((u, w))
    out = {}
    for s in sources:
        dist = [math.inf] * n
        dist[s] = 0.0
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, w in adj[u]:
                if d + w < dist[v]:
                    dist[v] = d + w
                    heapq.heappush(heap, (d + w, v))
        out[s] = dist
    return out
