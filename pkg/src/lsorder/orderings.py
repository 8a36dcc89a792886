"""Ordering families (classic / triangle / rooted), their brute-force
verifiers, and the combinatorial rooted builders for trees and treewidth
graphs.

The verifiers implement the defining window conditions literally over every
pair and are the correctness oracle for every construction in the package.
A pair passes when some ordering certifies it; the report records, per pair,
the best certified ratio (for violating pairs this is the exact minimum over
all orderings).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import WeightedGraph, graph_distances

VERIFY_TOL = 1e-9

CLASSIC = "classic"
TRIANGLE = "triangle"
ROOTED = "rooted"


class Ordering:
    """Permutation over a subset of point ids; rooted orderings start at the
    root and are nondecreasing in distance to it."""

    def __init__(self, perm, root=None):
        self.perm = list(int(x) for x in perm)
        if len(set(self.perm)) != len(self.perm):
            raise ValueError("ordering contains repeated ids")
        self.root = None if root is None else int(root)
        if self.root is not None and (not self.perm or self.perm[0] != self.root):
            raise ValueError("rooted ordering must start at its root")
        self.pos = {p: idx for idx, p in enumerate(self.perm)}

    def __len__(self):
        return len(self.perm)

    def __contains__(self, pid):
        return pid in self.pos


@dataclass
class OrderingFamily:
    kind: str
    orderings: list
    rho: float
    tau: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (CLASSIC, TRIANGLE, ROOTED):
            raise ValueError(f"unknown ordering family kind {self.kind!r}")
        if not self.tau:
            if self.kind == ROOTED:
                counts = {}
                for o in self.orderings:
                    for p in o.perm:
                        counts[p] = counts.get(p, 0) + 1
                self.tau = max(counts.values(), default=0)
            else:
                self.tau = len(self.orderings)

    def membership(self):
        """point id -> list of ordering indices containing it."""
        out = {}
        for idx, o in enumerate(self.orderings):
            for p in o.perm:
                out.setdefault(p, []).append(idx)
        return out


@dataclass
class VerificationReport:
    kind: str
    rho: float
    pairs_checked: int
    violations: list
    max_observed_stretch: float

    @property
    def passed(self):
        return not self.violations

    def summary(self):
        return (
            f"{self.kind}: pairs={self.pairs_checked} rho={self.rho:.6g} "
            f"max_stretch={self.max_observed_stretch:.6g} "
            f"violations={len(self.violations)}"
        )


def _require_covering(fam, n):
    for idx, o in enumerate(fam.orderings):
        if len(o.perm) != n:
            raise ValueError(
                f"ordering {idx} covers {len(o.perm)} of {n} points; "
                f"{fam.kind} orderings must cover all points"
            )


def _classic_pair_ratio(window, dx_row, dy_row):
    """Smallest rho' such that the window splits into a prefix within
    rho'*d of x and a suffix within rho'*d of y (distances given in units
    of d(x,y))."""
    if window.size == 0:
        return 0.0
    a = dx_row[window]
    b = dy_row[window]
    # prefix maxima of a, suffix maxima of b; best split minimizes the max
    pref = np.concatenate(([0.0], np.maximum.accumulate(a)))
    suf = np.concatenate((np.maximum.accumulate(b[::-1])[::-1], [0.0]))
    return float(np.min(np.maximum(pref, suf)))


def verify_classic(fam, metric, hint=None):
    """Check Def-style classic windows for every pair, both orientations.

    hint(x, y) may propose an ordering index to try first; it only reorders
    the scan, never changes the outcome.
    """
    if fam.kind != CLASSIC:
        raise ValueError("verify_classic expects a classic family")
    n = metric.n
    _require_covering(fam, n)
    mat = metric.matrix()
    rho = fam.rho
    bound = rho * (1 + VERIFY_TOL)
    perms = [np.asarray(o.perm, dtype=np.int64) for o in fam.orderings]
    poss = [o.pos for o in fam.orderings]
    violations = []
    max_stretch = 0.0
    pairs = 0
    for x in range(n):
        for y in range(x + 1, n):
            pairs += 1
            d = mat[x, y]
            best = math.inf
            order_ids = range(len(perms))
            if hint is not None:
                h = hint(x, y)
                if h is not None:
                    order_ids = [h] + [k for k in range(len(perms)) if k != h]
            if d > 0.0:
                dx_row = mat[x] / d
                dy_row = mat[y] / d
            for k in order_ids:
                px, py = poss[k][x], poss[k][y]
                lo, hi = (px, py) if px < py else (py, px)
                window = perms[k][lo + 1 : hi]
                if d == 0.0:
                    ratio = 0.0 if np.all(mat[x, window] == 0.0) else math.inf
                else:
                    first, second = (dx_row, dy_row) if px < py else (dy_row, dx_row)
                    ratio = min(
                        _classic_pair_ratio(window, first, second),
                        # footnote orientation freedom: reversed assignment
                        _classic_pair_ratio(window, second, first),
                    )
                best = min(best, ratio)
                if best <= bound:
                    break
            max_stretch = max(max_stretch, min(best, 1e300))
            if best > bound:
                violations.append((x, y, best))
    return VerificationReport(CLASSIC, rho, pairs, violations, max_stretch)


def window_diameter_table(perm, mat):
    """D[i, j] = max pairwise distance among positions i..j of perm,
    via the interval recurrence D(i,j) = max(D(i+1,j), D(i,j-1), d(i,j))."""
    m = len(perm)
    sub = mat[np.ix_(perm, perm)]
    D = np.zeros((m, m))
    for span in range(1, m):
        i = np.arange(0, m - span)
        j = i + span
        D[i, j] = np.maximum(np.maximum(D[i + 1, j], D[i, j - 1]), sub[i, j])
    return D


def verify_triangle(fam, metric):
    """For every pair: min over orderings of window diameter / distance."""
    if fam.kind != TRIANGLE:
        raise ValueError("verify_triangle expects a triangle family")
    n = metric.n
    _require_covering(fam, n)
    mat = metric.matrix()
    rho = fam.rho
    bound = rho * (1 + VERIFY_TOL)
    best = np.full((n, n), np.inf)
    for o in fam.orderings:
        perm = np.asarray(o.perm, dtype=np.int64)
        D = window_diameter_table(perm, mat)
        inv = np.empty(n, dtype=np.int64)
        inv[perm] = np.arange(n)
        pi = np.minimum(inv[:, None], inv[None, :])
        pj = np.maximum(inv[:, None], inv[None, :])
        best = np.minimum(best, D[pi, pj])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mat > 0, best / np.where(mat > 0, mat, 1.0), np.where(best > 0, np.inf, 0.0))
    iu = np.triu_indices(n, k=1)
    ratios = ratio[iu]
    violations = [
        (int(iu[0][t]), int(iu[1][t]), float(ratios[t]))
        for t in np.nonzero(ratios > bound)[0]
    ]
    max_stretch = float(ratios.max()) if ratios.size else 0.0
    return VerificationReport(TRIANGLE, rho, len(ratios), violations, max_stretch)


def verify_rooted(fam, metric):
    """Rooted check: min over shared orderings of (d(u,root)+d(root,v))/d(u,v)."""
    if fam.kind != ROOTED:
        raise ValueError("verify_rooted expects a rooted family")
    n = metric.n
    mat = metric.matrix()
    rho = fam.rho
    bound = rho * (1 + VERIFY_TOL)
    for idx, o in enumerate(fam.orderings):
        if o.root is None:
            raise ValueError(f"ordering {idx} has no root")
        dists = mat[o.root][o.perm]
        if np.any(np.diff(dists) < 0):
            raise ValueError(f"ordering {idx} is not sorted by distance to root {o.root}")
    counts = np.zeros(n, dtype=np.int64)
    best = np.full((n, n), np.inf)
    for o in fam.orderings:
        members = np.asarray(o.perm, dtype=np.int64)
        counts[members] += 1
        via = mat[members[:, None], o.root] + mat[o.root, members[None, :]]
        cur = best[np.ix_(members, members)]
        best[np.ix_(members, members)] = np.minimum(cur, via)
    if fam.tau and counts.max(initial=0) > fam.tau:
        raise ValueError(
            f"per-point membership {int(counts.max())} exceeds declared tau {fam.tau}"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mat > 0, best / np.where(mat > 0, mat, 1.0), np.where(best > 0, np.inf, 0.0))
    iu = np.triu_indices(n, k=1)
    ratios = ratio[iu]
    violations = [
        (int(iu[0][t]), int(iu[1][t]), float(ratios[t]))
        for t in np.nonzero(ratios > bound)[0]
    ]
    max_stretch = float(ratios.max()) if ratios.size else 0.0
    return VerificationReport(ROOTED, rho, len(ratios), violations, max_stretch)


def verify_family(fam, metric, hint=None):
    if fam.kind == CLASSIC:
        return verify_classic(fam, metric, hint=hint)
    if fam.kind == TRIANGLE:
        return verify_triangle(fam, metric)
    return verify_rooted(fam, metric)


# ---------------------------------------------------------------------------
# rooted builders


def _tree_adjacency(tree):
    if not tree.is_tree():
        raise ValueError("input graph is not a tree")
    return tree.adjacency()


def _component_distances(adj, root, alive):
    """Tree distances from root within the alive-vertex component."""
    dist = {root: 0.0}
    stack = [root]
    while stack:
        u = stack.pop()
        for v, w in adj[u]:
            if v in alive and v not in dist:
                dist[v] = dist[u] + w
                stack.append(v)
    return dist


def _centroid(adj, alive):
    """Vertex minimizing the largest remaining component (ties: lowest id)."""
    comp = sorted(alive)
    if len(comp) == 1:
        return comp[0]
    sizes = {}
    order = []
    parent = {comp[0]: None}
    stack = [comp[0]]
    seen = {comp[0]}
    while stack:
        u = stack.pop()
        order.append(u)
        for v, _ in adj[u]:
            if v in alive and v not in seen:
                seen.add(v)
                parent[v] = u
                stack.append(v)
    for u in reversed(order):
        sizes[u] = 1 + sum(sizes[v] for v, _ in adj[u] if v in alive and parent.get(v) == u)
    total = len(comp)
    best, best_val = None, None
    for u in order:
        worst = total - sizes[u]
        for v, _ in adj[u]:
            if v in alive and parent.get(v) == u:
                worst = max(worst, sizes[v])
        if best_val is None or worst < best_val or (worst == best_val and u < best):
            best, best_val = u, worst
    return best


def build_rooted_lso_tree(tree):
    """Rooted family via vertex-centroid decomposition: exact (rho = 1),
    each point in at most ceil(log2 n) + 1 orderings."""
    adj = _tree_adjacency(tree)
    orderings = []
    stack = [frozenset(range(tree.n))]
    while stack:
        alive = stack.pop()
        if len(alive) < 2:
            continue  # singleton components serve no pair
        c = _centroid(adj, alive)
        dist = _component_distances(adj, c, alive)
        members = sorted(alive, key=lambda v: (dist[v], v))
        orderings.append(Ordering(members, root=c))
        remaining = alive - {c}
        seen = set()
        for v in sorted(remaining):
            if v in seen:
                continue
            comp = set()
            st = [v]
            comp.add(v)
            while st:
                u = st.pop()
                for wv, _ in adj[u]:
                    if wv in remaining and wv not in comp:
                        comp.add(wv)
                        st.append(wv)
            seen |= comp
            stack.append(frozenset(comp))
    fam = OrderingFamily(ROOTED, orderings, rho=1.0)
    fam.meta["construction"] = "tree-centroid"
    return fam


@dataclass
class TreeDecomposition:
    """Bags over graph vertices plus a tree on bag ids."""

    bags: list
    tree_edges: list

    @property
    def num_bags(self):
        return len(self.bags)

    @property
    def width(self):
        return max(len(b) for b in self.bags) - 1

    def bag_adjacency(self):
        adj = [[] for _ in self.bags]
        for a, b in self.tree_edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def validate(self, g):
        """Raise naming the violated decomposition axiom."""
        covered = set()
        for b in self.bags:
            covered |= set(b)
        if covered != set(range(g.n)):
            missing = sorted(set(range(g.n)) - covered)
            raise ValueError(f"vertex coverage violated: vertices {missing} appear in no bag")
        if self.num_bags > 1 and len(self.tree_edges) != self.num_bags - 1:
            raise ValueError("bag tree is not a tree: wrong edge count")
        adj = self.bag_adjacency()
        seen = {0}
        st = [0]
        while st:
            u = st.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    st.append(v)
        if len(seen) != self.num_bags:
            raise ValueError("bag tree is not a tree: disconnected")
        bagsets = [set(b) for b in self.bags]
        for u, v, _ in g.edges:
            if not any(u in bs and v in bs for bs in bagsets):
                raise ValueError(f"edge coverage violated: edge ({u},{v}) in no bag")
        for v in range(g.n):
            nodes = [i for i, bs in enumerate(bagsets) if v in bs]
            nodeset = set(nodes)
            seen_v = {nodes[0]}
            st = [nodes[0]]
            while st:
                a = st.pop()
                for b in adj[a]:
                    if b in nodeset and b not in seen_v:
                        seen_v.add(b)
                        st.append(b)
            if len(seen_v) != len(nodes):
                raise ValueError(
                    f"vertex connectivity violated: bags containing {v} are not a subtree"
                )


def _balanced_bag(nodes, adj):
    """Bag node minimizing the largest remaining bag-count (ties: lowest id)."""
    nodeset = set(nodes)
    best, best_val = None, None
    for cand in sorted(nodes):
        remaining = nodeset - {cand}
        seen = set()
        worst = 0
        for v in sorted(remaining):
            if v in seen:
                continue
            comp = {v}
            st = [v]
            while st:
                u = st.pop()
                for wv in adj[u]:
                    if wv in remaining and wv not in comp:
                        comp.add(wv)
                        st.append(wv)
            seen |= comp
            worst = max(worst, len(comp))
        if best_val is None or worst < best_val:
            best, best_val = cand, worst
    return best


def build_rooted_lso_treewidth(g, decomp):
    """Rooted family from a tree decomposition via balanced-bag separators.

    Returns the family; fam.meta["clusters"] records the laminar clusters with
    their separator bags for query confinement checks.
    """
    decomp.validate(g)
    dmat = graph_distances(g)
    adj = decomp.bag_adjacency()
    orderings = []
    clusters = []
    # state: (bag node ids forming a subtree, vertices removed so far)
    stack = [(frozenset(range(decomp.num_bags)), frozenset())]
    while stack:
        nodes, removed = stack.pop()
        vertices = set()
        for b in nodes:
            vertices |= set(decomp.bags[b])
        vertices -= removed
        if len(vertices) < 2:
            continue  # no pair to serve here
        sep = _balanced_bag(nodes, adj)
        bag_orig = sorted(set(decomp.bags[sep]))
        cluster_vertices = sorted(vertices)
        ordering_ids = []
        for x in bag_orig:
            elems = set(cluster_vertices) | {x}
            members = sorted(elems, key=lambda v: (dmat[x][v], v))
            members.remove(x)
            members.insert(0, x)
            ordering_ids.append(len(orderings))
            orderings.append(Ordering(members, root=x))
        clusters.append(
            {
                "vertices": cluster_vertices,
                "separator_bag": sep,
                "bag_vertices": bag_orig,
                "ordering_ids": ordering_ids,
            }
        )
        new_removed = removed | set(bag_orig)
        remaining_nodes = nodes - {sep}
        seen = set()
        for v in sorted(remaining_nodes):
            if v in seen:
                continue
            comp = {v}
            st = [v]
            while st:
                u = st.pop()
                for wv in adj[u]:
                    if wv in remaining_nodes and wv not in comp:
                        comp.add(wv)
                        st.append(wv)
            seen |= comp
            stack.append((frozenset(comp), new_removed))
    fam = OrderingFamily(ROOTED, orderings, rho=1.0)
    fam.meta["construction"] = "treewidth-balanced-bags"
    fam.meta["clusters"] = clusters
    return fam
