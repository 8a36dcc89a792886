"""Labeled nearest neighbor search: predecessor structures with O(1) minimum,
exact ultrametric NNS via preorder positions + lca labels, and the dynamic
reductions from rooted / triangle ordering families.

Labels are assigned once over the host point set; the dynamic structures see
only labels of the current subset P plus the query's label.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .hopsets import TwoHopPathSpanner
from .orderings import ROOTED, TRIANGLE


class NoSharedOrderingError(LookupError):
    """Query point shares no ordering with any stored point."""


class EmptyStructureError(LookupError):
    """No points are currently stored."""


class PredecessorSet:
    """Two-level bucket structure over [0, N): sorted buckets under a sorted
    directory of nonempty buckets, with an O(1) minimum cache."""

    def __init__(self, universe):
        if universe < 1:
            raise ValueError("universe size must be >= 1")
        self.universe = int(universe)
        self.bucket_bits = max(1, self.universe.bit_length() // 2)
        self._buckets = {}
        self._directory = []  # sorted nonempty bucket ids
        self._min = None
        self._size = 0

    def __len__(self):
        return self._size

    def _check(self, x):
        if not 0 <= x < self.universe:
            raise ValueError(f"element {x} outside universe [0, {self.universe})")

    def insert(self, x):
        self._check(x)
        hi = x >> self.bucket_bits
        bucket = self._buckets.get(hi)
        if bucket is None:
            bucket = []
            self._buckets[hi] = bucket
            _insort(self._directory, hi)
        pos = _bisect(bucket, x)
        if pos < len(bucket) and bucket[pos] == x:
            return False
        bucket.insert(pos, x)
        self._size += 1
        if self._min is None or x < self._min:
            self._min = x
        return True

    def delete(self, x):
        self._check(x)
        hi = x >> self.bucket_bits
        bucket = self._buckets.get(hi)
        if not bucket:
            return False
        pos = _bisect(bucket, x)
        if pos >= len(bucket) or bucket[pos] != x:
            return False
        bucket.pop(pos)
        self._size -= 1
        if not bucket:
            del self._buckets[hi]
            self._directory.remove(hi)
        if x == self._min:
            self._min = self.successor(x) if self._size else None
        return True

    def minimum(self):
        return self._min

    def predecessor(self, q):
        """Largest stored element <= q (None if none)."""
        self._check(q)
        hi = q >> self.bucket_bits
        bucket = self._buckets.get(hi)
        if bucket:
            pos = _bisect(bucket, q + 1)
            if pos > 0:
                return bucket[pos - 1]
        dpos = _bisect(self._directory, hi)
        if dpos > 0:
            return self._buckets[self._directory[dpos - 1]][-1]
        return None

    def successor(self, q):
        """Smallest stored element >= q (None if none)."""
        self._check(q)
        hi = q >> self.bucket_bits
        bucket = self._buckets.get(hi)
        if bucket:
            pos = _bisect(bucket, q)
            if pos < len(bucket):
                return bucket[pos]
        dpos = _bisect(self._directory, hi + 1)
        if dpos < len(self._directory):
            return self._buckets[self._directory[dpos]][0]
        return None

    def members(self):
        out = []
        for hi in self._directory:
            out.extend(self._buckets[hi])
        return out


def _bisect(arr, x):
    lo, hi = 0, len(arr)
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _insort(arr, x):
    arr.insert(_bisect(arr, x), x)


# ---------------------------------------------------------------------------
# lca labels over HSTs


@dataclass
class LcaLabel:
    """Heavy-path spine of one leaf: (apex id, exit index, node id at exit,
    node label at exit) per heavy path on the root-leaf walk."""

    point: int
    spine: list


def build_lca_labels(hst):
    """Heavy-path spine labels: O(log n) entries per leaf; two labels
    alone identify the lca node and its label."""
    ids = {}
    sizes = {}

    def measure(node):
        ids[id(node)] = len(ids)
        if not node.children:
            sizes[id(node)] = 1
            return 1
        total = 0
        for ch in node.children:
            total += measure(ch)
        sizes[id(node)] = total
        return total

    measure(hst.root)
    labels = {}

    def walk(node, spine, apex, depth_in_path):
        if not node.children:
            entry = (apex, depth_in_path, ids[id(node)], node.label)
            labels[node.point] = LcaLabel(point=node.point, spine=spine + [entry])
            return
        heavy = max(node.children, key=lambda ch: (sizes[id(ch)], -ids[id(ch)]))
        for ch in node.children:
            if ch is heavy:
                walk(ch, spine, apex, depth_in_path + 1)
            else:
                entry = (apex, depth_in_path, ids[id(node)], node.label)
                walk(ch, spine + [entry], ids[id(ch)], 0)

    walk(hst.root, [], ids[id(hst.root)], 0)
    return labels


def lca_from_labels(la, lb):
    """(node id, label) of the lca of two leaves, from their labels only."""
    k = 0
    while k < len(la.spine) and k < len(lb.spine):
        apex_a, exit_a, node_a, lab_a = la.spine[k]
        apex_b, exit_b, node_b, lab_b = lb.spine[k]
        if apex_a != apex_b:
            # diverged into different light children below the previous exit
            _, _, node, lab = la.spine[k - 1]
            return node, lab
        if exit_a != exit_b:
            # diverge on this heavy path: lca is the shallower exit node
            return (node_a, lab_a) if exit_a < exit_b else (node_b, lab_b)
        k += 1
    # one spine is a prefix of the other (same leaf): its last exit node
    shorter = la if len(la.spine) <= len(lb.spine) else lb
    _, _, node, lab = shorter.spine[len(shorter.spine) - 1]
    return node, lab


@dataclass
class UltrametricNns:
    """Exact 1-NNS over a subset of HST leaves: preorder predecessor/successor
    plus lca labels give the exact ultrametric distance."""

    hst: object
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        order = self.hst.preorder_leaves()
        self.position = {p: i for i, p in enumerate(order)}
        self.by_position = {i: p for p, i in self.position.items()}
        if not self.labels:
            self.labels = build_lca_labels(self.hst)
        self.pred = PredecessorSet(len(order))
        self.current = set()

    def insert(self, pid):
        if self.pred.insert(self.position[pid]):
            self.current.add(pid)

    def delete(self, pid):
        if self.pred.delete(self.position[pid]):
            self.current.discard(pid)

    def query(self, q):
        """(nearest stored point, exact ultrametric distance)."""
        if not self.current:
            raise EmptyStructureError("no points stored")
        pos = self.position[q]
        best = None
        for cand_pos in (self.pred.predecessor(pos), self.pred.successor(pos)):
            if cand_pos is None:
                continue
            cand = self.by_position[cand_pos]
            if cand == q:
                return (q, 0.0)
            _, dist = lca_from_labels(self.labels[q], self.labels[cand])
            if best is None or dist < best[1] or (dist == best[1] and cand < best[0]):
                best = (cand, dist)
        return best


# ---------------------------------------------------------------------------
# rooted-LSO reduction


@dataclass
class RootedNnsLabel:
    point: int
    entries: list  # (ordering id, position, distance to that ordering's root)


def assign_rooted_labels(fam, metric):
    """Label each host point with its (ordering, position, root distance)."""
    if fam.kind != ROOTED:
        raise ValueError("rooted labels need a rooted family")
    labels = {}
    for oid, o in enumerate(fam.orderings):
        for pos, pid in enumerate(o.perm):
            labels.setdefault(pid, RootedNnsLabel(pid, [])).entries.append(
                (oid, pos, metric.dist(pid, o.root))
            )
    return labels


class RootedNns:
    """Dynamic rho-NNS: per ordering, the minimum stored position; the answer
    minimizes d(q, root) + d(root, y_min)."""

    def __init__(self, fam, labels):
        self.rho = fam.rho
        self.sizes = {oid: len(o.perm) for oid, o in enumerate(fam.orderings)}
        self.labels = labels
        self.structs = {}
        self.point_at = {}  # (ordering, position) -> point id
        self.current = set()

    def _struct(self, oid):
        s = self.structs.get(oid)
        if s is None:
            s = PredecessorSet(self.sizes[oid])
            self.structs[oid] = s
        return s

    def insert(self, pid):
        if pid in self.current:
            return
        self.current.add(pid)
        for oid, pos, _ in self.labels[pid].entries:
            self._struct(oid).insert(pos)
            self.point_at[(oid, pos)] = pid

    def delete(self, pid):
        if pid not in self.current:
            return
        self.current.discard(pid)
        for oid, pos, _ in self.labels[pid].entries:
            self._struct(oid).delete(pos)
            self.point_at.pop((oid, pos), None)

    def query(self, q_label):
        """Approximate nearest stored point for a labeled query."""
        if not self.current:
            raise EmptyStructureError("no points stored")
        if q_label.point in self.current:
            return q_label.point, 0.0
        best = None
        seen_any = False
        for oid, _, d_q_root in q_label.entries:
            s = self.structs.get(oid)
            if s is None or len(s) == 0:
                continue
            seen_any = True
            pos_min = s.minimum()
            y = self.point_at[(oid, pos_min)]
            d_root_y = _entry_distance(self.labels[y], oid)
            est = d_q_root + d_root_y
            if best is None or est < best[1] or (est == best[1] and y < best[0]):
                best = (y, est)
        if not seen_any:
            raise NoSharedOrderingError(
                f"query point {q_label.point} shares no ordering with stored points"
            )
        return best


def _entry_distance(label, oid):
    for o, _, dist in label.entries:
        if o == oid:
            return dist
    raise KeyError(f"label of {label.point} lacks ordering {oid}")


# ---------------------------------------------------------------------------
# triangle-LSO reduction


@dataclass
class TriangleNnsLabel:
    point: int
    positions: dict  # ordering id -> position (1-indexed for hop structure)
    midpoints: dict  # ordering id -> list of (midpoint position, metric distance)


def assign_triangle_labels(fam, metric):
    """Per ordering: position plus the responsible midpoint edges of the
    2-hop structure over host positions, with true metric weights."""
    if fam.kind != TRIANGLE:
        raise ValueError("triangle labels need a triangle family")
    n_host = len(fam.orderings[0].perm) if fam.orderings else 0
    hop = TwoHopPathSpanner(n_host)
    labels = {}
    for oid, o in enumerate(fam.orderings):
        for pos0, pid in enumerate(o.perm):
            pos = pos0 + 1
            label = labels.setdefault(pid, TriangleNnsLabel(pid, {}, {}))
            label.positions[oid] = pos
            mids = []
            for l in hop.edges_of(pos):
                other = o.perm[l - 1]
                mids.append((l, metric.dist(pid, other)))
            label.midpoints[oid] = mids
    return labels, hop


class TriangleNns:
    """Dynamic 2*rho-NNS: predecessor/successor per ordering, each estimated
    through the 2-hop midpoint, whose weights live in the labels."""

    def __init__(self, fam, labels, hop):
        self.rho = fam.rho
        self.num_orderings = len(fam.orderings)
        self.labels = labels
        self.hop = hop
        self.structs = [PredecessorSet(self.hop.n + 1) for _ in range(self.num_orderings)]
        self.point_at = {}
        self.current = set()

    def insert(self, pid):
        if pid in self.current:
            return
        self.current.add(pid)
        label = self.labels[pid]
        for oid, pos in label.positions.items():
            self.structs[oid].insert(pos)
            self.point_at[(oid, pos)] = pid

    def delete(self, pid):
        if pid not in self.current:
            return
        self.current.discard(pid)
        for oid, pos in self.labels[pid].positions.items():
            self.structs[oid].delete(pos)
            self.point_at.pop((oid, pos), None)

    def _estimate(self, q_label, oid, cand_pos):
        qpos = q_label.positions[oid]
        lo, hi = min(qpos, cand_pos), max(qpos, cand_pos)
        mid = self.hop.query(lo, hi)
        cand = self.point_at[(oid, cand_pos)]
        d_q_mid = _mid_weight(q_label, oid, mid)
        d_mid_c = _mid_weight(self.labels[cand], oid, mid)
        return cand, d_q_mid + d_mid_c

    def query(self, q_label):
        if not self.current:
            raise EmptyStructureError("no points stored")
        if q_label.point in self.current:
            return q_label.point, 0.0
        best = None
        for oid, qpos in q_label.positions.items():
            s = self.structs[oid]
            if len(s) == 0:
                continue
            for cand_pos in (s.predecessor(qpos), s.successor(qpos)):
                if cand_pos is None:
                    continue
                cand, est = self._estimate(q_label, oid, cand_pos)
                if best is None or est < best[1] or (est == best[1] and cand < best[0]):
                    best = (cand, est)
        if best is None:
            raise EmptyStructureError("no points stored in any ordering")
        return best


def _mid_weight(label, oid, mid_pos):
    if label.positions[oid] == mid_pos:
        return 0.0
    for pos, dist in label.midpoints[oid]:
        if pos == mid_pos:
            return dist
    raise KeyError(f"midpoint {mid_pos} not in label of {label.point} (ordering {oid})")


ULTRAMETRIC_STRATEGIES = ("lca", "distance-labeling", "jl")


def make_ultrametric_nns(hst, strategy="lca"):
    """Strategy selector for ultrametric NNS.  Only the exact lca-label route
    is built; the other strategies are cited machinery and error out."""
    if strategy == "lca":
        return UltrametricNns(hst)
    if strategy in ULTRAMETRIC_STRATEGIES:
        raise NotImplementedError(f"out of scope: ultrametric NNS strategy {strategy!r}")
    raise ValueError(f"unknown ultrametric NNS strategy {strategy!r}")


def label_budget_report(labels):
    """Measured label sizes: entries per label kind."""
    sizes = []
    for lab in labels.values():
        if isinstance(lab, RootedNnsLabel):
            sizes.append(len(lab.entries))
        elif isinstance(lab, TriangleNnsLabel):
            sizes.append(sum(1 + len(m) for m in lab.midpoints.values()))
        else:
            sizes.append(len(lab.spine))
    return {"max_entries": max(sizes), "mean_entries": float(np.mean(sizes))}
