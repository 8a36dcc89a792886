"""Triangle-LSO for l2 / lp (p in [1,2]) point sets via multi-scale random
ball carving, plus the shifted-grid classic LSO and the ball-intersection
Monte Carlo used to sanity-check the clustering probabilities.

A ball-carving ordering sorts points by their cluster keys top scale down:
at scale i (width w_i = xi^i * (1+delta')^shift) every point joins the first
sampled center whose lattice-translated ball covers it, and cluster keys
(center ordinal, lattice vector) are compared lexicographically.  Centers are
sampled once per base scale j in [0, gamma) and reused at scales j + k*gamma
scaled by xi^(k*gamma).

Center sampling draws the i.i.d. uniform sequence restricted to the arrivals
that first-cover some input point (exact thinning: everything else can never
win a point, so the assignment and cluster order are unchanged), which keeps
the stored center lists short even in high dimension.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import seeds
from .metrics import LpMetric, PointSet, min_max_pairwise
from .orderings import CLASSIC, TRIANGLE, Ordering, OrderingFamily, verify_classic, verify_triangle


class CoverageError(RuntimeError):
    """A point is not covered by the sampled centers at some needed scale."""


def sample_lp_ball(rng, count, dim, p):
    """Uniform samples in the unit lp ball (works for every p in [1, 2])."""
    if p == 2:
        g = rng.normal(size=(count, dim))
        e = rng.exponential(size=count)
        norm = np.sqrt((g * g).sum(axis=1) + 2.0 * e)
        return g / norm[:, None]
    g = rng.gamma(1.0 / p, size=(count, dim)) ** (1.0 / p)
    g *= rng.choice([-1.0, 1.0], size=(count, dim))
    e = rng.exponential(size=count)
    denom = ((np.abs(g) ** p).sum(axis=1) + e) ** (1.0 / p)
    return g / denom[:, None]


def _lp_norms(diff, p):
    if p == 2:
        return np.sqrt((diff * diff).sum(axis=-1))
    if p == 1:
        return np.abs(diff).sum(axis=-1)
    return (np.abs(diff) ** p).sum(axis=-1) ** (1.0 / p)


@dataclass
class BallCarvingScheme:
    """Randomness backing one ordering: per-base-scale center lists."""

    dim: int
    p: float
    t_internal: float
    delta: float
    xi: float
    gamma: int
    shift: int
    shift_count: int
    seed: int
    i_min: int
    i_max: int
    base_widths: list = field(default_factory=list)
    centers: dict = field(default_factory=dict)  # base scale j -> (l_j, d) array
    assignments: dict = field(default_factory=dict)  # (j, k) -> (ordinals, lattice)

    def width(self, i):
        return self.xi**i * (1.0 + self.delta / 3.0) ** self.shift

    def base_of(self, i):
        j = i % self.gamma
        k = (i - j) // self.gamma
        return j, k


@dataclass
class ScaleClustering:
    width: float
    scale: int
    assignment: dict  # point id -> (center ordinal, lattice tuple)

    def cluster_key(self, pid):
        ordinal, u = self.assignment[pid]
        return (ordinal, u)


def ordering_scale_range(metric_or_ps, scheme):
    """(i_min, i_max): below i_min all pairs are separated (2*w_i < min
    distance), at i_max one width covers the diameter (w_i >= max distance)."""
    metric = metric_or_ps if hasattr(metric_or_ps, "matrix") else LpMetric(metric_or_ps, scheme.p)
    dmin, dmax = min_max_pairwise(metric)
    shift_factor = (1.0 + scheme.delta / 3.0) ** scheme.shift
    i_min = math.floor(math.log(dmin / (2.0 * shift_factor)) / math.log(scheme.xi))
    while 2.0 * scheme.xi**i_min * shift_factor >= dmin:
        i_min -= 1
    while 2.0 * scheme.xi ** (i_min + 1) * shift_factor < dmin:
        i_min += 1
    i_max = math.ceil(math.log(dmax / shift_factor) / math.log(scheme.xi))
    while scheme.xi**i_max * shift_factor < dmax:
        i_max += 1
    while i_max > i_min and scheme.xi ** (i_max - 1) * shift_factor >= dmax:
        i_max -= 1
    return i_min, i_max


def _effective_points(points, scheme, j):
    """Scaled copies of the input needing coverage at base scale j."""
    ks = [
        (i - j) // scheme.gamma
        for i in range(scheme.i_min, scheme.i_max + 1)
        if i % scheme.gamma == j
    ]
    blocks = [points * scheme.xi ** (-(k * scheme.gamma)) for k in ks]
    return ks, blocks


def sample_scheme(ps, p, t_internal, delta, shift, shift_count, seed, max_batches=None):
    """Sample the assignment-relevant center sequence for one ordering."""
    points = ps.points
    n, d = points.shape
    xi = 12.0 * math.sqrt(d) / t_internal if p == 2 else 36.0 * d / t_internal
    gamma = max(1, math.ceil(d / t_internal**p))
    scheme = BallCarvingScheme(
        dim=d,
        p=p,
        t_internal=t_internal,
        delta=delta,
        xi=xi,
        gamma=gamma,
        shift=shift,
        shift_count=shift_count,
        seed=seed,
        i_min=0,
        i_max=0,
    )
    if n >= 2:
        metric = LpMetric(ps, p)
        try:
            scheme.i_min, scheme.i_max = ordering_scale_range(metric, scheme)
        except ValueError:  # all points identical
            scheme.i_min = scheme.i_max = 0
    scheme.base_widths = [scheme.width(j) for j in range(gamma)]
    for j in range(gamma):
        ks, blocks = _effective_points(points, scheme, j)
        if not ks:
            scheme.centers[j] = np.zeros((0, d))
            continue
        eff = np.concatenate(blocks, axis=0)
        w = scheme.base_widths[j]
        rng = seeds.rng_for(seed, "centers", j)
        centers, ordinals, lattice = _sample_covering_centers(
            eff, w, p, rng, max_batches=max_batches
        )
        scheme.centers[j] = centers
        for bi, k in enumerate(ks):
            lo, hi = bi * n, (bi + 1) * n
            scheme.assignments[(j, k)] = (ordinals[lo:hi].copy(), lattice[lo:hi].copy())
    return scheme


def _sample_covering_centers(eff, w, p, rng, batch=64, max_batches=None):
    """Thinned uniform center process: each accepted center is the next
    arrival that covers a still-uncovered effective point."""
    m, d = eff.shape
    period = 4.0 * w
    if max_batches is None:
        max_batches = 256 * m + 4096
    uncovered = np.arange(m)
    ordinals = np.full(m, -1, dtype=np.int64)
    lattice = np.zeros((m, d), dtype=np.int64)
    centers = []
    batches = 0
    while uncovered.size:
        batches += 1
        if batches > max_batches:
            raise CoverageError(
                f"center sampling exhausted after {max_batches} batches "
                f"({uncovered.size} points uncovered)"
            )
        sub = eff[uncovered]
        pick = rng.integers(0, uncovered.size, size=batch)
        offs = sample_lp_ball(rng, batch, d, p) * w
        cand = sub[pick] - offs
        cand -= period * np.floor(cand / period)
        diff = sub[None, :, :] - cand[:, None, :]
        u = np.rint(diff / period)
        dist = _lp_norms(diff - period * u, p)
        covered_mask = dist <= w
        counts = covered_mask.sum(axis=1)
        accept = rng.random(size=batch)
        for c in range(batch):
            if counts[c] == 0:
                continue
            if accept[c] < 1.0 / counts[c]:
                row = covered_mask[c]
                ordinal = len(centers)
                centers.append(cand[c])
                hit = uncovered[row]
                ordinals[hit] = ordinal
                lattice[hit] = u[c][row].astype(np.int64)
                uncovered = uncovered[~row]
                break  # batch proposals were drawn against the old uncovered set
    return np.asarray(centers), ordinals, lattice


def carve_scale(ps, scheme, i):
    """Reference first-covering-center assignment at scale i.

    Scans the stored base-scale centers in order (scaled by xi^(k*gamma));
    raises CoverageError if some point is uncovered.
    """
    if not scheme.i_min <= i <= scheme.i_max:
        raise ValueError(f"scale {i} outside scheme range [{scheme.i_min}, {scheme.i_max}]")
    j, k = scheme.base_of(i)
    w = scheme.base_widths[j]
    period = 4.0 * w
    centers = scheme.centers[j]
    pts = ps.points * scheme.xi ** (-(k * scheme.gamma))
    assignment = {}
    for pid in range(len(pts)):
        z = pts[pid]
        found = None
        if centers.size:
            diff = z[None, :] - centers
            u = np.rint(diff / period)
            dist = _lp_norms(diff - period * u, scheme.p)
            hits = np.nonzero(dist <= w)[0]
            if hits.size:
                first = int(hits[0])
                found = (first, tuple(int(x) for x in u[first]))
        if found is None:
            raise CoverageError(f"point {pid} uncovered at scale {i}")
        assignment[pid] = found
    return ScaleClustering(width=scheme.width(i), scale=i, assignment=assignment)


def _ordering_from_scheme(ps, scheme):
    """Top-down sort: cluster keys from i_max down to i_min, ties by id."""
    n = len(ps.points)
    keys = []
    for pid in range(n):
        keys.append([])
    for i in range(scheme.i_max, scheme.i_min - 1, -1):
        j, k = scheme.base_of(i)
        ordinals, lattice = scheme.assignments[(j, k)]
        for pid in range(n):
            keys[pid].append((int(ordinals[pid]), tuple(int(x) for x in lattice[pid])))
    order = sorted(range(n), key=lambda pid: (keys[pid], pid))
    return Ordering(order)


def internal_stretch(p, t, d):
    """The construction's internal stretch parameter (the user-facing target t
    folds in the final halving; clamped at the dimension cap)."""
    cap = d ** (1.0 / p)
    return min(t / 2.0, cap)


def build_triangle_lso(ps, p, t, delta, m=None, seed=0):
    """Structural builder: m orderings per shift, S shifts; the verifier is
    the arbiter of the (1+delta)*t stretch target."""
    if isinstance(ps, np.ndarray) or isinstance(ps, list):
        ps = PointSet(ps)
    if not (1 <= p <= 2):
        raise ValueError("carving supports p in [1, 2] (use norm transfer beyond)")
    if p == 2 and t < 4:
        raise ValueError("t must be >= 4 for p = 2")
    if p < 2 and t < 5:
        raise ValueError("t must be >= 5 for p < 2")
    if not (0 < delta <= 1):
        raise ValueError("delta must be in (0, 1]")
    n, d = ps.points.shape
    t_int = internal_stretch(p, t, d)
    delta_p = delta / 3.0
    xi = 12.0 * math.sqrt(d) / t_int if p == 2 else 36.0 * d / t_int
    shift_count = int(math.floor(math.log(xi) / math.log(1.0 + delta_p))) + 1
    if m is None:
        m = default_ordering_count(n, d, p, t)
    orderings = []
    schemes = []
    if n == 1 or np.all(ps.points == ps.points[0]):
        fam = OrderingFamily(TRIANGLE, [Ordering(range(n))], rho=(1 + delta) * t)
        fam.meta["construction"] = "ball-carving-degenerate"
        return fam
    for s in range(shift_count):
        for q in range(m):
            scheme = sample_scheme(
                ps, p, t_int, delta, s, shift_count, seeds.derive(seed, "ordering", s, q)
            )
            schemes.append(scheme)
            orderings.append(_ordering_from_scheme(ps, scheme))
    fam = OrderingFamily(TRIANGLE, orderings, rho=(1 + delta) * t)
    fam.meta["construction"] = "ball-carving"
    fam.meta["schemes"] = schemes
    fam.meta["m"] = m
    fam.meta["shift_count"] = shift_count
    return fam


def default_ordering_count(n, d, p, t):
    if p == 2:
        return max(1, math.ceil(math.sqrt(d) / t * math.exp(d / (2.0 * t * t)) * math.log(max(n, 2))))
    return max(1, math.ceil(d ** (1.0 / p) / t * math.exp(d / (2.0 * t**p)) * math.log(max(n, 2))))


def build_triangle_lso_verified(ps, p, t, delta, seed=0, max_doublings=6):
    """Doubling loop: start at the default m, verify on the input, double m
    with fresh seeds until the verifier passes."""
    if isinstance(ps, (np.ndarray, list)):
        ps = PointSet(ps)
    metric = LpMetric(ps, p)
    m = default_ordering_count(len(ps.points), ps.dim, p, t)
    last = None
    for attempt in range(max_doublings + 1):
        fam = build_triangle_lso(ps, p, t, delta, m=m, seed=seeds.derive(seed, "attempt", attempt))
        report = verify_triangle(fam, metric)
        fam.meta["attempts"] = attempt + 1
        fam.meta["verification"] = report
        if report.passed:
            return fam
        last = report
        m *= 2
    raise RuntimeError(
        f"triangle LSO failed verification after {max_doublings} doublings "
        f"(max stretch {last.max_observed_stretch:.4g} vs rho {last.rho:.4g})"
    )


# ---------------------------------------------------------------------------
# ball-intersection Monte Carlo


@dataclass
class VolumeRatioEstimate:
    dim: int
    radius: float
    separation: float
    p: float
    samples: int
    estimate: float
    stderr: float
    hits_intersection: int
    hits_union: int


def estimate_volume_ratio(d, radius, separation, p=2, samples=1_000_000, seed=0):
    """Vol(B1 and B2) / Vol(B1 or B2) by Monte Carlo over the union.

    Proposals are drawn uniformly from a random one of the two balls and
    accepted with probability 1/#covering-balls, which makes the accepted
    points exactly uniform over the union at any dimension (box rejection
    dies at large d: its hit rate is Vol(ball)/2^d).  `samples` counts
    proposals; every accepted sample is a union hit.
    """
    if separation < 0:
        raise ValueError("separation must be nonnegative")
    if separation == 0:
        return VolumeRatioEstimate(d, radius, 0.0, p, 0, 1.0, 0.0, 0, 0)
    if separation >= 2 * radius:
        return VolumeRatioEstimate(d, radius, separation, p, 0, 0.0, 0.0, 0, 0)
    if samples < 10_000:
        raise ValueError("at least 10^4 samples required")
    rng = seeds.rng_for(seed, "volume-ratio", d, radius, separation, p)
    inter = 0
    union = 0
    remaining = samples
    batch = 100_000
    offset = np.zeros(d)
    offset[0] = separation
    while remaining > 0:
        b = min(batch, remaining)
        remaining -= b
        pts = sample_lp_ball(rng, b, d, p) * radius
        side = rng.integers(0, 2, size=b)
        pts[side == 1, 0] += separation
        # distance to the other ball's center decides multiplicity
        other = pts.copy()
        other[side == 0] -= offset  # their other center sits at (separation, 0, ...)
        in_other = _lp_norms(other, p) <= radius  # side==1 rows measure against the origin
        keep = ~in_other | (rng.random(b) < 0.5)
        inter += int(np.sum(in_other & keep))
        union += int(np.sum(keep))
    est = inter / union if union else 0.0
    stderr = math.sqrt(est * (1 - est) / union) if union else 0.0
    return VolumeRatioEstimate(d, radius, separation, p, samples, est, stderr, inter, union)


# ---------------------------------------------------------------------------
# classic grid LSO (shifted hierarchical grids, input-adaptive patterns)

GRID_BITS = 60


def _bit_length_array(v):
    """Exact bit length of nonnegative int64 arrays."""
    out = np.zeros(v.shape, dtype=np.int64)
    work = v.copy()
    for shiftw in (32, 16, 8, 4, 2, 1):
        mask = work >= (1 << shiftw)
        out[mask] += shiftw
        work[mask] >>= shiftw
    out[v > 0] += 1
    return out


class GridClassicLso:
    """Classic family over shifted hierarchical grids.

    Diagonal shifts j/(2d+1) place every pair deep in a common dyadic cell in
    some shift; levels are grouped into chunks of b bits per axis starting at
    phase r, and a cell-ordering pattern makes the pair's two chunk-children
    adjacent, confining the between-window to those two subcells.  Lookup of
    the satisfying ordering for a pair takes O(shifts * d) time, independent
    of n.
    """

    def __init__(self, family, points_int, shifts, b, pair_lookup, norm_scale):
        self.family = family
        self.points_int = points_int
        self.shifts = shifts
        self.b = b
        self.pair_lookup = pair_lookup
        self.norm_scale = norm_scale

    def satisfying_ordering(self, x, y):
        """Ordering index serving the pair (point ids)."""
        if x == y:
            return 0
        sh, lvl = _best_shift(self.points_int, x, y, self.b)
        key = _pair_key(self.points_int, sh, lvl, self.b, x, y)
        return self.pair_lookup.get(key)


def _split_level(xi_arr, yi_arr):
    """Deepest level at which two int-grid points share a cell (per shift)."""
    xor = xi_arr ^ yi_arr
    bl = _bit_length_array(xor)
    return int((GRID_BITS - bl).min())


def _best_shift(points_int, x, y, b):
    best_sh, best_lvl = 0, -1
    for sh in range(len(points_int)):
        lvl = _split_level(points_int[sh][x], points_int[sh][y])
        if lvl > best_lvl:
            best_sh, best_lvl = sh, lvl
    return best_sh, best_lvl


def _chunk_symbol(points_int, sh, pid, level_top, b):
    """Symbol of the b-bit chunk below level_top (levels level_top+1..+b)."""
    coords = points_int[sh][pid]
    shift_amt = GRID_BITS - level_top - b
    sym = 0
    mask = (1 << b) - 1
    for axis in range(coords.shape[0]):
        sym |= (int(coords[axis]) >> shift_amt & mask) << (b * axis)
    return sym


def _pair_key(points_int, sh, lvl, b, x, y):
    phase = lvl % b
    a = _chunk_symbol(points_int, sh, x, lvl, b)
    bb = _chunk_symbol(points_int, sh, y, lvl, b)
    if a > bb:
        a, bb = bb, a
    return (sh, phase, a, bb)


def _greedy_path_patterns(pairs):
    """Decompose needed symbol pairs into simple paths (one per pattern)."""
    remaining = set(pairs)
    patterns = []
    while remaining:
        a, bmax = next(iter(remaining))
        path = [a, bmax]
        used = {a, bmax}
        remaining.discard((a, bmax))
        grew = True
        while grew:
            grew = False
            for pair in list(remaining):
                u, v = pair
                if u == path[-1] and v not in used:
                    path.append(v)
                elif v == path[-1] and u not in used:
                    path.append(u)
                elif u == path[0] and v not in used:
                    path.insert(0, v)
                elif v == path[0] and u not in used:
                    path.insert(0, u)
                else:
                    continue
                used.update(pair)
                remaining.discard(pair)
                grew = True
                break
        patterns.append({sym: rank for rank, sym in enumerate(path)})
    return patterns


def build_classic_grid_lso(ps, eps, seed=0, max_rounds=6):
    """Shifted hierarchical grid family passing verify_classic at rho = eps."""
    if isinstance(ps, (np.ndarray, list)):
        ps = PointSet(ps)
    n, d = ps.points.shape
    if d > 4:
        raise ValueError(f"grid LSO is guarded to d <= 4 (got d = {d}): pattern table blows up")
    if not (0 < eps < 0.5):
        raise ValueError("eps must be in (0, 1/2)")
    pts = ps.points
    mins = pts.min(axis=0)
    extent = float((pts - mins).max())
    if extent == 0.0:
        fam = OrderingFamily(CLASSIC, [Ordering(range(n))], rho=eps)
        fam.meta["construction"] = "grid-degenerate"
        return GridClassicLso(fam, [], [], 1, {}, 1.0)
    norm = (pts - mins) / (extent * (1 + 1e-12))
    metric = LpMetric(ps, 2)
    mat_norm = LpMetric(PointSet(norm), 2).matrix()
    num_base_shifts = 2 * d + 1
    rng = seeds.rng_for(seed, "grid-extra-shifts")
    shifts = [np.full(d, j / num_base_shifts) for j in range(num_base_shifts)]
    for round_idx in range(max_rounds):
        points_int = []
        for off in shifts:
            scaled = (norm + off[None, :]) / 2.0
            points_int.append((scaled * (1 << GRID_BITS)).astype(np.int64))
        # deepest common level per pair under its best shift
        best_lvl = np.full((n, n), -1, dtype=np.int64)
        best_sh = np.zeros((n, n), dtype=np.int64)
        for sh in range(len(shifts)):
            pi = points_int[sh]
            lvl_pair = np.full((n, n), GRID_BITS, dtype=np.int64)
            for axis in range(d):
                xor = pi[:, axis][:, None] ^ pi[:, axis][None, :]
                lvl_pair = np.minimum(lvl_pair, GRID_BITS - _bit_length_array(xor))
            upd = lvl_pair > best_lvl
            best_lvl[upd] = lvl_pair[upd]
            best_sh[upd] = sh
        # chunk width: window diameter sqrt(d)*2^(1-(lvl+b)) must be <= eps*d(x,y)
        iu = np.triu_indices(n, k=1)
        dist = mat_norm[iu]
        lvl = best_lvl[iu]
        positive = dist > 0
        need = np.log2(math.sqrt(d) * 2.0 / (eps * dist[positive])) - lvl[positive]
        b = max(1, int(math.ceil(need.max()))) if positive.any() else 1
        if b * d > 58:
            raise ValueError(
                f"grid LSO needs {b} bits/axis at d={d}; symbol table too large (eps too small)"
            )
        needed = {}
        for t_idx in range(iu[0].size):
            x, y = int(iu[0][t_idx]), int(iu[1][t_idx])
            if mat_norm[x, y] == 0.0:
                continue
            sh = int(best_sh[x, y])
            key = _pair_key(points_int, sh, int(best_lvl[x, y]), b, x, y)
            needed.setdefault((key[0], key[1]), set()).add((key[2], key[3]))
        orderings = []
        perm_index = {}
        pair_lookup = {}
        for (sh, phase), pairs in sorted(needed.items()):
            patterns = _greedy_path_patterns(sorted(pairs))
            for pattern in patterns:
                perm = _materialize_grid_ordering(points_int[sh], phase, b, pattern)
                tkey = tuple(perm)
                if tkey not in perm_index:
                    perm_index[tkey] = len(orderings)
                    orderings.append(Ordering(perm))
                idx = perm_index[tkey]
                for a, bb in pairs:
                    if pattern.get(a) is not None and pattern.get(bb) is not None:
                        if abs(pattern[a] - pattern[bb]) == 1:
                            pair_lookup[(sh, phase, a, bb)] = idx
        if not orderings:
            orderings = [Ordering(range(n))]
        fam = OrderingFamily(CLASSIC, orderings, rho=eps)
        fam.meta["construction"] = "shifted-grid"
        fam.meta["chunk_bits"] = b
        fam.meta["num_shifts"] = len(shifts)
        grid = GridClassicLso(fam, points_int, shifts, b, pair_lookup, extent)
        report = verify_classic(fam, metric, hint=grid.satisfying_ordering)
        fam.meta["verification"] = report
        if report.passed:
            return grid
        # add a fresh random diagonal shift and retry
        shifts.append(rng.uniform(0.0, 1.0, size=1).repeat(d))
    raise RuntimeError(f"grid LSO failed verification after {max_rounds} rounds")


def _materialize_grid_ordering(pi, phase, b, pattern):
    """Sort points by chunked cell symbols, full chunks mapped through the
    pattern rank (unranked symbols order after ranked ones, by raw value)."""
    n = pi.shape[0]
    d = pi.shape[1]
    keys = []
    for pid in range(n):
        coords = pi[pid]
        key = []
        level = 0
        if phase > 0:
            sym = 0
            mask = (1 << phase) - 1
            for axis in range(d):
                sym |= (int(coords[axis]) >> (GRID_BITS - phase) & mask) << (phase * axis)
            key.append((0, sym))
            level = phase
        while level < GRID_BITS:
            width = min(b, GRID_BITS - level)
            sym = 0
            mask = (1 << width) - 1
            for axis in range(d):
                sym |= (int(coords[axis]) >> (GRID_BITS - level - width) & mask) << (width * axis)
            if width == b and sym in pattern:
                key.append((0, pattern[sym]))
            else:
                key.append((1, sym))
            level += width
        keys.append((key, pid))
    keys.sort()
    return [pid for _, pid in keys]
