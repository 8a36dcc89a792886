import itertools

import numpy as np
import pytest

from lsorder.hopsets import (
    FourHopPathSpanner,
    FtTwoHopPathSpanner,
    ThreeHopPathSpanner,
    TwoHopPathSpanner,
)


def build_two_hop_reference(n):
    """Direct recursive construction of the E sets (oracle)."""
    n_pad = 1
    while n_pad < n:
        n_pad *= 2
    E = {i: {i} for i in range(1, n + 1)}

    def rec(lo, hi):
        if lo > n:
            return
        if lo == hi:
            return
        size = hi - lo + 1
        mid = lo - 1 + size // 2
        for i in range(lo, min(hi, n) + 1):
            if mid <= n:
                E[i].add(mid)
        rec(lo, mid)
        rec(mid + 1, hi)

    rec(1, n_pad)
    return E


def test_two_hop_small_counts():
    assert TwoHopPathSpanner(2).num_edges() == 2 * 1 + 1
    assert TwoHopPathSpanner(8).num_edges() == 8 * 3 + 1


def test_two_hop_exact_count_all_powers():
    for delta in range(1, 13):
        n = 1 << delta
        assert TwoHopPathSpanner(n).num_edges() == n * delta + 1


def test_two_hop_edge_sets_match_reference():
    for n in (2, 3, 6, 8, 13, 16, 31, 64):
        s = TwoHopPathSpanner(n)
        ref = build_two_hop_reference(n)
        for i in range(1, n + 1):
            assert s.edges_of(i) == sorted(ref[i]), (n, i)


def test_two_hop_trim_matches_padded_intersection():
    s6, s8 = TwoHopPathSpanner(6), TwoHopPathSpanner(8)
    for i in range(1, 7):
        assert s6.edges_of(i) == [l for l in s8.edges_of(i) if l <= 6]


def test_two_hop_membership_bitops_match_lists():
    for n in (5, 8, 17, 64):
        s = TwoHopPathSpanner(n)
        lists = {i: set(s.edges_of(i)) for i in range(1, n + 1)}
        for i in range(1, n + 1):
            for l in range(1, n + 1):
                assert s.in_edge_set(i, l) == (l in lists[i]), (n, i, l)


def test_two_hop_query_spec_example():
    s = TwoHopPathSpanner(8)
    l = s.query(2, 7)
    assert l == 4
    assert s.in_edge_set(2, l) and s.in_edge_set(7, l)
    assert s.query(3, 3) == 3


@pytest.mark.parametrize("n", [2, 7, 16, 100, 512])
def test_two_hop_query_all_pairs(n):
    s = TwoHopPathSpanner(n)
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            l = s.query(i, j)
            assert i <= l <= j
            assert s.in_edge_set(i, l), (i, j, l)
            assert s.in_edge_set(j, l), (i, j, l)


def test_two_hop_query_batch_matches_scalar():
    n = 300
    s = TwoHopPathSpanner(n)
    rng = np.random.default_rng(0)
    i = rng.integers(1, n + 1, size=4000)
    j = rng.integers(1, n + 1, size=4000)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    batch = s.query_batch(lo, hi)
    for a, b, l in zip(lo[:500], hi[:500], batch[:500]):
        assert l == s.query(int(a), int(b))


def test_two_hop_edge_size_bound():
    for delta in (3, 6, 10):
        n = 1 << delta
        s = TwoHopPathSpanner(n)
        assert max(len(s.edges_of(i)) for i in range(1, n + 1)) <= delta + 1


def test_ft_f0_matches_two_hop_queries():
    n = 64
    ft = FtTwoHopPathSpanner(n, 0)
    th = TwoHopPathSpanner(n)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            l = ft.query(i, j, ())
            assert i <= l <= j
            # path (i, l, j) must be real edges (or the direct clique edge)
            if l not in (i, j):
                assert ft.has_edge(i, l) and ft.has_edge(l, j)
            else:
                assert ft.has_edge(i, j)
            assert th.query(i, j) >= i


def test_ft_edge_bound_spec_example():
    ft = FtTwoHopPathSpanner(8, 2)
    assert ft.f == 2
    assert ft.num_edges() <= 25 * 3


def test_ft_odd_budget_rounds_up():
    ft = FtTwoHopPathSpanner(32, 3)
    assert ft.f == 4
    assert ft.f_requested == 3


def test_ft_block_query_spec_example():
    ft = FtTwoHopPathSpanner(8, 2)
    l = ft.query(2, 7, {4})
    assert l in (3, 5)
    assert ft.has_edge(2, l) and ft.has_edge(l, 7)


def test_ft_query_exhaustive_small():
    for n in (9, 16, 32):
        for f in (1, 2):
            ft = FtTwoHopPathSpanner(n, f)
            fe = ft.f
            for faults in itertools.combinations(range(1, n + 1), fe):
                fs = set(faults)
                for i in range(1, n + 1):
                    if i in fs:
                        continue
                    for j in range(i + 1, n + 1):
                        if j in fs:
                            continue
                        l = ft.query(i, j, fs)
                        assert i <= l <= j and l not in fs
                        if l not in (i, j):
                            assert ft.has_edge(i, l) and ft.has_edge(l, j)
                        else:
                            assert ft.has_edge(i, j)


def test_ft_query_random_large():
    rng = np.random.default_rng(42)
    for _ in range(300):
        n = int(rng.integers(2, 257))
        f = int(rng.choice([1, 2, 4]))
        ft = FtTwoHopPathSpanner(n, f)
        alive = list(range(1, n + 1))
        faults = set(rng.choice(alive, size=min(ft.f, n - 2), replace=False).tolist()) if n > 2 else set()
        rest = [v for v in alive if v not in faults]
        if len(rest) < 2:
            continue
        i, j = sorted(rng.choice(rest, size=2, replace=False).tolist())
        if i == j:
            continue
        l = ft.query(i, j, faults)
        assert i <= l <= j and l not in faults


def test_ft_batch_matches_scalar():
    n = 200
    f = 2
    ft = FtTwoHopPathSpanner(n, f)
    rng = np.random.default_rng(9)
    for _ in range(30):
        faults = set(rng.choice(np.arange(1, n + 1), size=f, replace=False).tolist())
        mask = np.zeros(n + 2, dtype=bool)
        for x in faults:
            mask[x] = True
        pairs = []
        for _ in range(200):
            i, j = sorted(rng.integers(1, n + 1, size=2).tolist())
            if i != j and i not in faults and j not in faults:
                pairs.append((i, j))
        if not pairs:
            continue
        ii = np.array([p[0] for p in pairs])
        jj = np.array([p[1] for p in pairs])
        batch = ft.query_batch(ii, jj, mask)
        for (i, j), l in zip(pairs, batch):
            assert int(l) == ft.query(i, j, faults)


def test_ft_rejects_oversized_fault_set():
    ft = FtTwoHopPathSpanner(16, 2)
    with pytest.raises(ValueError):
        ft.query(1, 5, {2, 3, 4})


def test_three_hop_monotone_exact():
    for n in (2, 10, 64, 200):
        s = ThreeHopPathSpanner(n)
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                path = s.query(i, j)
                assert path[0] == i and path[-1] == j
                assert len(path) <= 4  # <= 3 hops
                assert all(a < b for a, b in zip(path, path[1:]))
                for a, b in zip(path, path[1:]):
                    assert (a, b) in s.edges


def test_four_hop_monotone_exact():
    for n in (2, 10, 64, 200):
        s = FourHopPathSpanner(n)
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                path = s.query(i, j)
                assert path[0] == i and path[-1] == j
                assert len(path) <= 5  # <= 4 hops
                assert all(a < b for a, b in zip(path, path[1:]))
                for a, b in zip(path, path[1:]):
                    assert (a, b) in s.edges


def test_hop_edge_growth():
    # 3-hop ~ n log log n, 4-hop ~ n log* n: both far below the 2-hop count
    n = 1024
    two = TwoHopPathSpanner(n).num_edges()
    three = ThreeHopPathSpanner(n).num_edges()
    four = FourHopPathSpanner(n).num_edges()
    assert three < two
    assert four < two
    assert three <= 8 * n * np.log2(np.log2(n))
    assert four <= 10 * n * 3  # log*(1024) = 4 starting from 2-exponentials
