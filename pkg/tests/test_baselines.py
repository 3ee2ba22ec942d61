import itertools
import random

import numpy as np
import pytest

from conftest import FOUR_ROWS
from sjpc.baselines import (
    OracleCapError,
    exact_cross_pair_counts,
    exact_pair_counts,
    expand_duplicates,
    generate_synthetic,
    random_sampling_estimate,
    reservoir_sample,
    sample_pair_estimate,
)


def brute(records, d):
    x = [0] * (d + 1)
    for a, b in itertools.permutations(records, 2):
        x[sum(u == v for u, v in zip(a, b))] += 1
    return x


def test_four_rows_oracle():
    c = exact_pair_counts(FOUR_ROWS)
    assert c.x == {1: 0, 2: 4, 3: 0}
    assert c.y == {1: 20, 2: 16, 3: 4}
    assert c.g == {1: 8, 2: 8, 3: 4}


def test_oracle_matches_brute_force():
    rng = np.random.default_rng(2)
    recs = [tuple(bytes([v]) for v in row) for row in rng.integers(0, 3, size=(50, 4))]
    c = exact_pair_counts(recs)
    x = brute(recs, 4)
    assert all(c.x[k] == x[k] for k in range(1, 5))


def test_oracle_edge_cases():
    one = exact_pair_counts([(b"a", b"b")])
    assert one.x == {1: 0, 2: 0} and one.g == {1: 1, 2: 1}
    with pytest.raises(OracleCapError):
        exact_pair_counts(FOUR_ROWS, cap=3)


def test_cross_oracle():
    a = [(b"a", b"b", b"c", b"d")]
    b = [(b"a", b"b", b"cx", b"dx"), (b"ax", b"bx", b"c", b"d")]
    c = exact_cross_pair_counts(a, b)
    assert c.x[2] == 2 and c.g[2] == 2 and c.g[3] == 0
    assert exact_cross_pair_counts(a, [(b"q", b"r", b"s", b"t")]).g[1] == 0


def test_forced_sample_scaling():
    est = sample_pair_estimate([FOUR_ROWS[0], FOUR_ROWS[2]], 4, 2, 3)
    assert est.x[2] == 12
    full = sample_pair_estimate(FOUR_ROWS, 4, 2, 3)
    assert full.g_s == 8


def test_full_sample_is_exact():
    est = random_sampling_estimate(FOUR_ROWS, 4, 2, 3, seed=5)
    assert est.g_s == 8 and est.n == 4
    with pytest.warns(RuntimeWarning):
        random_sampling_estimate(FOUR_ROWS, 10, 2, 3)
    with pytest.raises(ValueError):
        random_sampling_estimate(FOUR_ROWS, 1, 2, 3)


def test_reservoir_uniform():
    counts = np.zeros(100)
    rng = random.Random(0)
    for _ in range(4000):
        sample, n = reservoir_sample(range(100), 5, rng)
        assert n == 100 and len(set(sample)) == 5
        counts[sample] += 1
    expected = 4000 * 5 / 100
    assert np.all(np.abs(counts - expected) < 5 * np.sqrt(expected))


@pytest.mark.parametrize("kind,n,s,x_key,x_val", [
    ("near_uniform_40_60", 1000, 4, 4, 600),
    ("skewed_20_80", 3000, 4, 4, 150 * 16 * 15),
    ("skewed_10_90", 2000, 4, 4, 22 * 81 * 80),
    ("planted_lemma1", 500, 3, 3, 500),
])
def test_generators_match_oracle(kind, n, s, x_key, x_val):
    ds = generate_synthetic(kind, n, 5, seed=1, s=s)
    assert ds.x[x_key] == x_val
    c = exact_pair_counts(ds.records())
    assert c.x == ds.x and c.y == ds.y and c.g == ds.g


def test_generator_is_seeded():
    a = generate_synthetic("skewed_20_80", 200, seed=3)
    b = generate_synthetic("skewed_20_80", 200, seed=3)
    assert a.to_bytes() == b.to_bytes()
    assert a.to_bytes() != generate_synthetic("skewed_20_80", 200, seed=4).to_bytes()
    assert generate_synthetic("near_uniform_40_60", 1).n == 1
    with pytest.raises(ValueError):
        generate_synthetic("nope", 10)


def test_expand_duplicates():
    base = generate_synthetic("near_uniform_40_60", 100, seed=2)
    big = expand_duplicates(base, 3)
    c = exact_pair_counts(big.records())
    assert c.g == big.g
    assert big.g[4] == 9 * base.g[4]


def test_planted_pairs_collapse():
    # disjoint similar pairs: small samples almost never contain one
    ds = generate_synthetic("planted_lemma1", 4000, 5, seed=0, s=3)
    records = ds.records()
    hits = [random_sampling_estimate(records, 20, 3, 5, seed=k).g_s == ds.n for k in range(100)]
    assert np.mean(hits) > 0.85


def test_planted_pairs_collapse_rate():
    # n/2 disjoint planted pairs, R = floor(n^0.4): a sample misses every pair with
    # probability about exp(-R(R-1) / (2(n-1))), roughly 0.93 at n = 10^4
    n = 10_000
    size = int(n ** 0.4)
    ds = generate_synthetic("planted_lemma1", n, 5, seed=2, s=4)
    assert ds.g[4] == 2 * n
    records = ds.records()
    trials = 400
    collapsed = sum(random_sampling_estimate(records, size, 4, 5, seed=k).g_s == n
                    for k in range(trials))
    expected = np.exp(-size * (size - 1) / (2 * (n - 1)))
    assert abs(collapsed / trials - expected) < 4 * np.sqrt(expected * (1 - expected) / trials)


def test_oracle_monotone_in_threshold():
    recs = [tuple(str(v).encode() for v in row)
            for row in np.random.default_rng(8).integers(0, 3, size=(70, 5))]
    g = exact_pair_counts(recs).g
    assert all(g[s] >= g[s + 1] for s in range(1, 5))
