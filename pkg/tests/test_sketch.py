import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sjpc.sketch import (
    FastAgmsSketch,
    sketch_estimate_f2,
    sketch_inner_product,
    sketch_insert,
    sketch_merge,
)

keys_st = st.lists(st.integers(0, 50), max_size=200)


def test_single_key_exact(backend):
    sk = FastAgmsSketch(64, 3, master_seed=1)
    for _ in range(5):
        sk.insert(42)
    assert sk.estimate_f2() == 25.0
    assert sk.items_inserted == 5


def test_empty_sketch():
    sk = FastAgmsSketch(8, 3)
    assert sk.estimate_f2() == 0.0
    assert sk.inner_product(FastAgmsSketch(8, 3)) == 0.0


def test_width_one_gives_squared_signed_sum():
    sk = FastAgmsSketch(1, 1, master_seed=3)
    sk.insert_many([1, 2, 3])
    assert sk.estimate_f2() == float(sk.counters[0, 0] ** 2)


def test_insert_and_batch_agree(backend):
    keys = np.arange(1000, dtype=np.uint64) % 37
    a = FastAgmsSketch(32, 4, master_seed=5)
    b = FastAgmsSketch(32, 4, master_seed=5)
    a.insert_many(keys)
    for k in keys:
        sketch_insert(b, int(k))
    assert np.array_equal(a.counters, b.counters)


@settings(max_examples=40, deadline=None)
@given(keys_st, keys_st)
def test_merge_equals_concatenation(left, right):
    a = FastAgmsSketch(16, 3, master_seed=2)
    b = FastAgmsSketch(16, 3, master_seed=2)
    both = FastAgmsSketch(16, 3, master_seed=2)
    a.insert_many(left)
    b.insert_many(right)
    both.insert_many(left + right)
    assert np.array_equal(sketch_merge(a, b).counters, both.counters)
    assert np.array_equal(sketch_merge(b, a).counters, both.counters)
    a.merge_inplace(b)
    assert np.array_equal(a.counters, both.counters)


def test_merge_incompatible():
    with pytest.raises(ValueError):
        FastAgmsSketch(16, 3, 1).merge(FastAgmsSketch(16, 3, 2))
    with pytest.raises(ValueError):
        FastAgmsSketch(16, 3, 1, level_k=2).inner_product(FastAgmsSketch(16, 3, 1, level_k=3))


def test_f2_unbiased_on_average():
    keys = np.repeat(np.arange(50, dtype=np.uint64), np.arange(1, 51))
    truth = float(np.sum(np.arange(1, 51) ** 2))
    estimates = []
    for seed in range(200):
        sk = FastAgmsSketch(64, 1, master_seed=seed)
        sk.insert_many(keys)
        estimates.append(sketch_estimate_f2(sk))
    est = np.array(estimates)
    assert abs(est.mean() - truth) < 4 * est.std(ddof=1) / np.sqrt(len(est))


def test_inner_product_estimates_join():
    a_keys = np.repeat(np.arange(20, dtype=np.uint64), 5)
    b_keys = np.repeat(np.arange(10, 30, dtype=np.uint64), 3)
    truth = 10 * 5 * 3
    estimates = []
    for seed in range(200):
        a = FastAgmsSketch(128, 1, master_seed=seed)
        b = FastAgmsSketch(128, 1, master_seed=seed)
        a.insert_many(a_keys)
        b.insert_many(b_keys)
        estimates.append(sketch_inner_product(a, b))
    est = np.array(estimates)
    assert abs(est.mean() - truth) < 4 * est.std(ddof=1) / np.sqrt(len(est)) + 1e-9


def test_median_and_mean_aggregation():
    sk = FastAgmsSketch(4, 4)
    sk.counters[:] = np.array([[1, 0, 0, 0], [2, 0, 0, 0], [3, 0, 0, 0], [10, 0, 0, 0]])
    assert sk.estimate_f2("median") == 4.0
    assert sk.estimate_f2("mean") == (1 + 4 + 9 + 100) / 4
    with pytest.raises(ValueError):
        sk.estimate_f2("mode")


def test_serialization_roundtrip():
    sk = FastAgmsSketch(10, 3, master_seed=(1 << 64) - 5, level_k=4)
    sk.insert_many(range(100))
    back = FastAgmsSketch.from_bytes(sk.to_bytes())
    assert np.array_equal(back.counters, sk.counters)
    assert back.compatible(sk)
    assert back.items_inserted == 100
    blob = sk.to_bytes()
    with pytest.raises(ValueError):
        FastAgmsSketch.from_bytes(blob[:-1])
    with pytest.raises(ValueError):
        FastAgmsSketch.from_bytes(b"X" + blob[1:])


def test_overflow_guard():
    sk = FastAgmsSketch(4, 1)
    sk.items_inserted = (1 << 62) - 1
    with pytest.raises(OverflowError):
        sk.insert(1)


def test_invalid_shape():
    with pytest.raises(ValueError):
        FastAgmsSketch(0, 1)
    with pytest.raises(ValueError):
        FastAgmsSketch(1, 0)


def test_f2_within_three_sigma_mostly():
    keys = np.arange(1000, dtype=np.uint64)
    tol = 3 * np.sqrt(2 / 1000) * 1000
    hits = 0
    for seed in range(200):
        sk = FastAgmsSketch(1000, 5, master_seed=seed)
        sk.insert_many(keys)
        hits += abs(sk.estimate_f2() - 1000) <= tol
    assert hits >= 190


def test_disjoint_join_near_zero_mostly():
    a_keys = np.arange(1000, dtype=np.uint64)
    b_keys = np.arange(1000, 2000, dtype=np.uint64)
    tol = 3 * np.sqrt(2 * 1000 * 1000 / 1000)
    hits = 0
    for seed in range(200):
        a = FastAgmsSketch(1000, 1, master_seed=seed)
        b = FastAgmsSketch(1000, 1, master_seed=seed)
        a.insert_many(a_keys)
        b.insert_many(b_keys)
        hits += abs(a.inner_product(b)) <= tol
    assert hits >= 190
