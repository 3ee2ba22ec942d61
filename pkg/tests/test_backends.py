"""The compiled kernels must agree bit-for-bit with the pure-Python ones."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sjpc import _backend
from sjpc import _pykernels as py
from sjpc.sketch import FastAgmsSketch
from sjpc.subvalues import LevelTable, RecordBlock

ck = _backend.compiled
pytestmark = pytest.mark.skipif(ck is None, reason="compiled kernels not built")

u64 = st.integers(0, (1 << 64) - 1)


@given(st.binary(max_size=40), u64)
def test_murmur(data, seed):
    assert ck.fingerprint(data, seed) == py.murmur64a(data, seed)


@given(st.tuples(*[st.integers(0, py.MERSENNE_P - 1)] * 4), u64)
def test_poly_hash(coeffs, key):
    assert ck.poly_hash(coeffs, key) == py.poly_hash(coeffs, key)


@given(u64, st.integers(0, 1 << 40))
def test_record_state(key, index):
    assert ck.record_state(key, index) == py.record_state(key, index)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6).flatmap(lambda d: st.tuples(
    st.just(d), st.integers(1, d), st.sampled_from([1.0, 0.5, 0.3, 0.05]),
    st.lists(st.lists(st.binary(max_size=3), min_size=d, max_size=d), max_size=20),
    u64, u64, st.integers(0, 1 << 32))))
def test_emit_fingerprints(args):
    d, s, r, rows, fp_seed, key, first = args
    block = RecordBlock.from_records(rows, d)
    table = LevelTable.build(d, s)
    call = (block.buf, block.starts, block.ends, block.n, d, s, r, fp_seed, key, first,
            table.combos, table.offsets)
    a_lv, a_fp = py.emit_fingerprints(*call)
    b_lv, b_fp = ck.emit_fingerprints(*call)
    assert np.array_equal(a_lv, b_lv) and np.array_equal(a_fp, b_fp)


@settings(max_examples=30, deadline=None)
@given(st.lists(u64, max_size=300), st.integers(1, 50), st.integers(1, 4), u64)
def test_sketch_update(keys, width, depth, seed):
    sk = FastAgmsSketch(width, depth, seed)
    keys = np.array(keys, dtype=np.uint64)
    a, b = sk.counters.copy(), sk.counters.copy()
    py.sketch_update(a, sk._bucket_coef, sk._sign_coef, keys)
    ck.sketch_update(b, sk._bucket_coef, sk._sign_coef, keys)
    assert np.array_equal(a, b)


@settings(max_examples=80)
@given(st.integers(1, 5), st.lists(st.lists(st.sampled_from([b"", b"a", b"bc", b"\t"]),
                                            max_size=6), max_size=8))
def test_split_lines(d, lines):
    buf = b"".join(b"".join(parts) + b"\n" for parts in lines)
    a = py.split_lines(buf, 9, d)
    b = ck.split_lines(buf, 9, d)
    assert a[2:] == b[2:]
    if a[3] < 0:
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
