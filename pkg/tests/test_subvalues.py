import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sjpc import _pykernels as py
from sjpc.combinatorics import choose, unrank_combination
from sjpc.subvalues import (
    LevelTable,
    RecordArityError,
    RecordBlock,
    SamplingPlan,
    emit_subvalues,
    encode_subvalue,
    sample_level_size,
)

field = st.binary(max_size=6)


@given(st.lists(field, min_size=2, max_size=2), st.lists(field, min_size=2, max_size=2))
def test_encoding_injective(a, b):
    c = unrank_combination(4, 2, 1)
    assert (encode_subvalue(c, a) == encode_subvalue(c, b)) == (a == b)


def test_encoding_separates_combinations():
    values = (b"x", b"y")
    assert encode_subvalue(unrank_combination(3, 2, 0), values) != \
        encode_subvalue(unrank_combination(3, 2, 1), values)
    # joined-string ambiguity is avoided
    c = unrank_combination(2, 2, 0)
    assert encode_subvalue(c, (b"a.b", b"c")) != encode_subvalue(c, (b"a", b"b.c"))
    with pytest.raises(ValueError):
        encode_subvalue(c, (b"a",))


def test_full_ratio_emits_everything():
    plan = SamplingPlan(4, 1.0)
    rec = (b"a", b"b", b"c", b"d")
    subs = emit_subvalues(rec, 2, plan, py.SplitMix64(0))
    assert [s.combination.indices for s in subs] == list(itertools.combinations(range(4), 2))
    assert subs[1].projected == (b"a", b"c")
    assert len({s.fp for s in subs}) == 6


def test_level_size_mean_is_exact():
    rng = py.SplitMix64(3)
    sizes = [sample_level_size(5, 2, 0.37, rng) for _ in range(20000)]
    assert set(sizes) == {3, 4}
    assert abs(np.mean(sizes) - 3.7) < 0.02
    with pytest.raises(ValueError):
        sample_level_size(5, 6, 0.5, rng)
    with pytest.raises(ValueError):
        sample_level_size(5, 2, 0.0, rng)


def test_per_combination_inclusion_is_uniform():
    plan = SamplingPlan(5, 0.5)
    rng = py.SplitMix64(9)
    seen = Counter()
    trials = 8000
    for _ in range(trials):
        for sv in emit_subvalues((b"1", b"2", b"3", b"4", b"5"), 3, plan, rng):
            seen[sv.combination.rank] += 1
    assert len(seen) == choose(5, 3)
    for count in seen.values():
        assert abs(count / trials - 0.5) < 0.03


def test_sample_ranks_distinct():
    rng = py.SplitMix64(4)
    for size in (1, 5, 20):
        for m in range(size + 1):
            ranks = py.sample_ranks(size, m, rng)
            assert len(ranks) == m == len(set(ranks))
            assert all(0 <= r < size for r in ranks)


def test_plan_validation():
    assert SamplingPlan(4, 0.5).per_level_expected[2] == 3.0
    with pytest.raises(ValueError):
        SamplingPlan(4, 1.5)


def test_level_table_layout():
    t = LevelTable.build(4, 3)
    assert t.combos.shape == (5, 4)
    assert list(t.offsets) == [0, 4, 5]
    assert list(t.combos[0]) == [0, 1, 2, -1]


def test_record_block_roundtrip():
    recs = [(b"a", b""), (b"ccc", b"d")]
    block = RecordBlock.from_records(recs, 2)
    assert block.n == 2
    assert block.records() == recs
    with pytest.raises(RecordArityError) as err:
        RecordBlock.from_records([(b"a", b"b"), (b"c",)], 2)
    assert err.value.position == 1
