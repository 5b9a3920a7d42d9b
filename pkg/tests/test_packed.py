import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varframe.errors import CorruptionError, EmptyInputError, PreconditionError
from varframe.packed import (
    PackedBatch,
    PaddedBatch,
    pack,
    pad_sequences,
    restore_order,
    sort_by_length,
    split_packed,
    unpack,
)


def padded(lengths, dim=1, rng=None):
    rng = rng or np.random.default_rng(0)
    return pad_sequences([rng.standard_normal((t, dim)) for t in lengths])


@st.composite
def padded_batches(draw):
    lengths = draw(st.lists(st.integers(1, 10), min_size=1, max_size=8))
    dim = draw(st.integers(1, 5))
    seed = draw(st.integers(0, 2**32 - 1))
    return padded(lengths, dim, np.random.default_rng(seed))


def test_sort_by_length_example():
    batch, order = sort_by_length(padded([2, 3, 1]))
    assert batch.lengths.tolist() == [3, 2, 1]
    assert order.tolist() == [1, 0, 2]


def test_sort_is_stable_on_ties():
    batch, order = sort_by_length(padded([5, 5, 5]))
    assert order.tolist() == [0, 1, 2]


def test_sort_singleton():
    b = padded([4])
    s, order = sort_by_length(b)
    np.testing.assert_array_equal(s.data, b.data)
    assert order.tolist() == [0]


def test_sort_empty_batch():
    with pytest.raises(EmptyInputError):
        sort_by_length(PaddedBatch(np.zeros((0, 0, 1)), np.zeros(0, dtype=int)))


def test_pack_matches_hand_tiling():
    a, b, c = [1.0, 2.0, 3.0], [10.0, 20.0], [100.0]
    batch = pad_sequences([np.array(a)[:, None], np.array(b)[:, None], np.array(c)[:, None]])
    p = pack(batch)
    assert p.data[:, 0].tolist() == [1.0, 10.0, 100.0, 2.0, 20.0, 3.0]
    assert p.batch_sizes.tolist() == [3, 2, 1]


def test_pack_single_sequence_is_verbatim():
    seq = np.arange(12.0).reshape(4, 3)
    p = pack(pad_sequences([seq]))
    np.testing.assert_array_equal(p.data, seq)
    assert p.batch_sizes.tolist() == [1, 1, 1, 1]


def test_pack_equal_lengths():
    p = pack(padded([6, 6, 6, 6]))
    assert p.batch_sizes.tolist() == [4] * 6
    assert p.data.shape[0] == 24


def test_pack_rejects_unsorted_and_names_index():
    with pytest.raises(PreconditionError, match="index 2"):
        pack(padded([3, 2, 4]))


def test_unpack_single_sequence():
    seq = np.arange(6.0).reshape(3, 2)
    out = unpack(pack(pad_sequences([seq])))
    np.testing.assert_array_equal(out.data[0], seq)


def test_unpack_zero_fills():
    rng = np.random.default_rng(3)
    p = pack(pad_sequences([rng.standard_normal((3, 2)) + 5, rng.standard_normal((1, 2)) + 5]))
    out = unpack(p, 2)
    assert np.all(out.data[1, 1:] == 0.0)
    assert np.all(out.data[1, 0] != 0.0)


def test_unpack_detects_corruption():
    p = pack(padded([3, 2, 1]))
    with pytest.raises(CorruptionError):
        unpack(PackedBatch(p.data, np.array([3, 2, 2]), p.sort_order))
    with pytest.raises(CorruptionError):
        unpack(PackedBatch(p.data, np.array([2, 3, 1]), p.sort_order))


def test_restore_order_hand_permutation():
    rows = np.arange(3.0).reshape(3, 1, 1)
    out = restore_order(PaddedBatch(rows, np.ones(3, dtype=int)), np.array([1, 0, 2]))
    assert out.data[:, 0, 0].tolist() == [1.0, 0.0, 2.0]


def test_restore_order_identity_and_invalid():
    b = padded([2, 1, 3])
    np.testing.assert_array_equal(restore_order(b, np.arange(3)).data, b.data)
    with pytest.raises(PreconditionError):
        restore_order(b, np.array([0, 0, 1]))


@settings(max_examples=200)
@given(padded_batches())
def test_round_trip_is_identity(batch):
    s, order = sort_by_length(batch)
    p = pack(s, order)
    back = restore_order(unpack(p, batch.width), p.sort_order)
    np.testing.assert_array_equal(back.data, batch.data)
    np.testing.assert_array_equal(back.lengths, batch.lengths)


@given(padded_batches())
def test_batch_size_invariants(batch):
    s, order = sort_by_length(batch)
    p = pack(s, order)
    bs = p.batch_sizes
    assert np.all(np.diff(bs) <= 0)
    assert bs.sum() == batch.lengths.sum() == p.data.shape[0]
    for t in range(bs.size):
        assert bs[t] == np.sum(batch.lengths > t)
    assert sorted(p.sort_order.tolist()) == list(range(batch.batch))
    n_total, full = p.data.shape[0], batch.batch * batch.lengths.max()
    assert n_total <= full
    assert (n_total == full) == bool(np.all(batch.lengths == batch.lengths[0]))


@given(padded_batches())
def test_split_packed_recovers_sequences(batch):
    s, order = sort_by_length(batch)
    parts = split_packed(pack(s, order))
    for i, part in enumerate(parts):
        np.testing.assert_array_equal(part, batch.data[i, : batch.lengths[i]])
