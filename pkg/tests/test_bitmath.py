import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stnchain.bitmath import BitString, IndexSubset, binary_entropy, relative_weight, xor_fold

from oracles import h as h_oracle


def bs(s):
    return BitString.from_str(s)


@pytest.mark.parametrize("x, expected", [(0.0, 0.0), (1.0, 0.0), (0.5, 1.0)])
def test_entropy_trivial_points(x, expected):
    assert binary_entropy(x) == expected


def test_entropy_at_eleven_percent():
    assert binary_entropy(0.11) == pytest.approx(float(h_oracle("0.11")), abs=1e-14)
    assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-4)


@pytest.mark.parametrize("x", [-1e-9, 1.0000001, float("nan")])
def test_entropy_domain(x):
    with pytest.raises(ValueError):
        binary_entropy(x)


def test_entropy_symmetric_on_grid():
    for x in np.linspace(0, 1, 201):
        assert abs(binary_entropy(x) - binary_entropy(1 - x)) <= 1e-12


@given(st.floats(0, 1), st.floats(0, 1))
def test_entropy_midpoint_concave(x, y):
    assert binary_entropy((x + y) / 2) >= (binary_entropy(x) + binary_entropy(y)) / 2 - 1e-12


@pytest.mark.parametrize("s, w", [("0000", 0.0), ("1111", 1.0), ("1010", 0.5)])
def test_relative_weight(s, w):
    assert relative_weight(bs(s)) == w


def test_relative_weight_empty():
    with pytest.raises(ValueError):
        relative_weight(BitString.from_bits([]))


def test_xor_fold_examples():
    assert str(xor_fold([bs("1100"), bs("1100")], IndexSubset.full(4))) == "0000"
    t = IndexSubset.from_one_based([1, 2], 4)
    assert str(xor_fold([bs("1010"), bs("0110"), bs("0011")], t)) == "11"
    assert str(xor_fold([bs("1011")], IndexSubset.from_one_based([4], 4))) == "1"


def test_xor_fold_length_mismatch():
    with pytest.raises(ValueError):
        xor_fold([bs("101"), bs("1011")])


def test_index_subset_validation_and_complement():
    t = IndexSubset.from_one_based([2, 5], 6)
    assert list(t.indices) == [1, 4]
    assert t.complement().one_based() == [1, 3, 4, 6]
    with pytest.raises(ValueError):
        IndexSubset([3, 1], 5)
    with pytest.raises(ValueError):
        IndexSubset([0, 5], 5)
    with pytest.raises(ValueError):
        IndexSubset([1, 1], 5)


def test_packed_storage_round_trips():
    bits = np.random.default_rng(3).integers(0, 2, 1001, dtype=np.uint8)
    b = BitString.from_bits(bits)
    assert len(b) == 1001
    assert b.packed.size == 126
    np.testing.assert_array_equal(b.bits, bits)
    assert b.weight() == int(bits.sum())
    assert BitString.from_hex(b.to_hex(), 1001) == b
    assert b.to_hex() == b.to_hex().lower()


def test_padding_is_ignored():
    # trailing pad bits set in the buffer must not leak into weight or equality
    b = BitString(np.array([0b10100111], dtype=np.uint8), 3)
    assert str(b) == "101"
    assert b.weight() == 2
    assert b == bs("101")


word = st.integers(1, 64).flatmap(
    lambda n: st.tuples(
        st.lists(st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=1, max_size=5),
        st.sets(st.integers(0, n - 1)),
        st.just(n),
    )
)


@settings(max_examples=150)
@given(word, st.randoms(use_true_random=False))
def test_xor_fold_order_independent(data, rnd):
    segs, idx, n = data
    strings = [BitString.from_bits(s) for s in segs]
    t = IndexSubset(sorted(idx), n)
    shuffled = strings[:]
    rnd.shuffle(shuffled)
    assert xor_fold(strings, t) == xor_fold(shuffled, t)
    # associativity: fold of a fold
    if len(strings) > 1:
        inner = xor_fold(strings[:2])
        assert xor_fold([inner] + strings[2:], t) == xor_fold(strings, t)


@given(word)
def test_self_fold_has_zero_weight(data):
    segs, idx, n = data
    q = BitString.from_bits(segs[0])
    t = IndexSubset(sorted(idx) or [0], n)
    assert relative_weight(xor_fold([q, q], t)) == 0.0
