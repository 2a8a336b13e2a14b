import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srampuf import (
    AggregationError,
    ComparisonError,
    Fingerprint,
    ParameterError,
    aggregate_reference,
    cell_statistics,
    classify_cells,
    fhd,
)
from srampuf.fingerprint import CellStatistics

from conftest import make_reading

F = Fingerprint.from_string


@pytest.mark.parametrize("a, b, expected", [
    ("1010", "1010", 0.0),
    ("1111", "0000", 1.0),
    ("1010", "1000", 0.25),
])
def test_fhd_examples(a, b, expected):
    assert fhd(F(a), F(b)) == expected


def test_fhd_length_mismatch():
    with pytest.raises(ComparisonError):
        fhd(F("101"), F("1010"))


def test_empty_fingerprint_rejected():
    with pytest.raises(ParameterError):
        Fingerprint([])


def test_hex_uses_little_endian_bit_order():
    fp = Fingerprint.from_hex("01")
    assert fp.to_string() == "10000000"
    fp = Fingerprint.from_hex("a5")
    assert fp.to_string() == "10100101"
    assert F("0100000011000000").to_hex() == "0203"


@given(st.binary(min_size=1, max_size=32))
def test_hex_round_trip(data):
    fp = Fingerprint.from_bytes(data)
    assert fp.to_bytes() == data
    assert Fingerprint.from_hex(fp.to_hex()) == fp


def test_fingerprint_is_immutable():
    fp = F("1010")
    with pytest.raises(ValueError):
        fp.bits[0] = False


def test_cell_statistics_examples():
    always_one = [make_reading("1", run=i) for i in range(100)]
    assert cell_statistics(always_one).p_one.tolist() == [1.0]

    stats = cell_statistics([make_reading("10", run=0), make_reading("01", run=1)])
    assert stats.p_one.tolist() == [0.5, 0.5]
    assert stats.sample_count == 2

    stats = cell_statistics([make_reading(s, run=i) for i, s in enumerate(["101", "100", "100"])])
    assert stats.p_one.tolist() == pytest.approx([1.0, 0.0, 1 / 3])


@pytest.mark.parametrize("readings", [
    [],
    [make_reading("10", device_id="a"), make_reading("10", device_id="b")],
    [make_reading("10"), make_reading("101", run=1)],
])
def test_cell_statistics_rejects_bad_input(readings):
    with pytest.raises(AggregationError):
        cell_statistics(readings)


def test_aggregate_reference_examples():
    x = "1100101"
    ref = aggregate_reference([make_reading(x, run=i) for i in range(3)], 25)
    assert ref.fingerprint == F(x)
    assert not ref.tie_mask.any()
    assert ref.source_count == 3

    ref = aggregate_reference([make_reading(s, run=i) for i, s in enumerate(["101", "100", "100"])], 25)
    assert ref.fingerprint == F("100")

    ref = aggregate_reference([make_reading("10", run=0), make_reading("01", run=1)], 25)
    assert ref.fingerprint == F("00")
    assert ref.tie_mask.tolist() == [True, True]


def test_aggregate_reference_rejects_wrong_temperature():
    with pytest.raises(AggregationError):
        aggregate_reference([make_reading("10", temp=50)], 25)
    with pytest.raises(AggregationError):
        aggregate_reference([], 25)


@pytest.mark.parametrize("p, eps, expected", [
    (1.0, 0.1, "strong1"),
    (0.0, 0.1, "strong0"),
    (0.5, 0.1, "weak"),
    (0.5, 0.49, "weak"),
    (0.95, 0.1, "strong1"),
    (0.95, 0.01, "weak"),
    (0.9, 0.1, "strong1"),
])
def test_classify_cells_examples(p, eps, expected):
    classes = classify_cells(CellStatistics(np.array([p]), 100), eps)
    assert getattr(classes, expected).tolist() == [0]


@pytest.mark.parametrize("eps", [0.0, 0.5, -0.1, 0.7])
def test_classify_cells_rejects_epsilon(eps):
    with pytest.raises(ParameterError):
        classify_cells(CellStatistics(np.array([0.5]), 2), eps)


bit_lists = st.lists(st.booleans(), min_size=1, max_size=64)


@settings(max_examples=100)
@given(st.data())
def test_fhd_metric_axioms(data):
    n = data.draw(st.integers(1, 64))
    a, b, c = (Fingerprint(data.draw(st.lists(st.booleans(), min_size=n, max_size=n))) for _ in range(3))
    assert fhd(a, b) == fhd(b, a)
    assert fhd(a, a) == 0.0
    assert fhd(a, a.complement()) == 1.0
    assert fhd(a, c) <= fhd(a, b) + fhd(b, c) + 1e-12
    assert 0.0 <= fhd(a, b) <= 1.0


@settings(max_examples=100)
@given(st.data())
def test_aggregate_reference_is_order_invariant(data):
    n = data.draw(st.integers(1, 24))
    rows = data.draw(st.lists(st.lists(st.booleans(), min_size=n, max_size=n), min_size=1, max_size=12))
    perm = data.draw(st.permutations(range(len(rows))))
    readings = [make_reading(np.array(r), run=i) for i, r in enumerate(rows)]
    a = aggregate_reference(readings, 25)
    b = aggregate_reference([readings[i] for i in perm], 25)
    assert a.fingerprint == b.fingerprint
    assert np.array_equal(a.tie_mask, b.tie_mask)


@settings(max_examples=100)
@given(st.data())
def test_reference_bit_is_majority_vote(data):
    count = data.draw(st.integers(1, 15))
    value = data.draw(st.booleans())
    flips = data.draw(st.integers(0, (count - 1) // 2))  # strictly fewer than half
    flipped = set(data.draw(st.permutations(range(count)))[:flips])
    readings = [make_reading(np.array([value ^ (i in flipped)]), run=i) for i in range(count)]
    assert aggregate_reference(readings, 25).fingerprint.bits[0] == value


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.floats(1e-6, 0.5, exclude_max=True))
def test_classify_cells_partition(p, eps):
    classes = classify_cells(CellStatistics(np.array(p), 1), eps)
    combined = np.concatenate([classes.strong0, classes.strong1, classes.weak])
    assert sorted(combined.tolist()) == list(range(len(p)))


def test_reference_matches_bruteforce_majority():
    # every 3-reading, 2-bit dataset
    for rows in itertools.product(["00", "01", "10", "11"], repeat=3):
        ref = aggregate_reference([make_reading(r, run=i) for i, r in enumerate(rows)], 25)
        expected = "".join("1" if sum(r[j] == "1" for r in rows) >= 2 else "0" for j in range(2))
        assert ref.fingerprint.to_string() == expected
