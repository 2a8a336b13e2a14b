"""Fingerprints, per-cell statistics and majority-vote reference aggregation.

A fingerprint is the bit pattern an SRAM window shows after power-up. Bit ``i``
always refers to SRAM cell ``i``. When packed into bytes, bit ``i`` lives in
byte ``i // 8`` at position ``i % 8`` counted from the least significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AggregationError, ComparisonError, ParameterError

DEFAULT_WEAK_EPSILON = 0.1


def _frozen_bits(bits) -> np.ndarray:
    arr = np.array(bits, dtype=bool).reshape(-1)
    arr.flags.writeable = False
    return arr


class Fingerprint:
    """Immutable bit vector of fixed length."""

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int] | np.ndarray):
        arr = _frozen_bits(bits)
        if arr.size == 0:
            raise ParameterError("a fingerprint needs at least one bit")
        self._bits = arr

    @classmethod
    def from_string(cls, text: str) -> "Fingerprint":
        """Build from a string of '0'/'1' characters, cell 0 first."""
        if not text or set(text) - {"0", "1"}:
            raise ParameterError(f"not a bit string: {text!r}")
        return cls([c == "1" for c in text])

    @classmethod
    def from_bytes(cls, data: bytes, length_bits: int | None = None) -> "Fingerprint":
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
        if length_bits is not None:
            if length_bits > bits.size:
                raise ParameterError(f"{len(data)} bytes cannot hold {length_bits} bits")
            bits = bits[:length_bits]
        return cls(bits)

    @classmethod
    def from_hex(cls, text: str, length_bits: int | None = None) -> "Fingerprint":
        try:
            data = bytes.fromhex(text)
        except ValueError as exc:
            raise ParameterError(f"invalid hex fingerprint: {text!r}") from exc
        return cls.from_bytes(data, length_bits)

    @property
    def bits(self) -> np.ndarray:
        """Read-only boolean array, one entry per cell."""
        return self._bits

    @property
    def length_bits(self) -> int:
        return int(self._bits.size)

    def __len__(self) -> int:
        return self.length_bits

    def to_bytes(self) -> bytes:
        return np.packbits(self._bits, bitorder="little").tobytes()

    def to_hex(self) -> str:
        return self.to_bytes().hex()

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    def complement(self) -> "Fingerprint":
        return Fingerprint(~self._bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return self._bits.size == other._bits.size and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash((self._bits.size, self.to_bytes()))

    def __repr__(self) -> str:
        if self.length_bits <= 32:
            return f"Fingerprint('{self.to_string()}')"
        return f"Fingerprint(<{self.length_bits} bits> {self.to_hex()})"


@dataclass(frozen=True)
class Reading:
    """One power-up of one device, labelled with where and when it was taken."""

    fingerprint: Fingerprint
    device_id: str
    board_type: str
    nominal_temp_c: int
    sensor_temp_c: float
    run_index: int

    def __post_init__(self):
        if self.run_index < 0:
            raise ParameterError(f"run_index must be non-negative, got {self.run_index}")


@dataclass(frozen=True, eq=False)
class CellStatistics:
    p_one: np.ndarray
    sample_count: int

    @property
    def length_bits(self) -> int:
        return int(self.p_one.size)


@dataclass(frozen=True, eq=False)
class ReferenceFingerprint:
    """Majority-rounded aggregate of repeated readings of one device."""

    fingerprint: Fingerprint
    source_temp_c: int
    source_count: int
    tie_mask: np.ndarray
    device_id: str = ""
    board_type: str = ""

    @property
    def length_bits(self) -> int:
        return self.fingerprint.length_bits


@dataclass(frozen=True, eq=False)
class CellClasses:
    """Index arrays of a total, disjoint partition of the cells."""

    strong0: np.ndarray
    strong1: np.ndarray
    weak: np.ndarray


def fhd(a: Fingerprint, b: Fingerprint) -> float:
    """Fractional Hamming distance: share of positions where ``a`` and ``b`` differ."""
    if a.length_bits != b.length_bits:
        raise ComparisonError(
            f"cannot compare fingerprints of {a.length_bits} and {b.length_bits} bits"
        )
    return int(np.count_nonzero(a.bits != b.bits)) / a.length_bits


def hamming_distance(a: Fingerprint, b: Fingerprint) -> int:
    if a.length_bits != b.length_bits:
        raise ComparisonError(
            f"cannot compare fingerprints of {a.length_bits} and {b.length_bits} bits"
        )
    return int(np.count_nonzero(a.bits != b.bits))


def _stack(readings: Sequence[Reading]) -> np.ndarray:
    if not readings:
        raise AggregationError("no readings to aggregate")
    devices = {r.device_id for r in readings}
    if len(devices) > 1:
        raise AggregationError(f"readings from several devices: {sorted(devices)}")
    lengths = {r.fingerprint.length_bits for r in readings}
    if len(lengths) > 1:
        raise AggregationError(f"readings have mixed lengths: {sorted(lengths)}")
    return np.stack([r.fingerprint.bits for r in readings])


def cell_statistics(readings: Sequence[Reading]) -> CellStatistics:
    """Empirical probability of each cell powering up to 1."""
    matrix = _stack(readings)
    ones = matrix.sum(axis=0)
    p_one = ones / matrix.shape[0]
    p_one.flags.writeable = False
    return CellStatistics(p_one=p_one, sample_count=matrix.shape[0])


def aggregate_reference(readings: Sequence[Reading], temp_c: int) -> ReferenceFingerprint:
    """Round the per-cell probabilities of ``readings`` to a reference fingerprint.

    Cells seen as 1 in exactly half the readings round to 0 and are flagged in
    ``tie_mask``. All readings must be from one device at nominal ``temp_c``.
    """
    temps = {r.nominal_temp_c for r in readings}
    if readings and temps != {temp_c}:
        raise AggregationError(f"expected readings at {temp_c} °C, got {sorted(temps)}")
    matrix = _stack(readings)
    count = matrix.shape[0]
    # integer comparison avoids float ties: ones/count > 0.5  <=>  2*ones > count
    ones = matrix.sum(axis=0, dtype=np.int64)
    bits = 2 * ones > count
    ties = _frozen_bits(2 * ones == count)
    first = readings[0]
    return ReferenceFingerprint(
        fingerprint=Fingerprint(bits),
        source_temp_c=temp_c,
        source_count=count,
        tie_mask=ties,
        device_id=first.device_id,
        board_type=first.board_type,
    )


def classify_cells(stats: CellStatistics, epsilon: float = DEFAULT_WEAK_EPSILON) -> CellClasses:
    if not 0 < epsilon < 0.5:
        raise ParameterError(f"epsilon must lie in (0, 0.5), got {epsilon}")
    p = stats.p_one
    strong1 = p >= 1 - epsilon
    strong0 = p <= epsilon
    weak = ~(strong0 | strong1)
    return CellClasses(
        strong0=np.flatnonzero(strong0),
        strong1=np.flatnonzero(strong1),
        weak=np.flatnonzero(weak),
    )
