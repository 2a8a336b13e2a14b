"""Reliability (intra-class HD) and uniqueness (inter-class HD) metrics.

Standard deviations are population standard deviations throughout.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import AggregationError, ParameterError
from .fingerprint import Fingerprint, Reading, ReferenceFingerprint, fhd


@dataclass(frozen=True)
class IntraSeries:
    device_id: str
    values: tuple[float, ...]
    nominal_temps_c: tuple[int, ...]
    run_indices: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class UniquenessReport:
    pairs: tuple[tuple[str, str], ...]
    values: tuple[float, ...]
    mean: float
    std_dev: float

    @property
    def pair_count(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DistributionSummary:
    mean: float
    std_dev: float
    count: int
    min: float
    max: float


def group_readings(readings: Sequence[Reading]) -> dict[int, list[Reading]]:
    """Bucket readings by nominal temperature, keeping their input order.

    The on-chip sensor value is too noisy to bucket on, so only the nominal
    chamber setting is used.
    """
    groups: dict[int, list[Reading]] = defaultdict(list)
    for reading in readings:
        groups[reading.nominal_temp_c].append(reading)
    return dict(groups)


def group_by_device(readings: Sequence[Reading]) -> dict[str, list[Reading]]:
    groups: dict[str, list[Reading]] = defaultdict(list)
    for reading in readings:
        groups[reading.device_id].append(reading)
    return dict(groups)


def intra_hd(readings: Sequence[Reading], reference: ReferenceFingerprint) -> IntraSeries:
    """FHD of every reading against the device's reference, in input order."""
    for r in readings:
        if reference.device_id and r.device_id != reference.device_id:
            raise AggregationError(
                f"reading from {r.device_id!r} compared to reference of {reference.device_id!r}"
            )
    device_id = reference.device_id or (readings[0].device_id if readings else "")
    if not reference.device_id and len({r.device_id for r in readings}) > 1:
        raise AggregationError("readings from several devices against one reference")
    values = tuple(fhd(r.fingerprint, reference.fingerprint) for r in readings)
    return IntraSeries(
        device_id=device_id,
        values=values,
        nominal_temps_c=tuple(r.nominal_temp_c for r in readings),
        run_indices=tuple(r.run_index for r in readings),
    )


def _pairwise(labelled: Sequence[tuple[str, Fingerprint]]) -> UniquenessReport:
    if len(labelled) < 2:
        raise AggregationError("uniqueness needs at least two devices")
    ids = [label for label, _ in labelled]
    if len(set(ids)) != len(ids):
        raise AggregationError(f"duplicate device ids: {ids}")
    pairs, values = [], []
    for (id_a, fa), (id_b, fb) in combinations(labelled, 2):
        pairs.append((id_a, id_b))
        values.append(fhd(fa, fb))
    arr = np.asarray(values)
    return UniquenessReport(
        pairs=tuple(pairs),
        values=tuple(values),
        mean=float(arr.mean()),
        std_dev=float(arr.std()),
    )


def inter_hd(references: Sequence[ReferenceFingerprint]) -> UniquenessReport:
    """Pairwise FHD between references of distinct devices, each unordered pair once."""
    return _pairwise([(ref.device_id, ref.fingerprint) for ref in references])


def inter_hd_readings(readings: Sequence[Reading]) -> UniquenessReport:
    """Pairwise FHD between raw readings, one reading per device."""
    return _pairwise([(r.device_id, r.fingerprint) for r in readings])


def relative_noise_change(smaller: float, larger: float) -> float:
    """How much lower ``smaller`` is than ``larger``, as a fraction of ``larger``."""
    if larger <= 0:
        raise ParameterError(f"reference noise level must be positive, got {larger}")
    return (larger - smaller) / larger


def distribution_summary(values: Sequence[float]) -> DistributionSummary:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ParameterError("cannot summarise an empty list")
    lo, hi = float(arr.min()), float(arr.max())
    # summation rounding can push the mean of near-constant data past its bounds
    mean = min(max(float(arr.mean()), lo), hi)
    return DistributionSummary(
        mean=mean,
        std_dev=float(arr.std()),
        count=int(arr.size),
        min=lo,
        max=hi,
    )
