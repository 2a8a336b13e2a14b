"""Synthetic SRAM devices with temperature-dependent start-up noise.

Each cell has a probability of powering up to 1 at the reference temperature
(25 °C). Moving away from the reference shifts that probability linearly
toward 0.5, with separate slopes below and above the reference, and never
past 0.5. Cells are independent, so the expected FHD of a reading against a
reference has a closed form; calibration solves it directly.

Two kinds of cells are generated:

* weak cells: ``p_ref = 0.5`` at every temperature;
* strong cells: ``p_ref = q`` or ``1 - q`` depending on the cell's preferred
  value, where ``q`` is the flip rate at the reference temperature.
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, ComparisonError, ParameterError
from .fingerprint import Fingerprint, Reading, ReferenceFingerprint

logger = logging.getLogger(__name__)

REFERENCE_TEMP_C = 25
SENSOR_JITTER_C = 1.5
DEFAULT_WEAK_FRACTION = 0.04
CUSTOM_PROFILE = "custom"


@dataclass(frozen=True)
class CellModel:
    p_ref: float
    sens_cold: float = 0.0
    sens_hot: float = 0.0


@dataclass(frozen=True)
class NoiseTargets:
    """Mean intra-HD targets at a cold, the reference, and a hot temperature."""

    cold_fhd: float
    ref_fhd: float
    hot_fhd: float
    weak_fraction: float = DEFAULT_WEAK_FRACTION
    cold_temp_c: int = 10
    ref_temp_c: int = REFERENCE_TEMP_C
    hot_temp_c: int = 50

    def __post_init__(self):
        for name in ("cold_fhd", "ref_fhd", "hot_fhd"):
            value = getattr(self, name)
            if not 0.0 <= value <= 0.5:
                raise CalibrationError(f"{name}={value} is outside [0, 0.5]")
        if not 0.0 <= self.weak_fraction <= 1.0:
            raise ParameterError(f"weak_fraction={self.weak_fraction} is outside [0, 1]")
        if not self.cold_temp_c < self.ref_temp_c < self.hot_temp_c:
            raise ParameterError("temperatures must satisfy cold < reference < hot")

    def as_dict(self) -> dict[int, float]:
        return {
            self.cold_temp_c: self.cold_fhd,
            self.ref_temp_c: self.ref_fhd,
            self.hot_temp_c: self.hot_fhd,
        }


# Mean FHD measured on the two STM32 boards at 10, 25 and 50 °C.
PROFILES: dict[str, NoiseTargets] = {
    "F401RE": NoiseTargets(cold_fhd=0.0529, ref_fhd=0.0387, hot_fhd=0.0535),
    "F446RE": NoiseTargets(cold_fhd=0.0679, ref_fhd=0.0424, hot_fhd=0.0772),
}


@dataclass(frozen=True)
class Calibration:
    weak_count: int
    flip_rates: dict[int, float]
    sens_cold: float
    sens_hot: float
    cell_count: int

    @property
    def weak_fraction(self) -> float:
        return self.weak_count / self.cell_count


@dataclass(frozen=True, eq=False)
class DeviceModel:
    """Per-cell start-up model of one simulated device.

    The per-cell parameters are stored column-wise; ``cells`` gives the
    row view as :class:`CellModel` objects.
    """

    device_id: str
    board_profile: str
    seed: int
    p_ref: np.ndarray
    sens_cold: np.ndarray
    sens_hot: np.ndarray
    ref_temp_c: int = REFERENCE_TEMP_C
    calibration: Calibration | None = field(default=None, compare=False)

    def __post_init__(self):
        n = self.p_ref.size
        if n == 0 or self.sens_cold.size != n or self.sens_hot.size != n:
            raise ParameterError("cell parameter arrays must be non-empty and equally long")
        if np.any((self.p_ref < 0) | (self.p_ref > 1)):
            raise ParameterError("p_ref must lie in [0, 1]")
        if np.any(self.sens_cold < 0) or np.any(self.sens_hot < 0):
            raise ParameterError("temperature sensitivities must be non-negative")
        for arr in (self.p_ref, self.sens_cold, self.sens_hot):
            arr.flags.writeable = False

    @classmethod
    def from_cells(cls, cells: list[CellModel], device_id: str = "custom-00",
                   seed: int = 0, board_profile: str = CUSTOM_PROFILE) -> "DeviceModel":
        return cls(
            device_id=device_id,
            board_profile=board_profile,
            seed=seed,
            p_ref=np.array([c.p_ref for c in cells], dtype=float),
            sens_cold=np.array([c.sens_cold for c in cells], dtype=float),
            sens_hot=np.array([c.sens_hot for c in cells], dtype=float),
        )

    @property
    def cell_count(self) -> int:
        return int(self.p_ref.size)

    @property
    def cells(self) -> list[CellModel]:
        return [CellModel(float(p), float(c), float(h))
                for p, c, h in zip(self.p_ref, self.sens_cold, self.sens_hot)]

    def same_parameters(self, other: "DeviceModel") -> bool:
        return (
            self.seed == other.seed
            and self.board_profile == other.board_profile
            and np.array_equal(self.p_ref, other.p_ref)
            and np.array_equal(self.sens_cold, other.sens_cold)
            and np.array_equal(self.sens_hot, other.sens_hot)
        )

    def prob_one(self, temp_c: float) -> np.ndarray:
        """Probability of each cell powering up to 1 at ``temp_c``."""
        delta = temp_c - self.ref_temp_c
        sens = self.sens_cold if delta < 0 else self.sens_hot
        shift = sens * abs(delta)
        p = self.p_ref
        shifted = np.where(p < 0.5, np.minimum(p + shift, 0.5), np.maximum(p - shift, 0.5))
        return np.clip(np.where(p == 0.5, 0.5, shifted), 0.0, 1.0)

    def preferred_fingerprint(self) -> Fingerprint:
        """Most likely start-up pattern at the reference temperature (ties to 0)."""
        return Fingerprint(self.p_ref > 0.5)


def derive_seed(*keys: int | str) -> int:
    """Stable 63-bit seed from a mix of integers and strings."""
    entropy = [k if isinstance(k, int) else zlib.crc32(k.encode()) for k in keys]
    if any(k < 0 for k in entropy):
        raise ParameterError("seed components must be non-negative")
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0] >> np.uint64(1))


def _temp_key(temp_c: float) -> int:
    # centi-degrees offset so that sub-zero temperatures still give a valid key
    return int(round((temp_c + 1000.0) * 100))


def profile_targets(profile: str, targets: NoiseTargets | None = None) -> NoiseTargets:
    if targets is not None:
        return targets
    try:
        return PROFILES[profile]
    except KeyError:
        raise ParameterError(
            f"unknown profile {profile!r}; pass explicit targets or use one of {sorted(PROFILES)}"
        ) from None


def calibrate(profile: str, targets: NoiseTargets, cell_count: int, seed: int,
              device_id: str | None = None) -> DeviceModel:
    """Build a device whose expected FHD hits ``targets`` at each target temperature.

    The weak-cell count is ``round(weak_fraction * cell_count)`` so every
    device has the same noise floor; the strong-cell flip rate ``q(T)`` then
    follows from ``f(T) * n = 0.5 * weak + q(T) * strong``. Expected FHD is
    taken against the preferred pattern, which a majority vote over a few
    dozen readings recovers with overwhelming probability.
    """
    if cell_count <= 0:
        raise ParameterError(f"cell_count must be positive, got {cell_count}")
    rng = np.random.default_rng(derive_seed(seed, cell_count, profile))
    preferred = rng.integers(0, 2, size=cell_count).astype(bool)
    weak_count = int(round(targets.weak_fraction * cell_count))
    weak = np.zeros(cell_count, dtype=bool)
    weak[rng.choice(cell_count, size=weak_count, replace=False)] = True
    strong_count = cell_count - weak_count

    flip_rates: dict[int, float] = {}
    for temp, target in targets.as_dict().items():
        excess = target * cell_count - 0.5 * weak_count
        if strong_count == 0:
            if abs(excess) > 1e-12:
                raise CalibrationError(f"all cells weak: noise is fixed at 0.5, target {target}")
            q = 0.0
        else:
            q = excess / strong_count
        if q < -1e-12:
            raise CalibrationError(
                f"target {target:.4f} at {temp} °C is below the weak-cell floor "
                f"{0.5 * weak_count / cell_count:.4f}; lower weak_fraction"
            )
        if q > 0.5 + 1e-12:
            raise CalibrationError(f"target {target:.4f} at {temp} °C needs flip rate {q:.3f} > 0.5")
        flip_rates[temp] = min(max(q, 0.0), 0.5)

    q_ref = flip_rates[targets.ref_temp_c]
    q_cold = flip_rates[targets.cold_temp_c]
    q_hot = flip_rates[targets.hot_temp_c]
    if q_cold < q_ref - 1e-12 or q_hot < q_ref - 1e-12:
        raise CalibrationError(
            "noise below the reference-temperature level cannot be modelled: "
            "cells only drift toward 0.5 away from the reference"
        )
    sens_cold = max(q_cold - q_ref, 0.0) / (targets.ref_temp_c - targets.cold_temp_c)
    sens_hot = max(q_hot - q_ref, 0.0) / (targets.hot_temp_c - targets.ref_temp_c)

    p_ref = np.where(preferred, 1.0 - q_ref, q_ref)
    p_ref[weak] = 0.5
    cold = np.where(weak, 0.0, sens_cold)
    hot = np.where(weak, 0.0, sens_hot)

    calibration = Calibration(
        weak_count=weak_count,
        flip_rates=flip_rates,
        sens_cold=sens_cold,
        sens_hot=sens_hot,
        cell_count=cell_count,
    )
    logger.debug("calibrated %s seed=%d: %s", profile, seed, calibration)
    return DeviceModel(
        device_id=device_id or f"{profile}-{seed}",
        board_profile=profile,
        seed=seed,
        p_ref=p_ref,
        sens_cold=cold,
        sens_hot=hot,
        ref_temp_c=targets.ref_temp_c,
        calibration=calibration,
    )


def synth_device(profile: str, cell_count: int, seed: int, device_id: str | None = None,
                 targets: NoiseTargets | None = None) -> DeviceModel:
    """Calibrated device for a named board profile (or ``custom`` with explicit targets)."""
    return calibrate(profile, profile_targets(profile, targets), cell_count, seed, device_id)


def expected_fhd(model: DeviceModel, reference: ReferenceFingerprint | Fingerprint,
                 temp_c: float) -> float:
    """Mean FHD of a reading at ``temp_c`` against ``reference``, exactly."""
    ref = reference.fingerprint if isinstance(reference, ReferenceFingerprint) else reference
    if ref.length_bits != model.cell_count:
        raise ComparisonError(
            f"reference has {ref.length_bits} bits, model has {model.cell_count} cells"
        )
    p = model.prob_one(temp_c)
    r = ref.bits.astype(float)
    return float(np.mean(p * (1.0 - r) + (1.0 - p) * r))


def _reading_rng(model: DeviceModel, temp_c: float, run_index: int) -> np.random.Generator:
    return np.random.default_rng(
        derive_seed(model.seed, model.board_profile, _temp_key(temp_c), run_index)
    )


def sample_reading(model: DeviceModel, temp_c: int, run_index: int,
                   board_type: str | None = None) -> Reading:
    """One simulated power-up, fully determined by (model seed, temperature, run index)."""
    if run_index < 0:
        raise ParameterError(f"run_index must be non-negative, got {run_index}")
    rng = _reading_rng(model, temp_c, run_index)
    bits = rng.random(model.cell_count) < model.prob_one(temp_c)
    jitter = rng.uniform(-SENSOR_JITTER_C, SENSOR_JITTER_C)
    return Reading(
        fingerprint=Fingerprint(bits),
        device_id=model.device_id,
        board_type=board_type or model.board_profile,
        nominal_temp_c=temp_c,
        sensor_temp_c=round(temp_c + jitter, 2),
        run_index=run_index,
    )


def sample_readings(model: DeviceModel, temp_c: int, count: int, start: int = 0,
                    board_type: str | None = None) -> list[Reading]:
    return [sample_reading(model, temp_c, i, board_type) for i in range(start, start + count)]
