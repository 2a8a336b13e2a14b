"""Experiment orchestration: simulate, enroll, metrics and fuzzy-extractor trials.

Every command reads and writes files under the configured output directory,
so the steps can be run separately (for example on real hardware dumps) or
chained with :func:`run_pipeline`.
"""

from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import AggregationError, ReproductionError
from ..fingerprint import Reading, ReferenceFingerprint, aggregate_reference
from ..fuzzy import gen, helper_size, locker_count, try_rep
from ..metrics import (
    DistributionSummary,
    UniquenessReport,
    distribution_summary,
    group_by_device,
    group_readings,
    inter_hd,
    intra_hd,
)
from ..simulator import DeviceModel, derive_seed, profile_targets, sample_readings, synth_device
from .config import ExperimentConfig
from .readings_io import (
    atomic_write_bytes,
    atomic_write_text,
    ingest_readings,
    load_references,
    write_readings,
    write_references,
)

logger = logging.getLogger(__name__)


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(str(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def device_models(config: ExperimentConfig) -> list[DeviceModel]:
    models = []
    for profile in config.profiles:
        targets = replace(profile_targets(profile), weak_fraction=config.weak_fraction)
        for j in range(config.devices):
            models.append(synth_device(
                profile,
                config.cell_count,
                derive_seed(config.seed, profile, j),
                device_id=f"{profile}-{j:02d}",
                targets=targets,
            ))
    return models


@dataclass
class SimulationResult:
    readings: list[Reading]
    enrollment: list[Reading]
    models: list[DeviceModel]


def cmd_simulate(config: ExperimentConfig) -> SimulationResult:
    """Emit a readings file shaped like the measurement campaign.

    Enrollment readings (reference temperature, run indices from 0) go to a
    separate file; campaign readings use run indices after them so the two
    sets are independent draws.
    """
    models = device_models(config)
    enrollment: list[Reading] = []
    readings: list[Reading] = []
    offset = config.enrollment_readings
    for model in models:
        if offset:
            enrollment.extend(sample_readings(model, config.reference_temp, offset))
        for temp in config.temperatures:
            readings.extend(sample_readings(model, temp, config.readings_per_temp, start=offset))
    write_readings(config.readings_path, readings)
    if offset:
        write_readings(config.enrollment_path, enrollment)
    logger.info("simulated %d readings for %d devices", len(readings), len(models))
    return SimulationResult(readings=readings, enrollment=enrollment, models=models)


def enroll(readings: list[Reading], reference_temp: int,
           required_devices: set[str] | None = None) -> list[ReferenceFingerprint]:
    by_device = group_by_device(readings)
    devices = set(by_device) | (required_devices or set())
    references = []
    for device_id in sorted(devices):
        at_ref = [r for r in by_device.get(device_id, []) if r.nominal_temp_c == reference_temp]
        if not at_ref:
            raise AggregationError(f"device {device_id} has no readings at {reference_temp} °C")
        references.append(aggregate_reference(at_ref, reference_temp))
    return references


def cmd_enroll(config: ExperimentConfig) -> list[ReferenceFingerprint]:
    """Aggregate one reference per device from its reference-temperature readings."""
    source = config.enrollment_path if config.enrollment_path.exists() else config.readings_path
    readings = ingest_readings(source)
    required = None
    if source != config.readings_path and config.readings_path.exists():
        required = {r.device_id for r in ingest_readings(config.readings_path)}
    references = enroll(readings, config.reference_temp, required)
    sensors = {}
    for device_id, rs in group_by_device(readings).items():
        temps = [r.sensor_temp_c for r in rs if r.nominal_temp_c == config.reference_temp]
        if temps:
            sensors[device_id] = round(float(np.mean(temps)), 2)
    write_references(config.references_path, references, sensors)
    logger.info("enrolled %d devices from %s", len(references), source)
    return references


@dataclass
class MetricsResult:
    # (board_type, temp) -> mean intra-HD, averaged over per-device means
    summary: dict[tuple[str, int], float]
    reliability: dict[tuple[str, int], DistributionSummary]
    device_reliability: dict[tuple[str, str, int], DistributionSummary]
    uniqueness: dict[tuple[str, int], UniquenessReport]
    temperatures: list[int] = field(default_factory=list)


def compute_metrics(readings: list[Reading], references: list[ReferenceFingerprint]) -> MetricsResult:
    refs = {ref.device_id: ref for ref in references}
    by_device = group_by_device(readings)
    missing = sorted(set(by_device) - set(refs))
    if missing:
        raise AggregationError(f"no reference for devices {missing}")

    values: dict[tuple[str, int], list[float]] = defaultdict(list)
    device_means: dict[tuple[str, int], list[float]] = defaultdict(list)
    device_reliability = {}
    for device_id in sorted(by_device):
        board = by_device[device_id][0].board_type
        for temp, rs in sorted(group_readings(by_device[device_id]).items()):
            series = intra_hd(rs, refs[device_id])
            values[board, temp].extend(series.values)
            summary = distribution_summary(series.values)
            device_reliability[board, device_id, temp] = summary
            device_means[board, temp].append(summary.mean)

    uniqueness = {}
    for (board, temp) in sorted(values):
        group = [r for r in readings if r.board_type == board and r.nominal_temp_c == temp]
        temp_refs = [aggregate_reference(rs, temp) for _, rs in sorted(group_by_device(group).items())]
        if len(temp_refs) >= 2:
            uniqueness[board, temp] = inter_hd(temp_refs)

    return MetricsResult(
        summary={key: float(np.mean(means)) for key, means in device_means.items()},
        reliability={key: distribution_summary(v) for key, v in values.items()},
        device_reliability=device_reliability,
        uniqueness=uniqueness,
        temperatures=sorted({t for _, t in values}),
    )


def cmd_metrics(config: ExperimentConfig) -> MetricsResult:
    """Write intra-HD, Table-style summary, distribution and uniqueness CSVs."""
    readings = ingest_readings(config.readings_path)
    references = load_references(config.references_path)
    refs = {ref.device_id: ref for ref in references}
    result = compute_metrics(readings, references)
    out = Path(config.out_dir)

    rows = []
    for r in readings:
        rows.append([r.board_type, r.device_id, r.nominal_temp_c, r.run_index,
                     _fmt(intra_hd([r], refs[r.device_id]).values[0])])
    atomic_write_text(out / "intra_hd.csv",
                      _csv(["board_type", "device_id", "nominal_temp_c", "run_index", "fhd"], rows))

    temps = result.temperatures
    boards = sorted({b for b, _ in result.summary})
    rows = []
    for board in boards:
        row = [board]
        for temp in temps:
            mean = result.summary.get((board, temp))
            row.append("" if mean is None else f"{100 * mean:.2f}")
        rows.append(row)
    atomic_write_text(out / "summary.csv", _csv(["board_type"] + [f"FHD_avg{t}" for t in temps], rows))

    header = ["board_type", "device_id", "nominal_temp_c", "count", "mean", "std_dev", "min", "max"]
    rows = []
    for (board, temp), s in sorted(result.reliability.items()):
        rows.append([board, "*", temp, s.count, _fmt(s.mean), _fmt(s.std_dev), _fmt(s.min), _fmt(s.max)])
    for (board, device_id, temp), s in sorted(result.device_reliability.items()):
        rows.append([board, device_id, temp, s.count, _fmt(s.mean), _fmt(s.std_dev), _fmt(s.min), _fmt(s.max)])
    atomic_write_text(out / "reliability.csv", _csv(header, rows))

    rows, pair_rows = [], []
    for (board, temp), report in sorted(result.uniqueness.items()):
        rows.append([board, temp, report.pair_count, _fmt(report.mean), _fmt(report.std_dev)])
        for (a, b), v in zip(report.pairs, report.values):
            pair_rows.append([board, temp, a, b, _fmt(v)])
    atomic_write_text(out / "uniqueness.csv",
                      _csv(["board_type", "nominal_temp_c", "pairs", "mean", "std_dev"], rows))
    atomic_write_text(out / "uniqueness_pairs.csv",
                      _csv(["board_type", "nominal_temp_c", "device_a", "device_b", "fhd"], pair_rows))
    return result


@dataclass
class TrialResult:
    # (board_type, temp) -> [attempts, successes]
    counts: dict[tuple[str, int], list[int]]
    device_counts: dict[tuple[str, str, int], list[int]]
    locker_count: int
    helper_bytes: int
    gen_seconds: float
    rep_seconds: float

    def success_rate(self, board: str, temp: int) -> float:
        attempts, successes = self.counts[board, temp]
        return successes / attempts if attempts else float("nan")

    @property
    def failures(self) -> int:
        return sum(a - s for a, s in self.counts.values())


def fe_trial(readings: list[Reading], references: list[ReferenceFingerprint], config: ExperimentConfig,
             helper_dir: Path | None = None) -> TrialResult:
    params = config.fe_params()
    lockers = locker_count(params)
    by_device = group_by_device(readings)
    counts: dict[tuple[str, int], list[int]] = defaultdict(lambda: [0, 0])
    device_counts: dict[tuple[str, str, int], list[int]] = {}
    gen_seconds = rep_seconds = 0.0
    for ref in sorted(references, key=lambda r: r.device_id):
        seed = derive_seed(config.seed, "fe", ref.device_id, params.t, params.k)
        t0 = time.perf_counter()
        key, helper = gen(ref.fingerprint, params, rng_seed=seed)
        gen_seconds += time.perf_counter() - t0
        if helper_dir is not None:
            atomic_write_bytes(helper_dir / f"{ref.device_id}.pufl", helper.to_bytes())
        for temp, rs in sorted(group_readings(by_device.get(ref.device_id, [])).items()):
            if config.fe_trials_per_temp:
                rs = rs[: config.fe_trials_per_temp]
            successes = 0
            t0 = time.perf_counter()
            for r in rs:
                result = try_rep(r.fingerprint, helper)
                successes += result is not None and result[0] == key
            rep_seconds += time.perf_counter() - t0
            device_counts[ref.board_type, ref.device_id, temp] = [len(rs), successes]
            total = counts[ref.board_type, temp]
            total[0] += len(rs)
            total[1] += successes
    return TrialResult(
        counts=dict(counts),
        device_counts=device_counts,
        locker_count=lockers,
        helper_bytes=helper_size(params),
        gen_seconds=gen_seconds,
        rep_seconds=rep_seconds,
    )


def cmd_fe_trial(config: ExperimentConfig) -> TrialResult:
    """Enroll each reference and try to reproduce its key from every reading.

    Raises :class:`ReproductionError` after writing the reports when
    ``strict`` is set and any attempt failed.
    """
    params = config.fe_params()
    locker_count(params)  # infeasible parameters fail before any work
    readings = ingest_readings(config.readings_path)
    references = load_references(config.references_path)
    out = Path(config.out_dir)
    helper_dir = out / "helper" if config.write_helper else None
    result = fe_trial(readings, references, config, helper_dir)

    header = ["board_type", "nominal_temp_c", "t", "k", "delta", "lockers", "helper_bytes",
              "attempts", "successes", "success_rate"]
    fixed = [params.t, params.k, repr(params.delta), result.locker_count, result.helper_bytes]
    rows = []
    for (board, temp), (attempts, successes) in sorted(result.counts.items()):
        rate = successes / attempts if attempts else 0.0
        rows.append([board, temp, *fixed, attempts, successes, _fmt(rate)])
    atomic_write_text(out / f"fe_trial_t{params.t}.csv", _csv(header, rows))
    rows = [[board, device_id, temp, a, s]
            for (board, device_id, temp), (a, s) in sorted(result.device_counts.items())]
    atomic_write_text(out / f"fe_trial_t{params.t}_devices.csv",
                      _csv(["board_type", "device_id", "nominal_temp_c", "attempts", "successes"], rows))
    atomic_write_text(out / f"fe_timing_t{params.t}.csv", _csv(
        ["t", "devices", "attempts", "gen_seconds", "rep_seconds"],
        [[params.t, len(references), sum(a for a, _ in result.counts.values()),
          f"{result.gen_seconds:.3f}", f"{result.rep_seconds:.3f}"]],
    ))
    if config.strict and result.failures:
        raise ReproductionError(f"{result.failures} reproduction attempts failed")
    return result


def run_pipeline(config: ExperimentConfig) -> tuple[MetricsResult, TrialResult]:
    config.fe_params()
    cmd_simulate(config)
    cmd_enroll(config)
    metrics = cmd_metrics(config)
    trial = cmd_fe_trial(config)
    return metrics, trial
