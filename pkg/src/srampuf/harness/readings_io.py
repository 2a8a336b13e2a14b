"""Readings files: one comma-separated record per line, '#' starts a comment.

    device_id,board_type,nominal_temp_c,sensor_temp_c,run_index,fingerprint_hex

Fingerprint hex is the packed byte string, cell 0 in the least significant bit
of the first byte. Reference files use the same layout with the board type
suffixed ``.ref``; a ``# ref`` comment line before each record carries the
aggregation metadata (source count and tie mask).
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import FormatError
from ..fingerprint import Fingerprint, Reading, ReferenceFingerprint

REF_SUFFIX = ".ref"
HEADER = "# device_id,board_type,nominal_temp_c,sensor_temp_c,run_index,fingerprint_hex"


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sort_key(reading: Reading) -> tuple:
    return reading.device_id, reading.nominal_temp_c, reading.run_index


def _check_label(value: str, what: str) -> None:
    if not value or any(c in value for c in ",\n\r") or value.startswith("#"):
        raise FormatError(f"{what} {value!r} cannot be written to a readings file")


def format_reading(reading: Reading) -> str:
    _check_label(reading.device_id, "device_id")
    _check_label(reading.board_type, "board_type")
    if reading.fingerprint.length_bits % 8:
        raise FormatError("readings files store whole bytes; fingerprint length must be a multiple of 8")
    return ",".join([
        reading.device_id,
        reading.board_type,
        str(int(reading.nominal_temp_c)),
        repr(float(reading.sensor_temp_c)),
        str(int(reading.run_index)),
        reading.fingerprint.to_hex(),
    ])


def emit_readings(readings: Iterable[Reading]) -> str:
    lines = [HEADER]
    lines.extend(format_reading(r) for r in sorted(readings, key=sort_key))
    return "\n".join(lines) + "\n"


def write_readings(path: str | os.PathLike, readings: Iterable[Reading]) -> None:
    atomic_write_text(path, emit_readings(readings))


def parse_readings(text: str, source: str = "<string>") -> list[Reading]:
    """Parse readings text; errors name the offending line number."""
    readings: list[Reading] = []
    hex_len: int | None = None
    seen: set[tuple] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 6:
            raise FormatError(f"{source}: expected 6 fields, got {len(fields)}", lineno)
        device_id, board_type, nominal, sensor, run, fp_hex = (f.strip() for f in fields)
        try:
            nominal_temp = int(nominal)
            sensor_temp = float(sensor)
            run_index = int(run)
        except ValueError as exc:
            raise FormatError(f"{source}: {exc}", lineno) from None
        if not device_id or not board_type:
            raise FormatError(f"{source}: empty device_id or board_type", lineno)
        if run_index < 0:
            raise FormatError(f"{source}: negative run_index {run_index}", lineno)
        if not fp_hex or len(fp_hex) % 2:
            raise FormatError(f"{source}: fingerprint hex must be a whole number of bytes", lineno)
        if hex_len is None:
            hex_len = len(fp_hex)
        elif len(fp_hex) != hex_len:
            raise FormatError(
                f"{source}: fingerprint is {len(fp_hex) // 2} bytes, earlier records have {hex_len // 2}",
                lineno,
            )
        try:
            data = bytes.fromhex(fp_hex)
        except ValueError:
            raise FormatError(f"{source}: invalid hex {fp_hex!r}", lineno) from None
        key = (device_id, nominal_temp, run_index)
        if key in seen:
            raise FormatError(f"{source}: duplicate run {run_index} for {device_id} at {nominal_temp} °C", lineno)
        seen.add(key)
        readings.append(Reading(
            fingerprint=Fingerprint.from_bytes(data),
            device_id=device_id,
            board_type=board_type,
            nominal_temp_c=nominal_temp,
            sensor_temp_c=sensor_temp,
            run_index=run_index,
        ))
    readings.sort(key=sort_key)
    return readings


def ingest_readings(path: str | os.PathLike) -> list[Reading]:
    path = Path(path)
    return parse_readings(path.read_text(encoding="utf-8"), source=str(path))


def write_references(path: str | os.PathLike, references: Sequence[ReferenceFingerprint],
                     sensor_temps: dict[str, float] | None = None) -> None:
    sensor_temps = sensor_temps or {}
    lines = [HEADER]
    for ref in sorted(references, key=lambda r: r.device_id):
        ties = np.packbits(ref.tie_mask, bitorder="little").tobytes().hex()
        lines.append(f"# ref,{ref.device_id},source_count={ref.source_count},tie_mask={ties}")
        lines.append(format_reading(Reading(
            fingerprint=ref.fingerprint,
            device_id=ref.device_id,
            board_type=ref.board_type + REF_SUFFIX,
            nominal_temp_c=ref.source_temp_c,
            sensor_temp_c=sensor_temps.get(ref.device_id, float(ref.source_temp_c)),
            run_index=0,
        )))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_references(path: str | os.PathLike) -> list[ReferenceFingerprint]:
    """Read a reference file written by :func:`write_references`."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    meta: dict[str, tuple[int, str]] = {}
    for line in text.splitlines():
        if line.startswith("# ref,"):
            parts = line[2:].split(",")
            fields = dict(p.split("=", 1) for p in parts[2:] if "=" in p)
            meta[parts[1]] = (int(fields.get("source_count", 1)), fields.get("tie_mask", ""))
    references = []
    for r in parse_readings(text, source=str(path)):
        if not r.board_type.endswith(REF_SUFFIX):
            raise FormatError(f"{path}: record for {r.device_id} is not a reference ({r.board_type})")
        count, ties_hex = meta.get(r.device_id, (1, ""))
        n = r.fingerprint.length_bits
        if ties_hex:
            ties = Fingerprint.from_hex(ties_hex, n).bits
        else:
            ties = np.zeros(n, dtype=bool)
        references.append(ReferenceFingerprint(
            fingerprint=r.fingerprint,
            source_temp_c=r.nominal_temp_c,
            source_count=count,
            tie_mask=ties,
            device_id=r.device_id,
            board_type=r.board_type[: -len(REF_SUFFIX)],
        ))
    return references
