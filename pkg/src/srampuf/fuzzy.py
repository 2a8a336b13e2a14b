"""Sample-then-lock fuzzy extractor built from hash-based digital lockers.

Enrollment draws a random key and locks it ``ℓ`` times, each time under a
random ``k``-bit subsample of the fingerprint::

    ciphertext = H(nonce, w[positions]) XOR (key || 0^s)

Reproduction recomputes the hash with the fresh reading and accepts the
first locker whose trailing ``s`` bits come out zero. A locker opens whenever
none of its positions carries a bit error, so ``ℓ`` is chosen such that, for
``t`` errors, at least one locker avoids them all with probability ``1 - δ``.

``H`` is SHAKE-256 over a domain-separation prefix, the nonce, and the
subsample packed little-endian in ascending position order.

Helper-data wire format (all integers little-endian)::

    "PUFL" | version u16 | n k t s key_len (u16 each) | delta f64 | ℓ u32
    ℓ × ( mask ceil(n/8) B | nonce 16 B | ciphertext (key_len+s)/8 B )

Mask bit ``i`` sits in byte ``i // 8`` at bit ``i % 8`` (LSB first).
"""

from __future__ import annotations

import hashlib
import math
import secrets
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import ComparisonError, FormatError, InfeasibleParametersError, ParameterError, ReproductionError
from .fingerprint import Fingerprint

MAGIC = b"PUFL"
FORMAT_VERSION = 1
NONCE_BYTES = 16
MIN_CHECK_BITS = 64
_HEADER = struct.Struct("<4sHHHHHHdI")
HEADER_BYTES = _HEADER.size
_DOMAIN = b"srampuf/locker/v1"
_CHUNK = 256


@dataclass(frozen=True)
class FEParams:
    """Fuzzy-extractor parameters.

    ``k`` trades security (bits an attacker must guess per locker) against
    helper size; ``s`` is the check-tag length that makes a wrong subsample
    detectable.
    """

    n: int = 128
    t: int = 5
    delta: float = 1e-3
    k: int = 80
    s: int = 128
    key_len: int = 128

    def __post_init__(self):
        if not 0 < self.n <= 0xFFFF:
            raise ParameterError(f"n must be in 1..65535, got {self.n}")
        if not 0 <= self.t < self.n:
            raise ParameterError(f"t must satisfy 0 <= t < n, got t={self.t}, n={self.n}")
        if not 0 < self.delta < 1:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if self.k <= 0:
            raise ParameterError(f"k must be positive, got {self.k}")
        if self.k > self.n - self.t:
            raise InfeasibleParametersError(
                f"k={self.k} > n - t = {self.n - self.t}: no subsample can avoid {self.t} errors"
            )
        if self.s < MIN_CHECK_BITS:
            raise ParameterError(f"check tag must be at least {MIN_CHECK_BITS} bits, got {self.s}")
        for name in ("s", "key_len"):
            value = getattr(self, name)
            if value <= 0 or value % 8 or value > 0xFFFF:
                raise ParameterError(f"{name} must be a positive multiple of 8, got {value}")

    @property
    def mask_bytes(self) -> int:
        return (self.n + 7) // 8

    @property
    def ciphertext_bytes(self) -> int:
        return (self.key_len + self.s) // 8

    @property
    def locker_bytes(self) -> int:
        return self.mask_bytes + NONCE_BYTES + self.ciphertext_bytes


def sampling_success_prob(n: int, t: int, k: int, exact: bool = False) -> float | Fraction:
    """Probability that ``k`` random positions out of ``n`` miss ``t`` fixed error positions.

    Equals ``C(n-t, k) / C(n, k)``, evaluated as ``prod_{i<t} (n-k-i)/(n-i)``.
    With ``exact=True`` the result is a :class:`~fractions.Fraction`.
    """
    if n <= 0 or not 0 <= t <= n or not 0 <= k <= n:
        raise ParameterError(f"need n > 0, 0 <= t <= n, 0 <= k <= n; got n={n}, t={t}, k={k}")
    if exact:
        p = Fraction(1)
        for i in range(t):
            p *= Fraction(max(n - k - i, 0), n - i)
        return p
    p = 1.0
    for i in range(t):
        p *= max(n - k - i, 0) / (n - i)
    return p


def locker_count(params: FEParams) -> int:
    """Smallest ``ℓ`` with ``1 - (1 - p)^ℓ >= 1 - delta``."""
    p = sampling_success_prob(params.n, params.t, params.k, exact=True)
    if p == 0:
        raise InfeasibleParametersError(f"t={params.t} errors cannot be avoided with k={params.k}")
    if p == 1:
        return 1
    log_fail = math.log1p(-float(p))
    if log_fail == 0.0:
        # 1 - p rounds to 1; fall back to the first-order term
        log_fail = -float(p)
    log_delta = math.log(params.delta)
    count = max(1, math.ceil(log_delta / log_fail))
    if count > 1 << 40:
        # ±1 is below float resolution here; round up to stay on the safe side
        return count + 1
    # correct possible off-by-one from rounding in the division
    if count > 1 and (count - 1) * log_fail <= log_delta:
        count -= 1
    elif count * log_fail > log_delta:
        count += 1
    return count


def helper_size(params: FEParams) -> int:
    """Serialized helper-data size in bytes."""
    return HEADER_BYTES + locker_count(params) * params.locker_bytes


@dataclass(frozen=True)
class Locker:
    mask: bytes
    nonce: bytes
    ciphertext: bytes

    def positions(self, n: int) -> np.ndarray:
        bits = np.unpackbits(np.frombuffer(self.mask, dtype=np.uint8), bitorder="little")[:n]
        return np.flatnonzero(bits)


@dataclass(frozen=True, eq=False)
class HelperData:
    """Public enrollment output: parameters plus ``ℓ`` lockers.

    Lockers are stored column-wise as byte matrices so reproduction can
    extract all subsamples with one fancy-indexing step.
    """

    params: FEParams
    masks: np.ndarray
    nonces: np.ndarray
    ciphertexts: np.ndarray
    _positions: np.ndarray = field(init=False, repr=False)
    _ct_ints: list = field(init=False, repr=False)

    def __post_init__(self):
        p = self.params
        count = self.masks.shape[0]
        if self.masks.shape != (count, p.mask_bytes) or self.nonces.shape != (count, NONCE_BYTES) \
                or self.ciphertexts.shape != (count, p.ciphertext_bytes):
            raise FormatError("locker arrays have inconsistent shapes")
        mask_bits = np.unpackbits(self.masks, axis=1, bitorder="little")
        if np.any(mask_bits[:, p.n:]):
            raise FormatError("mask sets bits beyond the fingerprint length")
        mask_bits = mask_bits[:, : p.n]
        if np.any(mask_bits.sum(axis=1) != p.k):
            raise FormatError(f"every mask must select exactly k={p.k} positions")
        for arr in (self.masks, self.nonces, self.ciphertexts):
            arr.flags.writeable = False
        positions = np.nonzero(mask_bits)[1].reshape(count, p.k)
        object.__setattr__(self, "_positions", positions)
        object.__setattr__(
            self, "_ct_ints", [int.from_bytes(row.tobytes(), "little") for row in self.ciphertexts]
        )

    def __len__(self) -> int:
        return int(self.masks.shape[0])

    @property
    def lockers(self) -> list[Locker]:
        return list(self)

    def __iter__(self) -> Iterator[Locker]:
        for m, nn, c in zip(self.masks, self.nonces, self.ciphertexts):
            yield Locker(m.tobytes(), nn.tobytes(), c.tobytes())

    def __eq__(self, other) -> bool:
        if not isinstance(other, HelperData):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    def to_bytes(self) -> bytes:
        p = self.params
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, p.n, p.k, p.t, p.s, p.key_len, p.delta, len(self))
        body = np.concatenate([self.masks, self.nonces, self.ciphertexts], axis=1)
        return header + body.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "HelperData":
        if len(blob) < HEADER_BYTES:
            raise FormatError("helper data shorter than its header")
        magic, version, n, k, t, s, key_len, delta, count = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported helper-data version {version}")
        params = FEParams(n=n, t=t, delta=delta, k=k, s=s, key_len=key_len)
        expected = HEADER_BYTES + count * params.locker_bytes
        if len(blob) != expected:
            raise FormatError(f"helper data is {len(blob)} bytes, header implies {expected}")
        body = np.frombuffer(blob, dtype=np.uint8, offset=HEADER_BYTES).reshape(count, params.locker_bytes)
        mb, cb = params.mask_bytes, params.ciphertext_bytes
        return cls(
            params=params,
            masks=body[:, :mb].copy(),
            nonces=body[:, mb: mb + NONCE_BYTES].copy(),
            ciphertexts=body[:, mb + NONCE_BYTES: mb + NONCE_BYTES + cb].copy(),
        )


def pr_hash(nonce: bytes, subsample: bytes, out_bytes: int) -> bytes:
    return hashlib.shake_256(_DOMAIN + nonce + subsample).digest(out_bytes)


def lock(nonce: bytes, subsample: bytes, key: bytes, check_bytes: int) -> bytes:
    """Digital locker: hide ``key`` so that only ``subsample`` (with ``nonce``) reveals it."""
    plain = key + bytes(check_bytes)
    pad = pr_hash(nonce, subsample, len(plain))
    return (int.from_bytes(pad, "little") ^ int.from_bytes(plain, "little")).to_bytes(len(plain), "little")


def unlock(nonce: bytes, subsample: bytes, ciphertext: bytes, key_bytes: int) -> bytes | None:
    """Open a locker; ``None`` when the check tag is not all zero."""
    pad = pr_hash(nonce, subsample, len(ciphertext))
    plain = int.from_bytes(pad, "little") ^ int.from_bytes(ciphertext, "little")
    if plain >> (8 * key_bytes):
        return None
    return plain.to_bytes(key_bytes, "little")


def _pack_subsamples(bits: np.ndarray, positions: np.ndarray) -> np.ndarray:
    return np.packbits(bits[positions], axis=1, bitorder="little")


def gen(w: Fingerprint, params: FEParams, rng_seed: int | None = None) -> tuple[bytes, HelperData]:
    """Enroll ``w``: returns the extracted key and the public helper data.

    With ``rng_seed`` set, key, nonces and positions come from a seeded
    (non-cryptographic) generator so experiments are reproducible. Without
    it, key and nonces come from the OS CSPRNG.
    """
    if w.length_bits != params.n:
        raise ComparisonError(f"fingerprint has {w.length_bits} bits, parameters expect n={params.n}")
    count = locker_count(params)
    key_bytes = params.key_len // 8
    if rng_seed is None:
        rng = np.random.default_rng(secrets.randbits(128))
        key = secrets.token_bytes(key_bytes)
        nonce_blob = secrets.token_bytes(NONCE_BYTES * count)
    else:
        rng = np.random.default_rng(rng_seed)
        key = rng.bytes(key_bytes)
        nonce_blob = rng.bytes(NONCE_BYTES * count)
    nonces = np.frombuffer(nonce_blob, dtype=np.uint8).reshape(count, NONCE_BYTES).copy()

    # uniform k-subsets: the first k indices of a random permutation, sorted
    positions = np.sort(np.argsort(rng.random((count, params.n)), axis=1)[:, : params.k], axis=1)
    mask_bits = np.zeros((count, params.mask_bytes * 8), dtype=np.uint8)
    np.put_along_axis(mask_bits, positions, 1, axis=1)
    masks = np.packbits(mask_bits, axis=1, bitorder="little")

    subsamples = _pack_subsamples(w.bits, positions)
    check_bytes = params.s // 8
    ciphertexts = np.empty((count, params.ciphertext_bytes), dtype=np.uint8)
    for i in range(count):
        ct = lock(nonces[i].tobytes(), subsamples[i].tobytes(), key, check_bytes)
        ciphertexts[i] = np.frombuffer(ct, dtype=np.uint8)
    return key, HelperData(params=params, masks=masks, nonces=nonces, ciphertexts=ciphertexts)


def try_rep(w_prime: Fingerprint, helper: HelperData) -> tuple[bytes, int] | None:
    """Like :func:`rep` but returns ``(key, locker_index)`` or ``None``."""
    params = helper.params
    if w_prime.length_bits != params.n:
        raise ComparisonError(
            f"fingerprint has {w_prime.length_bits} bits, helper data expects n={params.n}"
        )
    key_bytes = params.key_len // 8
    out_bytes = params.ciphertext_bytes
    bits = w_prime.bits
    ct_ints = helper._ct_ints
    for start in range(0, len(helper), _CHUNK):
        stop = min(start + _CHUNK, len(helper))
        subsamples = _pack_subsamples(bits, helper._positions[start:stop])
        nonces = helper.nonces[start:stop]
        for j in range(stop - start):
            pad = hashlib.shake_256(_DOMAIN + nonces[j].tobytes() + subsamples[j].tobytes()).digest(out_bytes)
            plain = int.from_bytes(pad, "little") ^ ct_ints[start + j]
            if not plain >> (8 * key_bytes):
                return plain.to_bytes(key_bytes, "little"), start + j
    return None


def rep(w_prime: Fingerprint, helper: HelperData) -> bytes:
    """Reproduce the enrolled key from a noisy fingerprint.

    Lockers are tried in index order and the first that opens wins. Raises
    :class:`ReproductionError` when none opens.
    """
    result = try_rep(w_prime, helper)
    if result is None:
        raise ReproductionError(f"none of {len(helper)} lockers opened")
    return result[0]
