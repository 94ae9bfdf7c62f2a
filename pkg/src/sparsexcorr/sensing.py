"""Balanced Bernoulli sensing matrices, compression, and the packet codec.

Matrix rows are exact random arrangements of equally many +1 and -1 entries
(scaled by 1/sqrt(m)), so every row sums to zero by construction.  Matrices
regenerate bit-identically from a 64-bit seed via PCG64, which is what lets a
receiver transmit measurements plus a seed instead of the matrix itself.

The compression inner loop is pure accumulation of signed samples; the
1/sqrt(m) scaling is applied once per output row after the loop (on real
hardware it would be deferred all the way to the recovery side).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import PacketFormatError, ParameterError
from .signals import SampledSignal

PACKET_MAGIC = b"SXC1"
PACKET_VERSION = 1
_HEADER = struct.Struct("<4sBHHIIIfQ")


class CostCounter:
    """Accumulates scalar multiply-add counts for the compression cost model."""

    def __init__(self):
        self.madds = 0

    def add(self, n: int) -> None:
        self.madds += int(n)


@dataclass(frozen=True)
class SensingMatrix:
    """m x n matrix with entries +-1/sqrt(m), balanced per row.

    For even n the row-wise index sets of +1 and -1 entries are kept so
    compression can sum each selected half and take the difference, which
    cancels exactly on constant input (both halves see the same multiset).
    """

    signs: np.ndarray                 # int8, values +-1
    seed: int
    m: int
    n: int
    pos_idx: np.ndarray | None = None  # m x n/2 column indices of +1 entries
    neg_idx: np.ndarray | None = None

    @property
    def entries(self) -> np.ndarray:
        return self.signs.astype(np.float64) / math.sqrt(self.m)


def gen_sensing_matrix(seed: int, m: int, n: int) -> SensingMatrix:
    """Draw a balanced +-1/sqrt(m) matrix deterministically from `seed`.

    Each row places +1 on a uniformly random half of the columns and -1 on
    the rest.  For odd n the surplus entry is +1 on even rows and -1 on odd
    rows, so the one-unit imbalances cancel pairwise across rows.
    """
    if m < 1:
        raise ParameterError("row count m must be >= 1")
    if n < 2:
        raise ParameterError("column count n must be >= 2")
    rng = np.random.Generator(np.random.PCG64(seed))
    half = n // 2
    signs = np.empty((m, n), dtype=np.int8)
    even = n % 2 == 0
    pos_idx = np.empty((m, half), dtype=np.int64) if even else None
    neg_idx = np.empty((m, half), dtype=np.int64) if even else None
    for i in range(m):
        perm = rng.permutation(n)
        n_pos = half + (1 if (not even and i % 2 == 0) else 0)
        signs[i] = -1
        signs[i, perm[:n_pos]] = 1
        if even:
            pos_idx[i] = perm[:half]
            neg_idx[i] = perm[half:]
    return SensingMatrix(signs=signs, seed=int(seed), m=m, n=n,
                         pos_idx=pos_idx, neg_idx=neg_idx)


def compress(x: SampledSignal | np.ndarray, phi: SensingMatrix,
             counter: CostCounter | None = None) -> np.ndarray:
    """y = phi @ x via sums/differences of selected samples, scaled once per row."""
    vec = x.samples if isinstance(x, SampledSignal) else np.asarray(x, dtype=np.float64)
    if vec.size != phi.n:
        raise ParameterError(f"signal length {vec.size} != matrix columns {phi.n}")
    if counter is not None:
        counter.add(phi.m * phi.n)
    if phi.pos_idx is not None:
        acc = vec[phi.pos_idx].sum(axis=1) - vec[phi.neg_idx].sum(axis=1)
    else:
        acc = phi.signs.astype(np.float64) @ vec
    return acc / math.sqrt(phi.m)


@dataclass(frozen=True)
class MeasurementPacket:
    """One buffer's compressed measurements plus recovery metadata."""

    buffer_index: int
    buffer_count: int
    n_tilde: int
    alpha: float
    seed: int
    fs: int
    y_tilde: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y_tilde, dtype=np.float64)
        if y.ndim != 1 or y.size < 1:
            raise ParameterError("y_tilde must be a nonempty vector")
        if not np.all(np.isfinite(y)):
            raise ParameterError("y_tilde must be finite")
        if not 0 <= self.buffer_index < self.buffer_count:
            raise ParameterError("buffer_index must lie in [0, buffer_count)")
        if not 0 < self.alpha <= 1:
            raise ParameterError("alpha must lie in (0, 1]")
        if self.n_tilde < 1:
            raise ParameterError("n_tilde must be >= 1")
        object.__setattr__(self, "y_tilde", y)

    @property
    def m_tilde(self) -> int:
        return self.y_tilde.size


def choose_buffer_count(t_p: float, fs: float, n_a: int) -> int:
    """Buffer count that makes each buffer as long as the reference signal."""
    n_tilde = int(round(t_p * fs))
    if n_tilde < 1:
        raise ParameterError("reference shorter than one sample")
    if n_a < n_tilde:
        raise ParameterError("acquisition shorter than the reference")
    return math.ceil(n_a / n_tilde)


def compress_buffered(x: SampledSignal, b: int, alpha: float, seed: int,
                      counter: CostCounter | None = None) -> list[MeasurementPacket]:
    """Split x into b equal buffers and compress each with one shared matrix.

    The trace is zero-padded up to b * n_tilde when its length is not
    divisible by b (the padded size is what the packet metadata records).
    Total multiply-adds are b * m_tilde * n_tilde = m * n / b.
    """
    if b < 1:
        raise ParameterError("buffer count must be >= 1")
    if not 0 < alpha <= 1:
        raise ParameterError("alpha must lie in (0, 1]")
    n_tilde = math.ceil(len(x) / b)
    m_tilde = int(round(alpha * n_tilde))
    if m_tilde < 1:
        raise ParameterError(f"alpha={alpha} yields zero measurements per buffer")

    padded = np.zeros(b * n_tilde)
    padded[: len(x)] = x.samples
    phi = gen_sensing_matrix(seed, m_tilde, n_tilde)

    packets = []
    for i in range(b):
        chunk = padded[i * n_tilde : (i + 1) * n_tilde]
        y = compress(chunk, phi, counter=counter)
        packets.append(
            MeasurementPacket(
                buffer_index=i,
                buffer_count=b,
                n_tilde=n_tilde,
                alpha=alpha,
                seed=int(seed),
                fs=int(round(x.fs)),
                y_tilde=y,
            )
        )
    return packets


def measurement_bound(k: int, d: int, m: int) -> bool:
    """True iff m >= 2k * ln(d/m), the usual sparse-recovery sample count."""
    if k < 1:
        raise ParameterError("sparsity k must be >= 1")
    if not d > m >= 1:
        raise ParameterError("need d > m >= 1")
    return m >= 2 * k * math.log(d / m)


def serialize_packet(pkt: MeasurementPacket) -> bytes:
    """Encode a packet in the little-endian wire format (magic 'SXC1')."""
    header = _HEADER.pack(
        PACKET_MAGIC,
        PACKET_VERSION,
        pkt.buffer_index,
        pkt.buffer_count,
        pkt.n_tilde,
        pkt.m_tilde,
        pkt.fs,
        pkt.alpha,
        pkt.seed,
    )
    body = np.asarray(pkt.y_tilde, dtype="<f4").tobytes()
    return header + body


def deserialize_packet(buf: bytes) -> MeasurementPacket:
    """Decode one packet; raises PacketFormatError on any malformation."""
    if len(buf) < _HEADER.size:
        raise PacketFormatError(f"packet truncated: {len(buf)} < header size {_HEADER.size}")
    magic, version, buffer_index, buffer_count, n_tilde, m_tilde, fs, alpha, seed = \
        _HEADER.unpack(buf[: _HEADER.size])
    if magic != PACKET_MAGIC:
        raise PacketFormatError(f"bad magic {magic!r}")
    if version != PACKET_VERSION:
        raise PacketFormatError(f"unsupported packet version {version}")
    expected = _HEADER.size + 4 * m_tilde
    if len(buf) != expected:
        raise PacketFormatError(f"payload length {len(buf)} != expected {expected}")
    if m_tilde < 1:
        raise PacketFormatError("packet declares zero measurements")
    y = np.frombuffer(buf[_HEADER.size :], dtype="<f4").astype(np.float64)
    try:
        return MeasurementPacket(
            buffer_index=buffer_index,
            buffer_count=buffer_count,
            n_tilde=n_tilde,
            alpha=alpha,
            seed=seed,
            fs=fs,
            y_tilde=y,
        )
    except ParameterError as exc:
        raise PacketFormatError(str(exc)) from exc


def packet_stream(packets: list[MeasurementPacket]) -> bytes:
    """Concatenate packets into one self-delimiting byte stream."""
    return b"".join(serialize_packet(p) for p in packets)


def read_packet_stream(buf: bytes) -> list[MeasurementPacket]:
    """Split a concatenated stream back into packets."""
    packets = []
    offset = 0
    while offset < len(buf):
        if len(buf) - offset < _HEADER.size:
            raise PacketFormatError("trailing bytes do not form a packet header")
        _, _, _, _, _, m_tilde, _, _, _ = _HEADER.unpack(buf[offset : offset + _HEADER.size])
        end = offset + _HEADER.size + 4 * m_tilde
        if end > len(buf):
            raise PacketFormatError("stream truncated mid-packet")
        packets.append(deserialize_packet(buf[offset:end]))
        offset = end
    return packets
