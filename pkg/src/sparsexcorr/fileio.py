"""On-disk formats: signal files, packet files, and result CSVs.

Binary signals use a 16-byte header (magic 'SXS1', version, 3 reserved bytes,
fs u32, length u32, all little-endian) followed by float32 samples.  Text
signals are one decimal sample per line.  CSV writers are byte-deterministic
apart from an optional timestamp comment so reruns can be diffed.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import PacketFormatError
from .sensing import MeasurementPacket, deserialize_packet, serialize_packet
from .signals import SampledSignal

SIGNAL_MAGIC = b"SXS1"
SIGNAL_VERSION = 1
_SIG_HEADER = struct.Struct("<4sB3xII")


def write_signal(path, sig: SampledSignal) -> None:
    """Write a signal file; .csv extension selects the text format."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        write_signal_csv(path, sig)
    else:
        write_signal_bin(path, sig)


def read_signal(path, fs: float | None = None) -> SampledSignal:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        if fs is None:
            raise PacketFormatError("CSV signal files carry no sample rate; pass fs")
        return read_signal_csv(path, fs)
    return read_signal_bin(path)


def write_signal_bin(path, sig: SampledSignal) -> None:
    data = np.asarray(sig.samples, dtype="<f4")
    header = _SIG_HEADER.pack(SIGNAL_MAGIC, SIGNAL_VERSION, int(round(sig.fs)), data.size)
    Path(path).write_bytes(header + data.tobytes())


def read_signal_bin(path) -> SampledSignal:
    buf = Path(path).read_bytes()
    if len(buf) < _SIG_HEADER.size:
        raise PacketFormatError("signal file shorter than its header")
    magic, version, fs, length = _SIG_HEADER.unpack(buf[: _SIG_HEADER.size])
    if magic != SIGNAL_MAGIC:
        raise PacketFormatError(f"bad signal magic {magic!r}")
    if version != SIGNAL_VERSION:
        raise PacketFormatError(f"unsupported signal version {version}")
    expected = _SIG_HEADER.size + 4 * length
    if len(buf) != expected:
        raise PacketFormatError(f"signal file length {len(buf)} != expected {expected}")
    samples = np.frombuffer(buf[_SIG_HEADER.size :], dtype="<f4").astype(np.float64)
    return SampledSignal(samples, float(fs))


def write_signal_csv(path, sig: SampledSignal) -> None:
    with open(path, "w") as fh:
        for v in sig.samples:
            fh.write(f"{float(v)!r}\n")


def read_signal_csv(path, fs: float) -> SampledSignal:
    samples = np.loadtxt(path, dtype=np.float64, ndmin=1)
    return SampledSignal(samples, fs)


def write_packets(directory, packets: list[MeasurementPacket]) -> list[Path]:
    """One wire-format file per packet, named by buffer index."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for pkt in packets:
        path = directory / f"pkt_{pkt.buffer_index:04d}.sxp"
        path.write_bytes(serialize_packet(pkt))
        paths.append(path)
    return paths


def read_packets(directory) -> list[MeasurementPacket]:
    directory = Path(directory)
    paths = sorted(directory.glob("pkt_*.sxp"))
    if not paths:
        raise PacketFormatError(f"no packet files found in {directory}")
    return [deserialize_packet(p.read_bytes()) for p in paths]


def write_rows_csv(path, rows: list[dict], fieldnames: list[str],
                   header_comment: str | None = None) -> None:
    """Deterministic CSV: fixed column order, repr() floats, \\n line ends."""
    with open(path, "w", newline="") as fh:
        if header_comment is not None:
            fh.write(f"# {header_comment}\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in fieldnames})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v
