"""File formats and the single-line ``sortingOut`` serial codec.

Frame layout on the line (idle level is '1')::

    0 | 1 | timestep (ts_bits, MSB first) | cluster (cluster_bits)     sorted spike
    0 | 0 | kept (cluster_bits)           | removed (cluster_bits)     cluster merge

``encode_events`` follows every frame with one idle bit, so an empty event
sequence encodes to a single '1'.
"""

from __future__ import annotations

import csv
import io
import os
import warnings
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .clusterer import Cluster
from .core import ClusterMerge, ProbeGeometry, Sample, SortedSpike
from .errors import (
    DuplicateChannel,
    FieldOverflow,
    MissingChannel,
    ParseError,
    TruncatedFrame,
    TruncatedFrameWarning,
)

SAMPLE_MIN, SAMPLE_MAX = -2048, 2047


# --- raw recordings -------------------------------------------------------

class RecordingReader:
    """Signed 16-bit little-endian, channel-interleaved samples.

    Values outside the 12-bit range saturate; ``saturated`` counts them.
    """

    def __init__(self, source, num_channels: int):
        if num_channels < 1:
            raise ValueError("num_channels must be >= 1")
        self.num_channels = num_channels
        self.saturated = 0
        if isinstance(source, (bytes, bytearray, memoryview)):
            buf = bytes(source)
            self._data = np.frombuffer(buf[: len(buf) // 2 * 2], dtype="<i2")
            odd = len(buf) % 2
        elif isinstance(source, (str, os.PathLike)):
            size = Path(source).stat().st_size
            odd = size % 2
            n = size // 2
            self._data = np.memmap(source, dtype="<i2", mode="r", shape=(n,)) if n else np.zeros(0, "<i2")
        else:
            buf = source.read()
            self._data = np.frombuffer(buf[: len(buf) // 2 * 2], dtype="<i2")
            odd = len(buf) % 2
        extra = self._data.shape[0] % num_channels
        if extra or odd:
            warnings.warn(
                f"recording ends mid-frame ({extra} samples, {odd} bytes); partial frame dropped",
                TruncatedFrameWarning,
                stacklevel=2,
            )
        self.num_frames = self._data.shape[0] // num_channels
        self._frames = self._data[: self.num_frames * num_channels].reshape(self.num_frames, num_channels)

    def chunks(self, frames_per_chunk: int = 30000) -> Iterator[np.ndarray]:
        for a in range(0, self.num_frames, frames_per_chunk):
            raw = np.asarray(self._frames[a : a + frames_per_chunk], dtype=np.int16)
            clipped = np.clip(raw, SAMPLE_MIN, SAMPLE_MAX)
            self.saturated += int(np.count_nonzero(clipped != raw))
            yield clipped

    def samples(self) -> Iterator[Sample]:
        C = self.num_channels
        for a, chunk in zip(range(0, self.num_frames, 4096), self.chunks(4096)):
            for t, row in enumerate(chunk.tolist(), start=a):
                for c, v in enumerate(row):
                    yield Sample(c, t, v)

    def channel(self, c: int) -> np.ndarray:
        raw = np.asarray(self._frames[:, c], dtype=np.int16)
        return np.clip(raw, SAMPLE_MIN, SAMPLE_MAX)


def read_recording(source, num_channels: int) -> Iterator[Sample]:
    return RecordingReader(source, num_channels).samples()


def write_recording(frames: Iterable[np.ndarray], path) -> int:
    """Append (T, C) int blocks to ``path`` as int16 LE; returns frames written."""
    n = 0
    with open(path, "wb") as fh:
        for block in frames:
            np.asarray(block, dtype="<i2").tofile(fh)
            n += len(block)
    return n


# --- geometry -------------------------------------------------------------

def read_geometry(text: str) -> ProbeGeometry:
    """Parse ``channel x_um z_um`` lines; '#' starts a comment."""
    pos: dict[int, tuple[float, float]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: expected 'channel x z'")
        try:
            ch = int(parts[0])
            x, z = float(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"line {lineno}: bad number in {line!r}") from None
        if ch < 0:
            raise ParseError(f"line {lineno}: negative channel")
        if ch in pos:
            raise DuplicateChannel(f"line {lineno}: channel {ch} listed twice")
        pos[ch] = (x, z)
    if not pos:
        raise ParseError("geometry is empty")
    C = max(pos) + 1
    missing = [c for c in range(C) if c not in pos]
    if missing:
        raise MissingChannel(f"channels missing: {missing[:10]}")
    return ProbeGeometry([pos[c] for c in range(C)])


def format_geometry(geometry: ProbeGeometry) -> str:
    lines = ["# channel x_um z_um"]
    for c in range(geometry.num_channels):
        x, z = geometry[c]
        lines.append(f"{c} {x:g} {z:g}")
    return "\n".join(lines) + "\n"


# --- serial codec ---------------------------------------------------------

def _bits(value: int, width: int, name: str) -> list[int]:
    if not 0 <= value < (1 << width):
        raise FieldOverflow(f"{name}={value} does not fit in {width} bits")
    return [(value >> i) & 1 for i in range(width - 1, -1, -1)]


def encode_events(events: Iterable, ts_bits: int = 32, cluster_bits: int = 9) -> list[int]:
    out: list[int] = []
    for ev in events:
        if isinstance(ev, SortedSpike):
            out += [0, 1]
            out += _bits(ev.timestep, ts_bits, "timestep")
            out += _bits(ev.cluster, cluster_bits, "cluster")
        elif isinstance(ev, ClusterMerge):
            out += [0, 0]
            out += _bits(ev.kept, cluster_bits, "kept")
            out += _bits(ev.removed, cluster_bits, "removed")
        else:
            raise TypeError(f"not a sort event: {ev!r}")
        out.append(1)
    if not out:
        out.append(1)
    return out


def decode_events(bits, ts_bits: int = 32, cluster_bits: int = 9) -> list:
    bits = list(bits)
    n = len(bits)
    events = []
    i = 0

    def field(width):
        nonlocal i
        if i + width > n:
            raise TruncatedFrame(f"stream ends inside a frame at bit {i}")
        v = 0
        for b in bits[i : i + width]:
            v = (v << 1) | b
        i += width
        return v

    while i < n:
        if bits[i]:
            i += 1
            continue
        i += 1
        kind = field(1)
        if kind:
            ts = field(ts_bits)
            events.append(SortedSpike(ts, field(cluster_bits)))
        else:
            kept = field(cluster_bits)
            events.append(ClusterMerge(kept, field(cluster_bits)))
    return events


def pack_bits(bits) -> bytes:
    """MSB-first within bytes; the tail is padded with idle '1's."""
    arr = np.asarray(list(bits), dtype=np.uint8)
    pad = (-len(arr)) % 8
    if pad:
        arr = np.concatenate([arr, np.ones(pad, np.uint8)])
    return np.packbits(arr).tobytes()


def unpack_bits(data: bytes) -> list[int]:
    return np.unpackbits(np.frombuffer(data, np.uint8)).tolist()


# --- CSV ------------------------------------------------------------------

EVENTS_HEADER = ["type", "ts", "cluster", "x_um", "z_um"]


def format_events_csv(events: Iterable) -> str:
    """Spike rows: ``spike,ts,cluster,x,z``. Merge rows: ``merge,kept,removed,,``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENTS_HEADER)
    for ev in events:
        if isinstance(ev, SortedSpike):
            x, z = ev.position if ev.position is not None else ("", "")
            w.writerow(["spike", ev.timestep, ev.cluster, x, z])
        else:
            w.writerow(["merge", ev.kept, ev.removed, "", ""])
    return buf.getvalue()


def parse_events_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:3] != EVENTS_HEADER[:3]:
        raise ParseError("events CSV must start with a 'type,ts,cluster' header")
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        try:
            kind, a, b = row[0], int(row[1]), int(row[2])
            if kind == "spike":
                pos = None
                if len(row) >= 5 and row[3] != "":
                    pos = (float(row[3]), float(row[4]))
                out.append(SortedSpike(a, b, pos))
            elif kind == "merge":
                out.append(ClusterMerge(a, b))
            else:
                raise ValueError(kind)
        except (ValueError, IndexError):
            raise ParseError(f"line {lineno}: bad event row {row!r}") from None
    return out


def format_clusters_csv(clusters: Iterable[Cluster]) -> str:
    lines = ["id,x_um,z_um,count"]
    for c in clusters:
        lines.append(f"{c.id},{c.centroid[0]!r},{c.centroid[1]!r},{c.count}")
    return "\n".join(lines) + "\n"
