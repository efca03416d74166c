"""Binary snapshots of spectral fields.

Layout, all little-endian: magic ``RWEU``, version u32, ``n`` u32, box length
f64, time f64, field count u32, then per field a 16-byte ASCII name (NUL
padded) followed by ``n^3`` complex coefficients as (re, im) f64 pairs in
row-major order with the first wavenumber index slowest, FFT ordering.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import Grid

MAGIC = b"RWEU"
VERSION = 1
NAME_BYTES = 16
_HEADER = struct.Struct("<4sIIddI")


class SnapshotError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Snapshot:
    grid: Grid
    time: float
    fields: dict  # name -> complex array of shape grid.shape


def encode(snapshot):
    grid = snapshot.grid
    parts = [_HEADER.pack(MAGIC, VERSION, grid.n, float(grid.box_length), float(snapshot.time), len(snapshot.fields))]
    for name, coeffs in snapshot.fields.items():
        raw = name.encode("ascii")
        if len(raw) > NAME_BYTES:
            raise SnapshotError(f"field name {name!r} longer than {NAME_BYTES} bytes")
        coeffs = np.asarray(coeffs)
        if coeffs.shape != grid.shape:
            raise SnapshotError(f"field {name!r} has shape {coeffs.shape}, expected {grid.shape}")
        parts.append(raw.ljust(NAME_BYTES, b"\0"))
        parts.append(np.ascontiguousarray(coeffs, dtype="<c16").tobytes())
    return b"".join(parts)


def decode(data):
    if len(data) < _HEADER.size:
        raise SnapshotError("truncated header")
    magic, version, n, box_length, time, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    grid = Grid(n, box_length)
    size = 16 * n**3
    offset = _HEADER.size
    fields = {}
    for _ in range(count):
        if offset + NAME_BYTES + size > len(data):
            raise SnapshotError("truncated field data")
        name = data[offset : offset + NAME_BYTES].rstrip(b"\0").decode("ascii")
        offset += NAME_BYTES
        fields[name] = np.frombuffer(data, dtype="<c16", count=n**3, offset=offset).reshape(grid.shape).astype(complex)
        offset += size
    if offset != len(data):
        raise SnapshotError(f"{len(data) - offset} trailing bytes")
    return Snapshot(grid, time, fields)


def write(path, snapshot):
    Path(path).write_bytes(encode(snapshot))


def read(path):
    return decode(Path(path).read_bytes())


def velocity_snapshot(grid, time, coeffs):
    """Snapshot holding the three velocity components ``u1, u2, u3``."""
    return Snapshot(grid, time, {f"u{i + 1}": coeffs[i] for i in range(3)})
