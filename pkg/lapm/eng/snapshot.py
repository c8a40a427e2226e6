"""
LAPF field snapshots (little-endian):
magic "LAPF", u32 version, u32 n, u32 m, u32 N, f64 L, then m * N^n complex samples
as interleaved f64 (re, im), C-order, component-major.
"""
from pathlib import Path
import struct
import numpy as np

from .grid_field import Grid, Field
from .error import SnapshotError, ShapeError

MAGIC = b'LAPF'
VERSION = 1
_HEADER = struct.Struct('<4sIIIId')

def encode_field(f: Field) -> bytes:
    g = f.grid
    header = _HEADER.pack(MAGIC, VERSION, g.n, f.m, g.N, g.L)
    return header + np.ascontiguousarray(f.values, dtype='<c16').tobytes()

def decode_field(blob: bytes) -> Field:
    if len(blob) < _HEADER.size:
        raise SnapshotError(f"Snapshot too short for a header ({len(blob)} bytes)")
    magic, version, n, m, N, L = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise SnapshotError(f"Bad snapshot magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"Unsupported snapshot version {version}")
    try:
        grid = Grid(n, N, L)
    except (ShapeError, ValueError) as e:
        raise SnapshotError(f"Invalid snapshot grid: {e}") from e
    count = m * N ** n
    payload = blob[_HEADER.size:]
    if len(payload) != count * 16:
        raise SnapshotError(f"Snapshot payload has {len(payload)} bytes, expected {count * 16}")
    values = np.frombuffer(payload, dtype='<c16').reshape((m,) + grid.shape)
    return Field(grid, values)

def write_snapshot(f: Field, path: str | Path):
    Path(path).write_bytes(encode_field(f))

def read_snapshot(path: str | Path) -> Field:
    return decode_field(Path(path).read_bytes())
