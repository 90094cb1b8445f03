"""Binary state snapshots.

Layout (little-endian)::

    magic     4 bytes   b"MMP1"
    version   u32
    n         u32
    time      f64
    params    5 x f64   mu, chi, kappa, gamma, nu
    coeffs    3 fields x 3 components x n^3 complex128 (u, omega, b),
              each component in FFT index order, row-major

Writing and reading reproduces the coefficients bit for bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import MMPParams, MMPState
from .errors import SnapshotFormatError
from .spectral import Grid

MAGIC = b"MMP1"
VERSION = 1
HEADER = struct.Struct("<4sIId5d")
DTYPE = np.dtype("<c16")


@dataclass(frozen=True)
class SnapshotHeader:
    version: int
    n: int
    time: float
    params: tuple[float, float, float, float, float]


def encode(state: MMPState, params: MMPParams) -> bytes:
    head = HEADER.pack(MAGIC, VERSION, state.grid.n, float(state.time), *params.as_tuple())
    return head + np.ascontiguousarray(state.stack(), dtype=DTYPE).tobytes()


def decode_header(data: bytes) -> SnapshotHeader:
    if len(data) < HEADER.size:
        raise SnapshotFormatError(f"truncated header: {len(data)} of {HEADER.size} bytes")
    magic, version, n, time, *params = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    return SnapshotHeader(version, n, time, tuple(params))


def decode(data: bytes) -> tuple[MMPState, MMPParams, SnapshotHeader]:
    header = decode_header(data)
    n = header.n
    expected = HEADER.size + 9 * n**3 * DTYPE.itemsize
    if len(data) != expected:
        kind = "truncated" if len(data) < expected else "oversized"
        raise SnapshotFormatError(f"{kind} snapshot: {len(data)} bytes, expected {expected}")
    try:
        grid = Grid(n)
    except ValueError as exc:
        raise SnapshotFormatError(str(exc)) from None
    coeffs = np.frombuffer(data, dtype=DTYPE, offset=HEADER.size).reshape((3, 3) + grid.shape)
    state = MMPState.from_stack(grid, coeffs.astype(np.complex128), header.time)
    return state, MMPParams(*header.params), header


def write_snapshot(path, state: MMPState, params: MMPParams) -> None:
    Path(path).write_bytes(encode(state, params))


def read_snapshot(path) -> tuple[MMPState, MMPParams, SnapshotHeader]:
    return decode(Path(path).read_bytes())
