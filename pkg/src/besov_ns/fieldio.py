"""SFLD1 binary field files.

Layout (little-endian)::

    b"SFLD1\\0"  u8 n  u8 rank  u32 N  f64 L  u8 dtype  payload

``dtype`` 0 stores float64 physical samples, 1 stores complex128 Fourier
coefficients (unitary-in-mean, native FFT index order).  The payload is
row-major with component axes outermost.
"""
from __future__ import annotations

import io
import struct

import numpy as np

from .spectral import Grid, SpectralField, forward

MAGIC = b"SFLD1\x00"
_HEADER = struct.Struct("<BBIdB")
PHYSICAL = 0
SPECTRAL = 1


class FieldFormatError(ValueError):
    pass


def write_field(sf: SpectralField, sink, dtype: int = SPECTRAL) -> None:
    """Write ``sf`` to a path or binary stream."""
    if dtype not in (PHYSICAL, SPECTRAL):
        raise ValueError(f"unknown dtype code {dtype}")
    if dtype == PHYSICAL:
        if not sf.real:
            raise ValueError("complex-valued fields can only be stored spectrally")
        payload = np.ascontiguousarray(sf.physical(), dtype="<f8")
    else:
        payload = np.ascontiguousarray(sf.coeffs, dtype="<c16")
    g = sf.grid
    blob = MAGIC + _HEADER.pack(g.n, sf.rank, g.N, g.L, dtype) + payload.tobytes()
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        with open(sink, "wb") as fh:
            fh.write(blob)
    else:
        sink.write(blob)


def read_field(source, grid: Grid | None = None) -> SpectralField:
    """Read an SFLD1 stream; if ``grid`` is given the header must match it."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    if data[: len(MAGIC)] != MAGIC:
        raise FieldFormatError("bad magic")
    off = len(MAGIC)
    if len(data) < off + _HEADER.size:
        raise FieldFormatError("truncated stream: incomplete header")
    n, rank, N, L, dtype = _HEADER.unpack_from(data, off)
    off += _HEADER.size
    if rank > 2 or dtype not in (PHYSICAL, SPECTRAL):
        raise FieldFormatError(f"invalid header (rank={rank}, dtype={dtype})")
    file_grid = Grid(n, N, L)
    if grid is not None and grid != file_grid:
        raise FieldFormatError(f"grid mismatch: file has {file_grid}, expected {grid}")
    shape = ((), (n,), (n, n))[rank] + file_grid.shape
    count = int(np.prod(shape))
    np_dtype = np.dtype("<f8") if dtype == PHYSICAL else np.dtype("<c16")
    need = count * np_dtype.itemsize
    if len(data) - off < need:
        raise FieldFormatError(f"truncated stream: payload has {len(data) - off} of {need} bytes")
    arr = np.frombuffer(data, dtype=np_dtype, count=count, offset=off).reshape(shape)
    if dtype == PHYSICAL:
        return forward(file_grid, arr.astype(float))
    coeffs = arr.astype(np.complex128)
    return SpectralField(file_grid, coeffs, real=_looks_hermitian(file_grid, coeffs))


def to_bytes(sf: SpectralField, dtype: int = SPECTRAL) -> bytes:
    buf = io.BytesIO()
    write_field(sf, buf, dtype)
    return buf.getvalue()


def _looks_hermitian(grid: Grid, coeffs: np.ndarray) -> bool:
    axes = tuple(range(coeffs.ndim - grid.n, coeffs.ndim))
    flipped = np.roll(np.flip(coeffs, axis=axes), 1, axis=axes)
    return bool(np.allclose(flipped, np.conj(coeffs), rtol=0, atol=1e-14 * (1 + np.abs(coeffs).max())))
