"""Binary field and sinogram files, CSV exports and PGM previews.

``.patf`` field: ``b"PATF"``, ``u32 nx``, ``u32 ny``, ``f32 h``, then
``nx * ny`` little-endian float64 values in row-major order.

``.pats`` sinogram: ``b"PATS"``, ``u32 count``, ``u32 nt``, ``f64 h_t``,
then ``count * nt`` little-endian float64 values in row-major order.
"""
from __future__ import annotations

import re
import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np

_FIELD_HEADER = struct.Struct("<4sIIf")
_SINO_HEADER = struct.Struct("<4sIId")


class FormatError(ValueError):
    """The file does not follow the expected layout."""


class FieldFile(NamedTuple):
    values: np.ndarray
    h: float


class SinogramFile(NamedTuple):
    values: np.ndarray
    h_t: float


def _payload(path, header: struct.Struct, magic: bytes):
    raw = Path(path).read_bytes()
    if len(raw) < header.size:
        raise FormatError(f"{path}: truncated header")
    tag, n0, n1, step = header.unpack_from(raw)
    if tag != magic:
        raise FormatError(f"{path}: bad magic {tag!r}, expected {magic!r}")
    body = raw[header.size:]
    if len(body) != 8 * n0 * n1:
        raise FormatError(
            f"{path}: expected {8 * n0 * n1} payload bytes, found {len(body)}")
    values = np.frombuffer(body, dtype="<f8").reshape(n0, n1).astype(float)
    return values, step


def _write(path, header: struct.Struct, magic: bytes, values, step) -> None:
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 2:
        raise ValueError(f"expected a 2D array, got shape {values.shape}")
    with open(path, "wb") as fh:
        fh.write(header.pack(magic, values.shape[0], values.shape[1], step))
        fh.write(values.tobytes())


def write_field(path, values, h: float) -> None:
    _write(path, _FIELD_HEADER, b"PATF", values, h)


def read_field(path) -> FieldFile:
    values, h = _payload(path, _FIELD_HEADER, b"PATF")
    return FieldFile(values, float(h))


def write_sinogram(path, values, h_t: float) -> None:
    _write(path, _SINO_HEADER, b"PATS", values, h_t)


def read_sinogram(path) -> SinogramFile:
    values, h_t = _payload(path, _SINO_HEADER, b"PATS")
    return SinogramFile(values, float(h_t))


def write_csv(path, values) -> None:
    """Comma separated matrix, one row per line, full double precision."""
    np.savetxt(path, np.atleast_2d(values), delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def to_uint8(values, vmin: float | None = None, vmax: float | None = None) -> np.ndarray:
    """Linear map of ``[vmin, vmax]`` (data range by default) to 0..255."""
    values = np.asarray(values, dtype=float)
    lo = float(np.min(values)) if vmin is None else float(vmin)
    hi = float(np.max(values)) if vmax is None else float(vmax)
    if hi <= lo:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = (np.clip(values, lo, hi) - lo) / (hi - lo)
    return np.round(255 * scaled).astype(np.uint8)


def write_pgm(path, values, vmin: float | None = None, vmax: float | None = None,
              image_axes: bool = True) -> None:
    """Binary 8-bit PGM preview.

    With ``image_axes`` a field indexed ``[ix, iy]`` is shown with x to the
    right and y upwards.
    """
    img = to_uint8(values, vmin, vmax)
    if img.ndim != 2:
        raise ValueError("PGM previews need a 2D array")
    if image_axes:
        img = img.T[::-1]
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        fh.write(np.ascontiguousarray(img).tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary 8-bit PGM written by :func:`write_pgm` (raw rows)."""
    raw = Path(path).read_bytes()
    # exactly one whitespace byte separates the header from the pixels
    match = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if match is None:
        raise FormatError(f"{path}: not a binary PGM")
    width, height, maxval = (int(x) for x in match.groups())
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PGM is supported")
    data = raw[match.end():]
    if len(data) != width * height:
        raise FormatError(f"{path}: expected {width * height} pixels")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width).copy()
