"""Reader and writer for 2-D float arrays in the NPY v1.0 container."""
from __future__ import annotations

import ast
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    FortranOrderError,
    NpyFormatError,
    ShapeError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
    UnsupportedVersionError,
)

MAGIC = b"\x93NUMPY"
PREAMBLE = 10  # magic + version + header length
ALIGN = 64
DTYPES = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


def parse_npy(buf: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(buf) < PREAMBLE:
        raise TruncatedPayloadError(f"{source}: {len(buf)} bytes is shorter than the NPY preamble")
    if buf[:6] != MAGIC:
        raise BadMagicError(f"{source}: bad magic {buf[:6]!r}")
    if buf[6:8] != b"\x01\x00":
        raise UnsupportedVersionError(f"{source}: NPY version {buf[6]}.{buf[7]} is not supported (need 1.0)")
    (hlen,) = struct.unpack("<H", buf[8:10])
    if len(buf) < PREAMBLE + hlen:
        raise TruncatedPayloadError(f"{source}: header declares {hlen} bytes, file ends early")
    try:
        header = ast.literal_eval(buf[PREAMBLE : PREAMBLE + hlen].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise NpyFormatError(f"{source}: unreadable header: {exc}") from None
    if not isinstance(header, dict) or {"descr", "fortran_order", "shape"} - header.keys():
        raise NpyFormatError(f"{source}: header must be a dict with descr, fortran_order and shape")
    descr = header["descr"]
    if descr not in DTYPES:
        raise UnsupportedDtypeError(f"{source}: element type {descr!r} is not '<f4' or '<f8'")
    if header["fortran_order"]:
        raise FortranOrderError(f"{source}: fortran_order=True is not supported")
    shape = header["shape"]
    if not isinstance(shape, tuple) or len(shape) != 2 or not all(isinstance(d, int) and d >= 0 for d in shape):
        raise ShapeError(f"{source}: expected a 2-D shape, got {shape!r}")
    dtype = DTYPES[descr]
    nbytes = shape[0] * shape[1] * dtype.itemsize
    start = PREAMBLE + hlen
    if len(buf) - start < nbytes:
        raise TruncatedPayloadError(f"{source}: payload has {len(buf) - start} bytes, shape {shape} needs {nbytes}")
    data = np.frombuffer(buf, dtype=dtype, count=shape[0] * shape[1], offset=start)
    # f4 -> f8 widening is exact
    return data.reshape(shape).astype(np.float64)


def format_npy(m: np.ndarray, descr: str = "<f8") -> bytes:
    if descr not in DTYPES:
        raise UnsupportedDtypeError(f"cannot write element type {descr!r}")
    m = np.asarray(m)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    header = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {tuple(m.shape)}, }}"
    pad = -(PREAMBLE + len(header) + 1) % ALIGN
    header = header + " " * pad + "\n"
    payload = np.ascontiguousarray(m, dtype=DTYPES[descr]).tobytes()
    return MAGIC + b"\x01\x00" + struct.pack("<H", len(header)) + header.encode("latin1") + payload


def read_feature_file(path: str | Path) -> np.ndarray:
    path = Path(path)
    return parse_npy(path.read_bytes(), str(path))


def write_feature_file(path: str | Path, m: np.ndarray, descr: str = "<f8") -> None:
    m = np.asarray(m)
    if m.size == 0:
        raise ShapeError(f"{path}: refusing to write an empty matrix")
    try:
        Path(path).write_bytes(format_npy(m, descr))
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
