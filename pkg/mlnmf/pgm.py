#!/usr/bin/env python3

"""Binary PGM (P5) reader and writer.

Header fields are separated by whitespace and may be interleaved with `#`
comments running to the end of the line. Exactly one whitespace byte follows
maxval, then the raster: one byte per sample when maxval < 256, otherwise two
bytes, most significant first.
"""

from pathlib import Path
from typing import NamedTuple, Tuple, Union

import numpy as np
import numpy.typing as npt

from .errors import InvalidArgumentError, ParseError

__all__ = ["PgmImage", "read_pgm", "write_pgm"]

MAGIC = b"P5"
MAX_MAXVAL = 65535
_WHITESPACE = b" \t\n\r\v\f"

PathLike = Union[str, Path]


class PgmImage(NamedTuple):
    height: int
    width: int
    maxval: int
    pixels: npt.NDArray[np.uint16]  # height x width, row-major as stored


def _next_token(data: bytes, pos: int, path: PathLike) -> Tuple[bytes, int, int]:
    """Return (token, token_offset, position after token), skipping comments."""
    n = len(data)
    while pos < n:
        byte = data[pos : pos + 1]
        if byte == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif byte in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE:
        if data[pos : pos + 1] == b"#":
            break
        pos += 1
    if start == pos:
        raise ParseError("unexpected end of PGM header", str(path), offset=start)
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, path: PathLike, name: str) -> Tuple[int, int]:
    token, offset, pos = _next_token(data, pos, path)
    if not token.isdigit():
        raise ParseError(f"PGM {name} is not a number: {token!r}", str(path), offset=offset)
    return int(token), pos


def read_pgm(path: PathLike) -> PgmImage:
    """Read a binary PGM file.

    Any maxval in [1, 65535] is accepted, as netpbm allows: samples are one
    byte below 256 and two big-endian bytes from 256 up. ORL and the images
    written by this package use 255.

    Raises:
        ParseError: If the magic, a header field or the raster is malformed,
            with the byte offset of the problem
        OSError: If the file cannot be read
    """
    data = Path(path).read_bytes()
    if data[:2] != MAGIC:
        raise ParseError(
            f"not a binary PGM file (magic {data[:2]!r}, expected {MAGIC!r})",
            str(path),
            offset=0,
        )
    pos = 2
    width, pos = _header_int(data, pos, path, "width")
    height, pos = _header_int(data, pos, path, "height")
    maxval_offset = pos
    maxval, pos = _header_int(data, pos, path, "maxval")
    if width < 1 or height < 1:
        raise ParseError(f"PGM size {width}x{height} is empty", str(path), offset=2)
    if maxval < 1 or maxval > MAX_MAXVAL:
        raise ParseError(
            f"PGM maxval {maxval} outside [1, {MAX_MAXVAL}]", str(path), offset=maxval_offset
        )
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise ParseError("missing whitespace after PGM maxval", str(path), offset=pos)
    pos += 1

    sample_bytes = 1 if maxval < 256 else 2
    expected = width * height * sample_bytes
    raster = data[pos : pos + expected]
    if len(raster) < expected:
        raise ParseError(
            f"PGM raster truncated: expected {expected} bytes, found {len(raster)}",
            str(path),
            offset=pos + len(raster),
        )
    dtype = np.dtype(np.uint8) if sample_bytes == 1 else np.dtype(">u2")
    pixels = np.frombuffer(raster, dtype=dtype).reshape(height, width).astype(np.uint16)
    if int(pixels.max(initial=0)) > maxval:
        raise ParseError(f"PGM sample exceeds maxval {maxval}", str(path), offset=pos)
    return PgmImage(height, width, maxval, pixels)


def write_pgm(
    path: PathLike, pixels: npt.ArrayLike, maxval: int = 255, comment: str = ""
) -> None:
    """Write a height x width array of integer samples as binary PGM.

    A non-empty `comment` is stored as a `#` line after the magic.

    Raises:
        InvalidArgumentError: If the array is not 2-D or a sample is outside [0, maxval]
        OSError: If the file cannot be written
    """
    if maxval < 1 or maxval > MAX_MAXVAL:
        raise InvalidArgumentError(f"maxval must be in [1, {MAX_MAXVAL}], got {maxval}")
    arr = np.asarray(pixels)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidArgumentError(f"PGM pixels must be a non-empty 2-D array, got {arr.shape}")
    if arr.min() < 0 or arr.max() > maxval:
        raise InvalidArgumentError(f"PGM samples must lie in [0, {maxval}]")
    height, width = arr.shape
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    note = "".join(f"# {line}\n" for line in comment.splitlines())
    header = f"P5\n{note}{width} {height}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())
