#!/usr/bin/env python3

"""Run outputs: trace CSV files, basis images and error heatmaps."""

import math
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd

from .errors import InvalidArgumentError, ParseError, UnsupportedOperationError
from .matrix import FloatArray, MatrixLike, as_array
from .pgm import write_pgm
from .solvers import RunTrace, TraceSample
from .transfer import ImageGrid, devectorize

__all__ = [
    "TRACE_COLUMNS",
    "save_trace_csv",
    "load_trace_csv",
    "rescale_to_pixels",
    "save_basis_mosaic",
    "save_error_heatmap",
]

TRACE_COLUMNS = ["elapsed_s", "work_units", "level", "error"]

PathLike = Union[str, Path]


def save_trace_csv(trace: RunTrace, path: PathLike) -> None:
    """Write one line per sample under the header elapsed_s,work_units,level,error."""
    frame = pd.DataFrame(
        {
            "elapsed_s": [s.elapsed_seconds for s in trace.samples],
            "work_units": [s.work_units for s in trace.samples],
            "level": [s.level for s in trace.samples],
            "error": [s.error for s in trace.samples],
        },
        columns=TRACE_COLUMNS,
    )
    frame.to_csv(path, index=False, lineterminator="\n")


def load_trace_csv(path: PathLike) -> RunTrace:
    """Read a trace written by save_trace_csv.

    The file does not store iteration counters; each sample gets its row index.

    Raises:
        ParseError: If the header differs from TRACE_COLUMNS
    """
    frame = pd.read_csv(path)
    if list(frame.columns) != TRACE_COLUMNS:
        raise ParseError(
            f"unexpected trace header {','.join(map(str, frame.columns))}",
            str(path),
            row=1,
        )
    trace = RunTrace()
    for index, row in enumerate(frame.itertuples(index=False)):
        trace.samples.append(
            TraceSample(
                elapsed_seconds=float(row.elapsed_s),
                work_units=float(row.work_units),
                level=int(row.level),
                iteration=index,
                error=float(row.error),
            )
        )
    return trace


def rescale_to_pixels(image: FloatArray, maxval: int = 255) -> FloatArray:
    """Map [0, max(image)] linearly onto [0, maxval]; an all-zero image stays zero."""
    peak = float(np.max(image, initial=0.0))
    if peak <= 0.0:
        return np.zeros_like(image)
    return np.rint(image / peak * maxval)


def _require_grid(grid: ImageGrid | None) -> ImageGrid:
    if grid is None:
        raise UnsupportedOperationError(
            "image output needs grid metadata (use --grid HxW for CSV data)"
        )
    return grid


def save_basis_mosaic(
    v: MatrixLike, grid: ImageGrid | None, path: PathLike, maxval: int = 255
) -> List[Path]:
    """Write basis_KKK.pgm for every column of V plus mosaic.pgm tiling them.

    Each column is rescaled on its own so its maximum maps to maxval. The
    mosaic has ceil(sqrt(r)) tiles per row.

    Returns:
        The files written, mosaic last

    Raises:
        UnsupportedOperationError: If grid is None
    """
    grid = _require_grid(grid)
    va = as_array(v)
    if va.shape[0] != grid.size:
        raise InvalidArgumentError(
            f"V has {va.shape[0]} rows but the {grid} grid has {grid.size} pixels"
        )
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    note = "each basis image rescaled on its own: max -> maxval"

    r = va.shape[1]
    per_row = math.ceil(math.sqrt(r))
    tile_rows = math.ceil(r / per_row)
    mosaic = np.zeros((tile_rows * grid.height, per_row * grid.width))
    written: List[Path] = []
    for k in range(r):
        pixels = rescale_to_pixels(devectorize(va[:, k], grid), maxval)
        target = directory / f"basis_{k:03d}.pgm"
        write_pgm(target, pixels.astype(np.int64), maxval, comment=note)
        written.append(target)
        ti, tj = divmod(k, per_row)
        mosaic[
            ti * grid.height : (ti + 1) * grid.height,
            tj * grid.width : (tj + 1) * grid.width,
        ] = pixels

    target = directory / "mosaic.pgm"
    write_pgm(target, mosaic.astype(np.int64), maxval, comment=note)
    written.append(target)
    return written


def save_error_heatmap(
    m: MatrixLike,
    v: MatrixLike,
    w: MatrixLike,
    grid: ImageGrid | None,
    col_index: int,
    path: PathLike,
    maxval: int = 255,
) -> None:
    """Write |M_j - (VW)_j| as an image where white is no error and black the largest.

    Raises:
        UnsupportedOperationError: If grid is None
        InvalidArgumentError: If col_index is out of range
    """
    grid = _require_grid(grid)
    ma, va, wa = as_array(m), as_array(v), as_array(w)
    if not 0 <= col_index < ma.shape[1]:
        raise InvalidArgumentError(
            f"column {col_index} out of range for {ma.shape[1]} columns"
        )
    error = np.abs(ma[:, col_index] - va @ wa[:, col_index])
    pixels = rescale_to_pixels(devectorize(error, grid), maxval)
    write_pgm(
        path,
        (maxval - pixels).astype(np.int64),
        maxval,
        comment="inverted absolute error: black is the largest error",
    )
