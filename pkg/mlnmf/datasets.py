#!/usr/bin/env python3

"""Dataset ingestion: PGM image directories, CSV matrices and the synthetic
smooth-image generator."""

import logging
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from .errors import (
    InconsistentDatasetError,
    InvalidArgumentError,
    ParseError,
    UnsupportedOperationError,
)
from .matrix import FloatArray, MatrixLike, NonnegMatrix, Rng, as_array
from .pgm import MAGIC, read_pgm, write_pgm
from .transfer import ImageGrid, devectorize, vectorize_image

__all__ = [
    "DATA_FORMATS",
    "Dataset",
    "load_dataset",
    "load_pgm_dir",
    "save_pgm_dir",
    "load_csv",
    "load_matrix_csv",
    "save_matrix_csv",
    "parse_grid",
    "synth_smooth_dataset",
]

PathLike = Union[str, Path]


@dataclass(frozen=True)
class Dataset:
    """A data matrix with one image (or sample) per column.

    `grid` is set when the rows are pixels of a known image size; `scale` is
    the factor raw intensities were divided by (1.0 when nothing was scaled).
    """

    matrix: NonnegMatrix
    grid: Optional[ImageGrid]
    name: str
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.grid is not None and self.grid.size != self.matrix.rows:
            raise InvalidArgumentError(
                f"a {self.grid} grid has {self.grid.size} pixels but the matrix has "
                f"{self.matrix.rows} rows"
            )

    def with_grid(self, grid: ImageGrid) -> "Dataset":
        """Attach image-size metadata to a dataset read without it."""
        return replace(self, grid=grid)


_GRID_RE = re.compile(r"^\s*(\d+)\s*[xX]\s*(\d+)\s*$")


def parse_grid(text: str) -> ImageGrid:
    """Parse an `HxW` grid specification.

    Raises:
        InvalidArgumentError: If the text is not of the form HxW with positive sizes
    """
    match = _GRID_RE.match(text)
    if not match:
        raise InvalidArgumentError(f"invalid grid {text!r} (expected HxW, e.g. 112x92)")
    return ImageGrid(height=int(match.group(1)), width=int(match.group(2)))


def _is_pgm(path: Path) -> bool:
    try:
        with open(path, "rb") as f:
            return f.read(2) == MAGIC
    except OSError:
        return False


def load_pgm_dir(path: PathLike) -> Dataset:
    """Load every binary PGM file of a directory as one column each.

    Files are taken in byte-wise ascending filename order; files without the
    P5 magic are ignored. Pixels are divided by the file's maxval.

    Raises:
        InconsistentDatasetError: If there is no PGM file or sizes differ
        ParseError: If a PGM header is malformed
    """
    directory = Path(path)
    if not directory.is_dir():
        raise InconsistentDatasetError(f"{directory} is not a directory")

    files = sorted(
        (p for p in directory.iterdir() if p.is_file()),
        key=lambda p: os.fsencode(p.name),
    )
    pgm_files = [p for p in files if _is_pgm(p)]
    for skipped in sorted(set(files) - set(pgm_files)):
        logging.debug(f"Ignoring non-PGM file {skipped}")
    if not pgm_files:
        raise InconsistentDatasetError(f"no PGM (P5) files found in {directory}")

    columns: List[FloatArray] = []
    grid: Optional[ImageGrid] = None
    maxvals: set[int] = set()
    for file in pgm_files:
        image = read_pgm(file)
        this_grid = ImageGrid(image.height, image.width)
        if grid is None:
            grid = this_grid
        elif this_grid != grid:
            raise InconsistentDatasetError(
                f"{file} is {this_grid} but earlier images are {grid}"
            )
        maxvals.add(image.maxval)
        columns.append(vectorize_image(image.pixels.astype(np.float64) / image.maxval))

    assert grid is not None
    scale = float(max(maxvals))
    logging.info(
        f"Loaded {len(columns)} images of {grid} from {directory}; "
        f"pixels divided by maxval {', '.join(str(v) for v in sorted(maxvals))}"
    )
    return Dataset(
        matrix=NonnegMatrix(np.column_stack(columns)),
        grid=grid,
        name=directory.name,
        scale=scale,
    )


def save_pgm_dir(dataset: Dataset, path: PathLike, maxval: int = 255) -> List[Path]:
    """Write every column as `image_NNNN.pgm`, quantized to [0, maxval].

    Values are clipped to [0, 1] before quantization.

    Raises:
        UnsupportedOperationError: If the dataset has no grid
    """
    if dataset.grid is None:
        raise UnsupportedOperationError("writing images needs grid metadata")
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    data = dataset.matrix.data
    for j in range(data.shape[1]):
        image = devectorize(data[:, j], dataset.grid)
        pixels = np.rint(np.clip(image, 0.0, 1.0) * maxval).astype(np.int64)
        target = directory / f"image_{j:04d}.pgm"
        write_pgm(target, pixels, maxval)
        written.append(target)
    return written


def _read_numeric_csv(path: PathLike) -> FloatArray:
    try:
        raw = pd.read_csv(
            path,
            header=None,
            dtype=str,
            skip_blank_lines=True,
            skipinitialspace=True,
            keep_default_na=False,
        )
    except pd.errors.EmptyDataError:
        raise ParseError("empty CSV file", str(path)) from None
    except pd.errors.ParserError as e:
        # "Expected 2 fields in line 3, saw 3"
        match = re.search(r"line (\d+)", str(e))
        row = int(match.group(1)) if match else None
        raise ParseError(f"ragged row: {e}", str(path), row=row) from None

    values = raw.apply(pd.to_numeric, errors="coerce")
    bad = values.isna().to_numpy()
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        cell = raw.iat[row, col]
        if not isinstance(cell, str) or cell == "":
            message = "missing value (ragged row)"
        else:
            message = f"not a number: {cell!r}"
        raise ParseError(message, str(path), row=row + 1, col=col + 1)
    return np.asarray(values.to_numpy(dtype=np.float64))


def load_matrix_csv(path: PathLike) -> NonnegMatrix:
    """Read a headerless comma-separated matrix, one row per line.

    Raises:
        ParseError: If a row is ragged or a value is not a number
        NonnegativityError: If an entry is negative, naming its 1-based row and column
    """
    return NonnegMatrix(_read_numeric_csv(path))


def save_matrix_csv(x: MatrixLike, path: PathLike) -> None:
    """Write a matrix as headerless CSV with round-trippable precision."""
    pd.DataFrame(as_array(x)).to_csv(
        path, header=False, index=False, lineterminator="\n"
    )


def load_csv(path: PathLike) -> Dataset:
    """Load a CSV matrix as a dataset without grid metadata."""
    matrix = load_matrix_csv(path)
    logging.info(f"Loaded a {matrix.rows}x{matrix.cols} matrix from {path}")
    return Dataset(matrix=matrix, grid=None, name=Path(path).stem)


def synth_smooth_dataset(
    height: int, width: int, n: int, blobs: int, seed: int
) -> Dataset:
    """Images made of `blobs` isotropic Gaussian bumps each, clipped to [0, 1].

    For every image and blob, one Rng seeded with `seed` draws the center row,
    center column, width in [height/8, height/3] and amplitude in [0.2, 1],
    in that order.

    Raises:
        InvalidArgumentError: If blobs < 1 or n < 1
    """
    if blobs < 1:
        raise InvalidArgumentError(f"blobs must be >= 1, got {blobs}")
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    grid = ImageGrid(height, width)
    rng = Rng(seed)
    rows, cols = np.meshgrid(
        np.arange(height, dtype=np.float64),
        np.arange(width, dtype=np.float64),
        indexing="ij",
    )
    min_sigma, max_sigma = height / 8, height / 3

    columns: List[FloatArray] = []
    for _ in range(n):
        image = np.zeros((height, width))
        for _ in range(blobs):
            ci = rng.next_uniform() * (height - 1)
            cj = rng.next_uniform() * (width - 1)
            sigma = min_sigma + rng.next_uniform() * (max_sigma - min_sigma)
            amplitude = 0.2 + 0.8 * rng.next_uniform()
            dist2 = (rows - ci) ** 2 + (cols - cj) ** 2
            image += amplitude * np.exp(-dist2 / (2 * sigma * sigma))
        columns.append(vectorize_image(np.clip(image, 0.0, 1.0)))

    return Dataset(
        matrix=NonnegMatrix(np.column_stack(columns)),
        grid=grid,
        name=f"synth-{height}x{width}-n{n}-b{blobs}-s{seed}",
    )


DATA_FORMATS = ("pgm-dir", "csv")


def load_dataset(path: PathLike, fmt: str, grid: Optional[str] = None) -> Dataset:
    """Load `path` in format `pgm-dir` or `csv`, optionally attaching an HxW grid.

    Raises:
        InvalidArgumentError: If the format is unknown or the grid does not fit
    """
    if fmt == "pgm-dir":
        dataset = load_pgm_dir(path)
    elif fmt == "csv":
        dataset = load_csv(path)
    else:
        raise InvalidArgumentError(
            f"unknown data format {fmt!r} (expected one of {', '.join(DATA_FORMATS)})"
        )
    if grid is not None:
        dataset = dataset.with_grid(parse_grid(grid))
    return dataset
