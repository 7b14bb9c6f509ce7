#!/usr/bin/env python3

"""Image grids and the nonnegative transfer operators between them.

Images are vectorized by column concatenation: pixel (i, j) of an image with
`height` rows lands at index j * height + i. Coarse pixel (i, j) sits on fine
pixel (2i, 2j), so a coarse grid has ceil(height / 2) x ceil(width / 2) pixels.
"""

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from .errors import (
    CannotCoarsenError,
    InvalidArgumentError,
    UndefinedSmoothnessError,
)
from .matrix import FloatArray, MatrixLike, NonnegMatrix, as_array

__all__ = [
    "ImageGrid",
    "TransferOperator",
    "GridHierarchy",
    "BoundCheck",
    "coarsen_grid",
    "build_restriction",
    "build_prolongation",
    "coarse_pixels",
    "restrict",
    "prolong",
    "smoothness",
    "factor_smoothness",
    "initialization_bound",
    "build_hierarchy",
    "operator_diagnostics",
    "vectorize_image",
    "devectorize",
]

# Full-weighting stencil, indexed [di + 1][dj + 1]; divided by the row total.
FULL_WEIGHTING = (
    (1, 2, 1),
    (2, 4, 2),
    (1, 2, 1),
)


@dataclass(frozen=True)
class ImageGrid:
    """Pixel dimensions of one level of the image pyramid."""

    height: int
    width: int

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise InvalidArgumentError(
                f"grid dimensions must be positive, got {self.height}x{self.width}"
            )

    @property
    def size(self) -> int:
        return self.height * self.width

    def index(self, i: int, j: int) -> int:
        """Vector index of pixel (i, j) under column concatenation."""
        return j * self.height + i

    def __str__(self) -> str:
        return f"{self.height}x{self.width}"


@dataclass(frozen=True)
class TransferOperator:
    """A sparse nonnegative linear map whose rows each sum to 1.

    `rows[k]` lists the (input index, weight) pairs of output index k.
    """

    out_dim: int
    in_dim: int
    rows: Tuple[Tuple[Tuple[int, float], ...], ...]
    matrix: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.rows) != self.out_dim:
            raise InvalidArgumentError(
                f"operator has {len(self.rows)} rows, expected {self.out_dim}"
            )
        indptr = [0]
        indices: List[int] = []
        weights: List[float] = []
        for row in self.rows:
            for col, weight in row:
                if weight < 0 or col < 0 or col >= self.in_dim:
                    raise InvalidArgumentError(
                        f"invalid operator entry ({col}, {weight})"
                    )
                indices.append(col)
                weights.append(weight)
            indptr.append(len(indices))
        matrix = sp.csr_matrix(
            (np.array(weights), np.array(indices, dtype=np.int64), np.array(indptr)),
            shape=(self.out_dim, self.in_dim),
        )
        object.__setattr__(self, "matrix", matrix)

    def to_dense(self) -> FloatArray:
        return np.asarray(self.matrix.toarray(), dtype=np.float64)

    def frobenius_norm(self) -> float:
        """||op||_F computed from the stored sparse weights."""
        return math.sqrt(sum(w * w for row in self.rows for _, w in row))


class BoundCheck(NamedTuple):
    """Both sides of the prolongated-initialization error bound."""

    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-9 * self.rhs


def coarsen_grid(g: ImageGrid) -> ImageGrid:
    """Keep one out of every two points in each direction.

    Raises:
        CannotCoarsenError: If the grid is smaller than 2x2
    """
    if g.height < 2 or g.width < 2:
        raise CannotCoarsenError(f"cannot coarsen a {g} grid (needs at least 2x2)")
    return ImageGrid(height=(g.height + 1) // 2, width=(g.width + 1) // 2)


def build_restriction(fine: ImageGrid) -> TransferOperator:
    """Full-weighting restriction from `fine` to coarsen_grid(fine).

    Stencil entries falling outside the image are dropped and the remaining
    weights renormalized so every row sums to 1.
    """
    coarse = coarsen_grid(fine)
    rows: List[Tuple[Tuple[int, float], ...]] = []
    for cj in range(coarse.width):
        for ci in range(coarse.height):
            fi, fj = 2 * ci, 2 * cj
            entries: List[Tuple[int, int]] = []
            for dj in (-1, 0, 1):
                for di in (-1, 0, 1):
                    ii, jj = fi + di, fj + dj
                    if 0 <= ii < fine.height and 0 <= jj < fine.width:
                        entries.append(
                            (fine.index(ii, jj), FULL_WEIGHTING[di + 1][dj + 1])
                        )
            total = sum(w for _, w in entries)
            rows.append(tuple((idx, w / total) for idx, w in entries))
    return TransferOperator(out_dim=coarse.size, in_dim=fine.size, rows=tuple(rows))


def coarse_pixels(fine: ImageGrid) -> npt.NDArray[np.int64]:
    """Fine vector index of every coarse pixel, in coarse vector order."""
    coarse = coarsen_grid(fine)
    return np.array(
        [
            fine.index(2 * ci, 2 * cj)
            for cj in range(coarse.width)
            for ci in range(coarse.height)
        ],
        dtype=np.int64,
    )


def _rd(k: int, limit: int) -> List[int]:
    """Coarse neighbours of fine index k, clipped to [0, limit)."""
    if k % 2 == 0:
        candidates = [k // 2]
    else:
        candidates = [(k - 1) // 2, (k + 1) // 2]
    return [c for c in candidates if c < limit]


def build_prolongation(fine: ImageGrid) -> TransferOperator:
    """Neighbour-mean prolongation from coarsen_grid(fine) back to `fine`."""
    coarse = coarsen_grid(fine)
    rows: List[Tuple[Tuple[int, float], ...]] = []
    for fj in range(fine.width):
        for fi in range(fine.height):
            cis = _rd(fi, coarse.height)
            cjs = _rd(fj, coarse.width)
            weight = 1.0 / (len(cis) * len(cjs))
            rows.append(
                tuple((coarse.index(ci, cj), weight) for cj in cjs for ci in cis)
            )
    return TransferOperator(out_dim=fine.size, in_dim=coarse.size, rows=tuple(rows))


def _apply(op: TransferOperator, x: MatrixLike) -> NonnegMatrix:
    xa = as_array(x)
    if xa.ndim == 1:
        xa = xa.reshape(-1, 1)
    if xa.shape[0] != op.in_dim:
        raise InvalidArgumentError(
            f"operator expects {op.in_dim} rows, got a matrix with {xa.shape[0]}"
        )
    return NonnegMatrix(np.asarray(op.matrix @ xa, dtype=np.float64))


def restrict(op: TransferOperator, x: MatrixLike) -> NonnegMatrix:
    """Apply a restriction operator to every column of `x`."""
    return _apply(op, x)


def prolong(op: TransferOperator, x: MatrixLike) -> NonnegMatrix:
    """Apply a prolongation operator to every column of `x`."""
    return _apply(op, x)


def smoothness(m: MatrixLike, r: TransferOperator, p: TransferOperator) -> float:
    """s_M = ||M - P(R(M))||_F / ||M||_F.

    Raises:
        UndefinedSmoothnessError: If M is the zero matrix
    """
    ma = as_array(m)
    norm_m = float(np.linalg.norm(ma))
    if norm_m == 0.0:
        raise UndefinedSmoothnessError("smoothness of a zero matrix is undefined")
    reconstruction = prolong(p, restrict(r, ma)).data
    return float(np.linalg.norm(ma - reconstruction)) / norm_m


def factor_smoothness(v: MatrixLike, r: TransferOperator, p: TransferOperator) -> float:
    """s_V for a basis factor; usually well below s_M for part-based factors."""
    return smoothness(v, r, p)


def initialization_bound(
    m: MatrixLike,
    r: TransferOperator,
    p: TransferOperator,
    v_coarse: MatrixLike,
    w: MatrixLike,
) -> BoundCheck:
    """Evaluate the error bound for a prolongated coarse solution.

    lhs = ||M - P(V')W||_F and rhs = s_M ||M||_F + ||P||_F ||R(M) - V'W||_F.

    Args:
        m: Fine data matrix
        r: Restriction from the fine grid
        p: Prolongation back to the fine grid
        v_coarse: Coarse basis V'
        w: Coefficients W shared by both levels

    Returns:
        A BoundCheck with both sides

    Raises:
        InvalidArgumentError: If the dimensions are not conformable
    """
    ma, va, wa = as_array(m), as_array(v_coarse), as_array(w)
    if (
        ma.shape[0] != r.in_dim
        or va.shape[0] != r.out_dim
        or p.out_dim != ma.shape[0]
        or p.in_dim != va.shape[0]
        or va.shape[1] != wa.shape[0]
        or wa.shape[1] != ma.shape[1]
    ):
        raise InvalidArgumentError(
            f"dimension mismatch: M {ma.shape}, V' {va.shape}, W {wa.shape}, "
            f"R {r.out_dim}x{r.in_dim}, P {p.out_dim}x{p.in_dim}"
        )
    norm_m = float(np.linalg.norm(ma))
    coarse_approx = va @ wa
    lhs = float(np.linalg.norm(ma - prolong(p, va).data @ wa))
    s_m = smoothness(ma, r, p) if norm_m > 0 else 0.0
    coarse_residual = float(np.linalg.norm(restrict(r, ma).data - coarse_approx))
    rhs = s_m * norm_m + p.frobenius_norm() * coarse_residual
    return BoundCheck(lhs=lhs, rhs=rhs)


@dataclass
class GridHierarchy:
    """Grids from fine (index 0) to coarse, with operators and cached data.

    restricted_data[l + 1] is restrictions[l] applied to restricted_data[l],
    computed once when the hierarchy is built.
    """

    levels: List[ImageGrid]
    restrictions: List[TransferOperator]
    prolongations: List[TransferOperator]
    restricted_data: List[NonnegMatrix]

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    def data(self, level: int) -> NonnegMatrix:
        return self.restricted_data[level]

    def level_rows(self, level: int) -> int:
        return self.levels[level].size

    def restrict_from(self, level: int, x: MatrixLike) -> NonnegMatrix:
        """Map `x` from grid `level` to grid `level + 1`."""
        return restrict(self.restrictions[level], x)

    def sample_from(self, level: int, x: MatrixLike) -> NonnegMatrix:
        """Map `x` from grid `level` to grid `level + 1` by keeping the rows of
        the coarse pixels (injection)."""
        rows = coarse_pixels(self.levels[level])
        return NonnegMatrix(np.array(as_array(x)[rows], dtype=np.float64))

    def prolong_to(self, level: int, x: MatrixLike) -> NonnegMatrix:
        """Map `x` from grid `level + 1` back to grid `level`."""
        return prolong(self.prolongations[level], x)

    def prolong_to_finest(self, level: int, x: MatrixLike) -> NonnegMatrix:
        """Prolong `x` living on grid `level` all the way to grid 0."""
        result = NonnegMatrix.from_array(as_array(x))
        for lvl in range(level - 1, -1, -1):
            result = self.prolong_to(lvl, result)
        return result


def build_hierarchy(m: MatrixLike, grid: ImageGrid, levels: int) -> GridHierarchy:
    """Build a `levels`-deep hierarchy for data matrix `m` on `grid`.

    Raises:
        InvalidArgumentError: If levels < 1 or m does not match the grid
        CannotCoarsenError: If the grid cannot be coarsened levels - 1 times
    """
    if levels < 1:
        raise InvalidArgumentError(f"number of levels must be >= 1, got {levels}")
    data = m if isinstance(m, NonnegMatrix) else NonnegMatrix.from_array(m)
    if data.rows != grid.size:
        raise InvalidArgumentError(
            f"data has {data.rows} rows but the {grid} grid has {grid.size} pixels"
        )

    grids = [grid]
    for _ in range(levels - 1):
        grids.append(coarsen_grid(grids[-1]))

    restrictions = [build_restriction(g) for g in grids[:-1]]
    prolongations = [build_prolongation(g) for g in grids[:-1]]
    restricted = [data]
    for op in restrictions:
        restricted.append(restrict(op, restricted[-1]))
    return GridHierarchy(
        levels=grids,
        restrictions=restrictions,
        prolongations=prolongations,
        restricted_data=restricted,
    )


def operator_diagnostics(op: TransferOperator) -> Tuple[float, float]:
    """Return (smallest weight, largest |row sum - 1|) of an operator."""
    min_weight = min(w for row in op.rows for _, w in row)
    max_dev = max(abs(sum(w for _, w in row) - 1.0) for row in op.rows)
    return min_weight, max_dev


def vectorize_image(image: FloatArray) -> FloatArray:
    """Flatten an image by column concatenation."""
    return np.asarray(image, dtype=np.float64).reshape(-1, order="F")


def devectorize(vector: Sequence[float] | FloatArray, grid: ImageGrid) -> FloatArray:
    """Inverse of vectorize_image for a given grid."""
    arr = np.asarray(vector, dtype=np.float64)
    if arr.size != grid.size:
        raise InvalidArgumentError(
            f"vector of length {arr.size} does not fit a {grid} grid"
        )
    return arr.reshape(grid.height, grid.width, order="F")
