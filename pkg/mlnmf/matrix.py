#!/usr/bin/env python3

"""Dense nonnegative matrices, factorization error metrics and the seeded
random initializer."""

from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

from .errors import InvalidArgumentError, NonnegativityError

__all__ = [
    "FloatArray",
    "MatrixLike",
    "NonnegMatrix",
    "as_array",
    "frobenius_error",
    "squared_error",
    "relative_error",
    "Rng",
    "random_init",
]

FloatArray = npt.NDArray[np.float64]

# SplitMix64 constants
MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULTIPLIER_1 = 0xBF58476D1CE4E5B9
MIX_MULTIPLIER_2 = 0x94D049BB133111EB
TWO_POW_53 = float(1 << 53)


class NonnegMatrix:
    """A dense matrix whose entries are all finite and >= 0.

    Entries are addressed by (row, col) through `at`; `data` is a read-only
    numpy view, so a NonnegMatrix can be shared freely between readers.
    """

    __slots__ = ("_data",)

    def __init__(self, data: FloatArray) -> None:
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidArgumentError(
                f"NonnegMatrix needs a non-empty 2-D array, got shape {data.shape}"
            )
        _check_nonnegative(data)
        data.setflags(write=False)
        self._data = data

    @classmethod
    def from_array(cls, a: npt.ArrayLike, copy: bool = True) -> "NonnegMatrix":
        """Validate and wrap an array.

        Args:
            a: Anything numpy can turn into a 2-D float array
            copy: Copy the data (the default) so later writes to `a` are not seen

        Returns:
            The wrapped matrix

        Raises:
            NonnegativityError: If an entry is negative or not finite
        """
        arr = np.array(a, dtype=np.float64, copy=True if copy else None)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        return cls(arr)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "NonnegMatrix":
        return cls(np.zeros((rows, cols)))

    @property
    def rows(self) -> int:
        return int(self._data.shape[0])

    @property
    def cols(self) -> int:
        return int(self._data.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def data(self) -> FloatArray:
        return self._data

    def at(self, row: int, col: int) -> float:
        return float(self._data[row, col])

    def to_array(self) -> FloatArray:
        """Return a writable copy of the entries."""
        return np.array(self._data, copy=True)

    def __repr__(self) -> str:
        return f"NonnegMatrix(rows={self.rows}, cols={self.cols})"


MatrixLike = Union[NonnegMatrix, FloatArray]


def as_array(x: MatrixLike) -> FloatArray:
    """Return the entries of a NonnegMatrix or pass an ndarray through."""
    if isinstance(x, NonnegMatrix):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _check_nonnegative(data: FloatArray) -> None:
    bad = ~(np.isfinite(data) & (data >= 0))
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        value = float(data[row, col])
        raise NonnegativityError(
            f"entry {value!r} is not a finite nonnegative value", row + 1, col + 1
        )


def _check_conformable(m: FloatArray, v: FloatArray, w: FloatArray) -> None:
    if m.ndim != 2 or v.ndim != 2 or w.ndim != 2:
        raise InvalidArgumentError("M, V and W must be 2-D")
    if v.shape[0] != m.shape[0] or w.shape[1] != m.shape[1] or v.shape[1] != w.shape[0]:
        raise InvalidArgumentError(
            f"dimension mismatch: M is {m.shape[0]}x{m.shape[1]}, "
            f"V is {v.shape[0]}x{v.shape[1]}, W is {w.shape[0]}x{w.shape[1]}"
        )


def squared_error(m: MatrixLike, v: MatrixLike, w: MatrixLike) -> float:
    """Return ||M - VW||_F^2."""
    ma, va, wa = as_array(m), as_array(v), as_array(w)
    _check_conformable(ma, va, wa)
    diff = ma - va @ wa
    return float(np.vdot(diff, diff))


def frobenius_error(m: MatrixLike, v: MatrixLike, w: MatrixLike) -> float:
    """Return the unsquared factorization error ||M - VW||_F.

    This is the metric reported everywhere (traces, bench summaries).

    Args:
        m: The m x n data matrix
        v: The m x r basis factor
        w: The r x n coefficient factor

    Returns:
        The Frobenius norm of the residual

    Raises:
        InvalidArgumentError: If the dimensions are not conformable
    """
    ma, va, wa = as_array(m), as_array(v), as_array(w)
    _check_conformable(ma, va, wa)
    return float(np.linalg.norm(ma - va @ wa))


def relative_error(m: MatrixLike, v: MatrixLike, w: MatrixLike) -> float:
    """Return ||M - VW||_F / ||M||_F (0 when M is zero and VW matches)."""
    norm_m = float(np.linalg.norm(as_array(m)))
    err = frobenius_error(m, v, w)
    if norm_m == 0.0:
        return 0.0 if err == 0.0 else float("inf")
    return err / norm_m


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX_MULTIPLIER_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MULTIPLIER_2) & MASK64
    return z ^ (z >> 31)


class Rng:
    """SplitMix64 generator.

    Fully specified by integer constants, so the same seed gives the same
    sequence on every platform. Single owner; never share an instance.
    """

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        """Advance the state and return the raw 64-bit output."""
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return _mix64(self.state)

    def next_uniform(self) -> float:
        """Return the next value in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) / TWO_POW_53

    def uniform(self, count: int) -> FloatArray:
        """Return `count` successive next_uniform() values as an array.

        The state ends exactly where `count` scalar calls would leave it.
        """
        if count < 0:
            raise InvalidArgumentError(f"count must be >= 0, got {count}")
        if count == 0:
            return np.zeros(0)
        # state_k = state + k * gamma (mod 2^64); uint64 array arithmetic wraps.
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_MULTIPLIER_1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_MULTIPLIER_2)
        z = z ^ (z >> np.uint64(31))
        self.state = (self.state + count * GOLDEN_GAMMA) & MASK64
        return (z >> np.uint64(11)).astype(np.float64) / TWO_POW_53


def random_init(m: int, n: int, r: int, seed: int) -> Tuple[NonnegMatrix, NonnegMatrix]:
    """Draw the initial factors (V0, W0) uniformly from [0, 1).

    A single Rng seeded with `seed` fills V0 row-major first, then W0 row-major,
    so a fixed (m, n, r, seed) always gives bit-identical factors.

    Args:
        m: Rows of the data matrix
        n: Columns of the data matrix
        r: Factorization rank
        seed: Generator seed (taken modulo 2^64)

    Returns:
        (V0, W0) with shapes m x r and r x n

    Raises:
        InvalidArgumentError: If r < 1 or r > min(m, n)
    """
    if r < 1 or r > min(m, n):
        raise InvalidArgumentError(
            f"rank must satisfy 1 <= r <= min(m, n) = {min(m, n)}, got {r}"
        )
    rng = Rng(seed)
    v0 = rng.uniform(m * r).reshape(m, r)
    w0 = rng.uniform(r * n).reshape(r, n)
    return NonnegMatrix(v0), NonnegMatrix(w0)
