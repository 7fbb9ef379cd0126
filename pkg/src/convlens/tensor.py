"""Rank-3 float32 tensor values, the unit of data every pipeline stage exchanges."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ShapeError, ValidationError


class Tensor3:
    """Immutable (height, width, channels) volume of float32 values.

    Storage is C-order over (row, column, channel): element (h, w, c) lives at
    flat offset (h * width + w) * channels + c. The backing numpy array is
    read-only, so instances are safe to share and send between threads.
    """

    __slots__ = ("array",)

    def __init__(self, values, *, copy: bool = True) -> None:
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim != 3:
            raise ShapeError(f"tensor must have 3 dimensions, got {arr.ndim}")
        if min(arr.shape) < 1:
            raise ShapeError(f"tensor dimensions must be positive, got {arr.shape}")
        if copy:
            arr = np.array(arr, dtype=np.float32, order="C")
        elif not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        if not np.isfinite(arr).all():
            raise ValidationError("tensor values must all be finite")
        arr.setflags(write=False)
        self.array = arr

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def channels(self) -> int:
        return self.array.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(self.array.shape)

    @property
    def data(self) -> np.ndarray:
        """Flat read-only view in (row, column, channel) order."""
        return self.array.reshape(-1)

    def at(self, h: int, w: int, c: int) -> float:
        self._check_coord(h, w, c)
        return float(self.array[h, w, c])

    def plane(self, channel: int) -> np.ndarray:
        """Read-only 2-D view of one channel."""
        if not 0 <= channel < self.channels:
            raise BoundsError(f"channel {channel} out of range for {self.channels} channels")
        return self.array[:, :, channel]

    def _check_coord(self, h: int, w: int, c: int) -> None:
        if not (0 <= h < self.height and 0 <= w < self.width and 0 <= c < self.channels):
            raise BoundsError(f"index (h={h}, w={w}, c={c}) out of bounds for shape {self.shape}")

    def __repr__(self) -> str:
        return f"Tensor3(height={self.height}, width={self.width}, channels={self.channels})"


@dataclass(frozen=True)
class Window:
    """A square sub-region copied out of one channel plane."""

    origin_row: int
    origin_col: int
    size: int
    values: np.ndarray  # (size, size) float32, read-only


def flat_offset(shape: tuple[int, int, int], h: int, w: int, c: int) -> int:
    """Flat index of (h, w, c) under the row-major (row, column, channel) layout."""
    _, width, channels = shape
    return (h * width + w) * channels + c


def offset_coords(shape: tuple[int, int, int], offset: int) -> tuple[int, int, int]:
    """Inverse of flat_offset."""
    _, width, channels = shape
    hw, c = divmod(offset, channels)
    h, w = divmod(hw, width)
    return h, w, c


def tensor_new(height: int, width: int, channels: int, fill: float = 0.0) -> Tensor3:
    """Create a tensor of the given shape with every element set to fill."""
    for name, dim in (("height", height), ("width", width), ("channels", channels)):
        if dim < 1:
            raise ShapeError(f"{name} must be >= 1, got {dim}")
    return Tensor3(np.full((height, width, channels), fill, dtype=np.float32), copy=False)


def extract_window(t: Tensor3, channel: int, row: int, col: int, size: int) -> Window:
    """Copy a size x size window out of one channel plane.

    The source tensor is left untouched; the window must lie fully inside the
    plane or a BoundsError naming the offending coordinate is raised.
    """
    if not 0 <= channel < t.channels:
        raise BoundsError(f"channel {channel} out of range for {t.channels} channels")
    if size < 1:
        raise BoundsError(f"window size must be >= 1, got {size}")
    if row < 0 or row + size > t.height:
        raise BoundsError(f"window rows [{row}, {row + size}) exceed plane height {t.height}")
    if col < 0 or col + size > t.width:
        raise BoundsError(f"window cols [{col}, {col + size}) exceed plane width {t.width}")
    values = t.array[row:row + size, col:col + size, channel].copy()
    values.setflags(write=False)
    return Window(origin_row=row, origin_col=col, size=size, values=values)


def plane_minmax(t: Tensor3, channel: int) -> tuple[float, float]:
    """Exact (min, max) over a single channel plane."""
    plane = t.plane(channel)
    return float(plane.min()), float(plane.max())
