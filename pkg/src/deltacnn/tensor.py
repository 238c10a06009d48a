"""Dense 3-D float32 tensor with a fixed, shared memory layout.

Every value that moves between layers or engines is a ``Tensor``:
(channels, height, width), float32, channels outermost, row-major within a
channel, so flat index = c*H*W + y*W + x.  Both the dense and the delta
engine rely on this single layout so that cached activations can be compared
bit for bit against freshly computed ones.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

Shape3 = tuple[int, int, int]


class Tensor:
    """Thin wrapper over a C-contiguous (c, h, w) float32 ndarray."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        if data.ndim != 3:
            raise ShapeError(f"tensor must be 3-D (c, h, w), got ndim={data.ndim}")
        if any(d < 1 for d in data.shape):
            raise ShapeError(f"tensor dims must be >= 1, got {data.shape}")
        if data.dtype != np.float32 or not data.flags["C_CONTIGUOUS"]:
            data = np.ascontiguousarray(data, dtype=np.float32)
        self.data = data

    @property
    def shape(self) -> Shape3:
        return self.data.shape  # type: ignore[return-value]

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def flat(self) -> np.ndarray:
        """Flat view in layout order (c outermost, then y, then x)."""
        return self.data.reshape(-1)

    def _check_index(self, c: int, y: int, x: int) -> None:
        ch, h, w = self.shape
        if not (0 <= c < ch and 0 <= y < h and 0 <= x < w):
            raise IndexError(f"index ({c}, {y}, {x}) out of bounds for shape {self.shape}")

    def get(self, c: int, y: int, x: int) -> float:
        self._check_index(c, y, x)
        return float(self.data[c, y, x])

    def set(self, c: int, y: int, x: int, value: float) -> None:
        self._check_index(c, y, x)
        self.data[c, y, x] = np.float32(value)

    def copy(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.shape == other.shape and self.data.tobytes() == other.data.tobytes()

    def __repr__(self) -> str:
        return f"Tensor{self.shape}"


def new_zeros(shape: Shape3) -> Tensor:
    c, h, w = shape
    if c < 1 or h < 1 or w < 1:
        raise ShapeError(f"invalid tensor shape {shape}")
    return Tensor(np.zeros((c, h, w), dtype=np.float32))


def from_array(values, shape: Shape3 | None = None) -> Tensor:
    """Build a tensor from any array-like, casting to float32.

    With ``shape`` given, the flat values are laid out in index order
    c*H*W + y*W + x.
    """
    arr = np.asarray(values, dtype=np.float32)
    if shape is not None:
        arr = arr.reshape(shape)
    return Tensor(np.ascontiguousarray(arr))


def abs_diff(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise |a - b|; the frame-level change signal."""
    if a.shape != b.shape:
        raise ShapeError(f"abs_diff shape mismatch: {a.shape} vs {b.shape}")
    return Tensor(np.abs(a.data - b.data))
