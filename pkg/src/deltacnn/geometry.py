"""Receptive-field geometry: kernel/stride/padding arithmetic.

The output position (i, j) of a windowed layer reads the k x k input window
rooted at (i*s - p, j*s - p).  Out-of-bounds cells behave like zero padding.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ShapeError


def out_dim(n: int, k: int, s: int, p: int) -> int:
    """Output size along one axis: floor((n + 2p - k) / s) + 1."""
    out = (n + 2 * p - k) // s + 1
    if out < 1:
        raise ShapeError(f"degenerate output size for n={n}, k={k}, s={s}, p={p}")
    return out


@dataclass(frozen=True)
class RfWindow:
    """One receptive field: k x k window rooted at (y0, x0), offsets may be
    negative under padding."""

    y0: int
    x0: int
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ShapeError(f"window size must be >= 1, got {self.k}")


@dataclass(frozen=True)
class ConvGeometry:
    in_channels: int
    out_channels: int
    kernel: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self) -> None:
        if self.in_channels < 1 or self.out_channels < 1:
            raise ShapeError("channel counts must be >= 1")
        if self.kernel < 1 or self.stride < 1 or self.padding < 0:
            raise ShapeError(
                f"bad conv geometry: k={self.kernel}, s={self.stride}, p={self.padding}"
            )

    def out_shape(self, h: int, w: int) -> tuple[int, int]:
        return (
            out_dim(h, self.kernel, self.stride, self.padding),
            out_dim(w, self.kernel, self.stride, self.padding),
        )

    def window(self, i: int, j: int) -> RfWindow:
        """Receptive field of output position (i, j)."""
        return RfWindow(
            i * self.stride - self.padding,
            j * self.stride - self.padding,
            self.kernel,
        )
