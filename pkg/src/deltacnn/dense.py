"""Reference dense layers: the correctness oracle and the MAC baseline.

Accumulation order is part of the contract, not an implementation detail.
The delta engine reuses cached float32 values, so a recomputed position must
reproduce the dense value bit for bit, which pins the rounding sequence:

* conv: for each output position, accumulate products over (in_channel, ky,
  kx) in lexicographic order in float32, then add the bias.
* fc: for each output element, accumulate weights[i][j]*x[j] with j
  ascending in float32, then add the bias.

The loops below iterate over kernel taps and vectorize across output
positions, so each output element still sees exactly that scalar sequence.
``fc_dense`` leans on ``np.add.accumulate``, which evaluates the float32
chain strictly left to right (pinned by a test against a scalar loop).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .geometry import ConvGeometry, RfWindow, out_dim
from .tensor import Tensor

__all__ = [
    "ConvGeometry",
    "RfWindow",
    "ConvWeights",
    "conv2d_dense",
    "maxpool2d_dense",
    "relu_dense",
    "fc_dense",
    "macs_dense",
    "out_dim",
]


@dataclass
class ConvWeights:
    """(out_channels, in_channels, k, k) kernel plus per-out-channel bias."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float32)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float32)
        if self.weights.ndim != 4:
            raise ShapeError(f"conv weights must be 4-D, got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"bias shape {self.bias.shape} does not match {self.weights.shape[0]} out channels"
            )
        if not np.isfinite(self.weights).all() or not np.isfinite(self.bias).all():
            raise ValueError("conv weights must be finite")

    def check_geometry(self, g: ConvGeometry) -> None:
        expect = (g.out_channels, g.in_channels, g.kernel, g.kernel)
        if self.weights.shape != expect:
            raise ShapeError(f"weights shaped {self.weights.shape}, geometry wants {expect}")


def pad_input(data: np.ndarray, p: int) -> np.ndarray:
    """Zero-pad the spatial axes of a (c, h, w) array."""
    if p == 0:
        return data
    c, h, w = data.shape
    padded = np.zeros((c, h + 2 * p, w + 2 * p), dtype=data.dtype)
    padded[:, p : p + h, p : p + w] = data
    return padded


def conv2d_dense(input_: Tensor, g: ConvGeometry, w: ConvWeights) -> Tensor:
    """Cross-correlation with zero padding over the whole input."""
    if input_.channels != g.in_channels:
        raise ShapeError(f"input has {input_.channels} channels, geometry wants {g.in_channels}")
    w.check_geometry(g)
    h_out, w_out = g.out_shape(input_.height, input_.width)
    padded = pad_input(input_.data, g.padding)
    s, k = g.stride, g.kernel
    acc = np.zeros((g.out_channels, h_out, w_out), dtype=np.float32)
    for c in range(g.in_channels):
        for ky in range(k):
            for kx in range(k):
                patch = padded[c, ky : ky + s * h_out : s, kx : kx + s * w_out : s]
                acc += w.weights[:, c, ky, kx][:, None, None] * patch[None, :, :]
    acc += w.bias[:, None, None]
    return Tensor(acc)


def maxpool2d_dense(input_: Tensor, k: int, s: int) -> Tensor:
    """Per-channel max over k x k windows, stride s, no padding."""
    if input_.height < k or input_.width < k:
        raise ShapeError(f"input {input_.shape} smaller than pool kernel {k}")
    h_out = out_dim(input_.height, k, s, 0)
    w_out = out_dim(input_.width, k, s, 0)
    out = input_.data[:, 0 : s * h_out : s, 0 : s * w_out : s].copy()
    for ky in range(k):
        for kx in range(k):
            if ky == 0 and kx == 0:
                continue
            np.maximum(
                out,
                input_.data[:, ky : ky + s * h_out : s, kx : kx + s * w_out : s],
                out=out,
            )
    return Tensor(out)


def relu_dense(input_: Tensor) -> Tensor:
    return Tensor(np.maximum(input_.data, np.float32(0.0)))


def fc_dense(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Fully connected layer on a flat float32 vector."""
    x = np.asarray(x, dtype=np.float32)
    weights = np.asarray(weights, dtype=np.float32)
    bias = np.asarray(bias, dtype=np.float32)
    if weights.ndim != 2 or x.ndim != 1 or weights.shape[1] != x.shape[0]:
        raise ShapeError(f"fc shapes do not chain: weights {weights.shape}, input {x.shape}")
    if bias.shape != (weights.shape[0],):
        raise ShapeError(f"fc bias shape {bias.shape} does not match {weights.shape[0]} outputs")
    products = weights * x[None, :]
    acc = np.add.accumulate(products, axis=1, dtype=np.float32)[:, -1]
    return acc + bias


def macs_dense(g: ConvGeometry, out_shape: tuple[int, int]) -> int:
    """Multiply-accumulates a full dense conv pass costs at this geometry."""
    h_out, w_out = out_shape
    return g.out_channels * h_out * w_out * g.in_channels * g.kernel * g.kernel
