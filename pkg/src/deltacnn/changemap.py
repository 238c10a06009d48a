"""Change maps: where did the input change, and what must be recomputed.

Two spatial records drive the delta engine:

* ``MagnitudeMap``: the channel-reduced absolute frame difference.  Exists
  only at the network input, where thresholding against tau is meaningful.
* ``ChangeMap``: one bit per spatial output position of a layer; a set bit
  means that position was updated this frame, so downstream receptive fields
  overlapping it must be recomputed.

Binary maps propagate with the any-bit rule: a window is dirty iff it
contains at least one set bit.  Norm thresholding (L1/L2 against tau, strict
inequality) applies only where magnitudes exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ShapeError
from .geometry import RfWindow, out_dim
from .tensor import Tensor


class Norm(Enum):
    L1 = "l1"
    L2 = "l2"


class MarkMode(Enum):
    # Mark every recomputed position as changed (cheap default), or compare
    # new values against the cached ones and mark only real movement.
    RECOMPUTED = "recomputed"
    VALUE_COMPARE = "valuecompare"


@dataclass(frozen=True)
class DeltaPolicy:
    """Threshold tau, the norm it applies to, and how output marks are made."""

    tau: float = 0.0
    norm: Norm = Norm.L1
    mark: MarkMode = MarkMode.RECOMPUTED
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.tau) or self.tau < 0:
            raise ValueError(f"tau must be finite and >= 0, got {self.tau}")
        if not math.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")


class MagnitudeMap:
    """(H, W) non-negative float32 values; per-pixel change strength."""

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        if values.ndim != 2 or any(d < 1 for d in values.shape):
            raise ShapeError(f"magnitude map must be 2-D, got shape {values.shape}")
        self.values = np.ascontiguousarray(values, dtype=np.float32)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def __repr__(self) -> str:
        return f"MagnitudeMap({self.height}x{self.width})"


class ChangeMap:
    """(H, W) binary mask; True = changed at that spatial position."""

    __slots__ = ("mask",)

    def __init__(self, mask: np.ndarray):
        if mask.ndim != 2 or any(d < 1 for d in mask.shape):
            raise ShapeError(f"change map must be 2-D, got shape {mask.shape}")
        self.mask = np.ascontiguousarray(mask, dtype=bool)

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    def count(self) -> int:
        return int(self.mask.sum())

    def any(self) -> bool:
        return bool(self.mask.any())

    def __repr__(self) -> str:
        return f"ChangeMap({self.height}x{self.width}, set={self.count()})"


def initial_map(height: int, width: int) -> ChangeMap:
    """All-ones map: the mandated state before the first frame, forcing a
    full recompute everywhere."""
    if height < 1 or width < 1:
        raise ShapeError(f"invalid map shape ({height}, {width})")
    return ChangeMap(np.ones((height, width), dtype=bool))


def magnitude_from_diff(diff: Tensor) -> MagnitudeMap:
    """Reduce a (c, h, w) absolute difference to a spatial map, max over
    channels."""
    return MagnitudeMap(diff.data.max(axis=0))


def _window_slices(window: RfWindow, height: int, width: int):
    y_lo = max(window.y0, 0)
    x_lo = max(window.x0, 0)
    y_hi = min(window.y0 + window.k, height)
    x_hi = min(window.x0 + window.k, width)
    if y_lo >= y_hi or x_lo >= x_hi:
        return None
    return slice(y_lo, y_hi), slice(x_lo, x_hi)


def rf_changed(mag: MagnitudeMap, window: RfWindow, policy: DeltaPolicy) -> bool:
    """True iff norm(magnitudes inside the window) > tau, strictly.

    Out-of-bounds cells contribute zero, consistent with zero padding.  The
    norm is accumulated in float64 in (dy, dx) order; ``window_norms`` below
    performs the identical arithmetic vectorized, so the two always agree.
    """
    sl = _window_slices(window, mag.height, mag.width)
    if sl is None:
        return False
    vals = mag.values[sl].astype(np.float64)
    acc = 0.0
    if policy.norm is Norm.L1:
        for row in vals:
            for v in row:
                acc += v
        return bool(acc > policy.tau)
    for row in vals:
        for v in row:
            acc += v * v
    return bool(math.sqrt(acc) > policy.tau)


def window_norms(mag: MagnitudeMap, k: int, s: int, p: int, norm: Norm) -> np.ndarray:
    """Per-output-position window norms, float64, for every window of the
    (k, s, p) geometry.  Same accumulation order as rf_changed."""
    h_out = out_dim(mag.height, k, s, p)
    w_out = out_dim(mag.width, k, s, p)
    padded = np.zeros((mag.height + 2 * p, mag.width + 2 * p), dtype=np.float64)
    padded[p : p + mag.height, p : p + mag.width] = mag.values
    if norm is Norm.L2:
        padded *= padded
    acc = np.zeros((h_out, w_out), dtype=np.float64)
    for ky in range(k):
        for kx in range(k):
            acc += padded[ky : ky + s * h_out : s, kx : kx + s * w_out : s]
    if norm is Norm.L2:
        acc = np.sqrt(acc)
    return acc


def any_changed(map_: ChangeMap, window: RfWindow) -> bool:
    """True iff at least one in-bounds bit inside the window is set."""
    sl = _window_slices(window, map_.height, map_.width)
    if sl is None:
        return False
    return bool(map_.mask[sl].any())


def downsample(map_: ChangeMap, k: int, s: int, p: int = 0) -> ChangeMap:
    """Propagate a binary map through a (k, s, p) window geometry: output bit
    (i, j) is set iff any bit in the window rooted at (i*s - p, j*s - p) is.

    This is the conservative binary-propagation rule every non-input layer
    uses for gating, so its output shape follows the layer output-shape
    formula.
    """
    h_out = out_dim(map_.height, k, s, p)
    w_out = out_dim(map_.width, k, s, p)
    padded = np.zeros((map_.height + 2 * p, map_.width + 2 * p), dtype=bool)
    padded[p : p + map_.height, p : p + map_.width] = map_.mask
    out = np.zeros((h_out, w_out), dtype=bool)
    for ky in range(k):
        for kx in range(k):
            out |= padded[ky : ky + s * h_out : s, kx : kx + s * w_out : s]
    return ChangeMap(out)
