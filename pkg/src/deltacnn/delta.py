"""Delta layers: cached, change-driven counterparts of the dense layers.

Each delta layer owns its previous full output.  Per frame it receives the
complete current input (the upstream layer's cache), recomputes only the
output positions whose receptive field is flagged by the incoming change
map, writes them into its cache, and emits its own change map.  The cache
therefore stays a complete input for the next layer: unchanged values are
read, never recomputed.

Recomputed positions use the same accumulation order as the dense layers,
so at tau=0 every cache is bitwise equal to the dense activation after
every frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .changemap import (
    ChangeMap,
    DeltaPolicy,
    MagnitudeMap,
    MarkMode,
    downsample,
    window_norms,
)
from .dense import ConvGeometry, ConvWeights, fc_dense, pad_input
from .errors import ConfigError, ShapeError
from .metrics import RunMetrics
from .tensor import Tensor, new_zeros

HeadOp = tuple  # ("fc", weights, bias) or ("relu",)


@dataclass
class LayerState:
    """One delta layer's memory: its previous output, zeroed before frame 1."""

    cached: Tensor
    initialized: bool = False

    @classmethod
    def for_shape(cls, shape: tuple[int, int, int]) -> "LayerState":
        return cls(cached=new_zeros(shape))

    def reset(self) -> None:
        self.cached.data[:] = 0.0
        self.initialized = False


@dataclass
class HeadState:
    """Cached classifier output; valid once logits is not None."""

    logits: np.ndarray | None = None
    prediction: int | None = None

    def reset(self) -> None:
        self.logits = None
        self.prediction = None


def reset(state: LayerState | HeadState) -> None:
    state.reset()


def _mark_out_map(
    flags: np.ndarray,
    policy: DeltaPolicy,
    new_vals: np.ndarray | None,
    old_vals: np.ndarray | None,
    ys: np.ndarray,
    xs: np.ndarray,
) -> ChangeMap:
    if policy.mark is MarkMode.RECOMPUTED or new_vals is None:
        return ChangeMap(flags.copy())
    # ValueCompare: recomputed AND the value actually moved past epsilon,
    # measured as max-over-channels absolute difference.
    moved = (
        np.abs(new_vals.astype(np.float64) - old_vals.astype(np.float64)).max(axis=0)
        > policy.epsilon
    )
    out = np.zeros_like(flags)
    out[ys, xs] = moved
    return ChangeMap(out)


def _check_spatial(in_map: ChangeMap | MagnitudeMap, input_: Tensor, what: str) -> None:
    if (in_map.height, in_map.width) != (input_.height, input_.width):
        raise ShapeError(
            f"{what}: map {in_map.height}x{in_map.width} does not cover "
            f"input {input_.height}x{input_.width}"
        )


def delta_conv2d(
    input_: Tensor,
    in_map: ChangeMap | MagnitudeMap,
    state: LayerState,
    g: ConvGeometry,
    w: ConvWeights,
    policy: DeltaPolicy,
    metrics: RunMetrics | None = None,
    frame_idx: int = 0,
    name: str = "conv",
) -> tuple[Tensor, ChangeMap]:
    """Convolution over flagged receptive fields only.

    A magnitude input (network entry) is gated by norm > tau per window; a
    binary input (deeper layers) by the any-bit rule.  Returns the cache
    itself as the full output; callers must treat it as owned by the layer.
    """
    if input_.channels != g.in_channels:
        raise ShapeError(f"{name}: input has {input_.channels} channels, wants {g.in_channels}")
    w.check_geometry(g)
    _check_spatial(in_map, input_, name)
    h_out, w_out = g.out_shape(input_.height, input_.width)
    if state.cached.shape != (g.out_channels, h_out, w_out):
        raise ConfigError(
            f"{name}: cache shaped {state.cached.shape}, layer produces "
            f"{(g.out_channels, h_out, w_out)}"
        )

    if not state.initialized:
        # A zeroed cache is not valid data: the first frame recomputes every
        # position, even ones no input bit can flag (windows fully inside
        # the padding, possible when padding >= kernel).
        flags = np.ones((h_out, w_out), dtype=bool)
    elif isinstance(in_map, MagnitudeMap):
        norms = window_norms(in_map, g.kernel, g.stride, g.padding, policy.norm)
        flags = norms > policy.tau
    else:
        flags = downsample(in_map, g.kernel, g.stride, g.padding).mask

    ys, xs = np.nonzero(flags)
    n = ys.size
    cache = state.cached.data
    old_vals = None
    if policy.mark is MarkMode.VALUE_COMPARE and n:
        old_vals = cache[:, ys, xs].copy()

    new_vals = None
    if n:
        padded = pad_input(input_.data, g.padding)
        s, k = g.stride, g.kernel
        acc = np.zeros((g.out_channels, n), dtype=np.float32)
        for c in range(g.in_channels):
            for ky in range(k):
                for kx in range(k):
                    vals = padded[c, ys * s + ky, xs * s + kx]
                    acc += w.weights[:, c, ky, kx][:, None] * vals[None, :]
        acc += w.bias[:, None]
        cache[:, ys, xs] = acc
        new_vals = acc

    if metrics is not None:
        metrics.record_layer(
            frame_idx, name, "conv", n, h_out * w_out,
            g.out_channels * g.in_channels * g.kernel * g.kernel,
        )
    state.initialized = True
    return state.cached, _mark_out_map(flags, policy, new_vals, old_vals, ys, xs)


def delta_maxpool2d(
    input_: Tensor,
    in_map: ChangeMap,
    state: LayerState,
    k: int,
    s: int,
    policy: DeltaPolicy,
    metrics: RunMetrics | None = None,
    frame_idx: int = 0,
    name: str = "pool",
) -> tuple[Tensor, ChangeMap]:
    """Max pooling recomputed only where the input window holds a set bit."""
    if input_.height < k or input_.width < k:
        raise ShapeError(f"{name}: input {input_.shape} smaller than pool kernel {k}")
    _check_spatial(in_map, input_, name)
    flags = downsample(in_map, k, s, 0).mask
    if not state.initialized:
        flags = np.ones_like(flags)
    h_out, w_out = flags.shape
    if state.cached.shape != (input_.channels, h_out, w_out):
        raise ConfigError(
            f"{name}: cache shaped {state.cached.shape}, layer produces "
            f"{(input_.channels, h_out, w_out)}"
        )

    ys, xs = np.nonzero(flags)
    n = ys.size
    cache = state.cached.data
    old_vals = None
    if policy.mark is MarkMode.VALUE_COMPARE and n:
        old_vals = cache[:, ys, xs].copy()

    new_vals = None
    if n:
        acc = input_.data[:, ys * s, xs * s].copy()
        for ky in range(k):
            for kx in range(k):
                if ky == 0 and kx == 0:
                    continue
                np.maximum(acc, input_.data[:, ys * s + ky, xs * s + kx], out=acc)
        cache[:, ys, xs] = acc
        new_vals = acc

    if metrics is not None:
        metrics.record_layer(
            frame_idx, name, "pool", n, h_out * w_out, input_.channels * k * k
        )
    state.initialized = True
    return state.cached, _mark_out_map(flags, policy, new_vals, old_vals, ys, xs)


def delta_relu(
    input_: Tensor,
    in_map: ChangeMap,
    state: LayerState,
    metrics: RunMetrics | None = None,
    frame_idx: int = 0,
    name: str = "relu",
) -> tuple[Tensor, ChangeMap]:
    """Pointwise max(0, x) at changed positions; the map passes through."""
    _check_spatial(in_map, input_, name)
    if state.cached.shape != input_.shape:
        raise ConfigError(f"{name}: cache shaped {state.cached.shape}, input {input_.shape}")
    if state.initialized:
        ys, xs = np.nonzero(in_map.mask)
    else:
        ys, xs = np.nonzero(np.ones_like(in_map.mask))
    if ys.size:
        state.cached.data[:, ys, xs] = np.maximum(input_.data[:, ys, xs], np.float32(0.0))
    if metrics is not None:
        metrics.record_layer(
            frame_idx, name, "relu", int(ys.size), in_map.mask.size, 0
        )
    state.initialized = True
    return state.cached, in_map


def head_macs(stack: list[HeadOp]) -> int:
    return sum(op[1].shape[0] * op[1].shape[1] for op in stack if op[0] == "fc")


def head_must_run(in_map: ChangeMap, state: HeadState) -> bool:
    return state.logits is None or in_map.any()


def delta_head(
    input_: Tensor,
    in_map: ChangeMap,
    state: HeadState,
    stack: list[HeadOp],
    metrics: RunMetrics | None = None,
    frame_idx: int = 0,
    name: str = "head",
) -> np.ndarray:
    """Flatten + fully-connected stack, recomputed all-or-nothing.

    Flattening destroys spatial locality, so the head runs densely whenever
    any change survives to it and returns its cached logits otherwise.
    """
    macs = head_macs(stack)
    if not head_must_run(in_map, state):
        if metrics is not None:
            metrics.record_layer(frame_idx, name, "head", 0, 1, macs)
        assert state.logits is not None
        return state.logits
    x = input_.data.reshape(-1)
    for op in stack:
        if op[0] == "fc":
            x = fc_dense(x, op[1], op[2])
        elif op[0] == "relu":
            x = np.maximum(x, np.float32(0.0))
        else:
            raise ConfigError(f"unknown head op {op[0]!r}")
    state.logits = x
    state.prediction = int(np.argmax(x))
    if metrics is not None:
        metrics.record_layer(frame_idx, name, "head", 1, 1, macs)
    return x
