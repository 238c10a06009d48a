"""The two forward pipelines and the sequence runner.

``forward_dense`` recomputes everything every frame and is the correctness
oracle; ``DeltaNetwork`` keeps per-layer caches and recomputes only flagged
receptive fields.  At tau=0 the two produce bitwise-identical logits on
every frame of any sequence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .changemap import (
    ChangeMap,
    DeltaPolicy,
    MagnitudeMap,
    initial_map,
    magnitude_from_diff,
)
from .delta import (
    HeadState,
    LayerState,
    delta_conv2d,
    delta_head,
    delta_maxpool2d,
    delta_relu,
    head_macs,
    head_must_run,
)
from .dense import conv2d_dense, fc_dense, maxpool2d_dense, relu_dense
from .errors import ConfigError
from .metrics import RunMetrics
from .model import ConvLayer, NetworkSpec, PoolLayer, ReluLayer
from .tensor import Tensor, abs_diff

__all__ = [
    "EngineMode",
    "forward_dense",
    "DeltaNetwork",
    "run_sequence",
    "run_sweep",
]


@dataclass(frozen=True)
class EngineMode:
    kind: str  # "dense" | "delta"
    policy: DeltaPolicy | None = None

    @staticmethod
    def dense() -> "EngineMode":
        return EngineMode("dense")

    @staticmethod
    def delta(policy: DeltaPolicy | None = None) -> "EngineMode":
        return EngineMode("delta", policy if policy is not None else DeltaPolicy())


def _argmax(logits: np.ndarray) -> int:
    # np.argmax returns the first maximum: lowest index wins ties.
    return int(np.argmax(logits))


def forward_dense(
    net: NetworkSpec,
    frame: Tensor,
    metrics: RunMetrics | None = None,
    frame_idx: int = 0,
) -> tuple[np.ndarray, int]:
    """Full recompute of every layer; returns (logits, prediction)."""
    if frame.shape != net.input_shape:
        raise ConfigError(f"frame shaped {frame.shape}, network wants {net.input_shape}")
    x = frame
    for layer in net.spatial_layers():
        if isinstance(layer, ConvLayer):
            assert layer.weights is not None
            g = layer.geometry
            x = conv2d_dense(x, g, layer.weights)
            if metrics is not None:
                total = x.height * x.width
                metrics.record_layer(
                    frame_idx, layer.name, "conv", total, total,
                    g.out_channels * g.in_channels * g.kernel * g.kernel,
                )
        elif isinstance(layer, ReluLayer):
            x = relu_dense(x)
            if metrics is not None:
                total = x.height * x.width
                metrics.record_layer(frame_idx, layer.name, "relu", total, total, 0)
        elif isinstance(layer, PoolLayer):
            x = maxpool2d_dense(x, layer.kernel, layer.stride)
            if metrics is not None:
                total = x.height * x.width
                metrics.record_layer(
                    frame_idx, layer.name, "pool", total, total,
                    x.channels * layer.kernel * layer.kernel,
                )
        else:
            raise ConfigError(f"{layer.name}: unsupported spatial layer")
    stack = net.head_stack()
    flat = x.data.reshape(-1)
    for op in stack:
        if op[0] == "fc":
            flat = fc_dense(flat, op[1], op[2])
        else:
            flat = np.maximum(flat, np.float32(0.0))
    if metrics is not None:
        metrics.record_layer(frame_idx, "head", "head", 1, 1, head_macs(stack))
    return flat, _argmax(flat)


@dataclass
class ForwardResult:
    logits: np.ndarray
    prediction: int
    maps: list[tuple[str, ChangeMap]]
    head_activated: bool


class DeltaNetwork:
    """Per-sequence delta engine instance: network spec plus layer caches.

    Frames are order-dependent; one instance serves one sequence at a time.
    """

    def __init__(self, net: NetworkSpec, policy: DeltaPolicy | None = None):
        net.validate()
        net.require_weights()
        self.net = net
        self.policy = policy if policy is not None else DeltaPolicy()
        self.states = [LayerState.for_shape(s) for s in net.spatial_shapes()]
        self.head_state = HeadState()

    def reset(self) -> None:
        """Zero all caches; the next frame must be run with prev_frame=None."""
        for state in self.states:
            state.reset()
        self.head_state.reset()

    def forward(
        self,
        frame: Tensor,
        prev_frame: Tensor | None,
        metrics: RunMetrics | None = None,
        frame_idx: int = 0,
    ) -> ForwardResult:
        net, policy = self.net, self.policy
        if frame.shape != net.input_shape:
            raise ConfigError(f"frame shaped {frame.shape}, network wants {net.input_shape}")
        _, h, w = net.input_shape
        signal: ChangeMap | MagnitudeMap
        if prev_frame is None:
            input_dump = initial_map(h, w)
            signal = input_dump
        else:
            mag = magnitude_from_diff(abs_diff(frame, prev_frame))
            signal = mag
            # Report-only view of the raw difference: a pixel counts as
            # changed when its magnitude strictly exceeds tau.
            input_dump = ChangeMap(mag.values.astype(np.float64) > policy.tau)
        maps: list[tuple[str, ChangeMap]] = [("input", input_dump)]

        x = frame
        m = signal
        for layer, state in zip(net.spatial_layers(), self.states):
            if isinstance(layer, ConvLayer):
                assert layer.weights is not None
                x, m = delta_conv2d(
                    x, m, state, layer.geometry, layer.weights, policy,
                    metrics, frame_idx, layer.name,
                )
            elif isinstance(layer, ReluLayer):
                x, m = delta_relu(x, m, state, metrics, frame_idx, layer.name)
            elif isinstance(layer, PoolLayer):
                x, m = delta_maxpool2d(
                    x, m, state, layer.kernel, layer.stride, policy,
                    metrics, frame_idx, layer.name,
                )
            else:
                raise ConfigError(f"{layer.name}: unsupported spatial layer")
            maps.append((layer.name, m))

        activated = head_must_run(m, self.head_state)
        logits = delta_head(
            x, m, self.head_state, net.head_stack(), metrics, frame_idx
        )
        assert self.head_state.prediction is not None
        return ForwardResult(logits, self.head_state.prediction, maps, activated)


def run_sequence(
    net: NetworkSpec,
    frames: list[Tensor],
    mode: EngineMode,
    labels: list[int] | None = None,
    map_sink=None,
) -> RunMetrics:
    """Run a whole sequence, one frame at a time, collecting metrics.

    ``map_sink(frame_idx, maps)`` receives the per-layer change maps of each
    frame in delta mode, for dumping.
    """
    if not frames:
        raise ValueError("empty frame sequence")
    if labels is not None and len(labels) != len(frames):
        raise ValueError(f"{len(labels)} labels for {len(frames)} frames")
    net.validate()
    net.require_weights()

    if mode.kind == "dense":
        metrics = RunMetrics(mode="dense", tau=None)
        for idx, frame in enumerate(frames):
            t0 = time.perf_counter_ns()
            _, pred = forward_dense(net, frame, metrics, idx)
            wall = (time.perf_counter_ns() - t0) // 1000
            label = labels[idx] if labels is not None else None
            metrics.record_frame(idx, pred, label, int(wall), head_activated=True)
        return metrics

    if mode.kind != "delta":
        raise ValueError(f"unknown engine mode {mode.kind!r}")
    policy = mode.policy if mode.policy is not None else DeltaPolicy()
    metrics = RunMetrics(mode="delta", tau=policy.tau)
    network = DeltaNetwork(net, policy)
    prev: Tensor | None = None
    for idx, frame in enumerate(frames):
        t0 = time.perf_counter_ns()
        result = network.forward(frame, prev, metrics, idx)
        wall = (time.perf_counter_ns() - t0) // 1000
        label = labels[idx] if labels is not None else None
        metrics.record_frame(idx, result.prediction, label, int(wall), result.head_activated)
        if map_sink is not None:
            map_sink(idx, result.maps)
        prev = frame
    return metrics


def run_sweep(
    net: NetworkSpec,
    frames: list[Tensor],
    taus: list[float],
    base_policy: DeltaPolicy | None = None,
    labels: list[int] | None = None,
) -> list[dict[str, object]]:
    """One delta run per tau over a fixed sequence; rows sorted by tau."""
    base = base_policy if base_policy is not None else DeltaPolicy()
    rows: list[dict[str, object]] = []
    for tau in sorted(set(taus)):
        policy = DeltaPolicy(tau=tau, norm=base.norm, mark=base.mark, epsilon=base.epsilon)
        metrics = run_sequence(net, frames, EngineMode.delta(policy), labels)
        acc = metrics.accuracy()
        rows.append(
            {
                "tau": format(tau, "g"),
                "accuracy": "" if acc is None else format(acc, ".6f"),
                "total_actual_macs": metrics.total_actual_macs,
                "savings_ratio": format(metrics.compute_savings(), ".8f"),
                "wall_micros": metrics.total_wall_micros,
            }
        )
    return rows
