"""Network description, validation, weight generation, and model files.

Two external formats live here:

* Model spec file: text, one directive per line::

      input 1 64 64
      conv out=16 k=3 s=1 p=1
      relu
      maxpool k=2 s=2
      flatten
      fc out=128

  Input channel counts and fc input sizes are inferred by chaining shapes;
  ``name=`` overrides the auto-generated layer name.  Blank lines and
  ``#`` comments are ignored.

* Weights file (NNW1): binary, little-endian: magic ``NNW1``, u32 count of
  weighted layers, then per weighted layer in declaration order: u32 kind
  tag (1=conv, 2=fc), u32 dims[4] (conv: out,in,k,k; fc: out,in,1,1), f32
  weight data in C order, then f32 biases (out of them).  The loader
  validates every block against the network spec and rejects trailing
  bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dense import ConvGeometry, ConvWeights, out_dim
from .errors import ConfigError, FormatError

_MAGIC = b"NNW1"
_KIND_CONV = 1
_KIND_FC = 2


@dataclass
class ConvLayer:
    name: str
    geometry: ConvGeometry
    weights: ConvWeights | None = None
    kind: str = "conv"


@dataclass
class ReluLayer:
    name: str
    kind: str = "relu"


@dataclass
class PoolLayer:
    name: str
    kernel: int = 2
    stride: int = 2
    kind: str = "pool"


@dataclass
class FlattenLayer:
    name: str
    kind: str = "flatten"


@dataclass
class FcLayer:
    name: str
    in_size: int
    out_size: int
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None
    kind: str = "fc"


LayerSpec = ConvLayer | ReluLayer | PoolLayer | FlattenLayer | FcLayer


@dataclass
class NetworkSpec:
    """Ordered layer descriptors plus the input shape they chain from."""

    input_shape: tuple[int, int, int]
    layers: list[LayerSpec]

    def validate(self) -> None:
        """Check structure and shape chaining; raises ConfigError.

        A spec that passes never produces a shape error during forward.
        """
        c, h, w = self.input_shape
        if c < 1 or h < 1 or w < 1:
            raise ConfigError(f"invalid input shape {self.input_shape}")
        flat_seen = False
        flat_len = 0
        names = set()
        for layer in self.layers:
            if layer.name in names:
                raise ConfigError(f"duplicate layer name {layer.name!r}")
            names.add(layer.name)
            if isinstance(layer, ConvLayer):
                if flat_seen:
                    raise ConfigError(f"{layer.name}: conv after flatten")
                g = layer.geometry
                if g.in_channels != c:
                    raise ConfigError(
                        f"{layer.name}: expects {g.in_channels} channels, gets {c}"
                    )
                try:
                    h, w = g.out_shape(h, w)
                except ValueError as exc:
                    raise ConfigError(f"{layer.name}: {exc}") from exc
                c = g.out_channels
            elif isinstance(layer, PoolLayer):
                if flat_seen:
                    raise ConfigError(f"{layer.name}: maxpool after flatten")
                if layer.kernel < 1 or layer.stride < 1:
                    raise ConfigError(f"{layer.name}: bad pool geometry")
                if h < layer.kernel or w < layer.kernel:
                    raise ConfigError(f"{layer.name}: pool kernel larger than input")
                h = out_dim(h, layer.kernel, layer.stride, 0)
                w = out_dim(w, layer.kernel, layer.stride, 0)
            elif isinstance(layer, FlattenLayer):
                if flat_seen:
                    raise ConfigError("more than one flatten layer")
                flat_seen = True
                flat_len = c * h * w
            elif isinstance(layer, FcLayer):
                if not flat_seen:
                    raise ConfigError(f"{layer.name}: fc before flatten")
                if layer.in_size != flat_len:
                    raise ConfigError(
                        f"{layer.name}: expects {layer.in_size} inputs, gets {flat_len}"
                    )
                if layer.out_size < 1:
                    raise ConfigError(f"{layer.name}: out size must be >= 1")
                flat_len = layer.out_size
            elif isinstance(layer, ReluLayer):
                pass
            else:
                raise ConfigError(f"unknown layer {layer!r}")
        if not flat_seen:
            raise ConfigError("network needs a flatten layer")
        if not self.layers or not isinstance(self.layers[-1], FcLayer):
            raise ConfigError("network must end in an fc layer")

    # -- derived views ------------------------------------------------------

    def spatial_layers(self) -> list[LayerSpec]:
        """Layers before the flatten, in order."""
        out: list[LayerSpec] = []
        for layer in self.layers:
            if isinstance(layer, FlattenLayer):
                break
            out.append(layer)
        return out

    def head_layers(self) -> list[LayerSpec]:
        idx = next(i for i, l in enumerate(self.layers) if isinstance(l, FlattenLayer))
        return self.layers[idx + 1 :]

    def spatial_shapes(self) -> list[tuple[int, int, int]]:
        """Output shape of each spatial layer, chained from the input."""
        c, h, w = self.input_shape
        shapes = []
        for layer in self.spatial_layers():
            if isinstance(layer, ConvLayer):
                h, w = layer.geometry.out_shape(h, w)
                c = layer.geometry.out_channels
            elif isinstance(layer, PoolLayer):
                h = out_dim(h, layer.kernel, layer.stride, 0)
                w = out_dim(w, layer.kernel, layer.stride, 0)
            shapes.append((c, h, w))
        return shapes

    def head_stack(self) -> list[tuple]:
        """Head ops in the form the delta/dense head executors consume."""
        stack: list[tuple] = []
        for layer in self.head_layers():
            if isinstance(layer, FcLayer):
                if layer.weights is None or layer.bias is None:
                    raise ConfigError(f"{layer.name}: weights not loaded")
                stack.append(("fc", layer.weights, layer.bias))
            elif isinstance(layer, ReluLayer):
                stack.append(("relu",))
            else:
                raise ConfigError(f"{layer.name}: unsupported head layer")
        return stack

    def n_classes(self) -> int:
        last = self.layers[-1]
        assert isinstance(last, FcLayer)
        return last.out_size

    def weighted_layers(self) -> list[ConvLayer | FcLayer]:
        return [l for l in self.layers if isinstance(l, (ConvLayer, FcLayer))]

    def has_weights(self) -> bool:
        return all(
            (l.weights is not None) if isinstance(l, ConvLayer) else
            (l.weights is not None and l.bias is not None)
            for l in self.weighted_layers()
        )

    def require_weights(self) -> None:
        if not self.has_weights():
            raise ConfigError("network weights are not loaded")


def reference_architecture() -> NetworkSpec:
    """The canonical digit net: 1x64x64 in, two conv/pool stages, 10 classes.

    Channel counts (16, 32) and the fc width (128) are declared here only;
    engine logic never assumes them.
    """
    net = NetworkSpec(
        input_shape=(1, 64, 64),
        layers=[
            ConvLayer("conv1", ConvGeometry(1, 16, kernel=3, stride=1, padding=1)),
            ReluLayer("relu1"),
            PoolLayer("pool1", kernel=2, stride=2),
            ConvLayer("conv2", ConvGeometry(16, 32, kernel=3, stride=1, padding=1)),
            ReluLayer("relu2"),
            PoolLayer("pool2", kernel=2, stride=2),
            FlattenLayer("flatten"),
            FcLayer("fc1", in_size=32 * 16 * 16, out_size=128),
            ReluLayer("relu3"),
            FcLayer("fc2", in_size=128, out_size=10),
        ],
    )
    net.validate()
    return net


def init_weights(net: NetworkSpec, seed: int) -> None:
    """Deterministic fixture weights, uniform in [-0.1, 0.1].

    Each parameter block draws from its own stream: weighted layer i uses
    default_rng([seed, i, 0]) for weights and default_rng([seed, i, 1]) for
    biases, drawn as float64 then cast to float32.  Same seed, same bytes.
    """
    for i, layer in enumerate(net.weighted_layers()):
        rng_w = np.random.default_rng([seed, i, 0])
        rng_b = np.random.default_rng([seed, i, 1])
        if isinstance(layer, ConvLayer):
            g = layer.geometry
            shape = (g.out_channels, g.in_channels, g.kernel, g.kernel)
            layer.weights = ConvWeights(
                rng_w.uniform(-0.1, 0.1, shape).astype(np.float32),
                rng_b.uniform(-0.1, 0.1, g.out_channels).astype(np.float32),
            )
        else:
            layer.weights = rng_w.uniform(
                -0.1, 0.1, (layer.out_size, layer.in_size)
            ).astype(np.float32)
            layer.bias = rng_b.uniform(-0.1, 0.1, layer.out_size).astype(np.float32)


# -- model spec files -------------------------------------------------------


def parse_model(text: str) -> NetworkSpec:
    input_shape: tuple[int, int, int] | None = None
    layers: list[LayerSpec] = []
    counts: dict[str, int] = {}
    c = h = w = 0
    flat_len = 0
    flat_seen = False

    def auto_name(kind: str, override: str | None) -> str:
        if override:
            return override
        counts[kind] = counts.get(kind, 0) + 1
        return f"{kind}{counts[kind]}"

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        word = parts[0]
        kv: dict[str, str] = {}
        if word != "input":
            for p in parts[1:]:
                if "=" not in p:
                    raise FormatError(f"line {lineno}: expected key=value, got {p!r}")
                key, val = p.split("=", 1)
                kv[key] = val
            if input_shape is None:
                raise FormatError(f"line {lineno}: layer before input directive")

        def intval(key: str, default: int | None = None) -> int:
            if key not in kv:
                if default is None:
                    raise FormatError(f"line {lineno}: {word} needs {key}=")
                return default
            try:
                return int(kv[key])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: bad {key}={kv[key]!r}") from exc

        try:
            if word == "input":
                if input_shape is not None:
                    raise FormatError(f"line {lineno}: duplicate input directive")
                if len(parts) != 4:
                    raise FormatError(f"line {lineno}: input wants 'input C H W'")
                c, h, w = (int(p) for p in parts[1:4])
                input_shape = (c, h, w)
            elif word == "conv":
                g = ConvGeometry(
                    in_channels=c,
                    out_channels=intval("out"),
                    kernel=intval("k"),
                    stride=intval("s", 1),
                    padding=intval("p", 0),
                )
                layers.append(ConvLayer(auto_name("conv", kv.get("name")), g))
                h, w = g.out_shape(h, w)
                c = g.out_channels
            elif word == "relu":
                layers.append(ReluLayer(auto_name("relu", kv.get("name"))))
            elif word == "maxpool":
                k = intval("k")
                s = intval("s", k)
                layers.append(PoolLayer(auto_name("pool", kv.get("name")), k, s))
                h = out_dim(h, k, s, 0)
                w = out_dim(w, k, s, 0)
            elif word == "flatten":
                layers.append(FlattenLayer(auto_name("flatten", kv.get("name"))))
                flat_seen = True
                flat_len = c * h * w
            elif word == "fc":
                if not flat_seen:
                    raise FormatError(f"line {lineno}: fc before flatten")
                out = intval("out")
                layers.append(FcLayer(auto_name("fc", kv.get("name")), flat_len, out))
                flat_len = out
            else:
                raise FormatError(f"line {lineno}: unknown directive {word!r}")
        except (ValueError, ConfigError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"line {lineno}: {exc}") from exc

    if input_shape is None:
        raise FormatError("model file has no input directive")
    net = NetworkSpec(input_shape, layers)
    try:
        net.validate()
    except ConfigError as exc:
        raise FormatError(str(exc)) from exc
    return net


def format_model(net: NetworkSpec) -> str:
    lines = ["input {} {} {}".format(*net.input_shape)]
    for layer in net.layers:
        if isinstance(layer, ConvLayer):
            g = layer.geometry
            lines.append(
                f"conv out={g.out_channels} k={g.kernel} s={g.stride} p={g.padding}"
                f" name={layer.name}"
            )
        elif isinstance(layer, ReluLayer):
            lines.append(f"relu name={layer.name}")
        elif isinstance(layer, PoolLayer):
            lines.append(f"maxpool k={layer.kernel} s={layer.stride} name={layer.name}")
        elif isinstance(layer, FlattenLayer):
            lines.append(f"flatten name={layer.name}")
        elif isinstance(layer, FcLayer):
            lines.append(f"fc out={layer.out_size} name={layer.name}")
    return "\n".join(lines) + "\n"


def load_model(path: str | Path) -> NetworkSpec:
    return parse_model(Path(path).read_text(encoding="utf-8"))


def save_model(net: NetworkSpec, path: str | Path) -> None:
    Path(path).write_text(format_model(net), encoding="utf-8")


# -- NNW1 weights files -----------------------------------------------------


def save_weights(net: NetworkSpec, path: str | Path) -> None:
    net.require_weights()
    blobs = [_MAGIC, struct.pack("<I", len(net.weighted_layers()))]
    for layer in net.weighted_layers():
        if isinstance(layer, ConvLayer):
            assert layer.weights is not None
            g = layer.geometry
            dims = (g.out_channels, g.in_channels, g.kernel, g.kernel)
            blobs.append(struct.pack("<5I", _KIND_CONV, *dims))
            blobs.append(layer.weights.weights.astype("<f4").tobytes())
            blobs.append(layer.weights.bias.astype("<f4").tobytes())
        else:
            assert layer.weights is not None and layer.bias is not None
            dims = (layer.out_size, layer.in_size, 1, 1)
            blobs.append(struct.pack("<5I", _KIND_FC, *dims))
            blobs.append(layer.weights.astype("<f4").tobytes())
            blobs.append(layer.bias.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(blobs))


def load_weights(net: NetworkSpec, path: str | Path) -> None:
    """Read an NNW1 file and attach its blocks to the matching layers."""
    data = Path(path).read_bytes()
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise FormatError(f"weights file truncated while reading {what}")
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    if take(4, "magic") != _MAGIC:
        raise FormatError("not an NNW1 weights file (bad magic)")
    (count,) = struct.unpack("<I", take(4, "layer count"))
    weighted = net.weighted_layers()
    if count != len(weighted):
        raise FormatError(
            f"weights file has {count} layers, network declares {len(weighted)}"
        )
    for layer in weighted:
        kind, d0, d1, d2, d3 = struct.unpack("<5I", take(20, f"{layer.name} header"))
        if isinstance(layer, ConvLayer):
            g = layer.geometry
            expect = (_KIND_CONV, g.out_channels, g.in_channels, g.kernel, g.kernel)
        else:
            expect = (_KIND_FC, layer.out_size, layer.in_size, 1, 1)
        if (kind, d0, d1, d2, d3) != expect:
            raise FormatError(
                f"{layer.name}: weights block {(kind, d0, d1, d2, d3)} does not "
                f"match declaration {expect}"
            )
        n_weights = d0 * d1 * d2 * d3
        w_raw = take(4 * n_weights, f"{layer.name} weights")
        b_raw = take(4 * d0, f"{layer.name} biases")
        w_arr = np.frombuffer(w_raw, dtype="<f4").astype(np.float32)
        b_arr = np.frombuffer(b_raw, dtype="<f4").astype(np.float32)
        if isinstance(layer, ConvLayer):
            layer.weights = ConvWeights(w_arr.reshape(d0, d1, d2, d3), b_arr)
        else:
            layer.weights = w_arr.reshape(d0, d1)
            layer.bias = b_arr
    if pos != len(data):
        raise FormatError(f"weights file has {len(data) - pos} trailing bytes")
