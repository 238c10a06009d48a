"""Frame persistence and synthetic sequence generation.

Formats:

* PGM (P5): binary grayscale, maxval 255.  Reading yields a 1xHxW tensor
  with pixel/255 values; writing quantizes round-half-up, clamped to
  [0, 255].  Change maps write as 0 (unchanged, black) / 255 (changed,
  white).
* FSEQ: binary frame sequence, little-endian: magic ``FSEQ``, u32
  version=1, u32 n_frames, u32 c, u32 h, u32 w, u8 has_labels, then
  n_frames u32 labels if flagged, then n_frames payloads of c*h*w f32 each,
  frame order.  Frames stay float32 so synthetic sub-8-bit perturbations
  survive the round trip.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .changemap import ChangeMap, MagnitudeMap
from .errors import FormatError, ShapeError
from .tensor import Tensor

_FSEQ_MAGIC = b"FSEQ"
_FSEQ_VERSION = 1


@dataclass
class FrameSequence:
    frames: list[Tensor]
    labels: list[int] | None = None

    def __post_init__(self) -> None:
        if not self.frames:
            raise ValueError("a frame sequence needs at least one frame")
        shape = self.frames[0].shape
        for f in self.frames:
            if f.shape != shape:
                raise ShapeError(f"mixed frame shapes: {shape} vs {f.shape}")
        if self.labels is not None and len(self.labels) != len(self.frames):
            raise ValueError(
                f"{len(self.labels)} labels for {len(self.frames)} frames"
            )

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.frames[0].shape

    def __len__(self) -> int:
        return len(self.frames)


# -- PGM ----------------------------------------------------------------------


def _pgm_header_tokens(data: bytes):
    """Yield (token, position-after) over the PGM header, skipping comments."""
    pos = 0
    while True:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("unexpected end of PGM header")
        yield data[start:pos], pos


def read_pgm(path: str | Path) -> Tensor:
    data = Path(path).read_bytes()
    tokens = _pgm_header_tokens(data)
    try:
        magic, _ = next(tokens)
        if magic != b"P5":
            raise FormatError(f"not a binary PGM (magic {magic!r})")
        fields = []
        for _ in range(3):
            tok, end = next(tokens)
            if not tok.isdigit():
                raise FormatError(f"bad PGM header token {tok!r}")
            fields.append(int(tok))
    except StopIteration:
        raise FormatError("truncated PGM header") from None
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"only maxval 255 PGMs are supported, got {maxval}")
    if width < 1 or height < 1:
        raise FormatError(f"bad PGM dimensions {width}x{height}")
    payload = data[end + 1 :]
    if len(payload) != width * height:
        raise FormatError(
            f"PGM payload is {len(payload)} bytes, header declares {width * height}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(1, height, width)
    return Tensor((pixels / np.float32(255.0)).astype(np.float32))


def write_pgm(obj: Tensor | ChangeMap | MagnitudeMap, path: str | Path) -> None:
    if isinstance(obj, ChangeMap):
        grid = obj.mask.astype(np.uint8) * 255
    else:
        if isinstance(obj, MagnitudeMap):
            values = obj.values
        else:
            if obj.channels != 1:
                raise ShapeError(f"only single-channel tensors write as PGM, got {obj.shape}")
            values = obj.data[0]
        scaled = np.floor(values.astype(np.float64) * 255.0 + 0.5)
        grid = np.clip(scaled, 0, 255).astype(np.uint8)
    h, w = grid.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + grid.tobytes())


# -- FSEQ ---------------------------------------------------------------------


def write_fseq(seq: FrameSequence, path: str | Path) -> None:
    c, h, w = seq.shape
    parts = [
        _FSEQ_MAGIC,
        struct.pack(
            "<IIIIIB",
            _FSEQ_VERSION,
            len(seq),
            c,
            h,
            w,
            1 if seq.labels is not None else 0,
        ),
    ]
    if seq.labels is not None:
        parts.append(struct.pack(f"<{len(seq)}I", *seq.labels))
    for frame in seq.frames:
        parts.append(frame.data.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_fseq(path: str | Path) -> FrameSequence:
    data = Path(path).read_bytes()
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise FormatError(f"FSEQ file truncated while reading {what}")
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    if take(4, "magic") != _FSEQ_MAGIC:
        raise FormatError("not an FSEQ file (bad magic)")
    version, n, c, h, w, has_labels = struct.unpack("<IIIIIB", take(21, "header"))
    if version != _FSEQ_VERSION:
        raise FormatError(f"unsupported FSEQ version {version}")
    if n < 1 or c < 1 or h < 1 or w < 1:
        raise FormatError(f"bad FSEQ header: n={n}, shape=({c},{h},{w})")
    if has_labels not in (0, 1):
        raise FormatError(f"bad FSEQ label flag {has_labels}")
    labels = None
    if has_labels:
        labels = list(struct.unpack(f"<{n}I", take(4 * n, "labels")))
    frames = []
    frame_bytes = 4 * c * h * w
    for i in range(n):
        raw = take(frame_bytes, f"frame {i}")
        arr = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(c, h, w)
        frames.append(Tensor(arr))
    if pos != len(data):
        raise FormatError(f"FSEQ file has {len(data) - pos} trailing bytes")
    return FrameSequence(frames, labels)


# -- synthetic sequences --------------------------------------------------------


def gen_repeat(base: Tensor, n: int, label: int | None = None) -> FrameSequence:
    """The static-scene sequence: the same frame n times."""
    if n < 1:
        raise ValueError(f"need at least one frame, got n={n}")
    frames = [base.copy() for _ in range(n)]
    labels = [label] * n if label is not None else None
    return FrameSequence(frames, labels)


def shift_horizontal(base: Tensor, t: int) -> Tensor:
    """Translate by t pixels (positive = right), zero-filling vacated columns."""
    out = np.zeros_like(base.data)
    w = base.width
    if abs(t) < w:
        if t >= 0:
            out[:, :, t:] = base.data[:, :, : w - t]
        else:
            out[:, :, : w + t] = base.data[:, :, -t:]
    return Tensor(out)


def gen_shift(base: Tensor, n: int, dx: int, label: int | None = None) -> FrameSequence:
    """The moving-scene sequence: frame i is the base shifted by i*dx pixels."""
    if n < 1:
        raise ValueError(f"need at least one frame, got n={n}")
    frames = [shift_horizontal(base, i * dx) for i in range(n)]
    labels = [label] * n if label is not None else None
    return FrameSequence(frames, labels)


def embed_centered(small: Tensor, canvas_h: int, canvas_w: int) -> Tensor:
    """Place a patch at the center of a black canvas of the same depth."""
    if small.height > canvas_h or small.width > canvas_w:
        raise ShapeError(
            f"patch {small.height}x{small.width} does not fit canvas {canvas_h}x{canvas_w}"
        )
    out = np.zeros((small.channels, canvas_h, canvas_w), dtype=np.float32)
    oy = (canvas_h - small.height) // 2
    ox = (canvas_w - small.width) // 2
    out[:, oy : oy + small.height, ox : ox + small.width] = small.data
    return Tensor(out)
