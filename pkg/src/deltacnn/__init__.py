"""Incremental CNN inference over frame sequences.

A dense reference engine recomputes every activation every frame; the delta
engine keeps per-layer output caches and recomputes only the receptive
fields touched by input changes, propagating binary change maps layer to
layer.  At tau=0 the two are bitwise identical; MAC counters quantify the
compute the delta engine skipped.
"""

from .changemap import (
    ChangeMap,
    DeltaPolicy,
    MagnitudeMap,
    MarkMode,
    Norm,
    any_changed,
    downsample,
    initial_map,
    magnitude_from_diff,
    rf_changed,
)
from .delta import HeadState, LayerState, delta_conv2d, delta_head, delta_maxpool2d, delta_relu, reset
from .dense import (
    ConvGeometry,
    ConvWeights,
    RfWindow,
    conv2d_dense,
    fc_dense,
    macs_dense,
    maxpool2d_dense,
    relu_dense,
)
from .engine import DeltaNetwork, EngineMode, forward_dense, run_sequence, run_sweep
from .errors import ConfigError, FormatError, ShapeError
from .frameio import (
    FrameSequence,
    embed_centered,
    gen_repeat,
    gen_shift,
    read_fseq,
    read_pgm,
    write_fseq,
    write_pgm,
)
from .metrics import RunMetrics
from .model import (
    NetworkSpec,
    init_weights,
    load_model,
    load_weights,
    reference_architecture,
    save_model,
    save_weights,
)
from .tensor import Tensor, abs_diff, from_array, new_zeros

__version__ = "0.1.0"
