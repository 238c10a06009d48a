"""Run instrumentation: recompute counts, MAC accounting, timing, accuracy.

MACs are the primary cost metric; wall time is recorded but never asserted
on, since loop-level engines carry unfavorable constant factors that say
nothing about the algorithmic saving.  Pooling comparisons are charged as
MAC-equivalents (channels * k * k per pooled position) so conv and pool
layers share one savings ledger; relu positions are counted with zero cost.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Iterable

__all__ = [
    "LayerRecord",
    "FrameRecord",
    "RunMetrics",
    "write_run_csv",
    "write_sweep_csv",
    "SWEEP_FIELDS",
]

SWEEP_FIELDS = ("tau", "accuracy", "total_actual_macs", "savings_ratio", "wall_micros")


@dataclass(frozen=True)
class LayerRecord:
    frame_idx: int
    layer_name: str
    kind: str  # conv | relu | pool | head
    recomputed: int
    total: int
    actual_macs: int
    dense_macs: int

    @property
    def skipped_macs(self) -> int:
        return self.dense_macs - self.actual_macs


@dataclass(frozen=True)
class FrameRecord:
    frame_idx: int
    prediction: int
    label: int | None
    wall_micros: int
    head_activated: bool


@dataclass
class RunMetrics:
    mode: str = "dense"
    tau: float | None = None
    layer_records: list[LayerRecord] = field(default_factory=list)
    frame_records: list[FrameRecord] = field(default_factory=list)

    def record_layer(
        self,
        frame_idx: int,
        layer_name: str,
        kind: str,
        recomputed: int,
        total: int,
        macs_per_position: int,
    ) -> None:
        if not 0 <= recomputed <= total:
            raise ValueError(f"recomputed={recomputed} outside [0, total={total}]")
        rec = LayerRecord(
            frame_idx=frame_idx,
            layer_name=layer_name,
            kind=kind,
            recomputed=recomputed,
            total=total,
            actual_macs=recomputed * macs_per_position,
            dense_macs=total * macs_per_position,
        )
        # Conservation: actual + skipped must equal the dense cost.
        assert rec.actual_macs + rec.skipped_macs == rec.dense_macs
        self.layer_records.append(rec)

    def record_frame(
        self,
        frame_idx: int,
        prediction: int,
        label: int | None,
        wall_micros: int,
        head_activated: bool,
    ) -> None:
        self.frame_records.append(
            FrameRecord(frame_idx, prediction, label, wall_micros, head_activated)
        )

    # -- aggregates ---------------------------------------------------------

    @property
    def n_frames(self) -> int:
        return len(self.frame_records)

    @property
    def total_actual_macs(self) -> int:
        return sum(r.actual_macs for r in self.layer_records)

    @property
    def total_dense_macs(self) -> int:
        return sum(r.dense_macs for r in self.layer_records)

    @property
    def total_wall_micros(self) -> int:
        return sum(f.wall_micros for f in self.frame_records)

    def macs_by_kind(self, kinds: Iterable[str]) -> tuple[int, int]:
        """(actual, dense) MAC totals restricted to the given layer kinds."""
        kinds = set(kinds)
        actual = sum(r.actual_macs for r in self.layer_records if r.kind in kinds)
        dense = sum(r.dense_macs for r in self.layer_records if r.kind in kinds)
        return actual, dense

    def layer_frames(self, layer_name: str) -> list[LayerRecord]:
        return [r for r in self.layer_records if r.layer_name == layer_name]

    def compute_savings(self) -> float:
        """actual / dense-equivalent MACs over the whole run, in [0, 1]."""
        dense = self.total_dense_macs
        if dense == 0:
            raise ValueError("no MACs recorded; savings ratio undefined")
        return self.total_actual_macs / dense

    def accuracy(self) -> float | None:
        labeled = [f for f in self.frame_records if f.label is not None]
        if not labeled:
            return None
        correct = sum(1 for f in labeled if f.prediction == f.label)
        return correct / len(labeled)

    def head_activations(self) -> int:
        return sum(1 for f in self.frame_records if f.head_activated)

    def layer_names(self) -> list[str]:
        """Layer names in first-seen order."""
        seen: dict[str, None] = {}
        for r in self.layer_records:
            seen.setdefault(r.layer_name, None)
        return list(seen)


def write_run_csv(metrics: RunMetrics, fp: IO[str]) -> None:
    """Per-frame rows plus one aggregate row with frame_idx=-1.

    Columns: frame_idx, mode, tau, prediction, label, correct, wall_micros,
    then per layer: <name>_recomputed, <name>_total, <name>_actual_macs,
    <name>_dense_macs.
    """
    names = metrics.layer_names()
    header = ["frame_idx", "mode", "tau", "prediction", "label", "correct", "wall_micros"]
    for name in names:
        header += [
            f"{name}_recomputed",
            f"{name}_total",
            f"{name}_actual_macs",
            f"{name}_dense_macs",
        ]
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(header)

    tau_cell = "" if metrics.tau is None else format(metrics.tau, "g")
    by_frame: dict[int, dict[str, LayerRecord]] = {}
    for rec in metrics.layer_records:
        by_frame.setdefault(rec.frame_idx, {})[rec.layer_name] = rec

    for frame in metrics.frame_records:
        row: list[object] = [
            frame.frame_idx,
            metrics.mode,
            tau_cell,
            frame.prediction,
            "" if frame.label is None else frame.label,
            "" if frame.label is None else int(frame.prediction == frame.label),
            frame.wall_micros,
        ]
        recs = by_frame.get(frame.frame_idx, {})
        for name in names:
            rec = recs[name]
            row += [rec.recomputed, rec.total, rec.actual_macs, rec.dense_macs]
        writer.writerow(row)

    agg: list[object] = [-1, metrics.mode, tau_cell, "", "", "", metrics.total_wall_micros]
    for name in names:
        per_layer = metrics.layer_frames(name)
        agg += [
            sum(r.recomputed for r in per_layer),
            sum(r.total for r in per_layer),
            sum(r.actual_macs for r in per_layer),
            sum(r.dense_macs for r in per_layer),
        ]
    writer.writerow(agg)


def write_sweep_csv(rows: Iterable[dict[str, object]], fp: IO[str]) -> None:
    """One row per tau: tau, accuracy, total_actual_macs, savings_ratio,
    wall_micros.  Accuracy cell is empty when the sequence is unlabeled."""
    writer = csv.DictWriter(fp, fieldnames=list(SWEEP_FIELDS), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
