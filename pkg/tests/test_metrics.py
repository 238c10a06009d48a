import io

import pytest

from deltacnn import RunMetrics
from deltacnn.metrics import write_run_csv, write_sweep_csv


def test_record_no_recompute():
    m = RunMetrics()
    m.record_layer(0, "c", "conv", recomputed=0, total=16, macs_per_position=9)
    rec = m.layer_records[0]
    assert rec.actual_macs == 0
    assert rec.skipped_macs == rec.dense_macs == 144


def test_record_full_recompute():
    m = RunMetrics()
    m.record_layer(0, "c", "conv", recomputed=16, total=16, macs_per_position=9)
    rec = m.layer_records[0]
    assert rec.skipped_macs == 0
    assert rec.actual_macs == rec.dense_macs == 144


def test_record_partial_arithmetic():
    # Nine recomputed positions of sixteen at 9 MACs each.
    m = RunMetrics()
    m.record_layer(0, "c", "conv", recomputed=9, total=16, macs_per_position=9)
    rec = m.layer_records[0]
    assert rec.actual_macs == 81
    assert rec.dense_macs == 144
    assert rec.actual_macs + rec.skipped_macs == rec.dense_macs


def test_record_rejects_bad_counts():
    m = RunMetrics()
    with pytest.raises(ValueError):
        m.record_layer(0, "c", "conv", recomputed=17, total=16, macs_per_position=9)
    with pytest.raises(ValueError):
        m.record_layer(0, "c", "conv", recomputed=-1, total=16, macs_per_position=9)


def test_savings_all_recompute_is_one():
    m = RunMetrics()
    for f in range(3):
        m.record_layer(f, "c", "conv", 4, 4, 10)
    assert m.compute_savings() == 1.0


def test_savings_static_sequence_is_tenth():
    m = RunMetrics()
    m.record_layer(0, "c", "conv", 4, 4, 10)
    for f in range(1, 10):
        m.record_layer(f, "c", "conv", 0, 4, 10)
    assert m.compute_savings() == 0.1


def test_savings_empty_run_errors():
    with pytest.raises(ValueError):
        RunMetrics().compute_savings()


def test_accuracy_all_correct():
    m = RunMetrics()
    for f in range(4):
        m.record_frame(f, prediction=2, label=2, wall_micros=1, head_activated=True)
    assert m.accuracy() == 1.0


def test_accuracy_reporting_convention():
    m = RunMetrics()
    for f in range(110):
        m.record_frame(f, prediction=1, label=1 if f < 100 else 2, wall_micros=1,
                       head_activated=True)
    assert round(m.accuracy(), 4) == 0.9091


def test_accuracy_without_labels_is_none():
    m = RunMetrics()
    m.record_frame(0, prediction=1, label=None, wall_micros=1, head_activated=True)
    assert m.accuracy() is None


def _sample_metrics() -> RunMetrics:
    m = RunMetrics(mode="delta", tau=0.25)
    for f in range(2):
        m.record_layer(f, "conv1", "conv", 2 - f, 4, 9)
        m.record_layer(f, "pool1", "pool", 1, 4, 4)
        m.record_layer(f, "head", "head", 1, 1, 100)
        m.record_frame(f, prediction=f, label=f, wall_micros=5 + f, head_activated=True)
    return m


def test_run_csv_layout():
    buf = io.StringIO()
    write_run_csv(_sample_metrics(), buf)
    lines = buf.getvalue().strip().splitlines()
    header = lines[0].split(",")
    assert header[:7] == ["frame_idx", "mode", "tau", "prediction", "label", "correct",
                          "wall_micros"]
    assert "conv1_recomputed" in header and "head_dense_macs" in header
    assert len(lines) == 1 + 2 + 1  # header, two frames, aggregate
    agg = lines[-1].split(",")
    assert agg[0] == "-1"
    # Aggregate conv1 recomputed = 2 + 1.
    idx = header.index("conv1_recomputed")
    assert agg[idx] == "3"


def test_run_csv_deterministic():
    a, b = io.StringIO(), io.StringIO()
    write_run_csv(_sample_metrics(), a)
    write_run_csv(_sample_metrics(), b)
    assert a.getvalue() == b.getvalue()


def test_run_csv_empty_label_cells():
    m = RunMetrics(mode="dense", tau=None)
    m.record_layer(0, "c", "conv", 1, 1, 1)
    m.record_frame(0, prediction=3, label=None, wall_micros=2, head_activated=True)
    buf = io.StringIO()
    write_run_csv(m, buf)
    frame_row = buf.getvalue().strip().splitlines()[1].split(",")
    assert frame_row[2] == ""  # tau column empty in dense mode
    assert frame_row[4] == "" and frame_row[5] == ""


def test_sweep_csv_layout():
    rows = [
        {"tau": "0", "accuracy": "1.000000", "total_actual_macs": 10,
         "savings_ratio": "1.00000000", "wall_micros": 7},
        {"tau": "0.5", "accuracy": "", "total_actual_macs": 5,
         "savings_ratio": "0.50000000", "wall_micros": 6},
    ]
    buf = io.StringIO()
    write_sweep_csv(rows, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "tau,accuracy,total_actual_macs,savings_ratio,wall_micros"
    assert len(lines) == 3
