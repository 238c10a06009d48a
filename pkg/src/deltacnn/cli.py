"""Command-line front end.

    deltacnn gen repeat --input digit.pgm --count 10 --label 3 --out seq.fseq
    deltacnn gen shift  --input digit.pgm --count 10 --dx 1 --out seq.fseq
    deltacnn weights gen --seed 7 --out w.nnw
    deltacnn run  --weights w.nnw --seq seq.fseq --mode delta --tau 0.05 \
                  --csv run.csv --dump-maps maps/ --plot run.png
    deltacnn sweep --weights w.nnw --seq seq.fseq --taus 0,0.05,0.1 --csv sweep.csv

Data (CSV) goes to --csv or stdout; diagnostics and summaries go to stderr.
Exit code 0 means the command completed.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .changemap import DeltaPolicy, MarkMode, Norm
from .engine import EngineMode, run_sequence, run_sweep
from .frameio import embed_centered, gen_repeat, gen_shift, read_fseq, read_pgm, write_fseq
from .metrics import write_run_csv, write_sweep_csv
from .model import NetworkSpec, init_weights, load_model, load_weights, reference_architecture, save_weights


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_net(model_path: str | None) -> NetworkSpec:
    if model_path is None:
        return reference_architecture()
    return load_model(model_path)


def _parse_mark(spec: str) -> tuple[MarkMode, float]:
    if spec == "recomputed":
        return MarkMode.RECOMPUTED, 0.0
    if spec.startswith("valuecompare:"):
        eps = float(spec.split(":", 1)[1])
        return MarkMode.VALUE_COMPARE, eps
    raise ValueError(f"bad --mark value {spec!r} (recomputed | valuecompare:EPS)")


def _parse_taus(spec: str) -> list[float]:
    taus = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        tau = float(tok)
        if not math.isfinite(tau) or tau < 0:
            raise ValueError(f"tau values must be finite and >= 0, got {tok}")
        taus.append(tau)
    if not taus:
        raise ValueError("--taus parsed to an empty list")
    return sorted(set(taus))


def _policy_from_args(args: argparse.Namespace, tau: float) -> DeltaPolicy:
    mark, eps = _parse_mark(args.mark)
    return DeltaPolicy(tau=tau, norm=Norm(args.norm), mark=mark, epsilon=eps)


def _emit_csv(write, path: str | None) -> None:
    if path is None:
        write(sys.stdout)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fp:
            write(fp)


def cmd_gen(args: argparse.Namespace) -> int:
    base = read_pgm(args.input)
    if args.canvas is not None:
        base = embed_centered(base, args.canvas[0], args.canvas[1])
    if args.kind == "repeat":
        seq = gen_repeat(base, args.count, args.label)
    else:
        seq = gen_shift(base, args.count, args.dx, args.label)
    write_fseq(seq, args.out)
    c, h, w = seq.shape
    print(f"frames={len(seq)} shape={c}x{h}x{w}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    net = _load_net(args.model)
    load_weights(net, args.weights)
    seq = read_fseq(args.seq)

    map_sink = None
    if args.dump_maps:
        if args.mode != "delta":
            raise ValueError("--dump-maps needs --mode delta")
        from .frameio import write_pgm

        dump_dir = Path(args.dump_maps)
        dump_dir.mkdir(parents=True, exist_ok=True)

        def map_sink(frame_idx: int, maps) -> None:
            for name, cmap in maps:
                if name.startswith("relu"):
                    continue  # pass-through duplicates of the conv maps
                write_pgm(cmap, dump_dir / f"{name}_{frame_idx:03}.pgm")

    if args.mode == "dense":
        mode = EngineMode.dense()
    else:
        mode = EngineMode.delta(_policy_from_args(args, args.tau))
    metrics = run_sequence(net, seq.frames, mode, seq.labels, map_sink)

    _emit_csv(lambda fp: write_run_csv(metrics, fp), args.csv)
    if args.plot:
        from .plots import save_run_figure

        save_run_figure(metrics, args.plot)
        _log(f"figure written to {args.plot}")

    acc = metrics.accuracy()
    _log(
        f"mode={metrics.mode} frames={metrics.n_frames} "
        f"actual_macs={metrics.total_actual_macs} "
        f"dense_macs={metrics.total_dense_macs} "
        f"savings={metrics.compute_savings():.4f} "
        f"accuracy={'n/a' if acc is None else format(acc, '.4f')}"
    )
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    net = _load_net(args.model)
    load_weights(net, args.weights)
    seq = read_fseq(args.seq)
    taus = _parse_taus(args.taus)
    base_policy = _policy_from_args(args, 0.0)
    rows = run_sweep(net, seq.frames, taus, base_policy, seq.labels)
    _emit_csv(lambda fp: write_sweep_csv(rows, fp), args.csv)
    if args.plot:
        from .plots import save_sweep_figure

        save_sweep_figure(rows, args.plot)
        _log(f"figure written to {args.plot}")
    _log(f"swept {len(rows)} tau values over {len(seq)} frames")
    return 0


def cmd_weights(args: argparse.Namespace) -> int:
    if args.action != "gen":
        raise ValueError(f"unknown weights action {args.action!r}")
    net = _load_net(args.model)
    init_weights(net, args.seed)
    save_weights(net, args.out)
    _log(f"weights for {len(net.weighted_layers())} layers written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deltacnn",
        description="Incremental CNN inference over frame sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a frame sequence from a PGM image")
    p_gen.add_argument("kind", choices=["repeat", "shift"])
    p_gen.add_argument("--input", required=True, help="base image (binary PGM, maxval 255)")
    p_gen.add_argument("--count", type=int, required=True, help="number of frames")
    p_gen.add_argument("--dx", type=int, default=1, help="pixels shifted per frame (shift)")
    p_gen.add_argument("--label", type=int, default=None, help="class label for every frame")
    p_gen.add_argument(
        "--canvas", type=int, nargs=2, metavar=("H", "W"), default=None,
        help="embed the image centered on a black HxW canvas first",
    )
    p_gen.add_argument("--out", required=True, help="output FSEQ path")
    p_gen.set_defaults(func=cmd_gen)

    p_run = sub.add_parser("run", help="run one engine over a sequence")
    p_run.add_argument("--model", default=None, help="model spec file (default: built-in reference)")
    p_run.add_argument("--weights", required=True, help="NNW1 weights file")
    p_run.add_argument("--seq", required=True, help="input FSEQ sequence")
    p_run.add_argument("--mode", choices=["dense", "delta"], required=True)
    p_run.add_argument("--tau", type=float, default=0.0, help="change threshold (delta mode)")
    p_run.add_argument("--norm", choices=["l1", "l2"], default="l1")
    p_run.add_argument("--mark", default="recomputed", help="recomputed | valuecompare:EPS")
    p_run.add_argument("--dump-maps", default=None, metavar="DIR",
                       help="write per-layer change maps as PGM files")
    p_run.add_argument("--csv", default=None, help="per-frame metrics CSV (default: stdout)")
    p_run.add_argument("--plot", default=None, help="render the run profile figure to this file")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run delta mode once per tau")
    p_sweep.add_argument("--model", default=None)
    p_sweep.add_argument("--weights", required=True)
    p_sweep.add_argument("--seq", required=True)
    p_sweep.add_argument("--taus", required=True, help="comma-separated tau values")
    p_sweep.add_argument("--norm", choices=["l1", "l2"], default="l1")
    p_sweep.add_argument("--mark", default="recomputed")
    p_sweep.add_argument("--csv", default=None)
    p_sweep.add_argument("--plot", default=None, help="render the sweep figure to this file")
    p_sweep.set_defaults(func=cmd_sweep)

    p_weights = sub.add_parser("weights", help="weight-file utilities")
    p_weights.add_argument("action", choices=["gen"])
    p_weights.add_argument("--model", default=None)
    p_weights.add_argument("--seed", type=int, required=True)
    p_weights.add_argument("--out", required=True)
    p_weights.set_defaults(func=cmd_weights)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        _log(f"error: {exc}")
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
