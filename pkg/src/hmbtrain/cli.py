"""Command-line front end: codebook/multibeam exports, seeded runs, sweeps,
plotting, and the round-count bound calculator."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

SEED_ENV = "HMBTRAIN_SEED"


def _build_array(args):
    from .harness import ArraySettings

    return ArraySettings(m=args.m, n=args.n, f_c_hz=args.f_c).build()


def _load_config(args):
    from .harness import ExperimentConfig

    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    elif os.environ.get(SEED_ENV):
        cfg.master_seed = int(os.environ[SEED_ENV])
    if getattr(args, "trials", None) is not None:
        cfg.trials = args.trials
    return cfg


def _cmd_codebook(args) -> int:
    from .polar_codebook import build_codebook, save_codebook

    cfg = _build_array(args)
    book = build_codebook(
        cfg,
        delta=args.delta,
        r_min=args.r_min,
        r_max=args.r_max,
        far_field_only=args.far_field_only,
    )
    save_codebook(book, args.out)
    print(f"wrote {book.size} codewords to {args.out}")
    return 0


def _cmd_multibeam(args) -> int:
    from .hash_family import partition, sample_hash
    from .multibeam import build_multiarm_codebook
    from .polar_codebook import build_codebook

    cfg = _build_array(args)
    book = build_codebook(cfg, delta=args.delta)
    seed = args.seed if args.seed is not None else int(os.environ.get(SEED_ENV, 0))
    rng = np.random.default_rng(seed)
    with open(args.out, "w") as fh:
        fh.write(
            f"{cfg.m} {cfg.n} {cfg.d_x:.17g} {cfg.d_z:.17g} {cfg.wavelength:.17g} "
            f"{args.buckets} {args.rounds} {book.size}\n"
        )
        for round_idx in range(args.rounds):
            h = sample_hash(rng, args.order, book.size, args.buckets)
            part = partition(h, book.size, args.buckets)
            multi = build_multiarm_codebook(part, book, optimize=args.optimize)
            for b, cw in enumerate(multi.rows):
                members = ",".join(str(i) for i in cw.bucket)
                phases = ",".join(f"{p:.17g}" for p in cw.phases)
                entries = " ".join(
                    f"{v:.17g}" for pair in zip(cw.weights.real, cw.weights.imag) for v in pair
                )
                fh.write(f"{round_idx} {b} {members} {phases} {entries}\n")
    print(f"wrote {args.rounds} rounds x {args.buckets} beams to {args.out}")
    return 0


def _cmd_train(args) -> int:
    from .harness import run_single

    cfg = _load_config(args)
    summary = run_single(cfg, trace_path=args.trace)
    for k, (ident, oracle, ok) in enumerate(
        zip(summary["identified"], summary["oracle"], summary["success"])
    ):
        print(f"ap {k}: identified {ident} oracle {oracle} {'ok' if ok else 'MISS'}")
    print(f"overhead {summary['overhead']} slots")
    print(f"superposition gap {summary['superposition_gap']:.3e}")
    return 0


def _cmd_sweep(args) -> int:
    from .harness import emit, run_sweep

    cfg = _load_config(args)
    table = run_sweep(cfg)
    emit(table, "csv", args.out)
    if args.json:
        emit(table, "json", args.json)
    if args.plots:
        emit(table, "plot", args.plots)
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return 0


def _cmd_plot(args) -> int:
    from .harness import emit, read_table

    table = read_table(args.table)
    written = emit(table, "plot", args.outdir)
    print(f"wrote {len(written)} figures to {args.outdir}")
    return 0


def _cmd_bound(args) -> int:
    from .protocol import required_rounds

    rounds = required_rounds(
        args.ms,
        args.signal_range[1],
        args.signal_range[0],
        args.noise_range[1],
        args.noise_range[0],
        args.t0,
        args.t_signal,
        args.t_noise,
    )
    print(rounds)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hmbtrain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codebook", help="build and export a polar-domain codebook")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--f-c", type=float, default=28e9, help="carrier frequency in Hz")
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--r-min", type=float, default=None)
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--far-field-only", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_codebook)

    p = sub.add_parser("multibeam", help="export hashed multi-arm beam codebooks")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--f-c", type=float, default=28e9)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--buckets", "-B", type=int, default=16)
    p.add_argument("--rounds", "-L", type=int, default=6)
    p.add_argument("--order", type=int, default=2, help="hash independence order")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--optimize", action="store_true", help="tune sub-beam phases")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_multibeam)

    p = sub.add_parser("train", help="single seeded training run")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trace", default=None, help="write a per-slot text trace here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("sweep", help="full Monte Carlo sweep to CSV")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--json", default=None)
    p.add_argument("--plots", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot", help="render figures from an existing CSV")
    p.add_argument("--table", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("bound", help="round-count bound calculator")
    p.add_argument("--ms", type=float, required=True, help="inverse target error")
    p.add_argument("--signal-range", type=float, nargs=2, default=(0.8, 1.2))
    p.add_argument("--noise-range", type=float, nargs=2, default=(0.05, 0.15))
    p.add_argument("--t0", type=float, default=0.55)
    p.add_argument("--t-signal", type=float, default=1.0)
    p.add_argument("--t-noise", type=float, default=0.1)
    p.set_defaults(func=_cmd_bound)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
