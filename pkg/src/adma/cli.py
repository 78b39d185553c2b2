"""Command-line front end: synthetic task generation and loop runs.

    adma gen-synth --config cfg.json --seed 7 --out data/
    adma run --manifest data/manifest.json --source data/snapshot.json \
             --strategy adma --budget 100 --batch-size 10 --out results/
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .data import SyntheticConfig, generate_synthetic_task, load_manifest, load_snapshot, write_dataset, write_snapshot
from .loop import StrategyConfig, load_checkpoint, run
from .server import serve_interactive_oracle


def _parse_layer_pairs(text: str) -> tuple[tuple[str, str], ...]:
    pairs = []
    for part in text.split(","):
        early, _, late = part.partition(":")
        if not early or not late:
            raise argparse.ArgumentTypeError(
                f"layer pair must look like EARLY:LATE, got {part!r}"
            )
        pairs.append((early.strip(), late.strip()))
    return tuple(pairs)


def _parse_lambda(text: str):
    if text == "auto":
        return None
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("lambda must be positive or 'auto'")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adma", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-synth", help="generate a synthetic transfer task")
    gen.add_argument("--config", type=Path, default=None,
                     help="JSON file of generator settings (defaults used if omitted)")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", type=Path, required=True)

    runp = sub.add_parser("run", help="run the active adaptation loop")
    runp.add_argument("--manifest", type=Path, required=True)
    runp.add_argument("--source", type=Path, required=True,
                      help="source snapshot JSON (centers or raw source exports)")
    runp.add_argument("--strategy", default="adma",
                      choices=["adma", "adma2", "random", "uncertainty_only",
                               "distinctiveness_only"])
    runp.add_argument("--alpha", default="predict", choices=["predict", "distance"])
    runp.add_argument("--batch-size", type=int, default=10)
    runp.add_argument("--budget", type=int, default=100)
    runp.add_argument("--lambda", dest="lam", type=_parse_lambda, default=None,
                      metavar="X|auto", help="trade-off rate; 'auto' = 1/iterations")
    runp.add_argument("--uncertainty", default="gini", choices=["gini", "literal"])
    runp.add_argument("--multi", default="mean", choices=["mean", "variance"])
    runp.add_argument("--seed", type=int, default=0)
    runp.add_argument("--oracle", default="simulated", choices=["simulated", "http"])
    runp.add_argument("--bind", default="127.0.0.1:8765", metavar="ADDR:PORT")
    runp.add_argument("--out", type=Path, required=True)
    runp.add_argument("--target-accuracy", type=float, default=None)
    runp.add_argument("--resume", type=Path, default=None, metavar="CHECKPOINT")
    runp.add_argument("--layer-pairs", type=_parse_layer_pairs, default=None,
                      metavar="A:B[,A2:B]")
    runp.add_argument("--test-fraction", type=float, default=0.3)
    runp.add_argument("--static", type=Path, default=None,
                      help="directory of console assets to serve at /")
    runp.add_argument("--timeout", type=float, default=None,
                      help="seconds to wait for each http-labeled batch")
    runp.add_argument("--workers", type=int, default=1)
    return parser


def cmd_gen_synth(args) -> int:
    config = SyntheticConfig() if args.config is None else SyntheticConfig.from_json(args.config)
    dataset, snapshot = generate_synthetic_task(config, seed=args.seed)
    manifest = write_dataset(dataset, args.out)
    snap = write_snapshot(snapshot, args.out)
    print(f"wrote {manifest}")
    print(f"wrote {snap}")
    print(f"{dataset.n_instances} instances, K_source={dataset.K_source}, "
          f"K_target={dataset.K_target}, dims A={dataset.dim_A} B={dataset.dim_B}")
    return 0


def cmd_run(args) -> int:
    dataset = load_manifest(args.manifest)
    snapshot = load_snapshot(args.source)

    resume_state = None
    if args.resume is not None:
        resume_state, config = load_checkpoint(args.resume)
        print(f"resuming at iteration {resume_state.t} "
              f"({resume_state.queried}/{config.budget} labels)")
    else:
        layer_pairs = args.layer_pairs
        if layer_pairs is None:
            layer_pairs = (("A", "B"), ("A2", "B")) if args.strategy == "adma2" else (("A", "B"),)
        config = StrategyConfig(
            strategy=args.strategy,
            alpha_mode=args.alpha,
            layer_pairs=layer_pairs,
            batch_size=args.batch_size,
            budget=args.budget,
            lam=args.lam,
            uncertainty_mode=args.uncertainty,
            multi_mode=args.multi,
            seed=args.seed,
            test_fraction=args.test_fraction,
            target_accuracy=args.target_accuracy,
        )
    config.validate()

    oracle = None
    http_server = None
    if args.oracle == "http":
        oracle, http_server = serve_interactive_oracle(
            args.bind,
            K_target=dataset.K_target,
            class_names=dataset.class_names,
            static_dir=args.static,
            timeout=args.timeout,
        )
        print(f"labeling service listening on http://{args.bind}/")

    try:
        state, curve = run(
            dataset,
            snapshot,
            config,
            oracle=oracle,
            workers=args.workers,
            out_dir=args.out,
            resume_state=resume_state,
        )
    finally:
        if http_server is not None:
            http_server.shutdown()

    if state.suspended:
        print(f"suspended after {state.queried} labels; "
              f"resume with --resume {args.out / 'checkpoint.json'}")
        return 3
    if curve:
        last = curve[-1]
        print(f"done: {state.queried} labels over {state.t} iterations, "
              f"accuracy {last.accuracy:.4f}, macro AUC {last.macro_auc:.4f}")
    print(f"outputs in {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-synth":
            return cmd_gen_synth(args)
        return cmd_run(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
