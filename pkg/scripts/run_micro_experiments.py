#!/usr/bin/env python3
"""End-to-end desk-scale experiment driver.

Emits the synthetic micro-language corpus, then runs the requested sweep
templates and prints each result table. With default settings the full
small-base + artificial-only pair of sweeps takes a few minutes on one core.

    python scripts/run_micro_experiments.py --out runs/demo
    python scripts/run_micro_experiments.py --out runs/demo --templates cross self
"""

import argparse
import logging
import statistics
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gecforge.experiments import ExperimentConfig, run_experiment
from gecforge.microlang import emit_micro_corpus
from gecforge.seq2seq import TrainConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True, help="working directory")
    parser.add_argument(
        "--templates", nargs="+", default=["small-base", "artificial-only"],
        choices=["self", "cross", "small-base", "artificial-only"],
    )
    parser.add_argument("--sizes", type=int, nargs="+", default=[0, 1000])
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    parser.add_argument("--base-pairs", type=int, default=600)
    parser.add_argument("--test-size", type=int, default=200)
    parser.add_argument("--mono-size", type=int, default=1500)
    parser.add_argument("--small-base", type=int, default=200)
    parser.add_argument("--aeg-kind", choices=["rule", "neural"], default="rule")
    parser.add_argument("--seed", type=int, default=0, help="corpus seed")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    corpus_dir = args.out / "corpus"
    paths = emit_micro_corpus(
        corpus_dir, n_train=args.base_pairs, n_test=args.test_size,
        n_mono=args.mono_size, seed=args.seed,
    )
    print(f"micro corpus under {corpus_dir}")

    gec_train = TrainConfig(
        embed_dim=16, hidden_dim=24, learning_rate=0.5, batch_size=4,
        max_epochs=60, patience=10, seed=0, beam_width=1, max_decode_len=14,
    )
    aeg_train = TrainConfig(
        embed_dim=16, hidden_dim=24, learning_rate=0.5, batch_size=4,
        max_epochs=40, patience=8, seed=0, beam_width=2, max_decode_len=14,
    )

    for template in args.templates:
        sizes = [s for s in args.sizes if s > 0] if template == "artificial-only" else args.sizes
        cfg = ExperimentConfig(
            base_corpus=paths["base"],
            monolingual_corpus=paths["mono"],
            test_corpus=paths["test"],
            output_dir=args.out / "results",
            mix_sizes=sizes,
            seeds=args.seeds,
            aeg_kind=args.aeg_kind,
            gec_train=gec_train,
            aeg_train=aeg_train,
            small_base_size=args.small_base,
        )
        print(f"\n=== template: {template} ===")
        table = run_experiment(template, cfg)
        print(table.format_pivot())
        by_size = {}
        for cell in table.cells:
            if cell.f_half is not None:
                by_size.setdefault(cell.size, []).append(cell.f_half)
        for size, values in sorted(by_size.items()):
            print(f"median F0.5 @ size {size}: {statistics.median(values):.4f}")
    print(f"\ntables written under {args.out / 'results'}")


if __name__ == "__main__":
    main()
