"""Command-line interface for the whole toolkit.

    gecforge ingest       annotated corpus (M2) or pair TSV -> filtered pair TSV
    gecforge gen-errors   clean sentences -> artificial (errorful, clean) pairs
    gecforge train        pair TSV -> seq2seq checkpoint (either direction)
    gecforge decode       checkpoint + sentences -> corrected/errorful output
    gecforge score        hypotheses + gold M2 -> MaxMatch F0.5 report
    gecforge experiment   run a sweep template from a config file
    gecforge micro-lang   emit the synthetic micro-language corpus
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from gecforge import corpus as corpus_mod
from gecforge.confusion import default_confusion_sets, generate_corpus, parse_lexicon
from gecforge.corpus import (
    Provenance,
    filter_error_free,
    pairs_from_annotated,
    parse_m2_file,
    read_parallel_tsv,
    read_sentence_file,
    write_parallel_tsv,
)
from gecforge.experiments import TEMPLATES, load_config, run_experiment
from gecforge.m2score import score_corpus
from gecforge.microlang import emit_micro_corpus
from gecforge.ngram import train_lm
from gecforge.scorers import resolve_scorer
from gecforge.seq2seq import (
    Direction,
    TrainConfig,
    beam_search,
    beam_search_nbest,
    generate_neural_corpus,
    load_model,
    save_model,
    train,
)

logger = logging.getLogger("gecforge")


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    defaults = TrainConfig()
    parser.add_argument("--embed-dim", type=int, default=defaults.embed_dim)
    parser.add_argument("--hidden-dim", type=int, default=defaults.hidden_dim)
    parser.add_argument("--learning-rate", type=float, default=defaults.learning_rate)
    parser.add_argument("--batch-size", type=int, default=defaults.batch_size)
    parser.add_argument("--max-epochs", type=int, default=defaults.max_epochs)
    parser.add_argument("--patience", type=int, default=defaults.patience)
    parser.add_argument("--seed", type=int, default=defaults.seed)
    parser.add_argument("--beam-width", type=int, default=defaults.beam_width)
    parser.add_argument("--max-decode-len", type=int, default=defaults.max_decode_len)


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        embed_dim=args.embed_dim,
        hidden_dim=args.hidden_dim,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=args.seed,
        beam_width=args.beam_width,
        max_decode_len=args.max_decode_len,
    )


def _read_pairs(path: Path):
    if path.suffix == ".m2":
        return pairs_from_annotated(parse_m2_file(path))
    return read_parallel_tsv(path)


def cmd_ingest(args) -> int:
    pairs = _read_pairs(args.input)
    if args.provenance:
        pairs = [
            corpus_mod.ParallelPair(p.source, p.target, Provenance(args.provenance))
            for p in pairs
        ]
    before = len(pairs)
    if not args.keep_identical:
        pairs = filter_error_free(pairs)
    write_parallel_tsv(pairs, args.out)
    logger.info("ingested %d pairs (%d dropped as error-free)", len(pairs), before - len(pairs))
    return 0


def cmd_gen_errors(args) -> int:
    clean = read_sentence_file(args.input)
    if args.kind == "rule":
        sets = (
            parse_lexicon(args.lexicon.read_text(encoding="utf-8"))
            if args.lexicon
            else default_confusion_sets()
        )
        lm_corpus = read_sentence_file(args.ngram_train) if args.ngram_train else clean
        lm = train_lm(lm_corpus, order=args.ngram_order, k=args.ngram_k)
        scorer = resolve_scorer(args.scorer, fallback=lm)
        result = generate_corpus(clean, sets, scorer, args.seed, m=args.selection_m)
        pairs, skipped = result.pairs, result.skipped
        logger.info("rule generation: %d pairs, %d sentences skipped", len(pairs), skipped)
    else:
        model = load_model(args.model)
        cfg = TrainConfig(beam_width=args.beam_width, max_decode_len=args.max_decode_len)
        result = generate_neural_corpus(model, clean, cfg)
        pairs = result.pairs
        logger.info(
            "neural generation: %d pairs, %d identical hypotheses dropped",
            len(pairs), result.dropped,
        )
    write_parallel_tsv(pairs, args.out)
    return 0


def cmd_train(args) -> int:
    train_pairs = _read_pairs(args.train)
    dev_pairs = _read_pairs(args.dev)
    config = _train_config(args)
    model, history = train(train_pairs, dev_pairs, Direction(args.direction), config)
    for stats in history:
        logger.info(
            "epoch %d: train %.4f dev %.4f", stats.epoch, stats.train_loss, stats.dev_loss
        )
    save_model(model, args.out)
    logger.info("saved checkpoint to %s", args.out)
    return 0


def cmd_decode(args) -> int:
    model = load_model(args.model)
    sentences = read_sentence_file(args.input)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for sentence in sentences:
            if args.nbest > 1:
                nbest = beam_search_nbest(model, sentence, args.beam_width, args.max_len)
                for hyp, score in nbest[: args.nbest]:
                    fh.write(f"{score:.6f}\t{hyp.text()}\n")
                fh.write("\n")
            else:
                hyp = beam_search(model, sentence, args.beam_width, args.max_len)
                fh.write(hyp.text() + "\n")
    return 0


def cmd_score(args) -> int:
    hypotheses = read_sentence_file(args.hyp)
    gold = parse_m2_file(args.gold)
    report = score_corpus(hypotheses, gold, beta=args.beta, merge_window=args.merge_window)
    print(report.format_table())
    if args.json:
        args.json.write_text(json.dumps(report.to_json_dict(), indent=2), encoding="utf-8")
        logger.info("wrote JSON report to %s", args.json)
    return 0


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    only_cell = None
    if args.cell:
        try:
            size_str, seed_str = args.cell.split(",")
            only_cell = (int(size_str), int(seed_str))
        except ValueError:
            raise SystemExit(f"bad --cell {args.cell!r}; expected SIZE,SEED")
    table = run_experiment(args.template, cfg, only_cell=only_cell, write=only_cell is None)
    print(table.format_pivot())
    if only_cell is None:
        logger.info("tables written under %s", cfg.output_dir)
    return 0 if all(c.status == "ok" for c in table.cells) else 1


def cmd_micro_lang(args) -> int:
    paths = emit_micro_corpus(
        args.emit, n_train=args.train, n_test=args.test, n_mono=args.mono, seed=args.seed
    )
    for name, path in paths.items():
        logger.info("%s: %s", name, path)
    print("\n".join(str(p) for p in paths.values()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gecforge",
        description="error generation, correction training, and MaxMatch scoring",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert/filter a corpus into pair TSV")
    p.add_argument("input", type=Path, help="M2 file or pair TSV")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--provenance", choices=[v.value for v in Provenance], default=None)
    p.add_argument("--keep-identical", action="store_true",
                   help="keep pairs whose source equals their target")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gen-errors", help="generate artificial errorful pairs")
    p.add_argument("--kind", choices=["rule", "neural"], required=True)
    p.add_argument("--input", type=Path, required=True, help="clean sentences, one per line")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lexicon", type=Path, help="confusion-set lexicon (rule kind)")
    p.add_argument("--selection-m", type=int, default=5)
    p.add_argument("--ngram-train", type=Path, help="LM training sentences (default: input)")
    p.add_argument("--ngram-order", type=int, default=2)
    p.add_argument("--ngram-k", type=float, default=1.0)
    p.add_argument("--scorer", default="local", help='"local" or scoring service URL')
    p.add_argument("--model", type=Path, help="generation-direction checkpoint (neural kind)")
    p.add_argument("--beam-width", type=int, default=2)
    p.add_argument("--max-decode-len", type=int, default=24)
    p.set_defaults(func=cmd_gen_errors)

    p = sub.add_parser("train", help="train a correction or generation model")
    p.add_argument("--train", type=Path, required=True, help="training pairs (TSV or M2)")
    p.add_argument("--dev", type=Path, required=True, help="dev pairs for early stopping")
    p.add_argument("--direction", choices=[d.value for d in Direction], default="correction")
    p.add_argument("--out", type=Path, required=True, help="checkpoint path (.npz)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="decode sentences through a checkpoint")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--beam-width", type=int, default=2)
    p.add_argument("--max-len", type=int, default=24)
    p.add_argument("--nbest", type=int, default=1)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("score", help="MaxMatch F0.5 against gold M2")
    p.add_argument("--hyp", type=Path, required=True, help="hypotheses, one per line")
    p.add_argument("--gold", type=Path, required=True, help="gold M2 file")
    p.add_argument("--json", type=Path, help="also write the JSON report here")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--merge-window", type=int, default=2)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("experiment", help="run a sweep template")
    p.add_argument("--template", choices=TEMPLATES, required=True)
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--cell", help="re-run exactly one SIZE,SEED cell")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("micro-lang", help="emit the synthetic micro corpus")
    p.add_argument("--emit", type=Path, required=True, help="output directory")
    p.add_argument("--train", type=int, default=600)
    p.add_argument("--test", type=int, default=200)
    p.add_argument("--mono", type=int, default=1500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_micro_lang)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
