"""Experiment orchestration: config files, result tables, sweep templates.

Four templates cover the standard questions about artificial-error data:

  self             train the error generator on the base corpus, add its
                   output to the base at each mix size, retrain, score
  cross            one fixed generator (rule or neural) feeds every mix size
  small-base       like cross but correction starts from a small base slice
                   while the generator still uses the full base
  artificial-only  correction trained purely on generated pairs

Every (size, seed) cell trains a correction model from scratch, decodes the
held-out test set, and records its MaxMatch F0.5. Cells fail in isolation;
a failed cell is recorded, not fatal. Identical configs produce
byte-identical result tables, and any single cell can be reproduced alone.
"""

from __future__ import annotations

import configparser
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

from gecforge.confusion import (
    default_confusion_sets,
    generate_corpus,
    parse_lexicon,
)
from gecforge.corpus import (
    DatasetMix,
    ParallelPair,
    Sentence,
    filter_error_free,
    mix_datasets,
    pairs_from_annotated,
    parse_m2_file,
    read_parallel_tsv,
    read_sentence_file,
)
from gecforge.m2score import score_corpus
from gecforge.ngram import train_lm
from gecforge.scorers import resolve_scorer
from gecforge.seq2seq import (
    Direction,
    TrainConfig,
    beam_search,
    generate_neural_corpus,
    train,
)

logger = logging.getLogger(__name__)

GEC_TAG = "rnn-attn"
TEMPLATES = ("self", "cross", "small-base", "artificial-only")

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultCell",
    "ResultTable",
    "load_config",
    "parse_config_text",
    "run_experiment",
    "run_exp_self_paired",
    "run_exp_cross_paired",
    "run_exp_small_base",
    "run_exp_artificial_only",
    "GEC_TAG",
    "TEMPLATES",
]


class ConfigError(ValueError):
    pass


_TRAIN_KEYS = {
    "embed_dim": int,
    "hidden_dim": int,
    "learning_rate": float,
    "batch_size": int,
    "max_epochs": int,
    "patience": int,
    "seed": int,
    "beam_width": int,
    "max_decode_len": int,
    "grad_clip": float,
}

_SCHEMA: dict[str, dict[str, type]] = {
    "data": {
        "base_corpus": str,
        "monolingual_corpus": str,
        "test_corpus": str,
        "small_base_size": int,
    },
    "aeg": {
        "kind": str,
        "lexicon": str,
        "selection_m": int,
        "ngram_order": int,
        "ngram_k": float,
        "seed": int,
    },
    "aeg_train": _TRAIN_KEYS,
    "gec_train": _TRAIN_KEYS,
    "experiment": {
        "mix_sizes": str,
        "seeds": str,
        "scorer": str,
        "output_dir": str,
        "dev_fraction": float,
    },
}

_REQUIRED = {
    "data": ("base_corpus", "monolingual_corpus", "test_corpus"),
    "experiment": ("mix_sizes", "seeds", "output_dir"),
}


@dataclass
class ExperimentConfig:
    base_corpus: Path
    monolingual_corpus: Path
    test_corpus: Path
    output_dir: Path
    mix_sizes: list[int]
    seeds: list[int]
    aeg_kind: str = "rule"
    scorer: str = "local"
    gec_train: TrainConfig = field(default_factory=TrainConfig)
    aeg_train: TrainConfig = field(default_factory=TrainConfig)
    small_base_size: int = 200
    dev_fraction: float = 0.1
    lexicon: Path | None = None
    selection_m: int = 5
    ngram_order: int = 2
    ngram_k: float = 1.0
    aeg_seed: int = 0

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if not self.mix_sizes:
            raise ConfigError("mix_sizes must be non-empty")
        if any(s < 0 for s in self.mix_sizes):
            raise ConfigError("mix sizes must be non-negative")
        if list(self.mix_sizes) != sorted(set(self.mix_sizes)):
            raise ConfigError("mix_sizes must be strictly ascending")
        if self.aeg_kind not in ("rule", "neural"):
            raise ConfigError(f"unknown aeg kind {self.aeg_kind!r}")
        if not 0.0 < self.dev_fraction <= 0.5:
            raise ConfigError("dev_fraction must be in (0, 0.5]")
        if self.small_base_size < 1:
            raise ConfigError("small_base_size must be >= 1")


def _parse_int_list(raw: str, what: str) -> list[int]:
    try:
        return [int(x) for x in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"bad {what}: {raw!r}") from None


def parse_config_text(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Parse the sectioned key/value experiment config. Unknown sections or
    keys are errors; paths resolve relative to the config file location."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if not parser.has_option(section, key):
                raise ConfigError(f"missing required key {key!r} in section [{section}]")

    base_dir = base_dir or Path.cwd()

    def value(section, key, cast, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key).strip()
        if raw == "":
            return default
        try:
            return cast(raw)
        except ValueError:
            raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from None

    def path(section, key, default=None):
        raw = value(section, key, str, None)
        return (base_dir / raw) if raw is not None else default

    def train_config(section) -> TrainConfig:
        kwargs = {}
        for key, cast in _TRAIN_KEYS.items():
            v = value(section, key, cast)
            if v is not None:
                kwargs[key] = v
        try:
            return TrainConfig(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"[{section}]: {exc}") from exc

    try:
        return ExperimentConfig(
            base_corpus=path("data", "base_corpus"),
            monolingual_corpus=path("data", "monolingual_corpus"),
            test_corpus=path("data", "test_corpus"),
            small_base_size=value("data", "small_base_size", int, 200),
            aeg_kind=value("aeg", "kind", str, "rule"),
            lexicon=path("aeg", "lexicon"),
            selection_m=value("aeg", "selection_m", int, 5),
            ngram_order=value("aeg", "ngram_order", int, 2),
            ngram_k=value("aeg", "ngram_k", float, 1.0),
            aeg_seed=value("aeg", "seed", int, 0),
            aeg_train=train_config("aeg_train"),
            gec_train=train_config("gec_train"),
            mix_sizes=_parse_int_list(parser.get("experiment", "mix_sizes"), "mix_sizes"),
            seeds=_parse_int_list(parser.get("experiment", "seeds"), "seeds"),
            scorer=value("experiment", "scorer", str, "local"),
            output_dir=path("experiment", "output_dir"),
            dev_fraction=value("experiment", "dev_fraction", float, 0.1),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), base_dir=path.parent)


# --------------------------------------------------------------------------
# Result tables
# --------------------------------------------------------------------------


@dataclass
class ResultCell:
    gec_model: str
    aeg_model: str
    size: int
    seed: int
    status: str  # "ok" | "failed"
    f_half: float | None
    note: str = ""


@dataclass
class ResultTable:
    template: str
    cells: list[ResultCell] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def sorted_cells(self) -> list[ResultCell]:
        return sorted(self.cells, key=lambda c: (c.gec_model, c.aeg_model, c.size, c.seed))

    def to_tsv(self) -> str:
        lines = [f"# template={self.template}"]
        lines += [f"# note={n}" for n in self.notes]
        lines.append("gec_model\taeg_model\tsize\tseed\tstatus\tf_half\tnote")
        for c in self.sorted_cells():
            f = f"{c.f_half:.6f}" if c.f_half is not None else ""
            lines.append(
                f"{c.gec_model}\t{c.aeg_model}\t{c.size}\t{c.seed}\t{c.status}\t{f}\t{c.note}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> "ResultTable":
        template, notes, cells = "", [], []
        header_seen = False
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("# template="):
                template = line[len("# template="):]
            elif line.startswith("# note="):
                notes.append(line[len("# note="):])
            elif not header_seen:
                header_seen = True  # column header
            else:
                g, a, size, seed, status, f, note = line.split("\t")
                cells.append(
                    ResultCell(g, a, int(size), int(seed), status,
                               float(f) if f else None, note)
                )
        return cls(template, cells, notes)

    def to_json(self) -> str:
        return json.dumps(
            {
                "template": self.template,
                "notes": self.notes,
                "cells": [vars(c) for c in self.sorted_cells()],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        payload = json.loads(text)
        cells = [ResultCell(**c) for c in payload["cells"]]
        return cls(payload["template"], cells, payload["notes"])

    def format_pivot(self) -> str:
        """Paper-table-shaped view: one row per (gec, aeg) pair and seed,
        mix sizes as columns."""
        sizes = sorted({c.size for c in self.cells})
        by_row: dict[tuple[str, str, int], dict[int, ResultCell]] = {}
        for c in self.cells:
            by_row.setdefault((c.gec_model, c.aeg_model, c.seed), {})[c.size] = c
        header = ["gec_model", "aeg_model", "seed"] + [str(s) for s in sizes]
        rows = [header]
        for key in sorted(by_row):
            row = [key[0], key[1], str(key[2])]
            for s in sizes:
                cell = by_row[key].get(s)
                if cell is None:
                    row.append("-")
                elif cell.f_half is None:
                    row.append("FAIL")
                else:
                    row.append(f"{cell.f_half:.4f}")
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        return "\n".join(
            "  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows
        )

    def write(self, out_dir: Path) -> dict[str, Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = self.template.replace("-", "_")
        paths = {
            "tsv": out_dir / f"{stem}.tsv",
            "json": out_dir / f"{stem}.json",
            "pivot": out_dir / f"{stem}.txt",
        }
        paths["tsv"].write_text(self.to_tsv(), encoding="utf-8")
        paths["json"].write_text(self.to_json(), encoding="utf-8")
        paths["pivot"].write_text(self.format_pivot() + "\n", encoding="utf-8")
        return paths


# --------------------------------------------------------------------------
# Pipeline stages
# --------------------------------------------------------------------------


def _load_pairs(path: Path) -> list[ParallelPair]:
    if path.suffix == ".m2":
        pairs = pairs_from_annotated(parse_m2_file(path))
    else:
        pairs = read_parallel_tsv(path)
    return filter_error_free(pairs)


def _split_dev(pairs: Sequence[ParallelPair], fraction: float):
    n_dev = max(1, int(len(pairs) * fraction))
    if n_dev >= len(pairs):
        raise ConfigError(f"cannot carve a dev set from {len(pairs)} pairs")
    return list(pairs[:-n_dev]), list(pairs[-n_dev:])


def _build_pool(cfg: ExperimentConfig, kind: str, base_pairs, mono) -> list[ParallelPair]:
    if kind == "rule":
        sets = (
            parse_lexicon(cfg.lexicon.read_text(encoding="utf-8"))
            if cfg.lexicon
            else default_confusion_sets()
        )
        lm = train_lm(mono, order=cfg.ngram_order, k=cfg.ngram_k)
        scorer = resolve_scorer(cfg.scorer, fallback=lm)
        result = generate_corpus(mono, sets, scorer, cfg.aeg_seed, m=cfg.selection_m)
        logger.info("rule AEG: %d pairs, %d skipped", len(result.pairs), result.skipped)
        return result.pairs
    train_pairs, dev_pairs = _split_dev(base_pairs, cfg.dev_fraction)
    model, history = train(train_pairs, dev_pairs, Direction.GENERATION, cfg.aeg_train)
    logger.info("neural AEG trained: %d epochs", len(history))
    result = generate_neural_corpus(model, mono, cfg.aeg_train)
    logger.info("neural AEG: %d pairs, %d dropped", len(result.pairs), result.dropped)
    if not result.pairs:
        logger.warning("neural AEG collapsed to identity: empty artificial pool")
    return result.pairs


def _run_cell(cfg, base_pairs, pool, size, seed, test_gold) -> float:
    mixed = mix_datasets(DatasetMix(list(base_pairs), list(pool), size, seed))
    train_pairs, dev_pairs = _split_dev(mixed, cfg.dev_fraction)
    cell_cfg = replace(cfg.gec_train, seed=cfg.gec_train.seed + seed)
    model, _ = train(train_pairs, dev_pairs, Direction.CORRECTION, cell_cfg)
    hypotheses = [
        beam_search(model, asent.source, cell_cfg.beam_width, cell_cfg.max_decode_len)
        for asent in test_gold
    ]
    return score_corpus(hypotheses, test_gold).f_half


@dataclass
class _Plan:
    """Everything a sweep needs: which pairs feed correction training, which
    feed the generator, and which generator kind to use."""

    aeg_kind: str
    gec_base: list[ParallelPair]
    aeg_tag: str


def _plan(template: str, cfg: ExperimentConfig, base_pairs) -> _Plan:
    if template == "self":
        return _Plan("neural", list(base_pairs), "neural")
    if template == "cross":
        return _Plan(cfg.aeg_kind, list(base_pairs), cfg.aeg_kind)
    if template == "small-base":
        if cfg.small_base_size > len(base_pairs):
            raise ConfigError(
                f"small_base_size {cfg.small_base_size} exceeds base corpus "
                f"({len(base_pairs)} pairs)"
            )
        return _Plan(cfg.aeg_kind, list(base_pairs[: cfg.small_base_size]), cfg.aeg_kind)
    if template == "artificial-only":
        if 0 in cfg.mix_sizes:
            raise ConfigError(
                "artificial-only runs need at least one artificial pair per "
                "cell; drop size 0 from mix_sizes"
            )
        return _Plan(cfg.aeg_kind, [], cfg.aeg_kind)
    raise ConfigError(f"unknown template {template!r}; choose from {TEMPLATES}")


def _sweep(
    template: str,
    cfg: ExperimentConfig,
    only_cell: tuple[int, int] | None = None,
) -> ResultTable:
    table = ResultTable(template=template)
    base_pairs = _load_pairs(cfg.base_corpus)
    test_gold = parse_m2_file(cfg.test_corpus)
    mono = read_sentence_file(cfg.monolingual_corpus)

    plan = _plan(template, cfg, base_pairs)
    cells = [
        (size, seed)
        for size in cfg.mix_sizes
        for seed in cfg.seeds
        if only_cell is None or (size, seed) == only_cell
    ]
    if only_cell is not None and not cells:
        raise ConfigError(f"cell {only_cell} is not in the configured sweep")

    try:
        pool = _build_pool(cfg, plan.aeg_kind, base_pairs, mono)
    except Exception as exc:  # noqa: BLE001 - every cell records the failure
        logger.exception("artificial pool construction failed")
        for size, seed in cells:
            table.cells.append(
                ResultCell(GEC_TAG, plan.aeg_tag, size, seed, "failed", None,
                           f"pool: {exc}")
            )
        return table

    if not pool:
        table.notes.append("artificial pool is empty; only size-0 cells can run")

    for size, seed in cells:
        logger.info("[%s] cell size=%d seed=%d", template, size, seed)
        try:
            f_half = _run_cell(cfg, plan.gec_base, pool, size, seed, test_gold)
            table.cells.append(
                ResultCell(GEC_TAG, plan.aeg_tag, size, seed, "ok", f_half)
            )
        except Exception as exc:  # noqa: BLE001 - cell isolation by contract
            logger.exception("cell size=%d seed=%d failed", size, seed)
            table.cells.append(
                ResultCell(GEC_TAG, plan.aeg_tag, size, seed, "failed", None, str(exc))
            )
    if template == "artificial-only":
        table.notes.append(
            "no real pairs used; compare against the small-base run at the "
            "same sizes"
        )
    return table


def run_exp_self_paired(cfg: ExperimentConfig, only_cell=None) -> ResultTable:
    """Correction data comes from the generator trained on the same base
    corpus (generation direction), the self-paired setup."""
    return _sweep("self", cfg, only_cell)


def run_exp_cross_paired(cfg: ExperimentConfig, aeg_source: str | None = None, only_cell=None) -> ResultTable:
    """One generator's output, rule or neural, shared across every mix size."""
    if aeg_source is not None:
        cfg = replace(cfg, aeg_kind=aeg_source)
    return _sweep("cross", cfg, only_cell)


def run_exp_small_base(cfg: ExperimentConfig, only_cell=None) -> ResultTable:
    """Correction starts from a small slice of the base corpus; the
    generator still uses the full base."""
    return _sweep("small-base", cfg, only_cell)


def run_exp_artificial_only(cfg: ExperimentConfig, only_cell=None) -> ResultTable:
    """Correction trained on artificial pairs alone."""
    return _sweep("artificial-only", cfg, only_cell)


_RUNNERS: dict[str, Callable] = {
    "self": run_exp_self_paired,
    "cross": run_exp_cross_paired,
    "small-base": run_exp_small_base,
    "artificial-only": run_exp_artificial_only,
}


def run_experiment(
    template: str,
    cfg: ExperimentConfig,
    only_cell: tuple[int, int] | None = None,
    write: bool = True,
) -> ResultTable:
    if template not in _RUNNERS:
        raise ConfigError(f"unknown template {template!r}; choose from {TEMPLATES}")
    table = _RUNNERS[template](cfg, only_cell=only_cell)
    if write and only_cell is None:
        table.write(cfg.output_dir)
    return table
