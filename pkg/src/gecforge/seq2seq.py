"""Encoder-decoder with attention, trainable in either task direction.

A bidirectional GRU encodes the source; a single-layer GRU with dot-product
attention over projected encoder states decodes the target. The same model
trains for correction (errorful -> correct) or, with pair sides swapped, for
generation (correct -> errorful). Everything runs in double-precision numpy
with hand-written backpropagation, so analytic gradients can be checked
against finite differences and decode distributions are exactly the
softmaxes the loss saw.

Decoding goes through a small step interface (``start``/``step``), so beam
search is independent of this decoder's internals and alternative decoders
can be plugged in for search without touching training.

Training is single-threaded and deterministic per seed; a trained model is
immutable and safe to decode from concurrently.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from gecforge.corpus import ParallelPair, Provenance, Sentence

__all__ = [
    "PAD_ID",
    "BOS_ID",
    "EOS_ID",
    "UNK_ID",
    "Vocabulary",
    "Direction",
    "TrainConfig",
    "Seq2SeqModel",
    "TrainingDivergedError",
    "EpochStats",
    "BeamHypothesis",
    "StepDecoder",
    "init_model",
    "forward_loss",
    "backward",
    "train",
    "beam_search",
    "beam_search_nbest",
    "beam_search_ids",
    "greedy_decode",
    "generate_neural_corpus",
    "NeuralGenerationResult",
    "save_model",
    "load_model",
    "numeric_gradient",
]

PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
_RESERVED = ("<pad>", "<bos>", "<eos>", "<unk>")

CHECKPOINT_VERSION = 1


@dataclass
class Vocabulary:
    """Token/id bijection with fixed reserved ids 0..3."""

    tokens: list[str]
    index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if self.tokens[:4] != list(_RESERVED):
            raise ValueError(f"first four tokens must be {_RESERVED}")
        if not self.index:
            self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    @classmethod
    def build(cls, sentences: Iterable[Sentence]) -> "Vocabulary":
        seen = sorted({t for s in sentences for t in s.tokens} - set(_RESERVED))
        return cls(list(_RESERVED) + seen)

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, sentence: Sentence) -> list[int]:
        return [self.index.get(t, UNK_ID) for t in sentence.tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.tokens[i] for i in ids if i not in (PAD_ID, BOS_ID, EOS_ID)]

    def sha256(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()


class Direction(str, Enum):
    CORRECTION = "correction"
    GENERATION = "generation"


@dataclass
class TrainConfig:
    embed_dim: int = 16
    hidden_dim: int = 24
    learning_rate: float = 0.2
    batch_size: int = 16
    max_epochs: int = 30
    patience: int = 3
    seed: int = 0
    beam_width: int = 2
    max_decode_len: int = 16
    grad_clip: float = 5.0

    def __post_init__(self):
        positive = {
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "beam_width": self.beam_width,
            "max_decode_len": self.max_decode_len,
            "grad_clip": self.grad_clip,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class Seq2SeqModel:
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    embed_dim: int
    hidden_dim: int
    params: dict[str, np.ndarray]

    def check_shapes(self) -> None:
        expected = _param_shapes(
            len(self.src_vocab), len(self.tgt_vocab), self.embed_dim, self.hidden_dim
        )
        if set(expected) != set(self.params):
            raise ValueError(
                f"parameter set mismatch: {sorted(set(expected) ^ set(self.params))}"
            )
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ValueError(
                    f"{name}: expected shape {shape}, got {self.params[name].shape}"
                )
            if not np.all(np.isfinite(self.params[name])):
                raise ValueError(f"{name}: non-finite values")


def _gru_shapes(prefix: str, in_dim: int, hidden: int) -> dict[str, tuple]:
    shapes = {}
    for gate in ("z", "r", "h"):
        shapes[f"{prefix}W{gate}"] = (in_dim, hidden)
        shapes[f"{prefix}U{gate}"] = (hidden, hidden)
        shapes[f"{prefix}b{gate}"] = (hidden,)
    return shapes


def _param_shapes(vs: int, vt: int, e: int, h: int) -> dict[str, tuple]:
    shapes = {
        "src_emb": (vs, e),
        "tgt_emb": (vt, e),
        "init_W": (2 * h, h),
        "init_b": (h,),
        "att_W": (2 * h, h),
        "comb_W": (2 * h, h),
        "comb_b": (h,),
        "out_W": (h, vt),
        "out_b": (vt,),
    }
    shapes.update(_gru_shapes("ef_", e, h))
    shapes.update(_gru_shapes("eb_", e, h))
    shapes.update(_gru_shapes("d_", e, h))
    return shapes


def init_model(
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    embed_dim: int,
    hidden_dim: int,
    seed: int,
) -> Seq2SeqModel:
    """Initialize all parameters uniformly in [-0.08, 0.08], deterministically
    per seed."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in sorted(
        _param_shapes(len(src_vocab), len(tgt_vocab), embed_dim, hidden_dim).items()
    ):
        params[name] = rng.uniform(-0.08, 0.08, size=shape)
    model = Seq2SeqModel(src_vocab, tgt_vocab, embed_dim, hidden_dim, params)
    model.check_shapes()
    return model


# --------------------------------------------------------------------------
# Core math
# --------------------------------------------------------------------------


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _softmax(x, axis=-1):
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def _log_softmax(x, axis=-1):
    shifted = x - np.max(x, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


def _gru_forward(params, prefix, x, h_prev):
    z = _sigmoid(x @ params[f"{prefix}Wz"] + h_prev @ params[f"{prefix}Uz"] + params[f"{prefix}bz"])
    r = _sigmoid(x @ params[f"{prefix}Wr"] + h_prev @ params[f"{prefix}Ur"] + params[f"{prefix}br"])
    c = np.tanh(x @ params[f"{prefix}Wh"] + (r * h_prev) @ params[f"{prefix}Uh"] + params[f"{prefix}bh"])
    h = (1.0 - z) * h_prev + z * c
    return h, (x, h_prev, z, r, c)


def _gru_backward(params, prefix, cache, dh, grads):
    x, h_prev, z, r, c = cache
    dz = dh * (c - h_prev)
    dc = dh * z
    dh_prev = dh * (1.0 - z)

    dc_pre = dc * (1.0 - c * c)
    grads[f"{prefix}Wh"] += x.T @ dc_pre
    grads[f"{prefix}Uh"] += (r * h_prev).T @ dc_pre
    grads[f"{prefix}bh"] += dc_pre.sum(axis=0)
    drh = dc_pre @ params[f"{prefix}Uh"].T
    dr = drh * h_prev
    dh_prev += drh * r

    dr_pre = dr * r * (1.0 - r)
    grads[f"{prefix}Wr"] += x.T @ dr_pre
    grads[f"{prefix}Ur"] += h_prev.T @ dr_pre
    grads[f"{prefix}br"] += dr_pre.sum(axis=0)
    dh_prev += dr_pre @ params[f"{prefix}Ur"].T

    dz_pre = dz * z * (1.0 - z)
    grads[f"{prefix}Wz"] += x.T @ dz_pre
    grads[f"{prefix}Uz"] += h_prev.T @ dz_pre
    grads[f"{prefix}bz"] += dz_pre.sum(axis=0)
    dh_prev += dz_pre @ params[f"{prefix}Uz"].T

    dx = dc_pre @ params[f"{prefix}Wh"].T + dr_pre @ params[f"{prefix}Wr"].T + dz_pre @ params[f"{prefix}Wz"].T
    return dx, dh_prev


def _encode(params, src_ids: np.ndarray):
    """Run the bidirectional encoder. src_ids: (B, S) int array."""
    x = params["src_emb"][src_ids]  # (B, S, E)
    B, S, _ = x.shape
    H = params["ef_Uz"].shape[0]

    hf = np.zeros((B, H))
    fwd_states, fwd_caches = [], []
    for t in range(S):
        hf, cache = _gru_forward(params, "ef_", x[:, t], hf)
        fwd_states.append(hf)
        fwd_caches.append(cache)

    hb = np.zeros((B, H))
    bwd_states, bwd_caches = [None] * S, [None] * S
    for t in reversed(range(S)):
        hb, cache = _gru_forward(params, "eb_", x[:, t], hb)
        bwd_states[t] = hb
        bwd_caches[t] = cache

    enc = np.concatenate(
        [np.stack(fwd_states, axis=1), np.stack(bwd_states, axis=1)], axis=2
    )  # (B, S, 2H)
    proj = enc @ params["att_W"]  # (B, S, H)

    boundary = np.concatenate([fwd_states[-1], bwd_states[0]], axis=1)  # (B, 2H)
    h0_pre = boundary @ params["init_W"] + params["init_b"]
    h0 = np.tanh(h0_pre)
    return {
        "x": x,
        "src_ids": src_ids,
        "fwd_caches": fwd_caches,
        "bwd_caches": bwd_caches,
        "enc": enc,
        "proj": proj,
        "boundary": boundary,
        "h0": h0,
    }


def _attend(params, proj, h):
    """Dot-product attention of decoder state h over projected encoder
    states. Returns the combined feature and a cache."""
    scores = np.einsum("bsh,bh->bs", proj, h)
    alpha = _softmax(scores, axis=1)
    ctx = np.einsum("bs,bsh->bh", alpha, proj)
    hc = np.concatenate([h, ctx], axis=1)
    comb = np.tanh(hc @ params["comb_W"] + params["comb_b"])
    return comb, (alpha, ctx, hc, comb, h)


def _decode_step_logits(params, proj, h):
    comb, att_cache = _attend(params, proj, h)
    logits = comb @ params["out_W"] + params["out_b"]
    return logits, att_cache


def forward_loss(
    model: Seq2SeqModel,
    sources: Sequence[Sequence[int]],
    targets: Sequence[Sequence[int]],
):
    """Mean token cross-entropy of a same-length batch under teacher forcing.

    Every target sequence is scored through its end-of-sequence marker:
    loss = -(1/T) sum_t ln P(target_t | target_<t, source), averaged over
    the batch. Returns (loss, cache) where the cache feeds backward().
    """
    if len(sources) == 0 or len(sources) != len(targets):
        raise ValueError("need equal, nonzero numbers of sources and targets")
    if any(len(s) != len(sources[0]) for s in sources) or any(
        len(t) != len(targets[0]) for t in targets
    ):
        raise ValueError("forward_loss batches must be length-uniform; bucket first")
    if any(len(s) == 0 for s in sources) or any(len(t) == 0 for t in targets):
        raise ValueError("empty sequence in batch")
    src_ids = np.asarray(sources, dtype=np.int64)
    tgt_ids = np.asarray(targets, dtype=np.int64)
    if src_ids.min() < 0 or src_ids.max() >= len(model.src_vocab):
        raise ValueError("source id out of vocabulary range")
    if tgt_ids.min() < 0 or tgt_ids.max() >= len(model.tgt_vocab):
        raise ValueError("target id out of vocabulary range")

    params = model.params
    B, T = tgt_ids.shape
    enc_cache = _encode(params, src_ids)

    dec_inputs = np.concatenate(
        [np.full((B, 1), BOS_ID, dtype=np.int64), tgt_ids], axis=1
    )  # (B, T+1)
    labels = np.concatenate(
        [tgt_ids, np.full((B, 1), EOS_ID, dtype=np.int64)], axis=1
    )  # (B, T+1)

    h = enc_cache["h0"]
    steps = []
    total = 0.0
    for t in range(T + 1):
        emb = params["tgt_emb"][dec_inputs[:, t]]
        h, gru_cache = _gru_forward(params, "d_", emb, h)
        logits, att_cache = _decode_step_logits(params, enc_cache["proj"], h)
        logp = _log_softmax(logits, axis=1)
        total += -logp[np.arange(B), labels[:, t]].sum()
        steps.append((gru_cache, att_cache, logits))
    loss = total / (B * (T + 1))
    cache = {
        "enc": enc_cache,
        "steps": steps,
        "dec_inputs": dec_inputs,
        "labels": labels,
        "B": B,
        "T": T,
    }
    return loss, cache


def backward(model: Seq2SeqModel, cache) -> dict[str, np.ndarray]:
    """Gradients of the forward_loss output for every parameter."""
    params = model.params
    grads = {name: np.zeros_like(p) for name, p in params.items()}
    enc_cache = cache["enc"]
    B, T = cache["B"], cache["T"]
    scale = 1.0 / (B * (T + 1))
    proj = enc_cache["proj"]

    dproj = np.zeros_like(proj)
    dh_carry = np.zeros_like(enc_cache["h0"])
    for t in reversed(range(T + 1)):
        gru_cache, att_cache, logits = cache["steps"][t]
        alpha, ctx, hc, comb, h_t = att_cache
        labels_t = cache["labels"][:, t]

        dlogits = _softmax(logits, axis=1)
        dlogits[np.arange(B), labels_t] -= 1.0
        dlogits *= scale

        grads["out_W"] += comb.T @ dlogits
        grads["out_b"] += dlogits.sum(axis=0)
        dcomb = dlogits @ params["out_W"].T

        dhc_pre = dcomb * (1.0 - comb * comb)
        grads["comb_W"] += hc.T @ dhc_pre
        grads["comb_b"] += dhc_pre.sum(axis=0)
        dhc = dhc_pre @ params["comb_W"].T
        H = h_t.shape[1]
        dh = dhc[:, :H] + dh_carry
        dctx = dhc[:, H:]

        dalpha = np.einsum("bh,bsh->bs", dctx, proj)
        dproj += alpha[:, :, None] * dctx[:, None, :]
        dscores = alpha * (dalpha - np.sum(dalpha * alpha, axis=1, keepdims=True))
        dproj += dscores[:, :, None] * h_t[:, None, :]
        dh += np.einsum("bs,bsh->bh", dscores, proj)

        demb, dh_carry = _gru_backward(params, "d_", gru_cache, dh, grads)
        np.add.at(grads["tgt_emb"], cache["dec_inputs"][:, t], demb)

    # attention projection and encoder states
    enc = enc_cache["enc"]
    S = enc.shape[1]
    grads["att_W"] += enc.reshape(-1, enc.shape[2]).T @ dproj.reshape(-1, dproj.shape[2])
    denc = dproj @ params["att_W"].T  # (B, S, 2H)
    H = denc.shape[2] // 2

    # decoder initial state
    dh0 = dh_carry
    dh0_pre = dh0 * (1.0 - enc_cache["h0"] ** 2)
    grads["init_W"] += enc_cache["boundary"].T @ dh0_pre
    grads["init_b"] += dh0_pre.sum(axis=0)
    dboundary = dh0_pre @ params["init_W"].T

    dx = np.zeros_like(enc_cache["x"])

    dcarry = dboundary[:, :H]  # gradient into the last forward state
    for t in reversed(range(S)):
        dh_t = denc[:, t, :H] + dcarry
        dx_t, dcarry = _gru_backward(params, "ef_", enc_cache["fwd_caches"][t], dh_t, grads)
        dx[:, t] += dx_t

    dcarry = dboundary[:, H:]  # gradient into the first backward state
    for t in range(S):
        dh_t = denc[:, t, H:] + dcarry
        dx_t, dcarry = _gru_backward(params, "eb_", enc_cache["bwd_caches"][t], dh_t, grads)
        dx[:, t] += dx_t

    np.add.at(grads["src_emb"], enc_cache["src_ids"], dx)
    return grads


def numeric_gradient(
    model: Seq2SeqModel,
    sources: Sequence[Sequence[int]],
    targets: Sequence[Sequence[int]],
    name: str,
    index: tuple,
    step: float = 1e-5,
) -> float:
    """Central finite-difference derivative of the loss for one parameter
    coordinate. The independent check for backward()."""
    param = model.params[name]
    original = param[index]
    param[index] = original + step
    plus, _ = forward_loss(model, sources, targets)
    param[index] = original - step
    minus, _ = forward_loss(model, sources, targets)
    param[index] = original
    return (plus - minus) / (2.0 * step)


# --------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    dev_loss: float


def _orient(pairs: Sequence[ParallelPair], direction: Direction) -> list[tuple[Sentence, Sentence]]:
    if direction is Direction.GENERATION:
        return [(p.target, p.source) for p in pairs]
    return [(p.source, p.target) for p in pairs]


def _batches(encoded, order, batch_size):
    """Group an index order into length-uniform batches, preserving order of
    first appearance; stragglers flush at the end by bucket key."""
    buckets: dict[tuple[int, int], list[int]] = {}
    out = []
    for idx in order:
        src, tgt = encoded[idx]
        key = (len(src), len(tgt))
        bucket = buckets.setdefault(key, [])
        bucket.append(idx)
        if len(bucket) == batch_size:
            out.append(list(bucket))
            bucket.clear()
    for key in sorted(buckets):
        if buckets[key]:
            out.append(buckets[key])
    return out


def _dataset_loss(model, encoded, batch_size) -> float:
    """Mean per-pair loss over a dataset (uniform pair weighting)."""
    total = 0.0
    for batch in _batches(encoded, range(len(encoded)), batch_size):
        srcs = [encoded[i][0] for i in batch]
        tgts = [encoded[i][1] for i in batch]
        loss, _ = forward_loss(model, srcs, tgts)
        total += loss * len(batch)
    return total / len(encoded)


def train(
    pairs: Sequence[ParallelPair],
    dev_pairs: Sequence[ParallelPair],
    direction: Direction,
    config: TrainConfig,
) -> tuple[Seq2SeqModel, list[EpochStats]]:
    """Minibatch SGD with gradient-norm clipping and dev-loss early stopping.

    Builds vocabularies from the (direction-oriented) training pairs,
    initializes from config.seed, and after each epoch evaluates the dev
    loss; training stops once the dev loss has failed to improve for
    ``patience`` consecutive epochs, returning the parameters of the best
    dev epoch.
    """
    if not pairs or not dev_pairs:
        raise ValueError("need non-empty train and dev sets")
    oriented = _orient(pairs, direction)
    oriented_dev = _orient(dev_pairs, direction)
    src_vocab = Vocabulary.build([s for s, _ in oriented])
    tgt_vocab = Vocabulary.build([t for _, t in oriented])
    model = init_model(src_vocab, tgt_vocab, config.embed_dim, config.hidden_dim, config.seed)

    encoded = [(src_vocab.encode(s), tgt_vocab.encode(t)) for s, t in oriented]
    encoded_dev = [(src_vocab.encode(s), tgt_vocab.encode(t)) for s, t in oriented_dev]

    rng = random.Random(config.seed)
    history: list[EpochStats] = []
    best_dev = math.inf
    best_params = {k: v.copy() for k, v in model.params.items()}
    stale = 0

    for epoch in range(1, config.max_epochs + 1):
        order = list(range(len(encoded)))
        rng.shuffle(order)
        epoch_loss = 0.0
        for batch_no, batch in enumerate(_batches(encoded, order, config.batch_size)):
            srcs = [encoded[i][0] for i in batch]
            tgts = [encoded[i][1] for i in batch]
            loss, cache = forward_loss(model, srcs, tgts)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {batch_no}"
                )
            epoch_loss += loss * len(batch)
            grads = backward(model, cache)
            _sgd_step(model.params, grads, config.learning_rate, config.grad_clip)
        dev_loss = _dataset_loss(model, encoded_dev, config.batch_size)
        if not math.isfinite(dev_loss):
            raise TrainingDivergedError(f"non-finite dev loss after epoch {epoch}")
        history.append(EpochStats(epoch, epoch_loss / len(encoded), dev_loss))
        if dev_loss < best_dev:
            best_dev = dev_loss
            best_params = {k: v.copy() for k, v in model.params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    model.params = best_params
    return model, history


def _sgd_step(params, grads, lr, clip):
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    scale = lr if norm <= clip else lr * clip / norm
    for name, g in grads.items():
        params[name] -= scale * g


# --------------------------------------------------------------------------
# Decoding
# --------------------------------------------------------------------------


class StepDecoder(Protocol):
    """Minimal stepping interface beam search works against."""

    vocab_size: int

    def start(self):
        """Initial decoder state, already conditioned on the source."""
        ...

    def step(self, state, prev_token: int):
        """Consume the previous token; return (logp vector, new state)."""
        ...


class _ModelStepDecoder:
    """The shipped recurrent-attention decoder bound to one source."""

    def __init__(self, model: Seq2SeqModel, source_ids: Sequence[int]):
        self.model = model
        self.vocab_size = len(model.tgt_vocab)
        self._enc = _encode(model.params, np.asarray([source_ids], dtype=np.int64))

    def start(self):
        return self._enc["h0"]

    def step(self, state, prev_token: int):
        params = self.model.params
        emb = params["tgt_emb"][np.asarray([prev_token])]
        h, _ = _gru_forward(params, "d_", emb, state)
        logits, _ = _decode_step_logits(params, self._enc["proj"], h)
        return _log_softmax(logits, axis=1)[0], h


@dataclass
class BeamHypothesis:
    ids: tuple[int, ...]
    score: float
    state: object


def beam_search_ids(
    decoder: StepDecoder, beam_width: int, max_len: int
) -> list[tuple[tuple[int, ...], float]]:
    """Length-unnormalized beam search over a step decoder.

    Returns completed hypotheses sorted by cumulative log probability
    (best first, ties by id sequence). PAD and BOS are never emitted and
    EOS is masked at the first step, so hypotheses are non-empty. A
    hypothesis reaching ``max_len`` tokens is force-terminated with its
    accumulated score. beam_width=1 is greedy decoding.
    """
    if beam_width < 1 or max_len < 1:
        raise ValueError("beam width and max length must be >= 1")
    active = [BeamHypothesis((), 0.0, decoder.start())]
    completed: list[tuple[tuple[int, ...], float]] = []

    for depth in range(max_len):
        expansions = []
        for hyp_no, hyp in enumerate(active):
            prev = hyp.ids[-1] if hyp.ids else BOS_ID
            logp, state = decoder.step(hyp.state, prev)
            for token in range(decoder.vocab_size):
                if token in (PAD_ID, BOS_ID):
                    continue
                if token == EOS_ID and depth == 0:
                    continue
                expansions.append(
                    (hyp.score + float(logp[token]), hyp_no, token, state, hyp.ids)
                )
        expansions.sort(key=lambda e: (-e[0], e[1], e[2]))
        next_active = []
        for score, _, token, state, ids in expansions:
            if token == EOS_ID:
                completed.append((ids, score))
            elif len(ids) + 1 >= max_len:
                completed.append((ids + (token,), score))
            elif len(next_active) < beam_width:
                next_active.append(BeamHypothesis(ids + (token,), score, state))
        active = next_active
        if not active:
            break
        if completed and max(c[1] for c in completed) > active[0].score:
            break  # no active continuation can beat the best finished one

    completed.sort(key=lambda c: (-c[1], c[0]))
    return completed[: max(beam_width, 1)]


def beam_search_nbest(
    model: Seq2SeqModel, source: Sentence, beam_width: int, max_len: int
) -> list[tuple[Sentence, float]]:
    decoder = _ModelStepDecoder(model, model.src_vocab.encode(source))
    out = []
    for ids, score in beam_search_ids(decoder, beam_width, max_len):
        tokens = model.tgt_vocab.decode(ids)
        out.append((Sentence(tuple(tokens)), score))
    return out


def beam_search(
    model: Seq2SeqModel, source: Sentence, beam_width: int, max_len: int
) -> Sentence:
    """1-best beam decode of ``source``."""
    return beam_search_nbest(model, source, beam_width, max_len)[0][0]


def greedy_decode(model: Seq2SeqModel, source: Sentence, max_len: int) -> Sentence:
    return beam_search(model, source, beam_width=1, max_len=max_len)


@dataclass
class NeuralGenerationResult:
    pairs: list[ParallelPair] = field(default_factory=list)
    dropped: int = 0


def generate_neural_corpus(
    model: Seq2SeqModel,
    clean: Sequence[Sentence],
    config: TrainConfig,
) -> NeuralGenerationResult:
    """Decode each clean sentence through a generation-direction model into
    an errorful hypothesis; identical hypotheses are dropped and counted.
    Deterministic: beam search has no sampling."""
    result = NeuralGenerationResult()
    for sentence in clean:
        hyp = beam_search(model, sentence, config.beam_width, config.max_decode_len)
        if hyp == sentence:
            result.dropped += 1
            continue
        result.pairs.append(ParallelPair(hyp, sentence, Provenance.NEURAL))
    return result


# --------------------------------------------------------------------------
# Checkpointing
# --------------------------------------------------------------------------


def save_model(model: Seq2SeqModel, path: str | Path) -> None:
    """Self-describing checkpoint: parameter tensors plus a JSON manifest
    with dims, vocabularies, and vocabulary hashes."""
    manifest = {
        "format_version": CHECKPOINT_VERSION,
        "embed_dim": model.embed_dim,
        "hidden_dim": model.hidden_dim,
        "src_vocab": model.src_vocab.tokens,
        "tgt_vocab": model.tgt_vocab.tokens,
        "src_vocab_sha256": model.src_vocab.sha256(),
        "tgt_vocab_sha256": model.tgt_vocab.sha256(),
    }
    arrays = {f"param_{name}": value for name, value in model.params.items()}
    arrays["manifest"] = np.frombuffer(
        json.dumps(manifest).encode("utf-8"), dtype=np.uint8
    )
    np.savez(path, **arrays)


def load_model(path: str | Path) -> Seq2SeqModel:
    with np.load(path, allow_pickle=False) as data:
        manifest = json.loads(bytes(data["manifest"]).decode("utf-8"))
        if manifest["format_version"] != CHECKPOINT_VERSION:
            raise ValueError(
                f"unsupported checkpoint version {manifest['format_version']}"
            )
        src_vocab = Vocabulary(manifest["src_vocab"])
        tgt_vocab = Vocabulary(manifest["tgt_vocab"])
        for vocab, key in ((src_vocab, "src_vocab_sha256"), (tgt_vocab, "tgt_vocab_sha256")):
            if vocab.sha256() != manifest[key]:
                raise ValueError(f"vocabulary hash mismatch for {key}")
        params = {
            key[len("param_"):]: data[key]
            for key in data.files
            if key.startswith("param_")
        }
    model = Seq2SeqModel(
        src_vocab,
        tgt_vocab,
        manifest["embed_dim"],
        manifest["hidden_dim"],
        params,
    )
    model.check_shapes()
    return model
