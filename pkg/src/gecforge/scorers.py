"""Sentence scorers behind one contract: total natural-log probability.

Two implementations ship: the local add-k n-gram model (always available,
used by the whole test suite) and a thin HTTP client for an external neural
scorer speaking the ``POST /score`` + ``GET /health`` protocol. When the
remote scorer is configured but not ready, ``resolve_scorer`` falls back to
the local model if one was supplied.
"""

from __future__ import annotations

import math
import os
from typing import Protocol, Sequence, runtime_checkable

import requests

from gecforge.ngram import NGramModel

SCORER_URL_ENV = "GEC_FORGE_SCORER_URL"

__all__ = [
    "LmScorer",
    "ScorerError",
    "NGramScorer",
    "HttpLmScorer",
    "resolve_scorer",
    "SCORER_URL_ENV",
]


class ScorerError(RuntimeError):
    """A scorer could not produce a log probability."""


@runtime_checkable
class LmScorer(Protocol):
    def score_sentence(self, text: str) -> float:
        """Total natural-log probability of one space-joined sentence."""
        ...

    def score_batch(self, texts: Sequence[str]) -> list[float]:
        ...


class NGramScorer:
    """LmScorer backed by a trained local n-gram model."""

    def __init__(self, model: NGramModel):
        self.model = model

    def score_sentence(self, text: str) -> float:
        tokens = text.split()
        if not tokens:
            raise ScorerError("cannot score an empty sentence")
        return self.model.logprob(tokens)

    def score_batch(self, texts: Sequence[str]) -> list[float]:
        return [self.score_sentence(t) for t in texts]


class HttpLmScorer:
    """Client for the external scoring service.

    Protocol: POST {base_url}/score with {"sentences": [...]} returns
    {"logprobs": [...]}; GET {base_url}/health returns
    {"model": "...", "ready": bool}. Requests larger than ``max_batch``
    are split client-side.
    """

    def __init__(self, base_url: str, max_batch: int = 64, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.max_batch = max_batch
        self.timeout = timeout

    def health(self) -> dict:
        try:
            resp = requests.get(f"{self.base_url}/health", timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except requests.RequestException as exc:
            raise ScorerError(f"health check failed for {self.base_url}: {exc}") from exc

    def is_ready(self) -> bool:
        try:
            return bool(self.health().get("ready"))
        except ScorerError:
            return False

    def score_batch(self, texts: Sequence[str]) -> list[float]:
        out: list[float] = []
        for start in range(0, len(texts), self.max_batch):
            chunk = list(texts[start : start + self.max_batch])
            try:
                resp = requests.post(
                    f"{self.base_url}/score",
                    json={"sentences": chunk},
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                payload = resp.json()
            except requests.RequestException as exc:
                raise ScorerError(
                    f"score request failed for batch starting at {start}: {exc}"
                ) from exc
            logprobs = payload.get("logprobs")
            if not isinstance(logprobs, list) or len(logprobs) != len(chunk):
                raise ScorerError(
                    f"bad response shape: expected {len(chunk)} logprobs, "
                    f"got {payload!r}"
                )
            for i, value in enumerate(logprobs):
                if not isinstance(value, (int, float)) or not math.isfinite(value):
                    raise ScorerError(f"non-finite logprob at batch index {start + i}")
            out.extend(float(v) for v in logprobs)
        return out

    def score_sentence(self, text: str) -> float:
        return self.score_batch([text])[0]


def resolve_scorer(
    endpoint: str | None,
    fallback: NGramModel | None = None,
) -> LmScorer:
    """Pick the scorer for a run.

    The GEC_FORGE_SCORER_URL environment variable overrides ``endpoint``.
    "local" (or no endpoint) selects the n-gram fallback. A configured remote
    scorer that is unreachable or not ready degrades to the fallback when one
    is available, otherwise raises ScorerError.
    """
    endpoint = os.environ.get(SCORER_URL_ENV) or endpoint
    if endpoint and endpoint != "local":
        remote = HttpLmScorer(endpoint)
        if remote.is_ready():
            return remote
        if fallback is None:
            raise ScorerError(
                f"scorer at {endpoint} is not ready and no local fallback is available"
            )
        return NGramScorer(fallback)
    if fallback is None:
        raise ScorerError("local scorer requested but no n-gram model supplied")
    return NGramScorer(fallback)
