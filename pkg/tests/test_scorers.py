import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from gecforge.corpus import Sentence
from gecforge.ngram import train_lm
from gecforge.scorers import (
    SCORER_URL_ENV,
    HttpLmScorer,
    NGramScorer,
    ScorerError,
    resolve_scorer,
)


def toy_model():
    return train_lm([Sentence.from_text(t) for t in ("a b", "a b", "a c")], order=2)


class _StubHandler(BaseHTTPRequestHandler):
    """Minimal stand-in for the external scoring service."""

    ready = True
    fail_score = False
    batch_sizes: list[int] = []

    def log_message(self, *args):
        pass

    def do_GET(self):
        if self.path == "/health":
            self._reply(200, {"model": "stub-lm", "ready": type(self).ready})
        else:
            self._reply(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/score":
            self._reply(404, {"error": "not found"})
            return
        if type(self).fail_score:
            self._reply(500, {"error": "model exploded"})
            return
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        sentences = body["sentences"]
        type(self).batch_sizes.append(len(sentences))
        self._reply(200, {"logprobs": [-float(len(s.split())) for s in sentences]})

    def _reply(self, status, payload):
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture()
def stub_server():
    _StubHandler.ready = True
    _StubHandler.fail_score = False
    _StubHandler.batch_sizes = []
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
    thread.join()


class TestNGramScorer:
    def test_scores_match_model(self):
        model = toy_model()
        scorer = NGramScorer(model)
        assert scorer.score_sentence("a b") == model.logprob(["a", "b"])

    def test_batch_matches_singles(self):
        scorer = NGramScorer(toy_model())
        texts = ["a b", "a c", "zzz"]
        assert scorer.score_batch(texts) == [scorer.score_sentence(t) for t in texts]

    def test_empty_sentence_rejected(self):
        with pytest.raises(ScorerError):
            NGramScorer(toy_model()).score_sentence("   ")


class TestHttpLmScorer:
    def test_health(self, stub_server):
        scorer = HttpLmScorer(stub_server)
        assert scorer.health() == {"model": "stub-lm", "ready": True}
        assert scorer.is_ready()

    def test_score_batch_order_and_values(self, stub_server):
        scorer = HttpLmScorer(stub_server)
        assert scorer.score_batch(["a b c", "d", "e f"]) == [-3.0, -1.0, -2.0]

    def test_client_side_chunking(self, stub_server):
        scorer = HttpLmScorer(stub_server, max_batch=4)
        out = scorer.score_batch([f"w{i}" for i in range(10)])
        assert out == [-1.0] * 10
        assert _StubHandler.batch_sizes == [4, 4, 2]

    def test_server_error_raises_scorer_error(self, stub_server):
        _StubHandler.fail_score = True
        with pytest.raises(ScorerError):
            HttpLmScorer(stub_server).score_sentence("a b")

    def test_unreachable_raises(self):
        scorer = HttpLmScorer("http://127.0.0.1:1", timeout=0.2)
        with pytest.raises(ScorerError):
            scorer.score_sentence("a")
        assert not scorer.is_ready()


class TestResolveScorer:
    def test_local_uses_fallback_model(self, monkeypatch):
        monkeypatch.delenv(SCORER_URL_ENV, raising=False)
        scorer = resolve_scorer("local", fallback=toy_model())
        assert isinstance(scorer, NGramScorer)

    def test_local_without_model_rejected(self, monkeypatch):
        monkeypatch.delenv(SCORER_URL_ENV, raising=False)
        with pytest.raises(ScorerError):
            resolve_scorer("local", fallback=None)

    def test_remote_selected_when_ready(self, stub_server, monkeypatch):
        monkeypatch.delenv(SCORER_URL_ENV, raising=False)
        scorer = resolve_scorer(stub_server, fallback=toy_model())
        assert isinstance(scorer, HttpLmScorer)

    def test_not_ready_falls_back(self, stub_server, monkeypatch):
        monkeypatch.delenv(SCORER_URL_ENV, raising=False)
        _StubHandler.ready = False
        scorer = resolve_scorer(stub_server, fallback=toy_model())
        assert isinstance(scorer, NGramScorer)

    def test_not_ready_without_fallback_raises(self, stub_server, monkeypatch):
        monkeypatch.delenv(SCORER_URL_ENV, raising=False)
        _StubHandler.ready = False
        with pytest.raises(ScorerError):
            resolve_scorer(stub_server, fallback=None)

    def test_env_var_overrides_endpoint(self, stub_server, monkeypatch):
        monkeypatch.setenv(SCORER_URL_ENV, stub_server)
        scorer = resolve_scorer("local", fallback=toy_model())
        assert isinstance(scorer, HttpLmScorer)
        assert scorer.base_url == stub_server
