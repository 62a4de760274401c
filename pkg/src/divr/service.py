"""Stateless HTTP service scoring completion batches for RL trainers.

POST /v1/score takes one rollout group and returns per-completion reward
breakdowns plus group-normalized advantages; GET /v1/health reports liveness.
Each request is scored independently, so identical bodies always produce
identical responses and concurrent requests cannot interleave state.
"""
from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Mapping, Sequence

from .diversity import DiversityWeights, score_text
from .errors import EmptyTextError
from .evaluation import (
    SCOPE_FULL,
    SCOPE_THINK_ONLY,
    AnswerFormat,
    extract_answer,
    extract_role_answers,
    scope_text,
)
from .lexicon import FunctionWordLexicon, default_lexicon
from .rewards import (
    DEFAULT_ALPHAS,
    DIVERGENT,
    GroundTruth,
    accuracy_reward,
    group_advantages,
    shaped_reward,
)

log = logging.getLogger(__name__)


class BadRequest(ValueError):
    """Client-side request problem; maps to HTTP 400."""


@dataclass(frozen=True)
class ScoreRequest:
    """One rollout group to score against a single ground truth."""

    completions: tuple[str, ...]
    ground_truth: GroundTruth
    answer_format: AnswerFormat
    alphas: tuple[float, float] = DEFAULT_ALPHAS
    diversity_scope: str = SCOPE_FULL

    @classmethod
    def from_json(cls, data: Mapping) -> "ScoreRequest":
        if not isinstance(data, Mapping):
            raise BadRequest("request body must be a JSON object")
        completions = data.get("completions")
        if not isinstance(completions, list) or not completions:
            raise BadRequest("completions must be a non-empty list")
        if not all(isinstance(c, str) for c in completions):
            raise BadRequest("completions must be strings")
        try:
            truth = GroundTruth.from_json(data["ground_truth"])
            fmt = AnswerFormat.from_json(data["answer_format"])
        except KeyError as exc:
            raise BadRequest(f"missing field: {exc.args[0]}") from exc
        except Exception as exc:
            raise BadRequest(f"invalid request field: {exc}") from exc
        alphas = tuple(data.get("alphas", DEFAULT_ALPHAS))
        if len(alphas) != 2:
            raise BadRequest("alphas must hold exactly two weights")
        scope = data.get("diversity_scope", SCOPE_FULL)
        if scope not in (SCOPE_FULL, SCOPE_THINK_ONLY):
            raise BadRequest(f"unknown diversity_scope {scope!r}")
        return cls(
            completions=tuple(completions),
            ground_truth=truth,
            answer_format=fmt,
            alphas=(float(alphas[0]), float(alphas[1])),
            diversity_scope=scope,
        )


def _completion_answers(text: str, truth: GroundTruth, fmt: AnswerFormat) -> dict:
    if truth.mode == DIVERGENT:
        return extract_role_answers(text, list(truth.per_role_answers), fmt)
    return {"final": extract_answer(text, fmt)}


def score_completions(
    request: ScoreRequest,
    weights: DiversityWeights | None = None,
    lexicon: FunctionWordLexicon | None = None,
) -> dict:
    """Score one rollout group; pure function of the request."""
    lexicon = lexicon or default_lexicon()
    breakdowns = []
    for text in request.completions:
        answers = _completion_answers(text, request.ground_truth, request.answer_format)
        r_acc = accuracy_reward(answers, request.ground_truth)
        try:
            report = score_text(
                scope_text(text, request.diversity_scope), weights=weights, lexicon=lexicon
            )
            r_div = report.d_norm or 0.0
        except EmptyTextError:
            r_div = 0.0
        breakdowns.append(shaped_reward(r_acc, r_div, request.alphas))
    advantages = group_advantages([b.r_total for b in breakdowns])
    return {
        "breakdowns": [b.to_json() for b in breakdowns],
        "advantages": advantages,
    }


# ----------------------------------------------------------------------
# HTTP layer


class _Handler(BaseHTTPRequestHandler):
    server_version = "divr-reward/0.1"

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:  # noqa: N802 (stdlib casing)
        if self.path == "/v1/health":
            self._send(200, {"status": "ok"})
        else:
            self._send(404, {"error": f"unknown path {self.path}"})

    def do_POST(self) -> None:  # noqa: N802
        if self.path != "/v1/score":
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length)
            data = json.loads(raw)
        except (ValueError, TypeError):
            self._send(400, {"error": "request body is not valid JSON"})
            return
        try:
            request = ScoreRequest.from_json(data)
        except BadRequest as exc:
            self._send(400, {"error": str(exc)})
            return
        try:
            self._send(200, score_completions(request, weights=self.server.weights))
        except Exception as exc:  # internal failure contract: HTTP 500
            log.exception("scoring failed")
            self._send(500, {"error": f"{type(exc).__name__}: {exc}"})

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), fmt % args)


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128  # absorb bursts of concurrent trainer requests

    def __init__(self, address, weights: DiversityWeights | None):
        super().__init__(address, _Handler)
        self.weights = weights


class ScoringService:
    """Embeddable reward service; ``start()`` binds and serves in a thread."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        weights: DiversityWeights | None = None,
    ):
        self._server = _Server((host, port), weights)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "ScoringService":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "ScoringService":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()


def serve(host: str = "127.0.0.1", port: int = 8790, weights: DiversityWeights | None = None) -> None:
    """Run the reward service until interrupted (CLI entry point)."""
    server = _Server((host, port), weights)
    log.info("reward service listening on %s:%d", host, server.server_address[1])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


__all__ = [
    "BadRequest",
    "ScoreRequest",
    "ScoringService",
    "score_completions",
    "serve",
]
