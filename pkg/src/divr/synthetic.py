"""Offline stand-in model: a transport whose replies are content-hash driven.

Used by the CLI's ``--transport synthetic`` mode so the whole pipeline runs
without network access and produces byte-identical output for a fixed seed.
Replies are derived from SHA-256 of the request content, never from Python's
randomized string hashing, so they are stable across processes.
"""
from __future__ import annotations

import hashlib
import re

from .prompts import ALLOWED_ANSWERS_PREFIX, ROLE_LIST_MARKER

ROLE_POOL = (
    "Economist",
    "Teacher",
    "Parent",
    "Student",
    "Ethicist",
    "Historian",
    "Software engineer",
    "Nurse",
    "Judge",
    "Journalist",
    "Farmer",
    "Psychologist",
)

_THOUGHT_POOL = (
    "Okay, let me weigh the context carefully before deciding.",
    "The stated options pull in different directions here.",
    "Is there a hidden assumption in how the question is framed?",
    "From this angle the trade-offs look quite different!",
    "A practical reading suggests one option fits the evidence best.",
    "There are social consequences that the literal reading misses.",
    "What would change my mind about this interpretation?",
    "The wording hints at a familiar pattern from similar cases.",
    "Still, the counterargument deserves an honest look.",
    "On balance the evidence points one way more than the other.",
)

_ALLOWED_RE = re.compile(rf"{re.escape(ALLOWED_ANSWERS_PREFIX)}([^\n]+)")


def _digest(*parts: str) -> int:
    joined = "\x1f".join(parts)
    return int.from_bytes(hashlib.sha256(joined.encode("utf-8")).digest()[:8], "big")


class SyntheticTransport:
    """Deterministic mock endpoint for chat completions and embeddings."""

    def __init__(self, seed: int = 0, embedding_dim: int = 32, n_roles: int = 3):
        self.seed = str(seed)
        self.embedding_dim = embedding_dim
        self.n_roles = n_roles
        self.calls = 0

    # -- chat ----------------------------------------------------------

    def _pick_roles(self, prompt: str) -> list[str]:
        h = _digest(self.seed, "roles", prompt)
        picked = []
        pool = list(ROLE_POOL)
        for i in range(min(self.n_roles, len(pool))):
            idx = (h >> (8 * i)) % len(pool)
            picked.append(pool.pop(idx))
        return picked

    def _answer_token(self, prompt: str, prefix: str) -> str | None:
        match = _ALLOWED_RE.search(prompt)
        if not match:
            return None
        tokens = [t.strip() for t in match.group(1).split(",") if t.strip()]
        if not tokens:
            return None
        return tokens[_digest(self.seed, "answer", prompt, prefix) % len(tokens)]

    def _marker(self, prompt: str, token: str) -> str:
        if "**X. answer**" in prompt:
            return f"**{token}. answer**"
        if "**(X) answer**" in prompt:
            return f"**({token}) answer**"
        return f"**{token}**"

    def _think_body(self, prompt: str, prefix: str) -> str:
        h = _digest(self.seed, "think", prompt, prefix)
        count = 2 + h % 3
        picked = []
        for i in range(count):
            picked.append(_THOUGHT_POOL[(h >> (8 * (i + 1))) % len(_THOUGHT_POOL)])
        return " ".join(picked)

    def _chat(self, payload: dict) -> dict:
        prompt = payload["messages"][0]["content"]
        prefix = payload["messages"][-1]["content"]
        if ROLE_LIST_MARKER in prompt:
            text = f"[{', '.join(self._pick_roles(prompt))}]"
        else:
            token = self._answer_token(prompt, prefix)
            answer = (
                f" The final answer is {self._marker(prompt, token)}."
                if token
                else " I cannot determine a final answer."
            )
            if "</think>" in prefix:
                text = answer.lstrip()
            else:
                text = f"{self._think_body(prompt, prefix)}</think>{answer}"
        return {"choices": [{"message": {"content": text}}]}

    # -- embeddings ----------------------------------------------------

    def _vector(self, text: str) -> list[float]:
        raw = hashlib.sha256(f"{self.seed}|embed|{text}".encode("utf-8")).digest()
        while len(raw) < self.embedding_dim:
            raw = raw + hashlib.sha256(raw).digest()
        values = [raw[i] / 255.0 * 2.0 - 1.0 for i in range(self.embedding_dim)]
        norm = sum(v * v for v in values) ** 0.5
        return [v / norm for v in values]

    def post_json(self, path: str, payload: dict) -> dict:
        self.calls += 1
        if path.endswith("/chat/completions"):
            return self._chat(payload)
        if path.endswith("/embeddings"):
            return {"data": [{"embedding": self._vector(t)} for t in payload["input"]]}
        raise AssertionError(f"unexpected path {path}")
