"""Deterministic tokenization and sentence segmentation.

Tokens are lowercased; runs of word characters form one token and every
punctuation character is its own token. Sentences end after ``.``, ``!`` or
``?``; trailing tokens without a terminal form a final sentence.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import EmptyTextError

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_WORD_RE = re.compile(r"\w", re.UNICODE)

TERMINAL_PUNCTUATION = frozenset({".", "!", "?"})


@dataclass(frozen=True)
class TokenSequence:
    """Ordered lowercased tokens of one text."""

    tokens: tuple[str, ...]

    @property
    def source_length(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class SentenceSegmentation:
    """Sentences as token sublists plus their end offsets in the parent sequence."""

    sentences: tuple[tuple[str, ...], ...]
    boundaries: tuple[int, ...]  # exclusive end index of each sentence


def tokenize(text: str) -> TokenSequence:
    """Split ``text`` into lowercased word and punctuation tokens.

    Raises EmptyTextError when no token can be produced. Re-tokenizing the
    space-joined tokens yields the same sequence.
    """
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        raise EmptyTextError("text contains no tokens")
    return TokenSequence(tuple(tokens))


def is_word_token(token: str) -> bool:
    return bool(_WORD_RE.search(token))


def segment_sentences(tokens: TokenSequence) -> SentenceSegmentation:
    """Split a token sequence into sentences after terminal punctuation."""
    sentences: list[tuple[str, ...]] = []
    boundaries: list[int] = []
    start = 0
    for i, tok in enumerate(tokens.tokens):
        if tok in TERMINAL_PUNCTUATION:
            sentences.append(tokens.tokens[start : i + 1])
            boundaries.append(i + 1)
            start = i + 1
    if start < len(tokens.tokens):
        sentences.append(tokens.tokens[start:])
        boundaries.append(len(tokens.tokens))
    return SentenceSegmentation(tuple(sentences), tuple(boundaries))
