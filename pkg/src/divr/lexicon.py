"""Versioned function-word lexicon used by the function-word diversity signal."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

DEFAULT_LEXICON_VERSION = "en-1"


@dataclass(frozen=True)
class FunctionWordLexicon:
    """Fixed set of closed-class words (articles, prepositions, pronouns, ...)."""

    words: frozenset[str]
    version: str

    def __post_init__(self) -> None:
        if not self.words:
            raise ValueError("lexicon must not be empty")
        if any(w != w.lower() for w in self.words):
            raise ValueError("lexicon entries must be lowercase")

    def __contains__(self, token: str) -> bool:
        return token in self.words

    @classmethod
    def from_lines(cls, lines, version: str) -> "FunctionWordLexicon":
        words = frozenset(w.strip().lower() for w in lines if w.strip())
        return cls(words=words, version=version)

    @classmethod
    def from_file(cls, path: str | Path, version: str | None = None) -> "FunctionWordLexicon":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        return cls.from_lines(text.splitlines(), version or path.stem)


_default: FunctionWordLexicon | None = None


def default_lexicon() -> FunctionWordLexicon:
    """Load the shipped English lexicon (cached after first use)."""
    global _default
    if _default is None:
        text = resources.files("divr").joinpath("data/function_words.txt").read_text("utf-8")
        _default = FunctionWordLexicon.from_lines(text.splitlines(), DEFAULT_LEXICON_VERSION)
    return _default
