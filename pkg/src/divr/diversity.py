"""Composite text-diversity scoring.

Eight sub-scores, each in [0, 1]:

- ``lex``   type-token ratio: distinct tokens / total tokens.
- ``ent``   Shannon entropy of token frequencies, normalized by log(vocab size).
- ``len``   sentence-length spread: cv / (1 + cv) with cv = population std / mean.
- ``pat``   entropy of the sentence-class distribution (declarative ``.``,
            interrogative ``?``, exclamatory ``!``, fragment) normalized by log 4.
- ``adj``   mean Jaccard distance between word-token sets of adjacent sentences.
- ``yule``  exp(-K / 200) with Yule's K = 1e4 * (sum_m m^2*V(m) - N) / N^2.
- ``bi``    distinct bigrams / total bigrams (1.0 below two tokens).
- ``func``  entropy of function-word frequencies, normalized by log of the
            number of distinct function words present.

The combined score is a weighted sum; by default the lex/ent/pat/bi group
weighs 0.15 each and the len/adj/yule/func group 0.10 each. The
length-normalized score multiplies the combined score by
``token_count / (token_count + L0)`` so short outputs cannot claim full credit.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, replace

from .errors import InvalidParameterError, InvalidWeightsError
from .lexicon import FunctionWordLexicon, default_lexicon
from .tokenization import (
    TERMINAL_PUNCTUATION,
    TokenSequence,
    is_word_token,
    segment_sentences,
    tokenize,
)

SIMPLEX_TOLERANCE = 1e-9
DEFAULT_LENGTH_SCALE = 100.0

#: Canonical sub-score order used for JSON keys, weight vectors and reports.
SUB_SCORE_NAMES = ("lex", "ent", "len", "pat", "adj", "yule", "bi", "func")


@dataclass(frozen=True)
class DiversityWeights:
    """Weights of the eight sub-scores; non-negative, summing to 1."""

    w_lex: float = 0.15
    w_ent: float = 0.15
    w_len: float = 0.10
    w_pat: float = 0.15
    w_adj: float = 0.10
    w_yule: float = 0.10
    w_bi: float = 0.15
    w_func: float = 0.10

    def __post_init__(self) -> None:
        vec = self.as_tuple()
        if any(w < 0.0 for w in vec):
            raise InvalidWeightsError(f"negative weight in {vec}")
        total = math.fsum(vec)
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise InvalidWeightsError(f"weights sum to {total!r}, expected 1.0")

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.w_lex,
            self.w_ent,
            self.w_len,
            self.w_pat,
            self.w_adj,
            self.w_yule,
            self.w_bi,
            self.w_func,
        )

    def to_json(self) -> dict[str, float]:
        return dict(zip(SUB_SCORE_NAMES, self.as_tuple()))

    @classmethod
    def from_vector(cls, vec) -> "DiversityWeights":
        vals = tuple(float(v) for v in vec)
        if len(vals) != len(SUB_SCORE_NAMES):
            raise InvalidWeightsError(f"expected {len(SUB_SCORE_NAMES)} weights, got {len(vals)}")
        return cls(*vals)


@dataclass(frozen=True)
class DiversityReport:
    """Eight sub-scores plus, once set, the combined and length-normalized scores."""

    d_lex: float
    d_ent: float
    d_len: float
    d_pat: float
    d_adj: float
    d_yule: float
    d_bi: float
    d_func: float
    token_count: int
    d_combined: float | None = None
    d_norm: float | None = None

    def sub_scores(self) -> tuple[float, ...]:
        return (
            self.d_lex,
            self.d_ent,
            self.d_len,
            self.d_pat,
            self.d_adj,
            self.d_yule,
            self.d_bi,
            self.d_func,
        )

    def to_json(self) -> dict:
        out = dict(zip(SUB_SCORE_NAMES, self.sub_scores()))
        out["combined"] = self.d_combined
        out["norm"] = self.d_norm
        out["token_count"] = self.token_count
        return out

    @classmethod
    def from_json(cls, data: dict) -> "DiversityReport":
        subs = {f"d_{name}": float(data[name]) for name in SUB_SCORE_NAMES}
        return cls(
            token_count=int(data["token_count"]),
            d_combined=None if data.get("combined") is None else float(data["combined"]),
            d_norm=None if data.get("norm") is None else float(data["norm"]),
            **subs,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def _normalized_entropy(counts, support: int | None = None) -> float:
    """Entropy of a count distribution divided by log of its support size.

    ``support`` defaults to the number of distinct observed categories;
    distributions with support <= 1 score 0.
    """
    counts = [c for c in counts if c > 0]
    k = support if support is not None else len(counts)
    if k <= 1 or len(counts) <= 1:
        return 0.0
    total = sum(counts)
    entropy = -sum((c / total) * math.log(c / total) for c in counts)
    return _clamp01(entropy / math.log(k))


def _sentence_class(sentence: tuple[str, ...]) -> str:
    last = sentence[-1]
    if last == ".":
        return "declarative"
    if last == "?":
        return "interrogative"
    if last == "!":
        return "exclamatory"
    return "fragment"


def _jaccard_distance(a: frozenset, b: frozenset) -> float:
    union = a | b
    if not union:
        return 0.0
    return 1.0 - len(a & b) / len(union)


def _yule_k(freqs: Counter) -> float:
    n = sum(freqs.values())
    spectrum = Counter(freqs.values())  # frequency m -> number of types V(m)
    m2 = sum(m * m * v for m, v in spectrum.items())
    return 1e4 * (m2 - n) / (n * n)


def compute_sub_scores(
    text: str | TokenSequence,
    lexicon: FunctionWordLexicon | None = None,
) -> DiversityReport:
    """Compute the eight sub-scores of a text; combined/norm stay unset.

    Accepts raw text or an existing TokenSequence. Raises EmptyTextError via
    the tokenizer when the text has no tokens.
    """
    tokens = text if isinstance(text, TokenSequence) else tokenize(text)
    lexicon = lexicon or default_lexicon()

    n = len(tokens)
    freqs = Counter(tokens.tokens)
    vocab = len(freqs)

    d_lex = vocab / n
    d_ent = _normalized_entropy(freqs.values())
    d_yule = _clamp01(math.exp(-_yule_k(freqs) / 200.0))

    if n < 2:
        d_bi = 1.0
    else:
        bigrams = list(zip(tokens.tokens, tokens.tokens[1:]))
        d_bi = len(set(bigrams)) / len(bigrams)

    segmentation = segment_sentences(tokens)
    sentences = segmentation.sentences
    if len(sentences) < 2:
        d_len = 0.0
        d_adj = 0.0
    else:
        lengths = [len(s) for s in sentences]
        mean = sum(lengths) / len(lengths)
        var = sum((x - mean) ** 2 for x in lengths) / len(lengths)
        cv = math.sqrt(var) / mean
        d_len = cv / (1.0 + cv)
        word_sets = [frozenset(t for t in s if is_word_token(t)) for s in sentences]
        distances = [_jaccard_distance(a, b) for a, b in zip(word_sets, word_sets[1:])]
        d_adj = sum(distances) / len(distances)

    class_counts = Counter(_sentence_class(s) for s in sentences)
    d_pat = _normalized_entropy(class_counts.values(), support=4)

    func_counts = Counter(t for t in tokens.tokens if t in lexicon)
    d_func = _normalized_entropy(func_counts.values())

    return DiversityReport(
        d_lex=_clamp01(d_lex),
        d_ent=d_ent,
        d_len=_clamp01(d_len),
        d_pat=d_pat,
        d_adj=_clamp01(d_adj),
        d_yule=d_yule,
        d_bi=_clamp01(d_bi),
        d_func=d_func,
        token_count=n,
    )


def combined_diversity(report: DiversityReport, weights: DiversityWeights | None = None) -> float:
    """Weighted sum of the eight sub-scores under a weight simplex."""
    weights = weights or DiversityWeights()
    return math.fsum(w * d for w, d in zip(weights.as_tuple(), report.sub_scores()))


def length_normalized_diversity(
    combined: float, token_count: int, l0: float = DEFAULT_LENGTH_SCALE
) -> float:
    """Scale a combined score by token_count / (token_count + l0).

    Monotone increasing in token_count, approaching ``combined`` for long texts.
    """
    if l0 <= 0:
        raise InvalidParameterError(f"length scale must be positive, got {l0}")
    if token_count < 1:
        raise InvalidParameterError(f"token_count must be >= 1, got {token_count}")
    return combined * token_count / (token_count + l0)


def score_text(
    text: str | TokenSequence,
    weights: DiversityWeights | None = None,
    lexicon: FunctionWordLexicon | None = None,
    l0: float = DEFAULT_LENGTH_SCALE,
) -> DiversityReport:
    """Full report for one text: sub-scores, combined, and length-normalized."""
    report = compute_sub_scores(text, lexicon=lexicon)
    combined = combined_diversity(report, weights)
    norm = length_normalized_diversity(combined, report.token_count, l0)
    return replace(report, d_combined=combined, d_norm=norm)
