"""Answer extraction and accuracy/diversity evaluation over datasets.

Answers are read from bold markers in the text after the end-of-thinking
delimiter (falling back to the whole text), taking the last match so that a
model restating the options before answering is handled. Records whose answer
cannot be extracted score zero accuracy and stay in the aggregate.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .diversity import DiversityReport, DiversityWeights, score_text
from .errors import (
    DegenerateVarianceError,
    EmptyTextError,
    InvalidParameterError,
    MissingOutputError,
)
from .lexicon import FunctionWordLexicon
from .rewards import CONVERGENT, DIVERGENT, GroundTruth, accuracy_reward

END_THINK = "</think>"

BOLD_LETTER = "bold_letter"  # **X. answer**
BOLD_PAREN = "bold_paren"  # **(X) answer**
BOLD_WORD = "bold_word"  # **Yes** / **No**
BOLD_BARE = "bold_bare"  # **X**

_PATTERN_KINDS = (BOLD_LETTER, BOLD_PAREN, BOLD_WORD, BOLD_BARE)

#: Diversity scopes: score the full completion or only the think segment.
SCOPE_FULL = "full"
SCOPE_THINK_ONLY = "think_only"


@dataclass(frozen=True)
class AnswerFormat:
    """A bold answer-marker style plus the allowed answer tokens."""

    pattern_kind: str
    alphabet: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.pattern_kind not in _PATTERN_KINDS:
            raise InvalidParameterError(f"unknown pattern kind {self.pattern_kind!r}")
        if not self.alphabet:
            raise InvalidParameterError("answer alphabet must not be empty")

    def regex(self) -> re.Pattern:
        alts = "|".join(re.escape(tok) for tok in self.alphabet)
        if self.pattern_kind == BOLD_LETTER:
            body = rf"({alts})\.[^*]*"
        elif self.pattern_kind == BOLD_PAREN:
            body = rf"\(({alts})\)[^*]*"
        else:  # BOLD_WORD, BOLD_BARE
            body = rf"({alts})"
        return re.compile(rf"\*\*\s*{body}\s*\*\*", re.IGNORECASE)

    def normalize(self, raw: str) -> str:
        for tok in self.alphabet:
            if tok.casefold() == raw.casefold():
                return tok
        return raw

    def wrap(self, token: str, label: str | None = None) -> str:
        """Render a token as the marker this format expects (for data synthesis)."""
        if self.pattern_kind == BOLD_LETTER:
            return f"**{token}. {label or 'answer'}**"
        if self.pattern_kind == BOLD_PAREN:
            return f"**({token}) {label or 'answer'}**"
        return f"**{token}**"

    def label_for(self, token: str, options: Sequence[str] | None) -> str | None:
        """Option text matching an answer token, when options are lettered."""
        if not options or self.pattern_kind not in (BOLD_LETTER, BOLD_PAREN):
            return None
        try:
            idx = self.alphabet.index(token)
        except ValueError:
            return None
        return options[idx] if idx < len(options) else None

    def to_json(self) -> dict:
        return {"pattern_kind": self.pattern_kind, "alphabet": list(self.alphabet)}

    @classmethod
    def from_json(cls, data: Mapping) -> "AnswerFormat":
        return cls(data["pattern_kind"], tuple(data["alphabet"]))


#: Default formats by task tag; unknown tasks fall back to lettered choices.
TASK_FORMATS: dict[str, AnswerFormat] = {
    "bbq": AnswerFormat(BOLD_LETTER, ("A", "B", "C")),
    "gloqa": AnswerFormat(BOLD_LETTER, ("A", "B")),
    "cali": AnswerFormat(BOLD_BARE, ("E", "N", "C")),
    "ethics": AnswerFormat(BOLD_WORD, ("Yes", "No")),
    "csqa": AnswerFormat(BOLD_PAREN, ("A", "B", "C", "D", "E")),
}
FALLBACK_FORMAT = AnswerFormat(BOLD_LETTER, ("A", "B", "C", "D"))

_LETTERS = tuple("ABCDEFGHIJKLMNOPQRSTUVWXYZ")


def default_format_for_task(task: str) -> AnswerFormat:
    return TASK_FORMATS.get(task.lower(), FALLBACK_FORMAT)


def format_for_record(record: Any, base: AnswerFormat | None = None) -> AnswerFormat:
    """Answer format for one dataset record, sized to its option count."""
    fmt = base or default_format_for_task(getattr(record, "task", "") or "")
    options = getattr(record, "options", None)
    if options and fmt.pattern_kind in (BOLD_LETTER, BOLD_PAREN):
        return AnswerFormat(fmt.pattern_kind, _LETTERS[: len(options)])
    return fmt


def answer_region(text: str, end_think: str = END_THINK) -> str:
    """Text after the final end-of-thinking delimiter, or the whole text."""
    idx = text.rfind(end_think)
    return text if idx == -1 else text[idx + len(end_think) :]


def extract_answer(
    text: str, fmt: AnswerFormat, end_think: str = END_THINK
) -> str | None:
    """Last marker match in the answer region, normalized; None when absent."""
    region = answer_region(text, end_think)
    matches = fmt.regex().findall(region)
    if not matches:
        return None
    return fmt.normalize(matches[-1])


def extract_role_answers(
    text: str,
    roles: Sequence[str],
    fmt: AnswerFormat,
    end_think: str = END_THINK,
) -> dict[str, str | None]:
    """Per-role answers from lines like ``role: **A**`` in the answer region.

    Every requested role is present in the result; roles without a match map
    to None. The last matching line per role wins.
    """
    answers: dict[str, str | None] = {role: None for role in roles}
    region = answer_region(text, end_think)
    pattern = fmt.regex()
    for line in region.splitlines():
        lowered = line.casefold()
        for role in roles:
            if role.casefold() in lowered:
                found = pattern.findall(line)
                if found:
                    answers[role] = fmt.normalize(found[-1])
    return answers


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Product-moment correlation; raises DegenerateVarianceError on flat input."""
    if len(xs) != len(ys):
        raise InvalidParameterError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise InvalidParameterError("correlation needs at least two points")
    mean_x = sum(xs) / len(xs)
    mean_y = sum(ys) / len(ys)
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    var_x = sum(d * d for d in dx)
    var_y = sum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise DegenerateVarianceError("zero variance input to correlation")
    r = sum(a * b for a, b in zip(dx, dy)) / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, r))


def _output_text(output: Any) -> str:
    if isinstance(output, str):
        return output
    return output.text  # CompletionResult-like


def scope_text(output: Any, scope: str, end_think: str = END_THINK) -> str:
    """Completion text restricted to the requested diversity scope."""
    if scope == SCOPE_FULL:
        return _output_text(output)
    if scope != SCOPE_THINK_ONLY:
        raise InvalidParameterError(f"unknown diversity scope {scope!r}")
    think = getattr(output, "think_text", None)
    if think is not None:
        return think
    text = _output_text(output)
    idx = text.rfind(end_think)
    return text[:idx] if idx != -1 else text


@dataclass
class RecordScore:
    """One evaluated record: extracted answers, accuracy and diversity."""

    record_id: str
    answers: dict[str, str | None]
    accuracy: float
    diversity: DiversityReport | None
    injected_continuations: int | None = None

    def to_json(self) -> dict:
        return {
            "id": self.record_id,
            "answers": self.answers,
            "accuracy": self.accuracy,
            "diversity": None if self.diversity is None else self.diversity.to_json(),
            "injected_continuations": self.injected_continuations,
        }


@dataclass
class EvalResult:
    """Per-record scores plus aggregates and the accuracy-diversity correlation."""

    per_record: list[RecordScore] = field(default_factory=list)
    aggregate_accuracy: float = 0.0
    aggregate_diversity: float = 0.0
    pearson_acc_div: float | None = None

    def to_json(self) -> dict:
        return {
            "records": [r.to_json() for r in self.per_record],
            "aggregate_accuracy": self.aggregate_accuracy,
            "aggregate_diversity": self.aggregate_diversity,
            "pearson_acc_div": self.pearson_acc_div,
        }


def record_answers(record: Any, text: str, fmt: AnswerFormat) -> dict[str, str | None]:
    """Extract the answers a record's ground truth needs from one output text."""
    truth: GroundTruth = record.ground_truth
    if truth.mode == DIVERGENT:
        return extract_role_answers(text, list(truth.per_role_answers), fmt)
    return {"final": extract_answer(text, fmt)}


def evaluate(
    dataset: Sequence[Any],
    outputs: Mapping[str, Any],
    fmt: AnswerFormat | None = None,
    weights: DiversityWeights | None = None,
    lexicon: FunctionWordLexicon | None = None,
    scope: str = SCOPE_FULL,
) -> EvalResult:
    """Score every record's output for accuracy and diversity.

    ``outputs`` maps record id to a completion (string or CompletionResult).
    Raises MissingOutputError when a record has no output. The correlation is
    None when either column has zero variance.
    """
    result = EvalResult()
    for record in dataset:
        if record.id not in outputs:
            raise MissingOutputError(f"no output for record {record.id!r}")
        output = outputs[record.id]
        text = _output_text(output)
        record_fmt = format_for_record(record, fmt)
        answers = record_answers(record, text, record_fmt)
        accuracy = accuracy_reward(answers, record.ground_truth)
        try:
            report = score_text(scope_text(output, scope), weights=weights, lexicon=lexicon)
        except EmptyTextError:
            report = None
        result.per_record.append(
            RecordScore(
                record_id=record.id,
                answers=answers,
                accuracy=accuracy,
                diversity=report,
                injected_continuations=getattr(output, "injected_continuations", None),
            )
        )

    if result.per_record:
        result.aggregate_accuracy = sum(r.accuracy for r in result.per_record) / len(
            result.per_record
        )
        diversities = [
            0.0 if r.diversity is None else (r.diversity.d_norm or 0.0)
            for r in result.per_record
        ]
        result.aggregate_diversity = sum(diversities) / len(diversities)
        try:
            result.pearson_acc_div = pearson(
                [r.accuracy for r in result.per_record], diversities
            )
        except (DegenerateVarianceError, InvalidParameterError):
            result.pearson_acc_div = None
    return result


def correlate_settings(results: Sequence[EvalResult]) -> float:
    """Correlation between aggregate accuracy and diversity across eval runs."""
    return pearson(
        [r.aggregate_accuracy for r in results],
        [r.aggregate_diversity for r in results],
    )


def read_outputs(path) -> dict[str, str]:
    """Load a pre-generated outputs JSONL of ``{"id": ..., "text": ...}`` rows."""
    outputs: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            outputs[str(row["id"])] = row["text"]
    return outputs
