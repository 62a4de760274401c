"""Multi-role reasoning-data construction.

For each dataset record: obtain candidate roles (preset or generated through
few-shot prompting), score their selection probabilities (relevance to the
question plus a weighted mean dissimilarity to the other roles, softmaxed),
sample k reasoning paths per role at temperature 1.0, keep one path per role
by self-consistency majority voting (or ground-truth-hinted filtering),
merge the per-role think segments into a single chain under one or more
sampled role orderings, and finally drop length outliers and format-invalid
examples.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
import random
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    EmptyGroupError,
    EmptyTextError,
    InsufficientRolesError,
    InvalidParameterError,
    NoValidPathsError,
    RoleParseError,
)
from .evaluation import AnswerFormat, extract_answer, format_for_record
from .gateway import (
    END_THINK,
    THINK_OPEN,
    ZERO_THINK,
    DecodeStrategy,
    LlmGateway,
    cosine,
)
from .prompts import (
    REASONING_INSTRUCTION,
    ROLE_CONTINUATION_TEMPLATE,
    build_reasoning_prompt,
    build_role_generation_prompt,
    render_options,
)
from .rewards import DIVERGENT, GroundTruth, majority_answer
from .tokenization import tokenize

log = logging.getLogger(__name__)

FILTER_SELF_CONSISTENCY = "self-consistency"
FILTER_GROUND_TRUTH = "ground-truth-hinted"

DEFAULT_N_RANGE = (2, 4)
DEFAULT_PATHS_PER_ROLE = 5
DEFAULT_LAMBDA = 0.5


# ----------------------------------------------------------------------
# records


@dataclass(frozen=True)
class DatasetRecord:
    """One input question with its merge mode and ground truth."""

    id: str
    task: str
    question: str
    merge_mode: str
    ground_truth: GroundTruth
    options: tuple[str, ...] | None = None
    preset_roles: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.options is not None and not self.options:
            raise ValueError(f"record {self.id}: options present but empty")

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "task": self.task,
            "question": self.question,
            "merge_mode": self.merge_mode,
            "ground_truth": self.ground_truth.to_json(),
        }
        if self.options is not None:
            out["options"] = list(self.options)
        if self.preset_roles is not None:
            out["preset_roles"] = list(self.preset_roles)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "DatasetRecord":
        return cls(
            id=str(data["id"]),
            task=data.get("task", ""),
            question=data["question"],
            merge_mode=data["merge_mode"],
            ground_truth=GroundTruth.from_json(data["ground_truth"]),
            options=tuple(data["options"]) if data.get("options") else None,
            preset_roles=tuple(data["preset_roles"]) if data.get("preset_roles") else None,
        )


@dataclass(frozen=True)
class RoleCandidate:
    """A candidate role with its selection statistics."""

    name: str
    relevance: float = 0.0
    mean_dissimilarity: float = 0.0
    selection_probability: float = 0.0


@dataclass(frozen=True)
class ReasoningTrace:
    """One sampled reasoning path for one role."""

    role: str
    think_text: str
    answer: str
    sample_index: int
    temperature: float

    def __post_init__(self) -> None:
        if not self.think_text:
            raise ValueError("reasoning trace requires non-empty think text")


@dataclass(frozen=True)
class SftExample:
    """One merged multi-role training example."""

    instruction: str
    input: str
    output: str
    ordering: tuple[str, ...]
    merge_mode: str

    def to_json(self) -> dict:
        return {
            "instruction": self.instruction,
            "input": self.input,
            "output": self.output,
            "ordering": list(self.ordering),
            "merge_mode": self.merge_mode,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SftExample":
        return cls(
            instruction=data["instruction"],
            input=data["input"],
            output=data["output"],
            ordering=tuple(data["ordering"]),
            merge_mode=data["merge_mode"],
        )


def read_records(path: str | Path) -> list[DatasetRecord]:
    """Load a JSONL dataset, enforcing unique record ids."""
    records: list[DatasetRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            record = DatasetRecord.from_json(json.loads(line))
            if record.id in seen:
                raise ValueError(f"{path}:{line_no}: duplicate record id {record.id!r}")
            seen.add(record.id)
            records.append(record)
    return records


def write_jsonl(path: str | Path, rows: Iterable) -> int:
    """Write objects with a ``to_json`` method (or plain dicts) as JSONL."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for row in rows:
            data = row.to_json() if hasattr(row, "to_json") else row
            handle.write(json.dumps(data, ensure_ascii=False))
            handle.write("\n")
            count += 1
    return count


# ----------------------------------------------------------------------
# stage 1: roles and reasoning paths

_ROLE_STRATEGY = DecodeStrategy(mode=ZERO_THINK)


def parse_role_list(text: str) -> list[str] | None:
    """Parse a bracketed role list, deduplicated case-insensitively."""
    match = re.search(r"\[([^\[\]]*)\]", text)
    if match is None:
        return None
    names: list[str] = []
    seen: set[str] = set()
    for part in match.group(1).split(","):
        name = part.strip()
        if name and name.casefold() not in seen:
            seen.add(name.casefold())
            names.append(name)
    return names or None


def generate_roles(
    record: DatasetRecord,
    gateway: LlmGateway,
    n_range: tuple[int, int] = DEFAULT_N_RANGE,
) -> list[RoleCandidate]:
    """Prompt for candidate roles and clamp the parsed count into n_range."""
    if record.preset_roles:
        raise InvalidParameterError(f"record {record.id} already has preset roles")
    n_min, n_max = n_range
    prompt = build_role_generation_prompt(record.question)
    attempts = gateway.config.max_retries + 1
    for attempt in range(attempts):
        result = gateway.complete(
            prompt, _ROLE_STRATEGY, cache_salt=f"roles:{record.id}:{attempt}"
        )
        names = parse_role_list(result.answer_text)
        if names and len(names) >= n_min:
            return [RoleCandidate(name=n) for n in names[:n_max]]
    raise RoleParseError(
        f"record {record.id}: no usable role list after {attempts} attempt(s)"
    )


def softmax(logits: Sequence[float]) -> list[float]:
    peak = max(logits)
    exps = [math.exp(x - peak) for x in logits]
    total = sum(exps)
    return [e / total for e in exps]


def score_role_selection(
    question: str,
    candidates: Sequence[RoleCandidate],
    gateway: LlmGateway,
    lambda_dissim: float = DEFAULT_LAMBDA,
) -> list[RoleCandidate]:
    """Set softmax selection probabilities over relevance + dissimilarity.

    Relevance is the cosine between the embedding of "role + question" and the
    bare question; dissimilarity is the mean (1 - cosine) between a role's
    name embedding and every other candidate's.
    """
    if len(candidates) < 2:
        raise InvalidParameterError("role selection needs at least two candidates")
    names = [c.name for c in candidates]
    question_vec = gateway.embed([question])[0]
    combo_vecs = gateway.embed([f"{name} {question}" for name in names])
    name_vecs = gateway.embed(names)

    relevances = [cosine(vec, question_vec) for vec in combo_vecs]
    dissimilarities = []
    for i in range(len(names)):
        others = [
            1.0 - cosine(name_vecs[i], name_vecs[j]) for j in range(len(names)) if j != i
        ]
        dissimilarities.append(sum(others) / len(others))

    probabilities = softmax(
        [r + lambda_dissim * d for r, d in zip(relevances, dissimilarities)]
    )
    return [
        replace(
            c,
            relevance=relevances[i],
            mean_dissimilarity=dissimilarities[i],
            selection_probability=probabilities[i],
        )
        for i, c in enumerate(candidates)
    ]


def sample_paths(
    record: DatasetRecord,
    role: RoleCandidate,
    gateway: LlmGateway,
    k: int = DEFAULT_PATHS_PER_ROLE,
    strategy: DecodeStrategy | None = None,
    fmt: AnswerFormat | None = None,
) -> list[ReasoningTrace]:
    """Sample k reasoning paths for one role at temperature 1.0.

    Paths whose answer cannot be extracted (or with an empty think segment)
    are dropped; NoValidPathsError is raised when nothing survives.
    """
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    fmt = format_for_record(record, fmt)
    prompt = build_reasoning_prompt(record.question, record.options, fmt, role=role.name)
    sampling = replace(strategy or DecodeStrategy(), temperature=1.0)
    traces: list[ReasoningTrace] = []
    dropped = 0
    for j in range(k):
        result = gateway.complete(
            prompt, sampling, cache_salt=f"path:{record.id}:{role.name}:{j}"
        )
        answer = extract_answer(result.text, fmt)
        if answer is None or not result.think_text.strip():
            dropped += 1
            continue
        traces.append(
            ReasoningTrace(
                role=role.name,
                think_text=result.think_text,
                answer=answer,
                sample_index=j,
                temperature=sampling.temperature,
            )
        )
    if dropped:
        log.warning(
            "record %s role %r: dropped %d/%d paths with no extractable answer",
            record.id,
            role.name,
            dropped,
            k,
        )
    if not traces:
        raise NoValidPathsError(f"record {record.id} role {role.name!r}: all {k} paths failed")
    return traces


# ----------------------------------------------------------------------
# stage 2: filtering and merging


def self_consistency_filter(paths: Sequence[ReasoningTrace]) -> ReasoningTrace:
    """Earliest-sampled path whose answer is the majority answer.

    Ties between equally frequent answers go to the answer occurring first.
    """
    if not paths:
        raise EmptyGroupError("no paths to filter")
    if len({t.role for t in paths}) > 1:
        raise InvalidParameterError("self-consistency filtering mixes roles")
    counts = Counter(t.answer for t in paths)
    best = max(counts.values())
    majority = next(t.answer for t in paths if counts[t.answer] == best)
    return next(t for t in paths if t.answer == majority)


def ground_truth_hinted_filter(
    paths: Sequence[ReasoningTrace],
    truth: GroundTruth,
    role: str,
) -> ReasoningTrace | None:
    """Earliest path matching the ground truth; None when nothing matches."""
    if not paths:
        raise EmptyGroupError("no paths to filter")
    expected = (
        truth.per_role_answers.get(role) if truth.mode == DIVERGENT else truth.scalar_answer
    )
    for trace in paths:
        if trace.answer == expected:
            return trace
    return None


def _sample_orderings(
    roles: Sequence[str], count: int, rng: random.Random
) -> list[tuple[str, ...]]:
    total = math.factorial(len(roles))
    count = min(count, total)
    if total <= 5040:  # enumerate up to 7 roles
        return rng.sample(list(itertools.permutations(roles)), count)
    chosen: list[tuple[str, ...]] = []
    seen: set[tuple[str, ...]] = set()
    while len(chosen) < count:
        perm = tuple(rng.sample(list(roles), len(roles)))
        if perm not in seen:
            seen.add(perm)
            chosen.append(perm)
    return chosen


def merge_traces(
    record: DatasetRecord,
    filtered: Mapping[str, ReasoningTrace],
    orderings_per_example: int = 1,
    rng: random.Random | None = None,
    continuation_template: str = ROLE_CONTINUATION_TEMPLATE,
    fmt: AnswerFormat | None = None,
) -> list[SftExample]:
    """Merge per-role traces into training examples under sampled orderings.

    The think segments are chained with the role-aware continuation string so
    merged outputs match the budget-forced inference format; the answer block
    lists every role's answer (divergent) or the majority answer (convergent,
    earliest role in the ordering breaking ties).
    """
    roles = list(filtered)
    if len(roles) < 2:
        raise InsufficientRolesError(f"record {record.id}: need >= 2 roles, got {len(roles)}")
    rng = rng or random.Random(0)
    fmt = format_for_record(record, fmt)
    input_text = f"Question: {record.question}\n{render_options(record.options, fmt)}".rstrip()

    examples: list[SftExample] = []
    for ordering in _sample_orderings(roles, orderings_per_example, rng):
        opener = (
            "Okay, I will answer the question based on the perspectives of the "
            f"following roles: {', '.join(ordering)}."
        )
        parts = [opener, filtered[ordering[0]].think_text]
        for role in ordering[1:]:
            parts.append(continuation_template.format(role=role))
            parts.append(filtered[role].think_text)
        think = " ".join(parts)

        if record.merge_mode == DIVERGENT:
            lines = [
                f"{role}: {fmt.wrap(filtered[role].answer, fmt.label_for(filtered[role].answer, record.options))}"
                for role in ordering
            ]
            answer_block = "Final answers:\n" + "\n".join(lines)
        else:
            consensus = majority_answer({role: filtered[role].answer for role in ordering})
            answer_block = (
                f"Final answer: {fmt.wrap(consensus, fmt.label_for(consensus, record.options))}"
            )

        examples.append(
            SftExample(
                instruction=REASONING_INSTRUCTION,
                input=input_text,
                output=f"{THINK_OPEN}{think}{END_THINK}\n{answer_block}",
                ordering=ordering,
                merge_mode=record.merge_mode,
            )
        )
    return examples


def _output_length(example: SftExample) -> int:
    try:
        return len(tokenize(example.output))
    except EmptyTextError:
        return 0


def _valid_format(example: SftExample) -> bool:
    if example.output.count(END_THINK) != 1:
        return False
    return all(role in example.output for role in example.ordering)


def percentile_bounds(
    lengths: Sequence[int], lower_pct: float, upper_pct: float
) -> tuple[int, int]:
    """Nearest-rank length cutoffs; values strictly outside them are outliers.

    The lower bound is the (floor(n*p/100)+1)-th smallest length and the upper
    bound the corresponding rank from the top, so ties at a cutoff survive.
    """
    ordered = sorted(lengths)
    n = len(ordered)
    k_lo = int(n * lower_pct / 100.0)
    k_hi = int(n * upper_pct / 100.0)
    return ordered[min(k_lo, n - 1)], ordered[max(n - 1 - k_hi, 0)]


def filter_sft_dataset(
    examples: Sequence[SftExample],
    lower_pct: float = 10.0,
    upper_pct: float = 10.0,
) -> list[SftExample]:
    """Drop length outliers (nearest-rank percentiles, strict comparison) and
    format-invalid examples; datasets below three examples pass through."""
    if len(examples) < 3:
        return list(examples)
    lengths = [_output_length(e) for e in examples]
    lo, hi = percentile_bounds(lengths, lower_pct, upper_pct)
    return [
        e
        for e, length in zip(examples, lengths)
        if lo <= length <= hi and _valid_format(e)
    ]


# ----------------------------------------------------------------------
# end-to-end build


@dataclass
class PipelineConfig:
    """Knobs for the end-to-end dataset build."""

    samples_per_role: int = DEFAULT_PATHS_PER_ROLE
    lambda_dissim: float = DEFAULT_LAMBDA
    orderings_per_example: int = 1
    n_range: tuple[int, int] = DEFAULT_N_RANGE
    lower_pct: float = 10.0
    upper_pct: float = 10.0
    filter_mode: str = FILTER_SELF_CONSISTENCY
    seed: int = 0
    strategy: DecodeStrategy = field(default_factory=DecodeStrategy)
    answer_format: AnswerFormat | None = None
    continuation_template: str = ROLE_CONTINUATION_TEMPLATE

    def __post_init__(self) -> None:
        if self.filter_mode not in (FILTER_SELF_CONSISTENCY, FILTER_GROUND_TRUTH):
            raise InvalidParameterError(f"unknown filter mode {self.filter_mode!r}")


@dataclass
class BuildStats:
    records_total: int = 0
    records_merged: int = 0
    records_skipped: int = 0
    paths_sampled: int = 0
    paths_dropped: int = 0
    examples_merged: int = 0
    examples_kept: int = 0
    skip_reasons: Counter = field(default_factory=Counter)

    def to_json(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "skip_reasons"}
        out["skip_reasons"] = dict(self.skip_reasons)
        return out


def _candidate_roles(
    record: DatasetRecord, gateway: LlmGateway, config: PipelineConfig
) -> list[RoleCandidate]:
    if record.preset_roles:
        return [RoleCandidate(name=n) for n in record.preset_roles]
    return generate_roles(record, gateway, config.n_range)


def build_record(
    record: DatasetRecord,
    gateway: LlmGateway,
    config: PipelineConfig,
    stats: BuildStats,
) -> list[SftExample]:
    """Run stages 1-2 for one record; may raise pipeline errors."""
    candidates = _candidate_roles(record, gateway, config)
    if len(candidates) < 2:
        raise InsufficientRolesError(f"record {record.id}: only {len(candidates)} candidate role(s)")
    scored = score_role_selection(
        record.question, candidates, gateway, config.lambda_dissim
    )
    ranked = sorted(
        range(len(scored)), key=lambda i: (-scored[i].selection_probability, i)
    )
    selected = [scored[i] for i in ranked[: config.n_range[1]]]

    filtered: dict[str, ReasoningTrace] = {}
    for role in selected:
        try:
            paths = sample_paths(
                record,
                role,
                gateway,
                k=config.samples_per_role,
                strategy=config.strategy,
                fmt=config.answer_format,
            )
        except NoValidPathsError:
            stats.paths_dropped += config.samples_per_role
            continue
        stats.paths_sampled += config.samples_per_role
        stats.paths_dropped += config.samples_per_role - len(paths)
        if config.filter_mode == FILTER_SELF_CONSISTENCY:
            trace = self_consistency_filter(paths)
        else:
            trace = ground_truth_hinted_filter(paths, record.ground_truth, role.name)
            if trace is None:
                continue
        filtered[role.name] = trace

    if len(filtered) < 2:
        raise InsufficientRolesError(
            f"record {record.id}: only {len(filtered)} role(s) survived filtering"
        )
    rng = random.Random(f"{config.seed}:{record.id}")
    return merge_traces(
        record,
        filtered,
        orderings_per_example=config.orderings_per_example,
        rng=rng,
        continuation_template=config.continuation_template,
        fmt=config.answer_format,
    )


def build_dataset(
    records: Sequence[DatasetRecord],
    gateway: LlmGateway,
    config: PipelineConfig | None = None,
) -> tuple[list[SftExample], BuildStats]:
    """Full construction pass over a dataset, ending with the outlier filter."""
    config = config or PipelineConfig()
    stats = BuildStats(records_total=len(records))
    merged: list[SftExample] = []
    for record in records:
        try:
            examples = build_record(record, gateway, config, stats)
        except (RoleParseError, InsufficientRolesError, NoValidPathsError) as exc:
            stats.records_skipped += 1
            stats.skip_reasons[type(exc).__name__] += 1
            log.warning("skipping record %s: %s", record.id, exc)
            continue
        stats.records_merged += 1
        merged.extend(examples)
    stats.examples_merged = len(merged)
    kept = filter_sft_dataset(merged, config.lower_pct, config.upper_pct)
    stats.examples_kept = len(kept)
    return kept, stats
