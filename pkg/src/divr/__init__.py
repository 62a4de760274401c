"""Diversity-scored multi-role reasoning toolkit."""

from .calibration import calibrate_weights
from .diversity import (
    DiversityReport,
    DiversityWeights,
    combined_diversity,
    compute_sub_scores,
    length_normalized_diversity,
    score_text,
)
from .evaluation import (
    AnswerFormat,
    EvalResult,
    evaluate,
    extract_answer,
    extract_role_answers,
    pearson,
)
from .gateway import (
    CompletionResult,
    DecodeStrategy,
    EndpointConfig,
    LlmGateway,
    MockTransport,
)
from .lexicon import FunctionWordLexicon, default_lexicon
from .pipeline import (
    DatasetRecord,
    PipelineConfig,
    ReasoningTrace,
    RoleCandidate,
    SftExample,
    build_dataset,
    filter_sft_dataset,
    generate_roles,
    merge_traces,
    sample_paths,
    score_role_selection,
    self_consistency_filter,
)
from .reporting import emit_report
from .rewards import (
    GroundTruth,
    RewardBreakdown,
    RolloutGroup,
    accuracy_reward,
    group_advantages,
    shaped_reward,
)
from .service import ScoreRequest, ScoringService, score_completions
from .synthetic import SyntheticTransport
from .tokenization import SentenceSegmentation, TokenSequence, segment_sentences, tokenize

__version__ = "0.1.0"

__all__ = [
    "AnswerFormat",
    "CompletionResult",
    "DatasetRecord",
    "DecodeStrategy",
    "DiversityReport",
    "DiversityWeights",
    "EndpointConfig",
    "EvalResult",
    "FunctionWordLexicon",
    "GroundTruth",
    "LlmGateway",
    "MockTransport",
    "PipelineConfig",
    "ReasoningTrace",
    "RewardBreakdown",
    "RoleCandidate",
    "RolloutGroup",
    "ScoreRequest",
    "ScoringService",
    "SentenceSegmentation",
    "SftExample",
    "SyntheticTransport",
    "TokenSequence",
    "accuracy_reward",
    "build_dataset",
    "calibrate_weights",
    "combined_diversity",
    "compute_sub_scores",
    "default_lexicon",
    "emit_report",
    "evaluate",
    "extract_answer",
    "extract_role_answers",
    "filter_sft_dataset",
    "generate_roles",
    "group_advantages",
    "length_normalized_diversity",
    "merge_traces",
    "pearson",
    "sample_paths",
    "score_completions",
    "score_role_selection",
    "score_text",
    "segment_sentences",
    "self_consistency_filter",
    "shaped_reward",
    "tokenize",
]
