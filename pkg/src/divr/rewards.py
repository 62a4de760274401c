"""Accuracy rewards, shaped rewards, and group-normalized advantages.

Accuracy is merged per task type: divergent tasks compare each role's answer
with its own ground truth and average the indicators; convergent tasks take a
majority vote over role answers (ties resolve to the earliest role in
insertion order) and compare the consensus with a single ground truth.

The shaped reward is ``total = 0.9 * acc + 0.1 * div`` by default, and a
rollout group's advantages are ``(r - mean) / population_std``, with all-zero
advantages when the group's rewards are uniform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import EmptyGroupError, InvalidScoreError, MissingRoleAnswerError

DIVERGENT = "divergent"
CONVERGENT = "convergent"

DEFAULT_ALPHAS = (0.9, 0.1)
DEFAULT_SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class GroundTruth:
    """Task ground truth: one scalar answer, or one answer per role."""

    mode: str
    scalar_answer: str | None = None
    per_role_answers: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if self.mode not in (DIVERGENT, CONVERGENT):
            raise ValueError(f"unknown merge mode {self.mode!r}")
        if self.mode == CONVERGENT and self.scalar_answer is None:
            raise ValueError("convergent ground truth requires scalar_answer")
        if self.mode == DIVERGENT and not self.per_role_answers:
            raise ValueError("divergent ground truth requires per_role_answers")

    def to_json(self) -> dict:
        out: dict = {"mode": self.mode}
        if self.scalar_answer is not None:
            out["scalar_answer"] = self.scalar_answer
        if self.per_role_answers is not None:
            out["per_role_answers"] = dict(self.per_role_answers)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "GroundTruth":
        return cls(
            mode=data["mode"],
            scalar_answer=data.get("scalar_answer"),
            per_role_answers=data.get("per_role_answers"),
        )


@dataclass(frozen=True)
class RewardBreakdown:
    """One completion's reward components and their weighted total."""

    r_acc: float
    r_div: float
    r_total: float
    alpha_acc: float = DEFAULT_ALPHAS[0]
    alpha_div: float = DEFAULT_ALPHAS[1]

    def to_json(self) -> dict[str, float]:
        return {"acc": self.r_acc, "div": self.r_div, "total": self.r_total}


@dataclass
class RolloutGroup:
    """A group of completions with rewards and normalized advantages."""

    completions: list
    rewards: list[RewardBreakdown]
    advantages: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.completions:
            raise EmptyGroupError("rollout group has no completions")
        if len(self.rewards) != len(self.completions):
            raise ValueError("rewards and completions lengths differ")
        if self.advantages:
            if len(self.advantages) != len(self.completions):
                raise ValueError("advantages and completions lengths differ")
            mean = sum(self.advantages) / len(self.advantages)
            if abs(mean) > 1e-9:
                raise ValueError(f"advantages must be zero-mean, got mean {mean}")


def majority_answer(answers: Mapping[str, str]) -> str:
    """Most frequent answer value; ties go to the earliest role's answer."""
    if not answers:
        raise EmptyGroupError("no answers to vote over")
    counts: dict[str, int] = {}
    for value in answers.values():
        counts[value] = counts.get(value, 0) + 1
    best = max(counts.values())
    for value in answers.values():  # insertion order breaks ties
        if counts[value] == best:
            return value
    raise AssertionError("unreachable")


def accuracy_reward(answers: Mapping[str, str | None], truth: GroundTruth) -> float:
    """Merged accuracy of per-role answers against the ground truth.

    Divergent: mean indicator over the truth's roles (a role may map to None,
    which never matches, but every truth role must be present as a key).
    Convergent: indicator that the majority answer equals the scalar truth.
    """
    if not answers:
        raise MissingRoleAnswerError("no answers supplied")
    if truth.mode == DIVERGENT:
        assert truth.per_role_answers is not None
        missing = [r for r in truth.per_role_answers if r not in answers]
        if missing:
            raise MissingRoleAnswerError(f"no answer for role(s): {', '.join(missing)}")
        hits = sum(
            1 for role, expected in truth.per_role_answers.items() if answers[role] == expected
        )
        return hits / len(truth.per_role_answers)
    voted = {role: a for role, a in answers.items() if a is not None}
    if not voted:
        return 0.0
    return 1.0 if majority_answer(voted) == truth.scalar_answer else 0.0


def shaped_reward(
    r_acc: float,
    r_div: float,
    alphas: tuple[float, float] = DEFAULT_ALPHAS,
) -> RewardBreakdown:
    """Combine accuracy and diversity into the weighted total reward."""
    for name, value in (("accuracy", r_acc), ("diversity", r_div)):
        if not 0.0 <= value <= 1.0:
            raise InvalidScoreError(f"{name} reward {value} outside [0, 1]")
    alpha_acc, alpha_div = alphas
    if alpha_acc < 0 or alpha_div < 0 or abs((alpha_acc + alpha_div) - 1.0) > 1e-9:
        raise InvalidScoreError(f"alphas must be non-negative and sum to 1, got {alphas}")
    total = alpha_acc * r_acc + alpha_div * r_div
    return RewardBreakdown(r_acc, r_div, total, alpha_acc, alpha_div)


def group_advantages(
    rewards: Sequence[float],
    sigma_floor: float = DEFAULT_SIGMA_FLOOR,
) -> list[float]:
    """Normalize rewards within a group to zero mean and unit population std.

    Uniform groups (population std <= sigma_floor) yield all-zero advantages
    rather than an error, preserving batch shape for trainer integration.
    """
    if len(rewards) == 0:
        raise EmptyGroupError("cannot normalize an empty reward group")
    mean = sum(rewards) / len(rewards)
    var = sum((r - mean) ** 2 for r in rewards) / len(rewards)
    std = math.sqrt(var)
    if std <= sigma_floor:
        return [0.0] * len(rewards)
    return [(r - mean) / std for r in rewards]
