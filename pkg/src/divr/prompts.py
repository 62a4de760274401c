"""Prompt templates for role generation and role-conditioned reasoning."""
from __future__ import annotations

from typing import Sequence

from .evaluation import BOLD_LETTER, BOLD_PAREN, BOLD_WORD, AnswerFormat

#: Marker the offline synthetic model uses to recognize role-list requests.
ROLE_LIST_MARKER = "the format of a list ONLY"

#: Marker line the synthetic model parses to pick a valid answer token.
ALLOWED_ANSWERS_PREFIX = "Allowed answers: "

REASONING_INSTRUCTION = (
    "Please think from diverse perspectives to answer the question. "
    "Respond in the following format: <think>...</think>..."
)

#: Continuation appended when the end-of-thinking delimiter is suppressed.
ROLE_CONTINUATION_TEMPLATE = "Wait, I need to think from {role}'s perspective"
BARE_CONTINUATION = "Wait,"

_ROLE_FEW_SHOT = """\
1.
Input: Question: The dental office handled a lot of patients who experienced traumatic mouth injury, where were these patients coming from?
Output: [Emergency room doctor, Police officer, Accident analyst]

2.
Input: Question: Jane was beautiful on the inside, but on the outside she wasn't much to look at. How might she be described?
Output: [Critic, Psychological counselor, Fashion blogger]

3.
Input: Question: What does someone feel after running twenty six miles?
Output: [Professional marathon runner, Average people, Exercise physiologist, Disabled people]

4.
Input: Question: What would you do if you have curiosity about a new show?
Output: [Show director, Enthusiastic show fan, Busy people]

5.
Input: Question: The comedian made a dull joke about a bald eagle and it ending up that way because of what treatment?
Output: [wildlife protectors, Comedy theory researcher, Average audience]

6.
Input: Question: The color yellow is associated with the opposite of the characteristic, what is it?
Output: [Color psychologist, Early childhood educator, Personality researcher]

7.
Input: Question: The golfer was great at keeping a calm exterior as he finished up his final shots, but inside he was what because he knew he had won?
Output: [Golf commentator, Sports psychologist, Main competitor]
"""

ROLE_GENERATION_TEMPLATE = (
    "Please generate 2-5 role perspective to answer the following question. "
    "Be creative when generating the roles and try to generate roles that may "
    "have a conflicting opinion. "
    f"The role perspective should be in {ROLE_LIST_MARKER}: "
    "[role content 1, role content 2, ...] "
    "Do not include any other information. "
    "Here are some examples that you should follow:\n\n"
    f"{_ROLE_FEW_SHOT}\n"
    "Your answer:\n"
    "Input: Question: {question}\n"
    "Output:"
)


def build_role_generation_prompt(question: str) -> str:
    return ROLE_GENERATION_TEMPLATE.format(question=question)


def render_options(options: Sequence[str] | None, fmt: AnswerFormat) -> str:
    if not options:
        return ""
    labeled = " ".join(f"({tok}) {opt}" for tok, opt in zip(fmt.alphabet, options))
    return f"Options: {labeled}\n"


def format_instruction(fmt: AnswerFormat) -> str:
    tokens = ", ".join(fmt.alphabet)
    if fmt.pattern_kind == BOLD_LETTER:
        shape = "**X. answer**"
    elif fmt.pattern_kind == BOLD_PAREN:
        shape = "**(X) answer**"
    elif fmt.pattern_kind == BOLD_WORD:
        shape = " or ".join(f"**{tok}**" for tok in fmt.alphabet)
        return (
            f"Please answer with {shape}.\n{ALLOWED_ANSWERS_PREFIX}{tokens}"
        )
    else:
        shape = "**X**"
    return (
        f"Your answer should be in the format {shape} where X is one of: {tokens}.\n"
        f"{ALLOWED_ANSWERS_PREFIX}{tokens}"
    )


def build_reasoning_prompt(
    question: str,
    options: Sequence[str] | None,
    fmt: AnswerFormat,
    role: str | None = None,
) -> str:
    """Question prompt for one reasoning pass, optionally role-conditioned."""
    parts = [REASONING_INSTRUCTION, "", f"Question: {question}"]
    rendered = render_options(options, fmt)
    if rendered:
        parts.append(rendered.rstrip("\n"))
    parts.append(format_instruction(fmt))
    if role:
        parts.append(f"Consider the question from the perspective of {role}.")
    parts.append("Your answer:")
    return "\n".join(parts)
