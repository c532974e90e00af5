"""Compaction, the deterministic mock compactor, and recall/constraint scoring.

Compaction models the lossy compression long-running sessions apply to old
context. The mock compactor keeps an exactly-known fraction of input lines,
which turns "how much does compaction lose" into controlled arithmetic: the
fraction of lines kept IS the fact recall, with zero tolerance. The scoring
half classifies answers (correct / abstained / wrong) and audits which of
the conversation's constraints survive in a compacted text.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

from .corpus import _FILLER_SENTENCES, ConversationScript, value_pattern
from .llm import LlmEndpoint

__all__ = [
    "BudgetMissWarning",
    "CompactionResult",
    "DriftScore",
    "RecallTaxonomy",
    "cascade",
    "classify_answer",
    "compact",
    "fraction_compactor",
    "score_constraints",
]

DEFAULT_ABSTENTION_MARKERS = (
    "don't have",
    "do not have",
    "no stored fact",
    "not available",
)

COMPACTION_FOOTER = (
    "Further detail from earlier lines was summarized away during compaction."
)


class BudgetMissWarning(UserWarning):
    """Achieved compression deviates from target by more than 25%."""


@dataclass(frozen=True)
class CompactionResult:
    summary: str
    input_chars: int
    output_chars: int
    achieved_ratio: float
    round: int
    cumulative_ratio: float


@dataclass(frozen=True)
class RecallTaxonomy:
    correct: float
    abstained: float
    wrong: float

    def __post_init__(self) -> None:
        total = self.correct + self.abstained + self.wrong
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"taxonomy fractions must sum to 1, got {total}")


@dataclass(frozen=True)
class DriftScore:
    labels: dict[str, str]  # topic -> correct | partial | lost
    correct: float
    partial: float
    lost: float
    compression_ratio: float

    def __post_init__(self) -> None:
        total = self.correct + self.partial + self.lost
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"drift fractions must sum to 1, got {total}")


def fraction_compactor(text: str, target_ratio: float) -> str:
    """Keep lines {floor(j*r)} for j < ceil(n/r), drop the rest, add a footer.

    Exactly ceil(n/r) of the n input lines survive verbatim, so the kept
    fraction is a known quantity the recall experiments can assert against.
    target_ratio <= 1 is the identity.
    """
    if target_ratio <= 1.0:
        return text
    lines = text.split("\n")
    n = len(lines)
    keep_count = math.ceil(n / target_ratio)
    kept_idx = {math.floor(j * target_ratio) for j in range(keep_count)}
    kept = [line for i, line in enumerate(lines) if i in kept_idx]
    return "\n".join(kept + [COMPACTION_FOOTER])


def compact(
    text: str,
    target_ratio: float,
    compactor_endpoint: Optional[LlmEndpoint] = None,
    round_no: int = 1,
    original_chars: Optional[int] = None,
) -> CompactionResult:
    """Compress text at the target ratio; mock mode uses the line compactor.

    Live mode prompts the compactor endpoint with an explicit output budget.
    A BudgetMissWarning (never an error) fires when the achieved ratio is off
    target by more than 25%.
    """
    if target_ratio < 1.0:
        raise ValueError("target_ratio must be >= 1")
    if compactor_endpoint is None:
        summary = fraction_compactor(text, target_ratio)
    else:
        budget_chars = max(1, int(len(text) / target_ratio))
        prompt = (
            "Compress the working context below to at most "
            f"{budget_chars} characters while preserving as many specific "
            "facts, numbers, and decisions as possible. Output only the "
            f"compressed context.\n\nCONTEXT:\n{text}"
        )
        summary = compactor_endpoint.complete(prompt).response
    achieved = len(text) / max(1, len(summary))
    if target_ratio > 1.0 and abs(achieved - target_ratio) / target_ratio > 0.25:
        warnings.warn(
            f"achieved ratio {achieved:.1f}x vs target {target_ratio:.1f}x",
            BudgetMissWarning,
            stacklevel=2,
        )
    base = original_chars if original_chars is not None else len(text)
    return CompactionResult(
        summary=summary,
        input_chars=len(text),
        output_chars=len(summary),
        achieved_ratio=achieved,
        round=round_no,
        cumulative_ratio=base / max(1, len(summary)),
    )


def cascade(
    text: str,
    rounds: int,
    per_round_ratio: float,
    compactor_endpoint: Optional[LlmEndpoint] = None,
    interleave: bool = True,
) -> list[CompactionResult]:
    """Repeated compaction: each round squeezes the previous summary again.

    With interleave on (the default), filler worth ~20% of the current
    summary is appended before each subsequent round, mimicking sessions
    where more work happens between compactions. Cumulative ratios are
    against the original text.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    results: list[CompactionResult] = []
    original = len(text)
    current = text
    for round_no in range(1, rounds + 1):
        if interleave and round_no > 1:
            current = current + "\n" + _interleave_filler(len(current))
        result = compact(
            current, per_round_ratio, compactor_endpoint,
            round_no=round_no, original_chars=original,
        )
        results.append(result)
        current = result.summary
    return results


def _interleave_filler(current_chars: int) -> str:
    budget = current_chars // 5
    lines: list[str] = []
    used = 0
    i = 0
    while used < budget:
        sentence = _FILLER_SENTENCES[i % len(_FILLER_SENTENCES)]
        lines.append(sentence)
        used += len(sentence) + 1
        i += 1
    return "\n".join(lines)


def classify_answer(
    gold: str,
    answer: str,
    markers: Sequence[str] = DEFAULT_ABSTENTION_MARKERS,
) -> str:
    """correct if the gold value appears; abstained on a marker; else wrong."""
    if value_pattern(gold).search(answer):
        return "correct"
    lowered = answer.lower()
    if any(marker in lowered for marker in markers):
        return "abstained"
    return "wrong"


def score_constraints(
    script: ConversationScript,
    surviving_text: str,
    answer_endpoint: Optional[LlmEndpoint] = None,
    compression_ratio: float = 1.0,
) -> DriftScore:
    """Label each of the script's constraints against the surviving text.

    Mock mode (no endpoint) scans the text directly: the expected value
    present means the constraint survived compaction; absent means it is
    lost (under the line compactor a value either survives verbatim or is
    gone, so partial cannot occur). Live mode asks the answerer "what is the
    project's <topic>?" over the surviving text and classifies the reply:
    expected value -> correct, default value -> lost (drift-to-default),
    abstention or no value -> lost, any other value -> partial.
    """
    labels: dict[str, str] = {}
    for spec in script.constraints:
        if answer_endpoint is None:
            if value_pattern(spec.expected_value).search(surviving_text):
                labels[spec.topic] = "correct"
            else:
                labels[spec.topic] = "lost"
            continue
        prompt = (
            "Answer from the project notes below in one short sentence.\n\n"
            f"NOTES:\n{surviving_text}\n\n"
            f"QUERY: What is the project's {spec.topic}?\nANSWER:"
        )
        reply = answer_endpoint.complete(prompt).response
        if value_pattern(spec.expected_value).search(reply):
            labels[spec.topic] = "correct"
        elif value_pattern(spec.default_value).search(reply):
            labels[spec.topic] = "lost"
        elif any(m in reply.lower() for m in DEFAULT_ABSTENTION_MARKERS):
            labels[spec.topic] = "lost"
        else:
            labels[spec.topic] = "partial"
    n = len(labels)
    return DriftScore(
        labels=labels,
        correct=sum(1 for v in labels.values() if v == "correct") / n,
        partial=sum(1 for v in labels.values() if v == "partial") / n,
        lost=sum(1 for v in labels.values() if v == "lost") / n,
        compression_ratio=compression_ratio,
    )
