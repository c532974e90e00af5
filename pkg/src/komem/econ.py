"""Token and dollar cost model for the memory architectures.

The token estimator is a deterministic rule over character runs (letters,
digits, punctuation, newlines), calibrated once so the pharmacology fact
template averages ~27 tokens per line. The affine model L0 + c*N describes
in-context prompt growth; KO queries cost a fixed parse call plus a fixed
answer call regardless of N, which is the entire point of the comparison.

Prices are configuration, never constants baked into formulas: the defaults
are calibrated so the reference cost table reproduces, and scaling every
price by a constant leaves all ratios untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "CostBreakdown",
    "Mode",
    "OverflowAtN",
    "PriceTable",
    "TokenModel",
    "annual_table",
    "estimate_tokens",
    "ingest_cost_per_1000",
    "query_cost",
]


class OverflowAtN(ValueError):
    """In-context prompt exceeds the window; its cost is undefined."""


_RUN = re.compile(r"[^\W\d_]+|\d+|[^\w\s]")

# char class per byte: 0 other/space, 1 letter, 2 digit, 3 punct (counted 1:1)
_BYTE_CLASS = np.zeros(256, dtype=np.uint8)
for _c in range(256):
    ch = chr(_c)
    if ch.isalpha():
        _BYTE_CLASS[_c] = 1
    elif ch.isdigit():
        _BYTE_CLASS[_c] = 2
    elif not ch.isspace() and not ch.isalnum() and ch != "_":
        _BYTE_CLASS[_c] = 3


def _estimate_tokens_regex(text: str) -> int:
    total = text.count("\n")
    for match in _RUN.finditer(text):
        run = match.group(0)
        ch = run[0]
        if ch.isdigit():
            total += -(-len(run) // 3)
        elif ch.isalpha():
            total += -(-len(run) // 4)
        else:
            total += len(run)
    return total


def estimate_tokens(text: str) -> int:
    """Deterministic token estimate: letter runs /4, digit runs /3, 1 per
    punctuation char and per newline. Roughly chars/4 on plain prose.

    ASCII text takes a vectorized path (the benchmarks estimate multi-hundred
    KB prompts thousands of times); both paths produce identical counts.
    """
    try:
        raw = text.encode("ascii")
    except UnicodeEncodeError:
        return _estimate_tokens_regex(text)
    if not raw:
        return 0
    classes = _BYTE_CLASS[np.frombuffer(raw, dtype=np.uint8)]
    total = int(np.count_nonzero(np.frombuffer(raw, dtype=np.uint8) == 10))
    total += int(np.count_nonzero(classes == 3))
    # run boundaries for letters and digits
    boundaries = np.flatnonzero(np.diff(classes)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [len(classes)]))
    kinds = classes[starts]
    lengths = ends - starts
    letters = lengths[kinds == 1]
    digits = lengths[kinds == 2]
    total += int(np.sum(-(-letters // 4)))
    total += int(np.sum(-(-digits // 3)))
    return total


@dataclass(frozen=True)
class TokenModel:
    """Affine in-context prompt model plus fixed KO pipeline token counts."""

    tokens_per_fact: float = 27.0  # c
    overhead_tokens: float = 334.0  # L0
    ko_parser_input: int = 500
    ko_parser_output: int = 50
    ko_answer_input: int = 300
    answer_output: int = 75
    rag_k: int = 5

    def estimate(self, text: str) -> int:
        return estimate_tokens(text)

    def in_context_input(self, n_facts: int) -> float:
        return self.overhead_tokens + self.tokens_per_fact * n_facts

    def rag_input(self, n_facts_retrieved: int | None = None) -> float:
        k = self.rag_k if n_facts_retrieved is None else n_facts_retrieved
        return self.overhead_tokens + self.tokens_per_fact * k


@dataclass(frozen=True)
class PriceTable:
    """Dollars per million tokens, by role and direction."""

    answerer_input_per_mtok: float = 3.00
    answerer_output_per_mtok: float = 15.00
    parser_input_per_mtok: float = 0.25
    parser_output_per_mtok: float = 1.25

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if value < 0:
                raise ValueError(f"{name} must be >= 0")

    def scaled(self, factor: float) -> "PriceTable":
        return PriceTable(
            self.answerer_input_per_mtok * factor,
            self.answerer_output_per_mtok * factor,
            self.parser_input_per_mtok * factor,
            self.parser_output_per_mtok * factor,
        )


class Mode(str, Enum):
    IN_CONTEXT = "in_context"
    RAG = "rag"
    KO = "ko"


@dataclass(frozen=True)
class CostBreakdown:
    mode: str
    n_facts: int
    per_query: float
    annual: float
    queries_per_year: int
    ratio_vs_ko: float | None = None
    overflowed: bool = False


_MTOK = 1e-6


def _ko_per_query(model: TokenModel, prices: PriceTable) -> float:
    return (
        model.ko_parser_input * prices.parser_input_per_mtok * _MTOK
        + model.ko_parser_output * prices.parser_output_per_mtok * _MTOK
        + model.ko_answer_input * prices.answerer_input_per_mtok * _MTOK
        + model.answer_output * prices.answerer_output_per_mtok * _MTOK
    )


def query_cost(
    mode: Mode,
    n_facts: int,
    token_model: TokenModel = TokenModel(),
    prices: PriceTable = PriceTable(),
    queries_per_year: int = 25_000,
    window_tokens: int | None = 200_000,
) -> CostBreakdown:
    """Per-query and annual dollars for one memory architecture at corpus size N."""
    if n_facts < 1:
        raise ValueError("n_facts must be >= 1")
    mode = Mode(mode)
    if mode is Mode.IN_CONTEXT:
        input_tokens = token_model.in_context_input(n_facts)
        if window_tokens is not None and input_tokens > window_tokens:
            raise OverflowAtN(
                f"in-context prompt at N={n_facts} is ~{input_tokens:.0f} tokens, "
                f"over the {window_tokens}-token window"
            )
        per_query = (
            input_tokens * prices.answerer_input_per_mtok
            + token_model.answer_output * prices.answerer_output_per_mtok
        ) * _MTOK
    elif mode is Mode.RAG:
        per_query = (
            token_model.rag_input() * prices.answerer_input_per_mtok
            + token_model.answer_output * prices.answerer_output_per_mtok
        ) * _MTOK
    else:
        per_query = _ko_per_query(token_model, prices)
    ko = _ko_per_query(token_model, prices)
    return CostBreakdown(
        mode=mode.value,
        n_facts=n_facts,
        per_query=per_query,
        annual=per_query * queries_per_year,
        queries_per_year=queries_per_year,
        ratio_vs_ko=per_query / ko if ko > 0 else None,
    )


def annual_table(
    token_model: TokenModel = TokenModel(),
    prices: PriceTable = PriceTable(),
    n_values: tuple[int, ...] = (100, 1_000, 5_000, 7_000, 10_000),
    queries_per_year: int = 25_000,
    window_tokens: int = 200_000,
) -> list[CostBreakdown]:
    """The in-context vs KO comparison across corpus sizes.

    Overflowing in-context rows are emitted with overflowed=True and NaN
    dollars rather than raised, so the table always covers every N.
    """
    rows: list[CostBreakdown] = []
    for n in n_values:
        try:
            rows.append(
                query_cost(
                    Mode.IN_CONTEXT, n, token_model, prices,
                    queries_per_year, window_tokens,
                )
            )
        except OverflowAtN:
            rows.append(
                CostBreakdown(
                    mode=Mode.IN_CONTEXT.value,
                    n_facts=n,
                    per_query=float("nan"),
                    annual=float("nan"),
                    queries_per_year=queries_per_year,
                    ratio_vs_ko=None,
                    overflowed=True,
                )
            )
        rows.append(
            query_cost(Mode.KO, n, token_model, prices, queries_per_year, window_tokens)
        )
    return rows


def ingest_cost_per_1000(
    prices: PriceTable = PriceTable(),
    parse_input_tokens: int = 1_150,
    parse_output_tokens: int = 60,
) -> float:
    """Dollars to extract 1,000 facts into KOs with the parser-tier model."""
    per_fact = (
        parse_input_tokens * prices.parser_input_per_mtok
        + parse_output_tokens * prices.parser_output_per_mtok
    ) * _MTOK
    return per_fact * 1_000
