"""The four query pipelines under test: in-context, RAG, KO, and multi-hop KO.

Each returns a uniform PipelineResult so the harness can score them the same
way. Overflow is decided here by pre-flight token estimate, before any
endpoint is contacted: that refusal-by-arithmetic is the capacity wall the
scaling benchmark measures.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

from .core import compute_key
from .corpus import CLEAN_TEMPLATE, FactRecord, MultiHopCase, PROMPT_PREAMBLE, serialize_prompt
from .econ import estimate_tokens
from .embed import CorpusIndex, EmbeddingProvider, top_k
from .llm import (
    ChatExchange,
    LlmEndpoint,
    ParseFailure,
    answer_from_fact,
    parse_query,
)
from .store import KoStore, NotFound

__all__ = [
    "Outcome",
    "PipelineMode",
    "PipelineResult",
    "WindowConfig",
    "query_in_context",
    "query_ko",
    "query_multihop",
    "query_rag",
    "write_results_jsonl",
]

KO_ABSTENTION_TEXT = "I don't have that stored fact."


class Outcome(str, Enum):
    CORRECT = "correct"
    ABSTAINED = "abstained"
    WRONG = "wrong"
    OVERFLOW = "overflow"


class PipelineMode(str, Enum):
    IN_CONTEXT = "in_context"
    RAG = "rag"
    KO = "ko"
    MULTI_HOP_KO = "multihop_ko"


@dataclass(frozen=True)
class WindowConfig:
    window_tokens: int = 200_000

    def __post_init__(self) -> None:
        if self.window_tokens <= 0:
            raise ValueError("window_tokens must be positive")


@dataclass
class PipelineResult:
    mode: str
    answer: Optional[str]
    input_tokens: int
    output_tokens: int
    latency_s: float
    outcome: Optional[Outcome] = None  # only Overflow is decided here

    @property
    def total_tokens(self) -> int:
        return self.input_tokens + self.output_tokens


def write_results_jsonl(results: Sequence[PipelineResult], path) -> None:
    """Stream one PipelineResult per line into a run artifact."""
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for result in results:
            fh.write(json.dumps({
                "mode": result.mode,
                "answer": result.answer,
                "outcome": result.outcome.value if result.outcome else None,
                "input_tokens": result.input_tokens,
                "output_tokens": result.output_tokens,
                "latency_s": result.latency_s,
            }, ensure_ascii=False) + "\n")


def _result(mode: PipelineMode, exchanges: Sequence[ChatExchange], answer: Optional[str],
            started: float, outcome: Optional[Outcome] = None) -> PipelineResult:
    return PipelineResult(
        mode=mode.value,
        answer=answer,
        input_tokens=sum(e.input_tokens for e in exchanges),
        output_tokens=sum(e.output_tokens for e in exchanges),
        latency_s=time.perf_counter() - started,
        outcome=outcome,
    )


def query_in_context(
    facts: Sequence[FactRecord],
    question: str,
    endpoint: LlmEndpoint,
    window: WindowConfig = WindowConfig(),
) -> PipelineResult:
    """Serialize every fact into the prompt and ask; overflow if it cannot fit."""
    started = time.perf_counter()
    prompt = f"{serialize_prompt(facts)}{question}\nANSWER:"
    estimated = estimate_tokens(prompt)
    if estimated > window.window_tokens:
        return PipelineResult(
            mode=PipelineMode.IN_CONTEXT.value,
            answer=None,
            input_tokens=estimated,
            output_tokens=0,
            latency_s=time.perf_counter() - started,
            outcome=Outcome.OVERFLOW,
        )
    exchange = endpoint.complete(prompt)
    return _result(PipelineMode.IN_CONTEXT, [exchange], exchange.response, started)


def query_rag(
    corpus_index: CorpusIndex,
    question: str,
    endpoint: LlmEndpoint,
    provider: EmbeddingProvider,
    k: int = 5,
) -> PipelineResult:
    """Plain top-k retrieval (no density adaptation: this is the baseline)."""
    started = time.perf_counter()
    k = min(k, len(corpus_index))
    hits = top_k(corpus_index, provider.embed(question), k)
    context = "\n".join(corpus_index.texts[doc_id] for doc_id, _ in hits)
    prompt = f"{PROMPT_PREAMBLE}{context}\n\nQUERY: {question}\nANSWER:"
    exchange = endpoint.complete(prompt)
    return _result(PipelineMode.RAG, [exchange], exchange.response, started)


def query_ko(
    store: KoStore,
    question: str,
    parser_endpoint: LlmEndpoint,
    answer_endpoint: LlmEndpoint,
    synonym_map: Mapping[str, str] | None = None,
) -> PipelineResult:
    """Parse -> hash -> O(1) lookup -> answer. Misses abstain, never guess."""
    started = time.perf_counter()
    exchanges: list[ChatExchange] = []
    try:
        parsed, exchange = parse_query(parser_endpoint, question, synonym_map)
        exchanges.append(exchange)
    except ParseFailure:
        return _result(PipelineMode.KO, exchanges, KO_ABSTENTION_TEXT, started)
    hit = store.get(compute_key(parsed.subject, parsed.predicate))
    if isinstance(hit, NotFound):
        return _result(PipelineMode.KO, exchanges, KO_ABSTENTION_TEXT, started)
    answer, exchange = answer_from_fact(answer_endpoint, question, hit)
    exchanges.append(exchange)
    return _result(PipelineMode.KO, exchanges, answer, started)


_MULTIHOP_SHAPE = re.compile(
    r"What is the (.+) of the compound that shows activity against "
    r"both Target (\S+) and Target (\S+)\?"
)

DECOMPOSE_PROMPT_TEMPLATE = """\
Decompose this two-hop pharmacology question into its lookup plan. Output \
exactly three lines, nothing else:
assay: <assay name>
target_a: <first target identifier>
target_b: <second target identifier>

QUESTION: {question}
"""


def _decompose(question: str, parser_endpoint: LlmEndpoint) -> tuple[Optional[tuple[str, str, str]], list[ChatExchange]]:
    shape = _MULTIHOP_SHAPE.match(question)
    if shape:
        return (shape.group(1), shape.group(2), shape.group(3)), []
    if getattr(parser_endpoint, "id", "").startswith("mock"):
        return None, []
    exchange = parser_endpoint.complete(DECOMPOSE_PROMPT_TEMPLATE.format(question=question))
    fields = {}
    for line in exchange.response.splitlines():
        key, _, value = line.partition(":")
        fields[key.strip().lower()] = value.strip()
    if all(fields.get(k) for k in ("assay", "target_a", "target_b")):
        return (fields["assay"], fields["target_a"], fields["target_b"]), [exchange]
    return None, [exchange]


def _bridge_subjects(store: KoStore, target_a: str, target_b: str) -> list[str]:
    """Subjects holding at least one fact for each of the two targets."""
    from .core import normalize

    want_a, want_b = normalize(f"target {target_a}"), normalize(f"target {target_b}")
    with_a: set[str] = set()
    with_b: set[str] = set()
    for ko in store:
        # split on the raw "|" separator; normalize() strips that character
        raw_head = ko.predicate.split("|", 1)[0]
        head = normalize(raw_head)
        if head == want_a:
            with_a.add(ko.subject)
        elif head == want_b:
            with_b.add(ko.subject)
    return sorted(with_a & with_b)


def query_multihop(
    store: KoStore,
    case: MultiHopCase,
    parser_endpoint: LlmEndpoint,
    answer_endpoint: LlmEndpoint,
) -> PipelineResult:
    """Two-hop query: identify the bridging compound, then retrieve its value.

    Hop 1 scans stored subjects for the unique compound covering both named
    targets; anything but exactly one bridge abstains (the decomposition
    failure class). Hop 2 is a standard KO lookup phrased from the bridge.
    """
    started = time.perf_counter()
    plan, exchanges = _decompose(case.question, parser_endpoint)
    if plan is None:
        return _result(PipelineMode.MULTI_HOP_KO, exchanges, KO_ABSTENTION_TEXT, started)
    assay, target_a, target_b = plan
    bridges = _bridge_subjects(store, target_a, target_b)
    if len(bridges) != 1:
        return _result(PipelineMode.MULTI_HOP_KO, exchanges, KO_ABSTENTION_TEXT, started)
    drug_id = bridges[0].split(" ", 1)[-1].upper()
    for target in (target_b, target_a):
        hit = store.get_by_pair(bridges[0], f"Target {target} | {assay}")
        if not isinstance(hit, NotFound):
            hop2_question = CLEAN_TEMPLATE.format(assay=assay, drug=drug_id, target=target)
            answer, exchange = answer_from_fact(answer_endpoint, hop2_question, hit)
            exchanges.append(exchange)
            return _result(PipelineMode.MULTI_HOP_KO, exchanges, answer, started)
    return _result(PipelineMode.MULTI_HOP_KO, exchanges, KO_ABSTENTION_TEXT, started)
