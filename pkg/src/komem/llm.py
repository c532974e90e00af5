"""LLM endpoint abstraction: live HTTP chat completions plus deterministic mocks.

Endpoints play one of three roles — parser (question -> structured query),
answerer (context + question -> answer text), compactor (text -> summary).
Mocks are referentially transparent functions of the prompt text, so every
benchmark that runs on them is bit-reproducible. The live client speaks a
plain JSON chat-completion shape; providers and models are configuration,
never code.

Query parsing and key alignment: ingestion renders a fact's predicate as
"Target <target> | <assay>" and the parser emits the same canonical form, so
hash keys computed from either side match. The optional synonym map rewrites
non-standard assay phrasings ("binding strength") onto canonical assay names
before key computation; it ships disabled so the stock messy-phrasing
failure mode stays observable.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Protocol

from .core import KnowledgeObject, normalize
from .corpus import ASSAY_SYNONYMS, ASSAY_TYPES
from .econ import estimate_tokens

__all__ = [
    "ChatExchange",
    "ContextOverflow",
    "EndpointUnreachable",
    "LiveEndpoint",
    "LiveEndpointConfig",
    "LlmEndpoint",
    "MockQueryParser",
    "MockScanAnswerer",
    "ParseFailure",
    "ParsedQuery",
    "RateLimited",
    "answer_from_fact",
    "parse_query",
]

ABSTENTION_TEXT = "I don't have that specific information."


class ContextOverflow(RuntimeError):
    """Prompt exceeds the endpoint's window. The load-bearing hard-wall signal."""


class EndpointUnreachable(ConnectionError):
    pass


class RateLimited(RuntimeError):
    pass


class ParseFailure(ValueError):
    """The question yielded no usable (subject, predicate)."""


@dataclass(frozen=True)
class ChatExchange:
    prompt: str
    response: str
    input_tokens: int
    output_tokens: int


@dataclass(frozen=True)
class ParsedQuery:
    subject: str
    predicate: str
    confidence_note: str = ""


class LlmEndpoint(Protocol):
    id: str
    role: str

    def complete(self, prompt: str) -> ChatExchange: ...


# ---------------------------------------------------------------------------
# Mock endpoints
# ---------------------------------------------------------------------------

_DRUG_ID = re.compile(r"\b(drg-\d{4})\b")
_TARGET_ID = re.compile(r"\b(tgt-\d{3})\b")
_MUTATION_ID = re.compile(r"\b([a-z]{2,6}\d?-[a-z]\d{2,4}[a-z])\b")
_QUESTION_MARKER = re.compile(r"(?:QUERY|QUESTION):\s*(.+?)\s*(?:\nANSWER:|\Z)", re.DOTALL)


def _find_assay(canon_question: str, extra_phrases: Mapping[str, str] | None = None) -> Optional[str]:
    """Longest assay mention in the normalized question; raw phrase returned.

    extra_phrases maps recognized non-canonical phrasings to themselves (the
    parser echoes what the user said; canonicalization is the synonym map's
    job, applied later)."""
    candidates: list[str] = [normalize(a) for a in ASSAY_TYPES]
    if extra_phrases:
        candidates.extend(normalize(p) for p in extra_phrases)
    best = None
    for phrase in sorted(candidates, key=len, reverse=True):
        if re.search(rf"(?<![\w-]){re.escape(phrase)}(?![\w-])", canon_question):
            best = phrase
            break
    return best


def _extract_question(prompt: str) -> str:
    m = _QUESTION_MARKER.search(prompt)
    return m.group(1) if m else prompt


class MockQueryParser:
    """Deterministic stand-in for the lightweight parser model.

    Matches the question against the corpus vocabulary: drug ids, target ids
    (plain or family-mutation form), assay names, and the known non-standard
    assay phrasings. Emits the canonical two-field reply the live parser is
    prompted to produce."""

    def __init__(self, recognized_phrases: Mapping[str, str] | None = None):
        self.id = "mock-parser"
        self.role = "parser"
        self.recognized_phrases = dict(recognized_phrases or {s: s for s in ASSAY_SYNONYMS.values()})

    def complete(self, prompt: str) -> ChatExchange:
        question = normalize(_extract_question(prompt))
        drug = _DRUG_ID.search(question)
        target = _TARGET_ID.search(question) or _MUTATION_ID.search(question)
        assay = _find_assay(question, self.recognized_phrases)
        lines = []
        if drug:
            lines.append(f"subject: compound {drug.group(1)}")
        if target:
            segment = assay if assay else "activity"
            lines.append(f"predicate: target {target.group(1)} | {segment}")
        response = "\n".join(lines) if lines else "subject: ?\npredicate: ?"
        return ChatExchange(
            prompt=prompt,
            response=response,
            input_tokens=estimate_tokens(prompt),
            output_tokens=estimate_tokens(response),
        )


_FACT_LINE = re.compile(
    r"Compound (\S+) shows activity against Target (\S+) with (.+?) of ([0-9.]+(?: nM)?)"
)


class MockScanAnswerer:
    """Deterministic stand-in for the answering model.

    Scans the prompt's fact lines for the queried (drug, target, assay) and
    reports the stored value verbatim, abstaining when no line matches. Works
    unchanged for in-context, RAG, and KO prompts because all three carry
    fact lines in the same sentence form. The scan anchors on the queried
    drug id so a 200K-token prompt costs one literal search, not a regex
    match per line."""

    def __init__(self) -> None:
        self.id = "mock-answerer"
        self.role = "answerer"

    def complete(self, prompt: str) -> ChatExchange:
        question = normalize(_extract_question(prompt))
        drug = _DRUG_ID.search(question)
        target = _TARGET_ID.search(question) or _MUTATION_ID.search(question)
        assay = _find_assay(question)
        response = ABSTENTION_TEXT
        if drug and target:
            anchored = re.compile(
                rf"Compound ({re.escape(drug.group(1))}) shows activity against "
                rf"Target (\S+) with (.+?) of ([0-9.]+(?: nM)?)",
                re.IGNORECASE,
            )
            for line in anchored.finditer(prompt):
                if normalize(line.group(2)) == target.group(1) and (
                    assay is None or normalize(line.group(3)) == assay
                ):
                    response = (
                        f"The {line.group(3)} of Compound {line.group(1)} against "
                        f"Target {line.group(2)} is {line.group(4)}."
                    )
                    break
        return ChatExchange(
            prompt=prompt,
            response=response,
            input_tokens=estimate_tokens(prompt),
            output_tokens=estimate_tokens(response),
        )


# ---------------------------------------------------------------------------
# Live endpoint
# ---------------------------------------------------------------------------


@dataclass
class LiveEndpointConfig:
    url: str
    model: str
    role: str = "answerer"
    api_key_env: str = "KOMEM_API_KEY"
    auth_header: str = "Authorization"
    auth_scheme: str = "Bearer"
    extra_headers: dict[str, str] = field(default_factory=dict)
    temperature: float = 0.0
    max_output_tokens: int = 256
    window_tokens: Optional[int] = None
    max_retries: int = 3
    backoff_s: float = 1.0
    timeout_s: float = 120.0


class LiveEndpoint:
    """JSON chat-completion client with pre-flight overflow check and retry."""

    def __init__(self, config: LiveEndpointConfig, trace: Optional[Callable[[dict], None]] = None):
        import requests

        self._requests = requests
        self._session = requests.Session()
        self.config = config
        self.id = f"live:{config.model}"
        self.role = config.role
        self._trace = trace

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json", **self.config.extra_headers}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            scheme = f"{self.config.auth_scheme} " if self.config.auth_scheme else ""
            headers[self.config.auth_header] = f"{scheme}{key}"
        return headers

    def complete(self, prompt: str) -> ChatExchange:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        estimated = estimate_tokens(prompt)
        if self.config.window_tokens is not None and estimated > self.config.window_tokens:
            raise ContextOverflow(
                f"estimated {estimated} tokens exceeds window {self.config.window_tokens}"
            )
        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                resp = self._session.post(
                    self.config.url,
                    headers=self._headers(),
                    json=body,
                    timeout=self.config.timeout_s,
                )
            except self._requests.RequestException as exc:
                last_error = EndpointUnreachable(str(exc))
            else:
                if resp.status_code == 429:
                    last_error = RateLimited(resp.text[:500])
                elif resp.status_code >= 500:
                    last_error = EndpointUnreachable(f"{resp.status_code}: {resp.text[:200]}")
                else:
                    resp.raise_for_status()
                    payload = resp.json()
                    if self._trace:
                        self._trace({"request": body, "response": payload})
                    text = payload["choices"][0]["message"]["content"]
                    usage = payload.get("usage", {})
                    return ChatExchange(
                        prompt=prompt,
                        response=text,
                        input_tokens=int(usage.get("prompt_tokens", estimated)),
                        output_tokens=int(usage.get("completion_tokens", estimate_tokens(text))),
                    )
            if attempt < self.config.max_retries:
                time.sleep(self.config.backoff_s * (2**attempt))
        assert last_error is not None
        raise last_error


# ---------------------------------------------------------------------------
# Parse and answer operations
# ---------------------------------------------------------------------------

# Padded to ~470 tokens so the parse call sits near its 500-token budget the
# way a real few-shot extraction prompt would.
PARSE_PROMPT_TEMPLATE = """\
You extract structured lookup queries for a pharmacology fact store. Facts \
are stored under a composite key made of a subject and a predicate, and your \
only job is to recover those two fields from the user's question, without \
answering the question itself.

Field definitions:
subject: the compound the question is about, written as "Compound <id>" \
where <id> is the compound identifier exactly as the user wrote it, for \
example "Compound DRG-0042".
predicate: the target and the assay joined by a pipe, written as \
"Target <target> | <assay>". The target is the protein or gene-variant \
identifier, for example TGT-017 or EGFR-L858R. The assay is one of: Binding \
Affinity, IC50, Ki, EC50, Selectivity Index. If the user phrases the assay \
informally, copy their phrasing into the assay slot unchanged rather than \
guessing a canonical name.

Output format, exactly two lines, nothing else:
subject: <subject>
predicate: <predicate>

Worked examples:
Question: What is the Binding Affinity of Compound DRG-0042 against Target TGT-017?
subject: Compound DRG-0042
predicate: Target TGT-017 | Binding Affinity
Question: need the EC50 figure for compound DRG-7311 on TGT-482 asap
subject: Compound DRG-7311
predicate: Target TGT-482 | EC50
Question: how does DRG-0007 do against EGFR-L858R? give me the binding strength
subject: Compound DRG-0007
predicate: Target EGFR-L858R | binding strength

If the question names no compound or no target from the store, output the \
literal character ? for the missing field instead of inventing one.

QUESTION: {question}
"""

ANSWER_PROMPT_TEMPLATE = """\
You answer one pharmacology question from one stored fact. The fact below \
was retrieved by exact key lookup from the group's memory store and is \
authoritative for this question: do not second-guess it against your own \
pharmacology knowledge, do not flag it as surprising, and do not hedge.

Rules for the answer:
Restate the measured value exactly as stored, including its unit. Do not \
convert units, do not round or reformat the number, and do not add \
uncertainty ranges or qualifiers the fact does not carry.
Name the compound and the target in the answer so the requester can confirm \
the lookup matched their question, and answer in one short sentence with no \
preamble and no commentary.
If the fact genuinely does not address what was asked, for example the \
question names a different assay than the fact records, say that the stored \
fact does not answer the question rather than adapting the value.

FACT: {fact}

QUERY: {question}
ANSWER:"""


def _apply_synonyms(predicate: str, synonym_map: Mapping[str, str]) -> str:
    head, _, assay = predicate.rpartition("|")
    assay = assay.strip()
    canonical = synonym_map.get(normalize(assay))
    if head and canonical:
        return f"{head.strip()} | {canonical}"
    return predicate


def parse_query(
    endpoint: LlmEndpoint,
    question: str,
    synonym_map: Mapping[str, str] | None = None,
) -> tuple[ParsedQuery, ChatExchange]:
    """Extract the (subject, predicate) lookup tuple from a question.

    Raises ParseFailure when either field is missing or unusable; downstream
    this surfaces as a lookup miss, never as a guessed key.
    """
    if not question.strip():
        raise ParseFailure("empty question")
    exchange = endpoint.complete(PARSE_PROMPT_TEMPLATE.format(question=question))
    subject = predicate = ""
    for line in exchange.response.splitlines():
        if line.lower().startswith("subject:"):
            subject = line.split(":", 1)[1].strip()
        elif line.lower().startswith("predicate:"):
            predicate = line.split(":", 1)[1].strip()
    if subject in ("", "?") or predicate in ("", "?") or not normalize(subject) or not normalize(predicate):
        raise ParseFailure(f"could not extract query fields from: {question!r}")
    if synonym_map:
        predicate = _apply_synonyms(predicate, synonym_map)
    return ParsedQuery(subject=subject, predicate=predicate), exchange


def canonical_synonym_map() -> dict[str, str]:
    """Normalized non-standard phrasing -> canonical assay name (off by default)."""
    return {normalize(phrase): assay for assay, phrase in ASSAY_SYNONYMS.items()}


def answer_from_fact(
    endpoint: LlmEndpoint, question: str, ko: KnowledgeObject
) -> tuple[str, ChatExchange]:
    """Generate the final answer conditioned on one retrieved KO."""
    fact_line = f"{ko.subject} shows activity against {ko.predicate.replace(' | ', ' with ')} of {ko.object}"
    exchange = endpoint.complete(
        ANSWER_PROMPT_TEMPLATE.format(fact=fact_line, question=question)
    )
    return exchange.response, exchange
