"""Deterministic generators for every benchmark fixture.

All generators are pure functions of (parameters, seed). Randomness comes
from numpy's PCG64 bit generator, a named pinned algorithm with portable
streams, so the protocol seeds (42, 123, 456, 789, 1337) reproduce identical
fixtures on any platform.

Fixture families:

* pharmacology facts + query cases (the scaling corpus)
* adversarial near-duplicate groups (docs differing only in phase/year/value)
* confusable facts (5 gene families x 10 mutations x 20 drugs)
* the 88-turn goal-drift conversation with 20 scored constraints
* two-hop bridge cases planted into a fact corpus
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

__all__ = [
    "AdversarialFixture",
    "AdversarialGroup",
    "AdversarialQuery",
    "AdvDoc",
    "ConstraintSpec",
    "ConversationScript",
    "FactRecord",
    "InsufficientBridges",
    "MTooLarge",
    "MultiHopCase",
    "MultiHopFixture",
    "QueryCase",
    "TooManyFacts",
    "gen_adversarial",
    "gen_confusable",
    "gen_goal_drift_script",
    "gen_multihop",
    "gen_pharma",
    "gen_queries",
    "serialize_prompt",
    "write_jsonl",
]


class TooManyFacts(ValueError):
    pass


class MTooLarge(ValueError):
    pass


class InsufficientBridges(ValueError):
    pass


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# ---------------------------------------------------------------------------
# Pharmacology facts
# ---------------------------------------------------------------------------

ASSAY_TYPES = ("Binding Affinity", "IC50", "Ki", "EC50", "Selectivity Index")
ASSAY_RANGES = {
    "Binding Affinity": (0.1, 500.0),
    "IC50": (0.1, 1000.0),
    "Ki": (0.1, 200.0),
    "EC50": (0.5, 2000.0),
    "Selectivity Index": (1.0, 100.0),
}
ASSAY_UNITS = {
    "Binding Affinity": "nM",
    "IC50": "nM",
    "Ki": "nM",
    "EC50": "nM",
    "Selectivity Index": "",
}

_DRUG_SPACE = 10_000
_TARGET_SPACE = 1_000

_SENTENCE_RE = re.compile(
    r"^Compound (DRG-\d{4}) shows activity against Target (\S+) "
    r"with (.+) of ([0-9.]+)( nM)?$"
)


@dataclass(frozen=True)
class FactRecord:
    drug_id: str
    target_id: str
    assay_type: str
    value: float
    unit: str
    sentence: str
    doc_id: str = ""
    sibling_group: str = ""

    @property
    def subject(self) -> str:
        return f"Compound {self.drug_id}"

    @property
    def predicate(self) -> str:
        return f"Target {self.target_id} | {self.assay_type}"

    @property
    def value_str(self) -> str:
        return f"{self.value:.1f}"


@dataclass(frozen=True)
class QueryCase:
    question: str
    gold_subject: str
    gold_predicate: str
    gold_answer: str
    style: str = "clean"


def _render_sentence(drug_id: str, target_id: str, assay: str, value: float) -> str:
    unit = ASSAY_UNITS[assay]
    tail = f"{value:.1f} {unit}".rstrip()
    return (
        f"Compound {drug_id} shows activity against Target {target_id} "
        f"with {assay} of {tail}"
    )


def parse_sentence(sentence: str) -> tuple[str, str, str, float]:
    """Recover (drug_id, target_id, assay, value) from a rendered sentence."""
    m = _SENTENCE_RE.match(sentence)
    if not m:
        raise ValueError(f"unparseable fact sentence: {sentence!r}")
    return m.group(1), m.group(2), m.group(3), float(m.group(4))


def gen_pharma(n: int, seed: int) -> list[FactRecord]:
    """n unique pharmacology facts, deterministic from seed.

    (drug, target) pairs are drawn by zipping per-block shuffled permutations
    of the two id spaces, which keeps desk-scale corpora free of the id
    collisions that iid sampling produces (several facts piling onto one
    target id) while every (subject, predicate) pair still maps to exactly
    one value.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > _DRUG_SPACE * _TARGET_SPACE:
        raise TooManyFacts(f"n={n} exceeds the (drug, target) combination space")
    rng = _rng(seed)
    facts: list[FactRecord] = []
    seen: set[tuple[int, int]] = set()
    drug_perm = rng.permutation(_DRUG_SPACE)
    target_perm = rng.permutation(_TARGET_SPACE)
    i = 0
    while len(facts) < n:
        if i > 0 and i % _DRUG_SPACE == 0:
            drug_perm = rng.permutation(_DRUG_SPACE)
        if i > 0 and i % _TARGET_SPACE == 0:
            target_perm = rng.permutation(_TARGET_SPACE)
        d = int(drug_perm[i % _DRUG_SPACE])
        t = int(target_perm[i % _TARGET_SPACE])
        i += 1
        if (d, t) in seen:
            continue
        seen.add((d, t))
        assay = ASSAY_TYPES[int(rng.integers(0, len(ASSAY_TYPES)))]
        lo, hi = ASSAY_RANGES[assay]
        value = round(float(rng.uniform(lo, hi)), 1)
        drug_id, target_id = f"DRG-{d:04d}", f"TGT-{t:03d}"
        facts.append(
            FactRecord(
                drug_id=drug_id,
                target_id=target_id,
                assay_type=assay,
                value=value,
                unit=ASSAY_UNITS[assay],
                sentence=_render_sentence(drug_id, target_id, assay, value),
                doc_id=f"f{len(facts):05d}",
            )
        )
    return facts


CLEAN_TEMPLATE = "What is the {assay} of Compound {drug} against Target {target}?"

# Synonyms users substitute for assay names; template 2 uses them, and the
# default parser (synonym map off) cannot resolve them -> 80% parse accuracy.
ASSAY_SYNONYMS = {
    "Binding Affinity": "binding strength",
    "IC50": "half-max inhibitory concentration",
    "Ki": "inhibition constant",
    "EC50": "half-max effective concentration",
    "Selectivity Index": "selectivity ratio",
}

MESSY_TEMPLATES = (
    "{drug} vs {target} - whats the {assay} reading??",
    "need the {assay} figure for compound {drug} on {target} asap",
    "how does {drug} do against {target}? give me the {synonym}",
    "could you pull up the {target} {assay} numbers for {drug} please",
    "{assay} for {drug} / {target}",
)


def gen_queries(
    facts: Sequence[FactRecord], m: int, seed: int, style: str = "clean"
) -> list[QueryCase]:
    """Sample m distinct facts and phrase one question per fact.

    style "clean" uses the canonical template; "messy" cycles the messy bank,
    one template of which paraphrases the assay so the stored key is missed.
    """
    if m > len(facts):
        raise MTooLarge(f"m={m} > {len(facts)} facts")
    rng = _rng(seed)
    picks = rng.choice(len(facts), size=m, replace=False)
    cases = []
    for rank, idx in enumerate(picks):
        fact = facts[int(idx)]
        if style == "clean":
            question = CLEAN_TEMPLATE.format(
                assay=fact.assay_type, drug=fact.drug_id, target=fact.target_id
            )
        elif style == "messy":
            template = MESSY_TEMPLATES[rank % len(MESSY_TEMPLATES)]
            question = template.format(
                assay=fact.assay_type,
                drug=fact.drug_id,
                target=fact.target_id,
                synonym=ASSAY_SYNONYMS[fact.assay_type],
            )
        else:
            raise ValueError(f"unknown query style: {style}")
        cases.append(
            QueryCase(
                question=question,
                gold_subject=fact.subject,
                gold_predicate=fact.predicate,
                gold_answer=fact.value_str,
                style=style,
            )
        )
    return cases


# ---------------------------------------------------------------------------
# Adversarial near-duplicate groups
# ---------------------------------------------------------------------------

ADVERSARIAL_PAIRS = (
    ("Erlotinib", "EGFR"),
    ("Gefitinib", "MET"),
    ("Osimertinib", "ALK"),
    ("Dacomitinib", "HER2"),
    ("Neratinib", "ROS1"),
    ("Lapatinib", "BRAF"),
    ("Crizotinib", "KRAS"),
    ("Alectinib", "JAK2"),
    ("Brigatinib", "BTK"),
    ("Vemurafenib", "SRC"),
)

ADV_DOC_TEMPLATE = "A {year} phase {phase} trial showed {drug} inhibits {target} with IC50 of {value}nM"
ADV_QUERY_TEMPLATE = (
    "What IC50 did the {year} phase {phase} trial report for {drug} against {target}?"
)

# Calibrated for the hash provider; real embeddings use 0.95 (the sidecar
# acceptance checks ~0.977 there).
HASH_THETA_ADV = 0.75


@dataclass(frozen=True)
class AdvDoc:
    doc_id: str
    text: str
    keys: frozenset[str]
    value: str


@dataclass(frozen=True)
class AdversarialGroup:
    group_id: str
    drug: str
    target: str
    docs: tuple[AdvDoc, ...]
    within_group_target_similarity: float = HASH_THETA_ADV


@dataclass(frozen=True)
class AdversarialQuery:
    question: str
    gold_doc_id: str
    gold_value: str
    gold_keys: frozenset[str]


@dataclass(frozen=True)
class AdversarialFixture:
    groups: tuple[AdversarialGroup, ...]
    queries: tuple[AdversarialQuery, ...]

    @property
    def docs(self) -> list[AdvDoc]:
        return [doc for group in self.groups for doc in group.docs]


def gen_adversarial(
    groups: int = 10, per_group: int = 4, seed: int = 42
) -> AdversarialFixture:
    """Near-duplicate trial reports: same drug/target, distinct phase/year/value."""
    if per_group < 2:
        raise ValueError("per_group must be >= 2")
    if groups > len(ADVERSARIAL_PAIRS):
        raise ValueError(f"at most {len(ADVERSARIAL_PAIRS)} groups supported")
    rng = _rng(seed)
    out_groups = []
    out_queries = []
    for gi in range(groups):
        drug, target = ADVERSARIAL_PAIRS[gi]
        start = int(rng.integers(1, 6)) * 5
        docs = []
        for i in range(per_group):
            year, phase = 2019 + i, i + 1
            value = start + i * 15 + int(rng.integers(0, 10))
            keys = frozenset({f"phase {phase}", str(year)})
            doc_id = f"adv-{gi:02d}-{i}"
            text = ADV_DOC_TEMPLATE.format(
                year=year, phase=phase, drug=drug, target=target, value=value
            )
            docs.append(AdvDoc(doc_id=doc_id, text=text, keys=keys, value=str(value)))
            out_queries.append(
                AdversarialQuery(
                    question=ADV_QUERY_TEMPLATE.format(
                        year=year, phase=phase, drug=drug, target=target
                    ),
                    gold_doc_id=doc_id,
                    gold_value=str(value),
                    gold_keys=keys,
                )
            )
        assert len({d.value for d in docs}) == len(docs), "group values must be distinct"
        out_groups.append(
            AdversarialGroup(
                group_id=f"adv-{gi:02d}", drug=drug, target=target, docs=tuple(docs)
            )
        )
    return AdversarialFixture(groups=tuple(out_groups), queries=tuple(out_queries))


# ---------------------------------------------------------------------------
# Confusable facts (5 families x 10 mutations x 20 drugs)
# ---------------------------------------------------------------------------

GENE_FAMILIES = ("EGFR", "KRAS", "BRAF", "ALK", "TP53")
MUTATION_CODES = (
    "L858R", "T790M", "G719S", "C797S", "L861Q",
    "S768I", "E746K", "D761Y", "V769L", "H773R",
)


def gen_confusable(seed: int = 42) -> list[FactRecord]:
    """1,000 facts that differ only in the mutation variant (and value)."""
    rng = _rng(seed)
    drug_ids = sorted(int(x) for x in rng.choice(_DRUG_SPACE, size=20, replace=False))
    facts = []
    for drug_num in drug_ids:
        drug_id = f"DRG-{drug_num:04d}"
        for family in GENE_FAMILIES:
            used_values: set[str] = set()
            for mutation in MUTATION_CODES:
                target_id = f"{family}-{mutation}"
                while True:
                    value = round(float(rng.uniform(0.1, 1000.0)), 1)
                    if f"{value:.1f}" not in used_values:
                        used_values.add(f"{value:.1f}")
                        break
                facts.append(
                    FactRecord(
                        drug_id=drug_id,
                        target_id=target_id,
                        assay_type="IC50",
                        value=value,
                        unit="nM",
                        sentence=_render_sentence(drug_id, target_id, "IC50", value),
                        doc_id=f"c{len(facts):04d}",
                        sibling_group=f"{drug_id}|{family}",
                    )
                )
    assert len(facts) == 1000
    return facts


# ---------------------------------------------------------------------------
# Goal-drift conversation script
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstraintSpec:
    topic: str
    expected_value: str
    default_value: str
    statement: str
    turn_index: int = -1


@dataclass(frozen=True)
class ConversationScript:
    turns: tuple[str, ...]
    constraints: tuple[ConstraintSpec, ...]
    total_chars: int

    def text(self) -> str:
        return "\n".join(self.turns)


# The first four are the paper's verbatim constraint examples; the rest follow
# the same pattern language (tool vetoes, numeric SLAs, region picks, version
# rules). Expected values are globally unique so a text scan attributes each
# to exactly one turn.
_VERBATIM_CONSTRAINTS = (
    ("python version", "3.11", "3.12",
     "Use Python 3.11, not 3.12 - client's env hasn't upgraded."),
    ("caching technology", "PostgreSQL", "Redis",
     "The client vetoed Redis after a production incident - use PostgreSQL."),
    ("p95 latency SLA", "73ms", "100ms",
     "p95 latency SLA is 73ms, not the default 100ms."),
    ("retry limit", "7", "3",
     "Retry limit is 7, not 3 - we tested this after the cascade failure."),
)

_CONSTRAINT_BANK = (
    ("deployment region", "eu-central-1", "us-east-1",
     "Deploy only to EU regions for GDPR compliance: eu-central-1, never us-east-1."),
    ("service auth", "mTLS", "JWT",
     "Service-to-service auth must use mTLS, not JWT - security signed off on that."),
    ("API versioning", "header-based", "path-based",
     "API versioning stays header-based, not path-based; the gateway rewrite depends on it."),
    ("project contact", "Priya", "Marcus",
     "Escalations go to Priya now, not Marcus - he rolled off the project."),
    ("log retention", "ninety days", "thirty days",
     "Keep logs for ninety days instead of the usual thirty days, audit insists."),
    ("message queue", "Kafka", "RabbitMQ",
     "We're standardizing on Kafka for the event bus, so RabbitMQ is out."),
    ("database engine", "MariaDB", "MySQL",
     "The records service stays on MariaDB, not MySQL, per the licensing review."),
    ("build system", "Bazel", "Make",
     "Builds move to Bazel; stop adding Make targets."),
    ("container base image", "distroless", "alpine",
     "Ship distroless base images, not alpine - compliance flagged the shell."),
    ("TLS floor", "TLS 1.3", "TLS 1.2",
     "Terminate only TLS 1.3; TLS 1.2 is below our floor now."),
    ("backup cadence", "every six hours", "nightly",
     "Backups run every six hours, not nightly - RPO came down after the incident."),
    ("feature flags", "homegrown flag service", "LaunchDarkly",
     "Use the homegrown flag service; LaunchDarkly didn't clear procurement."),
    ("timeout budget", "45s", "30s",
     "Upstream timeout budget is 45s, not the default 30s."),
    ("artifact registry", "Harbor", "Docker Hub",
     "Push images to Harbor only; Docker Hub is blocked at the proxy."),
    ("secrets manager", "Vault", "environment files",
     "Secrets live in Vault, never in environment files."),
    ("monitoring stack", "Grafana", "Datadog",
     "Dashboards stay on Grafana; the Datadog trial lapsed."),
    ("code coverage floor", "eighty-five percent", "seventy percent",
     "Coverage floor is eighty-five percent, up from the old seventy percent."),
    ("branch strategy", "trunk-based", "gitflow",
     "We work trunk-based; no new gitflow release branches."),
)

# Filler chatter is digit-free so value scans can never false-positive on it.
_FILLER_SENTENCES = (
    "Walked through the ingestion path again and nothing looks out of place.",
    "The review queue is finally empty, so the pace should pick up this week.",
    "I moved the refactor notes into the shared doc for whoever picks it up next.",
    "Staging looked healthy after the deploy; no alerts overnight.",
    "Let's keep the interface as it is until the client demo is behind us.",
    "The flaky test turned out to be an ordering assumption in the fixture.",
    "I'll pair with the new hire tomorrow on the onboarding checklist.",
    "The profiler run pointed at serialization, not the query layer.",
    "Docs are drafted for the new endpoint; review when you get a chance.",
    "We should fold the migration scripts into the release checklist.",
    "The vendor call went fine; they'll send a revised statement of work.",
    "Retro notes are posted, main theme was scoping discipline.",
    "Cache hit rates looked fine after the rollout, no regression there.",
    "I cleaned up the dead code behind the old export path.",
    "The demo script needs a pass for the updated navigation flow.",
    "Capacity planning says we're comfortable through the next quarter.",
    "The standup moves earlier on Thursdays while the client is traveling.",
    "I filed the follow-up ticket for the logging noise we saw.",
    "Design sign-off came through, so the implementation can start.",
    "The data backfill finished cleanly on the second attempt.",
)


def gen_goal_drift_script(seed: int = 42, turns: int = 88, constraints: int = 20) -> ConversationScript:
    """88-turn project conversation with 20 non-default constraints embedded.

    Each constraint statement appears verbatim in exactly one turn, stated
    once and surrounded by ordinary work chatter, never as a numbered list.
    Generator self-checks that each expected value scans to exactly one turn.
    """
    rng = _rng(seed)
    bank = list(_VERBATIM_CONSTRAINTS)
    extra_needed = constraints - len(bank)
    if extra_needed > len(_CONSTRAINT_BANK):
        raise ValueError("constraint bank too small")
    extra_idx = rng.choice(len(_CONSTRAINT_BANK), size=extra_needed, replace=False)
    bank.extend(_CONSTRAINT_BANK[int(i)] for i in sorted(extra_idx))

    # spread constraint turns across the conversation, never first or last
    slots = sorted(int(i) for i in rng.choice(range(1, turns - 1), size=constraints, replace=False))

    filler_order = [int(i) for i in rng.permutation(len(_FILLER_SENTENCES))]
    fill_pos = 0

    def next_filler() -> str:
        nonlocal fill_pos
        sentence = _FILLER_SENTENCES[filler_order[fill_pos % len(filler_order)]]
        fill_pos += 1
        return sentence

    turn_texts: list[str] = []
    specs: list[ConstraintSpec] = []
    slot_to_constraint = {slot: ci for ci, slot in enumerate(slots)}
    for turn_idx in range(turns):
        ci = slot_to_constraint.get(turn_idx)
        if ci is not None:
            topic, expected, default, statement = bank[ci]
            text = f"{next_filler()} {statement} {next_filler()}"
            specs.append(
                ConstraintSpec(
                    topic=topic,
                    expected_value=expected,
                    default_value=default,
                    statement=statement,
                    turn_index=turn_idx,
                )
            )
        else:
            text = f"{next_filler()} {next_filler()} {next_filler()} {next_filler()}"
        turn_texts.append(text)

    script = ConversationScript(
        turns=tuple(turn_texts),
        constraints=tuple(specs),
        total_chars=sum(len(t) for t in turn_texts),
    )
    _check_script(script)
    return script


def value_pattern(value: str) -> re.Pattern[str]:
    """Scan pattern for a stored value with number-safe boundaries.

    "7" must not match inside "73ms" or "7.5", and "47.3" must not match
    inside "147.3", but a sentence-final period after the value is fine.
    """
    return re.compile(rf"(?<![\w.]){re.escape(value)}(?!\w)(?!\.\d)")


def _check_script(script: ConversationScript) -> None:
    for spec in script.constraints:
        assert spec.expected_value != spec.default_value
        pattern = value_pattern(spec.expected_value)
        hits = [i for i, turn in enumerate(script.turns) if pattern.search(turn)]
        assert hits == [spec.turn_index], (
            f"expected value {spec.expected_value!r} must scan to exactly its own turn, got {hits}"
        )
        count = sum(turn.count(spec.statement) for turn in script.turns)
        assert count == 1, f"statement must appear verbatim exactly once: {spec.statement!r}"


# ---------------------------------------------------------------------------
# Multi-hop cases
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiHopCase:
    question: str
    hop1: tuple[str, str, str]  # (subject, predicate, gold)
    hop2: tuple[str, str, str]
    final_answer: str


@dataclass(frozen=True)
class MultiHopFixture:
    facts: tuple[FactRecord, ...]  # input corpus plus planted bridge/decoy facts
    cases: tuple[MultiHopCase, ...]


MULTIHOP_TEMPLATE = (
    "What is the {assay} of the compound that shows activity against "
    "both Target {t1} and Target {t2}?"
)


def gen_multihop(facts: Sequence[FactRecord], m: int = 19, seed: int = 42) -> MultiHopFixture:
    """Plant m two-hop bridge cases into a fact corpus.

    For each case, one drug (the bridge) holds facts for two targets; each of
    the two targets also appears with a decoy drug, so neither target alone
    identifies the bridge and answering requires combining both hops. Exactly
    one drug covers both targets, and no single sentence mentions both.
    """
    rng = _rng(seed)
    used_pairs = {(f.drug_id, f.target_id) for f in facts}
    used_targets = {f.target_id for f in facts}
    used_drugs = {f.drug_id for f in facts}
    free_targets = [f"TGT-{t:03d}" for t in range(_TARGET_SPACE) if f"TGT-{t:03d}" not in used_targets]
    free_drugs = [f"DRG-{d:04d}" for d in range(_DRUG_SPACE) if f"DRG-{d:04d}" not in used_drugs]
    if len(free_targets) < m or len(free_drugs) < 2 * m:
        raise InsufficientBridges(
            f"need {m} free targets and {2 * m} free drugs to plant bridges"
        )
    rng.shuffle(free_targets)
    rng.shuffle(free_drugs)

    anchor_idx = rng.choice(len(facts), size=m, replace=False)
    planted: list[FactRecord] = []
    cases: list[MultiHopCase] = []
    next_doc = len(facts)

    def plant(drug_id: str, target_id: str, assay: str) -> FactRecord:
        nonlocal next_doc
        lo, hi = ASSAY_RANGES[assay]
        value = round(float(rng.uniform(lo, hi)), 1)
        fact = FactRecord(
            drug_id=drug_id,
            target_id=target_id,
            assay_type=assay,
            value=value,
            unit=ASSAY_UNITS[assay],
            sentence=_render_sentence(drug_id, target_id, assay, value),
            doc_id=f"f{next_doc:05d}",
        )
        next_doc += 1
        used_pairs.add((drug_id, target_id))
        planted.append(fact)
        return fact

    for case_no, idx in enumerate(int(i) for i in anchor_idx):
        anchor = facts[idx]
        bridge_drug, t1 = anchor.drug_id, anchor.target_id
        t2 = free_targets[case_no]
        hop2_assay = ASSAY_TYPES[int(rng.integers(0, len(ASSAY_TYPES)))]
        while hop2_assay == anchor.assay_type:
            hop2_assay = ASSAY_TYPES[int(rng.integers(0, len(ASSAY_TYPES)))]
        hop2_fact = plant(bridge_drug, t2, hop2_assay)
        # decoys make each target individually ambiguous
        plant(free_drugs[2 * case_no], t1, anchor.assay_type)
        plant(free_drugs[2 * case_no + 1], t2, hop2_assay)

        question = MULTIHOP_TEMPLATE.format(assay=hop2_assay, t1=t1, t2=t2)
        cases.append(
            MultiHopCase(
                question=question,
                hop1=(f"Target {t1} and Target {t2}", "shared compound", f"Compound {bridge_drug}"),
                hop2=(hop2_fact.subject, hop2_fact.predicate, hop2_fact.value_str),
                final_answer=hop2_fact.value_str,
            )
        )

    all_facts = tuple(facts) + tuple(planted)
    _check_multihop(all_facts, cases)
    return MultiHopFixture(facts=all_facts, cases=tuple(cases))


def _check_multihop(facts: Sequence[FactRecord], cases: Sequence[MultiHopCase]) -> None:
    by_drug: dict[str, set[str]] = {}
    by_target: dict[str, int] = {}
    for f in facts:
        by_drug.setdefault(f.drug_id, set()).add(f.target_id)
        by_target[f.target_id] = by_target.get(f.target_id, 0) + 1
    for case in cases:
        t1, t2 = re.findall(r"Target (\S+?)(?: |\?)", case.question)[:2]
        bridges = [d for d, ts in by_drug.items() if t1 in ts and t2 in ts]
        assert len(bridges) == 1, f"bridge must be unique for {case.question!r}"
        assert by_target[t1] >= 2 and by_target[t2] >= 2, "each hop target needs a decoy"
        assert not any(t1 in f.sentence and t2 in f.sentence for f in facts), (
            "no single sentence may mention both hop targets"
        )


# ---------------------------------------------------------------------------
# Prompt serialization
# ---------------------------------------------------------------------------

# The preamble length is part of the token model calibration: together with
# ~27 tokens per fact line it puts the in-context overflow wall between
# N=7,000 and N=8,000 under a 200K window.
PROMPT_PREAMBLE = """\
You are the working memory for a pharmacology research group. The knowledge \
base below is the complete set of assay results recorded so far, one fact \
per line, each in the fixed form: Compound <drug> shows activity against \
Target <target> with <assay> of <value>.

Rules for answering:
Answer strictly from the fact lines below. Never estimate a value, never \
interpolate, never combine facts into a derived number, and never fall back \
on outside pharmacology knowledge, however plausible.
When the requested fact is present, report the stored value verbatim with \
its unit.
When the requested fact is not present, reply exactly: I don't have that \
specific information. Do not speculate about what the value might be.
Treat compound identifiers, target identifiers, and assay names as exact \
keys: DRG-0042 and DRG-0420 are different compounds, and IC50 is not \
interchangeable with EC50, Ki, Binding Affinity, or Selectivity Index.
Keep answers to a single short sentence, with no preamble, no caveats, and \
no commentary beyond the requested measurement.

KNOWLEDGE BASE:
"""


def serialize_prompt(facts: Sequence[FactRecord]) -> str:
    """Preamble + one fact sentence per line + query slot marker."""
    lines = "\n".join(f.sentence for f in facts)
    body = f"{lines}\n\n" if facts else ""
    return f"{PROMPT_PREAMBLE}{body}QUERY: "


# ---------------------------------------------------------------------------
# JSONL export
# ---------------------------------------------------------------------------


def write_jsonl(records: Sequence[object], path: Union[str, Path]) -> None:
    """Serialize dataclass records (or dicts) one JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            if hasattr(record, "__dataclass_fields__"):
                payload = asdict(record)
            else:
                payload = record
            fh.write(json.dumps(_jsonable(payload), ensure_ascii=False) + "\n")


def _jsonable(value):
    if isinstance(value, frozenset):
        return sorted(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value
