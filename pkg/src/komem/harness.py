"""Experiment runners, metrics, and report emission for the five benchmarks.

Every runner emits ReportRows. Rows that assert a reference value carry both
the reference and a tolerance (plus a check direction); rows without a
tolerance are informational, including the paper's live frontier-model
numbers, which mock mode displays side by side but never asserts. The
emitted report doubles as the CI oracle: emit_report returns the breached
rows and the CLI exits nonzero when there are any.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .core import KnowledgeObject, Provenance
from .corpus import (
    AdversarialFixture,
    CLEAN_TEMPLATE,
    FactRecord,
    PROMPT_PREAMBLE,
    QueryCase,
    gen_adversarial,
    gen_confusable,
    gen_goal_drift_script,
    gen_multihop,
    gen_pharma,
    gen_queries,
)
from .econ import PriceTable, TokenModel, annual_table, ingest_cost_per_1000, query_cost
from .embed import CorpusIndex, HashEmbedder, build_index, top_k
from .lifecycle import RecallTaxonomy, cascade, classify_answer, compact, score_constraints
from .llm import LlmEndpoint, MockQueryParser, MockScanAnswerer
from .pipelines import (
    Outcome,
    WindowConfig,
    query_in_context,
    query_ko,
    query_multihop,
    query_rag,
    write_results_jsonl,
)
from .retrieval import RetrievalConfig, adaptive_retrieve, build_key_index, density
from .store import KoStore, NotFound

__all__ = [
    "ExperimentConfig",
    "MetricSet",
    "ReportRow",
    "ZeroIdeal",
    "calibrate_tau",
    "emit_report",
    "ingest_facts",
    "ndcg_at_10",
    "run_adversarial",
    "run_all",
    "run_compaction",
    "run_drift",
    "run_econ",
    "run_multihop",
    "run_scaling",
]

PROTOCOL_SEEDS = (42, 123, 456, 789, 1337)


class ZeroIdeal(ValueError):
    """NDCG is undefined when no document is relevant."""


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    n: Optional[int]
    seed: Optional[int]
    metric: str
    value: float
    paper_reference: Optional[float] = None
    tolerance: Optional[float] = None
    check: str = "abs"  # abs | max | min (direction of the asserted bound)
    note: str = ""

    def breached(self) -> bool:
        if self.tolerance is None:
            return False
        if not math.isfinite(self.value):
            return True
        if self.check == "max":
            return self.value > self.tolerance
        if self.check == "min":
            return self.value < self.tolerance
        assert self.paper_reference is not None
        return abs(self.value - self.paper_reference) > self.tolerance


@dataclass(frozen=True)
class MetricSet:
    exact_match: float = float("nan")
    p_at_1: float = float("nan")
    ndcg_at_10: float = float("nan")
    spurious_trigger_rate: float = float("nan")
    sibling_confusion: float = float("nan")


@dataclass
class ExperimentConfig:
    experiment: str = "scaling"
    n_values: tuple[int, ...] = (10, 100, 1_000, 7_000, 10_000)
    seeds: tuple[int, ...] = PROTOCOL_SEEDS
    mode: str = "mock"  # mock | live
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    token_model: TokenModel = field(default_factory=TokenModel)
    prices: PriceTable = field(default_factory=PriceTable)
    out_dir: Path = Path("runs")
    trace: bool = False
    stream_results: bool = False  # per-query PipelineResult JSONL in out_dir
    endpoints: dict[str, LlmEndpoint] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        self.n_values = tuple(sorted(self.n_values))
        self.out_dir = Path(self.out_dir)

    def queries_per_n(self, n: int) -> int:
        return 20 if n < 1_000 else 30

    def parser(self) -> LlmEndpoint:
        return self.endpoints.get("parser") or MockQueryParser()

    def answerer(self) -> LlmEndpoint:
        return self.endpoints.get("answerer") or MockScanAnswerer()

    def compactor(self) -> Optional[LlmEndpoint]:
        return self.endpoints.get("compactor")


def ingest_facts(facts: Sequence[FactRecord], journal_path: Union[str, Path, None] = None,
                 source: str = "generator") -> KoStore:
    """Turn fact records into KOs keyed by (subject, predicate)."""
    store = KoStore(journal_path)
    for fact in facts:
        value = f"{fact.value_str} {fact.unit}".rstrip()
        store.put(
            KnowledgeObject(
                subject=fact.subject,
                predicate=fact.predicate,
                object=value,
                provenance=Provenance(source=source, timestamp="2025-01-15"),
            )
        )
    return store


def ndcg_at_10(ranking: Sequence[str], relevance: Mapping[str, float]) -> float:
    """Standard NDCG@10: log2-discounted gains over the ideal ordering."""
    if not any(v > 0 for v in relevance.values()):
        raise ZeroIdeal("no relevant documents")
    gains = [relevance.get(doc_id, 0.0) for doc_id in ranking[:10]]
    dcg = sum(g / math.log2(rank + 2) for rank, g in enumerate(gains))
    ideal = sorted((v for v in relevance.values() if v > 0), reverse=True)[:10]
    idcg = sum(g / math.log2(rank + 2) for rank, g in enumerate(ideal))
    return dcg / idcg


# ---------------------------------------------------------------------------
# Scaling benchmark (Table 2 shape)
# ---------------------------------------------------------------------------


def _exact_match_fraction(queries: Sequence[QueryCase], answers: Sequence[Optional[str]]) -> float:
    hits = sum(
        1
        for case, answer in zip(queries, answers)
        if answer is not None and classify_answer(case.gold_answer, answer) == "correct"
    )
    return hits / len(queries)


def run_scaling(config: ExperimentConfig) -> list[ReportRow]:
    """Exact-match accuracy and token cost for in-context, RAG, and KO.

    Wall-clock budget (< 5 min) is timed by the acceptance suite around this
    call; timing is kept out of the rows so report.jsonl stays byte-identical
    across runs.
    """
    rows: list[ReportRow] = []
    parser, answerer = config.parser(), config.answerer()
    provider = HashEmbedder()
    in_context_tokens: dict[int, float] = {}
    ko_token_means: list[float] = []
    for seed in config.seeds:
        for n in config.n_values:
            facts = gen_pharma(n, seed)
            queries = gen_queries(facts, min(config.queries_per_n(n), n), seed)
            store = ingest_facts(facts)

            ko_results = [
                query_ko(store, q.question, parser, answerer) for q in queries
            ]
            rows.append(ReportRow(
                "scaling", n, seed, "ko_exact_match",
                _exact_match_fraction(queries, [r.answer for r in ko_results]),
                paper_reference=1.0, tolerance=0.0,
            ))
            ko_token_means.append(
                float(np.mean([r.total_tokens for r in ko_results]))
            )

            ic_results = [
                query_in_context(facts, q.question, answerer, config.window)
                for q in queries
            ]
            if any(r.outcome is Outcome.OVERFLOW for r in ic_results):
                rows.append(ReportRow(
                    "scaling", n, seed, "in_context_overflow", 1.0,
                    note="prompt exceeds window; no endpoint call made",
                ))
            else:
                rows.append(ReportRow(
                    "scaling", n, seed, "in_context_exact_match",
                    _exact_match_fraction(queries, [r.answer for r in ic_results]),
                    paper_reference=1.0, tolerance=0.0,
                ))
            in_context_tokens[n] = float(np.mean([r.input_tokens for r in ic_results]))

            index = build_index([f.sentence for f in facts], provider,
                                [f.doc_id for f in facts])
            rag_results = [
                query_rag(index, q.question, answerer, provider, k=config.retrieval.k)
                for q in queries
            ]
            rows.append(ReportRow(
                "scaling", n, seed, "rag_exact_match",
                _exact_match_fraction(queries, [r.answer for r in rag_results]),
                paper_reference=1.0, tolerance=0.0,
            ))

            if config.stream_results:
                config.out_dir.mkdir(parents=True, exist_ok=True)
                write_results_jsonl(
                    ko_results + ic_results + rag_results,
                    config.out_dir / f"results_scaling_seed{seed}_n{n}.jsonl",
                )

    # token contracts, measured over the last seed's sweep
    ns = sorted(in_context_tokens)
    if len(ns) >= 3:
        xs = np.array(ns, dtype=float)
        ys = np.array([in_context_tokens[n] for n in ns])
        slope, intercept = np.polyfit(xs, ys, 1)
        predicted = slope * xs + intercept
        ss_res = float(np.sum((ys - predicted) ** 2))
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        rows.append(ReportRow(
            "scaling", None, None, "in_context_tokens_r_squared", r_squared,
            paper_reference=1.0, tolerance=0.999, check="min",
        ))
    if ko_token_means:
        rows.append(ReportRow(
            "scaling", None, None, "ko_tokens_mean", float(np.mean(ko_token_means)),
            paper_reference=900.0, tolerance=180.0,
        ))
        rows.append(ReportRow(
            "scaling", None, None, "ko_tokens_flatness",
            max(ko_token_means) / min(ko_token_means),
            paper_reference=1.0, tolerance=1.1, check="max",
        ))
    if 7_000 in in_context_tokens:
        rows.append(ReportRow(
            "scaling", 7_000, None, "in_context_tokens_at_7000",
            in_context_tokens[7_000], paper_reference=189_000.0,
            tolerance=189_000.0 * 0.02,
        ))

    # confusable sub-run: KO cannot confuse siblings (distinct keys)
    for seed in config.seeds[:1]:
        facts = gen_confusable(seed)
        queries = gen_queries(facts, 30, seed)
        store = ingest_facts(facts)
        results = [query_ko(store, q.question, parser, answerer) for q in queries]
        by_pair = {(f.subject, f.predicate): f for f in facts}
        siblings_values: dict[str, list[str]] = {}
        for f in facts:
            siblings_values.setdefault(f.sibling_group, []).append(f.value_str)
        confused = 0
        for case, result in zip(queries, results):
            if result.answer is None:
                continue
            gold_fact = by_pair[(case.gold_subject, case.gold_predicate)]
            if classify_answer(case.gold_answer, result.answer) == "correct":
                continue
            others = [v for v in siblings_values[gold_fact.sibling_group]
                      if v != gold_fact.value_str]
            if any(classify_answer(v, result.answer) == "correct" for v in others):
                confused += 1
        rows.append(ReportRow(
            "scaling", len(facts), seed, "sibling_confusion", confused / len(queries),
            paper_reference=0.0, tolerance=0.0,
        ))
    return rows


# ---------------------------------------------------------------------------
# Adversarial retrieval benchmark (Table 1 shape)
# ---------------------------------------------------------------------------

ADVERSARIAL_K = 4  # pool of 2k = 8 candidates, matching the group size


def _densities(
    queries: Sequence[str],
    index: CorpusIndex,
    provider: HashEmbedder,
    k: int,
) -> list[float]:
    out = []
    row = {doc_id: i for i, doc_id in enumerate(index.doc_ids)}
    for question in queries:
        hits = top_k(index, provider.embed(question), min(k, len(index)))
        vecs = [index.vectors[row[doc_id]] for doc_id, _ in hits]
        out.append(density(vecs))
    return out


def calibrate_tau(seed: int = 42, k: int = ADVERSARIAL_K) -> dict[str, float]:
    """Midpoint threshold between adversarial and standard mean densities."""
    provider = HashEmbedder()
    fixture = gen_adversarial(seed=seed)
    adv_index = build_index([d.text for d in fixture.docs], provider,
                            [d.doc_id for d in fixture.docs])
    adv_rho = _densities([q.question for q in fixture.queries], adv_index, provider, k)

    facts = gen_pharma(1_000, seed)
    std_index = build_index([f.sentence for f in facts], provider,
                            [f.doc_id for f in facts])
    std_queries = gen_queries(facts, 30, seed)
    std_rho = _densities([q.question for q in std_queries], std_index, provider, k)

    mean_adv = float(np.mean(adv_rho))
    mean_std = float(np.mean(std_rho))
    return {
        "mean_adversarial_density": mean_adv,
        "mean_standard_density": mean_std,
        "density_gap": mean_adv - mean_std,
        "tau": (mean_adv + mean_std) / 2.0,
        "max_standard_density": float(np.max(std_rho)),
        "min_adversarial_density": float(np.min(adv_rho)),
    }


def _adversarial_p_at_1(
    fixture: AdversarialFixture,
    index: CorpusIndex,
    key_index,
    provider: HashEmbedder,
    config: RetrievalConfig,
) -> float:
    hits = 0
    for query in fixture.queries:
        retrieved = adaptive_retrieve(query.question, index, key_index, provider, config)
        if retrieved.candidates and retrieved.candidates[0].doc_id == query.gold_doc_id:
            hits += 1
    return hits / len(fixture.queries)


def run_adversarial(config: ExperimentConfig) -> list[ReportRow]:
    """P@1 for embedding-only / always-rerank / adaptive, densities, triggers."""
    rows: list[ReportRow] = []
    provider = HashEmbedder()
    for seed in config.seeds:
        calib = calibrate_tau(seed)
        tau = calib["tau"]
        fixture = gen_adversarial(seed=seed)
        index = build_index([d.text for d in fixture.docs], provider,
                            [d.doc_id for d in fixture.docs])
        key_index = build_key_index({d.doc_id: d.keys for d in fixture.docs})
        base = RetrievalConfig(k=ADVERSARIAL_K, tau=tau, lam=config.retrieval.lam,
                               pool_factor=config.retrieval.pool_factor)

        p1_embed = _adversarial_p_at_1(
            fixture, index, key_index, provider, replace(base, tau=math.inf))
        p1_hybrid = _adversarial_p_at_1(
            fixture, index, key_index, provider, replace(base, tau=-math.inf))
        metrics = MetricSet(
            p_at_1=_adversarial_p_at_1(fixture, index, key_index, provider, base),
        )

        rows.append(ReportRow("adversarial", 40, seed, "adaptive_p_at_1", metrics.p_at_1,
                              paper_reference=1.0, tolerance=0.0))
        rows.append(ReportRow("adversarial", 40, seed, "embedding_only_p_at_1", p1_embed,
                              paper_reference=0.20, tolerance=0.5, check="max",
                              note="paper 20% with MiniLM; hash embedder expectation ~25%"))
        rows.append(ReportRow("adversarial", 40, seed, "hybrid_always_p_at_1", p1_hybrid,
                              paper_reference=1.0, tolerance=0.0))
        rows.append(ReportRow("adversarial", 40, seed, "calibrated_tau", tau,
                              note="midpoint of adversarial and standard mean density"))
        rows.append(ReportRow("adversarial", 40, seed, "mean_adversarial_density",
                              calib["mean_adversarial_density"], paper_reference=0.90,
                              note="paper value measured with MiniLM"))
        rows.append(ReportRow("adversarial", 1_000, seed, "mean_standard_density",
                              calib["mean_standard_density"], paper_reference=0.47,
                              note="paper value measured on BEIR/SciFact"))
        rows.append(ReportRow("adversarial", None, seed, "density_gap",
                              calib["density_gap"], paper_reference=0.43,
                              tolerance=0.2, check="min"))

        # spurious triggers: standard queries whose density exceeds tau
        facts = gen_pharma(1_000, seed)
        std_index = build_index([f.sentence for f in facts], provider,
                                [f.doc_id for f in facts])
        std_key_index = build_key_index({})
        std_queries = gen_queries(facts, 30, seed)
        triggered = 0
        for case in std_queries:
            result = adaptive_retrieve(case.question, std_index, std_key_index,
                                       provider, base)
            triggered += int(result.triggered)
        rows.append(ReportRow("adversarial", 1_000, seed, "spurious_trigger_rate",
                              triggered / len(std_queries),
                              paper_reference=0.0, tolerance=0.0))
    return rows


# ---------------------------------------------------------------------------
# Compaction, drift, multi-hop
# ---------------------------------------------------------------------------


def _recall_after_compaction(
    facts: Sequence[FactRecord],
    summary: str,
    answerer: LlmEndpoint,
) -> RecallTaxonomy:
    """Query every fact against the compacted text and classify the answers."""
    counts = {"correct": 0, "abstained": 0, "wrong": 0}
    for fact in facts:
        question = CLEAN_TEMPLATE.format(
            assay=fact.assay_type, drug=fact.drug_id, target=fact.target_id
        )
        prompt = f"{PROMPT_PREAMBLE}{summary}\n\nQUERY: {question}\nANSWER:"
        answer = answerer.complete(prompt).response
        counts[classify_answer(fact.value_str, answer)] += 1
    n = len(facts)
    return RecallTaxonomy(
        correct=counts["correct"] / n,
        abstained=counts["abstained"] / n,
        wrong=counts["wrong"] / n,
    )


def run_compaction(config: ExperimentConfig,
                   kept_fractions: tuple[float, ...] = (0.1, 0.4, 0.9)) -> list[ReportRow]:
    """Fact recall after single-pass compaction at controlled kept fractions.

    Follows the paper's protocol scale (N=2,000, seed 42 only) with the mock
    compactor, whose kept-line fraction equals the measured recall exactly;
    KO recall over the untouched store is measured in the same runs.
    """
    rows: list[ReportRow] = []
    seed = config.seeds[0]
    parser, answerer = config.parser(), config.answerer()
    facts = gen_pharma(2_000, seed)
    text = "\n".join(f.sentence for f in facts)
    store = ingest_facts(facts)
    queries = gen_queries(facts, len(facts), seed)

    for fraction in kept_fractions:
        ratio = 1.0 / fraction
        result = compact(text, ratio, config.compactor())
        taxonomy = _recall_after_compaction(facts, result.summary, answerer)
        n_kept = result.summary.count("\n")  # fact lines kept (footer excluded)
        n = len(facts)
        rows.append(ReportRow("compaction", 2_000, seed, f"recall_correct_f{fraction}",
                              taxonomy.correct, paper_reference=n_kept / n, tolerance=0.0,
                              note="reference is the exact kept-line fraction"))
        rows.append(ReportRow("compaction", 2_000, seed, f"recall_wrong_f{fraction}",
                              taxonomy.wrong, paper_reference=0.0, tolerance=0.0))
        rows.append(ReportRow("compaction", 2_000, seed, f"recall_abstained_f{fraction}",
                              taxonomy.abstained, paper_reference=(n - n_kept) / n,
                              tolerance=0.0))

        ko_hits = sum(
            1 for case in queries
            if classify_answer(
                case.gold_answer,
                query_ko(store, case.question, parser, answerer).answer or "",
            ) == "correct"
        )
        rows.append(ReportRow("compaction", 2_000, seed, f"ko_recall_f{fraction}",
                              ko_hits / len(queries), paper_reference=1.0, tolerance=0.0))

    # the paper's single live data point, displayed for comparison
    paper_run = compact(text, 36.7, config.compactor())
    taxonomy = _recall_after_compaction(facts, paper_run.summary, answerer)
    rows.append(ReportRow("compaction", 2_000, seed, "recall_correct_36.7x",
                          taxonomy.correct,
                          note="paper live value 0.40 (LLM summarization, not asserted)"))
    rows.append(ReportRow("compaction", 2_000, seed, "achieved_ratio_36.7x",
                          paper_run.achieved_ratio, paper_reference=36.7,
                          note="mock line compactor"))
    return rows


def run_drift(config: ExperimentConfig, rounds: int = 3,
              per_round_ratio: float = 3.1) -> list[ReportRow]:
    """Constraint survival under cascading compaction, averaged over seeds."""
    rows: list[ReportRow] = []
    paper_refs = {1: 0.91, 2: 0.62, 3: 0.46}
    per_round_correct: dict[int, list[float]] = {r: [] for r in range(1, rounds + 1)}
    for seed in config.seeds:
        script = gen_goal_drift_script(seed)
        full = score_constraints(script, script.text())
        rows.append(ReportRow("drift", None, seed, "full_context_correct", full.correct,
                              paper_reference=1.0, tolerance=0.0))
        results = cascade(script.text(), rounds, per_round_ratio,
                          config.compactor(), interleave=True)
        previous = 1.0
        monotone = True
        for result in results:
            score = score_constraints(script, result.summary,
                                      compression_ratio=result.cumulative_ratio)
            label_total = score.correct + score.partial + score.lost
            rows.append(ReportRow(
                "drift", None, seed, f"correct_round{result.round}", score.correct,
                paper_reference=paper_refs.get(result.round),
                note="paper value is live 5-seed mean (not asserted)",
            ))
            rows.append(ReportRow(
                "drift", None, seed, f"compression_round{result.round}",
                result.cumulative_ratio,
                paper_reference={1: 9.0, 2: 17.0, 3: 31.0}.get(result.round),
                note="paper compression emerged from live summarization",
            ))
            rows.append(ReportRow(
                "drift", None, seed, f"labels_sum_round{result.round}", label_total,
                paper_reference=1.0, tolerance=1e-9,
            ))
            monotone = monotone and score.correct <= previous + 1e-12
            previous = score.correct
            per_round_correct[result.round].append(score.correct)
        rows.append(ReportRow("drift", None, seed, "correct_monotone_nonincreasing",
                              1.0 if monotone else 0.0,
                              paper_reference=1.0, tolerance=0.0))

        ko_store = KoStore()
        for spec in script.constraints:
            ko_store.put(KnowledgeObject(
                subject=spec.topic, predicate="project constraint",
                object=spec.expected_value,
                provenance=Provenance(source="conversation", timestamp="2025-01-15"),
            ))
        ko_correct = sum(
            1 for spec in script.constraints
            if not isinstance(ko_store.get_by_pair(spec.topic, "project constraint"), NotFound)
        ) / len(script.constraints)
        rows.append(ReportRow("drift", None, seed, "ko_constraint_recall", ko_correct,
                              paper_reference=1.0, tolerance=0.0))
    for round_no, values in per_round_correct.items():
        rows.append(ReportRow("drift", None, None, f"correct_round{round_no}_mean",
                              float(np.mean(values)), paper_reference=paper_refs.get(round_no),
                              note="5-seed mean; paper value is live (not asserted)"))
    return rows


def run_multihop(config: ExperimentConfig) -> list[ReportRow]:
    """Two-hop accuracy over planted-bridge cases; mock decomposition is exact."""
    rows: list[ReportRow] = []
    parser, answerer = config.parser(), config.answerer()
    for seed in config.seeds:
        fixture = gen_multihop(gen_pharma(500, seed), m=19, seed=seed)
        store = ingest_facts(fixture.facts)
        correct = sum(
            1 for case in fixture.cases
            if classify_answer(
                case.final_answer,
                query_multihop(store, case, parser, answerer).answer or "",
            ) == "correct"
        )
        rows.append(ReportRow("multihop", 500, seed, "ko_multihop_accuracy",
                              correct / len(fixture.cases),
                              paper_reference=1.0, tolerance=0.0,
                              note="paper live KO-grounded value: 0.789 (not asserted)"))
    rows.append(ReportRow("multihop", 500, None, "paper_live_reference", 0.789,
                          note="Table value for the live two-hop run; display only"))
    return rows


# ---------------------------------------------------------------------------
# Economics
# ---------------------------------------------------------------------------


def run_econ(config: ExperimentConfig) -> list[ReportRow]:
    """Reproduce the cost table and its asserted reference points."""
    rows: list[ReportRow] = []
    tm, prices = config.token_model, config.prices
    refs = {
        (100, "in_context", "per_query"): (0.009, 0.009 * 0.15),
        (1_000, "in_context", "per_query"): (0.082, 0.082 * 0.05),
        (7_000, "in_context", "per_query"): (0.568, 0.568 * 0.05),
        (1_000, "in_context", "annual"): (2_051.0, 2_051.0 * 0.05),
        (7_000, "in_context", "annual"): (14_201.0, 14_201.0 * 0.05),
    }
    for breakdown in annual_table(tm, prices):
        n, mode = breakdown.n_facts, breakdown.mode
        if breakdown.overflowed:
            rows.append(ReportRow("econ", n, None, f"{mode}_overflow", 1.0,
                                  note="in-context window exceeded; cost undefined"))
            continue
        ref_pq = refs.get((n, mode, "per_query"))
        rows.append(ReportRow("econ", n, None, f"{mode}_per_query", breakdown.per_query,
                              paper_reference=ref_pq[0] if ref_pq else None,
                              tolerance=ref_pq[1] if ref_pq else None))
        ref_an = refs.get((n, mode, "annual"))
        if mode == "ko":
            rows.append(ReportRow("econ", n, None, "ko_annual", breakdown.annual,
                                  paper_reference=56.0, tolerance=6.0))
        else:
            rows.append(ReportRow("econ", n, None, f"{mode}_annual", breakdown.annual,
                                  paper_reference=ref_an[0] if ref_an else None,
                                  tolerance=ref_an[1] if ref_an else None))
        if mode == "in_context" and n == 7_000 and breakdown.ratio_vs_ko:
            rows.append(ReportRow("econ", n, None, "ratio_vs_ko", breakdown.ratio_vs_ko,
                                  paper_reference=252.0, tolerance=22.0,
                                  note="asserted band [230, 275]"))
    ko = query_cost("ko", 1_000, tm, prices)
    rows.append(ReportRow("econ", None, None, "ko_per_query", ko.per_query,
                          paper_reference=0.002, tolerance=0.001))
    # ratio invariance under uniform price scaling
    scaled = query_cost("in_context", 7_000, tm, prices.scaled(7.3))
    baseline = query_cost("in_context", 7_000, tm, prices)
    drift = abs((scaled.ratio_vs_ko or 0) - (baseline.ratio_vs_ko or 0))
    rows.append(ReportRow("econ", 7_000, None, "ratio_scale_invariance_drift", drift,
                          paper_reference=0.0, tolerance=1e-9))
    rows.append(ReportRow("econ", 1_000, None, "ingest_cost_per_1000",
                          ingest_cost_per_1000(prices), paper_reference=0.36,
                          tolerance=0.36 * 0.15,
                          note="parser-tier extraction of 1,000 facts"))
    return rows


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

_RUNNERS = {
    "scaling": run_scaling,
    "adversarial": run_adversarial,
    "compaction": run_compaction,
    "drift": run_drift,
    "multihop": run_multihop,
    "econ": run_econ,
}


def run_all(config: ExperimentConfig) -> list[ReportRow]:
    rows: list[ReportRow] = []
    for name in ("scaling", "adversarial", "compaction", "drift", "multihop", "econ"):
        rows.extend(_RUNNERS[name](config))
    return rows


def emit_report(rows: Sequence[ReportRow], out_dir: Union[str, Path]) -> list[ReportRow]:
    """Write report.jsonl / report.csv / summary.md; return breached rows.

    Output is byte-deterministic for a fixed row sequence: no timestamps, no
    environment fingerprints, floats via repr.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    breaches = [row for row in rows if row.breached()]

    with open(out / "report.jsonl", "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(asdict(row), sort_keys=True, ensure_ascii=False) + "\n")

    fields = ["experiment", "n", "seed", "metric", "value",
              "paper_reference", "tolerance", "check", "note"]
    with open(out / "report.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(asdict(row))

    lines = ["# Benchmark report", ""]
    for experiment in dict.fromkeys(row.experiment for row in rows):
        lines.append(f"## {experiment}")
        lines.append("")
        lines.append("| metric | N | seed | value | paper ref | tol | status |")
        lines.append("|---|---|---|---|---|---|---|")
        for row in rows:
            if row.experiment != experiment:
                continue
            status = "-" if row.tolerance is None else ("BREACH" if row.breached() else "ok")
            ref = "" if row.paper_reference is None else f"{row.paper_reference:g}"
            tol = "" if row.tolerance is None else f"{row.tolerance:g}"
            lines.append(
                f"| {row.metric} | {row.n if row.n is not None else ''} "
                f"| {row.seed if row.seed is not None else ''} "
                f"| {row.value:.6g} | {ref} | {tol} | {status} |"
            )
        lines.append("")
    if breaches:
        lines.append(f"**{len(breaches)} asserted rows breached tolerance.**")
    else:
        lines.append("All asserted rows within tolerance.")
    lines.append("")
    (out / "summary.md").write_text("\n".join(lines), encoding="utf-8")
    return breaches
