import pytest

from komem.corpus import gen_multihop, gen_pharma, gen_queries
from komem.embed import HashEmbedder, build_index
from komem.harness import ingest_facts
from komem.lifecycle import classify_answer
from komem.llm import MockQueryParser, MockScanAnswerer
from komem.pipelines import (
    Outcome,
    WindowConfig,
    query_in_context,
    query_ko,
    query_multihop,
    query_rag,
)

PARSER = MockQueryParser()
ANSWERER = MockScanAnswerer()


@pytest.fixture(scope="module")
def small_corpus():
    facts = gen_pharma(10, 42)
    return facts, gen_queries(facts, 10, 42)


class TestInContext:
    def test_small_corpus_all_correct(self, small_corpus):
        facts, queries = small_corpus
        for case in queries:
            result = query_in_context(facts, case.question, ANSWERER)
            assert result.outcome is None
            assert classify_answer(case.gold_answer, result.answer) == "correct"

    def test_overflow_at_8000_not_7000(self):
        question = "What is the Ki of Compound DRG-0000 against Target TGT-000?"
        fits = query_in_context(gen_pharma(7_000, 42), question, ANSWERER)
        assert fits.outcome is None
        blocked = query_in_context(gen_pharma(8_000, 42), question, ANSWERER)
        assert blocked.outcome is Outcome.OVERFLOW
        assert blocked.answer is None
        assert blocked.output_tokens == 0

    def test_overflow_uses_configured_window(self, small_corpus):
        facts, queries = small_corpus
        result = query_in_context(facts, queries[0].question, ANSWERER,
                                  WindowConfig(window_tokens=10))
        assert result.outcome is Outcome.OVERFLOW

    def test_overflow_boundary_flips_exactly(self):
        # with W sized to the 7,400-fact prompt, 7,400 fits and 7,401 does not
        from komem.corpus import serialize_prompt
        from komem.econ import estimate_tokens

        facts = gen_pharma(7_401, 42)
        question = "What is the Ki of Compound DRG-0000 against Target TGT-000?"
        window = WindowConfig(window_tokens=estimate_tokens(
            f"{serialize_prompt(facts[:7_400])}{question}\nANSWER:"
        ))
        fits = query_in_context(facts[:7_400], question, ANSWERER, window)
        assert fits.outcome is not Outcome.OVERFLOW
        blocked = query_in_context(facts, question, ANSWERER, window)
        assert blocked.outcome is Outcome.OVERFLOW

    def test_tokens_recorded(self, small_corpus):
        facts, queries = small_corpus
        result = query_in_context(facts, queries[0].question, ANSWERER)
        assert result.input_tokens > 0
        assert result.output_tokens > 0


class TestRag:
    def test_pharma_corpus_exact_match(self):
        facts = gen_pharma(1_000, 42)
        provider = HashEmbedder()
        index = build_index([f.sentence for f in facts], provider,
                            [f.doc_id for f in facts])
        for case in gen_queries(facts, 20, 42):
            result = query_rag(index, case.question, ANSWERER, provider)
            assert classify_answer(case.gold_answer, result.answer) == "correct"

    def test_k_at_least_n_degenerates_to_full_context(self, small_corpus):
        facts, queries = small_corpus
        provider = HashEmbedder()
        index = build_index([f.sentence for f in facts], provider,
                            [f.doc_id for f in facts])
        result = query_rag(index, queries[0].question, ANSWERER, provider, k=50)
        # every sentence retrieved: answer still exact
        assert classify_answer(queries[0].gold_answer, result.answer) == "correct"


class TestKo:
    def test_clean_queries_all_correct(self):
        for n in (10, 200):
            facts = gen_pharma(n, 42)
            store = ingest_facts(facts)
            for case in gen_queries(facts, min(20, n), 42):
                result = query_ko(store, case.question, PARSER, ANSWERER)
                assert classify_answer(case.gold_answer, result.answer) == "correct"

    def test_unknown_subject_abstains(self, small_corpus):
        facts, _ = small_corpus
        store = ingest_facts(facts)
        result = query_ko(
            store, "What is the Ki of Compound DRG-9999 against Target TGT-999?",
            PARSER, ANSWERER,
        )
        assert classify_answer("0.0", result.answer) == "abstained"

    def test_never_wrong_with_mocks(self):
        facts = gen_pharma(300, 1337)
        store = ingest_facts(facts)
        cases = (gen_queries(facts, 30, 1337)
                 + gen_queries(facts, 30, 1337, style="messy"))
        for case in cases:
            result = query_ko(store, case.question, PARSER, ANSWERER)
            assert classify_answer(case.gold_answer, result.answer) in ("correct", "abstained")

    def test_tokens_flat_in_n(self):
        means = []
        for n in (100, 1_000, 10_000):
            facts = gen_pharma(n, 42)
            store = ingest_facts(facts)
            cases = gen_queries(facts, 10, 42)
            totals = [query_ko(store, c.question, PARSER, ANSWERER).total_tokens
                      for c in cases]
            means.append(sum(totals) / len(totals))
        assert max(means) / min(means) < 1.1
        assert all(abs(m - 900) <= 180 for m in means)


class TestMultihop:
    def test_planted_bridges_all_correct(self):
        fixture = gen_multihop(gen_pharma(500, 42), m=19, seed=42)
        store = ingest_facts(fixture.facts)
        for case in fixture.cases:
            result = query_multihop(store, case, PARSER, ANSWERER)
            assert classify_answer(case.final_answer, result.answer) == "correct"

    def test_ambiguous_bridge_abstains(self):
        from komem.corpus import MultiHopCase

        fixture = gen_multihop(gen_pharma(500, 42), m=2, seed=42)
        store = ingest_facts(fixture.facts)
        case = fixture.cases[0]
        t1 = case.hop1[0].split(" and ")[0].replace("Target ", "")
        t2 = case.hop1[0].split(" and ")[1].replace("Target ", "")
        # inject a second bridge covering both targets
        from komem.core import KnowledgeObject

        store.put(KnowledgeObject("Compound DRG-9998", f"Target {t1} | Ki", "1.0 nM"))
        store.put(KnowledgeObject("Compound DRG-9998", f"Target {t2} | Ki", "2.0 nM"))
        result = query_multihop(store, case, PARSER, ANSWERER)
        assert classify_answer(case.final_answer, result.answer) == "abstained"

    def test_malformed_question_abstains(self):
        from komem.corpus import MultiHopCase

        store = ingest_facts(gen_pharma(50, 42))
        case = MultiHopCase(
            question="Tell me something interesting about kinases.",
            hop1=("", "", ""), hop2=("", "", ""), final_answer="42.0",
        )
        result = query_multihop(store, case, PARSER, ANSWERER)
        assert classify_answer("42.0", result.answer) == "abstained"


def test_results_stream_jsonl(tmp_path, small_corpus):
    import json

    from komem.pipelines import write_results_jsonl

    facts, queries = small_corpus
    store = ingest_facts(facts)
    results = [query_ko(store, q.question, PARSER, ANSWERER) for q in queries[:3]]
    path = tmp_path / "results.jsonl"
    write_results_jsonl(results, path)
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert len(lines) == 3
    assert all(l["mode"] == "ko" for l in lines)
    assert all(l["input_tokens"] > 0 for l in lines)
