import numpy as np
import pytest

from komem.corpus import (
    ASSAY_TYPES,
    MTooLarge,
    gen_adversarial,
    gen_confusable,
    gen_goal_drift_script,
    gen_multihop,
    gen_pharma,
    gen_queries,
    parse_sentence,
    serialize_prompt,
    value_pattern,
)
from komem.econ import estimate_tokens
from komem.embed import HashEmbedder, cosine

SEEDS = (42, 123, 456, 789, 1337)


class TestGenPharma:
    def test_deterministic(self):
        assert gen_pharma(10, 42) == gen_pharma(10, 42)

    def test_seeds_differ(self):
        assert gen_pharma(10, 42) != gen_pharma(10, 123)

    def test_unique_subject_predicate(self):
        facts = gen_pharma(10_000, 42)
        pairs = {(f.subject, f.predicate) for f in facts}
        assert len(pairs) == 10_000

    def test_sentence_round_trip(self):
        for fact in gen_pharma(200, 123):
            drug, target, assay, value = parse_sentence(fact.sentence)
            assert (drug, target, assay) == (fact.drug_id, fact.target_id, fact.assay_type)
            assert value == pytest.approx(fact.value)

    def test_template_matches_reference_form(self):
        fact = gen_pharma(1, 42)[0]
        assert fact.sentence.startswith(f"Compound {fact.drug_id} shows activity against Target ")

    def test_tokens_per_fact(self):
        facts = gen_pharma(2_000, 42)
        per_fact = [estimate_tokens(f.sentence) + 1 for f in facts]  # +1 line break
        assert abs(np.mean(per_fact) - 27) <= 5

    def test_value_has_one_decimal(self):
        for fact in gen_pharma(100, 7):
            assert fact.value_str.count(".") == 1
            assert len(fact.value_str.split(".")[1]) == 1

    def test_too_many_facts(self):
        from komem.corpus import TooManyFacts

        with pytest.raises(TooManyFacts):
            gen_pharma(10_000_001, 42)


class TestGenQueries:
    def test_without_replacement(self):
        facts = gen_pharma(1_000, 42)
        cases = gen_queries(facts, 20, 42)
        assert len({(c.gold_subject, c.gold_predicate) for c in cases}) == 20

    def test_gold_answers_verify(self):
        facts = gen_pharma(500, 123)
        by_pair = {(f.subject, f.predicate): f for f in facts}
        for case in gen_queries(facts, 30, 123):
            assert by_pair[(case.gold_subject, case.gold_predicate)].value_str == case.gold_answer

    def test_m_too_large(self):
        with pytest.raises(MTooLarge):
            gen_queries(gen_pharma(5, 42), 6, 42)

    def test_messy_bank_cycles(self):
        facts = gen_pharma(100, 42)
        cases = gen_queries(facts, 10, 42, style="messy")
        assert all(c.style == "messy" for c in cases)
        assert len({c.question for c in cases}) == 10


class TestGenAdversarial:
    def test_default_shape(self):
        fixture = gen_adversarial(seed=42)
        assert len(fixture.groups) == 10
        assert all(len(g.docs) == 4 for g in fixture.groups)
        assert len(fixture.docs) == 40
        assert len(fixture.queries) == 40

    def test_within_group_values_distinct(self):
        for group in gen_adversarial(seed=42).groups:
            values = [d.value for d in group.docs]
            assert len(set(values)) == len(values)

    def test_within_beats_between_for_every_group(self):
        provider = HashEmbedder()
        fixture = gen_adversarial(seed=42)
        vecs = {d.doc_id: provider.embed(d.text) for d in fixture.docs}
        for group in fixture.groups:
            ids = [d.doc_id for d in group.docs]
            within = min(
                cosine(vecs[a], vecs[b])
                for i, a in enumerate(ids) for b in ids[i + 1:]
            )
            outside = [d.doc_id for d in fixture.docs if d.doc_id not in ids]
            between = max(cosine(vecs[a], vecs[o]) for a in ids for o in outside)
            assert within > between

    def test_within_group_similarity_above_calibrated_theta(self):
        provider = HashEmbedder()
        for seed in SEEDS:
            fixture = gen_adversarial(seed=seed)
            for group in fixture.groups:
                vecs = [provider.embed(d.text) for d in group.docs]
                for i in range(len(vecs)):
                    for j in range(i + 1, len(vecs)):
                        assert cosine(vecs[i], vecs[j]) > 0.75

    def test_keys_are_phase_and_year(self):
        for doc in gen_adversarial(seed=42).docs:
            assert len(doc.keys) == 2
            assert any(k.startswith("phase ") for k in doc.keys)
            assert any(k.isdigit() and len(k) == 4 for k in doc.keys)


class TestGenConfusable:
    def test_exactly_1000(self):
        assert len(gen_confusable(42)) == 1_000

    def test_unique_pairs(self):
        facts = gen_confusable(42)
        assert len({(f.subject, f.predicate) for f in facts}) == 1_000

    def test_sibling_structure(self):
        facts = gen_confusable(42)
        groups = {}
        for f in facts:
            groups.setdefault(f.sibling_group, []).append(f)
        assert len(groups) == 100  # 20 drugs x 5 families
        for members in groups.values():
            assert len(members) == 10
            # siblings share every token except mutation (and value)
            drugs = {m.drug_id for m in members}
            families = {m.target_id.split("-")[0] for m in members}
            assays = {m.assay_type for m in members}
            assert len(drugs) == len(families) == len(assays) == 1
            mutations = {m.target_id for m in members}
            assert len(mutations) == 10
            values = {m.value_str for m in members}
            assert len(values) == 10


class TestGoalDriftScript:
    def test_shape(self):
        script = gen_goal_drift_script(42)
        assert len(script.turns) == 88
        assert len(script.constraints) == 20

    def test_char_budget_all_seeds(self):
        for seed in SEEDS:
            script = gen_goal_drift_script(seed)
            assert 20_000 <= script.total_chars <= 26_000

    def test_expected_differs_from_default(self):
        for spec in gen_goal_drift_script(42).constraints:
            assert spec.expected_value != spec.default_value

    def test_statement_verbatim_exactly_once(self):
        script = gen_goal_drift_script(123)
        text = script.text()
        for spec in script.constraints:
            assert text.count(spec.statement) == 1
            assert spec.statement in script.turns[spec.turn_index]

    def test_paper_constraints_present(self):
        script = gen_goal_drift_script(42)
        topics = {c.topic for c in script.constraints}
        assert {"python version", "caching technology", "p95 latency SLA",
                "retry limit"} <= topics

    def test_value_scan_unambiguous(self):
        script = gen_goal_drift_script(1337)
        for spec in script.constraints:
            hits = [i for i, t in enumerate(script.turns)
                    if value_pattern(spec.expected_value).search(t)]
            assert hits == [spec.turn_index]


class TestGenMultihop:
    def test_default_shape(self):
        fixture = gen_multihop(gen_pharma(500, 42), m=19, seed=42)
        assert len(fixture.cases) == 19

    def test_final_answer_is_hop2_gold(self):
        fixture = gen_multihop(gen_pharma(500, 42), m=19, seed=42)
        for case in fixture.cases:
            assert case.final_answer == case.hop2[2]

    def test_bridge_unique_and_targets_ambiguous(self):
        fixture = gen_multihop(gen_pharma(500, 123), m=19, seed=123)
        by_drug = {}
        by_target = {}
        for f in fixture.facts:
            by_drug.setdefault(f.drug_id, set()).add(f.target_id)
            by_target[f.target_id] = by_target.get(f.target_id, 0) + 1
        for case in fixture.cases:
            t1 = case.hop1[0].split(" and ")[0].replace("Target ", "")
            t2 = case.hop1[0].split(" and ")[1].replace("Target ", "")
            bridges = [d for d, ts in by_drug.items() if t1 in ts and t2 in ts]
            assert len(bridges) == 1
            assert by_target[t1] >= 2 and by_target[t2] >= 2

    def test_no_sentence_mentions_both_targets(self):
        fixture = gen_multihop(gen_pharma(500, 42), m=19, seed=42)
        for case in fixture.cases:
            t1 = case.hop1[0].split(" and ")[0].replace("Target ", "")
            t2 = case.hop1[0].split(" and ")[1].replace("Target ", "")
            assert not any(t1 in f.sentence and t2 in f.sentence for f in fixture.facts)


class TestSerializePrompt:
    def test_zero_facts_is_preamble_only(self):
        prompt = serialize_prompt([])
        assert prompt.endswith("QUERY: ")
        assert "Compound DRG" not in prompt.split("KNOWLEDGE BASE:")[1]

    def test_byte_deterministic(self):
        facts = gen_pharma(50, 42)
        assert serialize_prompt(facts) == serialize_prompt(facts)

    def test_affine_length_growth(self):
        ns = [100, 500, 1_000, 2_000, 5_000]
        lengths = []
        for n in ns:
            lengths.append(len(serialize_prompt(gen_pharma(n, 42))))
        xs, ys = np.array(ns, float), np.array(lengths, float)
        slope, intercept = np.polyfit(xs, ys, 1)
        predicted = slope * xs + intercept
        r_squared = 1 - np.sum((ys - predicted) ** 2) / np.sum((ys - ys.mean()) ** 2)
        assert r_squared > 0.999

    def test_n7000_token_estimate(self):
        estimate = estimate_tokens(serialize_prompt(gen_pharma(7_000, 42)))
        assert abs(estimate - 189_000) <= 189_000 * 0.02
