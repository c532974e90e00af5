"""Walkthrough: the two lifecycle failure modes of prompt-resident memory.

First the hard wall: serialized facts grow linearly in token count until the
prompt no longer fits the window and the query fails before any model sees
it. Then the soft one: compacting old context keeps only a fraction of the
fact lines, and exactly that fraction of questions stays answerable, while
the hash-addressed store is untouched by either.
"""

from komem.corpus import gen_pharma, gen_queries, serialize_prompt
from komem.econ import estimate_tokens
from komem.harness import ingest_facts
from komem.lifecycle import classify_answer, fraction_compactor
from komem.llm import MockQueryParser, MockScanAnswerer
from komem.pipelines import Outcome, query_in_context, query_ko

answerer = MockScanAnswerer()
parser = MockQueryParser()

print("in-context prompt growth (window 200K tokens):")
for n in (100, 1_000, 7_000, 8_000):
    tokens = estimate_tokens(serialize_prompt(gen_pharma(n, 42)))
    status = "OVERFLOW" if tokens > 200_000 else "fits"
    print(f"   N={n:>6}: ~{tokens:>7} tokens  {status}")
print()

facts = gen_pharma(8_000, 42)
question = "What is the Ki of Compound DRG-0000 against Target TGT-000?"
result = query_in_context(facts, question, answerer)
assert result.outcome is Outcome.OVERFLOW
print("N=8,000 query outcome:", result.outcome.value, "(no endpoint was called)")
print()

# Compaction at a controlled ratio: keep 40% of lines, lose the rest.
facts = gen_pharma(2_000, 42)
text = "\n".join(f.sentence for f in facts)
summary = fraction_compactor(text, target_ratio=2.5)
kept = summary.count("\n")
print(f"compacted {len(facts)} fact lines -> {kept} lines "
      f"({len(text)} chars -> {len(summary)} chars)")

store = ingest_facts(facts)
queries = gen_queries(facts, 200, 7)
from komem.corpus import PROMPT_PREAMBLE

outcomes = {"correct": 0, "abstained": 0, "wrong": 0}
ko_correct = 0
for case in queries:
    prompt = f"{PROMPT_PREAMBLE}{summary}\n\nQUERY: {case.question}\nANSWER:"
    outcomes[classify_answer(case.gold_answer, answerer.complete(prompt).response)] += 1
    ko = query_ko(store, case.question, parser, answerer)
    ko_correct += classify_answer(case.gold_answer, ko.answer) == "correct"

n = len(queries)
print(f"recall from the summary: correct {outcomes['correct']/n:.0%}, "
      f"abstained {outcomes['abstained']/n:.0%}, wrong {outcomes['wrong']/n:.0%}")
print(f"recall from the KO store over the same questions: {ko_correct/n:.0%}")
