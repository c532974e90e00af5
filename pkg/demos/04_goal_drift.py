"""Walkthrough: constraints eroding under cascading compaction.

An 88-turn project conversation carries 20 non-default decisions, each
stated once. Summarize the conversation, keep working, summarize the
summary: with every round more constraints silently vanish, and whatever
survives is all a later session will ever know. Constraints stored as
hash-addressed facts are immune because they never ride in the prompt.
"""

from komem.core import KnowledgeObject
from komem.corpus import gen_goal_drift_script
from komem.lifecycle import cascade, score_constraints
from komem.store import KoStore, NotFound

script = gen_goal_drift_script(seed=42)
print(f"conversation: {len(script.turns)} turns, {script.total_chars} chars, "
      f"{len(script.constraints)} constraints")
print("a few of the embedded constraints:")
for spec in script.constraints[:4]:
    print(f"   [{spec.topic}] {spec.statement}")
print()

full = score_constraints(script, script.text())
print(f"full context: {full.correct:.0%} of constraints recoverable")

for result in cascade(script.text(), rounds=3, per_round_ratio=3.1, interleave=True):
    score = score_constraints(script, result.summary,
                              compression_ratio=result.cumulative_ratio)
    lost = [topic for topic, label in score.labels.items() if label == "lost"]
    print(f"round {result.round}: {result.cumulative_ratio:4.1f}x total compression, "
          f"correct {score.correct:.0%}, lost {len(lost)}/20")
    if result.round == 3:
        print("   gone by round 3:", ", ".join(sorted(lost)[:6]), "...")
print()

store = KoStore()
for spec in script.constraints:
    store.put(KnowledgeObject(spec.topic, "project constraint", spec.expected_value))
recovered = sum(
    not isinstance(store.get_by_pair(spec.topic, "project constraint"), NotFound)
    for spec in script.constraints
)
print(f"constraints recoverable from the KO store after any number of rounds: "
      f"{recovered}/{len(script.constraints)}")
