"""Walkthrough: storing and retrieving facts by deterministic hash key.

Every fact is a (subject, predicate, object, provenance) tuple addressed by
SHA-256 over its normalized subject and predicate. Lookup never searches:
one hash computation finds the fact whether the store holds ten entries or
a million.
"""

from komem import KnowledgeObject, KoStore, NotFound, Provenance, compute_key, normalize

# Normalization makes key derivation insensitive to the noise real text carries.
print("normalize('  Erlotinib ')      ->", repr(normalize("  Erlotinib ")))
print("normalize('IC50   for\\tEGFR') ->", repr(normalize("IC50   for\tEGFR")))
print()

# Same pair, same key, always.
key = compute_key("Erlotinib", "IC50 for EGFR")
print("key hex:", key.hex)
assert key == compute_key("  ERLOTINIB  ", "ic50 for egfr")

store = KoStore()
store.put(
    KnowledgeObject(
        subject="Erlotinib",
        predicate="IC50 for EGFR",
        object="2.3 nM",
        provenance=Provenance(source="assay db", timestamp="2025-01-15"),
    )
)

# The conversational-extraction shape works the same way: a decision made in
# a meeting becomes an addressable fact.
store.put(
    KnowledgeObject(
        subject="caching_technology",
        predicate="vetoed",
        object="Redis",
        provenance=Provenance(source="team meeting", timestamp="2025-01-15"),
    )
)

hit = store.get(compute_key("caching_technology", "vetoed"))
print("lookup (caching_technology, vetoed)  ->", hit.object)

miss = store.get(compute_key("deployment_region", "chosen"))
print("lookup (deployment_region, chosen)   ->", type(miss).__name__)
assert isinstance(miss, NotFound)

# Writes to the same key overwrite; the displaced fact comes back.
previous = store.put(KnowledgeObject("Erlotinib", "IC50 for EGFR", "2.4 nM"))
print("overwrite displaced:", previous.object, "->",
      store.get(compute_key("Erlotinib", "IC50 for EGFR")).object)
