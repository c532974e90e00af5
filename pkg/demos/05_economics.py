"""Walkthrough: what each memory architecture costs per query and per year.

In-context memory re-buys the whole knowledge base on every question, so its
price grows with N until the window overflows. The hash-addressed pipeline
pays for two small calls (parse, answer) no matter how large the store is.
Ratios survive any uniform re-pricing, so the comparison outlives any one
price list.
"""

from komem.econ import Mode, PriceTable, annual_table, ingest_cost_per_1000, query_cost

print(f"{'N facts':>8}  {'in-context':>12}  {'KO':>8}  {'ratio':>7}  {'annual IC / KO':>20}")
for row in annual_table():
    if row.mode != "in_context":
        continue
    ko = query_cost(Mode.KO, row.n_facts)
    if row.overflowed:
        print(f"{row.n_facts:>8}  {'OVERFLOW':>12}  {f'${ko.per_query:.3f}':>8}"
              f"  {'-':>7}  {'- / $' + format(ko.annual, '.0f'):>20}")
        continue
    print(f"{row.n_facts:>8}  {f'${row.per_query:.3f}':>12}  {f'${ko.per_query:.3f}':>8}"
          f"  {row.ratio_vs_ko:>6.0f}x"
          f"  {f'${row.annual:,.0f} / ${ko.annual:.0f}':>20}")

print()
print(f"extracting facts into the store costs "
      f"${ingest_cost_per_1000():.2f} per 1,000 facts,")
per_query_saving = (query_cost(Mode.IN_CONTEXT, 1_000).per_query
                    - query_cost(Mode.KO, 1_000).per_query)
print(f"recouped after ~{ingest_cost_per_1000() / (1_000 * per_query_saving) * 1_000:.0f} "
      f"queries at N=1,000.")

print()
scaled = PriceTable().scaled(0.25)  # imagine prices fall 4x
base_ratio = query_cost(Mode.IN_CONTEXT, 7_000).ratio_vs_ko
new_ratio = query_cost(Mode.IN_CONTEXT, 7_000, prices=scaled).ratio_vs_ko
print(f"ratio at N=7,000 with today's prices: {base_ratio:.0f}x; "
      f"after a uniform 4x price cut: {new_ratio:.0f}x")
