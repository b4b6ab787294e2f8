#!/usr/bin/env python3
# Cell f1 against matrix dimension, and precision against grammar size.
from dcyk import builtin_grammar, generate_sentences
from dcyk.evaluation import aggregate, run_sweep, summary_to_text

g0 = builtin_grammar("g0")
sentences = generate_sentences(g0, 50, 7, seed=0)

rows = run_sweep({"g0": g0}, [100, 500, 1000, 2000], sentences, [0])
print(summary_to_text([s for s in aggregate(rows) if s["grouping"] == "dim"]))

family = {n: builtin_grammar(n) for n in ("g0", "g1", "g2", "g3", "g4")}
for name, g in family.items():
    print(name, g.n_rules, "rules")
rows = run_sweep(family, [2000], sentences, [0])
print(summary_to_text([s for s in aggregate(rows) if s["grouping"] == "dim"]))

# f1 against sentence length at d=2000
print(summary_to_text([s for s in aggregate(rows)
                       if s["grouping"] == "length" and s["grammar_id"] == "g0"]))
