#!/usr/bin/env python3
# The four-rule grammar on "a a b": symbolic chart next to the decoded one.
from dcyk import HrrSpace, builtin_grammar, cyk_parse, dcyk_parse, decode_scores, decode_chart
from dcyk.evaluation import score_cells

g = builtin_grammar("fig1")
print(g.render())
w = ("a", "a", "b")
oracle = cyk_parse(g, w)
print("symbolic chart")
print(oracle.to_text())

exact = 0
for seed in range(10):
    space = HrrSpace(2000, seed=seed)
    dist = dcyk_parse(space, g, w)
    scores = decode_scores(space, dist, g)
    decoded = decode_chart(space, dist, g, 0.99, scores)
    sc = score_cells(oracle, decoded)
    exact += decoded == oracle
    print(f"seed {seed}: p={sc.precision:.2f} r={sc.recall:.2f}",
          "" if decoded == oracle else f"extra={sorted(decoded.triples() - oracle.triples())}")

print(f"{exact}/10 seeds exact")

# raw decoder entries for the last seed: cells in the chart sit near 1
for i, j, a, raw, s in scores:
    if raw > 0.3:
        print(f"({i},{j},{a}) raw={raw:.3f} sigma={s:.3f}")
