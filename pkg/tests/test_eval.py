import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dcyk.cyk import Chart, cyk_parse
from dcyk.evaluation import (
    CellScores,
    SweepConfig,
    SweepRow,
    aggregate,
    read_rows_csv,
    rows_to_csv,
    run_sweep,
    score_cells,
    summary_to_csv,
    summary_to_text,
    timings_to_csv,
)
from dcyk.grammar import builtin_grammar, generate_sentences


def fig1_chart():
    return cyk_parse(builtin_grammar("fig1"), "aab")


def test_identical_charts_score_perfectly():
    sc = score_cells(fig1_chart(), fig1_chart())
    assert (sc.precision, sc.recall, sc.f1) == (1.0, 1.0, 1.0)


def test_empty_decoded_chart():
    sc = score_cells(fig1_chart(), Chart(3))
    assert sc.recall == 0.0 and sc.f1 == 0.0


def test_missing_root_cell():
    decoded = fig1_chart()
    decoded[(0, 3)].discard("S")
    sc = score_cells(fig1_chart(), decoded)
    assert (sc.true_positive, sc.false_negative, sc.false_positive) == (4, 1, 0)
    assert sc.precision == 1.0
    assert sc.recall == 0.8
    assert sc.f1 == pytest.approx(0.888888888888889)


def test_mismatched_lengths():
    with pytest.raises(ValueError):
        score_cells(Chart(2), Chart(3))


def test_degenerate_scores():
    assert CellScores(0, 0, 0).f1 == 1.0
    assert CellScores(0, 3, 0).precision == 0.0
    assert CellScores(0, 0, 2).precision == 0.0
    assert CellScores(1, 2, 3) + CellScores(1, 1, 1) == CellScores(2, 3, 4)


triples = st.sets(st.tuples(st.integers(0, 3), st.integers(1, 4), st.sampled_from("SAB"))
                  .filter(lambda t: t[0] < t[1]), max_size=10)


@given(triples)
def test_self_score_is_perfect(ts):
    c = Chart(4)
    for i, j, a in ts:
        c.add(i, j, a)
    sc = score_cells(c, c)
    assert sc.precision == sc.recall == sc.f1 == 1.0


@given(triples, triples)
def test_counts_partition_triples(gold, pred):
    a, b = Chart(4), Chart(4)
    for t in gold:
        a.add(*t)
    for t in pred:
        b.add(*t)
    sc = score_cells(a, b)
    assert sc.true_positive + sc.false_negative == len(gold)
    assert sc.true_positive + sc.false_positive == len(pred)


def _row(f1, length=3, dim=100, **kw):
    base = dict(grammar_id="g0", dim=dim, seed=0, sentence_id=0, sentence_len=length,
                precision=f1, recall=f1, f1=f1, true_positive=1, false_positive=0,
                false_negative=0, recognized_oracle=True, recognized_dcyk=True)
    base.update(kw)
    return SweepRow(**base)


def test_aggregate_single_row():
    (by_dim, by_len) = aggregate([_row(0.7)])
    assert by_dim["f1"] == 0.7 and by_dim["precision"] == 0.7 and by_dim["rows"] == 1
    assert by_len["sentence_len"] == 3 and by_len["f1"] == 0.7


def test_aggregate_mean_and_lengths():
    rows = [_row(0.4, length=2, sentence_id=0), _row(0.6, length=4, sentence_id=1)]
    summary = aggregate(rows)
    by_dim = [s for s in summary if s["grouping"] == "dim"]
    by_len = [s for s in summary if s["grouping"] == "length"]
    assert len(by_dim) == 1 and by_dim[0]["f1"] == pytest.approx(0.5)
    assert [(s["sentence_len"], s["f1"]) for s in by_len] == [(2, 0.4), (4, 0.6)]
    assert by_dim[0]["micro_f1"] == 1.0
    assert "f1_ci95" in summary_to_csv(summary).splitlines()[0]
    assert len(summary_to_text(summary).splitlines()) == 4


def test_aggregate_skips_failed_rows():
    rows = [_row(0.5), _row(math.nan, sentence_id=1, error="boom")]
    assert aggregate(rows)[0]["rows"] == 1


def test_empty_sentence_list():
    assert run_sweep({"g0": builtin_grammar("g0")}, [100], [], [0]) == []


@pytest.fixture(scope="module")
def small_sweep():
    g0 = builtin_grammar("g0")
    sents = generate_sentences(g0, 6, 5, seed=1)
    rows = run_sweep({"g0": g0, "g1": builtin_grammar("g1")}, [64, 128], sents, [0, 1])
    return g0, sents, rows


def test_sweep_shape_and_order(small_sweep):
    _, sents, rows = small_sweep
    assert len(rows) == 2 * 2 * 2 * len(sents)
    assert [r.key for r in rows] == sorted(r.key for r in rows)
    assert all(not r.error for r in rows)
    assert all(r.recognized_oracle for r in rows)
    assert all(r.wall_time_ms > 0 for r in rows)


def test_sweep_is_deterministic_and_worker_independent(small_sweep):
    g0, sents, rows = small_sweep
    again = run_sweep({"g0": g0, "g1": builtin_grammar("g1")}, [64, 128], sents, [0, 1],
                      SweepConfig(workers=2))
    assert rows_to_csv(again) == rows_to_csv(rows)


def test_sweep_resume(small_sweep):
    g0, sents, rows = small_sweep
    grammars = {"g0": g0, "g1": builtin_grammar("g1")}
    done = rows[:5]
    rest = run_sweep(grammars, [64, 128], sents, [0, 1], done={r.key for r in done})
    assert len(rest) == len(rows) - 5
    assert rows_to_csv(done + rest) == rows_to_csv(rows)


def test_row_failures_are_recorded():
    g0 = builtin_grammar("g0")
    seen = []
    rows = run_sweep({"g0": g0}, [32], [("a", "b"), ("a", "zz")], [0], on_row=seen.append)
    assert len(rows) == len(seen) == 2
    assert rows[0].error == ""
    assert rows[1].error.startswith("ValueError") and math.isnan(rows[1].f1)


def test_csv_round_trip(small_sweep, tmp_path):
    _, _, rows = small_sweep
    text = rows_to_csv(rows)
    assert "wall_time_ms" not in text.splitlines()[0]
    p = tmp_path / "rows.csv"
    p.write_text(text)
    back = read_rows_csv(p)
    assert rows_to_csv(back) == text
    assert read_rows_csv(tmp_path / "missing.csv") == []
    assert timings_to_csv(rows).splitlines()[0].endswith("wall_time_ms")


def test_quoting_is_rfc4180():
    row = _row(0.5, error='ValueError: bad "x", y')
    line = rows_to_csv([row]).splitlines()[1]
    assert line.endswith('"ValueError: bad ""x"", y"')


def test_dimension_and_grammar_trends_on_g0():
    g0 = builtin_grammar("g0")
    sents = generate_sentences(g0, 50, 7, seed=0)
    rows = run_sweep({"g0": g0}, [100, 2000], sents, [0, 1, 2])
    f1 = {d: np.mean([r.f1 for r in rows if r.dim == d]) for d in (100, 2000)}
    assert f1[2000] > f1[100]
    rows = run_sweep({"g0": g0, "g4": builtin_grammar("g4")}, [2000], sents, [0])
    prec = {g: np.mean([r.precision for r in rows if r.grammar_id == g]) for g in ("g0", "g4")}
    assert prec["g4"] <= prec["g0"]
