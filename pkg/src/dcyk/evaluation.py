"""Cell-level scoring of decoded charts against the symbolic oracle, and sweeps."""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .cyk import Chart, cyk_parse
from .dcyk import DEFAULT_THRESHOLD, RuleOperators, decode_chart, dcyk_parse
from .algebra import make_backend
from .grammar import Grammar
from .hrr import HrrSpace

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CellScores:
    true_positive: int
    false_positive: int
    false_negative: int

    @property
    def precision(self) -> float:
        tp, fp, fn = self.true_positive, self.false_positive, self.false_negative
        if tp + fp == 0:
            return 1.0 if tp + fn == 0 else 0.0
        return tp / (tp + fp)

    @property
    def recall(self) -> float:
        tp, fp, fn = self.true_positive, self.false_positive, self.false_negative
        if tp + fn == 0:
            return 1.0 if tp + fp == 0 else 0.0
        return tp / (tp + fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 0.0 if p + r == 0 else 2 * p * r / (p + r)

    def __add__(self, other: "CellScores") -> "CellScores":
        return CellScores(self.true_positive + other.true_positive,
                          self.false_positive + other.false_positive,
                          self.false_negative + other.false_negative)


def score_cells(oracle: Chart, decoded: Chart) -> CellScores:
    """Micro counts over (i, j, A) triples; ``oracle`` is the ground truth."""
    if oracle.n != decoded.n:
        raise ValueError(f"charts cover different lengths ({oracle.n} vs {decoded.n})")
    gold, pred = oracle.triples(), decoded.triples()
    return CellScores(len(gold & pred), len(pred - gold), len(gold - pred))


@dataclass(frozen=True)
class SweepConfig:
    beta: float = 40.0
    threshold: float = DEFAULT_THRESHOLD
    permutation: str = "stride"
    matmul: str = "structured"
    workers: int = 1


@dataclass
class SweepRow:
    grammar_id: str
    dim: int
    seed: int
    sentence_id: int
    sentence_len: int
    precision: float
    recall: float
    f1: float
    true_positive: int
    false_positive: int
    false_negative: int
    recognized_oracle: bool
    recognized_dcyk: bool
    error: str = ""
    wall_time_ms: float = 0.0

    @property
    def key(self):
        return (self.grammar_id, self.dim, self.seed, self.sentence_id)


# wall_time_ms is kept out of the rows file so reruns are byte-identical
ROW_COLUMNS = [f.name for f in fields(SweepRow) if f.name != "wall_time_ms"]
ALL_COLUMNS = [f.name for f in fields(SweepRow)]
DESK_DIMS = (100, 500, 1000, 2000)
# the protocol's dimension list, seven values
FULL_PROTOCOL_DIMS = (100, 1000, 2000, 3000, 4000, 5000, 6000)
FULL_PROTOCOL_SENTENCES = 2000
TIMING_COLUMNS = ["grammar_id", "dim", "seed", "sentence_id", "wall_time_ms"]


def _run_job(job):
    gid, grammar, dim, seed, sid, sentence, cfg = job
    t0 = time.perf_counter()
    try:
        space = HrrSpace(dim, seed=seed, beta=cfg.beta, permutation=cfg.permutation)
        ops = RuleOperators.build(space, grammar)
        oracle = cyk_parse(grammar, sentence)
        dist = dcyk_parse(space, grammar, sentence, ops, make_backend(space, cfg.matmul))
        decoded = decode_chart(space, dist, grammar, cfg.threshold)
        sc = score_cells(oracle, decoded)
        row = SweepRow(gid, dim, seed, sid, len(sentence), sc.precision, sc.recall, sc.f1,
                       sc.true_positive, sc.false_positive, sc.false_negative,
                       grammar.start in oracle[(0, oracle.n)],
                       grammar.start in decoded[(0, decoded.n)])
    except Exception as exc:  # recorded per row, never fatal to the sweep
        log.warning("row %s failed: %s", (gid, dim, seed, sid), exc)
        row = SweepRow(gid, dim, seed, sid, len(sentence), math.nan, math.nan, math.nan,
                       0, 0, 0, False, False, error=f"{type(exc).__name__}: {exc}")
    row.wall_time_ms = (time.perf_counter() - t0) * 1000.0
    return row


def run_sweep(grammars: dict[str, Grammar], dims, sentences, seeds,
              config: SweepConfig | None = None, done=None, on_row=None) -> list[SweepRow]:
    """One row per (grammar, dim, seed, sentence), ordered by that key.

    ``done`` is a set of keys to skip (resuming a partial run); ``on_row`` is
    called with each finished row as it arrives, in completion order.
    """
    config = config or SweepConfig()
    done = set(done or ())
    jobs = []
    for gid, grammar in grammars.items():
        for dim in dims:
            for seed in seeds:
                for sid, sentence in enumerate(sentences):
                    if (gid, dim, seed, sid) not in done:
                        jobs.append((gid, grammar, dim, seed, sid, tuple(sentence), config))
    rows = []
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for row in pool.map(_run_job, jobs, chunksize=4):
                rows.append(row)
                if on_row:
                    on_row(row)
    else:
        for job in jobs:
            row = _run_job(job)
            rows.append(row)
            if on_row:
                on_row(row)
    rows.sort(key=lambda r: r.key)
    return rows


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows, columns=ROW_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in sorted(rows, key=lambda r: r.key):
        d = asdict(row)
        writer.writerow([_fmt(d[c]) for c in columns])
    return buf.getvalue()


def row_to_csv_line(row, columns=ROW_COLUMNS) -> str:
    buf = io.StringIO()
    d = asdict(row)
    csv.writer(buf, lineterminator="\n").writerow([_fmt(d[c]) for c in columns])
    return buf.getvalue()


def timings_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TIMING_COLUMNS)
    for row in sorted(rows, key=lambda r: r.key):
        writer.writerow([row.grammar_id, row.dim, row.seed, row.sentence_id,
                         f"{row.wall_time_ms:.3f}"])
    return buf.getvalue()


def read_rows_csv(path) -> list[SweepRow]:
    if not os.path.exists(path):
        return []
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out.append(SweepRow(
                rec["grammar_id"], int(rec["dim"]), int(rec["seed"]), int(rec["sentence_id"]),
                int(rec["sentence_len"]), float(rec["precision"]), float(rec["recall"]),
                float(rec["f1"]), int(rec["true_positive"]), int(rec["false_positive"]),
                int(rec["false_negative"]), rec["recognized_oracle"] == "1",
                rec["recognized_dcyk"] == "1", rec.get("error", ""),
                float(rec.get("wall_time_ms") or 0.0)))
    return out


SUMMARY_COLUMNS = ["grouping", "grammar_id", "dim", "sentence_len", "rows",
                   "precision", "recall", "f1", "f1_ci95",
                   "micro_precision", "micro_recall", "micro_f1", "verdict_agreement"]


def _summarize(group: list[SweepRow]) -> dict:
    ok = [r for r in group if not r.error]
    f1 = np.array([r.f1 for r in ok])
    micro = CellScores(0, 0, 0)
    for r in ok:
        micro = micro + CellScores(r.true_positive, r.false_positive, r.false_negative)
    ci = 1.96 * f1.std(ddof=1) / math.sqrt(len(f1)) if len(f1) > 1 else 0.0
    return {
        "rows": len(ok),
        "precision": float(np.mean([r.precision for r in ok])) if ok else math.nan,
        "recall": float(np.mean([r.recall for r in ok])) if ok else math.nan,
        "f1": float(f1.mean()) if ok else math.nan,
        "f1_ci95": float(ci),
        "micro_precision": micro.precision,
        "micro_recall": micro.recall,
        "micro_f1": micro.f1,
        "verdict_agreement": (float(np.mean([r.recognized_oracle == r.recognized_dcyk for r in ok]))
                              if ok else math.nan),
    }


def aggregate(rows) -> list[dict]:
    """Macro means per (grammar, dim) and per (grammar, dim, sentence length)."""
    by_dim: dict[tuple, list] = defaultdict(list)
    by_len: dict[tuple, list] = defaultdict(list)
    for r in rows:
        by_dim[(r.grammar_id, r.dim)].append(r)
        by_len[(r.grammar_id, r.dim, r.sentence_len)].append(r)
    out = []
    for (gid, dim), group in sorted(by_dim.items()):
        out.append({"grouping": "dim", "grammar_id": gid, "dim": dim, "sentence_len": "",
                    **_summarize(group)})
    for (gid, dim, length), group in sorted(by_len.items()):
        out.append({"grouping": "length", "grammar_id": gid, "dim": dim,
                    "sentence_len": length, **_summarize(group)})
    return out


def summary_to_csv(summary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for rec in summary:
        writer.writerow([_fmt(rec[c]) if not isinstance(rec[c], float) else f"{rec[c]:.6f}"
                         for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def summary_to_text(summary) -> str:
    cols = ["grouping", "grammar_id", "dim", "sentence_len", "rows", "precision", "recall",
            "f1", "f1_ci95", "verdict_agreement"]
    table = [cols]
    for rec in summary:
        table.append([f"{rec[c]:.4f}" if isinstance(rec[c], float) else str(rec[c]) for c in cols])
    widths = [max(len(r[k]) for r in table) for k in range(len(cols))]
    return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in table) + "\n"
