"""Command-line entry point.

Settings are resolved in layers, later ones winning: built-in defaults,
a ``--config`` file of ``key=value`` lines, ``DCYK_<KEY>`` environment
variables, then explicit flags.  Commands that write files also write the
resolved config as ``<out>.config.txt`` (or ``config.txt`` inside a sweep
directory), which can be fed back through ``--config``.

Exit status: 0 recognized (or success), 1 not recognized (or charts
differ), 2 error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace

from . import calibration
from .algebra import make_backend
from .cyk import ChartFormatError, cyk_parse, parse_chart, serialize_chart
from .dcyk import DEFAULT_THRESHOLD, RuleOperators, decode_chart, decode_scores, dcyk_parse
from .evaluation import (
    ALL_COLUMNS,
    DESK_DIMS,
    FULL_PROTOCOL_DIMS,
    FULL_PROTOCOL_SENTENCES,
    SweepConfig,
    aggregate,
    read_rows_csv,
    row_to_csv_line,
    rows_to_csv,
    run_sweep,
    score_cells,
    summary_to_csv,
    summary_to_text,
    timings_to_csv,
)
from .grammar import (
    BUILTIN_GRAMMARS,
    GenerationError,
    GrammarError,
    builtin_grammar,
    generate_sentences,
    load_grammar,
    read_sentences,
    write_sentences,
)
from .hrr import HrrSpace

log = logging.getLogger("dcyk")

ENV_PREFIX = "DCYK_"
EXIT_OK, EXIT_REJECT, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).replace(",", " ").split()]


def _strs(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(x) for x in text]
    return str(text).replace(",", " ").split()


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    grammar: list[str] = field(default_factory=lambda: ["g0"])
    sentences: str = ""
    count: int = 50
    max_len: int = 7
    sentence_seed: int = 0
    dim: list[int] = field(default_factory=lambda: list(DESK_DIMS))
    seed: list[int] = field(default_factory=lambda: [0])
    beta: float = 40.0
    threshold: float = DEFAULT_THRESHOLD
    permutation: str = "stride"
    structured_matmul: bool = True
    out: str = ""
    workers: int = field(default_factory=_default_workers)
    dump_scores: str = ""
    full_protocol: bool = False

    # fields that do not change any data output
    VOLATILE = ("workers", "out")

    def validate(self) -> "RunConfig":
        if any(d < 8 for d in self.dim):
            raise UsageError(f"dimensions must be >= 8, got {self.dim}")
        if not 0.0 < self.threshold < 1.0:
            raise UsageError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.beta <= 0:
            raise UsageError(f"beta must be positive, got {self.beta}")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        if self.count < 0 or self.max_len < 1:
            raise UsageError("count must be >= 0 and max_len >= 1")
        if self.permutation not in ("stride", "random"):
            raise UsageError(f"unknown permutation {self.permutation!r}")
        if not self.grammar or not self.dim or not self.seed:
            raise UsageError("grammar, dim and seed lists must be non-empty")
        return self

    def apply_full_protocol(self) -> "RunConfig":
        if not self.full_protocol:
            return self
        return replace(self, grammar=list(BUILTIN_GRAMMARS[1:]), count=FULL_PROTOCOL_SENTENCES,
                       dim=list(FULL_PROTOCOL_DIMS))

    @property
    def matmul(self) -> str:
        return "structured" if self.structured_matmul else "dense"

    def sweep_config(self) -> SweepConfig:
        return SweepConfig(self.beta, self.threshold, self.permutation, self.matmul, self.workers)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "1" if v else "0"
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    def data_text(self) -> str:
        """Config lines that determine data outputs (used to guard resumes)."""
        return "".join(line + "\n" for line in self.to_text().splitlines()
                       if line.split("=", 1)[0] not in self.VOLATILE)


_PARSERS = {"grammar": _strs, "dim": _ints, "seed": _ints, "count": int, "max_len": int,
            "sentence_seed": int, "beta": float, "threshold": float, "workers": int,
            "structured_matmul": _bool, "full_protocol": _bool, "sentences": str,
            "permutation": str, "out": str, "dump_scores": str}


def _coerce(key: str, value):
    try:
        return _PARSERS[key](value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key}: {value!r} ({exc})") from exc


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _PARSERS:
            raise UsageError(f"config line {lineno}: expected key=value with a known key")
        out[key] = _coerce(key, value.strip())
    return out


# single-run commands default to the largest desk-scale dimension
COMMAND_DEFAULTS = {"dparse": {"dim": [2000]},
                    "calibrate": {"dim": list(calibration.CALIBRATION_DIMS)}}


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values: dict = dict(COMMAND_DEFAULTS.get(getattr(args, "command", ""), {}))
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    for key in _PARSERS:
        env = environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            values[key] = _coerce(key, env)
    for key in _PARSERS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = _coerce(key, v)
    cfg = replace(RunConfig(), **values)
    return cfg.apply_full_protocol().validate()


def resolve_grammar(ref: str):
    """A file path, or the name of a checked-in grammar."""
    if os.path.exists(ref):
        return load_grammar(ref)
    if ref in BUILTIN_GRAMMARS:
        return builtin_grammar(ref)
    raise UsageError(f"no grammar file {ref!r} (builtin names: {', '.join(BUILTIN_GRAMMARS)})")


def _sentence(tokens: list[str]) -> tuple[str, ...]:
    words = tuple(" ".join(tokens).split())
    if not words:
        raise UsageError("empty sentence")
    return words


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _verdict(ok: bool) -> str:
    return "# recognized\n" if ok else "# not recognized\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        _write_text(cfg.out, text)
        _write_text(cfg.out + ".config.txt", cfg.to_text())
    else:
        sys.stdout.write(text)


def cmd_parse(args, cfg: RunConfig) -> int:
    g = resolve_grammar(cfg.grammar[0])
    w = _sentence(args.sentence)
    chart = cyk_parse(g, w)
    ok = g.start in chart[(0, chart.n)]
    _emit(cfg, serialize_chart(chart) + _verdict(ok))
    return EXIT_OK if ok else EXIT_REJECT


def cmd_dparse(args, cfg: RunConfig) -> int:
    g = resolve_grammar(cfg.grammar[0])
    w = _sentence(args.sentence)
    space = HrrSpace(cfg.dim[0], seed=cfg.seed[0], beta=cfg.beta, permutation=cfg.permutation)
    backend = make_backend(space, cfg.matmul)
    dist = dcyk_parse(space, g, w, RuleOperators.build(space, g), backend)
    scores = decode_scores(space, dist, g)
    chart = decode_chart(space, dist, g, cfg.threshold, scores=scores)
    ok = g.start in chart[(0, chart.n)]
    if cfg.dump_scores:
        rows = [["i", "j", "symbol", "raw", "sigma"]]
        rows += [[i, j, a, repr(float(raw)), repr(float(s))] for i, j, a, raw, s in scores]
        parent = os.path.dirname(cfg.dump_scores)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(cfg.dump_scores, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    _emit(cfg, serialize_chart(chart) + _verdict(ok))
    return EXIT_OK if ok else EXIT_REJECT


def _sweep_sentences(cfg: RunConfig, grammars):
    if cfg.sentences:
        return read_sentences(cfg.sentences)
    first = next(iter(grammars.values()))
    return generate_sentences(first, cfg.count, cfg.max_len, cfg.sentence_seed)


def cmd_sweep(args, cfg: RunConfig) -> int:
    out = cfg.out or "sweep-out"
    grammars = {os.path.splitext(os.path.basename(ref))[0]: resolve_grammar(ref)
                for ref in cfg.grammar}
    sentences = _sweep_sentences(cfg, grammars)
    for sid, s in enumerate(sentences):
        for gid, g in grammars.items():
            if g.start not in cyk_parse(g, s)[(0, len(s))]:
                raise UsageError(f"sentence {sid} ({' '.join(s)}) is not in grammar {gid}")

    os.makedirs(out, exist_ok=True)
    cfg_path = os.path.join(out, "config.txt")
    partial_path = os.path.join(out, "rows.partial.csv")
    done_rows = []
    if os.path.exists(partial_path):
        if not args.resume:
            raise UsageError(f"{out} holds a previous run; pass --resume or pick another --out")
        try:
            with open(cfg_path, encoding="utf-8") as fh:
                old = replace(RunConfig(), **parse_config_text(fh.read()))
        except OSError as exc:
            raise UsageError(f"cannot resume, config missing: {exc}") from exc
        if old.data_text() != cfg.data_text():
            raise UsageError("cannot resume: config differs from the interrupted run")
        done_rows = read_rows_csv(partial_path)
    _write_text(cfg_path, cfg.to_text())
    write_sentences(os.path.join(out, "sentences.txt"), sentences)

    if not done_rows:
        _write_text(partial_path, ",".join(ALL_COLUMNS) + "\n")
    with open(partial_path, "a", encoding="utf-8", newline="") as fh:
        def on_row(row):
            fh.write(row_to_csv_line(row, ALL_COLUMNS))
            fh.flush()
        new_rows = run_sweep(grammars, cfg.dim, sentences, cfg.seed, cfg.sweep_config(),
                             done={r.key for r in done_rows}, on_row=on_row)
    rows = sorted(done_rows + new_rows, key=lambda r: r.key)
    summary = aggregate(rows)
    _write_text(os.path.join(out, "rows.csv"), rows_to_csv(rows))
    _write_text(os.path.join(out, "timings.csv"), timings_to_csv(rows))
    _write_text(os.path.join(out, "summary.csv"), summary_to_csv(summary))
    _write_text(os.path.join(out, "summary.txt"), summary_to_text(summary))
    os.remove(partial_path)
    failed = sum(1 for r in rows if r.error)
    print(f"{len(rows)} rows ({failed} failed) written to {out}")
    sys.stdout.write(summary_to_text([s for s in summary if s["grouping"] == "dim"]))
    return EXIT_OK


def cmd_gen(args, cfg: RunConfig) -> int:
    g = resolve_grammar(cfg.grammar[0])
    sentences = generate_sentences(g, cfg.count, cfg.max_len, cfg.seed[0])
    text = "".join(" ".join(s) + "\n" for s in sentences)
    _emit(cfg, text)
    return EXIT_OK


def cmd_compare(args, cfg: RunConfig) -> int:
    charts = []
    for path in (args.expected, args.actual):
        try:
            with open(path, encoding="utf-8") as fh:
                charts.append(parse_chart(fh.read()))
        except OSError as exc:
            raise UsageError(f"cannot read chart: {exc}") from exc
    expected, actual = charts
    if expected.n != actual.n:
        print(f"charts cover different lengths: {expected.n} vs {actual.n}")
        return EXIT_REJECT
    gold, pred = expected.triples(), actual.triples()
    for i, j, a in sorted(gold - pred):
        print(f"- {i} {j} {a}")
    for i, j, a in sorted(pred - gold):
        print(f"+ {i} {j} {a}")
    sc = score_cells(expected, actual)
    print(f"precision={sc.precision:.4f} recall={sc.recall:.4f} f1={sc.f1:.4f}")
    return EXIT_OK if gold == pred else EXIT_REJECT


def cmd_calibrate(args, cfg: RunConfig) -> int:
    table = calibration.calibrate(cfg.dim, trials=args.trials)
    _emit(cfg, calibration.to_csv(table))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file, overridden by env and flags")
    common.add_argument("--grammar", help="grammar file or builtin name (comma list for sweep)")
    common.add_argument("--dim", help="matrix dimension (comma list for sweep)")
    common.add_argument("--seed", help="random seed (comma list for sweep)")
    common.add_argument("--beta", help="sigmoid steepness")
    common.add_argument("--threshold", help="decoder acceptance threshold")
    common.add_argument("--permutation", choices=("stride", "random"))
    common.add_argument("--structured-matmul", dest="structured_matmul", default=None,
                        action=argparse.BooleanOptionalAction,
                        help="FFT/circulant products instead of dense matmul")
    common.add_argument("--out", help="output file, or directory for sweep")
    common.add_argument("--workers", help="worker processes for sweep")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="dcyk", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", parents=[common], help="symbolic CYK chart")
    sp.add_argument("sentence", nargs="+")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("dparse", parents=[common], help="distributed CYK, decoded chart")
    sp.add_argument("sentence", nargs="+")
    sp.add_argument("--dump-scores", dest="dump_scores", help="CSV of raw and sigmoid scores")
    sp.set_defaults(func=cmd_dparse)

    sp = sub.add_parser("sweep", parents=[common], help="precision/recall sweep")
    sp.add_argument("--sentences", help="sentence file (default: generate)")
    sp.add_argument("--count", help="sentences to generate")
    sp.add_argument("--max-len", dest="max_len", help="maximum sentence length")
    sp.add_argument("--sentence-seed", dest="sentence_seed", help="generation seed")
    sp.add_argument("--full-protocol", dest="full_protocol", action="store_const", const="1",
                    help="2000 sentences, seven dimensions, grammars g0..g4")
    sp.add_argument("--resume", action="store_true", help="continue an interrupted run")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("gen", parents=[common], help="generate sentences")
    sp.add_argument("--count", help="number of sentences")
    sp.add_argument("--max-len", dest="max_len", help="maximum sentence length")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("compare", parents=[common], help="diff two chart files")
    sp.add_argument("expected")
    sp.add_argument("actual")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("calibrate", parents=[common], help="regenerate tolerance table")
    sp.add_argument("--trials", type=int, default=calibration.TRIALS)
    sp.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None, environ=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args, environ)
        return args.func(args, cfg)
    except (UsageError, GrammarError, GenerationError, ChartFormatError,
            ValueError, KeyError, OSError) as exc:
        print(f"dcyk: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
