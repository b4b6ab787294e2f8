"""Symbolic CYK recognition, the ground truth for the distributed parser."""
from __future__ import annotations

from dataclasses import dataclass, field

from .grammar import Grammar


class ChartFormatError(ValueError):
    pass


@dataclass
class Chart:
    """Nonterminal sets for every span ``(i, j)`` with ``0 <= i < j <= n``."""

    n: int
    cells: dict[tuple[int, int], set[str]] = field(default_factory=dict)

    def __post_init__(self):
        for i in range(self.n):
            for j in range(i + 1, self.n + 1):
                self.cells.setdefault((i, j), set())
        for i, j in self.cells:
            if not 0 <= i < j <= self.n:
                raise ValueError(f"span ({i}, {j}) outside 0 <= i < j <= {self.n}")

    def __getitem__(self, span):
        return self.cells[span]

    def add(self, i: int, j: int, symbol: str) -> None:
        self.cells[(i, j)].add(symbol)

    def triples(self) -> set[tuple[int, int, str]]:
        return {(i, j, a) for (i, j), syms in self.cells.items() for a in syms}

    def __eq__(self, other):
        if not isinstance(other, Chart):
            return NotImplemented
        return self.n == other.n and self.triples() == other.triples()

    def to_text(self) -> str:
        return serialize_chart(self)


def cyk_parse(g: Grammar, w) -> Chart:
    """Fill the chart bottom-up in the classic loop order.

    Raises ValueError for an empty sentence or a token that is not a
    terminal of ``g``.
    """
    w = tuple(w)
    n = len(w)
    if n == 0:
        raise ValueError("cannot parse the empty sentence")
    terminals = set(g.terminals)
    for tok in w:
        if tok not in terminals:
            raise ValueError(f"unknown terminal {tok!r}")
    chart = Chart(n)
    lexicon: dict[str, list[str]] = {}
    for a, t in g.unary_rules:
        lexicon.setdefault(t, []).append(a)
    for i in range(1, n + 1):
        for a in lexicon.get(w[i - 1], ()):
            chart.add(i - 1, i, a)
    for j in range(2, n + 1):
        for i in range(j - 2, -1, -1):
            for k in range(i + 1, j):
                left, right = chart[(i, k)], chart[(k, j)]
                if not left or not right:
                    continue
                for a, b, c in g.binary_rules:
                    if b in left and c in right:
                        chart.add(i, j, a)
    return chart


def recognizes(chart: Chart, g: Grammar) -> bool:
    return g.start in chart[(0, chart.n)]


def serialize_chart(chart: Chart) -> str:
    """``# n=<n>`` then one ``i j : A B`` line per non-empty cell, sorted."""
    lines = [f"# n={chart.n}"]
    for (i, j) in sorted(chart.cells):
        syms = chart.cells[(i, j)]
        if syms:
            lines.append(f"{i} {j} : {' '.join(sorted(syms))}")
    return "\n".join(lines) + "\n"


def parse_chart(text: str) -> Chart:
    n = None
    cells: dict[tuple[int, int], set[str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.startswith("n="):
                n = int(body[2:])
            continue
        span, sep, syms = stripped.partition(":")
        parts = span.split()
        if not sep or len(parts) != 2:
            raise ChartFormatError(f"line {lineno}: expected 'i j : A B ...'")
        i, j = int(parts[0]), int(parts[1])
        cells.setdefault((i, j), set()).update(syms.split())
    if n is None:
        n = max((j for _, j in cells), default=0)
    return Chart(n, cells)
