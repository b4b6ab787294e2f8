"""CNF grammars: file format, validation, sentence generation and expansion.

File format (UTF-8)::

    # comment
    start: S
    nonterminals: S D E      (optional declaration lines)
    terminals: a b
    S -> D E
    D -> a

A one-symbol right-hand side must be a terminal and a two-symbol one must
be two nonterminals.  Nonterminals are the declared ones plus every
left-hand side; decimal numerals are reserved for span indices.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources


class GrammarError(ValueError):
    """Invalid grammar text or rule set."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Grammar:
    nonterminals: tuple[str, ...]
    terminals: tuple[str, ...]
    binary_rules: tuple[tuple[str, str, str], ...]
    unary_rules: tuple[tuple[str, str], ...]
    start: str

    def __post_init__(self):
        validate(self)

    @property
    def n_rules(self) -> int:
        return len(self.binary_rules) + len(self.unary_rules)

    def binary_by_lhs(self) -> dict[str, list[tuple[str, str]]]:
        out: dict[str, list[tuple[str, str]]] = {}
        for a, b, c in self.binary_rules:
            out.setdefault(a, []).append((b, c))
        return out

    def unary_by_lhs(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for a, t in self.unary_rules:
            out.setdefault(a, []).append(t)
        return out

    def render(self) -> str:
        return render(self)


def _is_numeral(name: str) -> bool:
    return name.isdecimal()


def validate(g: Grammar) -> None:
    if not g.binary_rules and not g.unary_rules:
        raise GrammarError("grammar has no rules")
    nts, ts = set(g.nonterminals), set(g.terminals)
    if len(nts) != len(g.nonterminals) or len(ts) != len(g.terminals):
        raise GrammarError("duplicate symbol declaration")
    both = nts & ts
    if both:
        raise GrammarError(f"symbols are both terminal and nonterminal: {sorted(both)}")
    for name in g.nonterminals + g.terminals:
        if not name or any(ch.isspace() for ch in name):
            raise GrammarError(f"bad symbol name {name!r}")
        if _is_numeral(name):
            raise GrammarError(f"symbol name {name!r} is a numeral (reserved for span indices)")
    if g.start not in nts:
        raise GrammarError(f"start symbol {g.start!r} is not a declared nonterminal")
    for a, b, c in g.binary_rules:
        for sym in (a, b, c):
            if sym not in nts:
                raise GrammarError(f"rule {a} -> {b} {c} is not CNF: {sym!r} is not a nonterminal")
    for a, t in g.unary_rules:
        if a not in nts:
            raise GrammarError(f"rule {a} -> {t}: {a!r} is not a nonterminal")
        if t not in ts:
            raise GrammarError(f"rule {a} -> {t} is not CNF: {t!r} is not a terminal")
    if len(set(g.binary_rules)) != len(g.binary_rules) or len(set(g.unary_rules)) != len(g.unary_rules):
        raise GrammarError("duplicate rule")


def parse_grammar(text: str) -> Grammar:
    start = None
    declared_nts: list[str] = []
    declared_ts: list[str] = []
    raw_rules: list[tuple[int, str, list[str]]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" in line:
            lhs, _, rhs = line.partition("->")
            lhs_syms = lhs.split()
            if len(lhs_syms) != 1:
                raise GrammarError(f"expected one left-hand symbol, got {lhs.strip()!r}", lineno)
            raw_rules.append((lineno, lhs_syms[0], rhs.split()))
            continue
        key, sep, value = line.partition(":")
        key = key.strip().lower()
        if not sep:
            raise GrammarError(f"cannot parse {line!r}", lineno)
        if key == "start":
            vals = value.split()
            if len(vals) != 1:
                raise GrammarError("start line needs exactly one symbol", lineno)
            start = vals[0]
        elif key == "nonterminals":
            declared_nts.extend(value.split())
        elif key == "terminals":
            declared_ts.extend(value.split())
        else:
            raise GrammarError(f"unknown header {key!r}", lineno)
    if start is None:
        raise GrammarError("missing 'start:' line")
    if not raw_rules:
        raise GrammarError("grammar has no rules")

    nts = list(dict.fromkeys(declared_nts))
    nt_set = set(nts)
    for _, lhs, _ in raw_rules:
        if lhs not in nt_set:
            nts.append(lhs)
            nt_set.add(lhs)
    ts = list(dict.fromkeys(declared_ts))
    t_set = set(ts)
    binary, unary = [], []
    for lineno, lhs, rhs in raw_rules:
        shown = f"{lhs} -> {' '.join(rhs)}"
        if len(rhs) == 2:
            for sym in rhs:
                if sym not in nt_set:
                    raise GrammarError(f"rule {shown} is not CNF: {sym!r} is not a nonterminal", lineno)
            binary.append((lhs, rhs[0], rhs[1]))
        elif len(rhs) == 1:
            if rhs[0] in nt_set:
                raise GrammarError(f"rule {shown} is not CNF: unit rule to a nonterminal", lineno)
            if rhs[0] not in t_set:
                ts.append(rhs[0])
                t_set.add(rhs[0])
            unary.append((lhs, rhs[0]))
        else:
            raise GrammarError(f"rule {shown} is not CNF: right-hand side has {len(rhs)} symbols", lineno)
    return Grammar(tuple(nts), tuple(ts), tuple(binary), tuple(unary), start)


def render(g: Grammar) -> str:
    lines = [f"start: {g.start}",
             f"nonterminals: {' '.join(g.nonterminals)}",
             f"terminals: {' '.join(g.terminals)}"]
    lines += [f"{a} -> {b} {c}" for a, b, c in g.binary_rules]
    lines += [f"{a} -> {t}" for a, t in g.unary_rules]
    return "\n".join(lines) + "\n"


def load_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar(fh.read())


BUILTIN_GRAMMARS = ("fig1", "g0", "g1", "g2", "g3", "g4")


def builtin_grammar(name: str) -> Grammar:
    """One of the checked-in grammars: ``fig1`` and the ``g0``..``g4`` family."""
    if name not in BUILTIN_GRAMMARS:
        raise KeyError(f"no builtin grammar {name!r}; choose from {BUILTIN_GRAMMARS}")
    text = resources.files("dcyk").joinpath("data", f"{name}.cfg").read_text(encoding="utf-8")
    return parse_grammar(text)


def read_sentences(path) -> list[tuple[str, ...]]:
    with open(path, encoding="utf-8") as fh:
        return [tuple(line.split()) for line in fh if line.strip()]


def write_sentences(path, sentences) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in sentences:
            fh.write(" ".join(s) + "\n")


MAX_ATTEMPTS = 1000


def generate_sentence(g: Grammar, max_len: int = 7, rng_seed: int = 0,
                      max_attempts: int = MAX_ATTEMPTS) -> tuple[str, ...]:
    """Sample a sentence of length <= ``max_len`` by top-down expansion.

    Each nonterminal is rewritten with a rule chosen uniformly among its
    rules.  A derivation is abandoned as soon as its pending symbols can no
    longer fit in ``max_len`` tokens (every symbol yields at least one).
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    rules: dict[str, list[tuple[str, ...]]] = {}
    for a, b, c in g.binary_rules:
        rules.setdefault(a, []).append((b, c))
    for a, t in g.unary_rules:
        rules.setdefault(a, []).append((t,))
    nts = set(g.nonterminals)
    rng = random.Random(rng_seed)
    for _ in range(max_attempts):
        out: list[str] = []
        stack = [g.start]
        while stack and len(out) + len(stack) <= max_len:
            sym = stack.pop()
            if sym not in nts:
                out.append(sym)
                continue
            options = rules.get(sym)
            if not options:
                break
            stack.extend(reversed(rng.choice(options)))
        else:
            if not stack:
                return tuple(out)
    raise GenerationError(
        f"no sentence of length <= {max_len} after {max_attempts} attempts")


def generate_sentences(g: Grammar, count: int, max_len: int = 7, seed: int = 0):
    return [generate_sentence(g, max_len, rng_seed=seed * 1_000_003 + k)
            for k in range(count)]


def _fresh(prefix: str, taken: set[str]) -> str:
    k = 1
    while f"{prefix}{k}" in taken:
        k += 1
    return f"{prefix}{k}"


def expand_grammar(g: Grammar, kind: str, count: int, rng_seed: int = 0) -> Grammar:
    """Return ``g`` plus ``count`` new rules of ``kind`` ("unary" or "binary").

    Only rules are added, never removed, so every sentence ``g`` accepts is
    still accepted.  Each new rule draws its left-hand side uniformly from
    the current nonterminals plus one fresh ``N<k>``.  Unary expansion adds
    vocabulary: the right-hand side is always a fresh terminal ``t<k>``.
    Binary right-hand sides are drawn from the existing nonterminals.
    """
    if kind not in ("unary", "binary"):
        raise ValueError(f"kind must be 'unary' or 'binary', got {kind!r}")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(rng_seed)
    nts, ts = list(g.nonterminals), list(g.terminals)
    binary, unary = list(g.binary_rules), list(g.unary_rules)
    seen_b, seen_u = set(binary), set(unary)
    added = 0
    while added < count:
        taken = set(nts) | set(ts)
        fresh_nt = _fresh("N", taken)
        lhs = rng.choice(nts + [fresh_nt])
        if kind == "unary":
            rhs = _fresh("t", taken)
            rule = (lhs, rhs)
            ts.append(rhs)
            unary.append(rule)
            seen_u.add(rule)
        else:
            rule = (lhs, rng.choice(nts), rng.choice(nts))
            if rule in seen_b:
                continue
            binary.append(rule)
            seen_b.add(rule)
        if lhs not in nts:
            nts.append(lhs)
        added += 1
    return Grammar(tuple(nts), tuple(ts), tuple(binary), tuple(unary), g.start)


# (name, base, kind, count, seed) for the checked-in family
FAMILY_RECIPE = (
    ("g1", "g0", "unary", 17, 1),
    ("g2", "g1", "binary", 3, 2),
    ("g3", "g1", "binary", 9, 3),
    ("g4", "g1", "binary", 16, 4),
)


def build_family(g0: Grammar) -> dict[str, Grammar]:
    """Regenerate ``g0``..``g4`` from ``g0`` with the fixed expansion seeds."""
    family = {"g0": g0}
    for name, base, kind, count, seed in FAMILY_RECIPE:
        family[name] = expand_grammar(family[base], kind, count, rng_seed=seed)
    return family
