"""Propositional formulas: AST, parser, printer and satisfiability.

Two complete reasoning backends live here.  :func:`is_consistent` and
:func:`entails` run a DPLL search over a Tseitin clause set.  The
:class:`ModelTable` backend represents a formula by the set of its models
over a fixed signature, packed into one Python integer (bit ``j`` is the
assignment whose ``i``-th atom is ``(j >> i) & 1``); it is what the
diagnosis engine uses on small signatures.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

__all__ = [
    "Atom", "Not", "And", "Or", "Implies", "Iff", "Formula",
    "FormulaSyntaxError", "parse_formula", "to_text", "atoms", "evaluate",
    "connective_count", "ClauseSet", "to_cnf", "dpll", "is_consistent",
    "entails", "ModelTable", "check_count",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Atom:
    name: str

    def __post_init__(self):
        if not isinstance(self.name, str) or not _IDENT.match(self.name):
            raise ValueError(f"invalid atom name: {self.name!r}")

    def __str__(self):
        return self.name


def _cached_hash(node, fields):
    # trees are immutable and hashed often by the memo tables
    h = node.__dict__.get("_hash")
    if h is None:
        h = hash((type(node).__name__, *fields))
        object.__setattr__(node, "_hash", h)
    return h


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self):
        return to_text(self)

    def __hash__(self):
        return _cached_hash(self, (self.arg,))


@dataclass(frozen=True)
class _Binary:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return to_text(self)

    def __hash__(self):
        return _cached_hash(self, (self.left, self.right))


class And(_Binary):
    pass


class Or(_Binary):
    pass


class Implies(_Binary):
    pass


class Iff(_Binary):
    pass


Formula = Union[Atom, Not, And, Or, Implies, Iff]

# printing precedence; higher binds tighter
_LEVEL = {Iff: 1, Implies: 2, Or: 3, And: 4}
_SYMBOL = {Iff: "<->", Implies: "->", Or: "|", And: "&"}
_RIGHT_ASSOC = (Iff, Implies)


class FormulaSyntaxError(ValueError):
    """Raised on malformed formula text; carries a 1-based line/column."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(<->|->|[!&|()])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise FormulaSyntaxError(f"unknown token {text[start]!r}", *_linecol(text, start))
        start = m.start(1) if m.group(1) else m.start(2)
        tokens.append((m.group(1) or m.group(2), m.group(2) is not None, start))
        pos = m.end()
    return tokens


def _linecol(text, offset):
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def error(self, message):
        offset = self.tokens[self.i][2] if self.i < len(self.tokens) else len(self.text)
        return FormulaSyntaxError(message, *_linecol(self.text, offset))

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def take(self, symbol):
        if self.peek() == symbol and not self.tokens[self.i][1]:
            self.i += 1
            return True
        return False

    def parse(self):
        if not self.tokens:
            raise FormulaSyntaxError("empty formula", 1, 1)
        f = self.iff()
        if self.i != len(self.tokens):
            raise self.error(f"unexpected {self.peek()!r}")
        return f

    def iff(self):
        left = self.imp()
        if self.take("<->"):
            return Iff(left, self.iff())
        return left

    def imp(self):
        left = self.disj()
        if self.take("->"):
            return Implies(left, self.imp())
        return left

    def disj(self):
        f = self.conj()
        while self.take("|"):
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.take("&"):
            f = And(f, self.unary())
        return f

    def unary(self):
        if self.take("!"):
            return Not(self.unary())
        if self.take("("):
            f = self.iff()
            if not self.take(")"):
                raise self.error("expected ')'")
            return f
        if self.i < len(self.tokens) and self.tokens[self.i][1]:
            name = self.tokens[self.i][0]
            self.i += 1
            return Atom(name)
        if self.peek() is None:
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {self.peek()!r}")


def parse_formula(text: str) -> Formula:
    """Parse ``text`` using ``! & | -> <->`` (tightest first).

    ``->`` and ``<->`` associate to the right, ``&`` and ``|`` to the left.
    """
    if not isinstance(text, str):
        raise TypeError("formula text must be a string")
    return _Parser(text).parse()


def _level(f):
    if isinstance(f, (Atom, Not)):
        return 5
    return _LEVEL[type(f)]


def to_text(f: Formula) -> str:
    """Render ``f`` with the minimal parentheses that parse back to ``f``."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        inner = to_text(f.arg)
        return "!" + (inner if _level(f.arg) >= 5 else f"({inner})")
    op = type(f)
    level = _LEVEL[op]
    right_assoc = op in _RIGHT_ASSOC
    left, right = to_text(f.left), to_text(f.right)
    ll, rl = _level(f.left), _level(f.right)
    if ll < level or (ll == level and right_assoc):
        left = f"({left})"
    if rl < level or (rl == level and not right_assoc):
        right = f"({right})"
    return f"{left} {_SYMBOL[op]} {right}"


def _children(f):
    if isinstance(f, Atom):
        return ()
    if isinstance(f, Not):
        return (f.arg,)
    return (f.left, f.right)


def _walk(f) -> Iterator[Formula]:
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(_children(node))


def atoms(f: Formula) -> set[str]:
    return {node.name for node in _walk(f) if isinstance(node, Atom)}


def connective_count(f: Formula) -> int:
    return sum(1 for node in _walk(f) if not isinstance(node, Atom))


def evaluate(f: Formula, assignment: Mapping[str, bool]) -> bool:
    if isinstance(f, Atom):
        return bool(assignment[f.name])
    if isinstance(f, Not):
        return not evaluate(f.arg, assignment)
    a = evaluate(f.left, assignment)
    b = evaluate(f.right, assignment)
    if isinstance(f, And):
        return a and b
    if isinstance(f, Or):
        return a or b
    if isinstance(f, Implies):
        return (not a) or b
    return a == b


# ------------------------------------------------------------ check counter

_counter = threading.local()


def check_count() -> int:
    """Number of consistency/entailment checks run so far on this thread."""
    return getattr(_counter, "n", 0)


def _tick(n: int = 1):
    _counter.n = getattr(_counter, "n", 0) + n


# ------------------------------------------------------------- CNF + DPLL

@dataclass(frozen=True)
class ClauseSet:
    """Clauses over integer variables (DIMACS-style signed literals).

    ``variables`` maps user atom names to their variable numbers.  Tseitin
    auxiliaries use the numbers above ``len(variables)`` and have no name,
    so they can never collide with an atom.
    """

    clauses: tuple[tuple[int, ...], ...]
    variables: Mapping[str, int]
    n_vars: int


class _TseitinEncoder:
    def __init__(self):
        self.variables: dict[str, int] = {}
        self.n_vars = 0
        self.clauses: list[tuple[int, ...]] = []
        self._memo: dict[Formula, int] = {}

    def _fresh(self):
        self.n_vars += 1
        return self.n_vars

    def literal(self, f) -> int:
        if f in self._memo:
            return self._memo[f]
        if isinstance(f, Atom):
            if f.name not in self.variables:
                self.variables[f.name] = self._fresh()
            lit = self.variables[f.name]
        elif isinstance(f, Not):
            lit = -self.literal(f.arg)
        else:
            a, b = self.literal(f.left), self.literal(f.right)
            x = self._fresh()
            add = self.clauses.append
            if isinstance(f, And):
                add((-x, a)); add((-x, b)); add((x, -a, -b))
            elif isinstance(f, Or):
                add((-x, a, b)); add((x, -a)); add((x, -b))
            elif isinstance(f, Implies):
                add((-x, -a, b)); add((x, a)); add((x, -b))
            else:
                add((-x, -a, b)); add((-x, a, -b)); add((x, a, b)); add((x, -a, -b))
            lit = x
        self._memo[f] = lit
        return lit


def to_cnf(formulas: Iterable[Formula]) -> ClauseSet:
    """Equisatisfiable clause set for the conjunction of ``formulas``."""
    enc = _TseitinEncoder()
    # atoms first so user variables occupy 1..n
    formulas = list(formulas)
    for f in formulas:
        for name in sorted(atoms(f)):
            enc.literal(Atom(name))
    roots = [enc.literal(f) for f in formulas]
    clauses = enc.clauses + [(r,) for r in roots]
    return ClauseSet(tuple(clauses), dict(enc.variables), enc.n_vars)


def dpll(clauses: Iterable[Iterable[int]]) -> dict[int, bool] | None:
    """Complete DPLL search; returns a satisfying partial assignment or None."""
    clause_list = [frozenset(c) for c in clauses]
    if any(len(c) == 0 for c in clause_list):
        return None
    return _dpll(clause_list, {})


def _simplify(clauses, lit):
    out = []
    for c in clauses:
        if lit in c:
            continue
        if -lit in c:
            c = c - {-lit}
            if not c:
                return None
        out.append(c)
    return out


def _dpll(clauses, assignment):
    while True:
        unit = next((c for c in clauses if len(c) == 1), None)
        if unit is None:
            break
        (lit,) = unit
        assignment = {**assignment, abs(lit): lit > 0}
        clauses = _simplify(clauses, lit)
        if clauses is None:
            return None
    if not clauses:
        return assignment
    counts: dict[int, int] = {}
    for c in clauses:
        for lit in c:
            counts[lit] = counts.get(lit, 0) + 1
    lit = max(counts, key=lambda l: (counts[l], -abs(l), l))
    for choice in (lit, -lit):
        reduced = _simplify(clauses, choice)
        if reduced is None:
            continue
        found = _dpll(reduced, {**assignment, abs(choice): choice > 0})
        if found is not None:
            return found
    return None


def is_consistent(fs: Iterable[Formula]) -> bool:
    """True iff the conjunction of ``fs`` has a model (DPLL backend)."""
    _tick()
    return dpll(to_cnf(fs).clauses) is not None


def entails(fs: Iterable[Formula], g: Formula) -> bool:
    return not is_consistent([*fs, Not(g)])


# ------------------------------------------------------------ model tables

class ModelTable:
    """Truth-table semantics over a fixed, ordered signature.

    ``mask(f)`` is the set of models of ``f`` as an integer bitset of width
    ``2 ** len(atoms)``.  Results are memoised per formula.
    """

    max_atoms = 16
    _shared: dict = {}

    @classmethod
    def shared(cls, signature: Iterable[str]) -> "ModelTable":
        """One table per signature, so memoised masks outlive a single DPI."""
        key = tuple(sorted(set(signature)))
        table = cls._shared.get(key)
        if table is None:
            if len(cls._shared) >= 64:
                cls._shared.clear()
            table = cls._shared[key] = cls(key)
        return table

    def __init__(self, signature: Iterable[str]):
        self.atoms = tuple(sorted(set(signature)))
        n = len(self.atoms)
        if n > self.max_atoms:
            raise ValueError(f"signature of {n} atoms exceeds {self.max_atoms}")
        width = 1 << n
        self.full = (1 << width) - 1
        self._memo: dict[Formula, int] = {}
        for i, name in enumerate(self.atoms):
            block = 1 << i
            m = ((1 << block) - 1) << block
            size = block * 2
            while size < width:
                m |= m << size
                size *= 2
            self._memo[Atom(name)] = m

    def __contains__(self, name):
        return Atom(name) in self._memo

    def mask(self, f: Formula) -> int:
        m = self._memo.get(f)
        if m is not None:
            return m
        if isinstance(f, Atom):
            raise KeyError(f"atom {f.name!r} outside the table signature")
        if isinstance(f, Not):
            m = self.full ^ self.mask(f.arg)
        else:
            a, b = self.mask(f.left), self.mask(f.right)
            if isinstance(f, And):
                m = a & b
            elif isinstance(f, Or):
                m = a | b
            elif isinstance(f, Implies):
                m = (self.full ^ a) | b
            else:
                m = self.full ^ (a ^ b)
        self._memo[f] = m
        return m

    def conjunction(self, fs: Iterable[Formula]) -> int:
        m = self.full
        for f in fs:
            m &= self.mask(f)
        return m
