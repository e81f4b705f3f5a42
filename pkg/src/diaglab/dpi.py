"""Diagnosis problem instances and the diagnosis probability model."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .formula import (
    Formula, FormulaSyntaxError, ModelTable, Not, _tick, atoms,
    connective_count, is_consistent, parse_formula, to_text,
)

__all__ = [
    "Axiom", "Dpi", "DpiFormatError", "UnknownAxiomError", "load_dpi",
    "read_dpi", "dump_dpi", "needs_repair", "is_diagnosis",
    "diagnosis_probability", "normalize", "apply_measurement",
    "complexity_probabilities", "DEFAULT_BACKEND",
]

# "auto" picks model tables for small signatures and DPLL otherwise
DEFAULT_BACKEND = "auto"


class DpiFormatError(ValueError):
    def __init__(self, message, section=None, line=None):
        where = ""
        if section is not None:
            where += f" [{section}]"
        if line is not None:
            where += f" line {line}"
        super().__init__(f"{message}{' at' + where if where else ''}")
        self.section = section
        self.line = line


class UnknownAxiomError(KeyError):
    pass


@dataclass(frozen=True)
class Axiom:
    id: str
    sentence: Formula
    fault_prob: float

    def __post_init__(self):
        if not 0.0 < self.fault_prob < 1.0:
            raise ValueError(f"fault probability of {self.id} must lie in (0, 1), got {self.fault_prob}")


@dataclass(frozen=True)
class Dpi:
    """A diagnosis problem instance <K, B, P, N>.

    Component sets (diagnoses, conflicts) are tuples of axiom ids in the
    order of ``axioms``; see :meth:`components`.
    """

    axioms: tuple[Axiom, ...]
    background: tuple[Formula, ...] = ()
    positive: tuple[Formula, ...] = ()
    negative: tuple[Formula, ...] = ()
    _logic: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if not self.axioms:
            raise ValueError("a DPI needs at least one axiom in K")
        ids = [ax.id for ax in self.axioms]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate axiom id")
        object.__setattr__(self, "_index", {i: n for n, i in enumerate(ids)})
        sig: set[str] = set()
        for f in self.formulas():
            sig |= atoms(f)
        object.__setattr__(self, "_signature", frozenset(sig))

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(ax.id for ax in self.axioms)

    def axiom(self, axiom_id: str) -> Axiom:
        try:
            return self.axioms[self._index[axiom_id]]
        except KeyError:
            raise UnknownAxiomError(axiom_id) from None

    def position(self, axiom_id: str) -> int:
        try:
            return self._index[axiom_id]
        except KeyError:
            raise UnknownAxiomError(axiom_id) from None

    def components(self, ids: Iterable[str]) -> tuple[str, ...]:
        """Validate ``ids`` and return them as a canonical component set."""
        return tuple(sorted(set(ids), key=self.position))

    def signature(self) -> set[str]:
        return set(self._signature)

    def formulas(self):
        yield from (ax.sentence for ax in self.axioms)
        yield from self.background
        yield from self.positive
        yield from self.negative

    def logic(self, backend: str | None = None) -> "_Logic":
        backend = backend or DEFAULT_BACKEND
        if backend == "auto":
            backend = "table" if len(self._signature) <= ModelTable.max_atoms else "sat"
        if backend not in self._logic:
            cls = {"table": _TableLogic, "sat": _SatLogic}[backend]
            self._logic[backend] = cls(self)
        return self._logic[backend]


class _Logic:
    """Reasoning about (kept axioms) u B u P against N u {bottom}."""

    def violates(self, kept: Iterable[str], extra: Sequence[Formula] = ()) -> bool:
        raise NotImplementedError

    def entails(self, kept: Iterable[str], g: Formula) -> bool:
        raise NotImplementedError


class _TableLogic(_Logic):
    def __init__(self, dpi: Dpi):
        self.dpi = dpi
        self.table = ModelTable.shared(dpi._signature)
        self.axiom_masks = {ax.id: self.table.mask(ax.sentence) for ax in dpi.axioms}
        self.base = self.table.conjunction((*dpi.background, *dpi.positive))
        self.negative_masks = tuple(self.table.mask(n) for n in dpi.negative)
        self._outside_negative = tuple(self.table.full ^ n for n in self.negative_masks)

    def mask(self, f: Formula) -> int:
        return self.table.mask(f)

    def models(self, kept: Iterable[str]) -> int:
        m = self.base
        masks = self.axiom_masks
        for i in kept:
            m &= masks[i]
        return m

    def models_violate(self, m: int) -> bool:
        if not m:
            return True
        for outside in self._outside_negative:
            if not m & outside:
                return True
        return False

    def violates(self, kept, extra=()):
        _tick()
        m = self.models(kept)
        for f in extra:
            m &= self.table.mask(f)
        return self.models_violate(m)

    def entails(self, kept, g):
        _tick()
        return not (self.models(kept) & ~self.table.mask(g))


class _SatLogic(_Logic):
    def __init__(self, dpi: Dpi):
        self.dpi = dpi
        self.base = (*dpi.background, *dpi.positive)

    def _theory(self, kept, extra=()):
        return [*(self.dpi.axiom(i).sentence for i in kept), *self.base, *extra]

    def violates(self, kept, extra=()):
        theory = self._theory(kept, extra)
        if not is_consistent(theory):
            return True
        return any(not is_consistent([*theory, Not(n)]) for n in self.dpi.negative)

    def entails(self, kept, g):
        return not is_consistent(self._theory(kept, (Not(g),)))


# ------------------------------------------------------------------ file IO

_SECTIONS = ("KB", "BACKGROUND", "POS", "NEG")


def load_dpi(source: str) -> Dpi:
    """Parse a DPI document (``[KB]``, ``[BACKGROUND]``, ``[POS]``, ``[NEG]``)."""
    sections: dict[str, list] = {s: [] for s in _SECTIONS}
    current = None
    seen_ids: set[str] = set()
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().upper()
            if current not in sections:
                raise DpiFormatError(f"unknown section {line}", None, lineno)
            continue
        if current is None:
            raise DpiFormatError("content before first section header", None, lineno)
        if current == "KB":
            head, sep, body = line.partition(":")
            parts = head.split()
            if not sep or len(parts) != 2:
                raise DpiFormatError("expected '<id> <prob> : <formula>'", current, lineno)
            axiom_id, prob_text = parts
            if axiom_id in seen_ids:
                raise DpiFormatError(f"duplicate axiom id {axiom_id!r}", current, lineno)
            seen_ids.add(axiom_id)
            try:
                prob = float(prob_text)
            except ValueError:
                raise DpiFormatError(f"bad probability {prob_text!r}", current, lineno) from None
            if not 0.0 < prob < 1.0:
                raise DpiFormatError(f"probability {prob} outside (0, 1)", current, lineno)
            sections[current].append(Axiom(axiom_id, _parse(body, current, lineno), prob))
        else:
            sections[current].append(_parse(line, current, lineno))
    if not sections["KB"]:
        raise DpiFormatError("empty [KB] section", "KB")
    return Dpi(
        tuple(sections["KB"]),
        tuple(sections["BACKGROUND"]),
        tuple(sections["POS"]),
        tuple(sections["NEG"]),
    )


def _parse(text, section, lineno):
    try:
        return parse_formula(text)
    except FormulaSyntaxError as exc:
        raise DpiFormatError(str(exc), section, lineno) from None


def read_dpi(path) -> Dpi:
    return load_dpi(Path(path).read_text(encoding="utf-8"))


def dump_dpi(dpi: Dpi) -> str:
    out = ["[KB]"]
    out += [f"{ax.id} {ax.fault_prob!r} : {to_text(ax.sentence)}" for ax in dpi.axioms]
    for name, fs in zip(_SECTIONS[1:], (dpi.background, dpi.positive, dpi.negative)):
        out.append(f"[{name}]")
        out += [to_text(f) for f in fs]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- semantics

def needs_repair(dpi: Dpi) -> bool:
    return dpi.logic().violates(dpi.ids)


def is_diagnosis(dpi: Dpi, d: Iterable[str]) -> bool:
    removed = set(dpi.components(d))
    return not dpi.logic().violates([i for i in dpi.ids if i not in removed])


def _product(factors):
    # sorted so that equal factor multisets give bit-identical products
    return math.prod(sorted(factors))


def diagnosis_probability(dpi: Dpi, d: Iterable[str]) -> float:
    removed = set(dpi.components(d))
    return _product(
        ax.fault_prob if ax.id in removed else 1.0 - ax.fault_prob for ax in dpi.axioms
    )


def normalize(probs: Sequence[float]) -> list[float]:
    probs = list(probs)
    if not probs:
        raise ValueError("cannot normalize an empty collection")
    if any(not p > 0 for p in probs):
        raise ValueError("probabilities must be positive")
    total = math.fsum(probs)
    return [p / total for p in probs]


def apply_measurement(dpi: Dpi, m: Formula, outcome: str) -> Dpi:
    """Return a new DPI with ``m`` added to P (outcome ``"P"``) or N (``"N"``)."""
    if outcome == "P":
        return replace(dpi, positive=(*dpi.positive, m), _logic={})
    if outcome == "N":
        return replace(dpi, negative=(*dpi.negative, m), _logic={})
    raise ValueError(f"outcome must be 'P' or 'N', got {outcome!r}")


def complexity_probabilities(sentences: Sequence[Formula], seed: int,
                             low: float = 0.01, high: float = 0.5) -> list[float]:
    """Random fault probabilities, monotone in syntactic complexity.

    Complexity is the number of connectives.  One value per distinct
    complexity level is drawn uniformly from (low, high); the values are
    sorted and handed out so that more complex sentences get larger ones.
    """
    levels = sorted({connective_count(s) for s in sentences})
    rng = random.Random(seed)
    values: set[float] = set()
    while len(values) < len(levels):
        v = round(rng.uniform(low, high), 4)
        if low < v < high:
            values.add(v)
    by_level = dict(zip(levels, sorted(values)))
    return [by_level[connective_count(s)] for s in sentences]
