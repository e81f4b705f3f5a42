"""Measurement points: partitions, outcome estimates and heuristic scores."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import cached_property, lru_cache, reduce
from operator import and_, or_
from itertools import combinations
from typing import Iterable, Sequence

from .dpi import Dpi, _TableLogic
from .formula import And, Atom, Formula, Implies, ModelTable, Not, _tick, to_text
from .sampling import Sample

__all__ = [
    "HEURISTICS", "MeasurementPoint", "NonInformativeError", "Partitioner",
    "partition_mp", "is_informative", "candidate_universe", "generate_mp_pool",
    "score_mp", "select_mp", "Cautiousness", "RIO_PENALTY",
]

HEURISTICS = ("ent", "spl", "rio", "mps")
FORMS = ("literal", "implication", "conjunctive")

RIO_PENALTY = 10.0


class NonInformativeError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementPoint:
    """A candidate sentence with its partition of a sample.

    ``plus``/``minus``/``zero`` hold sample indices of the diagnoses that
    predict the positive outcome, the negative outcome, or neither.
    """

    sentence: Formula
    plus: tuple[int, ...]
    minus: tuple[int, ...]
    zero: tuple[int, ...]
    p_plus: float
    p_minus: float
    p_zero: float
    er_plus: float
    er_minus: float

    @cached_property
    def text(self) -> str:
        return to_text(self.sentence)

    @property
    def size(self) -> int:
        return len(self.plus) + len(self.minus) + len(self.zero)


class Partitioner:
    """Classifies sample diagnoses against candidate sentences.

    On model-table instances the kept-theory models of every diagnosis are
    computed once, so each classification is a pair of bit operations.
    """

    def __init__(self, dpi: Dpi, sample: Sample):
        self.dpi = dpi
        self.sample = sample
        self.logic = dpi.logic()
        self._kept = [
            [i for i in dpi.ids if i not in set(d)] for d in sample.diagnoses
        ]
        self._fast = isinstance(self.logic, _TableLogic)
        if self._fast:
            self._models = [self.logic.models(kept) for kept in self._kept]
            # models shared by every kept theory, and models of any of them
            self._common = reduce(and_, self._models) if self._models else 0
            self._any = reduce(or_, self._models) if self._models else 0

    def side(self, index: int, m: Formula) -> int:
        """+1 (predicts P), -1 (predicts N) or 0 (uncommitted)."""
        if self._fast and self._in_table(m):
            _tick(); _tick()
            models = self._models[index]
            mm = self.logic.mask(m)
            if not models & ~mm:
                return 1
            return -1 if self.logic.models_violate(models & mm) else 0
        # sentences outside the table signature go to the SAT backend
        logic = self.logic if not self._fast else self.dpi.logic("sat")
        kept = self._kept[index]
        if logic.entails(kept, m):
            return 1
        return -1 if logic.violates(kept, (m,)) else 0

    def _in_table(self, m):
        try:
            self.logic.mask(m)
        except KeyError:
            return False
        return True

    def informative_point(self, m: Formula, mask: int | None = None) -> MeasurementPoint | None:
        """``point(m)`` if it is informative, else None; cheap rejection first.

        ``mask`` may carry the precomputed model set of ``m``.
        """
        if mask is None:
            if not (self._fast and self._in_table(m)):
                mp = self.point(m)
                return mp if is_informative(mp) else None
            mask = self.logic.mask(m)
        outside = self.logic.table.full ^ mask
        models = self._models
        _tick(len(models))
        # plus is empty unless m holds in the common models, and is
        # everything if m holds in all models of the sample
        if self._common & outside or not self._any & outside:
            return None
        plus = [i for i, ms in enumerate(models) if not ms & outside]
        if not plus or len(plus) == len(models):
            return None
        taken = set(plus)
        rest = [i for i in range(len(models)) if i not in taken]
        _tick(len(rest))
        violate = self.logic.models_violate
        minus = [i for i in rest if violate(models[i] & mask)]
        if not minus:
            return None
        committed = set(minus)
        zero = [i for i in rest if i not in committed]
        return _estimates(m, plus, minus, zero, self.sample.norm_probs)

    def split(self, m: Formula):
        plus, minus, zero = [], [], []
        for i in range(len(self.sample)):
            s = self.side(i, m)
            (plus if s > 0 else minus if s < 0 else zero).append(i)
        return plus, minus, zero

    def point(self, m: Formula) -> MeasurementPoint:
        plus, minus, zero = self.split(m)
        return _estimates(m, plus, minus, zero, self.sample.norm_probs)


def _estimates(m, plus, minus, zero, probs) -> MeasurementPoint:
    n = len(probs)
    pp = math.fsum(probs[i] for i in plus)
    pm = math.fsum(probs[i] for i in minus)
    p0 = math.fsum(probs[i] for i in zero)
    return MeasurementPoint(
        sentence=m, plus=tuple(plus), minus=tuple(minus), zero=tuple(zero),
        p_plus=pp + 0.5 * p0, p_minus=pm + 0.5 * p0, p_zero=p0,
        er_plus=len(minus) / n, er_minus=len(plus) / n,
    )


def partition_mp(dpi: Dpi, sample: Sample, m: Formula) -> MeasurementPoint:
    if not len(sample):
        raise ValueError("cannot partition an empty sample")
    return Partitioner(dpi, sample).point(m)


def is_informative(mp: MeasurementPoint) -> bool:
    return bool(mp.plus) and bool(mp.minus)


def _literals(names):
    for name in names:
        yield Atom(name)
        yield Not(Atom(name))


def _atom_of(lit):
    return lit.name if isinstance(lit, Atom) else lit.arg.name


@lru_cache(maxsize=32)
def _signature_universe(names: tuple[str, ...], forms: frozenset) -> tuple[Formula, ...]:
    lits = list(_literals(names))
    out: list[Formula] = []
    if "literal" in forms:
        out += lits
    if "implication" in forms:
        out += [Implies(a, b) for a in lits for b in lits if _atom_of(a) != _atom_of(b)]
    if "conjunctive" in forms:
        for a, b in combinations(lits, 2):
            if _atom_of(a) >= _atom_of(b):
                continue
            for c in lits:
                if _atom_of(c) not in (_atom_of(a), _atom_of(b)):
                    out.append(Implies(And(a, b), c))
    return tuple(dict.fromkeys(out))


@lru_cache(maxsize=32)
def _universe_masks(names: tuple[str, ...], forms: frozenset) -> tuple[int, ...]:
    table = ModelTable.shared(names)
    return tuple(table.mask(m) for m in _signature_universe(names, forms))


def _lazy_shuffle(items: list, rng: random.Random):
    """Yield ``items`` in a uniformly random order, shuffling only what is consumed."""
    n = len(items)
    for i in range(n):
        j = i + int(rng.random() * (n - i))
        items[i], items[j] = items[j], items[i]
        yield items[i]


def candidate_universe(dpi: Dpi, forms: Iterable[str] = FORMS) -> list[Formula]:
    """Candidate sentences over the DPI signature, deduplicated.

    ``literal``: a, !a.  ``implication``: l1 -> l2 over distinct atoms.
    ``conjunctive``: l1 & l2 -> l3 over three distinct atoms, with the
    antecedent atoms in name order.  ``axioms``: the sentences of K and
    their negations; this family always splits two distinct minimal
    diagnoses and serves as the fallback when the others run dry.
    """
    forms = frozenset(forms)
    unknown = forms - {*FORMS, "axioms"}
    if unknown:
        raise ValueError(f"unknown candidate forms {sorted(unknown)}")
    out = list(_signature_universe(tuple(sorted(dpi.signature())), forms - {"axioms"}))
    if "axioms" in forms:
        for ax in dpi.axioms:
            out += [ax.sentence, Not(ax.sentence)]
    return list(dict.fromkeys(out))


def generate_mp_pool(dpi: Dpi, sample: Sample, limit: int = 50, seed: int = 0,
                     forms: Iterable[str] = FORMS) -> list[MeasurementPoint]:
    """Up to ``limit`` informative MPs drawn uniformly from the universe."""
    if limit < 1:
        raise ValueError("limit must be positive")
    if len(sample) < 2:
        return []
    forms = frozenset(forms)
    part = Partitioner(dpi, sample)
    names = tuple(sorted(dpi.signature()))
    if part._fast and "axioms" not in forms:
        universe = _signature_universe(names, forms)
        masks = _universe_masks(names, forms)
    else:
        universe = tuple(candidate_universe(dpi, forms))
        masks = None
    rng = random.Random(seed)
    pool = []
    if masks is not None:
        # inline the cheap rejection of informative_point; ticks are batched
        common, union, full = part._common, part._any, part.logic.table.full
        rejected = 0
    for n in _lazy_shuffle(list(range(len(universe))), rng):
        if masks is not None:
            outside = full ^ masks[n]
            if common & outside or not union & outside:
                rejected += 1
                continue
        mp = part.informative_point(universe[n], None if masks is None else masks[n])
        if mp is not None:
            pool.append(mp)
            if len(pool) >= limit:
                break
    if masks is not None:
        _tick(rejected * len(sample))
    return pool


# ---------------------------------------------------------------- heuristics

def _xlog2x(p):
    return p * math.log2(p) if p > 0 else 0.0


def score_mp(mp: MeasurementPoint, h: str, rio_state: float = 0.3) -> float:
    """Heuristic score of an informative MP; lower is better.

    ent: 1 - H(p+, p-) + P0 (zero iff an even, fully committed split).
    spl: | |D+| - |D-| | + |D0|.
    mps: favour the outcome with the larger elimination rate, then its
         probability; the key (-ER*, -p*) is folded into one real, which
         is exact because ER* moves in steps of 1/n while p*/(n+1) < 1/n.
    rio: ent while the smaller elimination rate reaches the cautiousness
         level, else ent plus a penalty growing with the shortfall.
    """
    if not is_informative(mp):
        raise NonInformativeError(f"{mp.text} is not informative")
    h = h.lower()
    if h == "ent":
        return _xlog2x(mp.p_plus) + _xlog2x(mp.p_minus) + mp.p_zero + 1.0
    if h == "spl":
        return float(abs(len(mp.plus) - len(mp.minus)) + len(mp.zero))
    if h == "mps":
        er, p = max((mp.er_plus, mp.p_plus), (mp.er_minus, mp.p_minus))
        return -er - p / (mp.size + 1)
    if h == "rio":
        ent = score_mp(mp, "ent")
        worst = min(mp.er_plus, mp.er_minus)
        if worst >= rio_state:
            return ent
        return ent + RIO_PENALTY + (rio_state - worst)
    raise ValueError(f"unknown heuristic {h!r}")


def select_mp(pool: Sequence[MeasurementPoint], h: str, rio_state: float = 0.3) -> MeasurementPoint:
    """Best-scoring MP; ties go to the smallest formula text."""
    if not pool:
        raise ValueError("empty measurement pool")
    return min(pool, key=lambda mp: (score_mp(mp, h, rio_state), mp.text))


class Cautiousness:
    """RIO's cautiousness level, adapted after every measurement."""

    def __init__(self, initial=0.3, step=0.1, upper=0.5):
        self.value = initial
        self.step = step
        self.upper = upper

    def update(self, eliminated_fraction: float, sample_size: int) -> float:
        if eliminated_fraction < self.value:
            self.value += self.step
        else:
            self.value -= self.step
        lower = 1.0 / sample_size if sample_size else 0.0
        self.value = min(max(self.value, lower), self.upper)
        return self.value
