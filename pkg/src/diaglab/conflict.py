"""Minimal conflicts and directly computed minimal diagnoses.

Both searches are instances of one divide-and-conquer routine,
:func:`quickxplain`, run over different monotone predicates: "this subset
of K is a conflict" and "removing this subset of K repairs the instance".
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

from .dpi import Dpi

__all__ = [
    "is_conflict", "quickxplain", "find_min_conflict", "antilex_greater",
    "inv_qx_diagnosis",
]


def is_conflict(dpi: Dpi, c: Iterable[str]) -> bool:
    return dpi.logic().violates(dpi.components(c))


def quickxplain(candidates: Sequence, holds: Callable[[list], bool],
                background: Sequence = ()) -> list | None:
    """Smallest preferred subset ``X`` of ``candidates`` with ``holds(background + X)``.

    ``holds`` must be monotone (true sets stay true under supersets).
    Earlier candidates are preferred: the result is maximal under the
    antilexicographic order induced by ``candidates``.  Returns ``None``
    when even the full candidate list does not satisfy ``holds``.
    """
    background = list(background)
    candidates = list(candidates)
    if not holds(background + candidates):
        return None
    if not candidates or holds(background):
        return []
    return _qx(background, False, candidates, holds)


def _qx(background, has_delta, candidates, holds):
    if has_delta and holds(background):
        return []
    if len(candidates) == 1:
        return list(candidates)
    split = len(candidates) // 2
    first, second = candidates[:split], candidates[split:]
    d2 = _qx(background + first, bool(first), second, holds)
    d1 = _qx(background + d2, bool(d2), first, holds)
    return d1 + d2


def find_min_conflict(dpi: Dpi, candidates: Iterable[str]) -> tuple[str, ...] | None:
    """A subset-minimal conflict inside ``candidates``, or ``None``.

    An empty tuple means B u P alone already fails, so no diagnosis exists.
    """
    logic = dpi.logic()
    found = quickxplain(dpi.components(candidates), logic.violates)
    return None if found is None else dpi.components(found)


def antilex_greater(x: Iterable, y: Iterable, order: Sequence) -> bool:
    """True iff sublist ``x`` ranks above ``y`` antilexicographically over ``order``.

    Scanning ``order`` from its end, the first element in exactly one of
    the two sets decides: the set lacking it ranks higher.
    """
    xs, ys = set(x), set(y)
    for element in reversed(order):
        in_x, in_y = element in xs, element in ys
        if in_x != in_y:
            return in_y
    return False


def inv_qx_diagnosis(dpi: Dpi, order: Sequence[str],
                     exclude: Iterable[str] = (), include: Iterable[str] = ()) -> tuple[str, ...] | None:
    """The antilex-maximal minimal diagnosis over ``order`` respecting blocking.

    ``exclude`` axioms may not be part of the diagnosis (they are trusted);
    ``include`` axioms are forced into it and the rest is minimised around
    them.  Returns ``None`` if no diagnosis meets the constraints.
    """
    if sorted(order) != sorted(dpi.ids):
        raise ValueError("order must be a permutation of the DPI's axiom ids")
    exclude = set(dpi.components(exclude))
    include = set(dpi.components(include))
    if exclude & include:
        raise ValueError("an axiom cannot be both excluded and included")
    logic = dpi.logic()
    ids = dpi.ids

    def repairs(removed):
        gone = set(removed)
        return not logic.violates([i for i in ids if i not in gone])

    free = [i for i in order if i not in exclude and i not in include]
    found = quickxplain(free, repairs, background=sorted(include, key=dpi.position))
    if found is None:
        return None
    return dpi.components([*include, *found])
