"""Minimal-diagnosis enumeration with hitting-set trees."""

from __future__ import annotations

import heapq
import random
from collections import deque
from typing import Sequence

from .conflict import find_min_conflict, inv_qx_diagnosis
from .dpi import Dpi, diagnosis_probability, needs_repair

__all__ = [
    "NoRepairNeeded", "enumerate_all", "enumerate_best_first",
    "enumerate_inv_hstree", "rank_key", "ORDER_MODES",
]

ORDER_MODES = ("sorted-desc", "sorted-asc", "reshuffle-per-call")


class NoRepairNeeded(ValueError):
    """The instance is consistent and entails no negative measurement."""


def _require_repair(dpi):
    if not needs_repair(dpi):
        raise NoRepairNeeded("the DPI has no faults to diagnose")


def rank_key(dpi: Dpi, d: Sequence[str]):
    """Global ordering: most probable first, ties by axiom positions."""
    return (-diagnosis_probability(dpi, d), [dpi.position(i) for i in d])


class _ConflictSource:
    """Minimal conflicts for HS-tree nodes, reusing known ones first."""

    def __init__(self, dpi):
        self.dpi = dpi
        self.known: list[frozenset] = []
        self._by_remainder: dict[frozenset, frozenset | None] = {}

    def label(self, path: frozenset):
        for c in self.known:
            if not c & path:
                return c
        if path in self._by_remainder:
            return self._by_remainder[path]
        kept = [i for i in self.dpi.ids if i not in path]
        found = find_min_conflict(self.dpi, kept)
        c = None if found is None else frozenset(found)
        self._by_remainder[path] = c
        if c is not None:
            self.known.append(c)
        return c


def enumerate_all(dpi: Dpi, limit: int | None = None) -> list[tuple[str, ...]]:
    """All minimal diagnoses (breadth-first HS-tree), sorted by axiom position.

    With ``limit`` the search stops after that many diagnoses; the ones
    returned are then the first found in breadth-first order.
    """
    _require_repair(dpi)
    conflicts = _ConflictSource(dpi)
    found: list[frozenset] = []
    queue = deque([frozenset()])
    seen = {frozenset()}
    while queue:
        if limit is not None and len(found) >= limit:
            break
        path = queue.popleft()
        if any(d <= path for d in found):
            continue
        c = conflicts.label(path)
        if c is None:
            found.append(path)
            continue
        for e in dpi.components(c):
            child = path | {e}
            if child not in seen:
                seen.add(child)
                queue.append(child)
    result = [dpi.components(d) for d in found]
    return sorted(result, key=lambda d: [dpi.position(i) for i in d])


def enumerate_best_first(dpi: Dpi, k: int) -> list[tuple[str, ...]]:
    """The ``k`` most probable minimal diagnoses, most probable first.

    Uniform-cost HS-tree.  A node's priority bounds the probability of any
    diagnosis below it: the probability of its path set as a diagnosis,
    times the odds p/(1-p) of every unassigned axiom with p > 1/2 (a no-op
    in the usual p < 1/2 regime).  A node that turns out to be a diagnosis
    is re-queued at its exact probability and only emitted once it tops
    the queue, so ties come out by axiom positions.
    """
    if k < 1:
        raise ValueError("k must be positive")
    _require_repair(dpi)
    boost = {ax.id: ax.fault_prob / (1.0 - ax.fault_prob) for ax in dpi.axioms if ax.fault_prob > 0.5}

    def bound(path):
        b = diagnosis_probability(dpi, path)
        for i, odds in boost.items():
            if i not in path:
                b *= odds
        return b

    def positions(path):
        return sorted(dpi.position(i) for i in path)

    conflicts = _ConflictSource(dpi)
    found: list[frozenset] = []
    out: list[tuple[str, ...]] = []
    root = frozenset()
    heap = [(-bound(root), 0, positions(root), root)]
    seen = {root}
    while heap and len(out) < k:
        _, verified, _, path = heapq.heappop(heap)
        if verified:
            out.append(dpi.components(path))
            continue
        if any(d <= path for d in found):
            continue
        c = conflicts.label(path)
        if c is None:
            if _is_minimal(dpi, path):
                found.append(path)
                heapq.heappush(heap, (-diagnosis_probability(dpi, path), 1, positions(path), path))
            continue
        for e in dpi.components(c):
            child = path | {e}
            if child not in seen:
                seen.add(child)
                heapq.heappush(heap, (-bound(child), 0, positions(child), child))
    return out


def _is_minimal(dpi, path):
    logic = dpi.logic()
    for e in path:
        smaller = path - {e}
        if not logic.violates([i for i in dpi.ids if i not in smaller]):
            return False
    return True


def _order(dpi, mode):
    if mode == "sorted-desc":
        return [ax.id for ax in sorted(dpi.axioms, key=lambda ax: -ax.fault_prob)]
    if mode == "sorted-asc":
        return [ax.id for ax in sorted(dpi.axioms, key=lambda ax: ax.fault_prob)]
    return list(dpi.ids)


def enumerate_inv_hstree(dpi: Dpi, k: int, order_mode: str = "sorted-desc",
                         seed: int = 0) -> list[tuple[str, ...]]:
    """Up to ``k`` distinct minimal diagnoses from an inverse HS-tree.

    Every node blocks the axioms on its path from the next diagnosis.  A
    node reuses any known diagnosis avoiding its path; otherwise one call
    of :func:`inv_qx_diagnosis` yields a diagnosis that is new by
    construction.  ``order_mode`` fixes the axiom list: by fault
    probability descending or ascending, or freshly shuffled (seeded)
    before every call.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if order_mode not in ORDER_MODES:
        raise ValueError(f"unknown order mode {order_mode!r}")
    _require_repair(dpi)
    rng = random.Random(seed)
    order = _order(dpi, order_mode)

    def compute(blocked):
        if order_mode == "reshuffle-per-call":
            rng.shuffle(order)
        return inv_qx_diagnosis(dpi, order, exclude=blocked)

    found: list[tuple[str, ...]] = []
    root = frozenset()
    queue = deque([root])
    seen = {root}
    while queue and len(found) < k:
        path = queue.popleft()
        label = next((d for d in found if not path.intersection(d)), None)
        if label is None:
            label = compute(path)
            if label is None:
                continue
            found.append(label)
        for e in label:
            child = path | {e}
            if child not in seen:
                seen.add(child)
                queue.append(child)
    return found
