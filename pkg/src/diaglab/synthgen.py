"""Seeded generator of small propositional diagnosis instances."""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .dpi import Axiom, Dpi, complexity_probabilities, dump_dpi, needs_repair, read_dpi
from .formula import And, Atom, Formula, Implies, ModelTable, Not, Or
from .hstree import enumerate_all
from .measure import candidate_universe

__all__ = ["GenerationFailed", "generate_dpi", "SuiteEntry", "DEFAULT_SUITE",
           "write_suite", "load_suite", "MANIFEST_FIELDS"]

MANIFEST_FIELDS = ("name", "n_axioms", "n_atoms", "n_diags", "min_diag", "max_diag")


class GenerationFailed(RuntimeError):
    def __init__(self, message, nearest: Dpi | None = None, n_diags: int | None = None):
        super().__init__(message)
        self.nearest = nearest
        self.n_diags = n_diags


def _literal(name, rng):
    return Atom(name) if rng.random() < 0.5 else Not(Atom(name))


def _axiom(rng, names) -> Formula:
    """A literal, l -> l, l -> (l | l) or (l & l) -> l over distinct atoms."""
    shape = rng.randrange(4 if len(names) >= 3 else 2)
    picked = [_literal(a, rng) for a in rng.sample(names, min(3, len(names)))]
    if shape == 0:
        return picked[0]
    if shape == 1:
        return Implies(picked[0], picked[1])
    if shape == 2:
        return Implies(picked[0], Or(picked[1], picked[2]))
    return Implies(And(picked[0], picked[1]), picked[2])


def _atom_names(n_atoms):
    if n_atoms <= 26:
        return [chr(ord("A") + i) for i in range(n_atoms)]
    return [f"x{i}" for i in range(n_atoms)]


def _blocks(items, n_blocks):
    size, extra = divmod(len(items), n_blocks)
    out, start = [], 0
    for b in range(n_blocks):
        end = start + size + (1 if b < extra else 0)
        out.append(items[start:end])
        start = end
    return out


def _block_kb(names, n_axioms, table, rng, taken):
    sentences: list[Formula] = []
    while len(sentences) < n_axioms:
        f = _axiom(rng, names)
        m = table.mask(f)
        # tautologies can never be faulty, contradictions always are
        if f in taken or f in sentences or m == 0 or m == table.full:
            continue
        sentences.append(f)
    models = table.conjunction(sentences)
    probe = Dpi(tuple(Axiom(f"t{i}", f, 0.5) for i, f in enumerate(sentences)))
    entailed = []
    for m in candidate_universe(probe, ("literal", "implication")):
        mm = table.mask(m)
        if mm != table.full and not models & ~mm:
            entailed.append(m)
    return sentences, entailed


def _block(names, n_axioms, table, rng, taken, tries=20):
    """Axioms and entailed piece for one block, preferring a block with at
    least two minimal diagnoses of its own."""
    best = None
    for _ in range(tries):
        sentences, entailed = _block_kb(names, n_axioms, table, rng, taken)
        if not entailed:
            continue
        piece = rng.choice(entailed)
        probe = Dpi(tuple(Axiom(f"t{i}", f, 0.5) for i, f in enumerate(sentences)),
                    negative=(piece,))
        n = len(enumerate_all(probe))
        if n >= 2:
            return sentences, piece
        best = best or (sentences, piece)
    return best


def _candidate(n_axioms, n_atoms, rng):
    names = _atom_names(n_atoms)
    table = ModelTable(names)
    n_blocks = max(1, n_atoms // 3)
    sentences: list[Formula] = []
    pieces = []
    sizes = [len(b) for b in _blocks(range(n_axioms), n_blocks)]
    for block_names, size in zip(_blocks(names, n_blocks), sizes):
        found = _block(block_names, size, table, rng, sentences)
        if found is None:
            return None
        sentences += found[0]
        pieces.append(found[1])
    negative = pieces[0]
    for p in pieces[1:]:
        negative = Or(negative, p)
    probs = complexity_probabilities(sentences, rng.randrange(2**31))
    axioms = tuple(Axiom(f"ax{i + 1}", f, p) for i, (f, p) in enumerate(zip(sentences, probs)))
    return Dpi(axioms, negative=(negative,))


def generate_dpi(n_axioms: int, n_atoms: int, diag_range: tuple[int, int] = (2, 100),
                 seed: int = 0, max_attempts: int = 2000) -> Dpi:
    """A DPI needing repair whose number of minimal diagnoses is in ``diag_range``.

    Atoms and axioms are split into blocks of about three atoms.  Each
    block holds random literals, l -> l, l -> (l | l) and (l & l) -> l and
    contributes one non-tautological literal or implication it entails;
    the single negative measurement is the disjunction of these, so the
    blocks' diagnoses combine multiplicatively.  Rejection-samples until
    the diagnosis count fits or ``max_attempts`` is spent.
    """
    if n_axioms < 2 or n_atoms < 2:
        raise ValueError("need at least two axioms and two atoms")
    if n_axioms < max(1, n_atoms // 3):
        raise ValueError("need at least one axiom per block of three atoms")
    lo, hi = diag_range
    rng = random.Random(seed)
    nearest, nearest_n, nearest_gap = None, None, None
    for _ in range(max_attempts):
        dpi = _candidate(n_axioms, n_atoms, rng)
        if dpi is None or not needs_repair(dpi):
            continue
        n = len(enumerate_all(dpi))
        if lo <= n <= hi:
            return dpi
        gap = lo - n if n < lo else n - hi
        if nearest_gap is None or gap < nearest_gap:
            nearest, nearest_n, nearest_gap = dpi, n, gap
    raise GenerationFailed(
        f"no instance with {lo}..{hi} minimal diagnoses after {max_attempts} attempts"
        f" (nearest had {nearest_n})", nearest, nearest_n,
    )


@dataclass(frozen=True)
class SuiteEntry:
    name: str
    n_axioms: int
    n_atoms: int
    diag_range: tuple[int, int]
    seed: int


# desk-scale stand-ins spanning a few to about a hundred minimal diagnoses
DEFAULT_SUITE = (
    SuiteEntry("s1", 5, 3, (4, 4), 1),
    SuiteEntry("s2", 8, 6, (5, 8), 2),
    SuiteEntry("s3", 10, 6, (9, 16), 3),
    SuiteEntry("s4", 15, 9, (17, 25), 4),
    SuiteEntry("s5", 16, 9, (26, 40), 5),
    SuiteEntry("s6", 20, 12, (41, 60), 6),
    SuiteEntry("s7", 22, 12, (61, 80), 7),
    SuiteEntry("s8", 25, 15, (81, 100), 8),
)


def _diag_stats(dpi):
    diags = enumerate_all(dpi)
    sizes = [len(d) for d in diags]
    return len(diags), min(sizes), max(sizes)


def write_suite(out_dir, entries: Sequence[SuiteEntry] = DEFAULT_SUITE) -> list[dict]:
    """Generate ``entries`` into ``out_dir`` as .dpi files plus manifest.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for e in entries:
        dpi = generate_dpi(e.n_axioms, e.n_atoms, e.diag_range, e.seed)
        (out / f"{e.name}.dpi").write_text(dump_dpi(dpi), encoding="utf-8")
        n, lo, hi = _diag_stats(dpi)
        manifest.append({"name": e.name, "n_axioms": e.n_axioms, "n_atoms": len(dpi.signature()),
                         "n_diags": n, "min_diag": lo, "max_diag": hi})
    with open(out / "manifest.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, MANIFEST_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(manifest)
    return manifest


def load_suite(directory) -> dict[str, Dpi]:
    """All ``*.dpi`` files of a directory, keyed by file stem, in name order."""
    return {p.stem: read_dpi(p) for p in sorted(Path(directory).glob("*.dpi"))}
