"""The six diagnosis sample types behind one entry point."""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass

from .dpi import Dpi, diagnosis_probability, normalize
from .hstree import enumerate_all, enumerate_best_first, enumerate_inv_hstree, rank_key

__all__ = ["SAMPLE_TYPES", "Sample", "draw_sample", "derive_seed", "sample_from"]

SAMPLE_TYPES = ("bf", "rd", "wf", "abf", "ard", "awf")

_INV_MODES = {"abf": "sorted-desc", "awf": "sorted-asc", "ard": "reshuffle-per-call"}


def derive_seed(seed: int, *keys) -> int:
    """A 63-bit child seed determined by ``seed`` and ``keys`` only.

    Uses BLAKE2b over the textual key path, so streams are stable across
    platforms, processes and Python hash randomisation.
    """
    text = "/".join(map(str, (seed, *keys))).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "big") >> 1


@dataclass(frozen=True)
class Sample:
    sample_type: str
    diagnoses: tuple[tuple[str, ...], ...]
    norm_probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.diagnoses) != len(self.norm_probs):
            raise ValueError("diagnoses and norm_probs differ in length")
        if len(set(self.diagnoses)) != len(self.diagnoses):
            raise ValueError("sample contains duplicate diagnoses")
        if self.diagnoses and not math.isclose(math.fsum(self.norm_probs), 1.0, abs_tol=1e-9):
            raise ValueError("normalised probabilities must sum to one")

    def __len__(self):
        return len(self.diagnoses)


def sample_from(dpi: Dpi, diagnoses, sample_type: str = "given") -> Sample:
    """Wrap an explicit list of diagnoses, normalising their probabilities."""
    diagnoses = tuple(dpi.components(d) for d in diagnoses)
    probs = normalize([diagnosis_probability(dpi, d) for d in diagnoses])
    return Sample(sample_type, diagnoses, tuple(probs))


def draw_sample(dpi: Dpi, sample_type: str, k: int, seed: int = 0) -> Sample:
    """Draw ``min(k, |allD|)`` minimal diagnoses of the given type.

    ``rd`` and ``wf`` materialise every minimal diagnosis first, as a
    brute-force reference for the random and worst-first populations.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if sample_type == "bf":
        diagnoses = enumerate_best_first(dpi, k)
    elif sample_type == "rd":
        population = enumerate_all(dpi)
        diagnoses = random.Random(seed).sample(population, min(k, len(population)))
    elif sample_type == "wf":
        population = sorted(enumerate_all(dpi), key=lambda d: rank_key(dpi, d))
        diagnoses = population[::-1][:k]
    elif sample_type in _INV_MODES:
        diagnoses = enumerate_inv_hstree(dpi, k, _INV_MODES[sample_type], seed)
    else:
        raise ValueError(f"unknown sample type {sample_type!r}")
    return sample_from(dpi, diagnoses, sample_type)
