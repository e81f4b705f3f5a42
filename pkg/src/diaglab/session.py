"""Sequential diagnosis sessions (sample, select, ask, update)."""

from __future__ import annotations

import random
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .dpi import Dpi, apply_measurement, is_diagnosis
from .formula import Formula, check_count, to_text
from .hstree import enumerate_all
from .measure import (
    HEURISTICS, Cautiousness, MeasurementPoint, Partitioner,
    generate_mp_pool, select_mp,
)
from .sampling import SAMPLE_TYPES, Sample, derive_seed, draw_sample

__all__ = [
    "SessionConfig", "IterationRecord", "SessionLog", "SampleExhausted",
    "PoolExhausted", "oracle_answer", "bayes_update", "run_session",
    "PROMPT",
]

PROMPT = "MP #{i}: {formula}  — entailed by the true system? [p/n]"


class SampleExhausted(RuntimeError):
    """An outcome contradicted every diagnosis of the sample."""


class PoolExhausted(RuntimeError):
    """No informative measurement point exists for the current sample."""


@dataclass(frozen=True)
class SessionConfig:
    sample_type: str
    k: int
    heuristic: str
    target: tuple[str, ...] | None = None
    interactive: bool = False
    sigma: float = 1.0
    seed: int = 0
    mp_limit: int = 50

    def __post_init__(self):
        if self.sample_type not in SAMPLE_TYPES:
            raise ValueError(f"unknown sample type {self.sample_type!r}")
        if self.heuristic.lower() not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}")
        if self.k < 2:
            raise ValueError("k must be at least 2 to discriminate diagnoses")
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError("sigma must lie in (0, 1]")
        if self.interactive == (self.target is not None):
            raise ValueError("give exactly one of target= or interactive=True")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    sample: tuple[tuple[str, ...], ...]
    sampling_ms: float
    sampling_checks: int
    mp: str
    outcome: str
    eliminated: int
    pool_size: int

    def trace(self):
        return (self.index, self.sample, self.sampling_checks, self.mp,
                self.outcome, self.eliminated, self.pool_size)


@dataclass
class SessionLog:
    records: list[IterationRecord] = field(default_factory=list)
    final_diagnosis: tuple[str, ...] | None = None
    wall_ms: float = 0.0
    compute_checks: int = 0

    @property
    def n_measurements(self) -> int:
        return len(self.records)

    @property
    def total_sampling_ms(self) -> float:
        return sum(r.sampling_ms for r in self.records)

    @property
    def total_sampling_checks(self) -> int:
        return sum(r.sampling_checks for r in self.records)

    def trace(self):
        """Everything except wall-clock readings."""
        return (tuple(r.trace() for r in self.records), self.final_diagnosis, self.compute_checks)

    def render(self) -> str:
        lines = []
        for r in self.records:
            lines.append(
                f"#{r.index}  sample={len(r.sample)}  mp: {r.mp}  -> {r.outcome}"
                f"  eliminated={r.eliminated}  sampling={r.sampling_ms:.2f} ms"
            )
        final = "[" + ", ".join(self.final_diagnosis or ()) + "]"
        lines.append(f"measurements: {self.n_measurements}")
        lines.append(f"sampling time: {self.total_sampling_ms:.2f} ms")
        lines.append(f"wall time: {self.wall_ms:.2f} ms")
        lines.append(f"final diagnosis: {final}")
        return "\n".join(lines)


def _side(dpi, target, m):
    sample = Sample("target", (dpi.components(target),), (1.0,))
    return Partitioner(dpi, sample).side(0, m)


def oracle_answer(dpi: Dpi, target: Sequence[str], m: Formula, rng: random.Random) -> str:
    """Classify ``m`` so that ``target`` is never ruled out."""
    if not is_diagnosis(dpi, target):
        raise ValueError(f"target {list(target)} is not a diagnosis of the DPI")
    side = _side(dpi, target, m)
    if side > 0:
        return "P"
    if side < 0:
        return "N"
    return rng.choice("PN")


def bayes_update(sample: Sample, mp: MeasurementPoint, outcome: str) -> Sample:
    """Drop diagnoses contradicted by ``outcome``; uncommitted ones count half."""
    if outcome not in ("P", "N"):
        raise ValueError(f"outcome must be 'P' or 'N', got {outcome!r}")
    predicted = set(mp.plus if outcome == "P" else mp.minus)
    zero = set(mp.zero)
    kept, weights = [], []
    for i, (d, p) in enumerate(zip(sample.diagnoses, sample.norm_probs)):
        if i in predicted:
            kept.append(d); weights.append(p)
        elif i in zero:
            kept.append(d); weights.append(0.5 * p)
    if not kept:
        raise SampleExhausted("the outcome contradicts every sampled diagnosis")
    total = sum(weights)
    return Sample(sample.sample_type, tuple(kept), tuple(w / total for w in weights))


def _ask_human(i, m, read, write):
    while True:
        write(PROMPT.format(i=i, formula=to_text(m)) + " ")
        answer = read().strip().lower()
        if answer in ("p", "n"):
            return answer.upper()


def run_session(dpi: Dpi, config: SessionConfig,
                read: Callable[[], str] | None = None,
                write: Callable[[str], None] | None = None) -> SessionLog:
    """Run one session until a single minimal diagnosis remains (sigma = 1)
    or a Bayes-updated sample probability exceeds ``sigma``."""
    read = read or sys.stdin.readline
    write = write or (lambda s: (sys.stderr.write(s), sys.stderr.flush()))
    target = dpi.components(config.target) if config.target is not None else None
    if target is not None and not is_diagnosis(dpi, target):
        raise ValueError(f"target {list(target)} is not a diagnosis of the DPI")
    coin = random.Random(derive_seed(config.seed, "oracle"))
    caution = Cautiousness()
    log = SessionLog()
    start_ns, start_checks = time.monotonic_ns(), check_count()
    current = dpi
    i = 0
    while True:
        remaining = enumerate_all(current, limit=2)
        if len(remaining) == 1:
            log.final_diagnosis = remaining[0]
            break
        t0, c0 = time.monotonic_ns(), check_count()
        sample = draw_sample(current, config.sample_type, config.k, derive_seed(config.seed, "sample", i))
        sampling_ms = (time.monotonic_ns() - t0) / 1e6
        sampling_checks = check_count() - c0
        if config.sigma < 1.0 and max(sample.norm_probs) > config.sigma and i == 0:
            log.final_diagnosis = sample.diagnoses[sample.norm_probs.index(max(sample.norm_probs))]
            break
        pool_seed = derive_seed(config.seed, "pool", i)
        pool = generate_mp_pool(current, sample, config.mp_limit, pool_seed)
        if not pool:
            pool = generate_mp_pool(current, sample, config.mp_limit, pool_seed, forms=("axioms",))
        if not pool:
            raise PoolExhausted(f"no informative measurement for a sample of {len(sample)}")
        mp = select_mp(pool, config.heuristic, caution.value)
        if target is not None:
            outcome = oracle_answer(current, target, mp.sentence, coin)
        else:
            outcome = _ask_human(i + 1, mp.sentence, read, write)
        current = apply_measurement(current, mp.sentence, outcome)
        eliminated = len(mp.minus) if outcome == "P" else len(mp.plus)
        log.records.append(IterationRecord(
            index=i + 1, sample=sample.diagnoses, sampling_ms=sampling_ms,
            sampling_checks=sampling_checks, mp=mp.text, outcome=outcome,
            eliminated=eliminated, pool_size=len(pool),
        ))
        caution.update(eliminated / len(sample), len(sample))
        if target is not None and not is_diagnosis(current, target):
            raise AssertionError("oracle answer ruled out the target diagnosis")
        i += 1
        if config.sigma < 1.0:
            try:
                posterior = bayes_update(sample, mp, outcome)
            except SampleExhausted:
                continue
            best = max(posterior.norm_probs)
            if best > config.sigma:
                log.final_diagnosis = posterior.diagnoses[posterior.norm_probs.index(best)]
                break
    log.wall_ms = (time.monotonic_ns() - start_ns) / 1e6
    log.compute_checks = check_count() - start_checks
    return log
