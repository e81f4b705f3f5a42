"""Experiment harnesses: estimate fidelity (EXP1) and session cost (EXP2)."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import random
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

from .dpi import Dpi
from .hstree import enumerate_all
from .measure import Partitioner, generate_mp_pool
from .sampling import SAMPLE_TYPES, derive_seed, draw_sample, sample_from
from .session import SessionConfig, run_session

log = logging.getLogger(__name__)

__all__ = [
    "UndefinedCorrelation", "pearson", "Exp1Row", "Exp2Row", "run_exp1",
    "run_exp2", "adjust_times", "rank_types", "Ranking", "write_csv",
    "read_csv", "EXP1_FIELDS", "EXP2_FIELDS", "RANK_FIELDS", "worker_count",
]


class UndefinedCorrelation(ValueError):
    pass


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation; raises UndefinedCorrelation on zero variance."""
    if len(xs) != len(ys):
        raise ValueError("inputs differ in length")
    n = len(xs)
    if n < 2:
        raise UndefinedCorrelation("need at least two points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx <= 1e-24 or syy <= 1e-24:
        raise UndefinedCorrelation("zero variance")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def worker_count() -> int:
    env = os.environ.get("DIAGLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map(fn, jobs, workers):
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


# -------------------------------------------------------------------- EXP1

EXP1_FIELDS = ("dpi", "k", "sample_type", "criterion", "pearson_r", "n_mps", "seed")


@dataclass(frozen=True)
class Exp1Row:
    dpi: str
    k: int
    sample_type: str
    criterion: str
    pearson_r: float | None
    n_mps: int
    seed: int


def _exp1_cell(job):
    name, dpi, all_d, k, sample_type, mp_limit, seed = job
    cell_seed = derive_seed(seed, name, k, sample_type)
    sample = draw_sample(dpi, sample_type, k, derive_seed(cell_seed, "sample"))
    pool = generate_mp_pool(dpi, sample, mp_limit, derive_seed(cell_seed, "pool"))
    actual = Partitioner(dpi, sample_from(dpi, all_d, "all"))
    est_er, act_er, est_p, act_p = [], [], [], []
    for mp in pool:
        ref = actual.point(mp.sentence)
        est_er += [mp.er_plus, mp.er_minus]
        act_er += [ref.er_plus, ref.er_minus]
        est_p.append(mp.p_plus)
        act_p.append(ref.p_plus)
    rows = []
    for criterion, xs, ys in (("E", est_er, act_er), ("P", est_p, act_p)):
        try:
            r = pearson(xs, ys)
        except UndefinedCorrelation:
            r = None
        rows.append(Exp1Row(name, k, sample_type, criterion, r, len(pool), seed))
    return rows


def run_exp1(dpis: Mapping[str, Dpi], ks: Iterable[int], types: Iterable[str] = SAMPLE_TYPES,
             mp_limit: int = 50, seed: int = 0, workers: int | None = None) -> list[Exp1Row]:
    """Correlate sample-based MP estimates with their all-diagnoses values.

    Criterion E pools both outcomes' elimination rates; criterion P uses the
    positive-outcome probability.  Cells with fewer than two MPs, or with
    constant values, get ``pearson_r = None``.
    """
    ks, types = list(ks), list(types)
    jobs = []
    for name, dpi in dpis.items():
        all_d = enumerate_all(dpi)
        for k in ks:
            for t in types:
                jobs.append((name, dpi, all_d, k, t, mp_limit, seed))
    rows = [row for cell in _map(_exp1_cell, jobs, workers) for row in cell]
    undefined = [r for r in rows if r.pearson_r is None]
    for r in undefined:
        log.debug("exp1 %s k=%s %s %s: correlation undefined (%d MPs)",
                  r.dpi, r.k, r.sample_type, r.criterion, r.n_mps)
    if undefined:
        log.warning("exp1: correlation undefined in %d of %d rows (constant values or < 2 MPs)",
                    len(undefined), len(rows))
    return rows


# -------------------------------------------------------------------- EXP2

EXP2_FIELDS = (
    "dpi", "k", "sample_type", "heuristic", "session_id", "n_measurements",
    "sampling_ms", "compute_ms", "meas_minutes", "total_minutes", "adjusted", "seed",
)


@dataclass(frozen=True)
class Exp2Row:
    dpi: str
    k: int
    sample_type: str
    heuristic: str
    session_id: int
    n_measurements: int | None
    sampling_ms: float | None
    compute_ms: float | None
    meas_minutes: float
    total_minutes: float | None
    adjusted: int
    seed: int


def session_targets(name: str, all_d: Sequence, n: int, seed: int) -> list:
    """``n`` targets per instance: a seeded shuffle of allD, cycled if short."""
    order = list(all_d)
    random.Random(derive_seed(seed, "targets", name)).shuffle(order)
    return [order[i % len(order)] for i in range(n)]


def _exp2_cell(job):
    name, dpi, targets, k, sample_type, heuristic, seed, clock = job
    out = []
    for sid, target in enumerate(targets):
        config = SessionConfig(
            sample_type=sample_type, k=k, heuristic=heuristic, target=target,
            seed=derive_seed(seed, name, k, heuristic, sid),
        )
        try:
            slog = run_session(dpi, config)
        except Exception as exc:  # recorded as a failed cell, the campaign goes on
            log.error("exp2 %s k=%s %s %s session %d failed: %s",
                      name, k, sample_type, heuristic, sid, exc)
            out.append((sid, None, None, None))
            continue
        if slog.final_diagnosis != tuple(target):
            log.error("exp2 %s session %d ended on %s, target %s",
                      name, sid, slog.final_diagnosis, target)
            out.append((sid, None, None, None))
            continue
        if clock == "checks":
            out.append((sid, slog.n_measurements, slog.total_sampling_checks, slog.compute_checks))
        else:
            out.append((sid, slog.n_measurements, slog.total_sampling_ms, slog.wall_ms))
    return name, k, sample_type, heuristic, out


def run_exp2(dpis: Mapping[str, Dpi], ks: Iterable[int], types: Iterable[str] = SAMPLE_TYPES,
             heuristics: Iterable[str] = ("ent", "spl", "rio", "mps"),
             sessions_per_cell: int = 10, meas_minutes: Iterable[float] = (1, 10),
             seed: int = 0, adjusted: bool = False, clock: str = "wall",
             workers: int | None = None) -> list[Exp2Row]:
    """Sequential sessions (stop criterion 1) for every factor combination.

    ``clock="wall"`` reports milliseconds from the monotonic clock;
    ``clock="checks"`` reports reasoner check counts in the same columns,
    which makes the table reproducible byte for byte.
    """
    if clock not in ("wall", "checks"):
        raise ValueError(f"unknown clock {clock!r}")
    ks, types, heuristics = list(ks), list(types), [h.lower() for h in heuristics]
    meas_minutes = list(meas_minutes)
    jobs = []
    for name, dpi in dpis.items():
        targets = session_targets(name, enumerate_all(dpi), sessions_per_cell, seed)
        for k in ks:
            for t in types:
                for h in heuristics:
                    jobs.append((name, dpi, targets, k, t, h, seed, clock))
    rows = []
    for name, k, t, h, sessions in _map(_exp2_cell, jobs, workers):
        for sid, n, sampling, compute in sessions:
            for mm in meas_minutes:
                rows.append(_exp2_row(name, k, t, h, sid, n, sampling, compute, mm, 0, seed))
    if adjusted:
        rows += adjust_times(rows)
    return sorted(rows, key=_exp2_key)


def _exp2_key(r):
    return (r.adjusted, r.dpi, r.k, SAMPLE_TYPES.index(r.sample_type) if r.sample_type in SAMPLE_TYPES else 99,
            r.sample_type, r.heuristic, r.session_id, r.meas_minutes)


def _exp2_row(name, k, t, h, sid, n, sampling, compute, mm, adjusted, seed):
    total = None if n is None else compute / 60000.0 + n * mm
    return Exp2Row(name, k, t, h, sid, n, sampling, compute, mm, total, adjusted, seed)


def adjust_times(rows: Sequence[Exp2Row]) -> list[Exp2Row]:
    """Copies of ``rows`` (adjusted=1) with rd/wf priced at bf sampling speed.

    An rd or wf session is charged ``n_measurements`` times the mean
    per-iteration bf sampling time of the same (dpi, k, heuristic) cell;
    its compute time changes by the same difference.
    """
    bf_time: dict = defaultdict(float)
    bf_iters: dict = defaultdict(int)
    for r in rows:
        if r.sample_type == "bf" and not r.adjusted and r.n_measurements:
            key = (r.dpi, r.k, r.heuristic, r.meas_minutes)
            bf_time[key] += r.sampling_ms
            bf_iters[key] += r.n_measurements
    out = []
    for r in rows:
        if r.adjusted:
            continue
        key = (r.dpi, r.k, r.heuristic, r.meas_minutes)
        if r.sample_type in ("rd", "wf") and r.n_measurements is not None and bf_iters.get(key):
            sampling = r.n_measurements * bf_time[key] / bf_iters[key]
            compute = r.compute_ms - r.sampling_ms + sampling
            out.append(_exp2_row(r.dpi, r.k, r.sample_type, r.heuristic, r.session_id,
                                 r.n_measurements, sampling, compute, r.meas_minutes, 1, r.seed))
        else:
            out.append(Exp2Row(**{**asdict(r), "adjusted": 1}))
    return out


# ------------------------------------------------------------------ ranking

RANK_FIELDS = ("scenario", "criterion", "rank", "sample_type", "tie_group")

_ALIASES = {"h": "heuristic", "t": "sample_type", "type": "sample_type"}


@dataclass(frozen=True)
class Ranking:
    scenario: str
    criterion: str
    groups: tuple[tuple[str, ...], ...]

    def render(self) -> str:
        parts = []
        for g in self.groups:
            parts.append(g[0] if len(g) == 1 else "(" + " ".join(g) + ")")
        return " ".join(parts)

    def rows(self) -> list[dict]:
        out = []
        for rank, g in enumerate(self.groups, start=1):
            label = g[0] if len(g) == 1 else "(" + " ".join(g) + ")"
            for t in g:
                out.append({"scenario": self.scenario, "criterion": self.criterion,
                            "rank": rank, "sample_type": t, "tie_group": label})
        return out


def _parse_filters(filters):
    parsed = []
    for f in filters or ():
        for part in str(f).split(","):
            if not part.strip():
                continue
            key, sep, value = part.partition("=")
            if not sep:
                raise ValueError(f"filter {part!r} is not key=value")
            key = _ALIASES.get(key.strip(), key.strip())
            parsed.append((key, value.strip()))
    return parsed


def _as_float(v):
    if v is None or v == "":
        return None
    return float(v)


def rank_types(table: Iterable, criterion: str, filters: Iterable[str] = ()) -> Ranking:
    """Order sample types by pairwise wins over factor combinations.

    A type beats another if it is better in more combinations than the
    reverse (higher correlation for E/P, lower session mean for M/T).  Types
    are ordered by the number of types they beat; equal counts form a tie
    group.  Rows may be dataclass rows or CSV dicts.
    """
    criterion = criterion.upper()
    if criterion not in ("E", "P", "M", "T"):
        raise ValueError(f"unknown criterion {criterion!r}")
    rows = [r if isinstance(r, dict) else asdict(r) for r in table]
    filters = _parse_filters(filters)
    scenario = ",".join(f"{'h' if k == 'heuristic' else k}={v}" for k, v in filters) or "all"

    def keep(r):
        return all(str(r.get(k, "")).lower() == v.lower() for k, v in filters)

    rows = [r for r in rows if keep(r)]
    values: dict = defaultdict(dict)
    if criterion in ("E", "P"):
        for r in rows:
            if r.get("criterion") == criterion:
                values[(r["dpi"], str(r["k"]))][r["sample_type"]] = _as_float(r["pearson_r"])
        better = lambda a, b: a > b  # noqa: E731
    else:
        if not any(k == "adjusted" for k, _ in filters):
            rows = [r for r in rows if str(r.get("adjusted", "0")) in ("0", "False")]
        column = "n_measurements" if criterion == "M" else "sampling_ms"
        acc: dict = defaultdict(dict)
        for r in rows:
            key = (r["dpi"], str(r["k"]), r["heuristic"])
            # each session appears once per measurement time; count it once
            acc[(key, r["sample_type"])].setdefault(str(r["session_id"]), _as_float(r[column]))
        for (key, t), by_session in acc.items():
            vs = [v for v in by_session.values() if v is not None]
            values[key][t] = sum(vs) / len(vs) if vs else None
        better = lambda a, b: a < b  # noqa: E731
    if not values:
        raise ValueError(f"no rows for criterion {criterion} under {scenario}")
    present = {t for combo in values.values() for t in combo}
    types = [t for t in SAMPLE_TYPES if t in present] + sorted(present - set(SAMPLE_TYPES))
    wins = {(a, b): 0 for a in types for b in types}
    for combo in values.values():
        for a in types:
            for b in types:
                va, vb = combo.get(a), combo.get(b)
                if a != b and va is not None and vb is not None and better(va, vb):
                    wins[a, b] += 1
    score = {a: sum(wins[a, b] > wins[b, a] for b in types if b != a) for a in types}
    groups = []
    for s in sorted(set(score.values()), reverse=True):
        groups.append(tuple(t for t in types if score[t] == s))
    return Ranking(scenario, criterion, tuple(groups))


# ---------------------------------------------------------------------- CSV

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return str(int(v)) if v.is_integer() else repr(v)
    return str(v)


def write_csv(rows: Iterable, fieldnames: Sequence[str], path=None) -> str:
    """Write rows (dataclasses or dicts) as CSV; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fieldnames)
    for r in rows:
        d = r if isinstance(r, dict) else asdict(r)
        w.writerow([_fmt(d[f]) for f in fieldnames])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
