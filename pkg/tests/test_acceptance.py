"""Acceptance criteria 1-6, each printing one PASS/FAIL line with its runtime."""

import random
import time
from contextlib import contextmanager

import pytest

from diaglab.bench import (
    EXP2_FIELDS, adjust_times, rank_types, read_csv, run_exp1, run_exp2, write_csv,
)
from diaglab.conflict import inv_qx_diagnosis
from diaglab.dpi import diagnosis_probability, normalize
from diaglab.formula import parse_formula
from diaglab.hstree import enumerate_all, enumerate_best_first, rank_key
from diaglab.measure import (
    candidate_universe, is_informative, partition_mp, score_mp, select_mp,
)
from diaglab.sampling import SAMPLE_TYPES, draw_sample, sample_from
from conftest import D1, D2, D3, D4
from oracles import (
    antilex_max, bf_conflicts, bf_diagnoses, bf_hitting_sets, bf_probability, bf_side,
    random_dpi,
)


@contextmanager
def criterion(number, label, capsys, budget=None):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        late = budget is not None and elapsed > budget
        verdict = "PASS" if ok and not late else "FAIL"
        limit = f", limit {budget:g} s" if budget is not None else ""
        with capsys.disabled():
            print(f"\n{verdict} criterion {number}: {label} ({elapsed:.2f} s{limit})")
    if late:
        raise AssertionError(f"criterion {number} took {elapsed:.1f} s, limit {budget} s")


M1 = parse_formula("A -> C")
M2 = parse_formula("B")
M3 = parse_formula("A & !B -> C")
TOL = 5e-3


def test_criterion_1_golden_examples(t1, capsys):
    with criterion(1, "worked examples on the five-axiom instance", capsys, budget=1.0):
        diags = enumerate_all(t1)
        assert set(diags) == {D1, D2, D3, D4}
        probs = [diagnosis_probability(t1, d) for d in (D1, D2, D3, D4)]
        assert probs == pytest.approx([0.0077, 0.0036, 0.0036, 0.0058], abs=5e-4)
        assert normalize(probs) == pytest.approx([0.37, 0.175, 0.175, 0.28], abs=TOL)

        full = sample_from(t1, [D1, D2, D3, D4])
        m1, m2, m3 = (partition_mp(t1, full, m) for m in (M1, M2, M3))
        assert (m1.plus, m1.minus, m1.zero) == ((0, 2), (1, 3), ())
        assert (m1.p_plus, m1.p_minus, m1.er_plus, m1.er_minus) == pytest.approx(
            (0.545, 0.455, 0.5, 0.5), abs=TOL)
        three = partition_mp(t1, sample_from(t1, [D1, D2, D3]), M1)
        assert (three.p_plus, three.p_minus, three.er_plus, three.er_minus) == pytest.approx(
            (0.758, 0.242, 1 / 3, 2 / 3), abs=TOL)
        assert m2.plus == () and not is_informative(m2)
        assert (m3.plus, m3.minus) == ((0, 1, 2), (3,))
        assert (m3.p_plus, m3.p_minus, m3.er_plus, m3.er_minus) == pytest.approx(
            (0.72, 0.28, 0.25, 0.75), abs=TOL)
        assert score_mp(m1, "ent") == pytest.approx(0.0058, abs=TOL)
        assert score_mp(m3, "ent") == pytest.approx(0.1446, abs=TOL)

        assert select_mp([m3, m1], "spl") is m1
        assert select_mp([m3, m1], "ent") is m1
        s234 = sample_from(t1, [D2, D3, D4])
        pool = [partition_mp(t1, s234, m) for m in (M1, M3)]
        assert select_mp(pool, "ent").sentence == M3
        s24 = sample_from(t1, [D2, D4])
        assert not is_informative(partition_mp(t1, s24, M1))
        assert score_mp(partition_mp(t1, s24, M3), "spl") == 0


def test_criterion_2_oracle_equivalence(capsys):
    with criterion(2, "brute-force equivalence on 120 random instances", capsys, budget=120.0):
        for seed in range(120):
            dpi = random_dpi(seed, max_axioms=8, max_atoms=5)
            assert len(dpi.axioms) <= 8 and len(dpi.signature()) <= 5
            truth = bf_diagnoses(dpi)
            got = {frozenset(d) for d in enumerate_all(dpi)}
            assert got == truth
            assert bf_hitting_sets(bf_conflicts(dpi), dpi.ids) == truth
            ranked = sorted(truth, key=lambda d: (
                -float(f"{bf_probability(dpi, d):.12e}"), sorted(dpi.position(i) for i in d)))
            for k in (1, 3, len(ranked)):
                assert [frozenset(d) for d in enumerate_best_first(dpi, k)] == ranked[:k]
            order = list(dpi.ids)
            random.Random(seed).shuffle(order)
            assert frozenset(inv_qx_diagnosis(dpi, order)) == antilex_max(truth, order)


def test_criterion_3_estimate_invariants(suite, capsys):
    with criterion(3, "estimate invariants over 1000 (sample, MP) pairs", capsys):
        rng = random.Random(3)
        pairs = 0
        while pairs < 1000:
            dpi = random_dpi(rng.randrange(10 ** 6), max_axioms=7, max_atoms=4)
            every = enumerate_all(dpi)
            chosen = rng.sample(every, rng.randint(1, len(every)))
            sample, full = sample_from(dpi, chosen), sample_from(dpi, every)
            universe = candidate_universe(dpi)
            for m in rng.sample(universe, min(5, len(universe))):
                mp = partition_mp(dpi, sample, m)
                assert abs(mp.p_plus + mp.p_minus - 1) <= 1e-9
                assert mp.er_plus + mp.er_minus + len(mp.zero) / len(sample) == 1
                if is_informative(mp):
                    assert all(0 < v < 1 for v in (mp.p_plus, mp.p_minus, mp.er_plus, mp.er_minus))
                actual = partition_mp(dpi, full, m)
                sides = [bf_side(dpi, d, m) for d in every]
                weights = [bf_probability(dpi, d) for d in every]
                assert actual.er_plus == sides.count(-1) / len(every)
                assert actual.er_minus == sides.count(1) / len(every)
                p_plus = sum(w * (1 if s > 0 else 0.5 if s == 0 else 0) for w, s in zip(weights, sides))
                assert actual.p_plus == pytest.approx(p_plus / sum(weights), abs=1e-12)
                pairs += 1
        rows = run_exp1(suite, [len(enumerate_all(d)) for d in suite.values()], ["bf"], workers=1)
        exact = [r for r in rows if r.k == len(enumerate_all(suite[r.dpi]))]
        assert exact and all(r.pearson_r in (1.0, None) for r in exact)
        assert sum(r.pearson_r == 1.0 for r in exact) >= len(suite)


def test_criterion_4_sample_type_collapse(suite, capsys):
    with criterion(4, "k = |allD| collapse and bf/wf top/bottom on the suite", capsys):
        for dpi in suite.values():
            ranked = sorted(enumerate_all(dpi), key=lambda d: rank_key(dpi, d))
            n = len(ranked)
            for t in SAMPLE_TYPES:
                assert set(draw_sample(dpi, t, n, seed=17).diagnoses) == set(ranked)
            for k in range(1, n):
                assert list(draw_sample(dpi, "bf", k).diagnoses) == ranked[:k]
                assert set(draw_sample(dpi, "wf", k).diagnoses) == set(ranked[n - k:])


def _campaign(suite):
    return run_exp2(suite, [2, 6, 10], SAMPLE_TYPES, ["ent", "spl", "rio", "mps"],
                    sessions_per_cell=10, meas_minutes=[1, 10], seed=2024, clock="checks")


@pytest.mark.slow
def test_criterion_5_session_soundness(suite, tmp_path, capsys):
    timing = {}
    with criterion(5, "5760 sessions reach their targets; two runs byte-identical", capsys):
        start = time.perf_counter()
        first = _campaign(suite)
        timing["campaign"] = time.perf_counter() - start
        # run_session checks that every answer keeps the target a diagnosis,
        # and run_exp2 blanks any session that fails or misses its target
        sessions = {(r.dpi, r.k, r.sample_type, r.heuristic, r.session_id) for r in first}
        assert len(sessions) == 8 * 6 * 4 * 3 * 10
        assert all(r.n_measurements is not None and r.n_measurements >= 1 for r in first)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(first, EXP2_FIELDS, a)
        write_csv(_campaign(suite), EXP2_FIELDS, b)
        assert a.read_bytes() == b.read_bytes()
        assert timing["campaign"] < 600
    with capsys.disabled():
        print(f"    one full campaign took {timing.get('campaign', float('nan')):.1f} s")


def _e_rows(values):
    return [{"dpi": f"x{i}", "k": "2", "sample_type": t, "criterion": "E",
             "pearson_r": str(v), "n_mps": "5", "seed": "0"}
            for i, combo in enumerate(values) for t, v in combo.items()]


def test_criterion_6_harness_fidelity(t1, tmp_path, capsys):
    with criterion(6, "hand win-matrix ranking and adjusted timing", capsys):
        # bf wins every pairing; ard and awf split 1-1 with a draw; rd beats both
        table = _e_rows([
            {"bf": 0.9, "rd": 0.7, "ard": 0.5, "awf": 0.1},
            {"bf": 0.8, "rd": 0.6, "ard": 0.2, "awf": 0.4},
            {"bf": 0.5, "rd": 0.4, "ard": 0.3, "awf": 0.3},
        ])
        assert rank_types(table, "E").render() == "bf rd (ard awf)"
        rows = run_exp2({"t1": t1}, [2], heuristics=["ent"], sessions_per_cell=3,
                        meas_minutes=[1], adjusted=True, workers=1)
        path = tmp_path / "exp2.csv"
        write_csv(rows, EXP2_FIELDS, path)
        back = read_csv(path)
        plain = [r for r in back if r["adjusted"] == "0"]
        adj = {(r["sample_type"], r["session_id"]): r for r in back if r["adjusted"] == "1"}
        bf = [r for r in plain if r["sample_type"] == "bf"]
        per_iter = sum(float(r["sampling_ms"]) for r in bf) / sum(int(r["n_measurements"]) for r in bf)
        for r in plain:
            a = adj[r["sample_type"], r["session_id"]]
            if r["sample_type"] in ("rd", "wf"):
                assert float(a["sampling_ms"]) == pytest.approx(int(r["n_measurements"]) * per_iter)
            else:
                assert a["sampling_ms"] == r["sampling_ms"]
        assert len(adjust_times([x for x in rows if not x.adjusted])) == len(plain)
