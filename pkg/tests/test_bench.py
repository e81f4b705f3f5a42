import math
import random
import statistics

import pytest
from hypothesis import given, settings, strategies as st

from diaglab.bench import (
    EXP1_FIELDS, EXP2_FIELDS, RANK_FIELDS, Exp2Row, UndefinedCorrelation,
    adjust_times, pearson, rank_types, read_csv, run_exp1, run_exp2,
    session_targets, write_csv,
)
from diaglab.formula import parse_formula
from diaglab.hstree import enumerate_all
from diaglab.measure import partition_mp
from diaglab.sampling import SAMPLE_TYPES, sample_from
from conftest import D1, D2, D3, D4


def test_pearson_examples():
    xs = [1.0, 2.0, 5.0, 7.0]
    assert pearson(xs, xs) == pytest.approx(1.0)
    assert pearson(xs, [-x for x in xs]) == pytest.approx(-1.0)
    # closed form: sxy = 5, sxx = 2, syy = 114/9
    assert pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(5 / math.sqrt(2 * 114 / 9), abs=1e-12)
    assert pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(0.9934, abs=1e-4)
    with pytest.raises(UndefinedCorrelation):
        pearson([1, 2, 3], [4, 4, 4])
    with pytest.raises(UndefinedCorrelation):
        pearson([1], [1])
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=2, max_size=30))
def test_pearson_is_bounded_and_symmetric(pairs):
    xs, ys = [p[0] for p in pairs], [p[1] for p in pairs]
    try:
        r = pearson(xs, ys)
    except UndefinedCorrelation:
        return
    assert -1.0 <= r <= 1.0
    assert pearson(ys, xs) == pytest.approx(r, abs=1e-9)
    try:
        assert r == pytest.approx(statistics.correlation(xs, ys), abs=1e-6)
    except statistics.StatisticsError:
        pass


def test_exp1_full_sample_is_exact(t1, suite):
    dpis = {"t1": t1, "s2": suite["s2"]}
    for name, dpi in dpis.items():
        n = len(enumerate_all(dpi))
        rows = run_exp1({name: dpi}, [n], workers=1)
        assert len(rows) == len(SAMPLE_TYPES) * 2
        for r in rows:
            assert r.pearson_r == 1.0 or r.pearson_r is None
        assert any(r.pearson_r == 1.0 for r in rows)


def test_exp1_shape(suite):
    names = ["s1", "s2", "s3", "s4", "s5"]
    rows = run_exp1({n: suite[n] for n in names}, [2, 6, 10], workers=1)
    cells = {(r.dpi, r.k, r.sample_type) for r in rows}
    assert len(cells) == 90 and len(rows) == 180
    assert all(r.pearson_r is None or -1 <= r.pearson_r <= 1 for r in rows)
    assert all(r.pearson_r is None for r in rows if r.k == 2 and r.criterion == "E")


def test_exp1_m1_pair(t1):
    m = parse_formula("A -> C")
    est = partition_mp(t1, sample_from(t1, [D1, D2, D3]), m)
    act = partition_mp(t1, sample_from(t1, enumerate_all(t1)), m)
    assert (est.p_plus, act.p_plus) == pytest.approx((0.758, 0.545), abs=5e-3)


def test_exp1_is_reproducible(suite):
    a = run_exp1({"s3": suite["s3"]}, [2, 6], seed=4, workers=1)
    b = run_exp1({"s3": suite["s3"]}, [2, 6], seed=4, workers=1)
    assert write_csv(a, EXP1_FIELDS) == write_csv(b, EXP1_FIELDS)


def test_exp2_small(t1, suite):
    dpis = {"t1": t1, "s1": suite["s1"]}
    rows = run_exp2(dpis, [2, 4], heuristics=["ent", "spl"], sessions_per_cell=3,
                    meas_minutes=[1, 10], clock="checks", workers=1)
    assert len(rows) == 2 * 2 * 6 * 2 * 3 * 2
    assert all(r.n_measurements is not None and r.n_measurements >= 1 for r in rows)
    for r in rows:
        assert r.total_minutes == pytest.approx(r.compute_ms / 60000 + r.n_measurements * r.meas_minutes)
    again = run_exp2(dpis, [2, 4], heuristics=["ent", "spl"], sessions_per_cell=3,
                     meas_minutes=[1, 10], clock="checks", workers=1)
    assert write_csv(rows, EXP2_FIELDS) == write_csv(again, EXP2_FIELDS)


def test_exp2_parallel_matches_serial(suite):
    args = ({"s2": suite["s2"]}, [2, 6])
    kw = dict(heuristics=["ent"], sessions_per_cell=2, clock="checks")
    assert run_exp2(*args, workers=1, **kw) == run_exp2(*args, workers=2, **kw)


def test_exp2_bf_and_rd_agree_at_full_k(suite):
    dpi = suite["s2"]
    n = len(enumerate_all(dpi))
    rows = run_exp2({"s2": dpi}, [n], types=["bf", "rd"], heuristics=["ent", "spl", "mps", "rio"],
                    sessions_per_cell=5, meas_minutes=[1], clock="checks", workers=1)
    by = {(r.sample_type, r.heuristic, r.session_id): r.n_measurements for r in rows}
    for (t, h, sid), m in by.items():
        if t == "bf":
            assert by[("rd", h, sid)] == m


def test_session_targets_cycle():
    t = session_targets("x", ["a", "b"], 5, 0)
    assert sorted(t[:2]) == ["a", "b"] and t[2:4] == t[:2] and len(t) == 5
    assert session_targets("x", ["a", "b"], 5, 0) == t


def test_exp2_rejects_unknown_clock(t1):
    with pytest.raises(ValueError):
        run_exp2({"t1": t1}, [2], clock="sundial")


def _row(t, sid, n, sampling, compute, dpi="d", h="ent", mm=1):
    return Exp2Row(dpi, 2, t, h, sid, n, sampling, compute, mm, compute / 60000 + n * mm, 0, 0)


def test_adjust_times():
    rows = [
        _row("bf", 0, 2, 10.0, 50.0), _row("bf", 1, 3, 20.0, 60.0),
        _row("rd", 0, 4, 400.0, 500.0), _row("wf", 0, 1, 90.0, 100.0),
        _row("abf", 0, 2, 8.0, 30.0),
    ]
    adj = {(r.sample_type, r.session_id): r for r in adjust_times(rows)}
    assert all(r.adjusted == 1 for r in adj.values())
    # bf spends 30 ms over 5 iterations, so 6 ms per iteration
    assert adj["rd", 0].sampling_ms == pytest.approx(24.0)
    assert adj["rd", 0].compute_ms == pytest.approx(500 - 400 + 24)
    assert adj["wf", 0].sampling_ms == pytest.approx(6.0)
    assert adj["wf", 0].total_minutes == pytest.approx(adj["wf", 0].compute_ms / 60000 + 1)
    assert adj["abf", 0].sampling_ms == 8.0 and adj["bf", 1].sampling_ms == 20.0


def test_adjusted_rows_in_exp2(t1):
    rows = run_exp2({"t1": t1}, [2], heuristics=["ent"], sessions_per_cell=2,
                    meas_minutes=[1], adjusted=True, workers=1)
    plain = [r for r in rows if not r.adjusted]
    adj = [r for r in rows if r.adjusted]
    assert len(plain) == len(adj) == 12
    bf = [r for r in plain if r.sample_type == "bf"]
    per_iter = sum(r.sampling_ms for r in bf) / sum(r.n_measurements for r in bf)
    for r in adj:
        if r.sample_type in ("rd", "wf"):
            assert r.sampling_ms == pytest.approx(r.n_measurements * per_iter)


# ------------------------------------------------------------------ ranking

def _exp1_table(values):
    rows = []
    for combo, by_type in enumerate(values):
        for t, v in by_type.items():
            rows.append({"dpi": f"x{combo}", "k": "2", "sample_type": t, "criterion": "E",
                         "pearson_r": "" if v is None else str(v), "n_mps": "5", "seed": "0"})
    return rows


STRICT = [
    {"bf": 0.9, "rd": 0.5, "wf": 0.1},
    {"bf": 0.8, "rd": 0.6, "wf": 0.7},
    {"bf": 0.2, "rd": 0.4, "wf": 0.3},
]
TIED = [
    {"bf": 0.9, "rd": 0.5, "wf": 0.1},
    {"bf": 0.8, "rd": 0.6, "wf": 0.7},
    {"bf": 0.5, "rd": 0.4, "wf": 0.4},
]


def test_rank_hand_matrix():
    # bf beats rd 2-1 and wf 2-1; rd beats wf 2-1
    ranking = rank_types(_exp1_table(STRICT), "E")
    assert ranking.groups == (("bf",), ("rd",), ("wf",))
    assert ranking.render() == "bf rd wf"


def test_rank_tie_group():
    # rd and wf split 1-1 with one draw
    ranking = rank_types(_exp1_table(TIED), "E")
    assert ranking.render() == "bf (rd wf)"
    rows = ranking.rows()
    assert [r["rank"] for r in rows] == [1, 2, 2]
    assert rows[1]["tie_group"] == "(rd wf)"


def test_rank_missing_values_do_not_count():
    table = _exp1_table([{"bf": 0.9, "rd": None}, {"bf": 0.1, "rd": 0.5}, {"bf": 0.3, "rd": 0.2}])
    assert rank_types(table, "E").render() == "(bf rd)"


def test_rank_m_lower_is_better_and_dedupes_sessions():
    rows = []
    for t, ns in (("bf", [3, 3]), ("rd", [5, 3]), ("wf", [4, 4])):
        for sid, n in enumerate(ns):
            for mm in (1, 10):
                rows.append(_row(t, sid, n, 1.0, 2.0, mm=mm))
    assert rank_types(rows, "M").render() == "bf (rd wf)"
    assert rank_types(rows, "M", ["h=ent"]).scenario == "h=ent"
    with pytest.raises(ValueError):
        rank_types(rows, "M", ["h=spl"])
    with pytest.raises(ValueError):
        rank_types(rows, "Q")
    with pytest.raises(ValueError):
        rank_types(rows, "M", ["nonsense"])


@settings(max_examples=40, deadline=None)
@given(st.randoms())
def test_rank_ignores_row_order(rnd):
    rng = random.Random(rnd.random())
    rows = []
    for combo in range(4):
        for t in SAMPLE_TYPES:
            for sid in range(3):
                n = rng.randint(1, 6)
                for mm in (1, 10):
                    rows.append(_row(t, sid, n, 1.0, 2.0, dpi=f"d{combo}", mm=mm))
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert rank_types(rows, "M") == rank_types(shuffled, "M")


def test_csv_round_trip(tmp_path):
    rows = [_row("bf", 0, 2, 1.5, 3.25), _row("rd", 1, 4, 2.0, 7.0)]
    path = tmp_path / "x.csv"
    text = write_csv(rows, EXP2_FIELDS, path)
    assert text.splitlines()[0] == ",".join(EXP2_FIELDS)
    back = read_csv(path)
    assert [r["sampling_ms"] for r in back] == ["1.5", "2"]
    assert rank_types(back, "M") == rank_types(rows, "M")
    ranking = rank_types(rows, "M")
    text = write_csv(ranking.rows(), RANK_FIELDS)
    assert text.splitlines()[0] == "scenario,criterion,rank,sample_type,tie_group"
