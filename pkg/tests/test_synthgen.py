import csv

import pytest
from hypothesis import given, settings, strategies as st

from diaglab.dpi import dump_dpi, load_dpi, needs_repair
from diaglab.hstree import enumerate_all
from diaglab.synthgen import DEFAULT_SUITE, GenerationFailed, generate_dpi, write_suite
from conftest import SUITE_DIR


def test_table1_shape_hits_exactly_four():
    dpi = generate_dpi(5, 3, (4, 4), seed=11)
    assert len(dpi.axioms) == 5 and len(enumerate_all(dpi)) == 4
    assert needs_repair(dpi)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_generated_dpis_need_repair_and_round_trip(seed):
    dpi = generate_dpi(8, 6, (2, 30), seed=seed)
    assert needs_repair(dpi)
    assert 2 <= len(enumerate_all(dpi)) <= 30
    text = dump_dpi(dpi)
    assert load_dpi(text) == dpi and dump_dpi(load_dpi(text)) == text
    assert dump_dpi(generate_dpi(8, 6, (2, 30), seed=seed)) == text


def test_generation_failure_reports_nearest():
    with pytest.raises(GenerationFailed) as info:
        generate_dpi(3, 3, (50, 60), seed=0, max_attempts=20)
    assert info.value.nearest is not None and info.value.n_diags < 50
    with pytest.raises(ValueError):
        generate_dpi(1, 3)


def test_write_suite_reproduces_shipped_files(tmp_path):
    entries = DEFAULT_SUITE[:3]
    manifest = write_suite(tmp_path, entries)
    for e in entries:
        assert (tmp_path / f"{e.name}.dpi").read_bytes() == (SUITE_DIR / f"{e.name}.dpi").read_bytes()
    with open(tmp_path / "manifest.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["name", "n_axioms", "n_atoms", "n_diags", "min_diag", "max_diag"]
    assert [int(r["n_diags"]) for r in rows] == [m["n_diags"] for m in manifest]
    for r, e in zip(rows, entries):
        lo, hi = e.diag_range
        assert lo <= int(r["n_diags"]) <= hi


def test_shipped_suite_spans_the_range(suite):
    counts = sorted(len(enumerate_all(d)) for d in suite.values())
    assert counts[0] == 4 and 80 <= counts[-1] <= 100
    assert all(needs_repair(d) for d in suite.values())
