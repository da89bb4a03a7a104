import pytest

from glemu import harness, vm
from glemu.harness import (CoverageError, compare_strong, compare_weak,
                           difftest, run_pair)


def report(mode="bytecode", outcome=("value", 1), prints=(), crashes=(),
           meters=((0, 5, 0),), host_instr=5, host_alloc=0):
    return vm.RunReport(mode, outcome, list(prints), list(crashes),
                        list(meters), host_instr, host_alloc)


def test_compare_weak_reflexive():
    r = report()
    ok, diffs = compare_weak(r, r)
    assert ok and not diffs


def test_compare_weak_ignores_host_meters_and_mode():
    a = report(mode="bytecode", host_instr=5, host_alloc=0)
    b = report(mode="emulated", host_instr=5000, host_alloc=999)
    ok, _ = compare_weak(a, b)
    assert ok


def test_compare_weak_reports_first_divergence_only():
    a = report(prints=[(0, "x"), (0, "y")])
    b = report(prints=[(0, "x2"), (0, "y2")])
    ok, diffs = compare_weak(a, b)
    assert not ok
    assert len(diffs) == 1
    field, da, ea = diffs[0]
    assert field == "PRINT" and '"x"' in da and '"x2"' in ea


def test_compare_strong_definitions():
    a = report(host_instr=10, host_alloc=3)
    same = compare_strong(a, report(host_instr=10, host_alloc=3))
    assert same["verdict"] == "INDISTINGUISHABLE"
    more = compare_strong(a, report(host_instr=80, host_alloc=3))
    assert more["verdict"] == "DISTINGUISHABLE"
    assert more["overhead_reductions"] == 8.0


def test_run_pair_trivial():
    r = run_pair("fn main() = 42", "trivial")
    assert r.weak_ok
    assert r.strong["verdict"] == "DISTINGUISHABLE"
    assert r.strong["overhead_reductions"] > 1


def test_sabotage_produces_first_divergence_diff():
    r = run_pair("fn main() = (vtime(), 0)", "probe", sabotage=("clock",))
    assert not r.weak_ok
    assert r.diffs[0][0] == "OUTCOME"


def test_empty_corpus_fails_coverage(tmp_path):
    code, text = difftest(tmp_path)
    assert code == 7
    assert text.startswith("COVERAGE FAIL")


def test_missing_checklist_row_fails_coverage(tmp_path, corpus_dir):
    import json, shutil
    shutil.copy(corpus_dir / "arith.gl", tmp_path / "arith.gl")
    mapping = harness.load_checklist_map(corpus_dir)
    mapping["language"] = mapping["language"][1:]
    (tmp_path / "checklist_map.json").write_text(json.dumps(mapping))
    code, text = difftest(tmp_path, audit=False)
    assert code == 7


def test_unknown_test_id_fails_coverage(tmp_path, corpus_dir):
    import json, shutil
    shutil.copy(corpus_dir / "arith.gl", tmp_path / "arith.gl")
    mapping = harness.load_checklist_map(corpus_dir)
    mapping["language"][0]["tests"] = ["weak:phantom_program"]
    (tmp_path / "checklist_map.json").write_text(json.dumps(mapping))
    code, text = difftest(tmp_path, audit=False)
    assert code == 7
    assert "phantom_program" in text


def test_partial_corpus_fails_opcode_coverage(tmp_path, corpus_dir):
    import shutil
    shutil.copy(corpus_dir / "arith.gl", tmp_path / "arith.gl")
    shutil.copy(corpus_dir / "checklist_map.json",
                tmp_path / "checklist_map.json")
    code, text = difftest(tmp_path, audit=True)
    assert code == 7
    assert "opcodes never executed" in text
