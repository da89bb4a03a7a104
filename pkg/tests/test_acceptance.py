"""Acceptance gate: one test per release criterion.

Criteria 1-9 are hard requirements.  Criterion 10 (the emulator running
under itself) is a stretch exhibit: a failure there is reported via xfail
rather than breaking the build.
"""

import time
from pathlib import Path

import pytest

from glemu import selfemu, vm
from glemu.checker import check
from glemu.compiler import compile_source
from glemu.harness import (difftest, discover_corpus, discover_unchecked,
                           program_fuel, run_pair)
from glemu.parser import parse_source
from glemu.report import weak_lines

REPO = Path(__file__).resolve().parent.parent
CORPUS = REPO / "corpus"


@pytest.fixture(scope="module")
def timed_difftest():
    start = time.monotonic()
    code, text = difftest(CORPUS)
    return code, text, time.monotonic() - start


def pair_lines(text):
    return [l for l in text.splitlines() if l.startswith("PAIR ")]


def test_criterion_1_weak_suite_passes_under_a_minute(timed_difftest):
    code, text, elapsed = timed_difftest
    assert code == 0, text
    pairs = pair_lines(text)
    assert len(pairs) >= 25
    assert all(" weak=PASS " in l for l in pairs)
    assert elapsed < 60.0, "difftest took %.1fs" % elapsed


def test_criterion_2_emulation_overhead_strictly_positive(timed_difftest):
    _, text, _ = timed_difftest
    for line in pair_lines(text):
        assert " strong=DISTINGUISHABLE " in line, line
        factor = float(line.rsplit("overhead=", 1)[1])
        assert factor > 1.0, line


def test_criterion_3_engine_modes_agree():
    for program_id, path in discover_corpus(CORPUS):
        source = path.read_text()
        fuel = program_fuel(source)
        bc = vm.run(compile_source(source), mode="bytecode", fuel=fuel)
        ast = vm.run(parse_source(source), mode="ast", fuel=fuel)
        assert weak_lines(bc) == weak_lines(ast), program_id
        assert bc.meters == ast.meters, program_id


def test_criterion_4_checker_rejects_programs_that_still_run():
    divergent = 0
    for program_id, path in discover_unchecked(CORPUS):
        program = parse_source(path.read_text())
        assert check(program), "%s should be rejected" % program_id
        report = vm.run(program, mode="ast-unchecked")
        if report.outcome[0] == "value":
            divergent += 1
    assert divergent >= 2


@pytest.mark.parametrize("hook", selfemu.HOOKS)
def test_criterion_5_every_hook_is_load_bearing(hook):
    code, text = difftest(CORPUS, sabotage=(hook,))
    assert code == 6, text
    assert any(" weak=FAIL " in l for l in pair_lines(text)), text


def test_criterion_6_crash_reports_match_with_guest_only_traces():
    emulator_names = {d.name for d in
                      parse_source(selfemu.asset_source()).defs}
    crashing = ["match_error", "uncaught", "div_zero", "send_to_dead",
                "deadlock"]
    for program_id in crashing:
        source = (CORPUS / (program_id + ".gl")).read_text()
        pair = run_pair(source, program_id)
        assert pair.weak_ok, (program_id, pair.diffs)
        for _pid, _value, trace in pair.emulated_run.report.crashes:
            names = {name for name, _line in trace}
            assert not names & emulator_names, (program_id, names)


@pytest.mark.slow
def test_criterion_7_deep_recursion_with_bounded_host_stack():
    source = ("fn d(n) = if n == 0 then 0 else 1 + d(n - 1)\n"
              "fn main() = d(10000)")
    module = compile_source(source)
    direct = vm.run_module(module)
    run = selfemu.run_emulated(module)
    assert run.report.outcome == ("value", 10000)
    assert weak_lines(direct) == weak_lines(run.report)
    assert run.max_host_depth <= 64


def test_criterion_8_difftest_is_deterministic(timed_difftest):
    _, first, _ = timed_difftest
    _, second = difftest(CORPUS)
    assert first == second


def test_criterion_9_receive_matches_brute_force_oracle():
    from . import test_vm
    start = time.monotonic()
    test_vm.test_receive_matches_brute_force_oracle()
    assert time.monotonic() - start < 10.0


def test_criterion_10_stretch_emulator_under_emulator():
    trivial = compile_source("fn main() = 7")
    inner = compile_source(selfemu.wrapped_source(trivial, fuel=None,
                                                  sabotage=None))
    direct = vm.run_module(inner)
    try:
        doubled = selfemu.run_emulated(inner, fuel=10 ** 8, max_seconds=300)
    except Exception as exc:  # stretch exhibit: report, don't break
        pytest.xfail("double emulation failed: %r" % exc)
    if weak_lines(direct) != weak_lines(doubled.report):
        pytest.xfail("double emulation diverged: %r"
                     % doubled.report.outcome)
    assert doubled.report.outcome[0] == "value"
