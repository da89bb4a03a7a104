"""Differential testing: direct execution vs the self-emulator.

Each corpus program is run on the ordinary engine and under the
self-emulator, and the two guest-visible records are compared line by
line (`compare_weak`).  Host-side meters are compared separately
(`compare_strong`): the emulated run is expected to be distinguishable
there, and the overhead factor is recorded rather than asserted.

A corpus directory holds `<name>.gl` programs with `<name>.expect`
goldens, detection probes under `probes/`, intentionally-rejected
programs under `unchecked/`, and `checklist_map.json`, which maps each
row of the two emulation checklists to the test IDs that demonstrate it.
"""

import json
import re
from pathlib import Path

from . import selfemu, vm
from .bytecode import OPCODES
from .compiler import compile_source
from .report import weak_lines

# canonical checklist rows; checklist_map.json must cover each exactly once
LANGUAGE_ROWS = (
    "Fetch, decode, and maintain guest state",
    "All statements and expressions",
    "Function arguments and callable values",
    "Function identity",
    "Compound or complex operations",
    "Source-level evaluation versus compilation",
)
EMULATOR_ROWS = (
    "Timing",
    "Memory boundaries",
    "Reflective and introspection functions",
    "Memory footprint and resource usage",
    "Boundary of emulation",
    "Callbacks and function pointers",
    "Overlooked or hidden state information",
    "Source metadata and stack traces",
)
STATUSES = ("demonstrated-pass", "demonstrated-gap", "out-of-scope")

# test IDs exercised by the unit suite rather than by difftest itself
SYNTHETIC_TESTS = {
    "coverage:opcodes": "instruction-coverage guard over the corpus",
    "oracle:receive": "brute-force selective-receive oracle",
    "depth:bound": "deep-recursion host frame bound",
    "sabotage:clock": "difftest --sabotage clock",
    "sabotage:memory": "difftest --sabotage memory",
    "sabotage:stacktrace": "difftest --sabotage stacktrace",
    "sabotage:fun_id": "difftest --sabotage fun_id",
    "sabotage:sys_info": "difftest --sabotage sys_info",
}

_DIRECTIVE = re.compile(r"#!\s*fuel=(\d+)")


class CoverageError(Exception):
    """The corpus or checklist map fails the coverage guard."""


class PairReport:
    def __init__(self, program_id, direct, emulated_run, weak_ok, diffs,
                 strong):
        self.program_id = program_id
        self.direct = direct
        self.emulated_run = emulated_run
        self.weak_ok = weak_ok
        self.diffs = diffs          # list of (field, direct, emulated)
        self.strong = strong


def program_fuel(source):
    """Corpus programs may pin a reduction budget with a `#! fuel=N`
    directive so non-terminating programs still have a golden record."""
    m = _DIRECTIVE.search(source)
    return int(m.group(1)) if m else None


def compare_weak(direct, emulated):
    """First-divergence comparison over the guest-visible projection."""
    a = weak_lines(direct)
    b = weak_lines(emulated)
    diffs = []
    for i in range(max(len(a), len(b))):
        la = a[i] if i < len(a) else "<missing>"
        lb = b[i] if i < len(b) else "<missing>"
        if la != lb:
            field = (la if la != "<missing>" else lb).split(" ", 1)[0]
            diffs.append((field, la, lb))
            break
    return (not diffs, diffs)


def compare_strong(direct, emulated_host):
    """Host-meter comparison.  The expected verdict for any real program
    under the emulator is DISTINGUISHABLE; the factors are evidence."""
    same = (direct.host_instr == emulated_host.host_instr
            and direct.host_alloc == emulated_host.host_alloc)
    factor = (emulated_host.host_instr / direct.host_instr
              if direct.host_instr else None)
    alloc_factor = (emulated_host.host_alloc / direct.host_alloc
                    if direct.host_alloc else None)
    return {"verdict": "INDISTINGUISHABLE" if same else "DISTINGUISHABLE",
            "overhead_reductions": factor,
            "overhead_alloc": alloc_factor}


def run_pair(source, program_id="<src>", fuel=None, sabotage=(),
             max_seconds=None):
    if fuel is None:
        fuel = program_fuel(source)
    module = compile_source(source)
    direct = vm.run_module(module, fuel=fuel, max_seconds=max_seconds)
    emulated = selfemu.run_emulated(module, fuel=fuel, sabotage=sabotage,
                                    max_seconds=max_seconds)
    weak_ok, diffs = compare_weak(direct, emulated.report)
    strong = compare_strong(direct, emulated.host_report)
    return PairReport(program_id, direct, emulated, weak_ok, diffs, strong)


def discover_corpus(corpus_dir):
    """Corpus programs plus probes, in a fixed deterministic order."""
    corpus_dir = Path(corpus_dir)
    paths = sorted(corpus_dir.glob("*.gl"))
    paths += sorted((corpus_dir / "probes").glob("*.gl"))
    return [(p.stem, p) for p in paths]


def discover_unchecked(corpus_dir):
    return [(p.stem, p) for p in sorted((Path(corpus_dir) / "unchecked").glob("*.gl"))]


def opcode_coverage(corpus_dir):
    """Union of opcodes retired across the corpus (direct runs in audit
    mode); the guard demands every opcode in the instruction set."""
    covered = set()
    for _, path in discover_corpus(corpus_dir):
        source = path.read_text()
        module = compile_source(source)
        report = vm.run_module(module, fuel=program_fuel(source), audit=True)
        covered |= report.coverage
    return covered


def run_corpus(corpus_dir, sabotage=(), max_seconds=None):
    programs = discover_corpus(corpus_dir)
    if not programs:
        raise CoverageError("corpus directory %s has no programs"
                            % corpus_dir)
    results = []
    for program_id, path in programs:
        results.append(run_pair(path.read_text(), program_id,
                                sabotage=sabotage, max_seconds=max_seconds))
    return results


def load_checklist_map(corpus_dir):
    path = Path(corpus_dir) / "checklist_map.json"
    if not path.exists():
        raise CoverageError("missing checklist map %s" % path)
    return json.loads(path.read_text())


def checklist_report(corpus_dir, results):
    """Resolve the checklist map against the executed results; fail
    loudly when a row is missing, duplicated, or maps to nothing that
    ran."""
    mapping = load_checklist_map(corpus_dir)
    executed = {r.program_id for r in results}
    lines = []
    for section, rows in (("language", LANGUAGE_ROWS),
                          ("emulator", EMULATOR_ROWS)):
        entries = mapping.get(section, [])
        labels = [e["row"] for e in entries]
        if sorted(labels) != sorted(rows) or len(set(labels)) != len(labels):
            raise CoverageError("checklist section %r must contain each "
                                "row exactly once" % section)
        by_label = {e["row"]: e for e in entries}
        lines.append("CHECKLIST %s" % section)
        for row in rows:
            entry = by_label[row]
            status = entry["status"]
            tests = entry["tests"]
            if status not in STATUSES:
                raise CoverageError("row %r has unknown status %r"
                                    % (row, status))
            if not tests and status != "out-of-scope":
                raise CoverageError("row %r maps to no tests" % row)
            for test_id in tests:
                kind, _, name = test_id.partition(":")
                if test_id in SYNTHETIC_TESTS:
                    continue
                if kind in ("weak", "strong", "mode") and name in executed:
                    continue
                if kind == "unchecked" and any(
                        name == u for u, _ in discover_unchecked(corpus_dir)):
                    continue
                raise CoverageError("row %r maps to unknown test %r"
                                    % (row, test_id))
            lines.append("ROW %s | %s | %s"
                         % (row, status, ",".join(tests)))
    return lines


def difftest(corpus_dir, sabotage=(), max_seconds=None, audit=True):
    """The full differential run.  Returns (exit_code, report_text)."""
    out = []
    try:
        results = run_corpus(corpus_dir, sabotage=sabotage,
                             max_seconds=max_seconds)
        if audit:
            covered = opcode_coverage(corpus_dir)
            missing = set(OPCODES) - covered
            if missing:
                raise CoverageError("opcodes never executed by the corpus: %s"
                                    % ", ".join(sorted(missing)))
        checklist = checklist_report(corpus_dir, results)
    except CoverageError as exc:
        return 7, "COVERAGE FAIL %s\n" % exc

    failures = 0
    for r in results:
        strong = r.strong
        factor = strong["overhead_reductions"]
        out.append("PAIR %s weak=%s strong=%s overhead=%s"
                   % (r.program_id,
                      "PASS" if r.weak_ok else "FAIL",
                      strong["verdict"],
                      "%.1f" % factor if factor is not None else "n/a"))
        if not r.weak_ok:
            failures += 1
            for field, da, ea in r.diffs:
                out.append("DIFF %s | direct: %s | emulated: %s"
                           % (field, da, ea))
    out.extend(checklist)
    out.append("SUMMARY programs=%d weak_failures=%d sabotage=%s"
               % (len(results), failures,
                  ",".join(sabotage) if sabotage else "none"))
    return (6 if failures else 0), "\n".join(out) + "\n"
