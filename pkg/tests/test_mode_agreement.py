import pytest

from glemu import vm
from glemu.checker import check
from glemu.compiler import compile_source
from glemu.harness import discover_corpus, discover_unchecked, program_fuel
from glemu.parser import parse_source
from glemu.report import weak_lines


def _ids(corpus):
    return [pid for pid, _ in discover_corpus(corpus)]


def test_ast_and_bytecode_agree_on_every_corpus_program(corpus_dir):
    for program_id, path in discover_corpus(corpus_dir):
        source = path.read_text()
        fuel = program_fuel(source)
        bc = vm.run(compile_source(source), mode="bytecode", fuel=fuel)
        ast = vm.run(parse_source(source), mode="ast", fuel=fuel)
        assert weak_lines(bc) == weak_lines(ast), program_id


def test_ast_agreement_includes_meters(corpus_dir):
    # the tree-walker charges the compiled cost model, so even the
    # reduction/allocation meters agree exactly
    for program_id, path in discover_corpus(corpus_dir):
        source = path.read_text()
        fuel = program_fuel(source)
        bc = vm.run(compile_source(source), mode="bytecode", fuel=fuel)
        ast = vm.run(parse_source(source), mode="ast", fuel=fuel)
        assert bc.meters == ast.meters, program_id


def test_unchecked_mode_values_rejected_programs(corpus_dir):
    valued = 0
    for program_id, path in discover_unchecked(corpus_dir):
        program = parse_source(path.read_text())
        assert check(program), "%s should be rejected" % program_id
        report = vm.run(program, mode="ast-unchecked")
        assert report.outcome[0] == "value", program_id
        valued += 1
    assert valued >= 2


def test_unchecked_mode_faults_at_use():
    r = vm.run(parse_source("fn main() = mystery"), mode="ast-unchecked")
    assert r.outcome[:2] == ("crash", "unbound_variable")
    r = vm.run(parse_source("fn f(x) = x\nfn main() = f(1, 2)"),
               mode="ast-unchecked")
    assert r.outcome[:2] == ("crash", "bad_arity")
