from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]
CORPUS = REPO / "corpus"


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


def run_bc(source, **kw):
    from glemu import vm
    from glemu.compiler import compile_source
    return vm.run(compile_source(source), mode="bytecode", **kw)


def run_ast(source, **kw):
    from glemu import vm
    from glemu.parser import parse_source
    return vm.run(parse_source(source), mode="ast", **kw)
