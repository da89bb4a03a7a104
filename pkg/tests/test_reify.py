from glemu import vm
from glemu.compiler import compile_source
from glemu.parser import parse_source
from glemu.reify import decode_reified, reify, value_to_source
from glemu.values import format_value


def roundtrip_value(v):
    src = "fn main() = %s" % value_to_source(v)
    report = vm.run(compile_source(src), mode="bytecode")
    assert report.outcome[0] == "value"
    return report.outcome[1]


def test_value_to_source_roundtrips_through_the_language():
    from glemu.values import NIL, UNIT, guest_list
    samples = [
        42, -7, True, False, UNIT, "", 'quote " backslash \\',
        guest_list([1, "two", guest_list([])]),
        (1, (2, 3), guest_list([UNIT])),
        NIL,
    ]
    for v in samples:
        assert format_value(roundtrip_value(v)) == format_value(v)


def test_reify_decode_is_identity(corpus_dir):
    for path in sorted(corpus_dir.glob("*.gl")):
        module = compile_source(path.read_text())
        decoded = decode_reified(reify(module))
        assert len(decoded.functions) == len(module.functions)
        for a, b in zip(decoded.functions, module.functions):
            assert (a.name, a.arity, a.n_slots) == (b.name, b.arity, b.n_slots)
            assert a.code == b.code
            assert a.line_table == b.line_table
        assert decoded.entry == module.entry


def test_reified_literal_is_stable_text(corpus_dir):
    module = compile_source((corpus_dir / "arith.gl").read_text())
    a = value_to_source(reify(module))
    b = value_to_source(reify(compile_source((corpus_dir / "arith.gl").read_text())))
    assert a == b
