import pytest

from glemu import gl_ast as A
from glemu.checker import check
from glemu.errors import LexError, ParseError
from glemu.lexer import tokenize
from glemu.parser import parse_source


def test_tokens_basics():
    kinds = [t[0] for t in tokenize('fn f(x) = x + 1 # trailing\n')]
    assert kinds == ["kw", "ident", "op", "ident", "op", "op", "ident",
                     "op", "int", "eof"]


def test_string_escapes_and_errors():
    toks = tokenize('"a\\"b\\\\c"')
    assert toks[0][1] == 'a"b\\c'
    with pytest.raises(LexError):
        tokenize('"unterminated')
    with pytest.raises(LexError):
        tokenize("$")


def test_comparison_not_associative():
    with pytest.raises(ParseError):
        parse_source("fn main() = 1 < 2 < 3")


def test_match_arms_comma_separated():
    prog = parse_source("fn main() = match 1 { 1 -> 2, _ -> 3 }")
    (d,) = prog.defs
    assert isinstance(d.body, A.Match)
    assert len(d.body.arms) == 2


def test_list_pattern_sugar():
    prog = parse_source("fn main() = match [] { [a, b] -> a, _ -> 0 }")
    pat = prog.defs[0].body.arms[0].pattern
    assert isinstance(pat, A.PCons)
    assert isinstance(pat.tail, A.PCons)
    assert isinstance(pat.tail.tail, A.PNil)


def test_keyword_forms_extend_right():
    prog = parse_source("fn main() = if true then 2 else 3 + 4")
    body = prog.defs[0].body
    assert isinstance(body, A.If)
    assert isinstance(body.orelse, A.BinOp)


def test_checker_accepts_corpus_style_program():
    src = """fn map(f, l) = match l { h :: t -> f(h) :: map(f, t), _ -> [] }
fn main() = map(fn (x) -> x, [1])"""
    assert check(parse_source(src)) == []


@pytest.mark.parametrize("src,fragment", [
    ("fn main() = x", "unbound variable"),
    ("fn f() = 1", "missing main/0"),
    ("fn main() = str_len()", "expects 1 argument"),
    ("fn main() = ghost(1)", "unknown function"),
    ("fn main() = match (1, 1) { (a, a) -> a }", "duplicate variable"),
    ("fn f(x, x) = x\nfn main() = f(1, 1)", "duplicate parameter"),
    ("fn f() = 1\nfn f() = 2\nfn main() = f()", "duplicate function"),
])
def test_checker_rejections(src, fragment):
    errors = check(parse_source(src))
    assert any(fragment in str(e) for e in errors), errors


def test_divergence_corpus_is_rejected(corpus_dir):
    rejected = []
    for path in sorted((corpus_dir / "unchecked").glob("*.gl")):
        errors = check(parse_source(path.read_text()))
        if errors:
            rejected.append(path.stem)
    assert len(rejected) >= 2
