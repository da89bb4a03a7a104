"""Tokenizer for GL source.  Tokens are (kind, value, line) with kinds
'kw', 'ident', 'int', 'str', 'op', 'eof'.  `#` starts a line comment."""

from .errors import LexError

KEYWORDS = {
    "fn", "let", "in", "if", "then", "else", "match", "try", "catch",
    "throw", "receive", "true", "false",
}

_PUNCT2 = {"->", "==", "!=", "<=", "++", "::"}
_PUNCT1 = set("()[]{},=<+-*/")


def _is_ident_start(c):
    return c.isalpha() or c == "_"


def _is_ident_rest(c):
    return c.isalnum() or c == "_"


def tokenize(source):
    toks = []
    i = 0
    line = 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            continue
        if c == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if _is_ident_start(c):
            j = i
            while j < n and _is_ident_rest(source[j]):
                j += 1
            word = source[i:j]
            kind = "kw" if word in KEYWORDS else "ident"
            toks.append((kind, word, line))
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            toks.append(("int", int(source[i:j]), line))
            i = j
            continue
        if c == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n or source[j] == "\n":
                    raise LexError(line, "unterminated string literal")
                ch = source[j]
                if ch == "\\":
                    if j + 1 >= n:
                        raise LexError(line, "unterminated string literal")
                    esc = source[j + 1]
                    if esc not in ('"', "\\"):
                        raise LexError(line, "bad escape \\%s" % esc)
                    buf.append(esc)
                    j += 2
                    continue
                if ch == '"':
                    break
                buf.append(ch)
                j += 1
            toks.append(("str", "".join(buf), line))
            i = j + 1
            continue
        two = source[i:i + 2]
        if two in _PUNCT2:
            toks.append(("op", two, line))
            i += 2
            continue
        if c == "!":
            raise LexError(line, "stray '!' (did you mean '!=')")
        if c == ":":
            raise LexError(line, "stray ':' (did you mean '::')")
        if c in _PUNCT1:
            toks.append(("op", c, line))
            i += 1
            continue
        raise LexError(line, "illegal character %r" % c)
    toks.append(("eof", None, line))
    return toks
