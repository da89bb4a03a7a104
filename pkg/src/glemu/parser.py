"""Recursive-descent parser for GL.

Precedence, lowest first: comparisons (non-associative), `::`/`++`
(right), `+`/`-` (left), `*`/`/` (left), then postfix calls.  Keyword
forms (let/if/match/try/throw/receive/fn-lambda) extend maximally to the
right and must be parenthesized when used as an operand.
"""

from .errors import ParseError
from .lexer import tokenize
from . import gl_ast as A

_CMP_OPS = {"<", "<=", "==", "!="}
_CONS_OPS = {"::", "++"}
_ADD_OPS = {"+", "-"}
_MUL_OPS = {"*", "/"}


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.pos = 0

    # -- token helpers ----------------------------------------------

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at_op(self, *ops):
        k, v, _ = self.peek()
        return k == "op" and v in ops

    def at_kw(self, *kws):
        k, v, _ = self.peek()
        return k == "kw" and v in kws

    def expect_op(self, op):
        k, v, line = self.next()
        if k != "op" or v != op:
            raise ParseError(line, "expected '%s', found %s" % (op, _show(k, v)))
        return line

    def expect_kw(self, kw):
        k, v, line = self.next()
        if k != "kw" or v != kw:
            raise ParseError(line, "expected '%s', found %s" % (kw, _show(k, v)))
        return line

    def expect_ident(self):
        k, v, line = self.next()
        if k != "ident":
            raise ParseError(line, "expected identifier, found %s" % _show(k, v))
        return v, line

    # -- grammar -----------------------------------------------------

    def program(self):
        defs = []
        while not self.peek()[0] == "eof":
            defs.append(self.fundef())
        return A.Program(defs)

    def fundef(self):
        line = self.expect_kw("fn")
        name, _ = self.expect_ident()
        self.expect_op("(")
        params = self.param_list()
        self.expect_op(")")
        self.expect_op("=")
        body = self.expr()
        return A.FunDef(line, name, params, body)

    def param_list(self):
        params = []
        if self.peek()[0] == "ident":
            name, _ = self.expect_ident()
            params.append(name)
            while self.at_op(","):
                self.next()
                name, _ = self.expect_ident()
                params.append(name)
        return params

    def expr(self):
        k, v, line = self.peek()
        if k == "kw":
            if v == "let":
                return self.let_expr()
            if v == "if":
                return self.if_expr()
            if v == "match":
                return self.match_expr()
            if v == "try":
                return self.try_expr()
            if v == "throw":
                self.next()
                return A.Throw(line, self.expr())
            if v == "receive":
                return self.receive_expr()
            if v == "fn":
                return self.lambda_expr()
        return self.cmp_expr()

    def let_expr(self):
        line = self.expect_kw("let")
        name, _ = self.expect_ident()
        self.expect_op("=")
        bound = self.expr()
        self.expect_kw("in")
        body = self.expr()
        return A.Let(line, name, bound, body)

    def if_expr(self):
        line = self.expect_kw("if")
        cond = self.expr()
        self.expect_kw("then")
        then = self.expr()
        self.expect_kw("else")
        orelse = self.expr()
        return A.If(line, cond, then, orelse)

    def match_expr(self):
        line = self.expect_kw("match")
        subject = self.expr()
        self.expect_op("{")
        arms = self.arms()
        self.expect_op("}")
        return A.Match(line, subject, arms)

    def receive_expr(self):
        line = self.expect_kw("receive")
        self.expect_op("{")
        arms = self.arms()
        self.expect_op("}")
        return A.Receive(line, arms)

    def try_expr(self):
        line = self.expect_kw("try")
        body = self.expr()
        self.expect_kw("catch")
        self.expect_op("(")
        exc_var, _ = self.expect_ident()
        self.expect_op(",")
        trace_var, _ = self.expect_ident()
        self.expect_op(")")
        self.expect_op("->")
        handler = self.expr()
        return A.TryCatch(line, body, exc_var, trace_var, handler)

    def lambda_expr(self):
        line = self.expect_kw("fn")
        self.expect_op("(")
        params = self.param_list()
        self.expect_op(")")
        self.expect_op("->")
        body = self.expr()
        return A.Lambda(line, params, body)

    def arms(self):
        arms = [self.arm()]
        while self.at_op(","):
            self.next()
            arms.append(self.arm())
        return arms

    def arm(self):
        pat = self.pattern()
        guard = None
        if self.at_kw("if"):
            self.next()
            guard = self.expr()
        self.expect_op("->")
        body = self.expr()
        return A.Arm(pat.line, pat, guard, body)

    # -- operator levels ----------------------------------------------

    def cmp_expr(self):
        left = self.cons_expr()
        if self.at_op(*_CMP_OPS):
            k, op, line = self.next()
            right = self.cons_expr()
            if self.at_op(*_CMP_OPS):
                raise ParseError(self.peek()[2], "comparison is non-associative")
            return A.BinOp(line, op, left, right)
        return left

    def cons_expr(self):
        left = self.add_expr()
        if self.at_op(*_CONS_OPS):
            k, op, line = self.next()
            right = self.cons_expr()
            return A.BinOp(line, op, left, right)
        return left

    def add_expr(self):
        left = self.mul_expr()
        while self.at_op(*_ADD_OPS):
            k, op, line = self.next()
            right = self.mul_expr()
            left = A.BinOp(line, op, left, right)
        return left

    def mul_expr(self):
        left = self.postfix_expr()
        while self.at_op(*_MUL_OPS):
            k, op, line = self.next()
            right = self.postfix_expr()
            left = A.BinOp(line, op, left, right)
        return left

    def postfix_expr(self):
        e = self.atom()
        while self.at_op("("):
            line = self.expect_op("(")
            args = []
            if not self.at_op(")"):
                args.append(self.expr())
                while self.at_op(","):
                    self.next()
                    args.append(self.expr())
            self.expect_op(")")
            e = A.Call(line, e, args)
        return e

    def atom(self):
        k, v, line = self.peek()
        if k == "int":
            self.next()
            return A.IntLit(line, v)
        if k == "str":
            self.next()
            return A.StrLit(line, v)
        if k == "kw" and v in ("true", "false"):
            self.next()
            return A.BoolLit(line, v == "true")
        if k == "ident":
            self.next()
            return A.Var(line, v)
        if k == "op" and v == "[":
            self.next()
            items = []
            if not self.at_op("]"):
                items.append(self.expr())
                while self.at_op(","):
                    self.next()
                    items.append(self.expr())
            self.expect_op("]")
            return A.ListLit(line, items)
        if k == "op" and v == "(":
            self.next()
            if self.at_op(")"):
                self.next()
                return A.UnitLit(line)
            first = self.expr()
            if self.at_op(")"):
                self.next()
                return first
            items = [first]
            trailing = False
            while self.at_op(","):
                self.next()
                if self.at_op(")"):
                    trailing = True
                    break
                items.append(self.expr())
            self.expect_op(")")
            if len(items) == 1 and not trailing:
                raise ParseError(line, "expected ',' or ')' in parenthesized expression")
            return A.TupleLit(line, items)
        raise ParseError(line, "expected expression, found %s" % _show(k, v))

    # -- patterns ------------------------------------------------------

    def pattern(self):
        left = self.primary_pattern()
        if self.at_op("::"):
            _, _, line = self.next()
            right = self.pattern()
            return A.PCons(left.line, left, right)
        return left

    def primary_pattern(self):
        k, v, line = self.peek()
        if k == "int":
            self.next()
            return A.PInt(line, v)
        if k == "str":
            self.next()
            return A.PStr(line, v)
        if k == "kw" and v in ("true", "false"):
            self.next()
            return A.PBool(line, v == "true")
        if k == "ident":
            self.next()
            if v == "_":
                return A.PWildcard(line)
            return A.PVar(line, v)
        if k == "op" and v == "[":
            self.next()
            items = []
            if not self.at_op("]"):
                items.append(self.pattern())
                while self.at_op(","):
                    self.next()
                    items.append(self.pattern())
            self.expect_op("]")
            out = A.PNil(line)
            for p in reversed(items):
                out = A.PCons(line, p, out)
            return out
        if k == "op" and v == "(":
            self.next()
            if self.at_op(")"):
                self.next()
                return A.PUnit(line)
            first = self.pattern()
            if self.at_op(")"):
                self.next()
                return first
            items = [first]
            trailing = False
            while self.at_op(","):
                self.next()
                if self.at_op(")"):
                    trailing = True
                    break
                items.append(self.pattern())
            self.expect_op(")")
            if len(items) == 1 and not trailing:
                raise ParseError(line, "expected ',' or ')' in parenthesized pattern")
            return A.PTuple(line, items)
        raise ParseError(line, "expected pattern, found %s" % _show(k, v))


def _show(kind, value):
    if kind == "eof":
        return "end of input"
    return repr(value)


def parse(tokens):
    return _Parser(tokens).program()


def parse_source(source):
    return parse(tokenize(source))
