"""Syntax tree for GL source, plus the pretty-printer used by round-trip
tests.  Every node carries the source line it came from."""

from dataclasses import dataclass, field
from typing import Optional


@dataclass
class Expr:
    line: int


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class StrLit(Expr):
    value: str


@dataclass
class UnitLit(Expr):
    pass


@dataclass
class Var(Expr):
    name: str


@dataclass
class Let(Expr):
    name: str  # "_" discards
    bound: Expr
    body: Expr


@dataclass
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass
class BinOp(Expr):
    op: str  # + - * / < <= == != ++ ::
    left: Expr
    right: Expr


@dataclass
class TupleLit(Expr):
    items: list


@dataclass
class ListLit(Expr):
    items: list


@dataclass
class Lambda(Expr):
    params: list
    body: Expr
    # filled in by the lifting pass:
    lifted_name: Optional[str] = None
    lifted_index: Optional[int] = None
    captures: list = field(default_factory=list)


@dataclass
class Call(Expr):
    callee: Expr
    args: list


@dataclass
class Throw(Expr):
    value: Expr


@dataclass
class TryCatch(Expr):
    body: Expr
    exc_var: str
    trace_var: str
    handler: Expr


@dataclass
class Match(Expr):
    subject: Expr
    arms: list


@dataclass
class Receive(Expr):
    arms: list


# -- patterns -----------------------------------------------------------


@dataclass
class Pattern:
    line: int


@dataclass
class PWildcard(Pattern):
    pass


@dataclass
class PVar(Pattern):
    name: str


@dataclass
class PInt(Pattern):
    value: int


@dataclass
class PBool(Pattern):
    value: bool


@dataclass
class PStr(Pattern):
    value: str


@dataclass
class PUnit(Pattern):
    pass


@dataclass
class PNil(Pattern):
    pass


@dataclass
class PCons(Pattern):
    head: Pattern
    tail: Pattern


@dataclass
class PTuple(Pattern):
    items: list


@dataclass
class Arm:
    line: int
    pattern: Pattern
    guard: Optional[Expr]
    body: Expr


@dataclass
class FunDef:
    line: int
    name: str
    params: list
    body: Expr


@dataclass
class Program:
    defs: list


def pattern_vars(pat):
    """Names bound by a pattern, in source-traversal order."""
    out = []

    def walk(p):
        if isinstance(p, PVar):
            out.append(p.name)
        elif isinstance(p, PCons):
            walk(p.head)
            walk(p.tail)
        elif isinstance(p, PTuple):
            for q in p.items:
                walk(q)

    walk(pat)
    return out


# -- pretty printer -----------------------------------------------------


def _fmt_str(s):
    out = ['"']
    for ch in s:
        if ch in ('"', "\\"):
            out.append("\\")
        out.append(ch)
    out.append('"')
    return "".join(out)


def pretty_pattern(p):
    if isinstance(p, PWildcard):
        return "_"
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PInt):
        return str(p.value)
    if isinstance(p, PBool):
        return "true" if p.value else "false"
    if isinstance(p, PStr):
        return _fmt_str(p.value)
    if isinstance(p, PUnit):
        return "()"
    if isinstance(p, PNil):
        return "[]"
    if isinstance(p, PCons):
        return "(%s :: %s)" % (pretty_pattern(p.head), pretty_pattern(p.tail))
    if isinstance(p, PTuple):
        if len(p.items) == 1:
            return "(%s,)" % pretty_pattern(p.items[0])
        return "(%s)" % ", ".join(pretty_pattern(q) for q in p.items)
    raise TypeError(p)


def pretty_expr(e):
    """Fully parenthesized rendering; parsing it back gives an equal tree."""
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, StrLit):
        return _fmt_str(e.value)
    if isinstance(e, UnitLit):
        return "()"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Let):
        return "(let %s = %s in %s)" % (e.name, pretty_expr(e.bound), pretty_expr(e.body))
    if isinstance(e, If):
        return "(if %s then %s else %s)" % (
            pretty_expr(e.cond), pretty_expr(e.then), pretty_expr(e.orelse))
    if isinstance(e, BinOp):
        return "(%s %s %s)" % (pretty_expr(e.left), e.op, pretty_expr(e.right))
    if isinstance(e, TupleLit):
        if len(e.items) == 1:
            return "(%s,)" % pretty_expr(e.items[0])
        return "(%s)" % ", ".join(pretty_expr(x) for x in e.items)
    if isinstance(e, ListLit):
        return "[%s]" % ", ".join(pretty_expr(x) for x in e.items)
    if isinstance(e, Lambda):
        return "(fn (%s) -> %s)" % (", ".join(e.params), pretty_expr(e.body))
    if isinstance(e, Call):
        return "%s(%s)" % (pretty_expr(e.callee), ", ".join(pretty_expr(a) for a in e.args))
    if isinstance(e, Throw):
        return "(throw %s)" % pretty_expr(e.value)
    if isinstance(e, TryCatch):
        return "(try %s catch (%s, %s) -> %s)" % (
            pretty_expr(e.body), e.exc_var, e.trace_var, pretty_expr(e.handler))
    if isinstance(e, Match):
        return "(match %s { %s })" % (pretty_expr(e.subject), pretty_arms(e.arms))
    if isinstance(e, Receive):
        return "(receive { %s })" % pretty_arms(e.arms)
    raise TypeError(e)


def pretty_arms(arms):
    parts = []
    for a in arms:
        if a.guard is not None:
            parts.append("%s if %s -> %s" % (
                pretty_pattern(a.pattern), pretty_expr(a.guard), pretty_expr(a.body)))
        else:
            parts.append("%s -> %s" % (pretty_pattern(a.pattern), pretty_expr(a.body)))
    return ", ".join(parts)


def pretty_program(prog):
    return "\n".join(
        "fn %s(%s) = %s" % (d.name, ", ".join(d.params), pretty_expr(d.body))
        for d in prog.defs)


def ast_equal(a, b):
    """Structural equality ignoring line numbers and lifting annotations."""
    if type(a) is not type(b):
        return False
    if isinstance(a, Program):
        return len(a.defs) == len(b.defs) and all(
            ast_equal(x, y) for x, y in zip(a.defs, b.defs))
    if isinstance(a, FunDef):
        return (a.name == b.name and a.params == b.params
                and ast_equal(a.body, b.body))
    if isinstance(a, Arm):
        if (a.guard is None) != (b.guard is None):
            return False
        return (ast_equal(a.pattern, b.pattern)
                and (a.guard is None or ast_equal(a.guard, b.guard))
                and ast_equal(a.body, b.body))
    if isinstance(a, (IntLit, BoolLit, StrLit, PInt, PBool, PStr)):
        return a.value == b.value
    if isinstance(a, (UnitLit, PUnit, PWildcard, PNil)):
        return True
    if isinstance(a, (Var,)):
        return a.name == b.name
    if isinstance(a, PVar):
        return a.name == b.name
    if isinstance(a, Let):
        return (a.name == b.name and ast_equal(a.bound, b.bound)
                and ast_equal(a.body, b.body))
    if isinstance(a, If):
        return (ast_equal(a.cond, b.cond) and ast_equal(a.then, b.then)
                and ast_equal(a.orelse, b.orelse))
    if isinstance(a, BinOp):
        return (a.op == b.op and ast_equal(a.left, b.left)
                and ast_equal(a.right, b.right))
    if isinstance(a, (TupleLit, ListLit)):
        return len(a.items) == len(b.items) and all(
            ast_equal(x, y) for x, y in zip(a.items, b.items))
    if isinstance(a, Lambda):
        return a.params == b.params and ast_equal(a.body, b.body)
    if isinstance(a, Call):
        return (ast_equal(a.callee, b.callee) and len(a.args) == len(b.args)
                and all(ast_equal(x, y) for x, y in zip(a.args, b.args)))
    if isinstance(a, Throw):
        return ast_equal(a.value, b.value)
    if isinstance(a, TryCatch):
        return (a.exc_var == b.exc_var and a.trace_var == b.trace_var
                and ast_equal(a.body, b.body) and ast_equal(a.handler, b.handler))
    if isinstance(a, Match):
        return (ast_equal(a.subject, b.subject) and len(a.arms) == len(b.arms)
                and all(ast_equal(x, y) for x, y in zip(a.arms, b.arms)))
    if isinstance(a, Receive):
        return len(a.arms) == len(b.arms) and all(
            ast_equal(x, y) for x, y in zip(a.arms, b.arms))
    if isinstance(a, PCons):
        return ast_equal(a.head, b.head) and ast_equal(a.tail, b.tail)
    if isinstance(a, PTuple):
        return len(a.items) == len(b.items) and all(
            ast_equal(x, y) for x, y in zip(a.items, b.items))
    raise TypeError(a)
