"""Static checks replicating what compiled execution enforces: name
binding, pattern linearity, known callees, builtin arities, and the
presence of main/0.  Errors are returned as data, never raised."""

from . import gl_ast as A
from .builtins_table import BUILTIN_ARITY
from .errors import CheckError


def check(program):
    """Return [] when the program is well-formed, else a list of CheckError."""
    errors = []
    functions = {}
    for d in program.defs:
        key = (d.name, len(d.params))
        if d.name in functions:
            errors.append(CheckError(d.line, "duplicate function '%s'" % d.name))
        else:
            functions[d.name] = len(d.params)
        seen = set()
        for p in d.params:
            if p in seen:
                errors.append(CheckError(d.line, "duplicate parameter '%s'" % p))
            seen.add(p)

    if functions.get("main") != 0:
        line = program.defs[0].line if program.defs else 1
        errors.append(CheckError(line, "missing main/0"))

    for d in program.defs:
        env = set(p for p in d.params if p != "_")
        _check_expr(d.body, env, functions, errors)
    return errors


def _check_pattern(pat, errors):
    names = A.pattern_vars(pat)
    seen = set()
    for n in names:
        if n in seen:
            errors.append(CheckError(pat.line, "duplicate variable '%s' in pattern" % n))
        seen.add(n)
    return [n for n in names if n != "_"]


def _check_arms(arms, env, functions, errors):
    for arm in arms:
        bound = _check_pattern(arm.pattern, errors)
        inner = env | set(bound)
        if arm.guard is not None:
            _check_expr(arm.guard, inner, functions, errors)
        _check_expr(arm.body, inner, functions, errors)


def _check_expr(e, env, functions, errors):
    if isinstance(e, (A.IntLit, A.BoolLit, A.StrLit, A.UnitLit)):
        return
    if isinstance(e, A.Var):
        if e.name not in env and e.name not in functions:
            errors.append(CheckError(e.line, "unbound variable '%s'" % e.name))
        return
    if isinstance(e, A.Let):
        _check_expr(e.bound, env, functions, errors)
        inner = env if e.name == "_" else env | {e.name}
        _check_expr(e.body, inner, functions, errors)
        return
    if isinstance(e, A.If):
        _check_expr(e.cond, env, functions, errors)
        _check_expr(e.then, env, functions, errors)
        _check_expr(e.orelse, env, functions, errors)
        return
    if isinstance(e, A.BinOp):
        _check_expr(e.left, env, functions, errors)
        _check_expr(e.right, env, functions, errors)
        return
    if isinstance(e, (A.TupleLit, A.ListLit)):
        for x in e.items:
            _check_expr(x, env, functions, errors)
        return
    if isinstance(e, A.Lambda):
        seen = set()
        for p in e.params:
            if p in seen:
                errors.append(CheckError(e.line, "duplicate parameter '%s'" % p))
            seen.add(p)
        _check_expr(e.body, env | set(e.params), functions, errors)
        return
    if isinstance(e, A.Call):
        callee = e.callee
        if isinstance(callee, A.Var) and callee.name not in env:
            name = callee.name
            if name in functions:
                pass  # arity mismatches surface at run time (bad_arity)
            elif name in BUILTIN_ARITY:
                if BUILTIN_ARITY[name] != len(e.args):
                    errors.append(CheckError(
                        e.line, "builtin %s expects %d argument(s), got %d"
                        % (name, BUILTIN_ARITY[name], len(e.args))))
            else:
                errors.append(CheckError(
                    e.line, "call to unknown function or builtin '%s'" % name))
        else:
            _check_expr(callee, env, functions, errors)
        for a in e.args:
            _check_expr(a, env, functions, errors)
        return
    if isinstance(e, A.Throw):
        _check_expr(e.value, env, functions, errors)
        return
    if isinstance(e, A.TryCatch):
        _check_expr(e.body, env, functions, errors)
        inner = env | {n for n in (e.exc_var, e.trace_var) if n != "_"}
        _check_expr(e.handler, inner, functions, errors)
        return
    if isinstance(e, A.Match):
        _check_expr(e.subject, env, functions, errors)
        _check_arms(e.arms, env, functions, errors)
        return
    if isinstance(e, A.Receive):
        _check_arms(e.arms, env, functions, errors)
        return
    raise TypeError(e)
