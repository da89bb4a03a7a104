"""AST to bytecode.

Lambdas are lifted to fresh module functions named `NAME.lambdaK` (K per
enclosing top-level definition, in depth-first encounter order) with
by-value captures materialized at MAKE_CLOSURE.  Function layout: source
definitions in order, then lifted lambdas in encounter order.  Locals get
slots in binding-encounter order; pattern bindings always take fresh
slots, so failed arms never roll anything back.

Pattern arms compile to peek-style TEST sequences over the subject.  A
test failing with r extracted components still on the stack jumps to a
cleanup stub (r POPs, then a jump to the next arm); top-level tests jump
to the next arm directly.  The tree-walking evaluator charges exactly the
same virtual instructions, so keep the two in lockstep when editing.
"""

from . import gl_ast as A
from .builtins_table import BUILTIN_ARITY
from .bytecode import (
    Module, FuncBC, OPCODES, disassemble,
)

OP = OPCODES


class _LiftedFn:
    def __init__(self, name, params, captures, body, line):
        self.name = name
        self.params = params
        self.captures = captures
        self.body = body
        self.line = line


def free_vars(e, bound):
    """Ordered first-occurrence free variables of an expression."""
    out = []
    seen = set()

    def note(name):
        if name not in seen:
            seen.add(name)
            out.append(name)

    def walk(e, bound):
        if isinstance(e, A.Var):
            if e.name not in bound:
                note(e.name)
        elif isinstance(e, A.Let):
            walk(e.bound, bound)
            walk(e.body, bound if e.name == "_" else bound | {e.name})
        elif isinstance(e, A.If):
            walk(e.cond, bound)
            walk(e.then, bound)
            walk(e.orelse, bound)
        elif isinstance(e, A.BinOp):
            walk(e.left, bound)
            walk(e.right, bound)
        elif isinstance(e, (A.TupleLit, A.ListLit)):
            for x in e.items:
                walk(x, bound)
        elif isinstance(e, A.Lambda):
            walk(e.body, bound | set(e.params))
        elif isinstance(e, A.Call):
            walk(e.callee, bound)
            for a in e.args:
                walk(a, bound)
        elif isinstance(e, A.Throw):
            walk(e.value, bound)
        elif isinstance(e, A.TryCatch):
            walk(e.body, bound)
            inner = bound | {n for n in (e.exc_var, e.trace_var) if n != "_"}
            walk(e.handler, inner)
        elif isinstance(e, A.Match):
            walk(e.subject, bound)
            _walk_arms(e.arms, bound)
        elif isinstance(e, A.Receive):
            _walk_arms(e.arms, bound)

    def _walk_arms(arms, bound):
        for arm in arms:
            inner = bound | set(A.pattern_vars(arm.pattern))
            if arm.guard is not None:
                walk(arm.guard, inner)
            walk(arm.body, inner)

    walk(e, bound)
    return out


def lift_lambdas(program):
    """Annotate every Lambda with (lifted_name, lifted_index, captures) and
    return the list of lifted function records in encounter order."""
    lifted = []
    n_defs = len(program.defs)
    counters = {}

    def walk(e, bound, top_name):
        if isinstance(e, A.Lambda):
            k = counters.get(top_name, 0)
            counters[top_name] = k + 1
            free = free_vars(e.body, set(e.params))
            captures = [n for n in free if n in bound]
            e.lifted_name = "%s.lambda%d" % (top_name, k)
            e.lifted_index = n_defs + len(lifted)
            e.captures = captures
            rec = _LiftedFn(e.lifted_name, list(e.params), captures, e.body, e.line)
            lifted.append(rec)
            walk(e.body, set(e.params) | set(captures), top_name)
        elif isinstance(e, A.Let):
            walk(e.bound, bound, top_name)
            walk(e.body, bound if e.name == "_" else bound | {e.name}, top_name)
        elif isinstance(e, A.If):
            walk(e.cond, bound, top_name)
            walk(e.then, bound, top_name)
            walk(e.orelse, bound, top_name)
        elif isinstance(e, A.BinOp):
            walk(e.left, bound, top_name)
            walk(e.right, bound, top_name)
        elif isinstance(e, (A.TupleLit, A.ListLit)):
            for x in e.items:
                walk(x, bound, top_name)
        elif isinstance(e, A.Call):
            walk(e.callee, bound, top_name)
            for a in e.args:
                walk(a, bound, top_name)
        elif isinstance(e, A.Throw):
            walk(e.value, bound, top_name)
        elif isinstance(e, A.TryCatch):
            walk(e.body, bound, top_name)
            inner = bound | {n for n in (e.exc_var, e.trace_var) if n != "_"}
            walk(e.handler, inner, top_name)
        elif isinstance(e, A.Match):
            walk(e.subject, bound, top_name)
            _arms(e.arms, bound, top_name)
        elif isinstance(e, A.Receive):
            _arms(e.arms, bound, top_name)

    def _arms(arms, bound, top_name):
        for arm in arms:
            inner = bound | set(A.pattern_vars(arm.pattern))
            if arm.guard is not None:
                walk(arm.guard, inner, top_name)
            walk(arm.body, inner, top_name)

    for d in program.defs:
        walk(d.body, set(p for p in d.params), d.name)
    return lifted


class _ConstPool:
    def __init__(self):
        self.strings = []
        self.index = {}

    def intern(self, s):
        if s not in self.index:
            self.index[s] = len(self.strings)
            self.strings.append(s)
        return self.index[s]


class _FnCompiler:
    def __init__(self, mod, name, params, captures, body, fn_indexes):
        self.mod = mod
        self.name = name
        self.params = params
        self.captures = captures
        self.body = body
        self.fn_indexes = fn_indexes  # source function name -> index
        self.code = []
        self.lines = []
        self.env = {}
        for i, p in enumerate(params):
            self.env[p] = i
        for j, c in enumerate(captures):
            self.env[c] = len(params) + j
        self.n_slots = len(params) + len(captures)

    def new_slot(self):
        s = self.n_slots
        self.n_slots += 1
        return s

    def emit(self, line, op, *args):
        self.code.append((op,) + args)
        self.lines.append(line)
        return len(self.code) - 1

    def here(self):
        return len(self.code)

    def patch(self, pos, target):
        instr = self.code[pos]
        self.code[pos] = instr[:-1] + (target,)

    # -- expressions --------------------------------------------------

    def compile(self):
        self.expr(self.body, tail=True)
        self.emit(self.body.line, OP["RET"])
        return FuncBC(self.name, len(self.params), self.n_slots,
                      self.code, self.lines)

    def expr(self, e, tail):
        ln = e.line
        if isinstance(e, A.IntLit):
            self.emit(ln, OP["PUSH_INT"], e.value)
        elif isinstance(e, A.BoolLit):
            self.emit(ln, OP["PUSH_BOOL"], e.value)
        elif isinstance(e, A.StrLit):
            self.emit(ln, OP["PUSH_STR"], self.mod.intern(e.value))
        elif isinstance(e, A.UnitLit):
            self.emit(ln, OP["PUSH_UNIT"])
        elif isinstance(e, A.Var):
            self.var(e)
        elif isinstance(e, A.Let):
            self.expr(e.bound, tail=False)
            if e.name == "_":
                self.emit(ln, OP["POP"])
                self.expr(e.body, tail)
            else:
                slot = self.new_slot()
                self.emit(ln, OP["STORE"], slot)
                saved = self.env.get(e.name)
                self.env[e.name] = slot
                self.expr(e.body, tail)
                if saved is None:
                    del self.env[e.name]
                else:
                    self.env[e.name] = saved
        elif isinstance(e, A.If):
            self.expr(e.cond, tail=False)
            jf = self.emit(ln, OP["JUMP_IF_FALSE"], None)
            self.expr(e.then, tail)
            jend = self.emit(ln, OP["JUMP"], None)
            self.patch(jf, self.here())
            self.expr(e.orelse, tail)
            self.patch(jend, self.here())
        elif isinstance(e, A.BinOp):
            self.expr(e.left, tail=False)
            self.expr(e.right, tail=False)
            opname = {"+": "ADD", "-": "SUB", "*": "MUL", "/": "DIV",
                      "<": "LT", "<=": "LE", "==": "EQ", "!=": "NE",
                      "++": "CONCAT", "::": "CONS"}[e.op]
            self.emit(ln, OP[opname])
        elif isinstance(e, A.TupleLit):
            for x in e.items:
                self.expr(x, tail=False)
            self.emit(ln, OP["MAKE_TUPLE"], len(e.items))
        elif isinstance(e, A.ListLit):
            for x in e.items:
                self.expr(x, tail=False)
            self.emit(ln, OP["MAKE_LIST"], len(e.items))
        elif isinstance(e, A.Lambda):
            slots = tuple(self.env[c] for c in e.captures)
            self.emit(ln, OP["MAKE_CLOSURE"], e.lifted_index, slots)
        elif isinstance(e, A.Call):
            self.call(e, tail)
        elif isinstance(e, A.Throw):
            self.expr(e.value, tail=False)
            self.emit(ln, OP["THROW"])
        elif isinstance(e, A.TryCatch):
            tp = self.emit(ln, OP["TRY_PUSH"], None)
            self.expr(e.body, tail=False)
            self.emit(ln, OP["TRY_POP"])
            jend = self.emit(ln, OP["JUMP"], None)
            self.patch(tp, self.here())
            tslot = self.new_slot()
            eslot = self.new_slot()
            self.emit(ln, OP["STORE"], tslot)
            self.emit(ln, OP["STORE"], eslot)
            saved = {}
            for nm, slot in ((e.exc_var, eslot), (e.trace_var, tslot)):
                if nm != "_":
                    saved[nm] = self.env.get(nm)
                    self.env[nm] = slot
            self.expr(e.handler, tail)
            for nm, old in saved.items():
                if old is None:
                    del self.env[nm]
                else:
                    self.env[nm] = old
            self.patch(jend, self.here())
        elif isinstance(e, A.Match):
            self.expr(e.subject, tail=False)
            self.arms(e.arms, tail, receive=False, line=ln)
        elif isinstance(e, A.Receive):
            self.emit(ln, OP["RECV_RESET"])
            fetch = self.here()
            self.emit(ln, OP["RECV_FETCH"])
            self.arms(e.arms, tail, receive=True, line=ln, fetch_label=fetch)
        else:
            raise TypeError(e)

    def var(self, e):
        if e.name in self.env:
            self.emit(e.line, OP["LOAD"], self.env[e.name])
        elif e.name in self.fn_indexes:
            self.emit(e.line, OP["MAKE_CLOSURE"], self.fn_indexes[e.name], ())
        else:
            raise AssertionError("unbound %s after check" % e.name)

    def call(self, e, tail):
        ln = e.line
        callee = e.callee
        if isinstance(callee, A.Var) and callee.name not in self.env:
            name = callee.name
            if name in self.fn_indexes:
                self.emit(callee.line, OP["MAKE_CLOSURE"], self.fn_indexes[name], ())
            elif name in BUILTIN_ARITY:
                for a in e.args:
                    self.expr(a, tail=False)
                self.emit(ln, OP["CALL_BUILTIN"], name, len(e.args))
                return
            else:
                raise AssertionError("unknown callee %s after check" % name)
        else:
            self.expr(callee, tail=False)
        for a in e.args:
            self.expr(a, tail=False)
        self.emit(ln, OP["TAILCALL" if tail else "CALL"], len(e.args))

    # -- pattern arms ---------------------------------------------------

    def arms(self, arms, tail, receive, line, fetch_label=None):
        """Subject is on top of the stack.  Compiles the arm chain plus the
        synthesized no-match continuation."""
        end_jumps = []
        pending_next = []  # (pos,) to patch to the next arm start
        for arm in arms:
            for pos in pending_next:
                self.patch(pos, self.here())
            pending_next = []
            fail_sites = {}  # rel -> [positions]
            saved_env = dict(self.env)
            self.pattern(arm.pattern, 0, fail_sites)
            if arm.guard is not None:
                self.expr(arm.guard, tail=False)
                pos = self.emit(arm.guard.line, OP["JUMP_IF_FALSE"], None)
                fail_sites.setdefault(0, []).append(pos)
            if receive:
                self.emit(arm.body.line, OP["RECV_ACCEPT"])
            self.emit(arm.body.line, OP["POP"])
            self.expr(arm.body, tail)
            end_jumps.append(self.emit(arm.body.line, OP["JUMP"], None))
            self.env = saved_env
            # cleanup stubs: pop extracted components, then on to the next arm
            for rel in sorted(fail_sites):
                if rel == 0:
                    pending_next.extend(fail_sites[rel])
                    continue
                stub = self.here()
                for _ in range(rel):
                    self.emit(arm.pattern.line, OP["POP"])
                pending_next.append(self.emit(arm.pattern.line, OP["JUMP"], None))
                for pos in fail_sites[rel]:
                    self.patch(pos, stub)
        # no-match continuation
        for pos in pending_next:
            self.patch(pos, self.here())
        if receive:
            self.emit(line, OP["POP"])
            self.emit(line, OP["JUMP"], fetch_label)
        else:
            self.emit(line, OP["PUSH_STR"], self.mod.intern("match_error"))
            self.emit(line, OP["THROW"])
        end = self.here()
        for pos in end_jumps:
            self.patch(pos, end)

    def pattern(self, p, rel, fail_sites):
        """Compile tests for `p` whose subject sits on top with `rel` values
        between it and the arm subject.  Records failure patch sites."""
        ln = p.line

        def fail(pos):
            fail_sites.setdefault(rel, []).append(pos)

        if isinstance(p, A.PWildcard):
            return
        if isinstance(p, A.PVar):
            self.emit(ln, OP["DUP"])
            slot = self.new_slot()
            self.emit(ln, OP["STORE"], slot)
            self.env[p.name] = slot
            return
        if isinstance(p, A.PInt):
            fail(self.emit(ln, OP["TEST_INT"], p.value, None))
            return
        if isinstance(p, A.PBool):
            fail(self.emit(ln, OP["TEST_BOOL"], p.value, None))
            return
        if isinstance(p, A.PStr):
            fail(self.emit(ln, OP["TEST_STR"], self.mod.intern(p.value), None))
            return
        if isinstance(p, A.PUnit):
            fail(self.emit(ln, OP["TEST_UNIT"], None))
            return
        if isinstance(p, A.PNil):
            fail(self.emit(ln, OP["TEST_NIL"], None))
            return
        if isinstance(p, A.PCons):
            fail(self.emit(ln, OP["TEST_CONS"], None))
            self.pattern(p.tail, rel + 2, fail_sites)
            self.emit(ln, OP["POP"])
            self.pattern(p.head, rel + 1, fail_sites)
            self.emit(ln, OP["POP"])
            return
        if isinstance(p, A.PTuple):
            n = len(p.items)
            fail(self.emit(ln, OP["TEST_TUPLE"], n, None))
            for i in range(n, 0, -1):
                self.pattern(p.items[i - 1], rel + i, fail_sites)
                self.emit(ln, OP["POP"])
            return
        raise TypeError(p)


class _ModCtx:
    def __init__(self):
        self.pool = _ConstPool()

    def intern(self, s):
        return self.pool.intern(s)


def compile_program(program):
    """Compile a checked program to a Module.  Deterministic: the same AST
    always yields byte-identical disassembly."""
    lifted = lift_lambdas(program)
    fn_indexes = {d.name: i for i, d in enumerate(program.defs)}
    ctx = _ModCtx()
    functions = []
    for d in program.defs:
        fc = _FnCompiler(ctx, d.name, d.params, [], d.body, fn_indexes)
        functions.append(fc.compile())
    for lf in lifted:
        fc = _FnCompiler(ctx, lf.name, lf.params, lf.captures, lf.body, fn_indexes)
        functions.append(fc.compile())
    entry = fn_indexes["main"]
    return Module(functions, ctx.pool.strings, entry)


def compile_source(source):
    from .parser import parse_source
    from .checker import check
    prog = parse_source(source)
    errs = check(prog)
    if errs:
        raise ValueError("check failed: %s" % "; ".join(str(e) for e in errs))
    return compile_program(prog)
