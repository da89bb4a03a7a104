"""Tree-walking evaluator with bytecode-identical observables.

Every expression shape charges exactly the virtual instructions its
compiled form retires — same reductions, same allocation units, same
lines in stack traces, same preemption points.  Evaluation runs as a
stack of generators, one per call frame, so deep guest recursion never
grows the host stack; a generator performs one instruction (charge, then
effects) and yields a checkpoint, which is where the scheduler can cut a
slice.  Keep this file in lockstep with compiler.py.

The unchecked variant runs programs the static checker rejects: unbound
names become "unbound_variable" guest throws at the moment of use.
"""

from . import gl_ast as A
from .values import Closure, Cons, NIL, UNIT, guest_list, iter_list, value_equal
from .errors import HostError
from .builtins_table import BUILTIN_ARITY
from .compiler import lift_lambdas
from .vm import (
    World, RUNNABLE, BLOCKED, EXITED, CRASHED,
    _Fault, trace_to_guest, builtin_surcharge, call_builtin_simple,
    guest_add, guest_sub, guest_mul, guest_div, _want_int,
)

STEP = ("step",)

_BINOP_ARITH = {"+": guest_add, "-": guest_sub, "*": guest_mul, "/": guest_div}


class _Unwind(Exception):
    """Guest exception crossing evaluator frames, trace already captured."""

    def __init__(self, value, trace):
        super().__init__(value)
        self.value = value
        self.trace = trace


class _FnEntry:
    __slots__ = ("name", "params", "captures", "body", "line")

    def __init__(self, name, params, captures, body, line):
        self.name = name
        self.params = params
        self.captures = captures
        self.body = body
        self.line = line


class _Table:
    """Function layout identical to the compiled module: source defs in
    order, then lifted lambdas in encounter order."""

    def __init__(self, program, checked):
        self.checked = checked
        lifted = lift_lambdas(program)
        self.entries = [_FnEntry(d.name, d.params, [], d.body, d.line)
                        for d in program.defs]
        self.entries.extend(
            _FnEntry(lf.name, lf.params, lf.captures, lf.body, lf.line)
            for lf in lifted)
        self.fn_indexes = {d.name: i for i, d in enumerate(program.defs)}


class AstProc:
    def __init__(self, world, ctx, pid, fn_index, captures, args):
        self.world = world
        self.ctx = ctx
        self.pid = pid
        self.mailbox = []
        self.cursor = 0
        self.status = RUNNABLE
        self.reductions = 0
        self.alloc_units = 0
        self.next_closure_id = 0
        self.next_ref_id = 0
        self.ref_store = {}
        self.result = None
        self.crash_value = None
        self.crash_trace = None
        self.gens = []
        self.meta = []  # per frame: [function name, line of last instruction]
        self._send = None
        self._has_send = False
        self._pending = None
        self.push_call(fn_index, captures, args)

    # -- engine ------------------------------------------------------

    def push_call(self, fn_index, captures, args):
        ent = self.ctx.entries[fn_index]
        env = {}
        for p, a in zip(ent.params, args):
            env[p] = a
        for c, v in zip(ent.captures, captures):
            env[c] = v
        self.gens.append(self.eval_body(ent, env))
        self.meta.append([ent.name, ent.line])

    def instr(self, n, line):
        """Retire one virtual instruction costing n reductions."""
        self.meta[-1][1] = line
        self.reductions += n
        self.world.total_red += n
        self.world.host_instr += 1

    def charge_alloc(self, world, n):
        self.alloc_units += n
        world.host_alloc += n
        if world.audit:
            world.alloc_log.append((self.pid, n))

    def build_trace(self):
        return [(name, line) for name, line in reversed(self.meta)]

    def fault(self, value):
        return _Unwind(value, self.build_trace())

    def step(self, world):
        try:
            if self._pending is not None:
                exc = self._pending
                self._pending = None
                tok = self.gens[-1].throw(exc)
            elif self._has_send:
                v = self._send
                self._send = None
                self._has_send = False
                tok = self.gens[-1].send(v)
            else:
                tok = self.gens[-1].send(None)
        except _Unwind as u:
            self.gens.pop()
            self.meta.pop()
            if not self.gens:
                self.status = CRASHED
                self.crash_value = u.value
                self.crash_trace = u.trace
                world.crashes.append((self.pid, u.value, u.trace))
                return
            self._pending = u
            return
        kind = tok[0]
        if kind == "step":
            return
        if kind == "call":
            clo, args = tok[1], tok[2]
            self.push_call(clo.code, list(clo.captures), args)
            return
        if kind == "tailcall":
            self.gens.pop()
            self.meta.pop()
            clo, args = tok[1], tok[2]
            self.push_call(clo.code, list(clo.captures), args)
            return
        if kind == "ret":
            self.gens.pop()
            self.meta.pop()
            if not self.gens:
                self.status = EXITED
                self.result = tok[1]
                return
            self._send = tok[1]
            self._has_send = True
            return
        if kind == "block":
            if self.cursor >= len(self.mailbox):
                self.status = BLOCKED
            return
        raise AssertionError("bad token %r" % (tok,))

    # -- evaluation ----------------------------------------------------

    def eval_body(self, ent, env):
        v = yield from self.eval(ent.body, env, True)
        self.instr(1, ent.body.line)  # RET
        yield ("ret", v)

    def gen_make_closure(self, fn_index, captures, line):
        self.instr(1, line)  # MAKE_CLOSURE
        ent = self.ctx.entries[fn_index]
        c = Closure(ent.name, len(ent.params), captures,
                    self.next_closure_id, self.pid, fn_index)
        self.next_closure_id += 1
        self.charge_alloc(self.world, len(captures) + 2)
        yield STEP
        return c

    def eval(self, e, env, tail):
        ln = e.line
        if isinstance(e, A.IntLit):
            self.instr(1, ln)
            yield STEP
            return e.value
        if isinstance(e, A.BoolLit):
            self.instr(1, ln)
            yield STEP
            return e.value
        if isinstance(e, A.StrLit):
            self.instr(1, ln)
            self.charge_alloc(self.world, len(e.value.encode("utf-8")))
            yield STEP
            return e.value
        if isinstance(e, A.UnitLit):
            self.instr(1, ln)
            yield STEP
            return UNIT
        if isinstance(e, A.Var):
            if e.name in env:
                self.instr(1, ln)  # LOAD
                yield STEP
                return env[e.name]
            if e.name in self.ctx.fn_indexes:
                return (yield from self.gen_make_closure(
                    self.ctx.fn_indexes[e.name], [], ln))
            self.instr(1, ln)
            raise self.fault("unbound_variable")
        if isinstance(e, A.Let):
            bound = yield from self.eval(e.bound, env, False)
            self.instr(1, ln)  # STORE, or POP for `_`
            yield STEP
            if e.name == "_":
                return (yield from self.eval(e.body, env, tail))
            env2 = dict(env)
            env2[e.name] = bound
            return (yield from self.eval(e.body, env2, tail))
        if isinstance(e, A.If):
            cond = yield from self.eval(e.cond, env, False)
            self.instr(1, ln)  # JUMP_IF_FALSE
            if not isinstance(cond, bool):
                raise self.fault("type_error")
            yield STEP
            if cond is False:
                return (yield from self.eval(e.orelse, env, tail))
            v = yield from self.eval(e.then, env, tail)
            self.instr(1, ln)  # JUMP past the else branch
            yield STEP
            return v
        if isinstance(e, A.BinOp):
            left = yield from self.eval(e.left, env, False)
            right = yield from self.eval(e.right, env, False)
            return (yield from self.gen_binop(e.op, left, right, ln))
        if isinstance(e, A.TupleLit):
            vals = []
            for x in e.items:
                vals.append((yield from self.eval(x, env, False)))
            self.instr(1, ln)
            self.charge_alloc(self.world, len(vals) + 1)
            yield STEP
            return tuple(vals)
        if isinstance(e, A.ListLit):
            vals = []
            for x in e.items:
                vals.append((yield from self.eval(x, env, False)))
            self.instr(1, ln)
            self.charge_alloc(self.world, 2 * len(vals))
            yield STEP
            return guest_list(vals)
        if isinstance(e, A.Lambda):
            captures = [env[c] for c in e.captures]
            return (yield from self.gen_make_closure(
                e.lifted_index, captures, ln))
        if isinstance(e, A.Call):
            return (yield from self.eval_call(e, env, tail))
        if isinstance(e, A.Throw):
            v = yield from self.eval(e.value, env, False)
            self.instr(1, ln)  # THROW
            raise self.fault(v)
        if isinstance(e, A.TryCatch):
            return (yield from self.eval_try(e, env, tail))
        if isinstance(e, A.Match):
            subject = yield from self.eval(e.subject, env, False)
            matched, v = yield from self.try_arms(
                e.arms, subject, env, tail, receive=False, line=ln)
            if matched:
                return v
            self.instr(1, ln)  # PUSH_STR "match_error"
            self.charge_alloc(self.world, len(b"match_error"))
            yield STEP
            self.instr(1, ln)  # THROW
            raise self.fault("match_error")
        if isinstance(e, A.Receive):
            return (yield from self.eval_receive(e, env, tail))
        raise TypeError(e)

    def gen_binop(self, op, left, right, ln):
        self.instr(1, ln)
        try:
            if op in _BINOP_ARITH:
                result = _BINOP_ARITH[op](left, right)
            elif op == "<":
                result = _want_int(left) < _want_int(right)
            elif op == "<=":
                result = _want_int(left) <= _want_int(right)
            elif op == "==":
                result = value_equal(left, right)
            elif op == "!=":
                result = not value_equal(left, right)
            elif op == "++":
                if not (isinstance(left, str) and isinstance(right, str)):
                    raise _Fault("type_error")
                result = left + right
                self.charge_alloc(self.world, len(result.encode("utf-8")))
            elif op == "::":
                if not (right is NIL or isinstance(right, Cons)):
                    raise _Fault("type_error")
                self.charge_alloc(self.world, 2)
                result = Cons(left, right)
            else:
                raise TypeError(op)
        except _Fault as f:
            raise self.fault(f.value)
        yield STEP
        return result

    def eval_call(self, e, env, tail):
        ln = e.line
        callee = e.callee
        if isinstance(callee, A.Var) and callee.name not in env:
            name = callee.name
            if name in self.ctx.fn_indexes:
                clo = yield from self.gen_make_closure(
                    self.ctx.fn_indexes[name], [], callee.line)
            elif name in BUILTIN_ARITY:
                args = []
                for a in e.args:
                    args.append((yield from self.eval(a, env, False)))
                return (yield from self.gen_builtin(name, args, ln))
            else:
                self.instr(1, callee.line)
                raise self.fault("unbound_variable")
        else:
            clo = yield from self.eval(callee, env, False)
        args = []
        for a in e.args:
            args.append((yield from self.eval(a, env, False)))
        self.instr(1, ln)  # CALL / TAILCALL
        if not isinstance(clo, Closure):
            raise self.fault("type_error")
        if clo.arity != len(args):
            raise self.fault("bad_arity")
        if tail:
            yield ("tailcall", clo, args)
            raise AssertionError("resumed a discarded frame")
        v = yield ("call", clo, args)
        return v

    def gen_builtin(self, name, args, ln):
        if len(args) != BUILTIN_ARITY[name]:
            self.instr(1, ln)
            raise self.fault("bad_arity")
        if name == "__recv_fetch":
            while self.cursor >= len(self.mailbox):
                yield ("block",)
            self.instr(1, ln)
            v = self.mailbox[self.cursor]
            self.cursor += 1
            yield STEP
            return v
        self.instr(1 + builtin_surcharge(name, args), ln)
        if name == "host_map":
            lst, f = args
            try:
                items = list(iter_list(lst))
            except ValueError:
                raise self.fault("type_error")
            if not isinstance(f, Closure) or f.arity != 1:
                raise self.fault("type_error")
            yield STEP
            results = []
            for item in items:
                results.append((yield ("call", f, [item])))
            self.charge_alloc(self.world, 2 * len(results))
            return guest_list(results)
        try:
            v = call_builtin_simple(self.world, self, name, args)
        except _Fault as f:
            raise self.fault(f.value)
        yield STEP
        return v

    def eval_try(self, e, env, tail):
        ln = e.line
        self.instr(1, ln)  # TRY_PUSH
        yield STEP
        try:
            v = yield from self.eval(e.body, env, False)
        except _Unwind as u:
            self.instr(1, ln)  # STORE trace
            yield STEP
            self.instr(1, ln)  # STORE exception
            yield STEP
            env2 = dict(env)
            if e.exc_var != "_":
                env2[e.exc_var] = u.value
            if e.trace_var != "_":
                env2[e.trace_var] = trace_to_guest(u.trace)
            return (yield from self.eval(e.handler, env2, tail))
        self.instr(1, ln)  # TRY_POP
        yield STEP
        self.instr(1, ln)  # JUMP past the handler
        yield STEP
        return v

    def eval_receive(self, e, env, tail):
        ln = e.line
        self.instr(1, ln)  # RECV_RESET
        self.cursor = 0
        yield STEP
        while True:
            while self.cursor >= len(self.mailbox):
                yield ("block",)
            self.instr(1, ln)  # RECV_FETCH
            msg = self.mailbox[self.cursor]
            self.cursor += 1
            yield STEP
            matched, v = yield from self.try_arms(
                e.arms, msg, env, tail, receive=True, line=ln)
            if matched:
                return v
            self.instr(1, ln)  # POP the unmatched message
            yield STEP
            self.instr(1, ln)  # JUMP back to the fetch
            yield STEP

    def try_arms(self, arms, subject, env, tail, receive, line):
        for arm in arms:
            env2 = dict(env)
            ok = yield from self.match_pattern(
                arm.pattern, subject, env2, 0, arm.pattern.line)
            if not ok:
                continue
            if arm.guard is not None:
                g = yield from self.eval(arm.guard, env2, False)
                self.instr(1, arm.guard.line)  # JUMP_IF_FALSE
                if not isinstance(g, bool):
                    raise self.fault("type_error")
                yield STEP
                if g is False:
                    continue
            if receive:
                self.instr(1, arm.body.line)  # RECV_ACCEPT
                del self.mailbox[self.cursor - 1]
                self.cursor = 0
                yield STEP
            self.instr(1, arm.body.line)  # POP the subject
            yield STEP
            v = yield from self.eval(arm.body, env2, tail)
            self.instr(1, arm.body.line)  # JUMP past later arms
            yield STEP
            return True, v
        return False, None

    def match_pattern(self, p, v, env, rel, pat_line):
        """Mirror of the compiled peek tests: returns match success, having
        charged the tests plus, on failure, the cleanup pops."""
        ln = p.line
        if isinstance(p, A.PWildcard):
            return True
        if isinstance(p, A.PVar):
            self.instr(1, ln)  # DUP
            yield STEP
            self.instr(1, ln)  # STORE
            env[p.name] = v
            yield STEP
            return True
        if isinstance(p, (A.PInt, A.PBool, A.PStr, A.PUnit, A.PNil)):
            self.instr(1, ln)  # TEST_*
            yield STEP
            if _scalar_pattern_matches(p, v):
                return True
            yield from self.cleanup(rel, pat_line)
            return False
        if isinstance(p, A.PCons):
            self.instr(1, ln)  # TEST_CONS
            yield STEP
            if not isinstance(v, Cons):
                yield from self.cleanup(rel, pat_line)
                return False
            ok = yield from self.match_pattern(p.tail, v.tail, env,
                                               rel + 2, pat_line)
            if not ok:
                return False
            self.instr(1, ln)  # POP the tail
            yield STEP
            ok = yield from self.match_pattern(p.head, v.head, env,
                                               rel + 1, pat_line)
            if not ok:
                return False
            self.instr(1, ln)  # POP the head
            yield STEP
            return True
        if isinstance(p, A.PTuple):
            n = len(p.items)
            self.instr(1, ln)  # TEST_TUPLE
            yield STEP
            if not (isinstance(v, tuple) and len(v) == n):
                yield from self.cleanup(rel, pat_line)
                return False
            for i in range(n, 0, -1):
                ok = yield from self.match_pattern(p.items[i - 1], v[i - 1],
                                                   env, rel + i, pat_line)
                if not ok:
                    return False
                self.instr(1, ln)  # POP the component
                yield STEP
            return True
        raise TypeError(p)

    def cleanup(self, rel, pat_line):
        if rel == 0:
            return
        for _ in range(rel):
            self.instr(1, pat_line)  # POP an extracted component
            yield STEP
        self.instr(1, pat_line)  # JUMP to the next arm
        yield STEP


def _scalar_pattern_matches(p, v):
    if isinstance(p, A.PInt):
        return not isinstance(v, bool) and isinstance(v, int) and v == p.value
    if isinstance(p, A.PBool):
        return isinstance(v, bool) and v == p.value
    if isinstance(p, A.PStr):
        return isinstance(v, str) and v == p.value
    if isinstance(p, A.PUnit):
        return v is UNIT
    return v is NIL


def run_ast(program, checked=True, fuel=None, audit=False, world_setup=None):
    ctx = _Table(program, checked)
    if "main" not in ctx.fn_indexes:
        raise HostError("no main/0 function")
    main_idx = ctx.fn_indexes["main"]
    if ctx.entries[main_idx].params:
        raise HostError("main must take no parameters")
    world = World(fuel=fuel, audit=audit)

    def make_proc(world, pid, closure):
        return AstProc(world, ctx, pid, closure.code,
                       list(closure.captures), [])

    world.make_proc = make_proc
    main = AstProc(world, ctx, 0, main_idx, [], [])
    world.next_pid = 1
    world.add_proc(main)
    if world_setup is not None:
        world_setup(world)
    outcome = world.run()
    mode = "ast" if checked else "ast-unchecked"
    return world.report(mode, outcome)
