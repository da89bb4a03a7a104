"""Deterministic execution engine.

One World is single-threaded.  Scheduling is round-robin over a run queue
in spawn order: the head process runs until it has consumed 100
reductions in its slice (each retired instruction is 1 reduction plus the
builtin surcharge), blocks, or terminates, then rotates to the tail.
Processes unblocked by message arrival are appended in unblocking order.

Guest faults (division by zero, overflow, type errors, bad sends, ...)
are guest exceptions and become crash outcomes; HostError is reserved for
malformed modules.
"""

from .values import (
    UNIT, NIL, Cons, Closure, Pid, Ref, guest_list, iter_list,
    value_equal, value_size, contains_ref, type_name,
    INT_MIN, INT_MAX,
)
from .errors import HostError
from .builtins_table import (
    BUILTIN_ARITY, SPAWN_ALLOC, REDUCTIONS_PER_SLICE, SYS_INFO,
)
from . import bytecode as B

OP = B.OPCODES

RUNNABLE = "runnable"
BLOCKED = "blocked"
EXITED = "exited"
CRASHED = "crashed"

_PENDING_NONE = object()


class GuestThrow(Exception):
    """A guest-level exception in flight: value plus the guest stack trace
    captured at the throw point (innermost first)."""

    def __init__(self, value, trace):
        super().__init__(value)
        self.value = value
        self.trace = trace


class Frame:
    __slots__ = ("fn", "code", "lines", "ip", "locals", "stack", "handlers")

    def __init__(self, fn, code, lines, locals_):
        self.fn = fn
        self.code = code
        self.lines = lines
        self.ip = 0
        self.locals = locals_
        self.stack = []
        self.handlers = []


class MapFrame:
    """Continuation record for an in-progress host_map: lets callback
    frames run under normal scheduling instead of host recursion."""

    __slots__ = ("closure", "items", "idx", "results", "pending", "line")

    def __init__(self, closure, items, line):
        self.closure = closure
        self.items = items
        self.idx = 0
        self.results = []
        self.pending = _PENDING_NONE
        self.line = line


def trace_to_guest(trace):
    return guest_list(tuple(entry) for entry in trace)


class RunReport:
    def __init__(self, mode, outcome, prints, crashes, meters,
                 host_instr, host_alloc):
        self.mode = mode
        self.outcome = outcome
        self.prints = prints
        self.crashes = crashes
        self.meters = meters
        self.host_instr = host_instr
        self.host_alloc = host_alloc


class World:
    def __init__(self, fuel=None, audit=False):
        self.processes = {}
        self.runq = []
        self.next_pid = 0
        self.prints = []
        self.crashes = []
        self.host_instr = 0
        self.host_alloc = 0
        self.total_red = 0
        self.fuel = fuel
        self.audit = audit
        self.opcode_coverage = set()
        self.alloc_log = []
        self.make_proc = None  # engine hook: (world, pid, closure) -> proc
        self.max_seconds = None
        self._deadline = None

    def add_proc(self, proc):
        self.processes[proc.pid] = proc
        self.runq.append(proc.pid)

    def spawn_closure(self, closure):
        pid = self.next_pid
        self.next_pid += 1
        proc = self.make_proc(self, pid, closure)
        self.add_proc(proc)
        return pid

    def deliver(self, target_pid, value):
        proc = self.processes[target_pid]
        if proc.status in (EXITED, CRASHED):
            return
        proc.mailbox.append(value)
        if proc.status == BLOCKED:
            proc.status = RUNNABLE
            self.runq.append(proc.pid)

    def run(self):
        if self.max_seconds is not None:
            import time
            self._deadline = time.monotonic() + self.max_seconds
        while self.runq:
            pid = self.runq[0]
            proc = self.processes[pid]
            start = proc.reductions
            while (proc.status == RUNNABLE
                   and proc.reductions - start < REDUCTIONS_PER_SLICE):
                if self.fuel is not None and self.total_red >= self.fuel:
                    return ("fuel_exhausted",)
                proc.step(self)
            if self._deadline is not None:
                import time
                if time.monotonic() > self._deadline:
                    raise TimeoutError("run exceeded max_seconds")
            self.runq.pop(0)
            if proc.status == RUNNABLE:
                self.runq.append(pid)
        main = self.processes[0]
        if main.status == EXITED:
            return ("value", main.result)
        if main.status == CRASHED:
            return ("crash", main.crash_value, main.crash_trace)
        blocked = sorted(p for p, pr in self.processes.items()
                         if pr.status == BLOCKED)
        return ("deadlock", blocked)

    def report(self, mode, outcome):
        meters = [(pid, self.processes[pid].reductions,
                   self.processes[pid].alloc_units)
                  for pid in sorted(self.processes)]
        report = RunReport(mode, outcome, list(self.prints),
                           list(self.crashes), meters, self.host_instr,
                           self.host_alloc)
        report.coverage = set(self.opcode_coverage)
        report.alloc_log = list(self.alloc_log)
        return report


# -- arithmetic ---------------------------------------------------------


def _want_int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise_guest("type_error")
    return v


def _check_range(n):
    if n < INT_MIN or n > INT_MAX:
        raise _Fault("arith_error")
    return n


class _Fault(Exception):
    """Internal: a guest fault without a trace yet; the engine attaches the
    trace at the faulting instruction."""

    def __init__(self, value):
        self.value = value


def raise_guest(value):
    raise _Fault(value)


def guest_add(a, b):
    return _check_range(_want_int(a) + _want_int(b))


def guest_sub(a, b):
    return _check_range(_want_int(a) - _want_int(b))


def guest_mul(a, b):
    return _check_range(_want_int(a) * _want_int(b))


def guest_div(a, b):
    a = _want_int(a)
    b = _want_int(b)
    if b == 0:
        raise _Fault("arith_error")
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return _check_range(q)


# -- builtins ------------------------------------------------------------


def builtin_surcharge(name, args):
    if name == "host_map":
        v = args[0]
        n = 0
        while isinstance(v, Cons):
            n += 1
            v = v.tail
        if v is not NIL:
            return 0
        return n
    return 0


def call_builtin_simple(world, proc, name, args):
    """Builtins shared verbatim by both engines.  host_map and
    __recv_fetch are engine-specific.  Raises _Fault for guest faults."""
    if name == "print":
        s = args[0]
        if not isinstance(s, str):
            raise _Fault("type_error")
        world.prints.append((proc.pid, s))
        return UNIT
    if name == "vtime":
        return proc.reductions
    if name == "mem_used":
        return proc.alloc_units
    if name == "stacktrace":
        gv = trace_to_guest(proc.build_trace())
        proc.charge_alloc(world, value_size(gv))
        return gv
    if name == "fun_id":
        f = args[0]
        if not isinstance(f, Closure):
            raise _Fault("type_error")
        return f.closure_id
    if name == "self":
        return Pid(proc.pid)
    if name == "spawn":
        f = args[0]
        if not isinstance(f, Closure) or f.arity != 0:
            raise _Fault("type_error")
        if contains_ref(f):
            raise _Fault("type_error")
        proc.charge_alloc(world, SPAWN_ALLOC)
        pid = world.spawn_closure(f)
        return Pid(pid)
    if name == "send":
        p, v = args
        if not isinstance(p, Pid):
            raise _Fault("type_error")
        if p.n not in world.processes:
            raise _Fault("bad_pid")
        if contains_ref(v):
            raise _Fault("type_error")
        proc.charge_alloc(world, value_size(v))
        world.deliver(p.n, v)
        return v
    if name == "__recv_accept":
        if proc.cursor == 0:
            raise _Fault("type_error")
        del proc.mailbox[proc.cursor - 1]
        proc.cursor = 0
        return UNIT
    if name == "__recv_reset":
        proc.cursor = 0
        return UNIT
    if name == "ref":
        v = args[0]
        cell = proc.next_ref_id
        proc.next_ref_id += 1
        proc.charge_alloc(world, 1 + value_size(v))
        proc.ref_store[cell] = v
        return Ref(cell)
    if name == "get":
        r = args[0]
        if not isinstance(r, Ref) or r.cell_id not in proc.ref_store:
            raise _Fault("type_error")
        return proc.ref_store[r.cell_id]
    if name == "set":
        r, v = args
        if not isinstance(r, Ref) or r.cell_id not in proc.ref_store:
            raise _Fault("type_error")
        proc.charge_alloc(world, value_size(v))
        proc.ref_store[r.cell_id] = v
        return UNIT
    if name == "sys_info":
        k = args[0]
        if not isinstance(k, str) or k not in SYS_INFO:
            raise _Fault("type_error")
        return SYS_INFO[k]
    if name == "type_of":
        return type_name(args[0])
    if name == "str_len":
        s = args[0]
        if not isinstance(s, str):
            raise _Fault("type_error")
        return len(s.encode("utf-8"))
    if name == "tuple_size":
        t = args[0]
        if not isinstance(t, tuple):
            raise _Fault("type_error")
        return len(t)
    if name == "tuple_get":
        t, i = args
        if not isinstance(t, tuple) or isinstance(i, bool) \
                or not isinstance(i, int) or not (0 <= i < len(t)):
            raise _Fault("type_error")
        return t[i]
    if name == "tuple_make":
        try:
            items = list(iter_list(args[0]))
        except ValueError:
            raise _Fault("type_error")
        proc.charge_alloc(world, len(items) + 1)
        return tuple(items)
    raise AssertionError("unknown builtin %s" % name)


# -- bytecode process ----------------------------------------------------


class ProcessState:
    def __init__(self, world, pid, module, fn_index, captures):
        self.pid = pid
        self.module = module
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
        self.frames = []
        self.push_call(fn_index, list(captures), [])

    def push_call(self, fn_index, captures, args):
        f = self.module.functions[fn_index]
        locals_ = args + captures
        locals_.extend([UNIT] * (f.n_slots - len(locals_)))
        self.frames.append(Frame(fn_index, f.code, f.line_table, locals_))

    def charge(self, world, n):
        self.reductions += n
        world.total_red += n

    def charge_alloc(self, world, n):
        self.alloc_units += n
        world.host_alloc += n
        if world.audit:
            world.alloc_log.append((self.pid, n))

    def build_trace(self):
        out = []
        for f in reversed(self.frames):
            if isinstance(f, MapFrame):
                continue
            name = self.module.functions[f.fn].name
            line = f.lines[f.ip - 1] if f.ip > 0 else f.lines[0]
            out.append((name, line))
        return out

    def make_closure(self, world, fn_index, captures):
        f = self.module.functions[fn_index]
        c = Closure(f.name, f.arity, captures, self.next_closure_id,
                    self.pid, fn_index)
        self.next_closure_id += 1
        self.charge_alloc(world, len(captures) + 2)
        return c

    def _exit(self, value):
        self.status = EXITED
        self.result = value

    def unwind(self, world, value, trace):
        while self.frames:
            top = self.frames[-1]
            if isinstance(top, MapFrame):
                self.frames.pop()
                continue
            if top.handlers:
                target, height = top.handlers.pop()
                del top.stack[height:]
                top.stack.append(value)
                top.stack.append(trace_to_guest(trace))
                top.ip = target
                return
            self.frames.pop()
        self.status = CRASHED
        self.crash_value = value
        self.crash_trace = trace
        world.crashes.append((self.pid, value, trace))

    def _return(self, world, value):
        self.frames.pop()
        if not self.frames:
            self._exit(value)
            return
        below = self.frames[-1]
        if isinstance(below, MapFrame):
            below.pending = value
        else:
            below.stack.append(value)

    def step(self, world):
        frame = self.frames[-1]
        if isinstance(frame, MapFrame):
            self._step_map(world, frame)
            return
        code = frame.code
        ip = frame.ip
        instr = code[ip]
        op = instr[0]

        # a fetch on an exhausted mailbox blocks without retiring
        if op == OP["RECV_FETCH"] or (op == OP["CALL_BUILTIN"]
                                      and instr[1] == "__recv_fetch"):
            if self.cursor >= len(self.mailbox):
                self.status = BLOCKED
                return

        frame.ip = ip + 1
        world.host_instr += 1
        if world.audit:
            world.opcode_coverage.add(B.OPNAMES[op])
        stack = frame.stack
        try:
            if op == OP["LOAD"]:
                self.charge(world, 1)
                stack.append(frame.locals[instr[1]])
            elif op == OP["PUSH_INT"]:
                self.charge(world, 1)
                stack.append(instr[1])
            elif op == OP["STORE"]:
                self.charge(world, 1)
                frame.locals[instr[1]] = stack.pop()
            elif op == OP["JUMP"]:
                self.charge(world, 1)
                frame.ip = instr[1]
            elif op == OP["JUMP_IF_FALSE"]:
                self.charge(world, 1)
                v = stack.pop()
                if not isinstance(v, bool):
                    raise _Fault("type_error")
                if v is False:
                    frame.ip = instr[1]
            elif op == OP["CALL"] or op == OP["TAILCALL"]:
                self.charge(world, 1)
                n = instr[1]
                args = stack[len(stack) - n:]
                del stack[len(stack) - n:]
                callee = stack.pop()
                if not isinstance(callee, Closure):
                    raise _Fault("type_error")
                if callee.arity != n:
                    raise _Fault("bad_arity")
                if op == OP["TAILCALL"]:
                    self.frames.pop()
                self.push_call(callee.code, list(callee.captures), args)
            elif op == OP["RET"]:
                self.charge(world, 1)
                self._return(world, stack.pop())
            elif op == OP["CALL_BUILTIN"]:
                self._builtin(world, frame, instr[1], instr[2])
            elif op == OP["PUSH_BOOL"]:
                self.charge(world, 1)
                stack.append(instr[1])
            elif op == OP["PUSH_STR"]:
                self.charge(world, 1)
                s = self.module.constants[instr[1]]
                self.charge_alloc(world, len(s.encode("utf-8")))
                stack.append(s)
            elif op == OP["PUSH_UNIT"]:
                self.charge(world, 1)
                stack.append(UNIT)
            elif op == OP["POP"]:
                self.charge(world, 1)
                stack.pop()
            elif op == OP["DUP"]:
                self.charge(world, 1)
                stack.append(stack[-1])
            elif op == OP["MAKE_CLOSURE"]:
                self.charge(world, 1)
                captures = [frame.locals[s] for s in instr[2]]
                stack.append(self.make_closure(world, instr[1], captures))
            elif op == OP["MAKE_TUPLE"]:
                self.charge(world, 1)
                n = instr[1]
                items = tuple(stack[len(stack) - n:])
                del stack[len(stack) - n:]
                self.charge_alloc(world, n + 1)
                stack.append(items)
            elif op == OP["MAKE_LIST"]:
                self.charge(world, 1)
                n = instr[1]
                items = stack[len(stack) - n:]
                del stack[len(stack) - n:]
                self.charge_alloc(world, 2 * n)
                stack.append(guest_list(items))
            elif op == OP["CONS"]:
                self.charge(world, 1)
                tail = stack.pop()
                head = stack.pop()
                if not (tail is NIL or isinstance(tail, Cons)):
                    raise _Fault("type_error")
                self.charge_alloc(world, 2)
                stack.append(Cons(head, tail))
            elif op == OP["ADD"]:
                self.charge(world, 1)
                b = stack.pop()
                stack.append(guest_add(stack.pop(), b))
            elif op == OP["SUB"]:
                self.charge(world, 1)
                b = stack.pop()
                stack.append(guest_sub(stack.pop(), b))
            elif op == OP["MUL"]:
                self.charge(world, 1)
                b = stack.pop()
                stack.append(guest_mul(stack.pop(), b))
            elif op == OP["DIV"]:
                self.charge(world, 1)
                b = stack.pop()
                stack.append(guest_div(stack.pop(), b))
            elif op == OP["LT"]:
                self.charge(world, 1)
                b = stack.pop()
                stack.append(_want_int(stack.pop()) < _want_int(b))
            elif op == OP["LE"]:
                self.charge(world, 1)
                b = stack.pop()
                stack.append(_want_int(stack.pop()) <= _want_int(b))
            elif op == OP["EQ"]:
                self.charge(world, 1)
                b = stack.pop()
                stack.append(value_equal(stack.pop(), b))
            elif op == OP["NE"]:
                self.charge(world, 1)
                b = stack.pop()
                stack.append(not value_equal(stack.pop(), b))
            elif op == OP["CONCAT"]:
                self.charge(world, 1)
                b = stack.pop()
                a = stack.pop()
                if not (isinstance(a, str) and isinstance(b, str)):
                    raise _Fault("type_error")
                s = a + b
                self.charge_alloc(world, len(s.encode("utf-8")))
                stack.append(s)
            elif op == OP["THROW"]:
                self.charge(world, 1)
                v = stack.pop()
                raise _Fault(v)
            elif op == OP["TRY_PUSH"]:
                self.charge(world, 1)
                frame.handlers.append((instr[1], len(stack)))
            elif op == OP["TRY_POP"]:
                self.charge(world, 1)
                frame.handlers.pop()
            elif op == OP["TEST_INT"]:
                self.charge(world, 1)
                v = stack[-1]
                if isinstance(v, bool) or not isinstance(v, int) or v != instr[1]:
                    frame.ip = instr[2]
            elif op == OP["TEST_BOOL"]:
                self.charge(world, 1)
                v = stack[-1]
                if not isinstance(v, bool) or v != instr[1]:
                    frame.ip = instr[2]
            elif op == OP["TEST_STR"]:
                self.charge(world, 1)
                v = stack[-1]
                if not isinstance(v, str) or v != self.module.constants[instr[1]]:
                    frame.ip = instr[2]
            elif op == OP["TEST_UNIT"]:
                self.charge(world, 1)
                if stack[-1] is not UNIT:
                    frame.ip = instr[1]
            elif op == OP["TEST_NIL"]:
                self.charge(world, 1)
                if stack[-1] is not NIL:
                    frame.ip = instr[1]
            elif op == OP["TEST_CONS"]:
                self.charge(world, 1)
                v = stack[-1]
                if isinstance(v, Cons):
                    stack.append(v.head)
                    stack.append(v.tail)
                else:
                    frame.ip = instr[1]
            elif op == OP["TEST_TUPLE"]:
                self.charge(world, 1)
                v = stack[-1]
                if isinstance(v, tuple) and len(v) == instr[1]:
                    stack.extend(v)
                else:
                    frame.ip = instr[2]
            elif op == OP["RECV_FETCH"]:
                self.charge(world, 1)
                stack.append(self.mailbox[self.cursor])
                self.cursor += 1
            elif op == OP["RECV_ACCEPT"]:
                self.charge(world, 1)
                if self.cursor == 0:
                    raise _Fault("type_error")
                del self.mailbox[self.cursor - 1]
                self.cursor = 0
            elif op == OP["RECV_RESET"]:
                self.charge(world, 1)
                self.cursor = 0
            else:
                raise HostError("unknown opcode %d" % op)
        except _Fault as f:
            self.unwind(world, f.value, self.build_trace())

    def _builtin(self, world, frame, name, argc):
        stack = frame.stack
        args = stack[len(stack) - argc:]
        del stack[len(stack) - argc:]
        self.charge(world, 1 + builtin_surcharge(name, args))
        if name == "__recv_fetch":
            # non-empty here: the blocking case returned before retiring
            stack.append(self.mailbox[self.cursor])
            self.cursor += 1
            return
        if name == "host_map":
            lst, f = args
            try:
                items = list(iter_list(lst))
            except ValueError:
                raise _Fault("type_error")
            if not isinstance(f, Closure) or f.arity != 1:
                raise _Fault("type_error")
            self.frames.append(MapFrame(f, items, frame.lines[frame.ip - 1]))
            return
        stack.append(call_builtin_simple(world, self, name, args))

    def _step_map(self, world, mf):
        # bookkeeping steps retire nothing; each either pushes a charged
        # guest frame or completes the map
        if mf.pending is not _PENDING_NONE:
            mf.results.append(mf.pending)
            mf.pending = _PENDING_NONE
        if mf.idx < len(mf.items):
            item = mf.items[mf.idx]
            mf.idx += 1
            self.push_call(mf.closure.code, list(mf.closure.captures), [item])
            return
        result = guest_list(mf.results)
        self.charge_alloc(world, 2 * len(mf.results))
        self.frames.pop()
        below = self.frames[-1]
        if isinstance(below, MapFrame):
            below.pending = result
        else:
            below.stack.append(result)


# -- engine entry points --------------------------------------------------


def run_module(module, fuel=None, audit=False, world_setup=None,
               max_seconds=None):
    B.validate(module)
    world = World(fuel=fuel, audit=audit)
    world.max_seconds = max_seconds

    def make_proc(world, pid, closure):
        return ProcessState(world, pid, module, closure.code, closure.captures)

    world.make_proc = make_proc
    main = ProcessState(world, 0, module, module.entry, [])
    world.next_pid = 1
    world.add_proc(main)
    if world_setup is not None:
        world_setup(world)
    outcome = world.run()
    return world.report("bytecode", outcome)


def run(source_or_module, mode="bytecode", fuel=None, audit=False,
        world_setup=None, max_seconds=None):
    """Execute a Module (bytecode mode) or a Program AST (ast modes)."""
    if mode == "bytecode":
        return run_module(source_or_module, fuel=fuel, audit=audit,
                          world_setup=world_setup, max_seconds=max_seconds)
    if mode in ("ast", "ast-unchecked"):
        from .asteval import run_ast
        return run_ast(source_or_module, checked=(mode == "ast"), fuel=fuel,
                       audit=audit, world_setup=world_setup)
    raise ValueError("unknown mode %r" % mode)
