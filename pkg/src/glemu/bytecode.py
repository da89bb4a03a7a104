"""Bytecode container types, opcode set, validation, and disassembly.

Instructions are plain tuples (opcode, *immediates).  Jump/test targets
are absolute instruction indices within the owning function.  TEST_*
instructions peek at the subject; TEST_CONS pushes head then tail above
it on success, TEST_TUPLE pushes the n children left to right.
"""

from dataclasses import dataclass, field
from .errors import HostError

_OPS = [
    "PUSH_INT", "PUSH_BOOL", "PUSH_STR", "PUSH_UNIT",
    "LOAD", "STORE", "POP", "DUP",
    "MAKE_CLOSURE", "CALL", "TAILCALL", "RET", "CALL_BUILTIN",
    "JUMP", "JUMP_IF_FALSE",
    "MAKE_TUPLE", "MAKE_LIST", "CONS",
    "ADD", "SUB", "MUL", "DIV", "LT", "LE", "EQ", "NE", "CONCAT",
    "THROW", "TRY_PUSH", "TRY_POP",
    "TEST_INT", "TEST_BOOL", "TEST_STR", "TEST_UNIT", "TEST_NIL",
    "TEST_CONS", "TEST_TUPLE",
    "RECV_FETCH", "RECV_ACCEPT", "RECV_RESET",
]

OPNAMES = list(_OPS)
OPCODES = {name: i for i, name in enumerate(_OPS)}
globals().update(OPCODES)  # e.g. PUSH_INT, LOAD, ...

# opcodes whose last immediate is a jump target
_TARGET_OPS = {
    OPCODES[n] for n in (
        "JUMP", "JUMP_IF_FALSE", "TRY_PUSH", "TEST_INT", "TEST_BOOL",
        "TEST_STR", "TEST_UNIT", "TEST_NIL", "TEST_CONS", "TEST_TUPLE")
}


@dataclass
class FuncBC:
    name: str
    arity: int
    n_slots: int
    code: list
    line_table: list


@dataclass
class Module:
    functions: list
    constants: list = field(default_factory=list)
    entry: int = 0


def validate(module):
    """Structural sanity; raises HostError on a malformed module."""
    names = [f.name for f in module.functions]
    if not (0 <= module.entry < len(module.functions)):
        raise HostError("bad entry index")
    entry = module.functions[module.entry]
    if entry.name != "main" or entry.arity != 0:
        raise HostError("entry must be main/0")
    for f in module.functions:
        if len(f.code) != len(f.line_table):
            raise HostError("line table length mismatch in %s" % f.name)
        if f.n_slots < f.arity:
            raise HostError("n_slots < arity in %s" % f.name)
        for i, instr in enumerate(f.code):
            op = instr[0]
            if not (0 <= op < len(OPNAMES)):
                raise HostError("bad opcode at %s:%d" % (f.name, i))
            if op in _TARGET_OPS:
                t = instr[-1]
                if not (0 <= t < len(f.code)):
                    raise HostError("bad jump target at %s:%d" % (f.name, i))
            if op == OPCODES["MAKE_CLOSURE"]:
                if not (0 <= instr[1] < len(module.functions)):
                    raise HostError("bad closure target at %s:%d" % (f.name, i))
        for ln in f.line_table:
            if ln < 1:
                raise HostError("line table entry < 1 in %s" % f.name)
    return module


def _fmt_arg(a):
    if isinstance(a, bool):
        return "true" if a else "false"
    if isinstance(a, tuple):
        return "[" + ", ".join(str(x) for x in a) + "]"
    return str(a)


def format_instr(instr):
    op = instr[0]
    parts = [OPNAMES[op]]
    parts.extend(_fmt_arg(a) for a in instr[1:])
    return " ".join(parts)


def disassemble(module):
    """One instruction per line: `IDX: OPCODE args ; line=N`, preceded by a
    `== name/arity slots=K ==` header per function."""
    lines = []
    for f in module.functions:
        lines.append("== %s/%d slots=%d ==" % (f.name, f.arity, f.n_slots))
        for i, instr in enumerate(f.code):
            lines.append("%d: %s ; line=%d" % (i, format_instr(instr), f.line_table[i]))
    return "\n".join(lines)
