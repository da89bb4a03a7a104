"""Module <-> guest-value encoding, and the value-to-source printer used to
splice reified modules into generated wrapper programs.

Encoding: a module is a list of function tuples
(name, arity, n_slots, code, line_table) followed by a final
("entry", index) tuple; an instruction is (opcode_name, immediates) with
string-pool entries inlined and MAKE_CLOSURE capture slots flattened
after the function index.
"""

from .values import (
    UNIT, NIL, Cons, guest_list, iter_list, format_string,
)
from .bytecode import OPNAMES, OPCODES, Module, FuncBC


def _reify_instr(instr, constants):
    op = instr[0]
    name = OPNAMES[op]
    imms = []
    if name == "PUSH_STR":
        imms = [constants[instr[1]]]
    elif name == "TEST_STR":
        imms = [constants[instr[1]], instr[2]]
    elif name == "MAKE_CLOSURE":
        imms = [instr[1]] + list(instr[2])
    elif name == "CALL_BUILTIN":
        imms = [instr[1], instr[2]]
    else:
        imms = list(instr[1:])
    return (name, guest_list(imms))


def reify(module):
    items = []
    for f in module.functions:
        code = guest_list(_reify_instr(i, module.constants) for i in f.code)
        lt = guest_list(f.line_table)
        items.append((f.name, f.arity, f.n_slots, code, lt))
    items.append(("entry", module.entry))
    return guest_list(items)


def decode_reified(v):
    """Inverse of reify (host-side; used by tests)."""
    items = list(iter_list(v))
    if not items or not (isinstance(items[-1], tuple) and items[-1][0] == "entry"):
        raise ValueError("missing entry marker")
    entry = items[-1][1]
    constants = []
    index = {}

    def intern(s):
        if s not in index:
            index[s] = len(constants)
            constants.append(s)
        return index[s]

    functions = []
    for it in items[:-1]:
        name, arity, n_slots, code_v, lt_v = it
        code = []
        for instr_v in iter_list(code_v):
            opname, imms_v = instr_v
            imms = list(iter_list(imms_v))
            op = OPCODES[opname]
            if opname == "PUSH_STR":
                code.append((op, intern(imms[0])))
            elif opname == "TEST_STR":
                code.append((op, intern(imms[0]), imms[1]))
            elif opname == "MAKE_CLOSURE":
                code.append((op, imms[0], tuple(imms[1:])))
            elif opname == "CALL_BUILTIN":
                code.append((op, imms[0], imms[1]))
            else:
                code.append((op,) + tuple(imms))
        functions.append(FuncBC(name, arity, n_slots, code, list(iter_list(lt_v))))
    return Module(functions, constants, entry)


def value_to_source(v):
    """Render a guest value as GL source that parses and evaluates back to
    an equal value.  Only data values (no closures/pids/refs) are
    renderable."""
    out = []
    _render(v, out)
    return "".join(out)


def _render(v, out):
    if isinstance(v, bool):
        out.append("true" if v else "false")
    elif isinstance(v, int):
        if v < 0:
            out.append("(0 - %d)" % -v)
        else:
            out.append(str(v))
    elif isinstance(v, str):
        out.append(format_string(v))
    elif v is UNIT:
        out.append("()")
    elif v is NIL or isinstance(v, Cons):
        out.append("[")
        first = True
        while isinstance(v, Cons):
            if not first:
                out.append(", ")
            first = False
            _render(v.head, out)
            v = v.tail
        if v is not NIL:
            raise TypeError("improper list")
        out.append("]")
    elif isinstance(v, tuple):
        out.append("(")
        for i, x in enumerate(v):
            if i:
                out.append(", ")
            _render(x, out)
        if len(v) == 1:
            out.append(",")
        out.append(")")
    else:
        raise TypeError("not renderable as source: %r" % (v,))
