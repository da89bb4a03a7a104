"""Guest value universe: construction, equality, sizing, canonical text.

Scalars reuse host representations (int/bool/str), everything else is a
dedicated class.  bool must always be tested before int because of the
host subclass relationship.
"""

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class Unit:
    __slots__ = ()

    def __repr__(self):
        return "Unit"


UNIT = Unit()


class Nil:
    __slots__ = ()

    def __repr__(self):
        return "Nil"


NIL = Nil()


class Cons:
    __slots__ = ("head", "tail")

    def __init__(self, head, tail):
        self.head = head
        self.tail = tail

    def __repr__(self):
        return "Cons(%r, %r)" % (self.head, self.tail)


class Closure:
    """Function value.  `code` is engine-specific (bytecode function index
    or an annotated lambda/function node); identity is (owner_pid, closure_id).
    `captures` is the capture vector in lifted order."""

    __slots__ = ("name", "arity", "captures", "closure_id", "owner_pid", "code")

    def __init__(self, name, arity, captures, closure_id, owner_pid, code):
        self.name = name
        self.arity = arity
        self.captures = captures
        self.closure_id = closure_id
        self.owner_pid = owner_pid
        self.code = code

    def __repr__(self):
        return "<fun:%s/%d#%d>" % (self.name, self.arity, self.closure_id)


class Pid:
    __slots__ = ("n",)

    def __init__(self, n):
        self.n = n

    def __repr__(self):
        return "<pid:%d>" % self.n


class Ref:
    __slots__ = ("cell_id",)

    def __init__(self, cell_id):
        self.cell_id = cell_id

    def __repr__(self):
        return "<ref:%d>" % self.cell_id


def is_list(v):
    return v is NIL or isinstance(v, Cons)


def guest_list(items):
    """Build a proper guest list from a host iterable."""
    out = NIL
    for x in reversed(list(items)):
        out = Cons(x, out)
    return out


def iter_list(v):
    """Iterate a proper guest list; raises ValueError on improper lists."""
    while isinstance(v, Cons):
        yield v.head
        v = v.tail
    if v is not NIL:
        raise ValueError("improper list")


def list_length(v):
    n = 0
    while isinstance(v, Cons):
        n += 1
        v = v.tail
    if v is not NIL:
        raise ValueError("improper list")
    return n


def value_equal(a, b):
    """Structural equality; closures compare by (owner pid, closure id),
    refs by cell id.  Never errors."""
    stack = [(a, b)]
    while stack:
        a, b = stack.pop()
        if isinstance(a, bool) or isinstance(b, bool):
            if not (isinstance(a, bool) and isinstance(b, bool) and a == b):
                return False
        elif isinstance(a, int):
            if not (isinstance(b, int) and a == b):
                return False
        elif isinstance(a, str):
            if not (isinstance(b, str) and a == b):
                return False
        elif a is UNIT:
            if b is not UNIT:
                return False
        elif a is NIL:
            if b is not NIL:
                return False
        elif isinstance(a, Cons):
            if not isinstance(b, Cons):
                return False
            stack.append((a.tail, b.tail))
            stack.append((a.head, b.head))
        elif isinstance(a, tuple):
            if not (isinstance(b, tuple) and len(a) == len(b)):
                return False
            stack.extend(zip(a, b))
        elif isinstance(a, Closure):
            if not isinstance(b, Closure):
                return False
            if a.owner_pid != b.owner_pid or a.closure_id != b.closure_id:
                return False
        elif isinstance(a, Pid):
            if not (isinstance(b, Pid) and a.n == b.n):
                return False
        elif isinstance(a, Ref):
            if not (isinstance(b, Ref) and a.cell_id == b.cell_id):
                return False
        else:
            raise TypeError("not a guest value: %r" % (a,))
    return True


def value_size(v):
    """Allocation units of a value.  Scalars and pids are free; strings cost
    their byte length; a tuple costs (n+1) plus children; each cons cell
    costs 2 plus its head; a closure costs (k+2) plus captures; a ref costs
    its cell only."""
    total = 0
    stack = [v]
    while stack:
        v = stack.pop()
        if isinstance(v, bool) or isinstance(v, int) or v is UNIT or isinstance(v, Pid):
            pass
        elif isinstance(v, str):
            total += len(v.encode("utf-8"))
        elif v is NIL:
            pass
        elif isinstance(v, Cons):
            while isinstance(v, Cons):
                total += 2
                stack.append(v.head)
                v = v.tail
            if v is not NIL:
                raise TypeError("improper list")
        elif isinstance(v, tuple):
            total += len(v) + 1
            stack.extend(v)
        elif isinstance(v, Closure):
            total += len(v.captures) + 2
            stack.extend(v.captures)
        elif isinstance(v, Ref):
            total += 1
        else:
            raise TypeError("not a guest value: %r" % (v,))
    return total


def format_string(s):
    out = ['"']
    for ch in s:
        if ch == '"' or ch == "\\":
            out.append("\\")
        out.append(ch)
    out.append('"')
    return "".join(out)


def format_value(v):
    """Canonical rendering, bit-exact across engines and trace files."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return format_string(v)
    if v is UNIT:
        return "()"
    if v is NIL or isinstance(v, Cons):
        parts = []
        while isinstance(v, Cons):
            parts.append(format_value(v.head))
            v = v.tail
        if v is not NIL:
            raise TypeError("improper list")
        return "[" + ", ".join(parts) + "]"
    if isinstance(v, tuple):
        if len(v) == 1:
            return "(" + format_value(v[0]) + ",)"
        return "(" + ", ".join(format_value(x) for x in v) + ")"
    if isinstance(v, Closure):
        return "<fun:%s/%d#%d>" % (v.name, v.arity, v.closure_id)
    if isinstance(v, Pid):
        return "<pid:%d>" % v.n
    if isinstance(v, Ref):
        return "<ref:%d>" % v.cell_id
    raise TypeError("not a guest value: %r" % (v,))


def contains_ref(v):
    """True if the value transitively holds a ref cell (closure captures
    included).  Such values cannot cross process boundaries."""
    stack = [v]
    while stack:
        v = stack.pop()
        if isinstance(v, Ref):
            return True
        if isinstance(v, Cons):
            stack.append(v.head)
            stack.append(v.tail)
        elif isinstance(v, tuple):
            stack.extend(v)
        elif isinstance(v, Closure):
            stack.extend(v.captures)
    return False


def type_name(v):
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, str):
        return "str"
    if v is UNIT:
        return "unit"
    if v is NIL or isinstance(v, Cons):
        return "list"
    if isinstance(v, tuple):
        return "tuple"
    if isinstance(v, Closure):
        return "closure"
    if isinstance(v, Pid):
        return "pid"
    if isinstance(v, Ref):
        return "ref"
    raise TypeError("not a guest value: %r" % (v,))
