"""Builtin surface shared by the checker, both engines, and the compiler.

Every builtin costs the 1 reduction of its call instruction plus a
surcharge (only host_map has one: the list length)."""

BUILTIN_ARITY = {
    "print": 1,
    "vtime": 0,
    "mem_used": 0,
    "stacktrace": 0,
    "fun_id": 1,
    "self": 0,
    "spawn": 1,
    "send": 2,
    "__recv_fetch": 0,
    "__recv_accept": 0,
    "__recv_reset": 0,
    "host_map": 2,
    "ref": 1,
    "get": 1,
    "set": 2,
    "sys_info": 1,
    "type_of": 1,
    "str_len": 1,
    "tuple_size": 1,
    "tuple_get": 2,
    "tuple_make": 1,
}

SPAWN_ALLOC = 8
REDUCTIONS_PER_SLICE = 100
SYS_INFO = {"version": "gl-1", "mode": "native"}
