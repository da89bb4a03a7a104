"""Run a compiled module under the in-language self-emulator.

The emulator lives in assets/selfemu.gl.  A run is staged by appending a
one-line `main` that hands the emulator the reified module as a literal,
executing that combined program on the ordinary engine, and projecting
the value it returns back into a RunReport.

Emulated closure, pid and ref values travel as tagged tuples; this module
converts them back to real runtime objects so both report serializations
format identically.  Sabotaged emulator variants are produced by a line
preprocessor over the `#HOOK:` markers in the asset.
"""

from pathlib import Path

from . import vm
from .compiler import compile_source
from .reify import reify, value_to_source
from .values import Closure, Pid, Ref, Cons, NIL, guest_list, iter_list

ASSET_PATH = Path(__file__).parent / "assets" / "selfemu.gl"

# marker name -> the hook function it controls
HOOKS = ("clock", "memory", "stacktrace", "fun_id", "sys_info")

MARKER = "#emu:pid "


class SelfEmuError(Exception):
    """The emulator itself misbehaved (crashed, deadlocked, or returned a
    value that does not decode as a run record)."""

    def __init__(self, message, host_report=None):
        super().__init__(message)
        self.host_report = host_report


def asset_source():
    return ASSET_PATH.read_text()


def sabotaged_source(source, sabotage):
    """Rewrite each selected hook so it answers with the stripped
    replacement given after its #HOOK: marker."""
    unknown = set(sabotage) - set(HOOKS)
    if unknown:
        raise ValueError("unknown sabotage hooks: %s" % sorted(unknown))
    wanted = set(sabotage)
    seen = set()
    out = []
    for line in source.splitlines():
        idx = line.find("#HOOK:")
        if idx >= 0:
            name, _, replacement = line[idx + len("#HOOK:"):].partition(" ")
            seen.add(name)
            if name in wanted:
                head = line.split("=", 1)[0]
                line = head + "= " + replacement
        out.append(line)
    missing = wanted - seen
    if missing:
        raise SelfEmuError("hook markers missing from asset: %s"
                           % sorted(missing))
    return "\n".join(out) + "\n"


def wrapped_source(module, fuel=None, sabotage=()):
    source = asset_source()
    if sabotage:
        source = sabotaged_source(source, sabotage)
    literal = value_to_source(reify(module))
    if fuel is None:
        entry = "fn main() = emu_main(%s)\n" % literal
    else:
        entry = "fn main() = emu_fueled(%s, %d)\n" % (literal, fuel)
    return source + "\n" + entry


def _decode(v, module):
    """Convert marker tuples back into runtime closure/pid/ref objects."""
    if isinstance(v, tuple):
        if (len(v) == 5 and v[0] == "closure" and isinstance(v[1], int)
                and 0 <= v[1] < len(module.functions)):
            fn = module.functions[v[1]]
            caps = [_decode(c, module) for c in _decode_list(v[2], module)]
            return Closure(fn.name, fn.arity, caps, v[3], v[4], fn)
        if len(v) == 2 and v[0] == "pid" and isinstance(v[1], int):
            return Pid(v[1])
        if len(v) == 2 and v[0] == "ref" and isinstance(v[1], int):
            return Ref(v[1])
        return tuple(_decode(item, module) for item in v)
    if isinstance(v, Cons) or v is NIL:
        return guest_list([_decode(item, module)
                           for item in _decode_list(v, module)])
    return v


def _decode_list(v, module):
    try:
        return list(iter_list(v))
    except ValueError:
        raise SelfEmuError("emulator returned an improper list: %r" % (v,))


def _decode_trace(tr):
    out = []
    for item in iter_list(tr):
        if not (isinstance(item, tuple) and len(item) == 2):
            raise SelfEmuError("bad trace entry: %r" % (item,))
        out.append((item[0], item[1]))
    return out


def _decode_outcome(out, module):
    if not (isinstance(out, tuple) and out):
        raise SelfEmuError("bad emulated outcome: %r" % (out,))
    kind = out[0]
    if kind == "value" and len(out) == 2:
        return ("value", _decode(out[1], module))
    if kind == "crash" and len(out) == 3:
        return ("crash", _decode(out[1], module), _decode_trace(out[2]))
    if kind == "deadlock" and len(out) == 2:
        return ("deadlock", list(iter_list(out[1])))
    if kind == "fuel_exhausted" and len(out) == 1:
        return ("fuel_exhausted",)
    raise SelfEmuError("bad emulated outcome: %r" % (out,))


def _decode_prints(prints):
    """Emulated output arrives as strictly alternating marker/payload
    pairs; fold them back into (emulated pid, text) events."""
    out = []
    i = 0
    while i < len(prints):
        _, marker = prints[i]
        if not marker.startswith(MARKER) or i + 1 >= len(prints):
            raise SelfEmuError("malformed print stream at event %d" % i)
        try:
            epid = int(marker[len(MARKER):])
        except ValueError:
            raise SelfEmuError("malformed print marker: %r" % (marker,))
        out.append((epid, prints[i + 1][1]))
        i += 2
    return out


class EmulatedRun:
    """A projected report plus emulator-side diagnostics."""

    def __init__(self, report, max_host_depth, host_report):
        self.report = report
        self.max_host_depth = max_host_depth
        self.host_report = host_report


def project(module, host_report):
    outcome = host_report.outcome
    if outcome[0] != "value":
        raise SelfEmuError("emulator run ended in %s" % outcome[0],
                           host_report)
    v = outcome[1]
    if not (isinstance(v, tuple) and len(v) == 5 and v[0] == "emu"):
        raise SelfEmuError("emulator returned a non-record value",
                           host_report)
    _, out, crashes, meters, maxd = v
    decoded_crashes = []
    for item in _decode_list(crashes, module):
        if not (isinstance(item, tuple) and len(item) == 3):
            raise SelfEmuError("bad crash record: %r" % (item,), host_report)
        decoded_crashes.append((item[0], _decode(item[1], module),
                                _decode_trace(item[2])))
    decoded_meters = []
    for item in _decode_list(meters, module):
        if not (isinstance(item, tuple) and len(item) == 3):
            raise SelfEmuError("bad meter record: %r" % (item,), host_report)
        decoded_meters.append((item[0], item[1], item[2]))
    report = vm.RunReport("emulated",
                          _decode_outcome(out, module),
                          _decode_prints(host_report.prints),
                          decoded_crashes,
                          decoded_meters,
                          host_report.host_instr,
                          host_report.host_alloc)
    return EmulatedRun(report, maxd, host_report)


def run_emulated(module, fuel=None, sabotage=(), audit=False,
                 max_seconds=None, host_fuel=None):
    source = wrapped_source(module, fuel=fuel, sabotage=sabotage)
    try:
        emu_module = compile_source(source)
    except Exception as exc:
        raise SelfEmuError("emulator asset failed to compile: %s" % exc)
    host_report = vm.run_module(emu_module, fuel=host_fuel, audit=audit,
                                max_seconds=max_seconds)
    return project(module, host_report)
