"""Line-oriented run report format.

A report is the complete observable record of one run:

    MODE bytecode
    OUTCOME value 42
    PRINT 0 "hello"
    CRASH pid=1 value="oops" trace=[("f", 3), ("main", 1)]
    METER pid=0 red=17 alloc=5
    HOST instr=21 alloc=5

The weak projection drops MODE and HOST: those identify the engine, not
the program.  Serialization is canonical so reports can be compared as
strings.
"""

from .values import format_value, format_string, guest_list


def format_outcome(outcome):
    kind = outcome[0]
    if kind == "value":
        return "value " + format_value(outcome[1])
    if kind == "crash":
        return ("crash value=%s trace=%s"
                % (format_value(outcome[1]), format_trace(outcome[2])))
    if kind == "deadlock":
        return "deadlock blocked=[%s]" % ", ".join(str(p) for p in outcome[1])
    if kind == "fuel_exhausted":
        return "fuel_exhausted"
    raise ValueError("bad outcome %r" % (outcome,))


def format_trace(trace):
    return ("[" + ", ".join("(%s, %d)" % (format_string(name), line)
                            for name, line in trace) + "]")


def serialize(report):
    lines = ["MODE " + report.mode,
             "OUTCOME " + format_outcome(report.outcome)]
    for pid, s in report.prints:
        lines.append("PRINT %d %s" % (pid, format_string(s)))
    for pid, value, trace in report.crashes:
        lines.append("CRASH pid=%d value=%s trace=%s"
                     % (pid, format_value(value), format_trace(trace)))
    for pid, red, alloc in report.meters:
        lines.append("METER pid=%d red=%d alloc=%d" % (pid, red, alloc))
    lines.append("HOST instr=%d alloc=%d"
                 % (report.host_instr, report.host_alloc))
    return "\n".join(lines) + "\n"


def weak_lines(report):
    """The guest-visible record: everything except engine identity and
    host-side meters."""
    out = []
    for line in serialize(report).splitlines():
        if line.startswith("MODE ") or line.startswith("HOST "):
            continue
        out.append(line)
    return out


def serialize_weak(report):
    return "\n".join(weak_lines(report)) + "\n"
