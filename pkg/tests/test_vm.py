import itertools
import time

import pytest

from glemu import vm
from glemu.compiler import compile_source
from glemu.report import serialize, weak_lines
from glemu.values import NIL, Pid, format_value, guest_list, iter_list

from .conftest import run_bc


def outcome(src, **kw):
    return run_bc(src, **kw).outcome


def test_division_truncates_toward_zero():
    assert outcome("fn main() = (0 - 7) / 2")[1] == -3
    assert outcome("fn main() = 7 / (0 - 2)")[1] == -3
    assert outcome("fn main() = 7 / 2")[1] == 3


def test_arithmetic_faults():
    assert outcome("fn main() = 1 / 0")[:2] == ("crash", "arith_error")
    assert outcome("fn main() = 9223372036854775807 + 1")[:2] == \
        ("crash", "arith_error")
    assert outcome('fn main() = 1 + "x"')[:2] == ("crash", "type_error")


def test_vtime_reads_one_after_first_instruction():
    # the reading itself retires the builtin call chain before answering
    assert outcome("fn main() = vtime()")[1] == 1


def test_trace_is_guest_only_and_tailcalls_collapse():
    r = run_bc("fn inner(x) = throw(x)\n"
               "fn outer() = inner(9)\n"
               "fn main() = outer()")
    kind, value, trace = r.outcome
    assert kind == "crash" and value == 9
    assert trace == [("inner", 1)]  # outer's frame was replaced by TAILCALL


def test_non_tail_call_keeps_frames():
    r = run_bc("fn inner(x) = throw(x)\n"
               "fn outer() = inner(9) + 1\n"
               "fn main() = outer() + 1")
    assert r.outcome[2] == [("inner", 1), ("outer", 2), ("main", 3)]


def test_scheduler_slice_is_100_reductions():
    # two spinning procs: prints interleave on exact 100-reduction slices
    src = """fn spin(n) = if n == 0 then () else spin(n - 1)
fn noisy() = let _ = print("child") in ()
fn main() =
  let _ = spawn(fn () -> noisy()) in
  let _ = spin(%d) in
  let _ = print("main") in
  ()"""
    # a short spin keeps main inside its first 100-reduction slice, so it
    # prints before the child ever runs; a long spin crosses the slice
    # boundary and the child gets scheduled first
    assert [pid for pid, _ in run_bc(src % 5).prints] == [0, 1]
    assert [pid for pid, _ in run_bc(src % 40).prints] == [1, 0]


def test_deadlock_reports_sorted_blocked_pids():
    src = """fn wait() = receive { "never" -> () }
fn main() =
  let _ = spawn(fn () -> wait()) in
  receive { "no" -> () }"""
    assert outcome(src) == ("deadlock", [0, 1])


def test_send_copies_and_charges_alloc():
    src = """fn main() =
  let me = self() in
  let _ = send(me, [1, 2, 3]) in
  receive { l -> l }"""
    r = run_bc(src)
    assert format_value(r.outcome[1]) == "[1, 2, 3]"


def test_send_to_forged_pid_is_bad_pid():
    # pids are unforgeable in source; inject one through the mailbox
    def setup(world):
        world.processes[0].mailbox.append(Pid(99))

    src = "fn main() = send(receive { p -> p }, 1)"
    r = run_bc(src, world_setup=setup)
    assert r.outcome[:2] == ("crash", "bad_pid")


def test_ref_cannot_cross_processes():
    assert outcome("""fn main() =
  let r = ref(1) in
  send(self(), (1, r))""")[:2] == ("crash", "type_error")
    assert outcome("""fn main() =
  let r = ref(1) in
  let f = fn () -> get(r) in
  spawn(f)""")[:2] == ("crash", "type_error")


def test_fuel_cuts_between_steps_and_is_monotonic(corpus_dir):
    src = (corpus_dir / "loop.gl").read_text()
    module = compile_source(src)
    prev_prints = -1
    for fuel in (50, 100, 200, 400):
        r = vm.run_module(module, fuel=fuel)
        assert r.outcome == ("fuel_exhausted",)
        assert r.meters[0][1] == fuel
        assert len(r.prints) >= prev_prints
        prev_prints = len(r.prints)


def test_fuel_prefix_fidelity(corpus_dir):
    src = (corpus_dir / "loop.gl").read_text()
    module = compile_source(src)
    small = vm.run_module(module, fuel=200)
    large = vm.run_module(module, fuel=400)
    assert large.prints[:len(small.prints)] == small.prints


def test_alloc_meter_conserves_against_audit_log(corpus_dir):
    src = (corpus_dir / "value_shapes.gl").read_text()
    r = run_bc(src, audit=True)
    per_pid = {}
    for pid, n in r.alloc_log:
        per_pid[pid] = per_pid.get(pid, 0) + n
    for pid, _red, alloc in r.meters:
        assert per_pid.get(pid, 0) == alloc


def test_host_map_surcharge_is_list_length():
    base = run_bc("fn main() = let l = [1, 2, 3] in vtime()").meters[0][1]
    mapped = run_bc("fn main() = let l = [1, 2, 3] in "
                    "let _ = host_map(l, fn (x) -> x) in vtime()")
    # CALL_BUILTIN(1) + surcharge(3) + three callback bodies + result list
    assert mapped.meters[0][1] > base + 3


def test_host_map_rejects_improper_arguments():
    assert outcome("fn main() = host_map(1, fn (x) -> x)")[:2] == \
        ("crash", "type_error")
    assert outcome("fn main() = host_map([1], 5)")[:2] == \
        ("crash", "type_error")


# -- selective receive: brute-force oracle --------------------------------

UNIVERSE = [1, 2, "a", (1, 2), NIL]

# each arm: (tag baked into the arm body, guest source, python predicate)
ARM_POOL = [
    (0, "1 -> (0, 1)", lambda v: v == 1 and not isinstance(v, bool)),
    (1, '"a" -> (1, "a")', lambda v: v == "a"),
    (2, "(x, y) -> (2, (x, y))",
     lambda v: isinstance(v, tuple) and len(v) == 2),
    (3, "n if type_of(n) == \"int\" -> (3, n)",
     lambda v: isinstance(v, int) and not isinstance(v, bool)),
    (4, "[] -> (4, [])", lambda v: v is NIL),
]


def oracle(mailbox, arms):
    """Independent model: first message (scan order) matched by any arm,
    with its arm index; the message is removed, the rest keep order."""
    for i, msg in enumerate(mailbox):
        for tag, _, pred in arms:
            if pred(msg):
                rest = mailbox[:i] + mailbox[i + 1:]
                return (tag, msg, rest)
    return None  # blocks


def receive_program(arms):
    arm_src = ", ".join(src for _, src, _ in arms)
    return """fn drain(acc) = receive {
  "$end" -> acc,
  x -> drain(x :: acc)
}
fn main() =
  let v = receive { %s } in
  let _ = send(self(), "$end") in
  (v, drain([]))""" % arm_src


def test_receive_matches_brute_force_oracle():
    arm_lists = [ARM_POOL[:1], ARM_POOL[1:3], ARM_POOL[2:5]]
    modules = [(arms, compile_source(receive_program(arms)))
               for arms in arm_lists]
    started = time.monotonic()
    cases = 0
    for size in range(5):
        for mailbox in itertools.product(range(len(UNIVERSE)), repeat=size):
            msgs = [UNIVERSE[i] for i in mailbox]
            for arms, module in modules:
                expected = oracle(msgs, arms)

                def setup(world, msgs=msgs):
                    world.processes[0].mailbox.extend(msgs)

                r = vm.run_module(module, world_setup=setup)
                cases += 1
                if expected is None:
                    assert r.outcome[0] == "deadlock", (msgs, arms)
                    continue
                want_tag, msg, rest = expected
                kind, value = r.outcome
                assert kind == "value", (msgs, arms, r.outcome)
                (tag, got), drained = value
                assert tag == want_tag and got == msg
                assert list(iter_list(drained)) == list(reversed(rest))
    elapsed = time.monotonic() - started
    assert cases == sum(len(UNIVERSE) ** s for s in range(5)) * 3
    assert elapsed < 10.0, "oracle sweep took %.1fs" % elapsed
