"""Command-line entry point.

Exit codes: 0 value, 1 crash, 2 deadlock, 3 fuel exhausted, 4 front-end
(lex/parse/check) error, 5 self-emulator asset failure, 6 weak
comparison failure in difftest, 7 coverage-guard failure.
"""

import argparse
import os
import sys

from . import harness, selfemu, vm
from .bytecode import disassemble
from .checker import check
from .compiler import compile_program
from .errors import LexError, ParseError
from .parser import parse_source
from .reify import reify, value_to_source
from .report import serialize

OUTCOME_EXIT = {"value": 0, "crash": 1, "deadlock": 2, "fuel_exhausted": 3}


class FrontEndError(Exception):
    pass


def load_program(path, checked=True):
    try:
        source = open(path).read()
    except OSError as exc:
        raise FrontEndError(str(exc))
    try:
        program = parse_source(source)
    except (LexError, ParseError) as exc:
        raise FrontEndError("%s: %s" % (path, exc))
    if checked:
        errors = check(program)
        if errors:
            raise FrontEndError("\n".join("%s: %s" % (path, e)
                                          for e in errors))
    return source, program


def default_fuel(args):
    if args.fuel is not None:
        return args.fuel
    env = os.environ.get("GL_FUEL")
    return int(env) if env else None


def emit(args, text):
    if getattr(args, "out", None):
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args):
    checked = args.mode != "ast-unchecked"
    _, program = load_program(args.file, checked=checked)
    fuel = default_fuel(args)
    if args.mode == "bytecode":
        report = vm.run(compile_program(program), mode="bytecode",
                        fuel=fuel, audit=args.audit)
    else:
        report = vm.run(program, mode=args.mode, fuel=fuel, audit=args.audit)
    emit(args, serialize(report))
    return OUTCOME_EXIT[report.outcome[0]]


def cmd_emulate(args):
    _, program = load_program(args.file)
    fuel = default_fuel(args)
    try:
        run = selfemu.run_emulated(compile_program(program), fuel=fuel,
                                   sabotage=args.sabotage)
    except selfemu.SelfEmuError as exc:
        print("selfemu: %s" % exc, file=sys.stderr)
        return 5
    emit(args, serialize(run.report))
    return OUTCOME_EXIT[run.report.outcome[0]]


def cmd_compile(args):
    _, program = load_program(args.file)
    module = compile_program(program)
    if args.reify:
        emit(args, value_to_source(reify(module)) + "\n")
    else:
        emit(args, disassemble(module))
    return 0


def cmd_disas(args):
    _, program = load_program(args.file)
    emit(args, disassemble(compile_program(program)))
    return 0


def cmd_difftest(args):
    code, text = harness.difftest(args.corpus, sabotage=args.sabotage,
                                  audit=args.audit)
    emit(args, text)
    return code


def cmd_report(args):
    code, text = harness.difftest(args.corpus, sabotage=args.sabotage,
                                  audit=args.audit)
    emit(args, text)
    return code if code == 7 else 0


def _sabotage_list(value):
    hooks = [h for h in value.split(",") if h]
    unknown = set(hooks) - set(selfemu.HOOKS)
    if unknown:
        raise argparse.ArgumentTypeError("unknown hooks: %s"
                                         % ",".join(sorted(unknown)))
    return hooks


def _fuel(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("fuel must be >= 1")
    return n


def build_parser():
    parser = argparse.ArgumentParser(prog="glemu")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, corpus=False):
        p.add_argument("--fuel", type=_fuel, default=None)
        p.add_argument("--audit", action="store_true")
        p.add_argument("--out", default=None)

    p = sub.add_parser("run", help="execute a program directly")
    p.add_argument("file")
    p.add_argument("--mode", choices=("bytecode", "ast", "ast-unchecked"),
                   default="bytecode")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("emulate", help="execute under the self-emulator")
    p.add_argument("file")
    p.add_argument("--sabotage", type=_sabotage_list, default=[])
    common(p)
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("compile", help="print bytecode or reified value")
    p.add_argument("file")
    p.add_argument("--reify", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("disas", help="print disassembly")
    p.add_argument("file")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_disas)

    p = sub.add_parser("difftest", help="differential corpus run")
    p.add_argument("corpus")
    p.add_argument("--sabotage", type=_sabotage_list, default=[])
    p.add_argument("--no-audit", dest="audit", action="store_false")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_difftest, audit=True)

    p = sub.add_parser("report", help="difftest that only fails on "
                                      "coverage errors")
    p.add_argument("corpus")
    p.add_argument("--sabotage", type=_sabotage_list, default=[])
    p.add_argument("--no-audit", dest="audit", action="store_false")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report, audit=True)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FrontEndError as exc:
        print(exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
