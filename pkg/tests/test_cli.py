import io
import re
from contextlib import redirect_stderr, redirect_stdout

import pytest

from glemu.cli import main

REPORT_LINE = re.compile(
    r"^(MODE \S+|OUTCOME .+|PRINT \d+ \".*\"|"
    r"CRASH pid=\d+ value=.+ trace=\[.*\]|"
    r"METER pid=\d+ red=\d+ alloc=\d+|HOST instr=\d+ alloc=\d+)$")


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, name, source):
    p = tmp_path / name
    p.write_text(source)
    return str(p)


def test_run_exit_codes(tmp_path):
    ok = write(tmp_path, "ok.gl", "fn main() = 42")
    crash = write(tmp_path, "crash.gl", 'fn main() = throw("x")')
    dead = write(tmp_path, "dead.gl", "fn main() = receive { 1 -> 1 }")
    bad = write(tmp_path, "bad.gl", "fn main() = nope")
    spin = write(tmp_path, "spin.gl",
                 "fn spin(n) = spin(n + 1)\nfn main() = spin(0)")
    assert cli("run", ok)[0] == 0
    assert cli("run", crash)[0] == 1
    assert cli("run", dead)[0] == 2
    assert cli("run", spin, "--fuel", "50")[0] == 3
    code, _, err = cli("run", bad)
    assert code == 4 and "unbound" in err


def test_run_output_is_parseable_report(tmp_path):
    ok = write(tmp_path, "ok.gl",
               'fn main() = let _ = print("hi") in (1, "two")')
    _, out, _ = cli("run", ok)
    for line in out.splitlines():
        assert REPORT_LINE.match(line), line


def test_emulate_agrees_with_run_modulo_host_lines(tmp_path):
    prog = write(tmp_path, "p.gl",
                 "fn main() = (vtime(), stacktrace(), mem_used())")
    code_r, out_r, _ = cli("run", prog)
    code_e, out_e, _ = cli("emulate", prog)
    assert (code_r, code_e) == (0, 0)

    def weak(text):
        return [l for l in text.splitlines()
                if not l.startswith(("MODE ", "HOST "))]
    assert weak(out_r) == weak(out_e)


def test_emulate_uses_exit_5_for_broken_asset(tmp_path, monkeypatch):
    from glemu import selfemu
    broken = tmp_path / "selfemu.gl"
    broken.write_text("fn emu_main(r) = ((")
    monkeypatch.setattr(selfemu, "ASSET_PATH", broken)
    ok = write(tmp_path, "ok.gl", "fn main() = 1")
    code, _, err = cli("emulate", ok)
    assert code == 5 and "selfemu" in err


def test_gl_fuel_env(tmp_path, monkeypatch):
    spin = write(tmp_path, "spin.gl",
                 "fn spin(n) = spin(n + 1)\nfn main() = spin(0)")
    monkeypatch.setenv("GL_FUEL", "60")
    assert cli("run", spin)[0] == 3


def test_disas_and_reify_outputs(tmp_path):
    ok = write(tmp_path, "ok.gl", "fn main() = 42")
    _, disas, _ = cli("disas", ok)
    assert disas == ("== main/0 slots=0 ==\n"
                     "0: PUSH_INT 42 ; line=1\n"
                     "1: RET ; line=1")
    _, reified, _ = cli("compile", "--reify", ok)
    assert reified.startswith('[("main", 0, 0, ')
    assert '("entry", 0)' in reified


def test_out_flag_writes_file(tmp_path):
    ok = write(tmp_path, "ok.gl", "fn main() = 42")
    target = tmp_path / "report.txt"
    code, out, _ = cli("run", ok, "--out", str(target))
    assert code == 0 and out == ""
    assert "OUTCOME value 42" in target.read_text()


def test_difftest_sabotage_flag_validated():
    with pytest.raises(SystemExit):
        cli("difftest", "corpus", "--sabotage", "wallclock")
