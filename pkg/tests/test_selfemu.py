import pytest

from glemu import selfemu, vm
from glemu.compiler import compile_source
from glemu.harness import discover_corpus, program_fuel
from glemu.report import weak_lines


def pair(source, fuel=None, sabotage=()):
    module = compile_source(source)
    direct = vm.run_module(module, fuel=fuel)
    emulated = selfemu.run_emulated(module, fuel=fuel, sabotage=sabotage)
    return direct, emulated


def test_trivial_program_matches():
    direct, emulated = pair("fn main() = 42")
    assert weak_lines(direct) == weak_lines(emulated.report)
    assert emulated.report.outcome == ("value", 42)


def test_asset_has_no_receive_delegation():
    # the emulator implements selective receive over its own mailbox
    # data; it never uses the host receive construct itself
    source = selfemu.asset_source()
    stripped = "\n".join(line.partition("#")[0] for line in source.splitlines())
    assert "receive" not in stripped


def test_emulated_meters_equal_direct_meters(corpus_dir):
    for rel in ("arith.gl", "pingpong.gl", "probes/probe_clock.gl"):
        src = (corpus_dir / rel).read_text()
        direct, emulated = pair(src, fuel=program_fuel(src))
        assert direct.meters == emulated.report.meters, rel


def test_fuel_exhaustion_matches_direct(corpus_dir):
    src = (corpus_dir / "loop.gl").read_text()
    direct, emulated = pair(src, fuel=300)
    assert weak_lines(direct) == weak_lines(emulated.report)
    assert emulated.report.outcome == ("fuel_exhausted",)


def test_crash_traces_show_no_emulator_frames():
    direct, emulated = pair("fn boom() = 1 / 0\nfn main() = boom() + 1")
    assert direct.outcome == emulated.report.outcome
    names = [name for name, _ in emulated.report.outcome[2]]
    assert names == ["boom", "main"]


def test_malformed_reified_input_is_bad_code():
    source = selfemu.asset_source() + '\nfn main() = emu_main([("entry", 0)])\n'
    report = vm.run_module(compile_source(source))
    assert report.outcome[:2] == ("crash", "bad_code")


def test_broken_asset_raises_selfemu_error(monkeypatch, tmp_path):
    bad = tmp_path / "selfemu.gl"
    bad.write_text("fn emu_main(r) = (((")
    monkeypatch.setattr(selfemu, "ASSET_PATH", bad)
    with pytest.raises(selfemu.SelfEmuError):
        selfemu.run_emulated(compile_source("fn main() = 1"))


def test_unknown_sabotage_hook_rejected():
    with pytest.raises(ValueError):
        selfemu.sabotaged_source(selfemu.asset_source(), ("wallclock",))


def test_sabotaged_source_only_touches_marked_lines():
    source = selfemu.asset_source()
    sab = selfemu.sabotaged_source(source, ("clock",))
    diff = [(a, b) for a, b in zip(source.splitlines(), sab.splitlines())
            if a != b]
    assert len(diff) == 1
    assert "vtime()" in diff[0][1]


@pytest.mark.slow
def test_deep_recursion_bounded_host_frames():
    source = ("fn down(n) = if n == 0 then 0 else 1 + down(n - 1)\n"
              "fn main() = down(10000)")
    module = compile_source(source)
    direct = vm.run_module(module)
    emulated = selfemu.run_emulated(module)
    assert emulated.report.outcome == ("value", 10000)
    assert emulated.report.meters == direct.meters
    # the emulator's own sampled frame depth is a small constant even
    # though the emulated stack is 10,000 frames deep
    assert emulated.max_host_depth <= 64
