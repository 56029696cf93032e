import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dspsim.energy import EnergyTable, account
from dspsim.execute import MemorySystem
from dspsim.isa import CLASSES
from dspsim.pipeline import CoreStats, TimingConfig, run_timed
from dspsim.bench.snippets import INSN_REGS, INSN_SCM, measure_insn
from helpers import setup, timed
from strategies import runnable_programs

T = EnergyTable.default()


def pj(line, scm=False):
    return measure_insn(line, regs=INSN_REGS, scm_range=INSN_SCM if scm else None)


def test_defaults():
    assert T.per_class["alu"] == 30 and T.per_class["shuffle"] == 50
    assert T.scm_access == pytest.approx(0.54 * T.sram_access)


def test_empty_trace_costs_nothing():
    _, _, s = timed("")
    assert s.retired == 0 and account(s).total == 0


@pytest.mark.parametrize("line,want", [("pv.shuffle.b x5, x6, x7", 50), ("add x5, x6, x7", 30),
                                       ("nop", 15), ("lw x5, 0(x10)", 65),
                                       ("lw x5, 1(x10)", 100), ("pv.dotp.sb x5, x6, x7", 40)])
def test_per_instruction_energy(line, want):
    assert pj(line).pj_per_instruction == pytest.approx(want, rel=0.01)


def test_scm_cheaper_than_sram():
    for line in ("lw x5, 0(x10)", "sw 0(x10), x6"):
        assert pj(line, scm=True).pj_per_instruction < pj(line).pj_per_instruction
    assert pj("lw x5, 0(x10)", scm=True).pj_per_instruction == pytest.approx(48.9)


def test_stalls_are_charged_as_idle():
    _, _, s = timed("lw x5, 0(x10)\nadd x6, x5, x5", {10: 0x100})
    r = account(s)
    assert r.idle == T.idle * 1 and r.memory == T.sram_access


def test_missing_class_rejected():
    with pytest.raises(ValueError, match="lacks"):
        EnergyTable.from_text("alu = 1")
    with pytest.raises(ValueError, match="unknown"):
        EnergyTable.from_text(T.to_text() + "warp = 3\n")
    with pytest.raises(ValueError, match="negative"):
        EnergyTable({k: -1.0 for k in CLASSES})


def test_table_round_trip(tmp_path):
    f = tmp_path / "e.cfg"
    f.write_text(T.to_text())
    assert EnergyTable.from_file(f) == T


@settings(max_examples=80)
@given(runnable_programs(max_blocks=4), runnable_programs(max_blocks=4))
def test_energy_is_additive(p, q):
    _, _, a = timed(p)
    _, _, b = timed(q)
    both = account([a, b])
    assert both.total == pytest.approx(account(a).total + account(b).total)
    assert both.total >= 0


@settings(max_examples=80)
@given(runnable_programs(max_blocks=4), st.floats(0.1, 10))
def test_energy_scales_with_table(text, k):
    _, _, s = timed(text)
    scaled = EnergyTable({c: v * k for c, v in T.per_class.items()}, T.sram_access * k,
                         T.scm_access * k, T.unaligned_access * k, T.idle * k)
    assert account(s, scaled).total == pytest.approx(k * account(s).total)


@settings(max_examples=60)
@given(runnable_programs(max_blocks=4))
def test_scm_never_costs_more(text):
    totals = []
    for scm in (None, (0, 72 * 1024)):
        prog, core, _ = setup(text)
        mem = MemorySystem(scm_range=scm)
        mem.load_image(prog.data)
        _, s = run_timed(prog, mem=mem, core=core)
        totals.append(account(s).total)
    assert totals[1] <= totals[0]


def test_cost_accounting_ignores_unaligned_second_cycle():
    s = CoreStats()
    s.stalls["mem_unaligned"] = 5
    s.stalls["load_use"] = 2
    s.counts, s.program = [], type("P", (), {"instrs": []})()
    assert account(s).idle == 2 * T.idle
    assert TimingConfig().unaligned_mem_extra == 1
