import pytest
from hypothesis import given
from hypothesis import strategies as st

from dspsim import isa
from dspsim.execute import (LaneVector, MemorySystem, compile_program, exec_bitmanip,
                            exec_div, exec_dotp, exec_fixpoint, exec_mem, exec_shuffle,
                            exec_vector_alu, run, step)
from helpers import M32, execute, s32, setup, word

u32s = st.integers(0, M32)


def L(values, width=8):
    return LaneVector.from_lanes(values, width).word


# -- step ------------------------------------------------------------------------

def test_nop_step_advances_by_its_size():
    for text, nxt in ((".nocompress\nnop", 4), ("nop", 2)):
        prog, core, mem = setup(text)
        eff = step(core, compile_program(prog), mem)
        assert eff.next_pc == nxt and not eff.reads and not eff.writes


def test_addi_immediate():
    core, _ = execute("addi x5, x0, 7")
    assert core.regs[5] == 7


def test_postinc_word_load():
    core, _ = execute("p.lw x4, 4(x10!)", {10: 0x100}, {0x100: 0x78, 0x101: 0x56, 0x102: 0x34,
                                                       0x103: 0x12})
    assert core.regs[4] == 0x12345678 and core.regs[10] == 0x104


def test_retired_counters_per_mnemonic():
    from helpers import timed
    _, _, stats = timed("addi x5, x0, 3\nlp.setup L0, x5, e\ne: add x6, x6, x5")
    assert stats.retired_by_mnemonic() == {"addi": 1, "lp.setup": 1, "add": 3}


def test_out_of_range_access_traps():
    prog, core, mem = setup("lw x5, 0(x10)", {10: 0x20000})
    run(prog, mem, core)
    assert core.halted and "outside" in core.trap


@given(st.sampled_from([m for m in isa.MNEMONICS if isa.FORMAT[m] in ("R", "I", "M", "RRI")]),
       u32s, u32s)
def test_x0_write_discard(mn, a, b):
    fmt = isa.FORMAT[mn]
    ops = {"R": "x0, x6, x7", "I": "x0, x6, 1", "M": "x0, x6", "RRI": "x0, x6, x7, 3"}[fmt]
    prog, core, mem = setup(f"{mn} {ops}", {6: a, 7: b})
    before = list(core.regs[:32])
    run(prog, mem, core)
    assert core.regs[:32] == before


# -- vector ALU --------------------------------------------------------------------

def test_vector_add_examples():
    assert exec_vector_alu("add", L([1, 2, 3, 4]), L([1, 1, 1, 1]), 8) == L([2, 3, 4, 5])
    # lane 0 wraps without carrying into lane 1
    assert exec_vector_alu("add", L([255, 0, 0, 0]), L([1, 0, 0, 0]), 8) == 0


@given(u32s)
def test_xor_self_is_zero(x):
    assert exec_vector_alu("xor", x, x, 16) == 0


@given(st.sampled_from(isa.VECTOR_OPS), st.sampled_from((8, 16)), u32s, u32s,
       st.integers(0, 3), u32s)
def test_lane_isolation(op, width, a, b, lane, noise):
    n = 32 // width
    lane %= n
    m = ((1 << width) - 1) << (lane * width)
    a2 = (a & ~m) | (noise & m)
    b2 = (b & ~m) | ((noise >> 7) & m)
    r1, r2 = exec_vector_alu(op, a, b, width), exec_vector_alu(op, a2, b2, width)
    assert r1 & ~m & M32 == r2 & ~m & M32


# -- dot products --------------------------------------------------------------------

def test_dotp_examples():
    assert exec_dotp("sb", 0, 0xDEADBEEF) == 0
    assert exec_dotp("sb", L([-128] * 4), L([-128] * 4)) == 65536
    assert exec_dotp("sb", L([-1] * 4), L([1] * 4), acc=100) == 96


# -- shuffle ---------------------------------------------------------------------------

def test_shuffle_identity_mask():
    mask = L([4 | 0, 4 | 1, 4 | 2, 4 | 3])
    assert exec_shuffle(0xA1B2C3D4, 0x11223344, mask, 8) == 0xA1B2C3D4


def test_shuffle_broadcast_from_second_operand():
    assert exec_shuffle(0xA1B2C3D4, 0x11223344, 0, 8) == 0x44444444


def test_shuffle_mixed_mask():
    # lanes 3..0 take (a,0) (b,0) (a,1) (b,1)
    mask = L([0 | 1, 4 | 1, 0 | 0, 4 | 0])
    assert exec_shuffle(0x44332211, 0x88776655, mask, 8) == 0x11552266


@given(u32s, u32s, u32s, st.sampled_from((8, 16)))
def test_shuffle_totality(a, b, mask, width):
    n = 32 // width
    pool = set(LaneVector(a, width, False).lanes) | set(LaneVector(b, width, False).lanes)
    out = LaneVector(exec_shuffle(a, b, mask, width), width, False).lanes
    assert len(out) == n and all(v in pool for v in out)


def test_fixed_mask_forms():
    core, _ = execute("pv.insert.b x5, x6, 2\npv.extract.b x7, x8, 3\npv.extractu.h x9, x8, 1\n"
                      "pv.pack.h x11, x6, x8\npv.pack.b x12, x6, x8",
                      {5: 0x11223344, 6: 0xAABBCCDD, 8: 0x80FF7F01})
    assert core.regs[5] == 0x11DD3344
    assert core.regs[7] == 0xFFFFFF80
    assert core.regs[9] == 0x80FF
    assert core.regs[11] == 0xCCDD7F01
    assert core.regs[12] == 0xCC7FDD01


# -- fixed point ------------------------------------------------------------------------

def test_fixpoint_examples():
    x, y = 1000, 523
    assert exec_fixpoint("addRN", x, y, 2) == ((x + y) + 2) >> 2
    assert s32(exec_fixpoint("clip", 3000, 0, 12)) == 2047
    assert s32(exec_fixpoint("clip", -3000 & M32, 0, 12)) == -2048
    assert exec_fixpoint("mulsRN", 1024, 1024, 12) == 256
    assert exec_fixpoint("addRN", 0, 0, 5) == 0


@given(u32s, st.integers(1, 31))
def test_clip_idempotent_and_bounded(x, i):
    c = exec_fixpoint("clip", x, 0, i)
    assert exec_fixpoint("clip", c, 0, i) == c
    assert -(1 << (i - 1)) <= s32(c) <= (1 << (i - 1)) - 1
    cu = exec_fixpoint("clipu", x, 0, i)
    assert 0 <= s32(cu) <= (1 << (i - 1)) - 1


# -- bit manipulation ---------------------------------------------------------------------

def test_bitmanip_examples():
    assert exec_bitmanip("cnt", 0) == 0
    assert exec_bitmanip("ff1", 0b1000) == 3
    assert exec_bitmanip("fl1", 0b1010) == 3
    assert s32(exec_bitmanip("extract", 0xFFFFFF80, length=8, off=4)) == -8
    assert exec_bitmanip("ff1", 0) == 32 and exec_bitmanip("fl1", 0) == 32
    assert exec_bitmanip("clb", 0) == 0 and exec_bitmanip("clb", 0xFFFFFFFF) == 31


# -- division -------------------------------------------------------------------------------

def test_div_examples():
    assert exec_div("div", 7, 2) == 3 and exec_div("rem", 7, 2) == 1
    assert exec_div("div", 0x80000000, M32) == 0x80000000
    assert exec_div("rem", 0x80000000, M32) == 0


@given(u32s)
def test_div_by_zero(x):
    assert exec_div("div", x, 0) == M32 and exec_div("divu", x, 0) == M32
    assert exec_div("rem", x, 0) == x and exec_div("remu", x, 0) == x


@given(u32s, u32s.filter(bool))
def test_division_identity(a, b):
    q, r = s32(exec_div("div", a, b)), s32(exec_div("rem", a, b))
    assert (q * s32(b) + r) & M32 == a
    if not (a == 0x80000000 and b == M32):
        assert abs(r) < abs(s32(b)) and (r == 0 or (r < 0) == (s32(a) < 0))
    qu, ru = exec_div("divu", a, b), exec_div("remu", a, b)
    assert qu * b + ru == a and ru < b


# -- memory ------------------------------------------------------------------------------

def test_postinc_halfword_load():
    mem = MemorySystem()
    mem.load_image({0x100: 0xEF, 0x101: 0xBE})
    acc = exec_mem("p.lh", None, 0x100, 2, "imm!", mem)
    assert acc.value == 0xFFFFBEEF and acc.new_base == 0x102 and len(acc.accesses) == 1


def test_unaligned_word_load_touches_high_word_first():
    mem = MemorySystem()
    mem.load_image({0x103 + i: v for i, v in enumerate((0x11, 0x22, 0x33, 0x44))})
    acc = exec_mem("lw", None, 0x103, 0, "imm", mem)
    assert [w for w, _ in acc.accesses] == [0x104, 0x100]
    assert acc.value == 0x44332211


def test_byte_store_of_x0():
    mem = MemorySystem()
    mem.load_image({0x200: 0x5A})
    acc = exec_mem("sb", 0, 0x200, 0, "imm", mem)
    assert mem.read_bytes(0x200, 1) == b"\0" and len(acc.accesses) == 1


@given(st.integers(0, 255).map(lambda k: 0x400 + 4 * k), st.integers(1, 3),
       st.lists(st.integers(0, 255), min_size=8, max_size=8))
def test_unaligned_load_equals_software_sequence(base, off, data):
    from dspsim.bench.snippets import unaligned_load
    sn = unaligned_load(off)
    img = {base + i: v for i, v in enumerate(data)}
    sw, hw = sn.compare({10: base}, img)
    assert sw.regs[5] == hw.regs[5] == int.from_bytes(bytes(data[off:off + 4]), "little")


@pytest.mark.parametrize("mode,text", [("imm!", "p.sw 4(x10!), x6"), ("reg", "p.sw x7(x10), x6"),
                                       ("reg!", "p.sw x7(x10!), x6")])
def test_store_addressing_modes(mode, text):
    core, mem = execute(text, {6: 0xCAFEF00D, 7: 8, 10: 0x300})
    ea = 0x300 if mode != "reg" else 0x308
    assert word(mem, ea) == 0xCAFEF00D
    assert core.regs[10] == {"imm!": 0x304, "reg": 0x300, "reg!": 0x308}[mode]


# -- hardware loops ----------------------------------------------------------------------

def _steps(text, regs=None):
    prog, core, mem = setup(text, regs)
    cp = compile_program(prog)
    effects = []
    while not core.halted:
        e = step(core, cp, mem)
        if e is not None:
            effects.append(e)
    return core, effects


@pytest.mark.parametrize("count,backjumps", [(3, 2), (1, 0)])
def test_hwloop_trip_count(count, backjumps):
    core, eff = _steps(f"lp.setupi L0, {count}, e\naddi x5, x5, 1\ne: addi x6, x6, 2")
    assert core.regs[5] == count and core.regs[6] == 2 * count
    assert sum(e.hwloop_backjump for e in eff) == backjumps


def test_nested_hwloops():
    core, _ = _steps("lp.setupi L1, 2, oe\nlp.setupi L0, 4, ie\nie: addi x5, x5, 1\noe: nop")
    assert core.regs[5] == 8


def test_zero_count_loop_traps():
    core, _ = _steps("lp.setup L0, x3, e\ne: nop")
    assert core.trap and "count 0" in core.trap


def test_loop_set_reuse_while_active_traps():
    core, _ = _steps("lp.setupi L0, 2, e\nlp.setupi L0, 2, e\ne: nop")
    assert core.trap and "active" in core.trap


def test_l0_wins_on_shared_end_address():
    core, eff = _steps("lp.setupi L1, 2, e\nlp.setupi L0, 3, e2\ne2: nop\ne: addi x5, x5, 1")
    # L0 ends on e2 and drains first; L1 then repeats from the instruction after its setup
    assert core.regs[5] == 2
