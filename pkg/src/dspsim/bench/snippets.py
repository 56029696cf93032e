"""Small paired code sequences: a base-ISA version and its extended-ISA
replacement, plus the instruction-energy microbenchmark loop.

Each pair runs on the same preset registers and memory so that the
architectural results can be compared and the two sides priced.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..assembler import parse
from ..energy import EnergyTable, account
from ..execute import CoreState, MemorySystem
from ..pipeline import CoreStats, TimingConfig, run_timed

M32 = 0xFFFFFFFF


@dataclass
class SideResult:
    instructions: int      # static instruction count of the sequence
    retired: int
    cycles: int
    energy_pj: float
    regs: list[int]
    memory: bytes
    stats: CoreStats


@dataclass
class Snippet:
    name: str
    base: str          # base-ISA side
    ext: str           # extended side
    outputs: tuple[int, ...]   # registers compared between the sides
    mem_window: tuple[int, int] = (0, 0)   # compared memory range [lo, hi)

    def run(self, side: str, regs: dict[int, int], image: dict[int, int] | None = None,
            timing: TimingConfig | None = None, energy: EnergyTable | None = None) -> SideResult:
        prog = parse(self.base if side == "base" else self.ext)
        mem = MemorySystem()
        mem.load_image(prog.data)
        if image:
            mem.load_image(image)
        core = CoreState(prog.entry_pc)
        for r, v in regs.items():
            core.regs[r] = v & M32
        _, st = run_timed(prog, timing, mem=mem, core=core, trace=False)
        if st.trap:
            raise RuntimeError(f"{self.name}/{side}: {st.trap}")
        lo, hi = self.mem_window
        return SideResult(len(prog.instrs), st.retired, st.cycles, account(st, energy).total,
                          list(core.regs[:32]), bytes(mem.read_bytes(lo, hi - lo)), st)

    def compare(self, regs, image=None, **kw) -> tuple[SideResult, SideResult]:
        return self.run("base", regs, image, **kw), self.run("ext", regs, image, **kw)

    def equivalent(self, base: SideResult, ext: SideResult) -> bool:
        return (all(base.regs[r] == ext.regs[r] for r in self.outputs)
                and base.memory == ext.memory)


def unaligned_load(offset: int) -> Snippet:
    """Word load from ``x10 + offset`` (offset 1..3, x10 word aligned) into x5."""
    if offset not in (1, 2, 3):
        raise ValueError("offset must be 1, 2 or 3")
    base = f"""
        lw   x5, 0(x10)
        lw   x6, 4(x10)
        srli x5, x5, {8 * offset}
        slli x6, x6, {32 - 8 * offset}
        or   x5, x5, x6
    """
    return Snippet(f"unaligned_load_{offset}", base, f"lw x5, {offset}(x10)", (5,))


ADD4 = Snippet(
    "add4_q111",
    """
        add  x3, x4, x5
        add  x3, x3, x6
        add  x3, x3, x7
        addi x3, x3, 2
        srai x3, x3, 2
    """,
    """
        add     x3, x4, x5
        add     x3, x3, x6
        p.addRN x3, x3, x7, 2
    """,
    (3,))


def clip_loop(n: int) -> Snippet:
    """Element-wise a + b saturated to Q1.11, words stored from x12; both
    sides use a hardware loop, only the clipping differs."""
    base = f"""
        addi x15, x0, -2048
        addi x14, x0, 2047
        addi x3, x0, {n}
        lp.setup L0, x3, endL
        p.lh x4, 2(x10!)
        p.lh x5, 2(x11!)
        add  x4, x4, x5
        blt  x4, x15, lo
        blt  x14, x4, hi
        j    endL
    lo: mv   x4, x15
        j    endL
    hi: mv   x4, x14
    endL: p.sw 4(x12!), x4
    """
    ext = f"""
        addi x3, x0, {n}
        lp.setup L0, x3, endL
        p.lh x4, 2(x10!)
        p.lh x5, 2(x11!)
        add  x4, x4, x5
        p.clip x4, x4, 12
    endL: p.sw 4(x12!), x4
    """
    return Snippet(f"clip_{n}", base, ext, (10, 11, 12), (0x2000, 0x2000 + 4 * n))


def mulq_loop(n: int) -> Snippet:
    """Element-wise Q1.11 product rounded to Q2.10. The rounding constant
    0x800 does not fit an addi immediate, so the base side keeps it in x6."""
    base = f"""
        lui  x6, 1
        addi x6, x6, -2048
        addi x3, x0, {n}
        lp.setup L0, x3, endL
        p.lh x4, 2(x10!)
        p.lh x5, 2(x11!)
        mul  x4, x4, x5
        add  x4, x4, x6
        srai x4, x4, 12
    endL: p.sw 4(x12!), x4
    """
    ext = f"""
        addi x3, x0, {n}
        lp.setup L0, x3, endL
        p.lh x4, 2(x10!)
        p.lh x5, 2(x11!)
        p.mulsRN x4, x4, x5, 12
    endL: p.sw 4(x12!), x4
    """
    return Snippet(f"mulq_{n}", base, ext, (10, 11, 12), (0x2000, 0x2000 + 4 * n))


# Byte reorganisation: rotate the bytes of x6 right by one lane.
SHUFFLE = Snippet(
    "byte_rotate",
    """
        srli x5, x6, 8
        slli x7, x6, 24
        or   x5, x5, x7
    """,
    "pv.shuffle.b x5, x6, x8",
    (5,))
SHUFFLE_MASK = 0x00030201   # lane j takes lane j+1; lane 3 takes lane 0


def q111_inputs(rng: random.Random, n: int) -> tuple[dict[int, int], dict[int, int]]:
    """Registers and memory image for :func:`clip_loop` / :func:`mulq_loop`:
    two arrays of Q1.11 halfwords at 0x0400 and 0x1000, output at 0x2000."""
    image = {}
    for base in (0x0400, 0x1000):
        for i in range(n):
            v = rng.randint(-2048, 2047) & 0xFFFF
            image[base + 2 * i] = v & 0xFF
            image[base + 2 * i + 1] = v >> 8
    return {10: 0x0400, 11: 0x1000, 12: 0x2000}, image


def insn_microbench(line: str, iterations: int = 100, body: int = 100,
                    setup: str = "") -> str:
    """Assembly for the per-instruction energy loop: ``iterations`` passes
    over ``body`` copies of ``line``."""
    lines = [setup, f"lp.setupi L0, {iterations}, endL"]
    lines += [line] * (body - 1)
    lines.append(f"endL: {line}")
    return "\n".join(lines) + "\n"


@dataclass
class InsnEnergy:
    line: str
    body_retired: int
    cycles: int
    energy_pj: float

    @property
    def pj_per_instruction(self) -> float:
        return self.energy_pj / self.body_retired


def measure_insn(line: str, *, iterations: int = 100, body: int = 100, setup: str = "",
                 regs: dict[int, int] | None = None, image: dict[int, int] | None = None,
                 timing: TimingConfig | None = None, energy: EnergyTable | None = None,
                 scm_range: tuple[int, int] | None = None) -> InsnEnergy:
    """Energy per executed instruction of ``line``, excluding the setup."""
    prog = parse(insn_microbench(line, iterations, body, setup))
    mem = MemorySystem(scm_range=scm_range)
    if image:
        mem.load_image(image)
    core = CoreState(prog.entry_pc)
    for r, v in (regs or {}).items():
        core.regs[r] = v & M32
    _, st = run_timed(prog, timing, mem=mem, core=core, trace=False)
    if st.trap:
        raise RuntimeError(st.trap)
    n_setup = len(prog.instrs) - body
    # price only the loop body: drop the setup instructions from the counts
    for i in range(n_setup):
        st.retired -= st.counts[i]
        st.counts[i] = 0
    return InsnEnergy(line, st.retired, st.cycles, account(st, energy).total)


# Representative instructions for the energy table: (label, line, scm)
INSN_SET = (
    ("add", "add x5, x6, x7", False),
    ("addi", "addi x5, x6, 1", False),
    ("mul", "mul x5, x6, x7", False),
    ("p.mac", "p.mac x5, x6, x7", False),
    ("pv.add.b", "pv.add.b x5, x6, x7", False),
    ("pv.dotp.sb", "pv.dotp.sb x5, x6, x7", False),
    ("pv.sdotp.sb", "pv.sdotp.sb x5, x6, x7", False),
    ("pv.shuffle.b", "pv.shuffle.b x5, x6, x7", False),
    ("p.mulsRN", "p.mulsRN x5, x6, x7, 12", False),
    ("p.clip", "p.clip x5, x6, 12", False),
    ("lw sram", "lw x5, 0(x10)", False),
    ("lw sram unaligned", "lw x5, 1(x10)", False),
    ("lw scm", "lw x5, 0(x10)", True),
    ("sw sram", "sw 0(x10), x6", False),
    ("sw scm", "sw 0(x10), x6", True),
    ("nop", "nop", False),
)
INSN_REGS = {6: 0x01020304, 7: 0x05060708, 10: 0x0400}
INSN_SCM = (0x0000, 0x1000)


def insn_table(energy: EnergyTable | None = None, timing: TimingConfig | None = None):
    """Rows ``(label, line, cycles_per_insn, pj_per_insn)`` for :data:`INSN_SET`."""
    rows = []
    for label, line, scm in INSN_SET:
        m = measure_insn(line, regs=INSN_REGS, energy=energy, timing=timing,
                         scm_range=INSN_SCM if scm else None)
        rows.append((label, line, m.cycles / m.body_retired, m.pj_per_instruction))
    return rows
