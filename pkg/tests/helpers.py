"""Small drivers shared by the test modules."""
from dspsim.assembler import parse
from dspsim.execute import CoreState, MemorySystem, run
from dspsim.pipeline import run_timed

M32 = 0xFFFFFFFF


def s32(v):
    v &= M32
    return v - (1 << 32) if v >> 31 else v


def setup(text, regs=None, image=None):
    prog = parse(text)
    mem = MemorySystem()
    mem.load_image(prog.data)
    if image:
        mem.load_image(image)
    core = CoreState(prog.entry_pc)
    for r, v in (regs or {}).items():
        core.regs[r] = v & M32
    return prog, core, mem


def execute(text, regs=None, image=None):
    """Untimed run; returns ``(core, mem)``."""
    prog, core, mem = setup(text, regs, image)
    run(prog, mem, core)
    assert core.trap is None, core.trap
    return core, mem


def timed(text, regs=None, image=None, config=None):
    """Timed run; returns ``(core, mem, stats)``."""
    prog, core, mem = setup(text, regs, image)
    _, st = run_timed(prog, config, mem=mem, core=core, trace=False)
    return core, mem, st


def word(mem, addr):
    return int.from_bytes(mem.read_bytes(addr, 4), "little")
