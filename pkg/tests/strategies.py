"""Hypothesis strategies for assembly programs.

``source_programs`` draws arbitrary well-formed text over the whole
vocabulary (for the assembler). ``runnable_programs`` draws programs that
always terminate without trapping: forward branches only, bounded hardware
loops, and memory traffic through two pointer registers that nothing else
writes.
"""
from hypothesis import strategies as st

from dspsim import isa
from dspsim.assembler import ABI

REG_NAMES = [f"x{i}" for i in range(32)] + [f"r{i}" for i in range(32)] + list(ABI)


def _imm(mn):
    lo, hi = isa.IMM_RANGE[mn]
    return st.integers(lo, hi)


@st.composite
def _line(draw, mn, idx, n, labels):
    fmt = isa.FORMAT[mn]
    reg = st.sampled_from(REG_NAMES)
    R = lambda: draw(reg)                                       # noqa: E731
    lab = lambda: draw(st.sampled_from(labels))                  # noqa: E731
    later = [lb for lb, at in labels_at(labels, n) if idx < at < n]
    inside = [lb for lb, at in labels_at(labels, n) if at < n]
    if (fmt in ("LPS", "LPSI") and not later) or (mn == "lp.end" and not inside):
        return "nop"
    ops = {
        "R": lambda: [R(), R(), R()],
        "I": lambda: [R(), R(), str(draw(_imm(mn)))],
        "VI": lambda: [R(), R(), str(draw(_imm(mn)))],
        "U": lambda: [R(), str(draw(_imm(mn)))],
        "M": lambda: [R(), R()],
        "N": lambda: [],
        "B": lambda: [R(), R(), lab()],
        "J": lambda: [R(), lab()],
        "JL": lambda: [lab()],
        "JR": lambda: [R(), R(), str(draw(_imm(mn)))],
        "L": lambda: [R(), _mem(draw, mn)],
        "S": lambda: [_mem(draw, mn), R()],
        "RRI": lambda: [R(), R(), R(), str(draw(_imm(mn)))],
        "RI": lambda: [R(), R(), str(draw(_imm(mn)))],
        "BF": lambda: _bf(draw),
        "R4": lambda: [R(), R(), R(), R()],
        "LPS": lambda: [draw(st.sampled_from(("L0", "L1"))), R(), draw(st.sampled_from(later))],
        "LPSI": lambda: [draw(st.sampled_from(("L0", "L1"))), str(draw(_imm(mn))),
                         draw(st.sampled_from(later))],
        "LPL": lambda: [draw(st.sampled_from(("L0", "L1"))),
                        draw(st.sampled_from(inside if mn == "lp.end" else labels))],
        "LPC": lambda: [draw(st.sampled_from(("L0", "L1"))), R()],
        "LPCI": lambda: [draw(st.sampled_from(("L0", "L1"))), str(draw(_imm(mn)))],
        "CSR": lambda: [R(), draw(st.sampled_from(sorted(isa.CSR_NAMES)))],
    }[fmt]()
    return f"{mn} {', '.join(ops)}" if ops else mn


def labels_at(labels, n):
    return [(lb, int(lb[1:])) for lb in labels]   # "T<index>"


def _bf(draw):
    length = draw(st.integers(1, 32))
    off = draw(st.integers(0, 32 - length))
    return [draw(st.sampled_from(REG_NAMES)), draw(st.sampled_from(REG_NAMES)), str(length),
            str(off)]


def _mem(draw, mn):
    modes = isa.PULP_MODES if mn.startswith("p.") else isa.BASE_MODES
    mode = draw(st.sampled_from(modes))
    base = draw(st.sampled_from(REG_NAMES))
    inc = "!" if mode.endswith("!") else ""
    off = draw(st.sampled_from(REG_NAMES)) if mode.startswith("reg") else str(draw(_imm(mn)))
    return f"{off}({base}{inc})"


@st.composite
def source_programs(draw, max_len=30):
    n = draw(st.integers(0, max_len))
    mns = draw(st.lists(st.sampled_from(isa.MNEMONICS), min_size=n, max_size=n))
    # labels are named after the instruction index they mark
    marks = sorted(draw(st.sets(st.integers(0, n), max_size=6)) | {n})
    labels = [f"T{k}" for k in marks]
    out = []
    if draw(st.booleans()):
        addr = draw(st.integers(0, 0x1000))
        vals = draw(st.lists(st.integers(0, 255), min_size=1, max_size=20))
        out.append(f".data {addr:#x}")
        out.append(".byte " + ", ".join(map(str, vals)))
        if draw(st.booleans()):
            out.append(".word " + ", ".join(map(str, draw(st.lists(st.integers(0, 2**32 - 1),
                                                                      min_size=1, max_size=3)))))
    for idx, mn in enumerate(mns):
        if idx in marks:
            out.append(f"T{idx}:")
        if draw(st.integers(0, 9)) == 0:
            out.append(draw(st.sampled_from((".compress", ".nocompress"))))
        out.append(draw(_line(mn, idx, n, labels)))
    out.append(f"T{n}:")
    return "\n".join(out) + "\n"


# -- runnable programs ------------------------------------------------------------

DEST = [5, 6, 7, 8, 9, 12, 13, 14, 15]          # x10/x11 are the memory pointers
SRC = DEST + [0, 10, 11]
ALU_R = ["add", "sub", "and", "or", "xor", "sll", "srl", "sra", "slt", "sltu", "mul", "mulh",
         "div", "divu", "rem", "remu", "p.mac", "p.msu", "pv.add.b", "pv.sub.h", "pv.avg.b",
         "pv.max.h", "pv.sra.b", "pv.cmpgt.h", "pv.dotp.sb", "pv.sdotp.uh", "pv.shuffle.b",
         "pv.pack.h"]
ALU_I = ["addi", "xori", "slti", "andi"]
RN = ["p.addRN", "p.subRN", "p.mulsRN", "p.muluRN"]


@st.composite
def _op(draw):
    d = lambda: f"x{draw(st.sampled_from(DEST))}"              # noqa: E731
    s = lambda: f"x{draw(st.sampled_from(SRC))}"               # noqa: E731
    kind = draw(st.integers(0, 9))
    if kind <= 3:
        return f"{draw(st.sampled_from(ALU_R))} {d()}, {s()}, {s()}"
    if kind == 4:
        return f"{draw(st.sampled_from(ALU_I))} {d()}, {s()}, {draw(st.integers(-40, 40))}"
    if kind == 5:
        return f"{draw(st.sampled_from(RN))} {d()}, {s()}, {s()}, {draw(st.integers(0, 16))}"
    if kind == 6:
        mn = draw(st.sampled_from(("lw", "lh", "lbu", "lw")))
        return f"{mn} {d()}, {draw(st.integers(-64, 64))}(x10)"
    if kind == 7:
        mn = draw(st.sampled_from(("sw", "sh", "sb")))
        return f"{mn} {draw(st.integers(-64, 64))}(x10), {s()}"
    if kind == 8:
        mn = draw(st.sampled_from(("p.lw", "p.lh", "p.sw", "p.sb")))
        off = draw(st.integers(-8, 8))
        if mn.startswith("p.l"):
            return f"{mn} {d()}, {off}(x11!)"
        return f"{mn} {off}(x11!), {s()}"
    return f"p.clip {d()}, {s()}, {draw(st.integers(1, 20))}"


@st.composite
def runnable_programs(draw, max_blocks=6):
    """Blocks of straight-line ops, forward branches and counted hwloops."""
    lines = ["addi x10, x0, 1024", "lui x11, 4"]
    for r in DEST:
        lines.append(f"addi x{r}, x0, {draw(st.integers(-2048, 2047))}")
    nblk = draw(st.integers(1, max_blocks))
    for b in range(nblk):
        kind = draw(st.integers(0, 2))
        body = draw(st.lists(_op(), min_size=1, max_size=6))
        if kind == 0:
            lines += body
        elif kind == 1:
            cond = draw(st.sampled_from(("beq", "bne", "blt", "bge", "bltu", "bgeu")))
            a, c = draw(st.sampled_from(SRC)), draw(st.sampled_from(SRC))
            lines.append(f"{cond} x{a}, x{c}, skip{b}")
            lines += body
            lines.append(f"skip{b}: nop")
        else:
            count = draw(st.integers(1, 5))
            lines.append(f"lp.setupi L0, {count}, end{b}")
            lines += body[:-1]
            lines.append(f"end{b}: {body[-1]}")
    return "\n".join(lines) + "\n"
