"""Instruction vocabulary of the extended RV32IMC core.

Instructions only ever exist in decoded form: an :class:`Instr` carries the
mnemonic, its operands and a static ``size`` (16 or 32 bits) that feeds the
fetch model and the compressed-instruction statistics. No bit encodings.
"""
from __future__ import annotations

from dataclasses import dataclass, field

CLASSES = (
    "alu", "mul", "mac", "dotp", "shuffle", "load", "store", "branch",
    "jump", "div", "hwloop_setup", "csr", "nop",
)

# Operand formats.
#   R    rd, rs1, rs2            I    rd, rs1, imm          U    rd, imm
#   M    rd, rs1                 N    (none)                B    rs1, rs2, label
#   J    rd, label               JL   label                 JR   rd, rs1, imm
#   L    rd, mem                 S    mem, rs2              RRI  rd, rs1, rs2, I
#   RI   rd, rs1, I              BF   rd, rs1, len, off     R4   rd, rs1, rs2, rs3
#   VI   rd, rs1, imm            LPS  Lx, rs1, label        LPSI Lx, imm, label
#   LPL  Lx, label               LPC  Lx, rs1               LPCI Lx, imm
#   CSR  rd, csrname
FORMAT: dict[str, str] = {}
CLASS: dict[str, str] = {}
# Immediate range (lo, hi) inclusive, keyed by mnemonic; shifts/I amounts too.
IMM_RANGE: dict[str, tuple[int, int]] = {}

S12 = (-2048, 2047)
S6 = (-32, 31)


def _def(names, fmt, klass, imm=None):
    for n in names.split():
        FORMAT[n] = fmt
        CLASS[n] = klass
        if imm is not None:
            IMM_RANGE[n] = imm


# -- base RV32IM -------------------------------------------------------------
_def("add sub and or xor sll srl sra slt sltu", "R", "alu")
_def("addi andi ori xori slti sltiu", "I", "alu", S12)
_def("slli srli srai", "I", "alu", (0, 31))
_def("lui auipc", "U", "alu", (0, 0xFFFFF))
_def("mv", "M", "alu")
_def("nop", "N", "nop")
_def("beq bne blt bge bltu bgeu", "B", "branch")
_def("jal", "J", "jump")
_def("j", "JL", "jump")
_def("jalr", "JR", "jump", S12)
_def("lw lh lhu lb lbu", "L", "load", S12)
_def("sw sh sb", "S", "store", S12)
_def("mul mulh mulhu", "R", "mul")
_def("div divu rem remu", "R", "div")
_def("csrr", "CSR", "csr")

# -- hardware loops ------------------------------------------------------------
_def("lp.setup", "LPS", "hwloop_setup")
_def("lp.setupi", "LPSI", "hwloop_setup", (0, 4095))
_def("lp.start lp.end", "LPL", "hwloop_setup")
_def("lp.count", "LPC", "hwloop_setup")
_def("lp.counti", "LPCI", "hwloop_setup", (0, 4095))

# -- post-increment / register-offset memory ops -------------------------------
_def("p.lw p.lh p.lhu p.lb p.lbu", "L", "load", S12)
_def("p.sw p.sh p.sb", "S", "store", S12)

# -- fixed point ---------------------------------------------------------------
_def("p.addRN p.addRNu p.subRN p.subRNu", "RRI", "alu", (0, 31))
_def("p.mulsRN p.muluRN", "RRI", "mul", (0, 31))
_def("p.clip p.clipu", "RI", "alu", (1, 31))
_def("p.mac p.msu", "R", "mac")

# -- bit manipulation ----------------------------------------------------------
_def("p.extract p.extractu p.insert p.bclr p.bset", "BF", "alu")
_def("p.cnt p.ff1 p.fl1 p.clb", "M", "alu")

# -- packed SIMD ---------------------------------------------------------------
VECTOR_OPS = ("add", "sub", "avg", "min", "max", "srl", "sra", "sll",
              "and", "or", "xor", "cmpeq", "cmpgt")
for _op in VECTOR_OPS:
    for _w in ("b", "h"):
        _def(f"pv.{_op}.{_w} pv.{_op}.sc.{_w}", "R", "alu")
        _def(f"pv.{_op}.sci.{_w}", "VI", "alu", S6)

DOTP_VARIANTS = ("sb", "ub", "sh", "uh")
for _v in DOTP_VARIANTS:
    _def(f"pv.dotp.{_v} pv.sdotp.{_v} pv.dotp.sc.{_v} pv.sdotp.sc.{_v}",
         "R", "dotp")

for _w, _lanes in (("b", 4), ("h", 2)):
    _def(f"pv.shuffle.{_w}", "R", "shuffle")
    _def(f"pv.shuffle.sci.{_w}", "VI", "shuffle", (0, (1 << (_lanes * (2 if _w == 'b' else 1))) - 1))
    _def(f"pv.shuffle2.{_w}", "R4", "shuffle")
    _def(f"pv.insert.{_w} pv.extract.{_w} pv.extractu.{_w}", "VI", "shuffle",
         (0, _lanes - 1))
    _def(f"pv.pack.{_w}", "R", "shuffle")

MNEMONICS = tuple(FORMAT)

LOAD_WIDTH = {"lw": 4, "lh": 2, "lhu": 2, "lb": 1, "lbu": 1,
              "sw": 4, "sh": 2, "sb": 1}
LOAD_SIGNED = {"lw": True, "lh": True, "lhu": False, "lb": True, "lbu": False}

# Memory addressing modes: "imm" base+imm, "imm!" post-increment by imm,
# "reg" base+rs2, "reg!" post-increment by rs2.
BASE_MODES = ("imm",)
PULP_MODES = ("imm!", "reg", "reg!")

CSR_NAMES = {"mhartid": 0xF14, "ncores": 0xFC0,
             "lpstart0": 0x7C0, "lpend0": 0x7C1, "lpcount0": 0x7C2,
             "lpstart1": 0x7C4, "lpend1": 0x7C5, "lpcount1": 0x7C6}

# Base mnemonics that have a 16-bit form under some operand constraints; the
# constraints live in :func:`is_compressible`. Everything else is 32-bit.
COMPRESSIBLE = frozenset(
    "add addi mv lw sw beq bne jal nop lui and or xor sub sll srl sra slt".split())


@dataclass(frozen=True)
class Instr:
    """One decoded instruction.

    ``imm`` holds the immediate (for bit-field ops: the field length),
    ``imm2`` the bit-field offset, ``shift`` the round/normalize or clip
    amount I, ``loop`` the hardware-loop set (0 or 1), ``label`` a branch,
    jump or loop-end target and ``mode`` the memory addressing mode.
    """

    mnemonic: str
    rd: int | None = None
    rs1: int | None = None
    rs2: int | None = None
    rs3: int | None = None
    imm: int | None = None
    imm2: int | None = None
    shift: int | None = None
    loop: int | None = None
    label: str | None = None
    mode: str | None = None
    csr: str | None = None
    size: int = field(default=32, compare=True)

    @property
    def klass(self) -> str:
        return CLASS[self.mnemonic]


def class_of(mnemonic: str) -> str:
    return CLASS[mnemonic]


def is_pulp(mnemonic: str) -> bool:
    """True for mnemonics outside base RV32IM."""
    return mnemonic.startswith(("p.", "pv.", "lp."))


def _rvc(r):
    return r is not None and 8 <= r <= 15


def _s6(v):
    return v is not None and -32 <= v <= 31


def is_compressible(instr: Instr) -> bool:
    """True when the instruction has a 16-bit form.

    =====================================  ==================================
    mnemonic                               16-bit when
    =====================================  ==================================
    nop                                    always
    mv                                     rd, rs1 != x0 (any register)
    add                                    rd != x0; rd equals a source, or
                                           rs1 is x0 (any register)
    addi                                   rd in x8..x15; rs1 == rd or x0;
                                           imm in [-32, 31]
    lui                                    rd in x8..x15; imm in [-32, 31]
    and or xor sub sll srl sra slt         rd == rs1; rd, rs2 in x8..x15
    lw sw                                  data and base in x8..x15; offset
                                           0..124, multiple of 4
    beq bne                                rs1 in x8..x15; rs2 in x8..x15
                                           or x0
    jal                                    rd in {x0, x1}
    =====================================  ==================================

    Post-increment and register-offset forms, and every extended mnemonic,
    are 32-bit. Branch and jump displacements are assumed to fit.
    """
    m = instr.mnemonic
    if m not in COMPRESSIBLE or instr.mode not in (None, "imm"):
        return False
    rd, a, b, imm = instr.rd, instr.rs1, instr.rs2, instr.imm
    if m == "nop":
        return True
    if m == "mv":
        return rd != 0 and a != 0
    if m == "add":
        return rd != 0 and (rd in (a, b) or a == 0)
    if m == "addi":
        return _rvc(rd) and a in (rd, 0) and _s6(imm)
    if m == "lui":
        return _rvc(rd) and _s6(imm)
    if m in ("and", "or", "xor", "sub", "sll", "srl", "sra", "slt"):
        return rd == a and _rvc(rd) and _rvc(b)
    if m in ("lw", "sw"):
        data = rd if m == "lw" else b
        return _rvc(data) and _rvc(a) and imm % 4 == 0 and 0 <= imm <= 124
    if m in ("beq", "bne"):
        return _rvc(a) and (b == 0 or _rvc(b))
    if m == "jal":
        return rd in (0, 1)
    return False


def reads(instr: Instr) -> tuple[int, ...]:
    """Architectural source registers (x0 excluded)."""
    m, fmt = instr.mnemonic, FORMAT[instr.mnemonic]
    srcs: list[int | None]
    if fmt in ("R", "RRI"):
        srcs = [instr.rs1, instr.rs2]
        if CLASS[m] == "mac" or m.startswith("pv.sdotp"):
            srcs.append(instr.rd)
    elif fmt in ("I", "M", "RI", "JR", "LPC"):
        srcs = [instr.rs1]
    elif fmt == "BF":
        srcs = [instr.rs1] + ([instr.rd] if m == "p.insert" else [])
    elif fmt == "VI":
        srcs = [instr.rs1] + ([instr.rd] if m.startswith("pv.insert") else [])
    elif fmt == "R4":
        srcs = [instr.rs1, instr.rs2, instr.rs3]
    elif fmt == "B":
        srcs = [instr.rs1, instr.rs2]
    elif fmt == "L":
        srcs = [instr.rs1] + ([instr.rs2] if instr.mode in ("reg", "reg!") else [])
    elif fmt == "S":
        srcs = [instr.rs1, instr.rs3] if instr.mode in ("reg", "reg!") else [instr.rs1]
        srcs.append(instr.rs2)
    elif fmt == "LPS":
        srcs = [instr.rs1]
    else:
        srcs = []
    return tuple(sorted({r for r in srcs if r}))


def writes(instr: Instr) -> tuple[int, ...]:
    fmt = FORMAT[instr.mnemonic]
    dsts: list[int | None] = []
    if fmt in ("R", "I", "U", "M", "J", "JR", "RRI", "RI", "BF", "R4", "VI", "CSR", "L"):
        dsts.append(instr.rd)
    if fmt in ("L", "S") and instr.mode in ("imm!", "reg!"):
        dsts.append(instr.rs1)
    return tuple(sorted({r for r in dsts if r}))
