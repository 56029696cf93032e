"""Architectural semantics: one instruction transforms a core and the TCDM.

Programs are compiled once into per-instruction closures (:func:`compile_program`).
A closure returns ``None`` when it falls through without touching memory, an
``int`` redirect target for taken branches/jumps, or a tuple of the word
addresses it accessed (high word first for word-crossing accesses).
Registers hold unsigned 32-bit values; ``regs[32]`` is a write sink for x0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import isa, lanes
from .assembler import Program
from .isa import Instr

M32 = 0xFFFFFFFF
SINK = 32
BARRIER_ADDR = 0x10000000
TCDM_DEFAULT = 72 * 1024


class Trap(Exception):
    """Architectural fault; the core halts with this as its diagnostic."""


def s32(v: int) -> int:
    return v - ((v & 0x80000000) << 1)


class MemorySystem:
    """Word-interleaved, byte-addressable TCDM starting at address 0."""

    def __init__(self, size: int = TCDM_DEFAULT, banks: int = 8,
                 scm_range: tuple[int, int] | None = None):
        if banks < 1 or size % (4 * banks):
            raise ValueError("TCDM size must be a multiple of 4 * banks")
        if scm_range is not None and not 0 <= scm_range[0] <= scm_range[1] <= size:
            raise ValueError("SCM range must lie inside the TCDM")
        self.size = size
        self.banks = banks
        self.scm_range = scm_range
        self.tcdm = bytearray(size)

    def bank_of(self, addr: int) -> int:
        return (addr >> 2) % self.banks

    def is_scm(self, addr: int) -> bool:
        return self.scm_range is not None and self.scm_range[0] <= addr < self.scm_range[1]

    def load_image(self, image) -> None:
        """Copy a ``{address: byte}`` mapping into the TCDM."""
        for addr, byte in image.items():
            if not 0 <= addr < self.size:
                raise Trap(f"data image address {addr:#x} outside TCDM")
            self.tcdm[addr] = byte

    def write_bytes(self, addr: int, data: bytes) -> None:
        if addr < 0 or addr + len(data) > self.size:
            raise Trap(f"data block at {addr:#x} outside TCDM")
        self.tcdm[addr:addr + len(data)] = data

    def read_bytes(self, addr: int, n: int) -> bytes:
        return bytes(self.tcdm[addr:addr + n])

    def load(self, ea: int, width: int, signed: bool):
        end = ea + width
        if end > self.size:
            raise Trap(f"load from {ea:#x} outside TCDM")
        v = int.from_bytes(self.tcdm[ea:end], "little")
        if signed and v >> (8 * width - 1):
            v = (v - (1 << (8 * width))) & M32
        lo, hi = ea & ~3, (end - 1) & ~3
        return v, ((lo,) if lo == hi else (hi, lo))

    def store(self, ea: int, width: int, value: int):
        end = ea + width
        if end > self.size:
            if ea == BARRIER_ADDR:
                return (BARRIER_ADDR,)
            raise Trap(f"store to {ea:#x} outside TCDM")
        self.tcdm[ea:end] = (value & ((1 << (8 * width)) - 1)).to_bytes(width, "little")
        lo, hi = ea & ~3, (end - 1) & ~3
        return (lo,) if lo == hi else (hi, lo)


class CoreState:
    __slots__ = ("regs", "pc", "lp_start", "lp_end", "lp_count", "halted",
                 "trap", "hartid", "ncores", "div_bits")

    def __init__(self, pc: int = 0, hartid: int = 0, ncores: int = 1):
        self.regs = [0] * 33
        self.pc = pc
        self.lp_start = [0, 0]
        self.lp_end = [0, 0]
        self.lp_count = [0, 0]
        self.halted = False
        self.trap: str | None = None
        self.hartid = hartid
        self.ncores = ncores
        self.div_bits = 0

    def reg(self, i: int) -> int:
        return self.regs[i]

    def sreg(self, i: int) -> int:
        return s32(self.regs[i])

    def snapshot(self):
        return (tuple(self.regs[:32]), self.pc, tuple(self.lp_start),
                tuple(self.lp_end), tuple(self.lp_count), self.halted, self.trap)


@dataclass
class LaneVector:
    word: int
    width: int = 8
    signed: bool = True

    @property
    def lanes(self) -> list[int]:
        mask = (1 << self.width) - 1
        out = [(self.word >> p) & mask for p in range(0, 32, self.width)]
        if self.signed:
            out = [v - (1 << self.width) if v >> (self.width - 1) else v for v in out]
        return out

    @classmethod
    def from_lanes(cls, values, width: int = 8, signed: bool = True) -> "LaneVector":
        mask = (1 << width) - 1
        word = 0
        for i, v in enumerate(values):
            word |= (v & mask) << (i * width)
        return cls(word, width, signed)


# -- semantic operations ------------------------------------------------------

def replicate(value: int, width: int) -> int:
    return (value & 0xFF) * 0x01010101 if width == 8 else (value & 0xFFFF) * 0x00010001


def exec_vector_alu(op: str, a: int, b: int, width: int) -> int:
    return lanes.vec_alu(isa.VECTOR_OPS.index(op), a & M32, b & M32, width)


def exec_dotp(variant: str, a: int, b: int, acc: int = 0) -> int:
    """``variant`` is one of sb, ub, sh, uh."""
    width = 8 if variant[1] == "b" else 16
    return lanes.dotp(a & M32, b & M32, acc & M32, width, variant[0] == "s")


def exec_shuffle(a: int, b: int, mask: int, lane_width: int) -> int:
    return lanes.shuffle(a & M32, b & M32, mask & M32, lane_width)


def exec_fixpoint(op: str, a: int, b: int, shift: int = 0) -> int:
    """addRN/addRNu/subRN/subRNu/mulsRN/muluRN/clip/clipu use ``shift``;
    mac/msu take ``shift`` as the accumulator."""
    a &= M32
    b &= M32
    if op in ("addRN", "addRNu", "subRN", "subRNu"):
        return lanes.add_rn(a, b, shift, op.startswith("sub"), op.endswith("u"))
    if op in ("mulsRN", "muluRN"):
        return lanes.mul_rn(a, b, shift, op == "muluRN")
    if op in ("clip", "clipu"):
        return lanes.clip(a, shift, op == "clipu")
    if op in ("mac", "msu"):
        return lanes.mac(shift & M32, a, b, op == "msu")
    raise ValueError(f"unknown fixed-point op {op!r}")


def exec_bitmanip(op: str, a: int, b: int = 0, length: int = 1, off: int = 0) -> int:
    a &= M32
    b &= M32
    if op == "extract":
        return lanes.extract(a, length, off, True)
    if op == "extractu":
        return lanes.extract(a, length, off, False)
    if op == "insert":
        return lanes.insert(b, a, length, off)
    if op == "bclr":
        return lanes.bclr(a, length, off)
    if op == "bset":
        return lanes.bset(a, length, off)
    if op in ("cnt", "ff1", "fl1", "clb"):
        return getattr(lanes, op)(a)
    raise ValueError(f"unknown bit-manipulation op {op!r}")


DIV_OPS = {"div": 0, "divu": 1, "rem": 2, "remu": 3}


def exec_div(op: str, a: int, b: int) -> int:
    return lanes.divide(a & M32, b & M32, DIV_OPS[op])


@dataclass
class MemAccess:
    value: int | None
    new_base: int
    accesses: list[tuple[int, int]] = field(default_factory=list)


def exec_mem(mnemonic: str, value_or_none: int | None, base: int, offset: int,
             mode: str, mem: MemorySystem) -> MemAccess:
    """Single load/store on ``mem``; returns the loaded value, the updated base
    and the ``(word_address, bank)`` records, high word first."""
    root = mnemonic[2:] if mnemonic.startswith("p.") else mnemonic
    width = isa.LOAD_WIDTH[root]
    if mode in ("imm!", "reg!"):
        ea, new_base = base & M32, (base + offset) & M32
    else:
        ea, new_base = (base + offset) & M32, base & M32
    if root.startswith("s"):
        words = mem.store(ea, width, value_or_none or 0)
        value = None
    else:
        value, words = mem.load(ea, width, isa.LOAD_SIGNED[root])
    return MemAccess(value, new_base, [(w, mem.bank_of(w)) for w in words])


def hwloop_next(core: CoreState, addr: int, fallthrough: int) -> tuple[int, bool]:
    """Next pc after the instruction at ``addr`` retired without redirecting."""
    cnt = core.lp_count
    for L in (0, 1):
        if cnt[L] and core.lp_end[L] == addr:
            if cnt[L] > 1:
                cnt[L] -= 1
                return core.lp_start[L], True
            cnt[L] = 0
    return fallthrough, False


# -- instruction compilation ------------------------------------------------------

def _alu_rr(op):
    return {
        "add": lambda x, y: (x + y) & M32,
        "sub": lambda x, y: (x - y) & M32,
        "and": lambda x, y: x & y,
        "or": lambda x, y: x | y,
        "xor": lambda x, y: x ^ y,
        "sll": lambda x, y: (x << (y & 31)) & M32,
        "srl": lambda x, y: x >> (y & 31),
        "sra": lambda x, y: (s32(x) >> (y & 31)) & M32,
        "slt": lambda x, y: int(s32(x) < s32(y)),
        "sltu": lambda x, y: int(x < y),
        "mul": lambda x, y: (x * y) & M32,
        "mulh": lambda x, y: ((s32(x) * s32(y)) >> 32) & M32,
        "mulhu": lambda x, y: (x * y) >> 32,
    }[op]


def _compile(ins: Instr, addr: int, prog: Program, addr_of_label):
    mn = ins.mnemonic
    fmt = isa.FORMAT[mn]
    rd = ins.rd if ins.rd else SINK
    r0 = ins.rd or 0
    a, b = ins.rs1, ins.rs2
    nxt = addr + ins.size // 8

    if mn in ("add", "addi", "mv", "and", "andi", "or", "ori", "xor", "xori",
              "slli", "srli", "srai", "lui", "sub"):
        # hand-specialised hot paths
        if mn == "add":
            def h(regs, core, mem):
                regs[rd] = (regs[a] + regs[b]) & M32
        elif mn == "addi":
            imm = ins.imm

            def h(regs, core, mem):
                regs[rd] = (regs[a] + imm) & M32
        elif mn == "mv":
            def h(regs, core, mem):
                regs[rd] = regs[a]
        elif mn == "sub":
            def h(regs, core, mem):
                regs[rd] = (regs[a] - regs[b]) & M32
        elif mn in ("and", "or", "xor"):
            f = _alu_rr(mn)

            def h(regs, core, mem):
                regs[rd] = f(regs[a], regs[b])
        elif mn in ("andi", "ori", "xori"):
            f = _alu_rr(mn[:-1])
            imm = ins.imm & M32

            def h(regs, core, mem):
                regs[rd] = f(regs[a], imm)
        elif mn == "slli":
            sh = ins.imm

            def h(regs, core, mem):
                regs[rd] = (regs[a] << sh) & M32
        elif mn == "srli":
            sh = ins.imm

            def h(regs, core, mem):
                regs[rd] = regs[a] >> sh
        elif mn == "srai":
            sh = ins.imm

            def h(regs, core, mem):
                regs[rd] = (s32(regs[a]) >> sh) & M32
        else:  # lui
            val = (ins.imm << 12) & M32

            def h(regs, core, mem):
                regs[rd] = val
        return h

    if fmt == "R" and mn in ("sll", "srl", "sra", "slt", "sltu", "mul", "mulh", "mulhu"):
        f = _alu_rr(mn)

        def h(regs, core, mem):
            regs[rd] = f(regs[a], regs[b])
        return h
    if mn in ("slti", "sltiu"):
        imm = ins.imm

        if mn == "slti":
            def h(regs, core, mem):
                regs[rd] = int(s32(regs[a]) < imm)
        else:
            uimm = imm & M32

            def h(regs, core, mem):
                regs[rd] = int(regs[a] < uimm)
        return h
    if mn == "auipc":
        val = (addr + (ins.imm << 12)) & M32

        def h(regs, core, mem):
            regs[rd] = val
        return h
    if mn == "nop":
        return lambda regs, core, mem: None
    if fmt == "B":
        target = addr_of_label(ins.label)
        cmp = {
            "beq": lambda x, y: x == y,
            "bne": lambda x, y: x != y,
            "blt": lambda x, y: s32(x) < s32(y),
            "bge": lambda x, y: s32(x) >= s32(y),
            "bltu": lambda x, y: x < y,
            "bgeu": lambda x, y: x >= y,
        }[mn]
        if mn == "bne":
            def h(regs, core, mem):
                if regs[a] != regs[b]:
                    return target
        elif mn == "beq":
            def h(regs, core, mem):
                if regs[a] == regs[b]:
                    return target
        else:
            def h(regs, core, mem):
                if cmp(regs[a], regs[b]):
                    return target
        return h
    if mn in ("jal", "j"):
        target = addr_of_label(ins.label)

        def h(regs, core, mem):
            regs[rd] = nxt
            return target
        return h
    if mn == "jalr":
        imm = ins.imm

        def h(regs, core, mem):
            t = ((regs[a] + imm) & M32) & ~1
            regs[rd] = nxt
            return t
        return h
    if mn in DIV_OPS:
        op = DIV_OPS[mn]
        divide = lanes.divide

        def h(regs, core, mem):
            x, y = regs[a], regs[b]
            q = divide(x, y, op & 1)
            core.div_bits = (abs(s32(q)) if not op & 1 else q).bit_length()
            regs[rd] = q if op < 2 else divide(x, y, op)
        return h
    if mn == "csrr":
        name = ins.csr

        def h(regs, core, mem):
            if name == "mhartid":
                v = core.hartid
            elif name == "ncores":
                v = core.ncores
            else:
                field_, L = name[2:-1], int(name[-1])
                v = getattr(core, "lp_" + field_)[L]
            regs[rd] = v & M32
        return h

    if fmt in ("L", "S"):
        return _compile_mem(ins)

    if mn.startswith("lp."):
        return _compile_hwloop(ins, nxt, addr_of_label)

    # fixed point
    if mn in ("p.addRN", "p.addRNu", "p.subRN", "p.subRNu"):
        sub, uns, sh = mn.startswith("p.sub"), mn.endswith("u"), ins.shift
        add_rn = lanes.add_rn

        def h(regs, core, mem):
            regs[rd] = add_rn(regs[a], regs[b], sh, sub, uns)
        return h
    if mn in ("p.mulsRN", "p.muluRN"):
        uns, sh = mn == "p.muluRN", ins.shift
        mul_rn = lanes.mul_rn

        def h(regs, core, mem):
            regs[rd] = mul_rn(regs[a], regs[b], sh, uns)
        return h
    if mn in ("p.clip", "p.clipu"):
        uns, sh = mn == "p.clipu", ins.shift
        clip = lanes.clip

        def h(regs, core, mem):
            regs[rd] = clip(regs[a], sh, uns)
        return h
    if mn in ("p.mac", "p.msu"):
        sub = mn == "p.msu"
        mac = lanes.mac

        def h(regs, core, mem):
            regs[rd] = mac(regs[r0], regs[a], regs[b], sub)
        return h

    # bit manipulation
    if fmt == "BF":
        length, off = ins.imm, ins.imm2
        if mn in ("p.extract", "p.extractu"):
            signed = mn == "p.extract"
            extract = lanes.extract

            def h(regs, core, mem):
                regs[rd] = extract(regs[a], length, off, signed)
        elif mn == "p.insert":
            insert = lanes.insert

            def h(regs, core, mem):
                regs[rd] = insert(regs[r0], regs[a], length, off)
        else:
            f = lanes.bclr if mn == "p.bclr" else lanes.bset

            def h(regs, core, mem):
                regs[rd] = f(regs[a], length, off)
        return h
    if mn in ("p.cnt", "p.ff1", "p.fl1", "p.clb"):
        f = getattr(lanes, mn[2:])

        def h(regs, core, mem):
            regs[rd] = f(regs[a])
        return h

    if mn.startswith("pv."):
        return _compile_vector(ins, rd, r0)
    raise NotImplementedError(mn)


def _compile_vector(ins: Instr, rd: int, r0: int):
    mn = ins.mnemonic
    parts = mn.split(".")
    op = parts[1]
    a, b = ins.rs1, ins.rs2

    if op in ("dotp", "sdotp"):
        variant = parts[-1]
        width = 8 if variant[1] == "b" else 16
        signed = variant[0] == "s"
        acc_reg = r0 if op == "sdotp" else 0   # regs[0] is always 0
        dotp = lanes.dotp
        if "sc" in parts:
            def h(regs, core, mem):
                regs[rd] = dotp(regs[a], replicate(regs[b], width), regs[acc_reg], width, signed)
        else:
            def h(regs, core, mem):
                regs[rd] = dotp(regs[a], regs[b], regs[acc_reg], width, signed)
        return h

    width = 8 if parts[-1] == "b" else 16
    lanes_n = 32 // width
    lane_mask = (1 << width) - 1
    shuffle = lanes.shuffle
    sel_bit = 4 if width == 8 else 2

    def fixed_mask(pairs):
        m = 0
        for j, (sel, idx) in enumerate(pairs):
            m |= ((sel_bit if sel else 0) | idx) << (j * width)
        return m

    if op == "shuffle":
        if "sci" in parts:
            bits = 2 if width == 8 else 1
            mask = fixed_mask([(1, (ins.imm >> (bits * j)) & ((1 << bits) - 1))
                               for j in range(lanes_n)])

            def h(regs, core, mem):
                x = regs[a]
                regs[rd] = shuffle(x, x, mask, width)
        else:
            # single-source: the select bit is forced to the first operand
            force = fixed_mask([(1, 0)] * lanes_n)

            def h(regs, core, mem):
                x = regs[a]
                regs[rd] = shuffle(x, x, regs[b] | force, width)
        return h
    if op == "shuffle2":
        c = ins.rs3

        def h(regs, core, mem):
            regs[rd] = shuffle(regs[a], regs[b], regs[c], width)
        return h
    if op == "insert":
        lane = ins.imm
        mask = fixed_mask([(1, 0) if j == lane else (0, j) for j in range(lanes_n)])

        def h(regs, core, mem):
            regs[rd] = shuffle(regs[a], regs[r0], mask, width)
        return h
    if op in ("extract", "extractu"):
        mask = fixed_mask([(1, ins.imm)] * lanes_n)
        sign = 1 << (width - 1)
        signed = op == "extract"

        def h(regs, core, mem):
            v = shuffle(regs[a], 0, mask, width) & lane_mask
            if signed and v & sign:
                v = (v - (1 << width)) & M32
            regs[rd] = v
        return h
    if op == "pack":
        if width == 16:
            mask = fixed_mask([(0, 0), (1, 0)])
        else:
            mask = fixed_mask([(0, 0), (1, 0), (0, 1), (1, 1)])

        def h(regs, core, mem):
            regs[rd] = shuffle(regs[a], regs[b], mask, width)
        return h

    code = isa.VECTOR_OPS.index(op)
    vec_alu = lanes.vec_alu
    if "sci" in parts:
        bval = replicate(ins.imm & lane_mask, width)

        def h(regs, core, mem):
            regs[rd] = vec_alu(code, regs[a], bval, width)
    elif "sc" in parts:
        def h(regs, core, mem):
            regs[rd] = vec_alu(code, regs[a], replicate(regs[b], width), width)
    else:
        def h(regs, core, mem):
            regs[rd] = vec_alu(code, regs[a], regs[b], width)
    return h


def _compile_mem(ins: Instr):
    mn = ins.mnemonic
    root = mn[2:] if mn.startswith("p.") else mn
    width = isa.LOAD_WIDTH[root]
    base, mode = ins.rs1, ins.mode
    wb = base if base else SINK
    if root.startswith("l"):
        rd = ins.rd if ins.rd else SINK
        signed = isa.LOAD_SIGNED[root]
        if mode == "imm":
            imm = ins.imm
            if width == 4:
                def h(regs, core, mem):
                    ea = (regs[base] + imm) & M32
                    if ea & 3 == 0 and ea + 4 <= mem.size:
                        t = mem.tcdm
                        regs[rd] = t[ea] | (t[ea + 1] << 8) | (t[ea + 2] << 16) | (t[ea + 3] << 24)
                        return (ea,)
                    regs[rd], acc = mem.load(ea, 4, signed)
                    return acc
            elif width == 1:
                def h(regs, core, mem):
                    ea = (regs[base] + imm) & M32
                    if ea >= mem.size:
                        raise Trap(f"load from {ea:#x} outside TCDM")
                    v = mem.tcdm[ea]
                    if signed and v & 0x80:
                        v |= 0xFFFFFF00
                    regs[rd] = v
                    return (ea & ~3,)
            else:
                def h(regs, core, mem):
                    regs[rd], acc = mem.load((regs[base] + imm) & M32, width, signed)
                    return acc
        elif mode == "imm!":
            imm = ins.imm

            def h(regs, core, mem):
                ea = regs[base]
                regs[wb] = (ea + imm) & M32
                regs[rd], acc = mem.load(ea, width, signed)
                return acc
        elif mode == "reg":
            off = ins.rs2

            def h(regs, core, mem):
                regs[rd], acc = mem.load((regs[base] + regs[off]) & M32, width, signed)
                return acc
        else:
            off = ins.rs2

            def h(regs, core, mem):
                ea = regs[base]
                regs[wb] = (ea + regs[off]) & M32
                regs[rd], acc = mem.load(ea, width, signed)
                return acc
        return h

    val = ins.rs2
    if mode == "imm":
        imm = ins.imm

        def h(regs, core, mem):
            return mem.store((regs[base] + imm) & M32, width, regs[val])
    elif mode == "imm!":
        imm = ins.imm

        def h(regs, core, mem):
            ea = regs[base]
            v = regs[val]
            regs[wb] = (ea + imm) & M32
            return mem.store(ea, width, v)
    elif mode == "reg":
        off = ins.rs3

        def h(regs, core, mem):
            return mem.store((regs[base] + regs[off]) & M32, width, regs[val])
    else:
        off = ins.rs3

        def h(regs, core, mem):
            ea = regs[base]
            v = regs[val]
            regs[wb] = (ea + regs[off]) & M32
            return mem.store(ea, width, v)
    return h


def _compile_hwloop(ins: Instr, nxt: int, addr_of_label):
    mn, L = ins.mnemonic, ins.loop
    if mn in ("lp.setup", "lp.setupi"):
        end = addr_of_label(ins.label)
        src, imm = ins.rs1, ins.imm

        def h(regs, core, mem):
            count = regs[src] if mn == "lp.setup" else imm
            if count == 0:
                raise Trap(f"{mn} L{L} with count 0")
            if core.lp_count[L]:
                raise Trap(f"{mn} L{L} while loop set L{L} is active")
            core.lp_start[L] = nxt
            core.lp_end[L] = end
            core.lp_count[L] = count
        return h
    if mn in ("lp.start", "lp.end"):
        target = addr_of_label(ins.label)
        regs_ = "lp_start" if mn == "lp.start" else "lp_end"

        def h(regs, core, mem):
            getattr(core, regs_)[L] = target
        return h
    src, imm = ins.rs1, ins.imm

    def h(regs, core, mem):
        core.lp_count[L] = regs[src] if mn == "lp.count" else imm
    return h


class CompiledProgram:
    """A :class:`Program` plus per-instruction closures and static metadata."""

    def __init__(self, prog: Program):
        self.prog = prog
        self.addrs = prog.addresses()
        self.end = prog.end_address
        self.index_of = {a: i for i, a in enumerate(self.addrs)}
        self.entry_pc = self.addrs[prog.entry] if prog.instrs else prog.base

        def addr_of_label(name):
            return prog.label_address(name)

        self.handlers = [_compile(ins, a, prog, addr_of_label)
                         for ins, a in zip(prog.instrs, self.addrs)]
        self.sizes = [ins.size // 8 for ins in prog.instrs]
        self.klass = [ins.klass for ins in prog.instrs]
        self.reads = [frozenset(isa.reads(ins)) for ins in prog.instrs]
        # destination of a data load (the LSU write port), 0 if none
        self.load_rd = [(ins.rd or 0) if ins.klass == "load" else 0 for ins in prog.instrs]
        self.is_div = [ins.klass == "div" for ins in prog.instrs]
        self.is_store = [ins.klass == "store" for ins in prog.instrs]


def compile_program(prog: Program) -> CompiledProgram:
    return CompiledProgram(prog)


@dataclass
class Effect:
    index: int
    reads: list[int]
    writes: list[int]
    next_pc: int
    hwloop_backjump: bool = False
    taken: bool = False


def step(core: CoreState, cprog: CompiledProgram, mem: MemorySystem) -> Effect | None:
    """Execute one instruction. Returns ``None`` (and halts) when the pc has
    run off the end of the program or the instruction trapped."""
    if core.halted:
        raise RuntimeError("core is halted")
    idx = cprog.index_of.get(core.pc)
    if idx is None:
        core.halted = True
        if core.pc != cprog.end:
            core.trap = f"pc {core.pc:#x} is not an instruction address"
        return None
    addr = core.pc
    fall = addr + cprog.sizes[idx]
    try:
        res = cprog.handlers[idx](core.regs, core, mem)
    except Trap as exc:
        core.halted = True
        core.trap = str(exc)
        return None
    reads, writes = [], []
    taken = backjump = False
    if type(res) is int:
        next_pc, taken = res, True
    else:
        if res is not None:
            (writes if cprog.is_store[idx] else reads).extend(res)
        next_pc, backjump = hwloop_next(core, addr, fall)
    core.pc = next_pc
    return Effect(idx, reads, writes, next_pc, backjump, taken)


def run(prog: Program | CompiledProgram, mem: MemorySystem | None = None,
        core: CoreState | None = None, budget: int = 10_000_000):
    """Untimed architectural run; returns ``(core, mem, retired)``."""
    cprog = prog if isinstance(prog, CompiledProgram) else compile_program(prog)
    if mem is None:
        mem = MemorySystem()
        mem.load_image(cprog.prog.data)
    if core is None:
        core = CoreState(cprog.entry_pc)
    retired = 0
    while not core.halted and retired < budget:
        if step(core, cprog, mem) is not None:
            retired += 1
    return core, mem, retired
