"""Two-pass assembler for the extended assembly dialect.

Grammar (one statement per line, ``#`` starts a comment)::

    [label:] mnemonic op, op, ...
    .data ADDR [byte ...]      set the data location counter, emit bytes
    .byte v, ...  .half v, ...  .word v, ...
    .compress / .nocompress    enable/disable 16-bit forms
    .base ADDR                 address of the first instruction
    .entry LABEL|INDEX

Operands are destination first. Memory operands are ``imm(rs1)``,
``imm(rs1!)`` (post-increment), ``rs2(rs1)`` and ``rs2(rs1!)``. Registers may
be written ``xN``, ``rN`` or by ABI name; the canonical form is ``xN``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from . import isa
from .isa import FORMAT, IMM_RANGE, Instr


class SourceError(Exception):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


ABI = ("zero ra sp gp tp t0 t1 t2 s0 s1 a0 a1 a2 a3 a4 a5 a6 a7 "
       "s2 s3 s4 s5 s6 s7 s8 s9 s10 s11 t3 t4 t5 t6").split()
REGS = {name: i for i, name in enumerate(ABI)}
REGS["fp"] = 8
for _i in range(32):
    REGS[f"x{_i}"] = _i
    REGS[f"r{_i}"] = _i

LOOPS = {"L0": 0, "L1": 1, "l0": 0, "l1": 1}

_LABEL_RE = re.compile(r"^\s*([A-Za-z_.$][\w.$]*)\s*:(.*)$")
_MEM_RE = re.compile(r"^(?P<off>[^()]*)\((?P<base>[^()!\s]+)\s*(?P<inc>!)?\)$")
_NAME_RE = re.compile(r"^[A-Za-z_.$][\w.$]*$")


@dataclass
class Program:
    instrs: list[Instr] = field(default_factory=list)
    labels: dict[str, int] = field(default_factory=dict)
    data: dict[int, int] = field(default_factory=dict)
    entry: int = 0
    base: int = 0

    def addresses(self) -> list[int]:
        addrs, a = [], self.base
        for ins in self.instrs:
            addrs.append(a)
            a += ins.size // 8
        return addrs

    @property
    def entry_pc(self) -> int:
        return self.addresses()[self.entry] if self.instrs else self.base

    @property
    def end_address(self) -> int:
        return self.base + sum(i.size for i in self.instrs) // 8

    def label_address(self, name: str) -> int:
        idx = self.labels[name]
        addrs = self.addresses()
        return addrs[idx] if idx < len(addrs) else self.end_address


def _int(tok: str, line: int) -> int:
    try:
        return int(tok.strip(), 0)
    except ValueError:
        raise SourceError(line, f"bad number {tok.strip()!r}") from None


def _reg(tok: str, line: int) -> int:
    r = REGS.get(tok.strip())
    if r is None:
        raise SourceError(line, f"bad register {tok.strip()!r}")
    return r


def _loop(tok: str, line: int) -> int:
    lp = LOOPS.get(tok.strip())
    if lp is None:
        raise SourceError(line, f"bad loop set {tok.strip()!r} (expected L0 or L1)")
    return lp


def _label(tok: str, line: int) -> str:
    tok = tok.strip()
    if not _NAME_RE.match(tok):
        raise SourceError(line, f"bad label {tok!r}")
    return tok


def _check(mn: str, value: int, line: int, what: str = "immediate",
           rng: tuple[int, int] | None = None) -> int:
    lo, hi = rng or IMM_RANGE[mn]
    if not lo <= value <= hi:
        raise SourceError(line, f"{what} {value} out of range [{lo}, {hi}] for {mn}")
    return value


def _mem(tok: str, mn: str, line: int) -> dict:
    m = _MEM_RE.match(tok.strip())
    if not m:
        raise SourceError(line, f"bad memory operand {tok.strip()!r}")
    off = m.group("off").strip() or "0"
    base = _reg(m.group("base"), line)
    inc = bool(m.group("inc"))
    if off in REGS:
        mode, offv = ("reg!" if inc else "reg"), REGS[off]
    else:
        mode, offv = ("imm!" if inc else "imm"), _check(mn, _int(off, line), line, "offset")
    allowed = isa.PULP_MODES if mn.startswith("p.") else isa.BASE_MODES
    if mode not in allowed:
        raise SourceError(line, f"addressing mode {tok.strip()!r} not available for {mn}")
    return {"rs1": base, "mode": mode, "off": offv}


def _parse_instr(mn: str, ops: list[str], line: int) -> Instr:
    fmt = FORMAT.get(mn)
    if fmt is None:
        raise SourceError(line, f"unknown mnemonic {mn!r}")
    arity = {"R": 3, "I": 3, "U": 2, "M": 2, "N": 0, "B": 3, "J": 2, "JL": 1,
             "JR": 3, "L": 2, "S": 2, "RRI": 4, "RI": 3, "BF": 4, "R4": 4,
             "VI": 3, "LPS": 3, "LPSI": 3, "LPL": 2, "LPC": 2, "LPCI": 2,
             "CSR": 2}[fmt]
    if mn == "jal" and len(ops) == 1:
        ops = ["x1"] + ops
    if len(ops) != arity:
        raise SourceError(line, f"{mn} takes {arity} operands, got {len(ops)}")
    r, i, lb, lp = _reg, _int, _label, _loop
    if fmt == "R":
        return Instr(mn, rd=r(ops[0], line), rs1=r(ops[1], line), rs2=r(ops[2], line))
    if fmt in ("I", "VI"):
        return Instr(mn, rd=r(ops[0], line), rs1=r(ops[1], line),
                     imm=_check(mn, i(ops[2], line), line))
    if fmt == "U":
        return Instr(mn, rd=r(ops[0], line), imm=_check(mn, i(ops[1], line), line))
    if fmt == "M":
        return Instr(mn, rd=r(ops[0], line), rs1=r(ops[1], line))
    if fmt == "N":
        return Instr(mn)
    if fmt == "B":
        return Instr(mn, rs1=r(ops[0], line), rs2=r(ops[1], line), label=lb(ops[2], line))
    if fmt == "J":
        return Instr(mn, rd=r(ops[0], line), label=lb(ops[1], line))
    if fmt == "JL":
        return Instr(mn, label=lb(ops[0], line))
    if fmt == "JR":
        return Instr(mn, rd=r(ops[0], line), rs1=r(ops[1], line),
                     imm=_check(mn, i(ops[2], line), line))
    if fmt == "L":
        m = _mem(ops[1], mn, line)
        if m["mode"] in ("reg", "reg!"):
            return Instr(mn, rd=r(ops[0], line), rs1=m["rs1"], rs2=m["off"], mode=m["mode"])
        return Instr(mn, rd=r(ops[0], line), rs1=m["rs1"], imm=m["off"], mode=m["mode"])
    if fmt == "S":
        # destination (memory) first; the RISC-V order "rs2, mem" is accepted too
        mem_tok, val_tok = ops
        if "(" not in mem_tok:
            mem_tok, val_tok = val_tok, mem_tok
        m = _mem(mem_tok, mn, line)
        rs2 = r(val_tok, line)
        if m["mode"] in ("reg", "reg!"):
            return Instr(mn, rs1=m["rs1"], rs2=rs2, rs3=m["off"], mode=m["mode"])
        return Instr(mn, rs1=m["rs1"], rs2=rs2, imm=m["off"], mode=m["mode"])
    if fmt == "RRI":
        return Instr(mn, rd=r(ops[0], line), rs1=r(ops[1], line), rs2=r(ops[2], line),
                     shift=_check(mn, i(ops[3], line), line, "shift"))
    if fmt == "RI":
        return Instr(mn, rd=r(ops[0], line), rs1=r(ops[1], line),
                     shift=_check(mn, i(ops[2], line), line, "shift"))
    if fmt == "BF":
        length = _check(mn, i(ops[2], line), line, "field length", (1, 32))
        off = _check(mn, i(ops[3], line), line, "field offset", (0, 32 - length))
        return Instr(mn, rd=r(ops[0], line), rs1=r(ops[1], line), imm=length, imm2=off)
    if fmt == "R4":
        return Instr(mn, rd=r(ops[0], line), rs1=r(ops[1], line), rs2=r(ops[2], line),
                     rs3=r(ops[3], line))
    if fmt == "LPS":
        return Instr(mn, loop=lp(ops[0], line), rs1=r(ops[1], line), label=lb(ops[2], line))
    if fmt == "LPSI":
        return Instr(mn, loop=lp(ops[0], line), imm=_check(mn, i(ops[1], line), line),
                     label=lb(ops[2], line))
    if fmt == "LPL":
        return Instr(mn, loop=lp(ops[0], line), label=lb(ops[1], line))
    if fmt == "LPC":
        return Instr(mn, loop=lp(ops[0], line), rs1=r(ops[1], line))
    if fmt == "LPCI":
        return Instr(mn, loop=lp(ops[0], line), imm=_check(mn, i(ops[1], line), line))
    if fmt == "CSR":
        name = ops[1].strip()
        if name not in isa.CSR_NAMES:
            raise SourceError(line, f"unknown csr {name!r}")
        return Instr(mn, rd=r(ops[0], line), csr=name)
    raise AssertionError(fmt)


def _split_ops(text: str) -> list[str]:
    text = text.strip()
    return [t.strip() for t in text.split(",")] if text else []


def parse(text: str) -> Program:
    """Assemble ``text`` into a :class:`Program`; raises :class:`SourceError`."""
    instrs: list[tuple[Instr, bool, int]] = []   # (instr, compress, line)
    labels: dict[str, int] = {}
    data: dict[int, int] = {}
    data_pc: int | None = None
    compress = True
    base = 0
    entry: str | int = 0
    entry_line = 0

    def emit(values, width, line):
        nonlocal data_pc
        if data_pc is None:
            raise SourceError(line, "data directive before .data")
        for v in values:
            lo = -(1 << (8 * width - 1))
            if not lo <= v < (1 << (8 * width)):
                raise SourceError(line, f"value {v} does not fit in {width} byte(s)")
            v &= (1 << (8 * width)) - 1
            for k in range(width):
                if data_pc in data:
                    raise SourceError(line, f"overlapping data at {data_pc:#x}")
                data[data_pc] = (v >> (8 * k)) & 0xFF
                data_pc += 1

    for lineno, raw in enumerate(text.splitlines(), 1):
        src = raw.split("#", 1)[0].strip()
        while True:
            m = _LABEL_RE.match(src)
            if not m:
                break
            name = m.group(1)
            if name in labels:
                raise SourceError(lineno, f"duplicate label {name!r}")
            labels[name] = len(instrs)
            src = m.group(2).strip()
        if not src:
            continue
        head, _, rest = src.partition(" ")
        if "\t" in head:
            head, _, more = head.partition("\t")
            rest = more + " " + rest
        if head.startswith("."):
            args = rest.replace(",", " ").split()
            if head == ".data":
                if not args:
                    raise SourceError(lineno, ".data needs an address")
                data_pc = _int(args[0], lineno)
                emit([_int(a, lineno) for a in args[1:]], 1, lineno)
            elif head in (".byte", ".half", ".word"):
                width = {".byte": 1, ".half": 2, ".word": 4}[head]
                emit([_int(a, lineno) for a in args], width, lineno)
            elif head == ".compress":
                compress = True
            elif head == ".nocompress":
                compress = False
            elif head == ".base":
                if instrs or len(args) != 1:
                    raise SourceError(lineno, ".base must precede instructions and take one address")
                base = _int(args[0], lineno)
                if base % 2:
                    raise SourceError(lineno, ".base must be 2-byte aligned")
            elif head == ".entry":
                if len(args) != 1:
                    raise SourceError(lineno, ".entry takes one operand")
                entry = args[0] if _NAME_RE.match(args[0]) else _int(args[0], lineno)
                entry_line = lineno
            else:
                raise SourceError(lineno, f"unknown directive {head!r}")
            continue
        instrs.append((_parse_instr(head, _split_ops(rest), lineno), compress, lineno))

    n = len(instrs)
    final = []
    for ins, comp, _ in instrs:
        size = 16 if comp and isa.is_compressible(ins) else 32
        final.append(replace(ins, size=size))

    for idx, (ins, _, lineno) in enumerate(instrs):
        if ins.label is None:
            continue
        if ins.label not in labels:
            raise SourceError(lineno, f"unresolved label {ins.label!r}")
        target = labels[ins.label]
        if ins.mnemonic in ("lp.setup", "lp.setupi", "lp.end"):
            if target >= n:
                raise SourceError(lineno, f"loop end {ins.label!r} must label an instruction")
            if ins.mnemonic != "lp.end" and target <= idx:
                raise SourceError(lineno, f"loop end {ins.label!r} precedes its setup")

    if isinstance(entry, str):
        if entry not in labels:
            raise SourceError(entry_line, f"unresolved label {entry!r}")
        entry = labels[entry]
    if not 0 <= entry <= max(n - 1, 0):
        raise SourceError(entry_line or 1, f"entry {entry} out of range")

    prog = Program(final, labels, data, entry, base)
    addrs = prog.addresses()
    for idx, (ins, _, lineno) in enumerate(instrs):
        if ins.label is not None and isa.FORMAT[ins.mnemonic] == "B":
            delta = prog.label_address(ins.label) - addrs[idx]
            if not -4096 <= delta <= 4094:
                raise SourceError(lineno, f"branch target {ins.label!r} out of range")
    return prog


def _r(n):
    return f"x{n}"


def _mem_text(ins: Instr) -> str:
    inc = "!" if ins.mode.endswith("!") else ""
    if ins.mode.startswith("reg"):
        off = ins.rs2 if isa.FORMAT[ins.mnemonic] == "L" else ins.rs3
        return f"{_r(off)}({_r(ins.rs1)}{inc})"
    return f"{ins.imm}({_r(ins.rs1)}{inc})"


def format_instr(ins: Instr) -> str:
    fmt = FORMAT[ins.mnemonic]
    L = f"L{ins.loop}" if ins.loop is not None else None
    ops = {
        "R": lambda: [_r(ins.rd), _r(ins.rs1), _r(ins.rs2)],
        "I": lambda: [_r(ins.rd), _r(ins.rs1), str(ins.imm)],
        "VI": lambda: [_r(ins.rd), _r(ins.rs1), str(ins.imm)],
        "U": lambda: [_r(ins.rd), str(ins.imm)],
        "M": lambda: [_r(ins.rd), _r(ins.rs1)],
        "N": lambda: [],
        "B": lambda: [_r(ins.rs1), _r(ins.rs2), ins.label],
        "J": lambda: [_r(ins.rd), ins.label],
        "JL": lambda: [ins.label],
        "JR": lambda: [_r(ins.rd), _r(ins.rs1), str(ins.imm)],
        "L": lambda: [_r(ins.rd), _mem_text(ins)],
        "S": lambda: [_mem_text(ins), _r(ins.rs2)],
        "RRI": lambda: [_r(ins.rd), _r(ins.rs1), _r(ins.rs2), str(ins.shift)],
        "RI": lambda: [_r(ins.rd), _r(ins.rs1), str(ins.shift)],
        "BF": lambda: [_r(ins.rd), _r(ins.rs1), str(ins.imm), str(ins.imm2)],
        "R4": lambda: [_r(ins.rd), _r(ins.rs1), _r(ins.rs2), _r(ins.rs3)],
        "LPS": lambda: [L, _r(ins.rs1), ins.label],
        "LPSI": lambda: [L, str(ins.imm), ins.label],
        "LPL": lambda: [L, ins.label],
        "LPC": lambda: [L, _r(ins.rs1)],
        "LPCI": lambda: [L, str(ins.imm)],
        "CSR": lambda: [_r(ins.rd), ins.csr],
    }[fmt]()
    return f"{ins.mnemonic} {', '.join(ops)}" if ops else ins.mnemonic


def _data_blocks(data: dict[int, int]):
    addrs = sorted(data)
    start = prev = None
    block: list[int] = []
    for a in addrs:
        if prev is not None and a == prev + 1:
            block.append(data[a])
        else:
            if block:
                yield start, block
            start, block = a, [data[a]]
        prev = a
    if block:
        yield start, block


def print_program(prog: Program) -> str:
    """Canonical text; ``parse(print_program(p)) == p``."""
    out = []
    if prog.base:
        out.append(f".base {prog.base:#x}")
    if prog.entry:
        out.append(f".entry {prog.entry}")
    for start, block in _data_blocks(prog.data):
        out.append(f".data {start:#x}")
        for k in range(0, len(block), 16):
            out.append(".byte " + ", ".join(str(b) for b in block[k:k + 16]))
    by_index: dict[int, list[str]] = {}
    for name, idx in prog.labels.items():
        by_index.setdefault(idx, []).append(name)
    compress = True
    for idx, ins in enumerate(prog.instrs):
        for name in by_index.get(idx, []):
            out.append(f"{name}:")
        want = ins.size == 16 or not isa.is_compressible(ins)
        if want != compress and isa.is_compressible(ins):
            out.append(".compress" if want else ".nocompress")
            compress = want
        out.append(format_instr(ins))
    for name in by_index.get(len(prog.instrs), []):
        out.append(f"{name}:")
    return "\n".join(out) + "\n" if out else ""


# ``print`` is the documented name of the pretty-printer.
print = print_program  # noqa: A001
