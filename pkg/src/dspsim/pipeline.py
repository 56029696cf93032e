"""Cycle-approximate timing for the 4-stage in-order pipeline.

Every retired instruction costs one cycle plus penalties:

* load-use: the previous instruction was a load whose destination is read;
* taken branch or jump redirect;
* hardware-loop backjump (zero by default);
* fetch refill after a redirect whose target is a 32-bit instruction
  straddling an instruction-line boundary (the prefetch buffer needs two lines);
* extra cycles for accesses crossing a word boundary;
* division latency that depends on the quotient magnitude.
"""
from __future__ import annotations

import configparser
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .assembler import Program
from .execute import (BARRIER_ADDR, CompiledProgram, CoreState, Effect, MemorySystem,
                      Trap, compile_program, hwloop_next)

STALL_REASONS = ("load_use", "branch", "hwloop", "fetch", "mem_unaligned",
                 "div", "contention", "barrier")


def _has_section(text: str) -> bool:
    return any(line.strip().startswith("[") for line in text.splitlines())


@dataclass
class TimingConfig:
    taken_branch_penalty: int = 2
    load_use_penalty: int = 1
    unaligned_mem_extra: int = 1
    hwloop_backjump_penalty: int = 0
    line_refill_penalty: int = 1
    line_bits: int = 128
    div_min_latency: int = 2
    div_max_latency: int = 32

    def div_latency(self, quotient_bits: int) -> int:
        return min(max(2 + quotient_bits, self.div_min_latency), self.div_max_latency)

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")
        if self.line_bits < 32 or self.line_bits % 32:
            raise ValueError("line_bits must be a positive multiple of 32")
        if not 1 <= self.div_min_latency <= self.div_max_latency:
            raise ValueError("need 1 <= div_min_latency <= div_max_latency")

    @classmethod
    def from_text(cls, text: str) -> "TimingConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        cp.read_string(text if _has_section(text) else "[timing]\n" + text)
        sect = cp[cp.sections()[0]] if cp.sections() else {}
        known = {f.name for f in fields(cls)}
        unknown = set(sect) - known
        if unknown:
            raise ValueError(f"unknown timing keys: {', '.join(sorted(unknown))}")
        return cls(**{k: int(v, 0) for k, v in sect.items()})

    @classmethod
    def from_file(cls, path) -> "TimingConfig":
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        return "[timing]\n" + "".join(f"{k} = {v}\n" for k, v in asdict(self).items())


@dataclass
class CycleTrace:
    """One record per retired instruction, parallel lists."""

    index: list[int] = field(default_factory=list)
    issue_cycle: list[int] = field(default_factory=list)
    cycles: list[int] = field(default_factory=list)
    stall_reason: list[str | None] = field(default_factory=list)

    def append(self, index, issue, cycles, reason):
        self.index.append(index)
        self.issue_cycle.append(issue)
        self.cycles.append(cycles)
        self.stall_reason.append(reason)

    def __len__(self):
        return len(self.index)

    def records(self):
        return list(zip(self.index, self.issue_cycle, self.cycles, self.stall_reason))

    @property
    def total_cycles(self) -> int:
        return self.issue_cycle[-1] + self.cycles[-1] if self.index else 0


@dataclass
class CoreStats:
    cycles: int = 0
    retired: int = 0
    stalls: dict = field(default_factory=lambda: dict.fromkeys(STALL_REASONS, 0))
    sram_accesses: int = 0        # aligned accesses to SRAM
    scm_accesses: int = 0         # aligned accesses to SCM
    unaligned_accesses: int = 0   # word-crossing accesses (two words each)
    loads: int = 0
    stores: int = 0
    completed: bool = False
    trap: str | None = None
    counts: list[int] = field(default_factory=list, repr=False)
    program: Program | None = field(default=None, repr=False)
    state: CoreState | None = field(default=None, repr=False)

    @property
    def ipc(self) -> float:
        return self.retired / self.cycles if self.cycles else 0.0

    def retired_by_mnemonic(self) -> Counter:
        out: Counter = Counter()
        for ins, n in zip(self.program.instrs, self.counts):
            if n:
                out[ins.mnemonic] += n
        return out

    def retired_by_class(self) -> Counter:
        out: Counter = Counter()
        for ins, n in zip(self.program.instrs, self.counts):
            if n:
                out[ins.klass] += n
        return out

    @property
    def compressed_retired(self) -> int:
        return sum(n for ins, n in zip(self.program.instrs, self.counts) if ins.size == 16)

    @property
    def compressed_ratio(self) -> float:
        return self.compressed_retired / self.retired if self.retired else 0.0

    @property
    def word_accesses(self) -> int:
        return self.sram_accesses + self.scm_accesses + 2 * self.unaligned_accesses

    @property
    def stall_cycles(self) -> int:
        return sum(self.stalls.values())


@dataclass
class FetchState:
    """Timing state carried between :func:`time_step` calls."""

    prev_load_rd: int = 0


def time_step(effect: Effect, cprog: CompiledProgram, core: CoreState,
              config: TimingConfig, state: FetchState) -> tuple[int, str | None]:
    """Cycles consumed by the instruction that produced ``effect`` (from
    :func:`dspsim.execute.step`) and its dominant stall reason."""
    ins = cprog.prog.instrs[effect.index]
    cycles, reason = 1, None
    if state.prev_load_rd and state.prev_load_rd in cprog.reads[effect.index]:
        cycles += config.load_use_penalty
        reason = "load_use"
    state.prev_load_rd = (ins.rd or 0) if ins.klass == "load" else 0
    words = [w for w in effect.reads + effect.writes if w != BARRIER_ADDR]
    if len(words) > 1:
        cycles += config.unaligned_mem_extra * (len(words) - 1)
        reason = "mem_unaligned"
    if effect.taken:
        cycles += config.taken_branch_penalty
        reason = "branch"
    if effect.hwloop_backjump and config.hwloop_backjump_penalty:
        cycles += config.hwloop_backjump_penalty
        reason = "hwloop"
    if effect.taken or effect.hwloop_backjump:
        t = cprog.index_of.get(effect.next_pc)
        line = config.line_bits // 8
        if t is not None and (effect.next_pc % line) + cprog.sizes[t] > line:
            cycles += config.line_refill_penalty
            reason = reason or "fetch"
    if ins.klass == "div":
        cycles += config.div_latency(core.div_bits) - 1
        reason = "div"
    return cycles, reason


class CoreTimer:
    """Executes one instruction at a time and prices it.

    :meth:`issue` returns ``(index, pre, accesses, post, reason, barrier)``: ``pre``
    stall cycles before the instruction, the TCDM word addresses it requests
    (high word first), ``post`` penalty cycles after it, counted as on a
    contention-free memory, the dominant stall reason and whether the
    instruction arrived at the cluster barrier. It returns ``None`` once the
    core has halted.
    """

    def __init__(self, cprog: CompiledProgram, core: CoreState, mem: MemorySystem,
                 config: TimingConfig):
        self.cprog = cprog
        self.core = core
        self.mem = mem
        self.cfg = config
        self.stats = CoreStats(counts=[0] * len(cprog.handlers), program=cprog.prog, state=core)
        self.prev_load = 0
        line = config.line_bits // 8
        # redirect targets that pay a refill: 32-bit instructions crossing a line
        self.straddles = {a for a, s in zip(cprog.addrs, cprog.sizes)
                          if (a % line) + s > line}

    def issue(self):
        core = self.core
        if core.halted:
            return None
        cp = self.cprog
        pc = core.pc
        idx = cp.index_of.get(pc)
        st = self.stats
        if idx is None:
            core.halted = True
            if pc == cp.end:
                st.completed = True
            else:
                core.trap = st.trap = f"pc {pc:#x} is not an instruction address"
            return None
        try:
            res = cp.handlers[idx](core.regs, core, self.mem)
        except Trap as exc:
            core.halted = True
            core.trap = st.trap = f"{exc} (at pc {pc:#x})"
            return None
        cfg = self.cfg
        stalls = st.stalls
        st.counts[idx] += 1
        st.retired += 1
        reason = None
        pre = post = 0
        prev = self.prev_load
        if prev and prev in cp.reads[idx]:
            pre = cfg.load_use_penalty
            stalls["load_use"] += pre
            reason = "load_use"
        self.prev_load = cp.load_rd[idx]
        accesses = ()
        barrier = False
        redirect = False
        if res is None:
            nxt = pc + cp.sizes[idx]
        elif type(res) is int:
            nxt = res
            redirect = True
            post = cfg.taken_branch_penalty
            stalls["branch"] += post
            reason = "branch"
        else:
            nxt = pc + cp.sizes[idx]
            if res[0] == BARRIER_ADDR:
                barrier = True
            else:
                accesses = res
                mem = self.mem
                n = len(res)
                if cp.is_store[idx]:
                    st.stores += 1
                else:
                    st.loads += 1
                if n == 1:
                    if mem.scm_range is not None and mem.is_scm(res[0]):
                        st.scm_accesses += 1
                    else:
                        st.sram_accesses += 1
                else:
                    st.unaligned_accesses += 1
                    extra = cfg.unaligned_mem_extra * (n - 1)
                    post += extra
                    stalls["mem_unaligned"] += extra
                    reason = "mem_unaligned"
        if not redirect:
            cnt = core.lp_count
            if cnt[0] or cnt[1]:
                nxt, redirect = hwloop_next(core, pc, nxt)
                if redirect and cfg.hwloop_backjump_penalty:
                    post += cfg.hwloop_backjump_penalty
                    stalls["hwloop"] += cfg.hwloop_backjump_penalty
                    reason = "hwloop"
        if redirect and nxt in self.straddles:
            post += cfg.line_refill_penalty
            stalls["fetch"] += cfg.line_refill_penalty
            reason = reason or "fetch"
        if cp.is_div[idx]:
            d = cfg.div_latency(core.div_bits) - 1
            post += d
            stalls["div"] += d
            reason = "div"
        core.pc = nxt
        return idx, pre, accesses, post, reason, barrier


def run_timed(program: Program | CompiledProgram, config: TimingConfig | None = None, *,
              mem: MemorySystem | None = None, core: CoreState | None = None,
              budget: int = 50_000_000, trace: bool = True):
    """Run a single core to completion. Returns ``(CycleTrace | None, CoreStats)``."""
    cprog = program if isinstance(program, CompiledProgram) else compile_program(program)
    config = config or TimingConfig()
    if mem is None:
        mem = MemorySystem()
        mem.load_image(cprog.prog.data)
    if core is None:
        core = CoreState(cprog.entry_pc)
    timer = CoreTimer(cprog, core, mem, config)
    tr = CycleTrace() if trace else None
    t = 0
    issue = timer.issue
    while True:
        r = issue()
        if r is None:
            break
        idx, pre, _, post, reason, _ = r
        c = 1 + pre + post
        if tr is not None:
            tr.append(idx, t, c, reason)
        t += c
        if timer.stats.retired >= budget:
            core.halted = True
            timer.stats.trap = core.trap = f"instruction budget {budget} exhausted"
            break
    timer.stats.cycles = t
    return tr, timer.stats
