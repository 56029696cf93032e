"""Multi-core cluster sharing a word-interleaved, banked TCDM.

Each memory instruction requests one bank per cycle (two consecutive cycles
for a word-crossing access, high word first). When several cores hit the
same bank in the same cycle a per-bank round-robin arbiter grants one of
them; the others retry next cycle. Between memory requests a core's timing
is independent of the others, so the engine advances every core through its
non-memory instructions and only synchronises at bank requests and at the
barrier. This gives the same result as a lockstep cycle loop.

A store to :data:`~dspsim.execute.BARRIER_ADDR` arrives at the cluster
barrier; the core waits until every core has arrived.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .assembler import Program
from .execute import CompiledProgram, CoreState, MemorySystem, compile_program
from .pipeline import CoreStats, CoreTimer, CycleTrace, TimingConfig


class Deadlock(Exception):
    pass


@dataclass
class ClusterConfig:
    cores: int = 4
    banks: int = 8
    tcdm_bytes: int = 72 * 1024
    scm_range: tuple[int, int] | None = None
    max_cycles: int = 100_000_000

    def __post_init__(self):
        if self.cores < 1 or self.banks < 1:
            raise ValueError("need at least one core and one bank")
        if self.banks & (self.banks - 1):
            raise ValueError("bank count must be a power of two")

    def make_memory(self) -> MemorySystem:
        return MemorySystem(self.tcdm_bytes, self.banks, self.scm_range)


@dataclass
class ContentionStats:
    total: int = 0          # granted TCDM accesses
    contended: int = 0      # accesses that lost arbitration at least once
    stall_cycles: int = 0   # cycles lost to lost arbitration

    @property
    def percent(self) -> float:
        return 100.0 * self.contended / self.total if self.total else 0.0

    def __add__(self, other: "ContentionStats") -> "ContentionStats":
        return ContentionStats(self.total + other.total, self.contended + other.contended,
                               self.stall_cycles + other.stall_cycles)


def arbitrate(requests, pointers: list[int], ncores: int) -> set[int]:
    """Round-robin grant per bank.

    ``requests`` is an iterable of ``(core, bank)``; ``pointers[bank]`` is the
    core with highest priority and moves past the winner. Returns the set of
    granted cores.
    """
    by_bank: dict[int, list[int]] = {}
    for core, bank in requests:
        by_bank.setdefault(bank, []).append(core)
    granted = set()
    for bank, cores in by_bank.items():
        p = pointers[bank]
        winner = min(cores, key=lambda c: (c - p) % ncores)
        granted.add(winner)
        pointers[bank] = (winner + 1) % ncores
    return granted


@dataclass
class ClusterResult:
    cores: list[CoreStats]
    contention: ContentionStats
    cycles: int
    mem: MemorySystem = field(repr=False)
    traces: list[CycleTrace] | None = field(default=None, repr=False)
    deadlock: str | None = None

    @property
    def retired(self) -> int:
        return sum(c.retired for c in self.cores)

    @property
    def completed(self) -> bool:
        return self.deadlock is None and all(c.completed for c in self.cores)


class _Core:
    __slots__ = ("timer", "t", "pending", "req", "post", "first", "lost", "waiting",
                 "done", "idx", "reason")

    def __init__(self, timer):
        self.timer = timer
        self.t = 0
        self.pending: list[int] = []
        self.req = 0
        self.post = 0
        self.first = 0
        self.lost = False
        self.waiting = False
        self.done = False


def run_cluster(programs, config: ClusterConfig | None = None,
                timing: TimingConfig | None = None, *, mem: MemorySystem | None = None,
                trace: bool = False) -> ClusterResult:
    """Run one program per core (or the same program on every core).

    Cores see their id through ``csrr rd, mhartid`` and the core count
    through ``csrr rd, ncores``.
    """
    config = config or ClusterConfig()
    timing = timing or TimingConfig()
    if config.cores > 1 and timing.unaligned_mem_extra < 1:
        raise ValueError("the cluster needs unaligned_mem_extra >= 1 (one cycle per word access)")
    if isinstance(programs, (Program, CompiledProgram)):
        programs = [programs] * config.cores
    if len(programs) != config.cores:
        raise ValueError(f"expected {config.cores} programs, got {len(programs)}")
    compiled: dict[int, CompiledProgram] = {}
    cps = []
    for p in programs:
        if isinstance(p, CompiledProgram):
            cps.append(p)
        else:
            cps.append(compiled.setdefault(id(p), compile_program(p)))
    if mem is None:
        mem = config.make_memory()
        for cp in {id(c): c for c in cps}.values():
            mem.load_image(cp.prog.data)
    n = config.cores
    cores = [_Core(CoreTimer(cp, CoreState(cp.entry_pc, h, n), mem, timing))
             for h, cp in enumerate(cps)]
    traces = [CycleTrace() for _ in cores] if trace else None
    pointers = [0] * mem.banks
    cont = ContentionStats()
    arrived = 0
    deadlock = None
    bank_of = mem.bank_of
    limit = config.max_cycles

    while True:
        # advance cores up to their next bank request, barrier or halt
        for h, c in enumerate(cores):
            if c.done or c.pending or c.waiting:
                continue
            issue = c.timer.issue
            tr = traces[h] if traces else None
            while True:
                r = issue()
                if r is None:
                    c.done = True
                    break
                idx, pre, acc, post, reason, barrier = r
                if acc:
                    c.first = c.t
                    c.req = c.t + pre
                    c.pending = list(acc)
                    # the second word of a crossing access takes its own request cycle
                    c.post = post - (len(acc) - 1)
                    c.idx, c.reason, c.lost = idx, reason, False
                    break
                cyc = 1 + pre + post
                if tr is not None:
                    tr.append(idx, c.t, cyc, reason)
                c.t += cyc
                if barrier:
                    c.waiting = True
                    arrived += 1
                    break
                if c.t > limit:
                    break
            if c.t > limit and not c.done:
                deadlock = f"core {h} exceeded {limit} cycles"
        if deadlock:
            break

        if arrived == n:
            release = max(c.t for c in cores)
            for c in cores:
                c.timer.stats.stalls["barrier"] += release - c.t
                c.t = release
                c.waiting = False
            arrived = 0
            continue

        active = [c for c in cores if c.pending]
        if not active:
            if all(c.done for c in cores):
                break
            waiting = [h for h, c in enumerate(cores) if c.waiting]
            done = [h for h, c in enumerate(cores) if c.done]
            deadlock = (f"barrier deadlock: cores {waiting} wait, "
                        f"cores {done} halted without arriving")
            break

        T = min(c.req for c in active)
        group = [(h, c) for h, c in enumerate(cores) if c.pending and c.req == T]
        if len(group) == 1:
            granted = {group[0][0]}
            pointers[bank_of(group[0][1].pending[0])] = (group[0][0] + 1) % n
        else:
            granted = arbitrate([(h, bank_of(c.pending[0])) for h, c in group], pointers, n)
        for h, c in group:
            if h in granted:
                cont.total += 1
                if c.lost:
                    cont.contended += 1
                    c.lost = False
                c.pending.pop(0)
                if c.pending:
                    c.req = T + 1
                else:
                    c.t = T + 1 + c.post
                    if traces is not None:
                        reason = c.reason
                        if reason is None and c.t - c.first > 1 + c.post:
                            reason = "contention"
                        traces[h].append(c.idx, c.first, c.t - c.first, reason)
            else:
                c.lost = True
                cont.stall_cycles += 1
                c.timer.stats.stalls["contention"] += 1
                c.req = T + 1

    stats = []
    for c in cores:
        s = c.timer.stats
        s.cycles = c.t
        if deadlock and not s.trap:
            s.trap = deadlock
        stats.append(s)
    return ClusterResult(stats, cont, max(c.t for c in cores), mem, traces, deadlock)
