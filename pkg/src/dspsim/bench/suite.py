"""Run kernels on the cluster, check them against the golden model and
tabulate the comparison rows."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from ..cluster import ClusterConfig, ClusterResult, run_cluster
from ..energy import EnergyTable, account
from ..pipeline import TimingConfig
from .golden import golden
from .kernels import (BUILTIN_KERNELS, DEFAULT_DIMS, ELEMENT_TYPES, KERNELS, VARIANTS,
                      KernelSpec, generate)


class MismatchError(AssertionError):
    pass


@dataclass
class BenchRow:
    kernel: str
    type: str
    dims: str
    cores: int
    variant: str
    cycles: int
    cycles_per_output: float
    retired: int
    ipc: float
    compressed_ratio: float
    loads: int
    stores: int
    memops: int
    contention_pct: float
    contended: int
    accesses: int
    energy_pj: float
    speedup: float | None = None
    energy_gain: float | None = None
    ldst_reduction: float | None = None
    status: str = "ok"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class KernelRun:
    spec: KernelSpec
    result: ClusterResult
    output: list[int]
    expected: list[int]
    energy_pj: float

    @property
    def ok(self) -> bool:
        return self.result.completed and self.output == self.expected


def run_kernel(spec: KernelSpec, *, seed: int = 0, timing: TimingConfig | None = None,
               energy: EnergyTable | None = None, banks: int = 8,
               random_coeffs: bool = False, check: bool = True) -> KernelRun:
    gen = generate(spec, seed, random_coeffs)
    cfg = ClusterConfig(cores=spec.cores, banks=banks)
    mem = cfg.make_memory()
    gen.load(mem)
    res = run_cluster(gen.programs, cfg, timing, mem=mem)
    out = gen.read_output(mem)
    exp = golden(spec, gen.inputs).output
    run = KernelRun(spec, res, out, exp, account(res.cores, energy).total)
    if check and not run.ok:
        bad = next((i for i, (x, y) in enumerate(zip(out, exp)) if x != y), None)
        why = res.deadlock or next((c.trap for c in res.cores if c.trap), None)
        raise MismatchError(f"{spec.label}: " + (why or f"output {bad} is {out[bad]}, "
                                                         f"expected {exp[bad]}"))
    return run


def make_row(run: KernelRun) -> BenchRow:
    res, spec = run.result, run.spec
    loads = sum(c.loads for c in res.cores)
    stores = sum(c.stores for c in res.cores)
    retired = res.retired
    compressed = sum(c.compressed_retired for c in res.cores)
    cycles = res.cycles
    # issue rate of the whole cluster: instructions per cycle per core
    ipc = retired / (cycles * spec.cores) if cycles else 0.0
    status = "ok" if run.ok else ("deadlock" if res.deadlock else "mismatch")
    return BenchRow(
        kernel=spec.name, type=spec.element_type, dims="x".join(map(str, spec.dims)),
        cores=spec.cores, variant=spec.variant, cycles=cycles,
        cycles_per_output=cycles / len(run.expected),
        retired=retired, ipc=ipc,
        compressed_ratio=compressed / retired if retired else 0.0,
        loads=loads, stores=stores, memops=loads + stores,
        contention_pct=res.contention.percent, contended=res.contention.contended,
        accesses=res.contention.total, energy_pj=run.energy_pj, status=status)


def default_specs(kernels=None, types=None, variants=None, cores=(1,), dims=None):
    out = []
    for k in kernels or KERNELS:
        for t in types or ELEMENT_TYPES[k]:
            if t not in ELEMENT_TYPES[k]:
                continue
            for v in variants or VARIANTS:
                if v == "builtin" and k not in BUILTIN_KERNELS:
                    continue
                for c in cores:
                    d = dims.get(k, DEFAULT_DIMS[k]) if dims else DEFAULT_DIMS[k]
                    out.append(KernelSpec(k, t, tuple(d), v, c))
    return out


def _row(spec, seed, timing, energy, banks, check) -> BenchRow:
    return make_row(run_kernel(spec, seed=seed, timing=timing, energy=energy, banks=banks,
                               check=check))


def run_suite(specs, *, seed: int = 0, timing=None, energy=None, banks: int = 8,
              check: bool = True, jobs: int = 1) -> list[BenchRow]:
    """Run every spec and fill in speedup and energy gain against the
    single-core baseline of the same kernel, type and size.

    With ``jobs > 1`` the runs are spread over worker processes; the rows
    come back in spec order either way.
    """
    specs = list(specs)
    args = (seed, timing, energy, banks, check)
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            rows = list(ex.map(_row, specs, *[[a] * len(specs) for a in args]))
    else:
        rows = [_row(s, *args) for s in specs]
    ref = {(r.kernel, r.type, r.dims): r for r in rows
           if r.variant == "baseline" and r.cores == 1}
    for r in rows:
        base = ref.get((r.kernel, r.type, r.dims))
        if base is None:
            spec = KernelSpec(r.kernel, r.type, tuple(map(int, r.dims.split("x"))), "baseline", 1)
            base = _row(spec, *args)
            ref[(r.kernel, r.type, r.dims)] = base
        r.speedup = base.cycles / r.cycles
        r.energy_gain = base.energy_pj / r.energy_pj
        r.ldst_reduction = base.memops / r.memops
    return rows


def geomean(xs) -> float:
    xs = list(xs)
    return math.exp(sum(math.log(x) for x in xs) / len(xs)) if xs else float("nan")


COLUMNS = ("kernel", "type", "dims", "cores", "variant", "cycles", "cycles_per_output",
           "retired", "ipc", "compressed_ratio", "memops", "contention_pct",
           "energy_pj", "speedup", "energy_gain", "ldst_reduction", "status")


def format_table(rows: list[BenchRow]) -> str:
    def cell(v):
        if isinstance(v, float):
            return f"{v:.2f}"
        return "-" if v is None else str(v)
    table = [list(COLUMNS)] + [[cell(getattr(r, c)) for c in COLUMNS] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(COLUMNS))]
    lines = ["  ".join(x.rjust(w) for x, w in zip(row, widths)) for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
