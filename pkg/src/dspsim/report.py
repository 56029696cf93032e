"""Run reports: the JSON/CSV form of a simulation result."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from importlib import resources

from .cluster import ClusterResult
from .energy import EnergyTable, account
from .pipeline import STALL_REASONS, CoreStats

SCHEMA_ID = "dspsim.run-report/1"


@dataclass
class CoreSection:
    hartid: int
    cycles: int
    retired: int
    ipc: float
    compressed_ratio: float
    loads: int
    stores: int
    stalls: dict
    by_class: dict
    energy_pj: float
    status: str
    diagnostic: str | None = None


@dataclass
class RunReport:
    program: str
    cores: int
    cycles: int
    retired: int
    ipc: float
    compressed_ratio: float
    loads: int
    stores: int
    stalls: dict
    by_class: dict
    contention: dict
    energy: dict
    per_core: list[CoreSection]
    status: str = "ok"              # ok | trap | deadlock
    diagnostic: str | None = None
    golden: str | None = None       # pass | fail | None when not checked
    schema: str = field(default=SCHEMA_ID)

    def to_dict(self) -> dict:
        d = asdict(self)
        # schema first, for readers skimming the file
        return {"schema": d.pop("schema"), **d}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def to_csv(self) -> str:
        """One row per core plus an aggregate row (hartid ``all``)."""
        cols = ["hartid", "cycles", "retired", "ipc", "compressed_ratio", "loads", "stores",
                "energy_pj", "status"] + [f"stall_{r}" for r in STALL_REASONS]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for c in self.per_core:
            w.writerow([c.hartid, c.cycles, c.retired, _f(c.ipc), _f(c.compressed_ratio),
                        c.loads, c.stores, _f(c.energy_pj), c.status]
                       + [c.stalls[r] for r in STALL_REASONS])
        w.writerow(["all", self.cycles, self.retired, _f(self.ipc), _f(self.compressed_ratio),
                    self.loads, self.stores, _f(self.energy["total_pj"]), self.status]
                   + [self.stalls[r] for r in STALL_REASONS])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"program   {self.program}",
                 f"status    {self.status}" + (f" ({self.diagnostic})" if self.diagnostic else ""),
                 f"cores     {self.cores}",
                 f"cycles    {self.cycles}",
                 f"retired   {self.retired}",
                 f"ipc       {self.ipc:.3f}",
                 f"rvc ratio {self.compressed_ratio:.3f}",
                 f"ld/st     {self.loads}/{self.stores}",
                 f"energy    {self.energy['total_pj']:.1f} pJ"]
        stalls = ", ".join(f"{k}={v}" for k, v in self.stalls.items() if v)
        lines.append(f"stalls    {stalls or 'none'}")
        c = self.contention
        lines.append(f"tcdm      {c['total']} accesses, {c['contended']} contended "
                     f"({c['percent']:.2f}%)")
        if self.golden:
            lines.append(f"golden    {self.golden}")
        return "\n".join(lines) + "\n"


def _f(x: float) -> str:
    return f"{x:.6g}"


def _status(st: CoreStats) -> tuple[str, str | None]:
    if st.trap is None:
        return "ok", None
    if "deadlock" in st.trap or "exceeded" in st.trap:
        return "deadlock", st.trap
    return "trap", st.trap


def _section(h: int, st: CoreStats, table) -> CoreSection:
    status, diag = _status(st)
    return CoreSection(
        hartid=h, cycles=st.cycles, retired=st.retired, ipc=st.ipc,
        compressed_ratio=st.compressed_ratio, loads=st.loads, stores=st.stores,
        stalls=dict(st.stalls), by_class=dict(sorted(st.retired_by_class().items())),
        energy_pj=account(st, table).total, status=status, diagnostic=diag)


def build_report(result: ClusterResult, program: str = "", table: EnergyTable | None = None,
                 golden: bool | None = None) -> RunReport:
    table = table or EnergyTable.default()
    cores = [_section(h, st, table) for h, st in enumerate(result.cores)]
    retired = result.retired
    compressed = sum(st.compressed_retired for st in result.cores)
    stalls = {r: sum(c.stalls[r] for c in cores) for r in STALL_REASONS}
    by_class: dict[str, int] = {}
    for c in cores:
        for k, v in c.by_class.items():
            by_class[k] = by_class.get(k, 0) + v
    energy = account(result.cores, table).to_dict()
    if result.deadlock:
        status, diag = "deadlock", result.deadlock
    else:
        bad = next((c for c in cores if c.status != "ok"), None)
        status, diag = (bad.status, f"core {bad.hartid}: {bad.diagnostic}") if bad else ("ok", None)
    cont = result.contention
    return RunReport(
        program=program, cores=len(cores), cycles=result.cycles, retired=retired,
        # aggregate IPC is measured against the cluster's wall-clock cycles
        ipc=retired / result.cycles if result.cycles else 0.0,
        compressed_ratio=compressed / retired if retired else 0.0,
        loads=sum(c.loads for c in cores), stores=sum(c.stores for c in cores),
        stalls=stalls, by_class=dict(sorted(by_class.items())),
        contention={"total": cont.total, "contended": cont.contended,
                    "stall_cycles": cont.stall_cycles, "percent": cont.percent},
        energy=energy, per_core=cores, status=status, diagnostic=diag,
        golden=None if golden is None else ("pass" if golden else "fail"))


def load_schema() -> dict:
    return json.loads(resources.files("dspsim").joinpath("data/run_report.schema.json")
                      .read_text())
