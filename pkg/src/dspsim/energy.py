"""Instruction-level energy accounting.

Energy = sum over retired instructions of the per-class cost, plus a cost per
TCDM access (aligned SRAM, aligned SCM or word-crossing), plus an idle cost
per stall cycle. The second cycle of a word-crossing access is priced by
``unaligned_access``, not as idle time.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .isa import CLASSES
from .pipeline import CoreStats, _has_section

MEMORY_KEYS = ("sram_access", "scm_access", "unaligned_access", "idle")


@dataclass
class EnergyTable:
    per_class: dict[str, float]
    sram_access: float = 35.0
    scm_access: float = 18.9
    unaligned_access: float = 70.0
    idle: float = 10.0

    def __post_init__(self):
        missing = set(CLASSES) - set(self.per_class)
        if missing:
            raise ValueError(f"energy table lacks classes: {', '.join(sorted(missing))}")
        for k, v in {**self.per_class, "sram_access": self.sram_access,
                     "scm_access": self.scm_access, "unaligned_access": self.unaligned_access,
                     "idle": self.idle}.items():
            if v < 0:
                raise ValueError(f"energy entry {k} is negative")

    @classmethod
    def from_text(cls, text: str) -> "EnergyTable":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        cp.read_string(text if _has_section(text) else "[energy]\n" + text)
        sect = dict(cp[cp.sections()[0]])
        extra = {k: float(sect.pop(k)) for k in MEMORY_KEYS if k in sect}
        unknown = set(sect) - set(CLASSES)
        if unknown:
            raise ValueError(f"unknown energy keys: {', '.join(sorted(unknown))}")
        return cls({k: float(v) for k, v in sect.items()}, **extra)

    @classmethod
    def from_file(cls, path) -> "EnergyTable":
        return cls.from_text(Path(path).read_text())

    @classmethod
    def default(cls) -> "EnergyTable":
        return cls.from_text(resources.files("dspsim").joinpath("data/energy.cfg").read_text())

    def to_text(self) -> str:
        lines = ["[energy]"] + [f"{k} = {self.per_class[k]}" for k in CLASSES]
        lines += [f"{k} = {getattr(self, k)}" for k in MEMORY_KEYS]
        return "\n".join(lines) + "\n"


@dataclass
class EnergyReport:
    by_class: dict[str, float] = field(default_factory=dict)
    memory: float = 0.0
    idle: float = 0.0

    @property
    def total(self) -> float:
        return sum(self.by_class.values()) + self.memory + self.idle

    def __add__(self, other: "EnergyReport") -> "EnergyReport":
        keys = set(self.by_class) | set(other.by_class)
        return EnergyReport({k: self.by_class.get(k, 0.0) + other.by_class.get(k, 0.0)
                             for k in sorted(keys)},
                            self.memory + other.memory, self.idle + other.idle)

    def to_dict(self) -> dict:
        return {"total_pj": self.total, "by_class_pj": dict(self.by_class),
                "memory_pj": self.memory, "idle_pj": self.idle}


def account(stats, table: EnergyTable | None = None) -> EnergyReport:
    """Energy of one core's run, or the sum over a list of cores."""
    table = table or EnergyTable.default()
    if not isinstance(stats, CoreStats):
        out = EnergyReport()
        for s in stats:
            out = out + account(s, table)
        return out
    by_class = {k: n * table.per_class[k] for k, n in sorted(stats.retired_by_class().items())}
    memory = (stats.sram_accesses * table.sram_access + stats.scm_accesses * table.scm_access
              + stats.unaligned_accesses * table.unaligned_access)
    idle = stats.stall_cycles - stats.stalls["mem_unaligned"]
    return EnergyReport(by_class, memory, idle * table.idle)
