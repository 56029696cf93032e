"""Pinned acceptance bands, evaluated on fresh simulator runs.

Each check returns a :class:`Criterion` carrying the measured values, the
band it was held against and the verdict. :func:`evaluate` runs them all.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .kernels import KernelSpec
from .snippets import SHUFFLE, SHUFFLE_MASK, unaligned_load
from .suite import BenchRow, KernelRun, geomean, make_row, run_kernel

CONV = ("conv3x3", "conv5x5", "conv7x7")
TYPES = ("i8", "i16")
# filters whose whole window fits in the register file with packed SIMD
RF_RESIDENT = (("conv3x3", "i8"), ("conv5x5", "i8"))

LDST_TARGET, LDST_TOL = 8.3, 0.20
SCALING_MIN = 3.5
EXT_GEOMEAN_BAND = (1.20, 1.60)
MATMUL_BUILTIN_BAND = (8.0, 13.0)
CONV_BUILTIN_BAND = (2.0, 8.0)
CONTENTION_COUNT_MIN = 10.0
COMPRESSED_BAND = (0.20, 0.50)
UNALIGNED_IMAGES = 200


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"criterion {self.number} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


class Runs:
    """Memoised kernel runs (golden-checked) shared by the criteria."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._runs: dict[KernelSpec, KernelRun] = {}

    def run(self, name, type_, variant, cores=1) -> KernelRun:
        spec = KernelSpec(name, type_, (), variant, cores)
        if spec not in self._runs:
            self._runs[spec] = run_kernel(spec, seed=self.seed)
        return self._runs[spec]

    def row(self, *a) -> BenchRow:
        return make_row(self.run(*a))


def _in(x, band):
    return band[0] <= x <= band[1]


def instruction_counts(runs: Runs) -> Criterion:
    def per_pixel(run, mnemonic):
        n = sum(st.retired_by_mnemonic()[mnemonic] for st in run.result.cores)
        return n / len(run.expected)
    sdotp = per_pixel(runs.run("conv5x5", "i8", "builtin"), "pv.sdotp.sb")
    mac = per_pixel(runs.run("conv5x5", "i8", "ext"), "p.mac")
    r16 = runs.run("conv3x3", "i16", "builtin")
    sdotp16, tail16 = per_pixel(r16, "pv.sdotp.sh"), per_pixel(r16, "p.mac")
    ok = sdotp == 7 and mac == 25 and sdotp16 == 4 and tail16 == 1
    return Criterion(1, "instruction counts", ok,
                     f"conv5x5 i8 builtin {sdotp:g} sdotp/px (want 7), ext {mac:g} mac/px "
                     f"(want 25); conv3x3 i16 builtin {sdotp16:g} sdotp.sh + {tail16:g} mac/px",
                     {"sdotp": sdotp, "mac": mac, "sdotp_sh_3x3": sdotp16, "tail_3x3": tail16})


def unaligned(seed: int = 0, images: int = UNALIGNED_IMAGES) -> Criterion:
    rng = random.Random(seed)
    ok, shape = True, set()
    for _ in range(images):
        off = rng.randint(1, 3)
        base = 0x400 + 4 * rng.randrange(64)
        img = {base + i: rng.randrange(256) for i in range(8)}
        sn = unaligned_load(off)
        sw, hw = sn.compare({10: base}, img)
        shape.add((sw.instructions, sw.cycles, hw.instructions, hw.cycles))
        ok &= sn.equivalent(sw, hw)
    ok &= shape == {(5, 5, 1, 2)}
    sw_i, sw_c, hw_i, hw_c = sorted(shape)[0]
    return Criterion(2, "unaligned access", ok,
                     f"software {sw_i} instr/{sw_c} cycles, hardware {hw_i} instr/{hw_c} cycles, "
                     f"values equal on {images} random images" if ok else f"shapes {shape}",
                     {"software": (sw_i, sw_c), "hardware": (hw_i, hw_c)})


def ldst_reduction(runs: Runs) -> Criterion:
    lo, hi = LDST_TARGET * (1 - LDST_TOL), LDST_TARGET * (1 + LDST_TOL)
    vals = {f"{k}-{t}": runs.row(k, t, "ext").memops / runs.row(k, t, "builtin").memops
            for k, t in RF_RESIDENT}
    ok = all(lo <= v <= hi for v in vals.values())
    return Criterion(3, "ld/st reduction", ok,
                     ", ".join(f"{k} {v:.2f}x" for k, v in vals.items())
                     + f" (band {lo:.2f}..{hi:.2f})", vals)


def scaling(runs: Runs) -> Criterion:
    vals = {f"{k}-{t}": runs.row(k, t, "builtin", 1).cycles / runs.row(k, t, "builtin", 4).cycles
            for k in CONV for t in TYPES}
    g = geomean(vals.values())
    ok = vals["conv5x5-i8"] >= SCALING_MIN and g >= SCALING_MIN
    return Criterion(4, "4-core scaling", ok,
                     f"conv5x5 i8 builtin {vals['conv5x5-i8']:.2f}x, geomean over builtin conv "
                     f"{g:.2f}x (min {SCALING_MIN})", {**vals, "geomean": g})


def speedup_bands(runs: Runs) -> Criterion:
    from .kernels import ELEMENT_TYPES, KERNELS
    ext = {}
    for k in KERNELS:
        for t in ELEMENT_TYPES[k]:
            ext[f"{k}-{t}"] = runs.row(k, t, "baseline").cycles / runs.row(k, t, "ext").cycles
    g_ext = geomean(ext.values())
    mm = runs.row("matmul", "i8", "baseline").cycles / runs.row("matmul", "i8", "builtin").cycles
    conv = geomean(runs.row(k, t, "baseline").cycles / runs.row(k, t, "builtin").cycles
                   for k in CONV for t in TYPES)
    ok = _in(g_ext, EXT_GEOMEAN_BAND) and _in(mm, MATMUL_BUILTIN_BAND) and _in(conv, CONV_BUILTIN_BAND)
    return Criterion(5, "speedup bands", ok,
                     f"ext geomean {g_ext:.3f} in {EXT_GEOMEAN_BAND}, matmul i8 builtin {mm:.2f} "
                     f"in {MATMUL_BUILTIN_BAND}, conv builtin geomean {conv:.2f} in "
                     f"{CONV_BUILTIN_BAND}",
                     {"ext": ext, "ext_geomean": g_ext, "matmul_builtin": mm, "conv_builtin": conv})


def contention(runs: Runs) -> Criterion:
    per = {}
    tot = {"ext": [0, 0], "builtin": [0, 0]}
    for k, t in RF_RESIDENT:
        for v in ("ext", "builtin"):
            c = runs.run(k, t, v, 4).result.contention
            per[f"{k}-{t}-{v}"] = c.percent
            tot[v][0] += c.contended
            tot[v][1] += c.total
    pct = {v: 100.0 * a / b for v, (a, b) in tot.items()}
    ratio = tot["ext"][0] / max(tot["builtin"][0], 1)
    ordered = all(per[f"{k}-{t}-builtin"] < per[f"{k}-{t}-ext"] for k, t in RF_RESIDENT)
    ok = ordered and pct["builtin"] < pct["ext"] and ratio >= CONTENTION_COUNT_MIN
    return Criterion(6, "contention ordering", ok,
                     f"ext {pct['ext']:.1f}% vs builtin {pct['builtin']:.1f}% contended, "
                     f"{tot['ext'][0]} -> {tot['builtin'][0]} accesses ({ratio:.1f}x, "
                     f"min {CONTENTION_COUNT_MIN:g}x)",
                     {"per_kernel": per, "percent": pct, "ratio": ratio})


def compressed(runs: Runs) -> Criterion:
    from .kernels import BUILTIN_KERNELS, ELEMENT_TYPES, KERNELS
    comp = ret = 0
    for k in KERNELS:
        for t in ELEMENT_TYPES[k]:
            for st in runs.run(k, t, "baseline").result.cores:
                comp += st.compressed_retired
                ret += st.retired
    base_ratio = comp / ret
    worse = [f"{k}-{t}" for k in BUILTIN_KERNELS for t in ELEMENT_TYPES[k]
             if runs.row(k, t, "builtin").compressed_ratio >= runs.row(k, t, "baseline").compressed_ratio]
    ok = _in(base_ratio, COMPRESSED_BAND) and not worse
    return Criterion(7, "compressed ratio", ok,
                     f"baseline suite {base_ratio:.3f} in {COMPRESSED_BAND}; builtin lower on every "
                     f"dotp kernel" + (f" except {worse}" if worse else ""),
                     {"baseline": base_ratio, "not_lower": worse})


def energy_order(runs: Runs) -> Criterion:
    bad = []
    for k in CONV:
        for t in TYPES:
            e = {v: runs.row(k, t, v).energy_pj for v in ("baseline", "ext", "builtin")}
            if not e["builtin"] < e["ext"] < e["baseline"]:
                bad.append(f"{k}-{t}")
    base, ext = SHUFFLE.compare({6: 0x11223344, 8: SHUFFLE_MASK})
    shuffle_ok = SHUFFLE.equivalent(base, ext) and ext.energy_pj < base.energy_pj
    ok = not bad and shuffle_ok
    return Criterion(8, "energy ordering", ok,
                     "builtin < ext < baseline on every conv kernel"
                     + (f" except {bad}" if bad else "")
                     + f"; shuffle {ext.energy_pj:g} pJ vs {base.stats.retired} ALU ops "
                       f"{base.energy_pj:g} pJ",
                     {"not_ordered": bad, "shuffle_pj": ext.energy_pj, "alu_pj": base.energy_pj})


CHECKS = (instruction_counts, unaligned, ldst_reduction, scaling, speedup_bands, contention,
          compressed, energy_order)


def evaluate(seed: int = 0) -> list[Criterion]:
    runs = Runs(seed)
    out = []
    for check in CHECKS:
        out.append(check(seed) if check is unaligned else check(runs))
    return out


def row_marks(rows: list[BenchRow]) -> list[tuple[bool, str]]:
    """Per-row verdicts for a results table.

    Every row needs a clean golden check. Rows that a single-row band applies
    to are also held against it: builtin matmul i8 speedup, the builtin
    ld/st reduction of the register-resident filters and conv5x5 i8 4-core
    scaling. Bands whose reference row is not in the table are skipped.
    Aggregate bands are in :func:`table_checks`.
    """
    idx = {(r.kernel, r.type, r.dims, r.variant, r.cores): r for r in rows}
    marks = []
    for r in rows:
        notes, ok = [], r.status == "ok"
        if not ok:
            notes.append(f"golden {r.status}")

        def check(cond, what):
            nonlocal ok
            ok &= cond
            notes.append(f"{what} {'ok' if cond else 'out of band'}")

        base = idx.get((r.kernel, r.type, r.dims, "baseline", r.cores))
        if r.variant == "builtin" and base is not None:
            sp = base.cycles / r.cycles
            if r.kernel == "matmul" and r.type == "i8":
                check(_in(sp, MATMUL_BUILTIN_BAND), f"speedup {sp:.2f}")
        ext = idx.get((r.kernel, r.type, r.dims, "ext", r.cores))
        if r.variant == "builtin" and (r.kernel, r.type) in RF_RESIDENT and ext is not None:
            red = ext.memops / r.memops
            lo, hi = LDST_TARGET * (1 - LDST_TOL), LDST_TARGET * (1 + LDST_TOL)
            check(lo <= red <= hi, f"ld/st reduction {red:.2f}")
        one = idx.get((r.kernel, r.type, r.dims, r.variant, 1))
        if (r.kernel, r.type, r.variant) == ("conv5x5", "i8", "builtin") and r.cores == 4 and one:
            sc = one.cycles / r.cycles
            check(sc >= SCALING_MIN, f"scaling {sc:.2f}")
        marks.append((ok, "; ".join(notes)))
    return marks


def table_checks(rows: list[BenchRow]) -> list[tuple[bool, str]]:
    """Aggregate bands over whatever conv rows the table holds: builtin
    speedup geomean (1 core) and builtin 4-core scaling geomean."""
    idx = {(r.kernel, r.type, r.dims, r.variant, r.cores): r for r in rows}
    sp, sc = [], []
    for (k, t, d, v, c), r in idx.items():
        if k not in CONV or v != "builtin":
            continue
        base = idx.get((k, t, d, "baseline", 1))
        if c == 1 and base:
            sp.append(base.cycles / r.cycles)
        one = idx.get((k, t, d, v, 1))
        if c == 4 and one:
            sc.append(one.cycles / r.cycles)
    out = []
    if sp:
        g = geomean(sp)
        out.append((_in(g, CONV_BUILTIN_BAND),
                    f"conv builtin speedup geomean {g:.2f} in {CONV_BUILTIN_BAND}"))
    if sc:
        g = geomean(sc)
        out.append((g >= SCALING_MIN, f"conv builtin 4-core scaling geomean {g:.2f} "
                                      f"(min {SCALING_MIN})"))
    return out
