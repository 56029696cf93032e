"""Kernel program generators.

Every kernel exists as a template that emits assembly text for a given
:class:`KernelSpec`; the text goes through :func:`dspsim.assembler.parse`.
Three code-generation policies stand in for the compilers:

``baseline``
    RV32IM only. Counted loops use a decrement and ``bne``; long inner loops
    are unrolled by four; small filter windows are fully unrolled with
    immediate offsets. Coefficients are reloaded per tap (``char``/``short``
    pointers may alias the output).
``ext``
    adds hardware loops, post-increment addressing, ``p.mac``, ``p.clip`` and
    ``p.mulsRN``; inner loops are not unrolled.
``builtin``
    hand-written with packed-SIMD dot products and shuffles; filter windows
    live in the register file where they fit.

Multi-core variants split the output rows into strips, one per core, and
join at the cluster barrier. Dimensions are compile-time constants, so
edge cases are unrolled statically.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..assembler import Program, parse
from ..execute import BARRIER_ADDR, MemorySystem

KERNELS = ("conv3x3", "conv5x5", "conv7x7", "matmul", "fir", "vecadd_clip", "mulq_norm")
VARIANTS = ("baseline", "ext", "builtin")
BUILTIN_KERNELS = ("conv3x3", "conv5x5", "conv7x7", "matmul", "fir")
ELEMENT_BYTES = {"i8": 1, "i16": 2}

DEFAULT_DIMS = {
    "conv3x3": (64,), "conv5x5": (64,), "conv7x7": (64,),
    "matmul": (32, 32, 32),      # M, K, N
    "fir": (256, 16),            # outputs, taps
    "vecadd_clip": (256,),
    "mulq_norm": (256,),
}
ELEMENT_TYPES = {
    "conv3x3": ("i8", "i16"), "conv5x5": ("i8", "i16"), "conv7x7": ("i8", "i16"),
    "matmul": ("i8", "i16"), "fir": ("i16",),
    "vecadd_clip": ("i16",), "mulq_norm": ("i16",),
}

# Separable binomial-style smoothing windows whose taps sum to 2**shift.
GAUSS_1D = {
    ("conv3x3", "i8"): ([1, 2, 1], 4),
    ("conv3x3", "i16"): ([1, 2, 1], 4),
    ("conv5x5", "i8"): ([1, 4, 6, 4, 1], 8),
    ("conv5x5", "i16"): ([1, 4, 6, 4, 1], 8),
    ("conv7x7", "i8"): ([1, 2, 3, 4, 3, 2, 1], 8),
    ("conv7x7", "i16"): ([1, 6, 15, 20, 15, 6, 1], 12),
}

FIR_SHIFT = 15
Q_SHIFT = 12            # Q1.11 * Q1.11 -> Q2.10 normalisation
CLIP_BITS = 12          # Q1.11 saturation

# data memory map
COEF = 0x0100
COEF_VEC = 0x0200
IN0 = 0x0400
IN1 = 0x3000
OUT = 0x6000


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    name: str
    element_type: str = "i8"
    dims: tuple[int, ...] = ()
    variant: str = "baseline"
    cores: int = 1

    def __post_init__(self):
        if self.name not in KERNELS:
            raise SpecError(f"unknown kernel {self.name!r}")
        if self.variant not in VARIANTS:
            raise SpecError(f"unknown variant {self.variant!r}")
        if self.element_type not in ELEMENT_TYPES[self.name]:
            raise SpecError(f"{self.name} does not support {self.element_type}")
        if self.variant == "builtin" and self.name not in BUILTIN_KERNELS:
            raise SpecError(f"{self.name} has no builtin variant")
        if not self.dims:
            object.__setattr__(self, "dims", DEFAULT_DIMS[self.name])
        if len(self.dims) != len(DEFAULT_DIMS[self.name]) or min(self.dims) < 1:
            raise SpecError(f"bad dims {self.dims} for {self.name}")
        if self.cores < 1:
            raise SpecError("cores must be >= 1")
        if self.name.startswith("conv") and self.dims[0] < self.ksize:
            raise SpecError("image smaller than the filter")
        if self.name == "fir" and self.variant == "builtin" and self.dims[1] > 40:
            raise SpecError("builtin fir keeps the taps in registers: at most 40 taps")

    @property
    def e(self) -> int:
        return ELEMENT_BYTES[self.element_type]

    @property
    def ksize(self) -> int:
        return int(self.name[4]) if self.name.startswith("conv") else 0

    @property
    def label(self) -> str:
        dims = "x".join(map(str, self.dims))
        return f"{self.name}-{self.element_type}-{dims}-{self.variant}-{self.cores}c"

    def with_(self, **kw) -> "KernelSpec":
        d = dict(name=self.name, element_type=self.element_type, dims=self.dims,
                 variant=self.variant, cores=self.cores)
        d.update(kw)
        return KernelSpec(**d)


@dataclass
class Generated:
    spec: KernelSpec
    programs: list[Program]
    image: dict[int, int]
    inputs: dict
    out_addr: int
    out_count: int
    out_bytes: int
    sources: list[str] = field(default_factory=list, repr=False)

    def load(self, mem: MemorySystem) -> None:
        mem.load_image(self.image)

    def read_output(self, mem: MemorySystem) -> list[int]:
        n, b = self.out_count, self.out_bytes
        raw = mem.read_bytes(self.out_addr, n * b)
        return [int.from_bytes(raw[i * b:(i + 1) * b], "little", signed=True) for i in range(n)]


# -- helpers --------------------------------------------------------------------

class Asm:
    def __init__(self):
        self.lines: list[str] = []
        self._n = 0

    def __call__(self, *lines: str):
        self.lines.extend(lines)

    def fresh(self, stem: str) -> str:
        self._n += 1
        return f"{stem}_{self._n}"

    def li(self, rd: str, value: int):
        value = ((value + 0x80000000) & 0xFFFFFFFF) - 0x80000000
        if -2048 <= value <= 2047:
            self(f"addi {rd}, x0, {value}")
            return
        hi = ((value + 0x800) >> 12) & 0xFFFFF
        lo = value - (((hi << 12) + 0x80000000 & 0xFFFFFFFF) - 0x80000000)
        self(f"lui {rd}, {hi:#x}")
        if lo:
            self(f"addi {rd}, {rd}, {lo}")

    def addi(self, rd: str, rs: str, value: int):
        if -2048 <= value <= 2047:
            if value or rd != rs:
                self(f"addi {rd}, {rs}, {value}")
        else:
            self.li("x31", value)
            self(f"add {rd}, {rs}, x31")

    def barrier(self, cores: int):
        if cores > 1:
            self.li("x31", BARRIER_ADDR)
            self("sw 0(x31), x0")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def strips(n: int, cores: int) -> list[tuple[int, int]]:
    """Split ``n`` rows into ``cores`` contiguous nearly-equal strips."""
    out, start = [], 0
    for h in range(cores):
        size = n // cores + (1 if h < n % cores else 0)
        out.append((start, start + size))
        start += size
    return out


def _ld(e: int, unsigned: bool = False) -> str:
    return {1: "lb", 2: "lh", 4: "lw"}[e] + ("u" if unsigned and e < 4 else "")


def _st(e: int) -> str:
    return {1: "sb", 2: "sh", 4: "sw"}[e]


def _sdotp(e: int) -> str:
    return "pv.sdotp.sb" if e == 1 else "pv.sdotp.sh"


def _put(image: dict, addr: int, values, nbytes: int):
    for i, v in enumerate(values):
        v &= (1 << (8 * nbytes)) - 1
        for k in range(nbytes):
            image[addr + i * nbytes + k] = (v >> (8 * k)) & 0xFF


def _rand(rng: random.Random, n: int, e: int) -> list[int]:
    lo, hi = -(1 << (8 * e - 1)), (1 << (8 * e - 1)) - 1
    return [rng.randint(lo, hi) for _ in range(n)]


def _round(shift: int) -> int:
    return 1 << (shift - 1) if shift else 0


# -- convolution ------------------------------------------------------------------

def conv_coeffs(spec: KernelSpec, rng: random.Random | None = None):
    """Default smoothing window, or random taps when ``rng`` is given."""
    k = spec.ksize
    g, shift = GAUSS_1D[(spec.name, spec.element_type)]
    if rng is None:
        return [g[i] * g[j] for i in range(k) for j in range(k)], shift
    lim = (1 << (8 * spec.e - 1)) - 1
    return [rng.randint(-lim - 1, lim) for _ in range(k * k)], rng.randint(0, 8 * spec.e)


def conv_vector_coeffs(coef: list[int], k: int, e: int, layout: str) -> list[int]:
    """Lane-packed coefficient words used by the builtin kernels."""
    c = lambda i, j: coef[i * k + j]  # noqa: E731
    words: list[list[int]] = []
    if layout == "rows4_tail":          # 5x5 i8: four taps per row, then the 5th column
        words = [[c(i, j) for j in range(4)] for i in range(k)]
        words.append([c(i, 4) for i in range(4)])
        words.append([c(4, 4), 0, 0, 0])
    elif layout == "rows_padded":        # every row split in lane-sized chunks, zero padded
        lanes = 4 // e
        for i in range(k):
            for j0 in range(0, k, lanes):
                words.append([c(i, j) if j < k else 0 for j in range(j0, j0 + lanes)])
    elif layout == "i16_3x3":
        words = [[c(0, 0), c(0, 1)], [c(1, 0), c(1, 1)], [c(2, 0), c(2, 1)],
                 [c(1, 2), c(2, 2)], [c(0, 2), 0]]
    elif layout == "i16_pairs_tail":     # per row: pairs, then the odd tail alone
        for i in range(k):
            for j0 in range(0, k - 1, 2):
                words.append([c(i, j0), c(i, j0 + 1)])
            words.append([c(i, k - 1), 0])
    else:
        raise ValueError(layout)
    out = []
    for w in words:
        v = 0
        for lane, x in enumerate(w):
            v |= (x & ((1 << (8 * e)) - 1)) << (8 * e * lane)
        out.append(v)
    return out


def _conv_layout(spec: KernelSpec) -> str:
    k, e = spec.ksize, spec.e
    if (k, e) == (5, 1):
        return "rows4_tail"
    if (k, e) == (3, 2):
        return "i16_3x3"
    if e == 2:
        return "i16_pairs_tail"
    return "rows_padded"


def _conv_baseline(a: Asm, spec, r0, r1, ow, pitch, shift):
    k, e = spec.ksize, spec.e
    ld, st = _ld(e), _st(e)
    a.li("x8", IN0 + r0 * pitch * e)
    a.li("x9", COEF)
    a.li("x14", OUT + r0 * ow * e)
    a.li("x5", r1 - r0)
    row, col = a.fresh("row"), a.fresh("col")
    a(f"{row}:")
    a.li("x15", ow)
    a(f"{col}:")
    a.li("x10", _round(shift))
    # taps are list-scheduled: the multiply of tap t-1 follows the loads of tap t
    regs = (("x11", "x12", "x13"), ("x28", "x29", "x30"))
    taps = [(i, j) for i in range(k) for j in range(k)]
    for n, (i, j) in enumerate(taps):
        x, c, _ = regs[n % 2]
        a(f"{ld} {x}, {(i * pitch + j) * e}(x8)",
          f"{ld} {c}, {(i * k + j) * e}(x9)")
        if n:
            px, pc, pm = regs[(n - 1) % 2]
            a(f"mul {pm}, {px}, {pc}", f"add x10, x10, {pm}")
    x, c, m = regs[(len(taps) - 1) % 2]
    a(f"mul {m}, {x}, {c}", f"add x10, x10, {m}")
    a(f"srai x10, x10, {shift}",
      f"{st} 0(x14), x10",
      f"addi x14, x14, {e}",
      f"addi x8, x8, {e}",
      "addi x15, x15, -1",
      f"bne x15, x0, {col}")
    a.addi("x8", "x8", (pitch - ow) * e)
    a("addi x5, x5, -1", f"bne x5, x0, {row}")


def _conv_ext(a: Asm, spec, r0, r1, ow, pitch, shift):
    k, e = spec.ksize, spec.e
    ld = _ld(e)
    a.li("x8", IN0 + r0 * pitch * e)
    a.li("x9", COEF)
    a.li("x14", OUT + r0 * ow * e)
    rowend, colend = a.fresh("rowend"), a.fresh("colend")
    a(f"lp.setupi L1, {r1 - r0}, {rowend}",
      f"lp.setupi L0, {ow}, {colend}")
    a.li("x10", _round(shift))
    # the first tap post-increments the window pointer, later offsets
    # compensate; the mac of tap t-1 follows the loads of tap t
    regs = (("x11", "x12"), ("x28", "x29"))
    taps = [(i, j) for i in range(k) for j in range(k)]
    for n, (i, j) in enumerate(taps):
        x, c = regs[n % 2]
        if n == 0:
            a(f"p.{ld} {x}, {e}(x8!)")
        else:
            a(f"{ld} {x}, {(i * pitch + j) * e - e}(x8)")
        a(f"{ld} {c}, {(i * k + j) * e}(x9)")
        if n:
            a("p.mac x10, {}, {}".format(*regs[(n - 1) % 2]))
    a("p.mac x10, {}, {}".format(*regs[(len(taps) - 1) % 2]))
    a(f"srai x10, x10, {shift}",
      f"{colend}: p.{_st(e)} {e}(x14!), x10")
    a(f"{rowend}: addi x8, x8, {(pitch - ow) * e}")


def _conv3_builtin(a: Asm, spec, r0, r1, ow, pitch, shift):
    """Vertical sliding window: per pixel one new window row is loaded and
    one output stored. The row loop is unrolled by three so the window rows
    rotate through the registers instead of being moved.

    i8 uses three sdotp.sb against zero-padded tap rows. i16 uses four
    sdotp.sh, on the left pairs of the rows and on the packed right column
    of the lower two rows, plus one p.mac for the top-right tap.
    """
    e = spec.e
    rows, stride = r1 - r0, pitch * e
    a.li("x9", COEF_VEC)
    ncoef = 3 if e == 1 else 5
    for n, reg in enumerate(("x20", "x21", "x22", "x30", "x31")[:ncoef]):
        a(f"lw {reg}, {4 * n}(x9)")
    a.li("x8", IN0 + r0 * stride)
    a.li("x14", OUT + r0 * ow * e)
    R = ("x23", "x24", "x25")   # window rows (i16: left pair of each row)
    T = ("x26", "x27", "x28")   # i16: right column of each row

    def load_row(ph):
        if e == 2:
            a(f"lh {T[ph]}, 4(x6)")
        a(f"p.lw {R[ph]}, {stride}(x6!)")

    def pixel(ph, end_label=None):
        top, mid, new = ph % 3, (ph + 1) % 3, (ph + 2) % 3
        load_row(new)
        a.li("x10", _round(shift))
        if e == 1:
            a(f"pv.sdotp.sb x10, {R[top]}, x20",
              f"pv.sdotp.sb x10, {R[mid]}, x21",
              f"pv.sdotp.sb x10, {R[new]}, x22")
        else:
            a(f"pv.sdotp.sh x10, {R[top]}, x20",
              f"pv.sdotp.sh x10, {R[mid]}, x21",
              f"pv.pack.h x29, {T[new]}, {T[mid]}",
              f"pv.sdotp.sh x10, {R[new]}, x22",
              "pv.sdotp.sh x10, x29, x30",
              f"p.mac x10, {T[top]}, x31")
        a(f"srai x10, x10, {shift}")
        store = f"p.{_st(e)} {ow * e}(x7!), x10"
        a(f"{end_label}: {store}" if end_label else store)

    colend = a.fresh("colend")
    a(f"lp.setupi L1, {ow}, {colend}", "mv x6, x8")
    load_row(0)
    load_row(1)
    a("mv x7, x14")
    if rows // 3:
        rowend = a.fresh("rowend")
        a(f"lp.setupi L0, {rows // 3}, {rowend}")
        for ph in range(3):
            pixel(ph, rowend if ph == 2 else None)
    for ph in range(rows % 3):
        pixel(ph)
    a(f"addi x8, x8, {e}",
      f"{colend}: addi x14, x14, {e}")


def _conv5_i8_builtin(a: Asm, spec, r0, r1, ow, pitch, shift):
    """Horizontal sliding window kept in the register file.

    R0..R4 (x16..x20) hold four pixels of each window row, E (x21) the fifth
    column of rows 0..3 and F (x22) that of row 4. Per pixel: seven sdotp,
    five shuffles to slide the window by one column and five byte loads for
    the new column (rows 0..3 go through x11, x5, x6, x7 and are inserted
    into E after the shuffles).
    """
    rows = r1 - r0
    a.li("x15", COEF_VEC)
    for n, reg in enumerate(("x23", "x24", "x25", "x26", "x27", "x28", "x29")):
        a(f"lw {reg}, {4 * n}(x15)")
    # shuffle masks: lanes 0..2 take b[1..3], lane 3 takes a[i]
    for i, reg in enumerate(("x1", "x2", "x3", "x4")):
        a.li(reg, ((4 | i) << 24) | 0x030201)
    a.li("x9", IN0 + r0 * pitch)
    a.li("x14", OUT + r0 * ow)
    rowend, colend = a.fresh("rowend"), a.fresh("colend")
    a(f"lp.setupi L1, {rows}, {rowend}")
    for i in range(5):
        a(f"lw x{16 + i}, {i * pitch}(x9)")
    a(f"lb x22, {4 * pitch + 4}(x9)",
      "lb x11, 4(x9)",
      f"lb x12, {pitch + 4}(x9)",
      "pv.insert.b x21, x11, 0",
      f"lb x11, {2 * pitch + 4}(x9)",
      "pv.insert.b x21, x12, 1",
      f"lb x12, {3 * pitch + 4}(x9)",
      "pv.insert.b x21, x11, 2",
      "pv.insert.b x21, x12, 3",
      "addi x8, x9, 5",
      f"lp.setupi L0, {ow}, {colend}")
    # per pixel: the new column's loads are spread between the dot products
    a.li("x10", _round(shift))
    a("pv.sdotp.sb x10, x20, x27",
      "pv.sdotp.sb x10, x22, x29",
      "pv.shuffle2.b x20, x22, x20, x1",
      f"lb x22, {4 * pitch}(x8)",
      "pv.sdotp.sb x10, x16, x23",
      f"lb x5, {pitch}(x8)",
      "pv.sdotp.sb x10, x17, x24",
      f"lb x6, {2 * pitch}(x8)",
      "pv.sdotp.sb x10, x18, x25",
      f"lb x7, {3 * pitch}(x8)",
      "pv.sdotp.sb x10, x19, x26",
      "p.lb x11, 1(x8!)",
      "pv.sdotp.sb x10, x21, x28",
      f"srai x10, x10, {shift}",
      "p.sb 1(x14!), x10",
      "pv.shuffle2.b x16, x21, x16, x1",
      "pv.shuffle2.b x17, x21, x17, x2",
      "pv.shuffle2.b x18, x21, x18, x3",
      "pv.shuffle2.b x19, x21, x19, x4",
      "pv.insert.b x21, x11, 0",
      "pv.insert.b x21, x5, 1",
      "pv.insert.b x21, x6, 2",
      f"{colend}: pv.insert.b x21, x7, 3",
      f"{rowend}: addi x9, x9, {pitch}")


def _conv_generic_builtin(a: Asm, spec, r0, r1, ow, pitch, shift):
    """Per pixel, each window row is read with word loads (word-crossing when
    needed) and reduced with dot products against lane-packed taps. Taps stay
    in registers when they fit, otherwise they are reloaded."""
    k, e = spec.ksize, spec.e
    lanes = 4 // e
    layout = _conv_layout(spec)
    # (byte offset of the data word in the window row, load mnemonic, op) per row
    per_row = []
    if layout == "rows_padded":
        for j0 in range(0, k, lanes):
            per_row.append((j0 * e, "lw", "dot"))
    else:  # i16 pairs + tail
        for j0 in range(0, k - 1, 2):
            per_row.append((j0 * e, "lw", "dot"))
        per_row.append(((k - 1) * e, "lh", "mac"))
    nwords = k * len(per_row)
    coef_regs = [f"x{r}" for r in range(16, 31)] + ["x1", "x2", "x3", "x4", "x5", "x6", "x7"]
    resident = nwords <= len(coef_regs)
    a.li("x9", COEF_VEC)
    if resident:
        for n in range(nwords):
            a(f"lw {coef_regs[n]}, {4 * n}(x9)")
    a.li("x8", IN0 + r0 * pitch * e)
    a.li("x14", OUT + r0 * ow * e)
    rowend, colend = a.fresh("rowend"), a.fresh("colend")
    a(f"lp.setupi L1, {r1 - r0}, {rowend}",
      f"lp.setupi L0, {ow}, {colend}")
    a.li("x10", _round(shift))
    ops = []
    for i in range(k):
        for n, (off, ldm, op) in enumerate(per_row):
            ops.append((i * pitch * e + off, ldm, op, i * len(per_row) + n))
    data = ("x11", "x12", "x13", "x15")
    first = True
    pending: list[tuple[str, str, str]] = []
    for slot, (off, ldm, op, widx) in enumerate(ops):
        d = data[slot % 4]
        if first:
            a(f"p.{ldm} {d}, {e}(x8!)")
            first = False
        else:
            a(f"{ldm} {d}, {off - e}(x8)")
        if resident:
            c = coef_regs[widx]
        else:
            c = "x31"
            a(f"lw x31, {4 * widx}(x9)")
        pending.append((op, d, c))
        if len(pending) == 2 or not resident:
            for p_op, p_d, p_c in pending:
                a(f"{_sdotp(e)} x10, {p_d}, {p_c}" if p_op == "dot" else f"p.mac x10, {p_d}, {p_c}")
            pending = []
    for p_op, p_d, p_c in pending:
        a(f"{_sdotp(e)} x10, {p_d}, {p_c}" if p_op == "dot" else f"p.mac x10, {p_d}, {p_c}")
    a(f"srai x10, x10, {shift}",
      f"{colend}: p.{_st(e)} {e}(x14!), x10",
      f"{rowend}: addi x8, x8, {(pitch - ow) * e}")


def _gen_conv(spec: KernelSpec, rng: random.Random, random_coeffs: bool):
    side, k, e = spec.dims[0], spec.ksize, spec.e
    ow = side - k + 1
    # one padding word per row: vertically adjacent pixels land in different banks
    pitch = side + 4 // e
    img = _rand(rng, side * side, e)
    coef, shift = conv_coeffs(spec, rng if random_coeffs else None)
    image: dict[int, int] = {}
    for r in range(side):
        _put(image, IN0 + r * pitch * e, img[r * side:(r + 1) * side] + [0] * (4 // e), e)
    _put(image, COEF, coef, e)
    _put(image, COEF_VEC, conv_vector_coeffs(coef, k, e, _conv_layout(spec)), 4)
    if spec.variant == "builtin":
        body = (_conv3_builtin if k == 3 else
                _conv5_i8_builtin if (k, e) == (5, 1) else _conv_generic_builtin)
    else:
        body = _conv_baseline if spec.variant == "baseline" else _conv_ext
    progs = []
    for r0, r1 in strips(ow, spec.cores):
        a = Asm()
        if r1 > r0:
            body(a, spec, r0, r1, ow, pitch, shift)
        a.barrier(spec.cores)
        progs.append(a.text())
    inputs = {"image": img, "coeffs": coef, "shift": shift, "side": side}
    return progs, image, inputs, OUT, ow * ow, e


# -- matrix multiplication ----------------------------------------------------------

def _mm_baseline(a: Asm, spec, i0, i1):
    m, kk, n = spec.dims
    e = spec.e
    ld = _ld(e)
    a.li("x9", IN0 + i0 * kk * e)       # row of A
    a.li("x14", OUT + i0 * n * 4)       # C
    a.li("x5", i1 - i0)
    iloop, jloop = a.fresh("iloop"), a.fresh("jloop")
    a(f"{iloop}:")
    a.li("x8", IN1)                     # row of B^T
    a.li("x6", n)
    a(f"{jloop}:", "mv x12, x9", "addi x10, x0, 0")
    groups = kk // 4
    if groups:
        kloop = a.fresh("kloop")
        a.addi("x7", "x12", groups * 4 * e)
        a(f"{kloop}:")
        for half in (0, 2):
            a(f"{ld} x11, {half * e}(x12)", f"{ld} x13, {half * e}(x8)",
              f"{ld} x15, {(half + 1) * e}(x12)", f"{ld} x28, {(half + 1) * e}(x8)",
              "mul x29, x11, x13", "mul x30, x15, x28",
              "add x10, x10, x29", "add x10, x10, x30")
        a(f"addi x12, x12, {4 * e}", f"addi x8, x8, {4 * e}", f"bne x12, x7, {kloop}")
    for r in range(kk % 4):
        a(f"{ld} x11, {r * e}(x12)", f"{ld} x13, {r * e}(x8)",
          "mul x29, x11, x13", "add x10, x10, x29")
    if kk % 4:
        a(f"addi x8, x8, {(kk % 4) * e}")
    a("sw 0(x14), x10", "addi x14, x14, 4",
      "addi x6, x6, -1", f"bne x6, x0, {jloop}")
    a.addi("x9", "x9", kk * e)
    a("addi x5, x5, -1", f"bne x5, x0, {iloop}")


def _mm_ext(a: Asm, spec, i0, i1):
    m, kk, n = spec.dims
    e = spec.e
    ld = _ld(e)
    a.li("x9", IN0 + i0 * kk * e)
    a.li("x14", OUT + i0 * n * 4)
    a.li("x5", i1 - i0)
    iloop, jend, kend = a.fresh("iloop"), a.fresh("jend"), a.fresh("kend")
    a(f"{iloop}:")
    a.li("x8", IN1)
    a(f"lp.setupi L1, {n}, {jend}",
      "mv x12, x9",
      "addi x10, x0, 0",
      f"lp.setupi L0, {kk}, {kend}",
      f"p.{ld} x11, {e}(x12!)",
      f"p.{ld} x13, {e}(x8!)",
      f"{kend}: p.mac x10, x11, x13",
      f"{jend}: p.sw 4(x14!), x10")
    a.addi("x9", "x9", kk * e)
    a("addi x5, x5, -1", f"bne x5, x0, {iloop}")


def _mm_block(a: Asm, spec, bi: int, bj: int):
    """bi x bj block of C: A rows at x12/x13, B^T rows at x8/x15, C rows at
    x14/x7. Leaves x8 at the B^T row after the block."""
    m, kk, n = spec.dims
    e = spec.e
    lanes = 4 // e
    words, rem = kk // lanes, kk % lanes
    accs = [["x16", "x17"], ["x18", "x19"]]
    apt, bpt = ["x12", "x13"], ["x8", "x15"]
    ad, bd = ["x20", "x21"], ["x22", "x23"]
    if bj == 2:
        a.addi("x15", "x8", kk * e)
    for r in range(bi):
        for c in range(bj):
            a(f"addi {accs[r][c]}, x0, 0")
    if words:
        kend = a.fresh("kend")
        loads = [f"p.lw {ad[r]}, 4({apt[r]}!)" for r in range(bi)]
        loads += [f"p.lw {bd[c]}, 4({bpt[c]}!)" for c in range(bj)]
        dots = [f"{_sdotp(e)} {accs[r][c]}, {ad[r]}, {bd[c]}" for r in range(bi) for c in range(bj)]
        if len(loads) == 2:
            # one word of A and one of B^T: keep the dot product off the load shadow
            dots = dots
        a(f"lp.setupi L0, {words}, {kend}")
        body = loads + dots
        body[-1] = f"{kend}: {body[-1]}"
        a(*body)
    for t in range(rem):
        for r in range(bi):
            a(f"p.{_ld(e)} {ad[r]}, {e}({apt[r]}!)")
        for c in range(bj):
            a(f"p.{_ld(e)} {bd[c]}, {e}({bpt[c]}!)")
        for r in range(bi):
            for c in range(bj):
                a(f"p.mac {accs[r][c]}, {ad[r]}, {bd[c]}")
    if bj == 2:
        a("mv x8, x15")
    for c in range(bj):
        a(f"p.sw 4(x14!), {accs[0][c]}")
        if bi == 2:
            a(f"p.sw 4(x7!), {accs[1][c]}")


def _mm_builtin(a: Asm, spec, i0, i1):
    """2x2 register blocking with word loads and dot products."""
    m, kk, n = spec.dims
    e = spec.e
    a.li("x9", IN0 + i0 * kk * e)
    a.li("x10", OUT + i0 * n * 4)
    pairs, odd_row = (i1 - i0) // 2, (i1 - i0) % 2

    def row_block(bi):
        a.li("x8", IN1)
        a("mv x14, x10")
        if bi == 2:
            a.addi("x7", "x10", n * 4)
        if n // 2:
            jend = a.fresh("jend")
            a(f"lp.setupi L1, {n // 2}, {jend}", "mv x12, x9")
            if bi == 2:
                a.addi("x13", "x9", kk * e)
            _mm_block(a, spec, bi, 2)
            a(f"{jend}: nop")
        if n % 2:
            a("mv x12, x9")
            if bi == 2:
                a.addi("x13", "x9", kk * e)
            _mm_block(a, spec, bi, 1)

    if pairs:
        iloop = a.fresh("iloop")
        a.li("x5", pairs)
        a(f"{iloop}:")
        row_block(2)
        a.addi("x9", "x9", 2 * kk * e)
        a.addi("x10", "x10", 2 * n * 4)
        a("addi x5, x5, -1", f"bne x5, x0, {iloop}")
    if odd_row:
        row_block(1)


def _gen_matmul(spec: KernelSpec, rng: random.Random, random_coeffs: bool):
    m, kk, n = spec.dims
    e = spec.e
    A = _rand(rng, m * kk, e)
    BT = _rand(rng, n * kk, e)
    image: dict[int, int] = {}
    _put(image, IN0, A, e)
    _put(image, IN1, BT, e)
    body = {"baseline": _mm_baseline, "ext": _mm_ext, "builtin": _mm_builtin}[spec.variant]
    progs = []
    for i0, i1 in strips(m, spec.cores):
        a = Asm()
        if i1 > i0:
            body(a, spec, i0, i1)
        a.barrier(spec.cores)
        progs.append(a.text())
    return progs, image, {"A": A, "BT": BT}, OUT, m * n, 4


# -- FIR ------------------------------------------------------------------------------

def _fir_baseline(a: Asm, spec, n0, n1):
    nout, taps = spec.dims
    a.li("x9", IN0 + n0 * 2)
    a.li("x14", OUT + n0 * 2)
    a.li("x5", n1 - n0)
    a.li("x6", _round(FIR_SHIFT))
    nloop = a.fresh("nloop")
    a(f"{nloop}:", "mv x12, x9", "mv x10, x6")
    a.li("x8", COEF)
    groups = taps // 4
    if groups:
        kloop = a.fresh("kloop")
        a(f"addi x7, x12, {groups * 8}", f"{kloop}:")
        for half in (0, 2):
            a(f"lh x11, {half * 2}(x12)", f"lh x13, {half * 2}(x8)",
              f"lh x15, {half * 2 + 2}(x12)", f"lh x28, {half * 2 + 2}(x8)",
              "mul x29, x11, x13", "mul x30, x15, x28",
              "add x10, x10, x29", "add x10, x10, x30")
        a("addi x12, x12, 8", "addi x8, x8, 8", f"bne x12, x7, {kloop}")
    for r in range(taps % 4):
        a(f"lh x11, {2 * r}(x12)", f"lh x13, {2 * r}(x8)",
          "mul x29, x11, x13", "add x10, x10, x29")
    a(f"srai x10, x10, {FIR_SHIFT}", "sh 0(x14), x10", "addi x14, x14, 2",
      "addi x9, x9, 2", "addi x5, x5, -1", f"bne x5, x0, {nloop}")


def _fir_ext(a: Asm, spec, n0, n1):
    nout, taps = spec.dims
    a.li("x9", IN0 + n0 * 2)
    a.li("x14", OUT + n0 * 2)
    a.li("x6", _round(FIR_SHIFT))
    nend, kend = a.fresh("nend"), a.fresh("kend")
    a(f"lp.setupi L1, {n1 - n0}, {nend}",
      "mv x12, x9",
      "mv x10, x6")
    a.li("x8", COEF)
    a(f"lp.setupi L0, {taps}, {kend}",
      "p.lh x11, 2(x12!)",
      "p.lh x13, 2(x8!)",
      f"{kend}: p.mac x10, x11, x13",
      f"srai x10, x10, {FIR_SHIFT}",
      "p.sh 2(x14!), x10",
      f"{nend}: addi x9, x9, 2")


def _fir_builtin(a: Asm, spec, n0, n1):
    """Tap pairs live in registers; samples are read two at a time with
    word loads that cross a word boundary on odd outputs."""
    nout, taps = spec.dims
    pairs, tail = taps // 2, taps % 2
    regs = [f"x{r}" for r in range(16, 32)] + ["x1", "x2", "x3", "x4", "x5"]
    a.li("x8", COEF)
    for p in range(pairs):
        a(f"lw {regs[p]}, {4 * p}(x8)")
    if tail:
        a(f"lh {regs[pairs]}, {4 * pairs}(x8)")
    a.li("x9", IN0 + n0 * 2)
    a.li("x14", OUT + n0 * 2)
    a.li("x6", _round(FIR_SHIFT))
    nend = a.fresh("nend")
    a(f"lp.setupi L0, {n1 - n0}, {nend}", "mv x10, x6")
    data = ("x11", "x12", "x13", "x15")
    ops = [("lw", 4 * p, "dot", regs[p]) for p in range(pairs)]
    if tail:
        ops.append(("lh", 4 * pairs, "mac", regs[pairs]))
    pending = []
    for s, (ldm, off, op, c) in enumerate(ops):
        d = data[s % 4]
        a(f"p.{ldm} {d}, 2(x9!)" if s == 0 else f"{ldm} {d}, {off - 2}(x9)")
        pending.append((op, d, c))
        if len(pending) == 2:
            for o, dd, cc in pending:
                a(f"pv.sdotp.sh x10, {dd}, {cc}" if o == "dot" else f"p.mac x10, {dd}, {cc}")
            pending = []
    for o, dd, cc in pending:
        a(f"pv.sdotp.sh x10, {dd}, {cc}" if o == "dot" else f"p.mac x10, {dd}, {cc}")
    a(f"srai x10, x10, {FIR_SHIFT}", f"{nend}: p.sh 2(x14!), x10")


def _gen_fir(spec: KernelSpec, rng: random.Random, random_coeffs: bool):
    nout, taps = spec.dims
    x = _rand(rng, nout + taps - 1, 2)
    if random_coeffs:
        h = _rand(rng, taps, 2)
    else:
        # windowed low-pass in Q15, scaled so the taps sum to about one half
        h = [round(16384 * (1 - abs(2 * t / max(taps - 1, 1) - 1)) / max(taps / 2, 1))
             for t in range(taps)]
    image: dict[int, int] = {}
    _put(image, IN0, x, 2)
    _put(image, IN0 + len(x) * 2, [0, 0], 2)
    _put(image, COEF, h + [0], 2)
    body = {"baseline": _fir_baseline, "ext": _fir_ext, "builtin": _fir_builtin}[spec.variant]
    progs = []
    for n0, n1 in strips(nout, spec.cores):
        a = Asm()
        if n1 > n0:
            body(a, spec, n0, n1)
        a.barrier(spec.cores)
        progs.append(a.text())
    return progs, image, {"x": x, "h": h}, OUT, nout, 2


# -- element-wise fixed point -------------------------------------------------------------

def _vec_common(a: Asm, n0):
    a.li("x10", IN0 + 2 * n0)
    a.li("x11", IN1 + 2 * n0)
    a.li("x12", OUT + 2 * n0)


def _vecadd_baseline(a: Asm, spec, n0, n1):
    lo, hi = -(1 << (CLIP_BITS - 1)), (1 << (CLIP_BITS - 1)) - 1
    a.li("x15", lo)
    a.li("x14", hi)
    _vec_common(a, n0)
    a.li("x3", n1 - n0)
    loop, lb_, ub_, end = (a.fresh(s) for s in ("loop", "lb", "ub", "endL"))
    a(f"{loop}:",
      "lh x4, 0(x10)", "lh x5, 0(x11)", "addi x10, x10, 2", "addi x11, x11, 2",
      "add x4, x4, x5",
      f"blt x4, x15, {lb_}",
      f"blt x14, x4, {ub_}",
      f"j {end}",
      f"{lb_}: mv x4, x15",
      f"j {end}",
      f"{ub_}: mv x4, x14",
      f"{end}: sh 0(x12), x4",
      "addi x12, x12, 2",
      "addi x3, x3, -1",
      f"bne x3, x0, {loop}")


def _vecadd_ext(a: Asm, spec, n0, n1):
    _vec_common(a, n0)
    end = a.fresh("endL")
    a.li("x3", n1 - n0)
    a(f"lp.setup L0, x3, {end}",
      "p.lh x4, 2(x10!)", "p.lh x5, 2(x11!)",
      "add x4, x4, x5",
      f"p.clip x4, x4, {CLIP_BITS}",
      f"{end}: p.sh 2(x12!), x4")


def _mulq_baseline(a: Asm, spec, n0, n1):
    _vec_common(a, n0)
    a.li("x6", _round(Q_SHIFT))
    a.li("x3", n1 - n0)
    loop = a.fresh("loop")
    a(f"{loop}:",
      "lh x4, 0(x10)", "lh x5, 0(x11)", "addi x10, x10, 2", "addi x11, x11, 2",
      "mul x4, x4, x5",
      "add x4, x4, x6",
      f"srai x4, x4, {Q_SHIFT}",
      "sh 0(x12), x4",
      "addi x12, x12, 2",
      "addi x3, x3, -1",
      f"bne x3, x0, {loop}")


def _mulq_ext(a: Asm, spec, n0, n1):
    _vec_common(a, n0)
    end = a.fresh("endL")
    a.li("x3", n1 - n0)
    a(f"lp.setup L0, x3, {end}",
      "p.lh x4, 2(x10!)", "p.lh x5, 2(x11!)",
      f"p.mulsRN x4, x4, x5, {Q_SHIFT}",
      f"{end}: p.sh 2(x12!), x4")


def _gen_elementwise(spec: KernelSpec, rng: random.Random, random_coeffs: bool):
    (n,) = spec.dims
    lim = 1 << (CLIP_BITS - 1)
    # Q1.11 operands
    xa = [rng.randint(-lim, lim - 1) for _ in range(n)]
    xb = [rng.randint(-lim, lim - 1) for _ in range(n)]
    image: dict[int, int] = {}
    _put(image, IN0, xa, 2)
    _put(image, IN1, xb, 2)
    table = {("vecadd_clip", "baseline"): _vecadd_baseline, ("vecadd_clip", "ext"): _vecadd_ext,
             ("mulq_norm", "baseline"): _mulq_baseline, ("mulq_norm", "ext"): _mulq_ext}
    body = table[(spec.name, spec.variant)]
    progs = []
    for n0, n1 in strips(n, spec.cores):
        a = Asm()
        if n1 > n0:
            body(a, spec, n0, n1)
        a.barrier(spec.cores)
        progs.append(a.text())
    return progs, image, {"a": xa, "b": xb}, OUT, n, 2


def generate(spec: KernelSpec, seed: int = 0, random_coeffs: bool = False) -> Generated:
    """Assemble the per-core programs and the input data image for ``spec``."""
    rng = random.Random(f"{spec.name}/{spec.element_type}/{spec.dims}/{seed}")
    if spec.name.startswith("conv"):
        gen = _gen_conv
    elif spec.name == "matmul":
        gen = _gen_matmul
    elif spec.name == "fir":
        gen = _gen_fir
    else:
        gen = _gen_elementwise
    texts, image, inputs, out_addr, count, nbytes = gen(spec, rng, random_coeffs)
    progs = [parse(t) for t in texts]
    return Generated(spec, progs, image, inputs, out_addr, count, nbytes, texts)
