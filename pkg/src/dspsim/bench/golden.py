"""Host-side reference results, computed without the simulator."""
from __future__ import annotations

from dataclasses import dataclass

from .kernels import CLIP_BITS, FIR_SHIFT, Q_SHIFT, KernelSpec


@dataclass
class GoldenResult:
    output: list[int]


def _wrap(v: int, bits: int) -> int:
    v &= (1 << bits) - 1
    return v - (1 << bits) if v >> (bits - 1) else v


def _round_shift(acc: int, shift: int) -> int:
    """Add the rounding constant and shift, all in 32-bit two's complement."""
    acc = _wrap(acc + ((1 << (shift - 1)) if shift else 0), 32)
    return acc >> shift


def conv2d(img, side, coef, k, shift, bits):
    ow = side - k + 1
    out = []
    for r in range(ow):
        for c in range(ow):
            acc = 0
            for i in range(k):
                row = (r + i) * side + c
                for j in range(k):
                    acc += coef[i * k + j] * img[row + j]
            out.append(_wrap(_round_shift(acc, shift), bits))
    return out


def matmul(A, BT, m, kk, n):
    return [_wrap(sum(A[i * kk + t] * BT[j * kk + t] for t in range(kk)), 32)
            for i in range(m) for j in range(n)]


def fir(x, h, nout):
    taps = len(h)
    return [_wrap(_round_shift(sum(h[t] * x[i + t] for t in range(taps)), FIR_SHIFT), 16)
            for i in range(nout)]


def vecadd_clip(a, b):
    lo, hi = -(1 << (CLIP_BITS - 1)), (1 << (CLIP_BITS - 1)) - 1
    return [min(max(x + y, lo), hi) for x, y in zip(a, b)]


def mulq_norm(a, b):
    return [_wrap(_round_shift(x * y, Q_SHIFT), 16) for x, y in zip(a, b)]


def golden(spec: KernelSpec, inputs: dict) -> GoldenResult:
    if spec.name.startswith("conv"):
        out = conv2d(inputs["image"], inputs["side"], inputs["coeffs"], spec.ksize,
                     inputs["shift"], 8 * spec.e)
    elif spec.name == "matmul":
        out = matmul(inputs["A"], inputs["BT"], *spec.dims)
    elif spec.name == "fir":
        out = fir(inputs["x"], inputs["h"], spec.dims[0])
    elif spec.name == "vecadd_clip":
        out = vecadd_clip(inputs["a"], inputs["b"])
    else:
        out = mulq_norm(inputs["a"], inputs["b"])
    return GoldenResult(out)
