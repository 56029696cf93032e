# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lane kernels; same contract as ``_lanes_py``."""
from libc.stdint cimport uint32_t, int32_t, int64_t, uint64_t

cdef enum:
    ADD = 0
    SUB = 1
    AVG = 2
    MIN = 3
    MAX = 4
    SRL = 5
    SRA = 6
    SLL = 7
    AND = 8
    OR = 9
    XOR = 10
    CMPEQ = 11
    CMPGT = 12


cdef inline int32_t _sext(uint32_t x, int width) nogil:
    cdef int sh = 32 - width
    return (<int32_t>(x << sh)) >> sh


cpdef uint32_t vec_alu(int op, uint32_t a, uint32_t b, int width) except? 0xFFFFFFFF:
    if op == AND:
        return a & b
    if op == OR:
        return a | b
    if op == XOR:
        return a ^ b
    if op < 0 or op > CMPGT:
        raise ValueError(f"bad vector op {op}")
    cdef uint32_t mask = (1u << width) - 1
    cdef uint32_t shmask = width - 1
    cdef uint32_t out = 0, x, y, r = 0
    cdef int32_t xs, ys
    cdef int pos
    for pos in range(0, 32, width):
        x = (a >> pos) & mask
        y = (b >> pos) & mask
        xs = _sext(x, width)
        ys = _sext(y, width)
        if op == ADD:
            r = x + y
        elif op == SUB:
            r = x - y
        elif op == SLL:
            r = x << (y & shmask)
        elif op == SRL:
            r = x >> (y & shmask)
        elif op == AVG:
            r = <uint32_t>((xs + ys) >> 1)
        elif op == MIN:
            r = <uint32_t>(xs if xs < ys else ys)
        elif op == MAX:
            r = <uint32_t>(xs if xs > ys else ys)
        elif op == SRA:
            r = <uint32_t>(xs >> (y & shmask))
        elif op == CMPEQ:
            r = mask if x == y else 0
        elif op == CMPGT:
            r = mask if xs > ys else 0
        out |= (r & mask) << pos
    return out


cpdef uint32_t dotp(uint32_t a, uint32_t b, uint32_t acc, int width, bint signed):
    cdef uint32_t mask = (1u << width) - 1
    cdef int64_t total = acc
    cdef int64_t x, y
    cdef int pos
    for pos in range(0, 32, width):
        if signed:
            x = _sext((a >> pos) & mask, width)
            y = _sext((b >> pos) & mask, width)
        else:
            x = (a >> pos) & mask
            y = (b >> pos) & mask
        total += x * y
    return <uint32_t>(<uint64_t>total)


cpdef uint32_t shuffle(uint32_t a, uint32_t b, uint32_t mask, int width):
    cdef uint32_t lane_mask = (1u << width) - 1
    cdef int idx_bits = 2 if width == 8 else 1
    cdef uint32_t idx_mask = (1u << idx_bits) - 1
    cdef uint32_t out = 0, sel, src
    cdef int pos
    for pos in range(0, 32, width):
        sel = (mask >> pos) & lane_mask
        src = a if (sel >> idx_bits) & 1 else b
        out |= ((src >> ((sel & idx_mask) * width)) & lane_mask) << pos
    return out


cpdef uint32_t add_rn(uint32_t a, uint32_t b, int shift, bint subtract, bint unsigned):
    cdef uint32_t r = (a - b) if subtract else (a + b)
    if shift:
        r += 1u << (shift - 1)
    if unsigned:
        return r >> shift
    return <uint32_t>((<int32_t>r) >> shift)


cpdef uint32_t mul_rn(uint32_t a, uint32_t b, int shift, bint unsigned):
    cdef uint32_t r
    if unsigned:
        r = <uint32_t>((a & 0xFFFF) * (b & 0xFFFF))
    else:
        r = <uint32_t>(<int32_t>_sext(a & 0xFFFF, 16) * <int32_t>_sext(b & 0xFFFF, 16))
    if shift:
        r += 1u << (shift - 1)
    if unsigned:
        return r >> shift
    return <uint32_t>((<int32_t>r) >> shift)


cpdef uint32_t clip(uint32_t a, int shift, bint unsigned):
    cdef int64_t hi = (1LL << (shift - 1)) - 1
    cdef int64_t lo = 0 if unsigned else -(1LL << (shift - 1))
    cdef int64_t v = <int32_t>a
    if v > hi:
        v = hi
    elif v < lo:
        v = lo
    return <uint32_t>(<uint64_t>v)


cpdef uint32_t mac(uint32_t acc, uint32_t a, uint32_t b, bint subtract):
    cdef int64_t p = <int64_t>_sext(a & 0xFFFF, 16) * _sext(b & 0xFFFF, 16)
    if subtract:
        return <uint32_t>(<uint64_t>(<int64_t>acc - p))
    return <uint32_t>(<uint64_t>(<int64_t>acc + p))


cdef inline uint32_t _fmask(int length) nogil:
    return 0xFFFFFFFFu if length >= 32 else (1u << length) - 1


cpdef uint32_t extract(uint32_t a, int length, int off, bint signed):
    cdef uint32_t field = (a >> off) & _fmask(length)
    if signed and length < 32 and (field >> (length - 1)) & 1:
        field |= ~_fmask(length)
    return field


cpdef uint32_t insert(uint32_t dst, uint32_t src, int length, int off):
    cdef uint32_t fm = _fmask(length) << off
    return (dst & ~fm) | ((src << off) & fm)


cpdef uint32_t bclr(uint32_t a, int length, int off):
    return a & ~(_fmask(length) << off)


cpdef uint32_t bset(uint32_t a, int length, int off):
    return a | (_fmask(length) << off)


cpdef int cnt(uint32_t a):
    return __builtin_popcount(a)


cpdef int ff1(uint32_t a):
    if a == 0:
        return 32
    return __builtin_ctz(a)


cpdef int fl1(uint32_t a):
    if a == 0:
        return 32
    return 31 - __builtin_clz(a)


cpdef int clb(uint32_t a):
    if a == 0:
        return 0
    if a & 0x80000000u:
        a = ~a
    if a == 0:
        return 31
    return __builtin_clz(a) - 1


cpdef uint32_t divide(uint32_t a, uint32_t b, int op):
    cdef int64_t x, y, q
    if op & 1:
        x = a
        y = b
    else:
        x = <int32_t>a
        y = <int32_t>b
    if y == 0:
        return 0xFFFFFFFFu if op < 2 else a
    q = x / y
    if op < 2:
        return <uint32_t>(<uint64_t>q)
    return <uint32_t>(<uint64_t>(x - q * y))


cdef extern from *:
    int __builtin_popcount(unsigned int) nogil
    int __builtin_ctz(unsigned int) nogil
    int __builtin_clz(unsigned int) nogil
