"""Pure-Python lane kernels (fallback for the compiled ``_lanes_c``).

Every function takes and returns unsigned 32-bit integers. Vector op codes
index :data:`dspsim.isa.VECTOR_OPS`.
"""

M32 = 0xFFFFFFFF

ADD, SUB, AVG, MIN, MAX, SRL, SRA, SLL, AND, OR, XOR, CMPEQ, CMPGT = range(13)


def _s32(v):
    return v - ((v & 0x80000000) << 1)


def vec_alu(op, a, b, width):
    if op == AND:
        return a & b
    if op == OR:
        return a | b
    if op == XOR:
        return a ^ b
    mask = (1 << width) - 1
    sign = 1 << (width - 1)
    shmask = width - 1
    out = 0
    for pos in range(0, 32, width):
        x = (a >> pos) & mask
        y = (b >> pos) & mask
        if op == ADD:
            r = x + y
        elif op == SUB:
            r = x - y
        elif op == SLL:
            r = x << (y & shmask)
        elif op == SRL:
            r = x >> (y & shmask)
        else:
            xs = x - ((x & sign) << 1)
            ys = y - ((y & sign) << 1)
            if op == AVG:
                r = (xs + ys) >> 1
            elif op == MIN:
                r = xs if xs < ys else ys
            elif op == MAX:
                r = xs if xs > ys else ys
            elif op == SRA:
                r = xs >> (y & shmask)
            elif op == CMPEQ:
                r = mask if x == y else 0
            elif op == CMPGT:
                r = mask if xs > ys else 0
            else:
                raise ValueError(f"bad vector op {op}")
        out |= (r & mask) << pos
    return out


def dotp(a, b, acc, width, signed):
    mask = (1 << width) - 1
    sign = 1 << (width - 1)
    total = acc
    for pos in range(0, 32, width):
        x = (a >> pos) & mask
        y = (b >> pos) & mask
        if signed:
            x -= (x & sign) << 1
            y -= (y & sign) << 1
        total += x * y
    return total & M32


def shuffle(a, b, mask, width):
    lane_mask = (1 << width) - 1
    idx_bits = 2 if width == 8 else 1
    idx_mask = (1 << idx_bits) - 1
    out = 0
    for pos in range(0, 32, width):
        sel = (mask >> pos) & lane_mask
        src = a if (sel >> idx_bits) & 1 else b
        out |= ((src >> ((sel & idx_mask) * width)) & lane_mask) << pos
    return out


def add_rn(a, b, shift, subtract, unsigned):
    r = (a - b) if subtract else (a + b)
    if shift:
        r += 1 << (shift - 1)
    r &= M32
    if unsigned:
        return r >> shift
    return (_s32(r) >> shift) & M32


def mul_rn(a, b, shift, unsigned):
    x = a & 0xFFFF
    y = b & 0xFFFF
    if not unsigned:
        x -= (x & 0x8000) << 1
        y -= (y & 0x8000) << 1
    r = x * y
    if shift:
        r += 1 << (shift - 1)
    r &= M32
    if unsigned:
        return r >> shift
    return (_s32(r) >> shift) & M32


def clip(a, shift, unsigned):
    hi = (1 << (shift - 1)) - 1
    lo = 0 if unsigned else -(1 << (shift - 1))
    v = _s32(a)
    if v > hi:
        v = hi
    elif v < lo:
        v = lo
    return v & M32


def mac(acc, a, b, subtract):
    x = a & 0xFFFF
    y = b & 0xFFFF
    x -= (x & 0x8000) << 1
    y -= (y & 0x8000) << 1
    return (acc - x * y if subtract else acc + x * y) & M32


def extract(a, length, off, signed):
    field = (a >> off) & ((1 << length) - 1)
    if signed and field >> (length - 1):
        field -= 1 << length
    return field & M32


def insert(dst, src, length, off):
    fmask = ((1 << length) - 1) << off
    return ((dst & ~fmask) | ((src << off) & fmask)) & M32


def bclr(a, length, off):
    return a & ~(((1 << length) - 1) << off) & M32


def bset(a, length, off):
    return (a | (((1 << length) - 1) << off)) & M32


def cnt(a):
    return bin(a).count("1")


def ff1(a):
    if a == 0:
        return 32
    return (a & -a).bit_length() - 1


def fl1(a):
    if a == 0:
        return 32
    return a.bit_length() - 1


def clb(a):
    if a == 0:
        return 0
    x = a ^ M32 if a & 0x80000000 else a
    return 31 - x.bit_length()


def divide(a, b, op):
    """op: 0 div, 1 divu, 2 rem, 3 remu."""
    if op & 1:
        x, y = a, b
    else:
        x, y = _s32(a), _s32(b)
    if y == 0:
        return M32 if op < 2 else a
    q = abs(x) // abs(y)
    if (x < 0) != (y < 0):
        q = -q
    if op < 2:
        return q & M32
    return (x - q * y) & M32
