"""Wide-integer reference semantics, written independently of dspsim.

Lanes are taken apart with ``int.to_bytes``/``struct`` rather than shifts
and masks, every intermediate is an unbounded Python int, and results are
folded back to 32 bits only at the end.
"""
import struct

WORD = 1 << 32


def u32(x):
    return x % WORD


def s32(x):
    x = u32(x)
    return x - WORD if x >= 1 << 31 else x


def split(word, width, signed):
    fmt = {(8, True): "<4b", (8, False): "<4B", (16, True): "<2h", (16, False): "<2H"}
    return list(struct.unpack(fmt[width, signed], u32(word).to_bytes(4, "little")))


def join(lanes, width):
    n = width // 8
    return int.from_bytes(b"".join((v % (1 << width)).to_bytes(n, "little") for v in lanes),
                          "little")


def floor_shift(x, n):
    """Arithmetic shift right as floor division."""
    return x // (2 ** n)


def vector_alu(op, a, b, width):
    sa, sb = split(a, width, True), split(b, width, True)
    ua, ub = split(a, width, False), split(b, width, False)
    full = 2 ** width - 1
    amt = [y % width for y in ub]
    f = {
        "add": lambda i: ua[i] + ub[i],
        "sub": lambda i: ua[i] - ub[i],
        "avg": lambda i: floor_shift(sa[i] + sb[i], 1),
        "min": lambda i: min(sa[i], sb[i]),
        "max": lambda i: max(sa[i], sb[i]),
        "srl": lambda i: ua[i] // 2 ** amt[i],
        "sra": lambda i: floor_shift(sa[i], amt[i]),
        "sll": lambda i: ua[i] * 2 ** amt[i],
        "and": lambda i: ua[i] & ub[i],
        "or": lambda i: ua[i] | ub[i],
        "xor": lambda i: ua[i] ^ ub[i],
        "cmpeq": lambda i: full if ua[i] == ub[i] else 0,
        "cmpgt": lambda i: full if sa[i] > sb[i] else 0,
    }[op]
    return join([f(i) for i in range(32 // width)], width)


def dotp(a, b, acc, width, signed):
    return u32(acc + sum(x * y for x, y in zip(split(a, width, signed), split(b, width, signed))))


def shuffle(a, b, mask, width):
    n = 32 // width
    idx_bits = {8: 2, 16: 1}[width]
    la, lb = split(a, width, False), split(b, width, False)
    out = []
    for sel in split(mask, width, False):
        src = la if (sel // 2 ** idx_bits) % 2 else lb
        out.append(src[sel % 2 ** idx_bits % n])
    return join(out, width)


def _rnd(i):
    return 2 ** (i - 1) if i else 0


def add_rn(a, b, i, subtract=False, unsigned=False):
    # the sum is formed in the 32-bit adder, then rounded and shifted
    t = u32((a - b if subtract else a + b) + _rnd(i))
    return u32(t // 2 ** i) if unsigned else u32(floor_shift(s32(t), i))


def mul_rn(a, b, i, unsigned=False):
    x, y = (a % 65536, b % 65536) if unsigned else (split(a, 16, True)[0], split(b, 16, True)[0])
    t = u32(x * y + _rnd(i))
    return u32(t // 2 ** i) if unsigned else u32(floor_shift(s32(t), i))


def clip(a, i, unsigned=False):
    lo = 0 if unsigned else -(2 ** (i - 1))
    hi = 2 ** (i - 1) - 1
    return u32(max(lo, min(hi, s32(a))))


def mac(acc, a, b, subtract=False):
    p = split(a, 16, True)[0] * split(b, 16, True)[0]
    return u32(acc - p if subtract else acc + p)


def bits(a):
    return [(u32(a) >> k) & 1 for k in range(32)]


def extract(a, length, off, signed):
    field = sum(bit << k for k, bit in enumerate(bits(a)[off:off + length]))
    if signed and field >= 2 ** (length - 1):
        field -= 2 ** length
    return u32(field)


def insert(dst, src, length, off):
    d, s = bits(dst), bits(src)
    for k in range(length):
        d[off + k] = s[k]
    return sum(bit << k for k, bit in enumerate(d))


def bclr(a, length, off):
    d = bits(a)
    d[off:off + length] = [0] * length
    return sum(bit << k for k, bit in enumerate(d))


def bset(a, length, off):
    d = bits(a)
    d[off:off + length] = [1] * length
    return sum(bit << k for k, bit in enumerate(d))


def cnt(a):
    return sum(bits(a))


def ff1(a):
    b = bits(a)
    return b.index(1) if 1 in b else 32


def fl1(a):
    b = bits(a)
    return 31 - b[::-1].index(1) if 1 in b else 32


def clb(a):
    if u32(a) == 0:
        return 0
    b = bits(a)[::-1]   # msb first
    n = 0
    while n + 1 < 32 and b[n + 1] == b[0]:
        n += 1
    return n


def divide(op, a, b):
    signed = op in ("div", "rem")
    x, y = (s32(a), s32(b)) if signed else (u32(a), u32(b))
    if y == 0:
        return u32(-1) if op in ("div", "divu") else u32(a)
    q = abs(x) // abs(y) * (1 if (x >= 0) == (y >= 0) else -1)
    r = x - q * y
    return u32(q) if op in ("div", "divu") else u32(r)
