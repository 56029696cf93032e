"""Data images as text hex dumps.

One line per run of up to 16 bytes::

    # comment
    00000400: 12 34 56 78 9a bc de f0 11 22 33 44 55 66 77 88

The address is hexadecimal, without a prefix, followed by a colon and
space-separated byte values. Blank lines and ``#`` comments are ignored.
Lines may appear in any order; writing the same byte twice is an error.
"""
from __future__ import annotations

from pathlib import Path


class HexDumpError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_hex(text: str) -> dict[int, int]:
    image: dict[int, int] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        addr_s, sep, rest = line.partition(":")
        if not sep:
            raise HexDumpError(n, "expected 'ADDR: BB BB ...'")
        try:
            addr = int(addr_s, 16)
            values = [int(tok, 16) for tok in rest.split()]
        except ValueError:
            raise HexDumpError(n, "bad hexadecimal number") from None
        for i, v in enumerate(values):
            if not 0 <= v <= 0xFF:
                raise HexDumpError(n, f"byte value {v:#x} out of range")
            if addr + i in image:
                raise HexDumpError(n, f"address {addr + i:#x} written twice")
            image[addr + i] = v
    return image


def format_hex(image: dict[int, int], width: int = 16) -> str:
    lines = []
    row: list[int] = []
    start = prev = None
    for addr in sorted(image):
        if row and (addr != prev + 1 or addr % width == 0):
            lines.append(f"{start:08x}: " + " ".join(f"{b:02x}" for b in row))
            row = []
        if not row:
            start = addr
        row.append(image[addr])
        prev = addr
    if row:
        lines.append(f"{start:08x}: " + " ".join(f"{b:02x}" for b in row))
    return "\n".join(lines) + ("\n" if lines else "")


def load_image(spec: str) -> dict[int, int]:
    """Load ``PATH`` or ``PATH@BASE``.

    Files ending in ``.hex`` or ``.txt`` are hex dumps (``BASE`` is added to
    every address); anything else is raw binary placed at ``BASE`` (default 0).
    """
    path, _, base_s = spec.rpartition("@") if "@" in spec else (spec, "", "")
    base = int(base_s, 0) if base_s else 0
    p = Path(path)
    if p.suffix.lower() in (".hex", ".txt"):
        return {base + a: v for a, v in parse_hex(p.read_text()).items()}
    return {base + i: b for i, b in enumerate(p.read_bytes())}
