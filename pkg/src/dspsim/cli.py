"""Command-line driver.

Subcommands::

    dspsim asm FILE [-o OUT]                 canonical listing of a program
    dspsim run FILE [FILE ...] [options]     simulate, print a run report
    dspsim bench SUITE --out DIR             benchmark tables + summary
    dspsim gen KERNEL [options] --out DIR    emit a kernel's programs and data

Exit codes: 0 ok, 1 file or config error, 2 parse error, 3 trap,
4 deadlock, 5 golden or acceptance failure, 64 usage error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .assembler import SourceError, parse, print_program
from .cluster import ClusterConfig, run_cluster
from .energy import EnergyTable
from .hexdump import HexDumpError, format_hex, load_image
from .pipeline import TimingConfig
from .report import build_report

EXIT_OK, EXIT_FILE, EXIT_PARSE, EXIT_TRAP, EXIT_DEADLOCK, EXIT_FAIL = 0, 1, 2, 3, 4, 5
EXIT_USAGE = 64

SUITES = ("conv", "matmul", "fir", "vecadd_clip", "mulq_norm", "kernels", "insn", "snippets",
          "acceptance", "all")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_FILE, f"{path}: {exc.strerror or exc}") from None


def _assemble(path: str):
    try:
        return parse(_read(path))
    except SourceError as exc:
        raise CliError(EXIT_PARSE, f"{path}:{exc.line}: {exc.message}") from None


def _config(path, cls, what):
    if path is None:
        return cls.default() if hasattr(cls, "default") else cls()
    try:
        return cls.from_text(_read(path))
    except (ValueError, KeyError, configparser.Error) as exc:
        msg = str(exc).splitlines()[0]
        raise CliError(EXIT_FILE, f"{path}: bad {what} config: {msg}") from None


def _image(spec: str) -> dict[int, int]:
    try:
        return load_image(spec)
    except OSError as exc:
        raise CliError(EXIT_FILE, f"{spec}: {exc.strerror or exc}") from None
    except HexDumpError as exc:
        raise CliError(EXIT_PARSE, f"{spec}: {exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_FILE, f"{spec}: {exc}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


# -- asm ------------------------------------------------------------------------

def cmd_asm(args) -> int:
    _emit(print_program(_assemble(args.file)), args.out)
    return EXIT_OK


# -- run ------------------------------------------------------------------------

def cmd_run(args) -> int:
    files = args.files
    cores = args.cores if args.cores is not None else len(files)
    if len(files) not in (1, cores):
        raise CliError(EXIT_USAGE, f"{len(files)} programs for {cores} cores "
                                   "(give one for all cores or one per core)")
    progs = [_assemble(f) for f in files]
    timing = _config(args.timing, TimingConfig, "timing")
    energy = _config(args.energy, EnergyTable, "energy")
    images = [_image(d) for d in args.data]
    golden = _image(args.golden) if args.golden else None
    try:
        cfg = ClusterConfig(cores=cores, banks=args.banks, max_cycles=args.max_cycles)
        mem = cfg.make_memory()
        for p in progs:
            mem.load_image(p.data)
        for img in images:
            mem.load_image(img)
        res = run_cluster(progs if len(progs) > 1 else progs[0], cfg, timing, mem=mem)
    except ValueError as exc:
        raise CliError(EXIT_FILE, str(exc)) from None
    ok = None
    if golden is not None:
        ok = all(mem.read_bytes(a, 1)[0] == v for a, v in golden.items())
    report = build_report(res, ",".join(files), energy, ok)
    text = report.to_json() if args.json else report.to_csv() if args.csv else report.summary()
    _emit(text, args.out)
    if report.status == "deadlock":
        print(f"deadlock: {report.diagnostic}", file=sys.stderr)
        return EXIT_DEADLOCK
    if report.status == "trap":
        print(f"trap: {report.diagnostic}", file=sys.stderr)
        return EXIT_TRAP
    if ok is False:
        print("golden check failed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# -- gen ------------------------------------------------------------------------

def _dims(text: str | None):
    if not text:
        return ()
    try:
        return tuple(int(x) for x in text.lower().split("x"))
    except ValueError:
        raise CliError(EXIT_USAGE, f"bad --dims {text!r} (expected e.g. 64 or 32x32x32)") from None


def cmd_gen(args) -> int:
    from .bench.golden import golden
    from .bench.kernels import KernelSpec, SpecError, generate
    try:
        spec = KernelSpec(args.kernel, args.type, _dims(args.dims), args.variant, args.cores)
    except SpecError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    gen = generate(spec, args.seed, args.random_coeffs)
    out = Path(args.out)
    sources = gen.sources or [print_program(p) for p in gen.programs]
    for h, src in enumerate(sources):
        write_atomic(out / f"core{h}.s", src)
    write_atomic(out / "data.hex", f"# {spec.label} seed {args.seed}\n" + format_hex(gen.image))
    b = gen.out_bytes
    img = {}
    for i, v in enumerate(golden(spec, gen.inputs).output):
        for k, byte in enumerate((v & ((1 << 8 * b) - 1)).to_bytes(b, "little")):
            img[gen.out_addr + i * b + k] = byte
    write_atomic(out / "golden.hex", f"# expected output of {spec.label}\n" + format_hex(img))
    print(f"wrote {len(sources)} program(s), data.hex and golden.hex to {out}")
    return EXIT_OK


# -- bench ----------------------------------------------------------------------

def _rows_csv(dicts: list[dict]) -> str:
    if not dicts:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(dicts[0]), lineterminator="\n")
    w.writeheader()
    for d in dicts:
        w.writerow({k: f"{v:.6g}" if isinstance(v, float) else v for k, v in d.items()})
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _kernel_table(kernels, cores, args):
    from .bench.acceptance import row_marks, table_checks
    from .bench.suite import default_specs, format_table, run_suite
    rows = run_suite(default_specs(kernels, cores=cores), seed=args.seed, jobs=args.jobs)
    marks = row_marks(rows)
    dicts = [{**r.to_dict(), "verdict": "pass" if ok else "fail", "notes": note}
             for r, (ok, note) in zip(rows, marks)]
    lines = format_table(rows).splitlines()
    lines[0] += "  verdict"
    lines[1] += "  -------"
    lines[2:] = [f"{ln}  {'PASS' if ok else 'FAIL'}" for ln, (ok, _) in zip(lines[2:], marks)]
    failed = [f"{r.kernel} {r.type} {r.variant} {r.cores}c: {note}"
              for r, (ok, note) in zip(rows, marks) if not ok]
    for ok, what in table_checks(rows):
        lines.append(f"{'PASS' if ok else 'FAIL'} {what}")
        if not ok:
            failed.append(what)
    return dicts, "\n".join(lines) + "\n", failed


def _insn_table(args):
    from .bench.snippets import insn_table
    dicts = [{"label": lab, "instruction": line, "cycles_per_insn": cpi, "pj_per_insn": pj}
             for lab, line, cpi, pj in insn_table()]
    w = max(len(d["label"]) for d in dicts)
    text = "".join(f"{d['label']:<{w}}  {d['cycles_per_insn']:5.2f} cyc  "
                   f"{d['pj_per_insn']:6.1f} pJ\n" for d in dicts)
    return dicts, text, []


def _snippet_table(args):
    import random
    from .bench.snippets import (ADD4, SHUFFLE, SHUFFLE_MASK, clip_loop, mulq_loop,
                                 q111_inputs, unaligned_load)
    rng = random.Random(args.seed)
    cases = [(unaligned_load(1), {10: 0x400}, {0x400 + i: rng.randrange(256) for i in range(8)}),
             (ADD4, {r: rng.randint(-2048, 2047) for r in (4, 5, 6, 7)}, None),
             (SHUFFLE, {6: rng.getrandbits(32), 8: SHUFFLE_MASK}, None)]
    for make in (clip_loop, mulq_loop):
        cases.append((make(64), *q111_inputs(rng, 64)))
    dicts, failed = [], []
    for sn, regs, img in cases:
        base, ext = sn.compare(regs, img)
        eq = sn.equivalent(base, ext)
        fewer = ext.cycles <= base.cycles and ext.energy_pj <= base.energy_pj
        dicts.append({"snippet": sn.name,
                      "base_instructions": base.instructions, "base_cycles": base.cycles,
                      "base_pj": base.energy_pj, "ext_instructions": ext.instructions,
                      "ext_cycles": ext.cycles, "ext_pj": ext.energy_pj,
                      "equivalent": eq, "verdict": "pass" if eq and fewer else "fail"})
        if not (eq and fewer):
            failed.append(sn.name)
    text = "".join(f"{d['snippet']:<18} base {d['base_instructions']:3d} instr "
                   f"{d['base_cycles']:5d} cyc {d['base_pj']:8.1f} pJ | ext "
                   f"{d['ext_instructions']:3d} instr {d['ext_cycles']:5d} cyc "
                   f"{d['ext_pj']:8.1f} pJ  {d['verdict'].upper()}\n" for d in dicts)
    return dicts, text, failed


def _acceptance(args):
    from .bench.acceptance import evaluate
    crits = evaluate(args.seed)
    dicts = [{"criterion": c.number, "name": c.name, "passed": c.passed, "detail": c.detail,
              "values": c.values} for c in crits]
    text = "".join(c.line() + "\n" for c in crits)
    return dicts, text, [c.name for c in crits if not c.passed]


def _tables(suite: str):
    """``(file stem, title, builder)`` per output table of ``suite``."""
    from .bench.acceptance import CONV
    kernel = lambda ks, cores: lambda a: _kernel_table(ks, cores, a)   # noqa: E731
    if suite in ("conv",):
        return [("conv", "convolution, 1 and 4 cores", kernel(CONV, (1, 4)))]
    if suite in ("matmul", "fir", "vecadd_clip", "mulq_norm"):
        return [(suite, suite, kernel((suite,), (1, 4)))]
    if suite == "kernels":
        return [("kernels", "kernel speedups, 1 core", kernel(None, (1,)))]
    if suite == "insn":
        return [("insn", "instruction energy", _insn_table)]
    if suite == "snippets":
        return [("snippets", "base vs extended sequences", _snippet_table)]
    if suite == "acceptance":
        return [("acceptance", "acceptance criteria", _acceptance)]
    return [t for s in ("insn", "snippets", "kernels", "conv", "acceptance") for t in _tables(s)]


def cmd_bench(args) -> int:
    from .bench.suite import MismatchError
    out = Path(args.out)
    summary, failed = [], []
    for stem, title, build in _tables(args.suite):
        try:
            dicts, text, bad = build(args)
        except MismatchError as exc:
            print(f"golden mismatch: {exc}", file=sys.stderr)
            return EXIT_FAIL
        write_atomic(out / f"{stem}.json", _json({"table": stem, "seed": args.seed,
                                                  "rows": dicts}))
        if stem != "acceptance":
            write_atomic(out / f"{stem}.csv", _rows_csv(dicts))
        else:
            write_atomic(out / "acceptance.txt", text)
        summary.append(f"== {title} ({stem}) ==\n{text}")
        failed += [f"{stem}: {b}" for b in bad]
    summary.append("result: " + ("PASS" if not failed else "FAIL\n  " + "\n  ".join(failed)))
    write_atomic(out / "summary.txt", "\n".join(summary) + "\n")
    if not args.quiet:
        sys.stdout.write("\n".join(summary) + "\n")
    return EXIT_FAIL if failed else EXIT_OK


# -- entry ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    from .bench.kernels import KERNELS, VARIANTS
    p = _Parser(prog="dspsim", description="RV32IMC + DSP extension simulator")
    p.add_argument("--version", action="version", version=f"dspsim {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    a = sub.add_parser("asm", help="assemble and print the canonical listing")
    a.add_argument("file")
    a.add_argument("-o", "--out")
    a.set_defaults(func=cmd_asm)

    r = sub.add_parser("run", help="simulate one program per core (or one for all)")
    r.add_argument("files", nargs="+", metavar="FILE")
    r.add_argument("--cores", type=int, help="core count (default: number of files)")
    r.add_argument("--banks", type=int, default=8)
    r.add_argument("--data", action="append", default=[], metavar="PATH[@BASE]",
                   help="preload a hex dump (.hex/.txt) or raw binary; repeatable")
    r.add_argument("--timing", metavar="CFG")
    r.add_argument("--energy", metavar="CFG")
    fmt = r.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")
    r.add_argument("--out", "-o")
    r.add_argument("--max-cycles", type=int, default=100_000_000)
    r.add_argument("--golden", metavar="HEX", help="hex dump the final memory must match")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="run a benchmark suite and write its tables")
    b.add_argument("suite", choices=SUITES)
    b.add_argument("--out", required=True)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--jobs", "-j", type=int, default=1)
    b.add_argument("--quiet", "-q", action="store_true")
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("gen", help="emit a benchmark kernel as assembly and hex dumps")
    g.add_argument("kernel", choices=KERNELS)
    g.add_argument("--type", default="i8", choices=("i8", "i16"))
    g.add_argument("--dims", help="e.g. 64, 32x32x32 or 256x16")
    g.add_argument("--variant", default="baseline", choices=VARIANTS)
    g.add_argument("--cores", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--random-coeffs", action="store_true")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"dspsim: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
