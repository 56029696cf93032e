import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dspsim.assembler import Program, SourceError, parse, print_program
from dspsim.bench.snippets import clip_loop, mulq_loop
from strategies import source_programs


def test_label_on_store():
    p = parse("endL: sw 0(x12), x4")
    assert p.labels == {"endL": 0} and p.instrs[0].mnemonic == "sw"


def test_empty_source():
    assert parse("") == Program()


def test_unresolved_loop_end():
    with pytest.raises(SourceError) as exc:
        parse("lp.setupi L0, 4, endL")
    assert exc.value.line == 1 and "unresolved" in exc.value.message


def test_print_single_nop():
    assert print_program(parse("nop")) == "nop\n"


@pytest.mark.parametrize("make", [clip_loop, mulq_loop])
def test_table_programs_round_trip(make):
    for text in (make(64).base, make(64).ext):
        p = parse(text)
        assert parse(print_program(p)) == p


def test_data_round_trip():
    p = parse(".data 0x200\n.byte 1, 2, 255\n.half -2\n.word 0xdeadbeef\nnop")
    text = print_program(p)
    assert ".data" in text and parse(text).data == p.data
    assert [p.data[a] for a in range(0x200, 0x209)] == [1, 2, 255, 0xFE, 0xFF, 0xEF, 0xBE,
                                                        0xAD, 0xDE]


def test_register_aliases():
    a = parse("add r5, r6, r7\nadd t0, t1, t2\nadd x5, x6, x7")
    assert a.instrs[0] == a.instrs[1] == a.instrs[2]


def test_listing_style_operands_normalised():
    p = parse("p.lh x4, 2(r10!)\np.lh x4, x5(x10)\np.lh x4, x5(x10!)\np.sw 4(x12!), x4")
    assert [i.mode for i in p.instrs] == ["imm!", "reg", "reg!", "imm!"]
    assert print_program(p).splitlines() == ["p.lh x4, 2(x10!)", "p.lh x4, x5(x10)",
                                             "p.lh x4, x5(x10!)", "p.sw 4(x12!), x4"]


@pytest.mark.parametrize("text,what", [
    ("foo x1, x2", "unknown mnemonic"),
    ("add x1, x2", "takes 3 operands"),
    ("beq x1, x2, nowhere", "unresolved label"),
    ("addi x1, x2, 5000", "out of range"),
    ("a: nop\na: nop", "duplicate label"),
    ("lw x1, 4(x2!)", "addressing mode"),
    ("p.clip x1, x2, 0", "out of range"),
    ("e: nop\nlp.setupi L0, 2, e", "precedes"),
    ("lp.setupi L2, 2, e\ne: nop", "loop set"),
    (".byte 1", "before .data"),
    ("nop\n.base 0x100", ".base"),
])
def test_source_errors(text, what):
    with pytest.raises(SourceError) as exc:
        parse(text)
    assert what in str(exc.value)
    assert 1 <= exc.value.line <= text.count("\n") + 1


def test_error_line_numbers():
    with pytest.raises(SourceError) as exc:
        parse("nop\n\n# comment\nadd x1, x2, 99")
    assert exc.value.line == 4


def test_nocompress_region():
    p = parse("addi x8, x8, 4\n.nocompress\naddi x8, x8, 4\n.compress\naddi x8, x8, 4")
    assert [i.size for i in p.instrs] == [16, 32, 16]


@given(source_programs())
def test_round_trip(text):
    p = parse(text)
    assert parse(print_program(p)) == p


@given(source_programs())
def test_print_is_canonical(text):
    once = print_program(parse(text))
    assert print_program(parse(once)) == once


@given(source_programs())
def test_addresses_increase_by_instruction_size(text):
    p = parse(text)
    addrs = p.addresses()
    assert all(b - a in (2, 4) for a, b in zip(addrs, addrs[1:]))
    assert all(b - a == i.size // 8 for a, b, i in zip(addrs, addrs[1:], p.instrs))


@given(source_programs(), st.data())
def test_label_mutation_never_yields_dangling_reference(text, data):
    defs = re.findall(r"^(T\d+):", text, re.M)
    victim = data.draw(st.sampled_from(defs))
    mutated = re.sub(rf"^{victim}:", f"Q{victim[1:]}:", text, flags=re.M)
    try:
        p = parse(mutated)
    except SourceError:
        return
    assert all(i.label is None or i.label in p.labels for i in p.instrs)


@settings(max_examples=300)
@given(st.text(alphabet="abxr0123456789 ,.:()!#-\nLlpvw", max_size=80))
def test_fuzz_only_source_errors(text):
    try:
        p = parse(text)
    except SourceError as exc:
        assert exc.line >= 1
        return
    assert all(i.label is None or i.label in p.labels for i in p.instrs)


def test_compressed_sizes_follow_isa():
    for text, size in (("addi x8, x8, 4", 16), ("addi x8, x8, 100", 32),
                       ("pv.dotp.sb x5, x6, x7", 32), ("lw x8, 8(x9)", 16),
                       ("p.lw x8, 4(x9!)", 32)):
        assert parse(text).instrs[0].size == size
