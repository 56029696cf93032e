import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dspsim.assembler import parse
from dspsim.cluster import ClusterConfig, arbitrate, run_cluster
from dspsim.pipeline import TimingConfig, run_timed
from helpers import setup
from strategies import runnable_programs

HART_BASE = "csrr x5, mhartid\nslli x5, x5, 2\naddi x10, x5, 1024\n"


def loads(k, prologue="addi x10, x0, 1024\n", step=""):
    return parse(prologue + ("lw x6, 0(x10)\n" + step) * k)


@pytest.mark.parametrize("k", [1, 5, 20])
def test_same_bank_serialises(k):
    r = run_cluster(loads(k), ClusterConfig(cores=4))
    # every granted cycle leaves the other waiting cores stalled
    assert r.contention.total == 4 * k
    assert r.contention.stall_cycles == 12 * k - 6
    assert r.cycles == 4 * k + 1


def test_distinct_banks_never_stall():
    r = run_cluster(loads(10, HART_BASE), ClusterConfig(cores=4))
    assert r.contention.stall_cycles == 0 and r.contention.contended == 0
    assert {c.cycles for c in r.cores} == {13}


def test_alternating_banks_two_cores():
    r = run_cluster(loads(10, HART_BASE, "addi x10, x10, 8\n"), ClusterConfig(cores=2))
    assert r.contention.stall_cycles == 0


def test_single_core_matches_run_timed():
    prog = loads(7, step="lw x7, 2(x10)\nadd x8, x7, x6\n")
    r = run_cluster(prog, ClusterConfig(cores=1))
    _, st = run_timed(prog)
    assert r.cycles == st.cycles and r.retired == st.retired


def test_barrier_releases_at_slowest_core():
    text = (HART_BASE + "beq x5, x0, fast\n" + "nop\n" * 20 +
            "fast: lui x31, 0x10000\nsw 0(x31), x0\naddi x9, x0, 1")
    r = run_cluster(parse(text), ClusterConfig(cores=4))
    assert r.completed
    assert r.cores[0].stalls["barrier"] > 0
    ends = [c.cycles for c in r.cores]
    assert max(ends) - min(ends) <= 2


def test_barrier_deadlock_is_reported():
    text = HART_BASE + "bne x5, x0, out\nlui x31, 0x10000\nsw 0(x31), x0\nout: nop"
    r = run_cluster(parse(text), ClusterConfig(cores=2))
    assert r.deadlock and "barrier" in r.deadlock and not r.completed


def test_arbiter_round_robin():
    ptr = [0]
    wins = [next(iter(arbitrate([(0, 0), (1, 0), (2, 0)], ptr, 3))) for _ in range(6)]
    assert wins == [0, 1, 2, 0, 1, 2]


def test_config_validation():
    with pytest.raises(ValueError):
        ClusterConfig(cores=0)
    with pytest.raises(ValueError):
        run_cluster(loads(1), ClusterConfig(cores=2), TimingConfig(unaligned_mem_extra=0))
    with pytest.raises(ValueError):
        run_cluster([loads(1)] * 3, ClusterConfig(cores=2))


# -- properties ---------------------------------------------------------------------

@settings(max_examples=60)
@given(runnable_programs(max_blocks=4), st.integers(1, 4), st.sampled_from((1, 2, 8)))
def test_deterministic_and_conserving(text, cores, banks):
    prog = parse(text)
    a = run_cluster(prog, ClusterConfig(cores=cores, banks=banks))
    b = run_cluster(prog, ClusterConfig(cores=cores, banks=banks))
    assert a.completed
    assert [c.cycles for c in a.cores] == [c.cycles for c in b.cores]
    assert a.mem.tcdm == b.mem.tcdm
    cs = a.contention
    assert cs.contended <= cs.total and cs.stall_cycles >= cs.contended
    assert cs.total == sum(c.sram_accesses + c.scm_accesses + 2 * c.unaligned_accesses
                           for c in a.cores)
    assert sum(c.stalls["contention"] for c in a.cores) == cs.stall_cycles
    for c in a.cores:
        assert c.cycles >= c.retired


@settings(max_examples=60)
@given(runnable_programs(max_blocks=4))
def test_one_core_cluster_equals_single_core(text):
    prog, core, mem = setup(text)
    _, st = run_timed(prog, mem=mem, core=core)
    r = run_cluster(prog, ClusterConfig(cores=1))
    assert r.cycles == st.cycles and r.retired == st.retired
    assert r.mem.tcdm == mem.tcdm and r.contention.stall_cycles == 0


def _relocate(text, h):
    # give core h its own windows around both pointer registers
    return text.replace("addi x10, x0, 1024", f"addi x10, x0, {1024 + 256 * h}").replace(
        "lui x11, 4", f"lui x11, {4 + 2 * h}")


@settings(max_examples=40)
@given(st.lists(runnable_programs(max_blocks=3), min_size=2, max_size=4))
def test_disjoint_writers_match_sequential_runs(texts):
    progs = [parse(_relocate(t, h)) for h, t in enumerate(texts)]
    r = run_cluster(progs, ClusterConfig(cores=len(progs)))
    assert r.completed
    merged = 0
    for p in progs:
        _, _, mem = setup("")
        run_timed(p, mem=mem)
        merged |= int.from_bytes(mem.tcdm, "little")    # write sets are disjoint
    assert int.from_bytes(r.mem.tcdm, "little") == merged


def test_bank_count_must_be_power_of_two():
    with pytest.raises(ValueError, match="power of two"):
        ClusterConfig(banks=6)
