import pytest
from hypothesis import given
from hypothesis import strategies as st

from dspsim.bench import golden as g
from dspsim.bench.kernels import KernelSpec, SpecError, generate, strips
from dspsim.bench.suite import default_specs, geomean, make_row, run_kernel, run_suite

SMALL = {"conv3x3": (8,), "conv5x5": (9,), "conv7x7": (11,), "matmul": (5, 6, 7),
         "fir": (19, 9), "vecadd_clip": (13,), "mulq_norm": (13,)}
SEEDS = range(20)


@pytest.mark.parametrize("spec", default_specs(dims=SMALL, cores=(1, 4)), ids=lambda s: s.label)
def test_kernel_matches_golden(spec):
    for seed in SEEDS:
        run = run_kernel(spec, seed=seed, random_coeffs=seed % 2 == 1)
        assert run.ok


@pytest.mark.parametrize("name", ["conv3x3", "matmul", "fir"])
def test_strips_reproduce_single_core_output(name):
    one = run_kernel(KernelSpec(name, "i16", SMALL[name], "builtin", 1), seed=3)
    for cores in (2, 3, 4):
        many = run_kernel(KernelSpec(name, "i16", SMALL[name], "builtin", cores), seed=3)
        assert many.output == one.output


@given(st.integers(0, 500), st.integers(1, 8))
def test_strips_partition(n, cores):
    parts = strips(n, cores)
    assert parts[0][0] == 0 and parts[-1][1] == n
    assert all(a[1] == b[0] for a, b in zip(parts, parts[1:]))
    sizes = [b - a for a, b in parts]
    assert max(sizes) - min(sizes) <= 1


def test_matmul_one_by_one():
    for v in ("baseline", "ext", "builtin"):
        spec = KernelSpec("matmul", "i8", (1, 1, 1), v)
        inp = generate(spec, 5).inputs
        run = run_kernel(spec, seed=5)
        assert run.output == [inp["A"][0] * inp["BT"][0]]


def test_golden_identity_and_zero_filters():
    img = list(range(-8, 17))
    ident = [0] * 9
    ident[4] = 1
    assert g.conv2d(img, 5, ident, 3, 0, 8) == [img[(r + 1) * 5 + c + 1]
                                                for r in range(3) for c in range(3)]
    assert g.conv2d(img, 5, [0] * 9, 3, 4, 8) == [0] * 9
    # rounding happens before the shift, in 32-bit arithmetic
    assert g.conv2d([1] * 9, 3, [1] * 9, 3, 1, 8) == [5]
    assert g.conv2d([127] * 9, 3, [127] * 9, 3, 0, 8) == [g._wrap(9 * 127 * 127, 8)]


def test_golden_elementwise():
    assert g.vecadd_clip([2000, -2000, 5], [100, -100, 6]) == [2047, -2048, 11]
    assert g.mulq_norm([1024, -1024], [1024, 1024]) == [256, -256]
    assert g.fir([1 << 14] * 4, [1, 1], 3) == [1] * 3


def test_spec_validation():
    for kw in ({"name": "fft"}, {"name": "fir", "element_type": "i8"},
               {"name": "vecadd_clip", "element_type": "i16", "variant": "builtin"},
               {"name": "conv7x7", "dims": (5,)}, {"name": "matmul", "dims": (2, 2)},
               {"name": "conv3x3", "cores": 0}):
        with pytest.raises(SpecError):
            KernelSpec(**kw)


def test_self_comparison_ratios_are_one():
    spec = KernelSpec("conv3x3", "i8", (8,), "baseline", 1)
    (row,) = run_suite([spec])
    assert row.speedup == row.energy_gain == row.ldst_reduction == 1.0


def test_suite_fills_ratios_against_baseline():
    specs = [KernelSpec("fir", "i16", (19, 9), v) for v in ("ext", "builtin")]
    rows = run_suite(specs)
    for r in rows:
        base = make_row(run_kernel(KernelSpec("fir", "i16", (19, 9), "baseline")))
        assert r.speedup == pytest.approx(base.cycles / r.cycles)
        assert r.speedup > 1


def test_instruction_mix_of_conv5x5_i8():
    for variant, mn, per_px in (("builtin", "pv.sdotp.sb", 7), ("ext", "p.mac", 25)):
        run = run_kernel(KernelSpec("conv5x5", "i8", (12,), variant))
        n = sum(c.retired_by_mnemonic()[mn] for c in run.result.cores)
        assert n == per_px * len(run.expected)


def test_geomean():
    assert geomean([2, 8]) == pytest.approx(4)
    assert geomean([3.0]) == pytest.approx(3.0)
