"""Acceptance suite: one verdict line per criterion.

Criteria 1-8 are measured on fresh simulator runs (golden-checked kernels
shared through one :class:`Runs` cache). Criterion 9 re-runs the property
suites in a child pytest so that its verdict stands on its own.
"""
import os
import subprocess
import sys
from pathlib import Path

import pytest

from dspsim.bench import acceptance as acc

HERE = Path(__file__).parent

PROPERTY_SUITES = [
    "test_exec_oracle.py",
    "test_exec.py::test_lane_isolation",
    "test_exec.py::test_clip_idempotent_and_bounded",
    "test_exec.py::test_division_identity",
    "test_pipeline.py::test_hwloop_equivalent_to_branch_loop",
    "test_pipeline.py::test_addrn_replaces_add_addi_srai",
    "test_pipeline.py::test_mulsrn_replaces_mul_add_srai",
    "test_pipeline.py::test_mulq_loops_agree_on_random_data",
    "test_assembler.py::test_round_trip",
    "test_assembler.py::test_print_is_canonical",
    "test_cluster.py::test_deterministic_and_conserving",
    "test_cluster.py::test_disjoint_writers_match_sequential_runs",
]


@pytest.fixture(scope="module")
def runs():
    return acc.Runs(seed=0)


def report(capsys, line):
    with capsys.disabled():
        print("\n" + line)


@pytest.mark.parametrize("check", acc.CHECKS, ids=lambda c: c.__name__)
def test_criterion(check, runs, capsys):
    c = check(0) if check is acc.unaligned else check(runs)
    report(capsys, c.line())
    assert c.passed, c.detail


def test_property_suites(capsys):
    env = dict(os.environ, HYPOTHESIS_PROFILE=os.environ.get("HYPOTHESIS_PROFILE", "default"))
    out = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                          *PROPERTY_SUITES], cwd=HERE, env=env, capture_output=True, text=True)
    tail = out.stdout.strip().splitlines()[-1] if out.stdout.strip() else out.stderr[-200:]
    ok = out.returncode == 0
    report(capsys, f"criterion 9 [{'PASS' if ok else 'FAIL'}] property suites: {tail}")
    assert ok, out.stdout[-3000:]
