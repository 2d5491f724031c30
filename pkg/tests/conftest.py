from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

TESTS_DIR = Path(__file__).parent
HELPERS_DIR = TESTS_DIR / "helpers"
FIXTURES_DIR = TESTS_DIR / "fixtures"

FAKE_DECODER_CMD = (
    f"{sys.executable} {HELPERS_DIR / 'fake_decoder.py'}"
    " {input} {timestamp} {quality} {short_side} {output}"
)


def scripted_adapter_cmd(plan: str) -> str:
    return f"{sys.executable} {HELPERS_DIR / 'scripted_adapter.py'} --plan {plan}"


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Trigger numba compilation once so per-test timing reflects the algorithms.
    from watchbench import _kernels

    conf = np.array([0.5, 0.9], dtype=np.float64)
    flags = np.array([True, True])
    _kernels.sweep_counts(conf, flags, flags, np.array([0.0, 0.5]))
    _kernels.ece_binned(conf, flags, 10)
    _kernels.renorm_batch(np.zeros((1, 5)))


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not getattr(acceptance, "RESULTS", None):
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status, elapsed in acceptance.RESULTS:
        terminalreporter.write_line(f"{status:40s} {name} [{elapsed:.1f}s]")
