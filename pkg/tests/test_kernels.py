"""Equivalence of the numba and numpy kernel paths on random inputs."""

from __future__ import annotations

import numpy as np
import pytest

from watchbench import _kernels


requires_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")

rng = np.random.default_rng(1234)


def random_inputs(n=500):
    conf = rng.random(n)
    valid = rng.random(n) < 0.85
    conf[~valid] = np.nan
    correct = rng.random(n) < 0.7
    grid = np.array([i / 24 for i in range(25)])
    return conf, valid, correct, grid


@requires_numba
class TestPathEquivalence:
    def test_sweep_counts_identical(self):
        for _ in range(10):
            conf, valid, correct, grid = random_inputs()
            nb = _kernels._sweep_counts_nb(conf, valid, correct, grid)
            np_ = _kernels._sweep_counts_np(conf, valid, correct, grid)
            assert np.array_equal(nb[0], np_[0])
            assert np.array_equal(nb[1], np_[1])

    def test_ece_binned_identical(self):
        for _ in range(10):
            conf, valid, correct, _ = random_inputs()
            conf = conf[valid]
            correct = correct[valid]
            nb = _kernels._ece_binned_nb(conf, correct, 10)
            np_ = _kernels._ece_binned_np(conf, correct, 10)
            assert np.array_equal(nb[0], np_[0])
            assert np.allclose(nb[1], np_[1], atol=1e-12, rtol=0)
            assert np.array_equal(nb[2].astype(int), np_[2].astype(int))

    def test_renorm_batch_identical(self):
        ell = rng.uniform(-100, 0, size=(200, 5))
        nb = _kernels._renorm_batch_nb(ell)
        np_ = _kernels._renorm_batch_np(ell)
        for a, b in zip(nb, np_):
            assert np.allclose(a, b, atol=1e-12, rtol=0)


class TestBoundaryConventions:
    def test_confidence_one_lands_in_top_bin(self):
        counts, _, _ = _kernels.ece_binned(np.array([1.0, 0.9, 0.0]), np.array([True, True, True]), 10)
        assert counts[9] == 2
        assert counts[0] == 1

    def test_bin_edges_left_closed(self):
        counts, _, _ = _kernels.ece_binned(
            np.array([0.1, 0.2, 0.3 - 1e-12]), np.array([True, True, True]), 10
        )
        assert counts[1] == 1  # [0.1, 0.2)
        assert counts[2] == 2  # 0.2 enters its own bin left-closed; just-under-0.3 stays

    def test_nan_confidence_never_accepted(self):
        conf = np.array([np.nan, 0.5])
        valid = np.array([False, True])
        correct = np.array([False, True])
        n_acc, n_wrong = _kernels.sweep_counts(conf, valid, correct, np.array([0.0]))
        assert n_acc[0] == 1
        assert n_wrong[0] == 0

    def test_equality_at_threshold_accepts(self):
        conf = np.array([0.5])
        flags = np.array([True])
        n_acc, _ = _kernels.sweep_counts(conf, flags, flags, np.array([0.5]))
        assert n_acc[0] == 1


def test_env_flag_selects_numpy():
    import os
    import subprocess
    import sys

    env = dict(os.environ, WB_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from watchbench import _kernels; print(_kernels.active_path())"],
        env=env,
        capture_output=True,
        text=True,
    )
    assert out.stdout.strip() == "numpy"
