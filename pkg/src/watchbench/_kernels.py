"""Hot numeric kernels for the metrics engine, JIT-compiled when numba is usable.

Three inner loops dominate metric computation on large prediction logs:
threshold-sweep acceptance counting, confidence binning for calibration, and
batched softmax renormalization of option logprobs. Each has a numba @njit
implementation and an equivalent vectorized numpy fallback. Set
WB_DISABLE_NUMBA=1 to force the numpy path; numba also falls away
automatically when it cannot be imported. `benchmarks/bench_kernels.py`
compares the two paths.
"""

from __future__ import annotations

import math
import os

import numpy as np

LOG5 = math.log(5.0)

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("WB_DISABLE_NUMBA", "") not in ("1", "true", "yes")


# --- numpy reference implementations -----------------------------------------


def _sweep_counts_np(conf, valid, correct, grid):
    accepted = valid[None, :] & (conf[None, :] >= grid[:, None])
    n_accepted = accepted.sum(axis=1).astype(np.int64)
    n_wrong = (accepted & ~correct[None, :]).sum(axis=1).astype(np.int64)
    return n_accepted, n_wrong


def _ece_binned_np(conf, correct, n_bins):
    idx = np.minimum((conf * n_bins).astype(np.int64), n_bins - 1)
    idx = np.clip(idx, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins).astype(np.int64)
    conf_sum = np.bincount(idx, weights=conf, minlength=n_bins)
    correct_sum = np.bincount(idx, weights=correct.astype(np.float64), minlength=n_bins)
    return counts, conf_sum, correct_sum


def _renorm_batch_np(ell):
    m = ell.max(axis=1, keepdims=True)
    e = np.exp(ell - m)
    p = e / e.sum(axis=1, keepdims=True)
    sorted_p = np.sort(p, axis=1)
    p_max = sorted_p[:, -1]
    margin = sorted_p[:, -1] - sorted_p[:, -2]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    ent = np.clip(-terms.sum(axis=1) / LOG5, 0.0, 1.0)
    return p, p_max, margin, ent


# --- numba implementations ----------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _sweep_counts_nb(conf, valid, correct, grid):  # pragma: no cover - jitted
        m = grid.shape[0]
        n = conf.shape[0]
        n_accepted = np.zeros(m, dtype=np.int64)
        n_wrong = np.zeros(m, dtype=np.int64)
        for j in range(m):
            eps = grid[j]
            acc = 0
            wrong = 0
            for i in range(n):
                if valid[i] and conf[i] >= eps:
                    acc += 1
                    if not correct[i]:
                        wrong += 1
            n_accepted[j] = acc
            n_wrong[j] = wrong
        return n_accepted, n_wrong

    @njit(cache=True)
    def _ece_binned_nb(conf, correct, n_bins):  # pragma: no cover - jitted
        counts = np.zeros(n_bins, dtype=np.int64)
        conf_sum = np.zeros(n_bins, dtype=np.float64)
        correct_sum = np.zeros(n_bins, dtype=np.float64)
        for i in range(conf.shape[0]):
            b = int(conf[i] * n_bins)
            if b >= n_bins:
                b = n_bins - 1
            if b < 0:
                b = 0
            counts[b] += 1
            conf_sum[b] += conf[i]
            if correct[i]:
                correct_sum[b] += 1.0
        return counts, conf_sum, correct_sum

    @njit(cache=True)
    def _renorm_batch_nb(ell):  # pragma: no cover - jitted
        n, k = ell.shape
        p = np.empty((n, k), dtype=np.float64)
        p_max = np.empty(n, dtype=np.float64)
        margin = np.empty(n, dtype=np.float64)
        ent = np.empty(n, dtype=np.float64)
        for i in range(n):
            m = ell[i, 0]
            for j in range(1, k):
                if ell[i, j] > m:
                    m = ell[i, j]
            s = 0.0
            for j in range(k):
                p[i, j] = math.exp(ell[i, j] - m)
                s += p[i, j]
            top1 = 0.0
            top2 = 0.0
            h = 0.0
            for j in range(k):
                p[i, j] /= s
                v = p[i, j]
                if v > top1:
                    top2 = top1
                    top1 = v
                elif v > top2:
                    top2 = v
                if v > 0.0:
                    h -= v * math.log(v)
            p_max[i] = top1
            margin[i] = top1 - top2
            e = h / LOG5
            if e < 0.0:
                e = 0.0
            elif e > 1.0:
                e = 1.0
            ent[i] = e
        return p, p_max, margin, ent


def _as_f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _as_bool(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.bool_)


def sweep_counts(conf, valid, correct, grid):
    """Per-threshold accepted and accepted-wrong counts.

    ``conf`` may hold NaN where no confidence signal exists; those records
    must carry valid=False.
    """
    conf, grid = _as_f64(conf), _as_f64(grid)
    valid, correct = _as_bool(valid), _as_bool(correct)
    if USE_NUMBA:
        return _sweep_counts_nb(conf, valid, correct, grid)
    return _sweep_counts_np(conf, valid, correct, grid)


def ece_binned(conf, correct, n_bins: int = 10):
    """Equal-width confidence bin stats: counts, confidence sums, correct counts.

    Bins are left-closed on [0, 1] with the final bin right-closed, so a
    confidence of exactly 1.0 lands in the top bin.
    """
    conf = _as_f64(conf)
    correct = _as_bool(correct)
    if USE_NUMBA:
        return _ece_binned_nb(conf, correct, n_bins)
    return _ece_binned_np(conf, correct, n_bins)


def renorm_batch(ell):
    """Row-wise stable softmax plus (p_max, margin, normalized entropy) per row."""
    ell = _as_f64(ell)
    if ell.ndim != 2:
        raise ValueError("expected a 2-D array of logprob rows")
    if USE_NUMBA:
        return _renorm_batch_nb(ell)
    return _renorm_batch_np(ell)


def active_path() -> str:
    return "numba" if USE_NUMBA else "numpy"
