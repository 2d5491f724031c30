"""Selective prediction metrics: the abstention gate, risk-coverage sweeps, calibration.

The system-level gate abstains on a prediction when it failed to parse, chose
nothing, carries no confidence signal, or its confidence falls strictly below
the threshold; the model's own abstain flag is recorded but never consulted.
Sweeping the threshold over a grid produces risk/coverage/ECE points; risk and
ECE are reported as NaN wherever fewer than ``min_accepted`` predictions pass
the gate, since such estimates are too noisy to interpret.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .corpus import group_of
from .gateway import ParseFailure, PredictionRecord

DEFAULT_GRID: tuple[float, ...] = tuple(i / 24 for i in range(25))
MIN_ACCEPTED_DEFAULT = 50
ECE_BINS = 10

# answer key: question_id -> (answer label, category code)
AnswerKey = Mapping[str, tuple[str, str]]


class MetricsError(ValueError):
    """Raised for unusable prediction logs or mismatched answer keys."""


@dataclass(frozen=True)
class GateDecision:
    question_id: str
    accepted: bool
    reason: str  # ok | parse_failure | null_choice | missing_confidence | below_threshold


@dataclass(frozen=True)
class SweepPoint:
    epsilon: float
    risk: float  # NaN when n_accepted < min_accepted
    coverage: float
    abstention: float
    acc_cond: float  # NaN when risk is NaN
    ece: float  # NaN when n_accepted < min_accepted
    n_accepted: int


@dataclass(frozen=True)
class ReliabilityBins:
    """Per-bin statistics backing a reliability diagram; ECE is recomputable from them."""

    counts: tuple[int, ...]
    mean_confidence: tuple[float, ...]
    accuracy: tuple[float, ...]

    @property
    def n_bins(self) -> int:
        return len(self.counts)


def choice_of(record: PredictionRecord) -> str | None:
    if isinstance(record.payload, ParseFailure):
        return None
    return record.payload.choice


def confidence_signal(record: PredictionRecord) -> float | None:
    """The value the gate thresholds: self-reported confidence, or p_max in letter mode."""
    if isinstance(record.payload, ParseFailure):
        return None
    if record.mode == "letter":
        dist = record.option_distribution
        return dist.p_max if dist is not None else None
    return record.payload.confidence


def logprob_gate_confidence(record: PredictionRecord) -> float | None:
    """p_max of the renormalized option distribution, or None when absent."""
    dist = record.option_distribution
    return dist.p_max if dist is not None else None


def gate(record: PredictionRecord, epsilon: float) -> GateDecision:
    """Apply the system-level abstention rule at threshold epsilon.

    Confidence exactly equal to epsilon is accepted (the rule is strict
    less-than). The self-reported abstain flag plays no part.
    """
    if not (0.0 <= epsilon <= 1.0):
        raise MetricsError(f"epsilon must be in [0, 1], got {epsilon}")
    if not record.parse_ok or isinstance(record.payload, ParseFailure):
        return GateDecision(record.question_id, False, "parse_failure")
    if choice_of(record) is None:
        return GateDecision(record.question_id, False, "null_choice")
    conf = confidence_signal(record)
    if conf is None:
        return GateDecision(record.question_id, False, "missing_confidence")
    if conf < epsilon:
        return GateDecision(record.question_id, False, "below_threshold")
    return GateDecision(record.question_id, True, "ok")


def records_to_arrays(
    records: Sequence[PredictionRecord], answer_key: AnswerKey
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorize a log into (valid, confidence, correct) arrays for the kernels.

    valid means the record would be accepted at epsilon = 0: parsed, with a
    choice and a confidence signal. Invalid rows carry NaN confidence.
    """
    n = len(records)
    valid = np.zeros(n, dtype=np.bool_)
    conf = np.full(n, np.nan, dtype=np.float64)
    correct = np.zeros(n, dtype=np.bool_)
    for i, rec in enumerate(records):
        if rec.question_id not in answer_key:
            raise MetricsError(f"record {rec.question_id!r} missing from answer key")
        choice = choice_of(rec)
        signal = confidence_signal(rec)
        if rec.parse_ok and choice is not None and signal is not None:
            valid[i] = True
            conf[i] = signal
            correct[i] = choice == answer_key[rec.question_id][0]
    return valid, conf, correct


def _point_from_counts(
    epsilon: float,
    n_records: int,
    n_accepted: int,
    n_wrong: int,
    ece_value: float,
    min_accepted: int,
) -> SweepPoint:
    coverage = n_accepted / n_records
    abstention = 1.0 - coverage
    if n_accepted == 0 or n_accepted < min_accepted:
        risk = math.nan
        acc_cond = math.nan
        ece_value = math.nan
    else:
        risk = n_wrong / n_accepted
        acc_cond = 1.0 - risk
    return SweepPoint(
        epsilon=float(epsilon),
        risk=risk,
        coverage=coverage,
        abstention=abstention,
        acc_cond=acc_cond,
        ece=ece_value,
        n_accepted=int(n_accepted),
    )


def ece(
    records: Sequence[PredictionRecord],
    answer_key: AnswerKey,
    n_bins: int = ECE_BINS,
) -> tuple[float, ReliabilityBins]:
    """Expected calibration error over already-accepted records, plus its bins.

    Bins are equal-width on [0, 1], left-closed, with the final bin closed on
    the right. ECE is the count-weighted mean absolute gap between per-bin
    accuracy and mean confidence; an empty input yields NaN.
    """
    conf = []
    correct = []
    for rec in records:
        signal = confidence_signal(rec)
        choice = choice_of(rec)
        if signal is None or choice is None:
            raise MetricsError(
                f"record {rec.question_id!r} lacks a confidence signal or choice;"
                " ece expects gate-accepted records"
            )
        conf.append(signal)
        correct.append(choice == answer_key[rec.question_id][0])
    return _ece_from_arrays(
        np.asarray(conf, dtype=np.float64), np.asarray(correct, dtype=np.bool_), n_bins
    )


def _ece_from_arrays(conf: np.ndarray, correct: np.ndarray, n_bins: int) -> tuple[float, ReliabilityBins]:
    n = conf.shape[0]
    if n == 0:
        empty = ReliabilityBins(
            counts=(0,) * n_bins,
            mean_confidence=(math.nan,) * n_bins,
            accuracy=(math.nan,) * n_bins,
        )
        return math.nan, empty
    counts, conf_sum, correct_sum = _kernels.ece_binned(conf, correct, n_bins)
    total = 0.0
    mean_conf = []
    accuracy = []
    for b in range(n_bins):
        if counts[b] > 0:
            mc = conf_sum[b] / counts[b]
            acc = correct_sum[b] / counts[b]
            total += (counts[b] / n) * abs(acc - mc)
            mean_conf.append(float(mc))
            accuracy.append(float(acc))
        else:
            mean_conf.append(math.nan)
            accuracy.append(math.nan)
    bins = ReliabilityBins(
        counts=tuple(int(c) for c in counts),
        mean_confidence=tuple(mean_conf),
        accuracy=tuple(accuracy),
    )
    return float(total), bins


def risk_coverage(
    records: Sequence[PredictionRecord],
    answer_key: AnswerKey,
    epsilon: float,
    min_accepted: int = MIN_ACCEPTED_DEFAULT,
) -> SweepPoint:
    """Metrics at a single threshold; see sweep for the full-curve variant."""
    points = sweep(records, answer_key, grid=[epsilon], min_accepted=min_accepted)
    return points[0]


def sweep(
    records: Sequence[PredictionRecord],
    answer_key: AnswerKey,
    grid: Sequence[float] | None = None,
    min_accepted: int = MIN_ACCEPTED_DEFAULT,
) -> list[SweepPoint]:
    """Risk/coverage/ECE at every threshold in the grid (default: i/24, i = 0..24)."""
    if len(records) == 0:
        raise MetricsError("cannot sweep an empty prediction log")
    eps_grid = np.asarray(DEFAULT_GRID if grid is None else list(grid), dtype=np.float64)
    if eps_grid.size == 0:
        raise MetricsError("grid must be nonempty")
    if np.any((eps_grid < 0) | (eps_grid > 1)):
        raise MetricsError("grid values must lie in [0, 1]")
    if np.any(np.diff(eps_grid) < 0):
        raise MetricsError("grid must be sorted ascending")

    valid, conf, correct = records_to_arrays(records, answer_key)
    n_accepted, n_wrong = _kernels.sweep_counts(conf, valid, correct, eps_grid)

    points = []
    for j, eps in enumerate(eps_grid):
        count = int(n_accepted[j])
        if count == 0 or count < min_accepted:
            ece_value = math.nan
        else:
            acc_mask = valid & (conf >= eps)
            ece_value, _ = _ece_from_arrays(conf[acc_mask], correct[acc_mask], ECE_BINS)
        points.append(
            _point_from_counts(
                float(eps), len(records), count, int(n_wrong[j]), ece_value, min_accepted
            )
        )
    return points


@dataclass(frozen=True)
class PerGroupRow:
    group: str
    epsilon: float
    coverage: float
    acc_cond: float  # NaN when nothing accepted
    n_accepted: int
    n_records: int


def per_group_table(
    records: Sequence[PredictionRecord],
    answer_key: AnswerKey,
    epsilons: Sequence[float],
    min_accepted: int = 0,
) -> list[PerGroupRow]:
    """Coverage and conditional accuracy per category group at chosen thresholds.

    Group sample sizes are small, so the NaN floor defaults to 0 here; pass
    min_accepted explicitly to apply the same suppression as the global sweep.
    """
    groups: dict[str, list[PredictionRecord]] = {}
    for rec in records:
        if rec.question_id not in answer_key:
            raise MetricsError(f"record {rec.question_id!r} missing from answer key")
        group = group_of(answer_key[rec.question_id][1])
        groups.setdefault(group, []).append(rec)

    rows = []
    for group in sorted(groups):
        subset = groups[group]
        for point in sweep(subset, answer_key, grid=list(epsilons), min_accepted=min_accepted):
            rows.append(
                PerGroupRow(
                    group=group,
                    epsilon=point.epsilon,
                    coverage=point.coverage,
                    acc_cond=point.acc_cond,
                    n_accepted=point.n_accepted,
                    n_records=len(subset),
                )
            )
    return rows


# --- sweep CSV ------------------------------------------------------------------

SWEEP_CSV_COLUMNS = ("epsilon", "risk", "coverage", "abstention", "acc_cond", "ece", "n_accepted")


def _fmt(value: float) -> str:
    # NaN serializes as an empty cell; repr keeps floats lossless on reload.
    if isinstance(value, float) and math.isnan(value):
        return ""
    return repr(float(value))


def write_sweep_csv(points: Sequence[SweepPoint], path: str | Path) -> None:
    lines = [",".join(SWEEP_CSV_COLUMNS)]
    for p in points:
        lines.append(
            ",".join(
                (
                    _fmt(p.epsilon),
                    _fmt(p.risk),
                    _fmt(p.coverage),
                    _fmt(p.abstention),
                    _fmt(p.acc_cond),
                    _fmt(p.ece),
                    str(p.n_accepted),
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_sweep_csv(path: str | Path) -> list[SweepPoint]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    header = tuple(lines[0].split(","))
    if header != SWEEP_CSV_COLUMNS:
        raise MetricsError(f"unexpected sweep csv header: {header}")
    points = []
    for ln in lines[1:]:
        cells = ln.split(",")
        vals = [math.nan if c == "" else float(c) for c in cells[:-1]]
        points.append(
            SweepPoint(
                epsilon=vals[0],
                risk=vals[1],
                coverage=vals[2],
                abstention=vals[3],
                acc_cond=vals[4],
                ece=vals[5],
                n_accepted=int(cells[-1]),
            )
        )
    return points
