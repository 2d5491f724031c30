"""Cross-condition analysis: matched instances, confidence shift stats, threshold transfer.

Two prediction logs over the same frozen item list are joined by question id,
restricted to ids where both records are valid (parsed, with a confidence
signal). On the matched set we summarize how the confidence distribution
moves between evidence regimes, how much probability mass sits above a
high-confidence bar, and what happens when a threshold tuned on one regime's
risk-coverage curve is carried over to the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .gateway import PredictionRecord
from .metrics import AnswerKey, SweepPoint, choice_of, confidence_signal


class ShiftError(ValueError):
    """Raised for malformed logs or unachievable transfer criteria."""


@dataclass(frozen=True)
class MatchedPair:
    question_id: str
    record_a: PredictionRecord
    record_b: PredictionRecord


@dataclass(frozen=True)
class DistributionStats:
    n: int
    mean: float
    median: float
    q25: float
    q75: float

    @property
    def iqr(self) -> float:
        return self.q75 - self.q25


@dataclass(frozen=True)
class HighConfMass:
    tau: float
    mass: float
    n_high: int
    n_total: int
    error_rate_given_high: float  # NaN when nothing clears tau


@dataclass(frozen=True)
class DeltaSummary:
    mean_a: float
    mean_b: float
    delta_abs: float  # mean_b - mean_a, in the signal's own units
    delta_rel: float  # delta_abs / mean_a


@dataclass(frozen=True)
class TransferCriterion:
    kind: str  # "fixed_risk" or "fixed_coverage"
    value: float

    def __post_init__(self) -> None:
        if self.kind not in ("fixed_risk", "fixed_coverage"):
            raise ShiftError(f"unknown criterion kind {self.kind!r}")


@dataclass(frozen=True)
class CurveEval:
    risk: float
    coverage: float
    n_accepted: int


@dataclass(frozen=True)
class TransferResult:
    direction: str
    criterion: TransferCriterion
    epsilon_star: float
    source: CurveEval
    target: CurveEval


def is_valid_for_matching(record: PredictionRecord) -> bool:
    """Valid means parsed with a usable confidence signal; no threshold is applied."""
    return record.parse_ok and confidence_signal(record) is not None


def match_instances(
    log_a: Sequence[PredictionRecord], log_b: Sequence[PredictionRecord]
) -> list[MatchedPair]:
    """Join two logs on question id, keeping ids valid on both sides, in log_a order."""
    by_id_b: dict[str, PredictionRecord] = {}
    for rec in log_b:
        if rec.question_id in by_id_b:
            raise ShiftError(f"duplicate question_id {rec.question_id!r} in second log")
        by_id_b[rec.question_id] = rec
    seen_a: set[str] = set()
    pairs: list[MatchedPair] = []
    for rec in log_a:
        if rec.question_id in seen_a:
            raise ShiftError(f"duplicate question_id {rec.question_id!r} in first log")
        seen_a.add(rec.question_id)
        other = by_id_b.get(rec.question_id)
        if other is None:
            continue
        if is_valid_for_matching(rec) and is_valid_for_matching(other):
            pairs.append(MatchedPair(rec.question_id, rec, other))
    return pairs


def _median_sorted(xs: Sequence[float]) -> float:
    n = len(xs)
    mid = n // 2
    if n % 2 == 1:
        return xs[mid]
    return (xs[mid - 1] + xs[mid]) / 2.0


def distribution_stats(confidences: Sequence[float]) -> DistributionStats:
    """Mean, median, and Tukey-hinge quartiles (halves include the median when n is odd)."""
    if len(confidences) == 0:
        raise ShiftError("cannot summarize an empty confidence list")
    xs = sorted(float(c) for c in confidences)
    n = len(xs)
    half = n // 2
    lower = xs[: half + 1] if n % 2 == 1 else xs[:half]
    upper = xs[half:]
    return DistributionStats(
        n=n,
        mean=sum(xs) / n,
        median=_median_sorted(xs),
        q25=_median_sorted(lower),
        q75=_median_sorted(upper),
    )


def high_conf_mass(
    records: Sequence[PredictionRecord],
    answer_key: AnswerKey,
    tau: float = 0.9,
) -> HighConfMass:
    """Fraction of records at or above tau, and the error rate inside that slice."""
    if len(records) == 0:
        raise ShiftError("cannot compute high-confidence mass of an empty log")
    n_high = 0
    n_wrong = 0
    for rec in records:
        conf = confidence_signal(rec)
        if conf is None or conf < tau:
            continue
        n_high += 1
        if choice_of(rec) != answer_key[rec.question_id][0]:
            n_wrong += 1
    return HighConfMass(
        tau=tau,
        mass=n_high / len(records),
        n_high=n_high,
        n_total=len(records),
        error_rate_given_high=(n_wrong / n_high) if n_high else math.nan,
    )


def delta_summary(
    pairs: Sequence[MatchedPair],
    signal: Callable[[PredictionRecord], float | None] = confidence_signal,
) -> DeltaSummary:
    """Mean signal on each side plus absolute and relative deltas (b relative to a)."""
    if len(pairs) == 0:
        raise ShiftError("cannot summarize an empty pair list")
    vals_a = [signal(p.record_a) for p in pairs]
    vals_b = [signal(p.record_b) for p in pairs]
    if any(v is None for v in vals_a) or any(v is None for v in vals_b):
        raise ShiftError("signal selector returned None on a matched record")
    mean_a = sum(vals_a) / len(vals_a)
    mean_b = sum(vals_b) / len(vals_b)
    delta_abs = mean_b - mean_a
    return DeltaSummary(
        mean_a=mean_a,
        mean_b=mean_b,
        delta_abs=delta_abs,
        delta_rel=delta_abs / mean_a,
    )


# --- threshold transfer ---------------------------------------------------------


def _metric_values(curve: Sequence[SweepPoint], metric: str) -> list[float]:
    return [getattr(p, metric) for p in curve]


def _longest_defined_run(values: Sequence[float]) -> tuple[int, int]:
    """Index range [lo, hi] of the longest contiguous non-NaN stretch."""
    best = (-1, -1)
    start = None
    for i, v in enumerate(values + [math.nan]):
        if not math.isnan(v):
            if start is None:
                start = i
        elif start is not None:
            if best == (-1, -1) or (i - start) > (best[1] - best[0] + 1):
                best = (start, i - 1)
            start = None
    if best == (-1, -1):
        raise ShiftError("curve has no defined values for the requested metric")
    return best


def _interp_at(curve: Sequence[SweepPoint], metric: str, eps: float) -> float:
    values = _metric_values(curve, metric)
    lo, hi = _longest_defined_run(values)
    eps_lo, eps_hi = curve[lo].epsilon, curve[hi].epsilon
    if not (eps_lo <= eps <= eps_hi):
        raise ShiftError(
            f"epsilon {eps:.6g} outside the defined range [{eps_lo:.6g}, {eps_hi:.6g}]"
            f" for {metric}"
        )
    for i in range(lo, hi):
        e0, e1 = curve[i].epsilon, curve[i + 1].epsilon
        if e0 <= eps <= e1:
            v0, v1 = values[i], values[i + 1]
            if e1 == e0:
                return v0
            t = (eps - e0) / (e1 - e0)
            return v0 + t * (v1 - v0)
    return values[hi]


def _solve_epsilon(curve: Sequence[SweepPoint], metric: str, target: float) -> float:
    """Smallest epsilon where the piecewise-linear metric equals the target."""
    values = _metric_values(curve, metric)
    lo, hi = _longest_defined_run(values)
    window = values[lo : hi + 1]
    v_min, v_max = min(window), max(window)
    if not (v_min <= target <= v_max):
        raise ShiftError(
            f"criterion {metric}={target:.6g} outside achievable range"
            f" [{v_min:.6g}, {v_max:.6g}]"
        )
    for i in range(lo, hi + 1):
        v0 = values[i]
        if v0 == target:
            return curve[i].epsilon
        if i < hi:
            v1 = values[i + 1]
            if (v0 - target) * (v1 - target) < 0:
                e0, e1 = curve[i].epsilon, curve[i + 1].epsilon
                t = (target - v0) / (v1 - v0)
                return e0 + t * (e1 - e0)
    raise ShiftError(f"no crossing found for {metric}={target:.6g}")  # pragma: no cover


def _eval_curve(curve: Sequence[SweepPoint], eps: float) -> CurveEval:
    risk = _interp_at(curve, "risk", eps)
    coverage = _interp_at(curve, "coverage", eps)
    n_interp = _interp_at(curve, "n_accepted", eps)
    return CurveEval(risk=risk, coverage=coverage, n_accepted=round(n_interp))


def threshold_transfer(
    source_curve: Sequence[SweepPoint],
    target_curve: Sequence[SweepPoint],
    criterion: TransferCriterion,
    direction: str = "source->target",
) -> TransferResult:
    """Solve the criterion on the source curve, then read the target curve there.

    epsilon* comes from piecewise-linear interpolation of the criterion metric
    against epsilon; where the metric is flat the smallest qualifying epsilon
    wins. Both curves are then evaluated at epsilon* by the same interpolation.
    """
    metric = "risk" if criterion.kind == "fixed_risk" else "coverage"
    eps_star = _solve_epsilon(source_curve, metric, criterion.value)
    return TransferResult(
        direction=direction,
        criterion=criterion,
        epsilon_star=eps_star,
        source=_eval_curve(source_curve, eps_star),
        target=_eval_curve(target_curve, eps_star),
    )
