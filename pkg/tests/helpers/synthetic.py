"""Shared test support: fabricated records, random logs, brute-force metric recounts.

The brute-force functions here are intentionally naive re-implementations
(plain Python loops over the abstention rule and metric definitions) so they
can serve as an independent check on the vectorized engine.
"""

from __future__ import annotations

import math
import random

from watchbench.corpus import OPTION_LABELS, ItemSpec
from watchbench.gateway import (
    OptionDistribution,
    ParseFailure,
    PredictionPayload,
    PredictionRecord,
    extract_option_logprobs,
    parse_json_payload,
    parse_letter,
    renormalize,
)
from watchbench.oracle import OracleParams, oracle_model


def make_record(
    question_id: str,
    choice: str | None = "B",
    confidence: float | None = 0.9,
    parse_ok: bool = True,
    failure_reason: str = "not_json",
    abstain_flag: bool = False,
    mode: str = "json",
    condition: str = "baseline18",
    p_max: float | None = None,
) -> PredictionRecord:
    if parse_ok:
        payload = PredictionPayload(
            choice=choice, confidence=confidence, abstain_flag=abstain_flag, evidence_span=None
        )
    else:
        payload = ParseFailure(failure_reason)
    dist = None
    if mode == "letter" and parse_ok and p_max is not None:
        side = (1.0 - p_max) / 4.0
        p = {label: (p_max if label == choice else side) for label in OPTION_LABELS}
        second = max(v for k, v in p.items() if k != choice) if choice else p_max
        dist = OptionDistribution(p=p, p_max=p_max, margin=p_max - second, entropy_norm=0.5)
    return PredictionRecord(
        question_id=question_id,
        condition=condition,
        mode=mode,
        payload=payload,
        option_distribution=dist,
        raw_text="",
        parse_ok=parse_ok,
        retry_used=False,
        latency_ms=1.0,
        timestamp="2026-01-01T00:00:00+00:00",
        model_id="synthetic",
    )


def make_items(per_group: int, seed: int = 0) -> list[ItemSpec]:
    """Synthetic corpus with per_group items in each of the three groups."""
    rng = random.Random(seed)
    codes = {"Causal": ["CW", "CH"], "Temporal": ["TN", "TC", "TP"], "Descriptive": ["DO", "DL", "DC"]}
    items = []
    idx = 0
    for group, group_codes in codes.items():
        for i in range(per_group):
            qid = f"q{idx:05d}"
            items.append(
                ItemSpec(
                    question_id=qid,
                    video_id=f"v{idx // 3:04d}",  # three questions share a clip
                    question=f"what happens in clip {idx}?",
                    options={label: f"option {label.lower()}{idx}" for label in OPTION_LABELS},
                    answer=rng.choice(OPTION_LABELS),
                    category_code=group_codes[i % len(group_codes)],
                )
            )
            idx += 1
    return items


def random_log(
    rng: random.Random, n: int, failure_rate: float = 0.15
) -> tuple[list[PredictionRecord], dict[str, tuple[str, str]]]:
    """A messy prediction log: parse failures, null choices, missing confidence, ties.

    Confidences are snapped onto grid values half the time so thresholds hit
    the equality boundary; the answer key marks roughly 70% of valid records
    correct.
    """
    records = []
    key = {}
    codes = ["CW", "CH", "TN", "TC", "TP", "DO", "DL", "DC"]
    for i in range(n):
        qid = f"r{i:05d}"
        answer = rng.choice(OPTION_LABELS)
        key[qid] = (answer, rng.choice(codes))
        roll = rng.random()
        if roll < failure_rate:
            kind = rng.choice(["parse_failure", "null_choice", "no_conf", "adapter_error"])
            if kind == "parse_failure":
                records.append(make_record(qid, parse_ok=False))
            elif kind == "adapter_error":
                records.append(make_record(qid, parse_ok=False, failure_reason="adapter_error"))
            elif kind == "null_choice":
                records.append(make_record(qid, choice=None, confidence=0.3, abstain_flag=True))
            else:
                records.append(make_record(qid, choice=rng.choice(OPTION_LABELS), confidence=None))
            continue
        conf = rng.choice([rng.random(), rng.randrange(25) / 24])
        correct = rng.random() < 0.7
        choice = answer if correct else rng.choice([c for c in OPTION_LABELS if c != answer])
        records.append(
            make_record(qid, choice=choice, confidence=conf, abstain_flag=rng.random() < 0.1)
        )
    return records, key


def oracle_log(
    items: list[ItemSpec],
    condition: str,
    params: OracleParams,
    seed: int,
    mode: str = "json",
) -> list[PredictionRecord]:
    """Build a prediction log from oracle responses through the real parse path.

    Timestamps and latencies are pinned so serialized logs are byte-stable.
    """
    records = []
    for item in items:
        resp = oracle_model(item, condition, params, seed, mode=mode)
        if mode == "json":
            payload = parse_json_payload(resp["raw_text"])
            dist = None
        else:
            letter = parse_letter(resp["raw_text"])
            payload = PredictionPayload(
                choice=letter, confidence=None, abstain_flag=False, evidence_span=None
            )
            dist = renormalize(extract_option_logprobs(resp.get("candidates", [])))
        assert not isinstance(payload, ParseFailure), resp["raw_text"]
        records.append(
            PredictionRecord(
                question_id=item.question_id,
                condition=condition,
                mode=mode,
                payload=payload,
                option_distribution=dist,
                raw_text=resp["raw_text"],
                parse_ok=True,
                retry_used=False,
                latency_ms=0.0,
                timestamp="2026-01-01T00:00:00+00:00",
                model_id=resp["model_id"],
            )
        )
    return records


# --- independent recount of the metrics engine ----------------------------------


def brute_gate_accept(record: PredictionRecord, epsilon: float) -> bool:
    if not record.parse_ok:
        return False
    payload = record.payload
    if payload.choice is None:
        return False
    if record.mode == "letter":
        conf = record.option_distribution.p_max if record.option_distribution else None
    else:
        conf = payload.confidence
    if conf is None:
        return False
    return conf >= epsilon


def brute_sweep(records, key, grid, min_accepted):
    """O(n * grid) recount of every sweep field with plain Python arithmetic."""
    out = []
    n = len(records)
    for eps in grid:
        accepted = [r for r in records if brute_gate_accept(r, eps)]
        n_acc = len(accepted)
        coverage = n_acc / n
        abstention = 1.0 - coverage
        if n_acc == 0 or n_acc < min_accepted:
            risk = acc_cond = ece = math.nan
        else:
            wrong = 0
            for r in accepted:
                if r.payload.choice != key[r.question_id][0]:
                    wrong += 1
            risk = wrong / n_acc
            acc_cond = 1.0 - risk
            ece = brute_ece(accepted, key)
        out.append(
            {
                "epsilon": eps,
                "risk": risk,
                "coverage": coverage,
                "abstention": abstention,
                "acc_cond": acc_cond,
                "ece": ece,
                "n_accepted": n_acc,
            }
        )
    return out


def brute_ece(accepted, key, n_bins: int = 10) -> float:
    counts = [0] * n_bins
    conf_sums = [0.0] * n_bins
    correct_counts = [0] * n_bins
    for r in accepted:
        if r.mode == "letter":
            conf = r.option_distribution.p_max
        else:
            conf = r.payload.confidence
        b = int(conf * n_bins)
        if b >= n_bins:
            b = n_bins - 1
        counts[b] += 1
        conf_sums[b] += conf
        if r.payload.choice == key[r.question_id][0]:
            correct_counts[b] += 1
    n = len(accepted)
    total = 0.0
    for b in range(n_bins):
        if counts[b]:
            acc = correct_counts[b] / counts[b]
            mean_conf = conf_sums[b] / counts[b]
            total += (counts[b] / n) * abs(acc - mean_conf)
    return total
