"""Seeded synthetic model for offline runs and metric ground truth.

The oracle answers like a model whose correctness probability is known by
construction, so every metric can be checked against the generating law. It
emits schema-perfect outputs in both elicitation modes and is fully
deterministic in (item, condition, params, seed). Run as a module
(``python -m watchbench.oracle``) it serves the adapter line protocol on
stdin/stdout, which makes it the drop-in adapter for end-to-end tests.

Confidence laws:
  group_point   correctness probability is the group's base accuracy
  uniform       correctness probability drawn uniformly from [low, high]

Both laws are calibrated (reported confidence equals the correctness
probability) unless ``report_offset`` shifts the reported value.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import random
import sys
from dataclasses import dataclass, field

from .corpus import OPTION_LABELS, ItemSpec, group_of, items_by_id, load_items

MODEL_ID = "oracle-synthetic-v1"
_MIN_SIDE_PROB = 1e-12


@dataclass(frozen=True)
class OracleParams:
    base_acc_by_group: dict[str, float] = field(
        default_factory=lambda: {"Causal": 0.80, "Temporal": 0.65, "Descriptive": 0.85}
    )
    degradation_penalty: dict[str, float] = field(default_factory=dict)
    confidence_law: dict = field(default_factory=lambda: {"law": "group_point"})

    @classmethod
    def from_dict(cls, doc: dict) -> "OracleParams":
        kwargs = {}
        if "base_acc_by_group" in doc:
            kwargs["base_acc_by_group"] = {k: float(v) for k, v in doc["base_acc_by_group"].items()}
        if "degradation_penalty" in doc:
            kwargs["degradation_penalty"] = {
                k: float(v) for k, v in doc["degradation_penalty"].items()
            }
        if "confidence_law" in doc:
            kwargs["confidence_law"] = dict(doc["confidence_law"])
        return cls(**kwargs)


def _rng_for(seed: int, question_id: str, condition: str) -> random.Random:
    material = hashlib.sha256(f"{seed}|{question_id}|{condition}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(material[:8], "big"))


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def correctness_probability(
    item: ItemSpec, condition: str, params: OracleParams, rng: random.Random
) -> float:
    law = params.confidence_law
    kind = law.get("law", "group_point")
    if kind == "group_point":
        p = params.base_acc_by_group[group_of(item.category_code)]
    elif kind == "uniform":
        low = float(law.get("low", 0.2))
        high = float(law.get("high", 1.0))
        p = low + rng.random() * (high - low)
    else:
        raise ValueError(f"unknown confidence law {kind!r}")
    return _clip01(p - params.degradation_penalty.get(condition, 0.0))


def oracle_model(
    item: ItemSpec,
    condition: str,
    params: OracleParams,
    seed: int,
    mode: str = "json",
    n_frames: int = 6,
) -> dict:
    """Produce one adapter response body for the item under the given condition.

    Correctness is Bernoulli in the law's probability; the reported confidence
    equals that probability (plus any report_offset), so the output stream is
    calibrated by construction. Identical arguments give identical bytes.
    """
    rng = _rng_for(seed, item.question_id, condition)
    p = correctness_probability(item, condition, params, rng)
    is_correct = rng.random() < p
    if is_correct:
        choice = item.answer
    else:
        wrong = [label for label in OPTION_LABELS if label != item.answer]
        choice = wrong[rng.randrange(len(wrong))]
    confidence = _clip01(round(p + float(params.confidence_law.get("report_offset", 0.0)), 9))
    abstain = rng.random() < float(params.confidence_law.get("abstain_rate", 0.0))

    if mode == "json":
        span = [0, n_frames - 1] if n_frames > 0 else None
        raw_text = json.dumps(
            {
                "choice": choice,
                "confidence": confidence,
                "abstain": abstain,
                "evidence_span": span,
            },
            separators=(",", ":"),
        )
        return {"ok": True, "raw_text": raw_text, "latency_ms": 0, "model_id": MODEL_ID}

    if mode == "letter":
        side = max((1.0 - confidence) / 4.0, _MIN_SIDE_PROB)
        candidates = []
        for label in OPTION_LABELS:
            prob = max(confidence, _MIN_SIDE_PROB) if label == choice else side
            candidates.append({"token": label, "logprob": math.log(prob)})
        return {
            "ok": True,
            "raw_text": choice,
            "candidates": candidates,
            "latency_ms": 0,
            "model_id": MODEL_ID,
        }

    return {"ok": False, "error": "bad_mode", "raw_text": "", "latency_ms": 0, "model_id": MODEL_ID}


def serve(
    items: dict[str, ItemSpec],
    params: OracleParams,
    seed: int,
    condition: str,
    stdin=None,
    stdout=None,
) -> None:
    """Adapter protocol loop: one response line per request line, ids echoed back.

    The request id is expected to carry the question id before the final
    colon (the gateway's id convention); unknown ids produce ok=false rather
    than killing the stream.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
        except json.JSONDecodeError:
            continue
        req_id = str(req.get("id", ""))
        question_id = req_id.rsplit(":", 1)[0]
        mode = req.get("mode", "json")
        item = items.get(question_id)
        if item is None:
            resp = {
                "id": req_id,
                "ok": False,
                "error": f"unknown question id {question_id!r}",
                "raw_text": "",
                "latency_ms": 0,
                "model_id": MODEL_ID,
            }
        else:
            n_frames = len(req.get("frames") or [])
            resp = {"id": req_id} | oracle_model(
                item, condition, params, seed, mode=mode, n_frames=n_frames
            )
        stdout.write(json.dumps(resp, separators=(",", ":")) + "\n")
        stdout.flush()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m watchbench.oracle",
        description="Synthetic oracle adapter speaking the line-delimited gateway protocol.",
    )
    parser.add_argument("--items", required=True, help="items.jsonl with answers and categories")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--condition", default="baseline18", help="penalty key and RNG salt")
    parser.add_argument("--params", default=None, help="JSON file of oracle parameters")
    args = parser.parse_args(argv)

    params = OracleParams()
    if args.params:
        with open(args.params, "r", encoding="utf-8") as fh:
            params = OracleParams.from_dict(json.load(fh))
    items = items_by_id(load_items(args.items))
    serve(items, params, args.seed, args.condition)
    return 0


if __name__ == "__main__":
    sys.exit(main())
