"""Model gateway: adapter subprocess protocol, strict output parsing, confidence signals.

Any model is driven through a child process speaking line-delimited JSON on
its standard streams: one request line in, one response line out, ids
matching. Two elicitation modes exist. In json mode the model must return a
four-key object (choice, confidence, abstain, evidence_span); in letter mode
it must return a bare option letter, with top-k token candidates supplying a
log-probability distribution over the five options. Parsing is strict with
machine-readable failure reasons, and one retry is issued on parse failure.
"""

from __future__ import annotations

import json
import shlex
import string
import subprocess
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .corpus import OPTION_LABELS, ItemSpec
from .evidence import Manifest

LOGPROB_FILL = -100.0
DEFAULT_TOP_K = 20
DEFAULT_MAX_TOKENS = 256


class AdapterIOError(RuntimeError):
    """Adapter process is gone or violated the one-line-per-request protocol."""


@dataclass(frozen=True)
class GenerationConfig:
    """Decoding parameters sent with every request; temperature is pinned to 0."""

    mode: str  # "json" or "letter"
    prompt_version: str = "v1"
    temperature: float = 0.0
    max_tokens: int = DEFAULT_MAX_TOKENS
    logprob_top_k: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("json", "letter"):
            raise ValueError(f"mode must be 'json' or 'letter', got {self.mode!r}")
        if self.temperature != 0.0:
            raise ValueError("temperature is fixed at 0")
        if self.mode == "letter":
            k = self.logprob_top_k if self.logprob_top_k is not None else DEFAULT_TOP_K
            if k != DEFAULT_TOP_K:
                raise ValueError("letter mode requires logprob_top_k = 20")
            object.__setattr__(self, "logprob_top_k", k)


@dataclass(frozen=True)
class ParseFailure:
    """Why a raw model output was rejected. ``reason`` is a stable code."""

    reason: str
    detail: str = ""


@dataclass(frozen=True)
class PredictionPayload:
    choice: str | None
    confidence: float | None  # None means the model omitted a usable confidence
    abstain_flag: bool
    evidence_span: tuple[int, int] | None


@dataclass(frozen=True)
class OptionLogprobs:
    """Log probability per option label, -100 for labels absent from candidates."""

    values: dict[str, float]

    def as_array(self) -> np.ndarray:
        return np.array([self.values[label] for label in OPTION_LABELS], dtype=np.float64)


@dataclass(frozen=True)
class OptionDistribution:
    p: dict[str, float]
    p_max: float
    margin: float
    entropy_norm: float


@dataclass(frozen=True)
class PredictionRecord:
    """One model response with provenance; the unit the metrics engine consumes."""

    question_id: str
    condition: str
    mode: str
    payload: PredictionPayload | ParseFailure
    option_distribution: OptionDistribution | None
    raw_text: str
    parse_ok: bool
    retry_used: bool
    latency_ms: float
    timestamp: str
    model_id: str


_PAYLOAD_KEYS = frozenset({"choice", "confidence", "abstain", "evidence_span"})


def _strip_code_fence(text: str) -> str:
    body = text.strip()
    if body.startswith("```") and body.endswith("```") and len(body) > 6:
        inner = body[3:-3]
        first_nl = inner.find("\n")
        if first_nl != -1:
            tag = inner[:first_nl].strip()
            if tag == "" or tag.isalnum():  # optional language tag on the fence line
                inner = inner[first_nl + 1 :]
        return inner.strip()
    return body


def _reject_constant(value: str):
    raise ValueError(f"nonfinite JSON constant {value}")


def parse_json_payload(raw_text: str) -> PredictionPayload | ParseFailure:
    """Parse the strict four-key payload; anything else is a coded failure.

    Surrounding whitespace and one Markdown code fence are tolerated. Extra
    keys, missing keys, wrong types, and confidence outside [0, 1] are all
    rejected. ``confidence: null`` is accepted and maps to missing confidence.
    """
    body = _strip_code_fence(raw_text)
    try:
        doc = json.loads(body, parse_constant=_reject_constant)
    except ValueError:
        return ParseFailure("not_json")
    if not isinstance(doc, dict):
        return ParseFailure("not_object")
    missing = _PAYLOAD_KEYS - doc.keys()
    if missing:
        return ParseFailure("missing_key", ",".join(sorted(missing)))
    extra = doc.keys() - _PAYLOAD_KEYS
    if extra:
        return ParseFailure("extra_key", ",".join(sorted(extra)))

    choice = doc["choice"]
    if choice is not None and choice not in OPTION_LABELS:
        return ParseFailure("bad_choice", repr(choice))

    confidence = doc["confidence"]
    if confidence is not None:
        if isinstance(confidence, bool) or not isinstance(confidence, (int, float)):
            return ParseFailure("bad_confidence", repr(confidence))
        if not (0.0 <= confidence <= 1.0):
            return ParseFailure("bad_confidence", f"out of range: {confidence}")
        confidence = float(confidence)

    abstain = doc["abstain"]
    if not isinstance(abstain, bool):
        return ParseFailure("bad_abstain", repr(abstain))

    span = doc["evidence_span"]
    if span is not None:
        if (
            not isinstance(span, list)
            or len(span) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in span)
        ):
            return ParseFailure("bad_evidence_span", repr(span))
        start, end = span
        if start < 0 or start > end:
            return ParseFailure("bad_evidence_span", f"[{start},{end}]")
        span = (start, end)

    return PredictionPayload(
        choice=choice, confidence=confidence, abstain_flag=abstain, evidence_span=span
    )


def parse_letter(raw_text: str) -> str | ParseFailure:
    """Accept a single A-E letter after trimming whitespace and one trailing punctuation mark."""
    body = raw_text.strip()
    if len(body) > 1 and body[-1] in string.punctuation:
        body = body[:-1].strip()
    if len(body) == 1 and body.upper() in OPTION_LABELS:
        return body.upper()
    return ParseFailure("not_single_letter", repr(raw_text[:50]))


def extract_option_logprobs(candidates: Sequence[dict]) -> OptionLogprobs:
    """Pick the exact single-character option tokens out of a candidate list.

    First occurrence wins per label; labels never seen get the -100 fill.
    """
    values = {label: LOGPROB_FILL for label in OPTION_LABELS}
    seen: set[str] = set()
    for cand in candidates:
        token = cand.get("token")
        if token in OPTION_LABELS and token not in seen:
            values[token] = float(cand["logprob"])
            seen.add(token)
    return OptionLogprobs(values=values)


def renormalize(logprobs: OptionLogprobs) -> OptionDistribution:
    """Softmax the five option logprobs (max-subtracted) and derive confidence stats."""
    ell = logprobs.as_array().reshape(1, 5)
    p, p_max, margin, ent = _kernels.renorm_batch(ell)
    return OptionDistribution(
        p={label: float(p[0, i]) for i, label in enumerate(OPTION_LABELS)},
        p_max=float(p_max[0]),
        margin=float(margin[0]),
        entropy_norm=float(ent[0]),
    )


# --- record serialization ----------------------------------------------------


def _payload_to_dict(payload: PredictionPayload | ParseFailure) -> dict:
    if isinstance(payload, ParseFailure):
        return {"failure_reason": payload.reason, "detail": payload.detail}
    return {
        "choice": payload.choice,
        "confidence": payload.confidence,
        "abstain": payload.abstain_flag,
        "evidence_span": list(payload.evidence_span) if payload.evidence_span else None,
    }


def _payload_from_dict(doc: dict) -> PredictionPayload | ParseFailure:
    if "failure_reason" in doc:
        return ParseFailure(doc["failure_reason"], doc.get("detail", ""))
    span = doc.get("evidence_span")
    return PredictionPayload(
        choice=doc.get("choice"),
        confidence=doc.get("confidence"),
        abstain_flag=bool(doc.get("abstain", False)),
        evidence_span=tuple(span) if span else None,
    )


def record_to_dict(record: PredictionRecord) -> dict:
    dist = record.option_distribution
    return {
        "question_id": record.question_id,
        "condition": record.condition,
        "mode": record.mode,
        "payload": _payload_to_dict(record.payload),
        "option_distribution": None
        if dist is None
        else {
            "p": dist.p,
            "p_max": dist.p_max,
            "margin": dist.margin,
            "entropy_norm": dist.entropy_norm,
        },
        "raw_text": record.raw_text,
        "parse_ok": record.parse_ok,
        "retry_used": record.retry_used,
        "latency_ms": record.latency_ms,
        "timestamp": record.timestamp,
        "model_id": record.model_id,
    }


def record_from_dict(doc: dict) -> PredictionRecord:
    dist_doc = doc.get("option_distribution")
    dist = None
    if dist_doc is not None:
        dist = OptionDistribution(
            p={k: float(v) for k, v in dist_doc["p"].items()},
            p_max=float(dist_doc["p_max"]),
            margin=float(dist_doc["margin"]),
            entropy_norm=float(dist_doc["entropy_norm"]),
        )
    return PredictionRecord(
        question_id=str(doc["question_id"]),
        condition=str(doc["condition"]),
        mode=str(doc["mode"]),
        payload=_payload_from_dict(doc["payload"]),
        option_distribution=dist,
        raw_text=str(doc.get("raw_text", "")),
        parse_ok=bool(doc["parse_ok"]),
        retry_used=bool(doc.get("retry_used", False)),
        latency_ms=float(doc.get("latency_ms", 0.0)),
        timestamp=str(doc.get("timestamp", "")),
        model_id=str(doc.get("model_id", "")),
    )


def write_records(records: Iterable[PredictionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_dict(rec), separators=(",", ":")) + "\n")


def append_record(record: PredictionRecord, path: str | Path) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record_to_dict(record), separators=(",", ":")) + "\n")


def read_records(path: str | Path) -> list[PredictionRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(record_from_dict(json.loads(line)))
    return records


# --- adapter subprocess client ------------------------------------------------


class AdapterClient:
    """One adapter child process; a single request may be in flight at a time."""

    def __init__(self, command: str | Sequence[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.command = command
        self._proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lock = threading.Lock()
        self._dead = False

    @property
    def alive(self) -> bool:
        return not self._dead and self._proc.poll() is None

    def request(self, req: dict) -> dict:
        """Send one request line and read exactly one response line with a matching id."""
        with self._lock:
            if not self.alive:
                raise AdapterIOError("adapter process is not running")
            try:
                self._proc.stdin.write(json.dumps(req, separators=(",", ":")) + "\n")
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (BrokenPipeError, OSError, ValueError) as exc:
                self._dead = True
                raise AdapterIOError(f"adapter I/O failed: {exc}") from None
            if not line:
                self._dead = True
                raise AdapterIOError("adapter closed its output stream")
            try:
                resp = json.loads(line)
            except json.JSONDecodeError:
                self._dead = True
                raise AdapterIOError(f"adapter sent a non-JSON line: {line[:120]!r}") from None
            if resp.get("id") != req["id"]:
                self._dead = True
                raise AdapterIOError(
                    f"adapter response id {resp.get('id')!r} != request id {req['id']!r}"
                )
            return resp

    def close(self) -> None:
        self._dead = True
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.terminate()
            self._proc.wait(timeout=5)
        except Exception:
            self._proc.kill()

    def __enter__(self) -> "AdapterClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def build_request(
    item: ItemSpec,
    frames: Sequence[dict],
    config: GenerationConfig,
    request_id: str,
) -> dict:
    generation: dict = {"temperature": config.temperature, "max_tokens": config.max_tokens}
    if config.mode == "letter":
        generation["logprob_top_k"] = config.logprob_top_k
    return {
        "id": request_id,
        "mode": config.mode,
        "prompt_version": config.prompt_version,
        "question": item.question,
        "options": {label: item.options[label] for label in OPTION_LABELS},
        "frames": list(frames),
        "generation": generation,
    }


def manifest_frames(manifest: Manifest, frames_dir: str | Path) -> list[dict]:
    """Frame references in chronological (manifest) order for the adapter request."""
    frames_dir = Path(frames_dir)
    return [
        {"path": str(frames_dir / f.file_name), "timestamp": f.timestamp}
        for f in manifest.frames
    ]


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _parse_response(
    resp: dict, mode: str
) -> tuple[PredictionPayload | ParseFailure, OptionDistribution | None]:
    raw_text = str(resp.get("raw_text", ""))
    if mode == "json":
        return parse_json_payload(raw_text), None
    letter = parse_letter(raw_text)
    if isinstance(letter, ParseFailure):
        return letter, None
    dist = renormalize(extract_option_logprobs(resp.get("candidates") or []))
    payload = PredictionPayload(
        choice=letter, confidence=None, abstain_flag=False, evidence_span=None
    )
    return payload, dist


def run_item(
    client: AdapterClient,
    item: ItemSpec,
    manifest: Manifest,
    frames_dir: str | Path,
    config: GenerationConfig,
) -> PredictionRecord:
    """Query the adapter once, retrying exactly once on a parse failure.

    An adapter I/O failure (or an ok=false response) produces a record with
    the adapter_error failure marker; downstream metrics treat it as an
    abstention. At most two requests are ever sent per item.
    """
    frames = manifest_frames(manifest, frames_dir)
    condition = manifest.plan.condition
    total_latency = 0.0
    raw_text = ""
    model_id = ""
    outcome: PredictionPayload | ParseFailure = ParseFailure("not_attempted")
    dist: OptionDistribution | None = None

    attempt = 0
    while attempt < 2:
        req = build_request(item, frames, config, f"{item.question_id}:{attempt}")
        started = time.monotonic()
        try:
            resp = client.request(req)
        except AdapterIOError as exc:
            total_latency += (time.monotonic() - started) * 1000.0
            return PredictionRecord(
                question_id=item.question_id,
                condition=condition,
                mode=config.mode,
                payload=ParseFailure("adapter_error", str(exc)),
                option_distribution=None,
                raw_text=raw_text,
                parse_ok=False,
                retry_used=attempt > 0,
                latency_ms=total_latency,
                timestamp=_utc_now(),
                model_id=model_id,
            )
        elapsed_ms = (time.monotonic() - started) * 1000.0
        reported = resp.get("latency_ms")
        total_latency += float(reported) if isinstance(reported, (int, float)) else elapsed_ms
        model_id = str(resp.get("model_id", model_id))
        raw_text = str(resp.get("raw_text", ""))
        if not resp.get("ok", False):
            outcome = ParseFailure("adapter_error", str(resp.get("error", "")))
            break
        outcome, dist = _parse_response(resp, config.mode)
        if not isinstance(outcome, ParseFailure):
            break
        attempt += 1

    parse_ok = not isinstance(outcome, ParseFailure)
    return PredictionRecord(
        question_id=item.question_id,
        condition=condition,
        mode=config.mode,
        payload=outcome,
        option_distribution=dist if parse_ok else None,
        raw_text=raw_text,
        parse_ok=parse_ok,
        retry_used=attempt > 0,
        latency_ms=total_latency,
        timestamp=_utc_now(),
        model_id=model_id,
    )


def _adapter_error_record(
    item: ItemSpec, condition: str, config: GenerationConfig, detail: str
) -> PredictionRecord:
    return PredictionRecord(
        question_id=item.question_id,
        condition=condition,
        mode=config.mode,
        payload=ParseFailure("adapter_error", detail),
        option_distribution=None,
        raw_text="",
        parse_ok=False,
        retry_used=False,
        latency_ms=0.0,
        timestamp=_utc_now(),
        model_id="",
    )


def run_batch(
    adapter_cmd: str,
    work: Sequence[tuple[ItemSpec, Manifest, str | Path]],
    config: GenerationConfig,
    parallel: int = 1,
    on_record: Callable[[PredictionRecord], None] | None = None,
) -> list[PredictionRecord]:
    """Run every (item, manifest, frames_dir) through a pool of adapter processes.

    Records come back in work order regardless of completion order; each
    worker thread owns one adapter process. If a process dies the remaining
    items assigned to it become adapter_error records rather than crashing
    the batch.
    """
    if parallel < 1:
        raise ValueError("parallel must be >= 1")
    local = threading.local()
    clients: list[AdapterClient] = []
    clients_lock = threading.Lock()

    def get_client() -> AdapterClient | None:
        client = getattr(local, "client", None)
        if client is None:
            try:
                client = AdapterClient(adapter_cmd)
            except OSError as exc:
                raise AdapterIOError(f"adapter spawn failed: {exc}") from None
            with clients_lock:
                clients.append(client)
            local.client = client
        return client if client.alive else None

    def process(entry: tuple[ItemSpec, Manifest, str | Path]) -> PredictionRecord:
        item, manifest, frames_dir = entry
        try:
            client = get_client()
        except AdapterIOError as exc:
            return _adapter_error_record(item, manifest.plan.condition, config, str(exc))
        if client is None:
            return _adapter_error_record(
                item, manifest.plan.condition, config, "adapter process died"
            )
        return run_item(client, item, manifest, frames_dir, config)

    records: list[PredictionRecord] = []
    try:
        if parallel == 1:
            for entry in work:
                rec = process(entry)
                records.append(rec)
                if on_record:
                    on_record(rec)
        else:
            with ThreadPoolExecutor(max_workers=parallel) as pool:
                futures = [pool.submit(process, entry) for entry in work]
                for fut in futures:
                    rec = fut.result()
                    records.append(rec)
                    if on_record:
                        on_record(rec)
    finally:
        with clients_lock:
            for client in clients:
                client.close()
    return records
