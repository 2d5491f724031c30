"""Evidence packets: deterministic frame-sampling plans, extraction, and manifests.

A plan places frame timestamps for a (video, condition) pair using closed-form
sampling rules, so the same inputs always produce the same packet. Extraction
shells out to an external decoder command per timestamp and records SHA256
digests of every produced frame in a manifest; verification recomputes the
digests so any experiment can prove it ran on identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

from PIL import Image

MIN_FRAME_GAP_S = 0.150
SHORT_SIDE_PX = 512
ZOOM_WINDOW_START = 0.33  # zoom frames land in [0.33, 0.66] of the clip


class EvidenceError(RuntimeError):
    """Raised for invalid plan parameters or failed frame extraction."""


@dataclass(frozen=True)
class EvidenceCondition:
    """Named frame-sampling configuration for one evidence regime."""

    name: str
    uniform_count: int
    zoom_count: int
    window: tuple[float, float]
    jpeg_quality: int

    def __post_init__(self) -> None:
        a, b = self.window
        if not (0.0 <= a < b <= 1.0):
            raise EvidenceError(f"condition {self.name}: window must satisfy 0 <= a < b <= 1")


CONDITIONS: dict[str, EvidenceCondition] = {
    c.name: c
    for c in (
        EvidenceCondition("baseline18", 12, 6, (0.0, 1.0), 85),
        EvidenceCondition("sparse6", 6, 0, (0.0, 1.0), 85),
        EvidenceCondition("earlyhalf6", 6, 0, (0.0, 0.5), 85),
        EvidenceCondition("latehalf6", 6, 0, (0.5, 1.0), 85),
        EvidenceCondition("compressed30", 12, 6, (0.0, 1.0), 30),
    )
}


def get_condition(name: str) -> EvidenceCondition:
    try:
        return CONDITIONS[name]
    except KeyError:
        raise EvidenceError(
            f"unknown condition {name!r}; expected one of {sorted(CONDITIONS)}"
        ) from None


@dataclass(frozen=True)
class EvidencePlan:
    """Resolved frame timestamps for one (video, condition) pair."""

    video_id: str
    condition: str
    duration_s: float
    timestamps: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "condition": self.condition,
            "duration_s": self.duration_s,
            "timestamps": list(self.timestamps),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvidencePlan":
        return cls(
            video_id=str(doc["video_id"]),
            condition=str(doc["condition"]),
            duration_s=float(doc["duration_s"]),
            timestamps=tuple(float(t) for t in doc["timestamps"]),
        )


@dataclass(frozen=True)
class FrameEntry:
    index: int
    timestamp: float
    file_name: str
    sha256: str
    width: int
    height: int


@dataclass(frozen=True)
class Manifest:
    """Content-addressed record of one extracted evidence packet."""

    plan: EvidencePlan
    frames: tuple[FrameEntry, ...]
    short_side: int
    jpeg_quality: int
    decoder_id: str

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "extraction_params": {"short_side": self.short_side, "jpeg_quality": self.jpeg_quality},
            "decoder_id": self.decoder_id,
            "frames": [
                {
                    "index": f.index,
                    "timestamp": f.timestamp,
                    "file_name": f.file_name,
                    "sha256": f.sha256,
                    "width": f.width,
                    "height": f.height,
                }
                for f in self.frames
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Manifest":
        params = doc["extraction_params"]
        return cls(
            plan=EvidencePlan.from_dict(doc["plan"]),
            frames=tuple(
                FrameEntry(
                    index=int(f["index"]),
                    timestamp=float(f["timestamp"]),
                    file_name=str(f["file_name"]),
                    sha256=str(f["sha256"]),
                    width=int(f["width"]),
                    height=int(f["height"]),
                )
                for f in doc["frames"]
            ),
            short_side=int(params["short_side"]),
            jpeg_quality=int(params["jpeg_quality"]),
            decoder_id=str(doc.get("decoder_id", "")),
        )


def uniform_timestamps(duration_s: float, n: int, window: tuple[float, float] = (0.0, 1.0)) -> list[float]:
    """Place n timestamps at (i+0.5)/n of the window span, offset into the window."""
    if duration_s <= 0:
        raise EvidenceError(f"duration must be positive, got {duration_s}")
    if n < 0:
        raise EvidenceError(f"frame count must be nonnegative, got {n}")
    a, b = window
    if not (0.0 <= a < b <= 1.0):
        raise EvidenceError("window must satisfy 0 <= a < b <= 1")
    span = b - a
    return [(a + (i + 0.5) / n * span) * duration_s for i in range(n)]


def zoom_timestamps(duration_s: float, n: int) -> list[float]:
    """Place n timestamps across the middle third, at 0.33 + (j+0.5)/n * 0.33 of the clip."""
    if duration_s <= 0:
        raise EvidenceError(f"duration must be positive, got {duration_s}")
    if n < 0:
        raise EvidenceError(f"frame count must be nonnegative, got {n}")
    return [
        (ZOOM_WINDOW_START + (j + 0.5) / n * ZOOM_WINDOW_START) * duration_s for j in range(n)
    ]


def dedup_merge(ts_a: list[float], ts_b: list[float], min_gap_s: float = MIN_FRAME_GAP_S) -> list[float]:
    """Merge two sorted timestamp lists, dropping any stamp within min_gap of the last kept.

    Greedy left-to-right: the earlier of a close pair survives, so the result
    is order-stable and all remaining gaps exceed min_gap.
    """
    merged = sorted(list(ts_a) + list(ts_b))
    kept: list[float] = []
    for t in merged:
        if not kept or (t - kept[-1]) > min_gap_s:
            kept.append(t)
    return kept


def build_plan(video_id: str, duration_s: float, condition: EvidenceCondition | str) -> EvidencePlan:
    """Compute the deterministic frame plan for a video under one condition."""
    cond = get_condition(condition) if isinstance(condition, str) else condition
    uniform = uniform_timestamps(duration_s, cond.uniform_count, cond.window)
    zoom = zoom_timestamps(duration_s, cond.zoom_count) if cond.zoom_count else []
    stamps = dedup_merge(uniform, zoom)
    return EvidencePlan(
        video_id=video_id,
        condition=cond.name,
        duration_s=float(duration_s),
        timestamps=tuple(stamps),
    )


def _render_decoder_argv(template: str, substitutions: dict[str, str]) -> list[str]:
    # Substitute per token after shlex splitting so paths with spaces stay intact.
    argv = []
    for token in shlex.split(template):
        for key, value in substitutions.items():
            token = token.replace("{" + key + "}", value)
        argv.append(token)
    return argv


def frame_file_name(index: int, timestamp: float) -> str:
    return f"frame_{index:03d}_{timestamp:.3f}s.jpg"


def extract_frames(
    plan: EvidencePlan,
    video_path: str | Path,
    decoder_cmd: str,
    out_dir: str | Path,
    short_side: int = SHORT_SIDE_PX,
    jpeg_quality: int | None = None,
    decoder_id: str = "",
) -> Manifest:
    """Run the decoder once per plan timestamp and build the content-hashed manifest.

    The decoder command is a template with {input}, {timestamp}, {quality},
    {short_side}, and {output} placeholders; exit code 0 plus a nonempty output
    file defines success. The manifest file is written atomically by the
    caller via save_manifest; no partial manifest is produced on failure.
    """
    video_path = Path(video_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if jpeg_quality is None:
        jpeg_quality = get_condition(plan.condition).jpeg_quality

    frames: list[FrameEntry] = []
    for index, ts in enumerate(plan.timestamps):
        name = frame_file_name(index, ts)
        out_path = out_dir / name
        argv = _render_decoder_argv(
            decoder_cmd,
            {
                "input": str(video_path),
                "timestamp": f"{ts:.6f}",
                "quality": str(jpeg_quality),
                "short_side": str(short_side),
                "output": str(out_path),
            },
        )
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except OSError as exc:
            raise EvidenceError(f"decoder spawn failed: {exc}") from None
        if proc.returncode != 0:
            raise EvidenceError(
                f"decoder exited {proc.returncode} at t={ts:.3f}s for {plan.video_id}:"
                f" {proc.stderr.strip()}"
            )
        if not out_path.exists() or out_path.stat().st_size == 0:
            raise EvidenceError(
                f"decoder produced no frame at t={ts:.3f}s for {plan.video_id}"
            )
        data = out_path.read_bytes()
        with Image.open(out_path) as img:
            width, height = img.size
        if min(width, height) != short_side:
            raise EvidenceError(
                f"frame {name}: short side {min(width, height)}px, expected {short_side}px"
            )
        frames.append(
            FrameEntry(
                index=index,
                timestamp=ts,
                file_name=name,
                sha256=hashlib.sha256(data).hexdigest(),
                width=width,
                height=height,
            )
        )
    return Manifest(
        plan=plan,
        frames=tuple(frames),
        short_side=short_side,
        jpeg_quality=jpeg_quality,
        decoder_id=decoder_id,
    )


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write the manifest atomically (temp file, then rename)."""
    path = Path(path)
    payload = json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n"
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(payload, encoding="utf-8")
    os.replace(tmp, path)


def load_manifest(path: str | Path) -> Manifest:
    return Manifest.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class FrameCheck:
    file_name: str
    ok: bool
    reason: str  # "ok", "digest_mismatch", "missing_file"


@dataclass(frozen=True)
class VerificationReport:
    video_id: str
    condition: str
    checks: tuple[FrameCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list[FrameCheck]:
        return [c for c in self.checks if not c.ok]


def verify_manifest(manifest: Manifest, frames_dir: str | Path) -> VerificationReport:
    """Recompute every frame digest; missing files become failed checks, not exceptions."""
    frames_dir = Path(frames_dir)
    checks: list[FrameCheck] = []
    for frame in manifest.frames:
        fpath = frames_dir / frame.file_name
        if not fpath.exists():
            checks.append(FrameCheck(frame.file_name, False, "missing_file"))
            continue
        digest = hashlib.sha256(fpath.read_bytes()).hexdigest()
        if digest != frame.sha256:
            checks.append(FrameCheck(frame.file_name, False, "digest_mismatch"))
        else:
            checks.append(FrameCheck(frame.file_name, True, "ok"))
    return VerificationReport(
        video_id=manifest.plan.video_id,
        condition=manifest.plan.condition,
        checks=tuple(checks),
    )


def probe_duration(probe_cmd: str, video_path: str | Path) -> float:
    """Run a probe command template ({input} placeholder) and parse seconds from stdout."""
    argv = _render_decoder_argv(probe_cmd, {"input": str(video_path)})
    try:
        proc = subprocess.run(argv, capture_output=True, text=True)
    except OSError as exc:
        raise EvidenceError(f"probe spawn failed: {exc}") from None
    if proc.returncode != 0:
        raise EvidenceError(f"probe exited {proc.returncode}: {proc.stderr.strip()}")
    try:
        return float(proc.stdout.strip().splitlines()[-1])
    except (ValueError, IndexError):
        raise EvidenceError(f"probe output not a duration: {proc.stdout!r}") from None
