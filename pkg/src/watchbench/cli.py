"""Command-line surface: plan evidence packets, run predictions, analyze logs.

Commands compose the library modules into the on-disk layout
``packets/<condition>/<video_id>/``, ``logs/<run_id>.jsonl`` and
``reports/<run_id>/``. Every command is deterministic given identical inputs
and flags; all randomness flows from explicit seeds.

Exit codes: 0 success, 1 usage error, 2 data error, 3 adapter error.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import click

from . import __version__, corpus, evidence, gateway, metrics, plots, shift

click.exceptions.UsageError.exit_code = 1


class DataError(click.ClickException):
    exit_code = 2


class AdapterError(click.ClickException):
    exit_code = 3


_DATA_ERRORS = (
    corpus.CorpusError,
    evidence.EvidenceError,
    metrics.MetricsError,
    shift.ShiftError,
    FileNotFoundError,
    json.JSONDecodeError,
)


def _die_on_data_error(fn):
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _DATA_ERRORS as exc:
            raise DataError(str(exc)) from exc

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


@dataclass
class RunManifest:
    """Provenance for one prediction run, written beside the log."""

    run_id: str
    item_list_digest: str
    condition: str
    mode: str
    prompt_version: str
    adapter_command: str
    model_id: str
    started_at: str
    finished_at: str
    n_records: int
    n_parse_failures: int
    n_adapter_errors: int
    per_item_latency_ms: dict[str, float] = field(default_factory=dict)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.__dict__, sort_keys=True, indent=2) + "\n", "utf-8")


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _parse_grid(spec_text: str | None) -> list[float] | None:
    if spec_text is None:
        return None
    if "," in spec_text:
        return [float(tok) for tok in spec_text.split(",") if tok.strip()]
    count = int(spec_text)
    if count < 2:
        raise click.BadParameter("grid count must be >= 2")
    return [i / (count - 1) for i in range(count)]


def _load_videos(path: str) -> dict[str, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise DataError(f"{path}: expected an object of video_id -> {{path, duration_s}}")
    return doc


def _select_items(items_path: str, frozen_path: str | None) -> list[corpus.ItemSpec]:
    items = corpus.load_items(items_path)
    if frozen_path is None:
        return items
    frozen = corpus.load_frozen_list(frozen_path)
    by_id = corpus.items_by_id(items)
    missing = [qid for qid in frozen.ids if qid not in by_id]
    if missing:
        raise DataError(f"frozen list ids not present in items file: {missing[:5]}")
    return [by_id[qid] for qid in frozen.ids]


def _items_digest(items: list[corpus.ItemSpec]) -> str:
    payload = json.dumps([it.question_id for it in items], separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _packet_dir(packets_root: Path, condition: str, video_id: str) -> Path:
    return packets_root / condition / video_id


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__)
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for stratification and the oracle model.")
@click.option("--parallel", type=int, default=1, show_default=True, help="Adapter processes for `run`.")
@click.option("--adapter", envvar="WB_ADAPTER_CMD", default=None, help="Adapter command line (or WB_ADAPTER_CMD).")
@click.option("--grid", "grid_spec", default=None, help="Threshold grid: a count (evenly spaced in [0,1]) or comma-separated values. Default 25 points.")
@click.option("--min-n", type=int, default=metrics.MIN_ACCEPTED_DEFAULT, show_default=True, help="Accepted-count floor below which risk/ECE are suppressed (0 disables).")
@click.option("--epsilon", type=float, default=17 / 24, help="Flagged operating point for reliability diagrams. Default 17/24.")
@click.pass_context
def main(ctx, seed, parallel, adapter, grid_spec, min_n, epsilon):
    """Evidence-conditioned selective prediction harness for video QA."""
    ctx.obj = {
        "seed": seed,
        "parallel": parallel,
        "adapter": adapter,
        "grid": _parse_grid(grid_spec),
        "min_n": min_n,
        "epsilon": epsilon,
    }


@main.command()
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--per-group", type=int, default=100, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
@_die_on_data_error
def freeze(ctx, items_path, per_group, out_path):
    """Freeze a stratified item list (per-group seeded sample) to item_ids.json."""
    items = corpus.load_items(items_path)
    frozen = corpus.freeze_stratified(items, per_group, ctx.obj["seed"])
    corpus.save_frozen_list(frozen, out_path)
    click.echo(f"froze {len(frozen.ids)} ids ({per_group} per group) -> {out_path}")


@main.command()
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--videos", "videos_path", required=True, type=click.Path(exists=True), help="JSON of video_id -> {path, duration_s}.")
@click.option("--condition", required=True, type=click.Choice(sorted(evidence.CONDITIONS)))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--decoder-cmd", required=True, help="Template with {input} {timestamp} {quality} {short_side} {output}.")
@click.option("--decoder-id", default=None, help="Decoder identification string for the manifest.")
@click.option("--probe-cmd", default=None, help="Duration probe template with {input}; used when duration_s is absent.")
@click.option("--frozen", "frozen_path", default=None, type=click.Path(exists=True))
@_die_on_data_error
def plan(items_path, videos_path, condition, out_dir, decoder_cmd, decoder_id, probe_cmd, frozen_path):
    """Compute frame plans and extract hashed evidence packets for every video."""
    items = _select_items(items_path, frozen_path)
    videos = _load_videos(videos_path)
    packets_root = Path(out_dir) / "packets"
    cond = evidence.get_condition(condition)
    decoder_id = decoder_id or decoder_cmd

    video_ids = sorted({item.video_id for item in items})
    failures: list[str] = []
    n_done = 0
    for video_id in video_ids:
        entry = videos.get(video_id)
        if entry is None or not Path(entry.get("path", "")).exists():
            failures.append(f"{video_id}: video file missing")
            continue
        try:
            duration = entry.get("duration_s")
            if duration is None:
                if probe_cmd is None:
                    raise evidence.EvidenceError("no duration_s and no --probe-cmd")
                duration = evidence.probe_duration(probe_cmd, entry["path"])
            packet_dir = _packet_dir(packets_root, condition, video_id)
            manifest_path = packet_dir / "manifest.json"
            plan_obj = evidence.build_plan(video_id, float(duration), cond)
            if manifest_path.exists():
                existing = evidence.load_manifest(manifest_path)
                if existing.plan == plan_obj and evidence.verify_manifest(existing, packet_dir).ok:
                    n_done += 1
                    continue
            manifest = evidence.extract_frames(
                plan_obj,
                entry["path"],
                decoder_cmd,
                packet_dir,
                jpeg_quality=cond.jpeg_quality,
                decoder_id=decoder_id,
            )
            evidence.save_manifest(manifest, manifest_path)
            n_done += 1
        except evidence.EvidenceError as exc:
            failures.append(f"{video_id}: {exc}")
    click.echo(f"packets ready for {n_done}/{len(video_ids)} videos under {packets_root / condition}")
    if failures:
        for f in failures:
            click.echo(f"FAIL {f}", err=True)
        raise DataError(f"{len(failures)} video(s) failed")


@main.command("extract-verify")
@click.option("--packets", "packets_root", required=True, type=click.Path(exists=True))
@click.option("--condition", required=True, type=click.Choice(sorted(evidence.CONDITIONS)))
@_die_on_data_error
def extract_verify(packets_root, condition):
    """Re-hash every frame under packets/<condition> against its manifest."""
    root = Path(packets_root) / condition
    manifest_paths = sorted(root.glob("*/manifest.json"))
    if not manifest_paths:
        raise DataError(f"no manifests under {root}")
    n_fail = 0
    for mpath in manifest_paths:
        report = evidence.verify_manifest(evidence.load_manifest(mpath), mpath.parent)
        status = "ok" if report.ok else "FAIL"
        click.echo(f"{status} {report.video_id} ({len(report.checks)} frames)")
        for check in report.failures:
            n_fail += 1
            click.echo(f"  {check.file_name}: {check.reason}", err=True)
    if n_fail:
        raise DataError(f"{n_fail} frame(s) failed verification")


@main.command()
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--frozen", "frozen_path", default=None, type=click.Path(exists=True))
@click.option("--packets", "packets_root", required=True, type=click.Path(exists=True))
@click.option("--condition", required=True, type=click.Choice(sorted(evidence.CONDITIONS)))
@click.option("--mode", required=True, type=click.Choice(["json", "letter"]))
@click.option("--out", "out_path", required=True, type=click.Path(), help="Predictions log (JSONL), appended on resume.")
@click.option("--run-id", default=None, help="Defaults to the log file stem.")
@click.option("--prompt-version", default="v1", show_default=True)
@click.pass_context
@_die_on_data_error
def run(ctx, items_path, frozen_path, packets_root, condition, mode, out_path, run_id, prompt_version):
    """Query the adapter once per item (retry-once on parse failure), appending records."""
    adapter_cmd = ctx.obj["adapter"]
    if not adapter_cmd:
        raise click.UsageError("no adapter command (--adapter or WB_ADAPTER_CMD)")
    items = _select_items(items_path, frozen_path)
    config = gateway.GenerationConfig(mode=mode, prompt_version=prompt_version)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    done: set[str] = set()
    if out_path.exists():
        for rec in gateway.read_records(out_path):
            done.add(rec.question_id)
    todo = [item for item in items if item.question_id not in done]
    if done:
        click.echo(f"resuming: {len(done)} records present, {len(todo)} to go")

    work = []
    for item in todo:
        packet_dir = _packet_dir(Path(packets_root), condition, item.video_id)
        manifest_path = packet_dir / "manifest.json"
        if not manifest_path.exists():
            raise DataError(f"no manifest for video {item.video_id!r} under {packet_dir}")
        work.append((item, evidence.load_manifest(manifest_path), packet_dir))

    started = _utc_now()
    records = gateway.run_batch(
        adapter_cmd,
        work,
        config,
        parallel=ctx.obj["parallel"],
        on_record=lambda rec: gateway.append_record(rec, out_path),
    )

    n_adapter_errors = sum(
        1
        for rec in records
        if isinstance(rec.payload, gateway.ParseFailure) and rec.payload.reason == "adapter_error"
    )
    n_parse_failures = sum(1 for rec in records if not rec.parse_ok)
    model_id = next((rec.model_id for rec in records if rec.model_id), "")
    manifest = RunManifest(
        run_id=run_id or out_path.stem,
        item_list_digest=_items_digest(items),
        condition=condition,
        mode=mode,
        prompt_version=prompt_version,
        adapter_command=adapter_cmd,
        model_id=model_id,
        started_at=started,
        finished_at=_utc_now(),
        n_records=len(done) + len(records),
        n_parse_failures=n_parse_failures,
        n_adapter_errors=n_adapter_errors,
        per_item_latency_ms={rec.question_id: rec.latency_ms for rec in records},
    )
    manifest.write(out_path.with_suffix(out_path.suffix + ".run.json"))
    click.echo(
        f"{len(done) + len(records)} records in {out_path}"
        f" ({n_parse_failures} parse failures, {n_adapter_errors} adapter errors)"
    )
    if n_adapter_errors:
        raise AdapterError(f"{n_adapter_errors} item(s) hit adapter errors")


def _sweep_from_log(log_path: str, items_path: str, ctx_obj: dict) -> tuple[list, dict, list]:
    records = gateway.read_records(log_path)
    key = corpus.answer_key(corpus.load_items(items_path))
    points = metrics.sweep(records, key, grid=ctx_obj["grid"], min_accepted=ctx_obj["min_n"])
    return records, key, points


def _emit_sweep_outputs(records, key, points, out_dir: Path, flagged_eps: float) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics.write_sweep_csv(points, out_dir / "sweep_results.csv")
    plots.line_chart(
        out_dir / "risk_coverage.svg",
        "Risk vs coverage",
        "coverage",
        "risk",
        [("sweep", [p.coverage for p in points], [p.risk for p in points])],
    )
    plots.line_chart(
        out_dir / "ece_vs_threshold.svg",
        "ECE vs threshold",
        "epsilon",
        "ECE",
        [("ece", [p.epsilon for p in points], [p.ece for p in points])],
    )
    accepted = [rec for rec in records if metrics.gate(rec, flagged_eps).accepted]
    if accepted:
        _, bins = metrics.ece(accepted, key)
        plots.reliability_chart(
            out_dir / "reliability.svg",
            f"Reliability at epsilon={flagged_eps:.4g} (n={len(accepted)})",
            bins.counts,
            bins.mean_confidence,
            bins.accuracy,
        )


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_context
@_die_on_data_error
def sweep(ctx, log_path, items_path, out_dir):
    """Threshold sweep: sweep_results.csv plus risk-coverage, reliability, and ECE plots."""
    records, key, points = _sweep_from_log(log_path, items_path, ctx.obj)
    _emit_sweep_outputs(records, key, points, Path(out_dir), ctx.obj["epsilon"])
    click.echo(f"{len(points)} sweep points -> {Path(out_dir) / 'sweep_results.csv'}")


@main.command()
@click.option("--log-a", required=True, type=click.Path(exists=True))
@click.option("--log-b", required=True, type=click.Path(exists=True))
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--label-a", default="condition_a")
@click.option("--label-b", default="condition_b")
@click.option("--tau", type=float, default=0.9, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_context
@_die_on_data_error
def compare(ctx, log_a, log_b, items_path, label_a, label_b, tau, out_dir):
    """Overlay two conditions: sweeps, matched-instance deltas, confidence CDFs."""
    records_a, key, points_a = _sweep_from_log(log_a, items_path, ctx.obj)
    records_b = gateway.read_records(log_b)
    points_b = metrics.sweep(records_b, key, grid=ctx.obj["grid"], min_accepted=ctx.obj["min_n"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    metrics.write_sweep_csv(points_a, out / "sweep_a.csv")
    metrics.write_sweep_csv(points_b, out / "sweep_b.csv")
    plots.line_chart(
        out / "risk_coverage_overlay.svg",
        "Risk vs coverage by condition",
        "coverage",
        "risk",
        [
            (label_a, [p.coverage for p in points_a], [p.risk for p in points_a]),
            (label_b, [p.coverage for p in points_b], [p.risk for p in points_b]),
        ],
    )

    pairs = shift.match_instances(records_a, records_b)
    conf_a = [metrics.confidence_signal(p.record_a) for p in pairs]
    conf_b = [metrics.confidence_signal(p.record_b) for p in pairs]
    plots.cdf_chart(
        out / "confidence_cdf.svg",
        "Confidence CDF on matched instances",
        "confidence",
        [(label_a, conf_a), (label_b, conf_b)],
        tau=tau,
    )

    with open(out / "epsilon_deltas.jsonl", "w", encoding="utf-8") as fh:
        for pa, pb in zip(points_a, points_b):
            fh.write(
                json.dumps(
                    {
                        "epsilon": pa.epsilon,
                        "coverage_a": pa.coverage,
                        "coverage_b": pb.coverage,
                        "coverage_delta": pb.coverage - pa.coverage,
                        "risk_a": pa.risk,
                        "risk_b": pb.risk,
                        "risk_delta": (pb.risk - pa.risk)
                        if not (math.isnan(pa.risk) or math.isnan(pb.risk))
                        else None,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )

    lines = [f"compare {label_a} vs {label_b}", f"matched pairs: {len(pairs)}"]
    if pairs:
        delta = shift.delta_summary(pairs)
        mass_a = shift.high_conf_mass([p.record_a for p in pairs], key, tau)
        mass_b = shift.high_conf_mass([p.record_b for p in pairs], key, tau)
        lines += [
            f"mean confidence: {delta.mean_a:.4f} -> {delta.mean_b:.4f}"
            f" (abs {delta.delta_abs:+.4f}, rel {delta.delta_rel:+.4%})",
            f"P(conf >= {tau:g}): {mass_a.mass:.4f} ({mass_a.n_high}/{mass_a.n_total})"
            f" -> {mass_b.mass:.4f} ({mass_b.n_high}/{mass_b.n_total})",
            f"error | conf >= {tau:g}: {mass_a.error_rate_given_high:.4f}"
            f" -> {mass_b.error_rate_given_high:.4f}",
        ]
    (out / "compare_summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo("\n".join(lines))


@main.command()
@click.option("--log-a", required=True, type=click.Path(exists=True))
@click.option("--log-b", required=True, type=click.Path(exists=True))
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--tau", type=float, default=0.9, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
@_die_on_data_error
def matched(log_a, log_b, items_path, tau, out_dir):
    """Matched-instance report: per-pair records plus distribution statistics."""
    records_a = gateway.read_records(log_a)
    records_b = gateway.read_records(log_b)
    key = corpus.answer_key(corpus.load_items(items_path))
    pairs = shift.match_instances(records_a, records_b)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "matched_pairs.jsonl", "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(
                json.dumps(
                    {
                        "question_id": pair.question_id,
                        "confidence_a": metrics.confidence_signal(pair.record_a),
                        "confidence_b": metrics.confidence_signal(pair.record_b),
                        "correct_a": metrics.choice_of(pair.record_a) == key[pair.question_id][0],
                        "correct_b": metrics.choice_of(pair.record_b) == key[pair.question_id][0],
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )

    lines = [f"matched pairs: {len(pairs)}"]
    if not pairs:
        lines.append("warning: no overlapping valid ids between the two logs")
        click.echo(lines[-1], err=True)
    else:
        stats_a = shift.distribution_stats([metrics.confidence_signal(p.record_a) for p in pairs])
        stats_b = shift.distribution_stats([metrics.confidence_signal(p.record_b) for p in pairs])
        delta = shift.delta_summary(pairs)
        mass_a = shift.high_conf_mass([p.record_a for p in pairs], key, tau)
        mass_b = shift.high_conf_mass([p.record_b for p in pairs], key, tau)
        for name, st in (("a", stats_a), ("b", stats_b)):
            lines.append(
                f"side {name}: n={st.n} mean={st.mean:.4f} median={st.median:.4f}"
                f" q25={st.q25:.4f} q75={st.q75:.4f} iqr={st.iqr:.4f}"
            )
        lines.append(
            f"delta: abs {delta.delta_abs:+.4f}, rel {delta.delta_rel:+.4%}"
        )
        lines.append(
            f"P(conf >= {tau:g}): a {mass_a.mass:.4f} b {mass_b.mass:.4f};"
            f" error given high: a {mass_a.error_rate_given_high:.4f}"
            f" b {mass_b.error_rate_given_high:.4f}"
        )
    (out / "matched_summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo("\n".join(lines))


@main.command()
@click.option("--source", "source_path", required=True, type=click.Path(exists=True), help="Source predictions log (JSONL) or sweep CSV.")
@click.option("--target", "target_path", required=True, type=click.Path(exists=True), help="Target predictions log (JSONL) or sweep CSV.")
@click.option("--items", "items_path", default=None, type=click.Path(exists=True), help="Required when inputs are logs.")
@click.option("--risk", "risk_target", type=float, default=None, help="Fixed-risk criterion.")
@click.option("--coverage", "coverage_target", type=float, default=None, help="Fixed-coverage criterion.")
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_context
@_die_on_data_error
def transfer(ctx, source_path, target_path, items_path, risk_target, coverage_target, out_dir):
    """Solve epsilon* for a criterion on the source curve and evaluate it on the target."""
    if (risk_target is None) == (coverage_target is None):
        raise click.UsageError("provide exactly one of --risk or --coverage")
    criterion = (
        shift.TransferCriterion("fixed_risk", risk_target)
        if risk_target is not None
        else shift.TransferCriterion("fixed_coverage", coverage_target)
    )

    def load_curve(path: str):
        if path.endswith(".csv"):
            return metrics.read_sweep_csv(path)
        if items_path is None:
            raise click.UsageError("--items is required when inputs are prediction logs")
        records = gateway.read_records(path)
        key = corpus.answer_key(corpus.load_items(items_path))
        return metrics.sweep(records, key, grid=ctx.obj["grid"], min_accepted=ctx.obj["min_n"])

    source_curve = load_curve(source_path)
    target_curve = load_curve(target_path)
    eps_src = [p.epsilon for p in source_curve]
    eps_tgt = [p.epsilon for p in target_curve]
    if eps_src != eps_tgt:
        raise DataError("source and target curves are on different epsilon grids")

    result = shift.threshold_transfer(source_curve, target_curve, criterion)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "direction": result.direction,
        "criterion": {"kind": criterion.kind, "value": criterion.value},
        "epsilon_star": result.epsilon_star,
        "source": result.source.__dict__,
        "target": result.target.__dict__,
    }
    (out / "transfer.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")
    plots.line_chart(
        out / "transfer_overlay.svg",
        f"Threshold transfer ({criterion.kind}={criterion.value:g})",
        "epsilon",
        "risk",
        [
            ("source", eps_src, [p.risk for p in source_curve]),
            ("target", eps_tgt, [p.risk for p in target_curve]),
        ],
    )
    lines = [
        f"criterion: {criterion.kind} = {criterion.value:g}",
        f"epsilon* = {result.epsilon_star:.6f}",
        f"source: risk {result.source.risk:.4f}, coverage {result.source.coverage:.4f}, n {result.source.n_accepted}",
        f"target: risk {result.target.risk:.4f}, coverage {result.target.coverage:.4f}, n {result.target.n_accepted}",
    ]
    (out / "transfer_summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo("\n".join(lines))


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_context
@_die_on_data_error
def report(ctx, log_path, items_path, out_dir):
    """Full single-log report: sweep outputs, per-group table, gate diagnostics."""
    records, key, points = _sweep_from_log(log_path, items_path, ctx.obj)
    out = Path(out_dir)
    _emit_sweep_outputs(records, key, points, out, ctx.obj["epsilon"])

    flagged = ctx.obj["epsilon"]
    group_rows = metrics.per_group_table(records, key, [0.0, flagged])
    with open(out / "per_group.csv", "w", encoding="utf-8") as fh:
        fh.write("group,epsilon,coverage,acc_cond,n_accepted,n_records\n")
        for row in group_rows:
            acc = "" if math.isnan(row.acc_cond) else repr(row.acc_cond)
            fh.write(
                f"{row.group},{row.epsilon!r},{row.coverage!r},{acc},{row.n_accepted},{row.n_records}\n"
            )

    reasons: dict[str, int] = {}
    for rec in records:
        reasons[metrics.gate(rec, flagged).reason] = reasons.get(metrics.gate(rec, flagged).reason, 0) + 1
    valid_conf = [
        metrics.confidence_signal(r) for r in records if shift.is_valid_for_matching(r)
    ]
    lines = [
        f"records: {len(records)}",
        f"gate reasons at epsilon={flagged:.4g}: "
        + ", ".join(f"{k}={v}" for k, v in sorted(reasons.items())),
    ]
    if valid_conf:
        st = shift.distribution_stats(valid_conf)
        lines.append(
            f"confidence: mean={st.mean:.4f} median={st.median:.4f}"
            f" q25={st.q25:.4f} q75={st.q75:.4f} iqr={st.iqr:.4f} (n={st.n})"
        )
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo("\n".join(lines))


if __name__ == "__main__":
    main()
