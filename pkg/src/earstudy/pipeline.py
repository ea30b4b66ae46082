"""Staged pipeline: identify -> ear -> attention -> eventstudy.

Each stage reads the previous stage's on-disk outputs and writes its own
per-conference files plus diagnostics, so expensive upstream stages are
never recomputed when downstream parameters change.  Conferences that fail
a stage are excluded with a logged reason rather than aborting the run.
"""

from __future__ import annotations

import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date as dt_date
from datetime import datetime, time
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import attention as att
from . import geometry, identity, market, output, regression, synth
from .errors import ConfigError, CoverageError, DataError, InsufficientDataError

log = logging.getLogger(__name__)

STAGES = ("identify", "ear", "attention", "eventstudy")

DEPENDENT_COLUMNS = ("return_during", "return_after", "vol_change_x100")
COVARIATE_COLUMNS = (
    "delta_log_attention",
    "delta_log_n_questions",
    "delta_log_qa_duration",
    "delta_log_chair_speech",
)


@dataclass(frozen=True)
class MarketConfig:
    trading_close: time = time(16, 0)


@dataclass(frozen=True)
class ConferenceRecord:
    """One registry row: where a conference's data lives and when it ran."""

    conference_id: str
    date: dt_date
    qa_start: datetime
    conference_end: datetime
    landmarks: Path
    transcript: Path
    segments: Path
    prices: Path
    trading_close: datetime | None = None

    def qa_duration_s(self) -> float:
        return (self.conference_end - self.qa_start).total_seconds()


@dataclass(frozen=True)
class RunConfig:
    registry: Path
    gallery: Path
    target_label: str
    identity: identity.IdentityConfig
    attention: att.AttentionConfig
    market: MarketConfig = field(default_factory=MarketConfig)
    stages: tuple[str, ...] = STAGES
    eye_left: tuple[int, ...] = geometry.LEFT_EYE_INDICES
    eye_right: tuple[int, ...] = geometry.RIGHT_EYE_INDICES

    def digest_payload(self) -> dict:
        return {
            "registry": str(self.registry),
            "gallery": str(self.gallery),
            "target_label": self.target_label,
            "identity": {
                "epsilon": self.identity.epsilon,
                "min_votes": self.identity.min_votes,
                "no_embedding_policy": self.identity.no_embedding_policy,
            },
            "attention": {
                "threshold": self.attention.threshold,
                "gap_factor": self.attention.gap_factor,
                "floor_policy": self.attention.floor_policy,
                "floor_value": self.attention.floor_value,
            },
            "market": {"trading_close": self.market.trading_close.isoformat()},
            "stages": list(self.stages),
            "eye_indices": [list(self.eye_left), list(self.eye_right)],
        }

    def digest(self) -> str:
        return output.config_digest(self.digest_payload())


def load_run_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Parse a run-config JSON file, applying CLI flag overrides."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: invalid JSON: {exc}") from exc

    overrides = overrides or {}
    base = path.parent

    def resolve(key: str) -> Path:
        if key not in raw:
            raise ConfigError(f"config {path}: missing required key {key!r}")
        return (base / raw[key]).resolve()

    ident_raw = dict(raw.get("identity", {}))
    if overrides.get("epsilon") is not None:
        ident_raw["epsilon"] = overrides["epsilon"]
    if overrides.get("min_votes") is not None:
        ident_raw["min_votes"] = overrides["min_votes"]
    if overrides.get("no_embedding_policy") is not None:
        ident_raw["no_embedding_policy"] = overrides["no_embedding_policy"]
    if "epsilon" not in ident_raw:
        raise ConfigError(f"config {path}: identity.epsilon is required")
    ident = identity.IdentityConfig(
        epsilon=float(ident_raw["epsilon"]),
        min_votes=int(ident_raw.get("min_votes", 1)),
        no_embedding_policy=ident_raw.get("no_embedding_policy", "drop"),
    )

    att_raw = dict(raw.get("attention", {}))
    attention_cfg = att.AttentionConfig(
        threshold=float(att_raw.get("threshold", 0.2)),
        gap_factor=float(att_raw.get("gap_factor", 3.0)),
        floor_policy=att_raw.get("floor_policy", "error"),
        floor_value=float(att_raw.get("floor_value", 1e-9)),
    )

    market_raw = dict(raw.get("market", {}))
    close_text = overrides.get("trading_close") or market_raw.get("trading_close", "16:00")
    try:
        close_time = time.fromisoformat(close_text)
    except ValueError as exc:
        raise ConfigError(f"invalid trading close {close_text!r}: {exc}") from exc

    target = overrides.get("target_label") or raw.get("target_label")
    if not target:
        raise ConfigError(f"config {path}: target_label is required")

    stages = tuple(raw.get("stages", STAGES))
    for stage in stages:
        if stage not in STAGES:
            raise ConfigError(f"config {path}: unknown stage {stage!r}")

    eye = raw.get("eye_indices")
    eye_left = tuple(eye[0]) if eye else geometry.LEFT_EYE_INDICES
    eye_right = tuple(eye[1]) if eye else geometry.RIGHT_EYE_INDICES

    return RunConfig(
        registry=resolve("registry"),
        gallery=resolve("gallery"),
        target_label=target,
        identity=ident,
        attention=attention_cfg,
        market=MarketConfig(trading_close=close_time),
        stages=stages,
        eye_left=eye_left,
        eye_right=eye_right,
    )


def load_registry(path: str | Path) -> list[ConferenceRecord]:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read registry {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"registry {path}: invalid JSON: {exc}") from exc

    base = path.parent
    records: list[ConferenceRecord] = []
    seen: set[str] = set()
    for item in raw.get("conferences", []):
        try:
            record = ConferenceRecord(
                conference_id=item["conference_id"],
                date=dt_date.fromisoformat(item["date"]),
                qa_start=market.parse_instant(item["qa_start"]),
                conference_end=market.parse_instant(item["conference_end"]),
                landmarks=(base / item["landmarks"]).resolve(),
                transcript=(base / item["transcript"]).resolve(),
                segments=(base / item["segments"]).resolve(),
                prices=(base / item["prices"]).resolve(),
                trading_close=(
                    market.parse_instant(item["trading_close"])
                    if item.get("trading_close")
                    else None
                ),
            )
        except KeyError as exc:
            raise DataError(f"registry {path}: conference entry missing {exc}") from exc
        if record.conference_id in seen:
            raise DataError(f"registry {path}: duplicate id {record.conference_id!r}")
        if record.qa_start >= record.conference_end:
            raise DataError(
                f"registry {path}: {record.conference_id!r} has qa_start >= conference_end"
            )
        seen.add(record.conference_id)
        records.append(record)
    if not records:
        raise DataError(f"registry {path} lists no conferences")
    records.sort(key=lambda r: (r.date, r.conference_id))
    return records


def _map_jobs(work: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [work(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(work, items))


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def stage_identify(cfg: RunConfig, out_dir: Path, jobs: int = 1) -> dict:
    records = load_registry(cfg.registry)
    gallery = identity.load_gallery(cfg.gallery)
    if cfg.target_label not in gallery.labels:
        raise ConfigError(
            f"gallery {cfg.gallery} has no entries for target label {cfg.target_label!r}"
        )
    digest = cfg.digest()

    def work(record: ConferenceRecord) -> tuple[str, dict]:
        if not record.landmarks.exists():
            raise ConfigError(f"landmark file not found: {record.landmarks}")
        frames = geometry.read_landmark_stream(record.landmarks)
        kept, diag = identity.filter_speaker_frames(
            frames, gallery, cfg.target_label, cfg.identity
        )
        buf = io.StringIO()
        geometry.write_landmark_stream(kept, buf, meta=output.meta_dict(digest))
        output.write_text(out_dir / "filtered" / f"{record.conference_id}.jsonl",
                          buf.getvalue(), digest)
        info = diag.as_dict()
        if diag.written == 0:
            info["warning"] = "no frames classified as target"
            log.warning("conference %s: no frames kept by identity filter",
                        record.conference_id)
        return record.conference_id, info

    results = _map_jobs(work, records, jobs)
    diagnostics = {"conferences": dict(results)}
    output.write_json(out_dir / "diagnostics" / "identify.json", diagnostics, digest)
    return diagnostics


def stage_ear(cfg: RunConfig, out_dir: Path, jobs: int = 1) -> dict:
    records = load_registry(cfg.registry)
    digest = cfg.digest()

    def work(record: ConferenceRecord) -> tuple[str, dict]:
        filtered = out_dir / "filtered" / f"{record.conference_id}.jsonl"
        if not filtered.exists():
            raise ConfigError(
                f"missing filtered landmarks for {record.conference_id!r}: "
                "run the identify stage first"
            )
        samples = []
        dropped = 0
        for frame in geometry.read_landmark_stream(filtered):
            try:
                samples.append(geometry.frame_ear(frame, cfg.eye_left, cfg.eye_right))
            except DataError:
                dropped += 1
        buf = io.StringIO()
        count = att.write_ear_csv(samples, buf, meta_line=output.meta_line(digest))
        output.write_text(out_dir / "ear" / f"{record.conference_id}.csv",
                          buf.getvalue(), digest)
        info = {"n_samples": count, "dropped_degenerate": dropped}
        if count == 0:
            info["warning"] = "empty filtered stream"
            log.warning("conference %s: empty EAR series", record.conference_id)
        return record.conference_id, info

    results = _map_jobs(work, records, jobs)
    diagnostics = {"conferences": dict(results)}
    output.write_json(out_dir / "diagnostics" / "ear.json", diagnostics, digest)
    return diagnostics


def stage_attention(cfg: RunConfig, out_dir: Path, jobs: int = 1) -> dict:
    records = load_registry(cfg.registry)
    digest = cfg.digest()
    rows: list[dict] = []
    exclusions: list[dict] = []
    floored: list[str] = []

    for record in records:
        ear_path = out_dir / "ear" / f"{record.conference_id}.csv"
        if not ear_path.exists():
            raise ConfigError(
                f"missing EAR series for {record.conference_id!r}: run the ear stage first"
            )
        try:
            samples = att.read_ear_csv(ear_path)
            series = att.series_from_samples(record.conference_id, samples)
            integral, reading_time = att.integrate_attention(series, cfg.attention)
            log_value = att.log_attention_level(
                integral, cfg.attention, record.conference_id
            )
            if (
                cfg.attention.floor_policy == "epsilon_floor"
                and integral < cfg.attention.floor_value
            ):
                floored.append(record.conference_id)
            transcript = record.transcript.read_text(encoding="utf-8")
            segments = att.read_segments_csv(record.segments, record.conference_id)
            benchmark = att.benchmark_variables(
                transcript, segments, 0.0, record.qa_duration_s()
            )
        except (DataError, OSError) as exc:
            exclusions.append({"conference_id": record.conference_id, "reason": str(exc)})
            log.warning("conference %s excluded from attention table: %s",
                        record.conference_id, exc)
            continue
        rows.append(
            {
                "conference_id": record.conference_id,
                "date": record.date.isoformat(),
                "attention_integral": integral,
                "log_attention": log_value,
                "reading_time_s": reading_time,
                "end_s": series.end_s,
                "observed_s": series.observed_s,
                "n_samples": len(series.samples),
                "n_gaps": len(series.gap_spans(cfg.attention.gap_factor)),
                "log_n_questions": benchmark.n_questions_log,
                "log_qa_duration": benchmark.duration_qa_log,
                "log_chair_speech": benchmark.duration_chair_speech_log,
            }
        )

    # First differences across surviving conferences in date order; the
    # first survivor has no delta.
    delta_sources = {
        "delta_log_attention": "log_attention",
        "delta_log_n_questions": "log_n_questions",
        "delta_log_qa_duration": "log_qa_duration",
        "delta_log_chair_speech": "log_chair_speech",
    }
    for i, row in enumerate(rows):
        for delta_col, source in delta_sources.items():
            row[delta_col] = rows[i][source] - rows[i - 1][source] if i > 0 else None

    columns = [
        "conference_id", "date", "attention_integral", "log_attention",
        "delta_log_attention", "reading_time_s", "end_s", "observed_s",
        "n_samples", "n_gaps", "log_n_questions", "log_qa_duration",
        "log_chair_speech", "delta_log_n_questions", "delta_log_qa_duration",
        "delta_log_chair_speech",
    ]
    buf = io.StringIO()
    buf.write(f"# {output.meta_line(digest)}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for col in columns:
            value = row[col]
            if value is None:
                cells.append("")
            elif isinstance(value, float):
                cells.append(repr(float(value)))
            else:
                cells.append(str(value))
        buf.write(",".join(cells) + "\n")
    output.write_text(out_dir / "attention.csv", buf.getvalue(), digest)

    diagnostics = {"exclusions": exclusions, "floored": floored, "n_rows": len(rows)}
    output.write_json(out_dir / "diagnostics" / "attention.json", diagnostics, digest)
    return diagnostics


def read_attention_csv(path: Path) -> list[dict]:
    import csv as _csv

    with open(path, "r", encoding="utf-8") as fh:
        reader = _csv.DictReader(line for line in fh if not line.startswith("#"))
        rows = []
        for raw in reader:
            row: dict = {}
            for key, value in raw.items():
                if key in ("conference_id", "date"):
                    row[key] = value
                elif key in ("n_samples", "n_gaps"):
                    row[key] = int(value)
                else:
                    row[key] = float(value) if value not in ("", None) else None
            rows.append(row)
    return rows


def stage_eventstudy(cfg: RunConfig, out_dir: Path, jobs: int = 1) -> dict:
    records = {r.conference_id: r for r in load_registry(cfg.registry)}
    digest = cfg.digest()
    attention_path = out_dir / "attention.csv"
    if not attention_path.exists():
        raise ConfigError("missing attention table: run the attention stage first")
    rows = read_attention_csv(attention_path)

    window_rows: list[dict] = []
    exclusions: list[dict] = []
    series_cache: dict[Path, market.PriceSeries] = {}
    for row in rows:
        record = records.get(row["conference_id"])
        if record is None:
            exclusions.append(
                {"conference_id": row["conference_id"], "reason": "not in registry"}
            )
            continue
        close = record.trading_close
        if close is None:
            close = datetime.combine(
                record.date, cfg.market.trading_close, tzinfo=record.qa_start.tzinfo
            )
        try:
            timeline = market.build_timeline(record.qa_start, record.conference_end, close)
            if record.prices not in series_cache:
                series_cache[record.prices] = market.read_price_csv(record.prices)
            stats = market.event_window_stats(
                series_cache[record.prices], timeline, record.conference_id
            )
        except (DataError, ConfigError, OSError) as exc:
            exclusions.append({"conference_id": row["conference_id"], "reason": str(exc)})
            log.warning("conference %s excluded from event study: %s",
                        row["conference_id"], exc)
            continue
        merged = dict(row)
        merged.update(
            {
                "return_during": stats.return_during,
                "return_after": stats.return_after,
                "vol_before": stats.vol_before,
                "vol_after": stats.vol_after,
                "vol_change": stats.vol_change,
                "vol_change_x100": stats.vol_change * 100.0,
                "n_returns_before": stats.n_returns_before,
                "n_returns_after": stats.n_returns_after,
            }
        )
        window_rows.append(merged)

    window_columns = [
        "conference_id", "date", "return_during", "return_after", "vol_before",
        "vol_after", "vol_change", "n_returns_before", "n_returns_after",
    ]
    buf = io.StringIO()
    buf.write(f"# {output.meta_line(digest)}\n")
    buf.write(",".join(window_columns) + "\n")
    for row in window_rows:
        cells = [
            repr(float(row[col])) if isinstance(row[col], float) else str(row[col])
            for col in window_columns
        ]
        buf.write(",".join(cells) + "\n")
    output.write_text(out_dir / "windows.csv", buf.getvalue(), digest)

    usable = [r for r in window_rows if r["delta_log_attention"] is not None]
    if len(usable) < 3:
        raise InsufficientDataError(
            f"only {len(usable)} usable conferences with deltas and price coverage; "
            "need at least 3"
        )

    tables: dict[str, list[dict]] = {}
    for dependent in DEPENDENT_COLUMNS:
        results = []
        for covariate in COVARIATE_COLUMNS:
            pairs = [
                (r[dependent], r[covariate], r["conference_id"])
                for r in usable
                if r[covariate] is not None
            ]
            data = regression.RegressionInput(
                y=np.array([p[0] for p in pairs]),
                x=np.array([p[1] for p in pairs]),
                labels=tuple(p[2] for p in pairs),
            )
            results.append(regression.ols_univariate(data))
        text = regression.render_table(results, dependent, COVARIATE_COLUMNS)
        print(text)
        rows_out = regression.table_rows(results, dependent, COVARIATE_COLUMNS)
        tables[dependent] = rows_out

        output.write_text(
            out_dir / "tables" / f"{dependent}.txt",
            f"# {output.meta_line(digest)}\n" + text,
            digest,
        )
        csv_buf = io.StringIO()
        regression.write_table_csv(rows_out, csv_buf, meta_line=output.meta_line(digest))
        output.write_text(out_dir / "tables" / f"{dependent}.csv", csv_buf.getvalue(), digest)
        json_buf = io.StringIO()
        regression.write_table_json(rows_out, json_buf, meta=output.meta_dict(digest))
        output.write_text(out_dir / "tables" / f"{dependent}.json", json_buf.getvalue(), digest)

    diagnostics = {
        "exclusions": exclusions,
        "n_windows": len(window_rows),
        "n_regression_rows": len(usable),
        "standard_errors": "classical homoskedastic",
    }
    output.write_json(out_dir / "diagnostics" / "eventstudy.json", diagnostics, digest)
    return diagnostics


STAGE_FUNCTIONS = {
    "identify": stage_identify,
    "ear": stage_ear,
    "attention": stage_attention,
    "eventstudy": stage_eventstudy,
}


def run_stages(cfg: RunConfig, out_dir: Path, stages: Sequence[str], jobs: int = 1) -> None:
    digest = cfg.digest()
    output.write_json(out_dir / "run_config.json", {"config": cfg.digest_payload()}, digest)
    for stage in STAGES:
        if stage in stages:
            log.info("running stage %s", stage)
            STAGE_FUNCTIONS[stage](cfg, out_dir, jobs)


# ---------------------------------------------------------------------------
# Fixture building (synth subcommand)
# ---------------------------------------------------------------------------


def build_fixture(
    scenarios: Sequence[synth.ScenarioSpec],
    gallery_spec: synth.GallerySpec,
    out_dir: Path,
    study_truth: dict | None = None,
) -> None:
    """Write a complete fixture directory for a scenario suite."""
    ids = [s.conference_id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate conference ids in scenario suite")
    digest = output.config_digest(
        {
            "scenarios": [synth.scenario_to_dict(s) for s in scenarios],
            "gallery": {
                "labels": list(gallery_spec.labels),
                "cluster_radius": gallery_spec.cluster_radius,
                "separation": gallery_spec.separation,
                "entries_per_label": gallery_spec.entries_per_label,
                "queries_per_label": gallery_spec.queries_per_label,
                "seed": gallery_spec.seed,
            },
        }
    )

    gallery, _queries = synth.gen_gallery(
        gallery_spec.labels,
        gallery_spec.cluster_radius,
        gallery_spec.seed,
        separation=gallery_spec.separation,
        entries_per_label=gallery_spec.entries_per_label,
        queries_per_label=gallery_spec.queries_per_label,
    )
    buf = io.StringIO()
    identity.dump_gallery(gallery, buf, meta=output.meta_dict(digest))
    output.write_text(out_dir / "gallery.json", buf.getvalue(), digest)

    registry_entries = []
    truths: dict[str, dict] = {}
    for spec in scenarios:
        frames, landmark_truth = synth.gen_landmark_stream(spec, gallery_spec)
        bars, price_truth = synth.gen_price_series(spec)
        timeline = spec.resolved_timeline()

        buf = io.StringIO()
        geometry.write_landmark_stream(frames, buf, meta=output.meta_dict(digest))
        output.write_text(
            out_dir / "landmarks" / f"{spec.conference_id}.jsonl", buf.getvalue(), digest
        )
        buf = io.StringIO()
        market.write_price_csv(bars, buf, meta_line=output.meta_line(digest))
        output.write_text(
            out_dir / "prices" / f"{spec.conference_id}.csv", buf.getvalue(), digest
        )
        output.write_text(
            out_dir / "transcripts" / f"{spec.conference_id}.txt",
            synth.gen_transcript(spec),
            digest,
        )
        segments = att.SpeakerSegments(
            spec.conference_id, tuple(synth.speaker_segments_rows(spec))
        )
        buf = io.StringIO()
        att.write_segments_csv(segments, buf, meta_line=output.meta_line(digest))
        output.write_text(
            out_dir / "segments" / f"{spec.conference_id}.csv", buf.getvalue(), digest
        )

        registry_entries.append(
            {
                "conference_id": spec.conference_id,
                "date": spec.date.isoformat(),
                "qa_start": timeline.qa_start.isoformat(),
                "conference_end": timeline.conference_end.isoformat(),
                "trading_close": timeline.trading_close.isoformat(),
                "landmarks": f"landmarks/{spec.conference_id}.jsonl",
                "transcript": f"transcripts/{spec.conference_id}.txt",
                "segments": f"segments/{spec.conference_id}.csv",
                "prices": f"prices/{spec.conference_id}.csv",
            }
        )
        truths[spec.conference_id] = {
            "landmarks": landmark_truth.as_dict(),
            "prices": price_truth.as_dict(),
            "n_questions": spec.n_questions,
        }

    output.write_json(out_dir / "registry.json", {"conferences": registry_entries}, digest)
    truth_payload: dict = {"conferences": truths}
    if study_truth is not None:
        truth_payload["study"] = study_truth
    output.write_json(out_dir / "ground_truth.json", truth_payload, digest)


def run_synth(scenario_path: Path, out_dir: Path, seed_override: int | None = None) -> None:
    scenarios, gallery_spec, study_truth = synth.load_scenario_file(
        scenario_path, seed_override
    )
    build_fixture(scenarios, gallery_spec, out_dir, study_truth)
