"""Seeded synthetic fixtures: landmark streams, galleries, and price paths.

Every generator is a pure function of its spec and seed (PCG64 streams via
numpy's Generator, which is explicitly specified and platform-stable), so
fixtures are byte-reproducible.  Landmark geometry inverts the EAR formula
with a fixed 30 px horizontal eye span and symmetric lids, so a scripted
EAR level maps to exact vertical lid offsets.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from datetime import date as dt_date
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ScenarioError
from .geometry import EMBEDDING_DIM, FaceLandmarkFrame, LEFT_EYE_INDICES, Point2, RIGHT_EYE_INDICES
from .identity import Gallery, GalleryEntry
from .market import PriceBar, parse_instant

EYE_SPAN_PX = 30.0
DEFAULT_TZ = timezone(timedelta(hours=-4))


@dataclass(frozen=True)
class ReadingEpisode:
    start_s: float
    end_s: float
    ear_level: float


@dataclass(frozen=True)
class ScriptInterval:
    start_s: float
    end_s: float
    label: str


@dataclass(frozen=True)
class PriceSpec:
    base_price: float = 3000.0
    minute_vol: float = 0.001
    drift_during_qa: float = 0.0
    vol_after_factor: float = 1.0


@dataclass(frozen=True)
class TimelineSpec:
    qa_start: datetime
    conference_end: datetime
    trading_close: datetime


@dataclass(frozen=True)
class GallerySpec:
    labels: tuple[str, ...] = ("chair", "reporter")
    cluster_radius: float = 0.05
    separation: float = 1.0
    entries_per_label: int = 8
    queries_per_label: int = 4
    seed: int = 0


@dataclass(frozen=True)
class ScenarioSpec:
    """One synthetic conference: EAR script, identity script, and prices."""

    conference_id: str
    seed: int
    date: dt_date
    fps: float
    conference_length_s: float
    reading_episodes: tuple[ReadingEpisode, ...] = ()
    baseline_ear: float = 0.30
    blink_rate_hz: float = 0.0
    gap_intervals: tuple[tuple[float, float], ...] = ()
    identity_script: tuple[ScriptInterval, ...] = ()
    target_label: str = "chair"
    n_questions: int = 20
    price_spec: PriceSpec = field(default_factory=PriceSpec)
    timeline: TimelineSpec | None = None

    def __post_init__(self) -> None:
        validate_scenario(self)

    def resolved_timeline(self) -> TimelineSpec:
        if self.timeline is not None:
            return self.timeline
        qa_start = datetime.combine(
            self.date, datetime.min.time(), tzinfo=DEFAULT_TZ
        ) + timedelta(hours=14, minutes=30)
        return TimelineSpec(
            qa_start=qa_start,
            conference_end=qa_start + timedelta(seconds=self.conference_length_s),
            trading_close=qa_start.replace(hour=16, minute=0, second=0, microsecond=0),
        )


@dataclass(frozen=True)
class LandmarkTruth:
    """Exact script bookkeeping for one generated landmark stream."""

    conference_id: str
    fps: float
    baseline_ear: float
    episodes: tuple[ReadingEpisode, ...]
    target_seconds: float
    n_frames: int
    n_target_frames: int
    n_blink_frames: int

    def as_dict(self) -> dict:
        return {
            "conference_id": self.conference_id,
            "fps": self.fps,
            "baseline_ear": self.baseline_ear,
            "episodes": [
                {"start_s": e.start_s, "end_s": e.end_s, "ear_level": e.ear_level}
                for e in self.episodes
            ],
            "target_seconds": self.target_seconds,
            "n_frames": self.n_frames,
            "n_target_frames": self.n_target_frames,
            "n_blink_frames": self.n_blink_frames,
        }


@dataclass(frozen=True)
class PriceTruth:
    """Population parameters behind one generated price path."""

    conference_id: str
    minute_vol: float
    vol_after_factor: float
    drift_during_qa: float
    n_qa_steps: int
    expected_return_during: float
    n_bars: int

    def as_dict(self) -> dict:
        return {
            "conference_id": self.conference_id,
            "minute_vol": self.minute_vol,
            "vol_after_factor": self.vol_after_factor,
            "drift_during_qa": self.drift_during_qa,
            "n_qa_steps": self.n_qa_steps,
            "expected_return_during": self.expected_return_during,
            "n_bars": self.n_bars,
        }


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------


def _merge_intervals(intervals: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[tuple[float, float]] = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def _measure(intervals: Sequence[tuple[float, float]]) -> float:
    return sum(end - start for start, end in _merge_intervals(intervals))


def _overlaps(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def validate_scenario(spec: ScenarioSpec) -> None:
    if spec.fps <= 0:
        raise ScenarioError(f"{spec.conference_id}: fps must be positive")
    if spec.conference_length_s <= 0:
        raise ScenarioError(f"{spec.conference_id}: conference_length_s must be positive")
    if spec.baseline_ear <= 0:
        raise ScenarioError(f"{spec.conference_id}: baseline_ear must be positive")
    if spec.blink_rate_hz < 0:
        raise ScenarioError(f"{spec.conference_id}: blink_rate_hz must be nonnegative")
    if spec.n_questions < 1:
        raise ScenarioError(f"{spec.conference_id}: n_questions must be >= 1")

    length = spec.conference_length_s
    episodes = sorted(spec.reading_episodes, key=lambda e: e.start_s)
    for ep in episodes:
        if not (0 <= ep.start_s < ep.end_s <= length):
            raise ScenarioError(
                f"{spec.conference_id}: episode ({ep.start_s}, {ep.end_s}) outside conference"
            )
        if not (0 <= ep.ear_level < spec.baseline_ear):
            raise ScenarioError(
                f"{spec.conference_id}: episode level {ep.ear_level} must be in "
                f"[0, baseline {spec.baseline_ear})"
            )
    for first, second in zip(episodes, episodes[1:]):
        if second.start_s < first.end_s:
            raise ScenarioError(f"{spec.conference_id}: reading episodes overlap")

    gaps = sorted(spec.gap_intervals)
    for start, end in gaps:
        if not (0 <= start < end <= length):
            raise ScenarioError(
                f"{spec.conference_id}: gap ({start}, {end}) outside conference"
            )
    for first, second in zip(gaps, gaps[1:]):
        if second[0] < first[1]:
            raise ScenarioError(f"{spec.conference_id}: gap intervals overlap")

    non_target = [
        (iv.start_s, iv.end_s) for iv in spec.identity_script if iv.label != spec.target_label
    ]
    for iv in spec.identity_script:
        if not (0 <= iv.start_s < iv.end_s <= length):
            raise ScenarioError(
                f"{spec.conference_id}: identity interval ({iv.start_s}, {iv.end_s}) "
                "outside conference"
            )
    script = sorted(spec.identity_script, key=lambda iv: iv.start_s)
    for first, second in zip(script, script[1:]):
        if second.start_s < first.end_s:
            raise ScenarioError(f"{spec.conference_id}: identity intervals overlap")

    # Episodes must stay observable: on target-labeled time and outside gaps,
    # otherwise the analytic ground truth would not match the stream.
    blocked = non_target + list(gaps)
    for ep in episodes:
        for block in blocked:
            if _overlaps((ep.start_s, ep.end_s), block):
                raise ScenarioError(
                    f"{spec.conference_id}: episode ({ep.start_s}, {ep.end_s}) overlaps "
                    "a gap or an off-target interval"
                )

    if spec.timeline is not None:
        tl = spec.timeline
        for instant in (tl.qa_start, tl.conference_end, tl.trading_close):
            if instant.tzinfo is None:
                raise ScenarioError(f"{spec.conference_id}: timeline instants need timezones")
        if not (tl.qa_start < tl.conference_end < tl.trading_close):
            raise ScenarioError(f"{spec.conference_id}: timeline instants out of order")
        span = (tl.conference_end - tl.qa_start).total_seconds()
        if abs(span - length) > 1e-6:
            raise ScenarioError(
                f"{spec.conference_id}: timeline span {span}s disagrees with "
                f"conference_length_s {length}"
            )


# ---------------------------------------------------------------------------
# Identity cluster geometry
# ---------------------------------------------------------------------------


def _label_seed(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "big")


def cluster_center(label: str, separation: float) -> np.ndarray:
    """Deterministic per-label cluster center, independent of the label set.

    Random 128-dim unit directions are nearly orthogonal (pairwise distance
    ~ sqrt(2)), so scaling by separation/sqrt(2) puts any two labels about
    `separation` apart.
    """
    rng = np.random.Generator(np.random.PCG64(_label_seed(label)))
    direction = rng.normal(size=EMBEDDING_DIM)
    direction /= np.linalg.norm(direction)
    return direction * (separation / math.sqrt(2.0))


def _check_separation(labels: Sequence[str], separation: float, cluster_radius: float) -> None:
    centers = [cluster_center(label, separation) for label in labels]
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            dist = float(np.linalg.norm(centers[i] - centers[j]))
            if dist <= 4.0 * cluster_radius:
                raise ScenarioError(
                    f"cluster centers for {labels[i]!r} and {labels[j]!r} are only "
                    f"{dist:.4f} apart; need > {4.0 * cluster_radius:.4f}"
                )


def _cluster_draw(
    rng: np.random.Generator, center: np.ndarray, cluster_radius: float
) -> np.ndarray:
    scale = cluster_radius / math.sqrt(EMBEDDING_DIM)
    return center + rng.normal(scale=scale, size=EMBEDDING_DIM)


def gen_gallery(
    labels: Sequence[str],
    cluster_radius: float,
    seed: int,
    separation: float = 1.0,
    entries_per_label: int = 8,
    queries_per_label: int = 4,
) -> tuple[Gallery, list[tuple[str, np.ndarray]]]:
    """Per-label Gaussian clusters plus held-out queries labeled by cluster."""
    if not labels:
        raise ScenarioError("gallery needs at least one label")
    if cluster_radius <= 0:
        raise ScenarioError("cluster_radius must be positive")
    _check_separation(list(labels), separation, cluster_radius)

    rng = np.random.Generator(np.random.PCG64(seed))
    entries: list[GalleryEntry] = []
    queries: list[tuple[str, np.ndarray]] = []
    for label in labels:
        center = cluster_center(label, separation)
        for _ in range(entries_per_label):
            entries.append(GalleryEntry(label, _cluster_draw(rng, center, cluster_radius)))
        for _ in range(queries_per_label):
            queries.append((label, _cluster_draw(rng, center, cluster_radius)))
    return Gallery(tuple(entries)), queries


# ---------------------------------------------------------------------------
# Landmark stream generation
# ---------------------------------------------------------------------------


def _face_template() -> list[Point2]:
    """Fixed 68-point base face; the eye groups get overwritten per frame."""
    pts: list[Point2] = []
    for i in range(17):  # jaw arc
        angle = math.pi * (1.0 - i / 16.0)
        pts.append(Point2(150.0 + 90.0 * math.cos(angle), 180.0 + 95.0 * math.sin(angle)))
    for i in range(10):  # brows
        side = 0 if i < 5 else 1
        pts.append(Point2(95.0 + 80.0 * side + 12.0 * (i % 5), 120.0))
    for i in range(9):  # nose bridge and base
        pts.append(Point2(150.0 + (i - 4) * 4.0, 150.0 + min(i, 4) * 8.0))
    for i in range(12):  # eye slots, overwritten
        pts.append(Point2(0.0, 0.0))
    for i in range(20):  # mouth ring
        angle = 2.0 * math.pi * i / 20.0
        pts.append(Point2(150.0 + 28.0 * math.cos(angle), 235.0 + 12.0 * math.sin(angle)))
    return pts


_TEMPLATE = _face_template()
_LEFT_EYE_ORIGIN = (105.0, 160.0)
_RIGHT_EYE_ORIGIN = (165.0, 160.0)


def eye_points_for_level(ear_level: float, origin: tuple[float, float]) -> list[Point2]:
    """Six eye landmarks whose EAR is exactly ear_level.

    Horizontal span fixed at EYE_SPAN_PX with symmetric lids at vertical
    offset h, so EAR = 4h / (2 * span) and h = ear_level * span / 2.
    """
    x0, y0 = origin
    h = ear_level * EYE_SPAN_PX / 2.0
    return [
        Point2(x0, y0),
        Point2(x0 + 10.0, y0 + h),
        Point2(x0 + 20.0, y0 + h),
        Point2(x0 + EYE_SPAN_PX, y0),
        Point2(x0 + 20.0, y0 - h),
        Point2(x0 + 10.0, y0 - h),
    ]


def frame_points_for_level(ear_level: float) -> tuple[Point2, ...]:
    pts = list(_TEMPLATE)
    for idx, point in zip(LEFT_EYE_INDICES, eye_points_for_level(ear_level, _LEFT_EYE_ORIGIN)):
        pts[idx] = point
    for idx, point in zip(RIGHT_EYE_INDICES, eye_points_for_level(ear_level, _RIGHT_EYE_ORIGIN)):
        pts[idx] = point
    return tuple(pts)


def _round_floats(values: np.ndarray, places: int) -> np.ndarray:
    return np.round(values, places)


def gen_landmark_stream(
    spec: ScenarioSpec,
    gallery_spec: GallerySpec | None = None,
) -> tuple[list[FaceLandmarkFrame], LandmarkTruth]:
    """Frames whose EAR follows the scenario script exactly.

    Frame k carries the timestamp (k+1)/fps (the end of its frame interval)
    and takes the script level prevailing at the interval midpoint; gap
    intervals emit no frames.  Embeddings are drawn from the scripted
    identity's cluster.  Blinks (single-frame EAR 0 dips) only occur on
    baseline target frames so episode bookkeeping stays exact.
    """
    gspec = gallery_spec or GallerySpec(
        labels=tuple(
            sorted({spec.target_label} | {iv.label for iv in spec.identity_script})
        )
    )
    _check_separation(list(gspec.labels), gspec.separation, gspec.cluster_radius)
    centers = {label: cluster_center(label, gspec.separation) for label in gspec.labels}
    if spec.target_label not in centers:
        raise ScenarioError(
            f"{spec.conference_id}: target label {spec.target_label!r} not in gallery labels"
        )

    seq = np.random.SeedSequence(spec.seed)
    ss_embed, ss_blink = seq.spawn(2)
    rng_embed = np.random.Generator(np.random.PCG64(ss_embed))
    rng_blink = np.random.Generator(np.random.PCG64(ss_blink))

    dt = 1.0 / spec.fps
    n_grid = round(spec.conference_length_s * spec.fps)
    episodes = sorted(spec.reading_episodes, key=lambda e: e.start_s)
    gaps = sorted(spec.gap_intervals)
    script = sorted(spec.identity_script, key=lambda iv: iv.start_s)

    frames: list[FaceLandmarkFrame] = []
    n_target = 0
    n_blinks = 0
    points_cache: dict[float, tuple[Point2, ...]] = {}

    for k in range(n_grid):
        timestamp = (k + 1) * dt
        midpoint = timestamp - dt / 2.0
        if any(start <= midpoint < end for start, end in gaps):
            continue
        label = spec.target_label
        for iv in script:
            if iv.start_s <= midpoint < iv.end_s:
                label = iv.label
                break

        level = spec.baseline_ear
        in_episode = False
        for ep in episodes:
            if ep.start_s <= midpoint < ep.end_s:
                level = ep.ear_level
                in_episode = True
                break
        if (
            not in_episode
            and label == spec.target_label
            and spec.blink_rate_hz > 0
            and rng_blink.random() < spec.blink_rate_hz * dt
        ):
            level = 0.0
            n_blinks += 1

        if label == spec.target_label:
            n_target += 1
        if level not in points_cache:
            points_cache[level] = frame_points_for_level(level)
        embedding = _round_floats(
            _cluster_draw(rng_embed, centers[label], gspec.cluster_radius), 5
        )
        frames.append(
            FaceLandmarkFrame(
                conference_id=spec.conference_id,
                frame_index=k,
                timestamp=timestamp,
                points=points_cache[level],
                embedding=embedding,
            )
        )

    non_target = [
        (iv.start_s, iv.end_s) for iv in script if iv.label != spec.target_label
    ]
    removed = _measure(non_target + list(gaps))
    truth = LandmarkTruth(
        conference_id=spec.conference_id,
        fps=spec.fps,
        baseline_ear=spec.baseline_ear,
        episodes=tuple(episodes),
        target_seconds=spec.conference_length_s - removed,
        n_frames=len(frames),
        n_target_frames=n_target,
        n_blink_frames=n_blinks,
    )
    return frames, truth


def analytic_attention(truth: LandmarkTruth, threshold: float) -> tuple[float, float]:
    """Continuous-limit attention integral and sub-threshold time.

    Blink dips carry one frame each and vanish in the continuous limit, so
    they are ignored here; recovery tests use blink-free scenarios.
    """
    episode_seconds = sum(e.end_s - e.start_s for e in truth.episodes)
    integral = sum(
        e.ear_level * (e.end_s - e.start_s) for e in truth.episodes if e.ear_level < threshold
    )
    reading = sum(
        (e.end_s - e.start_s) for e in truth.episodes if e.ear_level < threshold
    )
    if truth.baseline_ear < threshold:
        baseline_seconds = truth.target_seconds - episode_seconds
        integral += truth.baseline_ear * baseline_seconds
        reading += baseline_seconds
    return integral, reading


# ---------------------------------------------------------------------------
# Price path generation
# ---------------------------------------------------------------------------


def gen_price_series(spec: ScenarioSpec) -> tuple[list[PriceBar], PriceTruth]:
    """Minute bars from 120 minutes before the Q&A through the close.

    Log prices follow a random walk with per-minute volatility; the scripted
    drift applies only to steps lying inside the Q&A window, and volatility
    after the conference end is scaled by vol_after_factor.
    """
    tl = spec.resolved_timeline()
    ps = spec.price_spec
    if ps.base_price <= 0:
        raise ScenarioError(f"{spec.conference_id}: base_price must be positive")
    if ps.minute_vol < 0 or ps.vol_after_factor < 0:
        raise ScenarioError(f"{spec.conference_id}: volatilities must be nonnegative")

    window_open = tl.qa_start - timedelta(minutes=120)
    n_steps = int((tl.trading_close - window_open).total_seconds() // 60)
    seq = np.random.SeedSequence(spec.seed)
    rng = np.random.Generator(np.random.PCG64(seq.spawn(3)[2]))
    shocks = rng.normal(size=n_steps)

    bars = [PriceBar(window_open, ps.base_price)]
    log_price = math.log(ps.base_price)
    n_qa_steps = 0
    prev_time = window_open
    for k in range(n_steps):
        bar_time = window_open + timedelta(minutes=k + 1)
        in_qa = prev_time >= tl.qa_start and bar_time <= tl.conference_end
        after = prev_time >= tl.conference_end
        vol = ps.minute_vol * (ps.vol_after_factor if after else 1.0)
        drift = ps.drift_during_qa if in_qa else 0.0
        if in_qa:
            n_qa_steps += 1
        log_price += drift + vol * shocks[k]
        bars.append(PriceBar(bar_time, math.exp(log_price)))
        prev_time = bar_time

    truth = PriceTruth(
        conference_id=spec.conference_id,
        minute_vol=ps.minute_vol,
        vol_after_factor=ps.vol_after_factor,
        drift_during_qa=ps.drift_during_qa,
        n_qa_steps=n_qa_steps,
        expected_return_during=ps.drift_during_qa * n_qa_steps,
        n_bars=len(bars),
    )
    return bars, truth


# ---------------------------------------------------------------------------
# Transcript and speaker-segment scripts
# ---------------------------------------------------------------------------


def gen_transcript(spec: ScenarioSpec) -> str:
    lines = [f"Press conference {spec.conference_id}, prepared remarks omitted."]
    for i in range(spec.n_questions):
        lines.append(f"REPORTER {i + 1}: Could you expand on point {i + 1}?")
        lines.append(f"CHAIR: On point {i + 1}, the committee sees this as noted before.")
    return "\n".join(lines) + "\n"


def speaker_segments_rows(spec: ScenarioSpec) -> list[tuple[float, float, str]]:
    """Chair/reporter turns: reporter during off-target intervals, chair elsewhere."""
    rows: list[tuple[float, float, str]] = []
    cursor = 0.0
    for iv in sorted(spec.identity_script, key=lambda i: i.start_s):
        tag = "chair" if iv.label == spec.target_label else "reporter"
        if iv.start_s > cursor:
            rows.append((cursor, iv.start_s, "chair"))
        rows.append((iv.start_s, iv.end_s, tag))
        cursor = iv.end_s
    if cursor < spec.conference_length_s:
        rows.append((cursor, spec.conference_length_s, "chair"))
    # merge adjacent same-tag rows for tidiness
    merged: list[tuple[float, float, str]] = []
    for row in rows:
        if merged and merged[-1][2] == row[2] and merged[-1][1] == row[0]:
            merged[-1] = (merged[-1][0], row[1], row[2])
        else:
            merged.append(row)
    return merged


# ---------------------------------------------------------------------------
# Planted-effect study suites
# ---------------------------------------------------------------------------


def planted_study_scenarios(
    seed: int,
    n_conferences: int = 45,
    effect_slope: float = 0.005,
    effect_intercept: float = 0.0,
    target_r2: float = 0.3,
    episode_ear: float = 0.15,
    vol_drop_slope: float = -0.25,
    blink_rate_hz: float = 0.2,
) -> tuple[list[ScenarioSpec], GallerySpec, dict]:
    """Conference suite with a linear return effect planted on the
    log-difference of the attention integral.

    Per-minute Q&A drift carries the deterministic effect while the walk's
    own volatility provides the regression noise, calibrated so the
    population R^2 of the during-return regression is approximately
    target_r2.  The post-conference volatility factor falls with the same
    regressor, planting a negative volatility-change relationship.
    """
    if n_conferences < 3:
        raise ScenarioError("a planted study needs at least 3 conferences")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    u_half_width = 1.15
    mean_episode_s = 95.0
    log_mean = math.log(episode_ear * mean_episode_s)
    var_delta = 2.0 * u_half_width**2 / 3.0
    signal_sd = abs(effect_slope) * math.sqrt(var_delta)
    noise_sd = signal_sd * math.sqrt((1.0 - target_r2) / target_r2)
    mean_qa_minutes = 11.0
    minute_vol = noise_sd / math.sqrt(mean_qa_minutes)

    scenarios: list[ScenarioSpec] = []
    per_conference: dict[str, dict] = {}
    prev_log_attention: float | None = None

    for i in range(n_conferences):
        conf_id = f"conf-{i + 1:03d}"
        conf_date = dt_date(2011, 4, 27) + timedelta(days=49 * i)
        qa_minutes = int(rng.integers(8, 15))
        length_s = 60.0 * qa_minutes

        u = float(rng.uniform(-u_half_width, u_half_width))
        log_attention = log_mean + u
        episode_seconds = math.exp(log_attention) / episode_ear

        n_interludes = int(rng.integers(3, 6))
        slot = 120.0 / n_interludes
        interludes = []
        for j in range(n_interludes):
            dur = float(rng.uniform(8.0, min(20.0, slot - 2.0)))
            interludes.append(ScriptInterval(j * slot, j * slot + dur, "reporter"))
        episode = ReadingEpisode(130.0, 130.0 + episode_seconds, episode_ear)

        if prev_log_attention is None:
            delta = None
            drift = 0.0
            vol_after_factor = 0.7
        else:
            delta = log_attention - prev_log_attention
            drift = (effect_intercept + effect_slope * delta) / qa_minutes
            vol_after_factor = float(np.clip(0.7 * (1.0 + vol_drop_slope * delta), 0.2, 0.95))
        prev_log_attention = log_attention

        qa_start = datetime.combine(
            conf_date, datetime.min.time(), tzinfo=DEFAULT_TZ
        ) + timedelta(hours=14, minutes=30)
        timeline = TimelineSpec(
            qa_start=qa_start,
            conference_end=qa_start + timedelta(seconds=length_s),
            trading_close=qa_start.replace(hour=16, minute=0),
        )
        scenarios.append(
            ScenarioSpec(
                conference_id=conf_id,
                seed=int(np.random.SeedSequence([seed, 100 + i]).generate_state(1)[0]),
                date=conf_date,
                fps=1.0,
                conference_length_s=length_s,
                reading_episodes=(episode,),
                baseline_ear=0.30,
                blink_rate_hz=blink_rate_hz,
                identity_script=tuple(interludes),
                target_label="chair",
                n_questions=int(rng.integers(12, 41)),
                price_spec=PriceSpec(
                    base_price=3000.0,
                    minute_vol=minute_vol,
                    drift_during_qa=drift,
                    vol_after_factor=vol_after_factor,
                ),
                timeline=timeline,
            )
        )
        per_conference[conf_id] = {
            "target_log_attention": log_attention,
            "delta_log_attention": delta,
            "drift_during_qa": drift,
            "vol_after_factor": vol_after_factor,
            "qa_minutes": qa_minutes,
        }

    gallery_spec = GallerySpec(
        labels=("chair", "reporter"),
        seed=int(np.random.SeedSequence([seed, 1]).generate_state(1)[0]),
    )
    study_truth = {
        "effect_slope": effect_slope,
        "effect_intercept": effect_intercept,
        "target_r2": target_r2,
        "minute_vol": minute_vol,
        "vol_drop_slope": vol_drop_slope,
        "per_conference": per_conference,
    }
    return scenarios, gallery_spec, study_truth


# ---------------------------------------------------------------------------
# Scenario JSON (de)serialization
# ---------------------------------------------------------------------------


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    out: dict = {
        "conference_id": spec.conference_id,
        "seed": spec.seed,
        "date": spec.date.isoformat(),
        "fps": spec.fps,
        "conference_length_s": spec.conference_length_s,
        "baseline_ear": spec.baseline_ear,
        "blink_rate_hz": spec.blink_rate_hz,
        "reading_episodes": [
            {"start_s": e.start_s, "end_s": e.end_s, "ear_level": e.ear_level}
            for e in spec.reading_episodes
        ],
        "gap_intervals": [
            {"start_s": start, "end_s": end} for start, end in spec.gap_intervals
        ],
        "identity_script": [
            {"start_s": iv.start_s, "end_s": iv.end_s, "label": iv.label}
            for iv in spec.identity_script
        ],
        "target_label": spec.target_label,
        "n_questions": spec.n_questions,
        "price_spec": {
            "base_price": spec.price_spec.base_price,
            "minute_vol": spec.price_spec.minute_vol,
            "drift_during_qa": spec.price_spec.drift_during_qa,
            "vol_after_factor": spec.price_spec.vol_after_factor,
        },
    }
    if spec.timeline is not None:
        out["timeline"] = {
            "qa_start": spec.timeline.qa_start.isoformat(),
            "conference_end": spec.timeline.conference_end.isoformat(),
            "trading_close": spec.timeline.trading_close.isoformat(),
        }
    return out


def scenario_from_dict(raw: dict) -> ScenarioSpec:
    try:
        timeline = None
        if raw.get("timeline"):
            tl = raw["timeline"]
            timeline = TimelineSpec(
                qa_start=parse_instant(tl["qa_start"]),
                conference_end=parse_instant(tl["conference_end"]),
                trading_close=parse_instant(tl["trading_close"]),
            )
        price = raw.get("price_spec", {})
        return ScenarioSpec(
            conference_id=raw["conference_id"],
            seed=int(raw["seed"]),
            date=dt_date.fromisoformat(raw["date"]),
            fps=float(raw["fps"]),
            conference_length_s=float(raw["conference_length_s"]),
            reading_episodes=tuple(
                ReadingEpisode(float(e["start_s"]), float(e["end_s"]), float(e["ear_level"]))
                for e in raw.get("reading_episodes", [])
            ),
            baseline_ear=float(raw.get("baseline_ear", 0.30)),
            blink_rate_hz=float(raw.get("blink_rate_hz", 0.0)),
            gap_intervals=tuple(
                (float(g["start_s"]), float(g["end_s"])) for g in raw.get("gap_intervals", [])
            ),
            identity_script=tuple(
                ScriptInterval(float(iv["start_s"]), float(iv["end_s"]), iv["label"])
                for iv in raw.get("identity_script", [])
            ),
            target_label=raw.get("target_label", "chair"),
            n_questions=int(raw.get("n_questions", 20)),
            price_spec=PriceSpec(
                base_price=float(price.get("base_price", 3000.0)),
                minute_vol=float(price.get("minute_vol", 0.001)),
                drift_during_qa=float(price.get("drift_during_qa", 0.0)),
                vol_after_factor=float(price.get("vol_after_factor", 1.0)),
            ),
            timeline=timeline,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario object: {exc}") from exc


def gallery_spec_from_dict(raw: dict) -> GallerySpec:
    return GallerySpec(
        labels=tuple(raw.get("labels", ("chair", "reporter"))),
        cluster_radius=float(raw.get("cluster_radius", 0.05)),
        separation=float(raw.get("separation", 1.0)),
        entries_per_label=int(raw.get("entries_per_label", 8)),
        queries_per_label=int(raw.get("queries_per_label", 4)),
        seed=int(raw.get("seed", 0)),
    )


def load_scenario_file(
    path: str | Path, seed_override: int | None = None
) -> tuple[list[ScenarioSpec], GallerySpec, dict | None]:
    """Parse a scenario JSON file: single scenario, suite, or planted study."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)

    if "study" in raw:
        params = dict(raw["study"])
        if seed_override is not None:
            params["seed"] = seed_override
        params.setdefault("seed", 0)
        scenarios, gallery_spec, truth = planted_study_scenarios(**params)
        return scenarios, gallery_spec, truth

    if "scenarios" in raw:
        scenarios = [scenario_from_dict(s) for s in raw["scenarios"]]
        gallery_spec = gallery_spec_from_dict(raw.get("gallery", {}))
    else:
        scenarios = [scenario_from_dict(raw)]
        labels = sorted(
            {scenarios[0].target_label} | {iv.label for iv in scenarios[0].identity_script}
        )
        gallery_spec = gallery_spec_from_dict(raw.get("gallery", {"labels": labels}))

    if seed_override is not None:
        scenarios = [replace(s, seed=seed_override + i) for i, s in enumerate(scenarios)]
    ids = [s.conference_id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise ScenarioError("duplicate conference_id in scenario file")
    return scenarios, gallery_spec, None
