"""Per-conference attention measures from gap-aware EAR time series.

The attention integral accumulates sub-threshold EAR values over the
conference as a left Riemann sum with a fixed step of one nominal frame
interval, so camera-away gaps (stretches with no samples) contribute
nothing.  Its natural log is first-differenced across consecutive
conferences to obtain a stationary regressor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DegenerateEyeError,
    DomainError,
    InsufficientDataError,
    MalformedRecordError,
)
from .geometry import EarSample, FaceLandmarkFrame, frame_ear

FLOOR_POLICIES = ("error", "epsilon_floor")
SPEAKER_TAGS = ("chair", "reporter")


@dataclass(frozen=True)
class AttentionConfig:
    """Threshold and gap handling for the attention integral.

    threshold is the EAR level below which the speaker counts as looking
    down; 0.2 is the conventional closed-eye boundary in the blink-detection
    literature.  Spacings larger than gap_factor nominal frame intervals are
    treated as gaps.  floor_policy governs conferences whose integral is 0:
    "error" refuses to take the log, "epsilon_floor" substitutes floor_value.
    """

    threshold: float = 0.2
    gap_factor: float = 3.0
    floor_policy: str = "error"
    floor_value: float = 1e-9

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ConfigError(f"threshold must be positive, got {self.threshold}")
        if self.gap_factor <= 1:
            raise ConfigError(f"gap_factor must be > 1, got {self.gap_factor}")
        if self.floor_policy not in FLOOR_POLICIES:
            raise ConfigError(
                f"floor_policy must be one of {FLOOR_POLICIES}, got {self.floor_policy!r}"
            )
        if self.floor_policy == "epsilon_floor" and self.floor_value <= 0:
            raise ConfigError(f"floor_value must be positive, got {self.floor_value}")


@dataclass(frozen=True)
class EarSeries:
    """Time-ordered EAR samples for one conference at a nominal frame rate."""

    conference_id: str
    samples: tuple[EarSample, ...]
    nominal_fps: float

    def __post_init__(self) -> None:
        if self.nominal_fps <= 0:
            raise ConfigError(f"nominal_fps must be positive, got {self.nominal_fps}")
        timestamps = np.array([s.timestamp for s in self.samples])
        if len(timestamps) > 1 and np.any(np.diff(timestamps) <= 0):
            raise MalformedRecordError(
                f"conference {self.conference_id!r}: timestamps not strictly increasing"
            )
        values = np.array([s.value for s in self.samples])
        if values.size and (np.any(values < 0) or not np.all(np.isfinite(values))):
            raise MalformedRecordError(
                f"conference {self.conference_id!r}: EAR values must be finite and >= 0"
            )

    @property
    def step(self) -> float:
        return 1.0 / self.nominal_fps

    def timestamps(self) -> np.ndarray:
        return np.array([s.timestamp for s in self.samples])

    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.samples])

    def gap_spans(self, gap_factor: float = 3.0) -> list[tuple[float, float]]:
        """Inter-sample spans wider than gap_factor nominal frame intervals."""
        ts = self.timestamps()
        if len(ts) < 2:
            return []
        cut = gap_factor * self.step
        spacings = np.diff(ts)
        return [
            (float(ts[i]), float(ts[i + 1]))
            for i in np.nonzero(spacings > cut)[0]
        ]

    @property
    def end_s(self) -> float:
        if not self.samples:
            raise DataError(f"conference {self.conference_id!r}: empty EAR series")
        return self.samples[-1].timestamp

    @property
    def observed_s(self) -> float:
        """Total sampled time: one nominal frame interval per sample."""
        return len(self.samples) * self.step


@dataclass(frozen=True)
class BenchmarkVariables:
    """Log complexity proxies: question count, Q&A length, chair speech time."""

    n_questions_log: float
    duration_qa_log: float
    duration_chair_speech_log: float


@dataclass(frozen=True)
class ConferenceAttention:
    """Attention summary for one conference, ready for the event study."""

    conference_id: str
    attention_integral: float
    log_attention: float
    reading_time_s: float
    end_s: float
    observed_s: float
    n_samples: int
    n_gaps: int
    benchmark: BenchmarkVariables | None = None


@dataclass(frozen=True)
class SpeakerSegments:
    """Non-overlapping, time-ordered speaker turns within one conference."""

    conference_id: str
    segments: tuple[tuple[float, float, str], ...]

    def __post_init__(self) -> None:
        prev_end = -math.inf
        for start, end, tag in self.segments:
            if tag not in SPEAKER_TAGS:
                raise MalformedRecordError(
                    f"conference {self.conference_id!r}: unknown speaker tag {tag!r}"
                )
            if end <= start:
                raise MalformedRecordError(
                    f"conference {self.conference_id!r}: segment ends at or before its start"
                )
            if start < prev_end:
                raise MalformedRecordError(
                    f"conference {self.conference_id!r}: segments overlap or are out of order"
                )
            prev_end = end

    def speaker_seconds(self, tag: str) -> float:
        return sum(end - start for start, end, t in self.segments if t == tag)


def integrate_attention(
    series: EarSeries, config: AttentionConfig
) -> tuple[float, float]:
    """Attention integral and sub-threshold time for one conference.

    Returns (integral, reading_time_s): the integral sums value * step over
    samples strictly below the threshold; reading_time_s counts step seconds
    per such sample.  Gaps contribute nothing because only samples are
    summed.
    """
    if not series.samples:
        raise DataError(f"conference {series.conference_id!r}: empty EAR series")
    values = series.values()
    below = values < config.threshold
    integral = float(values[below].sum() * series.step)
    reading_time = float(below.sum() * series.step)
    return integral, reading_time


def log_attention_level(
    integral: float, config: AttentionConfig, conference_id: str = ""
) -> float:
    """Natural log of the attention integral, honoring the floor policy."""
    if integral > 0 and math.isfinite(integral):
        if config.floor_policy == "epsilon_floor":
            return math.log(max(integral, config.floor_value))
        return math.log(integral)
    if config.floor_policy == "epsilon_floor":
        return math.log(config.floor_value)
    raise DomainError(
        f"conference {conference_id!r}: attention integral {integral} has no log; "
        "configure an epsilon_floor policy or exclude the conference"
    )


def delta_series(values: Sequence[float]) -> np.ndarray:
    """First differences of a date-ordered per-conference sequence.

    The output has one fewer element than the input; the first conference
    has no delta.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise InsufficientDataError(
            f"need at least 2 ordered values to difference, got {arr.size}"
        )
    return np.diff(arr)


def benchmark_variables(
    transcript: str,
    segments: SpeakerSegments,
    qa_start_s: float,
    qa_end_s: float,
) -> BenchmarkVariables:
    """Log question count, log Q&A duration, log chair speaking time."""
    if qa_end_s <= qa_start_s:
        raise ConfigError(
            f"conference {segments.conference_id!r}: qa_end_s must exceed qa_start_s"
        )
    n_questions = transcript.count("?")
    if n_questions == 0:
        raise DomainError(
            f"conference {segments.conference_id!r}: transcript contains no questions; "
            "log question count undefined"
        )
    chair_seconds = segments.speaker_seconds("chair")
    if chair_seconds <= 0:
        raise DomainError(
            f"conference {segments.conference_id!r}: no chair speaking time; "
            "log duration undefined"
        )
    return BenchmarkVariables(
        n_questions_log=math.log(n_questions),
        duration_qa_log=math.log(qa_end_s - qa_start_s),
        duration_chair_speech_log=math.log(chair_seconds),
    )


def build_ear_samples(
    frames: Iterable[FaceLandmarkFrame],
) -> tuple[list[EarSample], int]:
    """Per-frame EAR samples, dropping (and counting) degenerate frames."""
    samples: list[EarSample] = []
    dropped = 0
    for frame in frames:
        try:
            samples.append(frame_ear(frame))
        except DegenerateEyeError:
            dropped += 1
    return samples, dropped


def estimate_fps(samples: Sequence[EarSample]) -> float:
    """Nominal frame rate as the reciprocal of the median sample spacing."""
    if len(samples) < 2:
        raise InsufficientDataError(
            f"need at least 2 samples to estimate the frame rate, got {len(samples)}"
        )
    spacings = np.diff([s.timestamp for s in samples])
    med = float(np.median(spacings))
    if med <= 0:
        raise MalformedRecordError("non-increasing timestamps in EAR samples")
    return 1.0 / med


def series_from_samples(
    conference_id: str,
    samples: Sequence[EarSample],
    nominal_fps: float | None = None,
) -> EarSeries:
    fps = nominal_fps if nominal_fps is not None else estimate_fps(samples)
    return EarSeries(conference_id, tuple(samples), fps)


def summarize_conference(
    series: EarSeries,
    config: AttentionConfig,
    benchmark: BenchmarkVariables | None = None,
) -> ConferenceAttention:
    integral, reading_time = integrate_attention(series, config)
    return ConferenceAttention(
        conference_id=series.conference_id,
        attention_integral=integral,
        log_attention=log_attention_level(integral, config, series.conference_id),
        reading_time_s=reading_time,
        end_s=series.end_s,
        observed_s=series.observed_s,
        n_samples=len(series.samples),
        n_gaps=len(series.gap_spans(config.gap_factor)),
        benchmark=benchmark,
    )


# ---------------------------------------------------------------------------
# CSV formats: EAR series ("timestamp_s,ear") and speaker segments
# ("start_s,end_s,speaker").  Lines starting with '#' are metadata comments.
# ---------------------------------------------------------------------------


def write_ear_csv(samples: Iterable[EarSample], fh, meta_line: str | None = None) -> int:
    if meta_line is not None:
        fh.write(f"# {meta_line}\n")
    fh.write("timestamp_s,ear\n")
    count = 0
    for sample in samples:
        fh.write(f"{float(sample.timestamp)!r},{float(sample.value)!r}\n")
        count += 1
    return count


def read_ear_csv(path: str | Path) -> list[EarSample]:
    samples: list[EarSample] = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["timestamp_s", "ear"]:
            raise MalformedRecordError(f"{path}: expected 'timestamp_s,ear' header")
        for row in reader:
            if not row:
                continue
            try:
                samples.append(EarSample(float(row[0]), float(row[1])))
            except (IndexError, ValueError) as exc:
                raise MalformedRecordError(f"{path}: bad EAR row {row!r}") from exc
    return samples


def read_segments_csv(path: str | Path, conference_id: str) -> SpeakerSegments:
    rows: list[tuple[float, float, str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["start_s", "end_s", "speaker"]:
            raise MalformedRecordError(f"{path}: expected 'start_s,end_s,speaker' header")
        for row in reader:
            if not row:
                continue
            try:
                rows.append((float(row[0]), float(row[1]), row[2].strip()))
            except (IndexError, ValueError) as exc:
                raise MalformedRecordError(f"{path}: bad segment row {row!r}") from exc
    return SpeakerSegments(conference_id, tuple(rows))


def write_segments_csv(segments: SpeakerSegments, fh, meta_line: str | None = None) -> None:
    if meta_line is not None:
        fh.write(f"# {meta_line}\n")
    fh.write("start_s,end_s,speaker\n")
    for start, end, tag in segments.segments:
        fh.write(f"{float(start)!r},{float(end)!r},{tag}\n")
