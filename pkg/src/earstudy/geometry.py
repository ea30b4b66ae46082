"""Landmark data model and per-frame eye-aspect-ratio computation.

The eye aspect ratio (EAR) of a 6-point eye contour is the sum of the two
vertical lid distances over twice the horizontal corner distance.  It is
high (~0.3) for an open eye and falls toward 0 as the eye closes or the
gaze drops to a document on the desk.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateEyeError, MalformedRecordError

# Eye groups in the standard 68-point landmark layout (zero-based),
# ordered outer corner, upper lid x2, inner corner, lower lid x2.
LEFT_EYE_INDICES: tuple[int, ...] = (36, 37, 38, 39, 40, 41)
RIGHT_EYE_INDICES: tuple[int, ...] = (42, 43, 44, 45, 46, 47)

LANDMARK_COUNT = 68
EMBEDDING_DIM = 128


class Point2(NamedTuple):
    x: float
    y: float


class EarSample(NamedTuple):
    """One EAR observation: seconds from conference start, ratio value."""

    timestamp: float
    value: float


@dataclass(frozen=True)
class EyeLandmarks:
    """The six contour points of one eye, corner-lid-lid-corner-lid-lid."""

    points: tuple[Point2, ...]

    def __post_init__(self) -> None:
        if len(self.points) != 6:
            raise MalformedRecordError(
                f"eye requires exactly 6 landmarks, got {len(self.points)}"
            )


@dataclass(frozen=True)
class FaceLandmarkFrame:
    """One video frame's 68 landmark points, with an optional face embedding."""

    conference_id: str
    frame_index: int
    timestamp: float
    points: tuple[Point2, ...]
    embedding: np.ndarray | None = None

    def __post_init__(self) -> None:
        if len(self.points) != LANDMARK_COUNT:
            raise MalformedRecordError(
                f"frame {self.frame_index}: expected {LANDMARK_COUNT} landmarks, "
                f"got {len(self.points)}"
            )
        if self.timestamp < 0:
            raise MalformedRecordError(
                f"frame {self.frame_index}: negative timestamp {self.timestamp}"
            )
        if self.embedding is not None and self.embedding.shape != (EMBEDDING_DIM,):
            raise MalformedRecordError(
                f"frame {self.frame_index}: embedding must have {EMBEDDING_DIM} "
                f"entries, got {self.embedding.shape}"
            )


def extract_eyes(
    frame: FaceLandmarkFrame,
    left_indices: Sequence[int] = LEFT_EYE_INDICES,
    right_indices: Sequence[int] = RIGHT_EYE_INDICES,
) -> tuple[EyeLandmarks, EyeLandmarks]:
    """Pick the two 6-point eye groups out of a 68-point frame."""
    pts = frame.points
    left = EyeLandmarks(tuple(pts[i] for i in left_indices))
    right = EyeLandmarks(tuple(pts[i] for i in right_indices))
    return left, right


def eye_ear(eye: EyeLandmarks) -> float:
    """EAR of one eye: (|l2-l6| + |l3-l5|) / (2 |l1-l4|)."""
    p1, p2, p3, p4, p5, p6 = eye.points
    horizontal = math.hypot(p1.x - p4.x, p1.y - p4.y)
    if horizontal == 0.0:
        raise DegenerateEyeError("zero horizontal eye span (corner landmarks coincide)")
    vertical = math.hypot(p2.x - p6.x, p2.y - p6.y) + math.hypot(p3.x - p5.x, p3.y - p5.y)
    return vertical / (2.0 * horizontal)


def frame_ear(
    frame: FaceLandmarkFrame,
    left_indices: Sequence[int] = LEFT_EYE_INDICES,
    right_indices: Sequence[int] = RIGHT_EYE_INDICES,
) -> EarSample:
    """Average EAR of both eyes at the frame's timestamp.

    Raises DegenerateEyeError if either eye has zero horizontal span; such
    frames are dropped (and tallied) by the series builder rather than
    imputed.
    """
    left, right = extract_eyes(frame, left_indices, right_indices)
    value = (eye_ear(left) + eye_ear(right)) / 2.0
    return EarSample(frame.timestamp, value)


# ---------------------------------------------------------------------------
# JSONL landmark streams
#
# One object per frame: conference_id, frame_index, timestamp_s, points (68
# [x, y] pairs), optional embedding (128 numbers).  Records are sorted by
# timestamp within a conference.  A leading {"_meta": ...} record written by
# pipeline stages is skipped on read.
# ---------------------------------------------------------------------------


def frame_to_record(frame: FaceLandmarkFrame) -> dict:
    record = {
        "conference_id": frame.conference_id,
        "frame_index": frame.frame_index,
        "timestamp_s": frame.timestamp,
        "points": [[p.x, p.y] for p in frame.points],
    }
    if frame.embedding is not None:
        record["embedding"] = [float(v) for v in frame.embedding]
    return record


def frame_from_record(record: dict, line_no: int | None = None) -> FaceLandmarkFrame:
    where = f"line {line_no}: " if line_no is not None else ""
    try:
        conference_id = record["conference_id"]
        frame_index = int(record["frame_index"])
        timestamp = float(record["timestamp_s"])
        raw_points = record["points"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecordError(f"{where}missing or invalid frame field: {exc}") from exc

    points = []
    for pair in raw_points:
        if len(pair) != 2:
            raise MalformedRecordError(f"{where}frame {frame_index}: point is not an [x, y] pair")
        x, y = float(pair[0]), float(pair[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MalformedRecordError(f"{where}frame {frame_index}: non-finite landmark")
        points.append(Point2(x, y))

    embedding = None
    if record.get("embedding") is not None:
        embedding = np.asarray(record["embedding"], dtype=float)
        if not np.all(np.isfinite(embedding)):
            raise MalformedRecordError(f"{where}frame {frame_index}: non-finite embedding")

    return FaceLandmarkFrame(
        conference_id=conference_id,
        frame_index=frame_index,
        timestamp=timestamp,
        points=tuple(points),
        embedding=embedding,
    )


def read_landmark_stream(path: str | Path) -> Iterator[FaceLandmarkFrame]:
    """Stream frames from a JSONL file, enforcing per-conference time order."""
    last_ts: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(f"{path}: line {line_no}: invalid JSON") from exc
            if "_meta" in record:
                continue
            frame = frame_from_record(record, line_no)
            prev = last_ts.get(frame.conference_id)
            if prev is not None and frame.timestamp < prev:
                raise MalformedRecordError(
                    f"{path}: line {line_no}: timestamps decrease within "
                    f"conference {frame.conference_id!r}"
                )
            last_ts[frame.conference_id] = frame.timestamp
            yield frame


def write_landmark_stream(
    frames: Iterable[FaceLandmarkFrame],
    fh: IO[str],
    meta: dict | None = None,
) -> int:
    """Write frames as JSONL, optionally preceded by a {"_meta": ...} record.

    Returns the number of frame records written.  Serialization is canonical
    (fixed key order, compact separators) so identical frames always produce
    identical bytes.
    """
    if meta is not None:
        fh.write(json.dumps({"_meta": meta}, separators=(",", ":")) + "\n")
    count = 0
    for frame in frames:
        fh.write(json.dumps(frame_to_record(frame), separators=(",", ":")) + "\n")
        count += 1
    return count
