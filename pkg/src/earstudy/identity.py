"""Speaker identification by embedding distance and plurality voting.

A query face embedding is compared against a labeled gallery; every gallery
entry closer than a tolerance casts one vote for its label, and the query is
classified to the label with the strictly greatest vote total (or left
unknown on a tie or an insufficient total).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, MalformedRecordError
from .geometry import EMBEDDING_DIM, FaceLandmarkFrame

NO_EMBEDDING_POLICIES = ("drop", "assume_target")


@dataclass(frozen=True)
class GalleryEntry:
    label: str
    embedding: np.ndarray

    def __post_init__(self) -> None:
        if not self.label:
            raise MalformedRecordError("gallery entry with empty label")
        if self.embedding.shape != (EMBEDDING_DIM,):
            raise MalformedRecordError(
                f"gallery embedding for {self.label!r} must have {EMBEDDING_DIM} entries"
            )


@dataclass(frozen=True)
class Gallery:
    entries: tuple[GalleryEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ConfigError("gallery must contain at least one entry")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.entries)

    def matrix(self) -> np.ndarray:
        return np.stack([e.embedding for e in self.entries])


@dataclass(frozen=True)
class IdentityConfig:
    """Distance tolerance and vote quorum for classification."""

    epsilon: float
    min_votes: int = 1
    no_embedding_policy: str = "drop"

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.min_votes < 1:
            raise ConfigError(f"min_votes must be >= 1, got {self.min_votes}")
        if self.no_embedding_policy not in NO_EMBEDDING_POLICIES:
            raise ConfigError(
                f"no_embedding_policy must be one of {NO_EMBEDDING_POLICIES}, "
                f"got {self.no_embedding_policy!r}"
            )


@dataclass
class FilterDiagnostics:
    """Per-stream tally of how frames were routed by the identity filter.

    kept/rejected/unknown/no_embedding partition the input; written counts
    the output frames (kept plus, under assume_target, the no-embedding
    ones).
    """

    kept: int = 0
    rejected: int = 0
    unknown: int = 0
    no_embedding: int = 0
    written: int = 0

    @property
    def total(self) -> int:
        return self.kept + self.rejected + self.unknown + self.no_embedding

    def as_dict(self) -> dict:
        return {
            "kept": self.kept,
            "rejected": self.rejected,
            "unknown": self.unknown,
            "no_embedding": self.no_embedding,
            "written": self.written,
            "total": self.total,
        }


def embedding_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two 128-dim embeddings."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (EMBEDDING_DIM,) or b.shape != (EMBEDDING_DIM,):
        raise MalformedRecordError(
            f"embeddings must have {EMBEDDING_DIM} entries, got {a.shape} and {b.shape}"
        )
    return float(np.linalg.norm(a - b))


def vote_vector(query: np.ndarray, gallery: Gallery, epsilon: float) -> np.ndarray:
    """Binary vector: entry m is 1 iff the m-th gallery distance is < epsilon."""
    distances = np.array([embedding_distance(query, e.embedding) for e in gallery.entries])
    return (distances < epsilon).astype(int)


def _tally(votes: np.ndarray, labels: Sequence[str]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for label, vote in zip(labels, votes):
        counts[label] = counts.get(label, 0) + int(vote)
    return counts


def classify(query: np.ndarray, gallery: Gallery, config: IdentityConfig) -> str | None:
    """Plurality label of the in-tolerance votes, or None when unknown.

    None is returned when the top vote total falls short of the quorum or
    when two labels tie at the top.
    """
    votes = vote_vector(query, gallery, config.epsilon)
    counts = _tally(votes, gallery.labels)
    best = max(counts.values())
    if best < config.min_votes:
        return None
    winners = [label for label, count in counts.items() if count == best]
    if len(winners) != 1:
        return None
    return winners[0]


def filter_speaker_frames(
    frames: Iterable[FaceLandmarkFrame],
    gallery: Gallery,
    target_label: str,
    config: IdentityConfig,
) -> tuple[list[FaceLandmarkFrame], FilterDiagnostics]:
    """Keep only the frames classified as the target speaker, in order.

    Frames without an embedding follow config.no_embedding_policy: "drop"
    discards them, "assume_target" keeps them (for pre-filtered exports).
    """
    if target_label not in gallery.labels:
        raise ConfigError(f"gallery has no entries for target label {target_label!r}")

    matrix = gallery.matrix()
    labels = gallery.labels
    diag = FilterDiagnostics()
    kept: list[FaceLandmarkFrame] = []

    for frame in frames:
        if frame.embedding is None:
            diag.no_embedding += 1
            if config.no_embedding_policy == "assume_target":
                kept.append(frame)
            continue
        distances = np.linalg.norm(matrix - frame.embedding, axis=1)
        counts = _tally((distances < config.epsilon).astype(int), labels)
        best = max(counts.values())
        winners = [label for label, count in counts.items() if count == best]
        if best < config.min_votes or len(winners) != 1:
            diag.unknown += 1
        elif winners[0] == target_label:
            diag.kept += 1
            kept.append(frame)
        else:
            diag.rejected += 1
    diag.written = len(kept)
    return kept, diag


# ---------------------------------------------------------------------------
# Gallery file: JSON array of {"label": ..., "embedding": [128 numbers]}
# ---------------------------------------------------------------------------


def load_gallery(path: str | Path) -> Gallery:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read gallery file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedRecordError(f"gallery file {path}: invalid JSON") from exc
    if isinstance(raw, dict):
        raw = raw.get("entries", [])
    entries = []
    for item in raw:
        try:
            entries.append(
                GalleryEntry(item["label"], np.asarray(item["embedding"], dtype=float))
            )
        except (KeyError, TypeError) as exc:
            raise MalformedRecordError(f"gallery file {path}: bad entry: {exc}") from exc
    if not entries:
        raise ConfigError(f"gallery file {path} contains no entries")
    return Gallery(tuple(entries))


def dump_gallery(gallery: Gallery, fh, meta: dict | None = None) -> None:
    payload: dict = {}
    if meta is not None:
        payload["meta"] = meta
    payload["entries"] = [
        {"label": e.label, "embedding": [float(v) for v in e.embedding]}
        for e in gallery.entries
    ]
    json.dump(payload, fh, separators=(",", ":"))
    fh.write("\n")
