"""Event timelines and intraday return/volatility windows from 1-minute bars.

Each conference defines four instants: a window opening two hours before
the Q&A, the Q&A start, the conference end, and the trading close.  Log
returns are measured during the Q&A and from its end to the close;
realized volatility is the root mean square of the 1-minute log returns
whose endpoints both fall inside the (open, close] window being measured.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ConfigError, CoverageError, MalformedRecordError

PRE_WINDOW = timedelta(minutes=120)


class PriceBar(NamedTuple):
    timestamp: datetime
    price: float


@dataclass(frozen=True)
class PriceSeries:
    """Strictly increasing minute bars with positive prices."""

    bars: tuple[PriceBar, ...]

    def __post_init__(self) -> None:
        prev: datetime | None = None
        for bar in self.bars:
            if bar.timestamp.tzinfo is None:
                raise MalformedRecordError(
                    f"price bar at {bar.timestamp} lacks a timezone designator"
                )
            if bar.price <= 0 or not math.isfinite(bar.price):
                raise MalformedRecordError(f"non-positive price {bar.price} at {bar.timestamp}")
            if prev is not None and bar.timestamp <= prev:
                raise MalformedRecordError(
                    f"price timestamps not strictly increasing at {bar.timestamp}"
                )
            prev = bar.timestamp

    def timestamps(self) -> list[datetime]:
        return [b.timestamp for b in self.bars]


@dataclass(frozen=True)
class ConferenceTimeline:
    """The four instants bounding a conference's event windows."""

    window_open: datetime
    qa_start: datetime
    conference_end: datetime
    trading_close: datetime

    def __post_init__(self) -> None:
        if not (
            self.window_open < self.qa_start < self.conference_end < self.trading_close
        ):
            raise ConfigError(
                "timeline instants must satisfy window_open < qa_start < "
                f"conference_end < trading_close, got {self}"
            )
        if self.qa_start - self.window_open != PRE_WINDOW:
            raise ConfigError("window_open must be exactly 120 minutes before qa_start")


@dataclass(frozen=True)
class EventWindowStats:
    """Returns and realized volatilities around one conference."""

    conference_id: str
    return_during: float
    return_after: float
    vol_before: float
    vol_after: float
    vol_change: float
    n_returns_before: int
    n_returns_after: int


def build_timeline(
    qa_start: datetime, conference_end: datetime, trading_close: datetime
) -> ConferenceTimeline:
    """Timeline with the pre-event window opening 120 minutes before the Q&A."""
    if not (qa_start < conference_end < trading_close):
        raise ConfigError(
            f"expected qa_start < conference_end < trading_close, got "
            f"{qa_start} / {conference_end} / {trading_close}"
        )
    return ConferenceTimeline(
        window_open=qa_start - PRE_WINDOW,
        qa_start=qa_start,
        conference_end=conference_end,
        trading_close=trading_close,
    )


def price_at(series: PriceSeries, t: datetime) -> float:
    """Price of the latest bar at or before t."""
    idx = bisect_right(series.timestamps(), t) - 1
    if idx < 0:
        raise CoverageError(f"no price bar at or before {t.isoformat()}")
    return series.bars[idx].price


def window_log_return(series: PriceSeries, t_from: datetime, t_to: datetime) -> float:
    """Natural-log return between the prices prevailing at two instants."""
    if t_from >= t_to:
        raise ConfigError(f"return window is empty or reversed: {t_from} .. {t_to}")
    return math.log(price_at(series, t_to) / price_at(series, t_from))


def window_returns(series: PriceSeries, t_from: datetime, t_to: datetime) -> np.ndarray:
    """Per-bar log returns whose endpoints both lie in (t_from, t_to].

    The half-open convention keeps a return straddling the window opening
    from leaking outside variance into the window.
    """
    if t_from >= t_to:
        raise ConfigError(f"volatility window is empty or reversed: {t_from} .. {t_to}")
    ts = series.timestamps()
    lo = bisect_right(ts, t_from)
    hi = bisect_right(ts, t_to)
    prices = np.array([b.price for b in series.bars[lo:hi]])
    if prices.size < 2:
        raise CoverageError(
            f"window ({t_from.isoformat()}, {t_to.isoformat()}] contains "
            f"{prices.size} bar(s); need at least 2 for one return"
        )
    return np.diff(np.log(prices))


def realized_vol(series: PriceSeries, t_from: datetime, t_to: datetime) -> float:
    """Root mean square of the window's 1-minute log returns."""
    returns = window_returns(series, t_from, t_to)
    return float(np.sqrt(np.mean(returns**2)))


def event_window_stats(
    series: PriceSeries, timeline: ConferenceTimeline, conference_id: str
) -> EventWindowStats:
    """Assemble during/after returns and before/after volatilities."""
    try:
        returns_before = window_returns(series, timeline.window_open, timeline.qa_start)
        returns_after = window_returns(series, timeline.conference_end, timeline.trading_close)
        return_during = window_log_return(series, timeline.qa_start, timeline.conference_end)
        return_after = window_log_return(series, timeline.conference_end, timeline.trading_close)
    except CoverageError as exc:
        raise CoverageError(f"conference {conference_id!r}: {exc}") from exc
    vol_before = float(np.sqrt(np.mean(returns_before**2)))
    vol_after = float(np.sqrt(np.mean(returns_after**2)))
    return EventWindowStats(
        conference_id=conference_id,
        return_during=return_during,
        return_after=return_after,
        vol_before=vol_before,
        vol_after=vol_after,
        vol_change=vol_after - vol_before,
        n_returns_before=len(returns_before),
        n_returns_after=len(returns_after),
    )


# ---------------------------------------------------------------------------
# Price CSV: header "timestamp,price", ISO-8601 timestamps with an explicit
# offset, one row per minute bar.
# ---------------------------------------------------------------------------


def parse_instant(text: str) -> datetime:
    """ISO-8601 instant with a required timezone designator."""
    cleaned = text.strip().replace("Z", "+00:00")
    try:
        value = datetime.fromisoformat(cleaned)
    except ValueError as exc:
        raise MalformedRecordError(f"invalid timestamp {text!r}") from exc
    if value.tzinfo is None:
        raise MalformedRecordError(f"timestamp {text!r} lacks a timezone designator")
    return value


def read_price_csv(path: str | Path) -> PriceSeries:
    bars: list[PriceBar] = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["timestamp", "price"]:
            raise MalformedRecordError(f"{path}: expected 'timestamp,price' header")
        for row in reader:
            if not row:
                continue
            try:
                bars.append(PriceBar(parse_instant(row[0]), float(row[1])))
            except (IndexError, ValueError) as exc:
                raise MalformedRecordError(f"{path}: bad price row {row!r}") from exc
    return PriceSeries(tuple(bars))


def write_price_csv(bars: Iterable[PriceBar], fh, meta_line: str | None = None) -> int:
    if meta_line is not None:
        fh.write(f"# {meta_line}\n")
    fh.write("timestamp,price\n")
    count = 0
    for bar in bars:
        fh.write(f"{bar.timestamp.isoformat()},{float(bar.price)!r}\n")
        count += 1
    return count
