"""Event database (CSV) and the dataset-description tables."""

from __future__ import annotations

import csv
import statistics
from collections import Counter
from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Optional

from .errors import DomainError, IntegrityError, ParseError
from .ingestion import parse_utc

EVENT_HEADER = ["event_id", "symbol", "pair", "exchange", "announce_time_utc", "source_channel", "success"]


@dataclass(frozen=True)
class EventRecord:
    event_id: str
    symbol: str
    pair: str
    exchange: str
    announce_minute: int
    source_channel: str = ""
    success: Optional[bool] = None

    def __post_init__(self):
        if not self.event_id:
            raise DomainError("event_id must be non-empty")
        if not self.pair.endswith("BTC"):
            raise DomainError(f"{self.event_id}: pair {self.pair!r} is not a BTC pair")
        if self.announce_minute <= 0:
            raise DomainError(f"{self.event_id}: announce minute must be positive")

    @property
    def announce_time(self) -> datetime:
        return datetime.fromtimestamp(self.announce_minute * 60, tz=timezone.utc)

    def with_success(self, success: Optional[bool]) -> "EventRecord":
        return replace(self, success=success)


def _parse_success(text: str) -> Optional[bool]:
    text = text.strip().lower()
    if text == "":
        return None
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"success must be true, false or empty, got {text!r}")


def _format_success(value: Optional[bool]) -> str:
    return "" if value is None else ("true" if value else "false")


def load_events(path) -> list[EventRecord]:
    path = Path(path)
    events = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != EVENT_HEADER:
            raise ParseError(path, 1, f"expected header {','.join(EVENT_HEADER)}")
        for row in reader:
            line = reader.line_num
            try:
                minute = int(parse_utc(row["announce_time_utc"]).timestamp()) // 60
                ev = EventRecord(
                    event_id=row["event_id"].strip(),
                    symbol=row["symbol"].strip(),
                    pair=row["pair"].strip(),
                    exchange=row["exchange"].strip(),
                    announce_minute=minute,
                    source_channel=row["source_channel"].strip(),
                    success=_parse_success(row["success"] or ""),
                )
            except (ValueError, TypeError, AttributeError) as exc:
                raise ParseError(path, line, str(exc)) from None
            if ev.event_id in seen:
                raise IntegrityError(f"{path}:{line}: duplicate event_id {ev.event_id!r}")
            seen.add(ev.event_id)
            events.append(ev)
    return events


def save_events(events: Iterable[EventRecord], path) -> None:
    events = list(events)
    ids = Counter(e.event_id for e in events)
    dupes = sorted(k for k, n in ids.items() if n > 1)
    if dupes:
        raise IntegrityError(f"duplicate event_id(s): {', '.join(dupes)}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER)
        for e in events:
            stamp = e.announce_time.strftime("%Y-%m-%dT%H:%M:%SZ")
            w.writerow([e.event_id, e.symbol, e.pair, e.exchange, stamp, e.source_channel, _format_success(e.success)])


def percent_half_up(count: int, total: int, places: int = 2) -> float:
    q = Decimal(1).scaleb(-places)
    return float((Decimal(100 * count) / Decimal(total)).quantize(q, rounding=ROUND_HALF_UP))


def per_crypto_counts(events: Iterable[EventRecord], top_n: Optional[int] = 20) -> list[tuple[str, int, float]]:
    """``(symbol, count, percent)`` sorted by count desc, then symbol."""
    counts = Counter(e.symbol for e in events)
    total = sum(counts.values())
    if total == 0:
        raise DomainError("per_crypto_counts needs at least one event")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if top_n is not None:
        ranked = ranked[:top_n]
    return [(sym, n, percent_half_up(n, total)) for sym, n in ranked]


def week_start(d: date) -> date:
    return d - timedelta(days=d.weekday())


def weekly_counts(events: Iterable[EventRecord]) -> list[tuple[date, int]]:
    """Events per ISO (Monday-start, UTC) week, zero-filled between the first and last week."""
    weeks = Counter(week_start(e.announce_time.date()) for e in events)
    if not weeks:
        return []
    out = []
    wk, last = min(weeks), max(weeks)
    while wk <= last:
        out.append((wk, weeks.get(wk, 0)))
        wk += timedelta(days=7)
    return out


def events_per_crypto_histogram(events: Iterable[EventRecord]) -> tuple[dict[int, int], float, float]:
    """Histogram of events-per-symbol, with mean and median events per symbol."""
    per_symbol = Counter(e.symbol for e in events)
    if not per_symbol:
        return {}, float("nan"), float("nan")
    hist = Counter(per_symbol.values())
    mean = sum(per_symbol.values()) / len(per_symbol)
    median = float(statistics.median(per_symbol.values()))
    return dict(sorted(hist.items())), mean, median
