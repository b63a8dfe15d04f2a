"""Loading minute klines and tweet dumps, and the tweet filtering rules."""

from __future__ import annotations

import csv
import json
import logging
import string
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import DataError, DomainError, ParseError
from .timeseries import MinuteSeries, RelativeWindow, as_window

log = logging.getLogger(__name__)

KLINE_HEADER = ["open_time", "open", "high", "low", "close", "volume"]
MS_PER_MINUTE = 60_000
TWEET_WINDOW = RelativeWindow(-2880, 720)
MAX_TAGS = 5

_SIGILS = "#$"
_LEADING_PUNCT = "".join(c for c in string.punctuation if c not in _SIGILS)


def parse_utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_utc(epoch_seconds: int) -> str:
    return datetime.fromtimestamp(epoch_seconds, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class KlineRow:
    open_time: int  # epoch minute
    open: float
    high: float
    low: float
    close: float
    volume: float

    def __post_init__(self):
        if not self.close > 0:
            raise DomainError(f"close must be positive, got {self.close!r}")
        if not self.volume >= 0:
            raise DomainError(f"volume must be non-negative, got {self.volume!r}")


@dataclass(frozen=True)
class TweetRecord:
    created_at: int  # epoch second
    text: str
    lang: str
    is_retweet: bool = False

    def __post_init__(self):
        if not self.text:
            raise DomainError("tweet text must be non-empty")

    @property
    def minute(self) -> int:
        return self.created_at // 60


@dataclass
class LoadReport:
    path: str = ""
    rows: int = 0
    duplicates: int = 0
    warnings: list[str] = field(default_factory=list)


def read_kline_rows(path, report: Optional[LoadReport] = None) -> list[KlineRow]:
    """Parse a klines CSV into rows sorted by minute, last duplicate winning."""
    path = Path(path)
    if report is None:
        report = LoadReport()
    report.path = str(path)
    by_minute: dict[int, KlineRow] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != KLINE_HEADER:
            raise ParseError(path, 1, f"expected header {','.join(KLINE_HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(KLINE_HEADER):
                raise ParseError(path, line, f"expected {len(KLINE_HEADER)} fields, got {len(row)}")
            try:
                open_ms = int(row[0])
                o, h, lo, c, v = (float(x) for x in row[1:])
                kline = KlineRow(open_ms // MS_PER_MINUTE, o, h, lo, c, v)
            except ValueError as exc:
                raise ParseError(path, line, str(exc)) from None
            report.rows += 1
            prev = by_minute.get(kline.open_time)
            if prev is not None:
                report.duplicates += 1
                if prev != kline:
                    msg = f"line {line}: conflicting duplicate for minute {kline.open_time}; keeping last"
                    report.warnings.append(msg)
                    log.warning("%s: %s", path, msg)
            by_minute[kline.open_time] = kline
    return [by_minute[m] for m in sorted(by_minute)]


def write_klines(path, rows: Iterable[KlineRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(KLINE_HEADER)
        for r in rows:
            w.writerow([r.open_time * MS_PER_MINUTE, repr(r.open), repr(r.high), repr(r.low), repr(r.close), repr(r.volume)])


def klines_to_series(rows: list[KlineRow]) -> tuple[MinuteSeries, MinuteSeries]:
    if not rows:
        raise DataError("no kline rows")
    start = rows[0].open_time
    n = rows[-1].open_time - start + 1
    close = np.zeros(n)
    volume = np.zeros(n)
    present = np.zeros(n, dtype=bool)
    for r in rows:
        k = r.open_time - start
        close[k] = r.close
        volume[k] = r.volume
        present[k] = True
    return (
        MinuteSeries(start, close, present, "price-in-BTC"),
        MinuteSeries(start, volume, present.copy(), "base-asset volume"),
    )


def load_klines(path, pair: str = "", report: Optional[LoadReport] = None) -> tuple[MinuteSeries, MinuteSeries]:
    """Load a klines file into ``(close, volume)`` series on one contiguous grid.

    Minutes absent from the file become gaps.  Pass a :class:`LoadReport` to
    collect duplicate-row warnings.
    """
    rows = read_kline_rows(path, report)
    if not rows:
        raise DataError(f"{path}: no kline rows for {pair or 'pair'}")
    return klines_to_series(rows)


def _tokens(text: str) -> list[str]:
    out = []
    for tok in text.split():
        tok = tok.lstrip(_LEADING_PUNCT).rstrip(string.punctuation)
        if tok:
            out.append(tok)
    return out


def _is_tag(tok: str) -> bool:
    return len(tok) >= 2 and tok[0] in _SIGILS and tok[1].isalpha()


def tag_count(text: str) -> int:
    """Number of hashtags plus cashtags; a tag needs a letter right after the sigil."""
    return sum(1 for tok in _tokens(text) if _is_tag(tok))


def passes_filter(t: TweetRecord) -> bool:
    # retweets are kept on purpose
    return t.lang == "en" and tag_count(t.text) <= MAX_TAGS


def matches_symbol(text: str, symbol: str) -> bool:
    if not symbol or not symbol.isalnum():
        raise DomainError(f"symbol must be non-empty alphanumeric, got {symbol!r}")
    wanted = {"#" + symbol.lower(), "$" + symbol.lower()}
    return any(tok.lower() in wanted for tok in _tokens(text))


def tweet_minute_counts(
    records: Iterable[TweetRecord], symbol: str, anchor: int, window=TWEET_WINDOW
) -> MinuteSeries:
    """Per-minute counts of tweets that pass the filter and mention the symbol."""
    w = as_window(window)
    first = anchor + w.tau1
    counts = np.zeros(len(w))
    for t in records:
        k = t.minute - first
        if 0 <= k < len(counts) and passes_filter(t) and matches_symbol(t.text, symbol):
            counts[k] += 1
    return MinuteSeries.full(first, counts, "tweet count")


def tweet_from_json(obj: dict) -> TweetRecord:
    created = parse_utc(str(obj["created_at"]))
    return TweetRecord(
        created_at=int(created.timestamp()),
        text=str(obj["text"]),
        lang=str(obj.get("lang", "")),
        is_retweet=bool(obj.get("retweet", False)),
    )


def tweet_to_json(t: TweetRecord) -> str:
    return json.dumps(
        {"created_at": format_utc(t.created_at), "text": t.text, "lang": t.lang, "retweet": t.is_retweet},
        ensure_ascii=False,
    )


def load_tweets(*paths) -> list[TweetRecord]:
    """Read one or more tweet JSONL dumps, dropping (created_at, text) duplicates."""
    seen = set()
    out = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    t = tweet_from_json(json.loads(line))
                except (ValueError, KeyError, TypeError) as exc:
                    raise ParseError(path, line_no, f"bad tweet record: {exc}") from None
                key = (t.created_at, t.text)
                if key in seen:
                    continue
                seen.add(key)
                out.append(t)
    return out


def write_tweets(path, records: Iterable[TweetRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in records:
            fh.write(tweet_to_json(t))
            fh.write("\n")
